//! Seeded random bet trees, used as generic fair strategies in tests.
//!
//! Every bet is a pure function of the seed and the node, so capital can be
//! recomputed anywhere without storing the tree.

use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use crate::bits::Bits;
use crate::ctmc::{CtmcModel, TrajectorySpec};
use crate::error::Result;
use crate::rational::{int, ratio, Rational};
use crate::transition::{Initialization, ProbabilisticTransitionSystem, StateId};

use super::{BitMartingale, StateMartingale, TrajectoryMartingale};

use std::sync::Arc;

fn hash(seed: u64, node: &str, choice: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(node.as_bytes());
    h.update([0]);
    h.update(choice.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

/// Multiplier `r_q / sum_j p_j r_j` with weights `r_j` in `0..=4`.
fn state_factor(seed: u64, node: &str, next: &[(StateId, Rational)], q: &StateId) -> Rational {
    let weight = |r: &StateId| int((hash(seed, node, r.as_str()) % 5) as i64);
    let total: Rational = next.iter().map(|(r, p)| weight(r) * p).sum();
    if total.is_zero() {
        return Rational::one();
    }
    weight(q) / total
}

/// Multiplier `1 + x` on bit 0 and `1 - x` on bit 1, with `x` in `{0, 1/8, ..., 7/8}`.
fn bit_factor(seed: u64, node: &str, b: bool) -> Rational {
    let x = ratio((hash(seed, node, "bit") % 8) as i64, 8);
    if b {
        Rational::one() - x
    } else {
        Rational::one() + x
    }
}

/// A fair trajectory strategy that bets at random on states and bits down
/// to `max_depth` levels of the canonical tree, then hedges.
pub struct RandomBetTree {
    pub model: CtmcModel,
    pub seed: u64,
    pub max_depth: usize,
}

impl TrajectoryMartingale for RandomBetTree {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        // walks the canonical chain, keeping the rendering of the current node
        let mut c = Rational::one();
        let mut node = String::from("()");
        let mut depth = 0;
        let mut prev: Option<&StateId> = None;
        for (i, (q, u)) in w.pairs().iter().enumerate() {
            if depth >= self.max_depth {
                break;
            }
            let next = match prev {
                None => Some(self.model.init().support().to_vec()),
                Some(p) if !self.model.is_terminal(p)? => Some(self.model.jump_row(p)?),
                Some(_) => None,
            };
            if let Some(next) = next {
                c *= state_factor(self.seed, &node, &next, q);
            }
            if i == 0 {
                node.clear();
            } else {
                node.push('/');
            }
            node.push_str(q.as_str());
            node.push(':');
            depth += 1;
            let terminal = self.model.is_terminal(q)?;
            for &b in u.as_slice() {
                if depth >= self.max_depth {
                    break;
                }
                if !terminal {
                    c *= bit_factor(self.seed, &node, b);
                }
                node.push(if b { '1' } else { '0' });
                depth += 1;
            }
            prev = Some(q);
        }
        Ok(c)
    }

    fn describe(&self) -> String {
        format!("bettree:seed={}:depth={}", self.seed, self.max_depth)
    }
}

/// The state-sequence analogue of [`RandomBetTree`].
pub struct RandomStateBetTree {
    pub sys: Arc<dyn ProbabilisticTransitionSystem>,
    pub init: Initialization,
    pub seed: u64,
    pub max_depth: usize,
}

impl StateMartingale for RandomStateBetTree {
    fn capital(&self, x: &[StateId]) -> Result<Rational> {
        let mut c = Rational::one();
        let mut node = String::new();
        for i in 0..x.len().min(self.max_depth) {
            let next = match i {
                0 => self.init.support().to_vec(),
                _ => self.sys.successors(&x[i - 1])?,
            };
            if next.is_empty() {
                break;
            }
            c *= state_factor(self.seed, &node, &next, &x[i]);
            if i > 0 {
                node.push(' ');
            }
            node.push_str(x[i].as_str());
        }
        Ok(c)
    }

    fn describe(&self) -> String {
        format!("lift:seed={}:depth={}", self.seed, self.max_depth)
    }
}

/// A fair single-time bit strategy betting at random on the first
/// `max_depth` bits.
pub struct RandomBitTree {
    pub seed: u64,
    pub max_depth: usize,
}

impl BitMartingale for RandomBitTree {
    fn capital(&self, u: &Bits) -> Rational {
        let mut c = Rational::one();
        for (i, &b) in u.as_slice().iter().enumerate().take(self.max_depth) {
            c *= bit_factor(self.seed, &u.truncated(i).to_string(), b);
        }
        c
    }

    fn describe(&self) -> String {
        format!("bittree:seed={}:depth={}", self.seed, self.max_depth)
    }
}
