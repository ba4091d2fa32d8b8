use std::sync::Arc;

use num_traits::{One, Zero};

use crate::bits::Bits;
use crate::ctmc::{CtmcModel, TrajectorySpec};
use crate::error::{Error, Result};
use crate::rational::{int, pow2, render, Rational};

use super::{BitMartingale, DurationMartingale, StateMartingale, TrajectoryMartingale};

/// Pointwise weighted sum of strategies.
pub struct SumMartingale {
    parts: Vec<(Arc<dyn TrajectoryMartingale>, Rational)>,
    /// Index of the first omitted term when this truncates a countable sum.
    pub truncated_at: Option<usize>,
}

impl TrajectoryMartingale for SumMartingale {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        let mut total = Rational::zero();
        for (d, weight) in &self.parts {
            total += d.capital(w)? * weight;
        }
        Ok(total)
    }

    fn capital_at_stage(&self, w: &TrajectorySpec, stage: usize) -> Result<Rational> {
        let mut total = Rational::zero();
        for (d, weight) in &self.parts {
            total += d.capital_at_stage(w, stage)? * weight;
        }
        Ok(total)
    }

    fn describe(&self) -> String {
        let mut s = format!("sum[{} terms", self.parts.len());
        if let Some(k) = self.truncated_at {
            s.push_str(&format!(", truncated at {k}"));
        }
        s.push(']');
        s
    }
}

/// Weights must be nonnegative so that capital stays nonnegative.
pub fn sum_martingales(
    parts: Vec<(Arc<dyn TrajectoryMartingale>, Rational)>,
    truncated_at: Option<usize>,
) -> Result<SumMartingale> {
    if parts.iter().any(|(_, w)| w < &Rational::zero()) {
        return Err(Error::InvalidInput("sum weights must be nonnegative".into()));
    }
    Ok(SumMartingale { parts, truncated_at })
}

/// Bets on states exactly as a state strategy does; never bets on times.
pub struct LiftMartingale {
    state: Arc<dyn StateMartingale>,
}

impl TrajectoryMartingale for LiftMartingale {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        self.state.capital(&w.states())
    }

    fn describe(&self) -> String {
        format!("lift[{}]", self.state.describe())
    }
}

pub fn lift_state_martingale(state: Arc<dyn StateMartingale>) -> LiftMartingale {
    LiftMartingale { state }
}

/// Doubles on a leading 0 bit, loses everything on a leading 1, and ignores
/// later bits.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleOnZero;

impl BitMartingale for DoubleOnZero {
    fn capital(&self, u: &Bits) -> Rational {
        match u.first() {
            None => int(1),
            Some(false) => int(2),
            Some(true) => int(0),
        }
    }

    fn describe(&self) -> String {
        "double-on-zero".into()
    }
}

/// Bets with a single-time strategy on the bits of sojourn `n` only, starting
/// from capital `2^-n`.
pub struct SojournIndexMartingale {
    bits: Arc<dyn BitMartingale>,
    base: Rational,
    n: usize,
    model: CtmcModel,
}

impl TrajectoryMartingale for SojournIndexMartingale {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        let start = pow2(-(self.n as i64));
        match w.pairs().get(self.n) {
            Some((q, u)) if !self.model.is_terminal(q)? => Ok(start * self.bits.capital(u) / &self.base),
            _ => Ok(start),
        }
    }

    fn describe(&self) -> String {
        format!("sojourn:n={}[{}]", self.n, self.bits.describe())
    }
}

pub fn sojourn_index_martingale(
    bits: Arc<dyn BitMartingale>,
    n: usize,
    model: CtmcModel,
) -> Result<SojournIndexMartingale> {
    let base = bits.capital(&Bits::empty());
    if base.is_zero() {
        return Err(Error::InvalidInput("bit strategy starts with zero capital".into()));
    }
    Ok(SojournIndexMartingale { bits, base, n, model })
}

/// Doubles on first bit 0 of each of the first `m` components.
#[derive(Clone, Copy, Debug)]
pub struct FirstBitMartingale {
    pub m: usize,
}

impl DurationMartingale for FirstBitMartingale {
    fn capital(&self, w: &[Bits]) -> Result<Rational> {
        let mut c = Rational::one();
        for u in w.iter().take(self.m) {
            match u.first() {
                Some(false) => c *= int(2),
                Some(true) => return Ok(Rational::zero()),
                None => {}
            }
        }
        Ok(c)
    }

    fn describe(&self) -> String {
        format!("firstbit:m={}", self.m)
    }
}

pub fn duration_first_bit_martingale(m: usize) -> Result<FirstBitMartingale> {
    if m == 0 {
        return Err(Error::InvalidInput("first-bit strategy needs m >= 1".into()));
    }
    Ok(FirstBitMartingale { m })
}

/// From sojourn index `start` on, bets double-or-nothing that each sojourn
/// falls in the lower half cell. Terminal positions are not bet on.
pub struct ZenoDetector {
    model: CtmcModel,
    start: usize,
}

impl TrajectoryMartingale for ZenoDetector {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        let mut c = Rational::one();
        for (q, u) in w.pairs().iter().skip(self.start) {
            let Some(b) = u.first() else { continue };
            if self.model.is_terminal(q)? {
                continue;
            }
            if b {
                return Ok(Rational::zero());
            }
            c *= int(2);
        }
        Ok(c)
    }

    fn describe(&self) -> String {
        format!("zeno:i={}", self.start)
    }
}

pub fn zeno_detector(model: CtmcModel, start: usize) -> ZenoDetector {
    ZenoDetector { model, start }
}

impl std::fmt::Debug for SojournIndexMartingale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SojournIndexMartingale(n={}, base={})", self.n, render(&self.base))
    }
}
