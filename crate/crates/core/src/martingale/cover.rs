use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::ctmc::{mu_traj, spec_compare, spec_join, CtmcModel, NullCoverPrefix, SpecRelation, TrajectorySpec};
use crate::error::{Error, Result};
use crate::rational::{pow2, render, Rational};

use super::constructions::{sum_martingales, SumMartingale};
use super::TrajectoryMartingale;

/// The spec naming `Omega_w ∩ Omega_v`; `None` stands for the empty set.
///
/// For comparable specs this is the deeper one.
pub fn meet(w: &TrajectorySpec, v: &TrajectorySpec) -> Option<TrajectorySpec> {
    spec_join(w, v)
}

/// `d(w) = sum_g mu(g ∧ w) / mu(w)` over a finite list of specs.
pub struct CoverMartingale {
    model: CtmcModel,
    specs: Vec<TrajectorySpec>,
    label: String,
}

impl CoverMartingale {
    pub fn new(model: CtmcModel, specs: Vec<TrajectorySpec>, label: impl Into<String>) -> Self {
        CoverMartingale {
            model,
            specs,
            label: label.into(),
        }
    }

    pub fn specs(&self) -> &[TrajectorySpec] {
        &self.specs
    }

    fn partial(&self, w: &TrajectorySpec, count: usize) -> Result<Rational> {
        let mu = mu_traj(&self.model, w)?;
        if mu.is_zero() {
            return Err(Error::ZeroMeasure(w.to_string()));
        }
        let mut total = Rational::zero();
        for g in self.specs.iter().take(count) {
            if let Some(m) = meet(g, w) {
                total += mu_traj(&self.model, &m)?;
            }
        }
        Ok(total / mu)
    }
}

impl TrajectoryMartingale for CoverMartingale {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        self.partial(w, self.specs.len())
    }

    /// Sums over the first `stage` specs of the row.
    fn capital_at_stage(&self, w: &TrajectorySpec, stage: usize) -> Result<Rational> {
        self.partial(w, stage)
    }

    fn describe(&self) -> String {
        format!("cover[{}, {} specs]", self.label, self.specs.len())
    }
}

/// The martingale of row `k` of a cover.
pub fn cover_to_martingale(c: &CtmcModel, cover: &NullCoverPrefix, k: u32) -> Result<CoverMartingale> {
    let row = cover
        .rows
        .get(&k)
        .ok_or_else(|| Error::InvalidInput(format!("cover has no row k={k}")))?;
    Ok(CoverMartingale::new(c.clone(), row.clone(), format!("k={k}")))
}

type SavingsMemo = HashMap<(TrajectorySpec, Option<usize>), (Rational, bool)>;

/// Follows `inner` until capital first reaches `threshold`, then keeps that
/// value on every extension.
pub struct SavingsMartingale {
    inner: Arc<dyn TrajectoryMartingale>,
    threshold: Rational,
    /// `(value, frozen)` per visited spec and stage.
    memo: Mutex<SavingsMemo>,
}

const MEMO_LIMIT: usize = 1 << 16;

impl SavingsMartingale {
    fn eval(&self, w: &TrajectorySpec, stage: Option<usize>) -> Result<(Rational, bool)> {
        let key = (w.clone(), stage);
        if let Some(hit) = self.memo.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        let frozen = match w.parent() {
            Some(p) => Some(self.eval(&p, stage)?).filter(|(_, f)| *f),
            None => None,
        };
        let out = match frozen {
            Some(hit) => hit,
            None => {
                let v = match stage {
                    Some(s) => self.inner.capital_at_stage(w, s)?,
                    None => self.inner.capital(w)?,
                };
                let f = v >= self.threshold;
                (v, f)
            }
        };
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        if memo.len() >= MEMO_LIMIT {
            memo.clear();
        }
        memo.insert(key, out.clone());
        Ok(out)
    }
}

impl TrajectoryMartingale for SavingsMartingale {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational> {
        Ok(self.eval(w, None)?.0)
    }

    fn capital_at_stage(&self, w: &TrajectorySpec, stage: usize) -> Result<Rational> {
        Ok(self.eval(w, Some(stage))?.0)
    }

    fn describe(&self) -> String {
        format!("savings[{}]", self.inner.describe())
    }
}

pub fn savings_martingale(inner: Arc<dyn TrajectoryMartingale>) -> SavingsMartingale {
    SavingsMartingale {
        inner,
        threshold: Rational::one(),
        memo: Mutex::default(),
    }
}

/// `sum_k savings(d_k)` over the stored rows `k <= max_k`, with unit weights.
pub fn cover_savings_sum(c: &CtmcModel, cover: &NullCoverPrefix, max_k: u32) -> Result<SumMartingale> {
    let mut parts: Vec<(Arc<dyn TrajectoryMartingale>, Rational)> = Vec::new();
    for &k in cover.rows.keys().filter(|&&k| k <= max_k) {
        let d: Arc<dyn TrajectoryMartingale> = Arc::new(cover_to_martingale(c, cover, k)?);
        parts.push((Arc::new(savings_martingale(d)), Rational::one()));
    }
    sum_martingales(parts, Some(max_k as usize + 1))
}

/// Bounds for the prefix-set search: at most `bits_per_position` bits are
/// read at each position before moving on, and at most `depth` positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub bits_per_position: usize,
    pub depth: usize,
}

impl Schedule {
    /// Children of `w` in the search tree.
    pub fn children(&self, c: &CtmcModel, w: &TrajectorySpec) -> Result<Vec<TrajectorySpec>> {
        let Some((q, u)) = w.last() else {
            return Ok(c
                .init()
                .support()
                .iter()
                .map(|(q, _)| TrajectorySpec::empty().with_state(q.clone()))
                .collect());
        };
        if c.is_terminal(q)? {
            return Ok(Vec::new());
        }
        if u.len() < self.bits_per_position {
            return Ok(vec![w.with_bit(false), w.with_bit(true)]);
        }
        if w.len() < self.depth {
            return Ok(c.jump_row(q)?.into_iter().map(|(r, _)| w.with_state(r)).collect());
        }
        Ok(Vec::new())
    }
}

/// The minimal specs of the search tree with `d(w) >= 2^k d(empty)`.
pub fn martingale_to_prefix_set(
    c: &CtmcModel,
    d: &dyn TrajectoryMartingale,
    k: u32,
    schedule: Schedule,
) -> Result<Vec<TrajectorySpec>> {
    let d0 = d.initial_capital()?;
    if d0.is_zero() {
        return Ok(Vec::new());
    }
    let target = d0 * pow2(k as i64);
    let mut found = Vec::new();
    let mut stack = vec![TrajectorySpec::empty()];
    while let Some(w) = stack.pop() {
        if !w.is_empty() {
            if mu_traj(c, &w)?.is_zero() {
                continue;
            }
            if d.capital(&w)? >= target {
                found.push(w);
                continue;
            }
        }
        let mut next = schedule.children(c, &w)?;
        next.reverse();
        stack.extend(next);
    }
    Ok(found)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KraftReport {
    /// `d(empty)`.
    pub lhs: Rational,
    /// `sum_B d(w) mu(w)`.
    pub rhs: Rational,
    pub holds: bool,
}

impl KraftReport {
    pub fn margin(&self) -> Rational {
        &self.lhs - &self.rhs
    }
}

impl fmt::Display for KraftReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kraft lhs={} rhs={} margin={} {}",
            render(&self.lhs),
            render(&self.rhs),
            render(&self.margin()),
            if self.holds { "pass" } else { "FAIL" }
        )
    }
}

/// Checks `d(empty) >= sum_B d(w) mu(w)` for a set of pairwise disjoint specs.
pub fn kraft_check(c: &CtmcModel, d: &dyn TrajectoryMartingale, b: &[TrajectorySpec]) -> Result<KraftReport> {
    for (i, w) in b.iter().enumerate() {
        for v in &b[i + 1..] {
            if spec_compare(w, v) != SpecRelation::Disjoint {
                return Err(Error::NotAntichain(w.to_string(), v.to_string()));
            }
        }
    }
    let lhs = d.initial_capital()?;
    let mut rhs = Rational::zero();
    for w in b {
        let mu = mu_traj(c, w)?;
        if !mu.is_zero() {
            rhs += d.capital(w)? * mu;
        }
    }
    Ok(KraftReport {
        holds: lhs >= rhs,
        lhs,
        rhs,
    })
}
