use std::fmt;

use num_traits::{One, Zero};

use crate::ctmc::{refines, TrajectorySpec};
use crate::error::{Error, Result};
use crate::rational::{exact_log2, pow2, render_factored, Rational};

use super::TrajectoryMartingale;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CapitalTrace {
    pub entries: Vec<(TrajectorySpec, Rational)>,
    /// `(j, i)`: entry `i` is the first with capital `>= 2^j`, for `j >= 0`.
    pub crossings: Vec<(u32, usize)>,
    pub max_capital: Rational,
}

impl CapitalTrace {
    /// Index of the first entry with capital strictly above `alpha`.
    pub fn success_at(&self, alpha: &Rational) -> Option<usize> {
        self.entries.iter().position(|(_, c)| c > alpha)
    }

    /// Largest `j` with some capital `>= 2^j`.
    pub fn largest_crossing(&self) -> Option<u32> {
        self.crossings.last().map(|&(j, _)| j)
    }

    pub fn final_capital(&self) -> Option<&Rational> {
        self.entries.last().map(|(_, c)| c)
    }
}

impl fmt::Display for CapitalTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (w, c)) in self.entries.iter().enumerate() {
            writeln!(f, "step {i} capital={} spec={w}", render_factored(c))?;
        }
        for (j, i) in &self.crossings {
            writeln!(f, "crossing 2^{j} at step {i}")?;
        }
        let log = exact_log2(&self.max_capital).map_or(String::new(), |e| format!(" (2^{e})"));
        write!(
            f,
            "trace steps={} max_capital={}{}",
            self.entries.len(),
            render_factored(&self.max_capital),
            log
        )
    }
}

/// Evaluates `d` along `schedule`, a chain of specs each refining the
/// previous one and refined by `target`.
pub fn run_martingale(
    d: &dyn TrajectoryMartingale,
    target: &TrajectorySpec,
    schedule: &[TrajectorySpec],
) -> Result<CapitalTrace> {
    for (i, w) in schedule.iter().enumerate() {
        if !refines(w, target) || (i > 0 && !refines(&schedule[i - 1], w)) {
            return Err(Error::NotAChain(i));
        }
    }
    let mut entries = Vec::with_capacity(schedule.len());
    let mut crossings = Vec::new();
    let mut max_capital = Rational::zero();
    let mut next_j = 0u32;
    for (i, w) in schedule.iter().enumerate() {
        let c = d.capital(w)?;
        while c >= pow2(next_j as i64) {
            crossings.push((next_j, i));
            next_j += 1;
        }
        if c > max_capital {
            max_capital = c.clone();
        }
        entries.push((w.clone(), c));
    }
    debug_assert!(crossings.is_empty() || max_capital >= Rational::one());
    Ok(CapitalTrace {
        entries,
        crossings,
        max_capital,
    })
}
