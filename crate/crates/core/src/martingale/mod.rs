//! Betting strategies on state sequences, duration tuples and trajectory
//! specifications, with exact fairness verification.
//!
//! Strategies are evaluated on demand from their defining formulas. Capital
//! values are exact rationals.

mod constructions;
mod cover;
mod random;
mod run;
mod verify;

#[cfg(test)]
mod tests;

use std::fmt;
use std::sync::Arc;

use crate::bits::Bits;
use crate::ctmc::TrajectorySpec;
use crate::error::Result;
use crate::rational::{render, Rational};
use crate::transition::StateId;

pub use constructions::{
    duration_first_bit_martingale, lift_state_martingale, sojourn_index_martingale, sum_martingales, zeno_detector,
    DoubleOnZero, FirstBitMartingale, LiftMartingale, SojournIndexMartingale, SumMartingale, ZenoDetector,
};
pub use cover::{
    cover_savings_sum, cover_to_martingale, kraft_check, martingale_to_prefix_set, meet, savings_martingale,
    CoverMartingale, KraftReport, SavingsMartingale, Schedule,
};
pub use random::{RandomBetTree, RandomBitTree, RandomStateBetTree};
pub use run::{run_martingale, CapitalTrace};
pub use verify::{
    verify_duration_fairness, verify_state_fairness, verify_trajectory_fairness, Condition, FairnessReport, Residual,
    VerifyOptions,
};

/// A strategy on trajectory specifications.
pub trait TrajectoryMartingale: Send + Sync {
    fn capital(&self, w: &TrajectorySpec) -> Result<Rational>;

    /// Lower approximation at stage `s`, nondecreasing in `s` and equal to
    /// `capital` in the limit. Exact constructions return `capital`.
    fn capital_at_stage(&self, w: &TrajectorySpec, _stage: usize) -> Result<Rational> {
        self.capital(w)
    }

    fn initial_capital(&self) -> Result<Rational> {
        self.capital(&TrajectorySpec::empty())
    }

    fn describe(&self) -> String;
}

/// A strategy on finite state sequences.
pub trait StateMartingale: Send + Sync {
    fn capital(&self, x: &[StateId]) -> Result<Rational>;

    fn describe(&self) -> String;
}

/// A strategy on tuples of sojourn approximations.
pub trait DurationMartingale: Send + Sync {
    fn capital(&self, w: &[Bits]) -> Result<Rational>;

    fn describe(&self) -> String;
}

/// A strategy on the bits of a single sojourn time.
pub trait BitMartingale: Send + Sync {
    fn capital(&self, u: &Bits) -> Rational;

    fn describe(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    State,
    Duration,
    Trajectory,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::State => "state",
            Kind::Duration => "duration",
            Kind::Trajectory => "trajectory",
        })
    }
}

/// A strategy of any of the three kinds.
#[derive(Clone)]
pub enum Strategy {
    State(Arc<dyn StateMartingale>),
    Duration(Arc<dyn DurationMartingale>),
    Trajectory(Arc<dyn TrajectoryMartingale>),
}

impl Strategy {
    pub fn kind(&self) -> Kind {
        match self {
            Strategy::State(_) => Kind::State,
            Strategy::Duration(_) => Kind::Duration,
            Strategy::Trajectory(_) => Kind::Trajectory,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Strategy::State(d) => d.describe(),
            Strategy::Duration(d) => d.describe(),
            Strategy::Trajectory(d) => d.describe(),
        }
    }
}

/// `d ≡ c`, usable as any kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constant(pub Rational);

impl Constant {
    fn name(&self) -> String {
        format!("constant:c={}", render(&self.0))
    }
}

impl TrajectoryMartingale for Constant {
    fn capital(&self, _w: &TrajectorySpec) -> Result<Rational> {
        Ok(self.0.clone())
    }

    fn describe(&self) -> String {
        self.name()
    }
}

impl StateMartingale for Constant {
    fn capital(&self, _x: &[StateId]) -> Result<Rational> {
        Ok(self.0.clone())
    }

    fn describe(&self) -> String {
        self.name()
    }
}

impl DurationMartingale for Constant {
    fn capital(&self, _w: &[Bits]) -> Result<Rational> {
        Ok(self.0.clone())
    }

    fn describe(&self) -> String {
        self.name()
    }
}

impl BitMartingale for Constant {
    fn capital(&self, _u: &Bits) -> Rational {
        self.0.clone()
    }

    fn describe(&self) -> String {
        self.name()
    }
}
