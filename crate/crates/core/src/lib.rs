//! Executable algorithmic randomness for continuous-time Markov chains.
//!
//! Exact cylinder measures, quantile encodings of sojourn times, martingale
//! constructions with fairness checks, and reaction-network simulation.

pub mod bits;
pub mod complexity;
pub mod crn;
pub mod ctmc;
pub mod enclosure;
pub mod error;
pub mod martingale;
pub mod rational;
pub mod rng;
pub mod sojourn;
pub mod trajfile;
pub mod transition;

pub use bits::Bits;
pub use error::{Error, Result};
pub use rational::Rational;
