use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};

/// A finite binary string over `{0,1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn empty() -> Self {
        Bits(Vec::new())
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Bits(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Bits(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Bits(vec![true; n])
    }

    /// The `n`-bit big-endian representation of `value`.
    pub fn from_rank(value: &BigUint, n: usize) -> Self {
        Bits((0..n).rev().map(|i| value.bit(i as u64)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn first(&self) -> Option<bool> {
        self.0.first().copied()
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn pop(&mut self) -> Option<bool> {
        self.0.pop()
    }

    pub fn with(&self, b: bool) -> Self {
        let mut v = self.clone();
        v.push(b);
        v
    }

    pub fn truncated(&self, n: usize) -> Self {
        Bits(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Bits) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &Bits) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn all_zeros(&self) -> bool {
        self.0.iter().all(|b| !b)
    }

    pub fn all_ones(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// Lexicographic rank among strings of the same length.
    pub fn rank(&self) -> BigUint {
        let mut r = BigUint::zero();
        for &b in &self.0 {
            r <<= 1usize;
            if b {
                r += 1u32;
            }
        }
        r
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidInput(format!("not a bit string: {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bits)
    }
}
