//! Profiles, the profile-sum identity, and a compression-based upper bound
//! on the complexity of a specification.
//!
//! A compressed length is a genuine upper bound on description length (up
//! to the fixed cost of the decompressor), so only a small value supports a
//! conclusion: `K̂(w) < l(w) - k` certifies deficiency at least `k`. A large
//! value says nothing.

use std::fmt;
use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::bits::Bits;
use crate::ctmc::{mu_traj, profile, self_information_of, CtmcModel, TrajectorySpec};
use crate::enclosure::Enclosure;
use crate::error::{Error, Result};
use crate::rational::{int, render_factored, to_f64, Rational};
use crate::sojourn::PrecisionConfig;
use crate::transition::StateId;

/// Exact `sum of mu_C(w)` over every spec with profile `p`, enumerating all
/// state words over the model's states and all bit strings.
pub fn profile_measure_sum(c: &CtmcModel, p: &[usize], budget: usize) -> Result<Rational> {
    let states = c
        .states()
        .ok_or_else(|| Error::NotEnumerable("model state space".into()))?;
    let mut count: usize = 1;
    for &len in p {
        count = count
            .checked_mul(states.len())
            .and_then(|x| x.checked_mul(1usize.checked_shl(len as u32)?))
            .filter(|&x| x <= budget)
            .ok_or(Error::BudgetExceeded(budget))?;
    }
    let mut total = Rational::zero();
    let mut word = vec![0usize; p.len()];
    let bit_total: usize = p.iter().sum();
    loop {
        for r in 0..(1u64 << bit_total) {
            let mut pairs = Vec::with_capacity(p.len());
            let mut shift = 0;
            for (i, &len) in p.iter().enumerate() {
                let bits: Vec<bool> = (0..len).map(|j| (r >> (shift + j)) & 1 == 1).collect();
                shift += len;
                pairs.push((states[word[i]].clone(), Bits::from_bools(bits)));
            }
            total += mu_traj(c, &TrajectorySpec::new(pairs))?;
        }
        // next state word, odometer style
        let mut i = 0;
        loop {
            if i == word.len() {
                return Ok(total);
            }
            word[i] += 1;
            if word[i] < states.len() {
                break;
            }
            word[i] = 0;
            i += 1;
        }
    }
}

/// Raw deflate at level 9 over the spec text, plus a fixed length field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompressorProxy;

impl CompressorProxy {
    pub const ID: &'static str = "deflate9-raw-v1";
    /// A 32-bit length field makes the encoding self-delimiting.
    pub const HEADER_BITS: u64 = 32;

    pub fn compress(&self, data: &[u8]) -> Result<Vec<u8>> {
        let mut enc = DeflateEncoder::new(Vec::new(), Compression::new(9));
        enc.write_all(data).map_err(|e| Error::Compression(e.to_string()))?;
        enc.finish().map_err(|e| Error::Compression(e.to_string()))
    }

    pub fn decompress(&self, data: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        DeflateDecoder::new(data)
            .read_to_end(&mut out)
            .map_err(|e| Error::Compression(e.to_string()))?;
        Ok(out)
    }

    /// Upper bound in bits for a byte string.
    pub fn bound(&self, data: &[u8]) -> Result<u64> {
        Ok(8 * self.compress(data)?.len() as u64 + Self::HEADER_BITS)
    }
}

/// `K̂(w)` in bits over the canonical text of `w`.
pub fn k_upper_bound(w: &TrajectorySpec, proxy: &CompressorProxy) -> Result<u64> {
    proxy.bound(w.to_string().as_bytes())
}

fn render_profile(p: &[usize]) -> String {
    p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeficiencyReport {
    pub spec: TrajectorySpec,
    pub proxy: &'static str,
    pub measure: Rational,
    /// `l(w) = -log2 mu_C(w)`.
    pub information: Enclosure,
    pub serialized_bits: u64,
    pub k_hat: u64,
    pub profile: Vec<usize>,
    pub k_hat_profile: u64,
    /// Decompressing the compressed text gave back the same bytes.
    pub round_trip: bool,
    /// Largest `k` with `K̂(w) < l(w) - k`, when that is at least 0.
    pub certified: Option<BigInt>,
}

impl DeficiencyReport {
    /// `l(w) - K̂(w)` as an enclosure.
    pub fn deficiency(&self) -> Enclosure {
        self.information.sub(&Enclosure::exact(int(self.k_hat as i64)))
    }
}

impl fmt::Display for DeficiencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "deficiency proxy={}", self.proxy)?;
        writeln!(
            f,
            "spec_positions={} spec_bits={}",
            self.spec.len(),
            self.spec.total_bits()
        )?;
        writeln!(f, "measure={}", render_factored(&self.measure))?;
        writeln!(f, "l={}", self.information)?;
        writeln!(f, "serialized_bits={} k_hat={}", self.serialized_bits, self.k_hat)?;
        writeln!(
            f,
            "profile={} k_hat_profile={}",
            render_profile(&self.profile),
            self.k_hat_profile
        )?;
        writeln!(f, "deficiency={}", self.deficiency())?;
        writeln!(f, "round_trip={}", if self.round_trip { "ok" } else { "FAIL" })?;
        match &self.certified {
            Some(k) => write!(f, "verdict certified-non-random k={k}"),
            None => write!(f, "verdict inconclusive"),
        }
    }
}

/// Largest integer `k >= 0` with `k < x`, if any.
fn largest_below(x: &Rational) -> Option<BigInt> {
    if !x.is_positive() {
        return None;
    }
    Some(x.ceil().to_integer() - BigInt::one())
}

pub fn deficiency_report(
    c: &CtmcModel,
    w: &TrajectorySpec,
    proxy: &CompressorProxy,
    prec: &PrecisionConfig,
) -> Result<DeficiencyReport> {
    let measure = mu_traj(c, w)?;
    let information = self_information_of(&measure, prec).ok_or_else(|| Error::ZeroMeasure(w.to_string()))?;
    let text = w.to_string();
    let packed = proxy.compress(text.as_bytes())?;
    let round_trip = proxy.decompress(&packed)? == text.as_bytes();
    let k_hat = 8 * packed.len() as u64 + CompressorProxy::HEADER_BITS;
    let prof = profile(w);
    let k_hat_profile = proxy.bound(render_profile(&prof).as_bytes())?;
    let margin = information.lo() - int(k_hat as i64);
    let certified = if round_trip { largest_below(&margin) } else { None };
    Ok(DeficiencyReport {
        spec: w.clone(),
        proxy: CompressorProxy::ID,
        measure,
        information,
        serialized_bits: 8 * text.len() as u64,
        k_hat,
        profile: prof,
        k_hat_profile,
        round_trip,
        certified,
    })
}

/// Mass of `{w : l(w) - K̂(w) > k}` over all specs with a fixed profile, and
/// the smallest `c` with `mass <= 2^(c - k)` at each `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub profile: Vec<usize>,
    pub specs: usize,
    pub rows: Vec<(i64, Rational)>,
    pub fitted_constant: f64,
}

impl fmt::Display for TailReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, m) in &self.rows {
            writeln!(f, "tail k={k} mass={}", render_factored(m))?;
        }
        write!(
            f,
            "tail profile={} specs={} fitted_constant={:.3}",
            render_profile(&self.profile),
            self.specs,
            self.fitted_constant
        )
    }
}

pub fn tail_report(
    c: &CtmcModel,
    p: &[usize],
    ks: &[i64],
    proxy: &CompressorProxy,
    prec: &PrecisionConfig,
    budget: usize,
) -> Result<TailReport> {
    let states = c
        .states()
        .ok_or_else(|| Error::NotEnumerable("model state space".into()))?;
    let mut found: Vec<(Rational, Enclosure)> = Vec::new();
    let mut stack: Vec<TrajectorySpec> = vec![TrajectorySpec::empty()];
    let mut visited = 0usize;
    while let Some(w) = stack.pop() {
        visited += 1;
        if visited > budget {
            return Err(Error::BudgetExceeded(budget));
        }
        let m = mu_traj(c, &w)?;
        if m.is_zero() {
            continue;
        }
        if w.len() == p.len() {
            let r = deficiency_report(c, &w, proxy, prec)?;
            found.push((m, r.deficiency()));
            continue;
        }
        let len = p[w.len()];
        for q in &states {
            for r in 0..(1u64 << len) {
                let bits = (0..len).map(|j| (r >> j) & 1 == 1).collect();
                let mut pairs = w.pairs().to_vec();
                pairs.push((StateId::clone(q), Bits::from_bools(bits)));
                stack.push(TrajectorySpec::new(pairs));
            }
        }
    }
    let mut rows = Vec::new();
    let mut fitted = f64::NEG_INFINITY;
    for &k in ks {
        let mass: Rational = found
            .iter()
            .filter(|(_, d)| d.hi() > &int(k))
            .map(|(m, _)| m.clone())
            .sum();
        if !mass.is_zero() {
            fitted = fitted.max(to_f64(&mass).log2() + k as f64);
        }
        rows.push((k, mass));
    }
    Ok(TailReport {
        profile: p.to_vec(),
        specs: found.len(),
        rows,
        fitted_constant: fitted,
    })
}
