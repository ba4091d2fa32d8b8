//! Dyadic intervals, exponential distribution functions and their quantile
//! cells, and the measure on tuples of sojourn-time approximations.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bits::Bits;
use crate::enclosure::{exp_neg, exp_neg_enclosure, ln, ln_enclosure, Enclosure};
use crate::error::{Error, Result};
use crate::rational::{parse_rational, pow2, render, Rational};

/// Rates are exact nonnegative rationals.
pub type Rate = Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionConfig {
    pub working: u32,
    pub max: u32,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            working: 128,
            max: 4096,
        }
    }
}

impl PrecisionConfig {
    pub fn new(working: u32, max: u32) -> Result<Self> {
        if working == 0 || working > max {
            return Err(Error::InvalidInput(format!(
                "precision {working} must be positive and at most {max}"
            )));
        }
        Ok(PrecisionConfig { working, max })
    }

    /// Working precision, doubled until the maximum is reached.
    pub fn levels(&self) -> Vec<u32> {
        let mut out = vec![self.working];
        let mut p = self.working;
        while p < self.max {
            p = (p * 2).min(self.max);
            out.push(p);
        }
        out
    }
}

/// `I_w = (i 2^-n, (i+1) 2^-n]` where `i` is the rank of `w` and `n = |w|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicInterval {
    pub bits: Bits,
    pub lo: Rational,
    pub hi: Rational,
}

impl DyadicInterval {
    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo < x && x <= &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

pub fn dyadic_interval(w: &Bits) -> DyadicInterval {
    let width = pow2(-(w.len() as i64));
    let i = Rational::from_integer(BigInt::from(w.rank()));
    DyadicInterval {
        bits: w.clone(),
        lo: &i * &width,
        hi: (i + Rational::one()) * width,
    }
}

/// A sojourn time in `(0, inf]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Duration {
    Finite(Rational),
    /// `scale * (-ln arg)` with `scale > 0` and `0 < arg < 1`.
    NegLog {
        scale: Rational,
        arg: Rational,
    },
    Infinite,
}

impl Duration {
    /// A binary64 value taken as exact.
    pub fn from_f64(x: f64) -> Result<Self> {
        if x.is_infinite() && x > 0.0 {
            return Ok(Duration::Infinite);
        }
        match Rational::from_float(x) {
            Some(q) if q.is_positive() => Ok(Duration::Finite(q)),
            _ => Err(Error::InvalidInput(format!("duration {x} is not positive"))),
        }
    }

    pub fn finite(q: Rational) -> Result<Self> {
        if q.is_positive() {
            Ok(Duration::Finite(q))
        } else {
            Err(Error::InvalidInput(format!("duration {} is not positive", render(&q))))
        }
    }

    pub fn neg_log(scale: Rational, arg: Rational) -> Result<Self> {
        if !scale.is_positive() || !arg.is_positive() || arg >= Rational::one() {
            return Err(Error::InvalidInput("logarithmic duration out of range".into()));
        }
        Ok(Duration::NegLog { scale, arg })
    }

    /// `ln 2 / rate`.
    pub fn ln2_over(rate: &Rational) -> Result<Self> {
        Duration::neg_log(rate.recip(), Rational::new(1.into(), 2.into()))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Duration::Infinite)
    }

    pub fn enclosure(&self, bits: u32) -> Option<Enclosure> {
        match self {
            Duration::Finite(q) => Some(Enclosure::exact(q.clone())),
            Duration::NegLog { scale, arg } => Some(ln(arg, bits).neg().scale(scale)),
            Duration::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Duration::Finite(q) => q.to_f64().unwrap_or(f64::NAN),
            Duration::NegLog { scale, arg } => {
                scale.to_f64().unwrap_or(f64::NAN) * -arg.to_f64().unwrap_or(f64::NAN).ln()
            }
            Duration::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Duration::Finite(q) => {
                let x = q.to_f64().unwrap_or(f64::NAN);
                if Rational::from_float(x).as_ref() == Some(q) {
                    write!(f, "f64:{x:?}")
                } else {
                    write!(f, "q:{}", render(q))
                }
            }
            Duration::NegLog { scale, arg } => write!(f, "nl:{},{}", render(scale), render(arg)),
            Duration::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Duration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad duration token {s:?}"));
        if s == "inf" {
            return Ok(Duration::Infinite);
        }
        if let Some(x) = s.strip_prefix("f64:") {
            let v: f64 = x.parse().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            return Duration::from_f64(v);
        }
        if let Some(x) = s.strip_prefix("q:") {
            return Duration::finite(parse_rational(x)?);
        }
        if let Some(x) = s.strip_prefix("nl:") {
            let (a, b) = x.split_once(',').ok_or_else(bad)?;
            return Duration::neg_log(parse_rational(a)?, parse_rational(b)?);
        }
        Err(bad())
    }
}

/// `F_rate(t) = 1 - e^(-rate t)`; exact for `t = inf`, for `rate = 0`, and
/// for logarithmic durations whose exponent is an integer.
pub fn exp_cdf(rate: &Rate, t: &Duration, bits: u32) -> Result<Enclosure> {
    check_rate(rate)?;
    check_duration(t)?;
    if t.is_infinite() {
        return Ok(Enclosure::exact(Rational::one()));
    }
    if rate.is_zero() {
        return Ok(Enclosure::exact(Rational::zero()));
    }
    let one = Rational::one();
    Ok(match t {
        Duration::Finite(x) => exp_neg(&(rate * x), bits).sub_from(&one),
        Duration::NegLog { scale, arg } => {
            let e = rate * scale;
            if e.is_integer() {
                let n = e
                    .to_integer()
                    .to_u32()
                    .ok_or_else(|| Error::InvalidInput("logarithmic duration exponent too large".into()))?;
                Enclosure::exact(&one - num_traits::pow(arg.clone(), n as usize))
            } else {
                let x = ln_enclosure(&Enclosure::exact(arg.clone()), bits + 8).neg().scale(&e);
                exp_neg_enclosure(&x, bits).sub_from(&one)
            }
        }
        Duration::Infinite => unreachable!(),
    })
}

fn check_rate(rate: &Rate) -> Result<()> {
    if rate.is_negative() {
        return Err(Error::InvalidInput(format!("negative rate {}", render(rate))));
    }
    Ok(())
}

fn check_duration(t: &Duration) -> Result<()> {
    match t {
        Duration::Finite(q) if !q.is_positive() => {
            Err(Error::InvalidInput(format!("duration {} is not positive", render(q))))
        }
        Duration::NegLog { scale, arg } if !scale.is_positive() || !arg.is_positive() || arg >= &Rational::one() => {
            Err(Error::InvalidInput("logarithmic duration out of range".into()))
        }
        _ => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Endpoint {
    Finite(Enclosure),
    Infinity,
}

/// An interval over `(0, inf]` with enclosed endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeInterval {
    pub lower: Endpoint,
    pub lower_closed: bool,
    pub upper: Endpoint,
    pub upper_closed: bool,
    pub empty: bool,
}

impl TimeInterval {
    fn empty() -> Self {
        TimeInterval {
            lower: Endpoint::Finite(Enclosure::exact(Rational::zero())),
            lower_closed: false,
            upper: Endpoint::Finite(Enclosure::exact(Rational::zero())),
            upper_closed: false,
            empty: true,
        }
    }

    pub fn contains_infinity(&self) -> bool {
        !self.empty && self.upper == Endpoint::Infinity && self.upper_closed
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return f.write_str("{}");
        }
        let show = |e: &Endpoint| match e {
            Endpoint::Finite(x) => x.to_string(),
            Endpoint::Infinity => "inf".to_string(),
        };
        write!(
            f,
            "{}{}, {}{}",
            if self.lower_closed { "[" } else { "(" },
            show(&self.lower),
            show(&self.upper),
            if self.upper_closed { "]" } else { ")" }
        )
    }
}

/// Extra bits so that dividing by the rate keeps the requested absolute width.
fn rate_guard(rate: &Rational) -> u32 {
    let n = rate.numer().bits() as i64;
    let d = rate.denom().bits() as i64;
    (d - n + 2).max(0) as u32
}

/// `D_rate(w) = F_rate^-1(I_w)`.
pub fn quantile_interval(rate: &Rate, w: &Bits, prec: &PrecisionConfig) -> Result<TimeInterval> {
    check_rate(rate)?;
    let zero = || Endpoint::Finite(Enclosure::exact(Rational::zero()));
    if rate.is_zero() {
        return Ok(if w.is_empty() {
            TimeInterval {
                lower: zero(),
                lower_closed: false,
                upper: Endpoint::Infinity,
                upper_closed: true,
                empty: false,
            }
        } else if w.all_zeros() {
            TimeInterval {
                lower: zero(),
                lower_closed: false,
                upper: Endpoint::Infinity,
                upper_closed: false,
                empty: false,
            }
        } else if w.all_ones() {
            TimeInterval {
                lower: Endpoint::Infinity,
                lower_closed: true,
                upper: Endpoint::Infinity,
                upper_closed: true,
                empty: false,
            }
        } else {
            TimeInterval::empty()
        });
    }
    let bits = prec.working + rate_guard(rate);
    let inv = rate.recip();
    let one = Rational::one();
    let quantile = |p: &Rational| -> Endpoint {
        if p.is_zero() {
            zero()
        } else if p.is_one() {
            Endpoint::Infinity
        } else {
            Endpoint::Finite(ln(&(&one - p), bits).neg().scale(&inv))
        }
    };
    let cell = dyadic_interval(w);
    Ok(TimeInterval {
        lower: quantile(&cell.lo),
        lower_closed: false,
        upper: quantile(&cell.hi),
        upper_closed: true,
        empty: false,
    })
}

enum Decision {
    Yes,
    No,
    Unknown,
}

fn gt(f: &Enclosure, a: &Rational) -> Decision {
    if f.lo() > a {
        Decision::Yes
    } else if f.hi() <= a {
        Decision::No
    } else {
        Decision::Unknown
    }
}

fn le(f: &Enclosure, b: &Rational) -> Decision {
    if f.hi() <= b {
        Decision::Yes
    } else if f.lo() > b {
        Decision::No
    } else {
        Decision::Unknown
    }
}

fn ambiguous(rate: &Rate, t: &Duration, what: &str) -> Error {
    Error::BoundaryAmbiguous(format!("F_{}({t}) against {what}", render(rate)))
}

/// Decides `t in D_rate(w)`.
pub fn approximates(rate: &Rate, w: &Bits, t: &Duration, prec: &PrecisionConfig) -> Result<bool> {
    check_rate(rate)?;
    check_duration(t)?;
    if t.is_infinite() {
        // F = 1 for every rate; for rate 0 the cell of inf is 1^n.
        return Ok(w.all_ones());
    }
    if rate.is_zero() {
        return Ok(w.all_zeros());
    }
    if w.is_empty() {
        return Ok(true);
    }
    let cell = dyadic_interval(w);
    for bits in prec.levels() {
        let f = exp_cdf(rate, t, bits)?;
        let lower = gt(&f, &cell.lo);
        let upper = le(&f, &cell.hi);
        match (lower, upper) {
            (Decision::No, _) | (_, Decision::No) => return Ok(false),
            (Decision::Yes, Decision::Yes) => return Ok(true),
            _ => {}
        }
    }
    Err(ambiguous(rate, t, &format!("cell {w}")))
}

/// The unique `w` of length `depth` with `t in D_rate(w)`.
pub fn encode_time(rate: &Rate, t: &Duration, depth: usize, prec: &PrecisionConfig) -> Result<Bits> {
    check_rate(rate)?;
    check_duration(t)?;
    let mismatch = || Error::RateDurationMismatch {
        rate: render(rate),
        duration: t.to_string(),
    };
    match (rate.is_zero(), t.is_infinite()) {
        (true, true) => return Ok(Bits::ones(depth)),
        (true, false) | (false, true) => return Err(mismatch()),
        _ => {}
    }
    if depth == 0 {
        return Ok(Bits::empty());
    }
    let scale = crate::rational::pow2(depth as i64);
    let cell_index = |x: &Rational| -> BigInt {
        let v = x * &scale;
        let c: BigInt = v.ceil().to_integer() - BigInt::one();
        c.max(BigInt::zero())
    };
    for bits in prec.levels() {
        let f = exp_cdf(rate, t, bits + depth as u32)?;
        let lo = cell_index(f.lo());
        let hi = cell_index(f.hi());
        if lo == hi {
            let (_, mag) = lo.into_parts();
            return Ok(Bits::from_rank(&mag, depth));
        }
    }
    Err(ambiguous(rate, t, &format!("depth-{depth} cell boundaries")))
}

/// A rate sequence: finite with exactly one zero at the end, or a stored
/// prefix of an infinite positive sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateSequence {
    rates: Vec<Rate>,
    infinite: bool,
}

impl RateSequence {
    pub fn finite(rates: Vec<Rate>) -> Result<Self> {
        match rates.split_last() {
            Some((last, init)) if last.is_zero() && init.iter().all(|r| r.is_positive()) => {
                Ok(RateSequence { rates, infinite: false })
            }
            _ => Err(Error::InvalidInput(
                "a finite rate sequence needs a single zero, at the end".into(),
            )),
        }
    }

    pub fn infinite_prefix(rates: Vec<Rate>) -> Result<Self> {
        if rates.iter().all(|r| r.is_positive()) {
            Ok(RateSequence { rates, infinite: true })
        } else {
            Err(Error::InvalidInput("an infinite rate sequence must be positive".into()))
        }
    }

    /// Materializes `len` entries of an infinite sequence from a generator.
    pub fn generated(len: usize, f: impl Fn(usize) -> Rate) -> Result<Self> {
        RateSequence::infinite_prefix((0..len).map(f).collect())
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rates(&self) -> &[Rate] {
        &self.rates
    }

    fn admits(&self, n: usize) -> bool {
        self.infinite || n <= self.rates.len()
    }
}

/// Durations paired with a rate sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DurationSequence(pub Vec<Duration>);

impl DurationSequence {
    /// `t_i < inf` iff `rate_i > 0`, over the common stored range.
    pub fn check(&self, rates: &RateSequence) -> Result<()> {
        for (i, (t, r)) in self.0.iter().zip(rates.rates()).enumerate() {
            check_duration(t)?;
            if t.is_infinite() != r.is_zero() {
                return Err(Error::RateDurationMismatch {
                    rate: render(r),
                    duration: format!("{t} (index {i})"),
                });
            }
        }
        Ok(())
    }
}

/// `2^-(sum |w_i|)`.
pub fn mu_duration(rates: &RateSequence, w: &[Bits]) -> Result<Rational> {
    if !rates.admits(w.len()) {
        return Err(Error::InvalidInput(format!(
            "tuple of length {} exceeds rate sequence of length {}",
            w.len(),
            rates.len()
        )));
    }
    let total: usize = w.iter().map(Bits::len).sum();
    Ok(pow2(-(total as i64)))
}

pub fn tuple_approximates(
    rates: &RateSequence,
    w: &[Bits],
    t: &DurationSequence,
    prec: &PrecisionConfig,
) -> Result<bool> {
    if w.len() > rates.len() {
        return Err(Error::InvalidInput("tuple longer than the stored rate sequence".into()));
    }
    if w.len() > t.0.len() {
        return Err(Error::InvalidInput("tuple longer than the duration sequence".into()));
    }
    t.check(rates)?;
    for (i, wi) in w.iter().enumerate() {
        if !approximates(&rates.rates()[i], wi, &t.0[i], prec)? {
            return Ok(false);
        }
    }
    Ok(true)
}
