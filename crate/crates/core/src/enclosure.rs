//! Outward-rounded enclosures of real numbers.
//!
//! The transcendental kernels (`exp`, `ln`) run in binary fixed point with
//! guard bits; every partial result is rounded toward the side that keeps the
//! true value inside `[lo, hi]`. Endpoints are handed out as exact rationals on
//! a dyadic grid, so comparisons against dyadic cell boundaries are exact.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::{ceil_scaled, floor_scaled, Rational};

/// A closed interval `[lo, hi]` known to contain some real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    lo: Rational,
    hi: Rational,
}

impl Enclosure {
    pub fn exact(q: Rational) -> Self {
        Enclosure { lo: q.clone(), hi: q }
    }

    /// Panics if `lo > hi`.
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "enclosure with lo > hi");
        Enclosure { lo, hi }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        self.is_exact().then_some(&self.lo)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &Rational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    /// Midpoint and radius, for display.
    pub fn mid_rad(&self) -> (Rational, Rational) {
        let two = Rational::from_integer(BigInt::from(2));
        ((&self.lo + &self.hi) / &two, (&self.hi - &self.lo) / two)
    }

    pub fn neg(&self) -> Self {
        Enclosure {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn add(&self, other: &Enclosure) -> Self {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn sub(&self, other: &Enclosure) -> Self {
        self.add(&other.neg())
    }

    /// `q - self`.
    pub fn sub_from(&self, q: &Rational) -> Self {
        Enclosure {
            lo: q - &self.hi,
            hi: q - &self.lo,
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        let a = &self.lo * q;
        let b = &self.hi * q;
        if q.is_negative() {
            Enclosure { lo: b, hi: a }
        } else {
            Enclosure { lo: a, hi: b }
        }
    }

    pub fn mul(&self, other: &Enclosure) -> Self {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Enclosure { lo, hi }
    }

    /// Division by an enclosure that excludes zero.
    pub fn div(&self, other: &Enclosure) -> Option<Self> {
        if other.lo.is_positive() || other.hi.is_negative() {
            let inv = Enclosure::new(other.hi.recip(), other.lo.recip());
            Some(self.mul(&inv))
        } else {
            None
        }
    }

    /// Widens the endpoints outward onto the grid `2^-bits`.
    pub fn round_outward(&self, bits: u32) -> Self {
        let scale = Rational::from_integer(BigInt::one() << bits as usize);
        Enclosure {
            lo: Rational::from_integer(floor_scaled(&self.lo, bits)) / &scale,
            hi: Rational::from_integer(ceil_scaled(&self.hi, bits)) / scale,
        }
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_exact() {
            return write!(f, "{}", crate::rational::render(q));
        }
        let (mid, rad) = self.mid_rad();
        let mid = crate::rational::to_f64(&mid);
        let rad = crate::rational::to_f64(&rad);
        write!(f, "{mid:.17e} +/- {rad:.3e}")
    }
}

const GUARD_BITS: u32 = 24;

fn fixed_to_rational(v: &BigInt, bits: u32) -> Rational {
    Rational::new(v.clone(), BigInt::one() << bits as usize)
}

fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

fn shr_ceil(a: &BigInt, bits: u32) -> BigInt {
    -((-a) >> bits as usize)
}

/// Fixed-point bounds of `sum_{k>=0} z^(2k+1) / (2k+1)` for `0 <= z <= 1/3`.
/// `z` is scaled by `2^bits`. Returns `(lower, upper)`, both scaled.
fn atanh_series(z_lo: &BigInt, z_hi: &BigInt, bits: u32) -> (BigInt, BigInt) {
    let lower = {
        let z2 = (z_lo * z_lo) >> bits as usize;
        let mut pow = z_lo.clone();
        let mut sum = BigInt::zero();
        let mut k: u64 = 0;
        while !pow.is_zero() {
            sum += &pow / BigInt::from(2 * k + 1);
            pow = (&pow * &z2) >> bits as usize;
            k += 1;
        }
        sum
    };
    let upper = {
        let z2 = shr_ceil(&(z_hi * z_hi), bits);
        let mut pow = z_hi.clone();
        let mut sum = BigInt::zero();
        let mut k: u64 = 0;
        let two = BigInt::from(2);
        // Terms shrink by at least z^2 <= 1/9, so once pow <= 2 the tail is
        // bounded by 2 * pow.
        while pow > two {
            sum += div_ceil(&pow, &BigInt::from(2 * k + 1));
            pow = shr_ceil(&(&pow * &z2), bits);
            k += 1;
        }
        sum + &pow * 2 + 1
    };
    (lower, upper)
}

/// Fixed-point bounds on `ln 2`, scaled by `2^bits`.
fn ln2_fixed(bits: u32) -> (BigInt, BigInt) {
    let third = Rational::new(BigInt::one(), BigInt::from(3));
    let (lo, hi) = atanh_series(&floor_scaled(&third, bits), &ceil_scaled(&third, bits), bits);
    (lo * 2, hi * 2)
}

/// Enclosure of `ln 2` with endpoints on the `2^-bits` grid.
pub fn ln2(bits: u32) -> Enclosure {
    let g = bits + GUARD_BITS;
    let (lo, hi) = ln2_fixed(g);
    Enclosure::new(fixed_to_rational(&lo, g), fixed_to_rational(&hi, g)).round_outward(bits)
}

/// Enclosure of `ln y` for a positive rational `y`.
pub fn ln(y: &Rational, bits: u32) -> Enclosure {
    assert!(y.is_positive(), "ln of a non-positive number");
    if y.is_one() {
        return Enclosure::exact(Rational::zero());
    }
    // y = m * 2^e, with 1 <= m < 2.
    let nb = y.numer().bits() as i64;
    let db = y.denom().bits() as i64;
    let mut e = nb - db;
    let mut m = y / crate::rational::pow2(e);
    let one = Rational::one();
    let two = Rational::from_integer(BigInt::from(2));
    if m < one {
        m *= &two;
        e -= 1;
    } else if m >= two {
        m /= &two;
        e += 1;
    }
    let g = bits + GUARD_BITS + (64 - e.unsigned_abs().leading_zeros());
    let z = (&m - &one) / (&m + &one);
    let (s_lo, s_hi) = atanh_series(&floor_scaled(&z, g), &ceil_scaled(&z, g), g);
    let mut lo = s_lo * 2;
    let mut hi = s_hi * 2;
    if e != 0 {
        let (l2_lo, l2_hi) = ln2_fixed(g);
        let eb = BigInt::from(e);
        if e > 0 {
            lo += &eb * l2_lo;
            hi += &eb * l2_hi;
        } else {
            lo += &eb * l2_hi;
            hi += &eb * l2_lo;
        }
    }
    Enclosure::new(fixed_to_rational(&lo, g), fixed_to_rational(&hi, g)).round_outward(bits)
}

/// Enclosure of `ln y` for `y` itself given as a positive enclosure.
pub fn ln_enclosure(y: &Enclosure, bits: u32) -> Enclosure {
    let lo = ln(y.lo(), bits);
    let hi = if y.is_exact() { lo.clone() } else { ln(y.hi(), bits) };
    Enclosure::new(lo.lo().clone(), hi.hi().clone())
}

/// Fixed-point bounds on `e^x` for rational `x >= 0`, scaled by `2^g`.
fn exp_pos_fixed(x: &Rational, g: u32) -> (BigInt, BigInt) {
    // r = x / 2^s <= 1/2
    let xb = if x.is_zero() {
        0
    } else {
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        n - d + 2
    };
    let s = xb.max(0) as u32;
    let r = x / Rational::from_integer(BigInt::one() << s as usize);
    let r_lo = floor_scaled(&r, g);
    let r_hi = ceil_scaled(&r, g);
    let one = BigInt::one() << g as usize;

    let mut lo_sum = one.clone();
    let mut term = one.clone();
    let mut k: u64 = 1;
    while !term.is_zero() {
        term = div_floor(&((&term * &r_lo) >> g as usize), &BigInt::from(k));
        lo_sum += &term;
        k += 1;
    }

    let mut hi_sum = one.clone();
    let mut term = one;
    let mut k: u64 = 1;
    let two = BigInt::from(2);
    // With r <= 1/2 each term is at most half the previous one, so once the
    // term is <= 2 the tail is below 2 * term.
    while term > two {
        term = div_ceil(&shr_ceil(&(&term * &r_hi), g), &BigInt::from(k));
        hi_sum += &term;
        k += 1;
    }
    hi_sum += &term * 2 + 1;

    for _ in 0..s {
        lo_sum = (&lo_sum * &lo_sum) >> g as usize;
        hi_sum = shr_ceil(&(&hi_sum * &hi_sum), g);
    }
    (lo_sum, hi_sum)
}

/// Enclosure of `e^-x` for rational `x >= 0`.
pub fn exp_neg(x: &Rational, bits: u32) -> Enclosure {
    assert!(!x.is_negative(), "exp_neg of a negative argument");
    if x.is_zero() {
        return Enclosure::exact(Rational::one());
    }
    // e^-x < 2^-(bits+2) once x > 0.6932 * (bits + 2) > ln 2 * (bits + 2).
    let cutoff = Rational::new(BigInt::from(6932u32) * BigInt::from(bits + 2), BigInt::from(10000u32));
    if x > &cutoff {
        return Enclosure::new(Rational::zero(), fixed_to_rational(&BigInt::one(), bits));
    }
    let xb = (x.numer().bits() as i64 - x.denom().bits() as i64 + 2).max(0) as u32;
    let g = bits + GUARD_BITS + 2 * xb + 8;
    let (e_lo, e_hi) = exp_pos_fixed(x, g);
    let num = BigInt::one() << (2 * g) as usize;
    let lo = div_floor(&num, &e_hi);
    let hi = div_ceil(&num, &e_lo);
    Enclosure::new(fixed_to_rational(&lo, g), fixed_to_rational(&hi, g)).round_outward(bits)
}

/// Enclosure of `e^-x` for `x >= 0` given as an enclosure.
pub fn exp_neg_enclosure(x: &Enclosure, bits: u32) -> Enclosure {
    let lo_arg = if x.lo().is_negative() {
        Rational::zero()
    } else {
        x.lo().clone()
    };
    let hi_arg = if x.hi().is_negative() {
        Rational::zero()
    } else {
        x.hi().clone()
    };
    let upper = exp_neg(&lo_arg, bits);
    let lower = if x.is_exact() {
        upper.clone()
    } else {
        exp_neg(&hi_arg, bits)
    };
    Enclosure::new(lower.lo().clone(), upper.hi().clone())
}
