//! Exact rational helpers shared by the measure and martingale code.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `2^e` for any integer exponent.
pub fn pow2(e: i64) -> Rational {
    let mag = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(mag)
    } else {
        Rational::new_raw(BigInt::one(), mag)
    }
}

/// Parses `p/q`, a decimal such as `0.125` or `1e-3`, or an integer.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{whole}{frac}");
    let n: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| bad())?
    };
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Renders as `p/q`, or as an integer when the denominator is one.
pub fn render(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Splits `q = r * 2^e` with `r` having an odd numerator and denominator.
pub fn split_pow2(q: &Rational) -> (Rational, i64) {
    if q.is_zero() {
        return (Rational::zero(), 0);
    }
    let n = q.numer().clone();
    let d = q.denom().clone();
    let tz_n = n.magnitude().trailing_zeros().unwrap_or(0);
    let tz_d = d.magnitude().trailing_zeros().unwrap_or(0);
    let e = tz_n as i64 - tz_d as i64;
    (Rational::new(n >> tz_n, d >> tz_d), e)
}

/// Renders as `p/q x 2^-n`, keeping the odd part and the power of two apart.
pub fn render_factored(q: &Rational) -> String {
    let (odd, e) = split_pow2(q);
    if q.is_zero() {
        return "0".into();
    }
    if e == 0 {
        render(&odd)
    } else {
        format!("{} x 2^{}", render(&odd), e)
    }
}

/// Exponent `n` such that `q == 2^n`, if any.
pub fn exact_log2(q: &Rational) -> Option<i64> {
    if !q.is_positive() {
        return None;
    }
    let (odd, e) = split_pow2(q);
    odd.is_one().then_some(e)
}

pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `floor(q * 2^bits)` as an integer.
pub fn floor_scaled(q: &Rational, bits: u32) -> BigInt {
    let n = q.numer() << bits as usize;
    n.div_floor(q.denom())
}

/// `ceil(q * 2^bits)` as an integer.
pub fn ceil_scaled(q: &Rational, bits: u32) -> BigInt {
    let n = q.numer() << bits as usize;
    -((-n).div_floor(q.denom()))
}

pub fn biguint_to_rational(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn power_of_two_helpers() {
        assert_eq!(pow2(-3), ratio(1, 8));
        assert_eq!(pow2(4), int(16));
        assert_eq!(exact_log2(&ratio(1, 8)), Some(-3));
        assert_eq!(exact_log2(&ratio(1, 3)), None);
        assert_eq!(render_factored(&ratio(3, 32)), "3 x 2^-5");
        assert_eq!(render_factored(&ratio(1, 3)), "1/3");
        assert_eq!(render(&int(1)), "1");
    }

    #[test]
    fn scaled_rounding() {
        let q = ratio(1, 3);
        assert_eq!(floor_scaled(&q, 2), BigInt::from(1));
        assert_eq!(ceil_scaled(&q, 2), BigInt::from(2));
        assert_eq!(ceil_scaled(&ratio(1, 2), 1), BigInt::from(1));
        assert_eq!(floor_scaled(&ratio(-1, 3), 2), BigInt::from(-2));
    }
}
