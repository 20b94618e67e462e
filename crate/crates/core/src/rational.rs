//! Exact rational helpers: p-adic valuations of `BigRational`s, reduction of
//! p-integral rationals modulo `p^k`, and parsing of `"num/den"` strings.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `p^k` as a big integer.
pub fn p_pow(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// `p^e` as a rational, `e` may be negative.
pub fn p_pow_rat(p: u64, e: i64) -> Rational {
    let m = p_pow(p, e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(m)
    } else {
        Rational::new(BigInt::one(), m)
    }
}

/// p-adic valuation of a nonzero integer; `None` for zero.
pub fn vp_int(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut cur = x.clone();
    loop {
        let (q, r) = cur.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        cur = q;
        v += 1;
    }
}

/// p-adic valuation of a rational; `None` for zero.
pub fn vp(x: &Rational, p: u64) -> Option<i64> {
    let vn = vp_int(x.numer(), p)?;
    let vd = vp_int(x.denom(), p).unwrap_or(0);
    Some(vn as i64 - vd as i64)
}

/// Minimum valuation over a slice (`None` if every entry is zero).
pub fn vp_min<'a>(xs: impl IntoIterator<Item = &'a Rational>, p: u64) -> Option<i64> {
    xs.into_iter().filter_map(|x| vp(x, p)).min()
}

pub fn vp_min_int<'a>(xs: impl IntoIterator<Item = &'a BigInt>, p: u64) -> Option<u32> {
    xs.into_iter().filter_map(|x| vp_int(x, p)).min()
}

/// Modular inverse of `a` modulo `m` (`m > 1`), if it exists.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    let g = a.extended_gcd(m);
    if !g.gcd.is_one() {
        return None;
    }
    Some(g.x.mod_floor(m))
}

/// Reduces a p-integral rational modulo `p^k`, returning the representative
/// in `[0, p^k)`. Fails when the rational is not p-integral.
pub fn reduce_mod(x: &Rational, p: u64, k: u32) -> Result<BigInt> {
    let m = p_pow(p, k);
    if x.is_zero() {
        return Ok(BigInt::zero());
    }
    if let Some(v) = vp(x, p) {
        if v < 0 {
            return Err(Error::exhausted(format!(
                "{x} is not {p}-integral (valuation {v})"
            )));
        }
    }
    if k == 0 {
        return Ok(BigInt::zero());
    }
    let inv = mod_inverse(x.denom(), &m).ok_or(Error::DivisionByZero)?;
    Ok((x.numer() * inv).mod_floor(&m))
}

/// Splits a nonzero rational as `p^v * u` with `u` a p-adic unit.
pub fn unit_part(x: &Rational, p: u64) -> Option<(i64, Rational)> {
    let v = vp(x, p)?;
    Some((v, x * p_pow_rat(p, -v)))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = |m: &str| Error::parse(t.to_string(), m.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational::new(n, d))
    } else {
        let n: BigInt = t.parse().map_err(|_| bad("not a rational"))?;
        Ok(Rational::from_integer(n))
    }
}

pub fn format_rational(x: &Rational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Absolute value as a rational, for norms.
pub fn abs(x: &Rational) -> Rational {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        let ps: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
    }

    #[test]
    fn valuations() {
        assert_eq!(vp(&rat(75), 5), Some(2));
        assert_eq!(vp(&frac(3, 25), 5), Some(-2));
        assert_eq!(vp(&rat(0), 5), None);
        assert_eq!(vp(&frac(-8, 3), 2), Some(3));
    }

    #[test]
    fn reduce_one_third() {
        assert_eq!(reduce_mod(&frac(1, 3), 5, 3).unwrap(), BigInt::from(42));
        assert!(reduce_mod(&frac(1, 5), 5, 3).is_err());
        assert_eq!(reduce_mod(&rat(-1), 5, 2).unwrap(), BigInt::from(24));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["-3/7", "12", "0", "1/125"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("4/6").unwrap(), frac(2, 3));
        assert_eq!(parse_rational("1/0"), Err(Error::DivisionByZero));
        assert!(parse_rational("x").is_err());
    }
}
