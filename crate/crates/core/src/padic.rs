//! Truncated p-adic numbers with fixed relative precision.
//!
//! A nonzero value is `p^v * u` where the unit `u` is known modulo `p^prec`
//! (`prec` significant digits, at most the context precision). Zero is exact
//! and unique. Additive cancellation that leaves no significant digit is an
//! error, never a silent zero.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, is_prime, p_pow_rat, Rational};

/// Largest modulus `p^N` allowed so that unit products fit in `u128`.
const MODULUS_LIMIT: u128 = 1 << 63;

/// The field `Q_p` together with the working precision `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PAdicContext {
    p: u64,
    precision: u32,
}

impl PAdicContext {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidContext(format!("p = {p} is not prime")));
        }
        if precision == 0 {
            return Err(Error::InvalidContext("precision must be >= 1".into()));
        }
        let mut m: u128 = 1;
        for _ in 0..precision {
            m = m.saturating_mul(p as u128);
            if m >= MODULUS_LIMIT {
                return Err(Error::InvalidContext(format!(
                    "{p}^{precision} exceeds the supported modulus 2^63"
                )));
            }
        }
        Ok(Self { p, precision })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn zero(&self) -> PAdic {
        PAdic {
            ctx: *self,
            valuation: None,
            unit: 0,
            prec: 0,
        }
    }

    pub fn one(&self) -> PAdic {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> PAdic {
        self.from_rational(n, 1).expect("denominator is 1")
    }

    /// `num/den` as a p-adic number at the context precision.
    pub fn from_rational(&self, num: i64, den: i64) -> Result<PAdic> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        self.from_big_rational(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big_rational(&self, x: &Rational) -> Result<PAdic> {
        let Some((v, u)) = rational::unit_part(x, self.p) else {
            return Ok(self.zero());
        };
        let unit = rational::reduce_mod(&u, self.p, self.precision)?
            .to_u128()
            .expect("reduced below modulus");
        Ok(PAdic {
            ctx: *self,
            valuation: Some(v),
            unit,
            prec: self.precision,
        })
    }

    /// Parses `"num/den"` or an integer.
    pub fn parse_rational(&self, s: &str) -> Result<PAdic> {
        self.from_big_rational(&rational::parse_rational(s)?)
    }

    /// Parses the textual form produced by `Display`.
    pub fn parse_text(&self, s: &str) -> Result<PAdic> {
        let t = s.trim();
        if t == "0" {
            return Ok(self.zero());
        }
        let bad = |m: &str| Error::parse(t.to_string(), m.to_string());
        let (head, tail) = t.split_once(" * (").ok_or_else(|| bad("missing ' * ('"))?;
        let body = tail.strip_suffix(')').ok_or_else(|| bad("missing ')'"))?;
        let (base, v) = head.split_once('^').ok_or_else(|| bad("missing p^v"))?;
        let base: u64 = base.parse().map_err(|_| bad("bad base"))?;
        if base != self.p {
            return Err(bad("base does not match context prime"));
        }
        let valuation: i64 = v.parse().map_err(|_| bad("bad valuation"))?;
        let mut digits = Vec::new();
        for (i, term) in body.split(" + ").enumerate() {
            let d = match i {
                0 => term,
                1 => term
                    .strip_suffix(&format!("*{}", self.p))
                    .ok_or_else(|| bad("bad linear term"))?,
                _ => term
                    .strip_suffix(&format!("*{}^{}", self.p, i))
                    .ok_or_else(|| bad("bad power term"))?,
            };
            let d: u64 = d.trim().parse().map_err(|_| bad("bad digit"))?;
            if d >= self.p {
                return Err(bad("digit out of range"));
            }
            digits.push(d);
        }
        if digits.is_empty() || digits[0] == 0 {
            return Err(bad("leading digit must be nonzero"));
        }
        if digits.len() > self.precision as usize {
            return Err(bad("more digits than the context precision"));
        }
        let mut unit: u128 = 0;
        for &d in digits.iter().rev() {
            unit = unit * self.p as u128 + d as u128;
        }
        Ok(PAdic {
            ctx: *self,
            valuation: Some(valuation),
            unit,
            prec: digits.len() as u32,
        })
    }

    fn modulus(&self, prec: u32) -> u128 {
        (self.p as u128).pow(prec)
    }
}

impl fmt::Display for PAdicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q_{} (N = {})", self.p, self.precision)
    }
}

/// A p-adic number at finite relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PAdic {
    ctx: PAdicContext,
    valuation: Option<i64>,
    unit: u128,
    prec: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl FromStr for ArithOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(ArithOp::Add),
            "sub" => Ok(ArithOp::Sub),
            "mul" => Ok(ArithOp::Mul),
            _ => Err(Error::parse("op", format!("unknown operation '{s}'"))),
        }
    }
}

pub fn arith(op: ArithOp, x: &PAdic, y: &PAdic) -> Result<PAdic> {
    match op {
        ArithOp::Add => x.add(y),
        ArithOp::Sub => x.sub(y),
        ArithOp::Mul => x.mul(y),
    }
}

impl PAdic {
    pub fn context(&self) -> PAdicContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.valuation.is_none()
    }

    /// `None` stands for `+inf` (exact zero).
    pub fn valuation(&self) -> Option<i64> {
        self.valuation
    }

    /// Number of significant digits carried.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// The unit part as an integer in `[0, p^prec)`.
    pub fn unit(&self) -> u128 {
        self.unit
    }

    /// Base-p digits of the unit part, least significant first.
    pub fn digits(&self) -> Vec<u64> {
        let p = self.ctx.p as u128;
        let mut u = self.unit;
        (0..self.prec)
            .map(|_| {
                let d = (u % p) as u64;
                u /= p;
                d
            })
            .collect()
    }

    /// `|x| = p^{-v(x)}` as an exact rational (zero for zero).
    pub fn norm(&self) -> Rational {
        match self.valuation {
            None => Rational::zero(),
            Some(v) => p_pow_rat(self.ctx.p, -v),
        }
    }

    pub fn valuation_norm(&self) -> (Option<i64>, Rational) {
        (self.valuation, self.norm())
    }

    /// Image in the residue field `A/pA = Z/p`, defined on the ring `A = {v >= 0}`.
    pub fn residue(&self) -> Option<u64> {
        match self.valuation {
            None => Some(0),
            Some(v) if v > 0 => Some(0),
            Some(0) => Some((self.unit % self.ctx.p as u128) as u64),
            Some(_) => None,
        }
    }

    /// The rational `p^v * unit` (a lift of the truncated value).
    pub fn to_rational(&self) -> Rational {
        match self.valuation {
            None => Rational::zero(),
            Some(v) => Rational::from_integer(BigInt::from(self.unit)) * p_pow_rat(self.ctx.p, v),
        }
    }

    fn same_context(&self, other: &PAdic) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch {
                left: self.ctx.to_string(),
                right: other.ctx.to_string(),
            });
        }
        Ok(())
    }

    pub fn neg(&self) -> PAdic {
        if self.is_zero() {
            return *self;
        }
        let m = self.ctx.modulus(self.prec);
        PAdic {
            unit: (m - self.unit) % m,
            ..*self
        }
    }

    pub fn add(&self, other: &PAdic) -> Result<PAdic> {
        self.same_context(other)?;
        let (x, y) = match (self.valuation, other.valuation) {
            (None, _) => return Ok(*other),
            (_, None) => return Ok(*self),
            (Some(a), Some(b)) if a <= b => (self, other),
            _ => (other, self),
        };
        let a = x.valuation.unwrap();
        let b = y.valuation.unwrap();
        let gap = (b - a) as u64;
        let p = self.ctx.p as u128;
        // relative precision of the sum with respect to p^a
        let k = (x.prec as u64).min(gap + y.prec as u64) as u32;
        let m = self.ctx.modulus(k);
        let shifted = if gap >= k as u64 {
            0
        } else {
            (y.unit % m) * p.pow(gap as u32) % m
        };
        let s = (x.unit % m + shifted) % m;
        if s == 0 {
            return Err(Error::exhausted(format!(
                "cancellation in {self} + {other} leaves no significant digit"
            )));
        }
        let mut t = 0u32;
        let mut u = s;
        while u.is_multiple_of(p) {
            u /= p;
            t += 1;
        }
        let prec = k - t;
        Ok(PAdic {
            ctx: self.ctx,
            valuation: Some(a + t as i64),
            unit: u % self.ctx.modulus(prec),
            prec,
        })
    }

    pub fn sub(&self, other: &PAdic) -> Result<PAdic> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PAdic) -> Result<PAdic> {
        self.same_context(other)?;
        let (Some(a), Some(b)) = (self.valuation, other.valuation) else {
            return Ok(self.ctx.zero());
        };
        let prec = self.prec.min(other.prec);
        let m = self.ctx.modulus(prec);
        Ok(PAdic {
            ctx: self.ctx,
            valuation: Some(a + b),
            unit: (self.unit % m) * (other.unit % m) % m,
            prec,
        })
    }

    pub fn invert(&self) -> Result<PAdic> {
        let v = self.valuation.ok_or(Error::DivisionByZero)?;
        let m = self.ctx.modulus(self.prec);
        let inv = rational::mod_inverse(&BigInt::from(self.unit), &BigInt::from(m))
            .expect("unit is invertible")
            .to_u128()
            .expect("below modulus");
        Ok(PAdic {
            ctx: self.ctx,
            valuation: Some(-v),
            unit: inv,
            prec: self.prec,
        })
    }

    pub fn div(&self, other: &PAdic) -> Result<PAdic> {
        self.mul(&other.invert()?)
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(v) = self.valuation else {
            return write!(f, "0");
        };
        let p = self.ctx.p;
        write!(f, "{p}^{v} * (")?;
        for (i, d) in self.digits().iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{d}")?,
                1 => write!(f, "{d}*{p}")?,
                _ => write!(f, "{d}*{p}^{i}")?,
            }
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn c53() -> PAdicContext {
        PAdicContext::new(5, 3).unwrap()
    }

    #[test]
    fn context_validation() {
        assert!(PAdicContext::new(6, 3).is_err());
        assert!(PAdicContext::new(5, 0).is_err());
        assert!(PAdicContext::new(5, 40).is_err());
        assert!(PAdicContext::new(2, 62).is_ok());
    }

    #[test]
    fn mul_adds_valuations() {
        let c = c53();
        let r = c.from_int(5).mul(&c.from_int(5)).unwrap();
        assert_eq!(r.valuation(), Some(2));
        assert_eq!(r.digits(), vec![1, 0, 0]);
    }

    #[test]
    fn add_with_carry_shrinks_precision() {
        let c = c53();
        let r = c.from_int(2).add(&c.from_int(3)).unwrap();
        assert_eq!(r.valuation(), Some(1));
        assert_eq!(r.digits(), vec![1, 0]);
        assert_eq!(r.to_rational(), rat5(5));
    }

    fn rat5(n: i64) -> Rational {
        crate::rational::rat(n)
    }

    #[test]
    fn add_zero_is_identity() {
        let c = c53();
        let x = c.from_rational(7, 3).unwrap();
        assert_eq!(x.add(&c.zero()).unwrap(), x);
        assert_eq!(c.zero().add(&x).unwrap(), x);
    }

    #[test]
    fn full_cancellation_is_an_error() {
        let c = c53();
        let x = c.from_int(7);
        assert!(matches!(x.sub(&x), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn inversion() {
        let c = c53();
        let r = c.from_int(5).invert().unwrap();
        assert_eq!((r.valuation(), r.digits()), (Some(-1), vec![1, 0, 0]));
        let r = c.from_int(3).invert().unwrap();
        assert_eq!((r.valuation(), r.digits()), (Some(0), vec![2, 3, 1]));
        let seven = c.from_int(7);
        assert_eq!(seven.invert().unwrap().invert().unwrap(), seven);
        assert_eq!(c.zero().invert(), Err(Error::DivisionByZero));
    }

    #[test]
    fn valuation_and_norm() {
        let c = c53();
        assert_eq!(c.from_int(75).valuation_norm(), (Some(2), frac(1, 25)));
        assert_eq!(c.zero().valuation_norm(), (None, Rational::zero()));
        let third = c.from_rational(1, 3).unwrap();
        assert_eq!(third.valuation_norm(), (Some(0), frac(1, 1)));
        assert_eq!(third.residue(), Some(2));
    }

    #[test]
    fn from_rational_examples() {
        let c = c53();
        let x = c.from_rational(1, 3).unwrap();
        assert_eq!(x.digits(), vec![2, 3, 1]);
        let y = c.from_rational(25, 1).unwrap();
        assert_eq!((y.valuation(), y.digits()), (Some(2), vec![1, 0, 0]));
        assert!(c.from_rational(0, 7).unwrap().is_zero());
        assert_eq!(c.from_rational(1, 0), Err(Error::DivisionByZero));
    }

    #[test]
    fn mixed_contexts_rejected() {
        let a = c53().from_int(1);
        let b = PAdicContext::new(5, 2).unwrap().from_int(1);
        assert!(matches!(a.add(&b), Err(Error::ContextMismatch { .. })));
    }

    #[test]
    fn text_round_trip() {
        let c = c53();
        for x in [
            c.from_rational(1, 3).unwrap(),
            c.from_rational(-2, 125).unwrap(),
            c.zero(),
            c.from_int(2).add(&c.from_int(3)).unwrap(),
        ] {
            let s = x.to_string();
            assert_eq!(c.parse_text(&s).unwrap(), x, "{s}");
        }
        assert_eq!(c.from_rational(1, 3).unwrap().to_string(), "5^0 * (2 + 3*5 + 1*5^2)");
        assert!(c.parse_text("5^0 * (0 + 1*5)").is_err());
        assert!(c.parse_text("7^0 * (1)").is_err());
    }
}
