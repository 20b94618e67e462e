//! Dense square matrices over `Q`, viewed inside `M_n(Q_p)`.
//!
//! All group elements are handled exactly; p-adic information enters only
//! through valuations of the entries.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rational::{self, format_rational, p_pow_rat, rat, vp, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    n: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("expected a square matrix, got {} rows", n)));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
            .expect("square")
    }

    pub fn diag(entries: &[Rational]) -> Self {
        let mut m = Self::zero(entries.len());
        for (i, x) in entries.iter().enumerate() {
            m[(i, i)] = x.clone();
        }
        m
    }

    /// `diag(p^{e_1}, ..., p^{e_n})`.
    pub fn diag_p_powers(p: u64, exps: &[i64]) -> Self {
        Self::diag(&exps.iter().map(|&e| p_pow_rat(p, e)).collect::<Vec<_>>())
    }

    /// Permutation matrix from 0/1 rows.
    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
            .expect("square")
    }

    /// Parses `[[a,b],[c,d]]` where entries are integers or rational strings.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s.trim())
            .map_err(|e| Error::parse("matrix", format!("{s}: {e}")))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let rows = v
            .as_array()
            .ok_or_else(|| Error::parse("matrix", "expected an array of rows"))?;
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row
                .as_array()
                .ok_or_else(|| Error::parse("matrix", "expected each row to be an array"))?;
            let mut r = Vec::with_capacity(row.len());
            for x in row {
                let q = match x {
                    Value::String(s) => rational::parse_rational(s)?,
                    Value::Number(num) if num.is_i64() => rat(num.as_i64().unwrap()),
                    other => {
                        return Err(Error::parse("matrix", format!("unsupported entry {other}")))
                    }
                };
                r.push(q);
            }
            out.push(r);
        }
        Self::from_rows(out)
    }

    /// Rows of rational strings, the ingestion format.
    pub fn to_json(&self) -> Value {
        Value::Array(
            (0..self.n)
                .map(|i| {
                    Value::Array(
                        (0..self.n)
                            .map(|j| Value::String(format_rational(&self[(i, j)])))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<Rational> {
        self.data[i * self.n..(i + 1) * self.n].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<Rational> {
        (0..self.n).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| !v[j].is_zero())
                    .fold(Rational::zero(), |acc, j| acc + &self[(i, j)] * &v[j])
            })
            .collect()
    }

    pub fn scale(&self, c: &Rational) -> Matrix {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn pow(&self, mut k: u32) -> Matrix {
        let mut base = self.clone();
        let mut acc = Self::identity(self.n);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn trace(&self) -> Rational {
        (0..self.n).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn det(&self) -> Rational {
        let n = self.n;
        let mut a = self.clone();
        let mut det = Rational::one();
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| !a[(r, c)].is_zero()) else {
                return Rational::zero();
            };
            if piv != c {
                a.swap_rows(piv, c);
                det = -det;
            }
            let pv = a[(c, c)].clone();
            det *= &pv;
            for r in c + 1..n {
                if a[(r, c)].is_zero() {
                    continue;
                }
                let f = &a[(r, c)] / &pv;
                for k in c..n {
                    let t = &f * &a[(c, k)];
                    a[(r, k)] -= t;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let piv = (c..n).find(|&r| !a[(r, c)].is_zero()).ok_or(Error::DivisionByZero)?;
            a.swap_rows(piv, c);
            inv.swap_rows(piv, c);
            let pv = a[(c, c)].clone();
            for k in 0..n {
                a[(c, k)] /= &pv;
                inv[(c, k)] /= &pv;
            }
            for r in 0..n {
                if r == c || a[(r, c)].is_zero() {
                    continue;
                }
                let f = a[(r, c)].clone();
                for k in 0..n {
                    let t = &f * &a[(c, k)];
                    a[(r, k)] -= t;
                    let t = &f * &inv[(c, k)];
                    inv[(r, k)] -= t;
                }
            }
        }
        Ok(inv)
    }

    /// Classical adjugate (transpose of the cofactor matrix); defined for
    /// singular matrices too.
    pub fn adjugate(&self) -> Matrix {
        let n = self.n;
        if n == 1 {
            return Self::identity(1);
        }
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(i, j).det();
                out[(j, i)] = if (i + j) % 2 == 0 { minor } else { -minor };
            }
        }
        out
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> Matrix {
        let rows = (0..self.n)
            .filter(|&r| r != skip_r)
            .map(|r| {
                (0..self.n)
                    .filter(|&c| c != skip_c)
                    .map(|c| self[(r, c)].clone())
                    .collect()
            })
            .collect();
        Self::from_rows(rows).expect("square minor")
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.n {
            self.data.swap(a * self.n + k, b * self.n + k);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.n {
            self.data.swap(k * self.n + a, k * self.n + b);
        }
    }

    /// Rank of the submatrix with the given rows and columns.
    pub fn sub_rank(&self, rows: &[usize], cols: &[usize]) -> usize {
        let mut a: Vec<Vec<Rational>> = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| self[(r, c)].clone()).collect())
            .collect();
        rank_of(&mut a)
    }

    /// Coefficients `c_0..c_n` of `det(x I - A) = sum c_k x^k` (Faddeev-LeVerrier).
    pub fn char_poly(&self) -> Vec<Rational> {
        let n = self.n;
        let mut coeffs = vec![Rational::zero(); n + 1];
        coeffs[n] = Rational::one();
        let mut m = Self::zero(n);
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = self.mul(&m);
            for i in 0..n {
                next[(i, i)] += &coeffs[n - k + 1];
            }
            m = next;
            let am = self.mul(&m);
            coeffs[n - k] = -am.trace() / rat(k as i64);
        }
        coeffs
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)].is_zero()))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn is_unit_upper_triangular(&self) -> bool {
        self.is_upper_triangular() && (0..self.n).all(|i| self[(i, i)].is_one())
    }

    /// Minimum entry valuation, `None` for the zero matrix.
    pub fn min_valuation(&self, p: u64) -> Option<i64> {
        rational::vp_min(self.data.iter(), p)
    }

    /// Entries in `Z_p`.
    pub fn is_integral(&self, p: u64) -> bool {
        self.data.iter().all(|x| vp(x, p).is_none_or(|v| v >= 0))
    }

    /// Integral with unit determinant, i.e. an element of `GL_n(Z_p)`.
    pub fn is_integral_unit(&self, p: u64) -> bool {
        self.is_integral(p) && vp(&self.det(), p) == Some(0)
    }

    pub fn is_special_linear(&self) -> bool {
        self.det().is_one()
    }

    /// Scales to an integer matrix with coprime entries (projectively equal).
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        integer_scaled(&self.data)
    }
}

/// Multiplies a vector of rationals by the lcm of denominators and divides by
/// the gcd of numerators.
pub fn integer_scaled(v: &[Rational]) -> Vec<BigInt> {
    use num_integer::Integer;
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

fn rank_of(a: &mut [Vec<Rational>]) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(piv, rank);
        for r in rank + 1..rows {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &a[rank][c];
            for k in c..cols {
                let t = &f * &a[rank][k];
                a[r][k] -= t;
            }
        }
        rank += 1;
    }
    rank
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", format_rational(&self[(i, j)]))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Sign-normalized display of a rational used in messages.
pub fn describe(x: &Rational) -> String {
    if x.is_negative() {
        format!("-{}", format_rational(&-x))
    } else {
        format_rational(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    #[test]
    fn parse_and_display() {
        let m = Matrix::parse(r#"[[0,1],[-1,"1/5"]]"#).unwrap();
        assert_eq!(m[(1, 1)], frac(1, 5));
        assert_eq!(m.to_string(), "[[0,1],[-1,1/5]]");
        assert_eq!(Matrix::parse(&m.to_string().replace("1/5", "\"1/5\"")).unwrap(), m);
        assert!(Matrix::parse("[[1,2],[3]]").is_err());
    }

    #[test]
    fn inverse_and_det() {
        let m = Matrix::from_i64(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        assert_eq!(m.det(), rat(18));
        assert_eq!(m.mul(&m.inverse().unwrap()), Matrix::identity(3));
        assert_eq!(m.adjugate(), m.inverse().unwrap().scale(&rat(18)));
    }

    #[test]
    fn char_poly_companion() {
        // x^2 - 5x + 6
        let m = Matrix::from_i64(&[&[0, -6], &[1, 5]]);
        assert_eq!(m.char_poly(), vec![rat(6), rat(-5), rat(1)]);
        let d = Matrix::from_i64(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        assert_eq!(d.char_poly(), vec![rat(-6), rat(11), rat(-6), rat(1)]);
    }

    #[test]
    fn ranks() {
        let m = Matrix::from_i64(&[&[1, 2, 3], &[2, 4, 6], &[0, 0, 1]]);
        assert_eq!(m.sub_rank(&[0, 1, 2], &[0, 1, 2]), 2);
        assert_eq!(m.sub_rank(&[0, 1], &[0, 1]), 1);
    }
}
