//! Iwasawa, Cartan and Bruhat decompositions over `Q_p`, and the spectral
//! valuation data (Newton polygon of the characteristic polynomial).
//!
//! The Borel subgroup is the upper-triangular one throughout. `K` is
//! `GL_n(Z_p)`; integral matrices with unit determinant are its elements.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::coxeter::WeylElement;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rational::{self, p_pow_rat, reduce_mod, vp, Rational};

/// `g = k * t * u` with `k` in `K`, `t = diag(p^{a_i})`, `u` upper unitriangular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IwasawaFactors {
    pub k: Matrix,
    pub t: Matrix,
    pub u: Matrix,
}

/// `g = k1 * a * k2` with `k1, k2` in `K` and `a = diag(p^{m_1}, ..., p^{m_n})`,
/// `m_1 <= ... <= m_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CartanFactors {
    pub k1: Matrix,
    pub a: Matrix,
    pub k2: Matrix,
    pub exponents: Vec<i64>,
}

fn pivot_valuation(x: &Rational, p: u64) -> i64 {
    vp(x, p).unwrap_or(i64::MAX)
}

/// Row reduction by integral row operations; the pivot of each column is the
/// entry of minimal valuation (lowest row index on ties).
pub fn iwasawa(g: &Matrix, p: u64) -> Result<IwasawaFactors> {
    let n = g.dim();
    let mut r = g.clone();
    let mut e = Matrix::identity(n);
    for c in 0..n {
        let piv = (c..n)
            .min_by_key(|&i| (pivot_valuation(&r[(i, c)], p), i))
            .expect("nonempty range");
        if r[(piv, c)].is_zero() {
            return Err(Error::DivisionByZero);
        }
        r.swap_rows(piv, c);
        e.swap_rows(piv, c);
        let pv = r[(c, c)].clone();
        for i in c + 1..n {
            if r[(i, c)].is_zero() {
                continue;
            }
            let f = &r[(i, c)] / &pv;
            for k in 0..n {
                let t = &f * &r[(c, k)];
                r[(i, k)] -= t;
                let t = &f * &e[(c, k)];
                e[(i, k)] -= t;
            }
        }
    }
    let mut units = Vec::with_capacity(n);
    let mut exps = Vec::with_capacity(n);
    for i in 0..n {
        let (v, u) = rational::unit_part(&r[(i, i)], p).expect("nonzero pivot");
        exps.push(v);
        units.push(u);
    }
    let k = e.inverse()?.mul(&Matrix::diag(&units));
    let t = Matrix::diag_p_powers(p, &exps);
    let d_inv: Vec<Rational> = (0..n).map(|i| r[(i, i)].recip()).collect();
    let u = Matrix::diag(&d_inv).mul(&r);
    Ok(IwasawaFactors { k, t, u })
}

/// Smith normal form over `Z_p` with full pivoting.
pub fn cartan(g: &Matrix, p: u64) -> Result<CartanFactors> {
    let n = g.dim();
    let mut a = g.clone();
    let mut left = Matrix::identity(n);
    let mut right = Matrix::identity(n);
    for c in 0..n {
        let (pr, pc) = (c..n)
            .flat_map(|i| (c..n).map(move |j| (i, j)))
            .min_by_key(|&(i, j)| (pivot_valuation(&a[(i, j)], p), i, j))
            .expect("nonempty");
        if a[(pr, pc)].is_zero() {
            return Err(Error::DivisionByZero);
        }
        a.swap_rows(pr, c);
        left.swap_rows(pr, c);
        a.swap_cols(pc, c);
        right.swap_cols(pc, c);
        let pv = a[(c, c)].clone();
        for i in c + 1..n {
            if a[(i, c)].is_zero() {
                continue;
            }
            let f = &a[(i, c)] / &pv;
            for k in 0..n {
                let t = &f * &a[(c, k)];
                a[(i, k)] -= t;
                let t = &f * &left[(c, k)];
                left[(i, k)] -= t;
            }
        }
        for j in c + 1..n {
            if a[(c, j)].is_zero() {
                continue;
            }
            let f = &a[(c, j)] / &pv;
            for k in 0..n {
                let t = &f * &a[(k, c)];
                a[(k, j)] -= t;
                let t = &f * &right[(k, c)];
                right[(k, j)] -= t;
            }
        }
    }
    let mut units = Vec::with_capacity(n);
    let mut exponents = Vec::with_capacity(n);
    for i in 0..n {
        let (v, u) = rational::unit_part(&a[(i, i)], p).expect("nonzero pivot");
        exponents.push(v);
        units.push(u);
    }
    debug_assert!(exponents.windows(2).all(|w| w[0] <= w[1]));
    Ok(CartanFactors {
        k1: left.inverse()?.mul(&Matrix::diag(&units)),
        a: Matrix::diag_p_powers(p, &exponents),
        k2: right.inverse()?,
        exponents,
    })
}

/// The `w` with `g` in `B w B`, read off from the ranks of the lower-left
/// submatrices (invariant under upper-triangular row and column operations).
pub fn bruhat_position(g: &Matrix) -> Result<WeylElement> {
    let n = g.dim();
    if g.det().is_zero() {
        return Err(Error::DivisionByZero);
    }
    // rank of rows i.., cols ..=j, with a zero border
    let mut r = vec![vec![0i64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            let rows: Vec<usize> = (i..n).collect();
            let cols: Vec<usize> = (0..=j).collect();
            r[i][j + 1] = g.sub_rank(&rows, &cols) as i64;
        }
    }
    let mut images = Vec::with_capacity(n);
    for j in 1..=n {
        let hits: Vec<usize> = (0..n)
            .filter(|&i| r[i][j] - r[i + 1][j] - r[i][j - 1] + r[i + 1][j - 1] == 1)
            .collect();
        if hits.len() != 1 {
            return Err(Error::RankAmbiguous {
                precision: 0,
                detail: format!("column {j} has pivot rows {hits:?}"),
            });
        }
        images.push(hits[0] + 1);
    }
    WeylElement::from_one_line(&images)
}

/// A segment of a Newton polygon: from `(start, v_start)` to `(end, v_end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonSegment {
    pub start: usize,
    pub end: usize,
    pub slope: Ratio<i64>,
}

/// Lower convex hull of the points `(i, v(c_i))` for nonzero coefficients.
pub fn newton_polygon(coeffs: &[Rational], p: u64) -> Vec<NewtonSegment> {
    let pts: Vec<(i64, i64)> = coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| vp(c, p).map(|v| (i as i64, v)))
        .collect();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point unless it lies strictly below the chord
            let cross = (x2 - x1) * (pt.1 - y1) - (y2 - y1) * (pt.0 - x1);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull.windows(2)
        .map(|w| NewtonSegment {
            start: w[0].0 as usize,
            end: w[1].0 as usize,
            slope: Ratio::new(w[1].1 - w[0].1, w[1].0 - w[0].0),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectralData {
    /// Eigenvalue valuations, ascending (largest norm first).
    #[serde(serialize_with = "ser_ratios")]
    pub valuations: Vec<Ratio<i64>>,
    pub regular: bool,
    pub hyperbolic: bool,
}

fn ser_ratios<S: serde::Serializer>(v: &[Ratio<i64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for r in v {
        seq.serialize_element(&r.to_string())?;
    }
    seq.end()
}

pub fn require_special_linear(g: &Matrix, field: &str) -> Result<()> {
    let det = g.det();
    if !det.is_one() {
        return Err(Error::NotSpecialLinear {
            n: g.dim(),
            field: field.to_string(),
            det: rational::format_rational(&det),
        });
    }
    Ok(())
}

/// Eigenvalue valuations from the Newton polygon of `det(xI - g)`.
pub fn spectral_valuations(g: &Matrix, p: u64) -> Result<SpectralData> {
    require_special_linear(g, "matrix")?;
    let mut valuations = Vec::with_capacity(g.dim());
    for seg in newton_polygon(&g.char_poly(), p) {
        for _ in seg.start..seg.end {
            valuations.push(-seg.slope);
        }
    }
    valuations.sort();
    let regular = valuations.windows(2).all(|w| w[0] != w[1]);
    let hyperbolic = valuations.iter().any(|v| !v.is_zero());
    Ok(SpectralData {
        valuations,
        regular,
        hyperbolic,
    })
}

/// `cartan(g^k).exponents / k`, an independent estimate of the spectral
/// valuations. The error is bounded by the conditioning of an eigenbasis over
/// `k`, so larger `k` tightens it at the cost of bigger exact entries.
pub fn limit_cartan_rate(g: &Matrix, p: u64, kmax: u32) -> Result<Vec<Ratio<i64>>> {
    require_special_linear(g, "matrix")?;
    if kmax == 0 {
        return Err(Error::parse("kmax", "must be positive"));
    }
    let c = cartan(&g.pow(kmax), p)?;
    Ok(c.exponents.iter().map(|&m| Ratio::new(m, kmax as i64)).collect())
}

/// Eigenvalues of a regular element, lifted by Hensel's lemma: returns
/// `(valuation, unit)` pairs ordered by increasing valuation, each eigenvalue
/// being `p^valuation * unit` with the unit correct modulo `p^digits`.
pub fn regular_eigenvalues(g: &Matrix, p: u64, digits: u32) -> Result<Vec<(i64, BigInt)>> {
    let coeffs = g.char_poly();
    let segs = newton_polygon(&coeffs, p);
    if segs.iter().any(|s| s.end - s.start != 1) {
        let data = spectral_valuations(g, p)?;
        return Err(Error::NotRegular(format!("{:?}", data.valuations)));
    }
    let modulus = rational::p_pow(p, digits);
    let mut out = Vec::with_capacity(segs.len());
    for seg in &segs {
        let r = -seg.slope.to_integer();
        let i = seg.start;
        let vi = vp(&coeffs[i], p).expect("hull vertex");
        let mu = vi + r * i as i64;
        // Q(y) = P(p^r y) / p^mu has integral coefficients
        let q: Vec<BigInt> = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| reduce_mod(&(c * p_pow_rat(p, r * j as i64 - mu)), p, digits))
            .collect::<Result<_>>()?;
        let pb = BigInt::from(p);
        let bi = &q[i];
        let bi1 = &q[i + 1];
        let inv = rational::mod_inverse(bi1, &pb).ok_or_else(|| Error::exhausted("Hensel pivot"))?;
        let mut y = num_integer::Integer::mod_floor(&(-(bi * inv)), &pb);
        let eval = |y: &BigInt| -> (BigInt, BigInt) {
            let mut val = BigInt::zero();
            let mut der = BigInt::zero();
            for (j, c) in q.iter().enumerate().rev() {
                der = num_integer::Integer::mod_floor(&(&der * y + &val), &modulus);
                val = num_integer::Integer::mod_floor(&(&val * y + c), &modulus);
                let _ = j;
            }
            (val, der)
        };
        let mut converged = false;
        for _ in 0..(2 * digits + 8) {
            let (val, der) = eval(&y);
            if val.is_zero() {
                converged = true;
                break;
            }
            let dinv = rational::mod_inverse(&der, &modulus)
                .ok_or_else(|| Error::exhausted("Hensel derivative is not a unit"))?;
            y = num_integer::Integer::mod_floor(&(&y - val * dinv), &modulus);
        }
        if !converged {
            return Err(Error::exhausted("Hensel lifting did not converge"));
        }
        out.push((r, y));
    }
    out.sort_by_key(|(r, _)| *r);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, rat};

    const P: u64 = 5;

    fn check_iwasawa(g: &Matrix) -> IwasawaFactors {
        let f = iwasawa(g, P).unwrap();
        assert_eq!(f.k.mul(&f.t).mul(&f.u), *g);
        assert!(f.k.is_integral_unit(P));
        assert!(f.t.is_diagonal());
        assert!(f.u.is_unit_upper_triangular());
        f
    }

    #[test]
    fn iwasawa_examples() {
        let g = Matrix::diag_p_powers(P, &[1, -1]);
        let f = check_iwasawa(&g);
        assert_eq!((f.k, f.t, f.u), (Matrix::identity(2), g.clone(), Matrix::identity(2)));

        let g = Matrix::parse(r#"[[1,"2/3",7],[0,1,"1/5"],[0,0,1]]"#).unwrap();
        let f = check_iwasawa(&g);
        assert_eq!((f.k, f.t), (Matrix::identity(3), Matrix::identity(3)));

        let g = Matrix::parse(r#"[[1,0],["1/5",1]]"#).unwrap();
        let f = check_iwasawa(&g);
        assert_eq!(f.t, Matrix::diag_p_powers(P, &[-1, 1]));
    }

    #[test]
    fn cartan_examples() {
        let swap = Matrix::from_i64(&[&[0, 1], &[-1, 0]]);
        let g = Matrix::diag_p_powers(P, &[2, -2]).mul(&swap);
        let c = cartan(&g, P).unwrap();
        assert_eq!(c.exponents, vec![-2, 2]);
        assert_eq!(c.k1.mul(&c.a).mul(&c.k2), g);

        let g = Matrix::from_i64(&[&[1, 1], &[0, 1]]).mul(&Matrix::diag_p_powers(P, &[1, -1]));
        let c = cartan(&g, P).unwrap();
        assert_eq!(c.exponents, vec![-1, 1]);
        assert!(c.k1.is_integral_unit(P) && c.k2.is_integral_unit(P));
    }

    #[test]
    fn bruhat_examples() {
        let b = Matrix::parse(r#"[[5,1,"1/3"],[0,"1/5",2],[0,0,1]]"#).unwrap();
        assert!(bruhat_position(&b).unwrap().is_identity());
        let anti = Matrix::from_i64(&[&[0, 0, 1], &[0, -1, 0], &[1, 0, 0]]);
        assert_eq!(bruhat_position(&anti).unwrap(), crate::coxeter::longest_element(3));
        let g = Matrix::from_i64(&[&[1, 0], &[1, 1]]);
        assert_eq!(bruhat_position(&g).unwrap().word_string(), "r1");
    }

    #[test]
    fn spectral_examples() {
        let d = Matrix::diag_p_powers(P, &[-1, 0, 1]);
        let s = spectral_valuations(&d, P).unwrap();
        assert_eq!(s.valuations, vec![Ratio::from(-1), Ratio::from(0), Ratio::from(1)]);
        assert!(s.regular && s.hyperbolic);

        let k = Matrix::from_i64(&[&[2, 1, 0], &[1, 1, 0], &[0, 0, 1]]);
        let s = spectral_valuations(&k, P).unwrap();
        assert_eq!(s.valuations, vec![Ratio::from(0); 3]);
        assert!(!s.hyperbolic);

        // companion matrix of x^2 - (1/p + p) x + 1
        let t = frac(1, 5) + rat(5);
        let comp = Matrix::from_rows(vec![vec![rat(0), rat(-1)], vec![rat(1), t]]).unwrap();
        let s = spectral_valuations(&comp, P).unwrap();
        assert_eq!(s.valuations, vec![Ratio::from(-1), Ratio::from(1)]);
    }

    #[test]
    fn spectral_requires_sl() {
        let g = Matrix::diag_p_powers(P, &[1, 0]);
        assert!(matches!(spectral_valuations(&g, P), Err(Error::NotSpecialLinear { .. })));
    }

    #[test]
    fn limit_rate_examples() {
        let g = Matrix::diag_p_powers(P, &[1, -1]);
        assert_eq!(limit_cartan_rate(&g, P, 5).unwrap(), vec![Ratio::from(-1), Ratio::from(1)]);
        let rot = Matrix::from_i64(&[&[0, 1], &[-1, 0]]);
        assert_eq!(limit_cartan_rate(&rot, P, 8).unwrap(), vec![Ratio::from(0); 2]);
    }

    #[test]
    fn hensel_diagonal() {
        let g = Matrix::diag(&[frac(3, 5), rat(1), frac(5, 3)]);
        let ev = regular_eigenvalues(&g, P, 6).unwrap();
        assert_eq!(ev[0].0, -1);
        assert_eq!(ev[0].1, reduce_mod(&rat(3), P, 6).unwrap());
        assert_eq!(ev[2].1, reduce_mod(&frac(1, 3), P, 6).unwrap());
        assert!(regular_eigenvalues(&Matrix::identity(2), P, 4).is_err());
    }
}
