//! Full flags of `Q_p^2` (points of `P^1`) and `Q_p^3` (line inside plane) at
//! finite precision `N`, that is, points of the finite quotient `G/B` mod `K_N`.
//!
//! A line is a primitive vector reduced mod `p^N` with its first unit
//! coordinate scaled to 1. A plane is stored through its primitive normal
//! covector in the same canonical form.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::coxeter::{enumerate_group, WeylElement};
use crate::decomp::{regular_eigenvalues, spectral_valuations};
use crate::error::{Error, Result};
use crate::matrix::{integer_scaled, Matrix};
use crate::rational::{self, mod_inverse, p_pow, p_pow_rat, reduce_mod, vp_min, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flag {
    p: u64,
    precision: u32,
    line: Vec<BigInt>,
    covector: Option<Vec<BigInt>>,
}

/// Canonical primitive representative of the class of `v` modulo `p^k`.
pub fn canonical_vector(v: &[Rational], p: u64, k: u32) -> Result<Vec<BigInt>> {
    let vmin = vp_min(v, p).ok_or_else(|| Error::exhausted("zero vector"))?;
    let scale = p_pow_rat(p, -vmin);
    let raw: Vec<BigInt> = v
        .iter()
        .map(|x| reduce_mod(&(x * &scale), p, k))
        .collect::<Result<_>>()?;
    canonical_residues(raw, p, k)
}

fn canonical_residues(raw: Vec<BigInt>, p: u64, k: u32) -> Result<Vec<BigInt>> {
    let m = p_pow(p, k);
    let pb = BigInt::from(p);
    let lead = raw
        .iter()
        .position(|x| !x.is_multiple_of(&pb))
        .ok_or_else(|| Error::exhausted("vector is not primitive"))?;
    let inv = mod_inverse(&raw[lead], &m).expect("unit");
    Ok(raw.iter().map(|x| (x * &inv).mod_floor(&m)).collect())
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_rat(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cross(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn to_rat(v: &[BigInt]) -> Vec<Rational> {
    v.iter().map(|x| Rational::from_integer(x.clone())).collect()
}

fn check_dims(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("flags need n = 2 or 3, got {n}")))
    }
}

impl Flag {
    /// Builds a flag from (not necessarily primitive) rational
    /// representatives; `covector` is required exactly when `n = 3`.
    pub fn new(p: u64, precision: u32, line: &[Rational], covector: Option<&[Rational]>) -> Result<Self> {
        if precision == 0 {
            return Err(Error::exhausted("flag precision is zero"));
        }
        check_dims(line.len())?;
        let n = line.len();
        let l = canonical_vector(line, p, precision)?;
        let c = match (n, covector) {
            (2, None) => None,
            (3, Some(c)) if c.len() == 3 => Some(canonical_vector(c, p, precision)?),
            _ => return Err(Error::Dimension("n = 3 flags need a covector".into())),
        };
        let f = Flag {
            p,
            precision,
            line: l,
            covector: c,
        };
        if let Some(c) = &f.covector {
            if !dot(c, &f.line).is_multiple_of(&p_pow(p, precision)) {
                return Err(Error::parse("flag", "plane does not contain line"));
            }
        }
        Ok(f)
    }

    /// Wraps residues already in canonical form.
    pub(crate) fn from_canonical(p: u64, precision: u32, line: Vec<BigInt>, covector: Option<Vec<BigInt>>) -> Self {
        Flag {
            p,
            precision,
            line,
            covector,
        }
    }

    /// The coordinate flag `w b0`: line `e_{w(1)}`, plane `e_{w(1)}, e_{w(2)}`.
    pub fn coordinate(w: &WeylElement, p: u64, precision: u32) -> Result<Self> {
        let n = w.rank();
        let basis: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| rational::rat((i == j) as i64)).collect())
            .collect();
        Self::from_basis(&basis, w, p, precision)
    }

    /// The standard flag `b0`.
    pub fn standard(n: usize, p: u64, precision: u32) -> Result<Self> {
        Self::coordinate(&WeylElement::identity(n), p, precision)
    }

    /// Coordinate flag of a basis `basis[0], basis[1], ...` permuted by `w`.
    pub fn from_basis(basis: &[Vec<Rational>], w: &WeylElement, p: u64, precision: u32) -> Result<Self> {
        let n = basis.len();
        check_dims(n)?;
        let l = &basis[w.apply(0)];
        if n == 2 {
            Flag::new(p, precision, l, None)
        } else {
            let c = cross(l, &basis[w.apply(1)]);
            Flag::new(p, precision, l, Some(&c))
        }
    }

    /// Flag of an invertible frame: first column and the span of the first two.
    pub fn from_frame(k: &Matrix, p: u64, precision: u32) -> Result<Self> {
        let l = k.col(0);
        if k.dim() == 2 {
            Flag::new(p, precision, &l, None)
        } else {
            let c = cross(&l, &k.col(1));
            Flag::new(p, precision, &l, Some(&c))
        }
    }

    /// Parses `"[x0:x1]"` or `"[x0:x1:x2|c0:c1:c2]"`, entries rational.
    pub fn parse(p: u64, precision: u32, s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::parse("flag", format!("expected [..] in {t:?}")))?;
        let parse_vec = |part: &str| -> Result<Vec<Rational>> {
            part.split(':').map(rational::parse_rational).collect()
        };
        match inner.split_once('|') {
            None => Flag::new(p, precision, &parse_vec(inner)?, None),
            Some((l, c)) => Flag::new(p, precision, &parse_vec(l)?, Some(&parse_vec(c)?)),
        }
    }

    pub fn n(&self) -> usize {
        self.line.len()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn line(&self) -> &[BigInt] {
        &self.line
    }

    pub fn covector(&self) -> Option<&[BigInt]> {
        self.covector.as_deref()
    }

    /// Reduction to a coarser level.
    pub fn truncate(&self, precision: u32) -> Result<Flag> {
        if precision > self.precision {
            return Err(Error::exhausted(format!(
                "cannot refine a level-{} flag to level {precision}",
                self.precision
            )));
        }
        if precision == 0 {
            return Err(Error::exhausted("flag precision is zero"));
        }
        let m = p_pow(self.p, precision);
        let red = |v: &[BigInt]| v.iter().map(|x| x.mod_floor(&m)).collect::<Vec<_>>();
        Ok(Flag {
            p: self.p,
            precision,
            line: red(&self.line),
            covector: self.covector.as_deref().map(red),
        })
    }

    /// Integral representatives with exact incidence `c . v = 0`.
    pub fn exact_lift(&self) -> (Vec<Rational>, Option<Vec<Rational>>) {
        let mut v = self.line.clone();
        if let Some(c) = &self.covector {
            let j = c.iter().position(|x| x.is_one()).expect("canonical covector");
            let s = dot(c, &v);
            v[j] -= s;
        }
        (to_rat(&v), self.covector.as_deref().map(to_rat))
    }

    /// An integral frame `k` with unit determinant and `k b0 = self`.
    pub fn frame(&self) -> Matrix {
        let (v, c) = self.exact_lift();
        let n = self.n();
        let unit = |x: &Rational| rational::vp(x, self.p) == Some(0);
        let e = |i: usize| -> Vec<Rational> { (0..n).map(|j| rational::rat((i == j) as i64)).collect() };
        let cols: Vec<Vec<Rational>> = match c {
            None => {
                if unit(&v[0]) {
                    vec![v.clone(), e(1)]
                } else {
                    vec![v.clone(), e(0)]
                }
            }
            Some(c) => {
                let j = c.iter().position(|x| x.is_one()).expect("canonical covector");
                let others: Vec<usize> = (0..3).filter(|&m| m != j).collect();
                let f = |m: usize| -> Vec<Rational> {
                    let mut x = e(m);
                    x[j] = -c[m].clone();
                    x
                };
                let u = if unit(&v[others[0]]) { f(others[1]) } else { f(others[0]) };
                vec![v.clone(), u, e(j)]
            }
        };
        let rows: Vec<Vec<Rational>> = (0..n).map(|i| cols.iter().map(|col| col[i].clone()).collect()).collect();
        Matrix::from_rows(rows).expect("square")
    }

    /// `"[1:7]"` or `"[1:0:3|0:0:1]"`.
    pub fn label(&self) -> String {
        let join = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(":");
        match &self.covector {
            None => format!("[{}]", join(&self.line)),
            Some(c) => format!("[{}|{}]", join(&self.line), join(c)),
        }
    }

    /// `g` applied to the flag. The output precision is the input precision
    /// minus the valuation drop caused by renormalizing the image.
    pub fn act(&self, g: &Matrix) -> Result<Flag> {
        FlagAction::new(g)?.apply(self)
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Flag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// A matrix prepared for repeated action on flags.
#[derive(Debug, Clone)]
pub struct FlagAction {
    g: Matrix,
    ginv: Matrix,
    vmin_g: i64,
    vmin_ginv: i64,
    p: Option<u64>,
}

impl FlagAction {
    pub fn new(g: &Matrix) -> Result<Self> {
        check_dims(g.dim())?;
        let ginv = g.inverse()?;
        Ok(FlagAction {
            g: g.clone(),
            ginv,
            vmin_g: 0,
            vmin_ginv: 0,
            p: None,
        })
    }

    fn valuations(&mut self, p: u64) {
        if self.p != Some(p) {
            self.vmin_g = self.g.min_valuation(p).expect("invertible");
            self.vmin_ginv = self.ginv.min_valuation(p).expect("invertible");
            self.p = Some(p);
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }

    pub fn apply(&self, f: &Flag) -> Result<Flag> {
        let mut me = self.clone();
        me.valuations(f.p);
        me.apply_prepared(f)
    }

    fn apply_prepared(&self, f: &Flag) -> Result<Flag> {
        if self.g.dim() != f.n() {
            return Err(Error::Dimension(format!("{0}x{0} matrix on a flag in dimension {1}", self.g.dim(), f.n())));
        }
        let p = f.p;
        let n0 = f.precision as i64;
        let (v, c) = f.exact_lift();
        let gv = self.g.mul_vec(&v);
        let a = vp_min(&gv, p).expect("invertible");
        let mut level = n0 + self.vmin_g - a;
        let gc = c.map(|c| {
            let gc: Vec<Rational> = (0..3)
                .map(|j| (0..3).map(|i| &c[i] * &self.ginv[(i, j)]).sum())
                .collect();
            let b = vp_min(&gc, p).expect("invertible");
            level = level.min(n0 + self.vmin_ginv - b);
            gc
        });
        if level <= 0 {
            return Err(Error::exhausted(format!(
                "action of {} consumed all {} digits of {}",
                self.g, f.precision, f
            )));
        }
        Flag::new(p, level as u32, &gv, gc.as_deref())
    }
}

/// Relative position `w` of two flags: `x b0, y b0` are in position `w` when
/// `x^-1 y` lies in `B w B`. Incidences are decided modulo `p^N` with `N` the
/// smaller of the two precisions.
pub fn relative_position(f1: &Flag, f2: &Flag) -> Result<WeylElement> {
    if f1.n() != f2.n() || f1.p != f2.p {
        return Err(Error::ContextMismatch {
            left: format!("{}", f1),
            right: format!("{}", f2),
        });
    }
    let level = f1.precision.min(f2.precision);
    let a = f1.truncate(level)?;
    let b = f2.truncate(level)?;
    let n = a.n();
    let m = p_pow(a.p, level);
    let zero = |x: BigInt| x.is_multiple_of(&m);
    // d[i][j] = dim(V_i cap W_j)
    let mut d = vec![vec![0i64; n + 1]; n + 1];
    for i in 0..=n {
        d[i][n] = i as i64;
        d[n][i] = i as i64;
    }
    d[1][1] = (a.line == b.line) as i64;
    if n == 3 {
        let (ca, cb) = (a.covector.as_ref().unwrap(), b.covector.as_ref().unwrap());
        d[1][2] = zero(dot(cb, &a.line)) as i64;
        d[2][1] = zero(dot(ca, &b.line)) as i64;
        d[2][2] = if ca == cb { 2 } else { 1 };
    }
    let mut images = Vec::with_capacity(n);
    for j in 1..=n {
        let hits: Vec<usize> = (1..=n)
            .filter(|&i| d[i][j] - d[i - 1][j] - d[i][j - 1] + d[i - 1][j - 1] == 1)
            .collect();
        if hits.len() != 1 {
            return Err(Error::RankAmbiguous {
                precision: level,
                detail: format!("{a} and {b} have incidence table {d:?}"),
            });
        }
        images.push(hits[0]);
    }
    WeylElement::from_one_line(&images).map_err(|_| Error::RankAmbiguous {
        precision: level,
        detail: format!("{a} and {b} have incidence table {d:?}"),
    })
}

/// Every flag at level `N`, in canonical order. There are
/// `(p^N + p^(N-1))` of them for `n = 2` and `(p^2+p+1)(p+1) p^(3(N-1))` for `n = 3`.
pub fn all_flags(n: usize, p: u64, precision: u32) -> Result<Vec<Flag>> {
    check_dims(n)?;
    if precision == 0 {
        return Err(Error::exhausted("flag precision is zero"));
    }
    let lines = all_lines(n, p, precision);
    let mut out = Vec::new();
    if n == 2 {
        for l in lines {
            out.push(Flag::new(p, precision, &to_rat(&l), None)?);
        }
    } else {
        let pl = all_lines(2, p, precision);
        for l in lines {
            let v = to_rat(&l);
            let j = l.iter().position(|x| x.is_one()).expect("canonical");
            let others: Vec<usize> = (0..3).filter(|&m| m != j).collect();
            for ab in &pl {
                let mut u = vec![rational::rat(0); 3];
                u[others[0]] = Rational::from_integer(ab[0].clone());
                u[others[1]] = Rational::from_integer(ab[1].clone());
                out.push(Flag::new(p, precision, &v, Some(&cross(&v, &u)))?);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn all_lines(n: usize, p: u64, k: u32) -> Vec<Vec<BigInt>> {
    let m = p.pow(k);
    let mut out = Vec::new();
    for lead in 0..n {
        // coordinates before `lead` divisible by p, `lead` equal to 1
        let mut cur = vec![0u64; n];
        cur[lead] = 1;
        let free: Vec<usize> = (0..n).filter(|&i| i != lead).collect();
        let ranges: Vec<u64> = free.iter().map(|&i| if i < lead { m / p } else { m }).collect();
        let total: u64 = ranges.iter().product();
        for mut idx in 0..total {
            for (t, &i) in free.iter().enumerate() {
                let r = idx % ranges[t];
                idx /= ranges[t];
                cur[i] = if i < lead { r * p } else { r };
            }
            out.push(cur.iter().map(|&x| BigInt::from(x)).collect());
        }
    }
    out
}

/// Counts of flags by relative position to `reference`, keyed by reduced word.
/// Exhaustive when `sample` is `None`, otherwise over `sample.0` random flags
/// drawn with `rng`. Pairs whose incidences mod `p^N` match no permutation
/// are counted under `"ambiguous"` (only present when nonzero).
pub fn open_cell_census<R: Rng>(
    reference: &Flag,
    sample: Option<(usize, &mut R)>,
) -> Result<BTreeMap<String, usize>> {
    let (n, p, level) = (reference.n(), reference.p, reference.precision);
    let mut counts: BTreeMap<String, usize> = enumerate_group(n).iter().map(|w| (w.word_string(), 0)).collect();
    let mut tally = |f: &Flag| -> Result<()> {
        match relative_position(reference, f) {
            Ok(w) => *counts.get_mut(&w.word_string()).expect("group element") += 1,
            Err(Error::RankAmbiguous { .. }) => *counts.entry("ambiguous".to_string()).or_insert(0) += 1,
            Err(e) => return Err(e),
        }
        Ok(())
    };
    match sample {
        None => {
            for f in all_flags(n, p, level)? {
                tally(&f)?;
            }
        }
        Some((count, rng)) => {
            for _ in 0..count {
                tally(&random_flag(rng, n, p, level)?)?;
            }
        }
    }
    Ok(counts)
}

/// A random flag at level `N` (an integral unimodular frame of random shape).
pub fn random_flag<R: Rng>(rng: &mut R, n: usize, p: u64, precision: u32) -> Result<Flag> {
    let k = crate::sample::random_integral_sl(rng, n, 6 * n);
    let l = crate::sample::random_lower_unipotent(rng, p, n, false);
    let mut u = crate::sample::random_upper(rng, p, n, (0, 0));
    for i in 0..n {
        u[(i, i)] = rational::rat(1);
    }
    Flag::from_frame(&u.mul(&k).mul(&l), p, precision)
}

/// An eigenbasis of a regular element, ordered by increasing eigenvalue
/// valuation, with eigenvalues correct to `digits` digits.
fn eigenbasis(h: &Matrix, p: u64, digits: u32) -> Result<Vec<Vec<Rational>>> {
    let n = h.dim();
    let mut basis = Vec::with_capacity(n);
    for (r, y) in regular_eigenvalues(h, p, digits)? {
        let lambda = Rational::from_integer(y) * p_pow_rat(p, r);
        let shifted = h.sub(&Matrix::identity(n).scale(&lambda));
        let adj = shifted.adjugate();
        let col = (0..n)
            .filter_map(|j| vp_min(&adj.col(j), p).map(|v| (v, j)))
            .min()
            .map(|(_, j)| adj.col(j))
            .ok_or_else(|| Error::exhausted("eigenvector vanished"))?;
        basis.push(col);
    }
    Ok(basis)
}

/// The `|W|` flags fixed by a regular element `h`, as `(w, b(h,w))` in
/// length-lex order of `w`. `b(h,1)` is the attracting flag.
pub fn fixed_flags(h: &Matrix, p: u64, precision: u32) -> Result<Vec<(WeylElement, Flag)>> {
    let n = h.dim();
    check_dims(n)?;
    let sd = spectral_valuations(h, p)?;
    if !sd.regular {
        let v: Vec<String> = sd.valuations.iter().map(|r| r.to_string()).collect();
        return Err(Error::NotRegular(v.join(", ")));
    }
    let group = enumerate_group(n);
    let at = |digits: u32| -> Result<Vec<(WeylElement, Flag)>> {
        let basis = eigenbasis(h, p, digits)?;
        group
            .iter()
            .map(|w| Ok((w.clone(), Flag::from_basis(&basis, w, p, precision)?)))
            .collect()
    };
    let mut digits = precision + 16;
    let mut prev = at(digits)?;
    loop {
        digits += 16;
        let next = at(digits)?;
        if next == prev {
            return Ok(next);
        }
        if digits > precision + 512 {
            return Err(Error::exhausted("eigenvectors did not stabilize"));
        }
        prev = next;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Iteration {
    pub limit: Flag,
    /// First step from which the level-`N` representative stayed constant;
    /// `None` when `kmax` was reached first.
    pub stabilized_at: Option<usize>,
    pub trajectory: Vec<Flag>,
}

/// Iterates `h` on an exact lift of `f`, reducing to level `level` after each
/// step, until the reduction stays the same for two consecutive steps.
pub fn iterate_to_limit(h: &Matrix, f: &Flag, level: u32, kmax: usize) -> Result<Iteration> {
    if h.dim() != f.n() {
        return Err(Error::Dimension(format!("{0}x{0} matrix on a flag in dimension {1}", h.dim(), f.n())));
    }
    let p = f.p;
    let hinv = h.inverse()?;
    let (mut v, mut c) = f.exact_lift();
    let reduce = |v: &[Rational], c: &Option<Vec<Rational>>| Flag::new(p, level, v, c.as_deref());
    let mut trajectory = vec![reduce(&v, &c)?];
    let mut run_start = 0usize;
    for k in 1..=kmax {
        v = to_rat(&integer_scaled(&h.mul_vec(&v)));
        c = c.map(|c| {
            let gc: Vec<Rational> = (0..c.len())
                .map(|j| (0..c.len()).map(|i| &c[i] * &hinv[(i, j)]).sum())
                .collect();
            to_rat(&integer_scaled(&gc))
        });
        let rep = reduce(&v, &c)?;
        if rep != trajectory[k - 1] {
            run_start = k;
        }
        trajectory.push(rep);
        if k - run_start >= 2 {
            return Ok(Iteration {
                limit: trajectory[k].clone(),
                stabilized_at: Some(run_start),
                trajectory,
            });
        }
    }
    Ok(Iteration {
        limit: trajectory.last().expect("nonempty").clone(),
        stabilized_at: None,
        trajectory,
    })
}

/// Exact incidence check `c . v = 0` on rational representatives.
pub fn incident(v: &[Rational], c: &[Rational]) -> bool {
    dot_rat(v, c).is_zero()
}
