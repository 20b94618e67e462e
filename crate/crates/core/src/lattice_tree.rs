//! The Bruhat-Tits tree of `SL_2(Q_p)`: homothety classes of `Z_p`-lattices
//! in `Q_p^2`.
//!
//! A vertex is stored in column-Hermite form: the lattice spanned by the
//! columns of `[[p^a, b], [0, p^d]]` with `0 <= b < p^a`, scaled so the lattice
//! lies in `Z_p^2` but not in `p Z_p^2`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::decomp::{cartan, require_special_linear};
use crate::error::{Error, Result};
use crate::flag::{fixed_flags, Flag};
use crate::matrix::Matrix;
use crate::rational::{self, p_pow_rat, reduce_mod, unit_part, vp, vp_min, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    p: u64,
    a: u32,
    d: u32,
    b: BigInt,
}

impl TreeVertex {
    /// The class of the standard lattice `Z_p^2`.
    pub fn base(p: u64) -> Self {
        TreeVertex {
            p,
            a: 0,
            d: 0,
            b: BigInt::zero(),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn triple(&self) -> (u32, u32, &BigInt) {
        (self.a, self.d, &self.b)
    }

    /// `[[p^a, b], [0, p^d]]`.
    pub fn matrix(&self) -> Matrix {
        Matrix::from_rows(vec![
            vec![p_pow_rat(self.p, self.a as i64), Rational::from_integer(self.b.clone())],
            vec![rational::rat(0), p_pow_rat(self.p, self.d as i64)],
        ])
        .expect("square")
    }

    /// Parses `"(a, d, b)"`; the triple must already be canonical.
    pub fn parse(p: u64, s: &str) -> Result<Self> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::parse("vertex", format!("expected (a, d, b) in {t:?}")))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::parse("vertex", format!("expected three entries in {t:?}")));
        }
        let bad = |m: &str| Error::parse("vertex", m.to_string());
        let a: u32 = parts[0].parse().map_err(|_| bad("bad exponent a"))?;
        let d: u32 = parts[1].parse().map_err(|_| bad("bad exponent d"))?;
        let b: BigInt = parts[2].parse().map_err(|_| bad("bad entry b"))?;
        let v = vertex_from_matrix(
            &Matrix::from_rows(vec![
                vec![p_pow_rat(p, a as i64), Rational::from_integer(b.clone())],
                vec![rational::rat(0), p_pow_rat(p, d as i64)],
            ])?,
            p,
        )?;
        if (v.a, v.d, &v.b) != (a, d, &b) {
            return Err(bad("triple is not in canonical form"));
        }
        Ok(v)
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.d, self.b)
    }
}

impl Serialize for TreeVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Canonical vertex of the lattice spanned by the given column vectors.
pub fn vertex_from_columns(cols: &[[Rational; 2]], p: u64) -> Result<TreeVertex> {
    let mut cols: Vec<[Rational; 2]> = cols.to_vec();
    let piv = (0..cols.len())
        .filter_map(|j| vp(&cols[j][1], p).map(|v| (v, j)))
        .min()
        .map(|(_, j)| j)
        .ok_or(Error::DivisionByZero)?;
    let pivot = cols.swap_remove(piv);
    for c in cols.iter_mut() {
        if !c[1].is_zero() {
            let f = &c[1] / &pivot[1];
            c[0] -= &f * &pivot[0];
            c[1] = rational::rat(0);
        }
    }
    let top = vp_min(cols.iter().map(|c| &c[0]), p).ok_or(Error::DivisionByZero)?;
    let (d_raw, u) = unit_part(&pivot[1], p).expect("nonzero pivot");
    let y = &pivot[0] / &u;
    let mut s = top.min(d_raw);
    if let Some(vy) = vp(&y, p) {
        s = s.min(vy);
    }
    let a = (top - s) as u32;
    let d = (d_raw - s) as u32;
    let b = reduce_mod(&(y * p_pow_rat(p, -s)), p, a)?;
    Ok(TreeVertex { p, a, d, b })
}

/// The vertex `g . base`, the class of the lattice spanned by the columns of `g`.
pub fn vertex_from_matrix(g: &Matrix, p: u64) -> Result<TreeVertex> {
    if g.dim() != 2 {
        return Err(Error::Dimension(format!("tree vertices need 2x2 matrices, got {}", g.dim())));
    }
    if g.det().is_zero() {
        return Err(Error::DivisionByZero);
    }
    let cols = [[g[(0, 0)].clone(), g[(1, 0)].clone()], [g[(0, 1)].clone(), g[(1, 1)].clone()]];
    vertex_from_columns(&cols, p)
}

/// `g . v`.
pub fn act(g: &Matrix, v: &TreeVertex) -> Result<TreeVertex> {
    vertex_from_matrix(&g.mul(&v.matrix()), v.p)
}

/// Difference of the elementary divisor exponents of `M_u^-1 M_v`.
pub fn distance(u: &TreeVertex, v: &TreeVertex) -> Result<u64> {
    if u.p != v.p {
        return Err(Error::ContextMismatch {
            left: format!("p = {}", u.p),
            right: format!("p = {}", v.p),
        });
    }
    let m = u.matrix().inverse()?.mul(&v.matrix());
    let c = cartan(&m, u.p)?;
    Ok((c.exponents[1] - c.exponents[0]) as u64)
}

/// The `p + 1` vertices at distance one: index-`p` sublattices, in the order
/// `M diag-shear(x)` for `x = 0..p-1` followed by `M diag(1, p)`.
pub fn neighbors(v: &TreeVertex) -> Result<Vec<TreeVertex>> {
    let p = v.p;
    let m = v.matrix();
    let mut out = Vec::with_capacity(p as usize + 1);
    for x in 0..p {
        let s = Matrix::from_i64(&[&[p as i64, x as i64], &[0, 1]]);
        out.push(vertex_from_matrix(&m.mul(&s), p)?);
    }
    out.push(vertex_from_matrix(&m.mul(&Matrix::diag_p_powers(p, &[0, 1])), p)?);
    Ok(out)
}

/// The vertex at distance `t` from `u` on the geodesic `[u, v]`.
pub fn geodesic_point(u: &TreeVertex, v: &TreeVertex, t: u64) -> Result<TreeVertex> {
    let p = u.p;
    let mu = u.matrix();
    let rel = mu.inverse()?.mul(&v.matrix());
    // scale the relative lattice into Z_p^2 but not p Z_p^2
    let s = rel.min_valuation(p).expect("invertible");
    let rel = rel.scale(&p_pow_rat(p, -s));
    let pt = p_pow_rat(p, t as i64);
    let z = rational::rat(0);
    let cols = [
        [rel[(0, 0)].clone(), rel[(1, 0)].clone()],
        [rel[(0, 1)].clone(), rel[(1, 1)].clone()],
        [pt.clone(), z.clone()],
        [z, pt],
    ];
    let w = vertex_from_columns(&cols, p)?;
    act(&mu, &w)
}

/// The vertices of `[u, v]` in order.
pub fn geodesic(u: &TreeVertex, v: &TreeVertex) -> Result<Vec<TreeVertex>> {
    let d = distance(u, v)?;
    (0..=d).map(|t| geodesic_point(u, v, t)).collect()
}

/// All vertices within `radius` of `center`, sorted.
pub fn ball(center: &TreeVertex, radius: u64) -> Result<Vec<TreeVertex>> {
    let mut seen: BTreeSet<TreeVertex> = BTreeSet::new();
    seen.insert(center.clone());
    let mut queue = VecDeque::from([(center.clone(), 0u64)]);
    while let Some((v, r)) = queue.pop_front() {
        if r == radius {
            continue;
        }
        for w in neighbors(&v)? {
            if seen.insert(w.clone()) {
                queue.push_back((w, r + 1));
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// DOT rendering of a ball, nodes in canonical order.
pub fn ball_dot(center: &TreeVertex, radius: u64) -> Result<String> {
    let vs = ball(center, radius)?;
    let mut out = String::from("graph ball {\n");
    for v in &vs {
        out.push_str(&format!("  \"{v}\";\n"));
    }
    let set: BTreeSet<&TreeVertex> = vs.iter().collect();
    for v in &vs {
        for w in neighbors(v)? {
            if w > *v && set.contains(&w) {
                out.push_str(&format!("  \"{v}\" -- \"{w}\";\n"));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Isometry {
    Elliptic { fixed_vertex: TreeVertex },
    Hyperbolic { translation_length: u64, axis_vertex: TreeVertex },
}

impl Isometry {
    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, Isometry::Hyperbolic { .. })
    }
}

/// Elliptic iff `v(tr g) >= 0`, with the midpoint of `[v0, g v0]` as fixed
/// vertex; otherwise hyperbolic of translation length `-2 v(tr g)` with the
/// projection of `v0` onto the axis.
pub fn classify_isometry(g: &Matrix, p: u64) -> Result<Isometry> {
    if g.dim() != 2 {
        return Err(Error::Dimension(format!("tree isometries need 2x2 matrices, got {}", g.dim())));
    }
    require_special_linear(g, "matrix")?;
    let v0 = TreeVertex::base(p);
    let gv0 = act(g, &v0)?;
    let d = distance(&v0, &gv0)?;
    match vp(&g.trace(), p) {
        Some(t) if t < 0 => {
            let l = (-2 * t) as u64;
            if d < l || !(d - l).is_multiple_of(2) {
                return Err(Error::exhausted(format!(
                    "displacement {d} inconsistent with translation length {l}"
                )));
            }
            Ok(Isometry::Hyperbolic {
                translation_length: l,
                axis_vertex: geodesic_point(&v0, &gv0, (d - l) / 2)?,
            })
        }
        _ => Ok(Isometry::Elliptic {
            fixed_vertex: geodesic_point(&v0, &gv0, d / 2)?,
        }),
    }
}

/// A geodesic ray from `base` toward the end given by a vector of `Q_p^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRay {
    base: TreeVertex,
    end: [Rational; 2],
}

impl TreeRay {
    pub fn new(base: TreeVertex, end: [Rational; 2]) -> Result<Self> {
        if end.iter().all(Zero::is_zero) {
            return Err(Error::InvalidRay("end vector is zero".into()));
        }
        Ok(TreeRay { base, end })
    }

    /// The ray from `base` toward the point of `P^1` represented by `flag`.
    pub fn from_flag(base: TreeVertex, flag: &Flag) -> Result<Self> {
        if flag.n() != 2 {
            return Err(Error::Dimension("ends are points of P^1".into()));
        }
        let v = flag.line();
        Self::new(base, [Rational::from_integer(v[0].clone()), Rational::from_integer(v[1].clone())])
    }

    pub fn base(&self) -> &TreeVertex {
        &self.base
    }

    pub fn end(&self) -> &[Rational; 2] {
        &self.end
    }

    /// The `k`-th vertex: `M span(xi, p^k Z_p^2)` with `xi` the end written
    /// primitively in the basis `M` of the base lattice.
    pub fn vertex(&self, k: u64) -> Result<TreeVertex> {
        let p = self.base.p;
        let m = self.base.matrix();
        let xi = m.inverse()?.mul_vec(&self.end);
        let s = vp_min(&xi, p).expect("nonzero end");
        let xi: Vec<Rational> = xi.iter().map(|x| x * p_pow_rat(p, -s)).collect();
        let pk = p_pow_rat(p, k as i64);
        let z = rational::rat(0);
        let w = vertex_from_columns(
            &[[xi[0].clone(), xi[1].clone()], [pk.clone(), z.clone()], [z, pk]],
            p,
        )?;
        act(&m, &w)
    }

    pub fn act(&self, g: &Matrix) -> Result<TreeRay> {
        let e = g.mul_vec(&self.end);
        TreeRay::new(act(g, &self.base)?, [e[0].clone(), e[1].clone()])
    }

    /// The point of `P^1` at level `precision` that this ray converges to.
    pub fn end_flag(&self, precision: u32) -> Result<Flag> {
        Flag::new(self.base.p, precision, &self.end, None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NestingReport {
    pub depth: usize,
    pub nested: bool,
    /// `d(x0, g x0)`: each application of `g` lengthens the ray by this much.
    pub growth_rate: u64,
}

/// Checks `g^k r` is a strict subray of `g^(k+1) r` for `k < depth`, by
/// comparing `g^k r_j` with `g^(k+1) r_(j + D)` on a window of vertices.
pub fn ray_dynamics(g: &Matrix, r: &TreeRay, depth: usize) -> Result<NestingReport> {
    let p = r.base.p;
    if !classify_isometry(g, p)?.is_hyperbolic() {
        return Err(Error::InvalidRay("matrix is not hyperbolic".into()));
    }
    const END_PRECISION: u32 = 12;
    let ff = fixed_flags(g, p, END_PRECISION)?;
    let repeller = &ff[1].1;
    if &r.end_flag(END_PRECISION)? != repeller {
        return Err(Error::InvalidRay(format!(
            "end {} is not the repelling end {}",
            r.end_flag(END_PRECISION)?,
            repeller
        )));
    }
    let rate = distance(&r.base, &act(g, &r.base)?)?;
    let window = rate + 2;
    let mut nested = rate > 0;
    let mut gk = Matrix::identity(2);
    for _ in 0..depth {
        let gk1 = g.mul(&gk);
        for j in 0..=window {
            if act(&gk, &r.vertex(j)?)? != act(&gk1, &r.vertex(j + rate)?)? {
                nested = false;
            }
        }
        gk = gk1;
    }
    if depth == 0 {
        nested = true;
    }
    Ok(NestingReport {
        depth,
        nested,
        growth_rate: rate,
    })
}
