//! Word-sized modular arithmetic on flag cells, used to build orbit graphs.
//!
//! A cell at level `L` is a flag reduced mod `p^L`, i.e. a `K_L`-orbit. The
//! action of a generator on a cell uses the same precision bookkeeping as
//! [`crate::flag::Flag::act`], on integral rescalings of `g` and `g^-1` reduced
//! mod `p^M`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::flag::Flag;
use crate::matrix::Matrix;
use crate::rational::{p_pow_rat, reduce_mod};

pub(crate) type Vec3 = [u64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Cell {
    pub lvl: u32,
    pub v: Vec3,
    pub c: Vec3,
}

type Mat3 = [[u64; 3]; 3];

pub(crate) struct Engine {
    n: usize,
    p: u64,
    pows: Vec<u64>,
    gens: Vec<(Mat3, Mat3)>,
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn modinv(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    t0.rem_euclid(m as i128) as u64
}

fn reduce_matrix(g: &Matrix, p: u64, top: u32) -> Result<Mat3> {
    let s = g.min_valuation(p).ok_or(Error::DivisionByZero)?;
    let scaled = g.scale(&p_pow_rat(p, -s));
    let mut out = [[0u64; 3]; 3];
    for i in 0..g.dim() {
        for j in 0..g.dim() {
            let r = reduce_mod(&scaled[(i, j)], p, top)?;
            out[i][j] = r.to_u64().expect("below modulus");
        }
    }
    Ok(out)
}

impl Engine {
    /// `top` is the deepest level cells may be refined to; `p^top` must fit in
    /// 63 bits.
    pub fn new(n: usize, p: u64, top: u32, gens: &[Matrix]) -> Result<Self> {
        let mut pows = vec![1u64];
        for _ in 0..top {
            let next = pows.last().unwrap().checked_mul(p).filter(|&x| x < (1u64 << 63));
            pows.push(next.ok_or_else(|| {
                Error::exhausted(format!("{p}^{top} does not fit in a machine word"))
            })?);
        }
        let gens = gens
            .iter()
            .map(|g| Ok((reduce_matrix(g, p, top)?, reduce_matrix(&g.inverse()?, p, top)?)))
            .collect::<Result<_>>()?;
        Ok(Engine { n, p, pows, gens })
    }

    pub fn top(&self) -> u32 {
        (self.pows.len() - 1) as u32
    }

    fn val(&self, x: u64, lvl: u32) -> u32 {
        if x == 0 {
            return lvl;
        }
        let mut k = 0;
        let mut y = x;
        while y.is_multiple_of(self.p) && k < lvl {
            y /= self.p;
            k += 1;
        }
        k
    }

    fn canon(&self, v: Vec3, lvl: u32) -> Option<Vec3> {
        let m = self.pows[lvl as usize];
        let lead = (0..self.n).find(|&i| !v[i].is_multiple_of(self.p))?;
        let inv = modinv(v[lead] % m, m);
        let mut out = [0u64; 3];
        for i in 0..self.n {
            out[i] = mulmod(v[i], inv, m);
        }
        Some(out)
    }

    fn reduce(&self, v: Vec3, lvl: u32) -> Vec3 {
        let m = self.pows[lvl as usize];
        [v[0] % m, v[1] % m, v[2] % m]
    }

    pub fn truncate(&self, c: &Cell, lvl: u32) -> Cell {
        Cell {
            lvl,
            v: self.reduce(c.v, lvl),
            c: self.reduce(c.c, lvl),
        }
    }

    /// Renormalizes `w` (known mod `p^lvl`); returns the new level and vector.
    fn renormalize(&self, w: Vec3, lvl: u32) -> Option<(u32, Vec3)> {
        let a = (0..self.n).map(|i| self.val(w[i], lvl)).min().expect("n > 0");
        if a >= lvl {
            return None;
        }
        let l = lvl - a;
        let d = self.pows[a as usize];
        let m = self.pows[l as usize];
        let mut s = [0u64; 3];
        for i in 0..self.n {
            s[i] = (w[i] / d) % m;
        }
        Some((l, self.canon(s, l)?))
    }

    /// Image of a cell under generator `gi`; `None` when every digit is lost.
    pub fn act(&self, cell: &Cell, gi: usize) -> Option<Cell> {
        let (g, h) = &self.gens[gi];
        let n = self.n;
        let m = self.pows[cell.lvl as usize];
        let mut w = [0u64; 3];
        for i in 0..n {
            let mut acc = 0u128;
            for j in 0..n {
                acc += g[i][j] as u128 * cell.v[j] as u128;
            }
            w[i] = (acc % m as u128) as u64;
        }
        let (l1, line) = self.renormalize(w, cell.lvl)?;
        if n == 2 {
            return Some(Cell { lvl: l1, v: line, c: [0; 3] });
        }
        let mut u = [0u64; 3];
        for j in 0..3 {
            let mut acc = 0u128;
            for i in 0..3 {
                acc += cell.c[i] as u128 * h[i][j] as u128;
            }
            u[j] = (acc % m as u128) as u64;
        }
        let (l2, cov) = self.renormalize(u, cell.lvl)?;
        let lvl = l1.min(l2);
        Some(Cell {
            lvl,
            v: self.reduce(line, lvl),
            c: self.reduce(cov, lvl),
        })
    }

    /// The cells at level `L + 1` refining `cell`: `k nbar(p^L t) b0` for a
    /// frame `k` of the cell.
    pub fn children(&self, cell: &Cell) -> Vec<Cell> {
        let p = self.p;
        let l = cell.lvl;
        let m = self.pows[l as usize + 1];
        let step = self.pows[l as usize];
        let add = |a: Vec3, b: Vec3, t: u64| -> Vec3 {
            let s = mulmod(step, t, m);
            [(a[0] + mulmod(b[0], s, m)) % m, (a[1] + mulmod(b[1], s, m)) % m, (a[2] + mulmod(b[2], s, m)) % m]
        };
        let e = |i: usize| -> Vec3 {
            let mut x = [0; 3];
            x[i] = 1;
            x
        };
        let mut out = Vec::new();
        if self.n == 2 {
            let u = if !cell.v[0].is_multiple_of(p) { e(1) } else { e(0) };
            for t in 0..p {
                let v = add(cell.v, u, t);
                out.push(Cell { lvl: l + 1, v: self.canon(v, l + 1).expect("primitive"), c: [0; 3] });
            }
            return out;
        }
        let c = cell.c;
        let jc = (0..3).find(|&i| c[i] == 1).expect("canonical covector");
        let mut v = cell.v;
        let dot = (0..3).fold(0u64, |acc, i| (acc + mulmod(c[i], v[i], m)) % m);
        v[jc] = (v[jc] + m - dot) % m;
        let others: Vec<usize> = (0..3).filter(|&i| i != jc).collect();
        let f = |i: usize| -> Vec3 {
            let mut x = e(i);
            x[jc] = (m - c[i] % m) % m;
            x
        };
        let u = if !v[others[0]].is_multiple_of(p) { f(others[1]) } else { f(others[0]) };
        let w = e(jc);
        let cross = |a: Vec3, b: Vec3| -> Vec3 {
            let sub = |x: u64, y: u64| (x + m - y) % m;
            [
                sub(mulmod(a[1], b[2], m), mulmod(a[2], b[1], m)),
                sub(mulmod(a[2], b[0], m), mulmod(a[0], b[2], m)),
                sub(mulmod(a[0], b[1], m), mulmod(a[1], b[0], m)),
            ]
        };
        for t1 in 0..p {
            let v1 = add(v, u, t1);
            for t2 in 0..p {
                let col0 = add(v1, w, t2);
                let line = self.canon(col0, l + 1).expect("primitive");
                for t3 in 0..p {
                    let col1 = add(u, w, t3);
                    let cov = self.canon(cross(col0, col1), l + 1).expect("primitive");
                    out.push(Cell { lvl: l + 1, v: line, c: cov });
                }
            }
        }
        out
    }

    pub fn cell_of(&self, f: &Flag) -> Cell {
        let conv = |xs: &[BigInt]| -> Vec3 {
            let mut out = [0u64; 3];
            for (o, x) in out.iter_mut().zip(xs) {
                *o = x.to_u64().expect("canonical residue");
            }
            out
        };
        Cell {
            lvl: f.precision(),
            v: conv(f.line()),
            c: f.covector().map(conv).unwrap_or([0; 3]),
        }
    }

    pub fn flag_of(&self, c: &Cell) -> Flag {
        let conv = |xs: &Vec3| -> Vec<BigInt> { xs[..self.n].iter().map(|&x| BigInt::from(x)).collect() };
        Flag::from_canonical(self.p, c.lvl, conv(&c.v), (self.n == 3).then(|| conv(&c.c)))
    }
}
