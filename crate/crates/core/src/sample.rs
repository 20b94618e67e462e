//! Seeded random matrices and flags for property suites and seeded graph
//! regions.

use rand::{Rng, RngExt};

use crate::matrix::Matrix;
use crate::rational::{p_pow_rat, rat, Rational};

/// A random rational `p^v * u` with `v` in `vals` and `u` a small unit.
pub fn random_scalar<R: Rng>(rng: &mut R, p: u64, vals: (i64, i64)) -> Rational {
    let v = rng.random_range(vals.0..=vals.1);
    random_unit(rng, p) * p_pow_rat(p, v)
}

/// A random integer in `[-30, 30]` prime to `p`.
pub fn random_unit<R: Rng>(rng: &mut R, p: u64) -> Rational {
    loop {
        let u: i64 = rng.random_range(-30..=30);
        if u % p as i64 != 0 {
            return rat(u);
        }
    }
}

/// An element of `SL_n(Z)` as a product of random elementary matrices and
/// signed permutations.
pub fn random_integral_sl<R: Rng>(rng: &mut R, n: usize, steps: usize) -> Matrix {
    let mut m = Matrix::identity(n);
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut e = Matrix::identity(n);
        if rng.random_bool(0.2) {
            // signed transposition, determinant one
            e[(i, i)] = rat(0);
            e[(j, j)] = rat(0);
            e[(i, j)] = rat(1);
            e[(j, i)] = rat(-1);
        } else {
            e[(i, j)] = rat(rng.random_range(-4..=4));
        }
        m = m.mul(&e);
    }
    m
}

/// A random element of `GL_n(Z_p)`: an integral unimodular matrix times a
/// diagonal of units.
pub fn random_integral_unit<R: Rng>(rng: &mut R, p: u64, n: usize) -> Matrix {
    let d: Vec<Rational> = (0..n).map(|_| random_unit(rng, p)).collect();
    random_integral_sl(rng, n, 3 * n).mul(&Matrix::diag(&d))
}

/// Random `SL_2(Q_p)` element `[[a,b],[c,d]]` with `v(a), v(b), v(c)` in
/// `vals` and `d = (1 + bc)/a`.
pub fn random_sl2<R: Rng>(rng: &mut R, p: u64, vals: (i64, i64)) -> Matrix {
    let a = random_scalar(rng, p, vals);
    let b = random_scalar(rng, p, vals);
    let c = random_scalar(rng, p, vals);
    let d = (rat(1) + &b * &c) / &a;
    Matrix::from_rows(vec![vec![a, b], vec![c, d]]).expect("square")
}

/// Random `SL_n(Q_p)` element `k1 * diag(p^m) * k2` with `k1, k2` in
/// `SL_n(Z)` and exponents in `[-span, span]` summing to zero.
pub fn random_sl<R: Rng>(rng: &mut R, p: u64, n: usize, span: i64) -> Matrix {
    let mut exps: Vec<i64> = (0..n - 1).map(|_| rng.random_range(-span..=span)).collect();
    exps.push(-exps.iter().sum::<i64>());
    let k1 = random_integral_sl(rng, n, 3 * n);
    let k2 = random_integral_sl(rng, n, 3 * n);
    k1.mul(&Matrix::diag_p_powers(p, &exps)).mul(&k2)
}

/// Random invertible upper-triangular matrix with entries of valuation in
/// `vals`.
pub fn random_upper<R: Rng>(rng: &mut R, p: u64, n: usize, vals: (i64, i64)) -> Matrix {
    let mut m = Matrix::zero(n);
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = random_scalar(rng, p, vals);
        }
    }
    m
}

/// Lower unitriangular matrix with integral entries (`unit_entries` forces
/// units below the diagonal).
pub fn random_lower_unipotent<R: Rng>(rng: &mut R, p: u64, n: usize, unit_entries: bool) -> Matrix {
    let mut m = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = if unit_entries {
                random_unit(rng, p)
            } else {
                rat(rng.random_range(-40..=40))
            };
        }
    }
    m
}

/// A random primitive integer vector with entries in `[0, p^k)`.
pub fn random_primitive<R: Rng>(rng: &mut R, p: u64, n: usize, k: u32) -> Vec<Rational> {
    let m = p.pow(k);
    loop {
        let v: Vec<u64> = (0..n).map(|_| rng.random_range(0..m)).collect();
        if v.iter().any(|x| x % p != 0) {
            return v.into_iter().map(|x| rat(x as i64)).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_special_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert!(random_sl2(&mut rng, 5, (-2, 2)).is_special_linear());
            assert!(random_sl(&mut rng, 5, 3, 2).is_special_linear());
            assert!(random_integral_sl(&mut rng, 3, 9).is_special_linear());
            assert!(random_integral_unit(&mut rng, 5, 3).is_integral_unit(5));
        }
    }
}
