use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bruhat_control::controlsets::{analyze, GraphOptions, Group, SemigroupSpec};
use bruhat_control::coxeter::{coxeter_complex, cosets, enumerate_group, longest_element, WeylElement};
use bruhat_control::decomp::{bruhat_position, cartan, iwasawa, spectral_valuations};
use bruhat_control::flag::{all_flags, fixed_flags, iterate_to_limit, random_flag, relative_position, Flag};
use bruhat_control::lattice_tree::{act, classify_isometry, distance, neighbors, vertex_from_matrix, Isometry, TreeVertex};
use bruhat_control::matrix::Matrix;
use bruhat_control::padic::PAdicContext;
use bruhat_control::rational::{frac, p_pow_rat, vp, Rational};
use bruhat_control::sample::{random_integral_sl, random_integral_unit, random_sl, random_sl2, random_upper};
use bruhat_control::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn prime() -> impl Strategy<Value = u64> {
    prop_oneof![Just(2u64), Just(3), Just(5), Just(7)]
}

fn rational(p: u64) -> impl Strategy<Value = Rational> {
    (-100_000i64..=100_000, 1i64..=1000, -3i64..=3)
        .prop_filter("nonzero", |(a, _, _)| *a != 0)
        .prop_map(move |(a, b, e)| frac(a, b) * p_pow_rat(p, e))
}

fn random_vertex(r: &mut ChaCha8Rng, p: u64) -> TreeVertex {
    vertex_from_matrix(&random_sl2(r, p, (-2, 2)), p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn padic_ops_match_rational_arithmetic((p, n, x, y) in (prime(), 1u32..6).prop_flat_map(|(p, n)| (Just(p), Just(n), rational(p), rational(p)))) {
        let ctx = PAdicContext::new(p, n).unwrap();
        let (a, b) = (ctx.from_big_rational(&x).unwrap(), ctx.from_big_rational(&y).unwrap());
        // each input equals its rational up to p^(v + N)
        for (pa, r) in [(&a, &x), (&b, &y)] {
            let err = pa.to_rational() - r;
            prop_assert!(err == Rational::from_integer(0.into()) || vp(&err, p).unwrap() >= pa.valuation().unwrap() + n as i64);
        }
        let prod = a.mul(&b).unwrap();
        prop_assert_eq!(prod.valuation(), Some(a.valuation().unwrap() + b.valuation().unwrap()));
        let err = prod.to_rational() - &x * &y;
        prop_assert!(vp(&err, p).is_none_or(|e| e >= prod.valuation().unwrap() + prod.precision() as i64));
        let (va, vb) = (a.valuation().unwrap(), b.valuation().unwrap());
        let sum = match a.add(&b) {
            Ok(s) => s,
            Err(Error::PrecisionExhausted(_)) => {
                // total cancellation must be reported, never absorbed
                prop_assert_eq!(va, vb);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        match sum.valuation() {
            Some(v) => {
                prop_assert!(v >= va.min(vb));
                if va != vb { prop_assert_eq!(v, va.min(vb)); }
                let err = sum.to_rational() - (&x + &y);
                prop_assert!(vp(&err, p).is_none_or(|e| e >= v + sum.precision() as i64));
            }
            None => prop_assert!(va == vb),
        }
    }

    #[test]
    fn residue_is_a_ring_map(p in prime(), a in 1i64..10_000, b in 1i64..10_000) {
        let ctx = PAdicContext::new(p, 4).unwrap();
        prop_assume!(a % p as i64 != 0 && b % p as i64 != 0);
        let (x, y) = (ctx.from_int(a), ctx.from_int(b));
        let r = |z: &bruhat_control::padic::PAdic| z.residue().unwrap();
        prop_assert_eq!(r(&x.mul(&y).unwrap()), (r(&x) * r(&y)) % p);
        match x.add(&y) {
            Ok(s) => prop_assert_eq!(r(&s), (r(&x) + r(&y)) % p),
            // all digits cancelled, so the sum lies in pA
            Err(_) => prop_assert_eq!((r(&x) + r(&y)) % p, 0),
        }
        prop_assert_eq!(ctx.one().norm(), frac(1, 1));
    }

    #[test]
    fn tree_degree_metric_and_isometry(seed in any::<u64>(), p in prime()) {
        let mut r = rng(seed);
        let (u, v, w, z) = (random_vertex(&mut r, p), random_vertex(&mut r, p), random_vertex(&mut r, p), random_vertex(&mut r, p));
        let nb = neighbors(&u).unwrap();
        prop_assert_eq!(nb.len() as u64, p + 1);
        prop_assert_eq!(nb.iter().collect::<BTreeSet<_>>().len() as u64, p + 1);
        prop_assert!(nb.iter().all(|x| distance(&u, x).unwrap() == 1));
        let d = |a: &TreeVertex, b: &TreeVertex| distance(a, b).unwrap() as i64;
        prop_assert!(d(&u, &w) <= d(&u, &v) + d(&v, &w));
        prop_assert_eq!(d(&u, &v), d(&v, &u));
        // Gromov products based at u; the two smallest agree in a tree
        let gp = |a: &TreeVertex, b: &TreeVertex| {
            let twice = d(&u, a) + d(&u, b) - d(a, b);
            assert_eq!(twice % 2, 0);
            twice / 2
        };
        let mut g3 = [gp(&v, &w), gp(&w, &z), gp(&v, &z)];
        g3.sort();
        prop_assert_eq!(g3[0], g3[1]);
        let g = random_sl2(&mut r, p, (-2, 2));
        prop_assert_eq!(d(&act(&g, &u).unwrap(), &act(&g, &v).unwrap()), d(&u, &v));
    }

    #[test]
    fn hyperbolic_axis_is_translated(seed in any::<u64>()) {
        let p = 5;
        let mut r = rng(seed);
        let g = random_sl2(&mut r, p, (-2, 2));
        if let Isometry::Hyperbolic { translation_length, axis_vertex } = classify_isometry(&g, p).unwrap() {
            let mut x = axis_vertex;
            for _ in 0..3 {
                let gx = act(&g, &x).unwrap();
                prop_assert_eq!(distance(&x, &gx).unwrap(), translation_length);
                x = gx;
            }
            let sd = spectral_valuations(&g, p).unwrap();
            let gap = sd.valuations[1] - sd.valuations[0];
            prop_assert_eq!(gap.to_integer() as u64, translation_length);
        }
    }

    #[test]
    fn flag_action_law(seed in any::<u64>(), n in 2usize..=3, level in 1u32..=3) {
        let p = 5;
        let mut r = rng(seed);
        let f = random_flag(&mut r, n, p, level).unwrap();
        prop_assert_eq!(f.act(&Matrix::identity(n)).unwrap(), f.clone());
        let g = random_sl(&mut r, p, n, 1);
        let h = random_sl(&mut r, p, n, 1);
        let stepwise = f.act(&h).and_then(|x| x.act(&g));
        let direct = f.act(&g.mul(&h));
        match (stepwise, direct) {
            (Ok(a), Ok(b)) => {
                let m = a.precision().min(b.precision());
                prop_assert_eq!(a.truncate(m).unwrap(), b.truncate(m).unwrap());
            }
            (Err(Error::PrecisionExhausted(_)), _) | (_, Err(Error::PrecisionExhausted(_))) => {}
            (a, b) => prop_assert!(false, "unexpected {:?} {:?}", a, b),
        }
        // integral units lose nothing
        let k = random_integral_unit(&mut r, p, n);
        prop_assert_eq!(f.act(&k).unwrap().precision(), level);
    }

    #[test]
    fn relative_position_inverts(seed in any::<u64>(), level in 1u32..=2) {
        let mut r = rng(seed);
        let (a, b) = (random_flag(&mut r, 3, 5, level).unwrap(), random_flag(&mut r, 3, 5, level).unwrap());
        match (relative_position(&a, &b), relative_position(&b, &a)) {
            (Ok(w), Ok(v)) => prop_assert_eq!(w.inverse(), v),
            (Err(Error::RankAmbiguous { .. }), Err(Error::RankAmbiguous { .. })) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
        prop_assert!(relative_position(&a, &a).unwrap().is_identity());
    }

    #[test]
    fn fixed_flags_are_equivariant(seed in any::<u64>(), n in 2usize..=3) {
        let p = 5;
        // enough digits to survive the loss of one application of h
        let level = 5;
        let mut r = rng(seed);
        let d: Vec<i64> = if n == 2 { vec![-1, 1] } else { vec![-2, 0, 2] };
        let k = random_integral_sl(&mut r, n, 3 * n);
        let h = k.mul(&Matrix::diag_p_powers(p, &d)).mul(&k.inverse().unwrap());
        let ff = fixed_flags(&h, p, level).unwrap();
        prop_assert_eq!(ff.len(), enumerate_group(n).len());
        prop_assert_eq!(ff.iter().map(|x| &x.1).collect::<BTreeSet<_>>().len(), ff.len());
        for (_, f) in &ff {
            let img = f.act(&h).unwrap();
            prop_assert_eq!(&img, &f.truncate(img.precision()).unwrap());
        }
        let g = random_integral_unit(&mut r, p, n);
        let conj = g.mul(&h).mul(&g.inverse().unwrap());
        let ff2 = fixed_flags(&conj, p, level).unwrap();
        for ((w1, f1), (w2, f2)) in ff.iter().zip(&ff2) {
            prop_assert_eq!(w1, w2);
            prop_assert_eq!(&f1.act(&g).unwrap(), f2);
        }
    }

    #[test]
    fn decompositions_are_well_formed(seed in any::<u64>(), n in 2usize..=3) {
        let p = 5;
        let mut r = rng(seed);
        let g = random_sl(&mut r, p, n, 2);
        let iw = iwasawa(&g, p).unwrap();
        prop_assert!(iw.k.is_integral_unit(p));
        prop_assert!(iw.t.is_diagonal());
        prop_assert!(iw.u.is_unit_upper_triangular());
        let c = cartan(&g, p).unwrap();
        prop_assert!(c.k1.is_integral_unit(p) && c.k2.is_integral_unit(p));
        prop_assert!(c.a.is_diagonal());
        prop_assert!(c.exponents.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(c.exponents.iter().sum::<i64>(), 0);
        let b1 = random_upper(&mut r, p, n, (-2, 2));
        let b2 = random_upper(&mut r, p, n, (-2, 2));
        prop_assert_eq!(bruhat_position(&b1.mul(&g).mul(&b2)).unwrap(), bruhat_position(&g).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sl2_attractor_dominance(seed in any::<u64>()) {
        let p = 5;
        let level = 2;
        let mut r = rng(seed);
        let k = random_integral_sl(&mut r, 2, 6);
        let e = r.random_range(1..=2);
        let h = k.mul(&Matrix::diag_p_powers(p, &[-e, e])).mul(&k.inverse().unwrap());
        let ff = fixed_flags(&h, p, level).unwrap();
        let (attractor, repeller) = (&ff[0].1, &ff[1].1);
        for f in all_flags(2, p, level).unwrap() {
            if &f == repeller {
                continue;
            }
            let it = iterate_to_limit(&h, &f, level, 200).unwrap();
            prop_assert!(it.stabilized_at.is_some());
            prop_assert_eq!(&it.limit, attractor);
        }
    }

    #[test]
    fn control_sets_are_conjugation_covariant(seed in any::<u64>()) {
        let p = 5;
        let mut r = rng(seed);
        let gens = vec![
            Matrix::diag_p_powers(p, &[1, -1]),
            random_integral_sl(&mut r, 2, 4),
        ];
        let spec = SemigroupSpec::new(Group::SL2, p, 1, gens, 2).unwrap();
        let k = random_integral_unit(&mut r, p, 2);
        let a = analyze(&spec, &GraphOptions::default()).unwrap().report;
        let b = analyze(&spec.conjugate(&k).unwrap(), &GraphOptions::default()).unwrap().report;
        prop_assert_eq!(&a.weyl_subgroup, &b.weyl_subgroup);
        let image = |nodes: &[Flag]| nodes.iter().map(|f| f.act(&k).unwrap()).collect::<BTreeSet<_>>();
        let sa: BTreeSet<(BTreeSet<Flag>, Vec<WeylElement>, bool)> =
            a.control_sets.iter().map(|c| (image(&c.nodes), c.w_labels.clone(), c.is_invariant)).collect();
        let sb: BTreeSet<(BTreeSet<Flag>, Vec<WeylElement>, bool)> =
            b.control_sets.iter().map(|c| (c.nodes.iter().cloned().collect(), c.w_labels.clone(), c.is_invariant)).collect();
        prop_assert_eq!(sa, sb);
    }
}

#[test]
fn weyl_group_structure() {
    for n in 1..=4 {
        let g = enumerate_group(n);
        assert_eq!(g.len(), (1..=n).product::<usize>());
        let top = n * (n - 1) / 2;
        let longest: Vec<_> = g.iter().filter(|w| w.length() == top).collect();
        assert_eq!(longest.len(), 1);
        assert_eq!(longest[0], &longest_element(n));
        // cosets: unique representative of minimal length
        for j in 1..n {
            for c in cosets(&[j], n) {
                let min = c.elements.iter().map(|w| w.length()).min().unwrap();
                assert_eq!(c.representative.length(), min);
                assert_eq!(c.elements.iter().filter(|w| w.length() == min).count(), 1);
            }
        }
        // simple transitivity on chambers
        let cx = coxeter_complex(n);
        for u in &g {
            let images: BTreeSet<usize> = cx.chambers.iter().map(|c| cx.chamber_index(&u.multiply(c))).collect();
            assert_eq!(images.len(), cx.chambers.len());
            if !u.is_identity() {
                assert!(cx.chambers.iter().all(|c| &u.multiply(c) != c));
            }
        }
    }
}

#[test]
fn cell_census_formula() {
    for p in [2u64, 3, 5] {
        for level in 1..=3u32 {
            let total = all_flags(2, p, level).unwrap().len() as u64;
            assert_eq!(total, p.pow(level) + p.pow(level - 1));
        }
    }
}
