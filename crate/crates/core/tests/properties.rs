//! Bulk randomized invariants: valuation axioms, Gauss-norm
//! multiplicativity, derivation and specialization inequalities,
//! centered representatives, and serialization stability.
//!
//! The 10^3-pair checks use a seeded generator directly; proptest drives
//! the structural invariants where shrinking is useful.

use num::rational::BigRational;
use num::{BigInt, Zero};
use padic_annuli::format::ModuleDescription;
use padic_annuli::laurent::{LaurentElement, RInterval};
use padic_annuli::matrix::Mat;
use padic_annuli::module::{generic_radius_estimate, DiffModule};
use padic_annuli::padic::{
    eq_class_test, ratio_i64, ratio_int, LogValue, PadicApprox, Prime, Scalar,
};
use padic_annuli::profile::{classify, sample_profile, BreakVerdict};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scalar(rng: &mut ChaCha8Rng, prime: Prime, level: u32) -> Scalar {
    let phi = prime.phi(level);
    let mut acc = Scalar::zero(prime, level);
    for i in 0..phi {
        let num = rng.gen_range(-9..=9i64);
        if num == 0 {
            continue;
        }
        let den = rng.gen_range(1..=6i64);
        let c = if level == 0 {
            Scalar::from_ratio(prime, 0, ratio_i64(num, den))
        } else {
            Scalar::zeta_pow(prime, level, i as i64)
                .unwrap()
                .scale(&ratio_i64(num, den))
        };
        acc = acc.add(&c).unwrap();
    }
    acc
}

fn random_laurent(rng: &mut ChaCha8Rng, prime: Prime, level: u32, with_z: bool) -> LaurentElement {
    let mut e = LaurentElement::zero(prime, level);
    for _ in 0..rng.gen_range(1..=4usize) {
        let nt = rng.gen_range(-4..=4i64);
        let nz = if with_z { rng.gen_range(0..=2u32) } else { 0 };
        let c = random_scalar(rng, prime, level);
        if c.is_zero() {
            continue;
        }
        e = e
            .add(&LaurentElement::monomial(prime, level, nt, nz, c).unwrap())
            .unwrap();
    }
    e
}

#[test]
fn valuation_is_multiplicative_and_ultrametric() {
    // 10^3 pairs per (p, level) with level <= 2
    for (p, levels) in [(2u32, 2u32), (3, 2), (5, 2)] {
        let prime = Prime::new(p).unwrap();
        for level in 0..=levels {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + p as u64 * 10 + level as u64);
            for _ in 0..1000 {
                let a = random_scalar(&mut rng, prime, level);
                let b = random_scalar(&mut rng, prime, level);
                let prod = a.mul(&b).unwrap();
                assert_eq!(
                    prod.valuation(),
                    a.valuation().add(&b.valuation()),
                    "p={p} level={level} a={a} b={b}"
                );
                let sum = a.add(&b).unwrap();
                let min = a.valuation().min(b.valuation());
                assert!(
                    sum.valuation() >= min,
                    "ultrametric fails: p={p} level={level} a={a} b={b}"
                );
            }
        }
    }
}

#[test]
fn gauss_valuation_is_multiplicative() {
    let radii = [ratio_i64(1, 2), ratio_i64(1, 3), ratio_i64(2, 1)];
    for p in [3u32, 5] {
        let prime = Prime::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(111 + p as u64);
        for i in 0..1000 {
            let f = random_laurent(&mut rng, prime, 1, true);
            let g = random_laurent(&mut rng, prime, 1, true);
            if f.is_zero() || g.is_zero() {
                continue;
            }
            let r = &radii[i % radii.len()];
            let lhs = f.mul(&g).unwrap().gauss_valuation(r);
            let rhs = f.gauss_valuation(r).add(&g.gauss_valuation(r));
            assert_eq!(lhs, rhs, "p={p} f={f} g={g}");
        }
    }
}

#[test]
fn derivative_norm_bound_and_monomial_equality() {
    let prime = Prime::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let r = ratio_i64(1, 2);
    for _ in 0..500 {
        let f = random_laurent(&mut rng, prime, 1, false);
        if f.is_zero() {
            continue;
        }
        let df = f.d_dt().unwrap();
        // |d/dt|_rho = rho^(-1): v(df) >= v(f) - r
        let bound = f.gauss_valuation(&r).add(&LogValue::finite(-r.clone()));
        assert!(df.gauss_valuation(&r) >= bound, "f = {f}");
    }
    // equality on unit monomials with exponent prime to p
    for nt in [-4i64, -2, -1, 1, 2, 4] {
        if nt.rem_euclid(3) == 0 {
            continue;
        }
        let m = LaurentElement::monomial(prime, 0, nt, 0, Scalar::one(prime, 0)).unwrap();
        let lhs = m.d_dt().unwrap().gauss_valuation(&r);
        let rhs = m.gauss_valuation(&r).add(&LogValue::finite(-r.clone()));
        assert_eq!(lhs, rhs, "nt = {nt}");
    }
}

#[test]
fn specialization_never_decreases_valuation() {
    let prime = Prime::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let r = ratio_i64(1, 4);
    for _ in 0..500 {
        let f = random_laurent(&mut rng, prime, 1, true);
        let a = Scalar::from_int(prime, 0, rng.gen_range(-9..=9i64));
        let fa = f.specialize_z(&a).unwrap();
        assert!(
            fa.gauss_valuation(&r) >= f.gauss_valuation(&r),
            "f = {f}, a = {a}"
        );
    }
}

#[test]
fn centered_reps_are_reductions_in_the_window() {
    let prime = Prime::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..400 {
        let num = rng.gen_range(-50..=50i64);
        let den = [1i64, 2, 4, 5, 7, 8][rng.gen_range(0..6usize)];
        let alpha = PadicApprox::exact(prime, ratio_i64(num, den)).unwrap();
        for h in 0..=4u32 {
            let rep = alpha.centered_rep(h).unwrap();
            let ph = BigInt::from(3i64.pow(h));
            // rep = alpha mod p^h
            let diff = BigRational::from(rep.clone()) - alpha.value();
            let scaled = diff / BigRational::from(ph.clone());
            assert!(
                prime
                    .val_ratio(&scaled)
                    .map(|v| v >= 0)
                    .unwrap_or(true),
                "num={num} den={den} h={h}"
            );
            // in [(1-p^h)/2, (1+p^h)/2)
            let two_rep = BigInt::from(2) * &rep;
            assert!(two_rep >= BigInt::from(1) - &ph, "below window");
            assert!(two_rep < BigInt::from(1) + &ph, "above window");
        }
    }
}

#[test]
fn eq_class_is_reflexive_symmetric_and_permutation_invariant() {
    let prime = Prime::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let bound = ratio_int(1);
    for _ in 0..200 {
        let mk = |rng: &mut ChaCha8Rng| {
            let num = rng.gen_range(-20..=20i64);
            let den = [1i64, 2, 4, 5][rng.gen_range(0..4usize)];
            PadicApprox::exact(prime, ratio_i64(num, den)).unwrap()
        };
        let a = vec![mk(&mut rng), mk(&mut rng)];
        let b = vec![mk(&mut rng), mk(&mut rng)];
        assert!(eq_class_test(&a, &a, 3, &bound).unwrap());
        assert_eq!(
            eq_class_test(&a, &b, 3, &bound).unwrap(),
            eq_class_test(&b, &a, 3, &bound).unwrap()
        );
        // permuting both tuples together changes nothing
        let a_swapped = vec![a[1].clone(), a[0].clone()];
        let b_swapped = vec![b[1].clone(), b[0].clone()];
        assert_eq!(
            eq_class_test(&a, &b, 3, &bound).unwrap(),
            eq_class_test(&a_swapped, &b_swapped, 3, &bound).unwrap()
        );
    }
}

#[test]
fn estimate_never_dips_below_the_diagonal() {
    let prime = Prime::new(3).unwrap();
    let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..60 {
        let g = random_laurent(&mut rng, prime, 1, false);
        let m = DiffModule::rank1_twist(g, interval.clone());
        for r in [ratio_i64(1, 2), ratio_i64(1, 8)] {
            let est = generic_radius_estimate(&m, &r, 12).unwrap();
            assert!(est.f_hat >= r);
        }
    }
}

#[test]
fn robba_family_classification_bulk() {
    // classify(M_xi) = Solvable{0} for a corpus of Z_p-rational xi
    let prime = Prime::new(3).unwrap();
    let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
    let grid: Vec<BigRational> = (1..=6).map(|k| ratio_i64(1, 1 << k)).collect();
    for (num, den) in [
        (0i64, 1i64),
        (1, 2),
        (2, 1),
        (-1, 4),
        (5, 2),
        (-7, 2),
        (1, 5),
        (4, 7),
        (-3, 8),
    ] {
        let m = DiffModule::m_xi(prime, &ratio_i64(num, den), interval.clone()).unwrap();
        let profile = sample_profile(&m, &grid, 27).unwrap();
        assert_eq!(
            classify(&profile),
            BreakVerdict::Solvable { b: ratio_int(0) },
            "xi = {num}/{den}"
        );
    }
}

#[test]
fn direct_sum_estimates_take_the_max() {
    let prime = Prime::new(3).unwrap();
    let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
    let zeta = Scalar::zeta(prime, 1).unwrap();
    let dwork_g = LaurentElement::monomial(
        prime,
        1,
        -2,
        0,
        zeta.sub(&Scalar::one(prime, 1)).unwrap(),
    )
    .unwrap();
    let parts: Vec<DiffModule> = vec![
        DiffModule::m_xi(prime, &ratio_i64(0, 1), interval.clone()).unwrap(),
        DiffModule::m_xi(prime, &ratio_i64(1, 2), interval.clone()).unwrap(),
        DiffModule::m_xi(prime, &ratio_i64(1, 3), interval.clone()).unwrap(),
        DiffModule::rank1_twist(dwork_g, interval.clone()),
    ];
    // pairs whose norms stay resolvable at the sampled radii
    let pairs = [(0usize, 1usize), (0, 3), (1, 2), (0, 2)];
    for (i, j) in pairs {
        let s = parts[i].direct_sum(&parts[j]).unwrap();
        for r in [ratio_i64(1, 2), ratio_i64(1, 4)] {
            let es = generic_radius_estimate(&s, &r, 27).unwrap();
            let ea = generic_radius_estimate(&parts[i], &r, 27).unwrap();
            let eb = generic_radius_estimate(&parts[j], &r, 27).unwrap();
            assert_eq!(
                es.f_hat,
                ea.f_hat.max(eb.f_hat),
                "pair ({i},{j}) at r = {r}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_descriptions_are_stable(seed in 0u64..10_000) {
        let prime = Prime::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
        let with_z = rng.gen_bool(0.5);
        let g = random_laurent(&mut rng, prime, 1, with_z);
        let m = DiffModule::rank1_twist(g, interval);
        let one = ModuleDescription::from_module(&m).emit();
        let parsed = ModuleDescription::parse(&one).unwrap().to_module().unwrap();
        let two = ModuleDescription::from_module(&parsed).emit();
        prop_assert_eq!(one, two);
    }

    #[test]
    fn windows_guard_products(lo in -6i64..=-2, hi in 1i64..6, shift in -2i64..2) {
        // multiplying against an exact partner shrinks by its support width
        let prime = Prime::new(3).unwrap();
        let mut f = LaurentElement::monomial(prime, 0, shift.clamp(lo, hi), 0, Scalar::one(prime, 0)).unwrap();
        f = f.with_window(padic_annuli::laurent::Window::new(Some(lo), Some(hi)).unwrap()).unwrap();
        let g = LaurentElement::from_terms(
            prime,
            0,
            [(-1, 0, Scalar::one(prime, 0)), (2, 0, Scalar::from_int(prime, 0, 2))],
        )
        .unwrap();
        let prod = f.mul(&g).unwrap();
        let w = prod.window();
        prop_assert_eq!(w.lo, Some(lo + 2));
        prop_assert_eq!(w.hi, Some(hi - 1));
    }

    #[test]
    fn tensor_of_twists_adds_residues(n1 in -4i64..4, n2 in -4i64..4, d in 1i64..4) {
        let prime = Prime::new(3).unwrap();
        let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
        let a = DiffModule::m_xi(prime, &ratio_i64(n1, d), interval.clone()).unwrap();
        let b = DiffModule::m_xi(prime, &ratio_i64(n2, d), interval.clone()).unwrap();
        let t = a.tensor(&b).unwrap();
        let direct = DiffModule::m_xi(prime, &(ratio_i64(n1, d) + ratio_i64(n2, d)), interval).unwrap();
        prop_assert_eq!(&t.g1()[(0, 0)], &direct.g1()[(0, 0)]);
    }
}

#[test]
fn rank1_monomial_estimates_match_the_closed_form() {
    // independent oracle: for g = c*t^a the horizontal sections are of
    // exponential type when a != -1 (antiderivative c t^(a+1)/(a+1); the
    // (a+1)-factors cancel between the coefficient and the generic-point
    // difference), giving f(r) = max(r, 1/(p-1) - v(c) - a*r); for
    // a = -1 the solution is t^c, Robba when c is in Z_p and the same
    // line when v(c) < 0.
    let prime = Prime::new(3).unwrap();
    let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(271828);
    let grid: Vec<BigRational> = (1..=6).map(|k| ratio_i64(1, 1 << k)).collect();
    let half = ratio_i64(1, 2);
    for trial in 0..80 {
        let a = rng.gen_range(-3..=1i64);
        let vc = rng.gen_range(-2..=2i64); // integer part of v(c)
        let eisenstein = rng.gen_bool(0.5); // extra zeta-1 factor: +1/2
        let unit = rng.gen_range(1..=2i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut c = Scalar::from_ratio(
            prime,
            0,
            if vc >= 0 {
                ratio_int(unit * 3i64.pow(vc as u32))
            } else {
                ratio_i64(unit, 3i64.pow((-vc) as u32))
            },
        );
        let mut v_c = ratio_int(vc);
        if eisenstein {
            let z = Scalar::zeta(prime, 1).unwrap();
            c = c.mul(&z.sub(&Scalar::one(prime, 1)).unwrap()).unwrap();
            v_c += &half;
        }
        let g = LaurentElement::monomial(prime, 1, a, 0, c).unwrap();
        let m = DiffModule::rank1_twist(g, interval.clone());
        for r in &grid {
            let oracle = if a == -1 && v_c >= BigRational::zero() {
                r.clone()
            } else {
                let line = &half - &v_c - ratio_int(a) * r;
                line.max(r.clone())
            };
            let est = generic_radius_estimate(&m, r, 27).unwrap();
            assert_eq!(
                est.f_hat, oracle,
                "trial {trial}: a={a} v(c)={v_c} r={r}"
            );
        }
    }
}

#[test]
fn exponent_digits_recover_rational_twists() {
    use padic_annuli::exponent::exponent_digits;
    let prime = Prime::new(3).unwrap();
    let interval = RInterval::new(ratio_i64(1, 64), ratio_i64(1, 2)).unwrap();
    let r0 = ratio_i64(1, 4);
    for (num, den) in [(0i64, 1i64), (1, 2), (2, 1), (5, 2), (-7, 2), (1, 5), (4, 7)] {
        let xi = ratio_i64(num, den);
        let m = DiffModule::m_xi(prime, &xi, interval.clone()).unwrap();
        let cand = exponent_digits(&m, &r0, 2, None, Some(27)).unwrap();
        let expect: u64 = PadicApprox::exact(prime, xi)
            .unwrap()
            .residue(2)
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(cand.delta, vec![expect], "xi = {num}/{den}");
    }
}

#[test]
fn values_are_shareable_across_threads() {
    // everything is immutable after construction; these bounds are the
    // concurrency contract
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Scalar>();
    assert_send_sync::<PadicApprox>();
    assert_send_sync::<LaurentElement>();
    assert_send_sync::<Mat>();
    assert_send_sync::<DiffModule>();
    assert_send_sync::<padic_annuli::relative::RelModule>();
}

#[test]
fn profile_matrix_norm_is_entrywise_min() {
    // the matrix Gauss valuation is the min over entries
    let prime = Prime::new(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let r = ratio_i64(1, 3);
    for _ in 0..100 {
        let a = random_laurent(&mut rng, prime, 1, false);
        let b = random_laurent(&mut rng, prime, 1, false);
        let m = Mat::from_rows(vec![vec![a.clone(), b.clone()]]);
        let expect = a.gauss_valuation(&r).min(b.gauss_valuation(&r));
        assert_eq!(m.gauss_valuation(&r), expect);
    }
}

#[test]
fn profile_is_scale_consistent_under_pullback() {
    // f_{phi^* F}(r) = p * f_F(p r) never fails on the twist family
    let prime = Prime::new(3).unwrap();
    let interval_u = RInterval::new(ratio_i64(3, 64), ratio_i64(3, 2)).unwrap();
    // members satisfying the antecedent precondition R > p^(-1/(p-1))*rho
    // (the law has no reason to hold outside it)
    for (num, den) in [(0i64, 1i64), (1, 2), (2, 1)] {
        let f = DiffModule::m_xi(prime, &ratio_i64(num, den), interval_u.clone()).unwrap();
        let e = f.frobenius_pullback().unwrap();
        for r in [ratio_i64(1, 4), ratio_i64(1, 8)] {
            let ee = generic_radius_estimate(&e, &r, 27).unwrap();
            let fe = generic_radius_estimate(&f, &(&r * ratio_int(3)), 27).unwrap();
            assert_eq!(fe.f_hat, ee.f_hat * ratio_int(3), "xi={num}/{den} r={r}");
        }
    }
}
