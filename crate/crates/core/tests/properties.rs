use std::collections::HashMap;
use std::f64::consts::PI;

use ngssv::gaussian::{beam_splitter_matrix, mzi_matrix, CoherentSource, SqueezedSource};
use ngssv::herald::{success_probability, OperationSpec};
use ngssv::jet::{MultiIndex, TruncatedPolynomial, Var};
use ngssv::moments::{mean_number_difference, mgf_form, number_difference, symmetric_moment, MomentRequest};
use ngssv::optimize::{sweep_r, Detection, Objective, SweepGrid};
use ngssv::paritydet::parity_expectation;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

const VARS: [Var; 4] = [Var::U1, Var::V1, Var::U2, Var::V2];

/// Exact complex rational, as (re, im).
type Exact = (BigRational, BigRational);

fn exact_mul(a: &Exact, b: &Exact) -> Exact {
    (&a.0 * &b.0 - &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0)
}

type ExactPoly = HashMap<Vec<u8>, Exact>;

fn exact_poly_mul(a: &ExactPoly, b: &ExactPoly, caps: &[u8]) -> ExactPoly {
    let mut out = ExactPoly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            if e.iter().zip(caps).any(|(x, c)| x > c) {
                continue;
            }
            let p = exact_mul(ca, cb);
            let slot = out.entry(e).or_insert_with(|| (BigRational::zero(), BigRational::zero()));
            slot.0 += p.0;
            slot.1 += p.1;
        }
    }
    out
}

/// `sum_n p^n / n!` in exact arithmetic, truncated to the caps box.
fn exact_exp(p: &ExactPoly, caps: &[u8]) -> ExactPoly {
    let top: u32 = caps.iter().map(|&c| u32::from(c)).sum();
    let zero = || (BigRational::zero(), BigRational::zero());
    let mut term = ExactPoly::new();
    term.insert(vec![0; caps.len()], (BigRational::one(), BigRational::zero()));
    let mut sum = term.clone();
    for n in 1..=top {
        term = exact_poly_mul(&term, p, caps);
        let inv = BigRational::new(BigInt::one(), BigInt::from(n));
        for c in term.values_mut() {
            c.0 = &c.0 * &inv;
            c.1 = &c.1 * &inv;
        }
        for (e, c) in &term {
            let slot = sum.entry(e.clone()).or_insert_with(zero);
            slot.0 += &c.0;
            slot.1 += &c.1;
        }
    }
    sum
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

#[derive(Clone, Debug)]
struct Instance {
    caps: Vec<u8>,
    terms: Vec<(Vec<u8>, i32, i32)>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=4)
        .prop_flat_map(|n| proptest::collection::vec(0u8..=4, n))
        .prop_filter("keep the exact oracle small", |caps| {
            caps.iter().map(|&c| c as usize + 1).product::<usize>() <= 150
        })
        .prop_flat_map(|caps| {
            let n = caps.len();
            let mono = proptest::collection::vec(0u8..=2, n)
                .prop_filter("no constant term", |e| e.iter().any(|&x| x > 0));
            let terms = proptest::collection::vec((mono, -6i32..=6, -6i32..=6), 1..=5);
            (Just(caps), terms)
        })
        .prop_map(|(caps, terms)| Instance { caps, terms })
}

fn float_poly(inst: &Instance, sign: f64) -> TruncatedPolynomial<f64> {
    let vars = &VARS[..inst.caps.len()];
    let mut p = TruncatedPolynomial::zero(vars, &inst.caps).unwrap();
    for (e, a, b) in &inst.terms {
        if e.iter().zip(&inst.caps).any(|(x, c)| x > c) {
            continue;
        }
        let idx = MultiIndex::new(e.clone());
        let old = p.coeff(&idx).unwrap();
        let add = Complex64::new(f64::from(*a) / 4.0, f64::from(*b) / 4.0) * sign;
        p.set_coeff(&idx, old + add).unwrap();
    }
    p
}

fn exact_poly(inst: &Instance, magnitude: bool) -> ExactPoly {
    let mut p = ExactPoly::new();
    let four = BigInt::from(4);
    for (e, a, b) in &inst.terms {
        if e.iter().zip(&inst.caps).any(|(x, c)| x > c) {
            continue;
        }
        let re = BigRational::new(BigInt::from(*a), four.clone());
        let im = BigRational::new(BigInt::from(*b), four.clone());
        let slot = p
            .entry(e.clone())
            .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
        slot.0 += re;
        slot.1 += im;
    }
    if magnitude {
        for c in p.values_mut() {
            *c = (c.0.abs() + c.1.abs(), BigRational::zero());
        }
    }
    p
}

fn box_indices(caps: &[u8]) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for &c in caps {
        out = out
            .into_iter()
            .flat_map(|e| {
                (0..=c).map(move |x| {
                    let mut f = e.clone();
                    f.push(x);
                    f
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn jet_exp_matches_exact_multinomial(inst in instance()) {
        let exp = float_poly(&inst, 1.0).exp().unwrap();
        let exact = exact_exp(&exact_poly(&inst, false), &inst.caps);
        // Same series with |coefficients| bounds the cancellation in each term.
        let majorant = exact_exp(&exact_poly(&inst, true), &inst.caps);
        for e in box_indices(&inst.caps) {
            let idx = MultiIndex::new(e.clone());
            let got = exp.derivative_at_origin(&idx).unwrap();
            let fact: f64 = idx.factorial();
            let z = exact.get(&e).map_or((0.0, 0.0), |c| (to_f64(&c.0), to_f64(&c.1)));
            let scale = majorant.get(&e).map_or(0.0, |c| to_f64(&c.0)) * fact;
            let want = Complex64::new(z.0, z.1) * fact;
            prop_assert!((got - want).norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE), "{e:?}: {got} vs {want}");
        }
    }

    #[test]
    fn exp_of_negation_is_inverse(inst in instance()) {
        let a = float_poly(&inst, 1.0).exp().unwrap();
        let b = float_poly(&inst, -1.0).exp().unwrap();
        let prod = a.checked_mul(&b).unwrap();
        let n = inst.caps.len();
        prop_assert!((prod.constant_term() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let scale = a.max_nonconstant_norm().max(1.0) * b.max_nonconstant_norm().max(1.0);
        prop_assert!(prod.max_nonconstant_norm() <= 1e-11 * scale, "{}", prod.max_nonconstant_norm());
        prop_assert_eq!(prod.vars().len(), n);
    }

    #[test]
    fn extraction_is_linear(a in instance(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let p = float_poly(&a, 1.0);
        let q = TruncatedPolynomial::from_quadratic(
            p.vars(),
            p.caps(),
            &vec![Complex64::new(0.3, -0.1); p.vars().len().pow(2)],
            &(0..p.vars().len()).map(|i| Complex64::new(i as f64, 0.5)).collect::<Vec<_>>(),
        )
        .unwrap();
        let c = Complex64::new(re, im);
        let sum = p.scale(c).checked_add(&q).unwrap();
        for e in box_indices(&a.caps) {
            let idx = MultiIndex::new(e);
            let lhs = sum.derivative_at_origin(&idx).unwrap();
            let rhs = c * p.derivative_at_origin(&idx).unwrap() + q.derivative_at_origin(&idx).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn interferometer_matrices_are_symplectic(tau in 1e-6f64..1.0 - 1e-6, phi in -10.0f64..10.0) {
        let b = beam_splitter_matrix(tau).unwrap();
        let m = mzi_matrix(phi);
        prop_assert!(b.symplectic_defect() < 1e-12);
        prop_assert!(m.symplectic_defect() < 1e-12);
        prop_assert!(b.compose(&m).unwrap().symplectic_defect() < 1e-12);
        let round = m.compose(&m.inverse()).unwrap();
        let id = ngssv::gaussian::SymplecticMatrix::<f64>::identity(2);
        for (x, y) in round.entries().iter().zip(id.entries()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn probability_and_normalization(k in 0u8..=2, l in 0u8..=2, r in 0.05f64..1.2, tau in 0.01f64..0.99) {
        let spec = OperationSpec::new(k, l, tau).unwrap();
        let src = SqueezedSource::new(r).unwrap();
        let p = success_probability(&spec, &src).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let form = mgf_form(&spec, &src, &CoherentSource::new(1.0, 0.5), 0.7).unwrap();
        let z: f64 = symmetric_moment(&form, MomentRequest::default()).unwrap();
        prop_assert!((z - 1.0).abs() < 1e-10, "{z}");
    }

    #[test]
    fn variance_is_nonnegative(
        k in 0u8..=2, l in 0u8..=2, r in 0.05f64..1.0, tau in 0.05f64..0.95,
        dx in -5.0f64..5.0, dp in -2.0f64..2.0, phi in 0.0f64..6.3,
    ) {
        let form = mgf_form(
            &OperationSpec::new(k, l, tau).unwrap(),
            &SqueezedSource::new(r).unwrap(),
            &CoherentSource::new(dx, dp),
            phi,
        )
        .unwrap();
        prop_assert!(number_difference(&form).unwrap().variance >= 0.0);
    }

    #[test]
    fn parity_is_bounded(
        k in 0u8..=2, l in 0u8..=2, r in 0.05f64..1.2, tau in 0.01f64..0.99,
        dx in -4.0f64..4.0, phi in -3.0f64..3.0,
    ) {
        let v = parity_expectation(
            &OperationSpec::new(k, l, tau).unwrap(),
            &SqueezedSource::new(r).unwrap(),
            dx,
            phi,
        );
        // lambda tau |cos phi| < 1 always holds for these ranges
        let v = v.unwrap();
        prop_assert!(v.abs() <= 1.0);
    }

    #[test]
    fn signal_is_periodic_in_phase(k in 0u8..=2, l in 0u8..=2, r in 0.05f64..1.0, tau in 0.05f64..0.95, phi in 0.0f64..3.0) {
        let spec = OperationSpec::new(k, l, tau).unwrap();
        let src = SqueezedSource::new(r).unwrap();
        let coh = CoherentSource::new(2.0, 0.0);
        let a = mean_number_difference(&mgf_form(&spec, &src, &coh, phi).unwrap()).unwrap();
        let b = mean_number_difference(&mgf_form(&spec, &src, &coh, phi + 2.0 * PI).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        let pa = parity_expectation(&spec, &src, 2.0, phi).unwrap();
        let pb = parity_expectation(&spec, &src, 2.0, phi + 2.0 * PI).unwrap();
        prop_assert!((pa - pb).abs() <= 1e-10);
    }
}

#[test]
fn sweeps_are_bitwise_reproducible() {
    for detection in [Detection::DifferenceIntensity, Detection::Parity] {
        let grid = SweepGrid {
            r_values: vec![0.1, 0.3, 0.5],
            tau_resolution: 32,
            detection,
            fixed: detection.default_point(),
        };
        let a = sweep_r(&grid, 1, 1, Objective::MaximizeR).unwrap();
        let b = sweep_r(&grid, 1, 1, Objective::MaximizeR).unwrap();
        assert_eq!(a, b);
        for row in a.iter().flatten() {
            assert!((row.r_merit - row.d_merit * row.probability).abs() < 1e-12);
            assert!(row.r_merit <= f64::max(row.d_merit, 0.0) + 1e-15);
            assert!(row.delta_phi > 0.0);
        }
    }
}
