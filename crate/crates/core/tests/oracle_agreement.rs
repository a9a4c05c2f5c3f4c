use std::f64::consts::FRAC_PI_2;

use ngssv::gaussian::{CoherentSource, GaussianExponentialForm, SqueezedSource};
use ngssv::herald::{
    a0, heralded_form, heralded_form_with, herald_matrices, success_probability, MatrixAssignment,
    OperationSpec,
};
use ngssv::jet::{MultiIndex, TruncatedPolynomial, Var};
use ngssv::moments::{mgf_form, number_difference, symmetric_moment, MomentRequest};
use ngssv::oracle::{
    oracle_ngssv, oracle_number_difference, oracle_parity, oracle_symmetric_moment, oracle_wigner,
};
use ngssv::paritydet::parity_expectation;
use num_complex::Complex64;

const KL: [(u8, u8); 9] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn close(a: f64, b: f64, rtol: f64, atol: f64) -> bool {
    (a - b).abs() <= atol || rel(a, b) <= rtol
}

#[test]
fn success_probability_matches_oracle() {
    for (k, l) in KL {
        for tau in [0.2, 0.5, 0.8] {
            for r in [0.1, 0.5, 1.0] {
                let p = success_probability(
                    &OperationSpec::new(k, l, tau).unwrap(),
                    &SqueezedSource::new(r).unwrap(),
                )
                .unwrap();
                let o = oracle_ngssv(k.into(), l.into(), tau, r).unwrap().probability;
                assert!(rel(p, o) < 1e-8, "k={k} l={l} tau={tau} r={r}: {p} vs {o}");
            }
        }
    }
}

#[test]
fn jet_derivative_matches_heralding_amplitude() {
    let (r, tau) = (0.5f64, 0.7f64);
    let lam = r.tanh();
    let m = herald_matrices(lam, tau);
    let q: Vec<Complex64> = m.a4.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let series = TruncatedPolynomial::from_quadratic(&Var::HERALD, &[1, 1, 1, 1], &q, &[Complex64::new(0.0, 0.0); 4])
        .unwrap()
        .exp()
        .unwrap();
    let d = series.derivative_at_origin(&MultiIndex::new([1, 1, 1, 1])).unwrap();
    // P = pi a0 (-2)^2 / pi * d for k = l = 1
    let p = oracle_ngssv(1, 1, tau, r).unwrap().probability;
    assert!(rel(d.re * 4.0 * a0(lam, tau).unwrap(), p) < 1e-10);
    assert!(d.im.abs() < 1e-14);
}

#[test]
fn heralded_wigner_matches_oracle_grid() {
    let (r, tau) = (0.6, 0.9);
    for (k, l) in [(0u8, 1u8), (1, 1), (2, 1)] {
        let form = heralded_form(
            &OperationSpec::new(k, l, tau).unwrap(),
            &SqueezedSource::new(r).unwrap(),
        )
        .unwrap();
        let state = oracle_ngssv(k.into(), l.into(), tau, r).unwrap().state;
        for q in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for p in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let w = form.wigner(q, p).unwrap();
                let o = oracle_wigner(&state, q, p).unwrap();
                assert!(close(w, o, 1e-8, 1e-10), "k={k} l={l} ({q},{p}): {w} vs {o}");
            }
        }
    }
}

#[test]
fn swapped_matrix_roles_break_the_wigner_function() {
    let (r, tau) = (0.6, 0.9);
    let spec = OperationSpec::new(0, 1, tau).unwrap();
    let src = SqueezedSource::new(r).unwrap();
    let bad = heralded_form_with(&spec, &src, MatrixAssignment::Swapped).unwrap();
    let state = oracle_ngssv(0, 1, tau, r).unwrap().state;
    let worst = [(0.0, 0.0), (0.5, 0.5), (-1.0, 0.5)]
        .iter()
        .map(|&(q, p)| {
            let w = bad.wigner(q, p).map(|w| (w - oracle_wigner(&state, q, p).unwrap()).abs());
            w.unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-3);
}

#[test]
fn number_difference_matches_oracle() {
    for (k, l) in KL {
        for r in [0.0, 0.3, 0.8] {
            for tau in [0.3, 0.7] {
                let spec = OperationSpec::new(k, l, tau).unwrap();
                let src = SqueezedSource::new(r).unwrap();
                let Ok(h) = oracle_ngssv(k.into(), l.into(), tau, r) else {
                    // subtraction from the vacuum cannot herald
                    assert!(r == 0.0 && l > k);
                    continue;
                };
                for phi in [0.3, FRAC_PI_2] {
                    for dx in [2.0, 10.0] {
                        let coh = CoherentSource::new(dx, 0.0);
                        let nd = number_difference(&mgf_form(&spec, &src, &coh, phi).unwrap()).unwrap();
                        let o = oracle_number_difference(&h.state, coh.alpha(), phi).unwrap();
                        let ctx = format!("k={k} l={l} r={r} tau={tau} phi={phi} dx={dx}");
                        assert!(close(nd.mean, o.mean, 1e-7, 1e-9), "{ctx} mean {} vs {}", nd.mean, o.mean);
                        assert!(
                            close(nd.variance, o.variance, 1e-7, 1e-9),
                            "{ctx} var {} vs {}",
                            nd.variance,
                            o.variance
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn individual_moments_match_oracle() {
    let spec = OperationSpec::new(0, 1, 0.8).unwrap();
    let src = SqueezedSource::new(0.3).unwrap();
    let coh = CoherentSource::new(1.5, 0.4);
    let h = oracle_ngssv(0, 1, 0.8, 0.3).unwrap();
    let form = mgf_form(&spec, &src, &coh, FRAC_PI_2).unwrap();
    let orders: [[u8; 4]; 8] = [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 2, 2],
        [2, 0, 2, 0],
        [1, 1, 1, 1],
        [0, 0, 0, 4],
        [3, 0, 0, 1],
    ];
    for o in orders {
        let req = MomentRequest::new(o[0], o[1], o[2], o[3]).unwrap();
        let closed = symmetric_moment(&form, req).unwrap();
        let brute = oracle_symmetric_moment(&h.state, coh.alpha(), FRAC_PI_2, o).unwrap();
        assert!(close(closed, brute, 1e-9, 1e-11), "{o:?}: {closed} vs {brute}");
    }
}

#[test]
fn parity_matches_oracle() {
    for (k, l) in KL {
        for r in [0.0, 0.2, 0.5, 1.0] {
            for tau in [0.2, 0.5, 0.8] {
                let Ok(h) = oracle_ngssv(k.into(), l.into(), tau, r) else {
                    continue;
                };
                let spec = OperationSpec::new(k, l, tau).unwrap();
                let src = SqueezedSource::new(r).unwrap();
                for phi in [0.01, 0.3] {
                    let v = parity_expectation(&spec, &src, 2.0, phi).unwrap();
                    let o = oracle_parity(&h.state, Complex64::new(2f64.sqrt(), 0.0), phi).unwrap();
                    assert!((v - o).abs() < 1e-7, "k={k} l={l} r={r} tau={tau} phi={phi}: {v} vs {o}");
                    assert!(v.abs() <= 1.0);
                }
            }
        }
    }
}

#[test]
fn parity_constant_term_carries_squared_displacement() {
    // Competing readings of the displacement power differ once d_x != 1.
    let spec = OperationSpec::new(0, 0, 0.5).unwrap();
    let src = SqueezedSource::new(0.3).unwrap();
    let h = oracle_ngssv(0, 0, 0.5, 0.3).unwrap();
    let dx = 2.0;
    let v = parity_expectation(&spec, &src, dx, 0.3).unwrap();
    let o = oracle_parity(&h.state, Complex64::new(dx / 2f64.sqrt(), 0.0), 0.3).unwrap();
    assert!((v - o).abs() < 1e-10);
}

#[test]
fn probability_is_independent_of_displacement() {
    let spec = OperationSpec::new(1, 2, 0.4).unwrap();
    let src = SqueezedSource::new(0.7).unwrap();
    let a = mgf_form(&spec, &src, &CoherentSource::new(0.0, 0.0), 0.2).unwrap().probability();
    let b = mgf_form(&spec, &src, &CoherentSource::new(10.0, -3.0), 0.2).unwrap().probability();
    assert_eq!(a, b);
}

#[test]
fn output_wigner_is_normalized_form() {
    // The zeroth moment of a displaced, interfered state is one.
    let form = mgf_form(
        &OperationSpec::new(2, 1, 0.3).unwrap(),
        &SqueezedSource::new(0.8).unwrap(),
        &CoherentSource::new(3.0, 1.0),
        1.1,
    )
    .unwrap();
    let z: f64 = symmetric_moment(&form, MomentRequest::default()).unwrap();
    assert!((z - 1.0).abs() < 1e-12);
    let _: &GaussianExponentialForm<f64> = form.base();
}
