//! Parity detection on the second output port.

use crate::gaussian::{GaussianExponentialForm, SqueezedSource};
use crate::herald::{f_hat, nonvanishing_probability, OperationSpec};
use crate::jet::Var;
use crate::moments::{phase_slope, propagate, PhaseEstimate};
use crate::scalar::{re, real_part, Real, C};
use crate::{Error, Result};

/// Generating form of `<(-1)^n2>` for a real displacement `d_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParityForm<T> {
    base: GaussianExponentialForm<T>,
    p1: T,
    p2: T,
    probability: T,
    spec: OperationSpec<T>,
    source: SqueezedSource<T>,
    d_x: T,
    phi: T,
}

impl<T: Real> ParityForm<T> {
    pub fn base(&self) -> &GaussianExponentialForm<T> {
        &self.base
    }

    pub fn p1(&self) -> T {
        self.p1
    }

    pub fn p2(&self) -> T {
        self.p2
    }

    pub fn probability(&self) -> T {
        self.probability
    }

    pub fn spec(&self) -> &OperationSpec<T> {
        &self.spec
    }

    pub fn source(&self) -> &SqueezedSource<T> {
        &self.source
    }

    pub fn d_x(&self) -> T {
        self.d_x
    }

    pub fn phi(&self) -> T {
        self.phi
    }
}

/// Quadratic `q1` (row-major, `u` by `u`) and linear `q2` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ParityMatrices<T> {
    pub q1: [T; 16],
    pub q2: [T; 4],
    pub p1: T,
    pub p2: T,
}

pub fn parity_matrices<T: Real>(lambda: T, tau: T, phi: T) -> Result<ParityMatrices<T>> {
    let one = T::one();
    let (lam, st) = (lambda, tau.sqrt());
    let (sn, cp) = phi.sin_cos();
    let lt = lam * tau;
    if !(lt * cp.abs() < one) {
        return Err(Error::InvalidParameter(format!(
            "lambda * tau * |cos phi| = {} must stay below 1",
            lt * cp.abs()
        )));
    }
    let tm = one - tau;
    // (1 - tau) t0, simplified so that tau -> 1 stays finite.
    let t0 = -st * (lam * lam * tau * (T::lit(2.0) * phi).cos() + lam * lam * tau - T::lit(2.0))
        / T::lit(2.0);
    let a = tm * lt * cp * cp;
    let b = -tm * cp;
    let c = tm * lam * st * cp;
    let d = tm * lam;
    let e = -tm * lam * lam * tau * cp;
    let den = T::lit(4.0) * (lt * lt * cp * cp - one);
    let q1 = [
        a, b, c, t0, //
        b, a, t0, c, //
        c, t0, d, e, //
        t0, c, e, d,
    ]
    .map(|x| x / den);
    let lin = (one - tau).sqrt() / (T::lit(2.0) - T::lit(2.0) * lt * cp);
    let q2 = [-sn, sn, -lam * st * sn, lam * st * sn].map(|x| x * lin);
    let p1 = ((lam * lam - one) / (lt * lt * cp * cp - one)).sqrt();
    let p2 = (lt + one) * (cp - one) / (T::lit(2.0) - T::lit(2.0) * lt * cp);
    Ok(ParityMatrices { q1, q2, p1, p2 })
}

pub fn parity_form<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    d_x: T,
    phi: T,
) -> Result<ParityForm<T>> {
    let m = parity_matrices(source.lambda(), spec.tau(), phi)?;
    let probability = nonvanishing_probability(spec, source)?;
    let mut base =
        GaussianExponentialForm::new(&Var::HERALD, re(T::PI() * m.p1 / probability))?;
    base.add_constant(re(d_x * d_x * m.p2));
    base.add_bilinear(&Var::HERALD, &Var::HERALD, &m.q1.map(re))?;
    base.add_linear_block(&Var::HERALD, &m.q2.map(|x| re(x * d_x)))?;
    Ok(ParityForm {
        base,
        p1: m.p1,
        p2: m.p2,
        probability,
        spec: *spec,
        source: *source,
        d_x,
        phi,
    })
}

/// Evaluates a parity form, checking it lies in `[-1, 1]`.
pub fn evaluate_parity<T: Real>(form: &ParityForm<T>) -> Result<T> {
    let z: C<T> = f_hat(&form.base, form.spec.k(), form.spec.l(), &[])?;
    let v = real_part(z, "parity expectation")?;
    if !(v.abs() <= T::one() + T::tol(1e-9)) {
        return Err(Error::Validation(format!("parity expectation {v} outside [-1, 1]")));
    }
    Ok(v.max(-T::one()).min(T::one()))
}

/// `<(-1)^n2>` at the output, with the coherent displacement along `q` only.
pub fn parity_expectation<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    d_x: T,
    phi: T,
) -> Result<T> {
    evaluate_parity(&parity_form(spec, source, d_x, phi)?)
}

/// `sqrt(1 - <Pi>^2) / |d<Pi>/dphi|`.
pub fn phase_uncertainty_parity<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    d_x: T,
    phi: T,
) -> Result<PhaseEstimate<T>> {
    let form = parity_form(spec, source, d_x, phi)?;
    let signal = evaluate_parity(&form)?;
    let slope = phase_slope(|x| parity_expectation(spec, source, d_x, x), phi)?;
    let spread = (T::one() - signal * signal).max(T::zero()).sqrt();
    Ok(PhaseEstimate {
        delta_phi: propagate(spread, slope),
        signal,
        slope,
        probability: form.probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(k: u8, l: u8, tau: f64) -> OperationSpec<f64> {
        OperationSpec::new(k, l, tau).unwrap()
    }

    fn src(r: f64) -> SqueezedSource<f64> {
        SqueezedSource::new(r).unwrap()
    }

    #[test]
    fn vacuum_second_port_at_zero_phase() {
        for dx in [0.0, 1.0, 4.0] {
            let v = parity_expectation(&spec(0, 0, 0.5), &src(0.0), dx, 0.0).unwrap();
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn no_light_gives_unit_parity() {
        for phi in [0.0, 0.4, 2.0] {
            let v = parity_expectation(&spec(0, 0, 0.5), &src(0.0), 0.0, phi).unwrap();
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn coherent_parity_closed_form() {
        // Coherent light alone: <Pi> = exp(-2 |alpha|^2 sin^2(phi/2)).
        let (dx, phi) = (2.0, 0.3);
        let v = parity_expectation(&spec(0, 0, 0.5), &src(0.0), dx, phi).unwrap();
        let expect = (-dx * dx * (phi / 2.0f64).sin().powi(2)).exp();
        assert_relative_eq!(v, expect, max_relative = 1e-12);
    }

    #[test]
    fn shot_noise_limit() {
        let est = phase_uncertainty_parity(&spec(0, 0, 0.5), &src(0.0), 2.0, 0.01).unwrap();
        assert!((est.delta_phi - 0.5f64.sqrt()).abs() < 5e-3, "{}", est.delta_phi);
    }

    #[test]
    fn near_unit_transmissivity_is_finite() {
        let v = parity_expectation(&spec(1, 1, 1.0 - 1e-12), &src(0.5), 2.0, 0.3).unwrap();
        assert!(v.is_finite() && v.abs() <= 1.0);
    }
}
