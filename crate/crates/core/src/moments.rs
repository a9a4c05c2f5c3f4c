//! Symmetric-ordered quadrature moments of the interferometer output and the
//! difference-intensity phase uncertainty.

use crate::gaussian::{CoherentSource, GaussianExponentialForm, SqueezedSource};
use crate::herald::{a0, f_hat, f_hat_scale, nonvanishing_probability, OperationSpec};
use crate::jet::{MultiIndex, TruncatedPolynomial, Var};
use num_traits::Zero;

use crate::scalar::{im, re, real_part, Real, C};
use crate::{Error, Result};

/// Largest total moment order a [`MomentRequest`] may ask for.
pub const MAX_MOMENT_ORDER: u8 = 4;

/// Finite-difference step for phase derivatives, quoted for `f64`.
pub const PHASE_STEP: f64 = 1e-5;

/// Slopes below this are treated as a flat fringe.
pub const MIN_SLOPE: f64 = 1e-12;

/// Orders `(n1, m1, n2, m2)` of `q1, p1, q2, p2` in a Weyl-ordered moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MomentRequest {
    pub n1: u8,
    pub m1: u8,
    pub n2: u8,
    pub m2: u8,
}

impl MomentRequest {
    pub fn new(n1: u8, m1: u8, n2: u8, m2: u8) -> Result<Self> {
        let req = Self { n1, m1, n2, m2 };
        if req.total_order() > u32::from(MAX_MOMENT_ORDER) {
            return Err(Error::InvalidParameter(format!(
                "moment order {} exceeds {MAX_MOMENT_ORDER}",
                req.total_order()
            )));
        }
        Ok(req)
    }

    pub fn total_order(&self) -> u32 {
        u32::from(self.n1) + u32::from(self.m1) + u32::from(self.n2) + u32::from(self.m2)
    }

    fn orders(&self) -> [(Var, u8); 4] {
        [(Var::X1, self.n1), (Var::Y1, self.m1), (Var::X2, self.n2), (Var::Y2, self.m2)]
    }
}

/// Moment-generating function of the output Wigner function.
#[derive(Clone, Debug, PartialEq)]
pub struct MgfForm<T> {
    base: GaussianExponentialForm<T>,
    g0: T,
    probability: T,
    spec: OperationSpec<T>,
    source: SqueezedSource<T>,
    coherent: CoherentSource<T>,
    phi: T,
}

/// `g0 = sqrt((lambda^2 tau^2 - 1) / (lambda^2 - 1))`, the reciprocal of `a0`.
pub fn g0<T: Real>(lambda: T, tau: T) -> Result<T> {
    Ok(T::one() / a0(lambda, tau)?)
}

/// Matrices of the generating function: `g1` couples `u` to itself, `g2`
/// couples `u` to `x`, `g3` is quadratic and `g4` linear in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct MgfMatrices<T> {
    pub g1: [T; 16],
    pub g2: [C<T>; 16],
    pub g3: [T; 16],
    pub g4: [T; 4],
}

pub fn mgf_matrices<T: Real>(
    lambda: T,
    tau: T,
    coherent: &CoherentSource<T>,
    phi: T,
) -> MgfMatrices<T> {
    let one = T::one();
    let (lam, st) = (lambda, tau.sqrt());
    let lt = lam * tau;
    let tm = tau - one;
    let (s, c) = (phi / T::lit(2.0)).sin_cos();
    let (sn, cp) = phi.sin_cos();

    let d = lam * tm * tau;
    let e = -lam * tm * st;
    let b = st * (lam * lam * tau - one);
    let f = lam * tm;
    let g = lam * lam * tm * tau;
    let den = T::lit(4.0) * (one - lt * lt);
    let g1 = [
        d, tm, e, b, //
        tm, d, b, e, //
        e, b, f, g, //
        b, e, g, f,
    ]
    .map(|x| x / den);

    let pre = (one - tau).sqrt() / (T::lit(2.0) * (one - lt * lt));
    let (lm, lp) = (lt - one, lt + one);
    let ls = lam * st;
    let g2 = [
        re(lm * s),
        im(-lp * s),
        re(-lm * c),
        im(lp * c),
        re(-lm * s),
        im(-lp * s),
        re(lm * c),
        im(lp * c),
        re(ls * lm * s),
        im(ls * lp * s),
        re(-ls * lm * c),
        im(-ls * lp * c),
        re(-ls * lm * s),
        im(ls * lp * s),
        re(ls * lm * c),
        im(-ls * lp * c),
    ]
    .map(|x| x * pre);

    let z = T::zero();
    let q = T::lit(0.25);
    let g3 = [
        (lt * cp + one) / lp,
        z,
        lt * sn / lp,
        z,
        z,
        (lt * cp - one) / lm,
        z,
        lt * sn / lm,
        lt * sn / lp,
        z,
        (one - lt * cp) / lp,
        z,
        z,
        lt * sn / lm,
        z,
        -(lt * cp + one) / lm,
    ]
    .map(|x| x * q);

    let g4 = [coherent.d_x * c, coherent.d_p * c, coherent.d_x * s, coherent.d_p * s];
    MgfMatrices { g1, g2, g3, g4 }
}

pub fn mgf_form<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    coherent: &CoherentSource<T>,
    phi: T,
) -> Result<MgfForm<T>> {
    let lam = source.lambda();
    let g0 = g0(lam, spec.tau())?;
    let probability = nonvanishing_probability(spec, source)?;
    let m = mgf_matrices(lam, spec.tau(), coherent, phi);
    let mut vars = Var::HERALD.to_vec();
    vars.extend(Var::SOURCE);
    let mut base = GaussianExponentialForm::new(&vars, re(T::PI() / (g0 * probability)))?;
    base.add_bilinear(&Var::HERALD, &Var::HERALD, &m.g1.map(re))?;
    base.add_bilinear(&Var::HERALD, &Var::SOURCE, &m.g2)?;
    base.add_bilinear(&Var::SOURCE, &Var::SOURCE, &m.g3.map(re))?;
    base.add_linear_block(&Var::SOURCE, &m.g4.map(re))?;
    Ok(MgfForm {
        base,
        g0,
        probability,
        spec: *spec,
        source: *source,
        coherent: *coherent,
        phi,
    })
}

impl<T: Real> MgfForm<T> {
    pub fn base(&self) -> &GaussianExponentialForm<T> {
        &self.base
    }

    pub fn g0(&self) -> T {
        self.g0
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

    pub fn coherent(&self) -> &CoherentSource<T> {
        &self.coherent
    }

    pub fn phi(&self) -> T {
        self.phi
    }
}

/// Weyl-ordered moment `<q1^n1 p1^m1 q2^n2 p2^m2>` of the output state.
pub fn symmetric_moment<T: Real>(form: &MgfForm<T>, req: MomentRequest) -> Result<T> {
    let z = f_hat(&form.base, form.spec.k(), form.spec.l(), &req.orders())?;
    real_part(z, "symmetric moment")
}

/// All moments of one form up to a fixed total order.
///
/// Splitting the exponent as `Q(u) + x^T A x + b(u)^T x`, with `b` affine in
/// `u`, the `x`-derivative of order `alpha` is
/// `alpha! sum_beta c_beta b^(alpha - beta) / (alpha - beta)!`, where `c` are
/// the Taylor coefficients of `exp(x^T A x)`. Each `b^gamma` is paired once
/// against `exp(Q(u))` at the heralding corner `(k, k, l, l)`, so the
/// `u`-exponential is built a single time for every moment.
struct MomentKernel<T> {
    order: u8,
    scale: C<T>,
    gaussian: TruncatedPolynomial<T>,
    pairings: Vec<C<T>>,
}

impl<T: Real> MomentKernel<T> {
    fn new(form: &MgfForm<T>, order: u8) -> Result<Self> {
        let base = &form.base;
        let vars = base.vars();
        let n = vars.len();
        let pos = |v: Var| {
            vars.iter()
                .position(|&w| w == v)
                .ok_or_else(|| Error::InvalidParameter(format!("form lacks variable {v}")))
        };
        let u: Vec<usize> = Var::HERALD.iter().map(|&v| pos(v)).collect::<Result<_>>()?;
        let x: Vec<usize> = Var::SOURCE.iter().map(|&v| pos(v)).collect::<Result<_>>()?;
        if n != u.len() + x.len() {
            return Err(Error::DimensionMismatch(format!("{n} variables in a moment form")));
        }
        let (q, lin) = (base.quadratic(), base.linear());
        let block = |rows: &[usize], cols: &[usize]| -> Vec<C<T>> {
            rows.iter()
                .flat_map(|&i| cols.iter().map(move |&j| q[i * n + j]))
                .collect()
        };
        let (k, l) = (form.spec.k(), form.spec.l());
        let corner = [k, k, l, l];
        let u_lin: Vec<C<T>> = u.iter().map(|&i| lin[i]).collect();
        let herald = TruncatedPolynomial::from_quadratic(&Var::HERALD, &corner, &block(&u, &u), &u_lin)?
            .exp()?;
        let zero_lin = vec![C::zero(); x.len()];
        let gaussian =
            TruncatedPolynomial::from_quadratic(&Var::SOURCE, &[order; 4], &block(&x, &x), &zero_lin)?
                .exp()?;

        // b_i(u) = linear_i + sum_a (Q_ai + Q_ia) u_a
        let no_quad = vec![C::zero(); u.len() * u.len()];
        let couplings = x
            .iter()
            .map(|&i| {
                let slope: Vec<C<T>> = u.iter().map(|&a| q[a * n + i] + q[i * n + a]).collect();
                let mut b = TruncatedPolynomial::from_quadratic(&Var::HERALD, &corner, &no_quad, &slope)?;
                b.set_coeff(&MultiIndex::new([0u8; 4]), lin[i])?;
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;

        let radix = usize::from(order) + 1;
        let size = radix.pow(4);
        let mut powers: Vec<Option<TruncatedPolynomial<T>>> = vec![None; size];
        let mut pairings = vec![C::zero(); size];
        powers[0] = Some(TruncatedPolynomial::one(&Var::HERALD, &corner)?);
        pairings[0] = herald.corner_product(powers[0].as_ref().unwrap_or(&herald))?;
        for idx in 1..size {
            let g = digits(idx, radix);
            if g.iter().map(|&d| u32::from(d)).sum::<u32>() > u32::from(order) {
                continue;
            }
            let i = g.iter().position(|&d| d > 0).unwrap_or(0);
            let parent = idx - radix.pow(i as u32);
            let p = match &powers[parent] {
                Some(p) => p.checked_mul(&couplings[i])?,
                None => return Err(Error::Validation("moment kernel recursion broke".into())),
            };
            pairings[idx] = herald.corner_product(&p)?;
            powers[idx] = Some(p);
        }

        let corner_factorial = MultiIndex::new(corner).factorial::<T>();
        let scale = base.prefactor() * base.constant().exp() * re(corner_factorial * f_hat_scale::<T>(k, l));
        Ok(Self { order, scale, gaussian, pairings })
    }

    fn moment(&self, req: MomentRequest) -> Result<T> {
        let alpha = [req.n1, req.m1, req.n2, req.m2];
        if req.total_order() > u32::from(self.order) {
            return Err(Error::OrdersExceedCaps { orders: alpha.to_vec(), caps: vec![self.order; 4] });
        }
        let radix = usize::from(self.order) + 1;
        let mut sum: C<T> = C::zero();
        for b0 in 0..=alpha[0] {
            for b1 in 0..=alpha[1] {
                for b2 in 0..=alpha[2] {
                    for b3 in 0..=alpha[3] {
                        let beta = MultiIndex::new([b0, b1, b2, b3]);
                        let c = self.gaussian.coeff(&beta)?;
                        if c.is_zero() {
                            continue;
                        }
                        let gamma: Vec<u8> = alpha.iter().zip(beta.exponents()).map(|(&a, &b)| a - b).collect();
                        let idx = gamma.iter().rev().fold(0, |acc, &d| acc * radix + usize::from(d));
                        sum += c * self.pairings[idx] / MultiIndex::new(gamma).factorial::<T>();
                    }
                }
            }
        }
        let z = sum * self.scale * MultiIndex::new(alpha).factorial::<T>();
        real_part(z, "symmetric moment")
    }
}

fn digits(mut idx: usize, radix: usize) -> [u8; 4] {
    let mut out = [0u8; 4];
    for d in &mut out {
        *d = (idx % radix) as u8;
        idx /= radix;
    }
    out
}

fn second_moments<T: Real>(kernel: &MomentKernel<T>) -> Result<[T; 4]> {
    let m = |n1, m1, n2, m2| kernel.moment(MomentRequest { n1, m1, n2, m2 });
    Ok([m(2, 0, 0, 0)?, m(0, 2, 0, 0)?, m(0, 0, 2, 0)?, m(0, 0, 0, 2)?])
}

/// First two moments of `O = n1 - n2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumberDifference<T> {
    pub mean: T,
    pub second_moment: T,
    pub variance: T,
}

/// `<n1 - n2>` with `n_i = (q_i^2 + p_i^2 - 1) / 2`.
pub fn mean_number_difference<T: Real>(form: &MgfForm<T>) -> Result<T> {
    let [q1, p1, q2, p2] = second_moments(&MomentKernel::new(form, 2)?)?;
    Ok(T::lit(0.5) * (q1 + p1 - q2 - p2))
}

pub fn number_difference<T: Real>(form: &MgfForm<T>) -> Result<NumberDifference<T>> {
    let kernel = MomentKernel::new(form, MAX_MOMENT_ORDER)?;
    let moment = |n1, m1, n2, m2| kernel.moment(MomentRequest { n1, m1, n2, m2 });
    let q = T::lit(0.25);
    let two = T::lit(2.0);
    let [q1, p1, q2, p2] = second_moments(&kernel)?;
    let n1_sq = q
        * (moment(4, 0, 0, 0)? + moment(0, 4, 0, 0)? - two * q1 - two * p1
            + two * moment(2, 2, 0, 0)?);
    let n2_sq = q
        * (moment(0, 0, 4, 0)? + moment(0, 0, 0, 4)? - two * q2 - two * p2
            + two * moment(0, 0, 2, 2)?);
    let cross = moment(2, 0, 2, 0)? + moment(2, 0, 0, 2)? + moment(0, 2, 2, 0)? + moment(0, 2, 0, 2)?;
    let n1n2 = q * (cross - (q1 + p1) - (q2 + p2) + T::one());
    let mean = T::lit(0.5) * (q1 + p1 - q2 - p2);
    let second_moment = n1_sq + n2_sq - two * n1n2;
    let variance = second_moment - mean * mean;
    let slack = T::tol(1e-9) * T::one().max(second_moment.abs());
    if !(variance >= -slack) {
        return Err(Error::Validation(format!("negative number-difference variance {variance}")));
    }
    Ok(NumberDifference { mean, second_moment, variance: variance.max(T::zero()) })
}

pub fn variance_number_difference<T: Real>(form: &MgfForm<T>) -> Result<T> {
    Ok(number_difference(form)?.variance)
}

/// Error-propagation estimate at one phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseEstimate<T> {
    pub delta_phi: T,
    pub signal: T,
    pub slope: T,
    pub probability: T,
}

/// Central difference with one Richardson step: `(4 D(h) - D(2h)) / 3`.
pub(crate) fn phase_slope<T: Real>(f: impl Fn(T) -> Result<T>, phi: T) -> Result<T> {
    let h = T::tol(PHASE_STEP);
    let two = T::lit(2.0);
    let d1 = (f(phi + h)? - f(phi - h)?) / (two * h);
    let d2 = (f(phi + two * h)? - f(phi - two * h)?) / (T::lit(4.0) * h);
    Ok((T::lit(4.0) * d1 - d2) / T::lit(3.0))
}

pub(crate) fn propagate<T: Real>(spread: T, slope: T) -> T {
    if slope.abs() < T::tol(MIN_SLOPE) {
        T::infinity()
    } else {
        spread / slope.abs()
    }
}

/// Difference-intensity phase uncertainty `sqrt(Var O) / |d<O>/dphi|`.
pub fn phase_uncertainty_di<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    coherent: &CoherentSource<T>,
    phi: T,
) -> Result<PhaseEstimate<T>> {
    let form = mgf_form(spec, source, coherent, phi)?;
    let stats = number_difference(&form)?;
    let slope = phase_slope(
        |x| mean_number_difference(&mgf_form(spec, source, coherent, x)?),
        phi,
    )?;
    Ok(PhaseEstimate {
        delta_phi: propagate(stats.variance.sqrt(), slope),
        signal: stats.mean,
        slope,
        probability: form.probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn setup(r: f64, k: u8, l: u8, tau: f64, dx: f64, phi: f64) -> MgfForm<f64> {
        mgf_form(
            &OperationSpec::new(k, l, tau).unwrap(),
            &SqueezedSource::new(r).unwrap(),
            &CoherentSource::new(dx, 0.0),
            phi,
        )
        .unwrap()
    }

    #[test]
    fn zeroth_moment_is_one() {
        for (r, k, l, tau) in [(0.3, 0, 1, 0.8), (0.8, 2, 1, 0.3), (0.0, 1, 1, 0.5)] {
            let f = setup(r, k, l, tau, 2.0, 0.7);
            assert_relative_eq!(
                symmetric_moment(&f, MomentRequest::default()).unwrap(),
                1.0,
                max_relative = 1e-12
            );
            assert_relative_eq!(f.g0() * a0(f.source().lambda(), tau).unwrap(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn coherent_state_through_identity() {
        let f = setup(0.0, 0, 0, 1.0 - 1e-9, 10.0, 0.0);
        let q1 = symmetric_moment(&f, MomentRequest::new(1, 0, 0, 0).unwrap()).unwrap();
        let p2 = symmetric_moment(&f, MomentRequest::new(0, 0, 0, 1).unwrap()).unwrap();
        assert_relative_eq!(q1, 10.0, max_relative = 1e-12);
        assert_abs_diff_eq!(p2, 0.0, epsilon = 1e-12);
        let nd = number_difference(&f).unwrap();
        assert_relative_eq!(nd.mean, 50.0, max_relative = 1e-12);
        assert_relative_eq!(nd.variance, 50.0, max_relative = 1e-9);
    }

    #[test]
    fn rotated_coherent_second_moment() {
        // q1_out = (q1 - q2) / sqrt 2 at phi = pi/2: <q^2> = d^2/2 + 1/2
        let f = setup(0.0, 0, 0, 1.0 - 1e-9, 10.0, FRAC_PI_2);
        let m = symmetric_moment(&f, MomentRequest::new(2, 0, 0, 0).unwrap()).unwrap();
        assert_relative_eq!(m, 50.5, max_relative = 1e-9);
    }

    #[test]
    fn shot_noise_limit() {
        let est = phase_uncertainty_di(
            &OperationSpec::new(0, 0, 1.0 - 1e-9).unwrap(),
            &SqueezedSource::new(0.0).unwrap(),
            &CoherentSource::new(10.0, 0.0),
            FRAC_PI_2,
        )
        .unwrap();
        assert_relative_eq!(est.delta_phi, 2f64.sqrt() / 10.0, max_relative = 1e-7);
    }

    #[test]
    fn flat_fringe_is_infinite() {
        // No light at all: the signal does not depend on phi.
        let est = phase_uncertainty_di(
            &OperationSpec::new(0, 0, 0.5).unwrap(),
            &SqueezedSource::new(0.0).unwrap(),
            &CoherentSource::new(0.0, 0.0),
            FRAC_PI_2,
        )
        .unwrap();
        assert!(est.delta_phi.is_infinite());
    }

    #[test]
    fn mean_is_periodic() {
        let a = mean_number_difference(&setup(0.5, 1, 1, 0.4, 3.0, 0.9)).unwrap();
        let b = mean_number_difference(&setup(0.5, 1, 1, 0.4, 3.0, 0.9 + 2.0 * PI)).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn kernel_agrees_with_direct_extraction() {
        let f = mgf_form(
            &OperationSpec::new(2, 1, 0.35).unwrap(),
            &SqueezedSource::new(0.6).unwrap(),
            &CoherentSource::new(1.5, -0.7),
            0.8,
        )
        .unwrap();
        let kernel = MomentKernel::new(&f, MAX_MOMENT_ORDER).unwrap();
        for idx in 0..625 {
            let [n1, m1, n2, m2] = digits(idx, 5);
            let Ok(req) = MomentRequest::new(n1, m1, n2, m2) else { continue };
            let fast: f64 = kernel.moment(req).unwrap();
            let direct = symmetric_moment(&f, req).unwrap();
            assert_relative_eq!(fast, direct, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn request_order_is_bounded() {
        assert!(MomentRequest::new(2, 2, 1, 0).is_err());
    }

    #[test]
    fn vanishing_probability_is_reported() {
        let err = mgf_form(
            &OperationSpec::new(0, 1, 0.5).unwrap(),
            &SqueezedSource::new(0.0).unwrap(),
            &CoherentSource::new(1.0, 0.0),
            0.3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::VanishingProbability(_)));
    }
}
