//! Heralded non-Gaussian operations on the squeezed vacuum.
//!
//! The squeezed vacuum meets a Fock ancilla `|k>` on a beam splitter of
//! transmissivity `tau`; detecting `l` photons in the ancilla arm heralds the
//! output. All results are expressed as Gaussian exponentials in the
//! auxiliary variables `(u1, v1, u2, v2)`, from which the Fock-state
//! structure is recovered by the operator [`f_hat`].

use std::fmt;

use num_traits::Zero;

use crate::gaussian::{GaussianExponentialForm, SqueezedSource};
use crate::jet::Var;
use crate::scalar::{factorial, im, re, real_part, Real, C};
use crate::{Error, Result};

/// Default bound on `k + l`.
pub const DEFAULT_MAX_PHOTONS: u8 = 4;

/// Probabilities below this (quoted for `f64`) make normalization meaningless.
pub(crate) const MIN_PROBABILITY: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperationKind {
    Subtraction,
    Addition,
    Catalysis,
}

impl OperationKind {
    pub fn abbreviation(self) -> &'static str {
        match self {
            OperationKind::Subtraction => "PS",
            OperationKind::Addition => "PA",
            OperationKind::Catalysis => "PC",
        }
    }
}

/// Ancilla photon number `k`, heralded count `l` and transmissivity `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperationSpec<T> {
    k: u8,
    l: u8,
    tau: T,
}

impl<T: Real> OperationSpec<T> {
    pub fn new(k: u8, l: u8, tau: T) -> Result<Self> {
        Self::with_max_photons(k, l, tau, DEFAULT_MAX_PHOTONS)
    }

    pub fn with_max_photons(k: u8, l: u8, tau: T, max: u8) -> Result<Self> {
        if u16::from(k) + u16::from(l) > u16::from(max) {
            return Err(Error::InvalidParameter(format!(
                "k + l = {} exceeds the configured maximum {max}",
                u16::from(k) + u16::from(l)
            )));
        }
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "transmissivity must lie in (0, 1), got {tau}"
            )));
        }
        Ok(Self { k, l, tau })
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn l(&self) -> u8 {
        self.l
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn kind(&self) -> OperationKind {
        match self.k.cmp(&self.l) {
            std::cmp::Ordering::Less => OperationKind::Subtraction,
            std::cmp::Ordering::Greater => OperationKind::Addition,
            std::cmp::Ordering::Equal => OperationKind::Catalysis,
        }
    }
}

/// Conventional name such as `2-PS`; mixed cases spell out `k` and `l`.
pub fn operation_label(k: u8, l: u8) -> String {
    let kind = match k.cmp(&l) {
        std::cmp::Ordering::Less => OperationKind::Subtraction,
        std::cmp::Ordering::Greater => OperationKind::Addition,
        std::cmp::Ordering::Equal => OperationKind::Catalysis,
    };
    match (k, l) {
        (0, n) | (n, 0) if n > 0 => format!("{n}-{}", kind.abbreviation()),
        (n, m) if n == m => format!("{n}-{}", kind.abbreviation()),
        _ => format!("{}(k={k},l={l})", kind.abbreviation()),
    }
}

impl<T: Real> fmt::Display for OperationSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at tau={}", operation_label(self.k, self.l), self.tau)
    }
}

/// Applies `(-2)^(k+l) / (pi k! l!) d^k_u1 d^k_v1 d^l_u2 d^l_v2 |_0`, together
/// with any extra derivative orders on other variables.
pub fn f_hat<T: Real>(
    form: &GaussianExponentialForm<T>,
    k: u8,
    l: u8,
    extra: &[(Var, u8)],
) -> Result<C<T>> {
    let mut orders = vec![(Var::U1, k), (Var::V1, k), (Var::U2, l), (Var::V2, l)];
    orders.extend_from_slice(extra);
    let d = form.derivative_at_origin(&orders)?;
    Ok(d * f_hat_scale::<T>(k, l))
}

/// `(-2)^(k+l) / (pi k! l!)`.
pub(crate) fn f_hat_scale<T: Real>(k: u8, l: u8) -> T {
    let sign = if (k + l).is_multiple_of(2) { T::one() } else { -T::one() };
    sign * T::lit(2.0).powi(i32::from(k + l))
        / (T::PI() * factorial::<T>(u32::from(k)) * factorial::<T>(u32::from(l)))
}

/// Matrices of the heralded Wigner function and success probability.
///
/// `a2` is the quadratic block in `u`, `a3` the `4 x 2` coupling between `u`
/// and `(q2, p2)`, `a4` the quadratic block of the success probability.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldMatrices<T> {
    pub a1: [T; 2],
    pub a2: [T; 16],
    pub a3: [C<T>; 8],
    pub a4: [T; 16],
}

pub fn herald_matrices<T: Real>(lambda: T, tau: T) -> HeraldMatrices<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let (lam, st) = (lambda, tau.sqrt());
    let lt = lam * tau;
    let den4 = T::lit(4.0) * (lt * lt - one);
    let tm = tau - one;
    let b = st * (one - lam * lam * tau);

    let a1 = [two / (lt - one) + one, one - two / (lt + one)];

    let d = -lam * tm * tau;
    let e = lam * tm * st;
    let f = lam - lam * tau;
    let g = lam * lam * tm * tau;
    let a2 = [
        d, tm, -e, b, //
        tm, d, b, -e, //
        -e, b, f, g, //
        b, -e, g, f,
    ]
    .map(|x| x / den4);
    let a4 = [
        d, -tm, e, b, //
        -tm, d, b, e, //
        e, b, f, -g, //
        b, e, -g, f,
    ]
    .map(|x| x / den4);

    let pre = (one - tau).sqrt() / (lt * lt - one);
    let a3 = [
        re(-lt - one),
        im(lt - one),
        re(lt + one),
        im(lt - one),
        re(-lam * st * (lt + one)),
        im(-lam * st * (lt - one)),
        re(lam * st * (lt + one)),
        im(-lam * st * (lt - one)),
    ]
    .map(|x| x * pre);

    HeraldMatrices { a1, a2, a3, a4 }
}

/// `a0 = sqrt((lambda^2 - 1) / (lambda^2 tau^2 - 1))`.
pub fn a0<T: Real>(lambda: T, tau: T) -> Result<T> {
    let lt = lambda * tau;
    if !(lt < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "lambda * tau = {lt} must stay below 1"
        )));
    }
    Ok(((lambda * lambda - T::one()) / (lt * lt - T::one())).sqrt())
}

/// Which matrix plays which role when assembling the heralded Wigner form.
///
/// `Swapped` deliberately exchanges the two roles; it exists as a negative
/// control for the oracle comparison and never produces a valid state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatrixAssignment {
    #[default]
    Standard,
    Swapped,
}

/// Unnormalized heralded Wigner function in generating form.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldedForm<T> {
    base: GaussianExponentialForm<T>,
    a0: T,
    spec: OperationSpec<T>,
    source: SqueezedSource<T>,
}

const U: [Var; 4] = Var::HERALD;
const XI2: [Var; 2] = [Var::Q2, Var::P2];

pub fn heralded_form<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
) -> Result<HeraldedForm<T>> {
    heralded_form_with(spec, source, MatrixAssignment::Standard)
}

pub fn heralded_form_with<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    assignment: MatrixAssignment,
) -> Result<HeraldedForm<T>> {
    let lam = source.lambda();
    let a0 = a0(lam, spec.tau)?;
    let m = herald_matrices(lam, spec.tau);
    let vars = [Var::Q2, Var::P2, Var::U1, Var::V1, Var::U2, Var::V2];
    let mut base = GaussianExponentialForm::new(&vars, C::new(T::one(), T::zero()))?;
    base.add_quadratic(Var::Q2, Var::Q2, re(m.a1[0]))?;
    base.add_quadratic(Var::P2, Var::P2, re(m.a1[1]))?;
    match assignment {
        MatrixAssignment::Standard => {
            base.add_bilinear(&U, &U, &m.a2.map(re))?;
            base.add_bilinear(&U, &XI2, &m.a3)?;
        }
        MatrixAssignment::Swapped => {
            let coupling: Vec<C<T>> = (0..4)
                .flat_map(|i| [re(m.a2[4 * i]), re(m.a2[4 * i + 1])])
                .collect();
            let mut quad = vec![C::zero(); 16];
            for i in 0..4 {
                quad[4 * i] = m.a3[2 * i];
                quad[4 * i + 1] = m.a3[2 * i + 1];
            }
            base.add_bilinear(&U, &U, &quad)?;
            base.add_bilinear(&U, &XI2, &coupling)?;
        }
    }
    Ok(HeraldedForm { base, a0, spec: *spec, source: *source })
}

impl<T: Real> HeraldedForm<T> {
    pub fn base(&self) -> &GaussianExponentialForm<T> {
        &self.base
    }

    pub fn a0(&self) -> T {
        self.a0
    }

    pub fn spec(&self) -> &OperationSpec<T> {
        &self.spec
    }

    pub fn source(&self) -> &SqueezedSource<T> {
        &self.source
    }

    /// Heralded Wigner function at `(q, p)` before division by the success probability.
    pub fn unnormalized_wigner(&self, q: T, p: T) -> Result<T> {
        let fixed = self.base.fix(Var::Q2, re(q))?.fix(Var::P2, re(p))?;
        let w = f_hat(&fixed, self.spec.k, self.spec.l, &[])? * self.a0;
        real_part(w, "heralded Wigner value")
    }

    /// Normalized heralded Wigner function at `(q, p)`.
    pub fn wigner(&self, q: T, p: T) -> Result<T> {
        let prob = success_probability(&self.spec, &self.source)?;
        if prob < T::tol(MIN_PROBABILITY) {
            return Err(Error::VanishingProbability(prob.to_f64_lossy()));
        }
        Ok(self.unnormalized_wigner(q, p)? / prob)
    }
}

/// Probability that the ancilla detector registers exactly `l` photons.
pub fn success_probability<T: Real>(spec: &OperationSpec<T>, source: &SqueezedSource<T>) -> Result<T> {
    let lam = source.lambda();
    let a0 = a0(lam, spec.tau)?;
    let m = herald_matrices(lam, spec.tau);
    let mut form = GaussianExponentialForm::new(&U, C::new(T::one(), T::zero()))?;
    form.add_bilinear(&U, &U, &m.a4.map(re))?;
    let raw = f_hat(&form, spec.k, spec.l, &[])? * (a0 * T::PI());
    let p = real_part(raw, "success probability")?;
    check_probability(p)
}

pub(crate) fn check_probability<T: Real>(p: T) -> Result<T> {
    let slack = T::tol(1e-9);
    if !(p >= -slack && p <= T::one() + slack) {
        return Err(Error::Validation(format!("success probability {p} outside [0, 1]")));
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// Success probability, rejecting outcomes too rare to normalize by.
pub(crate) fn nonvanishing_probability<T: Real>(
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
) -> Result<T> {
    let p = success_probability(spec, source)?;
    if p < T::tol(MIN_PROBABILITY) {
        return Err(Error::VanishingProbability(p.to_f64_lossy()));
    }
    Ok(p)
}
