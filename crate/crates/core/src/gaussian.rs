//! Phase-space primitives: Wigner functions of the input states, symplectic
//! matrices of the beam splitters, and the Gaussian-exponential carrier every
//! closed-form result is expressed in.
//!
//! Quadratures are dimensionless with vacuum covariance `I/2`.

use num_traits::{One, Zero};

use crate::jet::{MultiIndex, TruncatedPolynomial, Var};
use crate::scalar::{re, Real, C};
use crate::{Error, Result};

/// Distance of clamped transmissivities from the open-interval ends.
pub const TAU_CLAMP: f64 = 1e-3;

/// Clamps a transmissivity into `[eps, 1 - eps]`, reporting whether it moved.
pub fn clamp_transmissivity<T: Real>(tau: T) -> (T, bool) {
    let eps = T::lit(TAU_CLAMP);
    if tau < eps {
        (eps, true)
    } else if tau > T::one() - eps {
        (T::one() - eps, true)
    } else {
        (tau, false)
    }
}

/// Single-mode squeezed vacuum with squeezing parameter `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezedSource<T> {
    r: T,
}

impl<T: Real> SqueezedSource<T> {
    pub fn new(r: T) -> Result<Self> {
        if !(r >= T::zero()) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "squeezing must be finite and non-negative, got {r}"
            )));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> T {
        self.r
    }

    /// `tanh r`, always in `[0, 1)`.
    pub fn lambda(&self) -> T {
        self.r.tanh()
    }
}

/// Coherent state displaced by `(d_x, d_p)` in quadrature units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentSource<T> {
    pub d_x: T,
    pub d_p: T,
}

impl<T: Real> CoherentSource<T> {
    pub fn new(d_x: T, d_p: T) -> Self {
        Self { d_x, d_p }
    }

    /// `alpha = (d_x + i d_p) / sqrt 2`.
    pub fn alpha(&self) -> C<T> {
        C::new(self.d_x, self.d_p) / T::SQRT_2()
    }

    pub fn mean_photons(&self) -> T {
        (self.d_x * self.d_x + self.d_p * self.d_p) / T::lit(2.0)
    }
}

/// `prefactor * exp(z^T M z + L^T z + c)` over a named variable list.
///
/// `M` is kept symmetric; every builder splits cross terms evenly.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianExponentialForm<T> {
    vars: Vec<Var>,
    prefactor: C<T>,
    constant: C<T>,
    linear: Vec<C<T>>,
    quadratic: Vec<C<T>>,
}

impl<T: Real> GaussianExponentialForm<T> {
    /// A form with zero exponent. Variables must be distinct.
    pub fn new(vars: &[Var], prefactor: C<T>) -> Result<Self> {
        for (i, a) in vars.iter().enumerate() {
            if vars[i + 1..].contains(a) {
                return Err(Error::InvalidParameter(format!("variable {a} repeated")));
            }
        }
        let n = vars.len();
        Ok(Self {
            vars: vars.to_vec(),
            prefactor,
            constant: C::zero(),
            linear: vec![C::zero(); n],
            quadratic: vec![C::zero(); n * n],
        })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn prefactor(&self) -> C<T> {
        self.prefactor
    }

    pub fn constant(&self) -> C<T> {
        self.constant
    }

    pub fn linear(&self) -> &[C<T>] {
        &self.linear
    }

    /// Row-major symmetric matrix of the quadratic part.
    pub fn quadratic(&self) -> &[C<T>] {
        &self.quadratic
    }

    fn pos(&self, v: Var) -> Result<usize> {
        self.vars
            .iter()
            .position(|&w| w == v)
            .ok_or_else(|| Error::InvalidParameter(format!("form has no variable {v}")))
    }

    pub fn scale(&mut self, factor: C<T>) {
        self.prefactor *= factor;
    }

    pub fn add_constant(&mut self, value: C<T>) {
        self.constant += value;
    }

    pub fn add_linear(&mut self, v: Var, value: C<T>) -> Result<()> {
        let i = self.pos(v)?;
        self.linear[i] += value;
        Ok(())
    }

    /// Adds `value * a * b` to the exponent.
    pub fn add_quadratic(&mut self, a: Var, b: Var, value: C<T>) -> Result<()> {
        let (i, j) = (self.pos(a)?, self.pos(b)?);
        let n = self.vars.len();
        if i == j {
            self.quadratic[i * n + i] += value;
        } else {
            let half = value / T::lit(2.0);
            self.quadratic[i * n + j] += half;
            self.quadratic[j * n + i] += half;
        }
        Ok(())
    }

    /// Adds `rows^T B cols` to the exponent, `B` row-major `rows.len() x cols.len()`.
    pub fn add_bilinear(&mut self, rows: &[Var], cols: &[Var], b: &[C<T>]) -> Result<()> {
        if b.len() != rows.len() * cols.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} block given {} entries",
                rows.len(),
                cols.len(),
                b.len()
            )));
        }
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let value = b[i * cols.len() + j];
                if !value.is_zero() {
                    self.add_quadratic(r, c, value)?;
                }
            }
        }
        Ok(())
    }

    /// Adds `vars^T L` to the exponent.
    pub fn add_linear_block(&mut self, vars: &[Var], l: &[C<T>]) -> Result<()> {
        if vars.len() != l.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} variables given {} linear entries",
                vars.len(),
                l.len()
            )));
        }
        for (&v, &x) in vars.iter().zip(l) {
            self.add_linear(v, x)?;
        }
        Ok(())
    }

    /// Pointwise product; the variable list is the union.
    pub fn product(&self, other: &Self) -> Result<Self> {
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().filter(|v| !self.vars.contains(v)));
        let mut out = Self::new(&vars, self.prefactor * other.prefactor)?;
        out.constant = self.constant + other.constant;
        for f in [self, other] {
            let n = f.vars.len();
            for (i, &a) in f.vars.iter().enumerate() {
                out.add_linear(a, f.linear[i])?;
                for (j, &b) in f.vars.iter().enumerate() {
                    let k = out.pos(a)? * vars.len() + out.pos(b)?;
                    out.quadratic[k] += f.quadratic[i * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Linear change of variables `old = A new` on `targets` (row-major `A`).
    pub fn substitute(&self, targets: &[Var], a: &[T]) -> Result<Self> {
        let m = targets.len();
        if a.len() != m * m {
            return Err(Error::DimensionMismatch(format!(
                "{m} targets given a map with {} entries",
                a.len()
            )));
        }
        let n = self.vars.len();
        let idx = targets
            .iter()
            .map(|&v| self.pos(v))
            .collect::<Result<Vec<_>>>()?;
        // Full map with identity on untouched variables.
        let mut t = vec![T::zero(); n * n];
        for i in 0..n {
            t[i * n + i] = T::one();
        }
        for (r, &ir) in idx.iter().enumerate() {
            t[ir * n + ir] = T::zero();
            for (c, &ic) in idx.iter().enumerate() {
                t[ir * n + ic] = a[r * m + c];
            }
        }
        let mut out = self.clone();
        for j in 0..n {
            out.linear[j] = (0..n).fold(C::zero(), |acc, i| acc + self.linear[i] * t[i * n + j]);
        }
        // M' = T^T M T
        let mut mt = vec![C::<T>::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                mt[i * n + j] = (0..n).fold(C::zero(), |acc, k| {
                    acc + self.quadratic[i * n + k] * t[k * n + j]
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                out.quadratic[i * n + j] =
                    (0..n).fold(C::zero(), |acc, k| acc + mt[k * n + j] * t[k * n + i]);
            }
        }
        Ok(out)
    }

    /// Applies a symplectic map to a Wigner function: `W_out(z) = W_in(S^-1 z)`.
    pub fn transform(&self, targets: &[Var], s: &SymplecticMatrix<T>) -> Result<Self> {
        self.substitute(targets, s.inverse().entries())
    }

    /// Fixes one variable to a value and removes it from the list.
    pub fn fix(&self, v: Var, value: C<T>) -> Result<Self> {
        let p = self.pos(v)?;
        let n = self.vars.len();
        let mut vars = self.vars.clone();
        vars.remove(p);
        let mut out = Self::new(&vars, self.prefactor)?;
        out.constant =
            self.constant + self.quadratic[p * n + p] * value * value + self.linear[p] * value;
        let keep: Vec<usize> = (0..n).filter(|&i| i != p).collect();
        for (a, &i) in keep.iter().enumerate() {
            out.linear[a] = self.linear[i] + self.quadratic[i * n + p] * value * T::lit(2.0);
            for (b, &j) in keep.iter().enumerate() {
                out.quadratic[a * (n - 1) + b] = self.quadratic[i * n + j];
            }
        }
        Ok(out)
    }

    /// Value of a form with every variable fixed by `point`.
    pub fn evaluate(&self, point: &[(Var, C<T>)]) -> Result<C<T>> {
        let mut f = self.clone();
        for &(v, x) in point {
            f = f.fix(v, x)?;
        }
        if !f.vars.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "variables {:?} left unassigned",
                f.vars
            )));
        }
        Ok(f.prefactor * f.constant.exp())
    }

    /// Mixed partial derivative at the origin.
    ///
    /// Variables of the form not named in `orders` are set to zero; a positive
    /// order on a variable the form does not contain gives zero.
    pub fn derivative_at_origin(&self, orders: &[(Var, u8)]) -> Result<C<T>> {
        let mut active: Vec<(Var, u8)> = orders.iter().copied().filter(|&(_, o)| o > 0).collect();
        active.sort();
        if active.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("derivative variable repeated".into()));
        }
        if active.iter().any(|&(v, _)| !self.vars.contains(&v)) {
            return Ok(C::zero());
        }
        let n = self.vars.len();
        let idx: Vec<usize> = active.iter().map(|&(v, _)| self.pos(v)).collect::<Result<_>>()?;
        let vars: Vec<Var> = active.iter().map(|&(v, _)| v).collect();
        let caps: Vec<u8> = active.iter().map(|&(_, o)| o).collect();
        let q: Vec<C<T>> = idx
            .iter()
            .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.quadratic[i * n + j])
            .collect();
        let l: Vec<C<T>> = idx.iter().map(|&i| self.linear[i]).collect();
        let series = TruncatedPolynomial::from_quadratic(&vars, &caps, &q, &l)?.exp()?;
        let d = series.derivative_at_origin(&MultiIndex::new(caps))?;
        Ok(d * self.prefactor * self.constant.exp())
    }
}

/// Real `2n x 2n` matrix acting on `(q1, p1, q2, p2, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Real> SymplecticMatrix<T> {
    pub fn from_entries(dim: usize, entries: Vec<T>) -> Result<Self> {
        if !dim.is_multiple_of(2) || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "phase-space matrix of dimension {dim} given {} entries",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(modes: usize) -> Self {
        let dim = 2 * modes;
        let mut entries = vec![T::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = T::one();
        }
        Self { dim, entries }
    }

    /// Two-mode matrix `[[a I, b I], [c I, d I]]` with 2x2 identity blocks.
    fn two_mode_blocks(a: T, b: T, c: T, d: T) -> Self {
        let mut m = Self::identity(2);
        for i in 0..2 {
            m.entries[i * 4 + i] = a;
            m.entries[i * 4 + i + 2] = b;
            m.entries[(i + 2) * 4 + i] = c;
            m.entries[(i + 2) * 4 + i + 2] = d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[i * self.dim + j]
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j];
            }
        }
        Self { dim: n, entries }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "composing {} with {}",
                self.dim, other.dim
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Self { dim: n, entries }
    }

    /// Standard symplectic form, block-diagonal `[[0, 1], [-1, 0]]`.
    pub fn omega(modes: usize) -> Self {
        let dim = 2 * modes;
        let mut entries = vec![T::zero(); dim * dim];
        for m in 0..modes {
            entries[(2 * m) * dim + 2 * m + 1] = T::one();
            entries[(2 * m + 1) * dim + 2 * m] = -T::one();
        }
        Self { dim, entries }
    }

    /// `S^-1 = -Omega S^T Omega`, exact for symplectic `S`.
    pub fn inverse(&self) -> Self {
        let omega = Self::omega(self.dim / 2);
        let mut inv = omega.mul_unchecked(&self.transpose()).mul_unchecked(&omega);
        inv.entries.iter_mut().for_each(|x| *x = -*x);
        inv
    }

    /// `max |S Omega S^T - Omega|`.
    pub fn symplectic_defect(&self) -> T {
        let omega = Self::omega(self.dim / 2);
        let lhs = self.mul_unchecked(&omega).mul_unchecked(&self.transpose());
        lhs.entries
            .iter()
            .zip(&omega.entries)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| (0..self.dim).fold(T::zero(), |acc, j| acc + self.get(i, j) * v[j]))
            .collect()
    }
}

/// Heralding beam splitter of transmissivity `tau` on `(q2, p2, q3, p3)`.
pub fn beam_splitter_matrix<T: Real>(tau: T) -> Result<SymplecticMatrix<T>> {
    if !(tau > T::zero() && tau < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "transmissivity must lie in (0, 1), got {tau}"
        )));
    }
    let (t, s) = (tau.sqrt(), (T::one() - tau).sqrt());
    Ok(SymplecticMatrix::two_mode_blocks(t, s, -s, t))
}

/// Net phase-space action of the balanced interferometer with phase `phi`.
pub fn mzi_matrix<T: Real>(phi: T) -> SymplecticMatrix<T> {
    let half = phi / T::lit(2.0);
    let (s, c) = half.sin_cos();
    SymplecticMatrix::two_mode_blocks(c, -s, s, c)
}

/// Wigner function of the squeezed vacuum over `(q2, p2)`.
pub fn ssv_wigner<T: Real>(src: &SqueezedSource<T>) -> GaussianExponentialForm<T> {
    let mut w = GaussianExponentialForm::new(&[Var::Q2, Var::P2], re(T::FRAC_1_PI()))
        .expect("distinct variables");
    let e2r = (T::lit(2.0) * src.r).exp();
    w.add_quadratic(Var::Q2, Var::Q2, re(-e2r)).unwrap();
    w.add_quadratic(Var::P2, Var::P2, re(-T::one() / e2r)).unwrap();
    w
}

/// Wigner function of the coherent state over `(q1, p1)`.
pub fn coherent_wigner<T: Real>(src: &CoherentSource<T>) -> GaussianExponentialForm<T> {
    let mut w = GaussianExponentialForm::new(&[Var::Q1, Var::P1], re(T::FRAC_1_PI()))
        .expect("distinct variables");
    let two = T::lit(2.0);
    w.add_quadratic(Var::Q1, Var::Q1, -C::one()).unwrap();
    w.add_quadratic(Var::P1, Var::P1, -C::one()).unwrap();
    w.add_linear(Var::Q1, re(two * src.d_x)).unwrap();
    w.add_linear(Var::P1, re(two * src.d_p)).unwrap();
    w.add_constant(re(-(src.d_x * src.d_x + src.d_p * src.d_p)));
    w
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre<T: Real>(n: u32, x: T) -> T {
    let (mut prev, mut cur) = (T::one(), T::one() - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = T::lit(k as f64);
        let next = ((T::lit(2.0) * kf + T::one() - x) * cur - kf * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Wigner function of the Fock state `|n>`.
pub fn fock_wigner<T: Real>(n: u32) -> impl Fn(T, T) -> T {
    move |q: T, p: T| {
        let rho2 = q * q + p * p;
        let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
        sign * T::FRAC_1_PI() * (-rho2).exp() * laguerre(n, T::lit(2.0) * rho2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    /// Tensor-product Gauss-Legendre-free midpoint quadrature on a box.
    fn integrate_2d(f: impl Fn(f64, f64) -> f64, half_width: (f64, f64), n: usize) -> f64 {
        let (hx, hy) = (2.0 * half_width.0 / n as f64, 2.0 * half_width.1 / n as f64);
        let mut acc = 0.0;
        for i in 0..n {
            let x = -half_width.0 + (i as f64 + 0.5) * hx;
            for j in 0..n {
                let y = -half_width.1 + (j as f64 + 0.5) * hy;
                acc += f(x, y);
            }
        }
        acc * hx * hy
    }

    #[test]
    fn vacuum_limit_of_ssv() {
        let w = ssv_wigner(&SqueezedSource::new(0.0).unwrap());
        let v = w
            .evaluate(&[(Var::Q2, Complex64::new(0.3, 0.0)), (Var::P2, Complex64::new(-0.4, 0.0))])
            .unwrap();
        assert_abs_diff_eq!(v.re, (-0.25f64).exp() / std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn ssv_quadratic_entries() {
        let w = ssv_wigner(&SqueezedSource::new(0.5).unwrap());
        let q = w.quadratic();
        assert_abs_diff_eq!(q[0].re, -1f64.exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(q[3].re, -(-1f64).exp(), epsilon = 1e-15);
        assert_eq!(q[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ssv_normalizes() {
        // Midpoint rule is spectrally accurate for Gaussians on a wide box.
        let r = 0.8f64;
        let w = ssv_wigner(&SqueezedSource::new(r).unwrap());
        let f = |q: f64, p: f64| {
            w.evaluate(&[(Var::Q2, Complex64::new(q, 0.0)), (Var::P2, Complex64::new(p, 0.0))])
                .unwrap()
                .re
        };
        let sq = (-2.0 * r).exp().sqrt() / 2f64.sqrt();
        let sp = (2.0 * r).exp().sqrt() / 2f64.sqrt();
        let total = integrate_2d(f, (8.0 * sq, 8.0 * sp), 400);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn fock_wigner_values_and_normalization() {
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(fock_wigner::<f64>(0)(0.0, 0.0), 1.0 / pi, epsilon = 1e-15);
        assert_abs_diff_eq!(fock_wigner::<f64>(1)(0.0, 0.0), -1.0 / pi, epsilon = 1e-15);
        let total = integrate_2d(fock_wigner::<f64>(2), (8.0, 8.0), 400);
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7f64;
        assert_abs_diff_eq!(laguerre(2, x), 1.0 - 2.0 * x + x * x / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            laguerre(3, x),
            1.0 - 3.0 * x + 1.5 * x * x - x * x * x / 6.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn beam_splitter_balanced_and_limits() {
        let b = beam_splitter_matrix(0.5f64).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(b.get(0, 0), h, epsilon = 1e-15);
        assert_abs_diff_eq!(b.get(0, 2), h, epsilon = 1e-15);
        assert_abs_diff_eq!(b.get(2, 0), -h, epsilon = 1e-15);
        assert_abs_diff_eq!(b.get(3, 3), h, epsilon = 1e-15);
        assert_abs_diff_eq!(b.get(0, 1), 0.0);

        let (tau, flagged) = clamp_transmissivity(1.0f64);
        assert!(flagged);
        let near = beam_splitter_matrix(tau).unwrap();
        let id = SymplecticMatrix::<f64>::identity(2);
        let dev = near
            .entries()
            .iter()
            .zip(id.entries())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(dev < 0.04);

        assert!(beam_splitter_matrix(1.0f64).is_err());
        assert!(beam_splitter_matrix(0.0f64).is_err());
        assert!(beam_splitter_matrix(f64::NAN).is_err());
    }

    #[test]
    fn matrices_are_symplectic() {
        assert!(beam_splitter_matrix(0.3f64).unwrap().symplectic_defect() < 1e-12);
        for phi in [0.0, 0.3, 1.7, std::f64::consts::PI, -2.2] {
            assert!(mzi_matrix(phi).symplectic_defect() < 1e-12);
        }
    }

    #[test]
    fn mzi_limits_and_composition() {
        let id = mzi_matrix(0.0f64);
        assert_eq!(id, SymplecticMatrix::identity(2));
        let swap = mzi_matrix(std::f64::consts::PI);
        assert_abs_diff_eq!(swap.get(0, 2), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(swap.get(2, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(swap.get(0, 0), 0.0, epsilon = 1e-15);

        let (a, b) = (0.4f64, 1.3f64);
        let composed = mzi_matrix(a).compose(&mzi_matrix(b)).unwrap();
        let direct = mzi_matrix(a + b);
        for (x, y) in composed.entries().iter().zip(direct.entries()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        let inv = mzi_matrix(0.9f64).inverse();
        for (x, y) in inv.entries().iter().zip(mzi_matrix(-0.9f64).entries()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn transform_moves_coherent_mean() {
        // A coherent state in mode 1 through the interferometer splits its amplitude.
        let coh = coherent_wigner(&CoherentSource::new(2.0f64, 0.0));
        let vac = {
            let mut w = GaussianExponentialForm::new(&[Var::Q2, Var::P2], re(std::f64::consts::FRAC_1_PI)).unwrap();
            w.add_quadratic(Var::Q2, Var::Q2, re(-1.0)).unwrap();
            w.add_quadratic(Var::P2, Var::P2, re(-1.0)).unwrap();
            w
        };
        let phi = 1.1f64;
        let out = coh.product(&vac).unwrap().transform(&Var::PHASE, &mzi_matrix(phi)).unwrap();
        let (s, c) = (phi / 2.0).sin_cos();
        let at = |q1: f64, q2: f64| {
            out.evaluate(&[
                (Var::Q1, Complex64::new(q1, 0.0)),
                (Var::P1, Complex64::new(0.0, 0.0)),
                (Var::Q2, Complex64::new(q2, 0.0)),
                (Var::P2, Complex64::new(0.0, 0.0)),
            ])
            .unwrap()
            .re
        };
        let peak = at(2.0 * c, 2.0 * s);
        assert_abs_diff_eq!(peak, 1.0 / (std::f64::consts::PI.powi(2)), epsilon = 1e-14);
        assert!(at(2.0 * c + 0.1, 2.0 * s) < peak);
    }

    #[test]
    fn fix_and_derivative_agree_with_closed_form() {
        // exp(a z^2 + b z w + c) ; d^2/dz dw at 0 = b e^c
        let mut f = GaussianExponentialForm::new(&[Var::U1, Var::V1], Complex64::new(2.0, 0.0)).unwrap();
        f.add_quadratic(Var::U1, Var::U1, Complex64::new(0.3, 0.0)).unwrap();
        f.add_quadratic(Var::U1, Var::V1, Complex64::new(0.0, 1.5)).unwrap();
        f.add_constant(Complex64::new(0.2, 0.0));
        let d = f.derivative_at_origin(&[(Var::U1, 1), (Var::V1, 1)]).unwrap();
        let expect = Complex64::new(0.0, 1.5) * 2.0 * 0.2f64.exp();
        assert!((d - expect).norm() < 1e-14);
        let g = f.fix(Var::V1, Complex64::new(1.0, 0.0)).unwrap();
        let v = g.evaluate(&[(Var::U1, Complex64::new(0.5, 0.0))]).unwrap();
        let direct = f
            .evaluate(&[(Var::U1, Complex64::new(0.5, 0.0)), (Var::V1, Complex64::new(1.0, 0.0))])
            .unwrap();
        assert!((v - direct).norm() < 1e-14);
        assert_eq!(f.derivative_at_origin(&[(Var::X1, 1)]).unwrap(), Complex64::new(0.0, 0.0));
    }
}
