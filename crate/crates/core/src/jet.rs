//! Truncated multivariate polynomials ("jets") with complex coefficients.
//!
//! The heralding and moment formulas are mixed partial derivatives, at the
//! origin, of exponentials of quadratic forms. Expanding the exponential as a
//! power series truncated at the requested derivative orders turns every such
//! derivative into a single coefficient lookup.

use std::fmt;

use num_traits::{One, Zero};

use crate::scalar::{factorial, Real, C};
use crate::{Error, Result};

/// Auxiliary and phase-space variables, listed in the global ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    U1,
    V1,
    U2,
    V2,
    X1,
    Y1,
    X2,
    Y2,
    Q1,
    P1,
    Q2,
    P2,
}

impl Var {
    /// Heralding auxiliaries `(u1, v1, u2, v2)`.
    pub const HERALD: [Var; 4] = [Var::U1, Var::V1, Var::U2, Var::V2];
    /// Moment-generating auxiliaries `(x1, y1, x2, y2)`.
    pub const SOURCE: [Var; 4] = [Var::X1, Var::Y1, Var::X2, Var::Y2];
    /// Phase-space quadratures `(q1, p1, q2, p2)`.
    pub const PHASE: [Var; 4] = [Var::Q1, Var::P1, Var::Q2, Var::P2];
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::U1 => "u1",
            Var::V1 => "v1",
            Var::U2 => "u2",
            Var::V2 => "v2",
            Var::X1 => "x1",
            Var::Y1 => "y1",
            Var::X2 => "x2",
            Var::Y2 => "y2",
            Var::Q1 => "q1",
            Var::P1 => "p1",
            Var::Q2 => "q2",
            Var::P2 => "p2",
        };
        f.write_str(s)
    }
}

/// Exponents of a monomial, one per active variable of the owning polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: impl Into<Vec<u8>>) -> Self {
        MultiIndex(exponents.into())
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// Product of the factorials of the exponents.
    pub fn factorial<T: Real>(&self) -> T {
        self.0
            .iter()
            .fold(T::one(), |acc, &e| acc * factorial::<T>(e as u32))
    }
}

impl From<&[u8]> for MultiIndex {
    fn from(e: &[u8]) -> Self {
        MultiIndex(e.to_vec())
    }
}

/// Polynomial over an ordered subset of [`Var`] with a strict per-variable
/// degree cap. Coefficients live in a dense mixed-radix array; every product
/// and exponential discards monomials outside the caps immediately.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedPolynomial<T> {
    vars: Vec<Var>,
    caps: Vec<u8>,
    strides: Vec<usize>,
    coeffs: Vec<C<T>>,
}

/// A nonzero monomial prepared for shifting other monomials by it.
struct Shift<T> {
    offset: usize,
    /// `(variable, largest exponent that can still absorb this shift)`.
    limits: Vec<(usize, u8)>,
    coeff: C<T>,
    /// `coeff` times the total degree, for the exponential recurrence.
    weighted: C<T>,
}

impl<T> Shift<T> {
    #[inline]
    fn fits(&self, exponents: &[u8]) -> bool {
        self.limits.iter().all(|&(v, lim)| exponents[v] <= lim)
    }
}

impl<T: Real> TruncatedPolynomial<T> {
    /// The zero polynomial. Variables must be strictly increasing in the global order.
    pub fn zero(vars: &[Var], caps: &[u8]) -> Result<Self> {
        if vars.len() != caps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} variables but {} caps",
                vars.len(),
                caps.len()
            )));
        }
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "variables {vars:?} are not in strictly increasing global order"
            )));
        }
        let mut strides = Vec::with_capacity(vars.len());
        let mut size = 1usize;
        for &c in caps {
            strides.push(size);
            size *= c as usize + 1;
        }
        Ok(Self {
            vars: vars.to_vec(),
            caps: caps.to_vec(),
            strides,
            coeffs: vec![C::zero(); size],
        })
    }

    pub fn one(vars: &[Var], caps: &[u8]) -> Result<Self> {
        let mut p = Self::zero(vars, caps)?;
        p.coeffs[0] = C::one();
        Ok(p)
    }

    /// Builds `sum_ij Q_ij z_i z_j + sum_i L_i z_i`, truncated to `caps`.
    ///
    /// `quadratic` is row-major `n x n`; it need not be symmetric, since only
    /// `Q_ij + Q_ji` contributes to each cross term.
    pub fn from_quadratic(
        vars: &[Var],
        caps: &[u8],
        quadratic: &[C<T>],
        linear: &[C<T>],
    ) -> Result<Self> {
        let n = vars.len();
        if quadratic.len() != n * n || linear.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "quadratic has {} entries and linear {} for {n} variables",
                quadratic.len(),
                linear.len()
            )));
        }
        let mut p = Self::zero(vars, caps)?;
        for i in 0..n {
            let mut e = vec![0u8; n];
            e[i] = 1;
            p.add_to(&e, linear[i]);
            e[i] = 2;
            p.add_to(&e, quadratic[i * n + i]);
            e[i] = 1;
            for j in i + 1..n {
                e[j] = 1;
                p.add_to(&e, quadratic[i * n + j] + quadratic[j * n + i]);
                e[j] = 0;
            }
        }
        Ok(p)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn caps(&self) -> &[u8] {
        &self.caps
    }

    /// Number of stored monomials (the size of the truncation box).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn constant_term(&self) -> C<T> {
        self.coeffs[0]
    }

    fn index_of(&self, e: &[u8]) -> Option<usize> {
        if e.len() != self.vars.len() {
            return None;
        }
        let mut idx = 0;
        for ((&x, &c), &s) in e.iter().zip(&self.caps).zip(&self.strides) {
            if x > c {
                return None;
            }
            idx += x as usize * s;
        }
        Some(idx)
    }

    /// Adds to a coefficient, silently dropping monomials beyond the caps.
    fn add_to(&mut self, e: &[u8], value: C<T>) {
        if let Some(i) = self.index_of(e) {
            self.coeffs[i] += value;
        }
    }

    fn check_index(&self, index: &MultiIndex) -> Result<usize> {
        self.index_of(index.exponents())
            .ok_or_else(|| Error::OrdersExceedCaps {
                orders: index.exponents().to_vec(),
                caps: self.caps.clone(),
            })
    }

    pub fn coeff(&self, index: &MultiIndex) -> Result<C<T>> {
        Ok(self.coeffs[self.check_index(index)?])
    }

    pub fn set_coeff(&mut self, index: &MultiIndex, value: C<T>) -> Result<()> {
        let i = self.check_index(index)?;
        self.coeffs[i] = value;
        Ok(())
    }

    fn exponents_table(&self) -> Vec<u8> {
        let nv = self.vars.len();
        let mut table = vec![0u8; self.coeffs.len() * nv];
        for idx in 0..self.coeffs.len() {
            let mut rest = idx;
            for v in 0..nv {
                let radix = self.caps[v] as usize + 1;
                table[idx * nv + v] = (rest % radix) as u8;
                rest /= radix;
            }
        }
        table
    }

    /// Iterates over nonzero monomials.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, C<T>)> + '_ {
        let nv = self.vars.len();
        let table = self.exponents_table();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, &c)| (MultiIndex::new(&table[i * nv..(i + 1) * nv]), c))
    }

    fn shifts(&self, table: &[u8]) -> Vec<Shift<T>> {
        let nv = self.vars.len();
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, &coeff)| {
                let e = &table[i * nv..(i + 1) * nv];
                let degree: usize = e.iter().map(|&x| x as usize).sum();
                Shift {
                    offset: i,
                    limits: e
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x > 0)
                        .map(|(v, &x)| (v, self.caps[v] - x))
                        .collect(),
                    coeff,
                    weighted: coeff * T::lit(degree as f64),
                }
            })
            .collect()
    }

    fn same_layout(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars || self.caps != other.caps {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        let mut out = self.clone();
        for (a, &b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        let mut out = self.clone();
        for (a, &b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: C<T>) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Truncated product.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        let table = self.exponents_table();
        let nv = self.vars.len();
        let shifts = other.shifts(&table);
        let mut out = Self::zero(&self.vars, &self.caps)?;
        for (m, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let em = &table[m * nv..(m + 1) * nv];
            for s in shifts.iter().filter(|s| s.fits(em)) {
                out.coeffs[m + s.offset] += a * s.coeff;
            }
        }
        Ok(out)
    }

    /// Truncated exponential series.
    ///
    /// Uses the Euler-operator identity `E exp(p) = exp(p) E p`, which on the
    /// homogeneous components reads `d f_d = sum_j j p_j f_{d-j}`; each degree
    /// is therefore built from lower ones with a sparse multiply by `p`.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let nv = self.vars.len();
        let table = self.exponents_table();
        let shifts = self.shifts(&table);
        let max_degree: usize = self.caps.iter().map(|&c| c as usize).sum();
        let mut by_degree: Vec<Vec<usize>> = vec![Vec::new(); max_degree + 1];
        for idx in 0..self.coeffs.len() {
            let d: usize = table[idx * nv..(idx + 1) * nv]
                .iter()
                .map(|&x| x as usize)
                .sum();
            by_degree[d].push(idx);
        }
        let mut f = Self::zero(&self.vars, &self.caps)?;
        f.coeffs[0] = C::one();
        for (d, indices) in by_degree.iter().enumerate() {
            if d > 0 {
                let inv = T::one() / T::lit(d as f64);
                for &m in indices {
                    f.coeffs[m] *= inv;
                }
            }
            for &m in indices {
                let fm = f.coeffs[m];
                if fm.is_zero() {
                    continue;
                }
                let em = &table[m * nv..(m + 1) * nv];
                for s in shifts.iter().filter(|s| s.fits(em)) {
                    f.coeffs[m + s.offset] += fm * s.weighted;
                }
            }
        }
        Ok(f)
    }

    /// Top-corner coefficient of `self * other`, `sum_m a_m b_(caps - m)`.
    pub fn corner_product(&self, other: &Self) -> Result<C<T>> {
        self.same_layout(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(other.coeffs.iter().rev())
            .fold(C::zero(), |acc, (&a, &b)| acc + a * b))
    }

    /// Mixed partial derivative at the origin: `coeff(orders) * prod(orders_i!)`.
    pub fn derivative_at_origin(&self, orders: &MultiIndex) -> Result<C<T>> {
        let c = self.coeff(orders)?;
        Ok(c * orders.factorial::<T>())
    }

    /// Largest coefficient magnitude outside the constant term.
    pub fn max_nonconstant_norm(&self) -> T {
        self.coeffs[1..]
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.norm()))
    }
}
