//! Brute-force Fock-basis reference for every closed-form quantity.
//!
//! Nothing here touches the Gaussian-exponential machinery: states are
//! amplitude vectors, beam splitters act block by block at fixed total photon
//! number, and detection statistics come from ladder-operator algebra.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::{Error, Result};

/// Tail mass tolerated when truncating an input state.
pub const TAIL_MASS: f64 = 1e-20;

/// Largest photon number any oracle vector may reach.
pub const HARD_CUTOFF: usize = 4000;

/// Amplitudes indexed by photon number.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn fock(n: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len().saturating_sub(1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self { amplitudes: self.amplitudes.iter().map(|a| a / n).collect() }
    }

    /// Probability weight at photon numbers `>= from`.
    pub fn tail_mass(&self, from: usize) -> f64 {
        self.amplitudes.iter().skip(from).map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Expectation of `(-1)^n`.
    pub fn parity(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| if n % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    fn padded(&self, len: usize) -> Vec<Complex64> {
        let mut v = self.amplitudes.clone();
        v.resize(len.max(v.len()), Complex64::new(0.0, 0.0));
        v
    }
}

/// Squeezed vacuum truncated at `cutoff` photons (not renormalized).
pub fn squeezed_vacuum(r: f64, cutoff: usize) -> FockVector {
    let lam = r.tanh();
    let mut amps = vec![Complex64::new(0.0, 0.0); cutoff + 1];
    let mut a = 1.0 / r.cosh().sqrt();
    let mut n = 0;
    while 2 * n <= cutoff {
        amps[2 * n] = Complex64::new(a, 0.0);
        let k = n as f64;
        a *= -lam * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
        n += 1;
    }
    FockVector::new(amps)
}

/// Smallest even cutoff whose geometric tail bound falls below [`TAIL_MASS`].
pub fn squeezed_cutoff(r: f64) -> Result<usize> {
    let lam2 = r.tanh().powi(2);
    if lam2 == 0.0 {
        return Ok(0);
    }
    // |c_{2n}|^2 drops by at most lam^2 per step, so the tail after c_{2n} is
    // bounded by |c_{2n+2}|^2 / (1 - lam^2).
    let mut w = 1.0 / r.cosh();
    let mut n = 0usize;
    loop {
        let k = n as f64;
        let next = w * lam2 * (2.0 * k + 1.0) / (2.0 * k + 2.0);
        if next / (1.0 - lam2) < TAIL_MASS {
            return Ok(2 * n);
        }
        w = next;
        n += 1;
        if 2 * n > HARD_CUTOFF {
            return Err(Error::CutoffExceeded(HARD_CUTOFF));
        }
    }
}

/// Coherent state with amplitude `alpha`, truncated well past its bulk.
pub fn coherent_state(alpha: Complex64) -> Result<FockVector> {
    let m = alpha.norm();
    let cutoff = (m * m + 10.0 * m + 20.0).ceil() as usize;
    if cutoff > HARD_CUTOFF {
        return Err(Error::CutoffExceeded(HARD_CUTOFF));
    }
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = Complex64::new((-m * m / 2.0).exp(), 0.0);
    for n in 0..=cutoff {
        amps.push(a);
        a *= alpha / ((n + 1) as f64).sqrt();
    }
    Ok(FockVector::new(amps))
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sqrt(a! / b!)` without forming either factorial.
fn sqrt_factorial_ratio(a: usize, b: usize) -> f64 {
    let (hi, lo, invert) = if a >= b { (a, b, false) } else { (b, a, true) };
    let r = ((lo + 1)..=hi).fold(1.0, |acc, i| acc * (i as f64).sqrt());
    if invert {
        1.0 / r
    } else {
        r
    }
}

/// Generator `G = a1† a2 - a1 a2†` applied to a vector of the `n`-photon
/// block, indexed by the photon number of the second mode.
fn apply_generator(n: usize, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (j, &x) in v.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let (n1, n2) = ((n - j) as f64, j as f64);
        if j > 0 {
            out[j - 1] += ((n1 + 1.0) * n2).sqrt() * x;
        }
        if j < n {
            out[j + 1] -= (n1 * (n2 + 1.0)).sqrt() * x;
        }
    }
}

/// Block of `exp(-theta G)` at total photon number `n`.
///
/// This maps `a1† -> cos(theta) a1† + sin(theta) a2†` and
/// `a2† -> -sin(theta) a1† + cos(theta) a2†`. Entry `[i * (n + 1) + j]` is
/// `<n - i, i| U |n - j, j>`. Built by short Taylor steps, which stay
/// accurate where the binomial expansion cancels catastrophically.
pub fn rotation_block(n: usize, theta: f64) -> Vec<f64> {
    let dim = n + 1;
    let steps = ((theta.abs() * dim as f64) / 0.5).ceil().max(1.0) as usize;
    let h = -theta / steps as f64;
    let mut out = vec![0.0; dim * dim];
    let mut term = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    for j in 0..dim {
        let mut col = vec![0.0; dim];
        col[j] = 1.0;
        for _ in 0..steps {
            term.copy_from_slice(&col);
            for order in 1..60 {
                apply_generator(n, &term, &mut buf);
                let f = h / order as f64;
                let mut size = 0.0f64;
                for (t, (b, c)) in term.iter_mut().zip(buf.iter().zip(col.iter_mut())) {
                    *t = b * f;
                    *c += *t;
                    size = size.max(t.abs());
                }
                if size < 1e-20 {
                    break;
                }
            }
        }
        for i in 0..dim {
            out[i * dim + j] = col[i];
        }
    }
    out
}

/// Block of the heralding beam splitter on (signal, ancilla):
/// `a2† -> sqrt(tau) a2† - sqrt(1 - tau) a3†`.
pub fn beam_splitter_block(n: usize, tau: f64) -> Vec<f64> {
    rotation_block(n, (-(1.0 - tau).sqrt()).atan2(tau.sqrt()))
}

/// Block of the interferometer, `exp(-(phi/2)(a1† a2 - a1 a2†))`.
pub fn mzi_block(n: usize, phi: f64) -> Vec<f64> {
    rotation_block(n, phi / 2.0)
}

/// Heralding outcome: normalized signal state and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct HeraldedState {
    pub state: FockVector,
    pub probability: f64,
}

/// Unnormalized signal amplitude after mixing `input` with `|k>` and
/// projecting the ancilla on `|l>`.
pub fn herald_vector(input: &FockVector, k: usize, l: usize, tau: f64) -> FockVector {
    let (t, rho) = (tau.sqrt(), (1.0 - tau).sqrt());
    let len = (input.cutoff() + k + 1).saturating_sub(l);
    let mut out = vec![Complex64::new(0.0, 0.0); len.max(1)];
    for (n, &c) in input.amplitudes().iter().enumerate() {
        if c.norm_sqr() == 0.0 || n + k < l {
            continue;
        }
        let m = n + k - l;
        let mut s = 0.0;
        for j in 0..=n.min(l) {
            let i = l - j;
            if i > k {
                continue;
            }
            s += binomial(n, j)
                * t.powi((n - j) as i32)
                * (-rho).powi(j as i32)
                * binomial(k, i)
                * rho.powi((k - i) as i32)
                * t.powi(i as i32);
        }
        s *= sqrt_factorial_ratio(m, n) * sqrt_factorial_ratio(l, k);
        out[m] += c * s;
    }
    FockVector::new(out)
}

pub fn oracle_ngssv_with_cutoff(
    k: usize,
    l: usize,
    tau: f64,
    r: f64,
    cutoff: usize,
) -> Result<HeraldedState> {
    let raw = herald_vector(&squeezed_vacuum(r, cutoff), k, l, tau);
    let probability = raw.norm_sqr();
    if probability == 0.0 {
        return Err(Error::VanishingProbability(0.0));
    }
    Ok(HeraldedState { state: raw.normalized(), probability })
}

/// Heralded state with an adaptively chosen squeezed-vacuum cutoff.
pub fn oracle_ngssv(k: usize, l: usize, tau: f64, r: f64) -> Result<HeraldedState> {
    // Heralding can enhance high photon numbers polynomially; a few extra
    // photons beyond the bound keep that from mattering.
    let cutoff = squeezed_cutoff(r)? + 2 * (k + l) + 8;
    oracle_ngssv_with_cutoff(k, l, tau, r, cutoff)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Ladder {
    Up,
    Down,
}

/// Sum of products of single-mode ladder words on two modes.
#[derive(Clone, Debug, Default)]
struct OpSum {
    terms: Vec<(Complex64, Vec<Ladder>, Vec<Ladder>)>,
}

impl OpSum {
    fn single(coef: Complex64, mode: usize, op: Ladder) -> Self {
        let (w1, w2) = if mode == 0 { (vec![op], vec![]) } else { (vec![], vec![op]) };
        Self { terms: vec![(coef, w1, w2)] }
    }

    fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }

    fn scaled(mut self, c: Complex64) -> Self {
        self.terms.iter_mut().for_each(|t| t.0 *= c);
        self
    }

    /// Operator product `self * other`; different modes commute, so mode
    /// words simply concatenate.
    fn times(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, a1, a2) in &self.terms {
            for (cb, b1, b2) in &other.terms {
                let mut w1 = a1.clone();
                w1.extend(b1);
                let mut w2 = a2.clone();
                w2.extend(b2);
                terms.push((ca * cb, w1, w2));
            }
        }
        Self { terms }
    }
}

/// Applies a ladder word right to left, growing the vector as needed.
fn apply_word(v: &[Complex64], word: &[Ladder]) -> Vec<Complex64> {
    let mut cur = v.to_vec();
    for op in word.iter().rev() {
        cur = match op {
            Ladder::Up => {
                let mut next = vec![Complex64::new(0.0, 0.0); cur.len() + 1];
                for (n, &a) in cur.iter().enumerate() {
                    next[n + 1] = a * ((n + 1) as f64).sqrt();
                }
                next
            }
            Ladder::Down => (1..cur.len()).map(|n| cur[n] * (n as f64).sqrt()).collect(),
        };
    }
    cur
}

fn word_expectation(v: &[Complex64], word: &[Ladder]) -> Complex64 {
    let w = apply_word(v, word);
    v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
}

fn product_expectation(op: &OpSum, s1: &FockVector, s2: &FockVector) -> Complex64 {
    let mut memo1: HashMap<Vec<Ladder>, Complex64> = HashMap::new();
    let mut memo2: HashMap<Vec<Ladder>, Complex64> = HashMap::new();
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, w1, w2) in &op.terms {
        let e1 = *memo1
            .entry(w1.clone())
            .or_insert_with(|| word_expectation(s1.amplitudes(), w1));
        let e2 = *memo2
            .entry(w2.clone())
            .or_insert_with(|| word_expectation(s2.amplitudes(), w2));
        acc += c * e1 * e2;
    }
    acc
}

/// Output annihilation operators `(a1_out, a2_out)` in terms of the inputs.
fn output_modes(phi: f64) -> [(OpSum, OpSum); 2] {
    let (s, c) = (phi / 2.0).sin_cos();
    let r = |x: f64| Complex64::new(x, 0.0);
    let lower = |c1: f64, c2: f64| {
        OpSum::single(r(c1), 0, Ladder::Down).plus(OpSum::single(r(c2), 1, Ladder::Down))
    };
    let upper = |c1: f64, c2: f64| {
        OpSum::single(r(c1), 0, Ladder::Up).plus(OpSum::single(r(c2), 1, Ladder::Up))
    };
    [(lower(c, -s), upper(c, -s)), (lower(s, c), upper(s, c))]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumberStatistics {
    pub mean: f64,
    pub variance: f64,
}

fn real_or_fail(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > 1e-9 * z.re.abs().max(1.0) {
        return Err(Error::Validation(format!("oracle {what} is not real: {z}")));
    }
    Ok(z.re)
}

/// Mean and variance of `n1 - n2` at the output for input `|alpha> (x) state2`.
pub fn oracle_number_difference(
    state2: &FockVector,
    alpha: Complex64,
    phi: f64,
) -> Result<NumberStatistics> {
    let coh = coherent_state(alpha)?;
    let [(a1, a1d), (a2, a2d)] = output_modes(phi);
    let o = a1d.times(&a1).plus(a2d.times(&a2).scaled(Complex64::new(-1.0, 0.0)));
    let o2 = o.times(&o);
    let mean = real_or_fail(product_expectation(&o, &coh, state2), "mean")?;
    let second = real_or_fail(product_expectation(&o2, &coh, state2), "second moment")?;
    Ok(NumberStatistics { mean, variance: second - mean * mean })
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Weyl-ordered moment `<q1^n1 p1^m1 q2^n2 p2^m2>` of the output state,
/// symmetrized by averaging over every operator ordering.
pub fn oracle_symmetric_moment(
    state2: &FockVector,
    alpha: Complex64,
    phi: f64,
    orders: [u8; 4],
) -> Result<f64> {
    let coh = coherent_state(alpha)?;
    let [(a1, a1d), (a2, a2d)] = output_modes(phi);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = |a: &OpSum, ad: &OpSum| a.clone().plus(ad.clone()).scaled(Complex64::new(h, 0.0));
    let p = |a: &OpSum, ad: &OpSum| {
        a.clone()
            .scaled(Complex64::new(0.0, -h))
            .plus(ad.clone().scaled(Complex64::new(0.0, h)))
    };
    let quads = [q(&a1, &a1d), p(&a1, &a1d), q(&a2, &a2d), p(&a2, &a2d)];
    let list: Vec<usize> = orders
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(i, n as usize))
        .collect();
    let perms = permutations(&list);
    let mut sym = OpSum::default();
    for perm in &perms {
        let mut prod = OpSum { terms: vec![(Complex64::new(1.0, 0.0), vec![], vec![])] };
        for &i in perm {
            prod = prod.times(&quads[i]);
        }
        sym = sym.plus(prod.scaled(Complex64::new(1.0 / perms.len() as f64, 0.0)));
    }
    real_or_fail(product_expectation(&sym, &coh, state2), "moment")
}

/// `exp(beta a† - beta* a) v` by short Taylor steps on a padded space.
///
/// The truncated generator stays anti-Hermitian, so each step is unitary on
/// the padded space; the padding keeps the boundary out of reach.
pub fn displace(v: &FockVector, beta: Complex64) -> Result<FockVector> {
    let b = beta.norm();
    let dim0 = v.cutoff() + 1;
    let margin = (b * b + 10.0 * b * (dim0 as f64).sqrt() + 30.0).ceil() as usize;
    let dim = dim0 + margin;
    if dim > HARD_CUTOFF {
        return Err(Error::CutoffExceeded(HARD_CUTOFF));
    }
    let mut cur = v.padded(dim);
    let steps = (4.0 * b * (dim as f64).sqrt()).ceil().max(1.0) as usize;
    let h = 1.0 / steps as f64;
    let sq: Vec<f64> = (0..dim).map(|n| (n as f64).sqrt()).collect();
    let generator = |x: &[Complex64]| -> Vec<Complex64> {
        (0..dim)
            .map(|n| {
                let mut y = Complex64::new(0.0, 0.0);
                if n > 0 {
                    y += beta * sq[n] * x[n - 1];
                }
                if n + 1 < dim {
                    y -= beta.conj() * sq[n + 1] * x[n + 1];
                }
                y * h
            })
            .collect()
    };
    for _ in 0..steps {
        let mut term = cur.clone();
        let mut next = cur.clone();
        for order in 1..60 {
            term = generator(&term);
            let inv = 1.0 / order as f64;
            let mut size = 0.0f64;
            for (t, n) in term.iter_mut().zip(next.iter_mut()) {
                *t *= inv;
                *n += *t;
                size = size.max(t.norm());
            }
            if size < 1e-20 {
                break;
            }
        }
        cur = next;
    }
    let out = FockVector::new(cur);
    if out.tail_mass(dim - margin / 4) > 1e-13 {
        return Err(Error::CutoffExceeded(dim));
    }
    Ok(out)
}

/// Wigner function at `(q, p)` from the displaced-parity relation.
pub fn oracle_wigner(state: &FockVector, q: f64, p: f64) -> Result<f64> {
    let beta = Complex64::new(q, p) * std::f64::consts::FRAC_1_SQRT_2;
    Ok(displace(state, -beta)?.parity() / std::f64::consts::PI)
}

/// Output state of the interferometer for input `|0> (x) state2`, as rows
/// indexed by the first-mode photon number.
fn interfere_vacuum(state2: &FockVector, phi: f64) -> Vec<FockVector> {
    let (s, c) = (phi / 2.0).sin_cos();
    let n_max = state2.cutoff();
    let mut rows = vec![vec![Complex64::new(0.0, 0.0); n_max + 1]; n_max + 1];
    for (n, &a) in state2.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        // b†^n -> (-s a† + c b†)^n
        for i in 0..=n {
            let w = binomial(n, i).sqrt() * (-s).powi(i as i32) * c.powi((n - i) as i32);
            rows[i][n - i] += a * w;
        }
    }
    rows.into_iter().map(FockVector::new).collect()
}

/// `<(-1)^n2>` at the output for input `|alpha> (x) state2`.
///
/// The coherent input factors out as displacements `D1(c alpha) D2(s alpha)`
/// after the interferometer; the first of these cannot change mode-2 parity.
pub fn oracle_parity(state2: &FockVector, alpha: Complex64, phi: f64) -> Result<f64> {
    let s = (phi / 2.0).sin();
    let mut acc = 0.0;
    for row in interfere_vacuum(state2, phi) {
        if row.norm_sqr() == 0.0 {
            continue;
        }
        acc += displace(&row, alpha * s)?.parity();
    }
    Ok(acc)
}

/// Reference parity by explicit block-wise interference of the full
/// two-mode product state; quadratic in the cutoffs, for small cases.
pub fn oracle_parity_direct(state2: &FockVector, alpha: Complex64, phi: f64) -> Result<f64> {
    let coh = coherent_state(alpha)?;
    let (c1, c2) = (coh.cutoff(), state2.cutoff());
    let mut acc = 0.0;
    for n in 0..=(c1 + c2) {
        let dim = n + 1;
        // index j = photons in mode 2
        let input: Vec<Complex64> = (0..dim)
            .map(|j| {
                let i = n - j;
                if i <= c1 && j <= c2 {
                    coh.amplitudes()[i] * state2.amplitudes()[j]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        if input.iter().all(|a| a.norm_sqr() == 0.0) {
            continue;
        }
        let u = mzi_block(n, phi);
        for i in 0..dim {
            let out: Complex64 = (0..dim).map(|j| input[j] * u[i * dim + j]).sum();
            acc += if i % 2 == 0 { out.norm_sqr() } else { -out.norm_sqr() };
        }
    }
    Ok(acc)
}
