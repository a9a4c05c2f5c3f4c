//! Transmissivity and squeezing searches, figures of merit and the
//! reference tables.
//!
//! `D = dphi_SSV - dphi` compares against the bare squeezed vacuum at the same
//! `r`; `R = D * P` weights the gain by the heralding probability.

use rayon::prelude::*;

use crate::gaussian::{clamp_transmissivity, CoherentSource, SqueezedSource, TAU_CLAMP};
use crate::herald::{operation_label, OperationSpec};
use crate::moments::{phase_uncertainty_di, PhaseEstimate};
use crate::paritydet::phase_uncertainty_parity;
use crate::scalar::Real;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Detection {
    DifferenceIntensity,
    Parity,
}

impl Detection {
    /// Phase-matched working point used throughout for this scheme.
    pub fn default_point<T: Real>(self) -> WorkingPoint<T> {
        match self {
            Detection::DifferenceIntensity => WorkingPoint {
                d_x: T::lit(10.0),
                d_p: T::zero(),
                phi: T::FRAC_PI_2(),
            },
            Detection::Parity => WorkingPoint { d_x: T::lit(2.0), d_p: T::zero(), phi: T::lit(0.01) },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Detection::DifferenceIntensity => "difference-intensity",
            Detection::Parity => "parity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    MinimizeDeltaPhi,
    MaximizeD,
    MaximizeR,
}

/// Coherent displacement and interferometer phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkingPoint<T> {
    pub d_x: T,
    pub d_p: T,
    pub phi: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint<T> {
    pub r: T,
    pub tau: T,
    pub phi: T,
    pub d_x: T,
    pub d_p: T,
    pub k: u8,
    pub l: u8,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityResult<T> {
    pub delta_phi: T,
    pub probability: T,
    pub d_merit: T,
    pub r_merit: T,
    pub baseline: T,
    pub at: OperatingPoint<T>,
    pub boundary_flag: bool,
}

impl<T: Real> SensitivityResult<T> {
    fn score(&self, objective: Objective) -> T {
        let s = match objective {
            Objective::MinimizeDeltaPhi => self.delta_phi,
            Objective::MaximizeD => -self.d_merit,
            Objective::MaximizeR => -self.r_merit,
        };
        if s.is_nan() {
            T::infinity()
        } else {
            s
        }
    }
}

/// Resolution of the transmissivity search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauSearch<T> {
    pub coarse_points: usize,
    pub tolerance: T,
}

impl<T: Real> Default for TauSearch<T> {
    fn default() -> Self {
        Self { coarse_points: 256, tolerance: T::lit(1e-5) }
    }
}

/// Phase estimate for one configuration.
pub fn phase_estimate<T: Real>(
    detection: Detection,
    spec: &OperationSpec<T>,
    source: &SqueezedSource<T>,
    wp: &WorkingPoint<T>,
) -> Result<PhaseEstimate<T>> {
    match detection {
        Detection::DifferenceIntensity => {
            phase_uncertainty_di(spec, source, &CoherentSource::new(wp.d_x, wp.d_p), wp.phi)
        }
        Detection::Parity => {
            if wp.d_p != T::zero() {
                return Err(Error::InvalidParameter(
                    "parity detection is defined for d_p = 0 only".into(),
                ));
            }
            phase_uncertainty_parity(spec, source, wp.d_x, wp.phi)
        }
    }
}

/// Sensitivity of the bare squeezed vacuum, `k = l = 0` at the upper clamp.
pub fn baseline_delta_phi<T: Real>(
    detection: Detection,
    source: &SqueezedSource<T>,
    wp: &WorkingPoint<T>,
) -> Result<T> {
    let spec = OperationSpec::new(0, 0, T::one() - T::lit(TAU_CLAMP))?;
    Ok(phase_estimate(detection, &spec, source, wp)?.delta_phi)
}

/// Evaluates one `(r, tau)` point against a precomputed baseline.
pub fn evaluate_point<T: Real>(
    detection: Detection,
    k: u8,
    l: u8,
    r: T,
    tau: T,
    wp: &WorkingPoint<T>,
    baseline: T,
) -> Result<SensitivityResult<T>> {
    let (tau, clamped) = clamp_transmissivity(tau);
    let source = SqueezedSource::new(r)?;
    let spec = OperationSpec::new(k, l, tau)?;
    let est = phase_estimate(detection, &spec, &source, wp)?;
    let d_merit = baseline - est.delta_phi;
    Ok(SensitivityResult {
        delta_phi: est.delta_phi,
        probability: est.probability,
        d_merit,
        r_merit: d_merit * est.probability,
        baseline,
        at: OperatingPoint { r, tau, phi: wp.phi, d_x: wp.d_x, d_p: wp.d_p, k, l },
        boundary_flag: clamped,
    })
}

/// Like [`evaluate_point`] but maps heralding events of zero probability to
/// `None`; every other error still propagates.
fn try_point<T: Real>(
    detection: Detection,
    k: u8,
    l: u8,
    r: T,
    tau: T,
    wp: &WorkingPoint<T>,
    baseline: T,
) -> Result<Option<SensitivityResult<T>>> {
    match evaluate_point(detection, k, l, r, tau, wp, baseline) {
        Ok(res) => Ok(Some(res)),
        Err(Error::VanishingProbability(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Golden-section minimization of `f` on `[a, b]` down to width `tol`.
///
/// Returns the best point seen, which may be an endpoint if `f` is monotone.
pub fn golden_section<T: Real>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    tol: T,
) -> Result<(T, T)> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    for x in [a, b] {
        let fx = f(x)?;
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Optimal transmissivity for fixed `r`: a uniform coarse scan over the
/// clamped interval, then golden-section refinement around the best cell.
pub fn optimize_tau<T: Real>(
    k: u8,
    l: u8,
    source: &SqueezedSource<T>,
    detection: Detection,
    wp: &WorkingPoint<T>,
    objective: Objective,
    search: &TauSearch<T>,
) -> Result<SensitivityResult<T>> {
    if search.coarse_points < 2 {
        return Err(Error::InvalidParameter("coarse scan needs at least two points".into()));
    }
    let r = source.r();
    let baseline = baseline_delta_phi(detection, source, wp)?;
    let eps = T::lit(TAU_CLAMP);
    let (lo, hi) = (eps, T::one() - eps);
    let n = search.coarse_points;
    let grid: Vec<T> = (0..n)
        .map(|i| lo + (hi - lo) * T::lit(i as f64) / T::lit((n - 1) as f64))
        .collect();
    let scores = grid
        .iter()
        .map(|&tau| {
            Ok(try_point(detection, k, l, r, tau, wp, baseline)?
                .map_or(T::infinity(), |res| res.score(objective)))
        })
        .collect::<Result<Vec<T>>>()?;
    let (best_i, best_score) = scores
        .iter()
        .enumerate()
        .fold((0, T::infinity()), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    if !best_score.is_finite() {
        return Err(Error::FlatObjective);
    }
    let a = grid[best_i.saturating_sub(1)];
    let b = grid[(best_i + 1).min(n - 1)];
    let (tau, _) = golden_section(
        |tau| {
            Ok(try_point(detection, k, l, r, tau, wp, baseline)?
                .map_or(T::infinity(), |res| res.score(objective)))
        },
        a,
        b,
        search.tolerance,
    )?;
    let mut res = evaluate_point(detection, k, l, r, tau, wp, baseline)?;
    let margin = search.tolerance * T::lit(2.0);
    res.boundary_flag = res.boundary_flag || tau - lo <= margin || hi - tau <= margin;
    Ok(res)
}

/// Sweep definition: one transmissivity optimization per squeezing value.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid<T> {
    pub r_values: Vec<T>,
    pub tau_resolution: usize,
    pub detection: Detection,
    pub fixed: WorkingPoint<T>,
}

impl<T: Real> SweepGrid<T> {
    pub fn validate(&self) -> Result<()> {
        if self.r_values.is_empty() {
            return Err(Error::InvalidParameter("squeezing grid is empty".into()));
        }
        if let Some(r) = self.r_values.iter().find(|r| !(**r >= T::zero()) || !r.is_finite()) {
            return Err(Error::InvalidParameter(format!("squeezing value {r} is not a finite non-negative number")));
        }
        if self.tau_resolution < 16 {
            return Err(Error::InvalidParameter(format!(
                "transmissivity resolution {} is below 16",
                self.tau_resolution
            )));
        }
        Ok(())
    }
}

/// Optimized row per squeezing value, in grid order.
///
/// Rows whose operation cannot herald at that `r` (subtraction from the
/// vacuum) come back as `None`.
pub fn sweep_r<T: Real>(
    grid: &SweepGrid<T>,
    k: u8,
    l: u8,
    objective: Objective,
) -> Result<Vec<Option<SensitivityResult<T>>>> {
    grid.validate()?;
    let search = TauSearch { coarse_points: grid.tau_resolution, ..TauSearch::default() };
    grid.r_values
        .par_iter()
        .map(|&r| {
            let source = SqueezedSource::new(r)?;
            match optimize_tau(k, l, &source, grid.detection, &grid.fixed, objective, &search) {
                Ok(res) => Ok(Some(res)),
                Err(Error::FlatObjective) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Joint optimum over `(r, tau)`: sweep `r_grid`, then golden-section in `r`
/// between the neighbours of the best grid point.
pub fn optimize_r_tau<T: Real>(
    k: u8,
    l: u8,
    detection: Detection,
    wp: &WorkingPoint<T>,
    objective: Objective,
    r_grid: &[T],
    search: &TauSearch<T>,
) -> Result<SensitivityResult<T>> {
    let grid = SweepGrid {
        r_values: r_grid.to_vec(),
        tau_resolution: search.coarse_points,
        detection,
        fixed: *wp,
    };
    let rows = sweep_r(&grid, k, l, objective)?;
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, row)| row.map(|res| (i, res)))
        .fold(None, |acc: Option<(usize, SensitivityResult<T>)>, (i, res)| match acc {
            Some((_, b)) if b.score(objective) <= res.score(objective) => acc,
            _ => Some((i, res)),
        });
    let Some((i, mut best)) = best else {
        return Err(Error::FlatObjective);
    };
    let a = r_grid[i.saturating_sub(1)];
    let b = r_grid[(i + 1).min(r_grid.len() - 1)];
    if a < b {
        let mut probe = |r: T| -> Result<T> {
            match optimize_tau(k, l, &SqueezedSource::new(r)?, detection, wp, objective, search) {
                Ok(res) => {
                    let s = res.score(objective);
                    if s < best.score(objective) {
                        best = res;
                    }
                    Ok(s)
                }
                Err(Error::FlatObjective) => Ok(T::infinity()),
                Err(e) => Err(e),
            }
        };
        golden_section(&mut probe, a, b, T::lit(1e-4))?;
    }
    Ok(best)
}

/// One reference table with scaled numeric columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<T> {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow<T> {
    pub operation: String,
    pub values: Vec<T>,
    pub result: SensitivityResult<T>,
}

impl<T: Real> Table<T> {
    /// Looks up a scaled cell by operation label and column name.
    pub fn cell(&self, operation: &str, column: &str) -> Option<T> {
        let c = self.columns.iter().position(|x| x == column)?;
        let row = self.rows.iter().find(|r| r.operation == operation)?;
        row.values.get(c).copied()
    }
}

/// Squeezing grid used for table reproduction: 0 to 1.2 in steps of 0.01.
pub fn table_r_grid<T: Real>() -> Vec<T> {
    (0..=120).map(|i| T::lit(i as f64 / 100.0)).collect()
}

fn optimum_table<T: Real>(
    name: &str,
    detection: Detection,
    ops: &[(u8, u8)],
    r_scale: f64,
    d_scale: f64,
    r_grid: &[T],
    search: &TauSearch<T>,
) -> Result<Table<T>> {
    let wp = detection.default_point::<T>();
    let columns = vec![
        format!("{r_scale:e}*R"),
        "r_opt".into(),
        "tau_opt".into(),
        "dphi_ssv".into(),
        format!("{d_scale:e}*D"),
        "1e2*P".into(),
    ];
    let rows = ops
        .iter()
        .map(|&(k, l)| {
            let res = optimize_r_tau(k, l, detection, &wp, Objective::MaximizeR, r_grid, search)?;
            Ok(TableRow {
                operation: operation_label(k, l),
                values: vec![
                    res.r_merit * T::lit(r_scale),
                    res.at.r,
                    res.at.tau,
                    res.baseline,
                    res.d_merit * T::lit(d_scale),
                    res.probability * T::lit(100.0),
                ],
                result: res,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { name: name.into(), columns, rows })
}

/// Maximum-`R` table for difference-intensity detection (2-PS, 2-PC).
pub fn table_difference_intensity<T: Real>(r_grid: &[T], search: &TauSearch<T>) -> Result<Table<T>> {
    optimum_table(
        "difference-intensity optimum",
        Detection::DifferenceIntensity,
        &[(0, 2), (2, 2)],
        1e4,
        1e2,
        r_grid,
        search,
    )
}

/// Maximum-`R` table for parity detection (1-PS, 2-PS, 1-PA, 2-PA, 2-PC).
pub fn table_parity<T: Real>(r_grid: &[T], search: &TauSearch<T>) -> Result<Table<T>> {
    optimum_table(
        "parity optimum",
        Detection::Parity,
        &[(0, 1), (0, 2), (1, 0), (2, 0), (2, 2)],
        1e3,
        1.0,
        r_grid,
        search,
    )
}

/// Photon addition under parity detection at the fixed point `r = tau = 0.01`.
pub fn table_parity_fixed<T: Real>() -> Result<Table<T>> {
    let detection = Detection::Parity;
    let wp = detection.default_point::<T>();
    let (r, tau) = (T::lit(0.01), T::lit(0.01));
    let baseline = baseline_delta_phi(detection, &SqueezedSource::new(r)?, &wp)?;
    let rows = [(1u8, 0u8), (2, 0)]
        .iter()
        .map(|&(k, l)| {
            let res = evaluate_point(detection, k, l, r, tau, &wp, baseline)?;
            Ok(TableRow {
                operation: operation_label(k, l),
                values: vec![
                    res.r_merit * T::lit(1e3),
                    res.baseline,
                    res.d_merit,
                    res.probability * T::lit(100.0),
                ],
                result: res,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        name: "parity photon addition at r = tau = 0.01".into(),
        columns: vec!["1e3*R".into(), "dphi_ssv".into(), "D".into(), "1e2*P".into()],
        rows,
    })
}

/// All three reference tables at full resolution.
pub fn reproduce_tables<T: Real>() -> Result<[Table<T>; 3]> {
    let grid = table_r_grid::<T>();
    let search = TauSearch::default();
    Ok([
        table_difference_intensity(&grid, &search)?,
        table_parity(&grid, &search)?,
        table_parity_fixed()?,
    ])
}
