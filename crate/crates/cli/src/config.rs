//! Run configuration: one TOML table per subcommand.
//!
//! Every field has a default. Values that can be out of range are parsed as
//! [`Spanned`] so a rejected value is reported with its line number.

use std::ops::Range;
use std::path::{Path, PathBuf};

use ngssv::herald::DEFAULT_MAX_PHOTONS;
use ngssv::optimize::{Detection, Objective, WorkingPoint};
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, CliResult};

/// Largest squeezing accepted from a config file.
pub const MAX_SQUEEZING: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    DifferenceIntensity,
    Parity,
}

impl From<Scheme> for Detection {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::DifferenceIntensity => Detection::DifferenceIntensity,
            Scheme::Parity => Detection::Parity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Goal {
    MinimizeDeltaPhi,
    MaximizeD,
    MaximizeR,
}

impl From<Goal> for Objective {
    fn from(g: Goal) -> Self {
        match g {
            Goal::MinimizeDeltaPhi => Objective::MinimizeDeltaPhi,
            Goal::MaximizeD => Objective::MaximizeD,
            Goal::MaximizeR => Objective::MaximizeR,
        }
    }
}

/// A scan over squeezing: the operation, scheme, working point and grid.
///
/// The grid is `r_points` evenly spaced values on `[r_min, r_max]` when
/// `r_points` is given, otherwise steps of `r_step`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default = "default_scheme")]
    pub detection: Scheme,
    #[serde(default = "default_photons")]
    pub k: Spanned<u8>,
    #[serde(default = "default_photons")]
    pub l: Spanned<u8>,
    #[serde(default = "default_objective")]
    pub objective: Goal,
    pub d_x: Option<Spanned<f64>>,
    pub d_p: Option<Spanned<f64>>,
    pub phi: Option<Spanned<f64>>,
    #[serde(default = "default_tau_resolution")]
    pub tau_resolution: Spanned<usize>,
    #[serde(default = "zero")]
    pub r_min: Spanned<f64>,
    #[serde(default = "default_r_max")]
    pub r_max: Spanned<f64>,
    pub r_points: Option<Spanned<usize>>,
    #[serde(default = "default_r_step")]
    pub r_step: Spanned<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesSection {
    #[serde(default = "default_r_max")]
    pub r_max: Spanned<f64>,
    #[serde(default = "default_r_step")]
    pub r_step: Spanned<f64>,
    #[serde(default = "default_tau_resolution")]
    pub tau_resolution: Spanned<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_max_order")]
    pub k_max: Spanned<u8>,
    #[serde(default = "default_max_order")]
    pub l_max: Spanned<u8>,
    #[serde(default = "default_oracle_r")]
    pub r_values: Spanned<Vec<f64>>,
    #[serde(default = "default_oracle_tau")]
    pub tau_values: Spanned<Vec<f64>>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    /// Phase-space points per axis for the heralded Wigner comparison.
    #[serde(default = "default_wigner_points")]
    pub wigner_points: Spanned<usize>,
    #[serde(default = "default_rtol")]
    pub rtol: Spanned<f64>,
    #[serde(default = "default_atol")]
    pub atol: Spanned<f64>,
    /// Debug: build the heralded Wigner function with A2/A3 swapped.
    #[serde(default)]
    pub swap_assignment: bool,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_scan")]
    pub sweep: ScanSection,
    #[serde(default = "default_scan")]
    pub optimize: ScanSection,
    #[serde(default = "default_tables")]
    pub tables: TablesSection,
    #[serde(default = "default_oracle")]
    #[serde(rename = "oracle-check")]
    pub oracle_check: OracleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sweep: default_scan(),
            optimize: default_scan(),
            tables: default_tables(),
            oracle_check: default_oracle(),
        }
    }
}

fn spanned<T>(v: T) -> Spanned<T> {
    Spanned::new(0..0, v)
}

fn default_scheme() -> Scheme {
    Scheme::DifferenceIntensity
}
fn default_photons() -> Spanned<u8> {
    spanned(2)
}
fn default_objective() -> Goal {
    Goal::MaximizeR
}
fn default_tau_resolution() -> Spanned<usize> {
    spanned(256)
}
fn zero() -> Spanned<f64> {
    spanned(0.0)
}
fn default_r_max() -> Spanned<f64> {
    spanned(1.2)
}
fn default_r_step() -> Spanned<f64> {
    spanned(0.01)
}
fn default_max_order() -> Spanned<u8> {
    spanned(2)
}
fn default_oracle_r() -> Spanned<Vec<f64>> {
    spanned(vec![0.0, 0.1, 0.3, 0.5, 0.8, 1.0])
}
fn default_oracle_tau() -> Spanned<Vec<f64>> {
    spanned(vec![0.2, 0.5, 0.8])
}
fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::DifferenceIntensity, Scheme::Parity]
}
fn default_wigner_points() -> Spanned<usize> {
    spanned(3)
}
fn default_rtol() -> Spanned<f64> {
    spanned(1e-7)
}
fn default_atol() -> Spanned<f64> {
    spanned(1e-9)
}

fn default_scan() -> ScanSection {
    ScanSection {
        detection: default_scheme(),
        k: default_photons(),
        l: default_photons(),
        objective: default_objective(),
        d_x: None,
        d_p: None,
        phi: None,
        tau_resolution: default_tau_resolution(),
        r_min: zero(),
        r_max: default_r_max(),
        r_points: None,
        r_step: default_r_step(),
        out: None,
    }
}

fn default_tables() -> TablesSection {
    TablesSection {
        r_max: default_r_max(),
        r_step: default_r_step(),
        tau_resolution: default_tau_resolution(),
        out: None,
    }
}

fn default_oracle() -> OracleSection {
    OracleSection {
        k_max: default_max_order(),
        l_max: default_max_order(),
        r_values: default_oracle_r(),
        tau_values: default_oracle_tau(),
        schemes: default_schemes(),
        wigner_points: default_wigner_points(),
        rtol: default_rtol(),
        atol: default_atol(),
        swap_assignment: false,
        out: None,
    }
}

/// Source text kept around to turn byte spans into line numbers.
#[derive(Clone, Debug)]
pub struct Source {
    pub path: PathBuf,
    pub text: String,
}

impl Source {
    pub fn line_of(&self, span: Range<usize>) -> Option<usize> {
        if span.is_empty() && span.start == 0 {
            return None;
        }
        let end = span.start.min(self.text.len());
        Some(self.text[..end].bytes().filter(|&b| b == b'\n').count() + 1)
    }
}

/// A parsed config plus where it came from.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub source: Option<Source>,
}

impl Loaded {
    pub fn defaults() -> Self {
        Self { config: RunConfig::default(), source: None }
    }

    pub fn from_str(text: &str, path: &Path) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| {
                text[..s.start.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
            });
            CliError::Config { path: path.to_path_buf(), line, message: e.message().to_string() }
        })?;
        Ok(Self {
            config,
            source: Some(Source { path: path.to_path_buf(), text: text.to_string() }),
        })
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Self::from_str(&text, path)
    }

    /// Config error pointing at the line of `span`, if known.
    pub fn reject(&self, span: Range<usize>, message: impl Into<String>) -> CliError {
        let (path, line) = match &self.source {
            Some(s) => (s.path.clone(), s.line_of(span)),
            None => (PathBuf::from("<defaults>"), None),
        };
        CliError::Config { path, line, message: message.into() }
    }

    fn check<T>(&self, v: &Spanned<T>, ok: bool, message: impl Into<String>) -> CliResult<()> {
        if ok {
            Ok(())
        } else {
            Err(self.reject(v.span(), message))
        }
    }

    fn check_setup(&self, s: &ScanSection) -> CliResult<(u8, u8, Detection, WorkingPoint<f64>)> {
        let (k, l) = (*s.k.get_ref(), *s.l.get_ref());
        self.check(
            &s.l,
            u16::from(k) + u16::from(l) <= u16::from(DEFAULT_MAX_PHOTONS),
            format!("k + l = {} exceeds {DEFAULT_MAX_PHOTONS}", u16::from(k) + u16::from(l)),
        )?;
        self.check(
            &s.tau_resolution,
            *s.tau_resolution.get_ref() >= 16,
            "tau_resolution must be at least 16",
        )?;
        let detection = Detection::from(s.detection);
        let mut wp = detection.default_point::<f64>();
        for (field, slot, name) in [(&s.d_x, &mut wp.d_x, "d_x"), (&s.d_p, &mut wp.d_p, "d_p"), (&s.phi, &mut wp.phi, "phi")] {
            if let Some(v) = field {
                self.check(v, v.get_ref().is_finite(), format!("{name} must be finite"))?;
                *slot = *v.get_ref();
            }
        }
        if let (Detection::Parity, Some(dp)) = (detection, &s.d_p) {
            self.check(dp, *dp.get_ref() == 0.0, "parity detection needs d_p = 0")?;
        }
        Ok((k, l, detection, wp))
    }

    fn check_range(&self, lo: &Spanned<f64>, hi: &Spanned<f64>) -> CliResult<()> {
        let (a, b) = (*lo.get_ref(), *hi.get_ref());
        self.check(lo, a.is_finite() && a >= 0.0, format!("r_min = {a} must be a non-negative number"))?;
        self.check(
            hi,
            b.is_finite() && b <= MAX_SQUEEZING,
            format!("r_max = {b} must not exceed {MAX_SQUEEZING}"),
        )?;
        let at = if hi.span().is_empty() { lo } else { hi };
        self.check(at, b >= a, format!("empty squeezing range: r_max = {b} < r_min = {a}"))
    }

    fn scan(&self, s: &ScanSection) -> CliResult<SweepPlan> {
        let (k, l, detection, point) = self.check_setup(s)?;
        self.check_range(&s.r_min, &s.r_max)?;
        let (a, b) = (*s.r_min.get_ref(), *s.r_max.get_ref());
        let r_values = match &s.r_points {
            Some(n) => {
                let n_ = *n.get_ref();
                self.check(n, n_ >= 1, "r_points must be at least 1 (empty squeezing range)")?;
                if n_ == 1 {
                    vec![a]
                } else {
                    (0..n_).map(|i| a + (b - a) * i as f64 / (n_ - 1) as f64).collect()
                }
            }
            None => {
                let step = *s.r_step.get_ref();
                self.check(&s.r_step, step.is_finite() && step > 0.0, "r_step must be positive")?;
                stepped(a, b, step)
            }
        };
        Ok(SweepPlan {
            k,
            l,
            detection,
            point,
            objective: s.objective.into(),
            tau_resolution: *s.tau_resolution.get_ref(),
            r_values,
            out: s.out.clone(),
        })
    }

    pub fn sweep(&self) -> CliResult<SweepPlan> {
        self.scan(&self.config.sweep)
    }

    pub fn optimize(&self) -> CliResult<SweepPlan> {
        self.scan(&self.config.optimize)
    }

    pub fn tables(&self) -> CliResult<TablesPlan> {
        let s = &self.config.tables;
        self.check_range(&spanned(0.0), &s.r_max)?;
        let step = *s.r_step.get_ref();
        self.check(&s.r_step, step.is_finite() && step > 0.0, "r_step must be positive")?;
        self.check(&s.tau_resolution, *s.tau_resolution.get_ref() >= 16, "tau_resolution must be at least 16")?;
        Ok(TablesPlan {
            r_grid: stepped(0.0, *s.r_max.get_ref(), step),
            tau_resolution: *s.tau_resolution.get_ref(),
            out: s.out.clone(),
        })
    }

    pub fn oracle_check(&self) -> CliResult<OraclePlan> {
        let s = &self.config.oracle_check;
        let (km, lm) = (*s.k_max.get_ref(), *s.l_max.get_ref());
        self.check(
            &s.l_max,
            u16::from(km) + u16::from(lm) <= u16::from(DEFAULT_MAX_PHOTONS),
            format!("k_max + l_max must not exceed {DEFAULT_MAX_PHOTONS}"),
        )?;
        let rs = s.r_values.get_ref();
        self.check(&s.r_values, !rs.is_empty(), "r_values is empty")?;
        self.check(
            &s.r_values,
            rs.iter().all(|r| r.is_finite() && (0.0..=MAX_SQUEEZING).contains(r)),
            format!("r_values must lie in [0, {MAX_SQUEEZING}]"),
        )?;
        let ts = s.tau_values.get_ref();
        self.check(&s.tau_values, !ts.is_empty(), "tau_values is empty")?;
        self.check(&s.tau_values, ts.iter().all(|t| *t > 0.0 && *t < 1.0), "tau_values must lie in (0, 1)")?;
        self.check(&s.rtol, *s.rtol.get_ref() > 0.0, "rtol must be positive")?;
        self.check(&s.atol, *s.atol.get_ref() > 0.0, "atol must be positive")?;
        Ok(OraclePlan {
            k_max: km,
            l_max: lm,
            r_values: rs.clone(),
            tau_values: ts.clone(),
            schemes: s.schemes.iter().map(|&x| x.into()).collect(),
            wigner_points: *s.wigner_points.get_ref(),
            rtol: *s.rtol.get_ref(),
            atol: *s.atol.get_ref(),
            swap_assignment: s.swap_assignment,
            out: s.out.clone(),
        })
    }
}

/// Inclusive grid `lo, lo + step, ...` up to `hi` (with rounding slack).
fn stepped(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// Validated sweep or optimize request.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub k: u8,
    pub l: u8,
    pub detection: Detection,
    pub point: WorkingPoint<f64>,
    pub objective: Objective,
    pub tau_resolution: usize,
    pub r_values: Vec<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TablesPlan {
    pub r_grid: Vec<f64>,
    pub tau_resolution: usize,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OraclePlan {
    pub k_max: u8,
    pub l_max: u8,
    pub r_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub schemes: Vec<Detection>,
    pub wigner_points: usize,
    pub rtol: f64,
    pub atol: f64,
    pub swap_assignment: bool,
    pub out: Option<PathBuf>,
}
