//! Closed-form results against the Fock-basis oracle over a parameter grid.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ngssv::gaussian::{CoherentSource, SqueezedSource};
use ngssv::herald::{heralded_form_with, success_probability, MatrixAssignment, OperationSpec};
use ngssv::moments::{mgf_form, number_difference};
use ngssv::optimize::Detection;
use ngssv::oracle::{oracle_ngssv, oracle_number_difference, oracle_parity, oracle_wigner};
use ngssv::paritydet::parity_expectation;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{Loaded, OraclePlan};
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, Cell, CsvTable};
use crate::Options;

/// Extra phase compared besides each scheme's working point.
const OFF_POINT_PHI: f64 = 0.3;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Worst {
    pub comparisons: usize,
    pub max_abs: f64,
    /// Taken over oracle values larger than `atol` in magnitude.
    pub max_rel: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleReport {
    pub by_quantity: BTreeMap<&'static str, Worst>,
    pub failures: Vec<String>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn comparisons(&self) -> usize {
        self.by_quantity.values().map(|w| w.comparisons).sum()
    }

    fn merge(mut self, other: Self) -> Self {
        for (q, w) in other.by_quantity {
            let e = self.by_quantity.entry(q).or_default();
            e.comparisons += w.comparisons;
            e.max_abs = e.max_abs.max(w.max_abs);
            e.max_rel = e.max_rel.max(w.max_rel);
        }
        self.failures.extend(other.failures);
        self
    }

    fn to_csv(&self, plan: &OraclePlan) -> CsvTable {
        let mut t = CsvTable::new(&["quantity", "comparisons", "max_abs", "max_rel", "failures"])
            .comment(format!("pass if abs <= {:e} or rel <= {:e}", plan.atol, plan.rtol))
            .comment(format!("swap_assignment={}", plan.swap_assignment));
        for (q, w) in &self.by_quantity {
            let fails = self.failures.iter().filter(|f| f.starts_with(q)).count();
            t.push(vec![
                Cell::Text(q.to_string()),
                Cell::Text(w.comparisons.to_string()),
                Cell::Num(w.max_abs),
                Cell::Num(w.max_rel),
                Cell::Text(fails.to_string()),
            ]);
        }
        t
    }
}

struct Checker<'a> {
    plan: &'a OraclePlan,
    context: String,
    report: OracleReport,
}

impl Checker<'_> {
    fn compare(&mut self, quantity: &'static str, closed: f64, oracle: f64) {
        let abs = (closed - oracle).abs();
        let rel = abs / oracle.abs();
        let w = self.report.by_quantity.entry(quantity).or_default();
        w.comparisons += 1;
        w.max_abs = w.max_abs.max(abs);
        if oracle.abs() > self.plan.atol {
            w.max_rel = w.max_rel.max(rel);
        }
        if !(abs <= self.plan.atol || rel <= self.plan.rtol) {
            self.fail(quantity, format!("{closed:e} vs oracle {oracle:e}"));
        }
    }

    fn fail(&mut self, quantity: &'static str, what: String) {
        self.report.failures.push(format!("{quantity} {}: {what}", self.context));
    }

    /// Records an error from either side as a failure instead of aborting.
    fn attempt<T>(&mut self, quantity: &'static str, r: ngssv::Result<T>) -> Option<T> {
        r.map_err(|e| self.fail(quantity, e.to_string())).ok()
    }
}

fn check_point(plan: &OraclePlan, k: u8, l: u8, r: f64, tau: f64) -> CliResult<OracleReport> {
    let mut ck = Checker {
        plan,
        context: format!("k={k} l={l} r={r} tau={tau}"),
        report: OracleReport::default(),
    };
    let spec = OperationSpec::new(k, l, tau)?;
    let src = SqueezedSource::new(r)?;
    let closed_p = success_probability(&spec, &src)?;
    let herald = match oracle_ngssv(k.into(), l.into(), tau, r) {
        Ok(h) => h,
        Err(ngssv::Error::VanishingProbability(_)) => {
            ck.compare("probability", closed_p, 0.0);
            return Ok(ck.report);
        }
        Err(e) => return Err(e.into()),
    };
    ck.compare("probability", closed_p, herald.probability);

    let assignment = if plan.swap_assignment { MatrixAssignment::Swapped } else { MatrixAssignment::Standard };
    let form = heralded_form_with(&spec, &src, assignment)?;
    let n = plan.wigner_points;
    let axis: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 })
        .collect();
    for &q in &axis {
        for &p in &axis {
            let closed = ck.attempt("wigner", form.wigner(q, p));
            let oracle = ck.attempt("wigner", oracle_wigner(&herald.state, q, p));
            if let (Some(a), Some(b)) = (closed, oracle) {
                ck.compare("wigner", a, b);
            }
        }
    }

    for &scheme in &plan.schemes {
        let wp = scheme.default_point::<f64>();
        let coh = CoherentSource::new(wp.d_x, wp.d_p);
        let alpha: Complex64 = coh.alpha();
        for phi in [wp.phi, OFF_POINT_PHI] {
            match scheme {
                Detection::DifferenceIntensity => {
                    let closed = ck.attempt("di-mean", mgf_form(&spec, &src, &coh, phi).and_then(|f| number_difference(&f)));
                    let oracle = ck.attempt("di-mean", oracle_number_difference(&herald.state, alpha, phi));
                    if let (Some(a), Some(b)) = (closed, oracle) {
                        ck.compare("di-mean", a.mean, b.mean);
                        ck.compare("di-variance", a.variance, b.variance);
                    }
                }
                Detection::Parity => {
                    let closed = ck.attempt("parity", parity_expectation(&spec, &src, wp.d_x, phi));
                    let oracle = ck.attempt("parity", oracle_parity(&herald.state, alpha, phi));
                    if let (Some(a), Some(b)) = (closed, oracle) {
                        ck.compare("parity", a, b);
                    }
                }
            }
        }
    }
    Ok(ck.report)
}

/// Every `(k, l, r, tau)` of the plan; order is fixed so reports are reproducible.
pub fn oracle_report(plan: &OraclePlan) -> CliResult<OracleReport> {
    let mut points = Vec::new();
    for k in 0..=plan.k_max {
        for l in 0..=plan.l_max {
            for &r in &plan.r_values {
                for &tau in &plan.tau_values {
                    points.push((k, l, r, tau));
                }
            }
        }
    }
    let reports = points
        .par_iter()
        .map(|&(k, l, r, tau)| check_point(plan, k, l, r, tau))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(reports.into_iter().fold(OracleReport::default(), OracleReport::merge))
}

/// Runs the cross-check and writes its summary; mismatches are an error.
pub fn run_oracle_check(loaded: &Loaded, opts: &Options) -> CliResult<(PathBuf, OracleReport)> {
    let plan = loaded.oracle_check()?;
    let report = oracle_report(&plan)?;
    if opts.seed_free && oracle_report(&plan)? != report {
        return Err(CliError::Nondeterministic("oracle-check".into()));
    }
    let path = opts
        .out
        .clone()
        .or_else(|| plan.out.clone())
        .unwrap_or_else(|| PathBuf::from("oracle_check.csv"));
    write_atomic(&path, &report.to_csv(&plan).to_bytes())?;
    Ok((path, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn plan(swap: bool) -> OraclePlan {
        let text = format!(
            "[oracle-check]\nk_max = 1\nl_max = 1\nr_values = [0.0, 0.4]\ntau_values = [0.6]\nwigner_points = 2\nswap_assignment = {swap}\n"
        );
        Loaded::from_str(&text, Path::new("t.toml")).unwrap().oracle_check().unwrap()
    }

    #[test]
    fn small_grid_agrees() {
        let rep = oracle_report(&plan(false)).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
        assert!(rep.by_quantity.contains_key("parity"));
        assert!(rep.by_quantity["probability"].comparisons == 8);
    }

    #[test]
    fn swapped_roles_are_caught() {
        let rep = oracle_report(&plan(true)).unwrap();
        assert!(!rep.passed());
        assert!(rep.failures.iter().all(|f| f.starts_with("wigner")));
    }
}
