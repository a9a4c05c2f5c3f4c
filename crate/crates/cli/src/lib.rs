//! Driver behind the `ngssv` binary: sweeps, joint optimization, the
//! reference tables and the closed-form versus Fock-basis cross-check.

pub mod config;
pub mod error;
pub mod oracle_check;
pub mod output;

use std::path::{Path, PathBuf};

use ngssv::herald::operation_label;
use ngssv::optimize::{
    optimize_r_tau, sweep_r, table_difference_intensity, table_parity, table_parity_fixed,
    SensitivityResult, SweepGrid, Table, TauSearch,
};
use rayon::prelude::*;

pub use config::Loaded;
pub use error::{CliError, CliResult};
pub use oracle_check::{run_oracle_check, OracleReport};
use output::{write_atomic, Cell, CsvTable};

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Options {
    /// Overrides the output path from the config.
    pub out: Option<PathBuf>,
    /// Recompute and require byte-identical output.
    pub seed_free: bool,
}

const UNITS: &str = "units: dphi, dphi_ssv, D, R in rad; r, tau, P dimensionless";

fn output_path(opts: &Options, configured: &Option<PathBuf>, fallback: &str) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| configured.clone())
        .unwrap_or_else(|| PathBuf::from(fallback))
}

/// Runs `render` once, or twice under `--seed-free` and compares the bytes.
fn rendered(opts: &Options, what: &str, render: impl Fn() -> CliResult<Vec<u8>>) -> CliResult<Vec<u8>> {
    let bytes = render()?;
    if opts.seed_free && render()? != bytes {
        return Err(CliError::Nondeterministic(what.to_string()));
    }
    Ok(bytes)
}

fn result_cells(res: &SensitivityResult<f64>) -> Vec<Cell> {
    vec![
        Cell::Num(res.at.r),
        Cell::Num(res.at.tau),
        Cell::Num(res.delta_phi),
        Cell::Num(res.baseline),
        Cell::Num(res.d_merit),
        Cell::Num(res.probability),
        Cell::Num(res.r_merit),
        Cell::Flag(res.boundary_flag),
    ]
}

const RESULT_HEADER: [&str; 8] = ["r", "tau_opt", "dphi", "dphi_ssv", "D", "P", "R", "boundary_flag"];

/// Sweep table: one optimized row per squeezing value.
pub fn sweep_csv(loaded: &Loaded) -> CliResult<CsvTable> {
    let plan = loaded.sweep()?;
    let grid = SweepGrid {
        r_values: plan.r_values.clone(),
        tau_resolution: plan.tau_resolution,
        detection: plan.detection,
        fixed: plan.point,
    };
    let rows = sweep_r(&grid, plan.k, plan.l, plan.objective)?;
    let mut table = CsvTable::new(&RESULT_HEADER)
        .comment(format!(
            "sweep {} {} objective={:?} d_x={} d_p={} phi={}",
            operation_label(plan.k, plan.l),
            plan.detection.name(),
            plan.objective,
            plan.point.d_x,
            plan.point.d_p,
            plan.point.phi
        ))
        .comment(UNITS)
        .comment("rows that cannot herald at that r are NaN");
    for (r, row) in plan.r_values.iter().zip(rows) {
        match row {
            Some(res) => table.push(result_cells(&res)),
            None => {
                let mut cells = vec![Cell::Num(*r)];
                cells.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 6));
                cells.push(Cell::Flag(false));
                table.push(cells);
            }
        }
    }
    Ok(table)
}

pub fn run_sweep(loaded: &Loaded, opts: &Options) -> CliResult<PathBuf> {
    let plan = loaded.sweep()?;
    let bytes = rendered(opts, "sweep", || Ok(sweep_csv(loaded)?.to_bytes()))?;
    let path = output_path(opts, &plan.out, "sweep.csv");
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Joint `(r, tau)` optimum for the configured operation.
pub fn optimize_csv(loaded: &Loaded) -> CliResult<(CsvTable, SensitivityResult<f64>)> {
    let plan = loaded.optimize()?;
    let search = TauSearch { coarse_points: plan.tau_resolution, ..TauSearch::default() };
    let res = optimize_r_tau(plan.k, plan.l, plan.detection, &plan.point, plan.objective, &plan.r_values, &search)?;
    let mut header = vec!["operation"];
    header.extend(RESULT_HEADER);
    let mut table = CsvTable::new(&header)
        .comment(format!("optimum {} objective={:?}", plan.detection.name(), plan.objective))
        .comment(UNITS);
    let mut cells = vec![Cell::Text(operation_label(plan.k, plan.l))];
    cells.extend(result_cells(&res));
    table.push(cells);
    Ok((table, res))
}

pub fn run_optimize(loaded: &Loaded, opts: &Options) -> CliResult<(PathBuf, SensitivityResult<f64>)> {
    let plan = loaded.optimize()?;
    let (table, res) = optimize_csv(loaded)?;
    let bytes = table.to_bytes();
    if opts.seed_free && optimize_csv(loaded)?.0.to_bytes() != bytes {
        return Err(CliError::Nondeterministic("optimize".into()));
    }
    let path = output_path(opts, &plan.out, "optimize.csv");
    write_atomic(&path, &bytes)?;
    Ok((path, res))
}

fn table_csv(table: &Table<f64>) -> CsvTable {
    let mut header = vec!["operation".to_string()];
    header.extend(table.columns.iter().cloned());
    header.push("boundary_flag".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvTable::new(&header)
        .comment(table.name.clone())
        .comment("units: R, D, dphi_ssv in rad, scaled as named in the header; r, tau, P dimensionless");
    for row in &table.rows {
        let mut cells = vec![Cell::Text(row.operation.clone())];
        cells.extend(row.values.iter().map(|&v| Cell::Num(v)));
        cells.push(Cell::Flag(row.result.boundary_flag));
        out.push(cells);
    }
    out
}

pub const TABLE_FILES: [&str; 3] = ["table1.csv", "table2.csv", "table3.csv"];

/// The three reference tables as computed for the configured grid.
pub fn compute_tables(loaded: &Loaded) -> CliResult<[Table<f64>; 3]> {
    let plan = loaded.tables()?;
    let search = TauSearch { coarse_points: plan.tau_resolution, ..TauSearch::default() };
    let grid = plan.r_grid;
    let (di, parity) = rayon::join(
        || table_difference_intensity(&grid, &search),
        || table_parity(&grid, &search),
    );
    Ok([di?, parity?, table_parity_fixed()?])
}

/// Writes `table1.csv`, `table2.csv` and `table3.csv` into the output directory.
pub fn run_tables(loaded: &Loaded, opts: &Options) -> CliResult<([Table<f64>; 3], Vec<PathBuf>)> {
    let plan = loaded.tables()?;
    let tables = compute_tables(loaded)?;
    if opts.seed_free && compute_tables(loaded)? != tables {
        return Err(CliError::Nondeterministic("tables".into()));
    }
    let dir = output_path(opts, &plan.out, "tables");
    let paths: Vec<PathBuf> = TABLE_FILES.iter().map(|f| dir.join(f)).collect();
    tables
        .par_iter()
        .zip(paths.par_iter())
        .map(|(t, p)| write_atomic(p, &table_csv(t).to_bytes()))
        .collect::<CliResult<Vec<()>>>()?;
    Ok((tables, paths))
}

/// Loads `--config` if given, else the built-in defaults.
pub fn load(config: Option<&Path>) -> CliResult<Loaded> {
    match config {
        Some(p) => Loaded::from_file(p),
        None => Ok(Loaded::defaults()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loaded(text: &str) -> Loaded {
        Loaded::from_str(text, Path::new("t.toml")).unwrap()
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let cfg = loaded("[sweep]\ndetection = \"parity\"\nk = 0\nl = 1\nr_min = 0.0\nr_max = 0.4\nr_points = 3\ntau_resolution = 16\n");
        let t = sweep_csv(&cfg).unwrap();
        assert_eq!(t.rows.len(), 3);
        // subtraction from the vacuum cannot herald
        match &t.rows[0][1] {
            Cell::Num(x) => assert!(x.is_nan()),
            c => panic!("{c:?}"),
        }
        assert_eq!(t.rows[2][0], Cell::Num(0.4));
    }

    #[test]
    fn seed_free_sweep_writes_once() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let cfg = loaded("[sweep]\nk = 1\nl = 1\nr_min = 0.2\nr_max = 0.3\nr_points = 2\ntau_resolution = 16\n");
        let opts = Options { out: Some(out.clone()), seed_free: true };
        let path = run_sweep(&cfg, &opts).unwrap();
        let a = std::fs::read(&path).unwrap();
        run_sweep(&cfg, &opts).unwrap();
        assert_eq!(a, std::fs::read(&path).unwrap());
    }

    #[test]
    fn invalid_config_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("s.csv");
        let cfg = loaded("[sweep]\nr_min = 0.5\nr_max = 0.1\n");
        let err = run_sweep(&cfg, &Options { out: Some(out.clone()), seed_free: false }).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(!out.exists());
    }
}
