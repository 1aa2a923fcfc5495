//! Batch run orchestration: advances a configured scenario to its end time
//! and writes diagnostics.csv, field snapshots, and a final summary.
//!
//! Outputs are byte-identical across runs of the same configuration: all
//! iteration and reduction orders are fixed and floats are printed with 17
//! significant digits.

use crate::config::{ConfigError, RunConfig};
use crate::diagnostics::{
    default_plug_threshold, energy_budget, extra_stress_cells, plug_region, strain_rate_cells,
    StepReport,
};
use crate::scenarios::realize;
use crate::solver::{initial_state, step_with_dt, SimulationState, SolverError};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Solver { step: usize, source: SolverError },
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Solver { step, source } => {
                write!(f, "solver failure at step {step}: {source}")
            }
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

/// Maxima tracked over a whole run, written to summary.txt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_t: f64,
    pub final_kinetic_energy: f64,
    pub max_div_residual_inf: f64,
    pub max_abs_energy_residual: f64,
    pub max_r1_bulk: f64,
    pub max_r2_bulk: f64,
    pub max_r1_wall: f64,
    pub max_r2_wall: f64,
    pub pf_min_overall: f64,
    pub pf_max_overall: f64,
    pub final_plug_fraction: f64,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Executes the configured scenario, writing `diagnostics.csv`,
/// `snapshot_STEPINDEX.dat` at the configured cadence, and `summary.txt`
/// into the output directory.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let scenario = realize(cfg).map_err(|e| {
        RunError::Config(ConfigError {
            line: None,
            key: None,
            message: e.to_string(),
        })
    })?;
    let out_dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&out_dir)?;

    let mut state = initial_state(
        scenario.v0.clone(),
        scenario.p_f0.clone(),
        &scenario.forcing,
        &cfg.material,
        &cfg.solver,
    )
    .map_err(|source| RunError::Solver { step: 0, source })?;

    let csv_path = out_dir.join("diagnostics.csv");
    let mut csv = BufWriter::new(fs::File::create(&csv_path)?);
    writeln!(csv, "{}", StepReport::FIELD_NAMES.join(","))?;

    write_snapshot(&out_dir, &state, &cfg.material, cfg.output.plug_threshold)?;

    let end_time = cfg.solver.end_time;
    let mut summary = RunSummary {
        steps: 0,
        final_t: 0.0,
        final_kinetic_energy: state.kinetic_energy(cfg.material.rho_star),
        max_div_residual_inf: state.div_residual_inf,
        max_abs_energy_residual: 0.0,
        max_r1_bulk: f64::NEG_INFINITY,
        max_r2_bulk: f64::NEG_INFINITY,
        max_r1_wall: f64::NEG_INFINITY,
        max_r2_wall: f64::NEG_INFINITY,
        pf_min_overall: state.p_f.min(),
        pf_max_overall: state.p_f.max(),
        final_plug_fraction: 1.0,
    };

    let mut last_report: Option<StepReport> = None;
    loop {
        let done = match cfg.steps {
            Some(n) => summary.steps >= n,
            None => state.t >= end_time * (1.0 - 1e-12),
        };
        if done {
            break;
        }
        let mut dt = crate::solver::choose_dt(&state, &cfg.solver);
        if cfg.steps.is_none() {
            dt = dt.min(end_time - state.t);
        }
        let next = step_with_dt(
            &state,
            &scenario.forcing,
            &cfg.material,
            &cfg.solver,
            &scenario.walls,
            dt,
        )
        .map_err(|source| RunError::Solver {
            step: state.step_index + 1,
            source,
        })?;
        let report = energy_budget(
            &state,
            &next,
            &scenario.forcing,
            &cfg.material,
            &scenario.walls,
            cfg.output.plug_threshold,
        );
        let row: Vec<String> = report.values().iter().map(|&x| fmt_float(x)).collect();
        writeln!(csv, "{}", row.join(","))?;

        summary.steps += 1;
        summary.final_t = next.t;
        summary.final_kinetic_energy = report.kinetic_energy;
        summary.max_div_residual_inf = summary.max_div_residual_inf.max(report.div_residual_inf);
        summary.max_abs_energy_residual = summary
            .max_abs_energy_residual
            .max(report.energy_residual.abs());
        summary.max_r1_bulk = summary.max_r1_bulk.max(report.max_r1_bulk);
        summary.max_r2_bulk = summary.max_r2_bulk.max(report.max_r2_bulk);
        summary.max_r1_wall = summary.max_r1_wall.max(report.max_r1_wall);
        summary.max_r2_wall = summary.max_r2_wall.max(report.max_r2_wall);
        summary.pf_min_overall = summary.pf_min_overall.min(report.pf_min);
        summary.pf_max_overall = summary.pf_max_overall.max(report.pf_max);
        summary.final_plug_fraction = report.plug_fraction;
        last_report = Some(report);

        state = next;
        if state.step_index % cfg.output.snapshot_every == 0 {
            write_snapshot(&out_dir, &state, &cfg.material, cfg.output.plug_threshold)?;
        }
    }
    if state.step_index % cfg.output.snapshot_every != 0 {
        write_snapshot(&out_dir, &state, &cfg.material, cfg.output.plug_threshold)?;
    }
    csv.flush()?;

    write_summary(&out_dir, cfg, &summary, last_report.as_ref())?;
    Ok(summary)
}

/// Plain-text snapshot: a header line `DIM NX NY NZ HX HY HZ T`, then one
/// record per cell in x-fastest order with columns
/// `x y z vx vy vz p p_f |D| |Z| plug`.
fn write_snapshot(
    dir: &Path,
    state: &SimulationState,
    params: &crate::constitutive::MaterialParams,
    plug_threshold: Option<f64>,
) -> Result<(), std::io::Error> {
    let grid = state.v.grid;
    let path = dir.join(format!("snapshot_{:06}.dat", state.step_index));
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "{} {} {} {} {} {} {} {}",
        grid.dim,
        grid.n[0],
        grid.n[1],
        grid.n[2],
        fmt_float(grid.h[0]),
        fmt_float(grid.h[1]),
        fmt_float(grid.h[2]),
        fmt_float(state.t)
    )?;
    let d_norm = strain_rate_cells(state);
    let z_norm = extra_stress_cells(state);
    let threshold = plug_threshold.unwrap_or_else(|| default_plug_threshold(state, params));
    let (mask, _) = plug_region(state, threshold);
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let c = grid.cell_index(i, j, k);
                let x = grid.cell_center(i, j, k);
                let vel = state.v.at_cell_center(i, j, k);
                writeln!(
                    w,
                    "{} {} {} {} {} {} {} {} {} {} {}",
                    fmt_float(x[0]),
                    fmt_float(x[1]),
                    fmt_float(x[2]),
                    fmt_float(vel[0]),
                    fmt_float(vel[1]),
                    fmt_float(vel[2]),
                    fmt_float(state.p.data[c]),
                    fmt_float(state.p_f.data[c]),
                    fmt_float(d_norm[c]),
                    fmt_float(z_norm[c]),
                    if mask[c] { 1 } else { 0 }
                )?;
            }
        }
    }
    w.flush()
}

fn write_summary(
    dir: &Path,
    cfg: &RunConfig,
    s: &RunSummary,
    last: Option<&StepReport>,
) -> Result<(), std::io::Error> {
    let mut w = BufWriter::new(fs::File::create(dir.join("summary.txt"))?);
    writeln!(w, "scenario = {}", cfg.scenario)?;
    writeln!(w, "steps = {}", s.steps)?;
    writeln!(w, "final_t = {}", fmt_float(s.final_t))?;
    writeln!(
        w,
        "final_kinetic_energy = {}",
        fmt_float(s.final_kinetic_energy)
    )?;
    writeln!(
        w,
        "max_div_residual_inf = {}",
        fmt_float(s.max_div_residual_inf)
    )?;
    writeln!(
        w,
        "max_abs_energy_residual = {}",
        fmt_float(s.max_abs_energy_residual)
    )?;
    writeln!(w, "max_r1_bulk = {}", fmt_float(s.max_r1_bulk))?;
    writeln!(w, "max_r2_bulk = {}", fmt_float(s.max_r2_bulk))?;
    writeln!(w, "max_r1_wall = {}", fmt_float(s.max_r1_wall))?;
    writeln!(w, "max_r2_wall = {}", fmt_float(s.max_r2_wall))?;
    writeln!(w, "pf_min_overall = {}", fmt_float(s.pf_min_overall))?;
    writeln!(w, "pf_max_overall = {}", fmt_float(s.pf_max_overall))?;
    writeln!(
        w,
        "final_plug_fraction = {}",
        fmt_float(s.final_plug_fraction)
    )?;
    if let Some(r) = last {
        writeln!(w, "final_pf_min = {}", fmt_float(r.pf_min))?;
        writeln!(w, "final_pf_max = {}", fmt_float(r.pf_max))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("yieldflow_runner_{tag}_{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn rest_run_produces_zero_rows() {
        let dir = temp_dir("rest");
        let mut cfg = parse_config("scenario = rest\n").unwrap();
        cfg.output.dir = dir.to_string_lossy().into_owned();
        cfg.steps = Some(3);
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.steps, 3);
        assert_eq!(summary.final_kinetic_energy, 0.0);
        let csv = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,kinetic_energy,viscous_dissipation,plastic_dissipation,wall_dissipation,energy_residual,div_residual_inf,pf_min,pf_max,max_r1_bulk,max_r2_bulk,max_r1_wall,max_r2_wall,plug_fraction"
        );
        let first = lines.next().unwrap();
        let vals: Vec<f64> = first.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(vals[1], 0.0); // kinetic energy
        assert_eq!(vals[13], 1.0); // plug fraction
        assert!(dir.join("summary.txt").exists());
        assert!(dir.join("snapshot_000000.dat").exists());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn determinism_byte_identical_outputs() {
        let mut csvs = Vec::new();
        let mut snaps = Vec::new();
        for tag in ["deta", "detb"] {
            let dir = temp_dir(tag);
            let mut cfg = parse_config("scenario = decay\n").unwrap();
            cfg.grid.n = [12, 12, 1];
            cfg.output.dir = dir.to_string_lossy().into_owned();
            cfg.steps = Some(10);
            cfg.output.snapshot_every = 5;
            run(&cfg).unwrap();
            csvs.push(fs::read(dir.join("diagnostics.csv")).unwrap());
            snaps.push(fs::read(dir.join("snapshot_000010.dat")).unwrap());
            let _ = fs::remove_dir_all(&dir);
        }
        assert_eq!(csvs[0], csvs[1]);
        assert_eq!(snaps[0], snaps[1]);
    }

    #[test]
    fn snapshot_format_is_well_formed() {
        let dir = temp_dir("snap");
        let mut cfg = parse_config("scenario = rest\n").unwrap();
        cfg.output.dir = dir.to_string_lossy().into_owned();
        cfg.steps = Some(1);
        run(&cfg).unwrap();
        let text = fs::read_to_string(dir.join("snapshot_000000.dat")).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
        assert_eq!(header.len(), 8);
        assert_eq!(header[0], "2");
        assert_eq!(header[1], "16");
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 16 * 16);
        assert_eq!(body[0].split_whitespace().count(), 11);
        let _ = fs::remove_dir_all(&dir);
    }
}
