//! The subcommands, callable as library functions.

use std::path::{Path, PathBuf};

use hks_core::characteristics::{jacobian_det, representation_check, trace as trace_path, volume_mass_check, PressureHistory, TraceOptions};
use hks_core::fitting::{fit_growth, fit_mortality, FitResult, ProliferationSeries};
use hks_core::kinetics::{classify, ode_integrate};
use hks_core::seeding::{seed_centers, seed_fields};
use hks_core::simulator::{MetricsRow, RunStats, SimState, Simulation};
use hks_core::{Dimension, Field, Grid};
use serde_json::json;

use crate::config::{parse_overrides, Config};
use crate::error::CliError;
use crate::output::{write_json, write_path_csv, MetricsWriter, SnapshotWriter};
use crate::presets;

/// Builds a config from an optional preset, an optional TOML file (read on
/// top of nothing; a preset and a file are mutually exclusive) and dotted
/// overrides.
pub fn resolve_config(preset: Option<&str>, file: Option<&Path>, overrides: &[String]) -> Result<Config, CliError> {
    let base = match (preset, file) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either a preset or a config file, not both".into())),
        (Some(name), None) => presets::find(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?.config,
        (None, Some(path)) => Config::load(path)?,
        (None, None) => Config::default(),
    };
    base.with_overrides(&parse_overrides(overrides)?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::Io)
}

pub fn initial_fields(config: &Config, grid: &Grid) -> Result<[Field; 2], CliError> {
    Ok(seed_fields(&config.seed_spec(), grid)?)
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub state: SimState,
    pub stats: RunStats,
    pub last: MetricsRow,
}

fn summary_json(outcome: &SimulationOutcome) -> serde_json::Value {
    let s = &outcome.stats;
    let m = &outcome.last;
    json!({
        "t": outcome.state.t,
        "steps": s.steps,
        "min_dt": s.min_dt,
        "min_density": s.min_density,
        "max_clamp": s.max_clamp,
        "max_mean_defect": s.max_mean_defect,
        "max_solve_iterations": s.max_solve_iterations,
        "mass": m.mass,
        "proportion": m.proportion,
        "overlap": m.overlap,
        "mass_residual": m.mass_residual,
    })
}

/// Runs a simulation, writing `config.toml`, `metrics.csv`, snapshots and
/// `summary.json` into `out`.
pub fn simulate(config: &Config, out: &Path) -> Result<SimulationOutcome, CliError> {
    config.validate()?;
    create_dir(out)?;
    std::fs::write(out.join("config.toml"), config.to_toml())?;
    let grid = Grid::new(config.grid_spec())?;
    let initial = initial_fields(config, &grid)?;
    let mut sim = Simulation::with_grid(config.sim_config(), grid, initial)?;
    let mut metrics = MetricsWriter::create(&out.join("metrics.csv"))?;
    let mut snaps = SnapshotWriter::new(out);
    let stats = sim.run((&mut metrics, &mut snaps))?;
    metrics.finish()?;
    let last = sim.metrics();
    let outcome = SimulationOutcome { state: sim.into_state(), stats, last };
    write_json(&out.join("summary.json"), &summary_json(&outcome))?;
    Ok(outcome)
}

/// Writes the initial fields as `snap_0.000000.csv`/`.pgm` and the cluster
/// centres as `centers.csv`.
pub fn seed(config: &Config, out: &Path) -> Result<(), CliError> {
    config.validate()?;
    create_dir(out)?;
    let grid = Grid::new(config.grid_spec())?;
    let densities = initial_fields(config, &grid)?;
    let n = grid.len();
    let state = SimState { t: 0.0, densities, pressure: Field::zeros(n) };
    let op = hks_core::elliptic::HelmholtzOperator::assemble(&grid, config.kinetics.chi)?;
    let (pressure, _) = op.solve(&state.total_density(), config.run.rel_tol)?;
    let state = SimState { pressure, ..state };
    SnapshotWriter::new(out).write(&grid, &state)?;

    let mut w = csv::Writer::from_path(out.join("centers.csv"))?;
    w.write_record(["species", "x", "y"])?;
    for (i, centers) in seed_centers(&config.seed_spec()).iter().enumerate() {
        for c in centers {
            w.write_record([(i + 1).to_string(), c[0].to_string(), c[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct OdeArgs {
    pub u0: [f64; 2],
    pub t_end: f64,
    pub dt: f64,
}

impl Default for OdeArgs {
    fn default() -> Self {
        Self { u0: [0.01, 0.01], t_end: 60.0, dt: 0.005 }
    }
}

/// Classifies the kinetics and integrates the homogeneous ODE, writing
/// `trajectory.csv` and `report.json`. Returns the report.
pub fn ode(config: &Config, args: OdeArgs, out: &Path) -> Result<serde_json::Value, CliError> {
    let params = config.kinetics.params();
    let report = classify(&params)?;
    let traj = ode_integrate(&params, args.u0, args.t_end, args.dt)?;
    create_dir(out)?;
    let mut w = csv::Writer::from_path(out.join("trajectory.csv"))?;
    w.write_record(["t", "u1", "u2"])?;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        w.write_record([t.to_string(), u[0].to_string(), u[1].to_string()])?;
    }
    w.flush()?;
    let (t, end) = traj.last().expect("trajectories start with the initial state");
    let value = json!({
        "case": report.case.map(|c| c.label()),
        "attractor": report.attractor.describe(),
        "viable": report.viable,
        "single_species_equilibria": report.single,
        "coexistence": report.coexistence,
        "t_end": t,
        "final": end,
    });
    write_json(&out.join("report.json"), &value)?;
    Ok(value)
}

/// Reads a `t,count` CSV and rescales the counts.
pub fn read_series(path: &Path, scale: f64) -> Result<ProliferationSeries, CliError> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name).ok_or_else(|| bad(format!("missing column `{name}`")));
    let (ct, cc) = (col("t")?, col("count")?);
    let (mut times, mut counts) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| rec.get(k).unwrap_or("").trim().parse::<f64>().map_err(|e| bad(e.to_string()));
        times.push(num(ct)?);
        counts.push(num(cc)?);
    }
    Ok(ProliferationSeries::from_raw(times, &counts, scale)?)
}

/// Fits `b` on the control series, then `δ` on every treated series. The
/// results are written as `b,a,delta,rss` rows, control first.
pub fn fit(control: &Path, treated: &[PathBuf], saturation: f64, scale: f64, out: &Path) -> Result<Vec<FitResult>, CliError> {
    let series = read_series(control, scale)?;
    let growth = fit_growth(&series, saturation)?;
    let mut results = vec![growth];
    for path in treated {
        let s = read_series(path, scale)?;
        results.push(fit_mortality(&s, growth.b, growth.a)?);
    }
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["b", "a", "delta", "rss"])?;
    for r in &results {
        w.write_record([r.b.to_string(), r.a.to_string(), r.delta.to_string(), r.rss.to_string()])?;
    }
    w.flush()?;
    Ok(results)
}

#[derive(Debug, Clone)]
pub struct TraceArgs {
    /// Start points; empty means the zero set of the initial total density.
    pub starts: Vec<[f64; 2]>,
    /// Keep every `stride`-th default start point.
    pub stride: usize,
    pub species: usize,
    /// Minimum spacing of stored frames (days).
    pub frame_every: f64,
    pub t_start: f64,
    /// Defaults to the run's final time.
    pub t_end: Option<f64>,
    pub courant: f64,
    /// Also balance the mass of all active cells along the flow.
    pub volume: bool,
}

impl Default for TraceArgs {
    fn default() -> Self {
        Self {
            starts: Vec::new(),
            stride: 1,
            species: 0,
            frame_every: 0.01,
            t_start: 0.0,
            t_end: None,
            courant: TraceOptions::default().courant,
            volume: false,
        }
    }
}

/// Repeats the run stored in `run_dir` while recording the pressure
/// history, then traces characteristics through it.
pub fn rebuild_history(config: &Config, frame_every: f64) -> Result<PressureHistory, CliError> {
    config.validate()?;
    let grid = Grid::new(config.grid_spec())?;
    let initial = initial_fields(config, &grid)?;
    let mut sim = Simulation::with_grid(config.sim_config(), grid.clone(), initial)?;
    let mut history = PressureHistory::new(grid, config.kinetics.params(), frame_every);
    sim.run(&mut history)?;
    Ok(history)
}

pub fn trace(run_dir: &Path, args: &TraceArgs, out: &Path) -> Result<serde_json::Value, CliError> {
    let config = Config::load(&run_dir.join("config.toml"))?;
    if args.species > 1 {
        return Err(CliError::Config("species must be 1 or 2".into()));
    }
    if args.courant.is_nan() || args.courant <= 0.0 || args.stride == 0 {
        return Err(CliError::Config("courant and stride must be positive".into()));
    }
    let history = rebuild_history(&config, args.frame_every)?;
    let grid = history.grid().clone();
    let t_end = args.t_end.unwrap_or(history.end());
    let opts = TraceOptions { courant: args.courant, species: args.species };
    let starts: Vec<[f64; 2]> = if args.starts.is_empty() {
        let first = &history.frames()[0];
        (0..grid.len())
            .filter(|&c| first.densities[0][c] + first.densities[1][c] == 0.0)
            .step_by(args.stride)
            .map(|c| grid.center(c))
            .collect()
    } else {
        args.starts.clone()
    };

    create_dir(out)?;
    let d = config.kinetics.params().dispersion[args.species];
    let chi = config.kinetics.chi;
    let mut paths = Vec::new();
    let mut max_radius: f64 = 0.0;
    for (k, x0) in starts.iter().enumerate() {
        let path = trace_path(&history, *x0, args.t_start, t_end, opts)?;
        write_path_csv(&out.join(format!("path_{k}.csv")), &path, grid.dimension())?;
        let (traced, formula) = if args.t_start == history.start() && t_end >= args.t_start {
            let (a, b) = representation_check(&history, *x0, t_end, opts)?;
            (Some(a), Some(b))
        } else {
            (None, None)
        };
        for p in &path.positions {
            max_radius = max_radius.max(match grid.dimension() {
                Dimension::One => p[0].abs(),
                Dimension::Two => p[0].hypot(p[1]),
            });
        }
        paths.push(json!({
            "x0": x0,
            "end": path.end_position(),
            "jacobian_det": jacobian_det(&path, d, chi),
            "int_h": path.total_h(),
            "traced_density": traced,
            "formula_density": formula,
        }));
    }
    let mut report = json!({
        "species": args.species + 1,
        "t_start": args.t_start,
        "t_end": t_end,
        "frames": history.frames().len(),
        "max_abs_position": max_radius,
        "paths": paths,
    });
    if args.volume {
        let all: Vec<usize> = (0..grid.len()).collect();
        let (lhs, rhs) = volume_mass_check(&history, &all, args.t_start, t_end, opts)?;
        report["volume_mass"] = json!({ "lhs": lhs, "rhs": rhs });
    }
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
