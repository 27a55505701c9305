//! Time loop of the two-species system.
//!
//! One step: velocities from the current pressure, a step size bounded by
//! the CFL number and by the reaction rates, a single explicit update
//! `u' = u - d Δt/Δx Σ±φ + Δt u h(u)` per species, clamping of roundoff
//! negatives, then a new pressure solve for the updated total density.

use alloc::vec;
use alloc::vec::Vec;

use crate::elliptic::{HelmholtzOperator, SolveStats, DEFAULT_REL_TOL};
use crate::grid::{Field, Grid, GridSpec};
use crate::kinetics::KineticParams;
use crate::seeding::overlap;
use crate::transport::{accumulate_transport, cfl_dt, check_courant, face_velocities_into, FaceVelocities, DEFAULT_CFL};
use crate::{Error, Result};

/// Negative densities down to this magnitude are treated as roundoff.
pub const CLAMP_THRESHOLD: f64 = 1e-14;
/// `Δt ≤ REACTION_FACTOR / max|h|`.
pub const REACTION_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub kinetics: KineticParams,
    /// Final time (days).
    pub t_end: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub rel_tol: f64,
    /// Metrics cadence (days).
    pub output_every: f64,
    /// Snapshot cadence (days).
    pub snapshot_every: f64,
}

impl SimConfig {
    pub fn new(grid: GridSpec, kinetics: KineticParams) -> Self {
        Self {
            grid,
            kinetics,
            t_end: 6.0,
            cfl: DEFAULT_CFL,
            dt_max: 0.01,
            rel_tol: DEFAULT_REL_TOL,
            output_every: 0.1,
            snapshot_every: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.kinetics.validate()?;
        let checks = [
            ("t_end", self.t_end, self.t_end > 0.0),
            ("cfl", self.cfl, self.cfl > 0.0 && self.cfl < 1.0),
            ("dt_max", self.dt_max, self.dt_max > 0.0),
            ("rel_tol", self.rel_tol, self.rel_tol > 0.0 && self.rel_tol <= 1e-4),
            ("output_every", self.output_every, self.output_every > 0.0),
            ("snapshot_every", self.snapshot_every, self.snapshot_every > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub densities: [Field; 2],
    /// Pressure solved from the current total density.
    pub pressure: Field,
}

impl SimState {
    pub fn total_density(&self) -> Field {
        let [u1, u2] = &self.densities;
        Field::from(u1.iter().zip(u2.iter()).map(|(a, b)| a + b).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub t: f64,
    /// `U_i = Σ u_i · area`.
    pub mass: [f64; 2],
    /// `U_i / (U_1 + U_2)`, zero when both vanish.
    pub proportion: [f64; 2],
    /// `Σ u₁ u₂ · area`.
    pub overlap: f64,
    /// `(ΣU(t) - ΣU(0) - ∫ Σ u_i h_i) / ΣU(0)`, with the reaction integral
    /// accumulated exactly as the scheme applies it.
    pub mass_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Largest negative value set to zero this step.
    pub max_clamp: f64,
    pub solve: SolveStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub steps: usize,
    pub max_clamp: f64,
    pub max_mean_defect: f64,
    pub max_solve_iterations: usize,
    pub min_density: f64,
    pub min_dt: f64,
}

/// Receives metrics rows and snapshots while a run progresses.
pub trait RunSink {
    fn metrics(&mut self, _row: &MetricsRow) -> Result<()> {
        Ok(())
    }

    fn snapshot(&mut self, _grid: &Grid, _state: &SimState) -> Result<()> {
        Ok(())
    }

    /// Called after every step.
    fn advanced(&mut self, _grid: &Grid, _state: &SimState) -> Result<()> {
        Ok(())
    }
}

impl RunSink for () {}

impl<T: RunSink + ?Sized> RunSink for &mut T {
    fn metrics(&mut self, row: &MetricsRow) -> Result<()> {
        (**self).metrics(row)
    }

    fn snapshot(&mut self, grid: &Grid, state: &SimState) -> Result<()> {
        (**self).snapshot(grid, state)
    }

    fn advanced(&mut self, grid: &Grid, state: &SimState) -> Result<()> {
        (**self).advanced(grid, state)
    }
}

impl<A: RunSink, B: RunSink> RunSink for (A, B) {
    fn metrics(&mut self, row: &MetricsRow) -> Result<()> {
        self.0.metrics(row)?;
        self.1.metrics(row)
    }

    fn snapshot(&mut self, grid: &Grid, state: &SimState) -> Result<()> {
        self.0.snapshot(grid, state)?;
        self.1.snapshot(grid, state)
    }

    fn advanced(&mut self, grid: &Grid, state: &SimState) -> Result<()> {
        self.0.advanced(grid, state)?;
        self.1.advanced(grid, state)
    }
}

/// Collects every metrics row in memory.
#[derive(Debug, Clone, Default)]
pub struct MetricsLog(pub Vec<MetricsRow>);

impl RunSink for MetricsLog {
    fn metrics(&mut self, row: &MetricsRow) -> Result<()> {
        self.0.push(*row);
        Ok(())
    }
}

pub struct Simulation {
    config: SimConfig,
    grid: Grid,
    operator: HelmholtzOperator,
    state: SimState,
    velocities: FaceVelocities,
    next: [Vec<f64>; 2],
    total: Vec<f64>,
    initial_mass: f64,
    reaction_source: f64,
    stats: RunStats,
}

impl Simulation {
    pub fn new(config: SimConfig, initial: [Field; 2]) -> Result<Self> {
        config.validate()?;
        let grid = Grid::new(config.grid)?;
        Self::with_grid(config, grid, initial)
    }

    pub fn with_grid(config: SimConfig, grid: Grid, initial: [Field; 2]) -> Result<Self> {
        config.validate()?;
        for u in &initial {
            grid.check_field(u)?;
            if let Some(cell) = u.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::NegativeDensity { value: u[cell], cell });
            }
        }
        let operator = HelmholtzOperator::assemble(&grid, config.kinetics.chi)?;
        let n = grid.len();
        let total: Vec<f64> = initial[0].iter().zip(initial[1].iter()).map(|(a, b)| a + b).collect();
        let (pressure, solve) = operator.solve(&total, config.rel_tol)?;
        let initial_mass = grid.integrate(&initial[0]) + grid.integrate(&initial[1]);
        let min_density = initial[0].min_value().min(initial[1].min_value());
        let stats = RunStats {
            max_mean_defect: solve.mean_defect,
            max_solve_iterations: solve.iterations,
            min_density,
            min_dt: f64::INFINITY,
            ..RunStats::default()
        };
        Ok(Self {
            config,
            grid,
            operator,
            state: SimState { t: 0.0, densities: initial, pressure },
            velocities: FaceVelocities::default(),
            next: [vec![0.0; n], vec![0.0; n]],
            total,
            initial_mass,
            reaction_source: 0.0,
            stats,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn operator(&self) -> &HelmholtzOperator {
        &self.operator
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    pub fn metrics(&self) -> MetricsRow {
        let [u1, u2] = &self.state.densities;
        let mass = [self.grid.integrate(u1), self.grid.integrate(u2)];
        let sum = mass[0] + mass[1];
        let proportion = if sum > 0.0 { [mass[0] / sum, mass[1] / sum] } else { [0.0, 0.0] };
        let mass_residual = if self.initial_mass > 0.0 {
            (sum - self.initial_mass - self.reaction_source) / self.initial_mass
        } else {
            0.0
        };
        MetricsRow { t: self.state.t, mass, proportion, overlap: overlap(&self.grid, u1, u2), mass_residual }
    }

    /// Advances by one step of the largest admissible size.
    pub fn step(&mut self) -> Result<StepReport> {
        self.step_until(f64::INFINITY)
    }

    /// Advances by one step, shortened if needed so that time does not pass
    /// `target`. Landing on `target` sets the time to it exactly.
    pub fn step_until(&mut self, target: f64) -> Result<StepReport> {
        let grid = &self.grid;
        let kin = &self.config.kinetics;
        let [u1, u2] = &self.state.densities;
        face_velocities_into(&self.state.pressure, grid, &mut self.velocities);

        let dim = grid.dimension().count();
        let mut dt = cfl_dt(&self.velocities, kin.max_dispersion(), grid.dx(), self.config.cfl, dim, self.config.dt_max);
        let mut max_rate: f64 = 0.0;
        for (&a, &b) in u1.iter().zip(u2.iter()) {
            let u = [a, b];
            max_rate = max_rate.max(kin.h(0, u).abs()).max(kin.h(1, u).abs());
        }
        if max_rate > 0.0 {
            dt = dt.min(REACTION_FACTOR / max_rate);
        }
        let remaining = target - self.state.t;
        let lands = remaining <= dt * (1.0 + 1e-9);
        if lands {
            dt = remaining;
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", value: dt });
        }
        for d in kin.dispersion {
            check_courant(&self.velocities, d, dt, grid.dx())?;
        }

        for (i, u) in [u1, u2].into_iter().enumerate() {
            self.next[i].copy_from_slice(u);
            accumulate_transport(u, &self.velocities, kin.dispersion[i], dt, grid, &mut self.next[i]);
        }
        let mut source = 0.0;
        {
            let [n1, n2] = &mut self.next;
            for k in 0..grid.len() {
                let u = [u1[k], u2[k]];
                let g1 = dt * u[0] * kin.h(0, u);
                let g2 = dt * u[1] * kin.h(1, u);
                n1[k] += g1;
                n2[k] += g2;
                source += g1 + g2;
            }
        }
        self.reaction_source += source * grid.cell_area();

        let mut max_clamp: f64 = 0.0;
        for next in &mut self.next {
            for (cell, v) in next.iter_mut().enumerate() {
                if *v < 0.0 {
                    if *v < -CLAMP_THRESHOLD {
                        return Err(Error::NegativeDensity { value: *v, cell });
                    }
                    max_clamp = max_clamp.max(-*v);
                    *v = 0.0;
                }
            }
        }
        for i in 0..2 {
            self.state.densities[i].copy_from_slice(&self.next[i]);
        }
        self.state.t = if lands { target } else { self.state.t + dt };

        let [u1, u2] = &self.state.densities;
        for (t, (&a, &b)) in self.total.iter_mut().zip(u1.iter().zip(u2.iter())) {
            *t = a + b;
        }
        let solve = self.operator.solve_into(&self.total, &mut self.state.pressure, self.config.rel_tol)?;

        let s = &mut self.stats;
        s.steps += 1;
        s.max_clamp = s.max_clamp.max(max_clamp);
        s.max_mean_defect = s.max_mean_defect.max(solve.mean_defect);
        s.max_solve_iterations = s.max_solve_iterations.max(solve.iterations);
        s.min_density = s.min_density.min(u1.min_value()).min(u2.min_value());
        s.min_dt = s.min_dt.min(dt);
        Ok(StepReport { dt, max_clamp, solve })
    }

    /// Runs to `t_end`, emitting metrics and snapshots at their cadences
    /// (and at `t = 0` and `t_end`).
    pub fn run<S: RunSink>(&mut self, mut sink: S) -> Result<RunStats> {
        let cfg = self.config;
        let start = self.state.t;
        sink.metrics(&self.metrics())?;
        sink.snapshot(&self.grid, &self.state)?;
        let next_k = |every: f64| libm::floor(start / every + 1e-9) as u64 + 1;
        let (mut out_k, mut snap_k) = (next_k(cfg.output_every), next_k(cfg.snapshot_every));
        while self.state.t < cfg.t_end {
            let t_out = (out_k as f64 * cfg.output_every).min(cfg.t_end);
            let t_snap = (snap_k as f64 * cfg.snapshot_every).min(cfg.t_end);
            self.step_until(t_out.min(t_snap))?;
            sink.advanced(&self.grid, &self.state)?;
            let t = self.state.t;
            if t >= t_out {
                sink.metrics(&self.metrics())?;
                out_k += 1;
            }
            if t >= t_snap {
                sink.snapshot(&self.grid, &self.state)?;
                snap_k += 1;
            }
        }
        Ok(self.stats)
    }
}

/// Builds a simulation from `config` and runs it to completion.
pub fn run<S: RunSink>(config: SimConfig, initial: [Field; 2], sink: S) -> Result<(SimState, RunStats)> {
    let mut sim = Simulation::new(config, initial)?;
    let stats = sim.run(sink)?;
    Ok((sim.into_state(), stats))
}
