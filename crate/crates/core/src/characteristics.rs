//! Characteristic paths `dΠ/dt = -d ∇P(t, Π)` through a stored run.
//!
//! The velocity inside a cell interpolates the two face gradients of each
//! axis linearly along that axis (lowest-order Raviart-Thomas). Walls carry
//! zero normal velocity, so paths stay in the union of active cells, and the
//! divergence of the interpolated field equals `(d/χ)(u_tot - P)` cell by
//! cell, which is what the Jacobian formula integrates. On the disk the grid
//! cells along the rim reach slightly past the circle, so the outward radial
//! velocity is tapered to zero there. Frames are interpolated linearly in
//! time.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{Axis, Dimension, Field, Grid};
use crate::kinetics::KineticParams;
use crate::simulator::{RunSink, SimState};
use crate::transport::face_velocities;
use crate::{Error, Result};

/// Positions beyond the domain by less than this are pulled back onto it.
pub const EXIT_TOLERANCE: f64 = 1e-8;

const WALL: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub pressure: Field,
    pub densities: [Field; 2],
    /// `-(P_upper - P_lower)/Δx` on every face.
    gradient: Vec<f64>,
    max_gradient: f64,
}

#[derive(Debug, Clone)]
pub struct PressureHistory {
    grid: Grid,
    params: KineticParams,
    /// Faces of each cell: x-lower, x-upper, y-lower, y-upper.
    cell_faces: Vec<[u32; 4]>,
    frames: Vec<Frame>,
    spacing: f64,
}

impl PressureHistory {
    /// Empty history. As a run sink it keeps every snapshot and any step at
    /// least `spacing` after the last kept frame.
    pub fn new(grid: Grid, params: KineticParams, spacing: f64) -> Self {
        let mut cell_faces = vec![[WALL; 4]; grid.len()];
        for (k, f) in grid.faces().iter().enumerate() {
            let slot = match f.axis {
                Axis::X => 0,
                Axis::Y => 2,
            };
            cell_faces[f.lower][slot + 1] = k as u32;
            cell_faces[f.upper][slot] = k as u32;
        }
        Self { grid, params, cell_faces, frames: Vec::new(), spacing }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn start(&self) -> f64 {
        self.frames.first().map_or(f64::NAN, |f| f.t)
    }

    pub fn end(&self) -> f64 {
        self.frames.last().map_or(f64::NAN, |f| f.t)
    }

    pub fn push_frame(&mut self, t: f64, pressure: Field, densities: [Field; 2]) -> Result<()> {
        self.grid.check_field(&pressure)?;
        for u in &densities {
            self.grid.check_field(u)?;
        }
        if let Some(last) = self.frames.last() {
            if !(t > last.t) {
                return Err(Error::NonMonotoneHistory(last.t, t));
            }
        }
        let gradient = face_velocities(&pressure, &self.grid).values().to_vec();
        let max_gradient = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        self.frames.push(Frame { t, pressure, densities, gradient, max_gradient });
        Ok(())
    }

    fn locate_time(&self, t: f64) -> Result<(usize, f64)> {
        let (start, end) = (self.start(), self.end());
        if self.frames.is_empty() || !(t >= start && t <= end) {
            return Err(Error::OutsideHistory { t, start, end });
        }
        if self.frames.len() == 1 {
            return Ok((0, 0.0));
        }
        let k = self.frames.partition_point(|f| f.t <= t).clamp(1, self.frames.len() - 1) - 1;
        let (a, b) = (self.frames[k].t, self.frames[k + 1].t);
        Ok((k, ((t - a) / (b - a)).clamp(0.0, 1.0)))
    }

    fn lattice_index(&self, x: f64) -> isize {
        let m = self.grid.resolution() as isize;
        let i = libm::floor((x + self.grid.half_width()) / self.grid.dx()) as isize;
        i.clamp(0, m - 1)
    }

    fn containing_cell(&self, x: [f64; 2]) -> Option<usize> {
        let i = self.lattice_index(x[0]);
        let j = match self.grid.dimension() {
            Dimension::One => 0,
            Dimension::Two => self.lattice_index(x[1]),
        };
        self.grid.cell_at(i, j)
    }

    fn check_position(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        match self.grid.dimension() {
            Dimension::One => {
                let l = self.grid.half_width();
                let excess = x[0].abs() - l;
                if excess > EXIT_TOLERANCE || x[0].is_nan() {
                    return Err(Error::DomainExit(x[0]));
                }
                Ok([x[0].clamp(-l, l), 0.0])
            }
            Dimension::Two => {
                let r = libm::hypot(x[0], x[1]);
                if r > 1.0 + EXIT_TOLERANCE || r.is_nan() {
                    return Err(Error::DomainExit(r));
                }
                Ok(if r > 1.0 { [x[0] / r, x[1] / r] } else { x })
            }
        }
    }

    fn frame_velocity(&self, frame: &Frame, cell: usize, x: [f64; 2]) -> [f64; 2] {
        let faces = self.cell_faces[cell];
        let g = |slot: usize| if faces[slot] == WALL { 0.0 } else { frame.gradient[faces[slot] as usize] };
        let (i, j) = self.grid.lattice(cell);
        let dx = self.grid.dx();
        let xi = ((x[0] - self.grid.edge(i)) / dx).clamp(0.0, 1.0);
        let vx = (1.0 - xi) * g(0) + xi * g(1);
        let vy = match self.grid.dimension() {
            Dimension::One => 0.0,
            Dimension::Two => {
                let eta = ((x[1] - self.grid.edge(j)) / dx).clamp(0.0, 1.0);
                (1.0 - eta) * g(2) + eta * g(3)
            }
        };
        [vx, vy]
    }

    /// `-d ∇P(t, x)`.
    pub fn velocity_at(&self, t: f64, x: [f64; 2], d: f64) -> Result<[f64; 2]> {
        let (k, w) = self.locate_time(t)?;
        let x = self.check_position(x)?;
        Ok(self.velocity_unchecked(k, w, x, d))
    }

    fn velocity_unchecked(&self, k: usize, w: f64, x: [f64; 2], d: f64) -> [f64; 2] {
        let Some(cell) = self.containing_cell(x) else {
            return [0.0, 0.0];
        };
        let a = self.frame_velocity(&self.frames[k], cell, x);
        let mut v = if w == 0.0 {
            [d * a[0], d * a[1]]
        } else {
            let b = self.frame_velocity(&self.frames[k + 1], cell, x);
            [d * ((1.0 - w) * a[0] + w * b[0]), d * ((1.0 - w) * a[1] + w * b[1])]
        };
        if self.grid.dimension() == Dimension::Two {
            self.taper_outward(x, &mut v);
        }
        v
    }

    /// Boundary cells poke out of the circle; within one cell of it the
    /// outward radial component is scaled by `(1 - r)/Δx`.
    fn taper_outward(&self, x: [f64; 2], v: &mut [f64; 2]) {
        let dx = self.grid.dx();
        let r = libm::hypot(x[0], x[1]);
        if r <= 1.0 - dx || r == 0.0 {
            return;
        }
        let n = [x[0] / r, x[1] / r];
        let radial = v[0] * n[0] + v[1] * n[1];
        if radial > 0.0 {
            let cut = radial * (1.0 - ((1.0 - r) / dx).max(0.0));
            v[0] -= cut * n[0];
            v[1] -= cut * n[1];
        }
    }

    fn cell_value(&self, k: usize, w: f64, x: [f64; 2], f: impl Fn(&Frame, usize) -> f64) -> f64 {
        let Some(cell) = self.containing_cell(x) else {
            return 0.0;
        };
        let a = f(&self.frames[k], cell);
        if w == 0.0 {
            a
        } else {
            (1.0 - w) * a + w * f(&self.frames[k + 1], cell)
        }
    }

    /// Linear (bilinear in 2D) interpolation between cell centres, using
    /// only active cells.
    fn interpolate(&self, values: &Field, x: [f64; 2]) -> f64 {
        let dx = self.grid.dx();
        let l = self.grid.half_width();
        let split = |c: f64| {
            let s = (c + l) / dx - 0.5;
            let i = libm::floor(s);
            (i as isize, s - i)
        };
        let (i0, wx) = split(x[0]);
        let (j0, wy, rows) = match self.grid.dimension() {
            Dimension::One => (0, 0.0, 1),
            Dimension::Two => {
                let (j, w) = split(x[1]);
                (j, w, 2)
            }
        };
        let (mut sum, mut weight) = (0.0, 0.0);
        for dj in 0..rows {
            for di in 0..2 {
                let w = if di == 0 { 1.0 - wx } else { wx } * if dj == 0 { 1.0 - wy } else { wy };
                if w == 0.0 {
                    continue;
                }
                if let Some(c) = self.grid.cell_at(i0 + di, j0 + dj) {
                    sum += w * values[c];
                    weight += w;
                }
            }
        }
        if weight > 0.0 {
            sum / weight
        } else {
            self.containing_cell(x).map_or(0.0, |c| values[c])
        }
    }

    /// Interpolated density of `species` at `(t, x)`.
    pub fn density_at(&self, t: f64, x: [f64; 2], species: usize) -> Result<f64> {
        let (k, w) = self.locate_time(t)?;
        let x = self.check_position(x)?;
        Ok(self.densities_unchecked(k, w, x)[species])
    }

    fn densities_unchecked(&self, k: usize, w: f64, x: [f64; 2]) -> [f64; 2] {
        let at = |frame: &Frame| [self.interpolate(&frame.densities[0], x), self.interpolate(&frame.densities[1], x)];
        let a = at(&self.frames[k]);
        if w == 0.0 {
            return a;
        }
        let b = at(&self.frames[k + 1]);
        [(1.0 - w) * a[0] + w * b[0], (1.0 - w) * a[1] + w * b[1]]
    }

    fn p_minus_u(&self, k: usize, w: f64, x: [f64; 2]) -> f64 {
        self.cell_value(k, w, x, |f, c| f.pressure[c] - f.densities[0][c] - f.densities[1][c])
    }

    /// Largest `|∇P|` of the two frames around `t`.
    fn max_gradient(&self, t: f64) -> Result<f64> {
        let (k, _) = self.locate_time(t)?;
        let next = self.frames.get(k + 1).map_or(0.0, |f| f.max_gradient);
        Ok(self.frames[k].max_gradient.max(next))
    }
}

impl RunSink for PressureHistory {
    fn snapshot(&mut self, _grid: &Grid, state: &SimState) -> Result<()> {
        if self.frames.last().is_none_or(|f| state.t > f.t) {
            self.push_frame(state.t, state.pressure.clone(), state.densities.clone())?;
        }
        Ok(())
    }

    fn advanced(&mut self, _grid: &Grid, state: &SimState) -> Result<()> {
        if self.frames.last().is_none_or(|f| state.t >= f.t + self.spacing) {
            self.push_frame(state.t, state.pressure.clone(), state.densities.clone())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Substeps are sized so that `max|v| Δt ≤ courant · Δx`.
    pub courant: f64,
    /// Species whose dispersion and growth rate drive the path.
    pub species: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { courant: 0.1, species: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CharPath {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    /// `∫ h_i(u) dl` from the start time.
    pub int_h: Vec<f64>,
    /// `∫ (P - u_tot) dl` from the start time.
    pub int_p_minus_u: Vec<f64>,
}

impl CharPath {
    pub fn end_position(&self) -> [f64; 2] {
        *self.positions.last().expect("paths hold at least the start point")
    }

    pub fn total_h(&self) -> f64 {
        self.int_h.last().copied().unwrap_or(0.0)
    }

    pub fn total_p_minus_u(&self) -> f64 {
        self.int_p_minus_u.last().copied().unwrap_or(0.0)
    }
}

/// Midpoint-rule path from `(s, x0)` to `t_end`, forward or backward in time.
///
/// Each history interval inside the range is split into equal substeps.
/// `∫ h` uses the trapezoid rule on interpolated densities; `∫ (P - u_tot)`
/// uses the cell value at the midpoint, matching the piecewise constant
/// divergence of the velocity.
pub fn trace(history: &PressureHistory, x0: [f64; 2], s: f64, t_end: f64, opts: TraceOptions) -> Result<CharPath> {
    history.locate_time(s)?;
    history.locate_time(t_end)?;
    let species = opts.species.min(1);
    let d = history.params.dispersion[species];
    let params = history.params;
    let mut x = history.check_position(x0)?;

    let mut nodes = vec![s];
    let inner = history.frames.iter().map(|f| f.t);
    if t_end >= s {
        nodes.extend(inner.filter(|&t| t > s && t < t_end));
    } else {
        nodes.extend(inner.rev().filter(|&t| t < s && t > t_end));
    }
    nodes.push(t_end);

    let h_at = |t: f64, x: [f64; 2]| -> Result<f64> {
        let (k, w) = history.locate_time(t)?;
        Ok(params.h(species, history.densities_unchecked(k, w, x)))
    };

    let mut path = CharPath { times: vec![s], positions: vec![x], int_h: vec![0.0], int_p_minus_u: vec![0.0] };
    let (mut ih, mut ip) = (0.0, 0.0);
    let mut h_prev = h_at(s, x)?;
    let speed_scale = d * history.grid.dx().recip();
    for pair in nodes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a == b {
            continue;
        }
        let rate = speed_scale * history.max_gradient(0.5 * (a + b))?;
        let n = libm::ceil((rate * (b - a).abs() / opts.courant).max(1.0)) as usize;
        for m in 0..n {
            let t0 = a + (b - a) * m as f64 / n as f64;
            let t1 = if m + 1 == n { b } else { a + (b - a) * (m + 1) as f64 / n as f64 };
            let tau = t1 - t0;
            let tm = t0 + 0.5 * tau;
            let (k0, w0) = history.locate_time(t0)?;
            let v0 = history.velocity_unchecked(k0, w0, x, d);
            let xm = history.check_position([x[0] + 0.5 * tau * v0[0], x[1] + 0.5 * tau * v0[1]])?;
            let (km, wm) = history.locate_time(tm)?;
            let vm = history.velocity_unchecked(km, wm, xm, d);
            ip += tau * history.p_minus_u(km, wm, xm);
            x = history.check_position([x[0] + tau * vm[0], x[1] + tau * vm[1]])?;
            let h_next = h_at(t1, x)?;
            ih += 0.5 * tau * (h_prev + h_next);
            h_prev = h_next;
            path.times.push(t1);
            path.positions.push(x);
            path.int_h.push(ih);
            path.int_p_minus_u.push(ip);
        }
    }
    Ok(path)
}

/// `exp((d/χ) ∫ (u_tot - P))`, the Jacobian determinant of `x0 ↦ Π`.
pub fn jacobian_det(path: &CharPath, d: f64, chi: f64) -> f64 {
    libm::exp(-(d / chi) * path.total_p_minus_u())
}

/// Mass of `species` carried by the cells `cells` from `s` to `t`: the
/// density at time `t` over the traced images (weighted by the Jacobian) and
/// the initial mass scaled by the growth along each path.
pub fn volume_mass_check(
    history: &PressureHistory,
    cells: &[usize],
    s: f64,
    t: f64,
    opts: TraceOptions,
) -> Result<(f64, f64)> {
    let grid = &history.grid;
    let species = opts.species.min(1);
    let d = history.params.dispersion[species];
    let (ks, ws) = history.locate_time(s)?;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for &c in cells {
        let x0 = grid.center(c);
        let path = trace(history, x0, s, t, opts)?;
        let u_end = history.density_at(t, path.end_position(), species)?;
        lhs += u_end * jacobian_det(&path, d, history.params.chi);
        let u_start = history.cell_value(ks, ws, x0, |f, k| f.densities[species][k]);
        rhs += u_start * libm::exp(path.total_h());
    }
    Ok((lhs * grid.cell_area(), rhs * grid.cell_area()))
}

/// Density of `species` at the end of the path from `(start, x0)` to `t`,
/// interpolated from the history and predicted by
/// `u₀ exp(∫ h + (d/χ)(P - u_tot))`.
pub fn representation_check(history: &PressureHistory, x0: [f64; 2], t: f64, opts: TraceOptions) -> Result<(f64, f64)> {
    let species = opts.species.min(1);
    let start = history.start();
    let path = trace(history, x0, start, t, opts)?;
    let traced = history.density_at(t, path.end_position(), species)?;
    let u0 = history.density_at(start, x0, species)?;
    let d = history.params.dispersion[species];
    let formula = u0 * libm::exp(path.total_h() + (d / history.params.chi) * path.total_p_minus_u());
    Ok((traced, formula))
}
