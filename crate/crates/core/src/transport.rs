//! Donor-cell upwind advection driven by the pressure gradient.
//!
//! Velocities live on faces, `v = -(P_upper - P_lower)/Δx`. The same face
//! velocity drives both species, scaled by each species' dispersion
//! coefficient. Walls carry no face, so the update telescopes and conserves
//! mass to roundoff.

use alloc::vec::Vec;

use crate::grid::{Field, Grid};
use crate::{Error, Result};

pub const DEFAULT_CFL: f64 = 0.45;

/// One velocity per grid face, positive from `lower` to `upper`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaceVelocities(Vec<f64>);

impl FaceVelocities {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn face_velocities(pressure: &[f64], grid: &Grid) -> FaceVelocities {
    let mut v = FaceVelocities::default();
    face_velocities_into(pressure, grid, &mut v);
    v
}

pub fn face_velocities_into(pressure: &[f64], grid: &Grid, out: &mut FaceVelocities) {
    let inv_dx = 1.0 / grid.dx();
    out.0.clear();
    out.0.extend(grid.faces().iter().map(|f| -(pressure[f.upper] - pressure[f.lower]) * inv_dx));
}

/// Upwind flux across a face: the upstream density times the velocity.
#[inline]
pub fn upwind_flux(v: f64, u_lower: f64, u_upper: f64) -> f64 {
    if v >= 0.0 {
        v * u_lower
    } else {
        v * u_upper
    }
}

/// Largest stable step for the given face velocities:
/// `cfl Δx / (dim d_max max|v|)`, capped at `dt_max`.
pub fn cfl_dt(v: &FaceVelocities, d_max: f64, dx: f64, cfl: f64, dim: usize, dt_max: f64) -> f64 {
    let speed = dim as f64 * d_max * v.max_abs();
    if speed > 0.0 {
        (cfl * dx / speed).min(dt_max)
    } else {
        dt_max
    }
}

fn courant(v: &FaceVelocities, d: f64, dt: f64, dx: f64) -> f64 {
    dt * d * v.max_abs() / dx
}

/// Adds the transport increment `-d Δt/Δx Σ ±φ` of each cell to `out`.
pub(crate) fn accumulate_transport(
    u: &[f64],
    v: &FaceVelocities,
    d: f64,
    dt: f64,
    grid: &Grid,
    out: &mut [f64],
) {
    let scale = d * dt / grid.dx();
    for (f, &vf) in grid.faces().iter().zip(v.values()) {
        let flux = scale * upwind_flux(vf, u[f.lower], u[f.upper]);
        out[f.lower] -= flux;
        out[f.upper] += flux;
    }
}

/// One explicit transport step of species density `u` with dispersion `d`.
pub fn advect(u: &[f64], v: &FaceVelocities, d: f64, dt: f64, grid: &Grid) -> Result<Field> {
    grid.check_field(u)?;
    assert_eq!(v.values().len(), grid.faces().len());
    let c = courant(v, d, dt, grid.dx());
    if c > 1.0 {
        return Err(Error::CflViolation(c));
    }
    let mut out = Field::from(u.to_vec());
    accumulate_transport(u, v, d, dt, grid, &mut out);
    Ok(out)
}

pub(crate) fn check_courant(v: &FaceVelocities, d: f64, dt: f64, dx: f64) -> Result<()> {
    let c = courant(v, d, dt, dx);
    if c > 1.0 {
        Err(Error::CflViolation(c))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::HelmholtzOperator;
    use crate::grid::GridSpec;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn flux_branches() {
        assert_eq!(upwind_flux(2.0, 3.0, 7.0), 6.0);
        assert_eq!(upwind_flux(-1.0, 3.0, 4.0), -4.0);
        assert_eq!(upwind_flux(0.0, 3.0, 4.0), 0.0);
    }

    #[test]
    fn velocities_from_pressure() {
        let grid = Grid::new(GridSpec::interval(1.0, 4)).unwrap();
        assert_eq!(grid.dx(), 0.5);
        let v = face_velocities(&[1.0, 2.0, 2.0, 2.0], &grid);
        assert_eq!(v.values(), &[-2.0, 0.0, 0.0]);
        let v = face_velocities(&[3.0; 4], &grid);
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn symmetric_pressure_gives_antisymmetric_velocity() {
        let grid = Grid::new(GridSpec::interval(1.0, 16)).unwrap();
        let p = Field::from_fn(&grid, |[x, _]| (-x * x * 10.0).exp());
        let v = face_velocities(&p, &grid);
        let n = v.values().len();
        for k in 0..n {
            assert!((v.values()[k] + v.values()[n - 1 - k]).abs() < 1e-14);
        }
    }

    #[test]
    fn hand_applied_update() {
        // A two-cell pair inside a four-cell grid: u = (1, 0) across a face
        // with v = 1, d = 1, Δt/Δx = 1/2.
        let grid = Grid::new(GridSpec::interval(1.0, 4)).unwrap();
        let v = FaceVelocities::from_values(vec![0.0, 1.0, 0.0]);
        let out = advect(&[0.0, 1.0, 0.0, 0.0], &v, 1.0, 0.25, &grid).unwrap();
        assert_eq!(&out[..], &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn zero_velocity_is_identity() {
        let grid = Grid::new(GridSpec::disk(16)).unwrap();
        let u = Field::from_fn(&grid, |[x, y]| 1.0 + x * y);
        let v = FaceVelocities::from_values(vec![0.0; grid.faces().len()]);
        assert_eq!(advect(&u, &v, 2.0, 0.1, &grid).unwrap(), u);
    }

    #[test]
    fn rejects_cfl_violation() {
        let grid = Grid::new(GridSpec::interval(1.0, 4)).unwrap();
        let v = FaceVelocities::from_values(vec![0.0, 3.0, 0.0]);
        let err = advect(&[0.0, 1.0, 0.0, 0.0], &v, 1.0, 0.25, &grid).unwrap_err();
        assert!(matches!(err, Error::CflViolation(c) if (c - 1.5).abs() < 1e-12));
    }

    #[test]
    fn cfl_formula() {
        let v = FaceVelocities::from_values(vec![0.5, -1.0]);
        assert!((cfl_dt(&v, 2.0, 0.1, 0.45, 1, 1.0) - 0.0225).abs() < 1e-15);
        assert!((cfl_dt(&v, 2.0, 0.05, 0.45, 1, 1.0) - 0.01125).abs() < 1e-15);
        let still = FaceVelocities::from_values(vec![0.0; 3]);
        assert_eq!(cfl_dt(&still, 2.0, 0.1, 0.45, 2, 0.02), 0.02);
    }

    fn random_setup(grid: &Grid, seeds: &[f64]) -> (Field, FaceVelocities, f64) {
        let n = grid.len();
        let u = Field::from((0..n).map(|k| seeds[k % seeds.len()]).collect::<Vec<_>>());
        let op = HelmholtzOperator::assemble(grid, 0.01).unwrap();
        let (p, _) = op.solve(&u, 1e-10).unwrap();
        let v = face_velocities(&p, grid);
        let dim = grid.dimension().count();
        let dt = cfl_dt(&v, 2.0, grid.dx(), DEFAULT_CFL, dim, 1.0);
        (u, v, dt)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn positivity_and_conservation(
            seeds in prop::collection::vec(0.0f64..1.0, 7..40),
            two_d in any::<bool>(),
        ) {
            let spec = if two_d { GridSpec::disk(20) } else { GridSpec::interval(1.0, 33) };
            let grid = Grid::new(spec).unwrap();
            let (u, v, dt) = random_setup(&grid, &seeds);
            let out = advect(&u, &v, 2.0, dt, &grid).unwrap();
            prop_assert!(out.iter().all(|&x| x >= 0.0));
            let before = grid.integrate(&u);
            let after = grid.integrate(&out);
            prop_assert!((after - before).abs() <= 1e-13 * before.max(1e-300));
        }
    }

    #[test]
    fn reflection_equivariance() {
        for spec in [GridSpec::interval(1.0, 24), GridSpec::disk(24)] {
            let grid = Grid::new(spec).unwrap();
            let u = Field::from_fn(&grid, |[x, y]| (-(x - 0.3).powi(2) * 20.0 - (y - 0.1).powi(2) * 20.0).exp());
            let op = HelmholtzOperator::assemble(&grid, 0.01).unwrap();
            let (p, _) = op.solve(&u, 1e-12).unwrap();
            let v = face_velocities(&p, &grid);
            let out = advect(&u, &v, 2.0, 0.001, &grid).unwrap();

            let mirror: Vec<usize> = (0..grid.len()).map(|c| grid.mirror_x(c).unwrap()).collect();
            let um = Field::from(mirror.iter().map(|&c| u[c]).collect::<Vec<_>>());
            let (pm, _) = op.solve(&um, 1e-12).unwrap();
            let vm = face_velocities(&pm, &grid);
            let outm = advect(&um, &vm, 2.0, 0.001, &grid).unwrap();
            for c in 0..grid.len() {
                assert!((outm[c] - out[mirror[c]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn long_run_conservation() {
        let grid = Grid::new(GridSpec::interval(1.0, 64)).unwrap();
        let op = HelmholtzOperator::assemble(&grid, 0.01).unwrap();
        let mut u = Field::from_fn(&grid, |[x, _]| (-(x - 0.2).powi(2) * 30.0).exp());
        let m0 = grid.integrate(&u);
        for _ in 0..10_000 {
            let (p, _) = op.solve(&u, 1e-10).unwrap();
            let v = face_velocities(&p, &grid);
            let dt = cfl_dt(&v, 2.0, grid.dx(), DEFAULT_CFL, 1, 0.01);
            u = advect(&u, &v, 2.0, dt, &grid).unwrap();
        }
        assert!((grid.integrate(&u) - m0).abs() / m0 <= 1e-10);
    }
}
