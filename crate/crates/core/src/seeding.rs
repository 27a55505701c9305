//! Initial densities: clusters of cells scattered over the dish.
//!
//! Cluster centres are drawn with squared radius `r ~ Beta(α, β)` and
//! uniform angle, mapped to `(√r cos θ, √r sin θ)`; for `α = β = 1` this is
//! the uniform law on the disk. Each cluster is a Gaussian bump truncated at
//! three widths and renormalised over the active cells so that it carries
//! exactly `U / N`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::{Dimension, Field, Grid};
use crate::rng::SimRng;
use crate::{Error, Result};

pub const DEFAULT_CLUSTER_WIDTH: f64 = 0.03;
const TRUNCATION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesSeed {
    /// Number of clusters `N`.
    pub clusters: usize,
    /// Total mass `U` at `t = 0`.
    pub mass: f64,
    /// Beta law of the squared radius.
    pub alpha: f64,
    pub beta: f64,
}

impl SpeciesSeed {
    pub fn uniform(clusters: usize, mass: f64) -> Self {
        Self { clusters, mass, alpha: 1.0, beta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Layout {
    /// Each species is seeded independently; bumps may overlap.
    #[default]
    Independent,
    /// Every cell is given to the species with the larger density, so that
    /// `u₁ u₂ = 0` exactly.
    Segregated,
    /// Species 2 is species 1 reflected across `x = 0`; only species 1's
    /// seed is used.
    Mirrored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSpec {
    pub species: [SpeciesSeed; 2],
    /// Gaussian width `σ` of each cluster.
    pub width: f64,
    pub seed: u64,
    pub layout: Layout,
}

impl SeedSpec {
    pub fn validate(&self) -> Result<()> {
        for s in &self.species {
            if s.clusters == 0 {
                return Err(Error::InvalidParameter { name: "clusters", value: 0.0 });
            }
            if !(s.mass > 0.0) {
                return Err(Error::InvalidParameter { name: "mass", value: s.mass });
            }
            if !(s.alpha > 0.0) {
                return Err(Error::InvalidParameter { name: "alpha", value: s.alpha });
            }
            if !(s.beta > 0.0) {
                return Err(Error::InvalidParameter { name: "beta", value: s.beta });
            }
        }
        if !(self.width > 0.0 && self.width < 0.5) {
            return Err(Error::InvalidParameter { name: "width", value: self.width });
        }
        Ok(())
    }
}

/// Beta density `x^(α-1) (1-x)^(β-1) / B(α, β)`.
pub fn beta_density(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter { name: "alpha", value: alpha });
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter { name: "beta", value: beta });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter { name: "x", value: x });
    }
    let log_b = libm::lgamma(alpha) + libm::lgamma(beta) - libm::lgamma(alpha + beta);
    Ok(libm::pow(x, alpha - 1.0) * libm::pow(1.0 - x, beta - 1.0) * libm::exp(-log_b))
}

/// Maps a squared radius and an angle onto the unit disk.
pub fn disk_point(r: f64, theta: f64) -> [f64; 2] {
    let rho = libm::sqrt(r);
    [rho * libm::cos(theta), rho * libm::sin(theta)]
}

/// Draws `N` centres, each as `r` then `θ`.
pub fn sample_centers(seed: &SpeciesSeed, rng: &mut SimRng) -> Vec<[f64; 2]> {
    (0..seed.clusters)
        .map(|_| {
            let r = rng.beta(seed.alpha, seed.beta);
            let theta = 2.0 * PI * rng.uniform();
            disk_point(r, theta)
        })
        .collect()
}

/// Distance² from a cell centre to a cluster centre. In 1D the centre's
/// `x` coordinate is scaled to the interval half-width.
fn distance2(grid: &Grid, cell: [f64; 2], center: [f64; 2]) -> f64 {
    match grid.dimension() {
        Dimension::One => {
            let dx = cell[0] - center[0] * grid.half_width();
            dx * dx
        }
        Dimension::Two => {
            let (dx, dy) = (cell[0] - center[0], cell[1] - center[1]);
            dx * dx + dy * dy
        }
    }
}

/// Sum of truncated Gaussian bumps, each holding `mass / N`.
pub fn place_clusters(centers: &[[f64; 2]], width: f64, mass: f64, grid: &Grid) -> Result<Field> {
    let mut field = Field::zeros(grid.len());
    if centers.is_empty() {
        return Ok(field);
    }
    let share = mass / centers.len() as f64;
    let cutoff2 = (TRUNCATION * width) * (TRUNCATION * width);
    let inv = 1.0 / (2.0 * width * width);
    let mut bump = vec![0.0; grid.len()];
    for (index, &c) in centers.iter().enumerate() {
        let mut total = 0.0;
        for (b, &x) in bump.iter_mut().zip(grid.centers()) {
            let d2 = distance2(grid, x, c);
            *b = if d2 <= cutoff2 { libm::exp(-d2 * inv) } else { 0.0 };
            total += *b;
        }
        if total == 0.0 {
            return Err(Error::EmptyCluster(index));
        }
        let scale = share / (total * grid.cell_area());
        for (f, &b) in field.iter_mut().zip(&bump) {
            *f += scale * b;
        }
    }
    Ok(field)
}

/// Cluster centres of both species in drawing order.
pub fn seed_centers(spec: &SeedSpec) -> [Vec<[f64; 2]>; 2] {
    let mut rng = SimRng::new(spec.seed);
    let first = sample_centers(&spec.species[0], &mut rng);
    let second = match spec.layout {
        Layout::Mirrored => first.iter().map(|&[x, y]| [-x, y]).collect(),
        _ => sample_centers(&spec.species[1], &mut rng),
    };
    [first, second]
}

/// Builds both initial fields.
pub fn seed_fields(spec: &SeedSpec, grid: &Grid) -> Result<[Field; 2]> {
    spec.validate()?;
    let [c1, c2] = seed_centers(spec);
    let mass2 = match spec.layout {
        Layout::Mirrored => spec.species[0].mass,
        _ => spec.species[1].mass,
    };
    let mut u1 = place_clusters(&c1, spec.width, spec.species[0].mass, grid)?;
    let mut u2 = place_clusters(&c2, spec.width, mass2, grid)?;
    if spec.layout == Layout::Segregated {
        for (a, b) in u1.iter_mut().zip(u2.iter_mut()) {
            if *a >= *b {
                *b = 0.0;
            } else {
                *a = 0.0;
            }
        }
        for (u, mass) in [(&mut u1, spec.species[0].mass), (&mut u2, mass2)] {
            let current = grid.integrate(u);
            if current == 0.0 {
                return Err(Error::EmptyCluster(0));
            }
            let scale = mass / current;
            u.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok([u1, u2])
}

/// `Σ u₁ u₂ · area`.
pub fn overlap(grid: &Grid, u1: &[f64], u2: &[f64]) -> f64 {
    u1.iter().zip(u2).map(|(a, b)| a * b).sum::<f64>() * grid.cell_area()
}
