//! Named experiment setups.

use hks_core::KineticParams;

use crate::config::{Config, DomainKind, KineticsSection, LayoutName};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    /// What the parameter set encodes.
    pub note: &'static str,
    pub config: Config,
}

fn with_kinetics(params: KineticParams) -> Config {
    Config { kinetics: KineticsSection::from(&params), ..Config::default() }
}

fn competition(delta: [f64; 2], a12: f64, a21: f64) -> Config {
    with_kinetics(KineticParams::with_treatment(delta, a12, a21))
}

fn clusters(mut c: Config, n: usize, mass: f64) -> Config {
    c.seeding.clusters1 = n;
    c.seeding.clusters2 = n;
    c.seeding.mass1 = mass;
    c.seeding.mass2 = mass;
    c
}

/// Drug-treated sensitive species, no cross-competition.
fn weak_treatment() -> Config {
    competition([0.15, 0.0], 0.0, 0.0)
}

/// Width of the near-point clusters used by the dispersion scenarios.
pub const POINT_CLUSTER_WIDTH: f64 = 0.01;

fn dispersion_scenario(d2: f64, delta1: f64) -> Config {
    let mut p = KineticParams::with_treatment([delta1, 0.0], 0.0, 0.0);
    p.dispersion = [2.0, d2];
    let mut c = clusters(with_kinetics(p), 10, 0.005);
    c.seeding.width = POINT_CLUSTER_WIDTH;
    c
}

pub fn presets() -> Vec<Preset> {
    let mut list = Vec::new();
    let mut add = |name, note, config| list.push(Preset { name, note, config });

    add("case_i", "treatment δ1=0.4 with a12=0.2, a21=1: stable coexistence near (0.11, 0.34)", competition([0.4, 0.0], 0.2, 1.0));
    add("case_ii", "treatment δ1=0.4 with a12=a21=1: species 2 excludes species 1", competition([0.4, 0.0], 1.0, 1.0));
    add("case_iii", "treatment δ1=0.4 with a12=0.2, a21=5: species 1 excludes species 2", competition([0.4, 0.0], 0.2, 5.0));
    add("case_iv", "treatment δ1=0.4 with a12=1, a21=5: bistability, outcome depends on the initial state", competition([0.4, 0.0], 1.0, 5.0));

    let mut symmetric = with_kinetics(KineticParams::with_treatment([0.0; 2], 0.2, 0.2));
    symmetric.kinetics.b2 = symmetric.kinetics.b1;
    symmetric.kinetics.a22 = symmetric.kinetics.a11;
    symmetric.seeding.layout = LayoutName::Mirrored;
    add("symmetric", "identical species, species 2 seeded as the mirror image of species 1", symmetric);

    add("sparse", "weak treatment δ1=0.15, 10 clusters per species of total mass 0.005", clusters(weak_treatment(), 10, 0.005));
    add("dense", "weak treatment δ1=0.15, 200 clusters per species of total mass 0.1", clusters(weak_treatment(), 200, 0.1));

    let mut beta_uniform = clusters(weak_treatment(), 40, 0.02);
    beta_uniform.seeding.seed = 2;
    add("beta_uniform", "40 clusters of mass 0.02, squared radius ~ Beta(1, 1)", beta_uniform);
    let mut beta_biased = beta_uniform;
    for (a, b) in [(&mut beta_biased.seeding.alpha1, &mut beta_biased.seeding.beta1), (&mut beta_biased.seeding.alpha2, &mut beta_biased.seeding.beta2)] {
        *a = 3.0;
        *b = 2.0;
    }
    add("beta_biased", "40 clusters of mass 0.02, squared radius ~ Beta(3, 2)", beta_biased);

    add("scenario1", "equal dispersion d=(2, 2), no treatment, no cross-competition", dispersion_scenario(2.0, 0.0));
    add("scenario2", "slow resistant species d=(2, 0.2), no treatment", dispersion_scenario(0.2, 0.0));
    add("scenario3", "slow resistant species d=(2, 0.2), treatment δ1=0.1", dispersion_scenario(0.2, 0.1));

    add("conservation", "transport only (h ≡ 0) on the disk", with_kinetics(KineticParams::transport_only([2.0, 2.0], 0.01)));
    let mut line = clusters(with_kinetics(KineticParams::transport_only([2.0, 2.0], 0.01)), 5, 0.01);
    line.grid.dimension = DomainKind::Interval;
    line.grid.resolution = 256;
    line.seeding.width = 0.05;
    add("conservation_1d", "transport only (h ≡ 0) on [-1, 1]", line);

    let mut segregation = weak_treatment();
    segregation.seeding.layout = LayoutName::Segregated;
    add("segregation", "equal dispersion, winner-takes-all seeding so that u1 u2 = 0 at t = 0", segregation);

    list
}

pub fn find(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}
