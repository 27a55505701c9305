//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! dimension = "disk"      # or "interval"
//! resolution = 128        # cells per axis, M
//! half_width = 1.0        # L (interval only; the disk has radius 1)
//!
//! [kinetics]
//! b1 = 0.642              # growth rates b_i (day⁻¹)
//! delta1 = 0.4            # drug mortality δ_i (day⁻¹)
//! a12 = 0.2               # competition a_ij
//! d1 = 2.0                # dispersion d_i
//! chi = 0.01              # sensing coefficient χ
//!
//! [seeding]
//! clusters1 = 20          # N_{u_i}
//! mass1 = 0.01            # U_i, total mass at t = 0
//! layout = "independent"  # or "segregated", "mirrored"
//!
//! [run]
//! t_end = 6.0             # T (days)
//! ```
//!
//! Missing keys take the defaults below. Any key can be overridden from the
//! command line as `--section.key value`.

use std::path::Path;

use hks_core::seeding::{Layout, SeedSpec, SpeciesSeed, DEFAULT_CLUSTER_WIDTH};
use hks_core::simulator::SimConfig;
use hks_core::{Dimension, GridSpec, KineticParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    #[default]
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dimension: DomainKind,
    /// Cells per axis `M`.
    pub resolution: usize,
    /// Half-width `L` of the interval `[-L, L]`; must be 1 on the disk.
    pub half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { dimension: DomainKind::Disk, resolution: 128, half_width: 1.0 }
    }
}

/// Dimensionless kinetic and transport parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KineticsSection {
    /// Growth rate `b_1` (day⁻¹).
    pub b1: f64,
    /// Growth rate `b_2` (day⁻¹).
    pub b2: f64,
    /// Drug mortality `δ_1` (day⁻¹).
    pub delta1: f64,
    /// Drug mortality `δ_2` (day⁻¹).
    pub delta2: f64,
    /// Self-competition `a_11`.
    pub a11: f64,
    /// Competition of species 2 on species 1, `a_12`.
    pub a12: f64,
    /// Competition of species 1 on species 2, `a_21`.
    pub a21: f64,
    /// Self-competition `a_22`.
    pub a22: f64,
    /// Dispersion `d_1`.
    pub d1: f64,
    /// Dispersion `d_2`.
    pub d2: f64,
    /// Sensing coefficient `χ`.
    pub chi: f64,
}

impl Default for KineticsSection {
    fn default() -> Self {
        Self::from(&KineticParams::reference())
    }
}

impl From<&KineticParams> for KineticsSection {
    fn from(p: &KineticParams) -> Self {
        Self {
            b1: p.growth[0],
            b2: p.growth[1],
            delta1: p.mortality[0],
            delta2: p.mortality[1],
            a11: p.competition[0][0],
            a12: p.competition[0][1],
            a21: p.competition[1][0],
            a22: p.competition[1][1],
            d1: p.dispersion[0],
            d2: p.dispersion[1],
            chi: p.chi,
        }
    }
}

impl KineticsSection {
    pub fn params(&self) -> KineticParams {
        KineticParams {
            growth: [self.b1, self.b2],
            mortality: [self.delta1, self.delta2],
            competition: [[self.a11, self.a12], [self.a21, self.a22]],
            dispersion: [self.d1, self.d2],
            chi: self.chi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LayoutName {
    #[default]
    Independent,
    Segregated,
    Mirrored,
}

impl From<LayoutName> for Layout {
    fn from(l: LayoutName) -> Self {
        match l {
            LayoutName::Independent => Layout::Independent,
            LayoutName::Segregated => Layout::Segregated,
            LayoutName::Mirrored => Layout::Mirrored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedingSection {
    /// Cluster count `N_{u_1}`.
    pub clusters1: usize,
    /// Cluster count `N_{u_2}`.
    pub clusters2: usize,
    /// Total mass `U_1` at `t = 0`.
    pub mass1: f64,
    /// Total mass `U_2` at `t = 0`.
    pub mass2: f64,
    /// Beta law `(α, β)` of the squared cluster radius, species 1.
    pub alpha1: f64,
    pub beta1: f64,
    /// Beta law of the squared cluster radius, species 2.
    pub alpha2: f64,
    pub beta2: f64,
    /// Gaussian cluster width `σ`.
    pub width: f64,
    /// Generator seed (at most `i64::MAX` in TOML).
    pub seed: u64,
    pub layout: LayoutName,
}

impl Default for SeedingSection {
    fn default() -> Self {
        Self {
            clusters1: 20,
            clusters2: 20,
            mass1: 0.01,
            mass2: 0.01,
            alpha1: 1.0,
            beta1: 1.0,
            alpha2: 1.0,
            beta2: 1.0,
            width: DEFAULT_CLUSTER_WIDTH,
            seed: 1,
            layout: LayoutName::Independent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Final time `T` (days).
    pub t_end: f64,
    /// CFL number.
    pub cfl: f64,
    /// Largest time step `Δt_max` (days).
    pub dt_max: f64,
    /// Relative residual of the pressure solve.
    pub rel_tol: f64,
    /// Metrics cadence (days).
    pub output_every: f64,
    /// Snapshot cadence (days).
    pub snapshot_every: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        let d = SimConfig::new(GridSpec::disk(128), KineticParams::reference());
        Self {
            t_end: d.t_end,
            cfl: d.cfl,
            dt_max: d.dt_max,
            rel_tol: d.rel_tol,
            output_every: d.output_every,
            snapshot_every: d.snapshot_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub kinetics: KineticsSection,
    pub seeding: SeedingSection,
    pub run: RunSection,
}

impl Config {
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            dimension: match self.grid.dimension {
                DomainKind::Interval => Dimension::One,
                DomainKind::Disk => Dimension::Two,
            },
            half_width: self.grid.half_width,
            resolution: self.grid.resolution,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let r = &self.run;
        SimConfig {
            grid: self.grid_spec(),
            kinetics: self.kinetics.params(),
            t_end: r.t_end,
            cfl: r.cfl,
            dt_max: r.dt_max,
            rel_tol: r.rel_tol,
            output_every: r.output_every,
            snapshot_every: r.snapshot_every,
        }
    }

    pub fn seed_spec(&self) -> SeedSpec {
        let s = &self.seeding;
        SeedSpec {
            species: [
                SpeciesSeed { clusters: s.clusters1, mass: s.mass1, alpha: s.alpha1, beta: s.beta1 },
                SpeciesSeed { clusters: s.clusters2, mass: s.mass2, alpha: s.alpha2, beta: s.beta2 },
            ],
            width: s.width,
            seed: s.seed,
            layout: s.layout.into(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sim_config().validate().map_err(CliError::invalid)?;
        self.seed_spec().validate().map_err(CliError::invalid)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialise")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, CliError> {
        let config: Self = toml::Value::Table(table).try_into().map_err(|e| CliError::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `section.key = value` overrides; values are parsed as TOML
    /// literals and fall back to strings.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self, CliError> {
        if overrides.is_empty() {
            return Ok(*self);
        }
        let mut table: toml::Table = self.to_toml().parse().expect("own output parses");
        for (key, raw) in overrides {
            let (section, field) =
                key.split_once('.').ok_or_else(|| CliError::Config(format!("override `{key}` needs section.key")))?;
            let mut value = parse_value(raw);
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(inner) = entry else {
                return Err(CliError::Config(format!("`{section}` is not a section")));
            };
            if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (inner.get(field), &value) {
                value = toml::Value::Float(*i as f64);
            }
            inner.insert(field.to_string(), value);
        }
        Self::from_table(table)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Splits trailing `--section.key value` / `--section.key=value` arguments.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            return Err(CliError::Config(format!("unexpected argument `{arg}`")));
        };
        if !body.contains('.') {
            return Err(CliError::Config(format!("unknown flag `{arg}`")));
        }
        match body.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| CliError::Config(format!("`{arg}` needs a value")))?;
                out.push((body.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = Config::from_toml("[kinetics]\ndelta1 = 0.4\n[grid]\nresolution = 64\n").unwrap();
        assert_eq!(c.kinetics.delta1, 0.4);
        assert_eq!(c.kinetics.b1, 0.642);
        assert_eq!(c.grid.resolution, 64);
        assert_eq!(c.run, RunSection::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::from_toml("[kinetics]\ndelta3 = 1.0\n"), Err(CliError::Config(_))));
        assert!(matches!(Config::from_toml("[grid]\nresolution = 2\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn dotted_overrides() {
        let args: Vec<String> = ["--kinetics.delta1", "0.4", "--seeding.layout=segregated", "--grid.resolution", "96"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let o = parse_overrides(&args).unwrap();
        let c = Config::default().with_overrides(&o).unwrap();
        assert_eq!(c.kinetics.delta1, 0.4);
        assert_eq!(c.seeding.layout, LayoutName::Segregated);
        assert_eq!(c.grid.resolution, 96);
        let c = c.with_overrides(&[("kinetics.a21".to_string(), "5".to_string())]).unwrap();
        assert_eq!(c.kinetics.a21, 5.0);
        assert!(parse_overrides(&["--nodot".to_string(), "1".to_string()]).is_err());
        let bad = vec![("kinetics.nope".to_string(), "1".to_string())];
        assert!(Config::default().with_overrides(&bad).is_err());
    }
}
