//! Lotka-Volterra kinetics, the spatially homogeneous two-species ODE and
//! the classification of its long-time behaviour.
//!
//! Drug mortality enters only through the net growth `b_i - δ_i`, which
//! replaces `b_i` in every equilibrium formula.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Complete kinetic and transport parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticParams {
    /// Growth rates `b_i` (day⁻¹).
    pub growth: [f64; 2],
    /// Drug-induced mortality `δ_i` (day⁻¹).
    pub mortality: [f64; 2],
    /// Competition matrix `a_ij`; row `i` acts on species `i`.
    pub competition: [[f64; 2]; 2],
    /// Dispersion coefficients `d_i`.
    pub dispersion: [f64; 2],
    /// Sensing coefficient `χ`.
    pub chi: f64,
}

impl Default for KineticParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl KineticParams {
    /// Dimensionless reference values: MCF-7 (species 1) and MCF-7/Doxo
    /// (species 2) without drug and without interspecific competition.
    pub fn reference() -> Self {
        Self {
            growth: [0.6420, 0.6359],
            mortality: [0.0, 0.0],
            competition: [[1.5588, 0.0], [0.0, 1.5415]],
            dispersion: [2.0, 2.0],
            chi: 0.01,
        }
    }

    /// Reference values with the given mortality and cross-competition.
    pub fn with_treatment(delta: [f64; 2], a12: f64, a21: f64) -> Self {
        let mut p = Self::reference();
        p.mortality = delta;
        p.competition[0][1] = a12;
        p.competition[1][0] = a21;
        p
    }

    /// Parameters with every reaction term switched off (`h ≡ 0`).
    pub fn transport_only(dispersion: [f64; 2], chi: f64) -> Self {
        Self {
            growth: [0.0; 2],
            mortality: [0.0; 2],
            competition: [[0.0; 2]; 2],
            dispersion,
            chi,
        }
    }

    /// Checks the sign constraints. Growth and self-competition may be zero
    /// only when the whole reaction is off.
    pub fn validate(&self) -> Result<()> {
        let reaction_off = self.growth == [0.0; 2]
            && self.mortality == [0.0; 2]
            && self.competition == [[0.0; 2]; 2];
        let bad = |name, value: f64| Err(Error::InvalidParameter { name, value });
        for i in 0..2 {
            let (b, a_ii) = (self.growth[i], self.competition[i][i]);
            if !reaction_off && !(b > 0.0) {
                return bad("growth", b);
            }
            if !reaction_off && !(a_ii > 0.0) {
                return bad("self-competition", a_ii);
            }
            if !(self.competition[i][1 - i] >= 0.0) {
                return bad("cross-competition", self.competition[i][1 - i]);
            }
            if !(self.mortality[i] >= 0.0) {
                return bad("mortality", self.mortality[i]);
            }
            if !(self.dispersion[i] > 0.0) {
                return bad("dispersion", self.dispersion[i]);
            }
        }
        if !(self.chi > 0.0) {
            return bad("chi", self.chi);
        }
        let all = self.growth.iter().chain(&self.mortality).chain(self.competition.iter().flatten());
        for &v in all {
            if !v.is_finite() {
                return bad("non-finite", v);
            }
        }
        Ok(())
    }

    pub fn net_growth(&self, species: usize) -> f64 {
        self.growth[species] - self.mortality[species]
    }

    /// Per-capita rate `h_i(u) = b_i - δ_i - Σ_j a_ij u_j`.
    #[inline]
    pub fn h(&self, species: usize, u: [f64; 2]) -> f64 {
        let a = &self.competition[species];
        self.growth[species] - self.mortality[species] - a[0] * u[0] - a[1] * u[1]
    }

    /// Single-species equilibrium `P̄_i = (b_i - δ_i)/a_ii`.
    pub fn carrying_capacity(&self, species: usize) -> f64 {
        self.net_growth(species) / self.competition[species][species]
    }

    pub fn max_dispersion(&self) -> f64 {
        self.dispersion[0].max(self.dispersion[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompetitionCase {
    /// Weak competition both ways: stable coexistence.
    I,
    /// Species 2 excludes species 1.
    II,
    /// Species 1 excludes species 2.
    III,
    /// Strong competition both ways: bistable.
    IV,
}

impl CompetitionCase {
    pub fn label(self) -> &'static str {
        match self {
            CompetitionCase::I => "i",
            CompetitionCase::II => "ii",
            CompetitionCase::III => "iii",
            CompetitionCase::IV => "iv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attractor {
    /// The interior equilibrium `E*`.
    Coexistence,
    /// `Ē₁ = (P̄₁, 0)`.
    Species1,
    /// `Ē₂ = (0, P̄₂)`.
    Species2,
    /// `Ē₁` and `Ē₂` both stable; the outcome depends on the initial state.
    RegionDependent,
}

impl Attractor {
    pub fn describe(self) -> &'static str {
        match self {
            Attractor::Coexistence => "coexistence at E*",
            Attractor::Species1 => "E1 (species 1 only)",
            Attractor::Species2 => "E2 (species 2 only)",
            Attractor::RegionDependent => "region dependent (E1 or E2)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumReport {
    /// `P̄_1`, `P̄_2`.
    pub single: [f64; 2],
    /// Interior equilibrium, present only when it is strictly positive.
    pub coexistence: Option<[f64; 2]>,
    /// `None` when a species cannot grow on its own.
    pub case: Option<CompetitionCase>,
    /// Species with `b_i - δ_i > 0`.
    pub viable: [bool; 2],
    pub attractor: Attractor,
}

const BOUNDARY_TOL: f64 = 1e-12;

fn nearly_equal(x: f64, y: f64) -> bool {
    (x - y).abs() <= BOUNDARY_TOL * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

/// Interior equilibrium of the two-species system with net growth rates.
pub fn interior_equilibrium(params: &KineticParams) -> Option<[f64; 2]> {
    let [[a11, a12], [a21, a22]] = params.competition;
    let (r1, r2) = (params.net_growth(0), params.net_growth(1));
    let det = a11 * a22 - a12 * a21;
    if det == 0.0 {
        return None;
    }
    let u1 = (a22 * r1 - a12 * r2) / det;
    let u2 = (a21 * r1 - a11 * r2) / -det;
    (u1 > 0.0 && u2 > 0.0).then_some([u1, u2])
}

/// Places the parameters in one of the four competition regimes.
pub fn classify(params: &KineticParams) -> Result<EquilibriumReport> {
    params.validate()?;
    let viable = [params.net_growth(0) > 0.0, params.net_growth(1) > 0.0];
    let single = [params.carrying_capacity(0), params.carrying_capacity(1)];
    let coexistence = interior_equilibrium(params);
    match viable {
        [false, false] => return Err(Error::NoViableSpecies),
        [true, false] => {
            return Ok(EquilibriumReport { single, coexistence, case: None, viable, attractor: Attractor::Species1 })
        }
        [false, true] => {
            return Ok(EquilibriumReport { single, coexistence, case: None, viable, attractor: Attractor::Species2 })
        }
        [true, true] => {}
    }

    let [[a11, a12], [a21, a22]] = params.competition;
    let (lhs1, rhs1) = (a12 / a11, single[0] / single[1]);
    let (lhs2, rhs2) = (a21 / a22, single[1] / single[0]);
    if nearly_equal(lhs1, rhs1) {
        return Err(Error::BoundaryCase("a12/a11 = P1/P2"));
    }
    if nearly_equal(lhs2, rhs2) {
        return Err(Error::BoundaryCase("a21/a22 = P2/P1"));
    }
    let (case, attractor) = match (lhs1 < rhs1, lhs2 < rhs2) {
        (true, true) => (CompetitionCase::I, Attractor::Coexistence),
        (false, true) => (CompetitionCase::II, Attractor::Species2),
        (true, false) => (CompetitionCase::III, Attractor::Species1),
        (false, false) => (CompetitionCase::IV, Attractor::RegionDependent),
    };
    Ok(EquilibriumReport { single, coexistence, case: Some(case), viable, attractor })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, [f64; 2])> {
        Some((*self.times.last()?, *self.states.last()?))
    }
}

/// Largest admissible RK4 step: `0.01 min_i 1/(b_i + δ_i)`.
pub fn max_ode_step(params: &KineticParams) -> f64 {
    (0..2)
        .map(|i| params.growth[i] + params.mortality[i])
        .filter(|&rate| rate > 0.0)
        .map(|rate| 0.01 / rate)
        .fold(f64::INFINITY, f64::min)
}

fn ode_rhs(params: &KineticParams, u: [f64; 2]) -> [f64; 2] {
    [u[0] * params.h(0, u), u[1] * params.h(1, u)]
}

const ODE_CLAMP: f64 = -1e-12;

/// Integrates `u_i' = u_i h_i(u)` with classical fixed-step RK4 up to
/// `t_end`, recording every step. The final step is shortened to land on
/// `t_end`.
pub fn ode_integrate(params: &KineticParams, u0: [f64; 2], t_end: f64, dt: f64) -> Result<Trajectory> {
    params.validate()?;
    if !(u0[0] >= 0.0 && u0[1] >= 0.0) {
        return Err(Error::InvalidParameter { name: "u0", value: u0[0].min(u0[1]) });
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidParameter { name: "t_end", value: t_end });
    }
    let limit = max_ode_step(params);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }

    let steps = libm::ceil(t_end / dt - 1e-9).max(0.0) as usize;
    let mut traj = Trajectory { times: Vec::with_capacity(steps + 1), states: Vec::with_capacity(steps + 1) };
    let mut u = u0;
    traj.times.push(0.0);
    traj.states.push(u);
    let axpy = |u: [f64; 2], k: [f64; 2], s: f64| [u[0] + s * k[0], u[1] + s * k[1]];
    for n in 0..steps {
        let t = n as f64 * dt;
        let h = if n + 1 == steps { t_end - t } else { dt };
        let k1 = ode_rhs(params, u);
        let k2 = ode_rhs(params, axpy(u, k1, h / 2.0));
        let k3 = ode_rhs(params, axpy(u, k2, h / 2.0));
        let k4 = ode_rhs(params, axpy(u, k3, h));
        for i in 0..2 {
            let next = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            u[i] = if next >= 0.0 {
                next
            } else if next >= ODE_CLAMP {
                0.0
            } else {
                return Err(Error::NegativeDensity { value: next, cell: i });
            };
        }
        traj.times.push(if n + 1 == steps { t_end } else { t + h });
        traj.states.push(u);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case_i() -> KineticParams {
        KineticParams::with_treatment([0.4, 0.0], 0.2, 1.0)
    }

    #[test]
    fn h_at_origin() {
        let p = case_i();
        assert_eq!(p.h(0, [0.0, 0.0]), p.growth[0] - p.mortality[0]);
        assert_eq!(p.h(1, [0.0, 0.0]), p.growth[1]);
    }

    #[test]
    fn reference_single_species_root() {
        let p = KineticParams::reference();
        let root: f64 = 0.6420 / 1.5588;
        assert!((root - 0.41185).abs() < 1e-5);
        assert!(p.h(0, [root, 123.0]).abs() < 1e-15);
    }

    #[test]
    fn case_i_coexistence_point() {
        let p = case_i();
        let e = interior_equilibrium(&p).unwrap();
        assert!((e[0] - 0.11).abs() < 0.005 && (e[1] - 0.34).abs() < 0.005, "{e:?}");
        assert!(p.h(0, e).abs() < 1e-14 && p.h(1, e).abs() < 1e-14);
    }

    #[test]
    fn four_regimes() {
        let expect = [
            ((0.2, 1.0), CompetitionCase::I, Attractor::Coexistence),
            ((1.0, 1.0), CompetitionCase::II, Attractor::Species2),
            ((0.2, 5.0), CompetitionCase::III, Attractor::Species1),
            ((1.0, 5.0), CompetitionCase::IV, Attractor::RegionDependent),
        ];
        for ((a12, a21), case, attractor) in expect {
            let r = classify(&KineticParams::with_treatment([0.4, 0.0], a12, a21)).unwrap();
            assert_eq!(r.case, Some(case));
            assert_eq!(r.attractor, attractor);
            assert_eq!(r.coexistence.is_some(), matches!(case, CompetitionCase::I | CompetitionCase::IV));
        }
    }

    #[test]
    fn no_cross_competition_is_case_i() {
        let r = classify(&KineticParams::reference()).unwrap();
        assert_eq!(r.case, Some(CompetitionCase::I));
        let e = r.coexistence.unwrap();
        assert!((e[0] - r.single[0]).abs() < 1e-15 && (e[1] - r.single[1]).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_an_error() {
        let mut p = KineticParams::with_treatment([0.4, 0.0], 0.0, 0.0);
        let ratio = p.carrying_capacity(0) / p.carrying_capacity(1);
        p.competition[0][1] = ratio * p.competition[0][0];
        assert!(matches!(classify(&p), Err(Error::BoundaryCase(_))));
    }

    #[test]
    fn nonviable_species_is_flagged() {
        let p = KineticParams::with_treatment([0.7, 0.0], 0.2, 1.0);
        let r = classify(&p).unwrap();
        assert_eq!(r.viable, [false, true]);
        assert_eq!(r.case, None);
        assert_eq!(r.attractor, Attractor::Species2);
        let both = KineticParams::with_treatment([0.7, 0.7], 0.2, 1.0);
        assert_eq!(classify(&both), Err(Error::NoViableSpecies));
    }

    #[test]
    fn origin_is_fixed() {
        let t = ode_integrate(&case_i(), [0.0, 0.0], 10.0, 0.005).unwrap();
        assert!(t.states.iter().all(|s| *s == [0.0, 0.0]));
    }

    #[test]
    fn logistic_limit() {
        let p = KineticParams::reference();
        let b = p.growth[0];
        let t_end = 40.0 / b;
        let traj = ode_integrate(&p, [0.01, 0.0], t_end, 0.01).unwrap();
        let (t, end) = traj.last().unwrap();
        assert_eq!(t, t_end);
        assert!((end[0] - b / p.competition[0][0]).abs() < 1e-6);
        assert_eq!(end[1], 0.0);
        assert!(traj.states.windows(2).all(|w| w[1][0] >= w[0][0]));
    }

    #[test]
    fn case_i_trajectory_reaches_coexistence() {
        let traj = ode_integrate(&case_i(), [0.01, 0.01], 60.0, 0.005).unwrap();
        let (_, end) = traj.last().unwrap();
        assert!((end[0] - 0.11).abs() < 0.01 && (end[1] - 0.34).abs() < 0.01, "{end:?}");
    }

    #[test]
    fn rejects_large_step() {
        let p = case_i();
        let limit = max_ode_step(&p);
        assert!((limit - 0.01 / 1.042).abs() < 1e-15);
        assert!(matches!(ode_integrate(&p, [0.1, 0.1], 1.0, 2.0 * limit), Err(Error::StepTooLarge { .. })));
    }

    proptest! {
        #[test]
        fn axes_are_invariant(u in 0.0f64..1.0, species in 0usize..2) {
            let mut u0 = [0.0, 0.0];
            u0[species] = u;
            let traj = ode_integrate(&case_i(), u0, 5.0, 0.005).unwrap();
            prop_assert!(traj.states.iter().all(|s| s[1 - species] == 0.0));
        }

        #[test]
        fn classification_survives_rescaling(
            a12 in 0.0f64..3.0,
            a21 in 0.0f64..6.0,
            scale_r in 0.1f64..10.0,
            scale_a in 0.1f64..10.0,
        ) {
            let p = KineticParams::with_treatment([0.4, 0.0], a12, a21);
            let Ok(base) = classify(&p) else { return Ok(()); };
            let mut q = p;
            for i in 0..2 {
                q.growth[i] = p.net_growth(i) * scale_r;
                q.mortality[i] = 0.0;
                for j in 0..2 {
                    q.competition[i][j] = p.competition[i][j] * scale_a;
                }
            }
            let scaled = classify(&q).unwrap();
            prop_assert_eq!(base.case, scaled.case);
        }
    }
}
