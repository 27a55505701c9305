//! Two-stage logistic fit of proliferation counts.
//!
//! First the growth rate `b` with the saturation `K̃` pinned (`ã = b/K̃`) on an
//! untreated series, then the extra mortality `δ` with `b` and `ã` held fixed
//! on a treated one. Both stages minimise the squared log residual
//! `Σ (ln u(t_k) - ln u_k)²` by golden-section search.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Saturation `1.29·10⁷` cells in units of `10⁵` cells.
pub const DEFAULT_SATURATION: f64 = 129.0;
/// Raw counts are divided by this before fitting.
pub const DEFAULT_COUNT_SCALE: f64 = 1e5;
pub const GROWTH_BRACKET: (f64, f64) = (0.0, 5.0);
/// Upper end of the mortality bracket is `b + MORTALITY_MARGIN`.
pub const MORTALITY_MARGIN: f64 = 2.0;
pub const SEARCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ProliferationSeries {
    times: Vec<f64>,
    counts: Vec<f64>,
    initial: f64,
}

impl ProliferationSeries {
    /// Rescaled counts `u_k` at days `t_k`; the first count is the initial value.
    pub fn new(times: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let initial = *counts.first().ok_or(Error::InvalidSeries("empty series"))?;
        Self::with_initial(times, counts, initial)
    }

    pub fn with_initial(times: Vec<f64>, counts: Vec<f64>, initial: f64) -> Result<Self> {
        if times.len() != counts.len() {
            return Err(Error::InvalidSeries("times and counts differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::InvalidSeries("at least two samples are needed"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times[0].is_finite() {
            return Err(Error::InvalidSeries("times must increase strictly"));
        }
        if counts.iter().chain([&initial]).any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidSeries("counts must be positive"));
        }
        Ok(Self { times, counts, initial })
    }

    /// Divides raw cell counts by `scale`.
    pub fn from_raw(times: Vec<f64>, raw: &[f64], scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter { name: "scale", value: scale });
        }
        Self::new(times, raw.iter().map(|c| c / scale).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_count(&self) -> f64 {
        self.counts.iter().fold(0.0, |m: f64, &c| m.max(c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub b: f64,
    pub a: f64,
    pub delta: f64,
    pub rss: f64,
}

/// Solution of `u' = u(b - δ - ã u)`, `u(0) = u0`.
pub fn logistic_solution(b: f64, a: f64, delta: f64, u0: f64, t: f64) -> f64 {
    let r = b - delta;
    let integral = if r == 0.0 { t } else { libm::expm1(r * t) / r };
    u0 * libm::exp(r * t) / (1.0 + a * u0 * integral)
}

/// Samples the closed-form solution at `times`, measured from `times[0]`.
pub fn synthetic_series(b: f64, a: f64, delta: f64, u0: f64, times: &[f64]) -> Result<ProliferationSeries> {
    let start = times.first().copied().unwrap_or(0.0);
    let counts = times.iter().map(|&t| logistic_solution(b, a, delta, u0, t - start)).collect();
    ProliferationSeries::with_initial(times.to_vec(), counts, u0)
}

/// `Σ (ln u(t_k) - ln u_k)²`.
pub fn log_rss(series: &ProliferationSeries, b: f64, a: f64, delta: f64) -> f64 {
    let start = series.times[0];
    series
        .times
        .iter()
        .zip(&series.counts)
        .map(|(&t, &c)| {
            let r = libm::log(logistic_solution(b, a, delta, series.initial, t - start)) - libm::log(c);
            r * r
        })
        .sum()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimum of `f` on `[lo, hi]`, refined until the bracket is
/// narrower than `tol`. Returns the abscissa and the value there.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimises over `[lo, hi]` and checks that the minimum is not worse than
/// either end. A minimum at `lo` is accepted only when `allow_lower` holds.
fn bracketed_minimum(f: impl Fn(f64) -> f64, lo: f64, hi: f64, allow_lower: bool) -> Result<(f64, f64)> {
    let (x, fx) = golden_section(&f, lo, hi, SEARCH_TOL);
    let edge = 10.0 * SEARCH_TOL;
    if x - lo <= edge {
        let f_lo = f(lo);
        if allow_lower && f_lo <= fx {
            return Ok((lo, f_lo));
        }
        return Err(Error::NoInteriorMinimum { lo, hi });
    }
    if hi - x <= edge || fx > f(lo) || fx > f(hi) {
        return Err(Error::NoInteriorMinimum { lo, hi });
    }
    Ok((x, fx))
}

/// Growth rate with the saturation pinned, so `ã = b / K̃` and `δ = 0`.
pub fn fit_growth(series: &ProliferationSeries, saturation: f64) -> Result<FitResult> {
    if !(saturation > series.max_count()) {
        return Err(Error::InvalidParameter { name: "saturation", value: saturation });
    }
    let objective = |b: f64| log_rss(series, b, b / saturation, 0.0);
    let (b, rss) = bracketed_minimum(objective, GROWTH_BRACKET.0, GROWTH_BRACKET.1, false)?;
    Ok(FitResult { b, a: b / saturation, delta: 0.0, rss })
}

/// Extra mortality `δ ≥ 0` with `b` and `ã` fixed.
pub fn fit_mortality(series: &ProliferationSeries, b: f64, a: f64) -> Result<FitResult> {
    if !(b > 0.0) {
        return Err(Error::InvalidParameter { name: "b", value: b });
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter { name: "a", value: a });
    }
    let objective = |delta: f64| log_rss(series, b, a, delta);
    let (delta, rss) = bracketed_minimum(objective, 0.0, b + MORTALITY_MARGIN, true)?;
    Ok(FitResult { b, a, delta: delta.max(0.0), rss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use proptest::prelude::*;

    fn sample_times() -> Vec<f64> {
        (0..=12).map(|k| 0.5 * k as f64).collect()
    }

    fn rk4(b: f64, a: f64, delta: f64, u0: f64, t: f64, dt: f64) -> f64 {
        let f = |u: f64| u * (b - delta - a * u);
        let n = libm::round(t / dt) as usize;
        let mut u = u0;
        for _ in 0..n {
            let k1 = f(u);
            let k2 = f(u + 0.5 * dt * k1);
            let k3 = f(u + 0.5 * dt * k2);
            let k4 = f(u + dt * k3);
            u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        u
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(logistic_solution(0.642, 0.005, 0.0, 1.7, 0.0), 1.7);
        let k = (0.642 - 0.1) / 0.005;
        assert!((logistic_solution(0.642, 0.005, 0.1, 1.0, 400.0) - k).abs() < 1e-9 * k);
        assert!((logistic_solution(0.5, 0.2, 0.5, 2.0, 3.0) - 2.0 / (1.0 + 0.2 * 2.0 * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_rk4() {
        let exact = logistic_solution(0.6420, 0.0050, 0.0, 1.0, 6.0);
        assert!((exact - rk4(0.6420, 0.0050, 0.0, 1.0, 6.0, 1e-4)).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn closed_form_matches_rk4_sweep(
            b in 0.05f64..1.5, a in 0.001f64..0.05, delta in 0.0f64..2.0, u0 in 0.2f64..5.0,
        ) {
            let exact = logistic_solution(b, a, delta, u0, 6.0);
            prop_assert!((exact - rk4(b, a, delta, u0, 6.0, 1e-3)).abs() < 1e-8 * exact.max(1.0));
        }
    }

    #[test]
    fn noiseless_growth_recovery() {
        for b in [0.6420, 0.6359] {
            let series = synthetic_series(b, b / DEFAULT_SATURATION, 0.0, 1.0, &sample_times()).unwrap();
            let fit = fit_growth(&series, DEFAULT_SATURATION).unwrap();
            assert!((fit.b - b).abs() < 1e-6, "{}", fit.b);
            assert!((fit.a - b / DEFAULT_SATURATION).abs() < 1e-8);
        }
    }

    #[test]
    fn reported_competition_follows_from_saturation() {
        assert!((libm::round(0.6420 / DEFAULT_SATURATION * 1e4) - 50.0).abs() < 0.5);
        assert!((libm::round(0.6359 / DEFAULT_SATURATION * 1e4) - 49.0).abs() < 0.5);
    }

    #[test]
    fn growth_fit_scale_equivariance() {
        let b = 0.6420;
        let series = synthetic_series(b, b / DEFAULT_SATURATION, 0.0, 1.0, &sample_times()).unwrap();
        let doubled = ProliferationSeries::with_initial(
            series.times().to_vec(),
            series.counts().iter().map(|c| 2.0 * c).collect(),
            2.0,
        )
        .unwrap();
        let one = fit_growth(&series, DEFAULT_SATURATION).unwrap();
        let two = fit_growth(&doubled, 2.0 * DEFAULT_SATURATION).unwrap();
        assert!((one.b - two.b).abs() < 1e-9);
    }

    #[test]
    fn noiseless_mortality_recovery() {
        let (b, a) = (0.6420, 0.6420 / DEFAULT_SATURATION);
        for delta in [0.6619, 0.8109, 1.0118, 1.5585, 1.9545] {
            let series = synthetic_series(b, a, delta, 1.0, &sample_times()).unwrap();
            let fit = fit_mortality(&series, b, a).unwrap();
            assert!((fit.delta - delta).abs() < 1e-6, "{delta}: {}", fit.delta);
        }
    }

    #[test]
    fn untreated_series_gives_zero_mortality() {
        let (b, a) = (0.6359, 0.6359 / DEFAULT_SATURATION);
        let series = synthetic_series(b, a, 0.0, 1.0, &sample_times()).unwrap();
        assert_eq!(fit_mortality(&series, b, a).unwrap().delta, 0.0);
    }

    fn noisy(series: &ProliferationSeries, rng: &mut SimRng, level: f64) -> ProliferationSeries {
        let counts = series.counts().iter().map(|c| c * (1.0 + level * rng.normal())).collect();
        ProliferationSeries::with_initial(series.times().to_vec(), counts, series.initial()).unwrap()
    }

    #[test]
    fn noisy_round_trip_keeps_three_figures() {
        let mut rng = SimRng::new(42);
        let b = 0.6420;
        let a = b / DEFAULT_SATURATION;
        let delta = 0.6619;
        let control = noisy(&synthetic_series(b, a, 0.0, 1.0, &sample_times()).unwrap(), &mut rng, 0.01);
        let treated = noisy(&synthetic_series(b, a, delta, 1.0, &sample_times()).unwrap(), &mut rng, 0.01);
        let growth = fit_growth(&control, DEFAULT_SATURATION).unwrap();
        let mortality = fit_mortality(&treated, growth.b, growth.a).unwrap();
        assert!((growth.b / b - 1.0).abs() <= 5e-3, "{}", growth.b);
        assert!((mortality.delta / delta - 1.0).abs() <= 5e-3, "{}", mortality.delta);
    }

    #[test]
    fn objective_is_unimodal_on_synthetic_suites() {
        let b = 0.6420;
        let a = b / DEFAULT_SATURATION;
        for delta in [0.0, 0.6619, 1.9545] {
            let series = synthetic_series(b, a, delta, 1.0, &sample_times()).unwrap();
            let values: Vec<f64> = (0..=400).map(|k| log_rss(&series, b, a, k as f64 * (b + 2.0) / 400.0)).collect();
            let argmin = values.iter().enumerate().fold(0, |m, (k, v)| if *v < values[m] { k } else { m });
            assert!(values[..=argmin].windows(2).all(|w| w[1] <= w[0]));
            assert!(values[argmin..].windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ProliferationSeries::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(ProliferationSeries::new(vec![0.0, 1.0], vec![1.0, -2.0]).is_err());
        assert!(ProliferationSeries::new(vec![0.0], vec![1.0]).is_err());
        let series = synthetic_series(0.6, 0.6 / 129.0, 0.0, 1.0, &sample_times()).unwrap();
        assert!(fit_growth(&series, 1.0).is_err());
        let shrinking = synthetic_series(0.6, 0.6 / 129.0, 6.0, 1.0, &sample_times()).unwrap();
        assert!(matches!(fit_mortality(&shrinking, 0.6, 0.6 / 129.0), Err(Error::NoInteriorMinimum { .. })));
    }

    #[test]
    fn raw_counts_are_rescaled() {
        let s = ProliferationSeries::from_raw(vec![0.0, 0.5], &[1e5, 2e5], DEFAULT_COUNT_SCALE).unwrap();
        assert_eq!(s.counts(), &[1.0, 2.0]);
        assert_eq!(s.initial(), 1.0);
    }
}
