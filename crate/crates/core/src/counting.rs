//! Photon-counting layer: Poissonian coincidence counts with a flat
//! accidental background, count-ratio estimators with first-order Poisson
//! error propagation, and the fringe and Hong-Ou-Mandel scans.
//!
//! Seeds: a measurement at grid index `i` uses `derive_seed(base, i)`; inside
//! a CHSH measurement, setting `s` and outcome `o` use
//! `derive_seed(that, 4·s + o)`. See [`crate::rng`].

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::chsh::{projection_probability, AnalyzerPair, ChshAngles, CHSH_SIGNS};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, sample_poisson};
use crate::source::{Delay, DipModel};
use crate::state::DensityMatrix;

/// Coincidence rates for one analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateModel {
    /// Coincidences/s at unit projection probability.
    pub pair_rate: f64,
    /// Flat accidental coincidences/s, independent of the setting.
    pub accidental_rate: f64,
    /// Integration time per setting, s.
    pub integration_time: f64,
}

/// Reported accidental level: about 4 pairs in 10 s.
pub const DEFAULT_ACCIDENTAL_RATE: f64 = 0.4;

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pair_rate", self.pair_rate),
            ("accidental_rate", self.accidental_rate),
            ("integration_time", self.integration_time),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "[0, ∞)"));
            }
        }
        Ok(())
    }

    /// Same rates, integration time multiplied by `factor`.
    pub fn with_time_scaled(&self, factor: f64) -> Self {
        RateModel {
            integration_time: self.integration_time * factor,
            ..*self
        }
    }
}

/// One sampled coincidence count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRecord {
    pub setting: AnalyzerPair,
    pub counts: u64,
    pub integration_time: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_dev: f64,
}

/// `pair_rate · Tr(ρ Π(a)⊗Π(b)) + accidental_rate`, counts/s.
pub fn expected_rate(rho: &DensityMatrix, pair: &AnalyzerPair, model: &RateModel) -> Result<f64> {
    model.validate()?;
    Ok(model.pair_rate * projection_probability(rho, pair) + model.accidental_rate)
}

/// Poisson count with mean `rate · time`, reproducible from `seed`.
pub fn sample_counts(setting: AnalyzerPair, rate: f64, time: f64, seed: u64) -> Result<CountRecord> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::domain("rate", rate, "[0, ∞)"));
    }
    if !(time >= 0.0 && time.is_finite()) {
        return Err(Error::domain("time", time, "[0, ∞)"));
    }
    let mut rng = rng_from_seed(seed);
    Ok(CountRecord {
        setting,
        counts: sample_poisson(rate * time, &mut rng),
        integration_time: time,
        seed,
    })
}

/// Count-ratio correlator from (possibly non-integer, e.g. expected)
/// counts. With `A = n₊₊ + n₋₋`, `B = n₊₋ + n₋₊`, `N = A + B` and
/// `Var(n) = n`, the propagated variance is `4AB/N³`.
pub fn correlation_from_counts(n_pp: f64, n_mm: f64, n_pm: f64, n_mp: f64) -> Result<EstimateWithError> {
    let agree = n_pp + n_mm;
    let disagree = n_pm + n_mp;
    let total = agree + disagree;
    if !(total > 0.0) {
        return Err(Error::Estimation("no coincidences recorded for this setting".into()));
    }
    Ok(EstimateWithError {
        value: (agree - disagree) / total,
        std_dev: (4.0 * agree * disagree / total.powi(3)).sqrt(),
    })
}

/// The correlator estimate `(N₊₊ + N₋₋ − N₊₋ − N₋₊) / N`.
pub fn estimate_correlation(
    n_pp: &CountRecord,
    n_mm: &CountRecord,
    n_pm: &CountRecord,
    n_mp: &CountRecord,
) -> Result<EstimateWithError> {
    correlation_from_counts(
        n_pp.counts as f64,
        n_mm.counts as f64,
        n_pm.counts as f64,
        n_mp.counts as f64,
    )
}

/// Counts for the four outcome projections of one analyzer pair, in the
/// order of [`AnalyzerPair::outcome_settings`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettingCounts {
    pub pp: CountRecord,
    pub mm: CountRecord,
    pub pm: CountRecord,
    pub mp: CountRecord,
}

impl SettingCounts {
    pub fn total(&self) -> u64 {
        self.pp.counts + self.mm.counts + self.pm.counts + self.mp.counts
    }

    pub fn correlation(&self) -> Result<EstimateWithError> {
        estimate_correlation(&self.pp, &self.mm, &self.pm, &self.mp)
    }
}

/// Expected counts `[N₊₊, N₋₋, N₊₋, N₋₊]` for one analyzer pair.
pub fn expected_setting_counts(rho: &DensityMatrix, pair: &AnalyzerPair, model: &RateModel) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, setting) in out.iter_mut().zip(pair.outcome_settings()) {
        *slot = expected_rate(rho, &setting, model)? * model.integration_time;
    }
    Ok(out)
}

/// Samples the four outcome counts of one analyzer pair. Outcome `o` uses
/// `derive_seed(seed, o)`.
pub fn measure_setting(rho: &DensityMatrix, pair: &AnalyzerPair, model: &RateModel, seed: u64) -> Result<SettingCounts> {
    let settings = pair.outcome_settings();
    let mut records = Vec::with_capacity(4);
    for (o, setting) in settings.into_iter().enumerate() {
        let rate = expected_rate(rho, &setting, model)?;
        records.push(sample_counts(setting, rate, model.integration_time, derive_seed(seed, o as u64))?);
    }
    Ok(SettingCounts {
        pp: records[0],
        mm: records[1],
        pm: records[2],
        mp: records[3],
    })
}

const SETTING_TOLERANCE: f64 = 1e-12;

fn same_pair(x: &AnalyzerPair, y: &AnalyzerPair) -> bool {
    (x.a - y.a).abs() < SETTING_TOLERANCE && (x.b - y.b).abs() < SETTING_TOLERANCE
}

/// CHSH estimate from the sixteen counts of four settings, given in
/// [`ChshAngles::pairs`] order. Records must carry the settings implied by
/// `angles`; the variance is the sum of the four correlator variances.
pub fn estimate_s(counts: &[SettingCounts; 4], angles: &ChshAngles) -> Result<EstimateWithError> {
    let mut value = 0.0;
    let mut variance = 0.0;
    for (k, (sc, pair)) in counts.iter().zip(angles.pairs()).enumerate() {
        let expected = pair.outcome_settings();
        let got = [sc.pp.setting, sc.mm.setting, sc.pm.setting, sc.mp.setting];
        if !expected.iter().zip(&got).all(|(e, g)| same_pair(e, g)) {
            return Err(Error::SettingMismatch(format!(
                "term {k}: expected analyzers {expected:?}, got {got:?}"
            )));
        }
        let e = sc.correlation()?;
        value += CHSH_SIGNS[k] * e.value;
        variance += e.std_dev * e.std_dev;
    }
    Ok(EstimateWithError {
        value,
        std_dev: variance.sqrt(),
    })
}

/// Noiseless counterpart of [`estimate_s`] on expected counts. The value
/// carries the accidental bias; the error bar is what a single run at this
/// count scale would report.
pub fn expected_s(rho: &DensityMatrix, angles: &ChshAngles, model: &RateModel) -> Result<EstimateWithError> {
    let mut value = 0.0;
    let mut variance = 0.0;
    for (k, pair) in angles.pairs().iter().enumerate() {
        let [pp, mm, pm, mp] = expected_setting_counts(rho, pair, model)?;
        let e = correlation_from_counts(pp, mm, pm, mp)?;
        value += CHSH_SIGNS[k] * e.value;
        variance += e.std_dev * e.std_dev;
    }
    Ok(EstimateWithError {
        value,
        std_dev: variance.sqrt(),
    })
}

/// Samples all sixteen counts of a CHSH run and estimates S. Setting `s`
/// uses `derive_seed(seed, s)`.
pub fn measure_chsh(
    rho: &DensityMatrix,
    angles: &ChshAngles,
    model: &RateModel,
    seed: u64,
) -> Result<([SettingCounts; 4], EstimateWithError)> {
    let pairs = angles.pairs();
    let mut counts = Vec::with_capacity(4);
    for (s, pair) in pairs.iter().enumerate() {
        counts.push(measure_setting(rho, pair, model, derive_seed(seed, s as u64))?);
    }
    let counts: [SettingCounts; 4] = counts.try_into().expect("four settings");
    let estimate = estimate_s(&counts, angles)?;
    Ok((counts, estimate))
}

/// `(max − min)/(max + min)`.
pub fn visibility(curve: &[f64]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Estimation("visibility of an empty curve".into()));
    }
    let max = curve.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max + min > 0.0) {
        return Err(Error::domain("max + min", max + min, "(0, ∞)"));
    }
    Ok((max - min) / (max + min))
}

/// Analyzer pair for a fringe point: polarization `cos β₁|H⟩ + sin β₁|V⟩`
/// and OAM `cos β₂|m=+1⟩ + sin β₂|m=−1⟩`, which is `oam_projector(π/2 − β₂)`.
pub fn fringe_setting(beta1: f64, beta2: f64) -> AnalyzerPair {
    AnalyzerPair::new(beta1, FRAC_PI_2 - beta2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringePoint {
    pub beta2: f64,
    /// `Tr(ρ Π⊗Π)` at this setting.
    pub probability: f64,
    pub expected_counts: f64,
    /// Sampled counts, or `expected_counts` in noiseless mode.
    pub counts: f64,
    /// `counts` divided by the curve maximum.
    pub normalized: f64,
}

/// Coincidences versus the OAM analyzer angle β₂ at fixed polarization
/// angle β₁. `seed = None` gives the noiseless curve; point `i` otherwise
/// uses `derive_seed(seed, i)`.
pub fn fringe_scan(
    rho: &DensityMatrix,
    beta1: f64,
    beta2_grid: &[f64],
    model: &RateModel,
    seed: Option<u64>,
) -> Result<Vec<FringePoint>> {
    model.validate()?;
    let mut points = Vec::with_capacity(beta2_grid.len());
    for (i, &beta2) in beta2_grid.iter().enumerate() {
        let setting = fringe_setting(beta1, beta2);
        let probability = projection_probability(rho, &setting);
        let rate = expected_rate(rho, &setting, model)?;
        let expected_counts = rate * model.integration_time;
        let counts = match seed {
            None => expected_counts,
            Some(base) => {
                sample_counts(setting, rate, model.integration_time, derive_seed(base, i as u64))?.counts as f64
            }
        };
        points.push(FringePoint {
            beta2,
            probability,
            expected_counts,
            counts,
            normalized: 0.0,
        });
    }
    let max = points.iter().map(|p| p.counts).fold(0.0, f64::max);
    if max > 0.0 {
        for p in &mut points {
            p.normalized = p.counts / max;
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomPoint {
    pub tau_fs: f64,
    pub epsilon: f64,
    pub expected_counts: f64,
    /// Sampled counts, or `expected_counts` in noiseless mode.
    pub counts: f64,
}

/// Hong-Ou-Mandel coincidences: mean
/// `(pair_rate · (1 − V_hom · ε(τ)) + accidental_rate) · time`.
pub fn hom_scan(
    tau_grid: &[f64],
    dip: &DipModel,
    model: &RateModel,
    hom_visibility: f64,
    seed: Option<u64>,
) -> Result<Vec<HomPoint>> {
    model.validate()?;
    dip.validate()?;
    crate::error::check_unit_interval("hom_visibility", hom_visibility)?;
    let mut points = Vec::with_capacity(tau_grid.len());
    for (i, &tau) in tau_grid.iter().enumerate() {
        let epsilon = dip.epsilon(Delay(tau));
        let rate = model.pair_rate * (1.0 - hom_visibility * epsilon) + model.accidental_rate;
        let expected_counts = rate * model.integration_time;
        let counts = match seed {
            None => expected_counts,
            Some(base) => {
                let setting = AnalyzerPair::new(0.0, 0.0);
                sample_counts(setting, rate, model.integration_time, derive_seed(base, i as u64))?.counts as f64
            }
        };
        points.push(HomPoint {
            tau_fs: tau,
            epsilon,
            expected_counts,
            counts,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chsh::TSIRELSON;
    use crate::state::{apply_visibility, bell_state, mixed_bell_state, BellKind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    fn rates(pair_rate: f64, accidental_rate: f64, integration_time: f64) -> RateModel {
        RateModel {
            pair_rate,
            accidental_rate,
            integration_time,
        }
    }

    #[test]
    fn expected_rate_examples() {
        let psi_minus = bell_state(BellKind::PsiMinus).projector();
        // Peak of the Ψ⁻ joint probability is 1/2 (|H,−1⟩ weight).
        let r = expected_rate(&psi_minus, &AnalyzerPair::new(0.0, 0.0), &rates(100.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r, 50.0, epsilon = 1e-12);
        // Null: |H⟩ with |m=+1⟩.
        let r = expected_rate(&psi_minus, &AnalyzerPair::new(0.0, FRAC_PI_2), &rates(100.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-12);
        let r = expected_rate(&psi_minus, &AnalyzerPair::new(0.3, 1.1), &rates(0.0, DEFAULT_ACCIDENTAL_RATE, 1.0)).unwrap();
        assert_abs_diff_eq!(r, 0.4, epsilon = 1e-15);
        assert!(expected_rate(&psi_minus, &AnalyzerPair::new(0.0, 0.0), &rates(-1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn sample_counts_basics() {
        let s = AnalyzerPair::new(0.0, 0.0);
        assert_eq!(sample_counts(s, 0.0, 10.0, 3).unwrap().counts, 0);
        let a = sample_counts(s, 100.0, 10.0, 77).unwrap();
        let b = sample_counts(s, 100.0, 10.0, 77).unwrap();
        assert_eq!(a, b);
        assert!(sample_counts(s, -1.0, 1.0, 0).is_err());
        assert!(sample_counts(s, 1.0, -1.0, 0).is_err());
    }

    fn record(counts: u64) -> CountRecord {
        CountRecord {
            setting: AnalyzerPair::new(0.0, 0.0),
            counts,
            integration_time: 1.0,
            seed: 0,
        }
    }

    #[test]
    fn correlation_estimator_examples() {
        let e = estimate_correlation(&record(100), &record(100), &record(0), &record(0)).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.std_dev, 0.0);

        let e = estimate_correlation(&record(50), &record(50), &record(50), &record(50)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_abs_diff_eq!(e.std_dev, 1.0 / 200f64.sqrt(), epsilon = 1e-15);

        assert!(matches!(
            estimate_correlation(&record(0), &record(0), &record(0), &record(0)),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn propagated_error_matches_finite_differences() {
        // Var(E) = Σ (∂E/∂nᵢ)² nᵢ, derivatives by central differences.
        let n = [130.0, 95.0, 40.0, 22.0];
        let f = |m: [f64; 4]| correlation_from_counts(m[0], m[1], m[2], m[3]).unwrap().value;
        let mut var = 0.0;
        for i in 0..4 {
            let h = 1e-4;
            let (mut up, mut dn) = (n, n);
            up[i] += h;
            dn[i] -= h;
            let d = (f(up) - f(dn)) / (2.0 * h);
            var += d * d * n[i];
        }
        let e = correlation_from_counts(n[0], n[1], n[2], n[3]).unwrap();
        assert_abs_diff_eq!(e.std_dev, var.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn monte_carlo_correlation_is_consistent() {
        let rho = mixed_bell_state(1.0, BellKind::PsiPlus).unwrap();
        let sc = measure_setting(&rho, &AnalyzerPair::new(0.0, 0.0), &rates(10.0, 0.0, 10.0), 4).unwrap();
        let e = sc.correlation().unwrap();
        // Perfect correlation: no disagreeing counts at all.
        assert_eq!(e.value, 1.0);
        assert!(sc.total() > 0);
    }

    #[test]
    fn noiseless_s_hits_tsirelson() {
        let rho = mixed_bell_state(1.0, BellKind::PsiPlus).unwrap();
        let s = expected_s(&rho, &ChshAngles::standard(FRAC_PI_8), &rates(150.0, 0.0, 10.0)).unwrap();
        assert_abs_diff_eq!(s.value, TSIRELSON, epsilon = 1e-12);
    }

    #[test]
    fn estimate_s_checks_settings() {
        let rho = mixed_bell_state(1.0, BellKind::PsiPlus).unwrap();
        let angles = ChshAngles::standard(FRAC_PI_8);
        let (mut counts, est) = measure_chsh(&rho, &angles, &rates(150.0, 0.4, 10.0), 99).unwrap();
        assert!(est.std_dev > 0.0);
        counts.swap(0, 1);
        assert!(matches!(estimate_s(&counts, &angles), Err(Error::SettingMismatch(_))));
    }

    #[test]
    fn measure_chsh_is_seed_deterministic() {
        let rho = mixed_bell_state(0.8, BellKind::PsiPlus).unwrap();
        let angles = ChshAngles::standard(FRAC_PI_8);
        let m = rates(150.0, 0.4, 10.0);
        let a = measure_chsh(&rho, &angles, &m, 5).unwrap();
        let b = measure_chsh(&rho, &angles, &m, 5).unwrap();
        let c = measure_chsh(&rho, &angles, &m, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(visibility(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!(visibility(&[0.0, 0.0]).is_err());
        assert!(visibility(&[]).is_err());
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 2.0 * PI * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn psi_minus_fringe_is_sine_squared() {
        let rho = bell_state(BellKind::PsiMinus).projector();
        for beta1 in [0.0, FRAC_PI_4] {
            let scan = fringe_scan(&rho, beta1, &grid(73), &rates(100.0, 0.0, 1.0), None).unwrap();
            for p in &scan {
                assert_abs_diff_eq!(p.normalized, (beta1 - p.beta2).sin().powi(2), epsilon = 1e-10);
                assert_abs_diff_eq!(p.probability, 0.5 * (beta1 - p.beta2).sin().powi(2), epsilon = 1e-12);
            }
            let curve: Vec<f64> = scan.iter().map(|p| p.counts).collect();
            assert_abs_diff_eq!(visibility(&curve).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn phi_plus_fringe_peaks_at_beta1() {
        let rho = bell_state(BellKind::PhiPlus).projector();
        let scan = fringe_scan(&rho, FRAC_PI_4, &grid(73), &rates(100.0, 0.0, 1.0), None).unwrap();
        for p in &scan {
            assert_abs_diff_eq!(p.normalized, (FRAC_PI_4 - p.beta2).cos().powi(2), epsilon = 1e-10);
        }
        let peak = scan.iter().max_by(|x, y| x.counts.total_cmp(&y.counts)).unwrap();
        assert_abs_diff_eq!(peak.beta2.rem_euclid(PI), FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn depolarized_fringe_visibility() {
        let rho = apply_visibility(&bell_state(BellKind::PsiMinus).projector(), 0.92).unwrap();
        let scan = fringe_scan(&rho, 0.0, &grid(73), &rates(100.0, 0.0, 1.0), None).unwrap();
        let curve: Vec<f64> = scan.iter().map(|p| p.counts).collect();
        assert_abs_diff_eq!(visibility(&curve).unwrap(), 0.92, epsilon = 1e-10);
    }

    #[test]
    fn sampled_fringe_is_reproducible() {
        let rho = bell_state(BellKind::PsiMinus).projector();
        let m = rates(100.0, 0.4, 10.0);
        let a = fringe_scan(&rho, 0.0, &grid(37), &m, Some(8)).unwrap();
        let b = fringe_scan(&rho, 0.0, &grid(37), &m, Some(8)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.counts.fract() == 0.0));
    }

    #[test]
    fn hom_examples() {
        let dip = DipModel::measured_calibration();
        let m = rates(50.0, 0.0, 10.0);
        let pts = hom_scan(&[0.0, 400.0, 1e5], &dip, &m, 1.0, None).unwrap();
        assert_eq!(pts[0].counts, 0.0);
        assert_abs_diff_eq!(pts[1].counts, 500.0 * 0.68, epsilon = 1e-9);
        assert_abs_diff_eq!(pts[2].counts, 500.0, epsilon = 1e-12);
        assert!(hom_scan(&[0.0], &dip, &m, 1.5, None).is_err());

        let sampled = hom_scan(&[-300.0, 0.0, 300.0], &dip, &rates(50.0, 0.4, 10.0), 0.95, Some(1)).unwrap();
        assert_eq!(sampled, hom_scan(&[-300.0, 0.0, 300.0], &dip, &rates(50.0, 0.4, 10.0), 0.95, Some(1)).unwrap());
    }
}
