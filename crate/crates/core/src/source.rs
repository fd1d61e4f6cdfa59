//! Source-side bookkeeping: group-velocity mismatch, delay-line
//! compensation, and the map from temporal delay τ to the mixing parameter ε.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{mixed_bell_state, BellKind, DensityMatrix};

/// Ordinary and extraordinary group velocities of a birefringent material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialDispersion {
    /// m/s
    pub vg_ordinary: f64,
    /// m/s
    pub vg_extraordinary: f64,
}

/// β-barium borate at 810 nm.
pub const BBO_810NM: MaterialDispersion = MaterialDispersion {
    vg_ordinary: 1.7816e8,
    vg_extraordinary: 1.8439e8,
};

/// Crystalline quartz at 810 nm.
pub const QUARTZ_810NM: MaterialDispersion = MaterialDispersion {
    vg_ordinary: 1.9305e8,
    vg_extraordinary: 1.9187e8,
};

/// Length of the BBO crystal, mm.
pub const BBO_LENGTH_MM: f64 = 2.0;

/// s/m → fs/mm
const S_PER_M_TO_FS_PER_MM: f64 = 1e12;

/// Group-velocity mismatch `1/v_o − 1/v_e` in fs/mm.
pub fn gvm(material: &MaterialDispersion) -> Result<f64> {
    for (name, v) in [
        ("vg_ordinary", material.vg_ordinary),
        ("vg_extraordinary", material.vg_extraordinary),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(name, v, "(0, ∞)"));
        }
    }
    Ok((1.0 / material.vg_ordinary - 1.0 / material.vg_extraordinary) * S_PER_M_TO_FS_PER_MM)
}

/// Delay the delay line must supply to re-center the two photons born at a
/// uniformly distributed depth of a crystal of length `length_mm`: `D·L/2`.
pub fn compensation_delay(gvm_fs_per_mm: f64, length_mm: f64) -> Result<f64> {
    if !(length_mm >= 0.0) {
        return Err(Error::domain("length_mm", length_mm, "[0, ∞)"));
    }
    Ok(gvm_fs_per_mm * length_mm / 2.0)
}

/// Length of a compensating material with mismatch `gvm_fs_per_mm` that
/// produces `delay_fs` of relative delay.
pub fn compensating_length(delay_fs: f64, gvm_fs_per_mm: f64) -> Result<f64> {
    if gvm_fs_per_mm == 0.0 || !gvm_fs_per_mm.is_finite() {
        return Err(Error::domain("gvm_fs_per_mm", gvm_fs_per_mm, "nonzero, finite"));
    }
    Ok((delay_fs / gvm_fs_per_mm).abs())
}

/// Signed delay in fs, measured from the compensation point.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Delay(pub f64);

impl Delay {
    pub fn fs(tau: f64) -> Self {
        Delay(tau)
    }
}

/// Calibration anchors (delay fs, ε) of the measured coherence dip.
pub const CALIBRATION_DIP_POINTS: [(f64, f64); 4] = [(0.0, 1.0), (200.0, 0.8), (400.0, 0.32), (600.0, 0.03)];

/// Map from delay to ε. All variants are even in τ, non-increasing in |τ|,
/// and clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DipModel {
    /// `exp(−τ²/2σ²)`
    Gaussian { sigma_fs: f64 },
    /// `max(0, 1 − |τ|/w)`
    Triangular { half_width_fs: f64 },
    /// Piecewise-linear through `(|τ|, ε)` points sorted by delay. Past the
    /// last point the final segment is extended (and clamped at 0).
    Interpolated { points: Vec<(f64, f64)> },
}

impl Default for DipModel {
    fn default() -> Self {
        DipModel::measured_calibration()
    }
}

impl DipModel {
    /// Interpolation through the four calibration anchors.
    pub fn measured_calibration() -> Self {
        DipModel::Interpolated {
            points: CALIBRATION_DIP_POINTS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DipModel::Gaussian { sigma_fs } => positive("sigma_fs", *sigma_fs),
            DipModel::Triangular { half_width_fs } => positive("half_width_fs", *half_width_fs),
            DipModel::Interpolated { points } => {
                if points.is_empty() {
                    return Err(Error::DipModel("interpolated model needs at least one point".into()));
                }
                for &(tau, eps) in points {
                    if !(tau >= 0.0 && tau.is_finite()) {
                        return Err(Error::DipModel(format!("delay {tau} must be finite and ≥ 0")));
                    }
                    if !(0.0..=1.0).contains(&eps) {
                        return Err(Error::DipModel(format!("epsilon {eps} outside [0, 1]")));
                    }
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::DipModel("delays must be strictly increasing".into()));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::DipModel("epsilon must be non-increasing in delay".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// ε at delay `tau`.
    pub fn epsilon(&self, tau: Delay) -> f64 {
        let t = tau.0.abs();
        let eps = match self {
            DipModel::Gaussian { sigma_fs } => (-t * t / (2.0 * sigma_fs * sigma_fs)).exp(),
            DipModel::Triangular { half_width_fs } => 1.0 - t / half_width_fs,
            DipModel::Interpolated { points } => interpolate(points, t),
        };
        if eps.is_nan() {
            0.0
        } else {
            eps.clamp(0.0, 1.0)
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DipModel(format!("{name} = {v} must be positive and finite")))
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> f64 {
    match points {
        [] => 0.0,
        [(_, only)] => *only,
        _ => {
            if t <= points[0].0 {
                return points[0].1;
            }
            // Segment containing t, or the last one for extrapolation.
            let k = points
                .windows(2)
                .position(|w| t <= w[1].0)
                .unwrap_or(points.len() - 2);
            let (t0, e0) = points[k];
            let (t1, e1) = points[k + 1];
            e0 + (e1 - e0) * (t - t0) / (t1 - t0)
        }
    }
}

/// `epsilon_of_delay` as a free function.
pub fn epsilon_of_delay(tau: Delay, model: &DipModel) -> f64 {
    model.epsilon(tau)
}

/// Least-squares Gaussian fit to calibration points.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub model: DipModel,
    pub sigma_fs: f64,
    /// `√Σ rᵢ²` at the optimum.
    pub residual_norm: f64,
}

fn gaussian_sse(points: &[(f64, f64)], sigma: f64) -> f64 {
    points
        .iter()
        .map(|&(t, e)| {
            let r = (-t * t / (2.0 * sigma * sigma)).exp() - e;
            r * r
        })
        .sum()
}

/// Upper end of the σ search range, fs. Far beyond any dip seen here.
const SIGMA_SEARCH_MAX_FS: f64 = 1.0e5;

/// Fits `exp(−τ²/2σ²)` to `points` by minimizing the sum of squared
/// residuals over σ: a log-spaced scan brackets the optimum, golden-section
/// search polishes it.
pub fn calibrate_gaussian(points: &[(f64, f64)]) -> Result<GaussianFit> {
    if points.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(t, e)| !t.is_finite() || !e.is_finite()) {
        return Err(Error::Fit("points must be finite".into()));
    }
    let mut delays: Vec<f64> = points.iter().map(|(t, _)| t.abs()).collect();
    delays.sort_by(f64::total_cmp);
    if delays.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("delays must be distinct".into()));
    }
    if delays.iter().all(|&t| t == 0.0) || delays.last() == Some(&0.0) {
        return Err(Error::Fit("at least one nonzero delay is required".into()));
    }

    let n_scan = 2000;
    let lo = 1e-3_f64.ln();
    let hi = SIGMA_SEARCH_MAX_FS.ln();
    let grid: Vec<f64> = (0..=n_scan)
        .map(|i| (lo + (hi - lo) * i as f64 / n_scan as f64).exp())
        .collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| gaussian_sse(points, grid[i]).total_cmp(&gaussian_sse(points, grid[j])))
        .expect("non-empty grid");
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = gaussian_sse(points, x1);
    let mut f2 = gaussian_sse(points, x2);
    while (b - a) > 1e-10 * (1.0 + a.abs()) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = gaussian_sse(points, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = gaussian_sse(points, x2);
        }
    }
    let sigma = 0.5 * (a + b);
    Ok(GaussianFit {
        model: DipModel::Gaussian { sigma_fs: sigma },
        sigma_fs: sigma,
        residual_norm: gaussian_sse(points, sigma).sqrt(),
    })
}

/// The post-selected single-photon state at delay `tau`.
pub fn postselected_state(tau: Delay, model: &DipModel, kind: BellKind) -> Result<DensityMatrix> {
    model.validate()?;
    mixed_bell_state(model.epsilon(tau), kind)
}
