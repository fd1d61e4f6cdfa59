//! Named scenarios that turn an [`ExperimentConfig`] into a CSV table plus
//! run metadata.
//!
//! Every table carries noiseless theory columns next to the sampled ones.
//! Column order per scenario:
//!
//! - `hom-dip`: `tau_fs, epsilon, counts_theory, counts_sampled`
//! - `fringes`: `bell_kind, beta1_deg, beta2_deg, probability,
//!   normalized_theory, counts_sampled, normalized_sampled`
//! - `chsh-theta`: `tau_fs, epsilon, theta_deg, s_theory, s_sampled, s_std`
//! - `chsh-vs-delay`: `tau_fs, epsilon, s_theory, s_horodecki, s_sampled, s_std`
//! - `headline`: `run, seed, s_sampled, s_std`
//!
//! In noiseless mode the sampled columns hold expected values. CSV bodies
//! depend only on the config, seed and mode; wall-clock times live in the
//! metadata file alone.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::chsh::{chsh_s, horodecki_smax, ChshAngles};
use crate::config::{linspace, ExperimentConfig};
use crate::counting::{
    expected_s, fringe_scan, hom_scan, measure_chsh, visibility, EstimateWithError,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RNG_NAME};
use crate::source::{postselected_state, Delay};
use crate::state::{apply_visibility, BellKind, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    HomDip,
    Fringes,
    ChshTheta,
    ChshVsDelay,
    Headline,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::HomDip,
        Scenario::Fringes,
        Scenario::ChshTheta,
        Scenario::ChshVsDelay,
        Scenario::Headline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::HomDip => "hom-dip",
            Scenario::Fringes => "fringes",
            Scenario::ChshTheta => "chsh-theta",
            Scenario::ChshVsDelay => "chsh-vs-delay",
            Scenario::Headline => "headline",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Replace sampled counts by their expectation values.
    pub noiseless: bool,
    /// Overrides `config.seed`.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // Shortest representation that round-trips.
            Cell::Num(v) => write!(f, "{v:?}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    fn new(header: &[&'static str]) -> Self {
        CsvTable {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Numeric values of a column; text cells are skipped.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .filter_map(|r| match &r[idx] {
                    Cell::Num(v) => Some(*v),
                    Cell::Int(v) => Some(*v as f64),
                    Cell::Text(_) => None,
                })
                .collect(),
        )
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything needed to re-run a scenario bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub scenario: Scenario,
    pub config_hash: String,
    pub seed: u64,
    pub noiseless: bool,
    pub crate_version: &'static str,
    pub rng: &'static str,
    pub rows: usize,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub summary: BTreeMap<String, f64>,
    /// The effective config (seed override applied), as TOML.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub table: CsvTable,
    pub summary: BTreeMap<String, f64>,
    pub metadata: RunMetadata,
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn state_at(config: &ExperimentConfig, tau_fs: f64, kind: BellKind) -> Result<DensityMatrix> {
    let rho = postselected_state(Delay(tau_fs), &config.dip_model, kind)?;
    apply_visibility(&rho, config.visibility)
}

/// Runs `scenario` on `config`.
pub fn run_scenario(scenario: Scenario, config: &ExperimentConfig, opts: RunOptions) -> Result<ScenarioOutput> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let issues = config.range_issues();
    if !issues.is_empty() {
        return Err(crate::config::ConfigError {
            report: crate::config::ValidationReport { ok: false, issues },
        }
        .into());
    }

    let started = unix_ms();
    let (table, summary) = match scenario {
        Scenario::HomDip => hom_dip(&config, opts)?,
        Scenario::Fringes => fringes(&config, opts)?,
        Scenario::ChshTheta => chsh_theta(&config, opts)?,
        Scenario::ChshVsDelay => chsh_vs_delay(&config, opts)?,
        Scenario::Headline => headline(&config, opts)?,
    };
    let metadata = RunMetadata {
        scenario,
        config_hash: config.hash(),
        seed: config.seed,
        noiseless: opts.noiseless,
        crate_version: env!("CARGO_PKG_VERSION"),
        rng: RNG_NAME,
        rows: table.rows.len(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        summary: summary.clone(),
        config: config.to_toml_string(),
    };
    Ok(ScenarioOutput {
        table,
        summary,
        metadata,
    })
}

/// Writes `<dir>/<scenario>.csv` and `<dir>/<scenario>.meta.json`.
pub fn write_output(output: &ScenarioOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let name = output.metadata.scenario.name();
    let csv_path = dir.join(format!("{name}.csv"));
    let meta_path = dir.join(format!("{name}.meta.json"));
    std::fs::write(&csv_path, output.table.to_csv_string()).map_err(io(&csv_path))?;
    let meta = serde_json::to_string_pretty(&output.metadata).expect("metadata serializes");
    std::fs::write(&meta_path, meta).map_err(io(&meta_path))?;
    Ok((csv_path, meta_path))
}

type Built = (CsvTable, BTreeMap<String, f64>);

fn hom_dip(config: &ExperimentConfig, opts: RunOptions) -> Result<Built> {
    let g = &config.hom_dip;
    let taus = linspace(g.tau_min_fs, g.tau_max_fs, g.steps);
    let seed = (!opts.noiseless).then_some(config.seed);
    let theory = hom_scan(&taus, &config.dip_model, &config.rate_model, g.hom_visibility, None)?;
    let sampled = hom_scan(&taus, &config.dip_model, &config.rate_model, g.hom_visibility, seed)?;

    let mut table = CsvTable::new(&["tau_fs", "epsilon", "counts_theory", "counts_sampled"]);
    for (t, s) in theory.iter().zip(&sampled) {
        let sampled_cell = if opts.noiseless {
            Cell::Num(s.counts)
        } else {
            Cell::Int(s.counts as u64)
        };
        table.push(vec![t.tau_fs.into(), t.epsilon.into(), t.expected_counts.into(), sampled_cell]);
    }
    let counts: Vec<f64> = theory.iter().map(|p| p.expected_counts).collect();
    let mut summary = BTreeMap::new();
    if let Some(min) = theory.iter().min_by(|a, b| a.expected_counts.total_cmp(&b.expected_counts)) {
        summary.insert("min_counts_theory".into(), min.expected_counts);
        summary.insert("tau_at_min_fs".into(), min.tau_fs);
    }
    if let Ok(v) = visibility(&counts) {
        summary.insert("dip_visibility_theory".into(), v);
    }
    Ok((table, summary))
}

fn fringes(config: &ExperimentConfig, opts: RunOptions) -> Result<Built> {
    let g = &config.fringes;
    let beta2: Vec<f64> = linspace(g.beta2_min_deg, g.beta2_max_deg, g.steps)
        .into_iter()
        .map(f64::to_radians)
        .collect();
    let mut table = CsvTable::new(&[
        "bell_kind",
        "beta1_deg",
        "beta2_deg",
        "probability",
        "normalized_theory",
        "counts_sampled",
        "normalized_sampled",
    ]);
    let mut summary = BTreeMap::new();
    let mut block = 0u64;
    for kind in config.fringe_kinds() {
        let rho = state_at(config, g.delay_fs, kind)?;
        for &beta1_deg in &g.beta1_deg {
            let beta1 = beta1_deg.to_radians();
            let seed = (!opts.noiseless).then(|| derive_seed(config.seed, block));
            block += 1;
            let theory = fringe_scan(&rho, beta1, &beta2, &config.rate_model, None)?;
            let sampled = fringe_scan(&rho, beta1, &beta2, &config.rate_model, seed)?;
            for (t, s) in theory.iter().zip(&sampled) {
                let sampled_cell = if opts.noiseless {
                    Cell::Num(s.counts)
                } else {
                    Cell::Int(s.counts as u64)
                };
                table.push(vec![
                    Cell::Text(kind.to_string()),
                    beta1_deg.into(),
                    t.beta2.to_degrees().into(),
                    t.probability.into(),
                    t.normalized.into(),
                    sampled_cell,
                    s.normalized.into(),
                ]);
            }
            let probs: Vec<f64> = theory.iter().map(|p| p.probability).collect();
            if let Ok(v) = visibility(&probs) {
                summary.insert(format!("visibility_theory.{kind}.beta1={beta1_deg}"), v);
            }
            let counts: Vec<f64> = sampled.iter().map(|p| p.counts).collect();
            if let Ok(v) = visibility(&counts) {
                summary.insert(format!("visibility_sampled.{kind}.beta1={beta1_deg}"), v);
            }
        }
    }
    Ok((table, summary))
}

fn sampled_s(
    rho: &DensityMatrix,
    angles: &ChshAngles,
    config: &ExperimentConfig,
    opts: RunOptions,
    seed: u64,
) -> Result<EstimateWithError> {
    if opts.noiseless {
        expected_s(rho, angles, &config.rate_model)
    } else {
        Ok(measure_chsh(rho, angles, &config.rate_model, seed)?.1)
    }
}

fn chsh_theta(config: &ExperimentConfig, opts: RunOptions) -> Result<Built> {
    let g = &config.chsh_theta;
    let thetas_deg = linspace(g.theta_min_deg, g.theta_max_deg, g.steps);
    let mut table = CsvTable::new(&["tau_fs", "epsilon", "theta_deg", "s_theory", "s_sampled", "s_std"]);
    let mut summary = BTreeMap::new();
    let mut index = 0u64;
    for &tau in &g.delays_fs {
        let epsilon = config.dip_model.epsilon(Delay(tau));
        let rho = state_at(config, tau, config.bell_kind)?;
        let mut best = f64::NEG_INFINITY;
        for &theta_deg in &thetas_deg {
            let angles = ChshAngles::standard(theta_deg.to_radians());
            let theory = chsh_s(&rho, &angles).s_value;
            best = best.max(theory);
            let est = sampled_s(&rho, &angles, config, opts, derive_seed(config.seed, index))?;
            index += 1;
            table.push(vec![
                tau.into(),
                epsilon.into(),
                theta_deg.into(),
                theory.into(),
                est.value.into(),
                est.std_dev.into(),
            ]);
        }
        summary.insert(format!("max_s_theory.tau={tau}"), best);
    }
    Ok((table, summary))
}

fn chsh_vs_delay(config: &ExperimentConfig, opts: RunOptions) -> Result<Built> {
    let g = &config.chsh_vs_delay;
    let taus = linspace(g.tau_min_fs, g.tau_max_fs, g.steps);
    let angles = ChshAngles::standard(g.theta_deg.to_radians());
    let mut table = CsvTable::new(&["tau_fs", "epsilon", "s_theory", "s_horodecki", "s_sampled", "s_std"]);
    let mut curve = Vec::with_capacity(taus.len());
    for (i, &tau) in taus.iter().enumerate() {
        let epsilon = config.dip_model.epsilon(Delay(tau));
        let rho = state_at(config, tau, config.bell_kind)?;
        let theory = chsh_s(&rho, &angles).s_value;
        let est = sampled_s(&rho, &angles, config, opts, derive_seed(config.seed, i as u64))?;
        curve.push((tau, theory));
        table.push(vec![
            tau.into(),
            epsilon.into(),
            theory.into(),
            horodecki_smax(&rho).into(),
            est.value.into(),
            est.std_dev.into(),
        ]);
    }
    let mut summary = BTreeMap::new();
    if let Some(cross) = first_crossing_below(&curve, 2.0) {
        summary.insert("violation_lost_at_fs".into(), cross);
    }
    if let Some(max) = curve.iter().map(|p| p.1).reduce(f64::max) {
        summary.insert("max_s_theory".into(), max);
    }
    Ok((table, summary))
}

/// First `τ ≥ 0` where the curve drops below `level`, linearly interpolated
/// between grid points.
pub fn first_crossing_below(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    let positive: Vec<&(f64, f64)> = curve.iter().filter(|p| p.0 >= 0.0).collect();
    positive.windows(2).find_map(|w| {
        let (t0, s0) = *w[0];
        let (t1, s1) = *w[1];
        (s0 >= level && s1 < level).then(|| t0 + (s0 - level) / (s0 - s1) * (t1 - t0))
    })
}

fn headline(config: &ExperimentConfig, opts: RunOptions) -> Result<Built> {
    let h = &config.headline;
    let rho = state_at(config, h.delay_fs, config.bell_kind)?;
    let angles = ChshAngles::standard(h.theta_deg.to_radians());
    let mut table = CsvTable::new(&["run", "seed", "s_sampled", "s_std"]);
    let mut values = Vec::with_capacity(h.runs);
    let mut reported = Vec::with_capacity(h.runs);
    for run in 0..h.runs {
        let seed = derive_seed(config.seed, run as u64);
        let est = sampled_s(&rho, &angles, config, opts, seed)?;
        values.push(est.value);
        reported.push(est.std_dev);
        table.push(vec![(run as u64).into(), seed.into(), est.value.into(), est.std_dev.into()]);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let spread = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut summary = BTreeMap::new();
    summary.insert("mean_s".into(), mean);
    summary.insert("std_s".into(), spread);
    summary.insert("mean_reported_std".into(), reported.iter().sum::<f64>() / n);
    summary.insert("s_theory".into(), chsh_s(&rho, &angles).s_value);
    summary.insert("s_expected_with_accidentals".into(), expected_s(&rho, &angles, &config.rate_model)?.value);
    Ok((table, summary))
}
