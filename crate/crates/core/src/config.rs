//! Experiment configuration (TOML) and its validation.
//!
//! Top-level keys `bell_kind`, `visibility`, `seed` and the tables
//! `[dip_model]` and `[rate_model]` are required. Per-scenario tables
//! (`[hom_dip]`, `[fringes]`, `[chsh_theta]`, `[chsh_vs_delay]`,
//! `[headline]`) are optional and fall back to the defaults below.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::counting::RateModel;
use crate::error::{Error, Result};
use crate::source::DipModel;
use crate::state::BellKind;

/// The configuration shipped as `configs/default.toml`.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../../configs/default.toml");

/// Largest seed a config file can hold.
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bell_kind: BellKind,
    /// Depolarizing visibility applied to every simulated state.
    pub visibility: f64,
    pub seed: u64,
    pub dip_model: DipModel,
    pub rate_model: RateModel,
    #[serde(default)]
    pub hom_dip: HomDipGrid,
    #[serde(default)]
    pub fringes: FringeGrid,
    #[serde(default)]
    pub chsh_theta: ChshThetaGrid,
    #[serde(default)]
    pub chsh_vs_delay: ChshDelayGrid,
    #[serde(default)]
    pub headline: HeadlineSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomDipGrid {
    pub tau_min_fs: f64,
    pub tau_max_fs: f64,
    pub steps: usize,
    pub hom_visibility: f64,
}

impl Default for HomDipGrid {
    fn default() -> Self {
        HomDipGrid {
            tau_min_fs: -1000.0,
            tau_max_fs: 1000.0,
            steps: 81,
            hom_visibility: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FringeGrid {
    /// Bell states to scan; empty means `[bell_kind]`.
    pub kinds: Vec<BellKind>,
    pub beta1_deg: Vec<f64>,
    pub beta2_min_deg: f64,
    pub beta2_max_deg: f64,
    pub steps: usize,
    pub delay_fs: f64,
}

impl Default for FringeGrid {
    fn default() -> Self {
        FringeGrid {
            kinds: Vec::new(),
            beta1_deg: vec![0.0, 45.0],
            beta2_min_deg: 0.0,
            beta2_max_deg: 360.0,
            steps: 73,
            delay_fs: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChshThetaGrid {
    pub delays_fs: Vec<f64>,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub steps: usize,
}

impl Default for ChshThetaGrid {
    fn default() -> Self {
        ChshThetaGrid {
            delays_fs: vec![0.0, 200.0, 400.0, 600.0],
            theta_min_deg: 0.0,
            theta_max_deg: 90.0,
            steps: 91,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChshDelayGrid {
    pub theta_deg: f64,
    pub tau_min_fs: f64,
    pub tau_max_fs: f64,
    pub steps: usize,
}

impl Default for ChshDelayGrid {
    fn default() -> Self {
        ChshDelayGrid {
            theta_deg: 22.5,
            tau_min_fs: -800.0,
            tau_max_fs: 800.0,
            steps: 33,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadlineSettings {
    pub theta_deg: f64,
    pub delay_fs: f64,
    pub runs: usize,
}

impl Default for HeadlineSettings {
    fn default() -> Self {
        HeadlineSettings {
            theta_deg: 22.5,
            delay_fs: 0.0,
            runs: 200,
        }
    }
}

/// `steps` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    /// Not valid TOML.
    Parse,
    /// Valid TOML, wrong shape: missing, unknown or mistyped fields.
    Structure,
    /// Well-formed but out of range.
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub kind: IssueKind,
    pub field: Option<String>,
    pub message: String,
    /// 1-based.
    pub line: Option<usize>,
    /// 1-based.
    pub column: Option<usize>,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            IssueKind::Parse => "parse error",
            IssueKind::Structure => "structure error",
            IssueKind::Range => "range error",
        };
        write!(f, "{kind}")?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at line {l}, column {c}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " in `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Machine-readable outcome of [`validate_config`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<ConfigIssue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<ConfigIssue>) -> Self {
        ValidationReport {
            ok: issues.is_empty(),
            issues,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub report: ValidationReport,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.report.issues.iter().map(ToString::to_string).collect();
        write!(f, "invalid config: {}", lines.join("; "))
    }
}

fn line_col(text: &str, span: Option<Range<usize>>) -> (Option<usize>, Option<usize>) {
    let Some(span) = span else {
        return (None, None);
    };
    let upto = &text[..span.start.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let col = upto.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (Some(line), Some(col))
}

/// Field named in a serde message such as "missing field `dip_model`".
fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

fn range_issue(field: impl Into<String>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        kind: IssueKind::Range,
        field: Some(field.into()),
        message: message.into(),
        line: None,
        column: None,
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let report_of = |issues| ConfigError {
            report: ValidationReport::from_issues(issues),
        };
        if let Err(e) = text.parse::<toml::Table>() {
            let (line, column) = line_col(text, e.span());
            return Err(report_of(vec![ConfigIssue {
                kind: IssueKind::Parse,
                field: None,
                message: e.message().to_string(),
                line,
                column,
            }]));
        }
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = line_col(text, e.span());
            report_of(vec![ConfigIssue {
                kind: IssueKind::Structure,
                field: backticked(e.message()),
                message: e.message().trim().to_string(),
                line,
                column,
            }])
        })?;
        let issues = config.range_issues();
        if issues.is_empty() {
            Ok(config)
        } else {
            Err(report_of(issues))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_toml_str(&text)?)
    }

    /// The shipped default configuration.
    pub fn shipped_default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG_TOML).expect("shipped default config is valid")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Range checks on a structurally valid config; empty when valid.
    pub fn range_issues(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut unit = |field: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                issues.push(range_issue(field, format!("{v} is outside [0, 1]")));
            }
        };
        unit("visibility", self.visibility);
        unit("hom_dip.hom_visibility", self.hom_dip.hom_visibility);
        if self.seed > MAX_SEED {
            issues.push(range_issue("seed", format!("{} exceeds {MAX_SEED} (TOML integers are signed 64-bit)", self.seed)));
        }

        if let Err(e) = self.rate_model.validate() {
            let field = match &e {
                Error::Domain { name, .. } => format!("rate_model.{name}"),
                _ => "rate_model".into(),
            };
            issues.push(range_issue(field, e.to_string()));
        }
        if let Err(e) = self.dip_model.validate() {
            issues.push(range_issue("dip_model", e.to_string()));
        }

        let mut finite = |field: &str, values: &[f64]| {
            if values.iter().any(|v| !v.is_finite()) {
                issues.push(range_issue(field, "values must be finite"));
            }
        };
        finite("hom_dip", &[self.hom_dip.tau_min_fs, self.hom_dip.tau_max_fs]);
        finite("fringes.beta1_deg", &self.fringes.beta1_deg);
        finite(
            "fringes",
            &[self.fringes.beta2_min_deg, self.fringes.beta2_max_deg, self.fringes.delay_fs],
        );
        finite("chsh_theta.delays_fs", &self.chsh_theta.delays_fs);
        finite("chsh_theta", &[self.chsh_theta.theta_min_deg, self.chsh_theta.theta_max_deg]);
        finite(
            "chsh_vs_delay",
            &[self.chsh_vs_delay.theta_deg, self.chsh_vs_delay.tau_min_fs, self.chsh_vs_delay.tau_max_fs],
        );
        finite("headline", &[self.headline.theta_deg, self.headline.delay_fs]);

        for (field, steps) in [
            ("hom_dip.steps", self.hom_dip.steps),
            ("fringes.steps", self.fringes.steps),
            ("chsh_theta.steps", self.chsh_theta.steps),
            ("chsh_vs_delay.steps", self.chsh_vs_delay.steps),
        ] {
            if steps == 0 {
                issues.push(range_issue(field, "must be at least 1"));
            }
        }
        if self.fringes.beta1_deg.is_empty() {
            issues.push(range_issue("fringes.beta1_deg", "needs at least one angle"));
        }
        if self.chsh_theta.delays_fs.is_empty() {
            issues.push(range_issue("chsh_theta.delays_fs", "needs at least one delay"));
        }
        if self.headline.runs < 2 {
            issues.push(range_issue("headline.runs", "needs at least 2 runs for a spread"));
        }
        issues
    }

    /// Bell states scanned by the fringe scenario.
    pub fn fringe_kinds(&self) -> Vec<BellKind> {
        if self.fringes.kinds.is_empty() {
            vec![self.bell_kind]
        } else {
            self.fringes.kinds.clone()
        }
    }
}

/// Reads and fully validates a config file without running anything.
/// I/O failures are errors; everything about the content is in the report.
pub fn validate_config(path: &Path) -> Result<ValidationReport> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(validate_config_str(&text))
}

pub fn validate_config_str(text: &str) -> ValidationReport {
    match ExperimentConfig::from_toml_str(text) {
        Ok(_) => ValidationReport::from_issues(Vec::new()),
        Err(e) => e.report,
    }
}
