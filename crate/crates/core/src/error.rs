use std::path::PathBuf;

use crate::state::PhysicalityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{name} = {value} is outside its allowed range {allowed}")]
    Domain {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("matrix is not a physical density matrix: {0}")]
    Unphysical(PhysicalityReport),

    #[error("ket has squared norm {0}, expected 1")]
    NotNormalized(f64),

    #[error("q-plate output leaves the modeled OAM range (weight {0:.3e} outside m ∈ {{-1, 0, +1}})")]
    OamOutOfRange(f64),

    #[error("invalid dip model: {0}")]
    DipModel(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("analyzer settings do not match the CHSH angles: {0}")]
    SettingMismatch(String),

    #[error("unknown scenario `{0}` (expected one of hom-dip, fringes, chsh-theta, chsh-vs-delay, headline)")]
    UnknownScenario(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, allowed: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            allowed,
        }
    }
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::domain(name, value, "[0, 1]"))
    }
}
