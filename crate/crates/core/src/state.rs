//! Density-matrix algebra on the polarization ⊗ OAM qubit pair.
//!
//! Every ket and density matrix in this module uses the fixed basis ordering
//!
//! | index | state      |
//! |-------|------------|
//! | 0     | `|H, m=−1⟩` |
//! | 1     | `|H, m=+1⟩` |
//! | 2     | `|V, m=−1⟩` |
//! | 3     | `|V, m=+1⟩` |
//!
//! i.e. polarization is the slow index and OAM the fast one. With this order
//! the `Ψ` Bell states sit on the corner entries (0, 3) and the `Φ` states on
//! the inner entries (1, 2).

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{check_unit_interval, Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, hermiticity_error, kron, pauli_y, psd_sqrt, re, C64,
};

/// Tolerance on `‖ψ‖² − 1` for a [`Ket`].
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Tolerance on entrywise Hermiticity and on `Tr ρ − 1`.
pub const MATRIX_TOLERANCE: f64 = 1e-12;
/// Smallest eigenvalue accepted as "non-negative".
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Index of `|pol, m⟩` in the joint basis. `pol_v` selects `V`, `oam_plus`
/// selects `m = +1`.
pub const fn basis_index(pol_v: bool, oam_plus: bool) -> usize {
    (pol_v as usize) * 2 + oam_plus as usize
}

/// The four Bell states of the polarization/OAM pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellKind {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
    ];

    /// The two basis indices the state is a superposition of, and the
    /// relative sign between them.
    fn support(self) -> (usize, usize, f64) {
        let psi = (basis_index(false, false), basis_index(true, true));
        let phi = (basis_index(false, true), basis_index(true, false));
        match self {
            BellKind::PsiPlus => (psi.0, psi.1, 1.0),
            BellKind::PsiMinus => (psi.0, psi.1, -1.0),
            BellKind::PhiPlus => (phi.0, phi.1, 1.0),
            BellKind::PhiMinus => (phi.0, phi.1, -1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi-plus",
            BellKind::PsiMinus => "psi-minus",
            BellKind::PhiPlus => "phi-plus",
            BellKind::PhiMinus => "phi-minus",
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BellKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown Bell state `{s}`"))
    }
}

/// A normalized pure state of the polarization/OAM pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket(Vector4<C64>);

impl Ket {
    /// Wraps `amplitudes`, rejecting vectors whose squared norm is not 1.
    pub fn new(amplitudes: Vector4<C64>) -> Result<Self> {
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Ket(amplitudes))
    }

    /// Normalizes `amplitudes`. Fails only for the zero vector.
    pub fn normalized(amplitudes: Vector4<C64>) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Ket(amplitudes / re(n)))
    }

    /// The product state `|pol⟩ ⊗ |oam⟩` on basis vectors.
    pub fn basis(pol_v: bool, oam_plus: bool) -> Self {
        let mut v = Vector4::zeros();
        v[basis_index(pol_v, oam_plus)] = re(1.0);
        Ket(v)
    }

    pub fn amplitudes(&self) -> &Vector4<C64> {
        &self.0
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix(self.0 * self.0.adjoint())
    }
}

/// `(|a⟩ ± |b⟩)/√2` for the requested Bell kind.
pub fn bell_state(kind: BellKind) -> Ket {
    let (i, j, sign) = kind.support();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Vector4::zeros();
    v[i] = re(h);
    v[j] = re(sign * h);
    Ket(v)
}

/// A physical (Hermitian, unit-trace, positive semidefinite) 4×4 density
/// matrix. Construction through [`DensityMatrix::new`] validates; every
/// operation in this crate preserves physicality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix4<C64>);

impl DensityMatrix {
    pub fn new(entries: Matrix4<C64>) -> Result<Self> {
        let report = validate_physical(&entries);
        if report.is_physical() {
            Ok(DensityMatrix(entries))
        } else {
            Err(Error::Unphysical(report))
        }
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix4::identity() * re(0.25))
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    /// `Tr(ρ · op)`, real part. `op` is expected to be Hermitian.
    pub fn expectation(&self, op: &Matrix4<C64>) -> f64 {
        (self.0 * op).trace().re
    }

    /// Weighted mixture `Σ wᵢ ρᵢ`. Weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > MATRIX_TOLERANCE {
            return Err(Error::domain("mixture weight sum", total, "non-negative, summing to 1"));
        }
        let m = parts
            .iter()
            .fold(Matrix4::zeros(), |acc, (w, rho)| acc + rho.0 * re(*w));
        Ok(DensityMatrix(m))
    }
}

/// `ε|B⟩⟨B| + (1−ε)/2 (|b₁⟩⟨b₁| + |b₂⟩⟨b₂|)` where `|b₁⟩, |b₂⟩` are the two
/// basis terms of the Bell state `|B⟩`: a coherent superposition diluted by
/// the classical mixture of its own components.
pub fn mixed_bell_state(epsilon: f64, kind: BellKind) -> Result<DensityMatrix> {
    let epsilon = check_unit_interval("epsilon", epsilon)?;
    let (i, j, _) = kind.support();
    let mut m = bell_state(kind).projector().0 * re(epsilon);
    let incoherent = re((1.0 - epsilon) / 2.0);
    m[(i, i)] += incoherent;
    m[(j, j)] += incoherent;
    Ok(DensityMatrix(m))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho.0 * rho.0).trace().re
}

/// Wootters concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// The λᵢ are the square roots of the eigenvalues of `ρ ρ̃`, with
/// `ρ̃ = (Y⊗Y) ρ* (Y⊗Y)`. They are computed as the singular values of
/// `X = √ρ (Y⊗Y) √ρ*`, since `X X† = √ρ ρ̃ √ρ` is similar to `ρ ρ̃`; this
/// avoids taking square roots of round-off eigenvalues.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let yy = kron(&pauli_y(), &pauli_y());
    let root = psd_sqrt(&rho.0);
    let x = root * yy * root.conjugate();
    let mut lambdas: Vec<f64> = x.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Depolarizing visibility loss `V·ρ + (1−V)·I/4`. Every traceless
/// observable expectation, and hence every correlator, scales by `V`.
pub fn apply_visibility(rho: &DensityMatrix, visibility: f64) -> Result<DensityMatrix> {
    let v = check_unit_interval("visibility", visibility)?;
    Ok(DensityMatrix(
        rho.0 * re(v) + Matrix4::identity() * re((1.0 - v) / 4.0),
    ))
}

/// Which physicality invariant a matrix violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Invariant {
    Hermitian,
    UnitTrace,
    PositiveSemidefinite,
}

/// Outcome of [`validate_physical`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalityReport {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub failures: Vec<Invariant>,
}

impl PhysicalityReport {
    pub fn is_physical(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for PhysicalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failures.is_empty() {
            return f.write_str("physical");
        }
        let names: Vec<_> = self
            .failures
            .iter()
            .map(|inv| match inv {
                Invariant::Hermitian => format!("not Hermitian (max dev {:.3e})", self.hermiticity_error),
                Invariant::UnitTrace => format!("trace off by {:.3e}", self.trace_error),
                Invariant::PositiveSemidefinite => {
                    format!("negative eigenvalue {:.3e}", self.min_eigenvalue)
                }
            })
            .collect();
        f.write_str(&names.join("; "))
    }
}

/// Checks Hermiticity, unit trace and positive semidefiniteness, reporting
/// every violated invariant rather than stopping at the first.
pub fn validate_physical(m: &Matrix4<C64>) -> PhysicalityReport {
    let hermiticity_error = hermiticity_error(m);
    let tr = m.trace();
    let trace_error = (tr - re(1.0)).norm();
    let min_eigenvalue = hermitian_eigenvalues(m)[3];

    let mut failures = Vec::new();
    if hermiticity_error > MATRIX_TOLERANCE {
        failures.push(Invariant::Hermitian);
    }
    if trace_error > MATRIX_TOLERANCE {
        failures.push(Invariant::UnitTrace);
    }
    if min_eigenvalue < PSD_TOLERANCE {
        failures.push(Invariant::PositiveSemidefinite);
    }
    PhysicalityReport {
        hermiticity_error,
        trace_error,
        min_eigenvalue,
        failures,
    }
}
