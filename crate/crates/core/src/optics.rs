//! Jones-calculus optics for polarization and OAM.
//!
//! Conventions:
//!
//! - Polarization basis `(|H⟩, |V⟩)`; circular states are
//!   `|R⟩ = (|H⟩ − i|V⟩)/√2` and `|L⟩ = (|H⟩ + i|V⟩)/√2`.
//! - A retarder with fast axis at `θ` and retardance `δ` is
//!   `Rot(θ) · diag(1, e^{iδ}) · Rot(−θ)`.
//! - OAM analyzers use `cos b |m=−1⟩ + sin b |m=+1⟩`, so the OAM qubit has
//!   `|m=−1⟩` as its first basis vector, matching [`crate::state`].
//!
//! The generation space for the q-plate is polarization ⊗ `m ∈ {−1, 0, +1}`;
//! photons enter the generation chain with `m = 0` and leave with `m = ±1`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector2, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{c, hermiticity_error, kron, re, C64};
use crate::state::Ket;

pub fn horizontal() -> Vector2<C64> {
    Vector2::new(re(1.0), re(0.0))
}

pub fn vertical() -> Vector2<C64> {
    Vector2::new(re(0.0), re(1.0))
}

pub fn right_circular() -> Vector2<C64> {
    Vector2::new(re(1.0), c(0.0, -1.0)) * re(std::f64::consts::FRAC_1_SQRT_2)
}

pub fn left_circular() -> Vector2<C64> {
    Vector2::new(re(1.0), c(0.0, 1.0)) * re(std::f64::consts::FRAC_1_SQRT_2)
}

/// Linear polarization `cos a |H⟩ + sin a |V⟩`.
pub fn linear(a: f64) -> Vector2<C64> {
    Vector2::new(re(a.cos()), re(a.sin()))
}

/// True when `a = e^{iφ} b` for some φ, to within `tol` on every entry.
pub fn equal_up_to_phase<const R: usize, const K: usize>(
    a: &SMatrix<C64, R, K>,
    b: &SMatrix<C64, R, K>,
    tol: f64,
) -> bool {
    // Fix the phase from the largest entry of b.
    let (idx, pivot) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(i, z)| (i, *z))
        .unwrap_or((0, re(0.0)));
    if pivot.norm() < tol {
        return a.iter().all(|z| z.norm() < tol);
    }
    let ratio = a.as_slice()[idx] / pivot;
    if (ratio.norm() - 1.0).abs() > tol {
        return false;
    }
    a.iter().zip(b.iter()).all(|(x, y)| (x - ratio * y).norm() < tol)
}

/// A 2×2 Jones operator on polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolUnitary(Matrix2<C64>);

impl PolUnitary {
    /// Wraps `m` after checking `m†m = I`.
    pub fn new(m: Matrix2<C64>) -> Result<Self> {
        let dev = (m.adjoint() * m - Matrix2::identity()).norm();
        if dev > 1e-12 {
            return Err(Error::domain("unitarity deviation", dev, "≤ 1e-12"));
        }
        Ok(PolUnitary(m))
    }

    pub fn identity() -> Self {
        PolUnitary(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    pub fn apply(&self, pol: &Vector2<C64>) -> Vector2<C64> {
        self.0 * pol
    }

    /// `self` followed by `next` (light passes `self` first).
    pub fn then(&self, next: &PolUnitary) -> PolUnitary {
        PolUnitary(next.0 * self.0)
    }

    pub fn unitarity_error(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity()).norm()
    }
}

fn rotation(theta: f64) -> Matrix2<C64> {
    let (s, co) = theta.sin_cos();
    Matrix2::new(re(co), re(-s), re(s), re(co))
}

/// Linear retarder with fast axis at `theta` and retardance `delta`.
pub fn retarder(theta: f64, delta: f64) -> PolUnitary {
    let core = Matrix2::new(re(1.0), re(0.0), re(0.0), C64::from_polar(1.0, delta));
    PolUnitary(rotation(theta) * core * rotation(-theta))
}

/// Half-wave plate: `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`.
pub fn hwp(theta: f64) -> PolUnitary {
    let (s, co) = (2.0 * theta).sin_cos();
    PolUnitary(Matrix2::new(re(co), re(s), re(s), re(-co)))
}

/// Quarter-wave plate; `qwp(0) = diag(1, i)` and `qwp(π/4)|H⟩ ∝ |R⟩`.
pub fn qwp(theta: f64) -> PolUnitary {
    retarder(theta, FRAC_PI_2)
}

/// Number of OAM values tracked in the generation space.
const OAM_LEVELS: usize = 3;

/// State on polarization ⊗ `m ∈ {−1, 0, +1}`; index `pol·3 + (m+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpaceKet(SVector<C64, 6>);

fn gen_index(pol: usize, m: i32) -> usize {
    pol * OAM_LEVELS + (m + 1) as usize
}

impl GenSpaceKet {
    pub fn new(amplitudes: SVector<C64, 6>) -> Result<Self> {
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(GenSpaceKet(amplitudes))
    }

    /// `|pol⟩ ⊗ |m⟩` for `m ∈ {−1, 0, +1}`. `pol` must be normalized.
    pub fn product(pol: &Vector2<C64>, m: i32) -> Result<Self> {
        if !(-1..=1).contains(&m) {
            return Err(Error::domain("m", m as f64, "{-1, 0, +1}"));
        }
        let mut v = SVector::<C64, 6>::zeros();
        v[gen_index(0, m)] = pol[0];
        v[gen_index(1, m)] = pol[1];
        GenSpaceKet::new(v)
    }

    pub fn amplitudes(&self) -> &SVector<C64, 6> {
        &self.0
    }

    pub fn amplitude(&self, pol_v: bool, m: i32) -> C64 {
        self.0[gen_index(pol_v as usize, m)]
    }

    /// Polarization amplitudes of the `m` sector (unnormalized).
    pub fn sector(&self, m: i32) -> Vector2<C64> {
        Vector2::new(self.0[gen_index(0, m)], self.0[gen_index(1, m)])
    }

    fn from_sectors(sectors: [Vector2<C64>; OAM_LEVELS]) -> SVector<C64, 6> {
        let mut v = SVector::<C64, 6>::zeros();
        for (k, s) in sectors.iter().enumerate() {
            v[k] = s[0];
            v[OAM_LEVELS + k] = s[1];
        }
        v
    }

    /// Applies a polarization-only element.
    pub fn apply_pol(&self, u: &PolUnitary) -> GenSpaceKet {
        let sectors = [-1, 0, 1].map(|m| u.apply(&self.sector(m)));
        GenSpaceKet(Self::from_sectors(sectors))
    }

    /// The `m = ±1` sectors as a joint polarization/OAM ket, or `None` if
    /// any weight remains in `m = 0`.
    pub fn to_joint(&self) -> Option<Ket> {
        if self.sector(0).norm() > 1e-12 {
            return None;
        }
        let v = Vector4::new(
            self.amplitude(false, -1),
            self.amplitude(false, 1),
            self.amplitude(true, -1),
            self.amplitude(true, 1),
        );
        Ket::new(v).ok()
    }
}

/// A `q = 1/2` q-plate: `|R, m⟩ → e^{−2iα}|L, m−1⟩` and
/// `|L, m⟩ → e^{2iα}|R, m+1⟩`, where `α` is the orientation of the optic
/// axis at azimuth zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QPlate {
    pub axis_offset: f64,
}

/// Optic-axis offset for which QWP(π/4) → q-plate → QWP(π/4) sends
/// `|H⟩ ↦ |H, −1⟩` and `|V⟩ ↦ |V, +1⟩` with no relative phase.
pub const GENERATION_AXIS_OFFSET: f64 = FRAC_PI_4;

impl Default for QPlate {
    fn default() -> Self {
        QPlate {
            axis_offset: GENERATION_AXIS_OFFSET,
        }
    }
}

impl QPlate {
    /// Applies the plate and splits the output into the part that stays in
    /// `m ∈ {−1, 0, +1}` and the squared norm that escaped to `|m| = 2`.
    pub fn apply_split(&self, input: &GenSpaceKet) -> (SVector<C64, 6>, f64) {
        let r = right_circular();
        let l = left_circular();
        let to_l = C64::from_polar(1.0, -2.0 * self.axis_offset);
        let to_r = C64::from_polar(1.0, 2.0 * self.axis_offset);

        let mut out = [Vector2::zeros(); OAM_LEVELS];
        let mut escaped = 0.0;
        for m in -1..=1 {
            let pol = input.sector(m);
            let amp_r = r.dotc(&pol);
            let amp_l = l.dotc(&pol);
            // R lowers m by one, L raises it.
            let down = amp_r * to_l;
            let up = amp_l * to_r;
            if m > -1 {
                out[(m - 1 + 1) as usize] += l * down;
            } else {
                escaped += down.norm_sqr();
            }
            if m < 1 {
                out[(m + 1 + 1) as usize] += r * up;
            } else {
                escaped += up.norm_sqr();
            }
        }
        (GenSpaceKet::from_sectors(out), escaped)
    }

    /// Applies the plate, rejecting inputs whose image leaves the modeled
    /// OAM range.
    pub fn apply(&self, input: &GenSpaceKet) -> Result<GenSpaceKet> {
        let (out, escaped) = self.apply_split(input);
        if escaped > 1e-12 {
            return Err(Error::OamOutOfRange(escaped));
        }
        Ok(GenSpaceKet(out))
    }
}

/// The q-plate used throughout the setup.
pub fn qplate() -> QPlate {
    QPlate::default()
}

/// The three-element chain QWP(π/4) → q-plate → QWP(π/4) that writes a
/// polarization state into the joint polarization/OAM space:
/// `|H⟩ ↦ |H, m=−1⟩`, `|V⟩ ↦ |V, m=+1⟩`.
pub fn generation_chain(pol_in: &Vector2<C64>) -> Result<Ket> {
    let input = GenSpaceKet::product(pol_in, 0)?;
    let plate = qplate();
    let out = plate
        .apply(&input.apply_pol(&qwp(FRAC_PI_4)))?
        .apply_pol(&qwp(FRAC_PI_4));
    out.to_joint()
        .ok_or_else(|| Error::domain("m=0 residue", out.sector(0).norm(), "0"))
}

/// Orthogonal projector of size `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector<const N: usize>(SMatrix<C64, N, N>);

impl<const N: usize> Projector<N> {
    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn onto(v: &SVector<C64, N>) -> Self {
        Projector(v * v.adjoint() / re(v.norm_squared()))
    }

    pub fn matrix(&self) -> &SMatrix<C64, N, N> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `‖P² − P‖` (Frobenius).
    pub fn idempotence_error(&self) -> f64 {
        (self.0 * self.0 - self.0).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }
}

impl Projector<2> {
    /// `self ⊗ oam`, polarization first.
    pub fn tensor(&self, oam: &Projector<2>) -> Projector<4> {
        Projector(kron(&self.0, &oam.0))
    }
}

impl Projector<4> {
    /// Joint projector `pol_projector(a) ⊗ oam_projector(b)`.
    pub fn joint(a: f64, b: f64) -> Self {
        pol_projector(a).tensor(&oam_projector(b))
    }

    pub fn as_matrix4(&self) -> &Matrix4<C64> {
        &self.0
    }
}

/// Projector onto `cos a |H⟩ + sin a |V⟩`.
pub fn pol_projector(a: f64) -> Projector<2> {
    Projector::onto(&linear(a))
}

/// Projector onto `cos b |m=−1⟩ + sin b |m=+1⟩`.
pub fn oam_projector(b: f64) -> Projector<2> {
    Projector::onto(&Vector2::new(re(b.cos()), re(b.sin())))
}

/// Element settings of the OAM analyzer for target angle `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSettings {
    /// HWP₃ fast-axis angle; acts on the `|H⟩` photon leaving the PBS.
    pub hwp_angle: f64,
    /// QWP₃ fast-axis angle.
    pub qwp_angle: f64,
    /// Transmission axis of the polarizer after the q-plate.
    pub polarizer_angle: f64,
}

impl AnalyzerSettings {
    /// The HWP/QWP pair prepares `cos b |L⟩ − sin b |R⟩`, which the q-plate
    /// and the `m = 0` fiber filter turn into a projection of the OAM qubit
    /// onto `cos b |−1⟩ + sin b |+1⟩`.
    pub fn for_angle(b: f64) -> Self {
        AnalyzerSettings {
            hwp_angle: b / 2.0 + FRAC_PI_8,
            qwp_angle: 0.0,
            polarizer_angle: 0.0,
        }
    }
}

/// Result of composing the measurement-stage optics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerResponse {
    /// The POVM element `K†K` induced on the incoming OAM qubit.
    pub effect: Matrix2<C64>,
    /// Trace of `effect`: the transmission of the chain for the selected state.
    pub efficiency: f64,
    /// `effect` rescaled to unit trace.
    pub projector: Projector<2>,
}

/// Composes HWP₃ → QWP₃ → q-plate → single-mode fiber (`m = 0`) → polarizer
/// for a photon that leaves the PBS horizontally polarized and carries an
/// arbitrary OAM qubit, and returns the operator induced on that qubit.
pub fn analyzer_chain(b: f64) -> AnalyzerResponse {
    analyzer_chain_with(&AnalyzerSettings::for_angle(b))
}

pub fn analyzer_chain_with(settings: &AnalyzerSettings) -> AnalyzerResponse {
    let waveplates = hwp(settings.hwp_angle).then(&qwp(settings.qwp_angle));
    let plate = qplate();
    let pol_after_plates = waveplates.apply(&horizontal());
    let polarizer = linear(settings.polarizer_angle);

    // Row k of the 1×2 operator K: amplitude at the detector for OAM input
    // |m=−1⟩ (k=0) or |m=+1⟩ (k=1). Output components at |m|=2 are removed
    // by the fiber together with m=±1, so only the m=0 sector is read.
    let kraus = [-1, 1].map(|m| {
        let input = GenSpaceKet::product(&pol_after_plates, m).expect("normalized input");
        let (out, _escaped) = plate.apply_split(&input);
        polarizer.dotc(&GenSpaceKet(out).sector(0))
    });
    let row = Vector2::new(kraus[0], kraus[1]);
    let effect = row.conjugate() * row.transpose();
    let efficiency = effect.trace().re;
    let projector = Projector(effect / re(efficiency));
    AnalyzerResponse {
        effect,
        efficiency,
        projector,
    }
}
