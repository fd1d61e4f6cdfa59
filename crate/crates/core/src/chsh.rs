//! CHSH machinery for a polarization analyzer `a` and an OAM analyzer `b`.
//!
//! The dichotomic observables are `A = Π(a) − Π(a+π/2)` and
//! `B = Π(b) − Π(b+π/2)` built from [`pol_projector`] and [`oam_projector`],
//! and the correlator is `E(a, b) = Tr(ρ A⊗B)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

use nalgebra::{Matrix2, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::linalg::{kron, pauli_x, pauli_y, pauli_z, C64};
use crate::optics::{oam_projector, pol_projector, Projector};
use crate::state::DensityMatrix;

/// Polarization angle `a` and OAM angle `b`, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerPair {
    pub a: f64,
    pub b: f64,
}

impl AnalyzerPair {
    pub fn new(a: f64, b: f64) -> Self {
        AnalyzerPair { a, b }
    }

    /// The four projection settings entering one correlator, in the order
    /// `(a, b)`, `(a⊥, b⊥)`, `(a, b⊥)`, `(a⊥, b)`.
    pub fn outcome_settings(&self) -> [AnalyzerPair; 4] {
        let (a, b) = (self.a, self.b);
        let (ap, bp) = (a + FRAC_PI_2, b + FRAC_PI_2);
        [
            AnalyzerPair::new(a, b),
            AnalyzerPair::new(ap, bp),
            AnalyzerPair::new(a, bp),
            AnalyzerPair::new(ap, b),
        ]
    }
}

/// Analyzer angles of one CHSH experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl ChshAngles {
    /// The one-parameter family `a1 = 0, b1 = θ, a2 = 2θ, b2 = 3θ`.
    /// For a pure Bell state it gives `S(θ) = 3 cos 2θ − cos 6θ`, peaking at
    /// `2√2` for `θ = π/8`.
    pub fn standard(theta: f64) -> Self {
        ChshAngles {
            a1: 0.0,
            b1: theta,
            a2: 2.0 * theta,
            b2: 3.0 * theta,
        }
    }

    /// `(a1,b1), (a1,b2), (a2,b1), (a2,b2)`; the second enters S with a
    /// minus sign.
    pub fn pairs(&self) -> [AnalyzerPair; 4] {
        [
            AnalyzerPair::new(self.a1, self.b1),
            AnalyzerPair::new(self.a1, self.b2),
            AnalyzerPair::new(self.a2, self.b1),
            AnalyzerPair::new(self.a2, self.b2),
        ]
    }

    fn from_array(x: [f64; 4]) -> Self {
        ChshAngles {
            a1: x[0],
            a2: x[1],
            b1: x[2],
            b2: x[3],
        }
    }
}

/// Sign of each correlator in the CHSH sum, in [`ChshAngles::pairs`] order.
pub const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

/// The Tsirelson bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshResult {
    pub s_value: f64,
    /// `E(a1,b1), E(a1,b2), E(a2,b1), E(a2,b2)`
    pub per_term: [f64; 4],
}

fn dichotomic(p: &Projector<2>, p_perp: &Projector<2>) -> Matrix2<C64> {
    p.matrix() - p_perp.matrix()
}

/// `A ⊗ B` for the pair's analyzers.
pub fn correlation_observable(pair: &AnalyzerPair) -> Matrix4<C64> {
    let a = dichotomic(&pol_projector(pair.a), &pol_projector(pair.a + FRAC_PI_2));
    let b = dichotomic(&oam_projector(pair.b), &oam_projector(pair.b + FRAC_PI_2));
    kron(&a, &b)
}

/// `E(a, b) = Tr(ρ A⊗B)`.
pub fn correlation(rho: &DensityMatrix, pair: &AnalyzerPair) -> f64 {
    rho.expectation(&correlation_observable(pair))
}

/// Joint detection probabilities `[p₊₊, p₋₋, p₊₋, p₋₊]` for the four
/// settings of [`AnalyzerPair::outcome_settings`].
pub fn outcome_probabilities(rho: &DensityMatrix, pair: &AnalyzerPair) -> [f64; 4] {
    pair.outcome_settings()
        .map(|s| projection_probability(rho, &s))
}

/// `Tr(ρ Π(a)⊗Π(b))`, clipped at zero.
pub fn projection_probability(rho: &DensityMatrix, pair: &AnalyzerPair) -> f64 {
    rho.expectation(Projector::joint(pair.a, pair.b).as_matrix4())
        .max(0.0)
}

/// The CHSH sum `E(a1,b1) − E(a1,b2) + E(a2,b1) + E(a2,b2)`.
pub fn chsh_s(rho: &DensityMatrix, angles: &ChshAngles) -> ChshResult {
    let per_term = angles.pairs().map(|p| correlation(rho, &p));
    let s_value = per_term.iter().zip(CHSH_SIGNS).map(|(e, s)| e * s).sum();
    ChshResult { s_value, per_term }
}

/// `S(θ)` over `thetas` using [`ChshAngles::standard`].
pub fn theta_scan(rho: &DensityMatrix, thetas: &[f64]) -> Vec<(f64, f64)> {
    thetas
        .iter()
        .map(|&t| (t, chsh_s(rho, &ChshAngles::standard(t)).s_value))
        .collect()
}

/// `T_ij = Tr(ρ σ_i⊗σ_j)` for `i, j ∈ {x, y, z}`, with σ_z diagonal in
/// `(|H⟩, |V⟩)` and in `(|m=−1⟩, |m=+1⟩)`.
pub fn correlation_matrix(rho: &DensityMatrix) -> Matrix3<f64> {
    let paulis = [pauli_x(), pauli_y(), pauli_z()];
    Matrix3::from_fn(|i, j| rho.expectation(&kron(&paulis[i], &paulis[j])))
}

/// Maximal CHSH value over all projective measurements: `2√M` where `M`
/// is the sum of the two largest eigenvalues of `TᵀT`.
pub fn horodecki_smax(rho: &DensityMatrix) -> f64 {
    let t = correlation_matrix(rho);
    let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(t.transpose() * t)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    2.0 * (eig[0] + eig[1]).max(0.0).sqrt()
}

/// Number of lattice values per angle for the optimizer's starting points.
const START_LATTICE: usize = 3;

/// Numerically maximizes S over `(a1, a2, b1, b2) ∈ [0, π)⁴`.
///
/// Deterministic: Nelder–Mead from every point of a 3⁴ lattice, then two
/// restarts from the best vertex. The objective uses the real-plane block of
/// the correlation matrix, `E(a,b) = u(a)ᵀ T v(b)` with
/// `u(a) = (sin 2a, cos 2a)` over `(σ_x, σ_z)`, which is exact for the
/// linear analyzers used here; the returned S is re-evaluated with
/// [`chsh_s`].
pub fn optimize_angles(rho: &DensityMatrix) -> (ChshAngles, f64) {
    let t = correlation_matrix(rho);
    // (x, z) block.
    let txz = Matrix2::new(t[(0, 0)], t[(0, 2)], t[(2, 0)], t[(2, 2)]);
    let e = |a: f64, b: f64| {
        let (sa, ca) = (2.0 * a).sin_cos();
        let (sb, cb) = (2.0 * b).sin_cos();
        let u = nalgebra::Vector2::new(sa, ca);
        let v = nalgebra::Vector2::new(sb, cb);
        u.dot(&(txz * v))
    };
    let neg_s = |x: &[f64; 4]| -(e(x[0], x[2]) - e(x[0], x[3]) + e(x[1], x[2]) + e(x[1], x[3]));

    let step = PI / START_LATTICE as f64;
    let mut best = ([0.0; 4], f64::INFINITY);
    for idx in 0..START_LATTICE.pow(4) {
        let mut x0 = [0.0; 4];
        let mut rem = idx;
        for slot in &mut x0 {
            *slot = (rem % START_LATTICE) as f64 * step + FRAC_PI_8 / 2.0;
            rem /= START_LATTICE;
        }
        let (x, f) = nelder_mead(&neg_s, x0, 0.3);
        if f < best.1 {
            best = (x, f);
        }
    }
    for scale in [0.05, 0.005] {
        let (x, f) = nelder_mead(&neg_s, best.0, scale);
        if f <= best.1 {
            best = (x, f);
        }
    }
    let angles = ChshAngles::from_array(best.0.map(|v| v.rem_euclid(PI)));
    let s = chsh_s(rho, &angles).s_value;
    (angles, s)
}

/// Minimal Nelder–Mead for four variables.
fn nelder_mead(f: &impl Fn(&[f64; 4]) -> f64, x0: [f64; 4], scale: f64) -> ([f64; 4], f64) {
    const N: usize = 4;
    const MAX_ITER: usize = 4000;
    const FTOL: f64 = 1e-15;

    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += scale;
        simplex.push((x, f(&x)));
    }

    let lerp = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] {
        let mut out = [0.0; N];
        for k in 0..N {
            out[k] = a[k] + t * (b[k] - a[k]);
        }
        out
    };

    for _ in 0..MAX_ITER {
        simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
        if (simplex[N].1 - simplex[0].1).abs() <= FTOL * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += x[k] / N as f64;
            }
        }
        let worst = simplex[N];
        let reflected = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst.1 { (reflected, fr) } else { worst };
            let contracted = lerp(&centroid, &target, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[N] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for p in simplex.iter_mut().skip(1) {
                    p.0 = lerp(&best, &p.0, 0.5);
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(|p, q| p.1.total_cmp(&q.1));
    simplex[0]
}
