//! Gaussian states and affine Gaussian channels.
//!
//! Quadratures are ordered `(x₁, p₁, x₂, p₂, …)` with `x = a + a†` and
//! `p = i(a† − a)`, so the vacuum covariance is the identity and
//! `[x, p] = 2i`. A coherent state `|α⟩` has mean `(2 Re α, 2 Im α)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue floor used by the physicality checks.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Determinant below which a single-mode covariance is treated as singular.
const SINGULAR_DET: f64 = 1e-300;

/// Per-mode input preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preparation {
    Vacuum,
    Coherent {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// Thermal state with the given quadrature variance (vacuum = 1).
    Thermal { variance: f64 },
}

impl Preparation {
    pub fn coherent(alpha: Complex64) -> Self {
        Preparation::Coherent {
            re: alpha.re,
            im: alpha.im,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Preparation::Vacuum => Ok(()),
            Preparation::Coherent { re, im } => {
                if re.is_finite() && im.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Invalid(format!("coherent amplitude ({re}, {im}) not finite")))
                }
            }
            Preparation::Thermal { variance } => {
                if variance >= 1.0 && variance.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Physicality(format!(
                        "thermal variance {variance} must be >= 1 (vacuum)"
                    )))
                }
            }
        }
    }
}

/// Block-diagonal symplectic form with per-mode blocks `[[0, 1], [−1, 0]]`.
///
/// The canonical commutator matrix in this convention is `2iΩ`, so the
/// uncertainty relation reads `cov + iΩ ≥ 0`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

// The matrices here are a few modes wide, where nalgebra's packed gemm
// and its temporaries cost more than the arithmetic.

/// `S·C·Sᵀ + N`, symmetrized. Column-major slices throughout; zero
/// entries of `C` and `S` (most of an element's matrix) are skipped.
pub(crate) fn congruence(s: &DMatrix<f64>, c: &DMatrix<f64>, n: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = s.nrows();
    let (sl, cl) = (s.as_slice(), c.as_slice());
    let mut sc = vec![0.0; dim * dim];
    for (sc_col, c_col) in sc.chunks_exact_mut(dim).zip(cl.chunks_exact(dim)) {
        for (&ckj, s_col) in c_col.iter().zip(sl.chunks_exact(dim)) {
            if ckj != 0.0 {
                for (o, &x) in sc_col.iter_mut().zip(s_col) {
                    *o += x * ckj;
                }
            }
        }
    }
    // column j of (SC)·Sᵀ is Σ_k (SC)[:, k]·S[j, k]
    let mut out = n.clone();
    let ol = out.as_mut_slice();
    for (j, out_col) in ol.chunks_exact_mut(dim).enumerate() {
        for (k, sc_col) in sc.chunks_exact(dim).enumerate() {
            let sjk = sl[k * dim + j];
            if sjk != 0.0 {
                for (o, &x) in out_col.iter_mut().zip(sc_col) {
                    *o += x * sjk;
                }
            }
        }
    }
    for j in 0..dim {
        for r in 0..j {
            let v = 0.5 * (ol[j * dim + r] + ol[r * dim + j]);
            ol[j * dim + r] = v;
            ol[r * dim + j] = v;
        }
    }
    out
}

/// `S·v + d`.
pub(crate) fn affine(s: &DMatrix<f64>, v: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
    let dim = s.nrows();
    let mut out = d.clone();
    for (&vk, s_col) in v.iter().zip(s.as_slice().chunks_exact(dim)) {
        if vk != 0.0 {
            for (o, &x) in out.iter_mut().zip(s_col) {
                *o += x * vk;
            }
        }
    }
    out
}

/// Smallest eigenvalue of the Hermitian matrix `real + i·imag`.
pub fn min_hermitian_eigenvalue(real: &DMatrix<f64>, imag: &DMatrix<f64>) -> f64 {
    let h = DMatrix::from_fn(real.nrows(), real.ncols(), |r, c| {
        Complex64::new(real[(r, c)], imag[(r, c)])
    });
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Mean vector and covariance matrix over `n_modes` optical modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Build a state from raw moments. The covariance is symmetrized; no
    /// physicality check is made here (see [`GaussianState::is_physical`]).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Invalid(format!(
                "mean length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension {
                state: dim,
                map: cov.nrows().max(cov.ncols()),
            });
        }
        Ok(Self {
            n_modes: dim / 2,
            mean,
            cov: symmetrize(&cov),
        })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean `(x, p)` of one mode.
    pub fn mode_mean(&self, mode: usize) -> Result<[f64; 2]> {
        self.check_mode(mode)?;
        Ok([self.mean[2 * mode], self.mean[2 * mode + 1]])
    }

    /// 2×2 covariance block of one mode, row-major.
    pub fn mode_cov(&self, mode: usize) -> Result<[[f64; 2]; 2]> {
        self.check_mode(mode)?;
        let i = 2 * mode;
        Ok([
            [self.cov[(i, i)], self.cov[(i, i + 1)]],
            [self.cov[(i + 1, i)], self.cov[(i + 1, i + 1)]],
        ])
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes {
            Ok(())
        } else {
            Err(Error::ModeIndex {
                index: mode,
                n_modes: self.n_modes,
            })
        }
    }

    /// Smallest eigenvalue of `cov + iΩ`; non-negative for physical states.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.cov, &symplectic_form(self.n_modes))
    }

    pub fn is_physical(&self) -> bool {
        self.uncertainty_min_eigenvalue() >= -PHYSICALITY_TOL
    }
}

/// Product state with one preparation per mode.
pub fn make_state(n_modes: usize, inputs: &[Preparation]) -> Result<GaussianState> {
    if n_modes == 0 {
        return Err(Error::Invalid("a state needs at least one mode".into()));
    }
    if inputs.len() != n_modes {
        return Err(Error::Arity {
            what: "input preparations",
            expected: n_modes,
            got: inputs.len(),
        });
    }
    let mut state = GaussianState::vacuum(n_modes);
    for (k, prep) in inputs.iter().enumerate() {
        prep.validate()?;
        let i = 2 * k;
        match *prep {
            Preparation::Vacuum => {}
            Preparation::Coherent { re, im } => {
                state.mean[i] = 2.0 * re;
                state.mean[i + 1] = 2.0 * im;
            }
            Preparation::Thermal { variance } => {
                state.cov[(i, i)] = variance;
                state.cov[(i + 1, i + 1)] = variance;
            }
        }
    }
    Ok(state)
}

/// Affine Gaussian channel: `mean → S·mean + d`, `cov → S·cov·Sᵀ + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMap {
    pub linear: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub displacement: DVector<f64>,
}

impl ElementMap {
    pub fn identity(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self {
            linear: DMatrix::identity(dim, dim),
            noise: DMatrix::zeros(dim, dim),
            displacement: DVector::zeros(dim),
        }
    }

    /// Noiseless, displacement-free map.
    pub fn from_linear(linear: DMatrix<f64>) -> Self {
        let dim = linear.nrows();
        Self {
            linear,
            noise: DMatrix::zeros(dim, dim),
            displacement: DVector::zeros(dim),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.linear.nrows() / 2
    }

    /// The channel that applies `self` first and then `next`.
    pub fn then(&self, next: &ElementMap) -> ElementMap {
        ElementMap {
            linear: &next.linear * &self.linear,
            noise: congruence(&next.linear, &self.noise, &next.noise),
            displacement: affine(&next.linear, &self.displacement, &next.displacement),
        }
    }

    /// `max |S·Ω·Sᵀ − Ω|`.
    pub fn symplectic_defect(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        (&self.linear * &omega * self.linear.transpose() - omega).amax()
    }

    /// Smallest eigenvalue of `N + iΩ − i·S·Ω·Sᵀ`; non-negative for a
    /// completely positive Gaussian channel.
    pub fn channel_min_eigenvalue(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        let imag = &omega - &self.linear * &omega * self.linear.transpose();
        min_hermitian_eigenvalue(&self.noise, &imag)
    }
}

pub fn apply(state: &GaussianState, map: &ElementMap) -> Result<GaussianState> {
    let dim = state.mean.len();
    if map.linear.nrows() != dim
        || map.linear.ncols() != dim
        || map.noise.nrows() != dim
        || map.noise.ncols() != dim
        || map.displacement.len() != dim
    {
        return Err(Error::Dimension {
            state: dim,
            map: map.linear.nrows(),
        });
    }
    Ok(GaussianState {
        n_modes: state.n_modes,
        mean: affine(&map.linear, &state.mean, &map.displacement),
        cov: congruence(&map.linear, &state.cov, &map.noise),
    })
}

/// Homodyne statistics of `X(θ) = cos θ·x + sin θ·p` on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub mean: f64,
    pub variance: f64,
    pub theta: f64,
}

pub fn quadrature_stats(state: &GaussianState, mode: usize, theta: f64) -> Result<QuadratureStats> {
    let [mx, mp] = state.mode_mean(mode)?;
    let s = state.mode_cov(mode)?;
    let (sin, cos) = theta.sin_cos();
    let variance = cos * cos * s[0][0] + 2.0 * cos * sin * s[0][1] + sin * sin * s[1][1];
    Ok(QuadratureStats {
        mean: cos * mx + sin * mp,
        variance: variance.max(0.0),
        theta,
    })
}

/// Restriction of a state to the listed modes, in the listed order.
pub fn marginal(state: &GaussianState, modes: &[usize]) -> Result<GaussianState> {
    if modes.is_empty() {
        return Err(Error::Invalid("marginal over an empty mode list".into()));
    }
    for (k, &m) in modes.iter().enumerate() {
        state.check_mode(m)?;
        if modes[..k].contains(&m) {
            return Err(Error::RepeatedMode(m));
        }
    }
    let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    let mean = DVector::from_fn(idx.len(), |r, _| state.mean[idx[r]]);
    let cov = DMatrix::from_fn(idx.len(), idx.len(), |r, c| state.cov[(idx[r], idx[c])]);
    Ok(GaussianState {
        n_modes: modes.len(),
        mean,
        cov,
    })
}

/// Single-mode Wigner function of one mode, normalized over `dx dp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerMode {
    mean: [f64; 2],
    inv: [[f64; 2]; 2],
    norm: f64,
}

impl WignerMode {
    pub fn new(state: &GaussianState, mode: usize) -> Result<Self> {
        let mean = state.mode_mean(mode)?;
        let s = state.mode_cov(mode)?;
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if !(det >= SINGULAR_DET) {
            return Err(Error::Degenerate(format!(
                "mode {mode} covariance determinant {det:e} is not positive"
            )));
        }
        let inv = [
            [s[1][1] / det, -s[0][1] / det],
            [-s[1][0] / det, s[0][0] / det],
        ];
        Ok(Self {
            mean,
            inv,
            norm: 1.0 / (2.0 * std::f64::consts::PI * det.sqrt()),
        })
    }

    pub fn density(&self, x: f64, p: f64) -> f64 {
        let dx = x - self.mean[0];
        let dp = p - self.mean[1];
        let q = dx * (self.inv[0][0] * dx + self.inv[0][1] * dp)
            + dp * (self.inv[1][0] * dx + self.inv[1][1] * dp);
        self.norm * (-0.5 * q).exp()
    }
}

pub fn wigner(state: &GaussianState, mode: usize, x: f64, p: f64) -> Result<f64> {
    Ok(WignerMode::new(state, mode)?.density(x, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn preparations() {
        let vac = make_state(1, &[Preparation::Vacuum]).unwrap();
        assert_eq!(vac, GaussianState::vacuum(1));

        let coh = make_state(1, &[Preparation::coherent(Complex64::new(6.0, 0.0))]).unwrap();
        assert_eq!(coh.mode_mean(0).unwrap(), [12.0, 0.0]);
        assert_eq!(coh.mode_cov(0).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);

        let th = make_state(1, &[Preparation::Thermal { variance: 2.0 }]).unwrap();
        assert_eq!(th.mode_mean(0).unwrap(), [0.0, 0.0]);
        assert_eq!(th.mode_cov(0).unwrap(), [[2.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn preparation_errors() {
        assert!(matches!(
            make_state(1, &[Preparation::Thermal { variance: 0.5 }]),
            Err(Error::Physicality(_))
        ));
        assert!(matches!(
            make_state(2, &[Preparation::Vacuum]),
            Err(Error::Arity { expected: 2, got: 1, .. })
        ));
    }

    #[test]
    fn vacuum_is_minimum_uncertainty() {
        let vac = GaussianState::vacuum(3);
        assert!(vac.uncertainty_min_eigenvalue().abs() < 1e-12);
        let squeezed = GaussianState::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.5]),
        )
        .unwrap();
        assert!(!squeezed.is_physical());
    }

    #[test]
    fn apply_checks_dimensions() {
        let err = apply(&GaussianState::vacuum(2), &ElementMap::identity(3)).unwrap_err();
        assert_eq!(err, Error::Dimension { state: 4, map: 6 });
    }

    #[test]
    fn identity_map_is_noop() {
        let s = make_state(
            2,
            &[
                Preparation::coherent(Complex64::new(1.0, -2.0)),
                Preparation::Thermal { variance: 3.0 },
            ],
        )
        .unwrap();
        assert_eq!(apply(&s, &ElementMap::identity(2)).unwrap(), s);
    }

    #[test]
    fn quadrature_of_vacuum_and_coherent() {
        let vac = GaussianState::vacuum(1);
        for k in 0..16 {
            let q = quadrature_stats(&vac, 0, k as f64 * 0.4).unwrap();
            assert_eq!(q.mean, 0.0);
            assert_relative_eq!(q.variance, 1.0, epsilon = 1e-12);
        }
        let coh = make_state(1, &[Preparation::coherent(Complex64::new(6.0, 0.0))]).unwrap();
        let q = quadrature_stats(&coh, 0, 0.0).unwrap();
        assert_eq!((q.mean, q.variance), (12.0, 1.0));
        assert!(quadrature_stats(&coh, 1, 0.0).is_err());
    }

    #[test]
    fn wigner_closed_forms() {
        let vac = GaussianState::vacuum(1);
        assert_relative_eq!(wigner(&vac, 0, 0.0, 0.0).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(
            wigner(&vac, 0, 2.0, 0.0).unwrap(),
            (-2.0f64).exp() / (2.0 * PI),
            epsilon = 1e-15
        );
        let th = make_state(1, &[Preparation::Thermal { variance: 2.0 }]).unwrap();
        assert_relative_eq!(wigner(&th, 0, 0.0, 0.0).unwrap(), 1.0 / (4.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn wigner_rejects_singular_covariance() {
        let s = GaussianState::new(DVector::zeros(2), DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(wigner(&s, 0, 0.0, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn marginals() {
        let s = make_state(
            3,
            &[
                Preparation::Vacuum,
                Preparation::coherent(Complex64::new(0.5, 0.25)),
                Preparation::Thermal { variance: 4.0 },
            ],
        )
        .unwrap();
        let m = marginal(&s, &[1]).unwrap();
        assert_eq!(m.mode_mean(0).unwrap(), [1.0, 0.5]);
        assert_eq!(marginal(&s, &[0, 1, 2]).unwrap(), s);
        let swapped = marginal(&s, &[2, 0]).unwrap();
        assert_eq!(swapped.mode_cov(0).unwrap(), [[4.0, 0.0], [0.0, 4.0]]);
        assert_eq!(marginal(&GaussianState::vacuum(2), &[0]).unwrap(), GaussianState::vacuum(1));
        assert_eq!(marginal(&s, &[0, 0]).unwrap_err(), Error::RepeatedMode(0));
        assert!(matches!(marginal(&s, &[3]), Err(Error::ModeIndex { .. })));
    }
}
