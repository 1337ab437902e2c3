//! Gaussian channels for the optical elements of the interferometers.
//!
//! Every constructor acts on designated modes of an `n_modes` system and
//! leaves the other modes untouched.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::gaussian::ElementMap;

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Parametric-amplifier gain. Only the small gain `g` is stored; the
/// amplification gain `G = √(1 + g²)` is always derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PaGain {
    g: f64,
}

impl PaGain {
    pub const OFF: PaGain = PaGain { g: 0.0 };

    pub fn new(g: f64) -> Result<Self> {
        if g >= 0.0 && g.is_finite() {
            Ok(Self { g })
        } else {
            Err(Error::range("g", g, "[0, inf)"))
        }
    }

    pub fn small(&self) -> f64 {
        self.g
    }

    pub fn amplification(&self) -> f64 {
        (1.0 + self.g * self.g).sqrt()
    }

    /// Quantum noise gain `G² + g²` (linear).
    pub fn qng(&self) -> f64 {
        1.0 + 2.0 * self.g * self.g
    }

    pub fn qng_db(&self) -> f64 {
        to_db(self.qng())
    }

    /// Phase-quadrature squeezing factor `(G + g)²` of the single-mode squeezer.
    pub fn squeezing(&self) -> f64 {
        let s = self.amplification() + self.g;
        s * s
    }
}

impl TryFrom<f64> for PaGain {
    type Error = Error;

    fn try_from(g: f64) -> Result<Self> {
        PaGain::new(g)
    }
}

impl From<PaGain> for f64 {
    fn from(gain: PaGain) -> f64 {
        gain.g
    }
}

/// Fractional intensity loss in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LossSpec {
    l: f64,
}

impl LossSpec {
    pub const NONE: LossSpec = LossSpec { l: 0.0 };

    pub fn new(l: f64) -> Result<Self> {
        check_range("L", l, 0.0, 1.0, "[0,1]").map(|l| Self { l })
    }

    pub fn value(&self) -> f64 {
        self.l
    }

    pub fn transmission(&self) -> f64 {
        1.0 - self.l
    }
}

impl TryFrom<f64> for LossSpec {
    type Error = Error;

    fn try_from(l: f64) -> Result<Self> {
        LossSpec::new(l)
    }
}

impl From<LossSpec> for f64 {
    fn from(loss: LossSpec) -> f64 {
        loss.l
    }
}

/// Sign convention of the beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsConvention {
    /// `a' = √T a + √R b`, `b' = √T b − √R a`, the form used by the
    /// interferometer chains in this crate.
    #[default]
    PaperMzi,
    /// Symmetric beamsplitter `a' = √T a + i√R b`, `b' = i√R a + √T b`.
    /// Fringe positions differ from [`BsConvention::PaperMzi`]; do not mix
    /// the two within one interferometer.
    FirstPlus,
}

pub(crate) fn check_mode(mode: usize, n_modes: usize) -> Result<()> {
    if mode < n_modes {
        Ok(())
    } else {
        Err(Error::ModeIndex {
            index: mode,
            n_modes,
        })
    }
}

pub(crate) fn check_pair((a, b): (usize, usize), n_modes: usize) -> Result<()> {
    check_mode(a, n_modes)?;
    check_mode(b, n_modes)?;
    if a == b {
        return Err(Error::RepeatedMode(a));
    }
    Ok(())
}

/// Embed a 4×4 block acting on `(x_a, p_a, x_b, p_b)` into an `n_modes`
/// matrix whose remaining diagonal is `fill`.
pub(crate) fn embed_pair(n_modes: usize, (a, b): (usize, usize), block: &[[f64; 4]; 4], fill: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes) * fill;
    let idx = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1];
    for r in 0..4 {
        for c in 0..4 {
            m[(idx[r], idx[c])] = block[r][c];
        }
    }
    m
}

/// Two-mode amplifier block: mode a → `G a + g b†`, mode b → `G b + g a†`.
pub(crate) fn two_mode_block(big: f64, small: f64) -> [[f64; 4]; 4] {
    [
        [big, 0.0, small, 0.0],
        [0.0, big, 0.0, -small],
        [small, 0.0, big, 0.0],
        [0.0, -small, 0.0, big],
    ]
}

/// Ideal two-mode parametric amplifier: `ĉ = G b̂ + g â†` on mode `b`,
/// `d̂ = G â + g b̂†` on mode `a`.
pub fn parametric_amplifier(n_modes: usize, pair: (usize, usize), gain: PaGain) -> Result<ElementMap> {
    check_pair(pair, n_modes)?;
    let block = two_mode_block(gain.amplification(), gain.small());
    Ok(ElementMap::from_linear(embed_pair(n_modes, pair, &block, 1.0)))
}

/// Degenerate amplifier `b̂ = G â + g â†`: amplifies `x` by `G + g` and
/// squeezes `p` by `G − g`.
pub fn single_mode_squeezer(n_modes: usize, mode: usize, gain: PaGain) -> Result<ElementMap> {
    check_mode(mode, n_modes)?;
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let big = gain.amplification();
    s[(2 * mode, 2 * mode)] = big + gain.small();
    s[(2 * mode + 1, 2 * mode + 1)] = big - gain.small();
    Ok(ElementMap::from_linear(s))
}

/// Lossless beamsplitter with intensity transmission `t` (`R = 1 − t`).
pub fn beamsplitter(n_modes: usize, pair: (usize, usize), t: f64, convention: BsConvention) -> Result<ElementMap> {
    check_pair(pair, n_modes)?;
    let t = check_range("T", t, 0.0, 1.0, "[0,1]")?;
    let st = t.sqrt();
    let sr = (1.0 - t).sqrt();
    let block = match convention {
        BsConvention::PaperMzi => [
            [st, 0.0, sr, 0.0],
            [0.0, st, 0.0, sr],
            [-sr, 0.0, st, 0.0],
            [0.0, -sr, 0.0, st],
        ],
        // i·b̂ maps (x, p) to (−p, x)
        BsConvention::FirstPlus => [
            [st, 0.0, 0.0, -sr],
            [0.0, st, sr, 0.0],
            [0.0, -sr, st, 0.0],
            [sr, 0.0, 0.0, st],
        ],
    };
    Ok(ElementMap::from_linear(embed_pair(n_modes, pair, &block, 1.0)))
}

/// Phase shift `â → e^{iφ} â`.
pub fn phase_shift(n_modes: usize, mode: usize, phi: f64) -> Result<ElementMap> {
    check_mode(mode, n_modes)?;
    if !phi.is_finite() {
        return Err(Error::range("phi", phi, "(-inf, inf)"));
    }
    let (sin, cos) = phi.sin_cos();
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let i = 2 * mode;
    s[(i, i)] = cos;
    s[(i, i + 1)] = -sin;
    s[(i + 1, i)] = sin;
    s[(i + 1, i + 1)] = cos;
    Ok(ElementMap::from_linear(s))
}

/// Pure-loss channel: coupling to a vacuum environment with loss `L`.
pub fn loss_channel(n_modes: usize, mode: usize, loss: LossSpec) -> Result<ElementMap> {
    check_mode(mode, n_modes)?;
    let mut map = ElementMap::identity(n_modes);
    let i = 2 * mode;
    let amp = loss.transmission().sqrt();
    for k in [i, i + 1] {
        map.linear[(k, k)] = amp;
        map.noise[(k, k)] = loss.value();
    }
    Ok(map)
}

pub fn qng_of(gain: PaGain) -> f64 {
    gain.qng()
}

/// Invert `G² + g² = 10^{dB/10}` using `G² = 1 + g²`.
pub fn gain_from_qng(qng_db: f64) -> Result<PaGain> {
    if !(qng_db >= 0.0) || !qng_db.is_finite() {
        return Err(Error::range("qng_db", qng_db, "[0, inf)"));
    }
    let g2 = (from_db(qng_db) - 1.0) / 2.0;
    PaGain::new(g2.max(0.0).sqrt())
}
