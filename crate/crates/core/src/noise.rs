//! Lossy parametric amplifier with thermal auxiliary modes.
//!
//! The amplifier acts as
//!
//! ```text
//! ĉ = Ḡ b̂ + ḡ â† + Ḡ′ b̂₀ + ḡ′ â₀†
//! d̂ = Ḡ â + ḡ b̂† + Ḡ′ â₀ + ḡ′ b̂₀†
//! ```
//!
//! where `â₀, b̂₀` are thermal with quadrature variance `ε² ≥ 1`. Loss and
//! gain enter through `ρ` and `κ`:
//!
//! ```text
//! M  = (1 + ρ)²/4 − κ²
//! Ḡ  = [(1 − ρ²)/4 + κ²]/M      ḡ  = κ/M
//! Ḡ′ = √ρ (1 + ρ)/(2M)          ḡ′ = κ √ρ/M
//! ```

use serde::{Deserialize, Serialize};

use crate::circuit::{engine_report, Element, EngineTrace};
use crate::elements::{check_pair, embed_pair, from_db, to_db, two_mode_block, LossSpec};
use crate::error::{Error, Result};
use crate::gaussian::ElementMap;
use crate::interferometer::{build_sisni_with, build_sq_mzi, PaStage, SisniParams, SqMziParams};

/// Finite-difference step used when the engine evaluates SNR ratios.
const RATIO_DPHI: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyPaParams {
    pub rho: f64,
    pub kappa: f64,
    pub epsilon2: f64,
}

/// `(Ḡ, ḡ, Ḡ′, ḡ′)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingFactors {
    pub gbar: f64,
    pub gbar_small: f64,
    pub gbar_aux: f64,
    pub gbar_aux_small: f64,
}

impl CouplingFactors {
    /// `Ḡ² − ḡ² + Ḡ′² − ḡ′²`, which is 1 for every stable `(ρ, κ)`.
    pub fn commutator(&self) -> f64 {
        self.gbar * self.gbar - self.gbar_small * self.gbar_small + self.gbar_aux * self.gbar_aux
            - self.gbar_aux_small * self.gbar_aux_small
    }

    /// Output noise for vacuum signal inputs and auxiliaries of variance `epsilon2`.
    pub fn qng(&self, epsilon2: f64) -> f64 {
        self.gbar * self.gbar
            + self.gbar_small * self.gbar_small
            + epsilon2 * (self.gbar_aux * self.gbar_aux + self.gbar_aux_small * self.gbar_aux_small)
    }
}

impl NoisyPaParams {
    pub fn new(rho: f64, kappa: f64, epsilon2: f64) -> Result<Self> {
        let p = Self { rho, kappa, epsilon2 };
        p.validate()?;
        Ok(p)
    }

    pub fn stability(&self) -> f64 {
        stability(self.rho, self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::range("rho", self.rho, "[0, inf)"));
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::range("kappa", self.kappa, "[0, inf)"));
        }
        if !(self.epsilon2 >= 1.0) || !self.epsilon2.is_finite() {
            return Err(Error::range("epsilon2", self.epsilon2, "[1, inf)"));
        }
        let m = self.stability();
        if !(m > 0.0) {
            return Err(Error::Unstable {
                rho: self.rho,
                kappa: self.kappa,
                m,
            });
        }
        Ok(())
    }

    pub fn qng(&self) -> Result<f64> {
        Ok(coupling_factors(self)?.qng(self.epsilon2))
    }
}

pub fn coupling_factors(params: &NoisyPaParams) -> Result<CouplingFactors> {
    params.validate()?;
    Ok(factors_unchecked(params.rho, params.kappa))
}

fn stability(rho: f64, kappa: f64) -> f64 {
    (1.0 + rho).powi(2) / 4.0 - kappa * kappa
}

fn factors_unchecked(rho: f64, kappa: f64) -> CouplingFactors {
    let m = stability(rho, kappa);
    let sr = rho.sqrt();
    CouplingFactors {
        gbar: ((1.0 - rho * rho) / 4.0 + kappa * kappa) / m,
        gbar_small: kappa / m,
        gbar_aux: sr * (1.0 + rho) / (2.0 * m),
        gbar_aux_small: kappa * sr / m,
    }
}

/// Noisy two-mode amplifier on `pair`, with the auxiliary modes traced out.
/// The linear part has the ideal-amplifier form with `(Ḡ, ḡ)`; the
/// auxiliaries add `ε² B Bᵀ` where `B` has the same form with `(Ḡ′, ḡ′)`.
pub fn noisy_pa(n_modes: usize, pair: (usize, usize), params: &NoisyPaParams) -> Result<ElementMap> {
    check_pair(pair, n_modes)?;
    let f = coupling_factors(params)?;
    let linear = embed_pair(n_modes, pair, &two_mode_block(f.gbar, f.gbar_small), 1.0);
    // B·Bᵀ of the amplifier block is again an amplifier block
    let (ga, gs) = (f.gbar_aux, f.gbar_aux_small);
    let gram = two_mode_block(params.epsilon2 * (ga * ga + gs * gs), params.epsilon2 * 2.0 * ga * gs);
    let noise = embed_pair(n_modes, pair, &gram, 0.0);
    let mut map = ElementMap::from_linear(linear);
    map.noise = noise;
    Ok(map)
}

/// Solve `QNG(κ) = 10^{dB/10}` for `κ ∈ [0, (1 + ρ)/2)` by bisection.
/// `QNG` is strictly increasing in `κ` and diverges at the pole.
pub fn kappa_from_qng(qng_db: f64, rho: f64, epsilon2: f64) -> Result<f64> {
    if !(qng_db >= 0.0) || !qng_db.is_finite() {
        return Err(Error::range("qng_db", qng_db, "[0, inf)"));
    }
    NoisyPaParams::new(rho, 0.0, epsilon2)?;
    let target = from_db(qng_db);
    let qng = |kappa: f64| factors_unchecked(rho, kappa).qng(epsilon2);
    let floor = qng(0.0);
    if floor >= target {
        if floor - target <= 1e-12 * target {
            return Ok(0.0);
        }
        return Err(Error::NoSolution(format!(
            "QNG {qng_db} dB is below the κ = 0 floor {:.6} dB for rho = {rho}, epsilon2 = {epsilon2}",
            to_db(floor)
        )));
    }
    let (mut lo, mut hi) = (0.0, (1.0 + rho) / 2.0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if qng(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` may still be the pole; `lo` is always a stable point
    let lo_err = (qng(lo) - target).abs();
    if hi < (1.0 + rho) / 2.0 && (qng(hi) - target).abs() < lo_err {
        Ok(hi)
    } else {
        Ok(lo)
    }
}

/// Noise parameters of one amplifier; `κ` is fixed later by the target QNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaNoise {
    pub rho: f64,
    pub epsilon2: f64,
}

impl PaNoise {
    pub const IDEAL: PaNoise = PaNoise { rho: 0.0, epsilon2: 1.0 };

    pub fn at_qng(&self, qng_db: f64) -> Result<NoisyPaParams> {
        let kappa = kappa_from_qng(qng_db, self.rho, self.epsilon2)?;
        NoisyPaParams::new(self.rho, kappa, self.epsilon2)
    }
}

/// Internal signal, internal idler and external loss of the nested interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SisniLosses {
    pub signal: LossSpec,
    pub idler: LossSpec,
    pub external: LossSpec,
}

impl SisniLosses {
    pub fn new(signal: f64, idler: f64, external: f64) -> Result<Self> {
        Ok(Self {
            signal: LossSpec::new(signal)?,
            idler: LossSpec::new(idler)?,
            external: LossSpec::new(external)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantagePoint {
    pub qng2_db: f64,
    pub advantage_db: f64,
}

/// Engine SNR of the plain MZI baseline at equal input power and losses.
fn baseline_snr(losses: &SisniLosses) -> Result<f64> {
    let sql = SqMziParams {
        internal: losses.signal,
        external: losses.external,
        ..SqMziParams::default()
    };
    let (spec, _) = build_sq_mzi(&sql)?;
    Ok(engine_report(&spec, RATIO_DPHI)?.snr)
}

/// SNR advantage in dB of the nested interferometer with noisy amplifiers
/// over the plain MZI, for each QNG₂ in `qng2_grid`. Positive is better.
pub fn advantage_vs_qng(
    qng1_db: f64,
    qng2_grid: &[f64],
    losses: &SisniLosses,
    noise1: &PaNoise,
    noise2: &PaNoise,
) -> Result<Vec<AdvantagePoint>> {
    let pa1 = noise1.at_qng(qng1_db)?;
    let sql = baseline_snr(losses)?;
    let params = SisniParams {
        loss_signal: losses.signal,
        loss_idler: losses.idler,
        loss_external: losses.external,
        ..SisniParams::default()
    };
    // PA₂ is a placeholder here; everything ahead of it is traced once and
    // shared by every grid point
    let (spec, mode) = build_sisni_with(&params, PaStage::Noisy(pa1), PaStage::Noisy(pa1))?;
    let split = spec
        .elements
        .iter()
        .rposition(|el| matches!(el, Element::NoisyPa { .. }))
        .expect("the nested interferometer ends with PA2 and the external loss");
    let mut prefix = EngineTrace::start(spec.n_modes, &spec.inputs, RATIO_DPHI)?;
    for el in &spec.elements[..split] {
        prefix.push(el)?;
    }
    qng2_grid
        .iter()
        .map(|&qng2_db| {
            let pa2 = noise2.at_qng(qng2_db)?;
            let mut trace = prefix.clone();
            trace.push(&PaStage::Noisy(pa2).element([0, 1]))?;
            for el in &spec.elements[split + 1..] {
                trace.push(el)?;
            }
            let snr = trace.report(mode, spec.detect.theta)?.snr;
            Ok(AdvantagePoint {
                qng2_db,
                advantage_db: to_db(snr / sql),
            })
        })
        .collect()
}

/// Advantage at a single `(QNG₁, QNG₂)` pair.
pub fn advantage_at(
    qng1_db: f64,
    qng2_db: f64,
    losses: &SisniLosses,
    noise1: &PaNoise,
    noise2: &PaNoise,
) -> Result<f64> {
    Ok(advantage_vs_qng(qng1_db, &[qng2_db], losses, noise1, noise2)?[0].advantage_db)
}
