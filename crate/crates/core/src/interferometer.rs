//! Built-in topologies: the squeezed-light MZI (plain MZI when the squeezer
//! is off) and the SU(2)-in-SU(1,1) nested interferometer (SISNI).
//!
//! Both are operated at the dark fringe `φ = π`. The detected observable is
//! the phase quadrature `X₂` of output mode 0.
//!
//! Mode layouts:
//!
//! | topology | mode 0                   | mode 1           | mode 2          |
//! |----------|--------------------------|------------------|-----------------|
//! | SQ-MZI   | squeezed dark input `â`  | bright input `Â` |                 |
//! | SISNI    | PA₁ signal `â`           | PA₁ idler `b̂`    | bright input `Â`|

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::circuit::{engine_report, CircuitSpec, Detect, Element};
use crate::elements::{BsConvention, LossSpec, PaGain};
use crate::error::{check_range, Error, Result};
use crate::gaussian::Preparation;
use crate::noise::NoisyPaParams;

/// Dark-fringe set point of the interferometer phase.
pub const DARK_FRINGE: f64 = PI;

/// Default symmetric-difference step for engine signals.
pub const DEFAULT_DPHI: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqMziParams {
    /// Dark-port squeezer; off gives the plain MZI.
    pub squeezer: PaGain,
    pub internal: LossSpec,
    pub external: LossSpec,
    /// Bright-port amplitude `|α|`.
    pub alpha: f64,
    pub phi: f64,
    pub transmission: f64,
}

impl Default for SqMziParams {
    fn default() -> Self {
        Self {
            squeezer: PaGain::OFF,
            internal: LossSpec::NONE,
            external: LossSpec::NONE,
            alpha: 1.0,
            phi: DARK_FRINGE,
            transmission: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SisniParams {
    pub pa1: PaGain,
    pub pa2: PaGain,
    pub loss_signal: LossSpec,
    pub loss_idler: LossSpec,
    pub loss_external: LossSpec,
    pub alpha: f64,
    pub phi_signal: f64,
    /// Relative phase of the two amplifiers; `π` is minimum net amplification.
    pub phi_pump: f64,
    pub transmission: f64,
}

impl Default for SisniParams {
    fn default() -> Self {
        Self {
            pa1: PaGain::OFF,
            pa2: PaGain::OFF,
            loss_signal: LossSpec::NONE,
            loss_idler: LossSpec::NONE,
            loss_external: LossSpec::NONE,
            alpha: 1.0,
            phi_signal: DARK_FRINGE,
            phi_pump: PI,
            transmission: 0.5,
        }
    }
}

fn check_common(alpha: f64, phases: &[(&'static str, f64)], t: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::range("alpha", alpha, "[0, inf)"));
    }
    for &(name, phi) in phases {
        if !phi.is_finite() {
            return Err(Error::range(name, phi, "(-inf, inf)"));
        }
    }
    check_range("T", t, 0.0, 1.0, "[0,1]")?;
    Ok(())
}

impl SqMziParams {
    pub fn validate(&self) -> Result<()> {
        check_common(self.alpha, &[("phi", self.phi)], self.transmission)
    }

    /// `η = (1 − L_i)(1 − L_e)`.
    pub fn efficiency(&self) -> f64 {
        self.internal.transmission() * self.external.transmission()
    }

    /// Closed-form dark-fringe variance `η(G + g)⁻² + L_i(1 − L_e) + L_e`.
    pub fn variance_closed(&self) -> f64 {
        self.efficiency() / self.squeezer.squeezing()
            + self.internal.value() * self.external.transmission()
            + self.external.value()
    }

    /// `∂⟨X₂⟩/∂φ = −√η |α|`.
    pub fn slope_closed(&self) -> f64 {
        -self.efficiency().sqrt() * self.alpha
    }
}

impl SisniParams {
    pub fn validate(&self) -> Result<()> {
        check_common(
            self.alpha,
            &[("phi_signal", self.phi_signal), ("phi_pump", self.phi_pump)],
            self.transmission,
        )
    }

    /// `(η_s, η_i)`.
    pub fn efficiencies(&self) -> (f64, f64) {
        let ext = self.loss_external.transmission();
        (self.loss_signal.transmission() * ext, self.loss_idler.transmission() * ext)
    }

    /// Closed-form dark-fringe variance at `φ_pump = π`:
    /// `L + (√η_s G₁G₂ − √η_i g₁g₂)² + (√η_s g₁G₂ − √η_i G₁g₂)²` with
    /// `L = L_e + g₂²(1 − L_e)L_ii + G₂²(1 − L_e)L_is`.
    pub fn variance_closed(&self) -> f64 {
        let (eta_s, eta_i) = self.efficiencies();
        let (big1, small1) = (self.pa1.amplification(), self.pa1.small());
        let (big2, small2) = (self.pa2.amplification(), self.pa2.small());
        let le = self.loss_external.value();
        let l = le
            + small2 * small2 * (1.0 - le) * self.loss_idler.value()
            + big2 * big2 * (1.0 - le) * self.loss_signal.value();
        let (ss, si) = (eta_s.sqrt(), eta_i.sqrt());
        let a = ss * big1 * big2 - si * small1 * small2;
        let b = ss * small1 * big2 - si * big1 * small2;
        l + a * a + b * b
    }

    /// `∂⟨X₂⟩/∂φ = −√η_s G₂ |α|`.
    pub fn slope_closed(&self) -> f64 {
        -self.efficiencies().0.sqrt() * self.pa2.amplification() * self.alpha
    }
}

/// Amplifier model used for each PA of the nested interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaStage {
    Ideal(PaGain),
    Noisy(NoisyPaParams),
}

impl PaStage {
    pub fn element(&self, modes: [usize; 2]) -> Element {
        match *self {
            PaStage::Ideal(gain) => Element::Pa { modes, g: gain.small() },
            PaStage::Noisy(p) => Element::NoisyPa {
                modes,
                rho: p.rho,
                kappa: p.kappa,
                epsilon2: p.epsilon2,
            },
        }
    }
}

fn bs(modes: [usize; 2], t: f64) -> Element {
    Element::Bs {
        modes,
        t,
        convention: BsConvention::PaperMzi,
    }
}

fn loss(mode: usize, l: LossSpec) -> Element {
    Element::Loss { mode, loss: l.value() }
}

/// Element chain of the squeezed-light MZI. Returns the circuit and the
/// detected mode.
pub fn build_sq_mzi(params: &SqMziParams) -> Result<(CircuitSpec, usize)> {
    params.validate()?;
    let elements = vec![
        Element::SingleModeSqueezer {
            mode: 0,
            g: params.squeezer.small(),
        },
        bs([0, 1], params.transmission),
        loss(0, params.internal),
        loss(1, params.internal),
        Element::Phase {
            mode: 1,
            phi: params.phi,
            signal: true,
        },
        bs([0, 1], params.transmission),
        loss(0, params.external),
    ];
    let spec = CircuitSpec::new(
        2,
        vec![
            Preparation::Vacuum,
            Preparation::Coherent { re: params.alpha, im: 0.0 },
        ],
        elements,
        Detect { mode: 0, theta: FRAC_PI_2 },
    )?;
    Ok((spec, 0))
}

pub fn build_sisni(params: &SisniParams) -> Result<(CircuitSpec, usize)> {
    build_sisni_with(params, PaStage::Ideal(params.pa1), PaStage::Ideal(params.pa2))
}

/// Nested interferometer with explicit amplifier models; the `pa1`/`pa2`
/// gains in `params` are ignored.
pub fn build_sisni_with(params: &SisniParams, pa1: PaStage, pa2: PaStage) -> Result<(CircuitSpec, usize)> {
    params.validate()?;
    let t = params.transmission;
    let elements = vec![
        pa1.element([0, 1]),
        // idler arm
        loss(1, params.loss_idler),
        Element::Phase {
            mode: 1,
            phi: params.phi_pump,
            signal: false,
        },
        // SU(2) interferometer on the signal arm
        bs([0, 2], t),
        loss(0, params.loss_signal),
        loss(2, params.loss_signal),
        Element::Phase {
            mode: 2,
            phi: params.phi_signal,
            signal: true,
        },
        bs([0, 2], t),
        pa2.element([0, 1]),
        loss(0, params.loss_external),
        loss(1, params.loss_external),
    ];
    let spec = CircuitSpec::new(
        3,
        vec![
            Preparation::Vacuum,
            Preparation::Vacuum,
            Preparation::Coherent { re: params.alpha, im: 0.0 },
        ],
        elements,
        Detect { mode: 0, theta: FRAC_PI_2 },
    )?;
    Ok((spec, 0))
}

/// Closed-form SNR of the squeezed-light MZI at the dark fringe.
pub fn snr_sq_mzi_closed(params: &SqMziParams, dphi: f64) -> f64 {
    params.efficiency() * dphi * dphi * params.alpha * params.alpha / params.variance_closed()
}

/// Closed-form SNR of the nested interferometer at the dark fringe with
/// `φ_pump = π`.
pub fn snr_sisni_closed(params: &SisniParams, dphi: f64) -> f64 {
    let (eta_s, _) = params.efficiencies();
    let big2 = params.pa2.amplification();
    eta_s * big2 * big2 * dphi * dphi * params.alpha * params.alpha / params.variance_closed()
}

/// Signal, noise and sensitivity at the detected port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    /// Mean signal `⟨ΔX⟩` for the phase excursion `dphi`.
    pub mean_x2: f64,
    pub var_x2: f64,
    /// Linear SNR `⟨ΔX⟩² / ⟨δX²⟩`.
    pub snr: f64,
    /// Phase variance `⟨δφ²⟩` in rad².
    pub phase_variance: f64,
    pub detected_mode: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case")]
pub enum Topology {
    SqMzi(SqMziParams),
    Sisni(SisniParams),
}

impl Topology {
    pub fn build(&self) -> Result<(CircuitSpec, usize)> {
        match self {
            Topology::SqMzi(p) => build_sq_mzi(p),
            Topology::Sisni(p) => build_sisni(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Topology::SqMzi(p) => p.validate(),
            Topology::Sisni(p) => p.validate(),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Topology::SqMzi(p) => p.alpha,
            Topology::Sisni(p) => p.alpha,
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Topology {
        match *self {
            Topology::SqMzi(p) => Topology::SqMzi(SqMziParams { alpha, ..p }),
            Topology::Sisni(p) => Topology::Sisni(SisniParams { alpha, ..p }),
        }
    }

    /// Same topology with the interferometer phase set to `phi`.
    pub fn with_phi(&self, phi: f64) -> Topology {
        match *self {
            Topology::SqMzi(p) => Topology::SqMzi(SqMziParams { phi, ..p }),
            Topology::Sisni(p) => Topology::Sisni(SisniParams { phi_signal: phi, ..p }),
        }
    }

    pub fn with_external_loss(&self, external: LossSpec) -> Topology {
        match *self {
            Topology::SqMzi(p) => Topology::SqMzi(SqMziParams { external, ..p }),
            Topology::Sisni(p) => Topology::Sisni(SisniParams {
                loss_external: external,
                ..p
            }),
        }
    }

    /// Plain MZI with the same `|α|`, the same external loss and internal
    /// loss `L_i` (or `L_is` for the nested interferometer).
    pub fn sql_baseline(&self) -> Topology {
        let (internal, external, alpha) = match self {
            Topology::SqMzi(p) => (p.internal, p.external, p.alpha),
            Topology::Sisni(p) => (p.loss_signal, p.loss_external, p.alpha),
        };
        Topology::SqMzi(SqMziParams {
            internal,
            external,
            alpha,
            ..SqMziParams::default()
        })
    }

    pub fn variance_closed(&self) -> f64 {
        match self {
            Topology::SqMzi(p) => p.variance_closed(),
            Topology::Sisni(p) => p.variance_closed(),
        }
    }

    pub fn slope_closed(&self) -> f64 {
        match self {
            Topology::SqMzi(p) => p.slope_closed(),
            Topology::Sisni(p) => p.slope_closed(),
        }
    }

    pub fn snr_closed(&self, dphi: f64) -> f64 {
        match self {
            Topology::SqMzi(p) => snr_sq_mzi_closed(p, dphi),
            Topology::Sisni(p) => snr_sisni_closed(p, dphi),
        }
    }

    /// Engine report from the element chain with a symmetric difference
    /// about the configured phase.
    pub fn engine_report(&self, dphi: f64) -> Result<OutputReport> {
        let (spec, _) = self.build()?;
        engine_report(&spec, dphi)
    }
}

/// Closed-form phase variance `⟨δφ²⟩ = variance / slope²`.
pub fn phase_variance_closed(topology: &Topology) -> Result<f64> {
    topology.validate()?;
    let slope = topology.slope_closed();
    if slope == 0.0 {
        return Err(Error::Degenerate(
            "zero mean-signal slope (alpha = 0 or full loss); phase variance undefined".into(),
        ));
    }
    Ok(topology.variance_closed() / (slope * slope))
}

/// Closed-form report for a phase excursion `dphi` about the dark fringe.
pub fn mean_signal_and_variance(topology: &Topology, dphi: f64) -> Result<OutputReport> {
    let phase_variance = phase_variance_closed(topology)?;
    let mean_x2 = topology.slope_closed() * dphi;
    let var_x2 = topology.variance_closed();
    Ok(OutputReport {
        mean_x2,
        var_x2,
        snr: mean_x2 * mean_x2 / var_x2,
        phase_variance,
        detected_mode: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::gain_from_qng;
    use approx::assert_relative_eq;

    fn l(v: f64) -> LossSpec {
        LossSpec::new(v).unwrap()
    }

    fn g(v: f64) -> PaGain {
        PaGain::new(v).unwrap()
    }

    #[test]
    fn plain_mzi_dark_output_is_vacuum() {
        let p = SqMziParams { alpha: 6.0, ..Default::default() };
        let r = Topology::SqMzi(p).engine_report(1e-3).unwrap();
        let (spec, mode) = build_sq_mzi(&p).unwrap();
        let state = spec.simulate().unwrap();
        assert!(state.mode_mean(mode).unwrap()[1].abs() < 1e-12);
        assert_relative_eq!(r.var_x2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_mzi_variance() {
        let p = SqMziParams { squeezer: g(0.75), alpha: 6.0, ..Default::default() };
        let r = Topology::SqMzi(p).engine_report(1e-3).unwrap();
        assert_relative_eq!(r.var_x2, 0.25, epsilon = 1e-12);
        assert_relative_eq!(p.variance_closed(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn sql_variance_identity() {
        let p = SqMziParams { internal: l(0.1), external: l(0.15), alpha: 3.0, ..Default::default() };
        let r = Topology::SqMzi(p).engine_report(1e-3).unwrap();
        assert_relative_eq!(r.var_x2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sisni_without_pumps_is_plain_mzi() {
        let s = SisniParams {
            loss_signal: l(0.2),
            loss_idler: l(0.3),
            loss_external: l(0.1),
            alpha: 4.0,
            ..Default::default()
        };
        let m = SqMziParams { internal: l(0.2), external: l(0.1), alpha: 4.0, ..Default::default() };
        let a = Topology::Sisni(s).engine_report(1e-3).unwrap();
        let b = Topology::SqMzi(m).engine_report(1e-3).unwrap();
        assert!((a.mean_x2 - b.mean_x2).abs() < 1e-12);
        assert!((a.var_x2 - b.var_x2).abs() < 1e-12);
        assert!((a.snr - b.snr).abs() < 1e-12 * b.snr);
    }

    #[test]
    fn lossless_sisni_matched_gains() {
        let gain = gain_from_qng(6.0).unwrap();
        let p = SisniParams { pa1: gain, pa2: gain, alpha: 6.0, ..Default::default() };
        let r = Topology::Sisni(p).engine_report(1e-4).unwrap();
        assert_relative_eq!(r.var_x2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.mean_x2 / 1e-4, -gain.amplification() * 6.0, max_relative = 1e-8);
        assert_relative_eq!(snr_sisni_closed(&p, 1e-3), gain.amplification().powi(2) * 1e-6 * 36.0, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_snr_cases() {
        let p = SqMziParams { alpha: 5.0, ..Default::default() };
        assert_relative_eq!(snr_sq_mzi_closed(&p, 0.01), 0.01f64.powi(2) * 25.0, max_relative = 1e-12);
        let sq = SqMziParams { squeezer: g(0.75), ..p };
        assert_relative_eq!(snr_sq_mzi_closed(&sq, 0.01), 4.0 * 0.01f64.powi(2) * 25.0, max_relative = 1e-12);
        let mut last = f64::INFINITY;
        for k in 0..=100 {
            let le = k as f64 / 100.0;
            let s = snr_sq_mzi_closed(&SqMziParams { external: l(le), ..sq }, 0.01);
            assert!(s <= last);
            last = s;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn external_loss_factor_for_matched_gains() {
        let gain = g(1.3);
        for k in 0..10 {
            let le = k as f64 / 10.0;
            let p = SisniParams { pa1: gain, pa2: gain, loss_external: l(le), alpha: 2.0, ..Default::default() };
            assert_relative_eq!(
                snr_sisni_closed(&p, 1e-3),
                (1.0 - le) * gain.amplification().powi(2) * 1e-6 * 4.0,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn phase_variance_forms() {
        let mzi = Topology::SqMzi(SqMziParams { alpha: 6.0, ..Default::default() });
        assert_relative_eq!(phase_variance_closed(&mzi).unwrap(), 1.0 / 36.0, max_relative = 1e-12);
        let gain = gain_from_qng(6.0).unwrap();
        let s = Topology::Sisni(SisniParams { pa1: gain, pa2: gain, alpha: 6.0, ..Default::default() });
        assert_relative_eq!(
            phase_variance_closed(&s).unwrap(),
            1.0 / (gain.amplification().powi(2) * 36.0),
            max_relative = 1e-12
        );
        let sq = Topology::SqMzi(SqMziParams { squeezer: g(0.75), alpha: 6.0, ..Default::default() });
        assert_relative_eq!(phase_variance_closed(&sq).unwrap(), 1.0 / (4.0 * 36.0), max_relative = 1e-12);
        let dark = Topology::SqMzi(SqMziParams { alpha: 0.0, ..Default::default() });
        assert!(matches!(phase_variance_closed(&dark), Err(Error::Degenerate(_))));
    }

    #[test]
    fn closed_mean_signal() {
        let gain = PaGain::new((1.578f64.powi(2) - 1.0).sqrt()).unwrap();
        let s = Topology::Sisni(SisniParams { pa1: gain, pa2: gain, alpha: 6.0, ..Default::default() });
        let r = mean_signal_and_variance(&s, 0.01).unwrap();
        assert_relative_eq!(r.mean_x2, -0.09468, epsilon = 1e-12);
        let m = Topology::SqMzi(SqMziParams { alpha: 6.0, ..Default::default() });
        assert_relative_eq!(mean_signal_and_variance(&m, 0.01).unwrap().mean_x2, -0.06, epsilon = 1e-15);
        assert_eq!(mean_signal_and_variance(&m, 0.0).unwrap().mean_x2, 0.0);
        let r = mean_signal_and_variance(&s, 1e-3).unwrap();
        assert_relative_eq!(r.snr, snr_sisni_closed(&match s { Topology::Sisni(p) => p, _ => unreachable!() }, 1e-3), max_relative = 1e-12);
        assert_relative_eq!(r.phase_variance, 1e-6 / r.snr, max_relative = 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(build_sq_mzi(&SqMziParams { alpha: -1.0, ..Default::default() }).is_err());
        assert!(build_sisni(&SisniParams { transmission: 1.2, ..Default::default() }).is_err());
    }
}
