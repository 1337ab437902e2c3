//! Declarative circuit documents (`"schema": "gicirc/1"`).
//!
//! ```json
//! {
//!   "schema": "gicirc/1",
//!   "n_modes": 2,
//!   "inputs": [{"type": "vacuum"}, {"type": "coherent", "re": 6.0}],
//!   "elements": [
//!     {"type": "bs", "modes": [0, 1]},
//!     {"type": "phase", "mode": 1, "phi": 3.141592653589793, "signal": true},
//!     {"type": "bs", "modes": [0, 1]},
//!     {"type": "loss", "mode": 0, "L": 0.15}
//!   ],
//!   "detect": {"mode": 0}
//! }
//! ```
//!
//! Unknown keys are rejected. Omitted defaults (`T = 0.5`, beamsplitter
//! convention `paper_mzi`, `theta = π/2`, `signal = false`, `im = 0`) are
//! written back out when the circuit is serialized.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::elements::{
    beamsplitter, loss_channel, parametric_amplifier, phase_shift, single_mode_squeezer, BsConvention, LossSpec,
    PaGain,
};
use crate::error::{Error, Result};
use crate::gaussian::{affine, apply, make_state, quadrature_stats, ElementMap, GaussianState, Preparation};
use crate::interferometer::OutputReport;
use crate::noise::{noisy_pa, NoisyPaParams};

pub const SCHEMA: &str = "gicirc/1";

fn half() -> f64 {
    0.5
}

fn phase_quadrature() -> f64 {
    FRAC_PI_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Element {
    Pa {
        modes: [usize; 2],
        g: f64,
    },
    SingleModeSqueezer {
        mode: usize,
        g: f64,
    },
    Bs {
        modes: [usize; 2],
        #[serde(rename = "T", default = "half")]
        t: f64,
        #[serde(default)]
        convention: BsConvention,
    },
    Phase {
        mode: usize,
        phi: f64,
        /// Marks the interferometer phase probed by the signal excursion.
        #[serde(default)]
        signal: bool,
    },
    Loss {
        mode: usize,
        #[serde(rename = "L")]
        loss: f64,
    },
    NoisyPa {
        modes: [usize; 2],
        rho: f64,
        kappa: f64,
        epsilon2: f64,
    },
}

impl Element {
    pub fn to_map(&self, n_modes: usize) -> Result<ElementMap> {
        match *self {
            Element::Pa { modes, g } => parametric_amplifier(n_modes, (modes[0], modes[1]), PaGain::new(g)?),
            Element::SingleModeSqueezer { mode, g } => single_mode_squeezer(n_modes, mode, PaGain::new(g)?),
            Element::Bs { modes, t, convention } => beamsplitter(n_modes, (modes[0], modes[1]), t, convention),
            Element::Phase { mode, phi, .. } => phase_shift(n_modes, mode, phi),
            Element::Loss { mode, loss } => loss_channel(n_modes, mode, LossSpec::new(loss)?),
            Element::NoisyPa {
                modes,
                rho,
                kappa,
                epsilon2,
            } => noisy_pa(n_modes, (modes[0], modes[1]), &NoisyPaParams { rho, kappa, epsilon2 }),
        }
    }

    fn is_signal(&self) -> bool {
        matches!(self, Element::Phase { signal: true, .. })
    }

    /// Copy with the phase of a phase element shifted by `offset`.
    fn shifted(&self, offset: f64) -> Element {
        match *self {
            Element::Phase { mode, phi, signal } => Element::Phase {
                mode,
                phi: phi + offset,
                signal,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detect {
    pub mode: usize,
    #[serde(default = "phase_quadrature")]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub schema: String,
    pub n_modes: usize,
    pub inputs: Vec<Preparation>,
    #[serde(default)]
    pub elements: Vec<Element>,
    pub detect: Detect,
}

fn element_error(index: usize, err: Error) -> Error {
    let message = match err {
        Error::Range { name, range, .. } => format!("{name} outside {range}"),
        Error::ModeIndex { index: m, n_modes } => format!("mode {m} out of range for {n_modes} modes"),
        other => other.to_string(),
    };
    Error::Element { index, message }
}

impl CircuitSpec {
    pub fn new(n_modes: usize, inputs: Vec<Preparation>, elements: Vec<Element>, detect: Detect) -> Result<Self> {
        let spec = Self {
            schema: SCHEMA.to_string(),
            n_modes,
            inputs,
            elements,
            detect,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::Invalid(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                self.schema
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::Invalid("n_modes must be at least 1".into()));
        }
        if self.inputs.len() != self.n_modes {
            return Err(Error::Arity {
                what: "input preparations",
                expected: self.n_modes,
                got: self.inputs.len(),
            });
        }
        for (k, prep) in self.inputs.iter().enumerate() {
            prep.validate()
                .map_err(|e| Error::Invalid(format!("input {k}: {e}")))?;
        }
        for (index, el) in self.elements.iter().enumerate() {
            el.to_map(self.n_modes).map_err(|e| element_error(index, e))?;
        }
        if self.detect.mode >= self.n_modes {
            return Err(Error::Invalid(format!(
                "detect mode {} out of range for {} modes",
                self.detect.mode, self.n_modes
            )));
        }
        if !self.detect.theta.is_finite() {
            return Err(Error::Invalid("detect theta must be finite".into()));
        }
        Ok(())
    }

    /// Propagate the input state through every element.
    pub fn simulate(&self) -> Result<GaussianState> {
        self.simulate_with_offset(0.0)
    }

    /// Propagate with every signal phase shifted by `offset`.
    pub fn simulate_with_offset(&self, offset: f64) -> Result<GaussianState> {
        let mut state = make_state(self.n_modes, &self.inputs)?;
        for (index, el) in self.elements.iter().enumerate() {
            let el = if el.is_signal() { el.shifted(offset) } else { *el };
            let map = el.to_map(self.n_modes).map_err(|e| element_error(index, e))?;
            state = apply(&state, &map)?;
        }
        Ok(state)
    }

    pub fn has_signal_phase(&self) -> bool {
        self.elements.iter().any(Element::is_signal)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit specs always serialize")
    }
}

/// Parse and validate a circuit document.
pub fn parse_circuit(text: &str) -> Result<CircuitSpec> {
    let spec: CircuitSpec = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    spec.validate()?;
    Ok(spec)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Report at the detect block of `spec`: the signal is the symmetric
/// difference `[⟨X⟩(φ₀ + δ) − ⟨X⟩(φ₀ − δ)]/2` over the signal phases, the
/// noise is the variance at `φ₀`.
pub fn engine_report(spec: &CircuitSpec, dphi: f64) -> Result<OutputReport> {
    engine_report_at(spec, dphi, spec.detect.mode)
}

/// As [`engine_report`] but detecting `mode` at the circuit's `theta`.
pub fn engine_report_at(spec: &CircuitSpec, dphi: f64, mode: usize) -> Result<OutputReport> {
    if !spec.has_signal_phase() {
        return Err(Error::Invalid("circuit has no phase element with \"signal\": true".into()));
    }
    let mut trace = EngineTrace::start(spec.n_modes, &spec.inputs, dphi)?;
    for (index, el) in spec.elements.iter().enumerate() {
        trace.push(el).map_err(|e| element_error(index, e))?;
    }
    trace.report(mode, spec.detect.theta)
}

/// Engine state part-way along an element chain: the state at the set
/// point plus the half-sum and half-difference of the means at `±dphi`.
/// Tracking the half-difference directly keeps the signal from coming out
/// of a subtraction of two nearly equal large numbers.
///
/// Traces can be cloned to share a common prefix between chains.
#[derive(Debug, Clone)]
pub struct EngineTrace {
    nominal: GaussianState,
    sum: DVector<f64>,
    diff: DVector<f64>,
    dphi: f64,
    signal_seen: bool,
}

impl EngineTrace {
    pub fn start(n_modes: usize, inputs: &[Preparation], dphi: f64) -> Result<Self> {
        if !(dphi > 0.0) || !dphi.is_finite() {
            return Err(Error::range("dphi", dphi, "(0, inf)"));
        }
        let nominal = make_state(n_modes, inputs)?;
        let sum = nominal.mean().clone();
        Ok(Self {
            diff: DVector::zeros(sum.len()),
            sum,
            nominal,
            dphi,
            signal_seen: false,
        })
    }

    pub fn push(&mut self, el: &Element) -> Result<()> {
        let map = el.to_map(self.nominal.n_modes())?;
        self.nominal = apply(&self.nominal, &map)?;
        match *el {
            Element::Phase { mode, phi, signal: true } => {
                let (sin_d, cos_d) = self.dphi.sin_cos();
                let (sin, cos) = phi.sin_cos();
                let i = 2 * mode;
                let (sx, sp, dx, dp) = (self.sum[i], self.sum[i + 1], self.diff[i], self.diff[i + 1]);
                // ½[R(φ+δ) ± R(φ−δ)] = cos δ·R(φ), sin δ·R(φ + π/2); on the
                // other modes the half-difference of two identities vanishes
                let rot = |x: f64, p: f64| (cos * x - sin * p, sin * x + cos * p);
                let drot = |x: f64, p: f64| (-sin * x - cos * p, cos * x - sin * p);
                let (a, b) = rot(sx, sp);
                let (c, d) = drot(dx, dp);
                let (e, f) = rot(dx, dp);
                let (g, h) = drot(sx, sp);
                self.sum[i] = cos_d * a + sin_d * c;
                self.sum[i + 1] = cos_d * b + sin_d * d;
                self.diff[i] = cos_d * e + sin_d * g;
                self.diff[i + 1] = cos_d * f + sin_d * h;
                self.signal_seen = true;
            }
            _ => {
                self.sum = affine(&map.linear, &self.sum, &map.displacement);
                if self.signal_seen {
                    self.diff = affine(&map.linear, &self.diff, &DVector::zeros(self.diff.len()));
                }
            }
        }
        Ok(())
    }

    pub fn state(&self) -> &GaussianState {
        &self.nominal
    }

    pub fn report(&self, mode: usize, theta: f64) -> Result<OutputReport> {
        if !self.signal_seen {
            return Err(Error::Invalid("no signal phase has been applied".into()));
        }
        let nominal = quadrature_stats(&self.nominal, mode, theta)?;
        let (sin, cos) = theta.sin_cos();
        let mean_x2 = cos * self.diff[2 * mode] + sin * self.diff[2 * mode + 1];
        let snr = mean_x2 * mean_x2 / nominal.variance;
        Ok(OutputReport {
            mean_x2,
            var_x2: nominal.variance,
            snr,
            phase_variance: self.dphi * self.dphi / snr,
            detected_mode: mode,
        })
    }
}
