use std::f64::consts::PI;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sisni_core::analysis::Range;
use sisni_core::elements::{gain_from_qng, LossSpec, PaGain};
use sisni_core::interferometer::{SisniParams, SqMziParams, Topology, DEFAULT_DPHI};
use sisni_core::noise::{PaNoise, SisniLosses};

use crate::error::CliError;

/// Gain used for every amplifier or squeezer whose gain is not given.
pub const DEFAULT_QNG_DB: f64 = 6.0;

/// Gaussian-state simulator for squeezed and nested interferometers.
///
/// Angles are radians, `-db` flags are decibels and losses are intensity
/// fractions. Ranges are `start:stop:count` with both endpoints included.
#[derive(Debug, Parser)]
#[command(name = "sisni", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the result here instead of stdout.
    #[arg(short = 'o', long, global = true, value_name = "FILE")]
    pub output: Option<String>,

    #[arg(long, global = true, value_enum, env = "SISNI_FORMAT", default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Propagate a circuit and print the output state.
    Simulate(RunArgs),
    /// Signal, noise, SNR and phase variance at the detected port.
    Snr(RunArgs),
    /// Advantage over the plain MZI across the internal/external loss plane.
    Sweep(SweepArgs),
    /// Mean-signal slope against the homodyne angle.
    Slope(SlopeArgs),
    /// Wigner densities of the detected mode.
    Wigner(WignerArgs),
    /// SNR advantage of the nested interferometer with noisy amplifiers.
    AdvantageCurve(CurveArgs),
    /// Fit the amplifier noise model to measured advantages.
    Fit(FitArgs),
}

impl Command {
    /// Forget where file inputs came from; their content is echoed separately.
    pub fn clear_paths(&mut self) {
        match self {
            Command::Simulate(a) | Command::Snr(a) => {
                if a.circuit.is_some() {
                    a.circuit = Some(String::new());
                }
            }
            Command::Fit(a) => a.data.clear(),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Mzi,
    SqMzi,
    Sisni,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long, value_enum, conflicts_with = "circuit", required_unless_present = "circuit")]
    pub topology: Option<TopologyKind>,

    /// Circuit document, or `-` for stdin.
    #[arg(long, value_name = "FILE|-")]
    pub circuit: Option<String>,

    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,

    /// Phase excursion for the signal.
    #[arg(long, default_value_t = DEFAULT_DPHI)]
    pub dphi: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct PhysicsArgs {
    /// Quantum noise gain of every amplifier (or the SQ-MZI squeezer).
    #[arg(long, conflicts_with = "g")]
    pub qng_db: Option<f64>,

    /// Quantum noise gain of the first amplifier.
    #[arg(long, conflicts_with = "g")]
    pub qng1_db: Option<f64>,

    /// Quantum noise gain of the second amplifier.
    #[arg(long, conflicts_with = "g")]
    pub qng2_db: Option<f64>,

    /// Raw gain `g` of every amplifier (or the squeezer).
    #[arg(long)]
    pub g: Option<f64>,

    /// Internal loss; for the nested interferometer both arms.
    #[arg(long)]
    pub l_i: Option<f64>,

    /// External (detection) loss.
    #[arg(long)]
    pub l_e: Option<f64>,

    /// Internal signal-arm loss of the nested interferometer.
    #[arg(long)]
    pub l_is: Option<f64>,

    /// Internal idler-arm loss of the nested interferometer.
    #[arg(long)]
    pub l_ii: Option<f64>,

    /// Mean photon number `|α|²` of the bright input.
    #[arg(long)]
    pub alpha2: Option<f64>,

    /// Interferometer phase; defaults to the dark fringe.
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub topology: TopologyKind,

    #[arg(long, value_name = "RANGE")]
    pub internal: Range,

    #[arg(long, value_name = "RANGE")]
    pub external: Range,

    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SlopeArgs {
    #[arg(long, value_enum)]
    pub topology: TopologyKind,

    /// Homodyne angles.
    #[arg(long, value_name = "RANGE", default_value = "0:6.283185307179586:361")]
    pub theta: Range,

    #[arg(long, default_value_t = DEFAULT_DPHI)]
    pub dphi: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WignerArgs {
    #[arg(long, value_enum)]
    pub topology: TopologyKind,

    /// Interferometer phases, one panel column each.
    #[arg(long, value_name = "RANGE", default_value = "3.141592653589793:3.141592653589793:1")]
    pub phis: Range,

    /// External losses, one panel row each; replaces `--l-e`.
    #[arg(long, value_name = "RANGE", default_value = "0:0:1")]
    pub external: Range,

    /// Phase-space grid spacing; the extent is chosen to cover every slice.
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct LossArgs {
    #[arg(long, default_value_t = 0.0)]
    pub l_is: f64,

    #[arg(long, default_value_t = 0.0)]
    pub l_ii: f64,

    #[arg(long, default_value_t = 0.0)]
    pub l_e: f64,
}

impl LossArgs {
    pub fn losses(&self) -> Result<SisniLosses, CliError> {
        Ok(SisniLosses::new(self.l_is, self.l_ii, self.l_e)?)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CurveArgs {
    #[arg(long, default_value_t = DEFAULT_QNG_DB)]
    pub qng1_db: f64,

    /// Quantum noise gains of the second amplifier.
    #[arg(long, value_name = "RANGE", default_value = "1:12:23")]
    pub qng2: Range,

    #[command(flatten)]
    #[serde(flatten)]
    pub losses: LossArgs,

    #[arg(long, default_value_t = 0.0)]
    pub rho1: f64,

    #[arg(long, default_value_t = 1.0)]
    pub eps1_sq: f64,

    #[arg(long, default_value_t = 0.0)]
    pub rho2: f64,

    #[arg(long, default_value_t = 1.0)]
    pub eps2_sq: f64,
}

impl CurveArgs {
    pub fn noise(&self) -> (PaNoise, PaNoise) {
        (
            PaNoise {
                rho: self.rho1,
                epsilon2: self.eps1_sq,
            },
            PaNoise {
                rho: self.rho2,
                epsilon2: self.eps2_sq,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with columns `qng1_db,qng2_db,advantage_db[,sigma_db]`, or `-`.
    #[arg(long, value_name = "FILE|-")]
    pub data: String,

    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    #[arg(long, default_value_t = 8)]
    pub restarts: usize,

    #[arg(long, default_value_t = 4000)]
    pub max_iterations: usize,

    #[command(flatten)]
    #[serde(flatten)]
    pub losses: LossArgs,
}

fn unused(kind: TopologyKind, flags: &[(&str, bool)]) -> Result<(), CliError> {
    match flags.iter().find(|(_, set)| *set) {
        Some((flag, _)) => Err(CliError::Usage(format!("{flag} does not apply to --topology {}", kind.name()))),
        None => Ok(()),
    }
}

fn gain(db: Option<f64>, g: Option<f64>) -> Result<PaGain, CliError> {
    Ok(match (db, g) {
        (_, Some(g)) => PaGain::new(g)?,
        (Some(db), None) => gain_from_qng(db)?,
        (None, None) => gain_from_qng(DEFAULT_QNG_DB)?,
    })
}

impl TopologyKind {
    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Mzi => "mzi",
            TopologyKind::SqMzi => "sq-mzi",
            TopologyKind::Sisni => "sisni",
        }
    }
}

impl PhysicsArgs {
    pub fn any_loss(&self) -> Option<&'static str> {
        [
            ("--l-i", self.l_i),
            ("--l-e", self.l_e),
            ("--l-is", self.l_is),
            ("--l-ii", self.l_ii),
        ]
        .into_iter()
        .find(|(_, v)| v.is_some())
        .map(|(flag, _)| flag)
    }

    /// Topology described by these flags; flags the topology has no use for
    /// are rejected rather than ignored.
    pub fn topology(&self, kind: TopologyKind) -> Result<Topology, CliError> {
        let alpha = match self.alpha2 {
            Some(a2) if a2 >= 0.0 => a2.sqrt(),
            Some(a2) => return Err(CliError::Usage(format!("--alpha2 = {a2} must be non-negative"))),
            None => 1.0,
        };
        let phi = self.phi.unwrap_or(PI);
        let loss = |l: Option<f64>| LossSpec::new(l.unwrap_or(0.0));
        let topology = match kind {
            TopologyKind::Mzi | TopologyKind::SqMzi => {
                unused(
                    kind,
                    &[
                        ("--qng1-db", self.qng1_db.is_some()),
                        ("--qng2-db", self.qng2_db.is_some()),
                        ("--l-is", self.l_is.is_some()),
                        ("--l-ii", self.l_ii.is_some()),
                    ],
                )?;
                let squeezer = if kind == TopologyKind::Mzi {
                    unused(
                        kind,
                        &[("--qng-db", self.qng_db.is_some()), ("--g", self.g.is_some())],
                    )?;
                    PaGain::OFF
                } else {
                    gain(self.qng_db, self.g)?
                };
                Topology::SqMzi(SqMziParams {
                    squeezer,
                    internal: loss(self.l_i)?,
                    external: loss(self.l_e)?,
                    alpha,
                    phi,
                    ..SqMziParams::default()
                })
            }
            TopologyKind::Sisni => Topology::Sisni(SisniParams {
                pa1: gain(self.qng1_db.or(self.qng_db), self.g)?,
                pa2: gain(self.qng2_db.or(self.qng_db), self.g)?,
                loss_signal: loss(self.l_is.or(self.l_i))?,
                loss_idler: loss(self.l_ii.or(self.l_i))?,
                loss_external: loss(self.l_e)?,
                alpha,
                phi_signal: phi,
                ..SisniParams::default()
            }),
        };
        topology.validate()?;
        Ok(topology)
    }
}
