use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sisni_core::analysis::{SlopePoint, SweepGrid, WignerGrid, WignerSlice};
use sisni_core::circuit::CircuitSpec;
use sisni_core::fit::{AdvantageDatum, FitResult};
use sisni_core::gaussian::QuadratureStats;
use sisni_core::interferometer::OutputReport;
use sisni_core::noise::AdvantagePoint;

use crate::args::Command;

pub const SCHEMA_VERSION: &str = "sisni-result/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub schema_version: String,
    pub command: CommandEcho,
    pub outputs: Outputs,
    pub provenance: Provenance,
}

/// The parsed command plus any file inputs it read, so the hash covers
/// content rather than paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub args: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<AdvantageDatum>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the serialized command echo, with input paths blanked.
    pub param_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outputs {
    State {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
        detected: QuadratureStats,
    },
    Report {
        engine: OutputReport,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        closed: Option<OutputReport>,
        /// SNR gain over the plain MZI with the same `|α|` and losses.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snr_gain_db: Option<f64>,
    },
    Grid(SweepGrid),
    Slope {
        points: Vec<SlopePoint>,
    },
    Densities {
        grid: WignerGrid,
        slices: Vec<WignerSlice>,
    },
    AdvantageCurve {
        qng1_db: f64,
        points: Vec<AdvantagePoint>,
    },
    Fit(FitResult),
}

impl ResultDoc {
    pub fn new(command: CommandEcho, outputs: Outputs) -> Self {
        let mut hashed = command.clone();
        hashed.args.clear_paths();
        let echo = serde_json::to_vec(&hashed).expect("command echo always serializes");
        let param_hash = format!("{:x}", Sha256::digest(&echo));
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command,
            outputs,
            provenance: Provenance {
                param_hash,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("result documents always serialize");
        text.push('\n');
        text
    }
}
