//! wasm-bindgen bindings behind the static demo page in `www/`.
//!
//! Every export is a thin wrapper over a plain function returning
//! `Result<_, String>`, so the numerics are testable on the host.

use wasm_bindgen::prelude::*;

use sisni_core::analysis::{loss_plane, slope_vs_theta, theta_grid, wigner_panel_auto, Range};
use sisni_core::elements::{gain_from_qng, LossSpec, PaGain};
use sisni_core::interferometer::{SisniParams, SqMziParams, Topology, DEFAULT_DPHI};

/// Largest loss on the demo's loss-plane axes.
pub const MAX_LOSS: f64 = 0.9;

/// Row-major samples over `[x_min, x_max] × [y_min, y_max]`, first row at `y_min`.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    rows: usize,
    cols: usize,
    x: (f64, f64),
    y: (f64, f64),
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Heatmap {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[wasm_bindgen(getter)]
    pub fn x_min(&self) -> f64 {
        self.x.0
    }

    #[wasm_bindgen(getter)]
    pub fn x_max(&self) -> f64 {
        self.x.1
    }

    #[wasm_bindgen(getter)]
    pub fn y_min(&self) -> f64 {
        self.y.0
    }

    #[wasm_bindgen(getter)]
    pub fn y_max(&self) -> f64 {
        self.y.1
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

fn topology(kind: &str, qng_db: f64, internal: f64, external: f64, alpha2: f64) -> Result<Topology, String> {
    let err = |e: sisni_core::Error| e.to_string();
    if !(alpha2 >= 0.0) {
        return Err(format!("|alpha|^2 = {alpha2} must be non-negative"));
    }
    let alpha = alpha2.sqrt();
    let internal = LossSpec::new(internal).map_err(err)?;
    let external = LossSpec::new(external).map_err(err)?;
    let topo = match kind {
        "mzi" | "sq-mzi" => Topology::SqMzi(SqMziParams {
            squeezer: if kind == "mzi" { PaGain::OFF } else { gain_from_qng(qng_db).map_err(err)? },
            internal,
            external,
            alpha,
            ..SqMziParams::default()
        }),
        "sisni" => {
            let gain = gain_from_qng(qng_db).map_err(err)?;
            Topology::Sisni(SisniParams {
                pa1: gain,
                pa2: gain,
                loss_signal: internal,
                loss_idler: internal,
                loss_external: external,
                alpha,
                ..SisniParams::default()
            })
        }
        other => return Err(format!("unknown topology {other:?}; expected mzi, sq-mzi or sisni")),
    };
    topo.validate().map_err(err)?;
    Ok(topo)
}

/// Advantage in dB over the plain MZI on an `n × n` loss plane from 0 to
/// [`MAX_LOSS`]; rows are internal loss, columns external. Negative is better.
pub fn plane(kind: &str, qng_db: f64, n: usize) -> Result<Heatmap, String> {
    let axis = Range::new(0.0, MAX_LOSS, n).map_err(|e| e.to_string())?;
    let topo = topology(kind, qng_db, 0.0, 0.0, 1.0)?;
    let grid = loss_plane(&topo, axis, axis).map_err(|e| e.to_string())?;
    Ok(Heatmap {
        rows: n,
        cols: n,
        x: (0.0, MAX_LOSS),
        y: (0.0, MAX_LOSS),
        values: grid.values,
    })
}

/// Mean-signal slope at `count` homodyne angles evenly covering `[0, 2π)`.
pub fn slope(kind: &str, qng_db: f64, internal: f64, external: f64, alpha2: f64, count: usize) -> Result<Vec<f64>, String> {
    let topo = topology(kind, qng_db, internal, external, alpha2)?;
    let points = slope_vs_theta(&topo, &theta_grid(count), DEFAULT_DPHI).map_err(|e| e.to_string())?;
    Ok(points.into_iter().map(|p| p.slope).collect())
}

/// Wigner density of the detected mode at phase `phi`, on a grid of spacing
/// `step` wide enough to hold the whole state.
pub fn wigner(kind: &str, qng_db: f64, phi: f64, external: f64, alpha2: f64, step: f64) -> Result<Heatmap, String> {
    let topo = topology(kind, qng_db, 0.0, 0.0, alpha2)?;
    let (grid, mut slices) = wigner_panel_auto(&topo, &[phi], &[external], step).map_err(|e| e.to_string())?;
    let slice = slices.pop().expect("one phase and one loss give one slice");
    Ok(Heatmap {
        rows: grid.p.count,
        cols: grid.x.count,
        x: (grid.x.start, grid.x.stop),
        y: (grid.p.start, grid.p.stop),
        values: slice.density,
    })
}

#[wasm_bindgen]
pub fn loss_plane_heatmap(kind: &str, qng_db: f64, n: usize) -> Result<Heatmap, JsError> {
    plane(kind, qng_db, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn slope_curve(
    kind: &str,
    qng_db: f64,
    internal: f64,
    external: f64,
    alpha2: f64,
    count: usize,
) -> Result<Vec<f64>, JsError> {
    slope(kind, qng_db, internal, external, alpha2, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn wigner_heatmap(
    kind: &str,
    qng_db: f64,
    phi: f64,
    external: f64,
    alpha2: f64,
    step: f64,
) -> Result<Heatmap, JsError> {
    wigner(kind, qng_db, phi, external, alpha2, step).map_err(|e| JsError::new(&e))
}
