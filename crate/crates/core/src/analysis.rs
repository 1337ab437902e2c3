//! Figure-level computations: loss-plane advantage maps, homodyne slope
//! curves, Wigner panels and SNR-vs-power fits.
//!
//! dB values are `10·log₁₀` of power-like ratios throughout. The
//! variance-ratio advantage is negative when the topology beats the SQL;
//! the SNR gain is its negation and positive when better.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elements::{to_db, LossSpec};
use crate::error::{check_range, Error, Result};
use crate::gaussian::{GaussianState, WignerMode};
use crate::interferometer::{phase_variance_closed, SisniParams, SqMziParams, Topology, DARK_FRINGE};

/// Inclusive linear range `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::Invalid(format!("range {start}:{stop} is not finite")));
        }
        if count == 0 {
            return Err(Error::Invalid("range count must be at least 1".into()));
        }
        if count == 1 && start != stop {
            return Err(Error::Invalid(format!(
                "range {start}:{stop}:1 has distinct endpoints but a single point"
            )));
        }
        Ok(Self { start, stop, count })
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count == 1 {
            return self.start;
        }
        if i + 1 == self.count {
            return self.stop;
        }
        self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.stop - self.start) / (self.count - 1) as f64
        }
    }
}

impl FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Invalid(format!("range {s:?} is not start:stop:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse::<f64>().map_err(|_| bad())?;
        let stop = parts[1].trim().parse::<f64>().map_err(|_| bad())?;
        let count = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        Range::new(start, stop, count)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub range: Range,
}

/// Row-major grid, `y.count` rows of `x.count` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.x_axis.range.count + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.x_axis.range.count;
        &self.values[row * n..(row + 1) * n]
    }
}

/// `10·log₁₀(⟨δφ²⟩ / ⟨δφ²⟩_SQL)`; negative means below the SQL.
pub fn advantage_db(topology: &Topology, baseline: &Topology) -> Result<f64> {
    Ok(to_db(phase_variance_closed(topology)? / phase_variance_closed(baseline)?))
}

/// `10·log₁₀(SNR / SNR_SQL)` at equal phase excursion; positive is better.
pub fn snr_gain_db(topology: &Topology, baseline: &Topology) -> Result<f64> {
    Ok(-advantage_db(topology, baseline)?)
}

/// Variance-ratio advantage over the loss plane. Columns sweep the external
/// loss, rows the internal loss (`L_i` for the SQ-MZI; `L_is` and `L_ii`
/// together for the nested interferometer). Gains and `|α|` come from
/// `fixed`; each cell is compared to its own [`Topology::sql_baseline`].
pub fn loss_plane(fixed: &Topology, internal: Range, external: Range) -> Result<SweepGrid> {
    for r in [&internal, &external] {
        for v in [r.start, r.stop] {
            check_range("loss", v, 0.0, 0.99, "[0, 0.99]")?;
        }
    }
    let mut values = Vec::with_capacity(internal.count * external.count);
    for li in internal.values() {
        for le in external.values() {
            let (li, le) = (LossSpec::new(li)?, LossSpec::new(le)?);
            let topo = match *fixed {
                Topology::SqMzi(p) => Topology::SqMzi(SqMziParams {
                    internal: li,
                    external: le,
                    ..p
                }),
                Topology::Sisni(p) => Topology::Sisni(SisniParams {
                    loss_signal: li,
                    loss_idler: li,
                    loss_external: le,
                    ..p
                }),
            };
            values.push(advantage_db(&topo, &topo.sql_baseline())?);
        }
    }
    Ok(SweepGrid {
        x_axis: Axis {
            name: "external_loss".into(),
            range: external,
        },
        y_axis: Axis {
            name: "internal_loss".into(),
            range: internal,
        },
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopePoint {
    pub theta: f64,
    pub slope: f64,
}

/// `d⟨X(θ)⟩/dφ` at the detected mode by symmetric difference about the
/// configured interferometer phase.
pub fn slope_vs_theta(topology: &Topology, thetas: &[f64], dphi: f64) -> Result<Vec<SlopePoint>> {
    if !(dphi > 0.0) {
        return Err(Error::range("dphi", dphi, "(0, inf)"));
    }
    let (spec, mode) = topology.build()?;
    let plus = spec.simulate_with_offset(dphi)?.mode_mean(mode)?;
    let minus = spec.simulate_with_offset(-dphi)?.mode_mean(mode)?;
    let dx = (plus[0] - minus[0]) / (2.0 * dphi);
    let dp = (plus[1] - minus[1]) / (2.0 * dphi);
    Ok(thetas
        .iter()
        .map(|&theta| SlopePoint {
            theta,
            slope: theta.cos() * dx + theta.sin() * dp,
        })
        .collect())
}

/// `count` angles evenly covering `[0, 2π)`.
pub fn theta_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / count as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x: Range,
    pub p: Range,
}

impl WignerGrid {
    pub fn square(half_width: f64, step: f64) -> Result<Self> {
        let count = (2.0 * half_width / step).round() as usize + 1;
        let r = Range::new(-half_width, half_width, count)?;
        Ok(Self { x: r, p: r })
    }

    /// Trapezoidal integral of row-major samples (`p` rows × `x` columns).
    pub fn integrate(&self, density: &[f64]) -> f64 {
        let (nx, np) = (self.x.count, self.p.count);
        let weight = |i: usize, n: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for j in 0..np {
            for i in 0..nx {
                total += weight(i, nx) * weight(j, np) * density[j * nx + i];
            }
        }
        total * self.x.step() * self.p.step()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSlice {
    pub phi: f64,
    pub external_loss: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
    /// Row-major, `p` rows × `x` columns.
    pub density: Vec<f64>,
}

pub fn wigner_slice(state: &GaussianState, mode: usize, grid: &WignerGrid) -> Result<Vec<f64>> {
    let w = WignerMode::new(state, mode)?;
    let xs = grid.x.values();
    Ok(grid
        .p
        .values()
        .into_iter()
        .flat_map(|p| xs.iter().map(move |&x| (x, p)).collect::<Vec<_>>())
        .map(|(x, p)| w.density(x, p))
        .collect())
}

/// Edge distance, in marginal standard deviations, a grid must keep from a
/// slice's mean; the mass outside is then below 1e-7.
const COVER_SIGMAS: f64 = 5.5;

fn eigen_range(cov: &[[f64; 2]; 2]) -> (f64, f64) {
    let half_trace = 0.5 * (cov[0][0] + cov[1][1]);
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let disc = (half_trace * half_trace - det).max(0.0).sqrt();
    (half_trace - disc, half_trace + disc)
}

impl WignerGrid {
    /// Smallest square grid, at least `[−12, 12]²`, on which every given
    /// `(mean, cov)` slice integrates to 1 within 1e-6.
    pub fn covering(slices: &[([f64; 2], [[f64; 2]; 2])], step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::range("step", step, "(0, inf)"));
        }
        let mut half: f64 = 12.0;
        for (mean, cov) in slices {
            half = half
                .max(mean[0].abs() + COVER_SIGMAS * cov[0][0].sqrt())
                .max(mean[1].abs() + COVER_SIGMAS * cov[1][1].sqrt());
        }
        let grid = Self::square((half / step).ceil() * step, step)?;
        for (mean, cov) in slices {
            grid.check_covers(mean, cov)?;
        }
        Ok(grid)
    }

    /// Error unless the grid spans the slice to 5.5σ on every side and the
    /// step resolves its narrowest direction.
    pub fn check_covers(&self, mean: &[f64; 2], cov: &[[f64; 2]; 2]) -> Result<()> {
        let (sx, sp) = (cov[0][0].sqrt(), cov[1][1].sqrt());
        let margin = |r: &Range, mu: f64, sigma: f64| (mu - r.start).min(r.stop - mu) / sigma;
        let reach = margin(&self.x, mean[0], sx).min(margin(&self.p, mean[1], sp));
        if reach < COVER_SIGMAS {
            return Err(Error::Invalid(format!(
                "Wigner grid edge is {reach:.2} sigma from the slice mean (need {COVER_SIGMAS}); widen the grid"
            )));
        }
        let narrowest = eigen_range(cov).0.sqrt();
        if self.x.step() > narrowest || self.p.step() > narrowest {
            return Err(Error::Invalid(format!(
                "Wigner grid step exceeds the narrowest slice width {narrowest:.4}; refine the grid"
            )));
        }
        Ok(())
    }
}

struct PanelState {
    phi: f64,
    external_loss: f64,
    state: GaussianState,
    mode: usize,
}

fn panel_states(topology: &Topology, phis: &[f64], external_losses: &[f64]) -> Result<Vec<PanelState>> {
    let mut out = Vec::with_capacity(phis.len() * external_losses.len());
    for &phi in phis {
        for &le in external_losses {
            let topo = topology.with_phi(phi).with_external_loss(LossSpec::new(le)?);
            let (spec, mode) = topo.build()?;
            out.push(PanelState {
                phi,
                external_loss: le,
                state: spec.simulate()?,
                mode,
            });
        }
    }
    Ok(out)
}

fn slices_on(states: &[PanelState], grid: &WignerGrid) -> Result<Vec<WignerSlice>> {
    states
        .iter()
        .map(|s| {
            let mean = s.state.mode_mean(s.mode)?;
            let cov = s.state.mode_cov(s.mode)?;
            grid.check_covers(&mean, &cov)?;
            Ok(WignerSlice {
                phi: s.phi,
                external_loss: s.external_loss,
                mean,
                cov,
                density: wigner_slice(&s.state, s.mode, grid)?,
            })
        })
        .collect()
}

/// Detected-mode Wigner densities for every `(φ, L_e)` combination,
/// `φ` varying slowest. Fails if `grid` would truncate any slice.
pub fn wigner_panel(
    topology: &Topology,
    phis: &[f64],
    external_losses: &[f64],
    grid: &WignerGrid,
) -> Result<Vec<WignerSlice>> {
    slices_on(&panel_states(topology, phis, external_losses)?, grid)
}

/// [`wigner_panel`] on the [`WignerGrid::covering`] grid of its slices.
pub fn wigner_panel_auto(
    topology: &Topology,
    phis: &[f64],
    external_losses: &[f64],
    step: f64,
) -> Result<(WignerGrid, Vec<WignerSlice>)> {
    let states = panel_states(topology, phis, external_losses)?;
    let moments = states
        .iter()
        .map(|s| Ok((s.state.mode_mean(s.mode)?, s.state.mode_cov(s.mode)?)))
        .collect::<Result<Vec<_>>>()?;
    let grid = WignerGrid::covering(&moments, step)?;
    let slices = slices_on(&states, &grid)?;
    Ok((grid, slices))
}

/// Phases `π + k·step` for `k` in `-(n-1)/2 ..= (n-1)/2`.
pub fn phases_about_dark_fringe(n: usize, step: f64) -> Vec<f64> {
    let half = (n as f64 - 1.0) / 2.0;
    (0..n).map(|k| DARK_FRINGE + (k as f64 - half) * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Slope `A` of `SNR = A |α|²`.
    pub slope: f64,
    pub residual_rms: f64,
}

/// Least-squares line through the origin, `A = Σxy / Σx²`.
pub fn fit_snr_vs_power(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 (|alpha|^2, snr) points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, _)) = points.iter().find(|(x, _)| !(*x > 0.0)) {
        return Err(Error::range("alpha2", x, "(0, inf)"));
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let slope = sxy / sxx;
    let ss: f64 = points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    Ok(LinearFit {
        slope,
        residual_rms: (ss / points.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{gain_from_qng, PaGain};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn range_parsing() {
        let r: Range = "0:0.9:91".parse().unwrap();
        assert_eq!(r.count, 91);
        assert_eq!(r.value(0), 0.0);
        assert_eq!(r.value(90), 0.9);
        assert_relative_eq!(r.value(10), 0.1, epsilon = 1e-15);
        assert!("0:1".parse::<Range>().is_err());
        assert!("0:1:x".parse::<Range>().is_err());
        assert!("0:1:0".parse::<Range>().is_err());
        assert_eq!("2:2:1".parse::<Range>().unwrap().values(), vec![2.0]);
    }

    #[test]
    fn advantage_examples() {
        let gain = gain_from_qng(6.0).unwrap();
        let s = Topology::Sisni(SisniParams { pa1: gain, pa2: gain, alpha: 6.0, ..Default::default() });
        assert_relative_eq!(snr_gain_db(&s, &s.sql_baseline()).unwrap(), 3.963, epsilon = 5e-4);
        let m = Topology::SqMzi(SqMziParams { alpha: 6.0, ..Default::default() });
        assert_eq!(advantage_db(&m, &m).unwrap(), 0.0);
        let sq = Topology::SqMzi(SqMziParams {
            squeezer: PaGain::new(0.75).unwrap(),
            alpha: 6.0,
            ..Default::default()
        });
        assert_relative_eq!(snr_gain_db(&sq, &sq.sql_baseline()).unwrap(), to_db(4.0), epsilon = 1e-12);
        assert!(advantage_db(&m.with_alpha(0.0), &m).is_err());
    }

    #[test]
    fn loss_plane_shapes() {
        let gain = gain_from_qng(6.0).unwrap();
        let r = Range::new(0.0, 0.9, 10).unwrap();
        let sisni = Topology::Sisni(SisniParams { pa1: gain, pa2: gain, alpha: 6.0, ..Default::default() });
        let grid = loss_plane(&sisni, r, r).unwrap();
        let first = grid.get(0, 0);
        assert!(grid.row(0).iter().all(|v| (v - first).abs() < 1e-9));

        let sq = Topology::SqMzi(SqMziParams {
            squeezer: PaGain::new(0.75).unwrap(),
            alpha: 6.0,
            ..Default::default()
        });
        let grid = loss_plane(&sq, r, r).unwrap();
        assert_relative_eq!(grid.get(0, 0), -to_db(4.0), epsilon = 1e-12);

        let off = loss_plane(&Topology::Sisni(SisniParams::default()), r, r).unwrap();
        assert_eq!(off.get(0, 0), 0.0);
        let off = loss_plane(&Topology::SqMzi(SqMziParams::default()), r, r).unwrap();
        assert!(off.values.iter().all(|v| v.abs() < 1e-12));

        assert!(loss_plane(&sq, Range::new(0.0, 1.0, 3).unwrap(), r).is_err());
    }

    #[test]
    fn slope_curve_mzi() {
        let m = Topology::SqMzi(SqMziParams { alpha: 6.0, ..Default::default() });
        let pts = slope_vs_theta(&m, &[0.0, FRAC_PI_2, PI], 1e-4).unwrap();
        assert!(pts[0].slope.abs() < 1e-6);
        assert_relative_eq!(pts[1].slope, -6.0, max_relative = 1e-8);
        assert!(pts[2].slope.abs() < 1e-6);
    }

    #[test]
    fn wigner_panel_dark_fringe_is_vacuum() {
        let m = Topology::SqMzi(SqMziParams { alpha: 6.0, ..Default::default() });
        let grid = WignerGrid::square(6.0, 0.1).unwrap();
        let panel = wigner_panel(&m, &[PI], &[0.0], &grid).unwrap();
        let peak = panel[0].density.iter().cloned().fold(0.0, f64::max);
        assert_relative_eq!(peak, 1.0 / (2.0 * PI), max_relative = 1e-12);
        assert_relative_eq!(grid.integrate(&panel[0].density), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn wigner_panel_displacements_are_linear() {
        let m = Topology::SqMzi(SqMziParams { alpha: 6.0, ..Default::default() });
        let grid = WignerGrid::square(6.0, 0.5).unwrap();
        let phis = phases_about_dark_fringe(3, 0.01);
        let panel = wigner_panel(&m, &phis, &[0.0], &grid).unwrap();
        let shifts: Vec<f64> = panel.iter().map(|s| s.mean[1]).collect();
        assert_relative_eq!(shifts[0], -shifts[2], max_relative = 1e-9);
        assert!(shifts[1].abs() < 1e-12);
        assert_relative_eq!(shifts[2], -6.0 * 0.01f64.sin(), max_relative = 1e-9);
        let narrow = WignerGrid::square(4.0, 0.5).unwrap();
        assert!(matches!(wigner_panel(&m, &phis, &[0.0], &narrow), Err(Error::Invalid(_))));
    }

    #[test]
    fn auto_grid_covers_squeezed_slices() {
        let m = Topology::SqMzi(SqMziParams { squeezer: gain_from_qng(12.0).unwrap(), alpha: 6.0, ..Default::default() });
        let phis = phases_about_dark_fringe(3, 0.3);
        assert!(wigner_panel(&m, &phis, &[0.0], &WignerGrid::square(12.0, 0.05).unwrap()).is_err());
        let (grid, slices) = wigner_panel_auto(&m, &phis, &[0.0, 0.5], 0.05).unwrap();
        assert!(grid.x.stop > 12.0);
        for s in &slices {
            assert_relative_eq!(grid.integrate(&s.density), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn snr_power_fit() {
        let f = fit_snr_vs_power(&[(1.0, 2.0), (2.0, 4.0)]).unwrap();
        assert_eq!(f.slope, 2.0);
        assert_eq!(f.residual_rms, 0.0);
        assert!(fit_snr_vs_power(&[]).is_err());
        assert!(fit_snr_vs_power(&[(1.0, 1.0)]).is_err());
        assert!(fit_snr_vs_power(&[(0.0, 1.0), (1.0, 1.0)]).is_err());
    }
}
