//! Least-squares fit of the noisy-amplifier model to measured SNR
//! advantages, using a bounded Nelder–Mead simplex with seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elements::to_db;
use crate::error::{Error, Result};
use crate::noise::{advantage_vs_qng, NoisyPaParams, PaNoise, SisniLosses};

/// One measured point. `sigma_db`, when present, weights the residual by
/// `1/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageDatum {
    pub qng1_db: f64,
    pub qng2_db: f64,
    pub advantage_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub rho: (f64, f64),
    pub epsilon2: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            rho: (0.0, 0.1),
            epsilon2: (1.0, 1e4),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub seed: u64,
    pub restarts: usize,
    /// Simplex iterations per local search.
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            restarts: 8,
            max_iterations: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rho1: f64,
    pub rho2: f64,
    pub eps1_sq: f64,
    pub eps2_sq: f64,
    /// Root-mean-square residual in dB (weighted when sigmas are given).
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn noise1(&self) -> PaNoise {
        PaNoise {
            rho: self.rho1,
            epsilon2: self.eps1_sq,
        }
    }

    pub fn noise2(&self) -> PaNoise {
        PaNoise {
            rho: self.rho2,
            epsilon2: self.eps2_sq,
        }
    }
}

/// Outcome of one simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values is below
    /// `f_abs + f_rel·|f_best|` and its diameter is below `x_tol`.
    pub f_abs: f64,
    pub f_rel: f64,
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            f_abs: 1e-24,
            f_rel: 1e-12,
            x_tol: 1e-9,
        }
    }
}

/// Nelder–Mead with the standard reflection, expansion, contraction and
/// shrink coefficients `(1, 2, ½, ½)`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.f_abs + opts.f_rel * values[0].abs() && diameter <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = along(-0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(v, b)| b + 0.5 * (v - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Search coordinates: `ln(ρ − ρ_lo)` and `ln(ε² − ε²_lo)` for each
/// amplifier, so the lower bounds are approached asymptotically.
struct Coordinates {
    bounds: FitBounds,
}

impl Coordinates {
    fn decode(&self, u: &[f64]) -> ([f64; 4], f64) {
        let b = &self.bounds;
        let lims = [b.rho, b.rho, b.epsilon2, b.epsilon2];
        let mut out = [0.0; 4];
        let mut overshoot = 0.0;
        for k in 0..4 {
            let (lo, hi) = lims[k];
            let v = lo + u[k].exp();
            if v > hi {
                let over = u[k] - (hi - lo).ln();
                overshoot += over * over;
                out[k] = hi;
            } else {
                out[k] = v;
            }
        }
        (out, overshoot)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let b = &self.bounds;
        let rho_span = (b.rho.1 - b.rho.0).ln();
        let eps_span = (b.epsilon2.1 - b.epsilon2.0).ln();
        let rho_floor = rho_span - 12.0;
        let eps_floor = eps_span - 12.0;
        vec![
            rng.random_range(rho_floor..rho_span),
            rng.random_range(rho_floor..rho_span),
            rng.random_range(eps_floor..eps_span),
            rng.random_range(eps_floor..eps_span),
        ]
    }
}

/// Penalty returned when a trial QNG target is unreachable; grows with the
/// distance to the reachable region so the simplex can walk back.
const INFEASIBLE: f64 = 1e6;

/// Weighted sum of squared dB residuals of the model against `data`.
pub fn objective(data: &[AdvantageDatum], losses: &SisniLosses, noise1: &PaNoise, noise2: &PaNoise) -> f64 {
    let mut total = 0.0;
    let mut infeasible = 0.0;
    // points sharing QNG₁ reuse one curve evaluation
    let mut i = 0;
    while i < data.len() {
        let q1 = data[i].qng1_db;
        let mut j = i;
        while j < data.len() && data[j].qng1_db == q1 {
            j += 1;
        }
        let grid: Vec<f64> = data[i..j].iter().map(|d| d.qng2_db).collect();
        match advantage_vs_qng(q1, &grid, losses, noise1, noise2) {
            Ok(curve) => {
                for (d, pt) in data[i..j].iter().zip(curve) {
                    let w = d.sigma_db.map_or(1.0, |s| 1.0 / (s * s));
                    total += w * (pt.advantage_db - d.advantage_db).powi(2);
                }
            }
            Err(_) => {
                for d in &data[i..j] {
                    infeasible += floor_gap(d.qng1_db, noise1) + floor_gap(d.qng2_db, noise2);
                }
            }
        }
        i = j;
    }
    if infeasible > 0.0 {
        INFEASIBLE * (1.0 + infeasible)
    } else {
        total
    }
}

fn floor_gap(qng_db: f64, noise: &PaNoise) -> f64 {
    let floor = NoisyPaParams {
        rho: noise.rho,
        kappa: 0.0,
        epsilon2: noise.epsilon2,
    }
    .qng()
    .map(to_db)
    .unwrap_or(f64::INFINITY);
    (floor - qng_db).max(0.0)
}

fn validate_data(data: &[AdvantageDatum], bounds: &FitBounds) -> Result<()> {
    if data.len() < 4 {
        return Err(Error::Invalid(format!("need at least 4 data points, got {}", data.len())));
    }
    let mut qng2: Vec<f64> = data.iter().map(|d| d.qng2_db).collect();
    qng2.sort_by(f64::total_cmp);
    qng2.dedup();
    if qng2.len() < 2 {
        return Err(Error::Invalid("data must span at least 2 distinct qng2_db values".into()));
    }
    for (k, d) in data.iter().enumerate() {
        let finite = d.qng1_db.is_finite() && d.qng2_db.is_finite() && d.advantage_db.is_finite();
        if !finite || d.qng1_db < 0.0 || d.qng2_db < 0.0 {
            return Err(Error::Invalid(format!("data point {k} has invalid QNG or advantage")));
        }
        if let Some(s) = d.sigma_db {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Invalid(format!("data point {k} has sigma_db {s}, must be > 0")));
            }
        }
    }
    let (rl, rh) = bounds.rho;
    let (el, eh) = bounds.epsilon2;
    if !(rl >= 0.0 && rh > rl && rh.is_finite()) {
        return Err(Error::Invalid(format!("rho bounds ({rl}, {rh}) are not 0 <= lo < hi")));
    }
    if !(el >= 1.0 && eh > el && eh.is_finite()) {
        return Err(Error::Invalid(format!("epsilon2 bounds ({el}, {eh}) are not 1 <= lo < hi")));
    }
    Ok(())
}

/// Fit `(ρ₁, ρ₂, ε₁², ε₂²)` by minimizing squared dB residuals of
/// [`advantage_vs_qng`]. Every restart runs a simplex search and then
/// re-seeds the simplex at its own minimum until that stops improving.
pub fn fit_noise_model(
    data: &[AdvantageDatum],
    losses: &SisniLosses,
    bounds: &FitBounds,
    options: &FitOptions,
) -> Result<FitResult> {
    validate_data(data, bounds)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.qng1_db.total_cmp(&b.qng1_db));

    let coords = Coordinates { bounds: *bounds };
    let cost = |u: &[f64]| {
        let ([r1, r2, e1, e2], overshoot) = coords.decode(u);
        let noise1 = PaNoise { rho: r1, epsilon2: e1 };
        let noise2 = PaNoise { rho: r2, epsilon2: e2 };
        objective(&sorted, losses, &noise1, &noise2) + INFEASIBLE * overshoot
    };

    let simplex = SimplexOptions {
        max_iterations: options.max_iterations,
        ..SimplexOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<Minimum> = None;
    let mut total_iterations = 0;
    for _ in 0..options.restarts.max(1) {
        let start = coords.sample(&mut rng);
        let mut local = nelder_mead(cost, &start, &[1.0; 4], &simplex);
        total_iterations += local.iterations;
        for _ in 0..10 {
            let again = nelder_mead(cost, &local.x, &[0.5; 4], &simplex);
            total_iterations += again.iterations;
            let improved = again.value < local.value * (1.0 - 1e-9) - 1e-30;
            let converged = again.converged;
            if again.value <= local.value {
                local = again;
            }
            if !improved && converged {
                local.converged = true;
                break;
            }
        }
        if best.as_ref().map_or(true, |b| local.value < b.value) {
            best = Some(local);
        }
    }

    let best = best.expect("at least one restart runs");
    let ([rho1, rho2, eps1_sq, eps2_sq], _) = coords.decode(&best.x);
    let weight_sum: f64 = data.iter().map(|d| d.sigma_db.map_or(1.0, |s| 1.0 / (s * s))).sum();
    let residual_rms = if best.value >= INFEASIBLE {
        f64::INFINITY
    } else {
        (best.value / weight_sum).sqrt()
    };
    Ok(FitResult {
        rho1,
        rho2,
        eps1_sq,
        eps2_sq,
        residual_rms,
        iterations: total_iterations,
        converged: best.converged && residual_rms.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(rosen, &[-1.2, 1.0], &[0.5, 0.5], &SimplexOptions::default());
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn simplex_reports_iteration_cap() {
        let bowl = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = SimplexOptions {
            max_iterations: 5,
            ..Default::default()
        };
        let m = nelder_mead(bowl, &[3.0, -2.0, 1.0], &[1.0; 3], &opts);
        assert!(!m.converged);
        assert_eq!(m.iterations, 5);
    }

    #[test]
    fn rejects_thin_data() {
        let d = AdvantageDatum {
            qng1_db: 4.0,
            qng2_db: 6.0,
            advantage_db: 1.0,
            sigma_db: None,
        };
        let losses = SisniLosses::default();
        let err = fit_noise_model(&[d; 3], &losses, &FitBounds::default(), &FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("at least 4"));
        let err = fit_noise_model(&[d; 5], &losses, &FitBounds::default(), &FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("2 distinct"));
    }
}
