//! Grid-based Bayesian estimation of `δ` from computational-basis outcomes.

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_ansatz, AnsatzSpec};
use crate::dm::{apply_v, DmInteraction};
use crate::error::{QsnError, Result};
use crate::sim::StateVector;
use crate::tol::INPUT_NORM_TOL;

/// Default prior support and resolution.
pub const DEFAULT_PRIOR: (f64, f64) = (0.0, 0.15);
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Discrete posterior over an increasing grid of `δ` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    grid: Vec<f64>,
    weights: Vec<f64>,
    nu_used: u64,
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(QsnError::config(format!(
            "grid needs lo < hi and at least 2 points, got [{lo}, {hi}] with {points}"
        )));
    }
    let h = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| lo + h * k as f64).collect())
}

impl Posterior {
    /// Flat prior on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let grid = uniform_grid(lo, hi, points)?;
        let weights = vec![1.0 / points as f64; points];
        Ok(Self {
            grid,
            weights,
            nu_used: 0,
        })
    }

    pub fn new(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if grid.len() != weights.len() || grid.is_empty() {
            return Err(QsnError::config(
                "grid and weights must be non-empty and equally long",
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(QsnError::config("grid must be strictly increasing"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(QsnError::numeric("weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > INPUT_NORM_TOL {
            return Err(QsnError::numeric(format!("weights sum to {total}")));
        }
        Ok(Self {
            grid,
            weights,
            nu_used: 0,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nu_used(&self) -> u64 {
        self.nu_used
    }

    /// Smallest spacing between neighbouring grid points.
    pub fn grid_spacing(&self) -> f64 {
        self.grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Equal-tailed interval holding `level` of the mass, read off the grid CDF.
    pub fn credible_interval(&self, level: f64) -> (f64, f64) {
        let tail = (1.0 - level) / 2.0;
        let mut cdf = 0.0;
        let mut lo = self.grid[0];
        let mut found_lo = false;
        let mut hi = self.grid[self.grid.len() - 1];
        for (x, w) in self.grid.iter().zip(&self.weights) {
            cdf += w;
            if !found_lo && cdf >= tail {
                lo = *x;
                found_lo = true;
            }
            if cdf >= 1.0 - tail {
                hi = *x;
                break;
            }
        }
        (lo, hi)
    }

    /// Writes `delta_rad,weight` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "delta_rad,weight")?;
        for (x, w) in self.grid.iter().zip(&self.weights) {
            writeln!(out, "{x},{w}")?;
        }
        Ok(())
    }

    // Adds log-likelihood terms and renormalises.
    fn absorb(
        &self,
        log_like: impl Fn(usize) -> f64,
        count: u64,
        outcome: usize,
    ) -> Result<Posterior> {
        let logs: Vec<f64> = self
            .weights
            .iter()
            .enumerate()
            .map(|(g, w)| w.ln() + log_like(g))
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY || max.is_nan() {
            return Err(QsnError::DegenerateLikelihood { outcome });
        }
        let mut weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Posterior {
            grid: self.grid.clone(),
            weights,
            nu_used: self.nu_used + count,
        })
    }
}

/// `p(m | δ_g)` for every grid point `g` and outcome `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodTable {
    grid: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn row(&self, g: usize) -> &[f64] {
        &self.rows[g]
    }

    pub fn n_outcomes(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn likelihood(&self, g: usize, outcome: usize) -> f64 {
        self.rows[g][outcome]
    }

    fn check_compatible(&self, post: &Posterior, outcome: usize) -> Result<()> {
        if post.grid != self.grid {
            return Err(QsnError::config(
                "posterior and likelihood table use different grids",
            ));
        }
        if outcome >= self.n_outcomes() {
            return Err(QsnError::config(format!(
                "outcome {outcome} out of range ({} outcomes)",
                self.n_outcomes()
            )));
        }
        Ok(())
    }
}

/// Outcome distribution of `M(μ*) V(δ, α) U(θ*)|0⟩` on every grid point.
pub fn likelihood_table(
    theta_star: &AnsatzSpec,
    mu_star: &AnsatzSpec,
    alpha: f64,
    grid: &[f64],
) -> Result<LikelihoodTable> {
    if theta_star.n_qubits() != mu_star.n_qubits() {
        return Err(QsnError::config(
            "preparation and measurement act on different registers",
        ));
    }
    let phi = apply_ansatz(
        &StateVector::init_ground(theta_star.n_qubits())?,
        theta_star,
    )?;
    let rows = grid
        .par_iter()
        .map(|&delta| {
            let psi = apply_v(&phi, &DmInteraction::new(delta, alpha));
            Ok(apply_ansatz(&psi, mu_star)?.basis_probabilities())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LikelihoodTable {
        grid: grid.to_vec(),
        rows,
    })
}

/// `nu` i.i.d. draws from the categorical distribution `row`.
pub fn sample_outcomes(row: &[f64], nu: usize, seed: u64) -> Result<Vec<usize>> {
    if nu == 0 {
        return Err(QsnError::config("at least one measurement is required"));
    }
    let dist = WeightedIndex::new(row.iter().map(|p| p.max(0.0)))
        .map_err(|e| QsnError::numeric(format!("invalid outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..nu).map(|_| dist.sample(&mut rng)).collect())
}

/// Independent sampling seed for trial `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng.next_u64()
}

/// Posterior after one more outcome.
pub fn update_posterior(
    post: &Posterior,
    outcome: usize,
    table: &LikelihoodTable,
) -> Result<Posterior> {
    table.check_compatible(post, outcome)?;
    post.absorb(|g| table.likelihood(g, outcome).ln(), 1, outcome)
}

/// Posterior after a batch of outcomes. Equal outcomes are merged into
/// likelihood powers, so the cost is `O(grid × distinct outcomes)`.
pub fn update_posterior_batch(
    post: &Posterior,
    outcomes: &[usize],
    table: &LikelihoodTable,
) -> Result<Posterior> {
    let mut counts = vec![0u64; table.n_outcomes()];
    for &m in outcomes {
        table.check_compatible(post, m)?;
        counts[m] += 1;
    }
    let first = outcomes.first().copied().unwrap_or(0);
    post.absorb(
        |g| {
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(m, &c)| c as f64 * table.likelihood(g, m).ln())
                .sum()
        },
        outcomes.len() as u64,
        first,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mean: f64,
    pub variance: f64,
    pub bias: f64,
    pub nu: u64,
    /// `h²/12` for grid spacing `h`: the resolution limit of the variance.
    pub grid_variance_floor: f64,
}

pub fn estimate(post: &Posterior, delta_true: f64) -> EstimateReport {
    let mean: f64 = post
        .grid
        .iter()
        .zip(&post.weights)
        .map(|(x, w)| x * w)
        .sum();
    let variance: f64 = post
        .grid
        .iter()
        .zip(&post.weights)
        .map(|(x, w)| (x - mean).powi(2) * w)
        .sum::<f64>()
        .max(0.0);
    let h = post.grid_spacing();
    EstimateReport {
        mean,
        variance,
        bias: mean - delta_true,
        nu: post.nu_used,
        grid_variance_floor: if h.is_finite() { h * h / 12.0 } else { 0.0 },
    }
}
