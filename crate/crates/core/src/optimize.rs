//! Variational optimisation of the preparation and measurement circuits.
//!
//! The preparation parameters `θ` minimise `1/Q`, then with `θ*` frozen the
//! measurement parameters `μ` minimise `1/F`. Both use Adam with exact
//! gradients from a single adjoint sweep through the circuit.
//!
//! Restarts are seeded independently (`ChaCha8` seeded with `seed`, stream =
//! restart index), so results do not depend on how many threads run them.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{param_count, AnsatzSpec};
use crate::dm::{apply_v_in_place, total_generator, v_delta_derivative, DmInteraction};
use crate::error::{QsnError, Result};
use crate::fisher::qfi_pure;
use crate::sim::{inner, StateVector, C64, ZERO};
use crate::tol::{P_FLOOR, Q_FLOOR};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize, cfg: AdamConfig) -> Result<Self> {
        let in_unit = |b: f64| b > 0.0 && b < 1.0;
        if !in_unit(cfg.beta1) || !in_unit(cfg.beta2) {
            return Err(QsnError::config(format!(
                "Adam betas must lie in (0, 1), got {} and {}",
                cfg.beta1, cfg.beta2
            )));
        }
        if !(cfg.eps > 0.0) || !(cfg.eta > 0.0) {
            return Err(QsnError::config("Adam eta and eps must be positive"));
        }
        Ok(Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            eta: cfg.eta,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
        })
    }

    fn step_in_place(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(QsnError::config(format!(
                "Adam state has {} entries, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for k in 0..params.len() {
            let g = grad[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= self.eta * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// One Adam update; returns the advanced state and the new parameters.
pub fn adam_step(state: &AdamState, params: &[f64], grad: &[f64]) -> Result<(AdamState, Vec<f64>)> {
    let mut next = state.clone();
    let mut p = params.to_vec();
    next.step_in_place(&mut p, grad)?;
    Ok((next, p))
}

/// Scalar cost with an exact gradient.
pub trait Objective: Sync {
    fn n_params(&self) -> usize;
    fn cost_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// `C(θ) = 1/Q` for the probe `V(δ,α) U(θ)|0⟩`.
#[derive(Clone, Debug)]
pub struct PreparationCost {
    topology: Topology,
    layers: usize,
    dm: DmInteraction,
}

impl PreparationCost {
    pub fn new(topology: Topology, layers: usize, dm: DmInteraction) -> Self {
        Self {
            topology,
            layers,
            dm,
        }
    }

    fn spec(&self, params: &[f64]) -> Result<AnsatzSpec> {
        AnsatzSpec::new(self.topology.clone(), self.layers, params.to_vec(), false)
    }

    pub fn qfi(&self, params: &[f64]) -> Result<f64> {
        let spec = self.spec(params)?;
        let phi = crate::ansatz::apply_ansatz(&StateVector::init_ground(spec.n_qubits())?, &spec)?;
        crate::fisher::probe_qfi(&phi, &self.dm)
    }
}

impl Objective for PreparationCost {
    fn n_params(&self) -> usize {
        param_count(&self.topology, self.layers)
    }

    fn cost_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let spec = self.spec(params)?;
        let n = spec.n_qubits();
        let circuit = spec.circuit();
        let mut phi = StateVector::init_ground(n)?;
        circuit.run(phi.amplitudes_mut());

        let mut psi = phi.clone();
        apply_v_in_place(psi.amplitudes_mut(), n, &self.dm);
        let dpsi = v_delta_derivative(&phi, &self.dm);
        let q = qfi_pure(&psi, &dpsi)?;
        if q <= Q_FLOOR {
            return Err(QsnError::DegenerateProbe {
                info: q,
                floor: Q_FLOOR,
            });
        }

        // With G = Σ_k G_k commuting with V, Q = 4(⟨G²⟩ − ⟨G⟩²) in the
        // pre-sensing state φ, so ∂_k Q = 8 Re⟨(G² − 2⟨G⟩G)φ | ∂_k φ⟩.
        let g_phi = total_generator(phi.amplitudes(), n, self.dm.alpha);
        let g2_phi = total_generator(&g_phi, n, self.dm.alpha);
        let mean = inner(phi.amplitudes(), &g_phi).re;
        let bra: Vec<C64> = g2_phi
            .iter()
            .zip(&g_phi)
            .map(|(a, b)| a - b * (2.0 * mean))
            .collect();
        let dq = circuit.adjoint_gradient(vec![(bra, phi.into_amplitudes())]);
        let scale = -8.0 / (q * q);
        Ok((1.0 / q, dq.into_iter().map(|d| d * scale).collect()))
    }
}

/// `C(μ) = 1/F` for the readout `M(μ)` of a fixed sensed probe.
#[derive(Clone, Debug)]
pub struct MeasurementCost {
    topology: Topology,
    layers: usize,
    psi: StateVector,
    dpsi: StateVector,
}

impl MeasurementCost {
    /// Freezes `V(δ,α) U(θ*)|0⟩` and its `δ`-derivative.
    pub fn new(theta_star: &AnsatzSpec, layers: usize, dm: DmInteraction) -> Result<Self> {
        let phi = crate::ansatz::apply_ansatz(
            &StateVector::init_ground(theta_star.n_qubits())?,
            theta_star,
        )?;
        let psi = crate::dm::apply_v(&phi, &dm);
        let dpsi = v_delta_derivative(&phi, &dm);
        Ok(Self {
            topology: theta_star.topology.clone(),
            layers,
            psi,
            dpsi,
        })
    }

    pub fn spec(&self, params: &[f64]) -> Result<AnsatzSpec> {
        AnsatzSpec::new(self.topology.clone(), self.layers, params.to_vec(), true)
    }
}

impl Objective for MeasurementCost {
    fn n_params(&self) -> usize {
        param_count(&self.topology, self.layers)
    }

    fn cost_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let spec = self.spec(params)?;
        let circuit = spec.circuit();
        let mut a = self.psi.amplitudes().to_vec();
        let mut b = self.dpsi.amplitudes().to_vec();
        circuit.run(&mut a);
        circuit.run(&mut b);

        // F = Σ dp²/p with p = |a|², dp = 2Re(a* b). Varying a and b gives
        // ∂F = Σ Re[w1* ∂a + w2* ∂b], w1 = 2c1 b − 2c2 a, w2 = 2c1 a,
        // c1 = 2dp/p, c2 = dp²/p².
        let mut f = 0.0;
        let mut w1 = vec![ZERO; a.len()];
        let mut w2 = vec![ZERO; a.len()];
        for m in 0..a.len() {
            let p = a[m].norm_sqr();
            if p < P_FLOOR {
                continue;
            }
            let dp = 2.0 * (a[m].conj() * b[m]).re;
            f += dp * dp / p;
            let c1 = 2.0 * dp / p;
            let c2 = dp * dp / (p * p);
            w1[m] = b[m] * (2.0 * c1) - a[m] * (2.0 * c2);
            w2[m] = a[m] * (2.0 * c1);
        }
        if f <= Q_FLOOR {
            return Err(QsnError::DegenerateProbe {
                info: f,
                floor: Q_FLOOR,
            });
        }
        let df = circuit.adjoint_gradient(vec![(w1, a), (w2, b)]);
        let scale = -1.0 / (f * f);
        Ok((1.0 / f, df.into_iter().map(|d| d * scale).collect()))
    }
}

/// `∇_θ (1/Q)` at `spec.params`.
pub fn grad_cost_theta(spec: &AnsatzSpec, dm: &DmInteraction) -> Result<Vec<f64>> {
    if spec.daggered {
        return Err(QsnError::config(
            "preparation gradient needs a forward ansatz",
        ));
    }
    let cost = PreparationCost::new(spec.topology.clone(), spec.layers, *dm);
    Ok(cost.cost_and_grad(&spec.params)?.1)
}

/// `∇_μ (1/F)` for measurement `mu_spec` after preparation `theta_star`.
pub fn grad_cost_mu(
    theta_star: &AnsatzSpec,
    mu_spec: &AnsatzSpec,
    dm: &DmInteraction,
) -> Result<Vec<f64>> {
    let cost = MeasurementCost::new(theta_star, mu_spec.layers, *dm)?;
    Ok(cost.cost_and_grad(&mu_spec.params)?.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Stop once `|C_t − C_{t−window}| <` this.
    pub conv_tol: f64,
    pub conv_window: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iters: 2000,
            seed: 0,
            adam: AdamConfig::default(),
            conv_tol: 1e-10,
            conv_window: 50,
        }
    }
}

impl OptimizerSettings {
    fn check(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(QsnError::config("at least one restart is required"));
        }
        if self.max_iters == 0 {
            return Err(QsnError::config("max_iters must be positive"));
        }
        Ok(())
    }
}

/// Resumable state of a single restart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub restart: usize,
    pub iteration: usize,
    pub params: Vec<f64>,
    pub adam: AdamState,
    pub rng: ChaCha8Rng,
    pub trace: Vec<(usize, f64)>,
    pub best_cost: f64,
    pub best_params: Vec<f64>,
    pub finished: bool,
}

impl Checkpoint {
    /// Fresh restart with parameters drawn uniformly from `[0, 2π)`.
    pub fn start(n_params: usize, settings: &OptimizerSettings, restart: usize) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(restart as u64);
        let params: Vec<f64> = (0..n_params)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        Ok(Self {
            seed: settings.seed,
            restart,
            iteration: 0,
            best_params: params.clone(),
            params,
            adam: AdamState::new(n_params, settings.adam)?,
            rng,
            trace: Vec::new(),
            best_cost: f64::INFINITY,
            finished: false,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    /// Runs at most `max_steps` more iterations. Sets `finished` on
    /// convergence or at `settings.max_iters`.
    pub fn advance(
        &mut self,
        objective: &dyn Objective,
        settings: &OptimizerSettings,
        max_steps: usize,
    ) -> Result<()> {
        for _ in 0..max_steps {
            if self.finished {
                break;
            }
            if self.iteration >= settings.max_iters {
                self.finished = true;
                break;
            }
            let (cost, grad) = objective.cost_and_grad(&self.params)?;
            self.trace.push((self.iteration, cost));
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best_params.copy_from_slice(&self.params);
            }
            self.iteration += 1;
            let len = self.trace.len();
            if len > settings.conv_window
                && (cost - self.trace[len - 1 - settings.conv_window].1).abs() < settings.conv_tol
            {
                self.finished = true;
                break;
            }
            self.adam.step_in_place(&mut self.params, &grad)?;
        }
        Ok(())
    }

    pub fn run_to_end(
        &mut self,
        objective: &dyn Objective,
        settings: &OptimizerSettings,
    ) -> Result<()> {
        self.advance(objective, settings, usize::MAX)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_cost: f64,
    /// `(iteration, cost)` of the winning restart.
    pub cost_trace: Vec<(usize, f64)>,
    pub restarts_used: usize,
    pub seed: u64,
    pub best_restart: usize,
    /// Best cost of each restart in index order; `None` when it degenerated.
    pub restart_costs: Vec<Option<f64>>,
}

impl OptimizationResult {
    /// Running minimum of the per-restart best costs.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.restart_costs
            .iter()
            .map(|c| {
                if let Some(c) = c {
                    best = best.min(*c);
                }
                best
            })
            .collect()
    }

    /// Information value `1/best_cost`.
    pub fn best_information(&self) -> f64 {
        1.0 / self.best_cost
    }
}

/// Where restarts persist their state, and how often.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckpointPolicy {
    pub dir: PathBuf,
    /// File prefix; restart `r` is stored as `{label}_r{r}.json`.
    pub label: String,
    /// Iterations between saves.
    pub every: usize,
}

impl CheckpointPolicy {
    pub fn path(&self, restart: usize) -> PathBuf {
        self.dir.join(format!("{}_r{restart}.json", self.label))
    }
}

fn run_restart(
    objective: &dyn Objective,
    settings: &OptimizerSettings,
    restart: usize,
    policy: Option<&CheckpointPolicy>,
) -> Result<Checkpoint> {
    let n = objective.n_params();
    let Some(policy) = policy else {
        let mut ck = Checkpoint::start(n, settings, restart)?;
        ck.run_to_end(objective, settings)?;
        return Ok(ck);
    };
    let path = policy.path(restart);
    let mut ck = if path.exists() {
        let ck = Checkpoint::load(&path)?;
        if ck.seed != settings.seed || ck.restart != restart || ck.params.len() != n {
            return Err(QsnError::config(format!(
                "checkpoint {} belongs to a different run",
                path.display()
            )));
        }
        ck
    } else {
        Checkpoint::start(n, settings, restart)?
    };
    while !ck.finished {
        ck.advance(objective, settings, policy.every.max(1))?;
        ck.save(&path)?;
    }
    Ok(ck)
}

/// Best-of-restarts minimisation of `objective`.
pub fn minimize(
    objective: &dyn Objective,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    minimize_with(objective, settings, None)
}

/// As [`minimize`], saving every restart under `policy` and resuming from
/// any checkpoint already there. The result is bit-identical to an
/// uninterrupted run.
pub fn minimize_resumable(
    objective: &dyn Objective,
    settings: &OptimizerSettings,
    policy: &CheckpointPolicy,
) -> Result<OptimizationResult> {
    std::fs::create_dir_all(&policy.dir)?;
    minimize_with(objective, settings, Some(policy))
}

fn minimize_with(
    objective: &dyn Objective,
    settings: &OptimizerSettings,
    policy: Option<&CheckpointPolicy>,
) -> Result<OptimizationResult> {
    settings.check()?;
    let runs: Vec<Result<Option<Checkpoint>>> = (0..settings.restarts)
        .into_par_iter()
        .map(|r| match run_restart(objective, settings, r, policy) {
            Ok(ck) => Ok(Some(ck)),
            Err(QsnError::DegenerateProbe { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();

    let mut restart_costs = Vec::with_capacity(runs.len());
    let mut best: Option<Checkpoint> = None;
    for run in runs {
        let run = run?;
        restart_costs.push(run.as_ref().map(|c| c.best_cost));
        if let Some(ck) = run {
            if best.as_ref().is_none_or(|b| ck.best_cost < b.best_cost) {
                best = Some(ck);
            }
        }
    }
    let best = best.ok_or_else(|| {
        QsnError::OptimizationFailure(format!("all {} restarts degenerated", settings.restarts))
    })?;
    Ok(OptimizationResult {
        best_params: best.best_params,
        best_cost: best.best_cost,
        cost_trace: best.trace,
        restarts_used: settings.restarts,
        seed: settings.seed,
        best_restart: best.restart,
        restart_costs,
    })
}

/// Minimises `1/Q` over the preparation circuit on `topology` with `layers`.
pub fn optimize_preparation(
    topology: &Topology,
    layers: usize,
    dm: DmInteraction,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    minimize(
        &PreparationCost::new(topology.clone(), layers, dm),
        settings,
    )
}

/// With `theta_star` frozen, minimises `1/F` over a daggered measurement
/// circuit of the same topology with `layers`.
pub fn optimize_measurement(
    theta_star: &AnsatzSpec,
    layers: usize,
    dm: DmInteraction,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    minimize(&MeasurementCost::new(theta_star, layers, dm)?, settings)
}
