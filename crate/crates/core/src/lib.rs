//! Simulation and variational optimisation of networked qubit sensors.
//!
//! The crate models a register of up to [`MAX_QUBITS`](tol::MAX_QUBITS)
//! qubits wired by controlled-Z links into a sensor network. A parameterised
//! preparation circuit builds the probe, every qubit then picks up the same
//! small rotation `δ` from a weak classical drive, and a parameterised
//! measurement circuit maps the result onto computational-basis counts.
//!
//! Module map:
//!
//! * [`sim`]: dense statevector / density-matrix simulation.
//! * [`topology`]: named CZ graphs and edge-list files.
//! * [`ansatz`]: preparation and measurement circuits built from a graph.
//! * [`dm`]: the per-qubit sensing unitary and its exact `δ`-derivative.
//! * [`fisher`]: quantum and classical Fisher information, Cramér–Rao bounds.
//! * [`optimize`]: Adam with exact (adjoint) gradients and seeded restarts.
//! * [`bayes`]: grid posterior over `δ` from sampled outcomes.
//! * [`noise`]: local dephasing and the bound it induces.
//!
//! Bit ordering: qubit 0 is the most significant bit of a basis index.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod bayes;
pub mod dm;
pub mod error;
pub mod fisher;
pub mod noise;
pub mod optimize;
pub mod sim;
pub mod tol;
pub mod topology;

pub use ansatz::{
    apply_ansatz, derivative_state, excited_state, ghz_state, optimal_state, param_count,
    AnsatzSpec, Axis, Gate,
};
pub use bayes::{
    estimate, likelihood_table, sample_outcomes, trial_seed, uniform_grid, update_posterior,
    update_posterior_batch, EstimateReport, LikelihoodTable, Posterior,
};
pub use dm::{apply_v, individual_baseline, u_dm, v_delta_derivative, Baseline, DmInteraction};
pub use error::{QsnError, Result};
pub use fisher::{
    cfi, crb, dprobs_wrt_delta, measurement_cfi, probe_qfi, qfi_mixed, qfi_pure, FisherContext,
    FisherReport,
};
pub use noise::{
    dephasing_kraus, dephasing_sweep, noisy_probe, qb_under_noise, qfi_under_noise, DephasingSweep,
};
pub use optimize::{
    adam_step, grad_cost_mu, grad_cost_theta, minimize, minimize_resumable, optimize_measurement,
    optimize_preparation, AdamConfig, AdamState, Checkpoint, CheckpointPolicy, MeasurementCost,
    Objective, OptimizationResult, OptimizerSettings, PreparationCost,
};
pub use sim::{DensityMatrix, KrausSet, Mat2, Operator, StateVector, C64};
pub use topology::{BuiltinTopology, DegreeReport, Topology};
