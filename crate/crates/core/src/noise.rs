//! Local dephasing after the sensing step.
//!
//! Each qubit passes through `K₀ = diag(1, √(1−λ))`, `K₁ = diag(0, √λ)`
//! after `V(δ, α)` and before readout. The channel does not depend on `δ`,
//! so `∂_δ ℰ(ρ) = ℰ(∂_δ ρ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_ansatz, AnsatzSpec};
use crate::dm::{apply_v, v_delta_derivative, DmInteraction};
use crate::error::{QsnError, Result};
use crate::fisher::qfi_mixed;
use crate::sim::{DensityMatrix, KrausSet, Mat2, Operator, StateVector, C64, ONE, ZERO};
use crate::tol::EIG_TOL;

pub fn dephasing_kraus(lambda: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(QsnError::domain(format!(
            "dephasing strength {lambda} outside [0, 1]"
        )));
    }
    KrausSet::new(vec![
        Mat2::diag(ONE, C64::new((1.0 - lambda).sqrt(), 0.0)),
        Mat2::diag(ZERO, C64::new(lambda.sqrt(), 0.0)),
    ])
}

/// `ρ = ℰ^⊗N(|Ψ⟩⟨Ψ|)` and `∂_δ ρ` for `|Ψ⟩ = V(δ,α) U(θ*)|0⟩`.
pub fn noisy_probe(
    theta_star: &AnsatzSpec,
    dm: &DmInteraction,
    lambda: f64,
) -> Result<(DensityMatrix, Operator)> {
    let kraus = dephasing_kraus(lambda)?;
    let phi = apply_ansatz(
        &StateVector::init_ground(theta_star.n_qubits())?,
        theta_star,
    )?;
    let psi = apply_v(&phi, dm);
    let dpsi = v_delta_derivative(&phi, dm);
    let mut rho = psi.to_density();
    let mut drho = Operator::symmetric_outer(&psi, &dpsi);
    for q in 0..theta_star.n_qubits() {
        rho = rho.apply_channel(q, &kraus)?;
        drho = drho.apply_channel(q, &kraus)?;
    }
    Ok((rho, drho))
}

pub fn qfi_under_noise(theta_star: &AnsatzSpec, dm: &DmInteraction, lambda: f64) -> Result<f64> {
    let (rho, drho) = noisy_probe(theta_star, dm, lambda)?;
    qfi_mixed(&rho, &drho, EIG_TOL)
}

/// Quantum Cramér–Rao bound `1/Q` of the fixed probe under dephasing `λ`.
pub fn qb_under_noise(theta_star: &AnsatzSpec, dm: &DmInteraction, lambda: f64) -> Result<f64> {
    let q = qfi_under_noise(theta_star, dm, lambda)?;
    if q > 0.0 {
        Ok(1.0 / q)
    } else {
        Ok(f64::INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingSweep {
    pub lambdas: Vec<f64>,
    pub qfi_values: Vec<f64>,
    pub qb_values: Vec<f64>,
    /// `QB(λ = 0)`.
    pub qb_noiseless: f64,
    /// `QB(λ_max) − QB(0)`.
    pub delta_vs_noiseless: f64,
}

impl DephasingSweep {
    /// `QB(λ) − QB(0)` for each sweep point.
    pub fn deltas(&self) -> Vec<f64> {
        self.qb_values
            .iter()
            .map(|qb| qb - self.qb_noiseless)
            .collect()
    }
}

/// Evaluates the bound on every `λ` without re-optimising `θ*`.
pub fn dephasing_sweep(
    theta_star: &AnsatzSpec,
    dm: &DmInteraction,
    lambdas: &[f64],
) -> Result<DephasingSweep> {
    if lambdas.is_empty() {
        return Err(QsnError::config("dephasing sweep needs at least one λ"));
    }
    let qfi_values = lambdas
        .par_iter()
        .map(|&l| qfi_under_noise(theta_star, dm, l))
        .collect::<Result<Vec<_>>>()?;
    let qb_values: Vec<f64> = qfi_values.iter().map(|q| 1.0 / q).collect();
    if let Some(bad) = qb_values.iter().find(|qb| !qb.is_finite()) {
        return Err(QsnError::numeric(format!(
            "non-finite bound {bad} in dephasing sweep"
        )));
    }
    let qb_noiseless = match lambdas.iter().position(|&l| l == 0.0) {
        Some(k) => qb_values[k],
        None => qb_under_noise(theta_star, dm, 0.0)?,
    };
    let (imax, _) = lambdas
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, &l)| if l > acc.1 { (k, l) } else { acc },
        );
    Ok(DephasingSweep {
        lambdas: lambdas.to_vec(),
        qfi_values,
        delta_vs_noiseless: qb_values[imax] - qb_noiseless,
        qb_values,
        qb_noiseless,
    })
}
