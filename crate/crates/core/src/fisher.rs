//! Fisher information and Cramér–Rao bounds for the phase `δ`.

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::dm::{apply_v, v_delta_derivative, DmInteraction};
use crate::error::{QsnError, Result};
use crate::sim::{DensityMatrix, Operator, StateVector};
use crate::tol::{HERMITIAN_TOL, INPUT_NORM_TOL, PSD_TOL, P_FLOOR};

/// Where a Fisher value was evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FisherContext {
    pub topology: String,
    pub l1: usize,
    pub l2: Option<usize>,
    pub delta: f64,
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub qfi: f64,
    pub cfi: Option<f64>,
    /// `1/qfi`; `+∞` when the QFI vanishes.
    pub qb: f64,
    pub cb: Option<f64>,
    pub context: FisherContext,
}

fn inverse_or_inf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

impl FisherReport {
    pub fn new(qfi: f64, cfi: Option<f64>, context: FisherContext) -> Result<Self> {
        if let Some(f) = cfi {
            if f > qfi + 1e-9 {
                return Err(QsnError::numeric(format!(
                    "classical Fisher information {f} exceeds quantum {qfi}"
                )));
            }
        }
        Ok(Self {
            qfi,
            cfi,
            qb: inverse_or_inf(qfi),
            cb: cfi.map(inverse_or_inf),
            context,
        })
    }
}

/// Pure-state QFI `4(⟨∂Ψ|∂Ψ⟩ − |⟨Ψ|∂Ψ⟩|²)`.
pub fn qfi_pure(psi: &StateVector, dpsi: &StateVector) -> Result<f64> {
    psi.check_normalized()?;
    if psi.dim() != dpsi.dim() {
        return Err(QsnError::config("state and derivative differ in size"));
    }
    let q = 4.0 * (dpsi.norm_sqr() - psi.inner(dpsi).norm_sqr());
    if q < -1e-10 {
        return Err(QsnError::numeric(format!("negative QFI {q:e}")));
    }
    Ok(q.max(0.0))
}

/// QFI of the sensed probe `V(δ, α)|prepared⟩`.
pub fn probe_qfi(prepared: &StateVector, dm: &DmInteraction) -> Result<f64> {
    let psi = apply_v(prepared, dm);
    let dpsi = v_delta_derivative(prepared, dm);
    qfi_pure(&psi, &dpsi)
}

/// Mixed-state QFI via the eigenbasis of `ρ`:
/// `Q = Σ_{λ_i+λ_j > eig_tol} 2 |⟨i|∂ρ|j⟩|² / (λ_i + λ_j)`.
pub fn qfi_mixed(rho: &DensityMatrix, drho: &Operator, eig_tol: f64) -> Result<f64> {
    if rho.dim() != drho.dim() {
        return Err(QsnError::config("state and derivative differ in size"));
    }
    let herm = drho.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(QsnError::numeric(format!(
            "derivative is not Hermitian ({herm:e})"
        )));
    }
    let tr = drho.trace().norm();
    if tr > INPUT_NORM_TOL {
        return Err(QsnError::numeric(format!(
            "derivative has non-zero trace {tr:e}"
        )));
    }
    let eig = rho.as_operator().to_nalgebra().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let w = vecs.adjoint() * drho.to_nalgebra() * vecs;
    let lam = &eig.eigenvalues;
    let dim = rho.dim();
    let mut q = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let s = lam[i] + lam[j];
            if s > eig_tol {
                q += 2.0 * w[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(q.max(0.0))
}

/// `F = Σ_m (∂p_m)² / p_m`, skipping outcomes with `p_m <` [`P_FLOOR`].
pub fn cfi(probs: &[f64], dprobs: &[f64]) -> Result<f64> {
    if probs.len() != dprobs.len() {
        return Err(QsnError::config(
            "probability and derivative vectors differ in length",
        ));
    }
    if let Some(p) = probs.iter().find(|&&p| p < -PSD_TOL || !p.is_finite()) {
        return Err(QsnError::numeric(format!("invalid probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > INPUT_NORM_TOL {
        return Err(QsnError::numeric(format!("probabilities sum to {total}")));
    }
    Ok(probs
        .iter()
        .zip(dprobs)
        .filter(|(&p, _)| p >= P_FLOOR)
        .map(|(p, d)| d * d / p)
        .sum())
}

/// `1/(ν · info)`.
pub fn crb(nu: u64, info: f64) -> Result<f64> {
    if nu == 0 {
        return Err(QsnError::domain("measurement count must be positive"));
    }
    if !(info > 0.0) {
        return Err(QsnError::domain(format!(
            "Fisher information must be positive, got {info}"
        )));
    }
    Ok(1.0 / (nu as f64 * info))
}

/// Outcome probabilities after `M(μ) V(δ, α)` on `prepared`, and their exact
/// `δ`-derivatives `∂p_m = 2 Re[conj(⟨m|MΨ⟩) ⟨m|M∂Ψ⟩]`.
pub fn probs_and_derivatives(
    prepared: &StateVector,
    dm: &DmInteraction,
    meas: &AnsatzSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let psi = apply_v(prepared, dm);
    let dpsi = v_delta_derivative(prepared, dm);
    let a = crate::ansatz::apply_ansatz(&psi, meas)?;
    let b = crate::ansatz::apply_ansatz(&dpsi, meas)?;
    let probs = a.basis_probabilities();
    let dprobs = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| 2.0 * (x.conj() * y).re)
        .collect();
    Ok((probs, dprobs))
}

pub fn dprobs_wrt_delta(
    prepared: &StateVector,
    dm: &DmInteraction,
    meas_spec: &AnsatzSpec,
) -> Result<Vec<f64>> {
    Ok(probs_and_derivatives(prepared, dm, meas_spec)?.1)
}

/// CFI of the computational-basis readout after `meas`.
pub fn measurement_cfi(
    prepared: &StateVector,
    dm: &DmInteraction,
    meas: &AnsatzSpec,
) -> Result<f64> {
    let (p, dp) = probs_and_derivatives(prepared, dm, meas)?;
    cfi(&p, &dp)
}
