//! Numeric tolerances and floors shared by every module.

/// Norm and trace preservation, Kraus completeness.
pub const NORM_TOL: f64 = 1e-12;

/// Maximum entrywise deviation of `U†U` from the identity.
pub const UNITARY_TOL: f64 = 1e-10;

/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-10;

/// Looser normalisation check for states handed in by callers after long
/// circuits; also the tolerance on probability vectors summing to one.
pub const INPUT_NORM_TOL: f64 = 1e-10;

/// Hermiticity of operators passed to the mixed-state QFI.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Outcomes below this probability are left out of the classical Fisher sum.
pub const P_FLOOR: f64 = 1e-12;

/// Eigenvalue-pair cutoff in the symmetric-logarithmic-derivative sum.
pub const EIG_TOL: f64 = 1e-12;

/// Below this Fisher information a cost `1/info` is treated as unbounded.
pub const Q_FLOOR: f64 = 1e-9;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;
