//! Dense pure- and mixed-state simulation.
//!
//! A register of `n` qubits is stored as `2^n` amplitudes (or a `2^n × 2^n`
//! row-major matrix). Qubit 0 is the most significant bit of the basis
//! index, so on two qubits index `0b01` is `|g e⟩`.

use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsnError, Result};
use crate::tol::{HERMITIAN_TOL, INPUT_NORM_TOL, MAX_QUBITS, NORM_TOL, PSD_TOL, UNITARY_TOL};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// 2×2 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn pauli_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn pauli_y() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn pauli_z() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    pub fn hadamard() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(h, h, h, -h)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    pub fn conj(&self) -> Self {
        let m = &self.0;
        Self::new(
            m[0][0].conj(),
            m[0][1].conj(),
            m[1][0].conj(),
            m[1][1].conj(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    /// `max |(U†U − I)_{rc}|`.
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Mat2::identity())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

fn check_n_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(QsnError::config(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn check_qubit(n: usize, qubit: usize) -> Result<()> {
    if qubit >= n {
        return Err(QsnError::config(format!(
            "qubit index {qubit} out of range for {n} qubits"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn stride(n: usize, qubit: usize) -> usize {
    1 << (n - 1 - qubit)
}

/// Applies `m` to `qubit` of a raw amplitude vector. `m` need not be unitary.
pub(crate) fn apply_mat_in_place(amps: &mut [C64], n: usize, qubit: usize, m: &Mat2) {
    let s = stride(n, qubit);
    let [[m00, m01], [m10, m11]] = m.0;
    for base in (0..amps.len()).step_by(2 * s) {
        let (lo, hi) = amps[base..base + 2 * s].split_at_mut(s);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = m00 * x + m01 * y;
            *a1 = m10 * x + m11 * y;
        }
    }
}

pub(crate) fn apply_cz_in_place(amps: &mut [C64], n: usize, i: usize, j: usize) {
    let mask = stride(n, i) | stride(n, j);
    for (b, a) in amps.iter_mut().enumerate() {
        if b & mask == mask {
            *a = -*a;
        }
    }
}

/// `⟨a|b⟩`.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Pure state of an `n`-qubit register.
///
/// Tangent vectors (state derivatives) reuse this type; they are not
/// normalised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn init_ground(n: usize) -> Result<Self> {
        check_n_qubits(n)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { n_qubits: n, amps })
    }

    /// Wraps `amps` after checking the length is a power of two and the norm is one.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let state = Self::from_unnormalized(amps)?;
        let err = (state.norm_sqr() - 1.0).abs();
        if err > INPUT_NORM_TOL {
            return Err(QsnError::numeric(format!(
                "state norm² deviates from 1 by {err:e}"
            )));
        }
        Ok(state)
    }

    /// Wraps an arbitrary vector of length `2^n`, e.g. a derivative.
    pub fn from_unnormalized(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(QsnError::config(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_n_qubits(n)?;
        Ok(Self { n_qubits: n, amps })
    }

    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        let err = (self.norm_sqr() - 1.0).abs();
        if err > INPUT_NORM_TOL {
            return Err(QsnError::numeric(format!(
                "state is not normalised (|norm² − 1| = {err:e})"
            )));
        }
        Ok(())
    }

    /// Returns the state with unitary `u` applied to `qubit`.
    pub fn apply_1q(&self, qubit: usize, u: &Mat2) -> Result<StateVector> {
        check_qubit(self.n_qubits, qubit)?;
        let err = u.unitarity_error();
        if err > UNITARY_TOL {
            return Err(QsnError::numeric(format!(
                "single-qubit gate is not unitary (‖U†U − I‖ = {err:e})"
            )));
        }
        let mut out = self.clone();
        apply_mat_in_place(&mut out.amps, self.n_qubits, qubit, u);
        Ok(out)
    }

    /// Returns the state with a controlled-Z between qubits `i` and `j`.
    pub fn apply_cz(&self, i: usize, j: usize) -> Result<StateVector> {
        check_qubit(self.n_qubits, i)?;
        check_qubit(self.n_qubits, j)?;
        if i == j {
            return Err(QsnError::config(format!(
                "CZ needs two distinct qubits, got {i} twice"
            )));
        }
        let mut out = self.clone();
        apply_cz_in_place(&mut out.amps, self.n_qubits, i, j);
        Ok(out)
    }

    /// `|Ψ⟩⟨Ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(Operator::outer(self, self))
    }

    /// `|⟨m|Ψ⟩|²` for every basis index `m`.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Square operator on an `n`-qubit register, stored row-major.
///
/// Used for density-matrix derivatives, which are Hermitian and traceless
/// rather than valid states.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    n_qubits: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(n: usize) -> Result<Self> {
        check_n_qubits(n)?;
        let dim = 1 << n;
        Ok(Self {
            n_qubits: n,
            data: vec![ZERO; dim * dim],
        })
    }

    /// Builds an operator from row-major entries; `data.len()` must be `4^n`.
    pub fn from_row_major(n: usize, data: Vec<C64>) -> Result<Self> {
        check_n_qubits(n)?;
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(QsnError::config(format!(
                "expected {} entries for {n} qubits, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { n_qubits: n, data })
    }

    /// `|a⟩⟨b|`.
    pub fn outer(a: &StateVector, b: &StateVector) -> Self {
        let dim = a.dim();
        let mut data = Vec::with_capacity(dim * dim);
        for x in a.amplitudes() {
            data.extend(b.amplitudes().iter().map(|y| x * y.conj()));
        }
        Self {
            n_qubits: a.n_qubits(),
            data,
        }
    }

    /// `|a⟩⟨b| + |b⟩⟨a|`: the derivative of `|Ψ⟩⟨Ψ|` when `b = ∂Ψ`.
    pub fn symmetric_outer(a: &StateVector, b: &StateVector) -> Self {
        let mut op = Self::outer(b, a);
        let dim = a.dim();
        for r in 0..dim {
            for c in 0..dim {
                op.data[r * dim + c] += a.amplitudes()[r] * b.amplitudes()[c].conj();
            }
        }
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|k| self.data[k * dim + k]).sum()
    }

    /// `max |A − A†|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.data[r * dim + c] - self.data[c * dim + r].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `Σ_K K_q A K_q†` for a single-qubit Kraus set acting on `qubit`.
    pub fn apply_channel(&self, qubit: usize, kraus: &KrausSet) -> Result<Operator> {
        check_qubit(self.n_qubits, qubit)?;
        let mut acc = vec![ZERO; self.data.len()];
        let mut tmp = self.data.clone();
        for k in kraus.operators() {
            tmp.copy_from_slice(&self.data);
            self.left_apply(&mut tmp, qubit, k);
            self.right_apply_adjoint(&mut tmp, qubit, k);
            for (a, t) in acc.iter_mut().zip(&tmp) {
                *a += t;
            }
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            data: acc,
        })
    }

    // data ← (K on `qubit`) · data
    fn left_apply(&self, data: &mut [C64], qubit: usize, k: &Mat2) {
        let n = self.n_qubits;
        let dim = self.dim();
        let s = stride(n, qubit);
        let [[k00, k01], [k10, k11]] = k.0;
        for base in (0..dim).step_by(2 * s) {
            for r in base..base + s {
                let (top, bottom) = data.split_at_mut((r + s) * dim);
                let row0 = &mut top[r * dim..(r + 1) * dim];
                let row1 = &mut bottom[..dim];
                for (x, y) in row0.iter_mut().zip(row1.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = k00 * a + k01 * b;
                    *y = k10 * a + k11 * b;
                }
            }
        }
    }

    // data ← data · (K on `qubit`)†; each row transforms as a ket under conj(K).
    fn right_apply_adjoint(&self, data: &mut [C64], qubit: usize, k: &Mat2) {
        let n = self.n_qubits;
        let kc = k.conj();
        for row in data.chunks_mut(self.dim()) {
            apply_mat_in_place(row, n, qubit, &kc);
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        let dim = self.dim();
        DMatrix::from_row_slice(dim, dim, &self.data)
    }
}

/// Mixed state: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity of `op`.
    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(QsnError::numeric(format!(
                "density matrix not Hermitian ({herm:e})"
            )));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > NORM_TOL {
            return Err(QsnError::numeric(format!("density matrix trace is {tr}")));
        }
        let rho = Self(op);
        let min_eig = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(QsnError::numeric(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    pub fn n_qubits(&self) -> usize {
        self.0.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0.get(row, col)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_rc|² for Hermitian ρ.
        self.0.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0
            .to_nalgebra()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    }

    /// `ℰ(ρ)` with `ℰ` acting on `qubit` only.
    pub fn apply_channel(&self, qubit: usize, kraus: &KrausSet) -> Result<DensityMatrix> {
        Ok(Self(self.0.apply_channel(qubit, kraus)?))
    }

    /// `⟨m|ρ|m⟩` for every basis index `m`.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.0.get(k, k).re).collect()
    }
}

/// Single-qubit Kraus operators satisfying `Σ K†K = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<Mat2>,
}

impl KrausSet {
    pub fn new(operators: Vec<Mat2>) -> Result<Self> {
        if operators.is_empty() {
            return Err(QsnError::numeric("empty Kraus set"));
        }
        let sum = operators
            .iter()
            .fold(Mat2::zero(), |acc, k| acc + k.adjoint() * *k);
        let err = sum.max_abs_diff(&Mat2::identity());
        if err > NORM_TOL {
            return Err(QsnError::numeric(format!(
                "Kraus set is not trace preserving (‖ΣK†K − I‖ = {err:e})"
            )));
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }
}
