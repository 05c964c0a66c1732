//! Parameterised circuits shaped by a network topology, and reference probes.
//!
//! Layout of a preparation circuit with `L` layers on a graph with edge list
//! `E` (canonical order):
//!
//! ```text
//! U_rot on every qubit                     3·N parameters
//! repeat L times:
//!     for (i, j) in E:
//!         CZ(i, j); U_rot on i; U_rot on j   6 parameters per edge
//! ```
//!
//! `U_rot = R_z(θ_z)·R_y(θ_y)·R_x(θ_x)`, so `R_x` acts first. Rotations are
//! `R_a(θ) = exp(−iθσ_a/2)`. A daggered spec runs the same gate list in
//! reverse with every rotation inverted; its parameter vector is
//! independent, and parameter `k` always belongs to the mirror image of the
//! gate carrying parameter `k` in the forward circuit.

use serde::{Deserialize, Serialize};

use crate::error::{QsnError, Result};
use crate::sim::{
    apply_cz_in_place, apply_mat_in_place, inner, Mat2, StateVector, C64, I, ONE, ZERO,
};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> Mat2 {
        match self {
            Axis::X => Mat2::pauli_x(),
            Axis::Y => Mat2::pauli_y(),
            Axis::Z => Mat2::pauli_z(),
        }
    }

    /// `exp(−iθσ/2)`.
    pub fn rotation(self, theta: f64) -> Mat2 {
        let (s, c) = (theta / 2.0).sin_cos();
        let (cc, ss) = (C64::new(c, 0.0), C64::new(s, 0.0));
        match self {
            Axis::X => Mat2::new(cc, -I * ss, -I * ss, cc),
            Axis::Y => Mat2::new(cc, -ss, ss, cc),
            Axis::Z => Mat2::diag(C64::new(c, -s), C64::new(c, s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Rot {
        qubit: usize,
        axis: Axis,
        param: usize,
    },
    Cz(usize, usize),
}

pub fn param_count(topology: &Topology, layers: usize) -> usize {
    3 * topology.n_qubits() + layers * 6 * topology.edges().len()
}

fn push_rot_block(gates: &mut Vec<Gate>, qubit: usize, next: &mut usize) {
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        gates.push(Gate::Rot {
            qubit,
            axis,
            param: *next,
        });
        *next += 1;
    }
}

/// Gate list of the forward (preparation) circuit, in application order.
pub fn forward_gates(topology: &Topology, layers: usize) -> Vec<Gate> {
    let mut gates =
        Vec::with_capacity(param_count(topology, layers) + layers * topology.edges().len());
    let mut next = 0;
    for q in 0..topology.n_qubits() {
        push_rot_block(&mut gates, q, &mut next);
    }
    for _ in 0..layers {
        for &(i, j) in topology.edges() {
            gates.push(Gate::Cz(i, j));
            push_rot_block(&mut gates, i, &mut next);
            push_rot_block(&mut gates, j, &mut next);
        }
    }
    gates
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub topology: Topology,
    pub layers: usize,
    pub params: Vec<f64>,
    pub daggered: bool,
}

impl AnsatzSpec {
    pub fn new(
        topology: Topology,
        layers: usize,
        params: Vec<f64>,
        daggered: bool,
    ) -> Result<Self> {
        let spec = Self {
            topology,
            layers,
            params,
            daggered,
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn zeros(topology: Topology, layers: usize, daggered: bool) -> Self {
        let params = vec![0.0; param_count(&topology, layers)];
        Self {
            topology,
            layers,
            params,
            daggered,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.topology.n_qubits()
    }

    pub fn n_params(&self) -> usize {
        param_count(&self.topology, self.layers)
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.topology.clone(), self.layers, params, self.daggered)
    }

    /// Same structure and parameters, run in the opposite direction.
    pub fn dagger(&self) -> Self {
        Self {
            daggered: !self.daggered,
            ..self.clone()
        }
    }

    fn check(&self) -> Result<()> {
        let expected = self.n_params();
        if self.params.len() != expected {
            return Err(QsnError::config(format!(
                "{} parameters given, ansatz on {} with {} layer(s) needs {expected}",
                self.params.len(),
                self.topology.name(),
                self.layers
            )));
        }
        if let Some(k) = self.params.iter().position(|p| !p.is_finite()) {
            return Err(QsnError::config(format!("parameter {k} is not finite")));
        }
        Ok(())
    }

    pub(crate) fn circuit(&self) -> Circuit<'_> {
        let mut gates = forward_gates(&self.topology, self.layers);
        if self.daggered {
            gates.reverse();
        }
        Circuit {
            n_qubits: self.n_qubits(),
            gates,
            params: &self.params,
            sign: if self.daggered { -1.0 } else { 1.0 },
        }
    }
}

/// Flattened circuit ready to run on raw amplitudes. Rotation angles are
/// `sign · params[k]`.
pub(crate) struct Circuit<'a> {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub params: &'a [f64],
    pub sign: f64,
}

impl Circuit<'_> {
    fn matrix(&self, axis: Axis, param: usize) -> Mat2 {
        axis.rotation(self.sign * self.params[param])
    }

    fn apply_gate(&self, amps: &mut [C64], gate: &Gate) {
        match *gate {
            Gate::Rot { qubit, axis, param } => {
                apply_mat_in_place(amps, self.n_qubits, qubit, &self.matrix(axis, param))
            }
            Gate::Cz(i, j) => apply_cz_in_place(amps, self.n_qubits, i, j),
        }
    }

    fn unapply_gate(&self, amps: &mut [C64], gate: &Gate) {
        match *gate {
            Gate::Rot { qubit, axis, param } => apply_mat_in_place(
                amps,
                self.n_qubits,
                qubit,
                &self.matrix(axis, param).adjoint(),
            ),
            Gate::Cz(i, j) => apply_cz_in_place(amps, self.n_qubits, i, j),
        }
    }

    /// `d/dθ R_a(sθ) = (−i s σ_a / 2) R_a(sθ)`.
    fn generator(&self, axis: Axis) -> Mat2 {
        axis.pauli().scale(C64::new(0.0, -0.5 * self.sign))
    }

    pub fn run(&self, amps: &mut [C64]) {
        for g in &self.gates {
            self.apply_gate(amps, g);
        }
    }

    /// Runs the circuit with the generator of parameter `k` inserted after its gate.
    pub fn run_with_insertion(&self, amps: &mut [C64], k: usize) {
        for g in &self.gates {
            self.apply_gate(amps, g);
            if let Gate::Rot { qubit, axis, param } = *g {
                if param == k {
                    apply_mat_in_place(amps, self.n_qubits, qubit, &self.generator(axis));
                }
            }
        }
    }

    /// Adjoint-mode gradient of real-linear functionals of the output.
    ///
    /// Each `(bra, ket)` pair holds vectors at the circuit *output*, where
    /// `ket = C(θ)|in⟩`. Returns `g_k = Σ_pairs Re⟨bra|∂_k ket⟩` for every
    /// parameter, using one backward sweep.
    pub fn adjoint_gradient(&self, mut pairs: Vec<(Vec<C64>, Vec<C64>)>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut scratch = vec![ZERO; 1 << self.n_qubits];
        for g in self.gates.iter().rev() {
            if let Gate::Rot { qubit, axis, param } = *g {
                let gen = self.generator(axis);
                let mut acc = 0.0;
                for (bra, ket) in &pairs {
                    scratch.copy_from_slice(ket);
                    apply_mat_in_place(&mut scratch, self.n_qubits, qubit, &gen);
                    acc += inner(bra, &scratch).re;
                }
                grad[param] += acc;
            }
            for (bra, ket) in pairs.iter_mut() {
                self.unapply_gate(bra, g);
                self.unapply_gate(ket, g);
            }
        }
        grad
    }
}

fn check_state(state: &StateVector, spec: &AnsatzSpec) -> Result<()> {
    spec.check()?;
    if state.n_qubits() != spec.n_qubits() {
        return Err(QsnError::config(format!(
            "state has {} qubits, ansatz expects {}",
            state.n_qubits(),
            spec.n_qubits()
        )));
    }
    Ok(())
}

/// `U(θ)|state⟩` (or the daggered circuit when `spec.daggered`).
pub fn apply_ansatz(state: &StateVector, spec: &AnsatzSpec) -> Result<StateVector> {
    check_state(state, spec)?;
    let mut out = state.clone();
    spec.circuit().run(out.amplitudes_mut());
    Ok(out)
}

/// `∂/∂θ_k U(θ)|state⟩` by generator insertion. Not normalised.
pub fn derivative_state(state: &StateVector, spec: &AnsatzSpec, k: usize) -> Result<StateVector> {
    check_state(state, spec)?;
    if k >= spec.n_params() {
        return Err(QsnError::config(format!(
            "parameter index {k} out of range ({} parameters)",
            spec.n_params()
        )));
    }
    let mut out = state.clone();
    spec.circuit().run_with_insertion(out.amplitudes_mut(), k);
    Ok(out)
}

fn register(n: usize) -> Result<StateVector> {
    StateVector::init_ground(n)
}

/// `(|g⟩^⊗n + |e⟩^⊗n)/√2`.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    let mut s = register(n)?;
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let amps = s.amplitudes_mut();
    let last = amps.len() - 1;
    amps[0] = r;
    amps[last] = r;
    Ok(s)
}

/// `|e⟩^⊗n`.
pub fn excited_state(n: usize) -> Result<StateVector> {
    let mut s = register(n)?;
    let amps = s.amplitudes_mut();
    let last = amps.len() - 1;
    amps[0] = ZERO;
    amps[last] = ONE;
    Ok(s)
}

fn product_state(n: usize, single: [C64; 2]) -> Vec<C64> {
    (0..1usize << n)
        .map(|b| (0..n).fold(ONE, |acc, q| acc * single[(b >> (n - 1 - q)) & 1]))
        .collect()
}

/// `(|ψ₊⟩^⊗n + |ψ₋⟩^⊗n)/√2` with `|ψ_±⟩ = (|g⟩ ± e^{iα}|e⟩)/√2`: the
/// equal superposition of the extreme eigenvectors of the sensing generator.
pub fn optimal_state(n: usize, alpha: f64) -> Result<StateVector> {
    register(n)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let phase = C64::from_polar(r, alpha);
    let plus = product_state(n, [C64::new(r, 0.0), phase]);
    let minus = product_state(n, [C64::new(r, 0.0), -phase]);
    // ⟨ψ₊|ψ₋⟩ = 0, so the two product states are orthogonal and 1/√2 normalises exactly.
    let amps = plus.iter().zip(&minus).map(|(a, b)| (a + b) * r).collect();
    Ok(StateVector::from_raw(n, amps))
}
