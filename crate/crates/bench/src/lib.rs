//! Fixtures shared by the criterion benchmarks in `benches/`.

use qsn_core::{param_count, AnsatzSpec, BuiltinTopology, Topology};

/// A forward ansatz on a built-in graph with fixed, irregular angles.
pub fn spec(which: BuiltinTopology, layers: usize) -> AnsatzSpec {
    let topology = Topology::builtin(which);
    let params = (0..param_count(&topology, layers))
        .map(|k| (k as f64 * 0.754_877_666).fract() * std::f64::consts::TAU)
        .collect();
    AnsatzSpec::new(topology, layers, params, false).expect("valid fixture")
}
