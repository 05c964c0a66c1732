//! Sensing interaction.
//!
//! On resonance each qubit evolves under
//!
//! ```text
//! U(δ, α) = [[cos δ,          i e^{−iα} sin δ],
//!            [i e^{iα} sin δ, cos δ          ]]  = exp(iδG),
//! G = cos α σ_x + sin α σ_y,
//! ```
//!
//! and the register sees `V(δ, α) = U(δ, α)^⊗N`. Because every `G_k`
//! commutes with `V`, `∂_δ V = i(Σ_k G_k) V` exactly.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{apply_mat_in_place, Mat2, StateVector, C64, I, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmInteraction {
    /// Accumulated phase `δ = ητ`, radians.
    pub delta: f64,
    /// Phase offset of the drive, radians.
    pub alpha: f64,
}

impl DmInteraction {
    pub fn new(delta: f64, alpha: f64) -> Self {
        Self { delta, alpha }
    }
}

pub fn u_dm(delta: f64, alpha: f64) -> Mat2 {
    let (s, c) = delta.sin_cos();
    let c = C64::new(c, 0.0);
    Mat2::new(
        c,
        I * C64::from_polar(s, -alpha),
        I * C64::from_polar(s, alpha),
        c,
    )
}

/// Single-qubit generator `cos α σ_x + sin α σ_y`.
pub fn generator(alpha: f64) -> Mat2 {
    Mat2::new(
        ZERO,
        C64::from_polar(1.0, -alpha),
        C64::from_polar(1.0, alpha),
        ZERO,
    )
}

pub(crate) fn apply_v_in_place(amps: &mut [C64], n: usize, dm: &DmInteraction) {
    let u = u_dm(dm.delta, dm.alpha);
    for q in 0..n {
        apply_mat_in_place(amps, n, q, &u);
    }
}

/// `(Σ_k G_k)|x⟩`.
pub(crate) fn total_generator(amps: &[C64], n: usize, alpha: f64) -> Vec<C64> {
    let g = generator(alpha);
    let mut out = vec![ZERO; amps.len()];
    let mut tmp = amps.to_vec();
    for q in 0..n {
        tmp.copy_from_slice(amps);
        apply_mat_in_place(&mut tmp, n, q, &g);
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o += t;
        }
    }
    out
}

/// `V(δ, α)|state⟩`.
pub fn apply_v(state: &StateVector, dm: &DmInteraction) -> StateVector {
    let mut out = state.clone();
    apply_v_in_place(out.amplitudes_mut(), state.n_qubits(), dm);
    out
}

/// `∂_δ [V(δ, α)|prepared⟩] = i Σ_k G_k V|prepared⟩`. Not normalised.
pub fn v_delta_derivative(state_prepared: &StateVector, dm: &DmInteraction) -> StateVector {
    let n = state_prepared.n_qubits();
    let sensed = apply_v(state_prepared, dm);
    let amps = total_generator(sensed.amplitudes(), n, dm.alpha)
        .into_iter()
        .map(|a| I * a)
        .collect();
    StateVector::from_raw(n, amps)
}

/// Excitation probability of `n` independent qubits after phase `δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baseline {
    /// Small-angle form `N δ²`.
    pub approx: f64,
    /// `N sin²δ`.
    pub exact: f64,
}

pub fn individual_baseline(n: usize, delta: f64) -> Result<Baseline> {
    if n == 0 {
        return Err(crate::error::QsnError::config(
            "baseline needs at least one qubit",
        ));
    }
    let n = n as f64;
    Ok(Baseline {
        approx: n * delta * delta,
        exact: n * delta.sin().powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::ghz_state;
    use crate::sim::ONE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
        let amps: Vec<C64> = (0..1 << n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    #[test]
    fn u_dm_examples() {
        assert!(u_dm(0.0, 1.3).max_abs_diff(&Mat2::identity()) < 1e-15);
        let expect = Mat2::new(ZERO, I, I, ZERO);
        assert!(u_dm(FRAC_PI_2, 0.0).max_abs_diff(&expect) < 1e-15);
        let (d1, d2, a) = (0.3, 0.45, 0.7);
        assert!((u_dm(d1, a) * u_dm(d2, a)).max_abs_diff(&u_dm(d1 + d2, a)) < 1e-12);
    }

    #[test]
    fn u_dm_is_unitary_and_generated_by_g() {
        for i in 0..=20 {
            for j in 0..16 {
                let delta = PI * i as f64 / 20.0;
                let alpha = TAU * j as f64 / 16.0;
                let u = u_dm(delta, alpha);
                assert!(u.unitarity_error() < 1e-12);
                let g = generator(alpha);
                assert!((g * g).max_abs_diff(&Mat2::identity()) < 1e-12);
                let rebuilt =
                    Mat2::identity().scale(C64::new(delta.cos(), 0.0)) + g.scale(I * delta.sin());
                assert!(u.max_abs_diff(&rebuilt) < 1e-12);
            }
        }
    }

    #[test]
    fn v_identity_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(&mut rng, 3);
        let out = apply_v(&s, &DmInteraction::new(0.0, 0.4));
        for (a, b) in out.amplitudes().iter().zip(s.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn all_excited_probability_closed_form() {
        for n in 1..=5 {
            let delta = 0.37;
            let g = StateVector::init_ground(n).unwrap();
            let p = apply_v(&g, &DmInteraction::new(delta, 0.2)).basis_probabilities();
            let expect = delta.sin().powi(2 * n as i32);
            assert!((p[(1 << n) - 1] - expect).abs() < 1e-14);
        }
    }

    // Brute force: build U^⊗N as a dense 2^N × 2^N Kronecker product.
    fn kron_power(u: &Mat2, n: usize) -> Vec<Vec<C64>> {
        let dim = 1 << n;
        let mut m = vec![vec![ZERO; dim]; dim];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, entry) in row.iter_mut().enumerate() {
                *entry = (0..n).fold(ONE, |acc, q| {
                    let shift = n - 1 - q;
                    acc * u.0[(r >> shift) & 1][(c >> shift) & 1]
                });
            }
        }
        m
    }

    #[test]
    fn v_on_ghz_matches_kronecker_oracle() {
        for n in [2, 3, 4] {
            let (delta, alpha) = (0.21, 0.9);
            let ghz = ghz_state(n).unwrap();
            let big = kron_power(&u_dm(delta, alpha), n);
            let oracle: Vec<C64> = big
                .iter()
                .map(|row| row.iter().zip(ghz.amplitudes()).map(|(m, a)| m * a).sum())
                .collect();
            let got = apply_v(&ghz, &DmInteraction::new(delta, alpha));
            for (a, b) in got.amplitudes().iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn derivative_single_qubit() {
        let delta = 0.4;
        let g = StateVector::init_ground(1).unwrap();
        let d = v_delta_derivative(&g, &DmInteraction::new(delta, 0.0));
        assert!((d.amplitudes()[0] - C64::new(-delta.sin(), 0.0)).norm() < 1e-15);
        assert!((d.amplitudes()[1] - C64::new(0.0, delta.cos())).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for trial in 0..20 {
            let n = 1 + trial % 4;
            let s = random_state(&mut rng, n);
            let dm = DmInteraction::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..TAU));
            let exact = v_delta_derivative(&s, &dm);
            let plus = apply_v(&s, &DmInteraction::new(dm.delta + h, dm.alpha));
            let minus = apply_v(&s, &DmInteraction::new(dm.delta - h, dm.alpha));
            for ((e, p), m) in exact
                .amplitudes()
                .iter()
                .zip(plus.amplitudes())
                .zip(minus.amplitudes())
            {
                assert!((e - (p - m) / (2.0 * h)).norm() < 1e-8);
            }
            let sensed = apply_v(&s, &dm);
            assert!(sensed.inner(&exact).re.abs() < 1e-10);
        }
    }

    #[test]
    fn baseline_values() {
        let b = individual_baseline(4, 0.05).unwrap();
        assert!((b.approx - 0.01).abs() < 1e-15);
        assert!((b.exact - 4.0 * 0.05_f64.sin().powi(2)).abs() < 1e-15);
        assert_eq!(individual_baseline(7, 0.0).unwrap().approx, 0.0);
        assert!((individual_baseline(9, 0.05).unwrap().approx - 0.0225).abs() < 1e-15);
    }
}
