//! End-to-end acceptance run.
//!
//! Prints one `[PASS]`/`[FAIL]` line per criterion followed by the measured
//! values. The process exits successfully after reporting; set
//! `QSN_ACCEPTANCE_STRICT=1` to turn any failure into a non-zero exit.

use std::cell::OnceCell;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use qsn_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DELTA0: f64 = 0.05;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }

    fn within(&mut self, elapsed: Duration, budget: Duration) {
        self.check(
            elapsed <= budget,
            format!(
                "runtime {:.1} s (budget {} s)",
                elapsed.as_secs_f64(),
                budget.as_secs()
            ),
        );
    }
}

struct Prepared {
    spec: AnsatzSpec,
    qfi: f64,
}

struct Measured {
    layers: usize,
    spec: AnsatzSpec,
    cfi: f64,
}

/// Optimisation results reused by several criteria. Every run uses the
/// default settings with the full 2000-iteration budget.
struct Shared {
    settings: OptimizerSettings,
    f4: OnceCell<Prepared>,
    f9: OnceCell<Vec<Prepared>>,
    meas: OnceCell<Vec<(usize, OptimizationResult)>>,
}

impl Shared {
    fn new() -> Self {
        Self {
            settings: OptimizerSettings {
                conv_tol: 0.0,
                ..Default::default()
            },
            f4: OnceCell::new(),
            f9: OnceCell::new(),
            meas: OnceCell::new(),
        }
    }

    fn dm(&self) -> DmInteraction {
        DmInteraction::new(DELTA0, 0.0)
    }

    fn prepare(&self, topology: &Topology, layers: usize) -> Prepared {
        let r = optimize_preparation(topology, layers, self.dm(), &self.settings).unwrap();
        Prepared {
            spec: AnsatzSpec::new(topology.clone(), layers, r.best_params.clone(), false).unwrap(),
            qfi: r.best_information(),
        }
    }

    fn f4(&self) -> &Prepared {
        self.f4
            .get_or_init(|| self.prepare(&Topology::builtin(BuiltinTopology::F4), 1))
    }

    /// F9 at `L1 = 1, 2`.
    fn f9(&self) -> &[Prepared] {
        self.f9.get_or_init(|| {
            let t = Topology::builtin(BuiltinTopology::F9);
            (1..=2).map(|l| self.prepare(&t, l)).collect()
        })
    }

    fn measurements(&self) -> &[(usize, OptimizationResult)] {
        self.meas.get_or_init(|| {
            (1..=3)
                .map(|l2| {
                    let r = optimize_measurement(&self.f4().spec, l2, self.dm(), &self.settings)
                        .unwrap();
                    (l2, r)
                })
                .collect()
        })
    }

    fn best_measurement(&self) -> Measured {
        let (layers, r) = self
            .measurements()
            .iter()
            .min_by(|a, b| a.1.best_cost.total_cmp(&b.1.best_cost))
            .unwrap();
        let topology = self.f4().spec.topology.clone();
        Measured {
            layers: *layers,
            spec: AnsatzSpec::new(topology, *layers, r.best_params.clone(), true).unwrap(),
            cfi: r.best_information(),
        }
    }
}

fn prepared_state(spec: &AnsatzSpec) -> StateVector {
    apply_ansatz(&StateVector::init_ground(spec.n_qubits()).unwrap(), spec).unwrap()
}

/// `4 Var(Σ_k σ_x^k)` by explicit bit flips on the computational basis.
fn variance_oracle(psi: &StateVector) -> f64 {
    let n = psi.n_qubits();
    let a = psi.amplitudes();
    let sx = |v: &[C64]| -> Vec<C64> {
        (0..v.len())
            .map(|b| (0..n).map(|k| v[b ^ (1 << k)]).sum())
            .collect()
    };
    let s1 = sx(a);
    let s2 = sx(&s1);
    let dot = |u: &[C64], v: &[C64]| -> C64 { u.iter().zip(v).map(|(x, y)| x.conj() * y).sum() };
    4.0 * (dot(a, &s2).re - dot(a, &s1).re.powi(2))
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let dm = DmInteraction::new(DELTA0, 0.0);
    for n in [4usize, 9] {
        let nf = n as f64;
        let probes = [
            ("|g>^N", StateVector::init_ground(n).unwrap(), 4.0 * nf),
            ("|e>^N", excited_state(n).unwrap(), 4.0 * nf),
            ("GHZ", ghz_state(n).unwrap(), 4.0 * nf),
            ("optimal", optimal_state(n, 0.0).unwrap(), 4.0 * nf * nf),
        ];
        for (label, psi, expect) in probes {
            let q = probe_qfi(&psi, &dm).unwrap();
            let oracle = variance_oracle(&psi);
            out.check(
                (q - expect).abs() <= 1e-9 && (oracle - expect).abs() <= 1e-9,
                format!("N={n} {label}: qfi {q:.12} oracle {oracle:.12} expected {expect}"),
            );
        }
    }
    out.within(start.elapsed(), Duration::from_secs(1));
    out
}

fn criterion_2(shared: &Shared) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let f4 = shared.f4().qfi;
    out.check(
        f4 >= 60.0,
        format!("F4 best-of-5 QFI {f4:.12} (threshold 60, ceiling 64)"),
    );

    // All three reach the 4N² ceiling, so they are ordered at the resolution
    // of the optimiser rather than exactly.
    let resolution = 1e-9 * 64.0;
    for b in [
        BuiltinTopology::S4,
        BuiltinTopology::R4,
        BuiltinTopology::L4,
    ] {
        let q = shared.prepare(&Topology::builtin(b), 1).qfi;
        out.check(
            f4 >= q - resolution && q >= 16.0,
            format!("F4 {f4:.12} >= {b} {q:.12} >= GHZ 16 (resolution {resolution:.1e})"),
        );
    }
    let ghz = probe_qfi(&ghz_state(4).unwrap(), &shared.dm()).unwrap();
    out.check(
        (ghz - 16.0).abs() < 1e-9,
        format!("GHZ fixed probe QFI {ghz:.12}"),
    );
    out.within(start.elapsed(), Duration::from_secs(300));
    out
}

fn criterion_3(shared: &Shared) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let f9 = shared.f9();
    let (q1, q2) = (f9[0].qfi, f9[1].qfi);
    out.check(
        q2 >= q1,
        format!("F9 QFI at L1=2 {q2:.6} >= at L1=1 {q1:.6} (ceiling 324)"),
    );
    let best9 = q1.max(q2);
    let f4 = shared.f4().qfi;
    out.check(
        best9 > f4,
        format!("best F9 QFI {best9:.6} > F4 QFI {f4:.6}"),
    );
    out.within(start.elapsed(), Duration::from_secs(1800));
    out
}

fn criterion_4(shared: &Shared) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let phi = prepared_state(&shared.f4().spec);
    let qfi = |delta: f64, alpha: f64| probe_qfi(&phi, &DmInteraction::new(delta, alpha)).unwrap();

    let qs: Vec<f64> = [1e-3, 1e-2, 1e-1, 1.0]
        .iter()
        .map(|&d| qfi(d, 0.0))
        .collect();
    let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi;
    out.check(
        spread <= 1e-9,
        format!("QFI over δ ∈ {{1e-3, 1e-2, 1e-1, 1}}: relative spread {spread:.2e}"),
    );

    let alphas: Vec<f64> = (0..17).map(|k| TAU * k as f64 / 16.0).collect();
    let qb = |a: f64| 1.0 / qfi(DELTA0, a);
    let periodic = alphas
        .iter()
        .map(|&a| (qb(a) - qb(a + TAU)).abs())
        .fold(0.0, f64::max);
    out.check(
        periodic <= 1e-8,
        format!("max |QB(α) − QB(α + 2π)| = {periodic:.2e}"),
    );
    let mirror = alphas
        .iter()
        .map(|&a| (qb(a) - qb(PI - a)).abs())
        .fold(0.0, f64::max);
    out.check(
        mirror <= 1e-8,
        format!("max |QB(α) − QB(π − α)| over 17 points = {mirror:.2e}"),
    );
    out.note(format!(
        "QB(0) = {:.10}, QB(π/2) = {:.10}",
        qb(0.0),
        qb(PI / 2.0)
    ));
    out.within(start.elapsed(), Duration::from_secs(60));
    out
}

fn criterion_5(shared: &Shared) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let qb = 1.0 / shared.f4().qfi;
    let phi = prepared_state(&shared.f4().spec);
    let mut cbs = Vec::new();
    for (l2, r) in shared.measurements() {
        let worst = r
            .restart_costs
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        out.check(
            worst >= qb - 1e-9,
            format!("L2={l2}: min CB over restarts {worst:.12} >= QB {qb:.12}"),
        );
        let spec = AnsatzSpec::new(
            shared.f4().spec.topology.clone(),
            *l2,
            r.best_params.clone(),
            true,
        )
        .unwrap();
        let recomputed = 1.0 / measurement_cfi(&phi, &shared.dm(), &spec).unwrap();
        out.check(
            (recomputed - r.best_cost).abs() <= 1e-12,
            format!(
                "L2={l2}: reported CB {:.12} matches recomputed {recomputed:.12}",
                r.best_cost
            ),
        );
        cbs.push(r.best_cost);
    }
    let best = shared.best_measurement();
    let cb = 1.0 / best.cfi;
    out.check(
        cb <= 1.1 * qb,
        format!(
            "best CB {cb:.12} at L2={} within 10% of QB {qb:.12} (ratio {:.9})",
            best.layers,
            cb / qb
        ),
    );
    out.note(format!("CB vs L2: {cbs:?}"));
    out.within(start.elapsed(), Duration::from_secs(600));
    out
}

fn criterion_6(shared: &Shared) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let prep = &shared.f4().spec;
    let meas = shared.best_measurement();
    let (lo, hi) = bayes::DEFAULT_PRIOR;
    let points = bayes::DEFAULT_GRID_POINTS;
    let prior = Posterior::uniform(lo, hi, points).unwrap();
    let table = likelihood_table(prep, &meas.spec, 0.0, prior.grid()).unwrap();
    let truth = likelihood_table(prep, &meas.spec, 0.0, &[DELTA0]).unwrap();
    let p_true = truth.row(0);

    let trials = 20u64;
    let mut improved = 0;
    let mut scaled_var = Vec::new();
    let mut biases = Vec::new();
    for t in 0..trials {
        let run = |nu: usize, seed: u64| {
            let draws = sample_outcomes(p_true, nu, seed).unwrap();
            estimate(
                &update_posterior_batch(&prior, &draws, &table).unwrap(),
                DELTA0,
            )
        };
        let small = run(100, t);
        let large = run(10_000, 1_000 + t);
        if large.bias.abs() < small.bias.abs() {
            improved += 1;
        }
        scaled_var.push(large.nu as f64 * large.variance);
        biases.push((small.bias, large.bias));
    }
    let need = (0.95 * trials as f64).ceil() as usize;
    out.check(
        improved >= need,
        format!("|bias| at ν=1e4 below ν=1e2 in {improved}/{trials} trials (need {need})"),
    );
    let mean_scaled = scaled_var.iter().sum::<f64>() / trials as f64;
    let f = meas.cfi;
    out.check(
        mean_scaled >= 0.98 / f && mean_scaled <= 10.0 / f,
        format!(
            "ν·Var at ν=1e4 (mean of {trials}) {mean_scaled:.4e} in [{:.4e}, {:.4e}] (F = {f:.9})",
            0.98 / f,
            10.0 / f
        ),
    );
    let mean_abs = |k: usize| {
        biases
            .iter()
            .map(|b| if k == 0 { b.0.abs() } else { b.1.abs() })
            .sum::<f64>()
            / trials as f64
    };
    out.note(format!(
        "mean |bias|: ν=1e2 {:.3e}, ν=1e4 {:.3e}",
        mean_abs(0),
        mean_abs(1)
    ));
    out.within(start.elapsed(), Duration::from_secs(600));
    out
}

fn criterion_7(shared: &Shared) -> Outcome {
    let mut out = Outcome::new();
    let lambdas: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
    let f9 = shared.f9();
    let best9 = if f9[1].qfi > f9[0].qfi {
        &f9[1]
    } else {
        &f9[0]
    };
    for (label, spec, paper, budget) in [
        ("F4", &shared.f4().spec, 1.68e-5, 300),
        ("F9", &best9.spec, 3.73e-5, 1800),
    ] {
        let start = Instant::now();
        let sweep = dephasing_sweep(spec, &shared.dm(), &lambdas).unwrap();
        let monotone = sweep.qb_values.windows(2).all(|w| w[1] >= w[0] - 1e-14);
        out.check(
            monotone,
            format!(
                "{label} (L1={}): QB non-decreasing on λ = 0..0.9",
                spec.layers
            ),
        );
        let d = sweep.delta_vs_noiseless;
        out.check(
            d <= 1e-3,
            format!("{label}: Δ = QB(0.9) − QB(0) = {d:.3e} (reference value {paper:.2e})"),
        );
        out.within(start.elapsed(), Duration::from_secs(budget));
    }
    out
}

fn rel_err(exact: &[f64], approx: &[f64]) -> f64 {
    let diff: f64 = exact
        .iter()
        .zip(approx)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = approx.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

/// Fourth-order central difference.
fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

fn random_spec(
    rng: &mut ChaCha8Rng,
    topology: BuiltinTopology,
    layers: usize,
    daggered: bool,
) -> AnsatzSpec {
    let t = Topology::builtin(topology);
    let n = param_count(&t, layers);
    AnsatzSpec::new(
        t,
        layers,
        (0..n).map(|_| rng.gen_range(0.0..TAU)).collect(),
        daggered,
    )
    .unwrap()
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let h = 1e-4;
    let four = [
        BuiltinTopology::L4,
        BuiltinTopology::R4,
        BuiltinTopology::S4,
        BuiltinTopology::F4,
    ];
    let configs = [
        (BuiltinTopology::L4, 1),
        (BuiltinTopology::R4, 1),
        (BuiltinTopology::S4, 2),
        (BuiltinTopology::F4, 1),
        (BuiltinTopology::F4, 2),
        (BuiltinTopology::L4, 3),
        (BuiltinTopology::R4, 2),
        (BuiltinTopology::S4, 1),
        (BuiltinTopology::S9, 1),
        (BuiltinTopology::RS9, 1),
    ];

    let mut worst = [0.0f64; 4];
    for (topo, layers) in configs {
        let prep = random_spec(&mut rng, topo, layers, false);
        let meas = random_spec(&mut rng, topo, 1 + layers % 2, true);
        let dm = DmInteraction::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..TAU));
        let phi = prepared_state(&prep);

        let grad = grad_cost_theta(&prep, &dm).unwrap();
        let fd: Vec<f64> = (0..prep.n_params())
            .map(|k| {
                central_diff(
                    |x| {
                        let mut s = prep.clone();
                        s.params[k] = x;
                        1.0 / probe_qfi(&prepared_state(&s), &dm).unwrap()
                    },
                    prep.params[k],
                    h,
                )
            })
            .collect();
        worst[0] = worst[0].max(rel_err(&grad, &fd));

        let grad = grad_cost_mu(&prep, &meas, &dm).unwrap();
        let fd: Vec<f64> = (0..meas.n_params())
            .map(|k| {
                central_diff(
                    |x| {
                        let mut s = meas.clone();
                        s.params[k] = x;
                        1.0 / measurement_cfi(&phi, &dm, &s).unwrap()
                    },
                    meas.params[k],
                    h,
                )
            })
            .collect();
        worst[1] = worst[1].max(rel_err(&grad, &fd));

        let exact = v_delta_derivative(&phi, &dm);
        let component = |i: usize, re: bool| {
            central_diff(
                |d| {
                    let a = apply_v(&phi, &DmInteraction::new(d, dm.alpha)).amplitudes()[i];
                    if re {
                        a.re
                    } else {
                        a.im
                    }
                },
                dm.delta,
                h,
            )
        };
        let ex: Vec<f64> = exact
            .amplitudes()
            .iter()
            .flat_map(|a| [a.re, a.im])
            .collect();
        let fd: Vec<f64> = (0..phi.dim())
            .flat_map(|i| [component(i, true), component(i, false)])
            .collect();
        worst[2] = worst[2].max(rel_err(&ex, &fd));

        let dp = dprobs_wrt_delta(&phi, &dm, &meas).unwrap();
        let fd: Vec<f64> = (0..dp.len())
            .map(|m| {
                central_diff(
                    |d| {
                        let psi = apply_v(&phi, &DmInteraction::new(d, dm.alpha));
                        apply_ansatz(&psi, &meas).unwrap().basis_probabilities()[m]
                    },
                    dm.delta,
                    h,
                )
            })
            .collect();
        worst[3] = worst[3].max(rel_err(&dp, &fd));
    }
    for (label, w) in [
        "θ-gradient of 1/Q",
        "μ-gradient of 1/F",
        "δ-derivative of V|φ⟩",
        "dprobs/dδ",
    ]
    .iter()
    .zip(worst)
    {
        out.check(
            w <= 1e-6,
            format!("{label}: worst relative error over 10 configs {w:.2e}"),
        );
    }

    let mut worst = [0.0f64; 6];
    for case in 0..100 {
        let topo = four[case % 4];
        let prep = random_spec(&mut rng, topo, 1 + case % 2, false);
        let dm = DmInteraction::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..TAU));
        let lambda = rng.gen_range(0.0..=1.0);

        let phi = prepared_state(&prep);
        worst[0] = worst[0].max((phi.norm_sqr() - 1.0).abs());
        let back = apply_ansatz(&phi, &prep.dagger()).unwrap();
        let ground = StateVector::init_ground(4).unwrap();
        let round_trip = back
            .amplitudes()
            .iter()
            .zip(ground.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst[1] = worst[1].max(round_trip);

        let kraus = dephasing_kraus(lambda).unwrap();
        let mut completeness = Mat2::zero();
        for k in kraus.operators() {
            completeness = completeness + k.adjoint() * *k;
        }
        worst[2] = worst[2].max(completeness.max_abs_diff(&Mat2::identity()));

        let (rho, _) = noisy_probe(&prep, &dm, lambda).unwrap();
        worst[3] = worst[3].max((rho.trace() - C64::new(1.0, 0.0)).norm());
        worst[4] = worst[4].max(rho.as_operator().hermiticity_error());
        let min_eig = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        worst[5] = worst[5].max(-min_eig);
    }
    let limits = [
        ("state norm after ansatz", 1e-12),
        ("ansatz round trip", 1e-12),
        ("Kraus completeness", 1e-12),
        ("trace after dephasing", 1e-12),
        ("Hermiticity after dephasing", 1e-12),
        ("negative eigenvalue after dephasing", 1e-10),
    ];
    for ((label, limit), w) in limits.iter().zip(worst) {
        out.check(
            w <= *limit,
            format!("{label}: worst over 100 cases {w:.2e} (limit {limit:.0e})"),
        );
    }
    out.within(start.elapsed(), Duration::from_secs(60));
    out
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    // `cargo test` passes harness flags through; only a listing request matters here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let shared = Shared::new();
    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("analytic QFI oracles", Box::new(criterion_1)),
        (
            "optimisation reaches near-ceiling",
            Box::new(|| criterion_2(&shared)),
        ),
        ("depth behaviour at N=9", Box::new(|| criterion_3(&shared))),
        (
            "QB flat in δ, symmetric in α",
            Box::new(|| criterion_4(&shared)),
        ),
        (
            "measurement optimisation",
            Box::new(|| criterion_5(&shared)),
        ),
        ("Bayesian pipeline", Box::new(|| criterion_6(&shared))),
        ("dephasing robustness", Box::new(|| criterion_7(&shared))),
        ("numerical hygiene", Box::new(criterion_8)),
    ];

    let mut passed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {}: {title} ({:.1} s)",
            k + 1,
            start.elapsed().as_secs_f64()
        );
        for line in &outcome.lines {
            println!("    {line}");
        }
        passed += outcome.pass as usize;
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());

    let strict = std::env::var("QSN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < criteria.len() {
        std::process::exit(1);
    }
}
