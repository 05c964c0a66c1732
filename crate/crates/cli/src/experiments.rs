//! One function per experiment; each returns the tables it produced.

use std::path::Path;

use anyhow::Context;
use qsn_core::*;
use serde_json::json;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::output::{col, num, Column, Table};

pub struct Outputs {
    pub tables: Vec<Table>,
    /// Extra artefacts (file name, bytes), e.g. optimised parameters.
    pub extras: Vec<(String, Vec<u8>)>,
    pub summary: Vec<String>,
}

impl Outputs {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            extras: Vec::new(),
            summary: Vec::new(),
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    match cfg.experiment {
        Experiment::QbCompare => qb_compare(cfg),
        Experiment::QbDepth => qb_depth(cfg),
        Experiment::QbSweep => qb_sweep(cfg),
        Experiment::CbDepth => cb_depth(cfg),
        Experiment::CbSweep => cb_sweep(cfg),
        Experiment::Bayes => bayes(cfg),
        Experiment::NoiseSweep => noise_sweep(cfg),
        Experiment::TopologyList => topology_list(cfg),
    }
}

const QFI: Column = col("qfi", "1/rad^2");
const QB: Column = col("qb", "rad^2");
const CFI: Column = col("cfi", "1/rad^2");
const CB: Column = col("cb", "rad^2");
const DELTA: Column = col("delta_rad", "rad");
const ALPHA: Column = col("alpha_rad", "rad");

fn inv(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

fn sensing(cfg: &ExperimentConfig) -> DmInteraction {
    DmInteraction::new(cfg.delta, cfg.alpha)
}

pub fn resolve_topology(name: &str, allow_overdegree: bool) -> anyhow::Result<Topology> {
    if let Ok(b) = name.parse::<BuiltinTopology>() {
        return Ok(Topology::builtin(b));
    }
    let path = Path::new(name);
    if path.is_file() {
        return Topology::from_edge_list_file(path, allow_overdegree)
            .with_context(|| format!("loading topology from {}", path.display()));
    }
    let names: Vec<&str> = BuiltinTopology::ALL.iter().map(|b| b.name()).collect();
    Err(ConfigError(format!(
        "unknown topology '{name}': expected one of {} or an edge-list file",
        names.join(", ")
    ))
    .into())
}

fn optimize(
    cfg: &ExperimentConfig,
    objective: &dyn Objective,
    label: String,
) -> anyhow::Result<OptimizationResult> {
    let settings = cfg.settings();
    let result = match &cfg.checkpoint_dir {
        Some(dir) => minimize_resumable(
            objective,
            &settings,
            &CheckpointPolicy {
                dir: dir.clone(),
                label,
                every: cfg.checkpoint_every,
            },
        )?,
        None => minimize(objective, &settings)?,
    };
    Ok(result)
}

struct Prepared {
    spec: AnsatzSpec,
    result: OptimizationResult,
}

impl Prepared {
    fn qfi(&self) -> f64 {
        self.result.best_information()
    }

    fn state(&self) -> anyhow::Result<StateVector> {
        let ground = StateVector::init_ground(self.spec.n_qubits())?;
        Ok(apply_ansatz(&ground, &self.spec)?)
    }

    fn record(&self) -> serde_json::Value {
        json!({
            "topology": self.spec.topology.name(),
            "layers": self.spec.layers,
            "params": self.spec.params,
            "qfi": self.qfi(),
            "qb": self.result.best_cost,
            "best_restart": self.result.best_restart,
            "restart_costs": self.result.restart_costs,
        })
    }
}

fn prepare(cfg: &ExperimentConfig, topology: &Topology, l1: usize) -> anyhow::Result<Prepared> {
    let cost = PreparationCost::new(topology.clone(), l1, sensing(cfg));
    let result = optimize(cfg, &cost, format!("prep_{}_L{l1}", topology.name()))?;
    let spec = AnsatzSpec::new(topology.clone(), l1, result.best_params.clone(), false)?;
    Ok(Prepared { spec, result })
}

fn measure(cfg: &ExperimentConfig, prepared: &Prepared, l2: usize) -> anyhow::Result<Prepared> {
    let cost = MeasurementCost::new(&prepared.spec, l2, sensing(cfg))?;
    let label = format!(
        "meas_{}_L{}_M{l2}",
        prepared.spec.topology.name(),
        prepared.spec.layers
    );
    let result = optimize(cfg, &cost, label)?;
    let spec = cost.spec(&result.best_params)?;
    Ok(Prepared { spec, result })
}

fn json_bytes(value: &serde_json::Value) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn prepared_topology(cfg: &ExperimentConfig) -> anyhow::Result<Topology> {
    resolve_topology(&cfg.topology, cfg.allow_overdegree)
}

fn qb_compare(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    struct Entry {
        probe: String,
        kind: &'static str,
        l1: Option<usize>,
        n_params: usize,
        qfi: f64,
        best_restart: Option<usize>,
        trace: Vec<(usize, f64)>,
    }
    let dm = sensing(cfg);
    let n = cfg.n;
    let mut entries = Vec::new();
    let mut prepared_records = Vec::new();
    for name in &cfg.topologies {
        let fixed = match name.to_ascii_uppercase().as_str() {
            "GHZ" => Some(ghz_state(n)?),
            "E" => Some(excited_state(n)?),
            "OPT" => Some(optimal_state(n, cfg.alpha)?),
            _ => None,
        };
        if let Some(psi) = fixed {
            entries.push(Entry {
                probe: name.clone(),
                kind: "fixed",
                l1: None,
                n_params: 0,
                qfi: probe_qfi(&psi, &dm)?,
                best_restart: None,
                trace: Vec::new(),
            });
            continue;
        }
        let topology = resolve_topology(name, cfg.allow_overdegree)?;
        if topology.n_qubits() != n {
            return Err(ConfigError(format!(
                "topology {name} has {} qubits but --n is {n}",
                topology.n_qubits()
            ))
            .into());
        }
        let p = prepare(cfg, &topology, cfg.l1)?;
        prepared_records.push(p.record());
        entries.push(Entry {
            probe: topology.name().to_owned(),
            kind: "optimized",
            l1: Some(cfg.l1),
            n_params: p.spec.n_params(),
            qfi: p.qfi(),
            best_restart: Some(p.result.best_restart),
            trace: p.result.cost_trace.clone(),
        });
    }

    // Dense ranking by QB; probes within `rank_tolerance` of the group
    // leader share a rank.
    let qb: Vec<f64> = entries.iter().map(|e| inv(e.qfi)).collect();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| qb[a].total_cmp(&qb[b]));
    let mut ranks = vec![0usize; entries.len()];
    let mut rank = 0;
    let mut leader = f64::NAN;
    for &i in &order {
        if rank == 0 || qb[i] > leader * (1.0 + cfg.rank_tolerance) {
            rank += 1;
            leader = qb[i];
        }
        ranks[i] = rank;
    }

    let mut table = Table::new(
        "qb_compare.csv",
        vec![
            col("rank", "1"),
            col("probe", "name"),
            col("kind", "fixed|optimized"),
            col("l1", "layers"),
            col("n_params", "count"),
            QFI,
            QB,
            col("best_restart", "index"),
        ],
    );
    let mut traces = Table::new(
        "qb_compare_traces.csv",
        vec![
            col("probe", "name"),
            col("iteration", "count"),
            col("cost", "rad^2"),
        ],
    );
    for &i in &order {
        let e = &entries[i];
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        table.push(vec![
            ranks[i].to_string(),
            e.probe.clone(),
            e.kind.to_owned(),
            opt(e.l1),
            e.n_params.to_string(),
            num(e.qfi),
            num(qb[i]),
            opt(e.best_restart),
        ]);
    }
    for e in &entries {
        for (it, c) in &e.trace {
            traces.push(vec![e.probe.clone(), it.to_string(), num(*c)]);
        }
    }

    let mut out = Outputs::new();
    let best: Vec<&str> = order
        .iter()
        .filter(|&&i| ranks[i] == 1)
        .map(|&i| entries[i].probe.as_str())
        .collect();
    out.summary
        .push(format!("lowest QB (rank 1): {}", best.join(", ")));
    out.tables.push(table);
    out.tables.push(traces);
    out.extras.push((
        "preparations.json".into(),
        json_bytes(&json!(prepared_records))?,
    ));
    Ok(out)
}

fn qb_depth(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let topology = prepared_topology(cfg)?;
    let mut table = Table::new(
        "qb_depth.csv",
        vec![
            col("topology", "name"),
            col("l1", "layers"),
            col("n_params", "count"),
            QFI,
            QB,
            col("best_restart", "index"),
            col("iterations", "count"),
        ],
    );
    let mut records = Vec::new();
    let mut best = (0, f64::INFINITY);
    for &l1 in &cfg.depths {
        let p = prepare(cfg, &topology, l1)?;
        let qb = p.result.best_cost;
        if qb < best.1 {
            best = (l1, qb);
        }
        table.push(vec![
            topology.name().to_owned(),
            l1.to_string(),
            p.spec.n_params().to_string(),
            num(p.qfi()),
            num(qb),
            p.result.best_restart.to_string(),
            p.result.cost_trace.len().to_string(),
        ]);
        records.push(p.record());
    }
    let mut out = Outputs::new();
    out.summary.push(format!(
        "{}: lowest QB {} at L1={}",
        topology.name(),
        best.1,
        best.0
    ));
    out.tables.push(table);
    out.extras
        .push(("preparations.json".into(), json_bytes(&json!(records))?));
    Ok(out)
}

fn sweep_tables(
    cfg: &ExperimentConfig,
    prefix: &str,
    mut row: impl FnMut(DmInteraction) -> anyhow::Result<Vec<String>>,
    columns: Vec<Column>,
) -> anyhow::Result<Vec<Table>> {
    let mut by_delta = Table::new(format!("{prefix}_delta.csv"), columns.clone());
    for &d in &cfg.delta_grid {
        by_delta.push(row(DmInteraction::new(d, cfg.alpha))?);
    }
    let mut by_alpha = Table::new(format!("{prefix}_alpha.csv"), columns);
    for &a in &cfg.alpha_grid {
        by_alpha.push(row(DmInteraction::new(cfg.delta, a))?);
    }
    Ok(vec![by_delta, by_alpha])
}

fn qb_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let p = prepare(cfg, &prepared_topology(cfg)?, cfg.l1)?;
    let phi = p.state()?;
    let tables = sweep_tables(
        cfg,
        "qb_sweep",
        |dm| {
            let q = probe_qfi(&phi, &dm)?;
            Ok(vec![num(dm.delta), num(dm.alpha), num(q), num(inv(q))])
        },
        vec![DELTA, ALPHA, QFI, QB],
    )?;
    let mut out = Outputs::new();
    out.summary.push(format!(
        "optimised QB {} at δ={}, α={}",
        p.result.best_cost, cfg.delta, cfg.alpha
    ));
    out.tables = tables;
    out.extras
        .push(("preparation.json".into(), json_bytes(&p.record())?));
    Ok(out)
}

fn cb_depth(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let p = prepare(cfg, &prepared_topology(cfg)?, cfg.l1)?;
    let mut table = Table::new(
        "cb_depth.csv",
        vec![
            col("topology", "name"),
            col("l1", "layers"),
            col("l2", "layers"),
            col("n_params", "count"),
            CFI,
            CB,
            QFI,
            QB,
            col("cb_over_qb", "1"),
        ],
    );
    let mut records = Vec::new();
    for &l2 in &cfg.depths {
        let m = measure(cfg, &p, l2)?;
        let cb = m.result.best_cost;
        table.push(vec![
            p.spec.topology.name().to_owned(),
            cfg.l1.to_string(),
            l2.to_string(),
            m.spec.n_params().to_string(),
            num(m.qfi()),
            num(cb),
            num(p.qfi()),
            num(p.result.best_cost),
            num(cb / p.result.best_cost),
        ]);
        records.push(m.record());
    }
    let mut out = Outputs::new();
    out.summary.push(format!("QB {}", p.result.best_cost));
    out.tables.push(table);
    out.extras
        .push(("preparation.json".into(), json_bytes(&p.record())?));
    out.extras
        .push(("measurements.json".into(), json_bytes(&json!(records))?));
    Ok(out)
}

fn cb_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let p = prepare(cfg, &prepared_topology(cfg)?, cfg.l1)?;
    let m = measure(cfg, &p, cfg.l2)?;
    let phi = p.state()?;
    let tables = sweep_tables(
        cfg,
        "cb_sweep",
        |dm| {
            let f = measurement_cfi(&phi, &dm, &m.spec)?;
            let q = probe_qfi(&phi, &dm)?;
            Ok(vec![
                num(dm.delta),
                num(dm.alpha),
                num(f),
                num(inv(f)),
                num(q),
                num(inv(q)),
            ])
        },
        vec![DELTA, ALPHA, CFI, CB, QFI, QB],
    )?;
    let mut out = Outputs::new();
    out.summary.push(format!(
        "optimised CB {} vs QB {}",
        m.result.best_cost, p.result.best_cost
    ));
    out.tables = tables;
    out.extras
        .push(("preparation.json".into(), json_bytes(&p.record())?));
    out.extras
        .push(("measurement.json".into(), json_bytes(&m.record())?));
    Ok(out)
}

fn bayes(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let p = prepare(cfg, &prepared_topology(cfg)?, cfg.l1)?;
    let m = measure(cfg, &p, cfg.l2)?;
    let grid = uniform_grid(cfg.prior.0, cfg.prior.1, cfg.grid_points)?;
    let table = likelihood_table(&p.spec, &m.spec, cfg.alpha, &grid)?;
    let truth = likelihood_table(&p.spec, &m.spec, cfg.alpha, &[cfg.delta])?;
    let prior = Posterior::uniform(cfg.prior.0, cfg.prior.1, cfg.grid_points)?;
    let (cb, qb) = (m.result.best_cost, p.result.best_cost);
    let max_nu = *cfg.nu.iter().max().expect("validated non-empty");

    let mut trials = Table::new(
        "bayes_trials.csv",
        vec![
            col("nu", "count"),
            col("trial", "index"),
            col("sample_seed", "u64"),
            col("mean_rad", "rad"),
            col("variance_rad2", "rad^2"),
            col("bias_rad", "rad"),
            col("nu_variance_rad2", "rad^2"),
            col("ci95_lo_rad", "rad"),
            col("ci95_hi_rad", "rad"),
        ],
    );
    let mut snapshots = Vec::new();
    let mut per_nu: Vec<Vec<EstimateReport>> = vec![Vec::new(); cfg.nu.len()];
    for trial in 0..cfg.trials {
        // Each trial is one stream of outcomes; smaller ν use its prefix.
        let seed = trial_seed(cfg.seed, trial as u64);
        let draws = sample_outcomes(truth.row(0), max_nu as usize, seed)?;
        for (k, &nu) in cfg.nu.iter().enumerate() {
            let post = update_posterior_batch(&prior, &draws[..nu as usize], &table)?;
            let est = estimate(&post, cfg.delta);
            let (lo, hi) = post.credible_interval(0.95);
            trials.push(vec![
                nu.to_string(),
                trial.to_string(),
                seed.to_string(),
                num(est.mean),
                num(est.variance),
                num(est.bias),
                num(nu as f64 * est.variance),
                num(lo),
                num(hi),
            ]);
            if trial == 0 {
                let mut snap = Table::new(
                    format!("posterior_nu{nu}.csv"),
                    vec![DELTA, col("weight", "probability")],
                );
                for (x, w) in post.grid().iter().zip(post.weights()) {
                    snap.push(vec![num(*x), num(*w)]);
                }
                snapshots.push(snap);
            }
            per_nu[k].push(est);
        }
    }

    let mut summary = Table::new(
        "bayes_summary.csv",
        vec![
            col("nu", "count"),
            col("trials", "count"),
            col("mean_bias_rad", "rad"),
            col("mean_abs_bias_rad", "rad"),
            col("mean_variance_rad2", "rad^2"),
            col("cb_over_nu_rad2", "rad^2"),
            col("qb_over_nu_rad2", "rad^2"),
            col("grid_variance_floor_rad2", "rad^2"),
        ],
    );
    for (k, &nu) in cfg.nu.iter().enumerate() {
        let ests = &per_nu[k];
        let t = ests.len() as f64;
        let mean = |f: &dyn Fn(&EstimateReport) -> f64| ests.iter().map(f).sum::<f64>() / t;
        summary.push(vec![
            nu.to_string(),
            ests.len().to_string(),
            num(mean(&|e| e.bias)),
            num(mean(&|e| e.bias.abs())),
            num(mean(&|e| e.variance)),
            num(cb / nu as f64),
            num(qb / nu as f64),
            num(ests[0].grid_variance_floor),
        ]);
    }

    let mut out = Outputs::new();
    out.summary.push(format!("CB {cb}, QB {qb} (single shot)"));
    if cfg.delta < cfg.prior.0 || cfg.delta > cfg.prior.1 {
        out.summary.push(format!(
            "warning: δ = {} lies outside the prior [{}, {}]",
            cfg.delta, cfg.prior.0, cfg.prior.1
        ));
    }
    out.tables.push(summary);
    out.tables.push(trials);
    out.tables.extend(snapshots);
    out.extras
        .push(("preparation.json".into(), json_bytes(&p.record())?));
    out.extras
        .push(("measurement.json".into(), json_bytes(&m.record())?));
    Ok(out)
}

fn noise_sweep(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let p = prepare(cfg, &prepared_topology(cfg)?, cfg.l1)?;
    let sweep = dephasing_sweep(&p.spec, &sensing(cfg), &cfg.lambda_grid)?;
    let mut table = Table::new(
        "noise_sweep.csv",
        vec![
            col("lambda", "1"),
            QFI,
            QB,
            col("delta_vs_noiseless", "rad^2"),
        ],
    );
    for (k, d) in sweep.deltas().into_iter().enumerate() {
        table.push(vec![
            num(sweep.lambdas[k]),
            num(sweep.qfi_values[k]),
            num(sweep.qb_values[k]),
            num(d),
        ]);
    }
    let mut out = Outputs::new();
    out.summary.push(format!(
        "{} L1={}: QB(λ_max) − QB(0) = {:e}",
        p.spec.topology.name(),
        cfg.l1,
        sweep.delta_vs_noiseless
    ));
    out.tables.push(table);
    out.extras
        .push(("preparation.json".into(), json_bytes(&p.record())?));
    Ok(out)
}

fn topology_list(cfg: &ExperimentConfig) -> anyhow::Result<Outputs> {
    let mut topologies: Vec<Topology> = BuiltinTopology::ALL
        .iter()
        .map(|&b| Topology::builtin(b))
        .collect();
    if cfg.topology.parse::<BuiltinTopology>().is_err() {
        topologies.push(prepared_topology(cfg)?);
    }
    let mut table = Table::new(
        "topologies.csv",
        vec![
            col("name", "name"),
            col("n_qubits", "count"),
            col("n_edges", "count"),
            col("max_degree", "count"),
            col("allow_overdegree", "bool"),
            col("n_params", "count"),
            col("edges", "i-j list"),
        ],
    );
    let mut out = Outputs::new();
    for t in &topologies {
        let edges: Vec<String> = t.edges().iter().map(|(a, b)| format!("{a}-{b}")).collect();
        let max_degree = t.degrees().into_iter().max().unwrap_or(0);
        out.summary.push(format!(
            "{:<5} n={} |E|={:<2} max degree {} params(L1={}) {}",
            t.name(),
            t.n_qubits(),
            t.edges().len(),
            max_degree,
            cfg.l1,
            param_count(t, cfg.l1)
        ));
        table.push(vec![
            t.name().to_owned(),
            t.n_qubits().to_string(),
            t.edges().len().to_string(),
            max_degree.to_string(),
            t.allow_overdegree().to_string(),
            param_count(t, cfg.l1).to_string(),
            edges.join(" "),
        ]);
    }
    out.tables.push(table);
    Ok(out)
}
