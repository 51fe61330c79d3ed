//! Sweep execution and result files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use hwsn_core::analysis::{
    capture_and_measure, connectivity_closed_form, connectivity_simulate, head_capture_initialization, AttackSpec,
    CaptureModel, ConnectivityReport, Estimate,
};
use hwsn_core::baselines::{
    baseline_predistribute, blundo_resilience, eg_resilience, eg_share_probability, exact_overlap_probability,
    q_composite_resilience, BaselineNetwork, BaselineParams,
};
use hwsn_core::deployment::{deploy, discover_neighbors, AdjacencyGraph, Deployment, DeploymentConfig};
use hwsn_core::protocol::{establish_all, predistribute, NetworkState};
use hwsn_core::rng::{derive_seed, stream};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Metric, SchemeKind, SchemeSpec};
use crate::plotdata::emit_plotdata;

pub const CSV_HEADER: [&str; 9] =
    ["scheme", "metric", "sweep_param", "sweep_value", "params", "analytical", "simulated_mean", "stderr", "trials"];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scheme: String,
    pub metric: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub params: String,
    pub analytical: Option<f64>,
    pub simulated: Option<Estimate>,
    pub trials: usize,
}

impl Row {
    fn record(&self) -> [String; 9] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.scheme.clone(),
            self.metric.clone(),
            self.sweep_param.clone(),
            self.sweep_value.to_string(),
            self.params.clone(),
            opt(self.analytical),
            opt(self.simulated.map(|e| e.mean)),
            opt(self.simulated.map(|e| e.stderr)),
            self.trials.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub config_sha256: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub plotdata: Vec<PathBuf>,
    pub rows: usize,
}

/// Accepts either an experiment config or a manifest written by a previous run.
pub fn load_config_or_manifest(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("config_sha256").is_some() {
        let m: Manifest = serde_json::from_value(value).with_context(|| format!("reading manifest {}", path.display()))?;
        m.config.validate()?;
        return Ok(m.config);
    }
    ExperimentConfig::from_json(&text).with_context(|| format!("in {}", path.display()))
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(cfg).expect("config serializes")))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let rows = compute_rows(cfg)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let csv_path = dir.join(format!("{}.csv", cfg.name));
    write_csv(&csv_path, &rows)?;
    let plotdata = emit_plotdata(&csv_path, &dir.join("plotdata"))?;

    let manifest_path = dir.join(format!("{}.manifest.json", cfg.name));
    let mut outputs = vec![PathBuf::from(csv_path.file_name().expect("file name"))];
    outputs.extend(plotdata.iter().filter_map(|p| p.strip_prefix(&dir).ok().map(Path::to_path_buf)));
    let manifest = Manifest {
        config: cfg.clone(),
        seed: cfg.seed,
        config_sha256: config_hash(cfg),
        wall_time_secs: start.elapsed().as_secs_f64(),
        outputs,
    };
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(RunOutput { csv: csv_path, manifest: manifest_path, plotdata, rows: rows.len() })
}

pub fn write_csv(path: &Path, rows: &[Row]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn compute_rows(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Row>> {
    match cfg.metric {
        Metric::Connectivity => connectivity_rows(cfg),
        Metric::SensorCapture | Metric::HeadCapture => capture_rows(cfg),
    }
}

fn trial_deployment(cfg: &ExperimentConfig, trial: usize) -> anyhow::Result<(Deployment, AdjacencyGraph)> {
    let dcfg = DeploymentConfig { seed: derive_seed(cfg.seed, "deploy", trial as u64), ..cfg.deployment.clone() };
    let dep = deploy(&dcfg)?;
    let graph = discover_neighbors(&dep);
    Ok((dep, graph))
}

fn scheme_rng(cfg: &ExperimentConfig, scheme: usize, trial: usize) -> hwsn_core::rng::SimRng {
    stream(derive_seed(cfg.seed, "scheme", scheme as u64), "keys", trial as u64)
}

fn build_proposed(
    cfg: &ExperimentConfig,
    si: usize,
    trial: usize,
    dep: &Deployment,
    graph: &AdjacencyGraph,
    establish: bool,
) -> anyhow::Result<NetworkState> {
    let SchemeKind::Proposed(params) = cfg.schemes[si].kind() else { unreachable!("caller checked") };
    let mut r = scheme_rng(cfg, si, trial);
    let mut st = predistribute(dep, params, &mut r)?;
    if establish {
        establish_all(&mut st, dep, graph, &mut r)?;
    }
    Ok(st)
}

fn build_baseline(
    cfg: &ExperimentConfig,
    si: usize,
    trial: usize,
    params: BaselineParams,
    dep: &Deployment,
    graph: &AdjacencyGraph,
) -> anyhow::Result<BaselineNetwork> {
    Ok(baseline_predistribute(params, dep, graph, &mut scheme_rng(cfg, si, trial))?)
}

fn row(cfg: &ExperimentConfig, s: &SchemeSpec, metric: &str, v: f64, analytical: Option<f64>, sim: Option<Estimate>) -> Row {
    Row {
        scheme: s.label().to_string(),
        metric: metric.to_string(),
        sweep_param: cfg.sweep.parameter.as_str().to_string(),
        sweep_value: v,
        params: s.params_string(),
        analytical,
        simulated: sim,
        trials: cfg.trials,
    }
}

fn baseline_link_probability(params: BaselineParams) -> f64 {
    match params {
        BaselineParams::Eg { pool_size, m } => eg_share_probability(m as u64, pool_size as u64),
        BaselineParams::QComposite { pool_size, m, q_threshold } => {
            1.0 - (0..q_threshold as u64).map(|i| exact_overlap_probability(m as u64, pool_size as u64, i)).sum::<f64>()
        }
        BaselineParams::Blundo { .. } => 1.0,
        BaselineParams::RandomPairwise { m, p } => {
            let n = (m as f64 / p).ceil();
            (m as f64 / (n - 1.0)).min(1.0)
        }
    }
}

fn connectivity_rows(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Row>> {
    const METRICS: [&str; 6] = ["p1", "p2", "p_sensor_sensor", "p_grouphead_sensor", "p_grouphead_grouphead", "p_overall"];
    let mut rows = Vec::new();
    for &v in &cfg.sweep.values {
        let pcfg = cfg.at(v);
        let mut runs = vec![Vec::new(); pcfg.schemes.len()];
        let mut link_rates = vec![Vec::new(); pcfg.schemes.len()];
        for trial in 0..pcfg.trials {
            let (dep, graph) = trial_deployment(&pcfg, trial)?;
            let sensor_edges = graph
                .edges()
                .filter(|l| [l.low(), l.high()].iter().all(|&n| dep.node(n).is_some_and(|r| r.kind == hwsn_core::NodeKind::RegularSensor)))
                .count();
            for (si, s) in pcfg.schemes.iter().enumerate() {
                match s.kind() {
                    SchemeKind::Proposed(_) => {
                        let st = build_proposed(&pcfg, si, trial, &dep, &graph, true)?;
                        runs[si].push(connectivity_simulate(&st, &dep, &graph));
                    }
                    SchemeKind::Baseline(b) => {
                        let net = build_baseline(&pcfg, si, trial, b, &dep, &graph)?;
                        if sensor_edges > 0 {
                            link_rates[si].push(net.links().len() as f64 / sensor_edges as f64);
                        }
                    }
                    SchemeKind::Stub(_) => bail!("schemes[{si}]: analytical stubs carry no connectivity model"),
                }
            }
        }
        for (si, s) in pcfg.schemes.iter().enumerate() {
            match s.kind() {
                SchemeKind::Proposed(p) => {
                    let n_i = pcfg.deployment.sensors_per_group as u64;
                    let cf = connectivity_closed_form::<f64>(n_i, p.m as u64, p.m_prime as u64).ok();
                    let report = ConnectivityReport::new(cf.clone().unwrap_or_else(empty_closed_form), &runs[si]);
                    let sim = &report.simulated;
                    let sims = [sim.p1, sim.p2, sim.p_sensor_sensor, sim.p_grouphead_sensor, sim.p_grouphead_grouphead, sim.p_overall];
                    let ana = cf.map(|c| [c.p1, c.p2, c.p_sensor_sensor, c.p_grouphead_sensor, c.p_grouphead_grouphead, c.p_overall]);
                    for (k, name) in METRICS.iter().enumerate() {
                        rows.push(row(&pcfg, s, name, v, ana.map(|a| a[k]), sims[k]));
                    }
                    let deg = |x: Option<f64>| x.map(|mean| Estimate { mean, stderr: 0.0, samples: report.trials });
                    rows.push(row(&pcfg, s, "mean_sensor_degree", v, None, deg(report.mean_degree)));
                    rows.push(row(&pcfg, s, "mean_head_degree", v, None, deg(report.mean_head_degree)));
                }
                SchemeKind::Baseline(b) => {
                    let ana = baseline_link_probability(b);
                    rows.push(row(&pcfg, s, "p_link", v, Some(ana), Estimate::from_samples(&link_rates[si])));
                }
                SchemeKind::Stub(_) => {}
            }
        }
    }
    Ok(rows)
}

fn empty_closed_form() -> hwsn_core::ConnectivityClosedForm {
    hwsn_core::analysis::ClosedForm {
        p1: f64::NAN,
        p2: f64::NAN,
        p_sensor_sensor: f64::NAN,
        p_grouphead_sensor: f64::NAN,
        p_grouphead_grouphead: f64::NAN,
        p_overall: f64::NAN,
        p_overall_printed: f64::NAN,
    }
}

enum Built {
    Proposed(NetworkState),
    Baseline(BaselineNetwork),
    Stub,
}

/// `[trial][scheme]`.
fn build_networks(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Vec<Built>>> {
    let establish = cfg.metric == Metric::SensorCapture;
    let mut out = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let (dep, graph) = trial_deployment(cfg, trial)?;
        let mut nets = Vec::with_capacity(cfg.schemes.len());
        for (si, s) in cfg.schemes.iter().enumerate() {
            nets.push(match s.kind() {
                SchemeKind::Proposed(_) => Built::Proposed(build_proposed(cfg, si, trial, &dep, &graph, establish)?),
                SchemeKind::Baseline(b) => Built::Baseline(build_baseline(cfg, si, trial, b, &dep, &graph)?),
                SchemeKind::Stub(_) => Built::Stub,
            });
        }
        out.push(nets);
    }
    Ok(out)
}

fn capture_rows(cfg: &ExperimentConfig) -> anyhow::Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut shared = None;
    for &v in &cfg.sweep.values {
        let pcfg = cfg.at(v);
        let fresh;
        let nets = if cfg.sweep.parameter.reshapes_network() {
            fresh = build_networks(&pcfg)?;
            &fresh
        } else {
            if shared.is_none() {
                shared = Some(build_networks(&pcfg)?);
            }
            shared.as_ref().expect("just built")
        };
        match pcfg.metric {
            Metric::SensorCapture => sensor_capture_point(&pcfg, nets, v, &mut rows)?,
            Metric::HeadCapture => head_capture_point(&pcfg, nets, v, &mut rows)?,
            Metric::Connectivity => unreachable!(),
        }
    }
    Ok(rows)
}

fn sensor_capture_point(cfg: &ExperimentConfig, nets: &[Vec<Built>], v: f64, rows: &mut Vec<Row>) -> anyhow::Result<()> {
    let c = cfg.c;
    for (si, s) in cfg.schemes.iter().enumerate() {
        let mut fractions = Vec::with_capacity(cfg.trials);
        for (trial, per_scheme) in nets.iter().enumerate() {
            let spec = AttackSpec::sensors(c, 1, derive_seed(cfg.seed, "capture", trial as u64));
            let model: &dyn CaptureModel = match &per_scheme[si] {
                Built::Proposed(st) => st,
                Built::Baseline(b) => b,
                Built::Stub => continue,
            };
            let rep = capture_and_measure(model, &spec).with_context(|| format!("schemes[{si}] at c = {c}"))?;
            fractions.push(rep.fraction_compromised);
        }
        let c64 = c as u64;
        let analytical = match *s {
            SchemeSpec::Eg { pool_size, m } => eg_resilience(m as u64, pool_size as u64, c64),
            SchemeSpec::QComposite { pool_size, m, q_threshold } => {
                q_composite_resilience(m as u64, pool_size as u64, q_threshold as u64, c64)
            }
            SchemeSpec::Blundo { t, .. } => blundo_resilience(t as u64, c64),
            SchemeSpec::Proposed { .. } | SchemeSpec::RandomPairwise { .. } => 0.0,
            SchemeSpec::Lekm | SchemeSpec::Ikdm => 0.0,
        };
        rows.push(row(cfg, s, "fraction_compromised", v, Some(analytical), Estimate::from_samples(&fractions)));
    }
    Ok(())
}

fn head_capture_point(cfg: &ExperimentConfig, nets: &[Vec<Built>], v: f64, rows: &mut Vec<Row>) -> anyhow::Result<()> {
    let c = cfg.c;
    for (si, s) in cfg.schemes.iter().enumerate() {
        match s.kind() {
            SchemeKind::Stub(stub) => {
                rows.push(row(cfg, s, "n_cluster_head", v, Some(stub.head_capture_keys(c as u64) as f64), None));
            }
            SchemeKind::Proposed(_) => {
                let mut exposed = Vec::with_capacity(cfg.trials);
                let mut other = Vec::with_capacity(cfg.trials);
                for (trial, per_scheme) in nets.iter().enumerate() {
                    let Built::Proposed(st) = &per_scheme[si] else { unreachable!("built per scheme kind") };
                    let rep = head_capture_initialization(st, c, 1, derive_seed(cfg.seed, "head-capture", trial as u64))?;
                    exposed.push(rep.head_keys_exposed().unwrap_or(0.0));
                    other.push(rep.non_neighbor_keys_exposed.unwrap_or(0.0));
                }
                rows.push(row(cfg, s, "n_cluster_head", v, None, Estimate::from_samples(&exposed)));
                rows.push(row(cfg, s, "non_neighbor_keys_exposed", v, Some(0.0), Estimate::from_samples(&other)));
            }
            SchemeKind::Baseline(b) => bail!("schemes[{si}]: head capture is not modelled for {}", b.label()),
        }
    }
    Ok(())
}
