//! Node-capture attack engine.

use std::collections::{BTreeSet, HashSet};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::analysis::Estimate;
use crate::error::{Error, Result};
use crate::gfpoly::{lagrange_reconstruct, PolynomialShare};
use crate::node::NodeId;
use crate::prfkeys::PairwiseKey;
use crate::protocol::{KeyOrigin, NetworkState};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaptureTarget {
    RegularSensors,
    GroupHeads,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackPhase {
    PostEstablishment,
    Initialization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub target: CaptureTarget,
    pub c: usize,
    pub phase: AttackPhase,
    pub trials: usize,
    pub seed: u64,
}

impl AttackSpec {
    pub fn sensors(c: usize, trials: usize, seed: u64) -> Self {
        AttackSpec { target: CaptureTarget::RegularSensors, c, phase: AttackPhase::PostEstablishment, trials, seed }
    }
}

/// Links between surviving nodes, and how many of those the adversary reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub compromised: usize,
    pub total: usize,
}

impl Tally {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.compromised as f64 / self.total as f64
        }
    }
}

/// What an adversary holding the stored material of `captured` can read.
pub trait CaptureModel {
    fn label(&self) -> &str;

    fn capture_population(&self, target: CaptureTarget) -> Vec<NodeId>;

    fn assess(&self, captured: &BTreeSet<NodeId>) -> Tally;

    /// Established sensor keys stored by captured heads.
    fn head_held_sensor_keys(&self, _captured: &BTreeSet<NodeId>) -> usize {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResilienceReport {
    pub scheme: String,
    pub c: usize,
    pub trials: usize,
    pub fraction_compromised: f64,
    pub stderr: f64,
    pub per_trial: Vec<f64>,
    /// Figure 8 metric divided by `c`; set for head capture.
    pub keys_exposed_per_head: Option<f64>,
    /// Mean sensor-sensor keys exposed that do not involve a captured head.
    pub non_neighbor_keys_exposed: Option<f64>,
}

impl ResilienceReport {
    fn build(scheme: &str, c: usize, per_trial: Vec<f64>) -> Self {
        let est = Estimate::from_samples(&per_trial);
        ResilienceReport {
            scheme: scheme.to_string(),
            c,
            trials: per_trial.len(),
            fraction_compromised: est.map_or(0.0, |e| e.mean),
            stderr: est.map_or(0.0, |e| e.stderr),
            per_trial,
            keys_exposed_per_head: None,
            non_neighbor_keys_exposed: None,
        }
    }

    /// `N_cluster-head(c)`.
    pub fn head_keys_exposed(&self) -> Option<f64> {
        self.keys_exposed_per_head.map(|k| k * self.c as f64)
    }
}

fn sample_victims(pop: &[NodeId], c: usize, seed: u64, trial: usize) -> BTreeSet<NodeId> {
    let mut r = rng::stream(seed, "capture", trial as u64);
    index::sample(&mut r, pop.len(), c).into_iter().map(|i| pop[i]).collect()
}

pub fn capture_and_measure<M: CaptureModel + ?Sized>(model: &M, spec: &AttackSpec) -> Result<ResilienceReport> {
    let pop = model.capture_population(spec.target);
    if spec.c > pop.len() {
        return Err(Error::CaptureExceedsPopulation { requested: spec.c, available: pop.len() });
    }
    let mut per_trial = Vec::with_capacity(spec.trials);
    let mut held = 0usize;
    for trial in 0..spec.trials {
        let victims = sample_victims(&pop, spec.c, spec.seed, trial);
        per_trial.push(model.assess(&victims).fraction());
        if spec.target == CaptureTarget::GroupHeads {
            held += model.head_held_sensor_keys(&victims);
        }
    }
    let mut report = ResilienceReport::build(model.label(), spec.c, per_trial);
    if spec.target == CaptureTarget::GroupHeads && spec.trials > 0 {
        let mean = held as f64 / spec.trials as f64;
        report.keys_exposed_per_head = Some(if spec.c == 0 { 0.0 } else { mean / spec.c as f64 });
    }
    Ok(report)
}

impl CaptureModel for NetworkState {
    fn label(&self) -> &str {
        "proposed"
    }

    fn capture_population(&self, target: CaptureTarget) -> Vec<NodeId> {
        match target {
            CaptureTarget::RegularSensors => self.sensor_rings.keys().copied().collect(),
            CaptureTarget::GroupHeads => self.head_rings.keys().copied().collect(),
        }
    }

    fn assess(&self, captured: &BTreeSet<NodeId>) -> Tally {
        let mut known: HashSet<PairwiseKey> = HashSet::new();
        let mut shares: Vec<PolynomialShare> = Vec::new();
        for &u in captured {
            if let Some(r) = self.sensor_rings.get(&u) {
                known.extend(r.ring.entries().iter().map(|e| e.key));
            }
            if let Some(r) = self.head_rings.get(&u) {
                known.extend(r.ring.entries().iter().map(|e| e.key));
                shares.push(r.share.clone());
            }
        }
        for (l, link) in &self.established {
            if captured.contains(&l.low()) || captured.contains(&l.high()) {
                known.insert(link.key_at_low);
                known.insert(link.key_at_high);
            }
        }
        let t = self.params.t;
        let poly = (shares.len() > t)
            .then(|| lagrange_reconstruct(&shares[..t + 1], t).ok())
            .flatten();

        let mut tally = Tally::default();
        for (l, link) in &self.established {
            if captured.contains(&l.low()) || captured.contains(&l.high()) {
                continue;
            }
            tally.total += 1;
            let exposed = known.contains(&link.key_at_low)
                || match link.origin {
                    KeyOrigin::Prf { master_of, .. } => captured.contains(&master_of),
                    KeyOrigin::Polynomial => poly
                        .as_ref()
                        .is_some_and(|f| PairwiseKey(f.eval_ids(l.low(), l.high()).to_block()) == link.key_at_low),
                    // Sealed under the endpoints' masters; relays see ciphertext only.
                    KeyOrigin::BaseStation => false,
                };
            tally.compromised += exposed as usize;
        }
        tally
    }

    fn head_held_sensor_keys(&self, captured: &BTreeSet<NodeId>) -> usize {
        self.established
            .keys()
            .filter(|l| {
                let (a, b) = (l.low(), l.high());
                let head_a = self.head_rings.contains_key(&a);
                let head_b = self.head_rings.contains_key(&b);
                (captured.contains(&a) && head_a && !head_b) || (captured.contains(&b) && head_b && !head_a)
            })
            .count()
    }
}

/// Cluster size used by the LEKM curve.
pub const LEKM_SENSORS_PER_HEAD: u64 = 100;

/// Curve-level models of schemes whose protocols are not simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalyticalStub {
    Lekm,
    Ikdm,
}

impl AnalyticalStub {
    pub fn label(self) -> &'static str {
        match self {
            AnalyticalStub::Lekm => "lekm",
            AnalyticalStub::Ikdm => "ikdm",
        }
    }

    /// Sensor keys exposed when `c` heads fall during initialization.
    pub fn head_capture_keys(self, c: u64) -> u64 {
        match self {
            AnalyticalStub::Lekm => LEKM_SENSORS_PER_HEAD * c,
            AnalyticalStub::Ikdm => 0,
        }
    }
}

/// Head capture before any link exists: the adversary gets the heads'
/// masters, shares and rings. Every sensor ring entry `(u, w)` is checked;
/// entries with `w` captured are the head-neighbor keys the metric counts,
/// all others must stay hidden.
pub fn head_capture_initialization(state: &NetworkState, c: usize, trials: usize, seed: u64) -> Result<ResilienceReport> {
    let pop: Vec<NodeId> = state.head_rings.keys().copied().collect();
    if c > pop.len() {
        return Err(Error::CaptureExceedsPopulation { requested: c, available: pop.len() });
    }
    let mut per_trial = Vec::with_capacity(trials);
    let mut head_keys = 0usize;
    let mut other_keys = 0usize;
    for trial in 0..trials {
        let victims = sample_victims(&pop, c, seed, trial);
        let mut known: HashSet<PairwiseKey> = HashSet::new();
        for v in &victims {
            let r = &state.head_rings[v];
            known.extend(r.ring.entries().iter().map(|e| e.key));
            head_keys += r.ring.len();
        }
        let mut tally = Tally::default();
        for sr in state.sensor_rings.values() {
            for e in sr.ring.entries() {
                if victims.contains(&e.peer) {
                    head_keys += 1;
                    continue;
                }
                // PRF_{MK_w}(u) needs w's master, held only by w and the BS.
                tally.total += 1;
                tally.compromised += known.contains(&e.key) as usize;
            }
        }
        other_keys += tally.compromised;
        per_trial.push(tally.fraction());
    }
    let mut report = ResilienceReport::build("proposed", c, per_trial);
    if trials > 0 {
        let mean_head = head_keys as f64 / trials as f64;
        report.keys_exposed_per_head = Some(if c == 0 { 0.0 } else { mean_head / c as f64 });
        report.non_neighbor_keys_exposed = Some(other_keys as f64 / trials as f64);
    }
    Ok(report)
}
