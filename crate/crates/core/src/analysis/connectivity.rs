//! Intra-group connectivity: closed forms and measured ratios.

use serde::Serialize;

use crate::deployment::{AdjacencyGraph, Deployment};
use crate::error::{Error, Result};
use crate::node::{NodeId, NodeKind};
use crate::protocol::NetworkState;
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm<S> {
    pub p1: S,
    pub p2: S,
    pub p_sensor_sensor: S,
    pub p_grouphead_sensor: S,
    /// Heads share a polynomial, so this is always one.
    pub p_grouphead_grouphead: S,
    /// `(n_i p_ss + 2 p_gs) / (n_i + 2)`: secure links over the same link
    /// count used in the numerator.
    pub p_overall: S,
    /// The expression as printed, normalised by `n_i + 1`. Exceeds one when
    /// rings saturate.
    pub p_overall_printed: S,
}

/// Probability that a given peer id sits in a ring of `ring` entries drawn
/// from a group of `n_i + 1` ids.
pub fn ring_residency<S: Probability>(n_i: u64, ring: u64) -> S {
    if ring >= n_i + 1 {
        S::one()
    } else {
        S::ratio(ring, n_i + 1)
    }
}

pub fn connectivity_closed_form<S: Probability>(n_i: u64, m: u64, m_prime: u64) -> Result<ClosedForm<S>> {
    if n_i == 0 || m == 0 || m_prime < m {
        return Err(Error::Precondition(format!(
            "closed form needs n_i >= 1, m >= 1, m' >= m; got n_i={n_i}, m={m}, m'={m_prime}"
        )));
    }
    let p1: S = ring_residency(n_i, m);
    let p2: S = ring_residency(n_i, m_prime);
    let miss1 = S::one() - p1.clone();
    let p_ss = S::one() - miss1.clone() * miss1.clone();
    let p_gs = S::one() - miss1 * (S::one() - p2.clone());
    let weighted = S::ratio(n_i, 1) * p_ss.clone() + S::ratio(2, 1) * p_gs.clone();
    Ok(ClosedForm {
        p_overall: weighted.clone() / S::ratio(n_i + 2, 1),
        p_overall_printed: weighted / S::ratio(n_i + 1, 1),
        p1,
        p2,
        p_sensor_sensor: p_ss,
        p_grouphead_sensor: p_gs,
        p_grouphead_grouphead: S::one(),
    })
}

impl<S: Probability> ClosedForm<S> {
    pub fn to_f64(&self) -> ClosedForm<f64> {
        ClosedForm {
            p1: self.p1.to_f64(),
            p2: self.p2.to_f64(),
            p_sensor_sensor: self.p_sensor_sensor.to_f64(),
            p_grouphead_sensor: self.p_grouphead_sensor.to_f64(),
            p_grouphead_grouphead: self.p_grouphead_grouphead.to_f64(),
            p_overall: self.p_overall.to_f64(),
            p_overall_printed: self.p_overall_printed.to_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PairTally {
    pub secured: usize,
    pub total: usize,
}

impl PairTally {
    /// `None` when there were no pairs to count.
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.secured as f64 / self.total as f64)
    }

    fn add(&mut self, hit: bool) {
        self.total += 1;
        self.secured += hit as usize;
    }

    fn merge(self, o: PairTally) -> PairTally {
        PairTally { secured: self.secured + o.secured, total: self.total + o.total }
    }
}

/// Counts for one group, over members that landed in their own cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroupConnectivity {
    pub group: usize,
    pub sensors: usize,
    /// Ordered adjacent sensor pairs `(u, v)` with `v` in `u`'s ring.
    pub sensor_ring_hits: PairTally,
    /// Adjacent sensors found in the head's ring.
    pub head_ring_hits: PairTally,
    pub sensor_sensor: PairTally,
    pub grouphead_sensor: PairTally,
    pub head_degree: usize,
}

impl GroupConnectivity {
    pub fn overall(&self) -> PairTally {
        self.sensor_sensor.merge(self.grouphead_sensor)
    }
}

/// One deployment's measurements.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DeploymentConnectivity {
    pub groups: Vec<GroupConnectivity>,
    pub grouphead_grouphead: PairTally,
    pub mean_sensor_degree: Option<f64>,
}

pub fn connectivity_simulate(state: &NetworkState, dep: &Deployment, graph: &AdjacencyGraph) -> DeploymentConnectivity {
    let member = |id: NodeId, g: usize| {
        dep.node(id)
            .is_some_and(|n| n.active && n.group == g && n.cell == g)
    };
    let mut out = DeploymentConnectivity::default();
    for g in 0..dep.group_count() {
        let mut gc = GroupConnectivity { group: g, ..Default::default() };
        let head = dep.head_of(g).ok().filter(|&h| member(h, g));
        for n in dep.sensors().filter(|n| member(n.id, g)) {
            gc.sensors += 1;
            let ring = state.sensor_ring(n.id).map(|r| &r.ring);
            for &v in graph.neighbors(n.id) {
                if !member(v, g) {
                    continue;
                }
                let secured = state.link(n.id, v).is_some();
                match dep.node(v).map(|r| r.kind) {
                    Some(NodeKind::RegularSensor) => {
                        gc.sensor_ring_hits.add(ring.is_some_and(|r| r.contains(v)));
                        if n.id < v {
                            gc.sensor_sensor.add(secured);
                        }
                    }
                    Some(NodeKind::GroupHead) if Some(v) == head => {
                        let head_ring = state.head_ring(v).map(|r| &r.ring);
                        gc.head_ring_hits.add(head_ring.is_some_and(|r| r.contains(n.id)));
                        gc.grouphead_sensor.add(secured);
                    }
                    _ => {}
                }
            }
        }
        if let Some(h) = head {
            gc.head_degree = graph.degree(h);
        }
        out.groups.push(gc);
    }
    let heads = dep.heads();
    for (i, &a) in heads.iter().enumerate() {
        for &b in &heads[i + 1..] {
            if graph.has_edge(a, b) {
                out.grouphead_grouphead.add(state.link(a, b).is_some());
            }
        }
    }
    let degrees: Vec<usize> = dep.sensors().map(|n| graph.degree(n.id)).collect();
    out.mean_sensor_degree = (!degrees.is_empty()).then(|| degrees.iter().sum::<usize>() as f64 / degrees.len() as f64);
    out
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Zero for a single sample.
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Option<Estimate> {
        let k = xs.len();
        if k == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / k as f64;
        let stderr = if k > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        Some(Estimate { mean, stderr, samples: k })
    }
}

/// Group ratios pooled over every group of every deployment. Groups with no
/// pairs of a kind drop out of that average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedConnectivity {
    pub p1: Option<Estimate>,
    pub p2: Option<Estimate>,
    pub p_sensor_sensor: Option<Estimate>,
    pub p_grouphead_sensor: Option<Estimate>,
    pub p_grouphead_grouphead: Option<Estimate>,
    pub p_overall: Option<Estimate>,
}

impl SimulatedConnectivity {
    pub fn aggregate(runs: &[DeploymentConnectivity]) -> SimulatedConnectivity {
        let per_group = |f: &dyn Fn(&GroupConnectivity) -> Option<f64>| {
            let xs: Vec<f64> = runs.iter().flat_map(|r| r.groups.iter().filter_map(f)).collect();
            Estimate::from_samples(&xs)
        };
        let gg: Vec<f64> = runs.iter().filter_map(|r| r.grouphead_grouphead.ratio()).collect();
        SimulatedConnectivity {
            p1: per_group(&|g| g.sensor_ring_hits.ratio()),
            p2: per_group(&|g| g.head_ring_hits.ratio()),
            p_sensor_sensor: per_group(&|g| g.sensor_sensor.ratio()),
            p_grouphead_sensor: per_group(&|g| g.grouphead_sensor.ratio()),
            p_grouphead_grouphead: Estimate::from_samples(&gg),
            p_overall: per_group(&|g| g.overall().ratio()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityReport {
    pub analytical: ClosedForm<f64>,
    pub simulated: SimulatedConnectivity,
    pub trials: usize,
    pub mean_degree: Option<f64>,
    /// Reported next to `mean_degree`; the closed form assumes they match.
    pub mean_head_degree: Option<f64>,
}

impl ConnectivityReport {
    pub fn new(analytical: ClosedForm<f64>, runs: &[DeploymentConnectivity]) -> ConnectivityReport {
        let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        ConnectivityReport {
            analytical,
            simulated: SimulatedConnectivity::aggregate(runs),
            trials: runs.len(),
            mean_degree: mean(runs.iter().filter_map(|r| r.mean_sensor_degree).collect()),
            mean_head_degree: mean(
                runs.iter()
                    .flat_map(|r| r.groups.iter().filter(|g| g.sensors > 0).map(|g| g.head_degree as f64))
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{deploy, discover_neighbors, DeploymentConfig};
    use crate::protocol::{establish_all, predistribute, SchemeParams};
    use crate::rng;
    use num_bigint::BigUint;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    fn binom(n: u64, k: u64) -> BigUint {
        if k > n {
            return BigUint::zero();
        }
        let mut acc = BigUint::one();
        for i in 0..k {
            acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        acc
    }

    fn hypergeometric(n_i: u64, m: u64) -> BigRational {
        let num = binom(n_i, m);
        let den = binom(n_i + 1, m);
        BigRational::one() - BigRational::new(num.into(), den.into())
    }

    #[test]
    fn closed_form_equals_binomial_ratio_exhaustively() {
        for n_i in 1..=30u64 {
            for m in 1..=n_i + 1 {
                let cf: ClosedForm<BigRational> = connectivity_closed_form(n_i, m, m).unwrap();
                assert_eq!(cf.p1, hypergeometric(n_i, m), "n_i={n_i} m={m}");
                for m_prime in m..=n_i + 1 {
                    let p2: BigRational = ring_residency(n_i, m_prime);
                    assert_eq!(p2, hypergeometric(n_i, m_prime));
                }
            }
        }
    }

    #[test]
    fn hand_values() {
        let cf: ClosedForm<f64> = connectivity_closed_form(999, 200, 200).unwrap();
        assert!((cf.p1 - 0.2).abs() < 1e-12);
        assert!((cf.p_sensor_sensor - 0.36).abs() < 1e-12);
        let cf: ClosedForm<f64> = connectivity_closed_form(220, 200, 200).unwrap();
        assert!((cf.p1 - 200.0 / 221.0).abs() < 1e-12);
        assert!((cf.p_sensor_sensor - 0.9910).abs() < 1e-4);
    }

    #[test]
    fn saturation_is_one() {
        let cf: ClosedForm<BigRational> = connectivity_closed_form(50, 51, 60).unwrap();
        assert!(cf.p1.is_one() && cf.p_sensor_sensor.is_one() && cf.p_overall.is_one());
        assert!(cf.p_overall_printed > BigRational::one());
    }

    #[test]
    fn overall_nonincreasing_in_group_size() {
        for (m, mp) in [(50, 50), (50, 80), (200, 300)] {
            let mut prev = BigRational::one();
            for n_i in 1..=400u64 {
                let cf: ClosedForm<BigRational> = connectivity_closed_form(n_i, m, mp).unwrap();
                assert!(cf.p_overall <= prev, "m={m} m'={mp} n_i={n_i}");
                assert!(cf.p_overall >= BigRational::zero());
                prev = cf.p_overall;
            }
        }
    }

    #[test]
    fn f32_tracks_f64() {
        let a: ClosedForm<f32> = connectivity_closed_form(300, 200, 300).unwrap();
        let b: ClosedForm<f64> = connectivity_closed_form(300, 200, 300).unwrap();
        assert!((a.p_overall as f64 - b.p_overall).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(connectivity_closed_form::<f64>(0, 1, 1).is_err());
        assert!(connectivity_closed_form::<f64>(10, 0, 1).is_err());
        assert!(connectivity_closed_form::<f64>(10, 5, 4).is_err());
    }

    fn run(n: usize, m: usize, mp: usize, seed: u64) -> DeploymentConnectivity {
        let dep = deploy(&DeploymentConfig::desk_scale(n, seed)).unwrap();
        let g = discover_neighbors(&dep);
        let mut r = rng::stream(seed, "conn", 0);
        let mut st = predistribute(&dep, SchemeParams::new(m, mp, 20), &mut r).unwrap();
        establish_all(&mut st, &dep, &g, &mut r).unwrap();
        connectivity_simulate(&st, &dep, &g)
    }

    #[test]
    fn saturated_rings_measure_one() {
        let d = run(40, 40, 40, 3);
        let s = SimulatedConnectivity::aggregate(&[d]);
        assert_eq!(s.p_sensor_sensor.unwrap().mean, 1.0);
        assert_eq!(s.p_overall.unwrap().mean, 1.0);
        assert_eq!(s.p_grouphead_grouphead.unwrap().mean, 1.0);
    }

    #[test]
    fn simulation_near_closed_form() {
        let runs: Vec<_> = (0..3).map(|s| run(150, 60, 80, 10 + s)).collect();
        let cf: ClosedForm<f64> = connectivity_closed_form(150, 60, 80).unwrap();
        let s = SimulatedConnectivity::aggregate(&runs);
        assert!((s.p_overall.unwrap().mean - cf.p_overall).abs() < 0.03);
        assert!((s.p_grouphead_sensor.unwrap().mean - cf.p_grouphead_sensor).abs() < 0.03);
        // Own id is never in the ring: measured p1 is m / n_i.
        assert!((s.p1.unwrap().mean - 60.0 / 150.0).abs() < 0.02);
    }

    #[test]
    fn empty_groups_drop_out() {
        let d = run(0, 1, 1, 4);
        assert!(d.groups.iter().all(|g| g.overall().ratio().is_none()));
        let s = SimulatedConnectivity::aggregate(&[d]);
        assert!(s.p_overall.is_none());
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let xs: Vec<f64> = (0..400).map(|i| ((i * 7919) % 101) as f64 / 100.0).collect();
        let a = Estimate::from_samples(&xs[..100]).unwrap();
        let b = Estimate::from_samples(&xs).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }
}
