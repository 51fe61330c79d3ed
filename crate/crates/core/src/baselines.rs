//! Reference schemes: EG random key pool, q-composite, Blundo single
//! polynomial and random pairwise keys. They run over the regular sensors of
//! a [`Deployment`]; group heads play no part.
//!
//! Pool-based link keys are `SHA-256(key material)` truncated to 128 bits,
//! over the lowest shared key for EG and over every shared key, ascending,
//! for q-composite. A link is exposed exactly when every pool key feeding it
//! is.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{CaptureModel, CaptureTarget, Tally};
use crate::deployment::{AdjacencyGraph, Deployment};
use crate::error::{Error, Result};
use crate::gfpoly::{lagrange_reconstruct, BivariatePolynomial, FieldParams, PolynomialShare};
use crate::node::{LinkId, NodeId};
use crate::prfkeys::PairwiseKey;
use crate::scalar::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaselineParams {
    Eg { pool_size: usize, m: usize },
    QComposite { pool_size: usize, m: usize, q_threshold: usize },
    Blundo {
        t: usize,
        #[serde(default)]
        field: FieldParams,
    },
    RandomPairwise { m: usize, p: f64 },
}

impl BaselineParams {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineParams::Eg { .. } => "eg",
            BaselineParams::QComposite { .. } => "q-composite",
            BaselineParams::Blundo { .. } => "blundo",
            BaselineParams::RandomPairwise { .. } => "random-pairwise",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            BaselineParams::Eg { pool_size, m } | BaselineParams::QComposite { pool_size, m, .. } => {
                if m == 0 || m > pool_size {
                    return bad(format!("scheme.m: need 1 <= m <= pool_size, got m={m}, pool_size={pool_size}"));
                }
                if pool_size > u32::MAX as usize {
                    return bad("scheme.pool_size: too large".into());
                }
                if let BaselineParams::QComposite { q_threshold, .. } = *self {
                    if q_threshold < 2 || q_threshold > m {
                        return bad(format!("scheme.q_threshold: need 2 <= q <= m, got {q_threshold}"));
                    }
                }
            }
            BaselineParams::Blundo { t, .. } => {
                if t == 0 {
                    return bad("scheme.t: must be at least 1".into());
                }
            }
            BaselineParams::RandomPairwise { m, p } => {
                if m == 0 {
                    return bad("scheme.m: must be at least 1".into());
                }
                if !(p > 0.0 && p <= 1.0) {
                    return bad(format!("scheme.p: must lie in (0, 1], got {p}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkInputs {
    /// Shared pool key ids, ascending.
    PoolKeys(Vec<u32>),
    Polynomial,
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineLink {
    pub key_at_low: PairwiseKey,
    pub key_at_high: PairwiseKey,
    pub inputs: LinkInputs,
}

#[derive(Debug, Clone)]
pub struct BaselineNetwork {
    params: BaselineParams,
    nodes: Vec<NodeId>,
    pool: Vec<[u8; 16]>,
    key_rings: BTreeMap<NodeId, Vec<u32>>,
    poly: Option<BivariatePolynomial>,
    shares: BTreeMap<NodeId, PolynomialShare>,
    pairwise: BTreeMap<NodeId, BTreeMap<NodeId, PairwiseKey>>,
    links: BTreeMap<LinkId, BaselineLink>,
}

/// Pre-distribution plus direct key establishment over adjacent sensors.
pub fn baseline_predistribute<R: Rng + ?Sized>(
    params: BaselineParams,
    dep: &Deployment,
    graph: &AdjacencyGraph,
    rng: &mut R,
) -> Result<BaselineNetwork> {
    params.validate()?;
    let nodes: Vec<NodeId> = dep.sensors().map(|n| n.id).collect();
    let mut net = BaselineNetwork {
        params,
        nodes: nodes.clone(),
        pool: Vec::new(),
        key_rings: BTreeMap::new(),
        poly: None,
        shares: BTreeMap::new(),
        pairwise: BTreeMap::new(),
        links: BTreeMap::new(),
    };
    match params {
        BaselineParams::Eg { pool_size, m } | BaselineParams::QComposite { pool_size, m, .. } => {
            net.pool = (0..pool_size).map(|_| rng.gen()).collect();
            for &u in &nodes {
                let mut ids: Vec<u32> = index::sample(rng, pool_size, m).into_iter().map(|i| i as u32).collect();
                ids.sort_unstable();
                net.key_rings.insert(u, ids);
            }
        }
        BaselineParams::Blundo { t, field } => {
            let poly = BivariatePolynomial::random_symmetric(field, t, rng)?;
            for &u in &nodes {
                net.shares.insert(u, poly.share_for(u)?);
            }
            net.poly = Some(poly);
        }
        BaselineParams::RandomPairwise { m, p } => {
            let id_space = (m as f64 / p).ceil() as usize;
            if nodes.len() > id_space {
                return Err(Error::InvalidConfig(format!(
                    "scheme.p: id space n = m/p = {id_space} is smaller than the {} deployed sensors",
                    nodes.len()
                )));
            }
            // Each id pair keyed independently with probability m/(n-1), so a
            // ring holds m keys on average and a pair shares one w.p. ~m/n.
            let q = (m as f64 / (id_space as f64 - 1.0).max(1.0)).min(1.0);
            for &u in &nodes {
                net.pairwise.insert(u, BTreeMap::new());
            }
            for (i, &u) in nodes.iter().enumerate() {
                for &v in &nodes[i + 1..] {
                    if rng.gen_bool(q) {
                        let k = PairwiseKey(rng.gen());
                        net.pairwise.get_mut(&u).expect("inserted").insert(v, k);
                        net.pairwise.get_mut(&v).expect("inserted").insert(u, k);
                    }
                }
            }
        }
    }

    for link in graph.edges() {
        if net.key_rings.is_empty() && net.shares.is_empty() && net.pairwise.is_empty() {
            break;
        }
        if let Some(l) = net.try_link(link) {
            net.links.insert(link, l);
        }
    }
    Ok(net)
}

impl BaselineNetwork {
    pub fn params(&self) -> &BaselineParams {
        &self.params
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn links(&self) -> &BTreeMap<LinkId, BaselineLink> {
        &self.links
    }

    pub fn key_ring(&self, u: NodeId) -> Option<&[u32]> {
        self.key_rings.get(&u).map(Vec::as_slice)
    }

    pub fn shares_key(&self, a: NodeId, b: NodeId) -> bool {
        self.try_link(LinkId::new(a, b)).is_some()
    }

    /// Same `u,v,method` schema as the main scheme's ledger.
    pub fn write_links_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "u,v,method")?;
        for l in self.links.keys() {
            writeln!(w, "{},{},{}", l.low(), l.high(), self.params.label())?;
        }
        Ok(())
    }

    fn try_link(&self, link: LinkId) -> Option<BaselineLink> {
        let (a, b) = (link.low(), link.high());
        match self.params {
            BaselineParams::Eg { .. } | BaselineParams::QComposite { .. } => {
                let need = match self.params {
                    BaselineParams::QComposite { q_threshold, .. } => q_threshold,
                    _ => 1,
                };
                let mut shared = intersect(self.key_rings.get(&a)?, self.key_rings.get(&b)?);
                if shared.len() < need {
                    return None;
                }
                if need == 1 {
                    // EG keys the link with one shared key: the lowest id.
                    shared.truncate(1);
                }
                let mut h = Sha256::new();
                for &id in &shared {
                    h.update(self.pool[id as usize]);
                }
                let mut key = [0u8; 16];
                key.copy_from_slice(&h.finalize()[..16]);
                Some(BaselineLink { key_at_low: PairwiseKey(key), key_at_high: PairwiseKey(key), inputs: LinkInputs::PoolKeys(shared) })
            }
            BaselineParams::Blundo { .. } => {
                let ka = self.shares.get(&a)?.eval_at(b);
                let kb = self.shares.get(&b)?.eval_at(a);
                Some(BaselineLink {
                    key_at_low: PairwiseKey(ka.to_block()),
                    key_at_high: PairwiseKey(kb.to_block()),
                    inputs: LinkInputs::Polynomial,
                })
            }
            BaselineParams::RandomPairwise { .. } => {
                let ka = *self.pairwise.get(&a)?.get(&b)?;
                let kb = *self.pairwise.get(&b)?.get(&a)?;
                Some(BaselineLink { key_at_low: ka, key_at_high: kb, inputs: LinkInputs::Pairwise })
            }
        }
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl CaptureModel for BaselineNetwork {
    fn label(&self) -> &str {
        self.params.label()
    }

    fn capture_population(&self, target: CaptureTarget) -> Vec<NodeId> {
        match target {
            CaptureTarget::RegularSensors => self.nodes.clone(),
            CaptureTarget::GroupHeads => Vec::new(),
        }
    }

    fn assess(&self, captured: &std::collections::BTreeSet<NodeId>) -> Tally {
        let mut known_keys: HashSet<PairwiseKey> = HashSet::new();
        for (l, link) in &self.links {
            if captured.contains(&l.low()) || captured.contains(&l.high()) {
                known_keys.insert(link.key_at_low);
            }
        }
        let mut pool_known = vec![false; self.pool.len()];
        for u in captured {
            for &k in self.key_rings.get(u).map(Vec::as_slice).unwrap_or(&[]) {
                pool_known[k as usize] = true;
            }
            if let Some(keys) = self.pairwise.get(u) {
                known_keys.extend(keys.values().copied());
            }
        }
        let recovered = match self.params {
            BaselineParams::Blundo { t, .. } => {
                let shares: Vec<PolynomialShare> =
                    captured.iter().filter_map(|u| self.shares.get(u).cloned()).take(t + 1).collect();
                lagrange_reconstruct(&shares, t).ok()
            }
            _ => None,
        };

        // f(low, y) rows from the recovered polynomial, one per node.
        let mut rows: HashMap<NodeId, Option<PolynomialShare>> = HashMap::new();
        let mut tally = Tally::default();
        for (l, link) in &self.links {
            if captured.contains(&l.low()) || captured.contains(&l.high()) {
                continue;
            }
            tally.total += 1;
            let exposed = known_keys.contains(&link.key_at_low)
                || match &link.inputs {
                    LinkInputs::PoolKeys(ids) => ids.iter().all(|&k| pool_known[k as usize]),
                    LinkInputs::Polynomial => recovered.as_ref().is_some_and(|f| {
                        let row = rows.entry(l.low()).or_insert_with(|| f.share_for(l.low()).ok());
                        row.as_ref().is_some_and(|r| PairwiseKey(r.eval_at(l.high()).to_block()) == link.key_at_low)
                    }),
                    LinkInputs::Pairwise => false,
                };
            tally.compromised += exposed as usize;
        }
        tally
    }
}

/// Probability that two EG rings of size `m` from a pool of `pool_size`
/// share at least one key: `1 - C(M-m, m) / C(M, m)`.
pub fn eg_share_probability<S: Probability>(m: u64, pool_size: u64) -> S {
    if 2 * m > pool_size {
        return S::one();
    }
    let mut none = S::one();
    for i in 0..m {
        none = none * S::ratio(pool_size - m - i, pool_size - i);
    }
    S::one() - none
}

/// EG resilience oracle: a link keyed by one pool key is exposed when any of
/// the `c` captured rings holds it, `1 - (1 - m/M)^c`.
pub fn eg_resilience<S: Probability>(m: u64, pool_size: u64, c: u64) -> S {
    S::one() - (S::one() - S::ratio(m, pool_size)).powu(c)
}

/// q-composite resilience: `sum_{i>=q} (1-(1-m/M)^c)^i p(i) / p`, where
/// `p(i)` is the probability two rings share exactly `i` keys.
pub fn q_composite_resilience(m: u64, pool_size: u64, q: u64, c: u64) -> f64 {
    let exposed = 1.0 - (1.0 - m as f64 / pool_size as f64).powf(c as f64);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in q..=m {
        let p = exact_overlap_probability(m, pool_size, i);
        num += exposed.powf(i as f64) * p;
        den += p;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `C(M, i) C(M-i, 2(m-i)) C(2(m-i), m-i) / C(M, m)^2`.
pub fn exact_overlap_probability(m: u64, pool_size: u64, i: u64) -> f64 {
    if i > m || 2 * m - i > pool_size {
        return 0.0;
    }
    let ln = ln_choose(pool_size, i) + ln_choose(pool_size - i, 2 * (m - i)) + ln_choose(2 * (m - i), m - i)
        - 2.0 * ln_choose(pool_size, m);
    ln.exp()
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum()
}

/// A degree-`t` polynomial falls to `t + 1` shares and not before.
pub fn blundo_resilience(t: u64, c: u64) -> f64 {
    if c > t {
        1.0
    } else {
        0.0
    }
}
