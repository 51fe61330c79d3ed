use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::case3::{Case3Exchange, Hop};
use crate::deployment::Deployment;
use crate::error::{Error, Result};
use crate::gfpoly::{BivariatePolynomial, FieldElement, FieldParams, PolynomialShare};
use crate::node::{LinkId, NodeId, NodeKind};
use crate::prfkeys::{
    build_head_ring, build_sensor_ring, GroupHeadKeyRing, MasterKey, MasterKeyTable, PairwiseKey, SensorKeyRing,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    /// Sensor ring size.
    pub m: usize,
    /// Group-head ring size, at least `m`.
    pub m_prime: usize,
    /// Degree of the head polynomial; must exceed the head count.
    pub t: usize,
    #[serde(default)]
    pub field: FieldParams,
}

impl SchemeParams {
    pub fn new(m: usize, m_prime: usize, t: usize) -> Self {
        SchemeParams { m, m_prime, t, field: FieldParams::default() }
    }

    pub fn validate(&self, heads: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("scheme.m: must be at least 1".into()));
        }
        if self.m_prime < self.m {
            return Err(Error::HeadRingSmaller { m_prime: self.m_prime, m: self.m });
        }
        if self.t <= heads {
            return Err(Error::DegreeTooSmall { t: self.t, heads });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KeyMethod {
    #[serde(rename = "poly")]
    Poly,
    #[serde(rename = "prf-case1")]
    PrfCase1,
    #[serde(rename = "prf-case2")]
    PrfCase2,
    #[serde(rename = "bs-case3")]
    BsCase3,
}

impl KeyMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyMethod::Poly => "poly",
            KeyMethod::PrfCase1 => "prf-case1",
            KeyMethod::PrfCase2 => "prf-case2",
            KeyMethod::BsCase3 => "bs-case3",
        }
    }
}

/// How the key material was produced; this is what an adversary would need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyOrigin {
    /// `f(id_low, id_high)`.
    Polynomial,
    /// `PRF_{MK_master_of}(input)`.
    Prf { master_of: NodeId, input: NodeId },
    /// Fresh base-station key, delivered sealed under both endpoints' masters.
    BaseStation,
}

/// Ledger entry; holds the key as independently stored by each endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstablishedLink {
    pub method: KeyMethod,
    pub origin: KeyOrigin,
    pub key_at_low: PairwiseKey,
    pub key_at_high: PairwiseKey,
}

impl EstablishedLink {
    pub fn agreed(&self) -> bool {
        self.key_at_low == self.key_at_high
    }

    pub fn key(&self) -> PairwiseKey {
        self.key_at_low
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeCounters {
    pub msgs_sent: u64,
    pub msgs_received: u64,
    pub prf_evals: u64,
    pub poly_evals: u64,
}

impl NodeCounters {
    pub fn messages(&self) -> u64 {
        self.msgs_sent + self.msgs_received
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Hello { from: NodeId },
    IdExchange { from: NodeId, to: NodeId },
    Notify { from: NodeId, to: NodeId, method: KeyMethod },
    Case3Request { from: NodeId, to: NodeId },
    Relay { from: Hop, to: Hop },
    Case3Rejected { u: NodeId, v: NodeId },
    Stored { link: LinkId, method: KeyMethod },
    Revoked { link: LinkId },
}

/// Everything the simulation knows: the setup server's secrets, each node's
/// memory, the established-key ledger and overhead counters.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub(crate) params: SchemeParams,
    pub(crate) poly: BivariatePolynomial,
    pub(crate) pools: Vec<Vec<NodeId>>,
    pub(crate) masters: MasterKeyTable,
    pub(crate) sensor_rings: BTreeMap<NodeId, SensorKeyRing>,
    pub(crate) head_rings: BTreeMap<NodeId, GroupHeadKeyRing>,
    pub(crate) established: BTreeMap<LinkId, EstablishedLink>,
    pub(crate) counters: BTreeMap<NodeId, NodeCounters>,
    pub(crate) bs_counters: NodeCounters,
    pub(crate) announced: BTreeSet<NodeId>,
    pub(crate) log: Vec<Event>,
    pub(crate) record_events: bool,
    pub(crate) case3: Vec<Case3Exchange>,
}

/// Setup-server pre-distribution.
///
/// Every sensor gets a ring over its provisioned group's pool (misdeployed
/// sensors keep their origin group's ring); every head gets its share of a
/// fresh degree-`t` symmetric polynomial and an `m'` ring. Ring sizes are
/// capped at `|pool| - 1`, which is the saturated case where a node holds
/// every other member of its group.
pub fn predistribute<R: Rng + ?Sized>(dep: &Deployment, params: SchemeParams, rng: &mut R) -> Result<NetworkState> {
    params.validate(dep.heads().len())?;
    let mut masters = MasterKeyTable::new();
    for n in dep.active_nodes() {
        masters.insert(n.id, MasterKey::random(rng));
    }
    let poly = BivariatePolynomial::random_symmetric(params.field, params.t, rng)?;

    let mut pools = vec![Vec::new(); dep.group_count()];
    for n in dep.active_nodes() {
        pools[n.group].push(n.id);
    }

    let mut sensor_rings = BTreeMap::new();
    let mut head_rings = BTreeMap::new();
    for n in dep.active_nodes() {
        let pool = &pools[n.group];
        let cap = pool.len().saturating_sub(1);
        match n.kind {
            NodeKind::RegularSensor => {
                let ring = build_sensor_ring(n.id, pool, params.m.min(cap), &masters, rng)?;
                sensor_rings.insert(n.id, ring);
            }
            NodeKind::GroupHead => {
                let share = poly.share_for(n.id)?;
                let size = params.m_prime.min(cap);
                let ring = build_head_ring(n.id, pool, size, params.m.min(size), share, &masters, rng)?;
                head_rings.insert(n.id, ring);
            }
            NodeKind::BaseStation => {}
        }
    }

    Ok(NetworkState {
        params,
        poly,
        pools,
        masters,
        sensor_rings,
        head_rings,
        established: BTreeMap::new(),
        counters: BTreeMap::new(),
        bs_counters: NodeCounters::default(),
        announced: BTreeSet::new(),
        log: Vec::new(),
        record_events: false,
        case3: Vec::new(),
    })
}

impl NetworkState {
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    /// Enables the ordered message log (off by default for bulk runs).
    pub fn set_record_events(&mut self, on: bool) {
        self.record_events = on;
    }

    pub fn events(&self) -> &[Event] {
        &self.log
    }

    pub fn masters(&self) -> &MasterKeyTable {
        &self.masters
    }

    pub fn sensor_ring(&self, id: NodeId) -> Option<&SensorKeyRing> {
        self.sensor_rings.get(&id)
    }

    pub fn head_ring(&self, id: NodeId) -> Option<&GroupHeadKeyRing> {
        self.head_rings.get(&id)
    }

    pub fn sensor_rings(&self) -> impl Iterator<Item = &SensorKeyRing> {
        self.sensor_rings.values()
    }

    pub fn head_rings(&self) -> impl Iterator<Item = &GroupHeadKeyRing> {
        self.head_rings.values()
    }

    pub fn share(&self, head: NodeId) -> Option<&PolynomialShare> {
        self.head_rings.get(&head).map(|h| &h.share)
    }

    /// Current node pool `N_i` of a group.
    pub fn pool(&self, group: usize) -> Option<&[NodeId]> {
        self.pools.get(group).map(Vec::as_slice)
    }

    pub fn established(&self) -> &BTreeMap<LinkId, EstablishedLink> {
        &self.established
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<&EstablishedLink> {
        self.established.get(&LinkId::new(a, b))
    }

    /// The key `node` stored for its link with `peer`.
    pub fn stored_key(&self, node: NodeId, peer: NodeId) -> Option<PairwiseKey> {
        let l = LinkId::new(node, peer);
        self.established
            .get(&l)
            .map(|e| if l.low() == node { e.key_at_low } else { e.key_at_high })
    }

    pub fn counters(&self, id: NodeId) -> NodeCounters {
        self.counters.get(&id).copied().unwrap_or_default()
    }

    pub fn base_station_counters(&self) -> NodeCounters {
        self.bs_counters
    }

    pub fn case3_exchanges(&self) -> &[Case3Exchange] {
        &self.case3
    }

    /// Setup-server evaluation of the head polynomial (test oracle / attack
    /// ground truth, never available to nodes).
    pub fn server_polynomial(&self) -> &BivariatePolynomial {
        &self.poly
    }

    /// `u,v,method` per established link, ascending.
    pub fn write_links_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "u,v,method")?;
        for (l, e) in &self.established {
            writeln!(w, "{},{},{}", l.low(), l.high(), e.method.as_str())?;
        }
        Ok(())
    }

    /// `node,msgs_sent,msgs_received,prf_evals,poly_evals`; the base station
    /// is the final row with node `bs`.
    pub fn write_counters_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "node,msgs_sent,msgs_received,prf_evals,poly_evals")?;
        let row = |w: &mut W, node: &dyn std::fmt::Display, c: &NodeCounters| {
            writeln!(w, "{},{},{},{},{}", node, c.msgs_sent, c.msgs_received, c.prf_evals, c.poly_evals)
        };
        for (id, c) in &self.counters {
            row(&mut w, id, c)?;
        }
        row(&mut w, &"bs", &self.bs_counters)
    }

    pub(crate) fn emit(&mut self, e: Event) {
        if self.record_events {
            self.log.push(e);
        }
    }

    pub(crate) fn counter(&mut self, id: NodeId) -> &mut NodeCounters {
        self.counters.entry(id).or_default()
    }

    pub(crate) fn hop(&mut self, from: Hop, to: Hop) {
        match from {
            Hop::Node(n) => self.counter(n).msgs_sent += 1,
            Hop::BaseStation => self.bs_counters.msgs_sent += 1,
        }
        match to {
            Hop::Node(n) => self.counter(n).msgs_received += 1,
            Hop::BaseStation => self.bs_counters.msgs_received += 1,
        }
        self.emit(Event::Relay { from, to });
    }

    pub(crate) fn store(&mut self, link: LinkId, method: KeyMethod, origin: KeyOrigin, low: PairwiseKey, high: PairwiseKey) {
        self.established.insert(link, EstablishedLink { method, origin, key_at_low: low, key_at_high: high });
        self.emit(Event::Stored { link, method });
    }

    pub(crate) fn master_of(&self, id: NodeId) -> Result<MasterKey> {
        if let Some(r) = self.sensor_rings.get(&id) {
            return Ok(r.master);
        }
        if let Some(r) = self.head_rings.get(&id) {
            return Ok(r.master);
        }
        Err(Error::UnknownNode(id))
    }
}

pub(crate) fn field_key(fe: FieldElement) -> PairwiseKey {
    PairwiseKey(fe.to_block())
}
