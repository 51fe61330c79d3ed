use rand::Rng;

use super::case3::{establish_case3, Case3Outcome};
use super::state::{field_key, Event, KeyMethod, KeyOrigin, NetworkState};
use crate::deployment::{AdjacencyGraph, Deployment};
use crate::error::Result;
use crate::node::{LinkId, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstablishmentSummary {
    pub inter_group: usize,
    pub intra_group: usize,
    pub case3_established: usize,
    pub case3_deferred: usize,
    pub case3_rejected: usize,
}

/// Head-to-head keys: both heads exchange ids and evaluate their own share
/// at the other's id.
pub fn establish_inter_group(state: &mut NetworkState, dep: &Deployment, graph: &AdjacencyGraph) -> usize {
    let pairs: Vec<LinkId> = dep
        .heads()
        .iter()
        .filter(|&&h| is_active(dep, h))
        .flat_map(|&h| {
            graph
                .neighbors(h)
                .iter()
                .filter(move |&&n| n > h)
                .filter(|&&n| dep.node(n).is_some_and(|r| r.active && r.kind == NodeKind::GroupHead))
                .map(move |&n| LinkId::new(h, n))
        })
        .collect();
    let mut made = 0;
    for link in pairs {
        made += inter_pair(state, link) as usize;
    }
    made
}

pub(crate) fn inter_pair(state: &mut NetworkState, link: LinkId) -> bool {
    if state.established.contains_key(&link) {
        return false;
    }
    let (a, b) = (link.low(), link.high());
    let (Some(ra), Some(rb)) = (state.head_rings.get(&a), state.head_rings.get(&b)) else {
        return false;
    };
    let ka = field_key(ra.share.eval_at(b));
    let kb = field_key(rb.share.eval_at(a));
    for (from, to) in [(a, b), (b, a)] {
        state.counter(from).msgs_sent += 1;
        state.counter(to).msgs_received += 1;
        state.emit(Event::IdExchange { from, to });
    }
    state.counter(a).poly_evals += 1;
    state.counter(b).poly_evals += 1;
    state.store(link, KeyMethod::Poly, KeyOrigin::Polynomial, ka, kb);
    true
}

/// Sensor-sensor (Case I) and head-sensor (Case II) keys inside each
/// provisioned group.
pub fn establish_intra_group(state: &mut NetworkState, dep: &Deployment, graph: &AdjacencyGraph) -> usize {
    for n in dep.active_nodes() {
        announce(state, n.id);
    }
    let edges: Vec<LinkId> = graph.edges().collect();
    let mut made = 0;
    for link in edges {
        made += intra_pair(state, dep, link) as usize;
    }
    made
}

pub(crate) fn announce(state: &mut NetworkState, id: NodeId) {
    if state.announced.insert(id) {
        state.counter(id).msgs_sent += 1;
        state.emit(Event::Hello { from: id });
    }
}

/// One direct-establishment attempt. The notifier holds the target's id in
/// its ring and tells the target; the target recomputes
/// `PRF_{MK_target}(id_notifier)` with its own master key.
///
/// Notifier choice: for two sensors the smaller id wins when both rings
/// hit; for a head and a sensor the head's ring is checked first.
pub(crate) fn intra_pair(state: &mut NetworkState, dep: &Deployment, link: LinkId) -> bool {
    if state.established.contains_key(&link) {
        return false;
    }
    let (Some(a), Some(b)) = (dep.node(link.low()), dep.node(link.high())) else {
        return false;
    };
    if !(a.active && b.active) || a.group != b.group {
        return false;
    }
    let holds = |owner: NodeId, peer: NodeId| {
        state
            .sensor_rings
            .get(&owner)
            .map(|r| &r.ring)
            .or_else(|| state.head_rings.get(&owner).map(|r| &r.ring))
            .and_then(|r| r.lookup(peer).copied())
    };
    let (notifier, target, method) = match (a.kind, b.kind) {
        (NodeKind::RegularSensor, NodeKind::RegularSensor) => {
            if holds(a.id, b.id).is_some() {
                (a.id, b.id, KeyMethod::PrfCase1)
            } else if holds(b.id, a.id).is_some() {
                (b.id, a.id, KeyMethod::PrfCase1)
            } else {
                return false;
            }
        }
        (NodeKind::GroupHead, NodeKind::RegularSensor) | (NodeKind::RegularSensor, NodeKind::GroupHead) => {
            let (head, sensor) = if a.kind == NodeKind::GroupHead { (a.id, b.id) } else { (b.id, a.id) };
            if holds(head, sensor).is_some() {
                (head, sensor, KeyMethod::PrfCase2)
            } else if holds(sensor, head).is_some() {
                (sensor, head, KeyMethod::PrfCase2)
            } else {
                return false;
            }
        }
        _ => return false,
    };
    let notifier_key = holds(notifier, target).expect("checked above");
    // The target's master key; the table caches each node's keyed PRF state.
    let target_key = match state.masters.prf(target, notifier) {
        Ok(k) => k,
        Err(_) => return false,
    };
    state.counter(notifier).msgs_sent += 1;
    state.counter(target).msgs_received += 1;
    state.counter(target).prf_evals += 1;
    state.emit(Event::Notify { from: notifier, to: target, method });
    let (low, high) = if notifier == link.low() { (notifier_key, target_key) } else { (target_key, notifier_key) };
    state.store(link, method, KeyOrigin::Prf { master_of: target, input: notifier }, low, high);
    true
}

/// Inter-group, then intra-group, then base-station mediated keys for every
/// misdeployed sensor and each unkeyed neighbor in the cell it landed in.
/// Idempotent: established pairs are never revisited.
pub fn establish_all<R: Rng + ?Sized>(
    state: &mut NetworkState,
    dep: &Deployment,
    graph: &AdjacencyGraph,
    rng: &mut R,
) -> Result<EstablishmentSummary> {
    let mut summary = EstablishmentSummary {
        inter_group: establish_inter_group(state, dep, graph),
        intra_group: establish_intra_group(state, dep, graph),
        ..Default::default()
    };
    let misdeployed: Vec<NodeId> = dep.sensors().filter(|n| n.misdeployed).map(|n| n.id).collect();
    for u in misdeployed {
        let cell = dep.require(u)?.cell;
        let candidates: Vec<NodeId> = graph
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| case3_peer(dep, v, cell))
            .collect();
        for v in candidates {
            if state.established.contains_key(&LinkId::new(u, v)) {
                continue;
            }
            match establish_case3(state, dep, graph, u, v, rng)? {
                Case3Outcome::Established => summary.case3_established += 1,
                Case3Outcome::Deferred(_) => summary.case3_deferred += 1,
                Case3Outcome::Rejected => summary.case3_rejected += 1,
                Case3Outcome::AlreadyEstablished => {}
            }
        }
    }
    Ok(summary)
}

/// A node that belongs to `cell` both by provisioning and by location.
pub(crate) fn case3_peer(dep: &Deployment, v: NodeId, cell: usize) -> bool {
    dep.node(v).is_some_and(|n| n.active && n.group == cell && n.cell == cell && !n.misdeployed)
}

fn is_active(dep: &Deployment, id: NodeId) -> bool {
    dep.node(id).is_some_and(|n| n.active)
}
