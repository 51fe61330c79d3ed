//! Base-station mediated key establishment for a sensor that landed outside
//! its provisioned group.
//!
//! `u -> v: (id_u, RN_u)`; `v -> GH_j -> ... -> BS: E_{MK_v}(id_v, id_u, RN_u, RN_v)`;
//! the BS validates under `MK_v`, draws `k_uv` and returns
//! `E_{MK_u}(k_uv ^ id_u ^ RN_u)` and `E_{MK_v}(k_uv ^ id_v ^ RN_v)` along
//! the reverse route. Ids are zero-padded to 128 bits for the XOR.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::establish::case3_peer;
use super::seal::{open, seal, Sealed};
use super::state::{Event, KeyMethod, KeyOrigin, NetworkState};
use crate::deployment::{AdjacencyGraph, Deployment};
use crate::error::{Error, Result};
use crate::node::{LinkId, NodeId, NodeKind};
use crate::prfkeys::{MasterKey, PairwiseKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hop {
    Node(NodeId),
    BaseStation,
}

/// Fault injected into the request leg, for exercising BS validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Case3Fault {
    #[default]
    None,
    /// One ciphertext bit flipped in transit.
    CorruptRequest,
    /// Request sealed under a key other than `MK_v`.
    ForgedMasterKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeferReason {
    NoPathToHead,
    NoRouteToBaseStation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case3Outcome {
    Established,
    /// BS could not validate the request; nothing stored.
    Rejected,
    /// No route; nothing sent.
    Deferred(DeferReason),
    AlreadyEstablished,
}

/// Transcript of one successful exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Case3Exchange {
    pub u: NodeId,
    pub v: NodeId,
    pub rn_u: [u8; 16],
    pub rn_v: [u8; 16],
    pub k_uv: PairwiseKey,
    pub request: Sealed,
    pub protected_u: Sealed,
    pub protected_v: Sealed,
    /// Uplink route from `v` to the base station.
    pub route: Vec<Hop>,
}

pub fn establish_case3<R: Rng + ?Sized>(
    state: &mut NetworkState,
    dep: &Deployment,
    graph: &AdjacencyGraph,
    u: NodeId,
    v: NodeId,
    rng: &mut R,
) -> Result<Case3Outcome> {
    establish_case3_with_fault(state, dep, graph, u, v, Case3Fault::None, rng)
}

pub fn establish_case3_with_fault<R: Rng + ?Sized>(
    state: &mut NetworkState,
    dep: &Deployment,
    graph: &AdjacencyGraph,
    u: NodeId,
    v: NodeId,
    fault: Case3Fault,
    rng: &mut R,
) -> Result<Case3Outcome> {
    let un = dep.require(u)?;
    if !(un.active && un.kind == NodeKind::RegularSensor && un.misdeployed) {
        return Err(Error::Precondition(format!("node {u} is not an active misdeployed sensor")));
    }
    let cell = un.cell;
    let gh = dep.head_of(cell)?;
    let v_is_head = v == gh && dep.node(gh).is_some_and(|n| n.active);
    if !(v_is_head || case3_peer(dep, v, cell)) {
        return Err(Error::Precondition(format!("node {v} is not a member of group {cell}")));
    }
    if !graph.has_edge(u, v) {
        return Err(Error::Precondition(format!("nodes {u} and {v} are not physical neighbors")));
    }
    let link = LinkId::new(u, v);
    if state.established.contains_key(&link) {
        return Ok(Case3Outcome::AlreadyEstablished);
    }

    let Some(sensor_leg) = path_to_head(dep, graph, v, gh, cell) else {
        return Ok(Case3Outcome::Deferred(DeferReason::NoPathToHead));
    };
    let Some(head_leg) = route_to_base_station(state, dep, gh) else {
        return Ok(Case3Outcome::Deferred(DeferReason::NoRouteToBaseStation));
    };
    let mut route: Vec<Hop> = sensor_leg.iter().map(|&n| Hop::Node(n)).collect();
    route.extend(head_leg[1..].iter().map(|&n| Hop::Node(n)));
    route.push(Hop::BaseStation);

    let rn_u: [u8; 16] = rng.gen();
    state.hop(Hop::Node(u), Hop::Node(v));
    state.emit(Event::Case3Request { from: u, to: v });

    let rn_v: [u8; 16] = rng.gen();
    let mut plaintext = Vec::with_capacity(48);
    plaintext.extend_from_slice(&v.to_be_bytes());
    plaintext.extend_from_slice(&u.to_be_bytes());
    plaintext.extend_from_slice(&rn_u);
    plaintext.extend_from_slice(&rn_v);
    let own_mk_v = state.master_of(v)?;
    let seal_key = match fault {
        Case3Fault::ForgedMasterKey => MasterKey::random(rng),
        _ => own_mk_v,
    };
    let mut request = seal(&seal_key, &aad(b"req", v), &plaintext, rng);
    if fault == Case3Fault::CorruptRequest {
        request.ciphertext[0] ^= 0x01;
    }
    for w in route.windows(2) {
        state.hop(w[0], w[1]);
    }

    let bs_mk_v = *state.masters.get(v).ok_or(Error::MissingMaster(v))?;
    let validated = open(&bs_mk_v, &aad(b"req", v), &request).filter(|pt| {
        pt.len() == 48 && pt[..8] == v.to_be_bytes() && pt[8..16] == u.to_be_bytes()
    });
    let Some(pt) = validated else {
        state.emit(Event::Case3Rejected { u, v });
        return Ok(Case3Outcome::Rejected);
    };
    let mut req_rn_u = [0u8; 16];
    let mut req_rn_v = [0u8; 16];
    req_rn_u.copy_from_slice(&pt[16..32]);
    req_rn_v.copy_from_slice(&pt[32..48]);

    let k_uv = PairwiseKey(rng.gen());
    let bs_mk_u = *state.masters.get(u).ok_or(Error::MissingMaster(u))?;
    let protected_u = seal(&bs_mk_u, &aad(b"rsp", u), &xor3(&k_uv.0, &u.to_block(), &req_rn_u), rng);
    let protected_v = seal(&bs_mk_v, &aad(b"rsp", v), &xor3(&k_uv.0, &v.to_block(), &req_rn_v), rng);

    for w in route.windows(2).rev() {
        state.hop(w[1], w[0]);
    }
    state.hop(Hop::Node(v), Hop::Node(u));

    let own_mk_u = state.master_of(u)?;
    let (Some(ku), Some(kv)) = (
        unwrap_copy(&own_mk_u, u, &rn_u, &protected_u),
        unwrap_copy(&own_mk_v, v, &rn_v, &protected_v),
    ) else {
        state.emit(Event::Case3Rejected { u, v });
        return Ok(Case3Outcome::Rejected);
    };
    let (low, high) = if u < v { (ku, kv) } else { (kv, ku) };
    state.store(link, KeyMethod::BsCase3, KeyOrigin::BaseStation, low, high);
    state.case3.push(Case3Exchange { u, v, rn_u, rn_v, k_uv, request, protected_u, protected_v, route });
    Ok(Case3Outcome::Established)
}

fn aad(tag: &[u8], id: NodeId) -> Vec<u8> {
    let mut a = tag.to_vec();
    a.extend_from_slice(&id.to_be_bytes());
    a
}

fn xor3(a: &[u8; 16], b: &[u8; 16], c: &[u8; 16]) -> [u8; 16] {
    std::array::from_fn(|i| a[i] ^ b[i] ^ c[i])
}

fn unwrap_copy(mk: &MasterKey, me: NodeId, rn: &[u8; 16], sealed: &Sealed) -> Option<PairwiseKey> {
    let blob: [u8; 16] = open(mk, &aad(b"rsp", me), sealed)?.try_into().ok()?;
    Some(PairwiseKey(xor3(&blob, &me.to_block(), rn)))
}

/// Shortest hop path `v -> ... -> gh` through correctly deployed members of
/// the cell.
fn path_to_head(dep: &Deployment, graph: &AdjacencyGraph, v: NodeId, gh: NodeId, cell: usize) -> Option<Vec<NodeId>> {
    let allowed = |n: NodeId| n == gh || case3_peer(dep, n, cell);
    bfs(v, |n| n == gh, |n| graph.neighbors(n).iter().copied().filter(|&w| allowed(w)).collect())
}

/// Shortest path over keyed head-to-head links from `gh` to any head within
/// head radio range of the base station.
fn route_to_base_station(state: &NetworkState, dep: &Deployment, gh: NodeId) -> Option<Vec<NodeId>> {
    let (bx, by) = dep.base_station();
    let reach = dep.config().radio_range_head;
    let is_gateway = |h: NodeId| {
        dep.node(h).is_some_and(|n| n.active && ((n.x - bx).powi(2) + (n.y - by).powi(2)).sqrt() <= reach)
    };
    let keyed_heads = |h: NodeId| -> Vec<NodeId> {
        dep.heads()
            .iter()
            .copied()
            .filter(|&o| o != h)
            .filter(|&o| state.established.get(&LinkId::new(h, o)).is_some_and(|e| e.method == KeyMethod::Poly))
            .collect()
    };
    bfs(gh, is_gateway, keyed_heads)
}

fn bfs(
    start: NodeId,
    is_goal: impl Fn(NodeId) -> bool,
    next: impl Fn(NodeId) -> Vec<NodeId>,
) -> Option<Vec<NodeId>> {
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue = VecDeque::from([start]);
    parent.insert(start, start);
    while let Some(n) = queue.pop_front() {
        if is_goal(n) {
            let mut path = vec![n];
            let mut cur = n;
            while cur != start {
                cur = parent[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for w in next(n) {
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(w) {
                e.insert(n);
                queue.push_back(w);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{deploy, discover_neighbors, DeploymentConfig};
    use crate::protocol::{establish_all, establish_inter_group, establish_intra_group, predistribute, SchemeParams};
    use crate::rng;

    fn setup(seed: u64) -> (Deployment, AdjacencyGraph, NetworkState) {
        let cfg = DeploymentConfig { misdeploy_fraction: 0.1, ..DeploymentConfig::desk_scale(50, seed) };
        let dep = deploy(&cfg).unwrap();
        let g = discover_neighbors(&dep);
        let mut st = predistribute(&dep, SchemeParams::new(10, 15, 12), &mut rng::stream(seed, "pre", 0)).unwrap();
        st.set_record_events(true);
        establish_inter_group(&mut st, &dep, &g);
        establish_intra_group(&mut st, &dep, &g);
        (dep, g, st)
    }

    fn candidate(dep: &Deployment, g: &AdjacencyGraph, st: &NetworkState) -> (NodeId, NodeId) {
        dep.sensors()
            .filter(|n| n.misdeployed)
            .flat_map(|n| g.neighbors(n.id).iter().map(move |&v| (n.id, v, n.cell)))
            .find(|&(u, v, cell)| case3_peer(dep, v, cell) && st.link(u, v).is_none())
            .map(|(u, v, _)| (u, v))
            .expect("some misdeployed sensor has an eligible neighbor")
    }

    #[test]
    fn honest_exchange_agrees() {
        let (dep, g, mut st) = setup(1);
        let (u, v) = candidate(&dep, &g, &st);
        let before = st.counters(u);
        let out = establish_case3(&mut st, &dep, &g, u, v, &mut rng::stream(1, "c3", 0)).unwrap();
        assert_eq!(out, Case3Outcome::Established);
        let link = st.link(u, v).unwrap();
        assert_eq!(link.method, KeyMethod::BsCase3);
        assert!(link.agreed());
        let ex = st.case3_exchanges().last().unwrap();
        assert_eq!(link.key(), ex.k_uv);
        assert_eq!(ex.route.first(), Some(&Hop::Node(v)));
        assert_eq!(ex.route.last(), Some(&Hop::BaseStation));
        // u sends its request and receives its copy.
        let after = st.counters(u);
        assert_eq!(after.msgs_sent - before.msgs_sent, 1);
        assert_eq!(after.msgs_received - before.msgs_received, 1);
        let uplink_hops = ex.route.len() as u64 - 1;
        assert_eq!(st.base_station_counters().msgs_received, 1);
        assert_eq!(st.base_station_counters().msgs_sent, 1);
        assert!(uplink_hops >= 1);
        assert_eq!(
            establish_case3(&mut st, &dep, &g, u, v, &mut rng::stream(1, "c3", 1)).unwrap(),
            Case3Outcome::AlreadyEstablished
        );
    }

    #[test]
    fn tampered_requests_are_rejected() {
        for (i, fault) in [Case3Fault::CorruptRequest, Case3Fault::ForgedMasterKey].into_iter().enumerate() {
            let (dep, g, mut st) = setup(2);
            let (u, v) = candidate(&dep, &g, &st);
            let out = establish_case3_with_fault(&mut st, &dep, &g, u, v, fault, &mut rng::stream(2, "c3", i as u64)).unwrap();
            assert_eq!(out, Case3Outcome::Rejected);
            assert!(st.link(u, v).is_none());
            assert!(st.events().iter().any(|e| matches!(e, Event::Case3Rejected { .. })));
        }
    }

    #[test]
    fn preconditions_enforced() {
        let (dep, g, mut st) = setup(3);
        let good = dep.sensors().find(|n| !n.misdeployed).unwrap().id;
        let other = g.neighbors(good)[0];
        assert!(matches!(
            establish_case3(&mut st, &dep, &g, good, other, &mut rng::stream(3, "c3", 0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn no_route_defers_without_side_effects() {
        let (dep, g, _) = setup(4);
        // Fresh state with no head-to-head keys: no route to the base station
        // for any cell whose head is out of BS range.
        let mut st = predistribute(&dep, SchemeParams::new(10, 15, 12), &mut rng::stream(4, "pre", 0)).unwrap();
        establish_intra_group(&mut st, &dep, &g);
        let (bx, by) = dep.base_station();
        let far = dep
            .sensors()
            .filter(|n| n.misdeployed)
            .flat_map(|n| g.neighbors(n.id).iter().map(move |&v| (n.id, v, n.cell)))
            .find(|&(u, v, cell)| {
                let h = dep.node(dep.head_of(cell).unwrap()).unwrap();
                case3_peer(&dep, v, cell) && st.link(u, v).is_none() && ((h.x - bx).powi(2) + (h.y - by).powi(2)).sqrt() > 150.0
            });
        let Some((u, v, _)) = far else { return };
        let before = st.counters(u);
        let out = establish_case3(&mut st, &dep, &g, u, v, &mut rng::stream(4, "c3", 0)).unwrap();
        assert_eq!(out, Case3Outcome::Deferred(DeferReason::NoRouteToBaseStation));
        assert_eq!(st.counters(u), before);
    }

    #[test]
    fn full_run_keys_misdeployed_nodes() {
        let (dep, g, mut st) = setup(5);
        let s = establish_all(&mut st, &dep, &g, &mut rng::stream(5, "est", 0)).unwrap();
        assert!(s.case3_established > 0);
        for (l, e) in st.established() {
            assert!(e.agreed());
            if e.method == KeyMethod::BsCase3 {
                assert!(dep.node(l.low()).unwrap().misdeployed || dep.node(l.high()).unwrap().misdeployed);
            }
        }
    }
}
