//! Post-deployment node addition and group-head replacement.

use rand::Rng;

use super::establish::{announce, inter_pair, intra_pair};
use super::state::{Event, NetworkState};
use crate::deployment::{AdjacencyGraph, Deployment};
use crate::error::{Error, Result};
use crate::node::{LinkId, NodeId, NodeKind};
use crate::prfkeys::{build_head_ring, build_sensor_ring, MasterKey};

/// Provisions a new sensor for `group` with a ring drawn from the group's
/// current pool, places it, and runs intra-group establishment for it only.
pub fn add_sensor<R: Rng + ?Sized>(
    state: &mut NetworkState,
    dep: &mut Deployment,
    graph: &mut AdjacencyGraph,
    group: usize,
    rng: &mut R,
) -> Result<NodeId> {
    if group >= state.pools.len() {
        return Err(Error::UnknownGroup(group));
    }
    let id = dep.add_sensor(group, rng)?;
    state.masters.insert(id, MasterKey::random(rng));
    let pool = &state.pools[group];
    let size = state.params.m.min(pool.len());
    let ring = build_sensor_ring(id, pool, size, &state.masters, rng)?;
    state.sensor_rings.insert(id, ring);
    state.pools[group].push(id);

    graph.insert_node(dep, id);
    announce(state, id);
    for &v in graph.neighbors(id) {
        intra_pair(state, dep, LinkId::new(id, v));
    }
    Ok(id)
}

/// Captured-head removal: the head leaves the network and every key it
/// established is revoked.
pub fn remove_head(
    state: &mut NetworkState,
    dep: &mut Deployment,
    graph: &mut AdjacencyGraph,
    group: usize,
) -> Result<NodeId> {
    let head = dep.head_of(group)?;
    dep.deactivate(head)?;
    graph.remove_node(head);
    let revoked: Vec<LinkId> = state.established.keys().copied().filter(|l| l.contains(head)).collect();
    for link in revoked {
        state.established.remove(&link);
        state.emit(Event::Revoked { link });
    }
    state.head_rings.remove(&head);
    state.pools[group].retain(|&n| n != head);
    Ok(head)
}

/// Installs a fresh head in a group whose head was removed: new id, master
/// key, share `f(id', y)` of the same polynomial and an `m'` ring; then
/// inter- and intra-group establishment for it.
pub fn replace_head<R: Rng + ?Sized>(
    state: &mut NetworkState,
    dep: &mut Deployment,
    graph: &mut AdjacencyGraph,
    group: usize,
    rng: &mut R,
) -> Result<NodeId> {
    let id = dep.add_head(group, rng)?;
    state.masters.insert(id, MasterKey::random(rng));
    let share = state.poly.share_for(id)?;
    let pool = &state.pools[group];
    let size = state.params.m_prime.min(pool.len());
    let ring = build_head_ring(id, pool, size, state.params.m.min(size), share, &state.masters, rng)?;
    state.head_rings.insert(id, ring);
    state.pools[group].push(id);

    graph.insert_node(dep, id);
    announce(state, id);
    let neighbors: Vec<NodeId> = graph.neighbors(id).to_vec();
    for v in neighbors {
        let link = LinkId::new(id, v);
        match dep.node(v).map(|n| n.kind) {
            Some(NodeKind::GroupHead) => {
                inter_pair(state, link);
            }
            Some(_) => {
                intra_pair(state, dep, link);
            }
            None => {}
        }
    }
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{deploy, discover_neighbors, DeploymentConfig};
    use crate::protocol::state::field_key;
    use crate::protocol::{establish_all, predistribute, KeyMethod, SchemeParams};
    use crate::rng;

    fn setup(seed: u64) -> (Deployment, AdjacencyGraph, NetworkState) {
        let dep = deploy(&DeploymentConfig::desk_scale(60, seed)).unwrap();
        let g = discover_neighbors(&dep);
        let mut st = predistribute(&dep, SchemeParams::new(20, 30, 16), &mut rng::stream(seed, "pre", 0)).unwrap();
        establish_all(&mut st, &dep, &g, &mut rng::stream(seed, "est", 0)).unwrap();
        (dep, g, st)
    }

    #[test]
    fn added_sensor_gets_ring_and_keys() {
        let (mut dep, mut g, mut st) = setup(1);
        let before = st.established().clone();
        let mut r = rng::stream(1, "add", 0);
        let id = add_sensor(&mut st, &mut dep, &mut g, 4, &mut r).unwrap();
        let ring = st.sensor_ring(id).unwrap();
        assert_eq!(ring.ring.len(), 20);
        assert!(ring.ring.peers().all(|p| dep.node(p).unwrap().group == 4));
        assert!(st.pool(4).unwrap().contains(&id));
        // Pre-existing links untouched.
        for (l, e) in &before {
            assert_eq!(st.established().get(l), Some(e));
        }
        // Every neighbor whose id the new node holds is now keyed with it.
        for &v in g.neighbors(id) {
            if ring.ring.contains(v) {
                let l = st.link(id, v).expect("Case I replay");
                assert!(l.agreed());
            }
        }
        assert_eq!(st.established().len() - before.len(), st.established().keys().filter(|l| l.contains(id)).count());
        assert!(matches!(add_sensor(&mut st, &mut dep, &mut g, 99, &mut r), Err(Error::UnknownGroup(99))));
    }

    #[test]
    fn head_replacement() {
        let (mut dep, mut g, mut st) = setup(2);
        let mut r = rng::stream(2, "head", 0);
        assert!(matches!(replace_head(&mut st, &mut dep, &mut g, 4, &mut r), Err(Error::HeadStillActive(4))));

        let old = remove_head(&mut st, &mut dep, &mut g, 4).unwrap();
        assert!(st.established().keys().all(|l| !l.contains(old)));
        let new = replace_head(&mut st, &mut dep, &mut g, 4, &mut r).unwrap();
        assert!(new > old);
        assert!(st.established().keys().all(|l| !l.contains(old)));

        // Center cell: its head reaches all adjacent heads, keyed via shares.
        let head_neighbors: Vec<NodeId> = g
            .neighbors(new)
            .iter()
            .copied()
            .filter(|&v| dep.node(v).unwrap().kind == NodeKind::GroupHead)
            .collect();
        assert!(head_neighbors.len() >= 4);
        for h in head_neighbors {
            let l = st.link(new, h).unwrap();
            assert_eq!(l.method, KeyMethod::Poly);
            assert!(l.agreed());
            assert_eq!(st.share(new).unwrap().eval_at(h), st.share(h).unwrap().eval_at(new));
            assert_eq!(l.key(), field_key(st.server_polynomial().eval_ids(new, h)));
        }
        assert_eq!(st.head_ring(new).unwrap().ring.len(), 30);
    }
}
