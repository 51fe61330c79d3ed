//! Square target field split into `l = groups_per_side^2` equal cells, one
//! group head near each cell center and `n_i` sensors placed uniformly in
//! their cell.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::node::{LinkId, NodeId, NodeKind};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseStationSite {
    #[default]
    Corner,
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentConfig {
    /// Side of the square field, meters.
    pub field_side: f64,
    pub groups_per_side: usize,
    /// `n_i`, regular sensors provisioned per group.
    pub sensors_per_group: usize,
    pub radio_range_sensor: f64,
    #[serde(default = "default_head_range")]
    pub radio_range_head: f64,
    #[serde(default = "default_jitter")]
    pub head_placement_jitter: f64,
    #[serde(default)]
    pub misdeploy_fraction: f64,
    #[serde(default)]
    pub base_station: BaseStationSite,
    #[serde(default)]
    pub seed: u64,
}

fn default_head_range() -> f64 {
    150.0
}

fn default_jitter() -> f64 {
    5.0
}

impl DeploymentConfig {
    /// 1000 m x 1000 m field, 100 groups of 100 m x 100 m, 30 m sensor range.
    pub fn paper_scale(sensors_per_group: usize, seed: u64) -> Self {
        DeploymentConfig {
            field_side: 1000.0,
            groups_per_side: 10,
            sensors_per_group,
            radio_range_sensor: 30.0,
            radio_range_head: default_head_range(),
            head_placement_jitter: default_jitter(),
            misdeploy_fraction: 0.0,
            base_station: BaseStationSite::Corner,
            seed,
        }
    }

    /// Same 100 m cells and radio ranges on a 3 x 3 grid.
    pub fn desk_scale(sensors_per_group: usize, seed: u64) -> Self {
        DeploymentConfig {
            field_side: 300.0,
            groups_per_side: 3,
            ..Self::paper_scale(sensors_per_group, seed)
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups_per_side * self.groups_per_side
    }

    pub fn cell_side(&self) -> f64 {
        self.field_side / self.groups_per_side as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::InvalidConfig(format!("deployment.{field}: {why}")));
        if !(self.field_side.is_finite() && self.field_side > 0.0) {
            return bad("field_side", "must be a positive number of meters");
        }
        if self.groups_per_side == 0 {
            return bad("groups_per_side", "must be at least 1");
        }
        if !(self.radio_range_sensor.is_finite() && self.radio_range_sensor > 0.0) {
            return bad("radio_range_sensor", "must be positive");
        }
        if !(self.radio_range_head.is_finite() && self.radio_range_head > 0.0) {
            return bad("radio_range_head", "must be positive");
        }
        if !(self.head_placement_jitter >= 0.0 && self.head_placement_jitter <= self.cell_side() / 2.0) {
            return bad("head_placement_jitter", "must lie in [0, cell_side/2]");
        }
        if !(0.0..=1.0).contains(&self.misdeploy_fraction) {
            return bad("misdeploy_fraction", "must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Group the node was provisioned for.
    pub group: usize,
    /// Cell the node actually landed in.
    pub cell: usize,
    pub x: f64,
    pub y: f64,
    pub misdeployed: bool,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    cfg: DeploymentConfig,
    // nodes[i] has id i + 1.
    nodes: Vec<NodeRecord>,
    heads: Vec<NodeId>,
    base_station: (f64, f64),
}

/// Places all nodes. Ids: heads get `1..=l` in group order, then sensors
/// group by group. `cfg.misdeploy_fraction` of sensors (Bernoulli per
/// sensor) land in a uniformly chosen edge-adjacent cell instead of their own.
pub fn deploy(cfg: &DeploymentConfig) -> Result<Deployment> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, "deployment", 0);
    let l = cfg.group_count();
    let bs = match cfg.base_station {
        BaseStationSite::Corner => (0.0, 0.0),
        BaseStationSite::Center => (cfg.field_side / 2.0, cfg.field_side / 2.0),
    };
    let mut dep = Deployment { cfg: cfg.clone(), nodes: Vec::new(), heads: Vec::new(), base_station: bs };
    for g in 0..l {
        let id = dep.place_head(g, &mut rng);
        dep.heads.push(id);
    }
    for g in 0..l {
        for _ in 0..cfg.sensors_per_group {
            let misdeploy = cfg.misdeploy_fraction > 0.0 && rng.gen_bool(cfg.misdeploy_fraction);
            dep.place_sensor(g, misdeploy, &mut rng);
        }
    }
    Ok(dep)
}

impl Deployment {
    pub fn config(&self) -> &DeploymentConfig {
        &self.cfg
    }

    pub fn group_count(&self) -> usize {
        self.cfg.group_count()
    }

    pub fn base_station(&self) -> (f64, f64) {
        self.base_station
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        (id.get() as usize).checked_sub(1).and_then(|i| self.nodes.get(i))
    }

    pub fn require(&self, id: NodeId) -> Result<&NodeRecord> {
        self.node(id).ok_or(Error::UnknownNode(id))
    }

    /// All nodes ever placed, including removed ones, in id order.
    pub fn all_nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.iter().filter(|n| n.active)
    }

    pub fn sensors(&self) -> impl Iterator<Item = &NodeRecord> {
        self.active_nodes().filter(|n| n.kind == NodeKind::RegularSensor)
    }

    /// Current head of each group (may be inactive after capture).
    pub fn heads(&self) -> &[NodeId] {
        &self.heads
    }

    pub fn head_of(&self, group: usize) -> Result<NodeId> {
        self.heads.get(group).copied().ok_or(Error::UnknownGroup(group))
    }

    pub fn next_id(&self) -> NodeId {
        NodeId(self.nodes.len() as u64 + 1)
    }

    pub fn range_of(&self, id: NodeId) -> f64 {
        match self.node(id).map(|n| n.kind) {
            Some(NodeKind::GroupHead) => self.cfg.radio_range_head,
            _ => self.cfg.radio_range_sensor,
        }
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (a, b) = (self.node(a)?, self.node(b)?);
        Some(((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt())
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64, f64, f64) {
        let side = self.cfg.cell_side();
        let (row, col) = (cell / self.cfg.groups_per_side, cell % self.cfg.groups_per_side);
        let (x0, y0) = (col as f64 * side, row as f64 * side);
        (x0, y0, x0 + side, y0 + side)
    }

    pub fn cell_of_point(&self, x: f64, y: f64) -> usize {
        let side = self.cfg.cell_side();
        let k = self.cfg.groups_per_side;
        let col = ((x / side).floor() as usize).min(k - 1);
        let row = ((y / side).floor() as usize).min(k - 1);
        row * k + col
    }

    /// Edge-adjacent cells.
    pub fn adjacent_cells(&self, cell: usize) -> Vec<usize> {
        let k = self.cfg.groups_per_side;
        let (row, col) = (cell / k, cell % k);
        let mut out = Vec::with_capacity(4);
        if row > 0 {
            out.push(cell - k);
        }
        if col > 0 {
            out.push(cell - 1);
        }
        if col + 1 < k {
            out.push(cell + 1);
        }
        if row + 1 < k {
            out.push(cell + k);
        }
        out
    }

    /// New sensor for `group`, placed uniformly inside its cell.
    pub fn add_sensor<R: Rng + ?Sized>(&mut self, group: usize, rng: &mut R) -> Result<NodeId> {
        if group >= self.group_count() {
            return Err(Error::UnknownGroup(group));
        }
        Ok(self.place_sensor(group, false, rng))
    }

    /// Places a replacement head; the group's previous head must already be
    /// deactivated.
    pub fn add_head<R: Rng + ?Sized>(&mut self, group: usize, rng: &mut R) -> Result<NodeId> {
        let old = self.head_of(group)?;
        if self.node(old).is_some_and(|n| n.active) {
            return Err(Error::HeadStillActive(group));
        }
        let id = self.place_head(group, rng);
        self.heads[group] = id;
        Ok(id)
    }

    pub fn deactivate(&mut self, id: NodeId) -> Result<()> {
        let idx = (id.get() as usize).checked_sub(1).filter(|&i| i < self.nodes.len());
        let idx = idx.ok_or(Error::UnknownNode(id))?;
        self.nodes[idx].active = false;
        Ok(())
    }

    /// `node_id,kind,group,x,y,misdeployed` for every active node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "node_id,kind,group,x,y,misdeployed")?;
        for n in self.active_nodes() {
            writeln!(w, "{},{},{},{},{},{}", n.id, n.kind.as_str(), n.group, n.x, n.y, n.misdeployed)?;
        }
        Ok(())
    }

    fn place_head<R: Rng + ?Sized>(&mut self, group: usize, rng: &mut R) -> NodeId {
        let (x0, y0, x1, y1) = self.cell_bounds(group);
        let j = self.cfg.head_placement_jitter;
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        let (dx, dy) = if j > 0.0 { (rng.gen_range(-j..=j), rng.gen_range(-j..=j)) } else { (0.0, 0.0) };
        self.push(NodeKind::GroupHead, group, group, cx + dx, cy + dy, false)
    }

    fn place_sensor<R: Rng + ?Sized>(&mut self, group: usize, misdeploy: bool, rng: &mut R) -> NodeId {
        let mut cell = group;
        let mut flagged = false;
        if misdeploy {
            let adj = self.adjacent_cells(group);
            if !adj.is_empty() {
                cell = adj[rng.gen_range(0..adj.len())];
                flagged = true;
            }
        }
        let (x0, y0, x1, y1) = self.cell_bounds(cell);
        let (x, y) = (rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        self.push(NodeKind::RegularSensor, group, cell, x, y, flagged)
    }

    fn push(&mut self, kind: NodeKind, group: usize, cell: usize, x: f64, y: f64, misdeployed: bool) -> NodeId {
        let id = self.next_id();
        self.nodes.push(NodeRecord { id, kind, group, cell, x, y, misdeployed, active: true });
        id
    }
}

/// Physical-neighbor relation: `u ~ v` iff both are active and their
/// distance is at most `min(range_u, range_v)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdjacencyGraph {
    // adj[id] sorted ascending; index 0 unused.
    adj: Vec<Vec<NodeId>>,
}

pub fn discover_neighbors(dep: &Deployment) -> AdjacencyGraph {
    let cfg = dep.config();
    let cell = cfg.radio_range_sensor.min(cfg.field_side).max(1e-9);
    let dim = (cfg.field_side / cell).ceil() as usize + 1;
    let bucket_of = |x: f64, y: f64| -> (usize, usize) {
        (((x / cell) as usize).min(dim - 1), ((y / cell) as usize).min(dim - 1))
    };
    let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); dim * dim];
    for n in dep.active_nodes() {
        let (bx, by) = bucket_of(n.x, n.y);
        buckets[by * dim + bx].push(n.id);
    }
    let mut adj = vec![Vec::new(); dep.all_nodes().len() + 1];
    for u in dep.active_nodes() {
        let ru = dep.range_of(u.id);
        let reach = (ru / cell).ceil() as isize;
        let (bx, by) = bucket_of(u.x, u.y);
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let (cx, cy) = (bx as isize + dx, by as isize + dy);
                if cx < 0 || cy < 0 || cx >= dim as isize || cy >= dim as isize {
                    continue;
                }
                for &v in &buckets[cy as usize * dim + cx as usize] {
                    if v <= u.id {
                        continue;
                    }
                    let r = ru.min(dep.range_of(v));
                    let vn = dep.node(v).expect("bucketed node exists");
                    let d2 = (u.x - vn.x).powi(2) + (u.y - vn.y).powi(2);
                    if d2 <= r * r {
                        adj[u.id.get() as usize].push(v);
                        adj[v.get() as usize].push(u.id);
                    }
                }
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    AdjacencyGraph { adj }
}

impl AdjacencyGraph {
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        self.adj.get(id.get() as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    /// Every edge once, in ascending `(low, high)` order.
    pub fn edges(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let u = NodeId(u as u64);
            list.iter().filter(move |&&v| v > u).map(move |&v| LinkId::new(u, v))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Mean degree over active nodes of `kind`; `None` if there are none.
    pub fn mean_degree(&self, dep: &Deployment, kind: NodeKind) -> Option<f64> {
        let (sum, n) = dep
            .active_nodes()
            .filter(|n| n.kind == kind)
            .fold((0usize, 0usize), |(s, c), n| (s + self.degree(n.id), c + 1));
        (n > 0).then(|| sum as f64 / n as f64)
    }

    /// Adds edges for a freshly placed node.
    pub fn insert_node(&mut self, dep: &Deployment, id: NodeId) {
        let idx = id.get() as usize;
        if self.adj.len() <= idx {
            self.adj.resize(idx + 1, Vec::new());
        }
        let Some(me) = dep.node(id).filter(|n| n.active) else { return };
        let ru = dep.range_of(id);
        for v in dep.active_nodes() {
            if v.id == id {
                continue;
            }
            let r = ru.min(dep.range_of(v.id));
            if (me.x - v.x).powi(2) + (me.y - v.y).powi(2) <= r * r {
                let list = &mut self.adj[v.id.get() as usize];
                if let Err(pos) = list.binary_search(&id) {
                    list.insert(pos, id);
                }
                let mine = &mut self.adj[idx];
                if let Err(pos) = mine.binary_search(&v.id) {
                    mine.insert(pos, v.id);
                }
            }
        }
    }

    pub fn remove_node(&mut self, id: NodeId) {
        let Some(list) = self.adj.get_mut(id.get() as usize) else { return };
        let peers = std::mem::take(list);
        for p in peers {
            let pl = &mut self.adj[p.get() as usize];
            if let Ok(pos) = pl.binary_search(&id) {
                pl.remove(pos);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_sensor(dist: f64) -> Deployment {
        let cfg = DeploymentConfig { sensors_per_group: 0, ..DeploymentConfig::desk_scale(0, 1) };
        let mut dep = Deployment { cfg, nodes: Vec::new(), heads: Vec::new(), base_station: (0.0, 0.0) };
        dep.push(NodeKind::RegularSensor, 0, 0, 10.0, 10.0, false);
        dep.push(NodeKind::RegularSensor, 0, 0, 10.0 + dist, 10.0, false);
        dep
    }

    #[test]
    fn range_boundary() {
        assert!(discover_neighbors(&two_sensor(29.0)).has_edge(NodeId(1), NodeId(2)));
        assert!(!discover_neighbors(&two_sensor(31.0)).has_edge(NodeId(1), NodeId(2)));
    }

    #[test]
    fn single_node_has_no_edges() {
        let mut dep = two_sensor(5.0);
        dep.deactivate(NodeId(2)).unwrap();
        assert_eq!(discover_neighbors(&dep).edge_count(), 0);
    }

    #[test]
    fn paper_field_has_100_groups() {
        let dep = deploy(&DeploymentConfig::paper_scale(5, 3)).unwrap();
        assert_eq!(dep.group_count(), 100);
        assert_eq!(dep.heads().len(), 100);
        assert_eq!(dep.config().cell_side(), 100.0);
    }

    #[test]
    fn sensors_stay_in_their_cell_without_misdeployment() {
        let dep = deploy(&DeploymentConfig::desk_scale(100, 5)).unwrap();
        for n in dep.sensors() {
            let (x0, y0, x1, y1) = dep.cell_bounds(n.group);
            assert!(!n.misdeployed && n.cell == n.group);
            assert!(n.x >= x0 && n.x < x1 && n.y >= y0 && n.y < y1);
        }
        for (g, &h) in dep.heads().iter().enumerate() {
            let n = dep.node(h).unwrap();
            let (x0, y0, x1, y1) = dep.cell_bounds(g);
            assert!((n.x - (x0 + x1) / 2.0).abs() <= 5.0 && (n.y - (y0 + y1) / 2.0).abs() <= 5.0);
        }
    }

    #[test]
    fn misdeployed_sensors_land_in_adjacent_cell() {
        let cfg = DeploymentConfig { misdeploy_fraction: 0.3, ..DeploymentConfig::desk_scale(100, 5) };
        let dep = deploy(&cfg).unwrap();
        let flagged: Vec<_> = dep.sensors().filter(|n| n.misdeployed).collect();
        assert!(flagged.len() > 200 && flagged.len() < 340, "{}", flagged.len());
        for n in flagged {
            assert!(dep.adjacent_cells(n.group).contains(&n.cell));
            assert_eq!(dep.cell_of_point(n.x, n.y), n.cell);
        }
    }

    #[test]
    fn deployment_is_deterministic() {
        let cfg = DeploymentConfig { misdeploy_fraction: 0.1, ..DeploymentConfig::desk_scale(50, 9) };
        assert_eq!(deploy(&cfg).unwrap(), deploy(&cfg).unwrap());
        let other = DeploymentConfig { seed: 10, ..cfg.clone() };
        assert_ne!(deploy(&cfg).unwrap(), deploy(&other).unwrap());
    }

    #[test]
    fn grid_index_matches_brute_force() {
        let dep = deploy(&DeploymentConfig { misdeploy_fraction: 0.05, ..DeploymentConfig::desk_scale(120, 2) }).unwrap();
        let g = discover_neighbors(&dep);
        let nodes: Vec<_> = dep.active_nodes().collect();
        let mut expected = 0;
        for (i, a) in nodes.iter().enumerate() {
            assert!(!g.has_edge(a.id, a.id));
            for b in &nodes[i + 1..] {
                let r = dep.range_of(a.id).min(dep.range_of(b.id));
                let close = dep.distance(a.id, b.id).unwrap() <= r;
                assert_eq!(g.has_edge(a.id, b.id), close);
                assert_eq!(g.has_edge(b.id, a.id), close);
                expected += close as usize;
            }
        }
        assert_eq!(g.edge_count(), expected);
        assert_eq!(g.edges().count(), expected);
    }

    #[test]
    fn incremental_insert_matches_rediscovery() {
        let mut dep = deploy(&DeploymentConfig::desk_scale(60, 4)).unwrap();
        let mut g = discover_neighbors(&dep);
        let mut rng = rng::stream(4, "add", 0);
        let id = dep.add_sensor(4, &mut rng).unwrap();
        g.insert_node(&dep, id);
        assert_eq!(g, discover_neighbors(&dep));
        let head = dep.head_of(4).unwrap();
        dep.deactivate(head).unwrap();
        g.remove_node(head);
        let mut fresh = discover_neighbors(&dep);
        fresh.adj.resize(g.adj.len(), Vec::new());
        assert_eq!(g, fresh);
    }

    #[test]
    fn x_coordinates_uniform_within_cell() {
        // Chi-square over 10 bins, 10^4 placements, 9 dof: 99.9% quantile 27.88.
        let cfg = DeploymentConfig { groups_per_side: 1, field_side: 100.0, ..DeploymentConfig::desk_scale(10_000, 8) };
        let dep = deploy(&cfg).unwrap();
        let mut bins = [0usize; 10];
        for n in dep.sensors() {
            bins[((n.x / 10.0) as usize).min(9)] += 1;
        }
        let chi2: f64 = bins.iter().map(|&o| (o as f64 - 1000.0).powi(2) / 1000.0).sum();
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn mean_degree_at_sparse_paper_density() {
        // 100 sensors per 100 m cell with 30 m range: expected interior
        // degree about pi * 0.09 * 100 ~ 28, well under the 100 bound.
        let dep = deploy(&DeploymentConfig::paper_scale(100, 6)).unwrap();
        let g = discover_neighbors(&dep);
        let d = g.mean_degree(&dep, NodeKind::RegularSensor).unwrap();
        assert!(d > 15.0 && d <= 110.0, "mean degree {d}");
    }

    #[test]
    fn invalid_config_names_field() {
        let cfg = DeploymentConfig { misdeploy_fraction: 1.5, ..DeploymentConfig::desk_scale(10, 1) };
        match deploy(&cfg) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.contains("misdeploy_fraction")),
            other => panic!("{other:?}"),
        }
    }
}
