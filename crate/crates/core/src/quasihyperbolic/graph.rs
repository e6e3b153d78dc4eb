use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};

pub type NodeId = u64;

const SOURCE: NodeId = u64::MAX - 1;
const TARGET: NodeId = u64::MAX;

/// Implicit 8-neighbour lattice over the bounding box of a domain. A lattice
/// point is a node when `d(x) >= h/2`; diagonal edges additionally need an
/// interior midpoint. Edge weight is `|a - b| (1/d(a) + 1/d(b)) / 2`.
pub struct QhGraph<'a> {
    domain: &'a Domain,
    origin: Point,
    h: f64,
    nx: i64,
    ny: i64,
}

pub(crate) fn edge_weight(a: Point, da: f64, b: Point, db: f64) -> f64 {
    a.dist(b) * 0.5 * (1.0 / da + 1.0 / db)
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, NodeId);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

#[derive(Clone, Copy)]
struct NodeState {
    d: f64,
    g: f64,
    parent: NodeId,
    settled: bool,
}

/// A discrete geodesic: its vertices, per-edge weights and total length.
#[derive(Clone, Debug)]
pub struct Geodesic {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub length: f64,
}

impl<'a> QhGraph<'a> {
    pub fn new(domain: &'a Domain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Invalid(format!("h_grid must be positive, got {h}")));
        }
        let b = domain.bbox();
        let nx = (b.width() / h).floor() as i64 + 1;
        let ny = (b.height() / h).floor() as i64 + 1;
        Ok(Self { domain, origin: b.min, h, nx, ny })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> &Domain {
        self.domain
    }

    fn coords(&self, id: NodeId) -> (i64, i64) {
        ((id % self.nx as u64) as i64, (id / self.nx as u64) as i64)
    }

    fn id(&self, i: i64, j: i64) -> Option<NodeId> {
        (i >= 0 && j >= 0 && i < self.nx && j < self.ny).then(|| (j * self.nx + i) as NodeId)
    }

    pub fn node_point(&self, id: NodeId) -> Point {
        let (i, j) = self.coords(id);
        Point::new(self.origin.x + i as f64 * self.h, self.origin.y + j as f64 * self.h)
    }

    fn is_node(&self, d: f64) -> bool {
        d >= 0.5 * self.h && d > 0.0
    }

    /// Valid lattice corners of the cell containing `p`, with connecting weights.
    fn attach(&self, p: Point, dp: f64) -> Vec<(NodeId, f64)> {
        let fi = ((p.x - self.origin.x) / self.h).floor() as i64;
        let fj = ((p.y - self.origin.y) / self.h).floor() as i64;
        let mut out = Vec::with_capacity(4);
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            if let Some(id) = self.id(fi + di, fj + dj) {
                let c = self.node_point(id);
                let dc = self.domain.dist_to_boundary(c);
                if self.is_node(dc) && self.domain.dist_to_boundary(p.midpoint(c)) > 0.0 {
                    out.push((id, edge_weight(p, dp, c, dc)));
                }
            }
        }
        out
    }

    fn endpoint(&self, p: Point, what: &str) -> Result<f64> {
        let d = self.domain.dist_to_boundary(p);
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::Invalid(format!("{what} ({}, {}) is not an interior point", p.x, p.y)))
        }
    }

    /// Shortest path from `x` to `y`. The search always runs from the
    /// lexicographically smaller endpoint, so `length` is symmetric bit for bit;
    /// it equals the in-order sum of `weights` taken in that orientation.
    pub fn geodesic(&self, x: Point, y: Point) -> Result<Geodesic> {
        if (y.x, y.y) < (x.x, x.y) {
            let mut g = self.geodesic_directed(y, x)?;
            g.points.reverse();
            g.weights.reverse();
            return Ok(g);
        }
        self.geodesic_directed(x, y)
    }

    pub fn distance(&self, x: Point, y: Point) -> Result<f64> {
        Ok(self.geodesic(x, y)?.length)
    }

    fn geodesic_directed(&self, x: Point, y: Point) -> Result<Geodesic> {
        if x == y {
            self.endpoint(x, "x")?;
            return Ok(Geodesic { points: vec![x], weights: vec![], length: 0.0 });
        }
        let dx = self.endpoint(x, "x")?;
        let dy = self.endpoint(y, "y")?;
        let sources = self.attach(x, dx);
        let targets: FxHashMap<NodeId, f64> = self.attach(y, dy).into_iter().collect();
        let mut search = Search::new(self);
        let same_cell = ((x.x - self.origin.x) / self.h).floor() == ((y.x - self.origin.x) / self.h).floor()
            && ((x.y - self.origin.y) / self.h).floor() == ((y.y - self.origin.y) / self.h).floor();
        if same_cell && self.domain.dist_to_boundary(x.midpoint(y)) > 0.0 {
            search.relax(TARGET, f64::NAN, SOURCE, edge_weight(x, dx, y, dy));
        }
        search.seed(&sources);
        search.run(Some(&targets));
        let g = search.state.get(&TARGET).map(|s| s.g);
        if g.is_none() {
            return Err(Error::Disconnected(format!(
                "no path between ({}, {}) and ({}, {}) at h_grid = {}; try a finer h_grid",
                x.x, x.y, y.x, y.y, self.h
            )));
        }
        let ids = search.path_ids(TARGET);
        Ok(self.assemble(&ids, x, dx, y, dy))
    }

    fn assemble(&self, ids: &[NodeId], x: Point, dx: f64, y: Point, dy: f64) -> Geodesic {
        let mut points = Vec::with_capacity(ids.len());
        let mut dists = Vec::with_capacity(ids.len());
        for &id in ids {
            match id {
                SOURCE => {
                    points.push(x);
                    dists.push(dx);
                }
                TARGET => {
                    points.push(y);
                    dists.push(dy);
                }
                _ => {
                    let p = self.node_point(id);
                    points.push(p);
                    dists.push(self.domain.dist_to_boundary(p));
                }
            }
        }
        let mut weights = Vec::with_capacity(points.len().saturating_sub(1));
        let mut length = 0.0;
        for k in 1..points.len() {
            let w = edge_weight(points[k - 1], dists[k - 1], points[k], dists[k]);
            weights.push(w);
            length += w;
        }
        Geodesic { points, weights, length }
    }

    /// Full shortest-path tree from `x`.
    pub fn tree(&self, x: Point) -> Result<QhTree<'_, 'a>> {
        let dx = self.endpoint(x, "source")?;
        let mut search = Search::new(self);
        search.seed(&self.attach(x, dx));
        search.run(None);
        Ok(QhTree { graph: self, source: x, source_dist: dx, state: search.state })
    }
}

struct Search<'g, 'a> {
    graph: &'g QhGraph<'a>,
    state: FxHashMap<NodeId, NodeState>,
    heap: BinaryHeap<Reverse<Key>>,
}

impl<'g, 'a> Search<'g, 'a> {
    fn new(graph: &'g QhGraph<'a>) -> Self {
        Self { graph, state: FxHashMap::default(), heap: BinaryHeap::new() }
    }

    fn node_dist(&mut self, id: NodeId) -> f64 {
        if let Some(s) = self.state.get(&id) {
            return s.d;
        }
        let d = self.graph.domain.dist_to_boundary(self.graph.node_point(id));
        self.state.insert(id, NodeState { d, g: f64::INFINITY, parent: SOURCE, settled: false });
        d
    }

    fn relax(&mut self, id: NodeId, d: f64, parent: NodeId, g: f64) {
        let entry = self
            .state
            .entry(id)
            .or_insert(NodeState { d, g: f64::INFINITY, parent: SOURCE, settled: false });
        if !entry.settled && g < entry.g {
            entry.g = g;
            entry.parent = parent;
            self.heap.push(Reverse(Key(g, id)));
        }
    }

    fn seed(&mut self, sources: &[(NodeId, f64)]) {
        for &(id, w) in sources {
            let d = self.node_dist(id);
            self.relax(id, d, SOURCE, w);
        }
    }

    fn run(&mut self, targets: Option<&FxHashMap<NodeId, f64>>) {
        while let Some(Reverse(Key(g, u))) = self.heap.pop() {
            let st = self.state[&u];
            if st.settled || g > st.g {
                continue;
            }
            self.state.get_mut(&u).unwrap().settled = true;
            if u == TARGET {
                return;
            }
            if let Some(t) = targets {
                if let Some(&w) = t.get(&u) {
                    self.relax(TARGET, f64::NAN, u, g + w);
                }
            }
            let (i, j) = self.graph.coords(u);
            let pu = self.graph.node_point(u);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)] {
                let Some(v) = self.graph.id(i + di, j + dj) else { continue };
                let dv = self.node_dist(v);
                if !self.graph.is_node(dv) || self.state[&v].settled {
                    continue;
                }
                let pv = self.graph.node_point(v);
                if di != 0 && dj != 0 && self.graph.domain.dist_to_boundary(pu.midpoint(pv)) <= 0.0 {
                    continue;
                }
                let w = edge_weight(pu, st.d, pv, dv);
                self.relax(v, dv, u, g + w);
            }
        }
    }

    fn path_ids(&self, end: NodeId) -> Vec<NodeId> {
        let mut ids = vec![end];
        let mut cur = end;
        while cur != SOURCE {
            cur = self.state[&cur].parent;
            ids.push(cur);
        }
        ids.reverse();
        ids
    }
}

/// Single-source shortest-path tree over the whole lattice component.
pub struct QhTree<'g, 'a> {
    graph: &'g QhGraph<'a>,
    source: Point,
    source_dist: f64,
    state: FxHashMap<NodeId, NodeState>,
}

impl<'g, 'a> QhTree<'g, 'a> {
    /// Settled lattice nodes in increasing id order, with `(point, d, k)`.
    pub fn settled(&self) -> Vec<(Point, f64, f64)> {
        let mut ids: Vec<NodeId> = self
            .state
            .iter()
            .filter(|(id, s)| s.settled && **id < SOURCE)
            .map(|(id, _)| *id)
            .collect();
        ids.sort_unstable();
        ids.into_iter()
            .map(|id| {
                let s = &self.state[&id];
                (self.graph.node_point(id), s.d, s.g)
            })
            .collect()
    }

    fn best_corner(&self, y: Point) -> Result<(NodeId, f64, f64)> {
        let dy = self.graph.endpoint(y, "target")?;
        let mut best: Option<(NodeId, f64)> = None;
        for (id, w) in self.graph.attach(y, dy) {
            if let Some(s) = self.state.get(&id).filter(|s| s.settled) {
                let g = s.g + w;
                if best.map_or(true, |(_, b)| g < b) {
                    best = Some((id, g));
                }
            }
        }
        let (id, g) = best.ok_or_else(|| {
            Error::Disconnected(format!(
                "({}, {}) is not reachable at h_grid = {}; try a finer h_grid",
                y.x, y.y, self.graph.h
            ))
        })?;
        Ok((id, g, dy))
    }

    pub fn distance(&self, y: Point) -> Result<f64> {
        if y == self.source {
            return Ok(0.0);
        }
        Ok(self.best_corner(y)?.1)
    }

    /// Vertices of the tree path from the source to `y`, without weights.
    pub fn path_points(&self, y: Point) -> Result<Vec<Point>> {
        if y == self.source {
            return Ok(vec![y]);
        }
        let (corner, _, _) = self.best_corner(y)?;
        let mut points = vec![y];
        let mut cur = corner;
        while cur != SOURCE {
            points.push(self.graph.node_point(cur));
            cur = self.state[&cur].parent;
        }
        points.push(self.source);
        points.reverse();
        Ok(points)
    }

    pub fn geodesic(&self, y: Point) -> Result<Geodesic> {
        if y == self.source {
            return Ok(Geodesic { points: vec![y], weights: vec![], length: 0.0 });
        }
        let (corner, _, dy) = self.best_corner(y)?;
        let mut ids = vec![TARGET, corner];
        let mut cur = corner;
        while cur != SOURCE {
            cur = self.state[&cur].parent;
            ids.push(cur);
        }
        ids.reverse();
        Ok(self.graph.assemble(&ids, self.source, self.source_dist, y, dy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_point_is_zero() {
        let d = Domain::unit_square();
        let g = QhGraph::new(&d, 1.0 / 32.0).unwrap();
        let p = Point::new(0.3, 0.4);
        let geo = g.geodesic(p, p).unwrap();
        assert_eq!(geo.length, 0.0);
        assert_eq!(geo.points.len(), 1);
    }

    #[test]
    fn path_weights_sum_exactly() {
        let d = Domain::unit_square();
        let g = QhGraph::new(&d, 1.0 / 64.0).unwrap();
        let geo = g.geodesic(Point::new(0.1, 0.83), Point::new(0.5, 0.5)).unwrap();
        let mut s = 0.0;
        for w in &geo.weights {
            s += w;
        }
        assert_eq!(s, geo.length);
    }

    #[test]
    fn symmetric() {
        let d = Domain::unit_disk();
        let g = QhGraph::new(&d, 1.0 / 64.0).unwrap();
        let (a, b) = (Point::new(0.1, -0.2), Point::new(-0.6, 0.5));
        assert_eq!(g.distance(a, b).unwrap(), g.distance(b, a).unwrap());
    }

    #[test]
    fn tree_agrees_with_point_query() {
        let d = Domain::unit_square();
        let g = QhGraph::new(&d, 1.0 / 64.0).unwrap();
        let x0 = d.x0();
        let tree = g.tree(x0).unwrap();
        let y = Point::new(0.2, 0.1);
        let a = tree.distance(y).unwrap();
        let b = g.geodesic(x0, y).unwrap().length;
        assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
    }
}
