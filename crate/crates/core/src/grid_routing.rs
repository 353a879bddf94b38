//! Line-of-sight routing on a square grid and the resulting aggregation tree.
//!
//! Nodes sit on the integer lattice with the sink at the origin. A source `u`
//! forwards along the nodes whose unit Voronoi squares the segment `u -> O`
//! crosses. When the segment passes exactly through a cell corner the tie is
//! broken as if the segment were rotated counterclockwise by an infinitesimal
//! angle about the sink, which is what the integer walk below reproduces.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub x: i64,
    pub y: i64,
}

impl Node {
    pub const SINK: Node = Node { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> i64 {
        self.x * self.x + self.y * self.y
    }

    pub fn manhattan(self, other: Node) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    /// Quarter turn counterclockwise about the sink.
    pub fn rotate(self) -> Node {
        Node::new(-self.y, self.x)
    }
}

/// `side x side` unit grid centered on the sink; `side` is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridNetwork {
    side: usize,
}

impl GridNetwork {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(invalid("side", "grid needs at least one node"));
        }
        if side.is_multiple_of(2) {
            return Err(Error::EvenSide(side));
        }
        Ok(Self { side })
    }

    /// Grid with `n` nodes; `n` must be the square of an odd integer.
    pub fn from_node_count(n: usize) -> Result<Self> {
        let side = (n as f64).sqrt().round() as usize;
        if side * side != n {
            return Err(invalid("n", format!("{n} is not a perfect square")));
        }
        Self::new(side)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn half(&self) -> i64 {
        (self.side as i64 - 1) / 2
    }

    pub fn node_count(&self) -> usize {
        self.side * self.side
    }

    pub fn contains(&self, u: Node) -> bool {
        u.x.abs() <= self.half() && u.y.abs() <= self.half()
    }

    /// Row-major index, rows ordered by `y` then `x`, both ascending.
    pub fn index(&self, u: Node) -> Option<usize> {
        if !self.contains(u) {
            return None;
        }
        let h = self.half();
        Some(((u.y + h) as usize) * self.side + (u.x + h) as usize)
    }

    pub fn node_at(&self, index: usize) -> Node {
        let h = self.half();
        Node::new((index % self.side) as i64 - h, (index / self.side) as i64 - h)
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.node_count()).map(move |i| self.node_at(i))
    }

    fn check(&self, u: Node) -> Result<usize> {
        self.index(u).ok_or(Error::OutsideGrid {
            x: u.x,
            y: u.y,
            side: self.side,
        })
    }
}

/// Next hop from cell `c` on the segment from `u` to the sink.
fn next_hop(c: Node, u: Node) -> Node {
    let step_x = Node::new(c.x - c.x.signum(), c.y);
    let step_y = Node::new(c.x, c.y - c.y.signum());
    // The segment leaves the x-face of `c` at t = (|cx| - 1/2)/|x| and the
    // y-face at t = (|cy| - 1/2)/|y|; the larger exit time comes first.
    let exit_x = (2 * c.x.abs() - 1) as i128 * u.y.abs() as i128;
    let exit_y = (2 * c.y.abs() - 1) as i128 * u.x.abs() as i128;
    match exit_x.cmp(&exit_y) {
        std::cmp::Ordering::Greater => step_x,
        std::cmp::Ordering::Less => step_y,
        std::cmp::Ordering::Equal => {
            if u.x * u.y > 0 {
                step_x
            } else {
                step_y
            }
        }
    }
}

/// Nodes visited from `u` to the sink, both included.
pub fn route(u: Node, net: &GridNetwork) -> Result<Vec<Node>> {
    net.check(u)?;
    if u == Node::SINK {
        return Err(invalid("u", "the sink does not route"));
    }
    let mut path = Vec::with_capacity((u.x.abs() + u.y.abs() + 1) as usize);
    let mut c = u;
    path.push(c);
    while c != Node::SINK {
        c = next_hop(c, u);
        path.push(c);
    }
    Ok(path)
}

/// Per-node traffic in units of the per-node rate: the number of sources
/// whose route passes through the node, the node itself included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficMap {
    net: GridNetwork,
    load: Vec<u64>,
}

impl TrafficMap {
    pub fn network(&self) -> &GridNetwork {
        &self.net
    }

    pub fn load(&self, u: Node) -> Option<u64> {
        self.net.index(u).map(|i| self.load[i])
    }

    pub fn loads(&self) -> &[u64] {
        &self.load
    }

    /// Total traffic delivered to the sink by its four neighbors.
    pub fn sink_inflow(&self) -> u64 {
        [Node::new(1, 0), Node::new(-1, 0), Node::new(0, 1), Node::new(0, -1)]
            .into_iter()
            .filter_map(|u| self.load(u))
            .sum()
    }

    /// Largest load over non-sink nodes.
    pub fn max_load(&self) -> u64 {
        let sink = self.net.index(Node::SINK).expect("sink is on every grid");
        self.load
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != sink)
            .map(|(_, &l)| l)
            .max()
            .unwrap_or(0)
    }
}

/// Parent pointers from each node's first hop plus the induced traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationTree {
    net: GridNetwork,
    parent: Vec<Option<usize>>,
    subtree: Vec<u64>,
    pub traffic: TrafficMap,
}

impl AggregationTree {
    pub fn network(&self) -> &GridNetwork {
        &self.net
    }

    pub fn parent(&self, u: Node) -> Option<Node> {
        let i = self.net.index(u)?;
        self.parent[i].map(|p| self.net.node_at(p))
    }

    /// Number of nodes in the parent-pointer subtree rooted at `u`.
    pub fn subtree_size(&self, u: Node) -> Option<u64> {
        self.net.index(u).map(|i| self.subtree[i])
    }

    /// `(child, parent)` pairs in node index order.
    pub fn edges(&self) -> Vec<(Node, Node)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (self.net.node_at(i), self.net.node_at(p))))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }
}

/// Routes every node and accumulates traffic. Routes are independent and
/// loads are integer sums, so the result does not depend on scheduling.
pub fn build_tree(net: &GridNetwork) -> AggregationTree {
    let n = net.node_count();
    let sink = net.index(Node::SINK).expect("sink is on every grid");
    let (parent, load) = (0..n)
        .into_par_iter()
        .filter(|&i| i != sink)
        .fold(
            || (Vec::new(), vec![0u64; n]),
            |(mut edges, mut load), i| {
                let path = route(net.node_at(i), net).expect("grid node routes");
                edges.push((i, net.index(path[1]).expect("route stays on grid")));
                for v in &path[..path.len() - 1] {
                    load[net.index(*v).expect("route stays on grid")] += 1;
                }
                (edges, load)
            },
        )
        .reduce(
            || (Vec::new(), vec![0u64; n]),
            |(mut ea, mut la), (eb, lb)| {
                ea.extend(eb);
                for (a, b) in la.iter_mut().zip(lb) {
                    *a += b;
                }
                (ea, la)
            },
        );
    let mut parents = vec![None; n];
    for (child, p) in parent {
        parents[child] = Some(p);
    }
    let mut load = load;
    load[sink] = n as u64;

    // Parents are strictly closer to the sink, so farthest-first order is topological.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(net.node_at(i).norm_sq()));
    let mut subtree = vec![1u64; n];
    for i in order {
        if let Some(p) = parents[i] {
            subtree[p] += subtree[i];
        }
    }
    AggregationTree {
        net: *net,
        parent: parents,
        subtree,
        traffic: TrafficMap { net: *net, load },
    }
}

/// `(floor(n/rho * sqrt2/4), ceil(n/rho))` with `rho` the distance to the sink.
pub fn traffic_bounds(n: usize, u: Node) -> (u64, u64) {
    let rho = (u.norm_sq() as f64).sqrt();
    let scaled = n as f64 / rho;
    let lower = (scaled * std::f64::consts::SQRT_2 / 4.0).floor() as u64;
    let upper = scaled.ceil() as u64;
    (lower, upper)
}

/// Default certification annulus `25 <= x^2 + y^2 <= n/25`.
pub fn default_annulus(n: usize) -> (u64, u64) {
    (25, n as u64 / 25)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRow {
    pub node: Node,
    pub load: u64,
    pub lower: u64,
    pub upper: u64,
    /// `lower < load < upper`.
    pub ok: bool,
    /// Inside the certification annulus.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficBoundReport {
    /// Every non-sink node in index order.
    pub rows: Vec<BoundRow>,
    /// Certified nodes whose load falls outside the bounds.
    pub violations: Vec<BoundRow>,
    pub certified_count: usize,
    /// Range of `load * rho / n` over the certified nodes.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub regime_warning: Option<String>,
}

impl TrafficBoundReport {
    pub fn lower_violations(&self) -> usize {
        self.violations.iter().filter(|r| r.load <= r.lower).count()
    }

    pub fn upper_violations(&self) -> usize {
        self.violations.iter().filter(|r| r.load >= r.upper).count()
    }
}

pub fn check_traffic_bounds(traffic: &TrafficMap, annulus: (u64, u64)) -> TrafficBoundReport {
    let net = traffic.network();
    let n = net.node_count();
    let (lo, hi) = annulus;
    let regime_warning = (lo < 25 || hi > n as u64 / 25).then(|| {
        format!(
            "annulus [{lo}, {hi}] leaves the asymptotic regime [25, {}]",
            n as u64 / 25
        )
    });
    let mut rows = Vec::with_capacity(n.saturating_sub(1));
    let mut violations = Vec::new();
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut certified_count = 0;
    for u in net.nodes().filter(|&u| u != Node::SINK) {
        let load = traffic.load(u).expect("node is on the grid");
        let (lower, upper) = traffic_bounds(n, u);
        let r2 = u.norm_sq() as u64;
        let row = BoundRow {
            node: u,
            load,
            lower,
            upper,
            ok: lower < load && load < upper,
            certified: lo <= r2 && r2 <= hi,
        };
        if row.certified {
            certified_count += 1;
            let ratio = load as f64 * (r2 as f64).sqrt() / n as f64;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            if !row.ok {
                violations.push(row);
            }
        }
        rows.push(row);
    }
    TrafficBoundReport {
        rows,
        violations,
        certified_count,
        min_ratio,
        max_ratio,
        regime_warning,
    }
}
