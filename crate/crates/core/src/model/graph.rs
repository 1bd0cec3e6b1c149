use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Region identifier. Nodes are numbered `1..=node_count`.
pub type NodeId = usize;

/// Plain description of a graph, the form used on disk and in snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub node_count: usize,
    pub edges: Vec<(NodeId, NodeId)>,
    pub facilities: Vec<NodeId>,
    #[serde(default = "default_minutes_per_hop")]
    pub minutes_per_hop: u32,
}

fn default_minutes_per_hop() -> u32 {
    10
}

/// Undirected region graph with precomputed hop distances and
/// shortest-path successors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpec", into = "GraphSpec")]
pub struct CityGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
    facilities: Vec<NodeId>,
    minutes_per_hop: u32,
    adjacency: Vec<Vec<NodeId>>,
    hops: Vec<u32>,
    next: Vec<NodeId>,
}

impl TryFrom<GraphSpec> for CityGraph {
    type Error = Error;

    fn try_from(spec: GraphSpec) -> Result<Self> {
        CityGraph::new(spec.node_count, spec.edges, spec.facilities, spec.minutes_per_hop)
    }
}

impl From<CityGraph> for GraphSpec {
    fn from(g: CityGraph) -> Self {
        GraphSpec {
            node_count: g.node_count,
            edges: g.edges,
            facilities: g.facilities,
            minutes_per_hop: g.minutes_per_hop,
        }
    }
}

impl CityGraph {
    pub fn new(
        node_count: usize,
        edges: Vec<(NodeId, NodeId)>,
        facilities: Vec<NodeId>,
        minutes_per_hop: u32,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Graph("graph has no nodes".into()));
        }
        if minutes_per_hop == 0 {
            return Err(Error::Graph("minutes_per_hop must be positive".into()));
        }
        let mut edges: Vec<(NodeId, NodeId)> =
            edges.into_iter().map(|(u, v)| if u <= v { (u, v) } else { (v, u) }).collect();
        edges.sort_unstable();
        edges.dedup();

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &edges {
            for w in [u, v] {
                if w == 0 || w > node_count {
                    return Err(Error::UnknownNode(w));
                }
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop at node {u}")));
            }
            adjacency[u - 1].push(v);
            adjacency[v - 1].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }

        let mut facilities = facilities;
        facilities.sort_unstable();
        facilities.dedup();
        if let Some(&bad) = facilities.iter().find(|&&s| s == 0 || s > node_count) {
            return Err(Error::UnknownNode(bad));
        }

        let n = node_count;
        let mut hops = vec![u32::MAX; n * n];
        for src in 0..n {
            hops[src * n + src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                let d = hops[src * n + u];
                for &v in &adjacency[u] {
                    let v = v - 1;
                    if hops[src * n + v] == u32::MAX {
                        hops[src * n + v] = d + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        if hops.contains(&u32::MAX) {
            return Err(Error::Graph("graph is not connected".into()));
        }

        // Successor on a shortest path: lowest-numbered neighbour one hop closer.
        let mut next = vec![0; n * n];
        for u in 0..n {
            for t in 0..n {
                next[u * n + t] = if u == t {
                    t + 1
                } else {
                    let d = hops[u * n + t];
                    *adjacency[u]
                        .iter()
                        .find(|&&w| hops[(w - 1) * n + t] + 1 == d)
                        .expect("BFS distances admit a successor")
                };
            }
        }

        Ok(CityGraph { node_count, edges, facilities, minutes_per_hop, adjacency, hops, next })
    }

    /// The nine-region lower-Manhattan abstraction: a 3x3 grid numbered row
    /// by row from the north-west corner, with six diagonals, 18 edges in
    /// total, and charging facilities at regions 3, 5, 8 and 9.
    pub fn default_manhattan() -> Self {
        let edges = vec![
            (1, 2),
            (2, 3),
            (4, 5),
            (5, 6),
            (7, 8),
            (8, 9),
            (1, 4),
            (4, 7),
            (2, 5),
            (5, 8),
            (3, 6),
            (6, 9),
            (1, 5),
            (2, 6),
            (4, 8),
            (5, 9),
            (2, 4),
            (6, 8),
        ];
        CityGraph::new(9, edges, vec![3, 5, 8, 9], 10).expect("default graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.node_count
    }

    pub fn contains(&self, v: NodeId) -> bool {
        (1..=self.node_count).contains(&v)
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn facilities(&self) -> &[NodeId] {
        &self.facilities
    }

    pub fn is_facility(&self, v: NodeId) -> bool {
        self.facilities.binary_search(&v).is_ok()
    }

    pub fn minutes_per_hop(&self) -> u32 {
        self.minutes_per_hop
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v - 1]
    }

    /// Minimum hop count between two nodes. Panics on unknown nodes.
    pub fn hops(&self, u: NodeId, v: NodeId) -> u32 {
        self.hops[(u - 1) * self.node_count + (v - 1)]
    }

    pub fn travel_minutes(&self, u: NodeId, v: NodeId) -> u32 {
        self.hops(u, v) * self.minutes_per_hop
    }

    pub fn next_hop(&self, from: NodeId, to: NodeId) -> NodeId {
        self.next[(from - 1) * self.node_count + (to - 1)]
    }

    /// Nodes visited going from `from` to `to`, excluding `from`.
    pub fn path(&self, from: NodeId, to: NodeId) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.hops(from, to) as usize);
        let mut at = from;
        while at != to {
            at = self.next_hop(at, to);
            out.push(at);
        }
        out
    }

    /// Nearest facility by hops; ties go to the lowest node id.
    pub fn nearest_facility(&self, from: NodeId) -> Option<NodeId> {
        self.facilities.iter().copied().min_by_key(|&s| (self.hops(from, s), s))
    }

    /// Parses the edge-list format: one `u v` pair per line, a
    /// `facilities: a b c` line, an optional `minutes_per_hop: k` line, and
    /// `#` comments. The node count is the largest id mentioned unless a
    /// `nodes: n` line is given.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut facilities = Vec::new();
        let mut minutes_per_hop = default_minutes_per_hop();
        let mut declared_nodes = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Graph(format!("line {}: {what}: {raw:?}", lineno + 1));
            if let Some((key, rest)) = line.split_once(':') {
                let values: Vec<usize> = rest
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| bad("expected integer")))
                    .collect::<Result<_>>()?;
                match key.trim() {
                    "facilities" => facilities.extend(values),
                    "minutes_per_hop" => minutes_per_hop = *values.first().ok_or_else(|| bad("missing value"))? as u32,
                    "nodes" => declared_nodes = Some(*values.first().ok_or_else(|| bad("missing value"))?),
                    _ => return Err(bad("unknown key")),
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(bad("expected `u v`"));
            }
            let u: NodeId = parts[0].parse().map_err(|_| bad("expected integer"))?;
            let v: NodeId = parts[1].parse().map_err(|_| bad("expected integer"))?;
            edges.push((u, v));
        }
        let max_id = edges.iter().flat_map(|&(u, v)| [u, v]).chain(facilities.iter().copied()).max().unwrap_or(0);
        let node_count = declared_nodes.unwrap_or(max_id);
        CityGraph::new(node_count, edges, facilities, minutes_per_hop)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
        Self::parse_edge_list(&text).map_err(|e| Error::load(path, e.to_string()))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes: {}", self.node_count);
        let _ = writeln!(out, "minutes_per_hop: {}", self.minutes_per_hop);
        let fac: Vec<String> = self.facilities.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "facilities: {}", fac.join(" "));
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_graph_shape() {
        let g = CityGraph::default_manhattan();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.edges().len(), 18);
        assert_eq!(g.facilities(), &[3, 5, 8, 9]);
        assert_eq!(g.minutes_per_hop(), 10);
    }

    #[test]
    fn hop_matrix_is_a_metric() {
        let g = CityGraph::default_manhattan();
        for u in g.nodes() {
            assert_eq!(g.hops(u, u), 0);
            for v in g.nodes() {
                assert_eq!(g.hops(u, v), g.hops(v, u));
                for w in g.nodes() {
                    assert!(g.hops(u, w) <= g.hops(u, v) + g.hops(v, w));
                }
            }
        }
    }

    #[test]
    fn paths_follow_edges_and_have_hop_length() {
        let g = CityGraph::default_manhattan();
        for u in g.nodes() {
            for v in g.nodes() {
                let p = g.path(u, v);
                assert_eq!(p.len() as u32, g.hops(u, v));
                let mut at = u;
                for &n in &p {
                    assert!(g.neighbors(at).contains(&n));
                    at = n;
                }
                assert_eq!(at, v);
            }
        }
        assert_eq!(g.path(1, 7), vec![4, 7]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = CityGraph::default_manhattan();
        let back = CityGraph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn rejects_disconnected_and_bad_nodes() {
        assert!(matches!(CityGraph::parse_edge_list("1 2\n3 4\nfacilities: 1"), Err(Error::Graph(_))));
        assert!(matches!(CityGraph::new(3, vec![(1, 2), (2, 5)], vec![], 10), Err(Error::UnknownNode(5))));
        assert!(matches!(CityGraph::new(2, vec![(1, 2)], vec![7], 10), Err(Error::UnknownNode(7))));
    }

    #[test]
    fn nearest_facility_breaks_ties_by_id() {
        let g = CityGraph::default_manhattan();
        // Node 1 is one hop from 5 and two from 3, 8 and 9.
        assert_eq!(g.nearest_facility(1), Some(5));
        assert_eq!(g.nearest_facility(9), Some(9));
        // Node 7 neighbours 4 and 8.
        assert_eq!(g.nearest_facility(7), Some(8));
    }
}
