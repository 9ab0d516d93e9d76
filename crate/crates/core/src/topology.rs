//! Static communication graphs.
//!
//! A topology is a connected undirected graph with distinct positive
//! identifiers on the nodes and, per node, a port numbering: a bijection
//! between its incident edges and `1..=degree`. Ports default to ascending
//! neighbour order and can be overridden, since the protocol must work
//! under any numbering.
//!
//! The text format is line oriented: a `n m` header, `n` lines of
//! `node-index identifier`, `m` lines of `u v` edges (0-based indices), and
//! an optional `ports` section of `node-index neighbour...` lines giving
//! the neighbours in port order. Blank lines and `#` comments are ignored.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::encoding::Identifier;
use crate::protocol::Port;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("a network needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("identifiers must be distinct: {0} appears twice")]
    DuplicateIdentifier(String),
    #[error("identifier must be a positive integer")]
    ZeroIdentifier,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    MultiEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("node index {0} out of range")]
    BadNodeIndex(usize),
    #[error("port list for node {0} is not a permutation of its neighbours")]
    BadPorts(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A validated connected graph with identifiers and port numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    ids: Vec<Identifier>,
    edges: Vec<(usize, usize)>,
    /// `neighbors[u][k]` is the node behind port `k + 1` of `u`.
    neighbors: Vec<Vec<usize>>,
    /// `reverse[u][k]` is the port index of `u` at `neighbors[u][k]`.
    reverse: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology with default ports (ascending neighbour order).
    pub fn new(ids: Vec<Identifier>, edges: Vec<(usize, usize)>) -> Result<Self, TopologyError> {
        Self::build(ids, edges, None)
    }

    /// Builds a topology with an explicit port numbering: for each node the
    /// list of its neighbours in port order.
    pub fn with_ports(
        ids: Vec<Identifier>,
        edges: Vec<(usize, usize)>,
        ports: Vec<Vec<usize>>,
    ) -> Result<Self, TopologyError> {
        Self::build(ids, edges, Some(ports))
    }

    fn build(
        ids: Vec<Identifier>,
        edges: Vec<(usize, usize)>,
        ports: Option<Vec<Vec<usize>>>,
    ) -> Result<Self, TopologyError> {
        let n = ids.len();
        if n < 2 {
            return Err(TopologyError::TooFewNodes(n));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.clone()) {
                return Err(TopologyError::DuplicateIdentifier(id.to_string()));
            }
        }

        let mut canonical: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        let mut edge_set = HashSet::new();
        for &(a, b) in &edges {
            if a >= n {
                return Err(TopologyError::BadNodeIndex(a));
            }
            if b >= n {
                return Err(TopologyError::BadNodeIndex(b));
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !edge_set.insert(e) {
                return Err(TopologyError::MultiEdge(e.0, e.1));
            }
            canonical.push(e);
        }
        canonical.sort_unstable();

        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in &canonical {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        if let Some(ports) = ports {
            if ports.len() != n {
                return Err(TopologyError::BadPorts(ports.len().min(n)));
            }
            for (u, order) in ports.iter().enumerate() {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != neighbors[u] {
                    return Err(TopologyError::BadPorts(u));
                }
            }
            neighbors = ports;
        }

        // Connectivity; every node has degree >= 1 as a byproduct.
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if visited.iter().any(|&v| !v) {
            return Err(TopologyError::Disconnected);
        }

        let reverse = (0..n)
            .map(|u| {
                neighbors[u]
                    .iter()
                    .map(|&v| neighbors[v].iter().position(|&w| w == u).unwrap())
                    .collect()
            })
            .collect();

        Ok(Topology {
            ids,
            edges: canonical,
            neighbors,
            reverse,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical undirected edge list, sorted, each as `(min, max)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn id(&self, node: usize) -> &Identifier {
        &self.ids[node]
    }

    pub fn ids(&self) -> &[Identifier] {
        &self.ids
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    /// Neighbours of `node` in port order: element `k` sits behind port `k+1`.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn neighbor_at(&self, node: usize, port: Port) -> usize {
        self.neighbors[node][port.index()]
    }

    /// The port of `node` at the far end of its port `port`, i.e. the port
    /// under which the neighbour sees `node`.
    pub fn reverse_port(&self, node: usize, port: Port) -> Port {
        Port::from_index(self.reverse[node][port.index()])
    }

    pub fn port_of(&self, node: usize, neighbor: usize) -> Option<Port> {
        self.neighbors[node]
            .iter()
            .position(|&v| v == neighbor)
            .map(Port::from_index)
    }

    /// Index of the node carrying the largest identifier.
    pub fn max_id_node(&self) -> usize {
        (0..self.ids.len())
            .max_by_key(|&u| &self.ids[u])
            .expect("non-empty")
    }

    fn bfs_distances(&self, from: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        let mut queue = VecDeque::from([from]);
        dist[from] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn distances_from(&self, node: usize) -> Vec<u32> {
        self.bfs_distances(node)
    }

    pub fn eccentricity(&self, node: usize) -> u32 {
        self.bfs_distances(node).into_iter().max().unwrap()
    }

    /// Exact diameter by breadth-first search from every node.
    pub fn diameter(&self) -> u32 {
        (0..self.node_count())
            .map(|u| self.eccentricity(u))
            .max()
            .unwrap()
    }

    /// Renders the text format; ports are always written out explicitly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.node_count(), self.edge_count()).unwrap();
        for (i, id) in self.ids.iter().enumerate() {
            writeln!(out, "{i} {id}").unwrap();
        }
        for &(a, b) in &self.edges {
            writeln!(out, "{a} {b}").unwrap();
        }
        writeln!(out, "ports").unwrap();
        for (i, list) in self.neighbors.iter().enumerate() {
            write!(out, "{i}").unwrap();
            for v in list {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let mut next = || lines.next();
        let (line_no, header) = next().ok_or(TopologyError::Parse {
            line: 0,
            message: "empty graph description".into(),
        })?;
        let (n, m) = parse_pair::<usize, usize>(header).ok_or_else(|| TopologyError::Parse {
            line: line_no,
            message: "expected header `n m`".into(),
        })?;

        let mut ids: Vec<Option<Identifier>> = vec![None; n];
        for _ in 0..n {
            let (line_no, line) = next().ok_or(TopologyError::Parse {
                line: 0,
                message: "unexpected end of node list".into(),
            })?;
            let mut parts = line.split_whitespace();
            let index: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| TopologyError::Parse {
                    line: line_no,
                    message: "expected `node-index identifier`".into(),
                })?;
            if index >= n {
                return Err(TopologyError::BadNodeIndex(index));
            }
            let id_text = parts.next().ok_or_else(|| TopologyError::Parse {
                line: line_no,
                message: "missing identifier".into(),
            })?;
            let id = Identifier::from_str(id_text).map_err(|_| {
                if id_text == "0" {
                    TopologyError::ZeroIdentifier
                } else {
                    TopologyError::Parse {
                        line: line_no,
                        message: format!("bad identifier {id_text:?}"),
                    }
                }
            })?;
            if ids[index].replace(id).is_some() {
                return Err(TopologyError::Parse {
                    line: line_no,
                    message: format!("node {index} listed twice"),
                });
            }
        }
        let ids: Vec<Identifier> = ids.into_iter().map(|id| id.unwrap()).collect();

        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (line_no, line) = next().ok_or(TopologyError::Parse {
                line: 0,
                message: "unexpected end of edge list".into(),
            })?;
            let (a, b) = parse_pair::<usize, usize>(line).ok_or_else(|| TopologyError::Parse {
                line: line_no,
                message: "expected edge `u v`".into(),
            })?;
            edges.push((a, b));
        }

        let mut ports = None;
        if let Some((line_no, line)) = next() {
            if line != "ports" {
                return Err(TopologyError::Parse {
                    line: line_no,
                    message: format!("expected `ports` section or end of file, got {line:?}"),
                });
            }
            let mut order: Vec<Option<Vec<usize>>> = vec![None; n];
            for _ in 0..n {
                let (line_no, line) = next().ok_or(TopologyError::Parse {
                    line: 0,
                    message: "unexpected end of ports section".into(),
                })?;
                let mut parts = line.split_whitespace().map(|t| t.parse::<usize>());
                let index = match parts.next() {
                    Some(Ok(i)) if i < n => i,
                    _ => {
                        return Err(TopologyError::Parse {
                            line: line_no,
                            message: "expected `node-index neighbour...`".into(),
                        })
                    }
                };
                let list: Result<Vec<usize>, _> = parts.collect();
                let list = list.map_err(|_| TopologyError::Parse {
                    line: line_no,
                    message: "bad neighbour index".into(),
                })?;
                if order[index].replace(list).is_some() {
                    return Err(TopologyError::Parse {
                        line: line_no,
                        message: format!("ports for node {index} listed twice"),
                    });
                }
            }
            ports = Some(order.into_iter().map(|o| o.unwrap()).collect());
        }

        if let Some((line_no, line)) = next() {
            return Err(TopologyError::Parse {
                line: line_no,
                message: format!("trailing content {line:?}"),
            });
        }

        Self::build(ids, edges, ports)
    }
}

fn parse_pair<A: FromStr, B: FromStr>(line: &str) -> Option<(A, B)> {
    let mut parts = line.split_whitespace();
    let a = parts.next()?.parse().ok()?;
    let b = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(values: &[u64]) -> Vec<Identifier> {
        values
            .iter()
            .map(|&v| Identifier::from_u64(v).unwrap())
            .collect()
    }

    #[test]
    fn smallest_legal_instance() {
        let t = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.diameter(), 1);
        assert_eq!(t.neighbors(0), &[1]);
        assert_eq!(t.reverse_port(0, Port::new(1).unwrap()), Port::new(1).unwrap());
    }

    #[test]
    fn five_cycle_diameter() {
        let t = Topology::new(
            ids(&[3, 1, 4, 5, 2]),
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
        )
        .unwrap();
        assert_eq!(t.diameter(), 2);
        assert_eq!(t.max_id_node(), 3);
    }

    #[test]
    fn load_errors_are_distinct() {
        assert_eq!(
            Topology::new(ids(&[7, 7, 2]), vec![(0, 1), (1, 2), (2, 0)]),
            Err(TopologyError::DuplicateIdentifier("7".into()))
        );
        assert_eq!(
            Topology::new(ids(&[1]), vec![]),
            Err(TopologyError::TooFewNodes(1))
        );
        assert_eq!(
            Topology::new(ids(&[1, 2]), vec![(0, 0), (0, 1)]),
            Err(TopologyError::SelfLoop(0))
        );
        assert_eq!(
            Topology::new(ids(&[1, 2]), vec![(0, 1), (1, 0)]),
            Err(TopologyError::MultiEdge(0, 1))
        );
        assert_eq!(
            Topology::new(ids(&[1, 2, 3]), vec![(0, 1)]),
            Err(TopologyError::Disconnected)
        );
        assert_eq!(
            Topology::parse("2 1\n0 1\n1 0\n0 1\n"),
            Err(TopologyError::ZeroIdentifier)
        );
    }

    #[test]
    fn parse_round_trip() {
        let t = Topology::new(
            ids(&[3, 1, 4, 5, 2]),
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
        )
        .unwrap();
        let text = t.to_text();
        let parsed = Topology::parse(&text).unwrap();
        assert_eq!(parsed, t);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn parse_minimal_format() {
        let t = Topology::parse("# a path\n2 1\n0 1\n1 2\n\n0 1\n").unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.id(1).to_string(), "2");
    }

    #[test]
    fn explicit_ports_override_order() {
        let text = "3 2\n0 5\n1 6\n2 7\n0 1\n1 2\nports\n0 1\n1 2 0\n2 1\n";
        let t = Topology::parse(text).unwrap();
        assert_eq!(t.neighbors(1), &[2, 0]);
        assert_eq!(t.neighbor_at(1, Port::new(1).unwrap()), 2);
        // Reverse ports stay consistent with the override.
        assert_eq!(t.reverse_port(0, Port::new(1).unwrap()), Port::new(2).unwrap());
    }

    #[test]
    fn bad_ports_rejected() {
        let text = "3 2\n0 5\n1 6\n2 7\n0 1\n1 2\nports\n0 1\n1 0 0\n2 1\n";
        assert_eq!(Topology::parse(text), Err(TopologyError::BadPorts(1)));
    }

    #[test]
    fn diameter_matches_floyd_warshall() {
        // Deterministic pseudo-random connected graph on 16 nodes.
        let mut edges = Vec::new();
        let mut x = 0x2545_f491_4f6c_dd1du64;
        let mut step = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            x
        };
        for a in 1..16usize {
            let b = (step() as usize) % a;
            edges.push((b, a)); // spanning tree keeps it connected
        }
        for a in 0..16usize {
            for b in (a + 1)..16 {
                if step() % 10 < 3 && !edges.contains(&(a, b)) {
                    edges.push((a, b));
                }
            }
        }
        let t = Topology::new(ids(&(1..=16).collect::<Vec<_>>()), edges.clone()).unwrap();

        let n = 16usize;
        let mut dist = vec![vec![u32::MAX / 2; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0;
        }
        for &(a, b) in t.edges() {
            dist[a][b] = 1;
            dist[b][a] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dist[i][j] = dist[i][j].min(dist[i][k] + dist[k][j]);
                }
            }
        }
        let fw = dist
            .iter()
            .flat_map(|row| row.iter().copied())
            .max()
            .unwrap();
        assert_eq!(t.diameter(), fw);
    }
}
