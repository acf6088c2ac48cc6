//! Undirected graph in compressed sparse row form.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Node identifier: a dense index in `0..n_nodes`.
pub type NodeId = usize;

/// Undirected simple graph stored as CSR adjacency.
///
/// Edges are symmetrized and deduplicated on construction; self-loops are
/// dropped. Neighbor lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
}

impl Graph {
    /// Builds a graph from an edge list over `n_nodes` nodes.
    ///
    /// Endpoints must be `< n_nodes`. Both orientations of each edge are
    /// inserted, duplicates are merged, and self-loops are removed.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Graph> {
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n_nodes];
        for (u, v) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for {n_nodes} node(s)"
                )));
            }
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(list);
            offsets.push(neighbors.len());
        }
        Ok(Graph { offsets, neighbors })
    }

    /// Loads a tab-separated edge list.
    ///
    /// Each line is `src<TAB>dst`. An optional first line `n=<N>` declares the
    /// node count, which allows trailing isolated nodes; otherwise the node
    /// count is one past the highest id seen. Blank lines are skipped. A file
    /// with no header and no edges is an error.
    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);

        let mut declared: Option<usize> = None;
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        let mut max_id: Option<usize> = None;

        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            if idx == 0 {
                if let Some(rest) = line.strip_prefix("n=") {
                    let n = rest.trim().parse::<usize>().map_err(|_| {
                        Error::parse(path, lineno, format!("invalid node count {rest:?}"))
                    })?;
                    declared = Some(n);
                    continue;
                }
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| {
                Error::parse(path, lineno, format!("expected src<TAB>dst, got {line:?}"))
            })?;
            let u = src
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, lineno, format!("invalid node id {src:?}")))?;
            let v = dst
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, lineno, format!("invalid node id {dst:?}")))?;
            if let Some(n) = declared {
                if u >= n || v >= n {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("node id {} >= declared count {n}", u.max(v)),
                    ));
                }
            }
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
            edges.push((u, v));
        }

        let n_nodes = match declared {
            Some(n) => n,
            None => match max_id {
                Some(m) => m + 1,
                None => return Err(Error::parse(path, 1, "empty edge list".to_string())),
            },
        };
        Graph::from_edges(n_nodes, edges)
    }

    /// Writes the graph as a tab-separated edge list with an `n=<N>` header.
    ///
    /// Each undirected edge appears once as `u<TAB>v` with `u < v`, sorted.
    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        out.push_str(&format!("n={}\n", self.n_nodes()));
        for u in 0..self.n_nodes() {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push_str(&format!("{u}\t{v}\n"));
                }
            }
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// BFS distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_nodes()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Minimum BFS distance from any of `sources`; `None` for unreachable.
    pub fn multi_source_distances(&self, sources: &[NodeId]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_nodes()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
