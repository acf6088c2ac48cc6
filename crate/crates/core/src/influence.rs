//! Influence-guided node scoring over shortest-path structure.
//!
//! The influence of a labeled source on a candidate node after `h` rounds of
//! degree-normalized propagation, where `h` is their shortest-path distance,
//! is upper-bounded by `|P| / min_degprod`: the number of shortest paths
//! divided by the smallest product of degrees along any one shortest path
//! (degrees of every node on the path except the source). The bound is exact
//! on trees. Scores are kept in log space so large path counts cannot
//! overflow.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Shortest-path statistics for one node relative to a fixed source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProfile {
    /// Shortest-path distance from the source; `None` if unreachable.
    pub dist: Option<usize>,
    /// Natural log of the number of shortest paths from the source.
    pub log_path_count: f64,
    /// Log of the minimum degree product over shortest paths, counting every
    /// path node except the source.
    pub min_log_degprod: f64,
}

impl PathProfile {
    const UNREACHED: PathProfile = PathProfile {
        dist: None,
        log_path_count: f64::NEG_INFINITY,
        min_log_degprod: f64::INFINITY,
    };

    /// Log influence bound of the source on this node; `-inf` if unreachable.
    pub fn log_bound(&self) -> f64 {
        if self.dist.is_none() {
            f64::NEG_INFINITY
        } else {
            self.log_path_count - self.min_log_degprod
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Single BFS from `source` accumulating path counts and minimum degree
/// products over the shortest-path DAG.
///
/// The source profile is distance 0 with one empty path and an empty degree
/// product. A node is finalized once every predecessor one level closer has
/// been processed, which FIFO order guarantees.
pub fn shortest_path_profile(graph: &Graph, source: NodeId) -> Vec<PathProfile> {
    let n = graph.n_nodes();
    let mut prof = vec![PathProfile::UNREACHED; n];
    prof[source] = PathProfile {
        dist: Some(0),
        log_path_count: 0.0,
        min_log_degprod: 0.0,
    };
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = prof[u].dist.expect("queued nodes have distances");
        let lpc_u = prof[u].log_path_count;
        let mld_u = prof[u].min_log_degprod;
        for &v in graph.neighbors(u) {
            let step = (graph.degree(v) as f64).ln();
            match prof[v].dist {
                None => {
                    prof[v] = PathProfile {
                        dist: Some(du + 1),
                        log_path_count: lpc_u,
                        min_log_degprod: mld_u + step,
                    };
                    queue.push_back(v);
                }
                Some(dv) if dv == du + 1 => {
                    prof[v].log_path_count = log_add_exp(prof[v].log_path_count, lpc_u);
                    prof[v].min_log_degprod = prof[v].min_log_degprod.min(mld_u + step);
                }
                _ => {}
            }
        }
    }
    prof
}

/// Influence score of one candidate: the best source bound in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub node: NodeId,
    /// Log of the maximum influence bound over all sources; `-inf` when the
    /// candidate is unreachable from every source.
    pub log_score: f64,
    pub best_source: Option<NodeId>,
    /// Distance to the best source.
    pub dist: Option<usize>,
}

/// Per-candidate influence scores, in the caller's candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub entries: Vec<ScoreEntry>,
}

impl ScoreTable {
    /// Renders `node_id,log_score,best_source,dist` rows. Unreachable nodes
    /// get `-inf` and empty source/dist fields.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("node_id,log_score,best_source,dist\n");
        for e in &self.entries {
            let score = if e.log_score == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{}", e.log_score)
            };
            let source = e.best_source.map_or(String::new(), |s| s.to_string());
            let dist = e.dist.map_or(String::new(), |d| d.to_string());
            out.push_str(&format!("{},{score},{source},{dist}\n", e.node));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Scores every candidate against every source, keeping the strongest bound.
///
/// Sources are deduplicated and visited in ascending id order, so a score tie
/// resolves to the lowest source id. Runs one BFS per source.
pub fn influence_scores(
    graph: &Graph,
    sources: &[NodeId],
    candidates: &[NodeId],
) -> Result<ScoreTable> {
    if sources.is_empty() {
        return Err(Error::invalid("source set is empty"));
    }
    let n = graph.n_nodes();
    for &s in sources {
        if s >= n {
            return Err(Error::invalid(format!("source {s} >= node count {n}")));
        }
    }
    for &c in candidates {
        if c >= n {
            return Err(Error::invalid(format!("candidate {c} >= node count {n}")));
        }
    }
    let mut sorted_sources = sources.to_vec();
    sorted_sources.sort_unstable();
    sorted_sources.dedup();

    let mut entries: Vec<ScoreEntry> = candidates
        .iter()
        .map(|&node| ScoreEntry {
            node,
            log_score: f64::NEG_INFINITY,
            best_source: None,
            dist: None,
        })
        .collect();
    for &s in &sorted_sources {
        let prof = shortest_path_profile(graph, s);
        for entry in entries.iter_mut() {
            let p = &prof[entry.node];
            let score = p.log_bound();
            if score > entry.log_score {
                entry.log_score = score;
                entry.best_source = Some(s);
                entry.dist = p.dist;
            }
        }
    }
    Ok(ScoreTable { entries })
}

/// Nodes chosen by [`select_top_k`], plus how many of the requested slots
/// could not be filled with positively scored candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub nodes: Vec<NodeId>,
    pub shortfall: usize,
}

impl Selection {
    pub fn load(path: impl AsRef<Path>) -> Result<Selection> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let text = serde_json::to_string_pretty(self).expect("serialize selection");
        writeln!(file, "{text}").map_err(|e| Error::io(path, e))
    }
}

/// Picks the `k` highest-scoring reachable candidates.
///
/// Order is score descending with node id ascending as tie-break. If fewer
/// than `k` candidates have positive influence, the rest of the request is
/// reported as `shortfall` rather than padded.
pub fn select_top_k(table: &ScoreTable, k: usize) -> Result<Selection> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let mut eligible: Vec<&ScoreEntry> = table
        .entries
        .iter()
        .filter(|e| e.log_score > f64::NEG_INFINITY)
        .collect();
    eligible.sort_by(|a, b| {
        b.log_score
            .partial_cmp(&a.log_score)
            .expect("finite scores")
            .then(a.node.cmp(&b.node))
    });
    let taken: Vec<NodeId> = eligible.iter().take(k).map(|e| e.node).collect();
    let shortfall = k - taken.len();
    Ok(Selection {
        nodes: taken,
        shortfall,
    })
}

/// Exact propagation weight of `source` on `target` after `hops` rounds of
/// row-normalized adjacency multiplication, by dense iteration.
///
/// Independent of the BFS scorer; intended as a reference. Guarded to graphs
/// of at most 200 nodes.
pub fn brute_force_influence(
    graph: &Graph,
    source: NodeId,
    target: NodeId,
    hops: usize,
) -> Result<f64> {
    let n = graph.n_nodes();
    if n > 200 {
        return Err(Error::invalid(format!(
            "brute-force influence is limited to 200 nodes, got {n}"
        )));
    }
    if source >= n || target >= n {
        return Err(Error::invalid("source or target out of range"));
    }
    let mut w = vec![0.0f64; n];
    w[source] = 1.0;
    for _ in 0..hops {
        let mut next = vec![0.0f64; n];
        for x in 0..n {
            let deg = graph.degree(x);
            if deg == 0 {
                continue;
            }
            let sum: f64 = graph.neighbors(x).iter().map(|&y| w[y]).sum();
            next[x] = sum / deg as f64;
        }
        w = next;
    }
    Ok(w[target])
}
