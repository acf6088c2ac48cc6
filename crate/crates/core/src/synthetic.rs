//! Seeded generators for graphs and toy text-attributed datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{FeatureMatrix, LabelAssignment, LabelSpace, TextCorpus};
use crate::error::Result;
use crate::graph::{Graph, NodeId};

/// Uniform random attachment tree on `n` nodes.
pub fn random_tree(n: usize, rng: &mut ChaCha20Rng) -> Graph {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (v, rng.gen_range(0..v))).collect();
    Graph::from_edges(n, edges).expect("tree edges are in range")
}

/// Erdos-Renyi style graph: each pair is an edge with probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha20Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).expect("pair edges are in range")
}

/// Planted-partition graph: within-block pairs connect with `p_in`, cross
/// pairs with `p_out`. Returns the graph and each node's block.
pub fn planted_partition(
    sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut ChaCha20Rng,
) -> (Graph, Vec<usize>) {
    let n: usize = sizes.iter().sum();
    let mut block = Vec::with_capacity(n);
    for (b, &size) in sizes.iter().enumerate() {
        block.extend(std::iter::repeat(b).take(size));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block[i] == block[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    (
        Graph::from_edges(n, edges).expect("pair edges are in range"),
        block,
    )
}

/// A small fully labeled text-attributed graph for demos and end-to-end
/// tests: three topic communities with class-flavored token pools and
/// class-shifted Gaussian features.
#[derive(Debug, Clone)]
pub struct ToyTag {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelAssignment,
    pub space: LabelSpace,
    pub texts: TextCorpus,
}

const CLASS_NAMES: [&str; 3] = ["neural_nets", "markov_models", "graph_theory"];

const TOKEN_POOLS: [[&str; 6]; 3] = [
    ["neural", "network", "gradient", "layer", "deep", "backprop"],
    [
        "markov",
        "chain",
        "stochastic",
        "transition",
        "state",
        "process",
    ],
    ["vertex", "edge", "path", "cycle", "clique", "spanning"],
];

const FILLER: [&str; 6] = ["the", "of", "study", "method", "results", "analysis"];

/// Builds the demo dataset: 3 blocks of 100 nodes, strong homophily, eight
/// noisy feature dimensions with class-specific means, and 8-to-11-token
/// documents drawn mostly from the class pool.
pub fn toy_tag(seed: u64) -> Result<ToyTag> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sizes = [100usize, 100, 100];
    let (graph, block) = planted_partition(&sizes, 0.08, 0.01, &mut rng);
    let n = graph.n_nodes();

    let noise = Normal::new(0.0, 0.6).expect("valid normal");
    let mut feats = ndarray::Array2::zeros((n, 8));
    for v in 0..n {
        for d in 0..8 {
            let mut value: f64 = noise.sample(&mut rng);
            if d == 2 * block[v] || d == 2 * block[v] + 1 {
                value += 1.2;
            }
            feats[[v, d]] = value;
        }
    }

    let mut texts = Vec::with_capacity(n);
    for v in 0..n {
        let pool = TOKEN_POOLS[block[v]];
        let class_tokens = 5 + rng.gen_range(0..3);
        let filler_tokens = 3;
        let mut words = Vec::with_capacity(class_tokens + filler_tokens);
        for _ in 0..class_tokens {
            words.push(pool[rng.gen_range(0..pool.len())]);
        }
        for _ in 0..filler_tokens {
            words.push(FILLER[rng.gen_range(0..FILLER.len())]);
        }
        texts.push(words.join(" "));
    }

    Ok(ToyTag {
        graph,
        features: FeatureMatrix::from_array(feats),
        labels: LabelAssignment::new(block.iter().map(|&b| Some(b)).collect()),
        space: LabelSpace::from_names(CLASS_NAMES.iter().map(|s| s.to_string()).collect())?,
        texts: TextCorpus::from_texts(texts),
    })
}

/// Simulated text-annotator responses: the true class name with probability
/// `accuracy`, otherwise a uniformly chosen wrong class name. Only labeled
/// nodes get a response.
pub fn noisy_annotations(
    labels: &LabelAssignment,
    space: &LabelSpace,
    accuracy: f64,
    seed: u64,
) -> Vec<(NodeId, String)> {
    let mut out = Vec::new();
    let c = space.len();
    for node in 0..labels.n_nodes() {
        let Some(truth) = labels.get(node) else {
            continue;
        };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(node as u64 + 1);
        let class = if rng.gen::<f64>() < accuracy {
            truth
        } else {
            let j = rng.gen_range(0..c - 1);
            if j < truth {
                j
            } else {
                j + 1
            }
        };
        out.push((node, space.name(class).to_string()));
    }
    out
}
