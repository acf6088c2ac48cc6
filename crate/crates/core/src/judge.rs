//! Graph-smoothed logistic-regression judge.
//!
//! Features are smoothed by repeated multiplication with the symmetrically
//! normalized adjacency (self-loops added), then a multinomial logistic
//! regression is fit on the training nodes by full-batch gradient descent
//! with weight decay and early stopping on validation accuracy.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelAssignment, Split};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Judge training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeHyper {
    /// Propagation rounds applied to the features before the linear model.
    pub hops: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub patience: usize,
}

impl Default for JudgeHyper {
    fn default() -> Self {
        JudgeHyper {
            hops: 2,
            lr: 0.2,
            weight_decay: 5e-4,
            max_epochs: 200,
            patience: 100,
        }
    }
}

/// Applies `hops` rounds of `S x`, where `S` is the adjacency with self-loops
/// normalized by inverse square-root degrees on both sides.
pub fn propagate(features: &FeatureMatrix, graph: &Graph, hops: usize) -> Result<FeatureMatrix> {
    let n = graph.n_nodes();
    if features.n_nodes() != n {
        return Err(Error::invalid(format!(
            "feature rows {} != node count {n}",
            features.n_nodes()
        )));
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| 1.0 / ((graph.degree(v) + 1) as f64).sqrt())
        .collect();
    let mut x = features.as_array().clone();
    for _ in 0..hops {
        let mut next = Array2::zeros(x.raw_dim());
        for v in 0..n {
            let mut acc = x.row(v).to_owned();
            acc *= inv_sqrt[v];
            for &u in graph.neighbors(v) {
                acc.scaled_add(inv_sqrt[u], &x.row(u));
            }
            acc *= inv_sqrt[v];
            next.row_mut(v).assign(&acc);
        }
        x = next;
    }
    Ok(FeatureMatrix::from_array(x))
}

/// Trained judge: a linear classifier over smoothed features.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgeModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub hyper: JudgeHyper,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct JudgeModelFile {
    n_features: usize,
    n_classes: usize,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    hyper: JudgeHyper,
    seed: u64,
}

impl JudgeModel {
    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn to_json(&self) -> String {
        let file = JudgeModelFile {
            n_features: self.n_features(),
            n_classes: self.n_classes(),
            weights: self
                .weights
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            bias: self.bias.to_vec(),
            hyper: self.hyper.clone(),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&file).expect("serialize model") + "\n"
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<JudgeModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: JudgeModelFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if file.weights.len() != file.n_features
            || file.weights.iter().any(|r| r.len() != file.n_classes)
            || file.bias.len() != file.n_classes
        {
            return Err(Error::invalid(format!(
                "inconsistent model shape in {}",
                path.display()
            )));
        }
        let mut weights = Array2::zeros((file.n_features, file.n_classes));
        for (i, row) in file.weights.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                weights[[i, j]] = v;
            }
        }
        Ok(JudgeModel {
            weights,
            bias: Array1::from_vec(file.bias),
            hyper: file.hyper,
            seed: file.seed,
        })
    }
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn gather_rows(features: &FeatureMatrix, nodes: &[NodeId]) -> Array2<f64> {
    let mut out = Array2::zeros((nodes.len(), features.n_features()));
    for (i, &node) in nodes.iter().enumerate() {
        out.row_mut(i).assign(&features.row(node));
    }
    out
}

fn gather_labels(labels: &LabelAssignment, nodes: &[NodeId], part: &str) -> Result<Vec<usize>> {
    nodes
        .iter()
        .map(|&v| {
            labels
                .get(v)
                .ok_or_else(|| Error::invalid(format!("{part} node {v} has no label")))
        })
        .collect()
}

fn ce_loss(
    x: &Array2<f64>,
    y: &[usize],
    w: &Array2<f64>,
    b: &Array1<f64>,
    weight_decay: f64,
) -> f64 {
    let logits = x.dot(w) + b;
    let probs = softmax_rows(&logits);
    let m = y.len() as f64;
    let data: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &c)| -probs[[i, c]].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / m;
    data + 0.5 * weight_decay * w.iter().map(|v| v * v).sum::<f64>()
}

fn ce_grad(
    x: &Array2<f64>,
    y: &[usize],
    w: &Array2<f64>,
    b: &Array1<f64>,
    weight_decay: f64,
) -> (Array2<f64>, Array1<f64>) {
    let logits = x.dot(w) + b;
    let mut delta = softmax_rows(&logits);
    let m = y.len() as f64;
    for (i, &c) in y.iter().enumerate() {
        delta[[i, c]] -= 1.0;
    }
    delta /= m;
    let gw = x.t().dot(&delta) + &(w * weight_decay);
    let gb = delta.sum_axis(Axis(0));
    (gw, gb)
}

fn accuracy(probs: &Array2<f64>, y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let correct = probs
        .rows()
        .into_iter()
        .zip(y)
        .filter(|(row, &c)| argmax(row.iter().cloned()) == c)
        .count();
    correct as f64 / y.len() as f64
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Fits the judge on the train split of pre-smoothed features.
///
/// Weights start at zero and follow full-batch gradient descent on softmax
/// cross-entropy; weight decay applies to weights only, not the bias. When
/// the validation split is nonempty, the best validation-accuracy weights are
/// kept and training stops after `patience` epochs without improvement.
pub fn train_judge(
    smoothed: &FeatureMatrix,
    labels: &LabelAssignment,
    split: &Split,
    n_classes: usize,
    hyper: &JudgeHyper,
    seed: u64,
) -> Result<JudgeModel> {
    if split.train.is_empty() {
        return Err(Error::invalid("train split is empty"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if labels.n_nodes() != smoothed.n_nodes() {
        return Err(Error::invalid(format!(
            "label count {} != feature rows {}",
            labels.n_nodes(),
            smoothed.n_nodes()
        )));
    }
    let x_train = gather_rows(smoothed, &split.train);
    let y_train = gather_labels(labels, &split.train, "train")?;
    if let Some(&c) = y_train.iter().find(|&&c| c >= n_classes) {
        return Err(Error::invalid(format!(
            "label {c} >= class count {n_classes}"
        )));
    }
    let x_val = gather_rows(smoothed, &split.val);
    let y_val = gather_labels(labels, &split.val, "val")?;

    let f = smoothed.n_features();
    let mut w = Array2::zeros((f, n_classes));
    let mut b = Array1::zeros(n_classes);
    let mut best = (0.0f64, w.clone(), b.clone());
    let mut since_improved = 0usize;

    for epoch in 0..hyper.max_epochs {
        let loss = ce_loss(&x_train, &y_train, &w, &b, hyper.weight_decay);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let (gw, gb) = ce_grad(&x_train, &y_train, &w, &b, hyper.weight_decay);
        w.scaled_add(-hyper.lr, &gw);
        b.scaled_add(-hyper.lr, &gb);

        if !y_val.is_empty() {
            let probs = softmax_rows(&(x_val.dot(&w) + &b));
            let acc = accuracy(&probs, &y_val);
            if acc > best.0 {
                best = (acc, w.clone(), b.clone());
                since_improved = 0;
            } else {
                since_improved += 1;
                if since_improved >= hyper.patience {
                    break;
                }
            }
        }
    }
    if !y_val.is_empty() && best.0 > 0.0 {
        w = best.1;
        b = best.2;
    }
    Ok(JudgeModel {
        weights: w,
        bias: b,
        hyper: hyper.clone(),
        seed,
    })
}

/// Per-node class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    probs: Array2<f64>,
}

impl ProbMatrix {
    pub fn from_array(probs: Array2<f64>) -> ProbMatrix {
        ProbMatrix { probs }
    }

    pub fn n_nodes(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.probs.ncols()
    }

    pub fn prob(&self, node: NodeId, class: usize) -> f64 {
        self.probs[[node, class]]
    }

    /// Highest-probability class per node; ties pick the lowest class index.
    pub fn argmax_labels(&self) -> Vec<usize> {
        self.probs
            .rows()
            .into_iter()
            .map(|row| argmax(row.iter().cloned()))
            .collect()
    }

    pub fn argmax(&self, node: NodeId) -> usize {
        argmax(self.probs.row(node).iter().cloned())
    }

    /// Probability mass on the argmax class.
    pub fn top_mass(&self, node: NodeId) -> f64 {
        self.probs
            .row(node)
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Renders `node_id,p0,...,p{C-1}` rows with a header.
    pub fn to_csv_string(&self) -> String {
        let mut header = String::from("node_id");
        for c in 0..self.n_classes() {
            header.push_str(&format!(",p{c}"));
        }
        let mut out = header + "\n";
        for (node, row) in self.probs.rows().into_iter().enumerate() {
            out.push_str(&node.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    /// Loads a probability CSV, checking shape, finiteness, nonnegativity,
    /// and that each row sums to one within `1e-6`.
    pub fn load_csv(path: impl AsRef<Path>, n_nodes: usize) -> Result<ProbMatrix> {
        use std::io::BufRead;
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "empty probability file".to_string())),
        };
        let n_classes = header.trim_end_matches('\r').split(',').count() - 1;
        if n_classes == 0 {
            return Err(Error::parse(path, 1, "no probability columns".to_string()));
        }
        let mut probs = Array2::zeros((n_nodes, n_classes));
        let mut seen = vec![false; n_nodes];
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_classes + 1 {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {} fields, got {}", n_classes + 1, fields.len()),
                ));
            }
            let node = fields[0].parse::<usize>().map_err(|_| {
                Error::parse(path, lineno, format!("invalid node id {:?}", fields[0]))
            })?;
            if node >= n_nodes {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("node id {node} >= node count {n_nodes}"),
                ));
            }
            if seen[node] {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("duplicate row for node {node}"),
                ));
            }
            seen[node] = true;
            let mut sum = 0.0;
            for (c, field) in fields[1..].iter().enumerate() {
                let v = field.parse::<f64>().map_err(|_| {
                    Error::parse(path, lineno, format!("invalid probability {field:?}"))
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("probability out of range: {v}"),
                    ));
                }
                probs[[node, c]] = v;
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("row sums to {sum}, expected 1"),
                ));
            }
        }
        if let Some(node) = seen.iter().position(|&s| !s) {
            return Err(Error::invalid(format!(
                "probability file {} is missing node {node}",
                path.display()
            )));
        }
        Ok(ProbMatrix { probs })
    }
}

/// Applies the judge to every row of `smoothed`.
pub fn predict_proba(model: &JudgeModel, smoothed: &FeatureMatrix) -> Result<ProbMatrix> {
    if smoothed.n_features() != model.n_features() {
        return Err(Error::invalid(format!(
            "feature width {} != model width {}",
            smoothed.n_features(),
            model.n_features()
        )));
    }
    let logits = smoothed.as_array().dot(&model.weights) + &model.bias;
    Ok(ProbMatrix {
        probs: softmax_rows(&logits),
    })
}
