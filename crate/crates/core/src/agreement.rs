//! Agreement/disagreement co-labeling of annotator predictions.
//!
//! Two annotators label the selected nodes: the graph judge (argmax of its
//! probability rows) and a text model. Nodes where both agree keep the shared
//! label. Disagreements are scored by how much probability mass the judge
//! puts on its own label over the text model's label, and only confident
//! disagreements (score at least tau) survive, labeled by the judge.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabelAssignment;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::judge::ProbMatrix;

/// Parsed predictions for a node set; `None` marks an unparsable response.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    map: HashMap<NodeId, Option<usize>>,
}

impl PredictionSet {
    pub fn new() -> PredictionSet {
        PredictionSet::default()
    }

    pub fn insert(&mut self, node: NodeId, pred: Option<usize>) {
        self.map.insert(node, pred);
    }

    /// Outer `None` means no prediction was recorded for the node at all.
    pub fn get(&self, node: NodeId) -> Option<Option<usize>> {
        self.map.get(&node).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreedNode {
    pub node: NodeId,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreedNode {
    pub node: NodeId,
    pub gnn_label: usize,
    pub llm_label: usize,
}

/// A disagreement with its judge-confidence margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredDisagreement {
    pub node: NodeId,
    pub gnn_label: usize,
    pub llm_label: usize,
    pub score: f64,
}

/// Selected nodes split by annotator agreement, each list sorted by node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub agreed: Vec<AgreedNode>,
    pub disagreed: Vec<DisagreedNode>,
    pub unparsed: Vec<NodeId>,
}

/// Splits `selected` into agreement, disagreement, and unparsed sets.
///
/// `gnn_labels` is the full per-node argmax label vector. Selected nodes with
/// no text-annotator record at all abort with the offending ids.
pub fn partition(
    selected: &[NodeId],
    gnn_labels: &[usize],
    llm: &PredictionSet,
) -> Result<Partition> {
    let mut missing = Vec::new();
    let mut agreed = Vec::new();
    let mut disagreed = Vec::new();
    let mut unparsed = Vec::new();
    for &node in selected {
        if node >= gnn_labels.len() {
            return Err(Error::invalid(format!(
                "selected node {node} >= label vector length {}",
                gnn_labels.len()
            )));
        }
        match llm.get(node) {
            None => missing.push(node),
            Some(None) => unparsed.push(node),
            Some(Some(llm_label)) => {
                let gnn_label = gnn_labels[node];
                if gnn_label == llm_label {
                    agreed.push(AgreedNode {
                        node,
                        label: gnn_label,
                    });
                } else {
                    disagreed.push(DisagreedNode {
                        node,
                        gnn_label,
                        llm_label,
                    });
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(Error::MissingPredictions { nodes: missing });
    }
    agreed.sort_by_key(|a| a.node);
    disagreed.sort_by_key(|d| d.node);
    unparsed.sort_unstable();
    Ok(Partition {
        agreed,
        disagreed,
        unparsed,
    })
}

/// Judge-confidence margin for one disagreement: probability of the judge's
/// label minus probability of the text annotator's label.
///
/// Requires a real disagreement whose judge label is the argmax of the prob
/// row, so the result lies in `[0, 1]` and is zero only on an exact tie.
pub fn preference_score(
    probs: &ProbMatrix,
    node: NodeId,
    gnn_label: usize,
    llm_label: usize,
) -> Result<f64> {
    if gnn_label == llm_label {
        return Err(Error::invalid(format!(
            "node {node}: labels agree, no preference to score"
        )));
    }
    if gnn_label >= probs.n_classes() || llm_label >= probs.n_classes() {
        return Err(Error::invalid(format!(
            "node {node}: label out of range for {} classes",
            probs.n_classes()
        )));
    }
    let top = probs.top_mass(node);
    if probs.prob(node, gnn_label) < top {
        return Err(Error::invalid(format!(
            "node {node}: judge label {gnn_label} is not the argmax of its prob row"
        )));
    }
    Ok(probs.prob(node, gnn_label) - probs.prob(node, llm_label))
}

/// Keeps disagreements whose margin is at least `tau`, sorted by margin
/// descending with node id as tie-break.
pub fn filter_disagreement(
    disagreed: &[DisagreedNode],
    probs: &ProbMatrix,
    tau: f64,
) -> Result<Vec<ScoredDisagreement>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau {tau} outside [0, 1]")));
    }
    let mut kept = Vec::new();
    for d in disagreed {
        let score = preference_score(probs, d.node, d.gnn_label, d.llm_label)?;
        if score >= tau {
            kept.push(ScoredDisagreement {
                node: d.node,
                gnn_label: d.gnn_label,
                llm_label: d.llm_label,
                score,
            });
        }
    }
    kept.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then(a.node.cmp(&b.node))
    });
    Ok(kept)
}

/// Predicted accuracy within the agreement set for two conditionally
/// independent annotators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementBound {
    pub value: f64,
    /// Whether the bound strictly exceeds both annotator accuracies.
    pub exceeds_both: bool,
    /// Set when an input accuracy sits exactly on 0 or 1 and the value is the
    /// corresponding limit.
    pub boundary: bool,
}

/// Accuracy of labels where two independent annotators of accuracy `p_llm`
/// and `p_gnn` agree, assuming errors spread uniformly over the other
/// `n_classes - 1` classes.
pub fn agreement_accuracy_bound(
    p_llm: f64,
    p_gnn: f64,
    n_classes: usize,
) -> Result<AgreementBound> {
    if n_classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    for (name, p) in [("p_llm", p_llm), ("p_gnn", p_gnn)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} {p} outside [0, 1]")));
        }
    }
    if p_llm == 1.0 || p_gnn == 1.0 {
        return Ok(AgreementBound {
            value: 1.0,
            exceeds_both: false,
            boundary: true,
        });
    }
    if p_llm == 0.0 || p_gnn == 0.0 {
        return Ok(AgreementBound {
            value: 0.0,
            exceeds_both: false,
            boundary: true,
        });
    }
    let both_right = p_llm * p_gnn;
    let both_wrong_same = (1.0 - p_llm) * (1.0 - p_gnn) / (n_classes as f64 - 1.0);
    let value = both_right / (both_right + both_wrong_same);
    Ok(AgreementBound {
        value,
        exceeds_both: value > p_llm.max(p_gnn),
        boundary: false,
    })
}

/// Error-overlap statistics between two annotators against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDiagnostics {
    /// Pearson correlation of the two binary error indicators; `None` when an
    /// indicator has zero variance.
    pub pearson: Option<f64>,
    /// P(llm err | gnn err) - P(llm err); `None` when the gnn never errs.
    pub delta_llm_given_gnn: Option<f64>,
    /// P(gnn err | llm err) - P(gnn err); `None` when the llm never errs.
    pub delta_gnn_given_llm: Option<f64>,
    pub gnn_error_rate: f64,
    pub llm_error_rate: f64,
    pub n: usize,
}

/// Computes [`ErrorDiagnostics`] over aligned prediction/truth slices.
pub fn error_correlation(
    gnn: &[usize],
    llm: &[usize],
    truth: &[usize],
) -> Result<ErrorDiagnostics> {
    let n = truth.len();
    if n == 0 {
        return Err(Error::invalid("no evaluated nodes"));
    }
    if gnn.len() != n || llm.len() != n {
        return Err(Error::invalid(format!(
            "prediction lengths {}, {} != truth length {n}",
            gnn.len(),
            llm.len()
        )));
    }
    let err_g: Vec<f64> = gnn
        .iter()
        .zip(truth)
        .map(|(p, t)| f64::from(p != t))
        .collect();
    let err_l: Vec<f64> = llm
        .iter()
        .zip(truth)
        .map(|(p, t)| f64::from(p != t))
        .collect();
    let nf = n as f64;
    let mean_g = err_g.iter().sum::<f64>() / nf;
    let mean_l = err_l.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var_g = 0.0;
    let mut var_l = 0.0;
    for i in 0..n {
        cov += (err_g[i] - mean_g) * (err_l[i] - mean_l);
        var_g += (err_g[i] - mean_g).powi(2);
        var_l += (err_l[i] - mean_l).powi(2);
    }
    let pearson = if var_g == 0.0 || var_l == 0.0 {
        None
    } else {
        Some(cov / (var_g.sqrt() * var_l.sqrt()))
    };
    let delta_llm_given_gnn = if mean_g == 0.0 {
        None
    } else {
        let joint = err_g.iter().zip(&err_l).map(|(g, l)| g * l).sum::<f64>() / nf;
        Some(joint / mean_g - mean_l)
    };
    let delta_gnn_given_llm = if mean_l == 0.0 {
        None
    } else {
        let joint = err_g.iter().zip(&err_l).map(|(g, l)| g * l).sum::<f64>() / nf;
        Some(joint / mean_l - mean_g)
    };
    Ok(ErrorDiagnostics {
        pearson,
        delta_llm_given_gnn,
        delta_gnn_given_llm,
        gnn_error_rate: mean_g,
        llm_error_rate: mean_l,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub selected: usize,
    pub agreed: usize,
    pub disagreed: usize,
    pub unparsed: usize,
    pub kept_disagreed: usize,
    pub final_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBlock {
    pub p_llm: f64,
    pub p_gnn: f64,
    pub n_classes: usize,
    pub value: f64,
    pub exceeds_both: bool,
}

/// Run summary: partition sizes, accuracies against known truth, the
/// predicted agreement accuracy, and error-overlap diagnostics.
///
/// Accuracy fields are `None` when no evaluable node has a known label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub counts: ReportCounts,
    /// Agreed fraction of decided (agreed plus disagreed) nodes.
    pub ad_ratio: Option<f64>,
    pub agree_acc: Option<f64>,
    /// Accuracy of the judge label over all disagreed nodes.
    pub disagree_acc: Option<f64>,
    /// Accuracy of the judge label over kept disagreements only.
    pub sel_disagree_acc: Option<f64>,
    /// Accuracy of the emitted pseudo-labels: agreed plus kept disagreements.
    pub final_acc: Option<f64>,
    pub gnn_acc: Option<f64>,
    pub llm_acc: Option<f64>,
    pub bound: Option<BoundBlock>,
    pub diagnostics: Option<ErrorDiagnostics>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("serialize report");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Report> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

fn ratio(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

fn accuracy_over<I>(pairs: I, truth: &LabelAssignment) -> Option<f64>
where
    I: IntoIterator<Item = (NodeId, usize)>,
{
    let mut hits = 0;
    let mut total = 0;
    for (node, label) in pairs {
        if let Some(t) = truth.get(node) {
            total += 1;
            if t == label {
                hits += 1;
            }
        }
    }
    ratio(hits, total)
}

/// The emitted pseudo-labels: agreed nodes keep the shared label, kept
/// disagreements keep the judge label. Sorted by node id.
pub fn final_labels(partition: &Partition, kept: &[ScoredDisagreement]) -> Vec<(NodeId, usize)> {
    let mut out: Vec<(NodeId, usize)> = partition
        .agreed
        .iter()
        .map(|a| (a.node, a.label))
        .chain(kept.iter().map(|d| (d.node, d.gnn_label)))
        .collect();
    out.sort_unstable();
    out
}

/// Builds the run summary from a partition, the kept disagreements, and
/// whatever ground truth is known.
pub fn build_report(
    part: &Partition,
    kept: &[ScoredDisagreement],
    truth: &LabelAssignment,
    n_classes: usize,
    warnings: Vec<String>,
) -> Report {
    let selected = part.agreed.len() + part.disagreed.len() + part.unparsed.len();
    let counts = ReportCounts {
        selected,
        agreed: part.agreed.len(),
        disagreed: part.disagreed.len(),
        unparsed: part.unparsed.len(),
        kept_disagreed: kept.len(),
        final_size: part.agreed.len() + kept.len(),
    };
    let decided = part.agreed.len() + part.disagreed.len();
    let ad_ratio = ratio(part.agreed.len(), decided);

    let agree_acc = accuracy_over(part.agreed.iter().map(|a| (a.node, a.label)), truth);
    let disagree_acc = accuracy_over(part.disagreed.iter().map(|d| (d.node, d.gnn_label)), truth);
    let sel_disagree_acc = accuracy_over(kept.iter().map(|d| (d.node, d.gnn_label)), truth);
    let final_acc = accuracy_over(final_labels(part, kept), truth);

    let decided_gnn = part
        .agreed
        .iter()
        .map(|a| (a.node, a.label))
        .chain(part.disagreed.iter().map(|d| (d.node, d.gnn_label)));
    let decided_llm = part
        .agreed
        .iter()
        .map(|a| (a.node, a.label))
        .chain(part.disagreed.iter().map(|d| (d.node, d.llm_label)));
    let gnn_acc = accuracy_over(decided_gnn.clone(), truth);
    let llm_acc = accuracy_over(decided_llm.clone(), truth);

    let bound = match (llm_acc, gnn_acc) {
        (Some(pl), Some(pg)) => {
            agreement_accuracy_bound(pl, pg, n_classes)
                .ok()
                .map(|b| BoundBlock {
                    p_llm: pl,
                    p_gnn: pg,
                    n_classes,
                    value: b.value,
                    exceeds_both: b.exceeds_both,
                })
        }
        _ => None,
    };

    let mut gnn_eval = Vec::new();
    let mut llm_eval = Vec::new();
    let mut truth_eval = Vec::new();
    for ((gn, gl), (ln_, ll)) in decided_gnn.zip(decided_llm) {
        debug_assert_eq!(gn, ln_);
        if let Some(t) = truth.get(gn) {
            gnn_eval.push(gl);
            llm_eval.push(ll);
            truth_eval.push(t);
        }
    }
    let diagnostics = error_correlation(&gnn_eval, &llm_eval, &truth_eval).ok();

    Report {
        counts,
        ad_ratio,
        agree_acc,
        disagree_acc,
        sel_disagree_acc,
        final_acc,
        gnn_acc,
        llm_acc,
        bound,
        diagnostics,
        warnings,
    }
}
