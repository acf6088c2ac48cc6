//! Monte-Carlo simulator for two noisy annotators on shared truth.
//!
//! Each node draws a uniform true class. Both annotators answer correctly
//! with their configured accuracy and otherwise pick uniformly among the
//! wrong classes. The graph annotator also gets a probability row whose top
//! mass is a rescaled Beta draw on its predicted class, higher when that
//! prediction is correct. Every node consumes its own counter-derived RNG
//! stream, so results do not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use ndarray::Array2;

use crate::agreement::{agreement_accuracy_bound, filter_disagreement, partition, PredictionSet};
use crate::error::{Error, Result};
use crate::judge::ProbMatrix;

/// Optional shared-difficulty mode: a `hard_fraction` of nodes multiply both
/// annotator accuracies by `accuracy_factor`, correlating their errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedErrors {
    pub hard_fraction: f64,
    pub accuracy_factor: f64,
}

/// Simulator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub n_classes: usize,
    pub p_llm: f64,
    pub p_gnn: f64,
    /// Beta parameters for the top-mass draw when the graph annotator is
    /// correct.
    pub conf_correct: (f64, f64),
    /// Beta parameters when it is wrong.
    pub conf_wrong: (f64, f64),
    pub correlated: Option<CorrelatedErrors>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 200_000,
            n_classes: 7,
            p_llm: 0.8,
            p_gnn: 0.7,
            conf_correct: (8.0, 2.0),
            conf_wrong: (2.0, 2.0),
            correlated: None,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::invalid("need at least one node"));
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        for (name, p) in [("p_llm", self.p_llm), ("p_gnn", self.p_gnn)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} {p} outside [0, 1]")));
            }
        }
        for (a, b) in [self.conf_correct, self.conf_wrong] {
            if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
                return Err(Error::invalid(format!(
                    "beta parameters ({a}, {b}) must be positive"
                )));
            }
        }
        if let Some(c) = &self.correlated {
            if !(0.0..=1.0).contains(&c.hard_fraction) || !(0.0..=1.0).contains(&c.accuracy_factor)
            {
                return Err(Error::invalid(
                    "correlated-error fraction and factor must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }
}

/// Simulated truth, annotator labels, and graph-annotator probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config: SimConfig,
    pub truth: Vec<usize>,
    pub llm: Vec<usize>,
    pub gnn: Vec<usize>,
    pub probs: ProbMatrix,
}

fn draw_label(rng: &mut ChaCha20Rng, truth: usize, n_classes: usize, p_correct: f64) -> usize {
    if rng.gen::<f64>() < p_correct {
        truth
    } else {
        let j = rng.gen_range(0..n_classes - 1);
        if j < truth {
            j
        } else {
            j + 1
        }
    }
}

/// Runs the simulator. Per node, the draw order is: truth, hard flag (when
/// correlated mode is on), both annotator labels, then the confidence draw.
pub fn simulate(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let c = config.n_classes;
    let cf = c as f64;
    let beta_correct = Beta::new(config.conf_correct.0, config.conf_correct.1)
        .map_err(|e| Error::invalid(format!("conf_correct: {e}")))?;
    let beta_wrong = Beta::new(config.conf_wrong.0, config.conf_wrong.1)
        .map_err(|e| Error::invalid(format!("conf_wrong: {e}")))?;

    let mut truth = Vec::with_capacity(config.n_nodes);
    let mut llm = Vec::with_capacity(config.n_nodes);
    let mut gnn = Vec::with_capacity(config.n_nodes);
    let mut probs = Array2::zeros((config.n_nodes, c));
    for node in 0..config.n_nodes {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(node as u64 + 1);

        let t = rng.gen_range(0..c);
        let factor = match &config.correlated {
            Some(corr) if rng.gen::<f64>() < corr.hard_fraction => corr.accuracy_factor,
            Some(_) | None => 1.0,
        };
        let l = draw_label(&mut rng, t, c, config.p_llm * factor);
        let g = draw_label(&mut rng, t, c, config.p_gnn * factor);

        let dist = if g == t { &beta_correct } else { &beta_wrong };
        // Rescale the draw into (1/C, 1) so the predicted class always holds
        // the argmax of the row.
        let raw: f64 = dist.sample(&mut rng);
        let raw = raw.clamp(1e-9, 1.0 - 1e-9);
        let top = 1.0 / cf + (1.0 - 1.0 / cf) * raw;
        let rest = (1.0 - top) / (cf - 1.0);
        for class in 0..c {
            probs[[node, class]] = if class == g { top } else { rest };
        }
        truth.push(t);
        llm.push(l);
        gnn.push(g);
    }
    Ok(SimResult {
        config: config.clone(),
        truth,
        llm,
        gnn,
        probs: ProbMatrix::from_array(probs),
    })
}

/// Aggregate agreement and accuracy counts for one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub n: usize,
    pub agree: usize,
    pub agree_correct: usize,
    pub llm_correct: usize,
    pub gnn_correct: usize,
}

impl SimStats {
    /// Accuracy within the agreement set; `None` when nothing agreed.
    pub fn agree_acc(&self) -> Option<f64> {
        (self.agree > 0).then(|| self.agree_correct as f64 / self.agree as f64)
    }

    pub fn llm_acc(&self) -> f64 {
        self.llm_correct as f64 / self.n as f64
    }

    pub fn gnn_acc(&self) -> f64 {
        self.gnn_correct as f64 / self.n as f64
    }
}

pub fn stats(result: &SimResult) -> SimStats {
    let n = result.truth.len();
    let mut s = SimStats {
        n,
        agree: 0,
        agree_correct: 0,
        llm_correct: 0,
        gnn_correct: 0,
    };
    for i in 0..n {
        let t = result.truth[i];
        if result.llm[i] == t {
            s.llm_correct += 1;
        }
        if result.gnn[i] == t {
            s.gnn_correct += 1;
        }
        if result.llm[i] == result.gnn[i] {
            s.agree += 1;
            if result.llm[i] == t {
                s.agree_correct += 1;
            }
        }
    }
    s
}

/// One threshold of the disagreement-filter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub tau: f64,
    pub kept: usize,
    /// Accuracy of the graph-annotator label over kept disagreements; `None`
    /// when nothing survives the threshold.
    pub accuracy: Option<f64>,
}

/// Applies the disagreement filter at each threshold and measures the
/// accuracy of what survives. Errors when the run produced no disagreements.
pub fn tau_sweep(result: &SimResult, taus: &[f64]) -> Result<Vec<TauRow>> {
    let selected: Vec<usize> = (0..result.truth.len()).collect();
    let mut llm_preds = PredictionSet::new();
    for (node, &label) in result.llm.iter().enumerate() {
        llm_preds.insert(node, Some(label));
    }
    let part = partition(&selected, &result.gnn, &llm_preds)?;
    if part.disagreed.is_empty() {
        return Err(Error::invalid("simulation produced no disagreements"));
    }
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let kept = filter_disagreement(&part.disagreed, &result.probs, tau)?;
        let hits = kept
            .iter()
            .filter(|d| d.gnn_label == result.truth[d.node])
            .count();
        let accuracy = (!kept.is_empty()).then(|| hits as f64 / kept.len() as f64);
        rows.push(TauRow {
            tau,
            kept: kept.len(),
            accuracy,
        });
    }
    Ok(rows)
}

/// Writes `tau,kept,accuracy` rows; accuracy is empty when nothing was kept.
pub fn save_tau_csv(rows: &[TauRow], path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("tau,kept,accuracy\n");
    for row in rows {
        let acc = row.accuracy.map_or(String::new(), |a| format!("{a}"));
        out.push_str(&format!("{},{},{acc}\n", row.tau, row.kept));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// One grid cell of the bound-verification scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub p_llm: f64,
    pub p_gnn: f64,
    pub bound: f64,
    pub empirical: Option<f64>,
    pub agreements: usize,
    /// Binomial standard deviation of the empirical agreement accuracy.
    pub sigma: f64,
    pub below_chance: bool,
    pub violation: bool,
}

/// Scan summary across the accuracy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub n_classes: usize,
    pub cell_n: usize,
    pub grid: Vec<f64>,
    pub cells: Vec<ScanCell>,
    pub violations: usize,
}

impl ScanReport {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("serialize scan report");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Simulates every `(p_llm, p_gnn)` pair in `grid x grid` and flags cells
/// where the empirical agreement accuracy falls more than three binomial
/// standard deviations below the analytic value, or below `max(p) - 3 sigma`
/// when both accuracies beat chance.
pub fn bound_violation_scan(
    grid: &[f64],
    n_classes: usize,
    cell_n: usize,
    seed: u64,
    correlated: Option<CorrelatedErrors>,
) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(Error::invalid("empty accuracy grid"));
    }
    let chance = 1.0 / n_classes as f64;
    let mut cells = Vec::with_capacity(grid.len() * grid.len());
    let mut violations = 0;
    for (i, &p_llm) in grid.iter().enumerate() {
        for (j, &p_gnn) in grid.iter().enumerate() {
            let cell_seed = seed
                .wrapping_add(((i * grid.len() + j) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let config = SimConfig {
                n_nodes: cell_n,
                n_classes,
                p_llm,
                p_gnn,
                correlated,
                seed: cell_seed,
                ..SimConfig::default()
            };
            let result = simulate(&config)?;
            let s = stats(&result);
            let bound = agreement_accuracy_bound(p_llm, p_gnn, n_classes)?.value;
            let empirical = s.agree_acc();
            let sigma = if s.agree > 0 {
                (bound * (1.0 - bound) / s.agree as f64).sqrt()
            } else {
                f64::INFINITY
            };
            let below_chance = p_llm <= chance || p_gnn <= chance;
            let violation = match empirical {
                None => true,
                Some(emp) => {
                    let bound_broken = emp < bound - 3.0 * sigma;
                    let dominance_broken = !below_chance && emp < p_llm.max(p_gnn) - 3.0 * sigma;
                    bound_broken || dominance_broken
                }
            };
            if violation {
                violations += 1;
            }
            cells.push(ScanCell {
                p_llm,
                p_gnn,
                bound,
                empirical,
                agreements: s.agree,
                sigma,
                below_chance,
                violation,
            });
        }
    }
    Ok(ScanReport {
        n_classes,
        cell_n,
        grid: grid.to_vec(),
        cells,
        violations,
    })
}
