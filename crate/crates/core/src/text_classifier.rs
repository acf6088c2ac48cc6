//! Toy bag-of-words classifier trained on emitted co-label datasets.
//!
//! A linear softmax model over token counts, fit by full-batch gradient
//! descent on the combined objective: instruction examples contribute
//! negative log likelihood, preference pairs contribute the log-odds-ratio
//! preference loss on (chosen, rejected) class probabilities.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{clamp_prob, combined_loss, preference_loss_grad, LossConfig};

/// Token vocabulary with a frequency floor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
}

fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(|t| t.to_lowercase())
}

impl Vocab {
    /// Collects lowercased whitespace tokens occurring at least `min_freq`
    /// times across the corpus.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, min_freq: usize) -> Vocab {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for token in tokenize(text) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        let mut tokens: Vec<String> = counts
            .into_iter()
            .filter_map(|(t, c)| (c >= min_freq).then_some(t))
            .collect();
        tokens.sort_unstable();
        Vocab { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect()
    }
}

/// Sparse token-count vector for one document.
pub fn featurize(text: &str, vocab: &Vocab) -> Vec<(usize, f64)> {
    let index = vocab.index();
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for token in tokenize(text) {
        if let Some(&i) = index.get(token.as_str()) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut out: Vec<(usize, f64)> = counts.into_iter().collect();
    out.sort_unstable_by_key(|&(i, _)| i);
    out
}

/// Toy trainer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Early-stop patience on validation accuracy, when validation data is
    /// provided.
    pub patience: usize,
    pub min_freq: usize,
    pub loss: LossConfig,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            lr: 0.5,
            epochs: 200,
            patience: 50,
            min_freq: 2,
            loss: LossConfig::default(),
            seed: 0,
        }
    }
}

/// Linear softmax classifier over vocabulary counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub vocab: Vocab,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Serialize, Deserialize)]
struct ToyModelFile {
    vocab: Vocab,
    n_classes: usize,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl ToyModel {
    pub fn zeros(vocab: Vocab, n_classes: usize) -> ToyModel {
        let v = vocab.len();
        ToyModel {
            vocab,
            weights: Array2::zeros((v, n_classes)),
            bias: Array1::zeros(n_classes),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.weights.ncols()
    }

    /// Class probabilities for one document.
    pub fn predict_proba(&self, text: &str) -> Vec<f64> {
        let x = featurize(text, &self.vocab);
        let mut logits = self.bias.to_vec();
        for &(i, count) in &x {
            for (c, logit) in logits.iter_mut().enumerate() {
                *logit += count * self.weights[[i, c]];
            }
        }
        softmax(&logits)
    }

    pub fn predict(&self, text: &str) -> usize {
        let probs = self.predict_proba(text);
        argmax(&probs)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ToyModelFile {
            vocab: self.vocab.clone(),
            n_classes: self.n_classes(),
            weights: self
                .weights
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            bias: self.bias.to_vec(),
        };
        let text = serde_json::to_string_pretty(&file).expect("serialize model");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ToyModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ToyModelFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if file.weights.len() != file.vocab.len()
            || file.weights.iter().any(|r| r.len() != file.n_classes)
            || file.bias.len() != file.n_classes
        {
            return Err(Error::invalid(format!(
                "inconsistent model shape in {}",
                path.display()
            )));
        }
        let mut weights = Array2::zeros((file.vocab.len(), file.n_classes));
        for (i, row) in file.weights.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                weights[[i, j]] = v;
            }
        }
        Ok(ToyModel {
            vocab: file.vocab,
            weights,
            bias: Array1::from_vec(file.bias),
        })
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|v| v / sum).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// One row of the per-epoch training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub combined: f64,
    pub instruction: f64,
    pub preference: f64,
    pub val_acc: Option<f64>,
}

/// Per-epoch loss and validation-accuracy trace.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingCurve {
    pub rows: Vec<CurveRow>,
}

impl TrainingCurve {
    /// Writes `epoch,combined,instruction,preference,val_acc` rows; the
    /// accuracy field is empty when no validation set was given.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("epoch,combined,instruction,preference,val_acc\n");
        for row in &self.rows {
            let acc = row.val_acc.map_or(String::new(), |a| format!("{a}"));
            out.push_str(&format!(
                "{},{},{},{},{acc}\n",
                row.epoch, row.combined, row.instruction, row.preference
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

struct Doc {
    x: Vec<(usize, f64)>,
    label: usize,
}

struct PrefDoc {
    x: Vec<(usize, f64)>,
    chosen: usize,
    rejected: usize,
}

fn doc_probs(model: &ToyModel, x: &[(usize, f64)]) -> Vec<f64> {
    let mut logits = model.bias.to_vec();
    for &(i, count) in x {
        for (c, logit) in logits.iter_mut().enumerate() {
            *logit += count * model.weights[[i, c]];
        }
    }
    softmax(&logits)
}

/// Accumulates `coeff * x` into the gradient row for logit `class`.
fn add_logit_grad(
    gw: &mut Array2<f64>,
    gb: &mut Array1<f64>,
    x: &[(usize, f64)],
    class: usize,
    coeff: f64,
) {
    for &(i, count) in x {
        gw[[i, class]] += coeff * count;
    }
    gb[class] += coeff;
}

struct BatchGrad {
    gw: Array2<f64>,
    gb: Array1<f64>,
    instruction: f64,
    preference: f64,
}

fn batch_gradient(
    model: &ToyModel,
    docs: &[Doc],
    prefs: &[PrefDoc],
    loss_cfg: &LossConfig,
    epoch: usize,
) -> Result<BatchGrad> {
    let n_classes = model.n_classes();
    let mut gw = Array2::zeros(model.weights.raw_dim());
    let mut gb = Array1::zeros(n_classes);
    let eps = loss_cfg.epsilon_clip;
    let finite = |probs: &[f64]| -> Result<()> {
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        Ok(())
    };

    let mut instruction = 0.0;
    if !docs.is_empty() {
        let n_docs = docs.len() as f64;
        for doc in docs {
            let probs = doc_probs(model, &doc.x);
            finite(&probs)?;
            instruction += -clamp_prob(probs[doc.label], eps)?.ln();
            for c in 0..n_classes {
                let indicator = if c == doc.label { 1.0 } else { 0.0 };
                add_logit_grad(&mut gw, &mut gb, &doc.x, c, (probs[c] - indicator) / n_docs);
            }
        }
        instruction /= n_docs;
    }

    let mut preference = 0.0;
    if !prefs.is_empty() {
        let n_prefs = prefs.len() as f64;
        let scale = loss_cfg.lambda / n_prefs;
        for pref in prefs {
            let probs = doc_probs(model, &pref.x);
            finite(&probs)?;
            let p_c = clamp_prob(probs[pref.chosen], eps)?;
            let p_r = clamp_prob(probs[pref.rejected], eps)?;
            preference += crate::objectives::preference_loss(p_c, p_r)?;
            let (dc, dr) = preference_loss_grad(p_c, p_r)?;
            // Clipped probabilities have zero derivative through the clamp.
            let dc = if probs[pref.chosen] == p_c { dc } else { 0.0 };
            let dr = if probs[pref.rejected] == p_r { dr } else { 0.0 };
            // Chain through the softmax: dp_a/dz_k = p_a (delta_ak - p_k).
            for k in 0..n_classes {
                let delta_c = if k == pref.chosen { 1.0 } else { 0.0 };
                let delta_r = if k == pref.rejected { 1.0 } else { 0.0 };
                let dz = dc * p_c * (delta_c - probs[k]) + dr * p_r * (delta_r - probs[k]);
                add_logit_grad(&mut gw, &mut gb, &pref.x, k, scale * dz);
            }
        }
        preference /= n_prefs;
    }
    Ok(BatchGrad {
        gw,
        gb,
        instruction,
        preference,
    })
}

fn prepare_docs(
    examples: &[(String, usize)],
    vocab: &Vocab,
    n_classes: usize,
    what: &str,
) -> Result<Vec<Doc>> {
    examples
        .iter()
        .map(|(text, label)| {
            if *label >= n_classes {
                return Err(Error::invalid(format!(
                    "{what} label {label} >= class count {n_classes}"
                )));
            }
            Ok(Doc {
                x: featurize(text, vocab),
                label: *label,
            })
        })
        .collect()
}

/// Trains the toy model on instruction examples `(text, label)` and
/// preference examples `(text, chosen, rejected)`.
///
/// The vocabulary is built from the training texts with the configured
/// frequency floor. When `val` is provided, the best validation-accuracy
/// weights are kept with early stopping after `patience` stale epochs.
pub fn train_weakly_supervised(
    agree: &[(String, usize)],
    prefs: &[(String, usize, usize)],
    val: Option<&[(String, usize)]>,
    n_classes: usize,
    config: &ToyConfig,
) -> Result<(ToyModel, TrainingCurve)> {
    config.loss.validate()?;
    if agree.is_empty() {
        return Err(Error::invalid("instruction set is empty"));
    }
    if prefs.is_empty() && config.loss.lambda > 0.0 {
        return Err(Error::invalid(
            "preference set is empty but lambda is positive",
        ));
    }
    if n_classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    let vocab = Vocab::build(
        agree
            .iter()
            .map(|(t, _)| t.as_str())
            .chain(prefs.iter().map(|(t, _, _)| t.as_str())),
        config.min_freq,
    );
    if vocab.is_empty() {
        return Err(Error::invalid(format!(
            "vocabulary is empty at min_freq {}",
            config.min_freq
        )));
    }
    let docs = prepare_docs(agree, &vocab, n_classes, "instruction")?;
    let pref_docs: Vec<PrefDoc> = prefs
        .iter()
        .map(|(text, chosen, rejected)| {
            if *chosen >= n_classes || *rejected >= n_classes {
                return Err(Error::invalid(format!(
                    "preference label out of range for {n_classes} classes"
                )));
            }
            if chosen == rejected {
                return Err(Error::invalid(
                    "preference pair has identical chosen and rejected labels",
                ));
            }
            Ok(PrefDoc {
                x: featurize(text, &vocab),
                chosen: *chosen,
                rejected: *rejected,
            })
        })
        .collect::<Result<_>>()?;
    let val_docs: Option<Vec<Doc>> = match val {
        Some(v) => Some(prepare_docs(v, &vocab, n_classes, "validation")?),
        None => None,
    };

    let mut model = ToyModel::zeros(vocab, n_classes);
    let mut curve = TrainingCurve::default();
    let mut best: Option<(f64, Array2<f64>, Array1<f64>)> = None;
    let mut since_improved = 0usize;

    for epoch in 0..config.epochs {
        let grad = batch_gradient(&model, &docs, &pref_docs, &config.loss, epoch)?;
        let combined = grad.instruction + config.loss.lambda * grad.preference;
        if !combined.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        model.weights.scaled_add(-config.lr, &grad.gw);
        model.bias.scaled_add(-config.lr, &grad.gb);

        let val_acc = val_docs.as_ref().map(|docs| {
            let hits = docs
                .iter()
                .filter(|d| argmax(&doc_probs(&model, &d.x)) == d.label)
                .count();
            hits as f64 / docs.len().max(1) as f64
        });
        curve.rows.push(CurveRow {
            epoch,
            combined,
            instruction: grad.instruction,
            preference: grad.preference,
            val_acc,
        });
        if let Some(acc) = val_acc {
            let improved = best.as_ref().map_or(true, |(b, _, _)| acc > *b);
            if improved {
                best = Some((acc, model.weights.clone(), model.bias.clone()));
                since_improved = 0;
            } else {
                since_improved += 1;
                if since_improved >= config.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, w, b)) = best {
        model.weights = w;
        model.bias = b;
    }
    Ok((model, curve))
}

/// Applies one gradient step of the weighted preference term for a single
/// `(text, chosen, rejected)` pair and returns the updated model.
///
/// The step size is `lr` times the preference gradient scaled by the
/// configured lambda, with no instruction term involved.
pub fn preference_step(
    model: &ToyModel,
    text: &str,
    chosen: usize,
    rejected: usize,
    lr: f64,
    loss_cfg: &LossConfig,
) -> Result<ToyModel> {
    loss_cfg.validate()?;
    let n_classes = model.n_classes();
    if chosen >= n_classes || rejected >= n_classes {
        return Err(Error::invalid(format!(
            "preference label out of range for {n_classes} classes"
        )));
    }
    if chosen == rejected {
        return Err(Error::invalid(
            "preference pair has identical chosen and rejected labels",
        ));
    }
    let pref = PrefDoc {
        x: featurize(text, &model.vocab),
        chosen,
        rejected,
    };
    let grad = batch_gradient(model, &[], &[pref], loss_cfg, 0)?;
    let mut next = model.clone();
    next.weights.scaled_add(-lr, &grad.gw);
    next.bias.scaled_add(-lr, &grad.gb);
    Ok(next)
}

/// Compares the analytic batch gradient against central finite differences
/// of the combined loss at the model's current parameters.
///
/// Returns the maximum elementwise error, relative to
/// `max(1, |analytic|, |numeric|)`.
pub fn grad_check(
    model: &ToyModel,
    agree: &[(String, usize)],
    prefs: &[(String, usize, usize)],
    loss_cfg: &LossConfig,
    epsilon: f64,
) -> Result<f64> {
    let n_classes = model.n_classes();
    let docs = prepare_docs(agree, &model.vocab, n_classes, "instruction")?;
    let pref_docs: Vec<PrefDoc> = prefs
        .iter()
        .map(|(text, chosen, rejected)| PrefDoc {
            x: featurize(text, &model.vocab),
            chosen: *chosen,
            rejected: *rejected,
        })
        .collect();

    let eval = |m: &ToyModel| -> Result<f64> {
        let instr: Vec<f64> = docs.iter().map(|d| doc_probs(m, &d.x)[d.label]).collect();
        let pairs: Vec<(f64, f64)> = pref_docs
            .iter()
            .map(|p| {
                let probs = doc_probs(m, &p.x);
                (probs[p.chosen], probs[p.rejected])
            })
            .collect();
        combined_loss(&instr, &pairs, loss_cfg)
    };

    let grad = batch_gradient(model, &docs, &pref_docs, loss_cfg, 0)?;
    let mut worst = 0.0f64;
    let mut probe = model.clone();
    for i in 0..model.weights.nrows() {
        for j in 0..model.weights.ncols() {
            let orig = model.weights[[i, j]];
            probe.weights[[i, j]] = orig + epsilon;
            let up = eval(&probe)?;
            probe.weights[[i, j]] = orig - epsilon;
            let down = eval(&probe)?;
            probe.weights[[i, j]] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let analytic = grad.gw[[i, j]];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0);
            worst = worst.max(err);
        }
    }
    for j in 0..model.bias.len() {
        let orig = model.bias[j];
        probe.bias[j] = orig + epsilon;
        let up = eval(&probe)?;
        probe.bias[j] = orig - epsilon;
        let down = eval(&probe)?;
        probe.bias[j] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let analytic = grad.gb[j];
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<(String, usize)> {
        let class0 = [
            "neural networks learn representations",
            "deep networks learn features",
            "networks learn weights by descent",
            "neural models learn by descent",
        ];
        let class1 = [
            "markov chains model transitions",
            "hidden markov chains model sequences",
            "markov models capture transitions",
            "chains capture state transitions",
        ];
        class0
            .iter()
            .map(|t| (t.to_string(), 0))
            .chain(class1.iter().map(|t| (t.to_string(), 1)))
            .collect()
    }

    fn prefs() -> Vec<(String, usize, usize)> {
        vec![
            ("networks learn by gradient descent".to_string(), 0, 1),
            ("markov chains model state sequences".to_string(), 1, 0),
        ]
    }

    #[test]
    fn vocab_applies_frequency_floor() {
        let vocab = Vocab::build(["a b a", "b c"], 2);
        assert_eq!(vocab.len(), 2);
        let sparse = featurize("a b zzz", &vocab);
        assert_eq!(sparse.len(), 2);
    }

    #[test]
    fn featurize_counts_and_lowercases() {
        let vocab = Vocab::build(["the cat the cat"], 1);
        let x = featurize("The THE cat", &vocab);
        let total: f64 = x.iter().map(|&(_, c)| c).sum();
        assert_eq!(total, 3.0);
    }

    #[test]
    fn training_fits_separable_corpus() {
        let (model, curve) =
            train_weakly_supervised(&corpus(), &prefs(), None, 2, &ToyConfig::default()).unwrap();
        assert_eq!(
            model.predict("networks learn representations by descent"),
            0
        );
        assert_eq!(model.predict("hidden markov chains capture transitions"), 1);
        let first = curve.rows.first().unwrap().combined;
        let last = curve.rows.last().unwrap().combined;
        assert!(last < first);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = ToyConfig::default();
        let (a, _) = train_weakly_supervised(&corpus(), &prefs(), None, 2, &cfg).unwrap();
        let (b, _) = train_weakly_supervised(&corpus(), &prefs(), None, 2, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn early_stopping_keeps_best_weights() {
        let val: Vec<(String, usize)> = vec![
            ("networks learn features".to_string(), 0),
            ("markov chains model".to_string(), 1),
        ];
        let cfg = ToyConfig {
            epochs: 50,
            patience: 5,
            ..ToyConfig::default()
        };
        let (model, curve) =
            train_weakly_supervised(&corpus(), &prefs(), Some(&val), 2, &cfg).unwrap();
        assert!(curve.rows.len() <= 50);
        assert!(curve.rows.iter().any(|r| r.val_acc == Some(1.0)));
        assert_eq!(model.predict("networks learn features"), 0);
    }

    #[test]
    fn gradient_check_is_tight() {
        let agree = corpus();
        let pref = prefs();
        let cfg = ToyConfig::default();
        let (model, _) =
            train_weakly_supervised(&agree, &pref, None, 2, &ToyConfig { epochs: 3, ..cfg })
                .unwrap();
        let err = grad_check(&model, &agree, &pref, &cfg.loss, 1e-5).unwrap();
        assert!(err <= 1e-5, "max relative error {err}");
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let cfg = ToyConfig::default();
        assert!(train_weakly_supervised(&[], &prefs(), None, 2, &cfg).is_err());
        assert!(train_weakly_supervised(&corpus(), &[], None, 2, &cfg).is_err());
        let zero_lambda = ToyConfig {
            loss: LossConfig {
                lambda: 0.0,
                ..LossConfig::default()
            },
            ..cfg
        };
        assert!(train_weakly_supervised(&corpus(), &[], None, 2, &zero_lambda).is_ok());
        let bad_pref = vec![("x y".to_string(), 1, 1)];
        assert!(train_weakly_supervised(&corpus(), &bad_pref, None, 2, &cfg).is_err());
        let bad_label = vec![("some text here".to_string(), 5)];
        assert!(train_weakly_supervised(&bad_label, &prefs(), None, 2, &cfg).is_err());
    }

    #[test]
    fn empty_vocab_is_an_error() {
        let agree = vec![
            ("unique tokens".to_string(), 0),
            ("other words".to_string(), 1),
        ];
        let cfg = ToyConfig {
            min_freq: 5,
            loss: LossConfig {
                lambda: 0.0,
                ..LossConfig::default()
            },
            ..ToyConfig::default()
        };
        let err = train_weakly_supervised(&agree, &[], None, 2, &cfg).unwrap_err();
        assert!(err.to_string().contains("vocabulary"));
    }

    #[test]
    fn divergent_lr_reports_non_finite_epoch() {
        // A count of eight on one token makes the first gradient step
        // overflow at this rate, so the next epoch sees non-finite probs.
        let docs = vec![
            ("aa aa aa aa aa aa aa aa".to_string(), 0),
            ("bb bb bb bb bb bb bb bb".to_string(), 1),
        ];
        let cfg = ToyConfig {
            lr: 1e308,
            epochs: 60,
            loss: LossConfig {
                lambda: 0.0,
                ..LossConfig::default()
            },
            ..ToyConfig::default()
        };
        match train_weakly_supervised(&docs, &[], None, 2, &cfg) {
            Err(Error::NonFiniteLoss { epoch }) => assert!(epoch >= 1),
            other => panic!("expected non-finite loss, got {other:?}"),
        }
    }

    #[test]
    fn model_round_trip() {
        let (model, _) =
            train_weakly_supervised(&corpus(), &prefs(), None, 2, &ToyConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.json");
        model.save(&path).unwrap();
        assert_eq!(ToyModel::load(&path).unwrap(), model);
    }

    #[test]
    fn curve_csv_has_expected_header() {
        let (_, curve) =
            train_weakly_supervised(&corpus(), &prefs(), None, 2, &ToyConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        curve.save_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epoch,combined,instruction,preference,val_acc\n"));
        assert_eq!(text.lines().count(), curve.rows.len() + 1);
    }
}
