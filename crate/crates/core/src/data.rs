//! Node features, labels, texts, and few-shot splits.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Dense per-node feature matrix, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn from_array(data: Array2<f64>) -> FeatureMatrix {
        FeatureMatrix { data }
    }

    /// Loads a headerless CSV of floats with one row per node.
    ///
    /// Row count must equal `n_nodes`, all rows must have equal width, and
    /// every value must be finite.
    pub fn load(path: impl AsRef<Path>, n_nodes: usize) -> Result<FeatureMatrix> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width: Option<usize> = None;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (col, field) in line.split(',').enumerate() {
                let value = field.trim().parse::<f64>().map_err(|_| {
                    Error::parse(path, lineno, format!("invalid float {:?}", field.trim()))
                })?;
                if !value.is_finite() {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("non-finite value in column {col}"),
                    ));
                }
                row.push(value);
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("expected {w} columns, got {}", row.len()),
                    ));
                }
                _ => {}
            }
            rows.push(row);
        }
        if rows.len() != n_nodes {
            return Err(Error::invalid(format!(
                "feature matrix {} has {} row(s), expected {n_nodes}",
                path.display(),
                rows.len()
            )));
        }
        let w = width.unwrap_or(0);
        let mut data = Array2::zeros((n_nodes, w));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                data[[i, j]] = v;
            }
        }
        Ok(FeatureMatrix { data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for row in self.data.rows() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn n_nodes(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, node: NodeId) -> ArrayView1<'_, f64> {
        self.data.row(node)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }
}

/// Ordered set of class names; class index is position in the list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSpace {
    pub fn from_names(names: Vec<String>) -> Result<LabelSpace> {
        if names.is_empty() {
            return Err(Error::invalid("label space is empty"));
        }
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate class name {name:?}")));
            }
        }
        Ok(LabelSpace { names, index })
    }

    /// Loads a JSON array of class names.
    pub fn load(path: impl AsRef<Path>) -> Result<LabelSpace> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let names: Vec<String> =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        LabelSpace::from_names(names)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.names).expect("serialize names");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Ground-truth class per node, where known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    labels: Vec<Option<usize>>,
}

impl LabelAssignment {
    pub fn new(labels: Vec<Option<usize>>) -> LabelAssignment {
        LabelAssignment { labels }
    }

    /// Loads a CSV of `node_id,class_name` rows.
    ///
    /// A literal `node_id,class_name` header line is tolerated. Unknown class
    /// names, out-of-range ids, and duplicate ids are errors.
    pub fn load(
        path: impl AsRef<Path>,
        n_nodes: usize,
        space: &LabelSpace,
    ) -> Result<LabelAssignment> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut labels = vec![None; n_nodes];
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || (idx == 0 && line == "node_id,class_name") {
                continue;
            }
            let (id_str, name) = line.split_once(',').ok_or_else(|| {
                Error::parse(
                    path,
                    lineno,
                    format!("expected node_id,class_name, got {line:?}"),
                )
            })?;
            let node = id_str.trim().parse::<usize>().map_err(|_| {
                Error::parse(path, lineno, format!("invalid node id {:?}", id_str.trim()))
            })?;
            if node >= n_nodes {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("node id {node} >= node count {n_nodes}"),
                ));
            }
            let name = name.trim();
            let class = space.index_of(name).ok_or_else(|| {
                Error::parse(path, lineno, format!("unknown class name {name:?}"))
            })?;
            if labels[node].is_some() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("duplicate label for node {node}"),
                ));
            }
            labels[node] = Some(class);
        }
        Ok(LabelAssignment { labels })
    }

    pub fn save(&self, path: impl AsRef<Path>, space: &LabelSpace) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("node_id,class_name\n");
        for (node, label) in self.labels.iter().enumerate() {
            if let Some(class) = label {
                out.push_str(&format!("{node},{}\n", space.name(*class)));
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.labels[node]
    }

    pub fn known_nodes(&self) -> Vec<NodeId> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|_| i))
            .collect()
    }
}

/// Raw text attribute per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextCorpus {
    texts: Vec<String>,
    missing: Vec<NodeId>,
}

impl TextCorpus {
    pub fn from_texts(texts: Vec<String>) -> TextCorpus {
        let missing = texts
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.is_empty().then_some(i))
            .collect();
        TextCorpus { texts, missing }
    }

    /// Loads JSONL records `{"node_id": <id>, "text": <string>}`.
    ///
    /// Nodes without a record get an empty text and are listed in
    /// [`TextCorpus::missing`].
    pub fn load(path: impl AsRef<Path>, n_nodes: usize) -> Result<TextCorpus> {
        #[derive(Deserialize)]
        struct Record {
            node_id: usize,
            text: String,
        }

        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut texts: Vec<Option<String>> = vec![None; n_nodes];
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line)
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
            if record.node_id >= n_nodes {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("node id {} >= node count {n_nodes}", record.node_id),
                ));
            }
            if texts[record.node_id].is_some() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("duplicate text for node {}", record.node_id),
                ));
            }
            texts[record.node_id] = Some(record.text);
        }
        let mut missing = Vec::new();
        let texts = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| match t {
                Some(t) if !t.is_empty() => t,
                _ => {
                    missing.push(i);
                    String::new()
                }
            })
            .collect();
        Ok(TextCorpus { texts, missing })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for (node_id, text) in self.texts.iter().enumerate() {
            let line = serde_json::json!({ "node_id": node_id, "text": text });
            writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.texts.len()
    }

    pub fn text(&self, node: NodeId) -> &str {
        &self.texts[node]
    }

    /// Nodes with no text record (or an empty one).
    pub fn missing(&self) -> &[NodeId] {
        &self.missing
    }
}

/// Disjoint train/val/test node lists plus the per-class shot count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<NodeId>,
    pub val: Vec<NodeId>,
    pub test: Vec<NodeId>,
    pub shots: usize,
}

impl Split {
    /// Loads a split from JSON and validates disjointness and id range.
    pub fn load(path: impl AsRef<Path>, n_nodes: usize) -> Result<Split> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let split: Split =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        split.validate(n_nodes)?;
        Ok(split)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("serialize split");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let mut seen = HashSet::new();
        for (part, nodes) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            for &node in nodes {
                if node >= n_nodes {
                    return Err(Error::invalid(format!(
                        "{part} node {node} >= node count {n_nodes}"
                    )));
                }
                if !seen.insert(node) {
                    return Err(Error::invalid(format!(
                        "node {node} appears in more than one split part"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nodes outside train and val: the pool pseudo-labels are drawn from.
    pub fn unlabeled_pool(&self, n_nodes: usize) -> Vec<NodeId> {
        let held: HashSet<NodeId> = self.train.iter().chain(&self.val).copied().collect();
        (0..n_nodes).filter(|v| !held.contains(v)).collect()
    }
}

/// Samples `shots` labeled nodes per class for train, then `val_size` labeled
/// nodes for validation; remaining labeled nodes become test.
///
/// Sampling is seeded and reproducible. A class with fewer than `shots`
/// labeled nodes is an error naming the class.
pub fn make_few_shot_split(
    labels: &LabelAssignment,
    space: &LabelSpace,
    shots: usize,
    val_size: usize,
    seed: u64,
) -> Result<Split> {
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    let mut per_class: Vec<Vec<NodeId>> = vec![Vec::new(); space.len()];
    for node in 0..labels.n_nodes() {
        if let Some(class) = labels.get(node) {
            per_class[class].push(node);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    for (class, nodes) in per_class.iter_mut().enumerate() {
        if nodes.len() < shots {
            return Err(Error::invalid(format!(
                "class {:?} has {} labeled node(s), need {shots}",
                space.name(class),
                nodes.len()
            )));
        }
        nodes.shuffle(&mut rng);
        train.extend_from_slice(&nodes[..shots]);
    }
    let train_set: HashSet<NodeId> = train.iter().copied().collect();
    let mut rest: Vec<NodeId> = labels
        .known_nodes()
        .into_iter()
        .filter(|v| !train_set.contains(v))
        .collect();
    if rest.len() < val_size {
        return Err(Error::invalid(format!(
            "only {} labeled node(s) left for validation, need {val_size}",
            rest.len()
        )));
    }
    rest.shuffle(&mut rng);
    let mut val: Vec<NodeId> = rest[..val_size].to_vec();
    let mut test: Vec<NodeId> = rest[val_size..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        val,
        test,
        shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space3() -> LabelSpace {
        LabelSpace::from_names(vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "1.0,2.5\n-0.5,0\n3,4\n").unwrap();
        let fm = FeatureMatrix::load(&path, 3).unwrap();
        assert_eq!(fm.n_nodes(), 3);
        assert_eq!(fm.n_features(), 2);
        assert_eq!(fm.row(1)[0], -0.5);
        let out = dir.path().join("y.csv");
        fm.save(&out).unwrap();
        let back = FeatureMatrix::load(&out, 3).unwrap();
        assert_eq!(fm, back);
    }

    #[test]
    fn features_row_count_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "1,2\n3,4\n").unwrap();
        assert!(FeatureMatrix::load(&path, 3).is_err());
    }

    #[test]
    fn features_reject_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "1,2\n3\n").unwrap();
        let err = FeatureMatrix::load(&path, 2).unwrap_err();
        assert!(err.to_string().contains(":2:"));
    }

    #[test]
    fn features_reject_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "1,NaN\n").unwrap();
        let err = FeatureMatrix::load(&path, 1).unwrap_err();
        assert!(err.to_string().contains("non-finite"));
    }

    #[test]
    fn label_space_rejects_duplicates() {
        assert!(LabelSpace::from_names(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn label_space_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("space.json");
        let space = space3();
        space.save(&path).unwrap();
        assert_eq!(LabelSpace::load(&path).unwrap(), space);
    }

    #[test]
    fn labels_load_and_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, "node_id,class_name\n0,a\n2,c\n").unwrap();
        let labels = LabelAssignment::load(&path, 4, &space3()).unwrap();
        assert_eq!(labels.get(0), Some(0));
        assert_eq!(labels.get(1), None);
        assert_eq!(labels.get(2), Some(2));
        assert_eq!(labels.known_nodes(), vec![0, 2]);
        let out = dir.path().join("out.csv");
        labels.save(&out, &space3()).unwrap();
        let back = LabelAssignment::load(&out, 4, &space3()).unwrap();
        assert_eq!(labels, back);
    }

    #[test]
    fn labels_unknown_class_names_offender() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, "0,zebra\n").unwrap();
        let err = LabelAssignment::load(&path, 1, &space3()).unwrap_err();
        assert!(err.to_string().contains("zebra"));
    }

    #[test]
    fn labels_duplicate_id_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, "0,a\n0,b\n").unwrap();
        assert!(LabelAssignment::load(&path, 1, &space3()).is_err());
    }

    #[test]
    fn texts_missing_nodes_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("texts.jsonl");
        std::fs::write(
            &path,
            "{\"node_id\":0,\"text\":\"hello\"}\n{\"node_id\":2,\"text\":\"world\"}\n",
        )
        .unwrap();
        let corpus = TextCorpus::load(&path, 4).unwrap();
        assert_eq!(corpus.text(0), "hello");
        assert_eq!(corpus.text(1), "");
        assert_eq!(corpus.missing(), &[1, 3]);
    }

    #[test]
    fn texts_round_trip() {
        let corpus = TextCorpus::from_texts(vec!["x".into(), "".into(), "z".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("texts.jsonl");
        corpus.save(&path).unwrap();
        let back = TextCorpus::load(&path, 3).unwrap();
        assert_eq!(corpus, back);
    }

    fn labeled(n: usize, classes: usize) -> LabelAssignment {
        LabelAssignment::new((0..n).map(|i| Some(i % classes)).collect())
    }

    #[test]
    fn split_has_exact_shots_per_class() {
        let labels = labeled(30, 3);
        let split = make_few_shot_split(&labels, &space3(), 4, 6, 7).unwrap();
        assert_eq!(split.train.len(), 12);
        assert_eq!(split.val.len(), 6);
        assert_eq!(split.test.len(), 12);
        for class in 0..3 {
            let count = split
                .train
                .iter()
                .filter(|&&v| labels.get(v) == Some(class))
                .count();
            assert_eq!(count, 4);
        }
        split.validate(30).unwrap();
    }

    #[test]
    fn split_is_seed_deterministic() {
        let labels = labeled(30, 3);
        let a = make_few_shot_split(&labels, &space3(), 3, 5, 11).unwrap();
        let b = make_few_shot_split(&labels, &space3(), 3, 5, 11).unwrap();
        let c = make_few_shot_split(&labels, &space3(), 3, 5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn split_errors_on_thin_class() {
        let labels = LabelAssignment::new(vec![Some(0), Some(1), Some(1), Some(2), Some(2)]);
        let err = make_few_shot_split(&labels, &space3(), 2, 0, 0).unwrap_err();
        assert!(err.to_string().contains("\"a\""));
    }

    #[test]
    fn split_round_trip_and_validation() {
        let labels = labeled(30, 3);
        let split = make_few_shot_split(&labels, &space3(), 3, 5, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.json");
        split.save(&path).unwrap();
        let back = Split::load(&path, 30).unwrap();
        assert_eq!(split, back);
        assert!(Split::load(&path, 10).is_err());
    }

    #[test]
    fn unlabeled_pool_excludes_train_and_val() {
        let split = Split {
            train: vec![0, 3],
            val: vec![5],
            test: vec![1],
            shots: 1,
        };
        assert_eq!(split.unlabeled_pool(7), vec![1, 2, 4, 6]);
    }
}
