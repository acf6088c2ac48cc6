//! End-to-end pseudo-labeling pipeline and its on-disk artifacts.
//!
//! A run loads a text-attributed graph, makes a few-shot split, trains the
//! judge, selects high-influence unlabeled nodes, annotates them with a text
//! annotator, partitions by agreement, filters disagreements, and emits
//! instruction and preference datasets plus a report and a manifest. All
//! artifacts are computed in memory first and written in one final step, so
//! a failing run leaves no partial output directory behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agreement::{
    build_report, filter_disagreement, partition, Partition, PredictionSet, Report,
    ScoredDisagreement,
};
use crate::data::{make_few_shot_split, FeatureMatrix, LabelAssignment, LabelSpace, TextCorpus};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::influence::{influence_scores, select_top_k};
use crate::judge::{predict_proba, propagate, train_judge, JudgeHyper};
use crate::llm::{fetch_llm_predictions, load_predictions_file, EndpointConfig};
use crate::prompt::{parse_llm_label, PromptTemplate};
use crate::util::sha256_hex;

/// Where text-annotator responses come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LlmSource {
    /// A pre-collected JSONL predictions file.
    File { path: PathBuf },
    /// A live endpoint.
    Endpoint {
        url: String,
        concurrency: usize,
        timeout_secs: u64,
        max_attempts: u32,
        cache: Option<PathBuf>,
    },
}

/// Full configuration of one pipeline run. The manifest records the SHA-256
/// of its canonical JSON form, so any field change changes the hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub graph: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub label_space: PathBuf,
    pub texts: PathBuf,
    /// Labeled nodes per class in the train split.
    pub shots: usize,
    pub val_size: usize,
    /// Pseudo-label budget.
    pub top_k: usize,
    /// Disagreement-filter threshold.
    pub tau: f64,
    /// Preference-loss weight recorded for the downstream trainer.
    pub lambda: f64,
    /// Optional hop limit: only nodes within this distance of a train node
    /// are candidates.
    pub subgraph_hops: Option<usize>,
    pub judge: JudgeHyper,
    /// Prompt template file; the built-in template when absent.
    pub template: Option<PathBuf>,
    pub llm: LlmSource,
    /// Fail on selected nodes without text instead of warning.
    pub strict_texts: bool,
    pub seed: u64,
}

pub fn config_hash(config: &PipelineConfig) -> String {
    let canonical = serde_json::to_string(config).expect("serialize config");
    sha256_hex(canonical.as_bytes())
}

/// One annotator response: the raw body (absent when every attempt failed)
/// and the parsed class, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub node: NodeId,
    pub raw: Option<String>,
    pub label: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct AnnotationRecord {
    node_id: usize,
    raw: Option<String>,
    label: Option<String>,
}

pub fn annotations_to_jsonl(annotations: &[Annotation], space: &LabelSpace) -> String {
    let mut out = String::new();
    for a in annotations {
        let record = AnnotationRecord {
            node_id: a.node,
            raw: a.raw.clone(),
            label: a.label.map(|c| space.name(c).to_string()),
        };
        out.push_str(&serde_json::to_string(&record).expect("serialize annotation"));
        out.push('\n');
    }
    out
}

pub fn save_annotations(
    annotations: &[Annotation],
    space: &LabelSpace,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, annotations_to_jsonl(annotations, space)).map_err(|e| Error::io(path, e))
}

pub fn load_annotations(path: impl AsRef<Path>, space: &LabelSpace) -> Result<Vec<Annotation>> {
    use std::io::BufRead;
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotationRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let label = match record.label {
            None => None,
            Some(name) => Some(space.index_of(&name).ok_or_else(|| {
                Error::parse(path, lineno, format!("unknown class name {name:?}"))
            })?),
        };
        out.push(Annotation {
            node: record.node_id,
            raw: record.raw,
            label,
        });
    }
    Ok(out)
}

/// The partition artifact: threshold, agreement split, and kept
/// disagreements with their margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub tau: f64,
    pub partition: Partition,
    pub kept: Vec<ScoredDisagreement>,
}

impl PartitionFile {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("serialize partition");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PartitionFile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

/// Renders prompts for `nodes`, enforcing the missing-text policy: error in
/// strict mode, a single warning otherwise.
pub fn render_prompts(
    nodes: &[NodeId],
    texts: &TextCorpus,
    space: &LabelSpace,
    template: &PromptTemplate,
    strict: bool,
    warnings: &mut Vec<String>,
) -> Result<Vec<(NodeId, String)>> {
    let missing: Vec<NodeId> = nodes
        .iter()
        .copied()
        .filter(|&v| texts.text(v).is_empty())
        .collect();
    if !missing.is_empty() {
        let listed = missing
            .iter()
            .take(20)
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        if strict {
            return Err(Error::invalid(format!(
                "{} node(s) have no text: {listed}",
                missing.len()
            )));
        }
        warnings.push(format!(
            "{} node(s) have no text and get empty descriptions: {listed}",
            missing.len()
        ));
    }
    Ok(nodes
        .iter()
        .map(|&v| (v, template.render(texts.text(v), space)))
        .collect())
}

/// Collects annotator responses for the selected nodes.
///
/// File mode requires a response for every node and aborts listing the
/// missing ids. Endpoint mode marks exhausted nodes as unanswered and warns.
pub fn annotate_nodes(
    prompts: &[(NodeId, String)],
    space: &LabelSpace,
    source: &LlmSource,
    warnings: &mut Vec<String>,
) -> Result<Vec<Annotation>> {
    let raw: Vec<(NodeId, Option<String>)> = match source {
        LlmSource::File { path } => {
            let map = load_predictions_file(path)?;
            let missing: Vec<NodeId> = prompts
                .iter()
                .filter(|(node, _)| !map.contains_key(node))
                .map(|&(node, _)| node)
                .collect();
            if !missing.is_empty() {
                return Err(Error::MissingPredictions { nodes: missing });
            }
            prompts
                .iter()
                .map(|&(node, _)| (node, Some(map[&node].clone())))
                .collect()
        }
        LlmSource::Endpoint {
            url,
            concurrency,
            timeout_secs,
            max_attempts,
            cache,
        } => {
            let config = EndpointConfig {
                url: url.clone(),
                timeout: Duration::from_secs(*timeout_secs),
                max_attempts: *max_attempts,
                concurrency: *concurrency,
                backoff_base: Duration::from_millis(100),
                cache_path: cache.clone(),
            };
            let fetched = fetch_llm_predictions(&config, prompts)?;
            let failures = fetched.iter().filter(|(_, r)| r.is_none()).count();
            if failures > 0 {
                warnings.push(format!(
                    "{failures} endpoint request(s) failed after retries; nodes marked unparsed"
                ));
            }
            fetched
        }
    };
    Ok(raw
        .into_iter()
        .map(|(node, raw)| {
            let label = raw.as_deref().and_then(|r| parse_llm_label(r, space));
            Annotation { node, raw, label }
        })
        .collect())
}

#[derive(Serialize)]
struct InstructRecord<'a> {
    prompt: &'a str,
    completion: &'a str,
}

#[derive(Serialize)]
struct PrefRecord<'a> {
    prompt: &'a str,
    chosen: &'a str,
    rejected: &'a str,
}

/// Builds the instruction and preference JSONL datasets from a partition,
/// ordered by node id.
pub fn emit_datasets(
    part_file: &PartitionFile,
    texts: &TextCorpus,
    space: &LabelSpace,
    template: &PromptTemplate,
    strict: bool,
    warnings: &mut Vec<String>,
) -> Result<(String, String)> {
    let mut nodes: Vec<NodeId> = part_file
        .partition
        .agreed
        .iter()
        .map(|a| a.node)
        .chain(part_file.kept.iter().map(|d| d.node))
        .collect();
    nodes.sort_unstable();
    let prompts = render_prompts(&nodes, texts, space, template, strict, warnings)?;
    let prompt_of: BTreeMap<NodeId, &str> = prompts.iter().map(|(v, p)| (*v, p.as_str())).collect();

    let mut agreed_sorted = part_file.partition.agreed.clone();
    agreed_sorted.sort_by_key(|a| a.node);
    let mut instruct = String::new();
    for a in &agreed_sorted {
        let record = InstructRecord {
            prompt: prompt_of[&a.node],
            completion: space.name(a.label),
        };
        instruct.push_str(&serde_json::to_string(&record).expect("serialize record"));
        instruct.push('\n');
    }
    if part_file.partition.agreed.is_empty() {
        warnings.push("no agreed nodes; instruction dataset is empty".to_string());
    }

    let mut kept_sorted = part_file.kept.clone();
    kept_sorted.sort_by_key(|d| d.node);
    let mut prefs = String::new();
    for d in &kept_sorted {
        let record = PrefRecord {
            prompt: prompt_of[&d.node],
            chosen: space.name(d.gnn_label),
            rejected: space.name(d.llm_label),
        };
        prefs.push_str(&serde_json::to_string(&record).expect("serialize record"));
        prefs.push('\n');
    }
    Ok((instruct, prefs))
}

/// Loads an instruction JSONL dataset back as `(prompt, class)` pairs.
pub fn load_instruct_jsonl(
    path: impl AsRef<Path>,
    space: &LabelSpace,
) -> Result<Vec<(String, usize)>> {
    #[derive(Deserialize)]
    struct Record {
        prompt: String,
        completion: String,
    }
    read_jsonl(path.as_ref(), |record: Record, lineno, path| {
        let class = space.index_of(&record.completion).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("unknown class name {:?}", record.completion),
            )
        })?;
        Ok((record.prompt, class))
    })
}

/// Loads a preference JSONL dataset back as `(prompt, chosen, rejected)`.
pub fn load_prefs_jsonl(
    path: impl AsRef<Path>,
    space: &LabelSpace,
) -> Result<Vec<(String, usize, usize)>> {
    #[derive(Deserialize)]
    struct Record {
        prompt: String,
        chosen: String,
        rejected: String,
    }
    read_jsonl(path.as_ref(), |record: Record, lineno, path| {
        let chosen = space.index_of(&record.chosen).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("unknown class name {:?}", record.chosen),
            )
        })?;
        let rejected = space.index_of(&record.rejected).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("unknown class name {:?}", record.rejected),
            )
        })?;
        Ok((record.prompt, chosen, rejected))
    })
}

fn read_jsonl<T, R>(
    path: &Path,
    mut convert: impl FnMut(T, usize, &Path) -> Result<R>,
) -> Result<Vec<R>>
where
    T: serde::de::DeserializeOwned,
{
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        out.push(convert(record, lineno, path)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileStamp {
    pub lines: usize,
    pub sha256: String,
}

/// Run manifest: configuration hash, seed, record counts, and a stamp for
/// every written artifact. Contains nothing time-dependent, so reruns with
/// the same inputs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub counts: ManifestCounts,
    pub files: BTreeMap<String, FileStamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub nodes: usize,
    pub train: usize,
    pub val: usize,
    pub selected: usize,
    pub agreed: usize,
    pub disagreed: usize,
    pub unparsed: usize,
    pub kept_disagreed: usize,
    pub instruction_records: usize,
    pub preference_records: usize,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

/// What a finished run returns to the caller.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub report: Report,
    pub files: Vec<String>,
}

struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

fn json_artifact<T: Serialize>(name: &'static str, value: &T) -> Artifact {
    let mut text = serde_json::to_string_pretty(value).expect("serialize artifact");
    text.push('\n');
    Artifact {
        name,
        bytes: text.into_bytes(),
    }
}

/// Runs every stage and writes the artifact set into `out_dir`.
pub fn run_pipeline(config: &PipelineConfig, out_dir: &Path) -> Result<RunSummary> {
    let mut warnings: Vec<String> = Vec::new();

    // Load the dataset.
    let stage = |name: &'static str| move |e: Error| e.in_stage(name);
    let graph = Graph::load_edge_list(&config.graph).map_err(stage("load"))?;
    let n = graph.n_nodes();
    let space = LabelSpace::load(&config.label_space).map_err(stage("load"))?;
    let labels = LabelAssignment::load(&config.labels, n, &space).map_err(stage("load"))?;
    let features = FeatureMatrix::load(&config.features, n).map_err(stage("load"))?;
    let texts = TextCorpus::load(&config.texts, n).map_err(stage("load"))?;
    let template = match &config.template {
        Some(path) => PromptTemplate::load(path).map_err(stage("load"))?,
        None => PromptTemplate::default_template(),
    };

    // Split.
    let split = make_few_shot_split(&labels, &space, config.shots, config.val_size, config.seed)
        .map_err(stage("split"))?;

    // Train the judge and score every node.
    let smoothed = propagate(&features, &graph, config.judge.hops).map_err(stage("train-judge"))?;
    let model = train_judge(
        &smoothed,
        &labels,
        &split,
        space.len(),
        &config.judge,
        config.seed,
    )
    .map_err(stage("train-judge"))?;
    let probs = predict_proba(&model, &smoothed).map_err(stage("train-judge"))?;

    // Select pseudo-label candidates.
    let mut pool = split.unlabeled_pool(n);
    if let Some(h) = config.subgraph_hops {
        let dist = graph.multi_source_distances(&split.train);
        pool.retain(|&v| dist[v].is_some_and(|d| d <= h));
    }
    let table = influence_scores(&graph, &split.train, &pool).map_err(stage("select"))?;
    let selection = select_top_k(&table, config.top_k).map_err(stage("select"))?;
    if selection.shortfall > 0 {
        warnings.push(format!(
            "selection shortfall: requested {} node(s), only {} had positive influence",
            config.top_k,
            selection.nodes.len()
        ));
    }

    // Annotate.
    let prompts = render_prompts(
        &selection.nodes,
        &texts,
        &space,
        &template,
        config.strict_texts,
        &mut warnings,
    )
    .map_err(stage("annotate"))?;
    let annotations =
        annotate_nodes(&prompts, &space, &config.llm, &mut warnings).map_err(stage("annotate"))?;

    // Partition and filter.
    let gnn_labels = probs.argmax_labels();
    let mut llm_preds = PredictionSet::new();
    for a in &annotations {
        llm_preds.insert(a.node, a.label);
    }
    let part = partition(&selection.nodes, &gnn_labels, &llm_preds).map_err(stage("partition"))?;
    let kept =
        filter_disagreement(&part.disagreed, &probs, config.tau).map_err(stage("partition"))?;
    let part_file = PartitionFile {
        tau: config.tau,
        partition: part,
        kept,
    };

    // Emit datasets.
    let (instruct, prefs) = emit_datasets(
        &part_file,
        &texts,
        &space,
        &template,
        config.strict_texts,
        &mut warnings,
    )
    .map_err(stage("emit"))?;

    // Report.
    let report = build_report(
        &part_file.partition,
        &part_file.kept,
        &labels,
        space.len(),
        warnings.clone(),
    );

    // Serialize everything, then write in one pass.
    let hash = config_hash(config);
    let mut artifacts = vec![
        json_artifact("split.json", &split),
        Artifact {
            name: "judge.json",
            bytes: model.to_json().into_bytes(),
        },
        Artifact {
            name: "probs.csv",
            bytes: probs.to_csv_string().into_bytes(),
        },
        Artifact {
            name: "scores.csv",
            bytes: table.to_csv_string().into_bytes(),
        },
        json_artifact("selected.json", &selection),
        Artifact {
            name: "annotations.jsonl",
            bytes: annotations_to_jsonl(&annotations, &space).into_bytes(),
        },
        json_artifact("partition.json", &part_file),
        json_artifact("report.json", &report),
        Artifact {
            name: "instruct.jsonl",
            bytes: instruct.into_bytes(),
        },
        Artifact {
            name: "prefs.jsonl",
            bytes: prefs.into_bytes(),
        },
    ];
    let counts = ManifestCounts {
        nodes: n,
        train: split.train.len(),
        val: split.val.len(),
        selected: selection.nodes.len(),
        agreed: part_file.partition.agreed.len(),
        disagreed: part_file.partition.disagreed.len(),
        unparsed: part_file.partition.unparsed.len(),
        kept_disagreed: part_file.kept.len(),
        instruction_records: part_file.partition.agreed.len(),
        preference_records: part_file.kept.len(),
    };
    let manifest = Manifest {
        config_hash: hash.clone(),
        seed: config.seed,
        counts,
        files: artifacts
            .iter()
            .map(|a| {
                (
                    a.name.to_string(),
                    FileStamp {
                        lines: a.bytes.iter().filter(|&&b| b == b'\n').count(),
                        sha256: sha256_hex(&a.bytes),
                    },
                )
            })
            .collect(),
    };
    artifacts.push(json_artifact("manifest.json", &manifest));

    write_artifacts(out_dir, &artifacts).map_err(stage("write"))?;
    Ok(RunSummary {
        config_hash: hash,
        report,
        files: artifacts.iter().map(|a| a.name.to_string()).collect(),
    })
}

/// Writes all artifacts; on any failure, removes what was written this call.
fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for artifact in artifacts {
        let path = out_dir.join(artifact.name);
        match std::fs::write(&path, &artifact.bytes) {
            Ok(()) => written.push(path),
            Err(e) => {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(Error::io(path, e));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::AgreedNode;

    fn space() -> LabelSpace {
        LabelSpace::from_names(vec!["alpha".into(), "beta".into()]).unwrap()
    }

    #[test]
    fn annotations_round_trip() {
        let sp = space();
        let annotations = vec![
            Annotation {
                node: 1,
                raw: Some("alpha".into()),
                label: Some(0),
            },
            Annotation {
                node: 2,
                raw: Some("gibberish".into()),
                label: None,
            },
            Annotation {
                node: 3,
                raw: None,
                label: None,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.jsonl");
        save_annotations(&annotations, &sp, &path).unwrap();
        let back = load_annotations(&path, &sp).unwrap();
        assert_eq!(back, annotations);
    }

    #[test]
    fn partition_file_round_trip() {
        let pf = PartitionFile {
            tau: 0.7,
            partition: Partition {
                agreed: vec![AgreedNode { node: 1, label: 0 }],
                disagreed: vec![],
                unparsed: vec![2],
            },
            kept: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("partition.json");
        pf.save(&path).unwrap();
        assert_eq!(PartitionFile::load(&path).unwrap(), pf);
    }

    #[test]
    fn config_hash_changes_with_any_field() {
        let base = PipelineConfig {
            graph: "g.tsv".into(),
            features: "x.csv".into(),
            labels: "y.csv".into(),
            label_space: "space.json".into(),
            texts: "texts.jsonl".into(),
            shots: 5,
            val_size: 20,
            top_k: 50,
            tau: 0.7,
            lambda: 0.1,
            subgraph_hops: None,
            judge: JudgeHyper::default(),
            template: None,
            llm: LlmSource::File {
                path: "preds.jsonl".into(),
            },
            strict_texts: false,
            seed: 42,
        };
        let h0 = config_hash(&base);
        assert_eq!(h0, config_hash(&base.clone()));
        let mut changed = base.clone();
        changed.tau = 0.8;
        assert_ne!(h0, config_hash(&changed));
        let mut changed = base.clone();
        changed.seed = 43;
        assert_ne!(h0, config_hash(&changed));
        let mut changed = base;
        changed.llm = LlmSource::Endpoint {
            url: "http://localhost:1".into(),
            concurrency: 4,
            timeout_secs: 30,
            max_attempts: 5,
            cache: None,
        };
        assert_ne!(h0, config_hash(&changed));
    }

    #[test]
    fn emit_orders_by_node_and_respects_strict_mode() {
        let sp = space();
        let texts = TextCorpus::from_texts(vec![
            "".into(),
            "doc one".into(),
            "doc two".into(),
            "doc three".into(),
        ]);
        let pf = PartitionFile {
            tau: 0.5,
            partition: Partition {
                agreed: vec![
                    AgreedNode { node: 3, label: 1 },
                    AgreedNode { node: 1, label: 0 },
                ],
                disagreed: vec![],
                unparsed: vec![],
            },
            kept: vec![ScoredDisagreement {
                node: 2,
                gnn_label: 0,
                llm_label: 1,
                score: 0.9,
            }],
        };
        let template = PromptTemplate::new("say {text}").unwrap();
        let mut warnings = Vec::new();
        let (instruct, prefs) =
            emit_datasets(&pf, &texts, &sp, &template, false, &mut warnings).unwrap();
        let lines: Vec<&str> = instruct.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("doc one"));
        assert!(lines[1].contains("doc three"));
        assert!(prefs.contains("doc two"));
        assert!(prefs.contains("\"chosen\":\"alpha\""));
        assert!(prefs.contains("\"rejected\":\"beta\""));

        // Strict mode rejects a missing text among emitted nodes.
        let pf_missing = PartitionFile {
            tau: 0.5,
            partition: Partition {
                agreed: vec![AgreedNode { node: 0, label: 0 }],
                disagreed: vec![],
                unparsed: vec![],
            },
            kept: vec![],
        };
        let mut warnings = Vec::new();
        assert!(emit_datasets(&pf_missing, &texts, &sp, &template, true, &mut warnings).is_err());
        let mut warnings = Vec::new();
        let (out, _) =
            emit_datasets(&pf_missing, &texts, &sp, &template, false, &mut warnings).unwrap();
        assert!(!out.is_empty());
        assert!(!warnings.is_empty());
    }

    #[test]
    fn emitted_datasets_load_back() {
        let sp = space();
        let texts = TextCorpus::from_texts(vec!["a b".into(), "c d".into()]);
        let pf = PartitionFile {
            tau: 0.5,
            partition: Partition {
                agreed: vec![AgreedNode { node: 0, label: 1 }],
                disagreed: vec![],
                unparsed: vec![],
            },
            kept: vec![ScoredDisagreement {
                node: 1,
                gnn_label: 1,
                llm_label: 0,
                score: 0.8,
            }],
        };
        let template = PromptTemplate::new("{text}").unwrap();
        let mut warnings = Vec::new();
        let (instruct, prefs) =
            emit_datasets(&pf, &texts, &sp, &template, true, &mut warnings).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let ipath = dir.path().join("instruct.jsonl");
        let ppath = dir.path().join("prefs.jsonl");
        std::fs::write(&ipath, instruct).unwrap();
        std::fs::write(&ppath, prefs).unwrap();
        assert_eq!(
            load_instruct_jsonl(&ipath, &sp).unwrap(),
            vec![("a b".to_string(), 1)]
        );
        assert_eq!(
            load_prefs_jsonl(&ppath, &sp).unwrap(),
            vec![("c d".to_string(), 1, 0)]
        );
    }

    #[test]
    fn file_source_requires_full_coverage() {
        let sp = space();
        let dir = tempfile::tempdir().unwrap();
        let preds = dir.path().join("preds.jsonl");
        std::fs::write(&preds, "{\"node_id\":0,\"label\":\"alpha\"}\n").unwrap();
        let prompts = vec![(0usize, "p0".to_string()), (5usize, "p5".to_string())];
        let mut warnings = Vec::new();
        let source = LlmSource::File { path: preds };
        match annotate_nodes(&prompts, &sp, &source, &mut warnings) {
            Err(Error::MissingPredictions { nodes }) => assert_eq!(nodes, vec![5]),
            other => panic!("expected missing predictions, got {other:?}"),
        }
    }

    #[test]
    fn file_source_parses_labels() {
        let sp = space();
        let dir = tempfile::tempdir().unwrap();
        let preds = dir.path().join("preds.jsonl");
        std::fs::write(
            &preds,
            "{\"node_id\":0,\"label\":\"alpha\"}\n{\"node_id\":1,\"label\":\"the class is beta\"}\n{\"node_id\":2,\"label\":\"???\"}\n",
        )
        .unwrap();
        let prompts: Vec<(NodeId, String)> = (0..3).map(|i| (i, format!("p{i}"))).collect();
        let mut warnings = Vec::new();
        let source = LlmSource::File { path: preds };
        let anns = annotate_nodes(&prompts, &sp, &source, &mut warnings).unwrap();
        assert_eq!(anns[0].label, Some(0));
        assert_eq!(anns[1].label, Some(1));
        assert_eq!(anns[2].label, None);
        assert_eq!(anns[2].raw.as_deref(), Some("???"));
    }
}
