//! Command-line interface for the co-labeling pipeline.
//!
//! Each stage subcommand reads and writes the same artifact files the
//! composite `run` command produces, so a failed run can be resumed from any
//! persisted intermediate. The `COLABEL_SEED` environment variable overrides
//! every `--seed` flag when set.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use colabel::agreement::{agreement_accuracy_bound, build_report, PredictionSet};
use colabel::data::{
    make_few_shot_split, FeatureMatrix, LabelAssignment, LabelSpace, Split, TextCorpus,
};
use colabel::influence::{influence_scores, select_top_k, Selection};
use colabel::judge::{predict_proba, propagate, train_judge, JudgeHyper, ProbMatrix};
use colabel::objectives::LossConfig;
use colabel::pipeline::{
    annotate_nodes, emit_datasets, load_annotations, load_instruct_jsonl, load_prefs_jsonl,
    render_prompts, run_pipeline, save_annotations, LlmSource, PartitionFile, PipelineConfig,
};
use colabel::prompt::PromptTemplate;
use colabel::sim::{
    bound_violation_scan, save_tau_csv, simulate, stats, tau_sweep, CorrelatedErrors, SimConfig,
};
use colabel::synthetic::{noisy_annotations, toy_tag};
use colabel::text_classifier::{train_weakly_supervised, ToyConfig};
use colabel::{Error, Graph, Result};

#[derive(Parser)]
#[command(
    name = "colabel",
    version,
    about = "Influence-guided pseudo-label selection on text-attributed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a few-shot train/val/test split from the labeled nodes.
    Split(SplitArgs),
    /// Train the graph judge and write per-node class probabilities.
    TrainJudge(TrainJudgeArgs),
    /// Rank unlabeled nodes by influence and keep the top K.
    Select(SelectArgs),
    /// Collect text-annotator labels for the selected nodes.
    Annotate(AnnotateArgs),
    /// Split annotated nodes by agreement and filter disagreements.
    Partition(PartitionArgs),
    /// Write instruction and preference datasets from a partition.
    Emit(EmitArgs),
    /// Summarize a partition against known labels.
    Report(ReportArgs),
    /// Run the noisy-annotator simulator and optional tau sweep.
    Simulate(SimulateArgs),
    /// Monte-Carlo check of the agreement-accuracy bound over a grid.
    VerifyBounds(VerifyBoundsArgs),
    /// Run every stage end to end into an output directory.
    Run(RunArgs),
    /// Generate the bundled demo dataset.
    GenToy(GenToyArgs),
    /// Train the bag-of-words classifier on emitted datasets.
    TrainText(TrainTextArgs),
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    /// Labeled nodes per class in the train split.
    #[arg(long, default_value_t = 3)]
    shots: usize,
    #[arg(long, default_value_t = 20)]
    val_size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "split.json")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainJudgeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    #[arg(long)]
    split: PathBuf,
    #[arg(long, default_value_t = 2)]
    hops: usize,
    #[arg(long, default_value_t = 0.2)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    patience: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "judge.json")]
    model_out: PathBuf,
    #[arg(long, default_value = "probs.csv")]
    probs_out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    split: PathBuf,
    /// Pseudo-label budget.
    #[arg(long, default_value_t = 1500)]
    top_k: usize,
    /// Only consider nodes within this many hops of a train node.
    #[arg(long)]
    subgraph_hops: Option<usize>,
    #[arg(long, default_value = "scores.csv")]
    scores_out: PathBuf,
    #[arg(long, default_value = "selected.json")]
    out: PathBuf,
}

#[derive(Args)]
struct LlmArgs {
    /// JSONL predictions file with one {"node_id", "label"} record per line.
    #[arg(long, value_name = "FILE")]
    llm_pred: Option<PathBuf>,
    /// Annotation endpoint URL speaking {"prompt"} -> {"label"}.
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Concurrent endpoint requests.
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 5)]
    max_attempts: u32,
    /// Response cache file for endpoint replay.
    #[arg(long, value_name = "FILE")]
    cache: Option<PathBuf>,
}

impl LlmArgs {
    fn to_source(&self) -> Result<LlmSource> {
        match (&self.llm_pred, &self.endpoint) {
            (Some(path), None) => Ok(LlmSource::File { path: path.clone() }),
            (None, Some(url)) => Ok(LlmSource::Endpoint {
                url: url.clone(),
                concurrency: self.concurrency,
                timeout_secs: self.timeout_secs,
                max_attempts: self.max_attempts,
                cache: self.cache.clone(),
            }),
            _ => Err(Error::invalid(
                "exactly one of --llm-pred or --endpoint is required",
            )),
        }
    }
}

#[derive(Args)]
struct AnnotateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    selected: PathBuf,
    #[arg(long)]
    texts: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    /// Prompt template file; built-in template when absent.
    #[arg(long)]
    template: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
    /// Fail on selected nodes without text instead of warning.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = "annotations.jsonl")]
    out: PathBuf,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    selected: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    probs: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    /// Judge-margin threshold for keeping disagreements.
    #[arg(long, default_value_t = 0.7)]
    tau: f64,
    #[arg(long, default_value = "partition.json")]
    out: PathBuf,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    texts: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = "instruct.jsonl")]
    instruct_out: PathBuf,
    #[arg(long, default_value = "prefs.jsonl")]
    prefs_out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 200_000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    classes: usize,
    #[arg(long, default_value_t = 0.8)]
    p_llm: f64,
    #[arg(long, default_value_t = 0.7)]
    p_gnn: f64,
    /// Beta parameters A,B for the confidence draw on correct judge labels.
    #[arg(long, value_parser = parse_beta, default_value = "8,2")]
    conf_correct: (f64, f64),
    #[arg(long, value_parser = parse_beta, default_value = "2,2")]
    conf_wrong: (f64, f64),
    /// Fraction of hard nodes in correlated-error mode.
    #[arg(long, requires = "accuracy_factor")]
    hard_fraction: Option<f64>,
    /// Accuracy multiplier on hard nodes.
    #[arg(long, requires = "hard_fraction")]
    accuracy_factor: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Thresholds for the disagreement-filter sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    taus: Vec<f64>,
    /// Write the tau sweep as CSV.
    #[arg(long)]
    sweep_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyBoundsArgs {
    #[arg(long, default_value_t = 7)]
    classes: usize,
    /// Simulated nodes per grid cell.
    #[arg(long, default_value_t = 100_000)]
    cell_n: usize,
    /// Annotator accuracies scanned on both axes.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.45,0.6,0.75,0.9")]
    grid: Vec<f64>,
    #[arg(long, requires = "accuracy_factor")]
    hard_fraction: Option<f64>,
    #[arg(long, requires = "hard_fraction")]
    accuracy_factor: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the scan report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    label_space: PathBuf,
    #[arg(long)]
    texts: PathBuf,
    #[arg(long, default_value_t = 3)]
    shots: usize,
    #[arg(long, default_value_t = 20)]
    val_size: usize,
    #[arg(long, default_value_t = 1500)]
    top_k: usize,
    #[arg(long, default_value_t = 0.7)]
    tau: f64,
    /// Preference-loss weight recorded for the downstream trainer.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 2)]
    hops: usize,
    #[arg(long, default_value_t = 0.2)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    patience: usize,
    #[arg(long)]
    subgraph_hops: Option<usize>,
    #[arg(long)]
    template: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmArgs,
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenToyArgs {
    #[arg(long, default_value = "toy-data")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Accuracy of the scripted text-annotator predictions.
    #[arg(long, default_value_t = 0.9)]
    llm_accuracy: f64,
}

#[derive(Args)]
struct TrainTextArgs {
    #[arg(long)]
    instruct: PathBuf,
    /// Preference JSONL; omit only with --lambda 0.
    #[arg(long)]
    prefs: Option<PathBuf>,
    #[arg(long)]
    label_space: PathBuf,
    /// Validation instruction JSONL for early stopping.
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    patience: usize,
    #[arg(long, default_value_t = 2)]
    min_freq: usize,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "toy.json")]
    model_out: PathBuf,
    #[arg(long, default_value = "curve.csv")]
    curve_out: PathBuf,
}

fn parse_beta(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected A,B, got {s:?}"))?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| format!("invalid number {a:?}"))?;
    let b = b
        .trim()
        .parse()
        .map_err(|_| format!("invalid number {b:?}"))?;
    Ok((a, b))
}

/// `COLABEL_SEED` wins over any `--seed` flag.
fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var("COLABEL_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map_err(|_| {
            Error::invalid(format!(
                "COLABEL_SEED must be a nonnegative integer, got {raw:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(Error::invalid(format!("COLABEL_SEED: {e}"))),
    }
}

fn correlated_from(
    hard_fraction: Option<f64>,
    accuracy_factor: Option<f64>,
) -> Option<CorrelatedErrors> {
    match (hard_fraction, accuracy_factor) {
        (Some(hard_fraction), Some(accuracy_factor)) => Some(CorrelatedErrors {
            hard_fraction,
            accuracy_factor,
        }),
        _ => None,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn load_template(path: &Option<PathBuf>) -> Result<PromptTemplate> {
    match path {
        Some(p) => PromptTemplate::load(p),
        None => Ok(PromptTemplate::default_template()),
    }
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let graph = Graph::load_edge_list(&args.graph)?;
    let space = LabelSpace::load(&args.label_space)?;
    let labels = LabelAssignment::load(&args.labels, graph.n_nodes(), &space)?;
    let seed = effective_seed(args.seed)?;
    let split = make_few_shot_split(&labels, &space, args.shots, args.val_size, seed)?;
    split.save(&args.out)?;
    println!(
        "split: train {} val {} test {} -> {}",
        split.train.len(),
        split.val.len(),
        split.test.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train_judge(args: TrainJudgeArgs) -> Result<()> {
    let graph = Graph::load_edge_list(&args.graph)?;
    let n = graph.n_nodes();
    let space = LabelSpace::load(&args.label_space)?;
    let labels = LabelAssignment::load(&args.labels, n, &space)?;
    let features = FeatureMatrix::load(&args.features, n)?;
    let split = Split::load(&args.split, n)?;
    let hyper = JudgeHyper {
        hops: args.hops,
        lr: args.lr,
        weight_decay: args.weight_decay,
        max_epochs: args.epochs,
        patience: args.patience,
    };
    let seed = effective_seed(args.seed)?;
    let smoothed = propagate(&features, &graph, hyper.hops)?;
    let model = train_judge(&smoothed, &labels, &split, space.len(), &hyper, seed)?;
    let probs = predict_proba(&model, &smoothed)?;
    model.save(&args.model_out)?;
    probs.save_csv(&args.probs_out)?;
    println!(
        "judge: {} features x {} classes -> {}; probabilities -> {}",
        model.n_features(),
        model.n_classes(),
        args.model_out.display(),
        args.probs_out.display()
    );
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let graph = Graph::load_edge_list(&args.graph)?;
    let n = graph.n_nodes();
    let split = Split::load(&args.split, n)?;
    let mut pool = split.unlabeled_pool(n);
    if let Some(h) = args.subgraph_hops {
        let dist = graph.multi_source_distances(&split.train);
        pool.retain(|&v| dist[v].is_some_and(|d| d <= h));
    }
    let table = influence_scores(&graph, &split.train, &pool)?;
    let selection = select_top_k(&table, args.top_k)?;
    table.save_csv(&args.scores_out)?;
    selection.save(&args.out)?;
    if selection.shortfall > 0 {
        eprintln!(
            "warning: selection shortfall {}: only {} candidate(s) reachable",
            selection.shortfall,
            selection.nodes.len()
        );
    }
    println!(
        "selected {} of {} candidate(s) -> {}",
        selection.nodes.len(),
        pool.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_annotate(args: AnnotateArgs) -> Result<()> {
    let source = args.llm.to_source()?;
    let graph = Graph::load_edge_list(&args.graph)?;
    let space = LabelSpace::load(&args.label_space)?;
    let texts = TextCorpus::load(&args.texts, graph.n_nodes())?;
    let selection = Selection::load(&args.selected)?;
    let template = load_template(&args.template)?;
    let mut warnings = Vec::new();
    let prompts = render_prompts(
        &selection.nodes,
        &texts,
        &space,
        &template,
        args.strict,
        &mut warnings,
    )?;
    let annotations = annotate_nodes(&prompts, &space, &source, &mut warnings)?;
    save_annotations(&annotations, &space, &args.out)?;
    print_warnings(&warnings);
    let parsed = annotations.iter().filter(|a| a.label.is_some()).count();
    println!(
        "annotated {} node(s), {} parsed -> {}",
        annotations.len(),
        parsed,
        args.out.display()
    );
    Ok(())
}

fn cmd_partition(args: PartitionArgs) -> Result<()> {
    let graph = Graph::load_edge_list(&args.graph)?;
    let n = graph.n_nodes();
    let space = LabelSpace::load(&args.label_space)?;
    let selection = Selection::load(&args.selected)?;
    let probs = ProbMatrix::load_csv(&args.probs, n)?;
    let annotations = load_annotations(&args.annotations, &space)?;
    let mut llm = PredictionSet::new();
    for a in &annotations {
        llm.insert(a.node, a.label);
    }
    let part = colabel::agreement::partition(&selection.nodes, &probs.argmax_labels(), &llm)?;
    let kept = colabel::agreement::filter_disagreement(&part.disagreed, &probs, args.tau)?;
    let file = PartitionFile {
        tau: args.tau,
        partition: part,
        kept,
    };
    file.save(&args.out)?;
    println!(
        "partition: agreed {} disagreed {} unparsed {} kept {} -> {}",
        file.partition.agreed.len(),
        file.partition.disagreed.len(),
        file.partition.unparsed.len(),
        file.kept.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_emit(args: EmitArgs) -> Result<()> {
    let graph = Graph::load_edge_list(&args.graph)?;
    let space = LabelSpace::load(&args.label_space)?;
    let texts = TextCorpus::load(&args.texts, graph.n_nodes())?;
    let part = PartitionFile::load(&args.partition)?;
    let template = load_template(&args.template)?;
    let mut warnings = Vec::new();
    let (instruct, prefs) =
        emit_datasets(&part, &texts, &space, &template, args.strict, &mut warnings)?;
    std::fs::write(&args.instruct_out, &instruct).map_err(|e| Error::io(&args.instruct_out, e))?;
    std::fs::write(&args.prefs_out, &prefs).map_err(|e| Error::io(&args.prefs_out, e))?;
    print_warnings(&warnings);
    println!(
        "emitted {} instruction and {} preference record(s)",
        instruct.lines().count(),
        prefs.lines().count()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let graph = Graph::load_edge_list(&args.graph)?;
    let space = LabelSpace::load(&args.label_space)?;
    let labels = LabelAssignment::load(&args.labels, graph.n_nodes(), &space)?;
    let part = PartitionFile::load(&args.partition)?;
    let report = build_report(&part.partition, &part.kept, &labels, space.len(), vec![]);
    report.save(&args.out)?;
    println!(
        "report: final {} node(s), accuracy {} (judge {}, annotator {}) -> {}",
        report.counts.final_size,
        fmt_opt(report.final_acc),
        fmt_opt(report.gnn_acc),
        fmt_opt(report.llm_acc),
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = SimConfig {
        n_nodes: args.n,
        n_classes: args.classes,
        p_llm: args.p_llm,
        p_gnn: args.p_gnn,
        conf_correct: args.conf_correct,
        conf_wrong: args.conf_wrong,
        correlated: correlated_from(args.hard_fraction, args.accuracy_factor),
        seed: effective_seed(args.seed)?,
    };
    let result = simulate(&config)?;
    let s = stats(&result);
    let bound = agreement_accuracy_bound(config.p_llm, config.p_gnn, config.n_classes)?;
    println!("nodes {} classes {}", s.n, config.n_classes);
    println!(
        "annotator accuracy: text {:.4} graph {:.4}",
        s.llm_acc(),
        s.gnn_acc()
    );
    println!(
        "agreement rate {:.4}, agreement accuracy {} (predicted {:.4})",
        s.agree as f64 / s.n as f64,
        fmt_opt(s.agree_acc()),
        bound.value
    );
    if let Some(path) = &args.sweep_out {
        let rows = tau_sweep(&result, &args.taus)?;
        save_tau_csv(&rows, path)?;
        for row in &rows {
            println!(
                "tau {:.2}: kept {} accuracy {}",
                row.tau,
                row.kept,
                fmt_opt(row.accuracy)
            );
        }
        println!("sweep -> {}", path.display());
    }
    Ok(())
}

fn cmd_verify_bounds(args: VerifyBoundsArgs) -> Result<()> {
    let report = bound_violation_scan(
        &args.grid,
        args.classes,
        args.cell_n,
        effective_seed(args.seed)?,
        correlated_from(args.hard_fraction, args.accuracy_factor),
    )?;
    for cell in &report.cells {
        let mark = if cell.violation {
            " VIOLATION"
        } else if cell.below_chance {
            " (below chance, dominance not asserted)"
        } else {
            ""
        };
        println!(
            "p_llm {:.2} p_gnn {:.2}: bound {:.4} empirical {}{}",
            cell.p_llm,
            cell.p_gnn,
            cell.bound,
            fmt_opt(cell.empirical),
            mark
        );
    }
    if let Some(path) = &args.out {
        report.save(path)?;
        println!("scan -> {}", path.display());
    }
    if report.violations > 0 {
        eprintln!("{} bound violation(s)", report.violations);
        std::process::exit(1);
    }
    println!("no bound violations over {} cell(s)", report.cells.len());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = PipelineConfig {
        graph: args.graph,
        features: args.features,
        labels: args.labels,
        label_space: args.label_space,
        texts: args.texts,
        shots: args.shots,
        val_size: args.val_size,
        top_k: args.top_k,
        tau: args.tau,
        lambda: args.lambda,
        subgraph_hops: args.subgraph_hops,
        judge: JudgeHyper {
            hops: args.hops,
            lr: args.lr,
            weight_decay: args.weight_decay,
            max_epochs: args.epochs,
            patience: args.patience,
        },
        template: args.template,
        llm: args.llm.to_source()?,
        strict_texts: args.strict,
        seed: effective_seed(args.seed)?,
    };
    let summary = run_pipeline(&config, &args.out)?;
    print_warnings(&summary.report.warnings);
    let c = &summary.report.counts;
    println!("config {}", summary.config_hash);
    println!(
        "selected {} agreed {} disagreed {} unparsed {} kept {}",
        c.selected, c.agreed, c.disagreed, c.unparsed, c.kept_disagreed
    );
    println!(
        "pseudo-label accuracy {} over {} node(s)",
        fmt_opt(summary.report.final_acc),
        c.final_size
    );
    println!(
        "wrote {} file(s) to {}",
        summary.files.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gen_toy(args: GenToyArgs) -> Result<()> {
    let seed = effective_seed(args.seed)?;
    let data = toy_tag(seed)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let path = |name: &str| args.out_dir.join(name);
    data.graph.save_edge_list(path("graph.tsv"))?;
    data.features.save(path("features.csv"))?;
    data.labels.save(path("labels.csv"), &data.space)?;
    data.space.save(path("label_space.json"))?;
    data.texts.save(path("texts.jsonl"))?;
    let preds = noisy_annotations(&data.labels, &data.space, args.llm_accuracy, seed);
    let mut out = String::new();
    for (node, label) in &preds {
        out.push_str(
            &serde_json::to_string(&serde_json::json!({ "node_id": node, "label": label }))
                .expect("serialize prediction"),
        );
        out.push('\n');
    }
    let preds_path = path("llm_preds.jsonl");
    std::fs::write(&preds_path, out).map_err(|e| Error::io(&preds_path, e))?;
    println!(
        "demo dataset: {} node(s), {} class(es) -> {}",
        data.graph.n_nodes(),
        data.space.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_train_text(args: TrainTextArgs) -> Result<()> {
    let space = LabelSpace::load(&args.label_space)?;
    let instruct = load_instruct_jsonl(&args.instruct, &space)?;
    let prefs = match &args.prefs {
        Some(path) => load_prefs_jsonl(path, &space)?,
        None => Vec::new(),
    };
    let val = match &args.val {
        Some(path) => Some(load_instruct_jsonl(path, &space)?),
        None => None,
    };
    let config = ToyConfig {
        lr: args.lr,
        epochs: args.epochs,
        patience: args.patience,
        min_freq: args.min_freq,
        loss: LossConfig {
            lambda: args.lambda,
            ..LossConfig::default()
        },
        seed: effective_seed(args.seed)?,
    };
    let (model, curve) =
        train_weakly_supervised(&instruct, &prefs, val.as_deref(), space.len(), &config)?;
    model.save(&args.model_out)?;
    curve.save_csv(&args.curve_out)?;
    let last = curve.rows.last();
    println!(
        "trained {} epoch(s), final combined loss {}, val accuracy {}",
        curve.rows.len(),
        fmt_opt(last.map(|r| r.combined)),
        fmt_opt(last.and_then(|r| r.val_acc))
    );
    println!(
        "model -> {}, curve -> {}",
        args.model_out.display(),
        args.curve_out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split(args) => cmd_split(args),
        Command::TrainJudge(args) => cmd_train_judge(args),
        Command::Select(args) => cmd_select(args),
        Command::Annotate(args) => cmd_annotate(args),
        Command::Partition(args) => cmd_partition(args),
        Command::Emit(args) => cmd_emit(args),
        Command::Report(args) => cmd_report(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::VerifyBounds(args) => cmd_verify_bounds(args),
        Command::Run(args) => cmd_run(args),
        Command::GenToy(args) => cmd_gen_toy(args),
        Command::TrainText(args) => cmd_train_text(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
