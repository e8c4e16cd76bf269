//! End-to-end runs: ingestion, split, walks, training, diffusion,
//! explanations, and evaluation, with every artifact written to disk.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::encodings::{load_walks, sample_signed_walks, save_walks, WalkSet};
use crate::error::{Error, Result};
use crate::explain::{
    explain_edges, ground_truth_explanations, precision_at_k, write_explanations, DecoderConfig,
    EdgeDecoder, ExplainedPrediction, MedianDecoder,
};
use crate::graph::{generate_balanced_graph, load_edge_list, split_edges, EdgeSplit, Sign, SignedEdge, SignedGraph};
use crate::model::{load_checkpoint, save_checkpoint, ModelParams};
use crate::srwr::{build_diffusion_matrix, read_diffusion, write_diffusion, DiffusionMatrix};
use crate::training::{predict_pair_sign, train, PairLabel, TrainOutput};
use crate::transformer::{encode, EncoderInputs};

/// Environment variable naming a directory for the walk cache.
pub const CACHE_DIR_ENV: &str = "SESG_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Split,
    Walks,
    Train,
    Srwr,
    Explain,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Split,
        Stage::Walks,
        Stage::Train,
        Stage::Srwr,
        Stage::Explain,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Split => "split",
            Stage::Walks => "walks",
            Stage::Train => "train",
            Stage::Srwr => "srwr",
            Stage::Explain => "explain",
            Stage::Eval => "eval",
        }
    }

    pub fn parse(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Stage>> {
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(Stage::parse)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Stages to run; `None` runs all of them.
    pub stages: Option<BTreeSet<Stage>>,
    /// Overrides [`CACHE_DIR_ENV`].
    pub cache_dir: Option<PathBuf>,
}

impl RunOptions {
    fn wants(&self, s: Stage) -> bool {
        self.stages.as_ref().is_none_or(|set| set.contains(&s))
    }
}

/// Paths of every artifact a run can write under `out_dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub split_dir: PathBuf,
    pub walks: PathBuf,
    pub checkpoint: PathBuf,
    pub loss: PathBuf,
    pub diffusion: PathBuf,
    pub explanations: PathBuf,
    pub predictions: PathBuf,
    pub report: PathBuf,
    pub report_text: PathBuf,
    pub timing: PathBuf,
}

impl Artifacts {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            split_dir: out_dir.join("split"),
            walks: out_dir.join("walks.bin"),
            checkpoint: out_dir.join("checkpoint.bin"),
            loss: out_dir.join("loss.csv"),
            diffusion: out_dir.join("diffusion.tsv"),
            explanations: out_dir.join("explanations.jsonl"),
            predictions: out_dir.join("predictions.tsv"),
            report: out_dir.join("report.json"),
            report_text: out_dir.join("report.txt"),
            timing: out_dir.join("timing.json"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
}

impl SignCounts {
    fn add(&mut self, s: Sign) {
        match s {
            Sign::Positive => self.positive += 1,
            Sign::Negative => self.negative += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignRates {
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub nodes: usize,
    pub edges: usize,
    pub positive: usize,
    pub negative: usize,
    pub train_edges: usize,
    pub test_edges: usize,
}

/// Accuracy counts for any decoder over labeled edges.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignMetrics {
    pub accuracy: f64,
    pub test: SignCounts,
    pub predicted: SignCounts,
    pub correct: SignCounts,
    /// Per-class recall; zero for a class absent from the test edges.
    pub recall: SignRates,
}

impl SignMetrics {
    pub fn from_predictions(truth: &[Sign], predicted: &[Sign]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::InvalidParameter("no test edges to evaluate".into()));
        }
        let mut m = SignMetrics::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            m.test.add(t);
            m.predicted.add(p);
            if t == p {
                m.correct.add(t);
            }
        }
        let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        m.accuracy = rate(m.correct.total(), m.test.total());
        m.recall = SignRates {
            positive: rate(m.correct.positive, m.test.positive),
            negative: rate(m.correct.negative, m.test.negative),
        };
        Ok(m)
    }
}

/// Runs `decoder` over every test edge.
pub fn evaluate_decoder(decoder: &dyn EdgeDecoder, test: &[SignedEdge]) -> Result<SignMetrics> {
    let predicted = test
        .iter()
        .map(|e| decoder.predict(e.src, e.dst))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<Sign> = test.iter().map(|e| e.sign).collect();
    SignMetrics::from_predictions(&truth, &predicted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub accuracy: f64,
    pub precision_at_k: f64,
    pub k: usize,
    pub test: SignCounts,
    pub predicted: SignCounts,
    pub correct: SignCounts,
    pub recall: SignRates,
    /// Predictions that fell back to the majority sign.
    pub degenerate: usize,
    pub ties: usize,
    /// Accuracy of the training classifier head on the same edges.
    pub classifier_accuracy: f64,
    pub epochs: usize,
    pub final_loss: Option<f64>,
    pub diffusion: SignCounts,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text_table(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "{:<24}{:>12}", "metric", "value");
        let mut row = |k: &str, v: String| {
            let _ = writeln!(t, "{k:<24}{v:>12}");
        };
        row("accuracy", format!("{:.4}", self.accuracy));
        row(&format!("precision@{}", self.k), format!("{:.4}", self.precision_at_k));
        row("recall(+)", format!("{:.4}", self.recall.positive));
        row("recall(-)", format!("{:.4}", self.recall.negative));
        row("classifier accuracy", format!("{:.4}", self.classifier_accuracy));
        row("test edges", self.test.total().to_string());
        row("degenerate", self.degenerate.to_string());
        row("epochs", self.epochs.to_string());
        row("config hash", self.config_hash.clone());
        t
    }
}

/// Inputs shared by every evaluation call.
pub struct EvalContext<'a> {
    pub train_graph: &'a SignedGraph,
    pub test: &'a [SignedEdge],
    pub z: ArrayView2<'a, f64>,
    /// Reference embeddings that define the ground-truth neighbor sets.
    pub z_ref: ArrayView2<'a, f64>,
    pub classifier: &'a Array2<f64>,
    pub diffusion: Option<&'a DiffusionMatrix>,
    pub decoder: DecoderConfig,
}

/// Majority sign of the training edges, `+` on a tie.
pub fn majority_sign(g: &SignedGraph) -> Sign {
    if g.num_neg() > g.num_pos() {
        Sign::Negative
    } else {
        Sign::Positive
    }
}

/// Decoder predictions plus their accuracy and explanation precision.
pub fn evaluate(ctx: &EvalContext) -> Result<(Vec<ExplainedPrediction>, SignMetrics, f64, f64)> {
    if ctx.test.is_empty() {
        return Err(Error::InvalidParameter("test split is empty".into()));
    }
    let queries: Vec<(usize, usize)> = ctx.test.iter().map(|e| (e.src, e.dst)).collect();
    let majority = majority_sign(ctx.train_graph);
    let preds = explain_edges(&queries, ctx.z, ctx.train_graph, ctx.diffusion, &ctx.decoder, majority)?;
    let truth: Vec<Sign> = ctx.test.iter().map(|e| e.sign).collect();
    let metrics = SignMetrics::from_predictions(&truth, &preds.iter().map(|p| p.predicted_sign).collect::<Vec<_>>())?;

    let gt = ground_truth_explanations(ctx.z_ref, ctx.decoder.k)?;
    let mut seen = BTreeSet::new();
    let mut predicted_sets = Vec::new();
    let mut truth_sets = Vec::new();
    for p in &preds {
        if seen.insert(p.i) {
            predicted_sets.push((p.context.pos_ids(), p.context.neg_ids()));
            truth_sets.push(gt[p.i].clone());
        }
    }
    let precision = precision_at_k(&predicted_sets, &truth_sets, ctx.decoder.k);

    let head: Vec<Sign> = ctx
        .test
        .iter()
        .map(|e| match predict_pair_sign(ctx.z, ctx.classifier, e.src, e.dst) {
            PairLabel::Negative => Sign::Negative,
            _ => Sign::Positive,
        })
        .collect();
    let head_acc = SignMetrics::from_predictions(&truth, &head)?.accuracy;
    Ok((preds, metrics, precision, head_acc))
}

/// Loads or generates the configured graph.
pub fn load_dataset(cfg: &Config) -> Result<SignedGraph> {
    if cfg.is_synthetic() {
        generate_balanced_graph(&cfg.synthetic_config())
    } else {
        let path = Path::new(&cfg.dataset);
        if !path.exists() {
            return Err(Error::InvalidParameter(format!(
                "dataset {} does not exist",
                path.display()
            )));
        }
        load_edge_list(path, cfg.load_options())
    }
}

fn walk_cache_path(cfg: &Config, train_graph: &SignedGraph, opts: &RunOptions, art: &Artifacts) -> PathBuf {
    let dir = opts
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from));
    match dir {
        Some(d) => {
            let w = cfg.walk_config();
            d.join(format!(
                "walks-{}-{}-{}-{}-{}.bin",
                &train_graph.fingerprint()[..16],
                w.num_walks,
                w.walk_length,
                w.max_path_length,
                w.seed
            ))
        }
        None => art.walks.clone(),
    }
}

/// Returns cached walks when they match, otherwise samples and caches them.
pub fn walks_with_cache(cfg: &Config, train_graph: &SignedGraph, path: &Path) -> Result<WalkSet> {
    let fp = train_graph.fingerprint();
    let wc = cfg.walk_config();
    if path.exists() {
        if let Ok(Some(w)) = load_walks(path, &fp, &wc) {
            return Ok(w);
        }
    }
    let walks = sample_signed_walks(train_graph, &wc)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    save_walks(path, &walks, &fp)?;
    Ok(walks)
}

fn write_loss_csv(path: &Path, trace: &[f64]) -> Result<()> {
    let mut s = String::from("epoch,loss\n");
    for (e, l) in trace.iter().enumerate() {
        let _ = writeln!(s, "{e},{l}");
    }
    fs::write(path, s)?;
    Ok(())
}

fn read_loss_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format(format!("bad loss line {l:?}")))
        })
        .collect()
}

fn write_predictions(path: &Path, preds: &[ExplainedPrediction], test: &[SignedEdge], g: &SignedGraph) -> Result<()> {
    let mut s = String::from("src\tdst\tsign\tpredicted\td_ij\tdegenerate\n");
    for (p, e) in preds.iter().zip(test) {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            g.original_id(p.i),
            g.original_id(p.j),
            e.sign.value(),
            p.predicted_sign.value(),
            p.d_ij,
            p.degenerate
        );
    }
    fs::write(path, s)?;
    Ok(())
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config_hash: String,
    pub report: Option<EvalReport>,
    pub written: Vec<PathBuf>,
    /// Seconds per stage, in execution order.
    pub timings: Vec<(String, f64)>,
}

struct Timer {
    timings: Vec<(String, f64)>,
}

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(name));
        self.timings.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Runs the selected stages, loading the outputs of skipped stages from
/// `out_dir` when a later stage needs them. Errors are tagged with the stage
/// that failed; artifacts written before the failure stay on disk.
pub fn run_pipeline(cfg: &Config, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    let out = cfg.out_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::from(e).in_stage("setup"))?;
    let art = Artifacts::new(&out);
    let mut written = Vec::new();
    let mut timer = Timer { timings: Vec::new() };

    let graph = timer.time("ingest", || load_dataset(cfg))?;

    let split = timer.time("split", || {
        // the split is cheap and seed-determined, so a missing one is rebuilt
        if opts.wants(Stage::Split) || !art.split_dir.join("manifest.json").exists() {
            let s = split_edges(&graph, cfg.ratio, cfg.seed)?;
            s.save(&art.split_dir, &graph)?;
            written.push(art.split_dir.clone());
            Ok(s)
        } else {
            EdgeSplit::load(&art.split_dir, &graph)
        }
    })?;
    let train_graph = split.train_graph(&graph).map_err(|e| e.in_stage("split"))?;

    let needs_model = [Stage::Train, Stage::Explain, Stage::Eval]
        .iter()
        .any(|&s| opts.wants(s));
    let inputs = if opts.wants(Stage::Walks) || needs_model {
        let path = walk_cache_path(cfg, &train_graph, opts, &art);
        Some(timer.time("walks", || {
            let walks = walks_with_cache(cfg, &train_graph, &path)?;
            if opts.wants(Stage::Walks) {
                written.push(path.clone());
            }
            EncoderInputs::from_walks(&train_graph, &cfg.dims(), &walks)
        })?)
    } else {
        None
    };

    let mut trained: Option<(ModelParams, Vec<f64>)> = None;
    if opts.wants(Stage::Train) {
        let inputs = inputs.as_ref().expect("inputs prepared");
        let result = timer.time("train", || match train(&train_graph, inputs, &cfg.train_config()) {
            Ok(TrainOutput { params, trace, .. }) => {
                save_checkpoint(&art.checkpoint, &params, &hash)?;
                write_loss_csv(&art.loss, &trace)?;
                Ok((params, trace))
            }
            Err(Error::Diverged { epoch, last_good }) => {
                save_checkpoint(&art.checkpoint, &last_good, &hash)?;
                Err(Error::Diverged { epoch, last_good })
            }
            Err(e) => Err(e),
        })?;
        written.push(art.checkpoint.clone());
        written.push(art.loss.clone());
        trained = Some(result);
    }

    let mut diffusion = None;
    if opts.wants(Stage::Srwr) {
        let s = timer.time("srwr", || {
            let s = build_diffusion_matrix(&train_graph.mirrored()?, &cfg.srwr_config())?;
            write_diffusion(&art.diffusion, &s, &hash)?;
            Ok(s)
        })?;
        written.push(art.diffusion.clone());
        diffusion = Some(s);
    }

    let wants_eval = opts.wants(Stage::Explain) || opts.wants(Stage::Eval);
    if !wants_eval {
        return Ok(RunSummary {
            config_hash: hash,
            report: None,
            written,
            timings: timer.timings,
        });
    }

    let (params, trace) = match trained {
        Some(t) => t,
        None => timer.time("train", || {
            let (params, stored) = load_checkpoint(&art.checkpoint)?;
            if stored != hash {
                return Err(Error::Format(format!(
                    "checkpoint was written for config {stored}, current config is {hash}"
                )));
            }
            let trace = if art.loss.exists() { read_loss_csv(&art.loss)? } else { Vec::new() };
            Ok((params, trace))
        })?,
    };
    if cfg.use_diffusion && diffusion.is_none() {
        diffusion = Some(timer.time("srwr", || {
            let (s, stored) = read_diffusion(&art.diffusion)?;
            if stored != hash {
                return Err(Error::Format(format!(
                    "diffusion matrix was written for config {stored}, current config is {hash}"
                )));
            }
            Ok(s)
        })?);
    }
    let diffusion = if cfg.use_diffusion { diffusion } else { None };

    let inputs = inputs.expect("inputs prepared");
    let report = timer.time("eval", || {
        let z = encode(&params, &inputs, &cfg.encoder_options())?;
        let ctx = EvalContext {
            train_graph: &train_graph,
            test: &split.test,
            z: z.view(),
            z_ref: inputs.x.view(),
            classifier: &params.classifier,
            diffusion: diffusion.as_ref(),
            decoder: cfg.decoder_config(),
        };
        let (preds, metrics, precision, head_acc) = evaluate(&ctx)?;
        if opts.wants(Stage::Explain) {
            let mut buf = Vec::new();
            write_explanations(&mut buf, &preds, &graph)?;
            fs::write(&art.explanations, buf)?;
            write_predictions(&art.predictions, &preds, &split.test, &graph)?;
        }
        let report = EvalReport {
            config_hash: hash.clone(),
            seed: cfg.seed,
            dataset: DatasetSummary {
                nodes: graph.num_nodes(),
                edges: graph.num_edges(),
                positive: graph.num_pos(),
                negative: graph.num_neg(),
                train_edges: split.train.len(),
                test_edges: split.test.len(),
            },
            accuracy: metrics.accuracy,
            precision_at_k: precision,
            k: cfg.k,
            test: metrics.test,
            predicted: metrics.predicted,
            correct: metrics.correct,
            recall: metrics.recall,
            degenerate: preds.iter().filter(|p| p.degenerate).count(),
            ties: preds.iter().filter(|p| p.tie).count(),
            classifier_accuracy: head_acc,
            epochs: trace.len(),
            final_loss: trace.last().copied(),
            diffusion: SignCounts {
                positive: diffusion.as_ref().map_or(0, |s| s.count(Sign::Positive)),
                negative: diffusion.as_ref().map_or(0, |s| s.count(Sign::Negative)),
            },
        };
        if opts.wants(Stage::Eval) {
            fs::write(&art.report, report.to_json())?;
            if cfg.text_report {
                fs::write(&art.report_text, report.to_text_table())?;
            }
        }
        Ok(report)
    })?;
    if opts.wants(Stage::Explain) {
        written.push(art.explanations.clone());
        written.push(art.predictions.clone());
    }
    if opts.wants(Stage::Eval) {
        written.push(art.report.clone());
    }

    let timing: serde_json::Map<String, serde_json::Value> = timer
        .timings
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::json!(v)))
        .collect();
    fs::write(&art.timing, serde_json::to_string_pretty(&timing)?)?;

    Ok(RunSummary {
        config_hash: hash,
        report: Some(report),
        written,
        timings: timer.timings,
    })
}

/// A trained model reloaded from `out_dir`, ready to answer sign queries.
pub struct TrainedState {
    pub graph: SignedGraph,
    pub split: EdgeSplit,
    pub train_graph: SignedGraph,
    pub z: Array2<f64>,
    pub diffusion: Option<DiffusionMatrix>,
    pub decoder: DecoderConfig,
}

impl TrainedState {
    /// Reloads the split, checkpoint and diffusion matrix written by an
    /// earlier run of the same config.
    pub fn load(cfg: &Config, opts: &RunOptions) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash();
        let art = Artifacts::new(&cfg.out_dir);
        let graph = load_dataset(cfg).map_err(|e| e.in_stage("ingest"))?;
        let split = EdgeSplit::load(&art.split_dir, &graph).map_err(|e| e.in_stage("split"))?;
        let train_graph = split.train_graph(&graph).map_err(|e| e.in_stage("split"))?;
        let inputs = (|| {
            let walks = walks_with_cache(cfg, &train_graph, &walk_cache_path(cfg, &train_graph, opts, &art))?;
            EncoderInputs::from_walks(&train_graph, &cfg.dims(), &walks)
        })()
        .map_err(|e| e.in_stage("walks"))?;
        let z = (|| {
            let (params, stored) = load_checkpoint(&art.checkpoint)?;
            if stored != hash {
                return Err(Error::Format(format!(
                    "checkpoint was written for config {stored}, current config is {hash}"
                )));
            }
            encode(&params, &inputs, &cfg.encoder_options())
        })()
        .map_err(|e| e.in_stage("train"))?;
        let diffusion = if cfg.use_diffusion {
            let (s, stored) = read_diffusion(&art.diffusion).map_err(|e| e.in_stage("srwr"))?;
            if stored != hash {
                return Err(Error::Format(format!(
                    "diffusion matrix was written for config {stored}, current config is {hash}"
                ))
                .in_stage("srwr"));
            }
            Some(s)
        } else {
            None
        };
        Ok(Self {
            graph,
            split,
            train_graph,
            z,
            diffusion,
            decoder: cfg.decoder_config(),
        })
    }

    pub fn decoder(&self) -> MedianDecoder<'_> {
        MedianDecoder {
            z: self.z.view(),
            graph: &self.train_graph,
            diffusion: self.diffusion.as_ref(),
            config: self.decoder,
            majority: majority_sign(&self.train_graph),
        }
    }

    /// Explained predictions for pairs given in original node ids.
    pub fn predict_original(&self, pairs: &[(u64, u64)]) -> Result<Vec<ExplainedPrediction>> {
        let lookup: std::collections::HashMap<u64, usize> = (0..self.graph.num_nodes())
            .map(|i| (self.graph.original_id(i), i))
            .collect();
        let queries = pairs
            .iter()
            .map(|&(a, b)| match (lookup.get(&a), lookup.get(&b)) {
                (Some(&i), Some(&j)) => Ok((i, j)),
                _ => Err(Error::InvalidParameter(format!("unknown node in pair ({a}, {b})"))),
            })
            .collect::<Result<Vec<_>>>()?;
        explain_edges(
            &queries,
            self.z.view(),
            &self.train_graph,
            self.diffusion.as_ref(),
            &self.decoder,
            majority_sign(&self.train_graph),
        )
    }
}

/// Accuracy with and without the adjacency attention bias, per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub with_adjacency: Vec<f64>,
    pub without_adjacency: Vec<f64>,
    pub mean_with: f64,
    pub mean_without: f64,
    /// Removing the bias lowered mean accuracy.
    pub removal_hurts: bool,
}

/// Runs the full pipeline in `scratch` once per seed with the adjacency bias
/// on and off.
pub fn run_adjacency_ablation(cfg: &Config, seeds: &[u64], scratch: &Path) -> Result<AblationReport> {
    let mut with = Vec::new();
    let mut without = Vec::new();
    for &seed in seeds {
        for (flag, out) in [(true, &mut with), (false, &mut without)] {
            let mut c = cfg.clone();
            c.seed = seed;
            c.use_adjacency_bias = flag;
            c.out_dir = scratch.join(format!("seed{seed}-{}", if flag { "with" } else { "without" }));
            let r = run_pipeline(&c, &RunOptions::default())?;
            out.push(r.report.expect("eval ran").accuracy);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (mean_with, mean_without) = (mean(&with), mean(&without));
    Ok(AblationReport {
        seeds: seeds.to_vec(),
        with_adjacency: with,
        without_adjacency: without,
        mean_with,
        mean_without,
        removal_hurts: mean_without < mean_with,
    })
}
