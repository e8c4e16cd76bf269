//! `sesg` command-line front end.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sesg_core::config::Config;
use sesg_core::expressivity::{compare_encodings, default_walk_steps};
use sesg_core::graph::{generate_balanced_graph, load_edge_list, write_edge_list, LoadOptions};
use sesg_core::pipeline::{run_adjacency_ablation, run_pipeline, RunOptions, Stage, TrainedState};
use sesg_core::Error;

#[derive(Parser, Debug)]
#[command(name = "sesg", version, about = "Signed-graph transformer with explainable sign prediction")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Edge list path or "synthetic".
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Walks per node.
    #[arg(long)]
    walks: Option<usize>,
    #[arg(long)]
    walk_len: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Also write report.txt.
    #[arg(long)]
    text_report: bool,
    /// Directory for cached walks.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(d) = &self.dataset {
            cfg.dataset = d.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.walks {
            cfg.r = r;
        }
        if let Some(l) = self.walk_len {
            cfg.l = l;
        }
        if let Some(e) = self.max_epochs {
            cfg.max_epochs = e;
        }
        cfg.text_report |= self.text_report;
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self, stages: Option<&[Stage]>) -> RunOptions {
        RunOptions {
            stages: stages.map(|s| s.iter().copied().collect()),
            cache_dir: self.cache_dir.clone(),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the whole pipeline or a comma-separated subset of stages.
    Run {
        #[command(flatten)]
        common: Common,
        /// Any of split,walks,train,srwr,explain,eval.
        #[arg(long)]
        stages: Option<String>,
    },
    /// Split, sample walks and train; writes checkpoint.bin and loss.csv.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Build the thresholded diffusion matrix from the training split.
    Srwr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        restart_c: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        threshold_p: Option<f64>,
        #[arg(long)]
        threshold_n: Option<f64>,
    },
    /// Predict signs with the trained model. Reads "src dst" pairs from
    /// --edges, or uses the test split.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Write explanations.jsonl and predictions.tsv for the test split.
    Explain {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the trained model and write report.json.
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Compare two graphs under shortest-path, walk and WL encodings.
    ExpressivityCheck {
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        pair: Vec<PathBuf>,
        /// Longest enumerated walk; defaults to the node count.
        #[arg(long)]
        max_steps: Option<usize>,
        /// Mirror every edge on load.
        #[arg(long)]
        undirected: bool,
    },
    /// Write a planted two-faction signed graph as an edge list.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        nodes_per_block: usize,
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        #[arg(long, default_value_t = 0.2)]
        p_intra: f64,
        #[arg(long, default_value_t = 0.2)]
        p_inter: f64,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Accuracy with and without the adjacency bias over several seeds.
    Ablation {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_pairs(path: &Path) -> Result<Vec<(u64, u64)>, Error> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(|c: char| c.is_whitespace() || c == ',');
        let mut next = || it.by_ref().find(|t| !t.is_empty()).and_then(|t| t.parse::<u64>().ok());
        match (next(), next()) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: format!("expected two node ids, got {line:?}"),
                })
            }
        }
    }
    Ok(pairs)
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run { common, stages } => {
            let cfg = common.config()?;
            let stages: Option<BTreeSet<Stage>> = stages.as_deref().map(Stage::parse_list).transpose()?;
            let opts = RunOptions {
                stages,
                cache_dir: common.cache_dir.clone(),
            };
            let summary = run_pipeline(&cfg, &opts)?;
            match summary.report {
                Some(r) => print_json(&r)?,
                None => {
                    for p in &summary.written {
                        println!("{}", p.display());
                    }
                }
            }
        }
        Command::Train { common } => {
            let cfg = common.config()?;
            let summary = run_pipeline(&cfg, &common.options(Some(&[Stage::Split, Stage::Walks, Stage::Train])))?;
            for p in &summary.written {
                println!("{}", p.display());
            }
        }
        Command::Srwr {
            common,
            restart_c,
            beta,
            gamma,
            tol,
            max_iters,
            threshold_p,
            threshold_n,
        } => {
            let mut cfg = common.config()?;
            cfg.srwr_c = restart_c.unwrap_or(cfg.srwr_c);
            cfg.srwr_beta = beta.unwrap_or(cfg.srwr_beta);
            cfg.srwr_gamma = gamma.unwrap_or(cfg.srwr_gamma);
            cfg.srwr_tol = tol.unwrap_or(cfg.srwr_tol);
            cfg.srwr_max_iters = max_iters.unwrap_or(cfg.srwr_max_iters);
            cfg.threshold_p = threshold_p.unwrap_or(cfg.threshold_p);
            cfg.threshold_n = threshold_n.unwrap_or(cfg.threshold_n);
            cfg.validate()?;
            let summary = run_pipeline(&cfg, &common.options(Some(&[Stage::Split, Stage::Srwr])))?;
            for p in &summary.written {
                println!("{}", p.display());
            }
        }
        Command::Predict { common, edges } => {
            let cfg = common.config()?;
            let state = TrainedState::load(&cfg, &common.options(None))?;
            let pairs = match edges {
                Some(p) => read_pairs(&p)?,
                None => state
                    .split
                    .test
                    .iter()
                    .map(|e| (state.graph.original_id(e.src), state.graph.original_id(e.dst)))
                    .collect(),
            };
            let preds = state.predict_original(&pairs)?;
            let mut out = io::stdout().lock();
            writeln!(out, "src\tdst\tpredicted")?;
            for ((a, b), p) in pairs.iter().zip(&preds) {
                writeln!(out, "{a}\t{b}\t{}", p.predicted_sign.value())?;
            }
        }
        Command::Explain { common } => {
            let cfg = common.config()?;
            let summary = run_pipeline(&cfg, &common.options(Some(&[Stage::Explain])))?;
            for p in &summary.written {
                println!("{}", p.display());
            }
        }
        Command::Eval { common } => {
            let cfg = common.config()?;
            let summary = run_pipeline(&cfg, &common.options(Some(&[Stage::Eval])))?;
            if let Some(r) = summary.report {
                print_json(&r)?;
            }
        }
        Command::ExpressivityCheck {
            pair,
            max_steps,
            undirected,
        } => {
            let opts = LoadOptions {
                undirected,
                compact: false,
            };
            let a = load_edge_list(&pair[0], opts)?;
            let b = load_edge_list(&pair[1], opts)?;
            let steps = max_steps.unwrap_or_else(|| default_walk_steps(&a, &b));
            print_json(&compare_encodings(&a, &b, steps)?)?;
        }
        Command::GenSynthetic {
            out,
            nodes_per_block,
            blocks,
            p_intra,
            p_inter,
            noise,
            seed,
        } => {
            let cfg = sesg_core::graph::SyntheticConfig {
                nodes_per_block,
                blocks,
                p_intra,
                p_inter,
                flip_noise: noise,
                seed,
            };
            let g = generate_balanced_graph(&cfg).map_err(|e| Error::Config(e.to_string()))?;
            write_edge_list(&out, &g)?;
            eprintln!("{} nodes, {} edges -> {}", g.num_nodes(), g.num_edges(), out.display());
        }
        Command::Ablation { common, seeds } => {
            let cfg = common.config()?;
            let scratch = cfg.out_dir.join("ablation");
            let report = run_adjacency_ablation(&cfg, &seeds, &scratch)?;
            fs::create_dir_all(&cfg.out_dir)?;
            fs::write(
                cfg.out_dir.join("ablation.json"),
                serde_json::to_string_pretty(&report)? + "\n",
            )?;
            print_json(&report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
