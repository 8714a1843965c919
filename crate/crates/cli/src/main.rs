use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use taga::alignment::TofgMode;
use taga::embed::ProviderKind;
use taga::toy::ToyConfig;
use taga_cli::commands::{self, DocStyle, TreeSpec};
use taga_cli::{Mode, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "taga", version, about = "Align text and graph views of text-attributed graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Hash,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum TofgModeArg {
    Full,
    RandomWalk,
}

/// Flags override the config file, which overrides built-in defaults.
#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially and bit-reproducibly, 0 uses all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderArg>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    nodes: Option<PathBuf>,
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Largest neighborhood order K.
    #[arg(long, global = true)]
    max_order: Option<usize>,
    #[arg(long, global = true, value_enum)]
    tofg_mode: Option<TofgModeArg>,
    /// Cross-edge jump probability for walks.
    #[arg(long, global = true)]
    walk_p: Option<f64>,
    /// Walk length in nodes.
    #[arg(long, global = true)]
    walk_len: Option<usize>,
    /// Walks per neighborhood.
    #[arg(long, global = true)]
    walk_num: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Label prompt with `{}` standing for the label text.
    #[arg(long, global = true)]
    label_template: Option<String>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Comma-separated shot counts; 0 is zero-shot.
    #[arg(long, global = true, value_delimiter = ',')]
    shots: Option<Vec<usize>>,
    /// Seeds per positive shot count.
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Text-view order for `--mode tofg-k`.
    #[arg(long, global = true)]
    order: Option<usize>,
}

impl Global {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            threads: self.threads,
            provider: self.provider.map(|p| match p {
                ProviderArg::Hash => ProviderKind::Hash,
                ProviderArg::Remote => ProviderKind::Remote,
            }),
            dimension: self.dim,
            mode: self.mode,
            out: self.out.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            labels: self.labels.clone(),
            max_order: self.max_order,
            tofg_mode: self.tofg_mode.map(|m| match m {
                TofgModeArg::Full => TofgMode::Full,
                TofgModeArg::RandomWalk => TofgMode::RandomWalk,
            }),
            walk_p: self.walk_p,
            walk_len: self.walk_len,
            walk_num: self.walk_num,
            steps: self.steps,
            batch_size: self.batch_size,
            label_template: self.label_template.clone(),
            checkpoint: self.checkpoint.clone(),
            shots: self.shots.clone(),
            seeds: self.seeds,
            order: self.order,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load the dataset and write `stats.json`.
    Ingest,
    /// Train the graph network; writes `model.ckpt` and `train_log.jsonl`.
    Pretrain,
    /// Write per-node embeddings for the selected mode.
    Embed,
    /// Zero- and few-shot classification; writes metrics and predictions.
    Eval,
    /// Evaluate a checkpoint trained on another graph, without retraining.
    TransferEval,
    /// Word counts of full documents versus walk corpora per hop.
    BenchCorpus {
        /// Use a complete tree instead of the dataset.
        #[arg(long)]
        tree: bool,
        #[arg(long, default_value_t = 3)]
        branching: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 10)]
        words: usize,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        roots: Option<usize>,
    },
    /// Print a node's neighborhood document.
    RenderDoc {
        #[arg(long)]
        node: usize,
        #[arg(long, default_value_t = 2)]
        hops: usize,
        /// Node and edge listing instead of the hierarchical document.
        #[arg(long, conflicts_with = "walks")]
        flat: bool,
        /// Walk sub-documents.
        #[arg(long)]
        walks: bool,
    },
    /// Write the planted-partition toy dataset.
    GenToy {
        #[arg(long, default_value = "data/toy")]
        dir: PathBuf,
        #[arg(long, default_value_t = 60)]
        num_nodes: usize,
        #[arg(long, default_value_t = 7)]
        toy_seed: u64,
    },
    /// Print the resolved configuration.
    ShowConfig,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.global.overrides());
    cfg.resolve()?;
    if cfg.threads > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global().context("starting thread pool")?;
    }

    match cli.command {
        Command::Ingest => println!("{}", serde_json::to_string_pretty(&commands::ingest(&cfg)?)?),
        Command::Pretrain => println!("{}", commands::pretrain(&cfg)?.display()),
        Command::Embed => println!("{}", commands::embed(&cfg)?.display()),
        Command::Eval | Command::TransferEval => {
            let out = match cli.command {
                Command::Eval => commands::eval(&cfg)?,
                _ => commands::transfer_eval(&cfg)?,
            };
            for s in out.summaries {
                println!("{} shots={:<3} runs={:<2} accuracy {:.4} +/- {:.4}", s.mode, s.shots, s.runs, s.mean, s.std);
            }
        }
        Command::BenchCorpus { tree, branching, depth, words, k_max, roots } => {
            cfg.bench.k_max = k_max.unwrap_or(cfg.bench.k_max);
            cfg.bench.roots = roots.unwrap_or(cfg.bench.roots);
            let spec = tree.then_some(TreeSpec { branching, depth, words });
            let report = commands::bench(&cfg, spec)?;
            println!("k  full_words  walk_words/walk  walk_words_total");
            for h in &report.hops {
                println!("{}  {:.1}  {:.1}  {:.1}", h.k, h.full_words, h.walk_words_per_walk, h.walk_words_total);
            }
        }
        Command::RenderDoc { node, hops, flat, walks } => {
            let style = match (flat, walks) {
                (true, _) => DocStyle::Flat,
                (_, true) => DocStyle::Walks,
                _ => DocStyle::Full,
            };
            print!("{}", commands::render_doc(&cfg, node, hops, style)?);
        }
        Command::GenToy { dir, num_nodes, toy_seed } => {
            commands::gen_toy(&dir, &ToyConfig { nodes: num_nodes, seed: toy_seed, ..Default::default() })?;
            println!("{}", dir.display());
        }
        Command::ShowConfig => print!("{}", cfg.to_toml()?),
    }
    Ok(())
}
