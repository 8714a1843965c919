//! Run configuration: one TOML file, overridable from the command line.
//!
//! ```toml
//! seed = 0          # training, split and root-sampling seed
//! threads = 0       # 0 = all cores, 1 = sequential and bit-reproducible
//! out = "runs/toy"
//!
//! [data]
//! nodes = "data/toy/nodes.jsonl"
//! edges = "data/toy/edges.txt"
//! labels = "data/toy/labels.txt"
//!
//! [provider]        # kind = "hash" | "remote"
//! kind = "hash"
//! dimension = 128
//!
//! [remote]          # only read for remote providers
//! batch_size = 32
//!
//! [view]
//! max_order = 2
//! tofg_mode = "full"   # or "random_walk"
//! [view.walk]
//! jump_probability = 0.3
//! num_walks = 8
//! seed = 0
//!
//! [train]
//! steps = 500
//! batch_size = 8
//!
//! [eval]
//! mode = "taga"     # taga | taga-rw | tofg-k | glo-goft
//! shots = [0, 5]
//! seeds = 20
//!
//! [bench]
//! k_max = 5
//! roots = 20
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use taga::alignment::{TofgMode, TrainConfig, ViewConfig};
use taga::embed::{ProviderDescriptor, ProviderKind, RemoteOptions};
use taga::inference::EmbeddingMode;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Taga,
    TagaRw,
    TofgK,
    GloGoft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            nodes: PathBuf::from("data/toy/nodes.jsonl"),
            edges: PathBuf::from("data/toy/edges.txt"),
            labels: Some(PathBuf::from("data/toy/labels.txt")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub mode: Mode,
    /// Text-view order for `tofg-k`; defaults to the maximum order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub shots: Vec<usize>,
    pub seeds: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_template: Option<String>,
    /// Defaults to `<out>/model.ckpt`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Taga,
            order: None,
            shots: vec![0, 1, 3, 5, 10, 20, 50, 100],
            seeds: 20,
            epochs: 100,
            learning_rate: 1e-2,
            label_template: None,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub k_max: usize,
    pub roots: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { k_max: 5, roots: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    pub data: DataConfig,
    pub provider: ProviderDescriptor,
    pub remote: RemoteOptions,
    pub view: ViewConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            out: PathBuf::from("runs/default"),
            data: DataConfig::default(),
            provider: ProviderDescriptor::hash(128),
            remote: RemoteOptions::default(),
            view: ViewConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

/// Values given on the command line; `None` keeps the file's value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub provider: Option<ProviderKind>,
    pub dimension: Option<usize>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub max_order: Option<usize>,
    pub tofg_mode: Option<TofgMode>,
    pub walk_p: Option<f64>,
    pub walk_len: Option<usize>,
    pub walk_num: Option<usize>,
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub label_template: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub shots: Option<Vec<usize>>,
    pub seeds: Option<usize>,
    pub order: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.seed, self.seed);
        set!(o.threads, self.threads);
        set!(o.out, self.out);
        set!(o.nodes, self.data.nodes);
        set!(o.edges, self.data.edges);
        if o.labels.is_some() {
            self.data.labels = o.labels.clone();
        }
        if let Some(kind) = o.provider {
            self.provider.kind = kind;
        }
        set!(o.dimension, self.provider.dimension);
        set!(o.mode, self.eval.mode);
        set!(o.max_order, self.view.max_order);
        set!(o.tofg_mode, self.view.tofg_mode);
        set!(o.walk_p, self.view.walk.jump_probability);
        if o.walk_len.is_some() {
            self.view.walk.max_length = o.walk_len;
        }
        set!(o.walk_num, self.view.walk.num_walks);
        set!(o.steps, self.train.steps);
        set!(o.batch_size, self.train.batch_size);
        if o.label_template.is_some() {
            self.eval.label_template = o.label_template.clone();
        }
        if o.checkpoint.is_some() {
            self.eval.checkpoint = o.checkpoint.clone();
        }
        set!(o.shots, self.eval.shots);
        set!(o.seeds, self.eval.seeds);
        if o.order.is_some() {
            self.eval.order = o.order;
        }
    }

    /// Folds the mode and the master seed into the view and training
    /// settings.
    pub fn resolve(&mut self) -> Result<()> {
        self.train.seed = self.seed;
        match self.eval.mode {
            Mode::TagaRw => self.view.tofg_mode = TofgMode::RandomWalk,
            Mode::GloGoft => self.train.glo_goft_only = true,
            Mode::Taga | Mode::TofgK => {}
        }
        if self.view.max_order == 0 {
            bail!("view.max_order must be at least 1");
        }
        self.provider.validate()?;
        Ok(())
    }

    pub fn embedding_mode(&self) -> EmbeddingMode {
        match self.eval.mode {
            Mode::Taga | Mode::TagaRw => EmbeddingMode::Taga,
            Mode::GloGoft => EmbeddingMode::GloGoft,
            Mode::TofgK => EmbeddingMode::TofgK(self.eval.order.unwrap_or(self.view.max_order)),
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.eval.checkpoint.clone().unwrap_or_else(|| self.out.join("model.ckpt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn partial_file_and_overrides() {
        let mut c = RunConfig::from_toml("seed = 4\n[train]\nsteps = 12\n[view.walk]\nnum_walks = 3\n").unwrap();
        assert_eq!((c.seed, c.train.steps, c.view.walk.num_walks, c.train.batch_size), (4, 12, 3, 8));
        c.apply(&Overrides { steps: Some(30), mode: Some(Mode::TagaRw), walk_len: Some(4), ..Default::default() });
        c.resolve().unwrap();
        assert_eq!(c.train.steps, 30);
        assert_eq!(c.train.seed, 4);
        assert_eq!(c.view.tofg_mode, TofgMode::RandomWalk);
        assert_eq!(c.view.walk.max_length, Some(4));
        assert!(RunConfig::from_toml("[train]\nsteps = \"many\"").is_err());
    }

    proptest! {
        #[test]
        fn any_config_round_trips(
            seed in 0u64..1 << 40,
            threads in 0usize..64,
            k in 1usize..5,
            p in 0.0f64..1.0,
            len in proptest::option::of(1usize..9),
            steps in 0usize..100_000,
            lr in 1e-6f64..1.0,
            mode in prop_oneof![Just(Mode::Taga), Just(Mode::TagaRw), Just(Mode::TofgK), Just(Mode::GloGoft)],
            shots in prop::collection::vec(0usize..100, 0..6),
            remote: bool,
            template in proptest::option::of("[a-z {}]{0,12}"),
        ) {
            let mut c = RunConfig { seed, threads, ..Default::default() };
            c.view.max_order = k;
            c.view.walk.jump_probability = p;
            c.view.walk.max_length = len;
            c.train.steps = steps;
            c.train.learning_rate = lr;
            c.eval.mode = mode;
            c.eval.shots = shots;
            c.eval.label_template = template;
            if remote {
                c.provider = ProviderDescriptor::remote("m", "http://localhost:1/v1", 64);
                c.train.optimizer = taga::alignment::OptimizerKind::Sgd;
            }
            let text = c.to_toml().unwrap();
            prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        }
    }
}
