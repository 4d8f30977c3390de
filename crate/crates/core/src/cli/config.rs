use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenizerKind;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::sentclass::ClassifierConfig;
use crate::trainer::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub tokenizer: TokenizerKind,
    pub min_count: usize,
    pub test_fraction: f64,
    pub n_templates: usize,
    pub n_triples: usize,
    pub alphas: Vec<f64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            tokenizer: TokenizerKind::CharBigram,
            min_count: 1,
            test_fraction: 0.2,
            n_templates: 8,
            n_triples: 50,
            alphas: vec![0.0, 1.0, 2.0],
        }
    }
}

/// Effective settings of one invocation. Every section rejects unknown
/// keys; `seed` is copied into the train and classifier sections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub classifier: ClassifierConfig,
    pub data: DataConfig,
}

/// Flags shared by all subcommands. Each one overrides the field of the
/// same name from `--config`.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// JSON file with a (partial) run configuration.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub use_attention: Option<bool>,
    #[arg(long)]
    pub use_sentence_type: Option<bool>,
    #[arg(long)]
    pub share_ensemble: Option<bool>,
    #[arg(long)]
    pub max_decode_len: Option<usize>,

    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, visible_alias = "iters")]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub checkpoint_interval: Option<usize>,

    #[arg(long, value_enum)]
    pub tokenizer: Option<TokenizerArg>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub n_templates: Option<usize>,
    #[arg(long, visible_alias = "n")]
    pub n_triples: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,

    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub classifier_epochs: Option<usize>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenizerArg {
    CharBigram,
    Word,
}

impl From<TokenizerArg> for TokenizerKind {
    fn from(t: TokenizerArg) -> Self {
        match t {
            TokenizerArg::CharBigram => TokenizerKind::CharBigram,
            TokenizerArg::Word => TokenizerKind::Word,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Overrides {
    /// Defaults, then the `--config` file, then explicit flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        let o = self.clone();
        set(&mut cfg.seed, o.seed);
        set(&mut cfg.model.embed_dim, o.embed_dim);
        set(&mut cfg.model.hidden_dim, o.hidden_dim);
        set(&mut cfg.model.margin, o.margin);
        set(&mut cfg.model.alpha, o.alpha);
        set(&mut cfg.model.use_attention, o.use_attention);
        set(&mut cfg.model.use_sentence_type, o.use_sentence_type);
        set(&mut cfg.model.share_ensemble, o.share_ensemble);
        set(&mut cfg.model.max_decode_len, o.max_decode_len);
        set(&mut cfg.train.lr, o.lr);
        set(&mut cfg.train.batch_size, o.batch_size);
        set(&mut cfg.train.iterations, o.iterations);
        set(&mut cfg.train.checkpoint_interval, o.checkpoint_interval);
        set(&mut cfg.data.tokenizer, o.tokenizer.map(TokenizerKind::from));
        set(&mut cfg.data.min_count, o.min_count);
        set(&mut cfg.data.test_fraction, o.test_fraction);
        set(&mut cfg.data.n_templates, o.n_templates);
        set(&mut cfg.data.n_triples, o.n_triples);
        set(&mut cfg.data.alphas, o.alphas);
        set(&mut cfg.classifier.threshold, o.threshold);
        set(&mut cfg.classifier.epochs, o.classifier_epochs);
        cfg.classifier.tokenizer = cfg.data.tokenizer;
        cfg.train.seed = cfg.seed;
        cfg.classifier.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Checks everything except `model.vocab_size`, which comes from data.
    pub fn validate(&self) -> Result<()> {
        ModelConfig {
            vocab_size: self.model.vocab_size.max(1),
            ..self.model.clone()
        }
        .validate()?;
        self.train.validate()?;
        self.classifier.validate()?;
        if self.data.min_count == 0 {
            return Err(Error::Config("min_count must be >= 1".into()));
        }
        if self.data.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("alphas must be finite and >= 0".into()));
        }
        Ok(())
    }
}
