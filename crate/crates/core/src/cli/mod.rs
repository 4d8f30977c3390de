//! Command-line interface. Exit codes: 0 success, 1 usage or validation
//! error, 2 runtime error.

mod config;

pub use config::{load_config, DataConfig, Overrides, RunConfig};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{
    encode_all, generate_synthetic, load_jsonl, save_jsonl, EncodedTriple, SyntheticSpec,
    Vocabulary, EOS, SPECIALS,
};
use crate::error::{Error, Result};
use crate::evalkit::{
    ablation_run, alpha_sweep, evaluate_corpus, train_test_split, write_table, Experiment,
};
use crate::model::{init_params, load_checkpoint, loss_grad_check, ModelConfig, Nagm};
use crate::numkit::GradCheckOptions;
use crate::sentclass::{
    annotate, bootstrap_labels, load_labeled, load_raw_records, Classifier, CuePhraseList,
};
use crate::trainer::fit;

#[derive(Parser, Debug)]
#[command(name = "nagm", version, about = "Conclusion-supplement answer generator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic q-c-s corpus as JSONL.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Split raw answer sentences into q-c-s triples.
    Classify {
        /// JSONL records with "question" and "sentences".
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// JSONL of {"sentence", "label"}; without it labels are
        /// bootstrapped from cue phrases.
        #[arg(long)]
        labeled: Option<PathBuf>,
        /// Cue phrase file, one phrase per line.
        #[arg(long)]
        cues: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Train on a JSONL corpus and write a checkpoint plus a loss log.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Loss log CSV; defaults to `<out>.log.csv`.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Answer one question with a trained checkpoint.
    Generate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        question: String,
    },
    /// Score a checkpoint on test triples and write a JSON report.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model per alpha and tabulate test scores.
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Compare the full model with its ablated variants.
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Finite-difference check of the full training loss.
    Gradcheck {
        /// Embedding and hidden size.
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

#[derive(Serialize)]
struct Meta<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<T>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Records the effective configuration next to an artifact.
fn write_meta<T: Serialize>(artifact: &Path, command: &str, config: &RunConfig, details: Option<T>) -> Result<()> {
    let path = sidecar(artifact);
    let text = serde_json::to_string_pretty(&Meta {
        command,
        config,
        details,
    })?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth { out, opts } => {
            let cfg = opts.resolve()?;
            let spec = SyntheticSpec {
                n_templates: cfg.data.n_templates.min(cfg.data.n_triples),
                n_triples: cfg.data.n_triples,
                seed: cfg.seed,
            };
            let triples = generate_synthetic(&spec)?;
            save_jsonl(&triples, &out)?;
            write_meta(&out, "synth", &cfg, Some(spec))?;
            eprintln!("wrote {} triples to {}", triples.len(), out.display());
        }
        Command::Classify {
            input,
            out,
            labeled,
            cues,
            opts,
        } => {
            let cfg = opts.resolve()?;
            let cues = match cues {
                Some(p) => CuePhraseList::load(&p)?,
                None => CuePhraseList::default(),
            };
            let records = load_raw_records(&input)?;
            let examples = match labeled {
                Some(p) => load_labeled(&p)?,
                None => bootstrap_labels(&records, &cues),
            };
            let classifier = Classifier::train(&examples, &cfg.classifier, cues)?;
            let result = annotate(&records, &classifier)?;
            save_jsonl(&result.triples, &out)?;
            #[derive(Serialize)]
            struct Details<'a> {
                input_records: usize,
                triples: usize,
                dropped: &'a [String],
                training_sentences: usize,
                final_loss: Option<f64>,
            }
            write_meta(
                &out,
                "classify",
                &cfg,
                Some(Details {
                    input_records: records.len(),
                    triples: result.triples.len(),
                    dropped: &result.dropped,
                    training_sentences: examples.len(),
                    final_loss: classifier.final_loss(),
                }),
            )?;
            eprintln!(
                "{} triples, {} records dropped",
                result.triples.len(),
                result.dropped_count()
            );
        }
        Command::Train {
            corpus,
            out,
            log,
            opts,
        } => {
            let mut cfg = opts.resolve()?;
            let triples = load_jsonl(&corpus)?;
            let vocab = Vocabulary::build(&triples, cfg.data.min_count, cfg.data.tokenizer)?;
            cfg.model.vocab_size = vocab.len();
            let encoded = encode_all(&triples, &vocab)?;
            let mut train = cfg.train.clone();
            train.checkpoint_path = Some(out.clone());
            let outcome = fit(&encoded, &vocab, &cfg.model, &train)?;
            let log_path = log.unwrap_or_else(|| {
                let mut name = out.as_os_str().to_owned();
                name.push(".log.csv");
                PathBuf::from(name)
            });
            outcome.log.write_csv(&log_path)?;
            write_meta::<()>(&log_path, "train", &cfg, None)?;
            let last = outcome.log.records.last().expect("at least one iteration");
            eprintln!(
                "trained {} iterations in {:.1}s; final L_w {:.4}, CE {:.4}",
                last.iteration, outcome.log.wall_clock_secs, last.l_w, last.ce
            );
        }
        Command::Generate { ckpt, question } => {
            let ckpt = load_checkpoint(&ckpt)?;
            let model = Nagm::new(ckpt.model.clone())?;
            let ids = ckpt.vocab.encode(&question)?;
            let answer = model.generate(&ckpt.params, ids.ids())?;
            let conclusion = ckpt.vocab.decode(&answer.conclusion)?;
            let supplement = ckpt.vocab.decode(&answer.supplement)?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "conclusion: {conclusion}\nsupplement: {supplement}")
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Command::Evaluate { ckpt, test, out } => {
            let ckpt = load_checkpoint(&ckpt)?;
            let triples = load_jsonl(&test)?;
            let report = evaluate_corpus(&ckpt, &triples)?;
            report.write_json(&out)?;
            eprintln!("ROUGE-L {:.4}, BLEU-4 {:.4}", report.rouge_l, report.bleu_4);
        }
        Command::Sweep { corpus, out, opts } => {
            let cfg = opts.resolve()?;
            let exp = experiment(&cfg, &corpus)?;
            let rows = alpha_sweep(&exp, &cfg.data.alphas)?;
            write_table(&rows, &out)?;
            write_meta::<()>(&out, "sweep", &cfg, None)?;
        }
        Command::Ablate { corpus, out, opts } => {
            let cfg = opts.resolve()?;
            let exp = experiment(&cfg, &corpus)?;
            let rows = ablation_run(&exp)?;
            write_table(&rows, &out)?;
            write_meta::<()>(&out, "ablate", &cfg, None)?;
        }
        Command::Gradcheck {
            dim,
            eps,
            samples,
            tolerance,
            out,
            opts,
        } => {
            let mut cfg = opts.resolve()?;
            cfg.model.embed_dim = dim;
            cfg.model.hidden_dim = dim;
            cfg.model.vocab_size = 20;
            let max = gradcheck(&cfg, eps, samples, out.as_deref())?;
            println!("max relative error {max:.3e} (tolerance {tolerance:e})");
            if !(max <= tolerance) {
                return Err(Error::Evaluation(format!(
                    "gradient check failed: {max:.3e} > {tolerance:e}"
                )));
            }
        }
    }
    Ok(())
}

fn experiment(cfg: &RunConfig, corpus: &Path) -> Result<Experiment> {
    let triples = load_jsonl(corpus)?;
    let (train, test) = train_test_split(&triples, cfg.data.test_fraction, cfg.seed)?;
    Ok(Experiment {
        train,
        test,
        tokenizer: cfg.data.tokenizer,
        min_count: cfg.data.min_count,
        model: cfg.model.clone(),
        train_config: cfg.train.clone(),
    })
}

/// Random example and negative with sequences of at most five tokens
/// including EOS.
pub fn gradcheck_pair(vocab_size: usize, seed: u64) -> (EncodedTriple, EncodedTriple) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let n = rng.gen_range(1..=4);
        let mut v: Vec<usize> = (0..n).map(|_| rng.gen_range(SPECIALS.len()..vocab_size)).collect();
        v.push(EOS);
        v
    };
    let triple = |id: &str, rng: &mut ChaCha8Rng| EncodedTriple {
        id: id.into(),
        question: seq(rng),
        conclusion: seq(rng),
        supplement: seq(rng),
    };
    let ex = triple("example", &mut rng);
    let neg = triple("negative", &mut rng);
    (ex, neg)
}

fn gradcheck(cfg: &RunConfig, eps: f64, samples: usize, out: Option<&Path>) -> Result<f64> {
    let model_cfg: ModelConfig = cfg.model.clone();
    let model = Nagm::new(model_cfg.clone())?;
    let params = init_params(&model_cfg, cfg.seed)?;
    let (ex, neg) = gradcheck_pair(model_cfg.vocab_size, cfg.seed);
    let report = loss_grad_check(
        &model,
        &params,
        &ex,
        &neg,
        GradCheckOptions {
            eps,
            samples_per_tensor: samples,
            seed: cfg.seed,
            extrapolate: true,
        },
    )?;
    if let Some(path) = out {
        write_json(
            path,
            &serde_json::json!({ "config": cfg, "report": report }),
        )?;
    }
    Ok(report.max_rel_err)
}
