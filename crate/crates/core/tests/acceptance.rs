//! End-to-end acceptance checks, one line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 2 5`.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nagm::cli::gradcheck_pair;
use nagm::corpus::{
    encode_all, generate_synthetic, EncodedTriple, SyntheticSpec, TokenizerKind, Vocabulary, EOS,
};
use nagm::evalkit::{
    ablation_run, alpha_sweep, bleu_4, evaluate_params, lcs_len, rouge_l, train_test_split,
    Experiment, Smoothing,
};
use nagm::model::{
    init_params, loss_grad_check, ModelConfig, Nagm, CONCLUSION_DECODER,
};
use nagm::numkit::{GradCheckOptions, ParamStore, Tape};
use nagm::sentclass::{
    annotate, rule_classify, synthetic_labeled, Classifier, ClassifierConfig, CuePhraseList,
    Label, LabelSource, RawRecord,
};
use nagm::trainer::{fit, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn synthetic(n_templates: usize, n_triples: usize, seed: u64) -> Vec<nagm::corpus::QCSTriple> {
    generate_synthetic(&SyntheticSpec {
        n_templates,
        n_triples,
        seed,
    })
    .expect("valid synthetic settings")
}

fn strip_eos(seq: &[usize]) -> &[usize] {
    match seq.split_last() {
        Some((&EOS, rest)) => rest,
        _ => seq,
    }
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..5 {
        let model = Nagm::new(ModelConfig {
            embed_dim: 8,
            hidden_dim: 8,
            vocab_size: 20,
            ..Default::default()
        })
        .map_err(err)?;
        let params = init_params(model.config(), seed).map_err(err)?;
        let (ex, neg) = gradcheck_pair(20, seed);
        let report = loss_grad_check(
            &model,
            &params,
            &ex,
            &neg,
            GradCheckOptions {
                seed,
                ..Default::default()
            },
        )
        .map_err(err)?;
        ensure(report.tensors.len() == params.len(), || {
            format!("{} of {} tensors checked", report.tensors.len(), params.len())
        })?;
        checked += report.tensors.iter().map(|t| t.coords_checked).sum::<usize>();
        worst = worst.max(report.max_rel_err);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-3, || format!("max relative error {worst:.3e} > 1e-3"))?;
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "max rel err {worst:.2e} over {checked} coordinates, 5 seeds, {secs:.1}s"
    ))
}

fn overfit_memorization() -> Outcome {
    let triples = synthetic(5, 5, 7);
    let vocab = Vocabulary::build(&triples, 1, TokenizerKind::CharBigram).map_err(err)?;
    let model = ModelConfig {
        embed_dim: 32,
        hidden_dim: 32,
        vocab_size: vocab.len(),
        ..Default::default()
    };
    let corpus = encode_all(&triples, &vocab).map_err(err)?;
    let cfg = TrainConfig {
        iterations: 500,
        seed: 7,
        ..Default::default()
    };
    let out = fit(&corpus, &vocab, &model, &cfg).map_err(err)?;
    let net = Nagm::new(model).map_err(err)?;
    for ex in &corpus {
        let g = net.generate(&out.params, &ex.question).map_err(err)?;
        ensure(
            g.conclusion == strip_eos(&ex.conclusion) && g.supplement == strip_eos(&ex.supplement),
            || format!("{} not reproduced", ex.id),
        )?;
    }
    let report = evaluate_params(&net, &out.params, &vocab, &triples, serde_json::Value::Null)
        .map_err(err)?;
    ensure(report.rouge_l == 1.0, || format!("ROUGE-L {}", report.rouge_l))?;
    Ok("5/5 triples reproduced exactly, ROUGE-L 1.0".into())
}

fn convergence() -> Outcome {
    let triples = synthetic(10, 50, 7);
    let vocab = Vocabulary::build(&triples, 1, TokenizerKind::CharBigram).map_err(err)?;
    let model = ModelConfig {
        vocab_size: vocab.len(),
        ..Default::default()
    };
    let corpus = encode_all(&triples, &vocab).map_err(err)?;
    let cfg = TrainConfig {
        iterations: 300,
        seed: 7,
        ..Default::default()
    };
    let out = fit(&corpus, &vocab, &model, &cfg).map_err(err)?;
    let first = out.log.records[0].ce;
    let last = out.log.records.last().expect("300 records").ce;
    let ratio = last / first;
    let secs = out.log.wall_clock_secs;
    ensure(ratio < 0.25, || format!("CE ratio {ratio:.4}"))?;
    ensure(secs < 600.0, || format!("took {secs:.1}s"))?;
    Ok(format!("CE {first:.2} -> {last:.3} (ratio {ratio:.4}) in {secs:.1}s"))
}

fn loss_degeneration() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let model = Nagm::new(ModelConfig {
            embed_dim: 8,
            hidden_dim: 8,
            vocab_size: 20,
            alpha: 0.0,
            ..Default::default()
        })
        .map_err(err)?;
        let params = init_params(model.config(), seed).map_err(err)?;
        let (ex, neg) = gradcheck_pair(20, seed);
        let mut tape = Tape::new(&params);
        let (total, trace) = model.loss_total(&mut tape, &ex, &neg).map_err(err)?;
        let mut ce = 0.0;
        for (logits, gold) in [
            (&trace.conclusion_logits, &ex.conclusion),
            (&trace.supplement_logits, &ex.supplement),
        ] {
            ensure(logits.len() == gold.len(), || "logit count differs from targets".into())?;
            for (z, &t) in logits.iter().zip(gold.iter()) {
                let z = z.data();
                let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                ce += lse - z[t];
            }
        }
        worst = worst.max((tape.scalar(total) - ce).abs());

        let full = Nagm::new(ModelConfig {
            alpha: 1.0,
            ..model.config().clone()
        })
        .map_err(err)?;
        let mut tape = Tape::new(&params);
        let (_, trace) = full.loss_total(&mut tape, &ex, &ex).map_err(err)?;
        let ls = trace.losses.expect("losses").closeness;
        ensure(ls == 3.0 * 0.2, || format!("L_s {ls} with identical embeddings"))?;
    }
    ensure(worst <= 1e-12, || format!("|L_w - CE| = {worst:e}"))?;
    Ok(format!("alpha=0 |L_w - CE| <= {worst:.1e}; identical negatives give L_s = 3M"))
}

fn perturb(params: &ParamStore, prefix: &str, seed: u64) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = params.clone();
    let names: Vec<String> = params.names().filter(|n| n.starts_with(prefix)).map(String::from).collect();
    for name in names {
        let t = out.get_mut(&name).expect("present");
        for v in t.data_mut() {
            *v += rng.gen_range(-0.5..0.5);
        }
    }
    out
}

fn supplement_logits(model: &Nagm, params: &ParamStore, ex: &EncodedTriple, neg: &EncodedTriple) -> Result<Vec<Vec<f64>>, String> {
    let mut tape = Tape::new(params);
    let (_, trace) = model.loss_total(&mut tape, ex, neg).map_err(err)?;
    Ok(trace.supplement_logits.iter().map(|t| t.data().to_vec()).collect())
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn ablation_wiring() -> Outcome {
    let small = ModelConfig {
        embed_dim: 8,
        hidden_dim: 8,
        vocab_size: 20,
        ..Default::default()
    };
    for seed in 0..5 {
        let (ex, neg) = gradcheck_pair(20, seed);
        let wa = Nagm::new(ModelConfig {
            use_attention: false,
            ..small.clone()
        })
        .map_err(err)?;
        let params = init_params(wa.config(), seed).map_err(err)?;
        let moved = perturb(&params, &format!("{CONCLUSION_DECODER}."), seed);
        let a = supplement_logits(&wa, &params, &ex, &neg)?;
        let b = supplement_logits(&wa, &moved, &ex, &neg)?;
        ensure(
            a.iter().map(|v| bits(v)).eq(b.iter().map(|v| bits(v))),
            || "NAGMWA supplement logits moved with the conclusion decoder".into(),
        )?;
        // Control: the same perturbation reaches the supplement with attention.
        let full = Nagm::new(small.clone()).map_err(err)?;
        ensure(
            supplement_logits(&full, &params, &ex, &neg)? != supplement_logits(&full, &moved, &ex, &neg)?,
            || "attention model ignores the conclusion decoder".into(),
        )?;

        let no_ste = Nagm::new(ModelConfig {
            use_sentence_type: false,
            ..small.clone()
        })
        .map_err(err)?;
        let mut tape = Tape::new(&params);
        let (_, trace) = no_ste.loss_total(&mut tape, &ex, &neg).map_err(err)?;
        let emb = trace.embeddings.expect("embeddings");
        ensure(
            bits(emb.question_c.data()) == bits(emb.question_s.data()),
            || "w/o ste question encodings differ".into(),
        )?;
    }

    let mut alpha_wins = 0;
    let mut attention_wins = 0;
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let triples = synthetic(8, 40, 100 + seed);
        let (train, test) = train_test_split(&triples, 0.2, seed).map_err(err)?;
        let exp = Experiment {
            train,
            test,
            tokenizer: TokenizerKind::CharBigram,
            min_count: 1,
            model: ModelConfig {
                embed_dim: 16,
                hidden_dim: 16,
                ..Default::default()
            },
            train_config: TrainConfig {
                iterations: 60,
                seed,
                ..Default::default()
            },
        };
        let sweep = alpha_sweep(&exp, &[0.0, 1.0]).map_err(err)?;
        let ablation = ablation_run(&exp).map_err(err)?;
        let by_name: HashMap<_, _> = ablation.iter().map(|r| (r.variant_or_alpha.as_str(), r)).collect();
        let (a0, a1) = (&sweep[0], &sweep[1]);
        let (nagm, wa) = (by_name["NAGM"], by_name["NAGMWA"]);
        if a1.rouge_l >= a0.rouge_l && a1.bleu_4 >= a0.bleu_4 {
            alpha_wins += 1;
        }
        if nagm.rouge_l >= wa.rouge_l {
            attention_wins += 1;
        }
        lines.push(format!(
            "seed {seed}: a0 {:.3}/{:.3} a1 {:.3}/{:.3} NAGM {:.3} NAGMWA {:.3}",
            a0.rouge_l, a0.bleu_4, a1.rouge_l, a1.bleu_4, nagm.rouge_l, wa.rouge_l
        ));
    }
    let detail = lines.join("; ");
    ensure(alpha_wins >= 2, || format!("alpha=1 >= alpha=0 in {alpha_wins}/3 seeds ({detail})"))?;
    ensure(attention_wins >= 2, || format!("NAGM >= NAGMWA in {attention_wins}/3 seeds ({detail})"))?;
    Ok(format!(
        "bitwise wiring holds; alpha=1 >= alpha=0 in {alpha_wins}/3, NAGM >= NAGMWA in {attention_wins}/3 ({detail})"
    ))
}

/// Plain recursive LCS, exponential but exact.
fn lcs_brute(a: &[u8], b: &[u8]) -> usize {
    match (a.split_first(), b.split_first()) {
        (Some((x, ra)), Some((y, rb))) => {
            if x == y {
                1 + lcs_brute(ra, rb)
            } else {
                lcs_brute(ra, b).max(lcs_brute(a, rb))
            }
        }
        _ => 0,
    }
}

fn rouge_oracle(c: &[u8], r: &[u8]) -> f64 {
    let l = lcs_brute(c, r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    2.0 * p * rec / (p + rec)
}

fn all_strings(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..3u8 {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn metric_oracles() -> Outcome {
    let strings = all_strings(4);
    let mut pairs = 0;
    for a in &strings {
        for b in &strings {
            ensure(lcs_len(a, b) == lcs_brute(a, b), || format!("LCS {a:?} {b:?}"))?;
            if !a.is_empty() && !b.is_empty() {
                let got = rouge_l(a, b).map_err(err)?;
                let want = rouge_oracle(a, b);
                ensure((got - want).abs() < 1e-12, || format!("ROUGE-L {a:?} {b:?}: {got} vs {want}"))?;
            }
            pairs += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let gen = |rng: &mut ChaCha8Rng| -> Vec<u8> {
            let n = rng.gen_range(1..=9);
            (0..n).map(|_| rng.gen_range(0..4)).collect()
        };
        let (a, b) = (gen(&mut rng), gen(&mut rng));
        let got = rouge_l(&a, &b).map_err(err)?;
        ensure((got - rouge_oracle(&a, &b)).abs() < 1e-12, || format!("random pair {a:?} {b:?}"))?;
    }
    // Identity needs at least one 4-gram to be defined without smoothing.
    for x in [vec!["a", "b", "c", "d"], vec!["a", "a", "a", "a", "a"], vec!["the", "cat", "sat", "on", "the", "mat"]] {
        let b = bleu_4(&x, &x, Smoothing::None).map_err(err)?;
        ensure(b == 1.0, || format!("bleu_4(x, x) = {b} for {x:?}"))?;
    }
    let worked = rouge_l(&["a", "c", "d"], &["a", "b", "c", "d"]).map_err(err)?;
    ensure((worked - 6.0 / 7.0).abs() <= 1e-9, || format!("worked example {worked}"))?;
    Ok(format!(
        "{pairs} exhaustive pairs and 10000 random pairs match the oracle; worked example {worked:.9}"
    ))
}

fn classifier() -> Outcome {
    let cues = CuePhraseList::default();
    let labeled = synthetic_labeled(200, 3);
    let trained = Classifier::train(&labeled, &ClassifierConfig::default(), cues.clone()).map_err(err)?;
    let acc = trained.accuracy(&labeled).map_err(err)?;
    ensure(acc >= 0.95, || format!("training accuracy {acc}"))?;

    // Precedence: randomised weights never override a cue match.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sentences: Vec<String> = cues
        .phrases()
        .iter()
        .flat_map(|p| [format!("{p} it rains"), format!("  {} your cat is sad", p.to_uppercase())])
        .collect();
    for trial in 0..20 {
        let mut c = trained.clone();
        let names: Vec<String> = c.params.names().map(String::from).collect();
        for name in names {
            for v in c.params.get_mut(&name).expect("present").data_mut() {
                *v = rng.gen_range(-5.0..5.0);
            }
        }
        c.config.threshold = rng.gen_range(0.0..1.0);
        for s in &sentences {
            let got = c.classify(s).map_err(err)?;
            ensure(
                got.label == Label::Supplement && got.source == LabelSource::Rule,
                || format!("trial {trial}: {s:?} -> {got:?}"),
            )?;
            ensure(rule_classify(s, &cues).is_some(), || format!("{s:?} has no cue"))?;
        }
    }

    let mut records = Vec::new();
    for i in 0..60 {
        let n = rng.gen_range(0..4);
        let sentences = (0..n).map(|j| labeled[(i * 3 + j) % labeled.len()].sentence.clone()).collect();
        records.push(RawRecord {
            id: format!("r{i}"),
            question: format!("question {i}"),
            sentences,
        });
    }
    let out = annotate(&records, &trained).map_err(err)?;
    ensure(out.triples.len() + out.dropped_count() == records.len(), || {
        format!("{} + {} != {}", out.triples.len(), out.dropped_count(), records.len())
    })?;
    Ok(format!(
        "accuracy {:.3}; cue precedence over 20 random parameter sets; {} kept + {} dropped = {}",
        acc,
        out.triples.len(),
        out.dropped_count(),
        records.len()
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_nagm"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(err)?;
    ensure(out.status.success(), || {
        format!("nagm {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn cli_session(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let small = ["--embed-dim", "8", "--hidden-dim", "8", "--iters", "3", "--seed", "5"];
    let with = |head: &[&str]| -> Vec<String> {
        head.iter().chain(small.iter()).map(|s| s.to_string()).collect()
    };
    let run = |args: Vec<String>| -> Result<Vec<u8>, String> {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_cli(dir, &refs)
    };
    let mut stdout = Vec::new();
    run(with(&["synth", "--n", "12", "--out", "corpus.jsonl"]))?;
    let corpus = std::fs::read_to_string(dir.join("corpus.jsonl")).map_err(err)?;
    let raw: Vec<String> = corpus
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).expect("json line");
            serde_json::json!({
                "id": v["id"],
                "question": v["question"],
                "sentences": [v["conclusion"], v["supplement"]],
            })
            .to_string()
        })
        .collect();
    std::fs::write(dir.join("raw.jsonl"), raw.join("\n") + "\n").map_err(err)?;
    run(with(&["classify", "--input", "raw.jsonl", "--out", "triples.jsonl", "--classifier-epochs", "2"]))?;
    run(with(&["train", "--corpus", "corpus.jsonl", "--out", "m.ckpt"]))?;
    let question = corpus
        .lines()
        .next()
        .and_then(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .and_then(|v| v["question"].as_str().map(String::from))
        .ok_or("no question")?;
    stdout.push(("generate.stdout".to_string(), run(vec!["generate".into(), "--ckpt".into(), "m.ckpt".into(), "--question".into(), question])?));
    run(vec!["evaluate".into(), "--ckpt".into(), "m.ckpt".into(), "--test".into(), "corpus.jsonl".into(), "--out".into(), "report.json".into()])?;
    run(with(&["sweep", "--corpus", "corpus.jsonl", "--out", "sweep.csv", "--alphas", "0,1"]))?;
    run(with(&["ablate", "--corpus", "corpus.jsonl", "--out", "ablate.csv"]))?;
    stdout.push(("gradcheck.stdout".to_string(), run(vec!["gradcheck".into(), "--dim".into(), "4".into(), "--samples".into(), "4".into(), "--seed".into(), "1".into(), "--out".into(), "gradcheck.json".into()])?));

    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(err)?
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable"))
        })
        .collect();
    files.extend(stdout);
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(err)?;
    let b = tempfile::tempdir().map_err(err)?;
    let first = cli_session(a.path())?;
    let second = cli_session(b.path())?;
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    ensure(names == second.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), || "artifact sets differ".into())?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    for required in ["m.ckpt", "m.ckpt.log.csv", "report.json", "sweep.csv", "ablate.csv", "triples.jsonl", "gradcheck.json"] {
        ensure(names.contains(&required), || format!("{required} missing"))?;
    }
    Ok(format!("{} artifacts bitwise identical across two runs", first.len()))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "gradient fidelity", gradient_fidelity),
        (2, "overfit memorization", overfit_memorization),
        (3, "convergence", convergence),
        (4, "loss degeneration", loss_degeneration),
        (5, "ablation wiring", ablation_wiring),
        (6, "metric oracles", metric_oracles),
        (7, "classifier", classifier),
        (8, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {n} ({name}, {secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}, {secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
