use super::*;
use crate::corpus::{encode_all, generate_synthetic, SyntheticSpec, TokenizerKind, Vocabulary};
use crate::model::{Checkpoint, ModelConfig};
use crate::trainer::{fit, TrainConfig};

fn corpus(n: usize, templates: usize) -> Vec<crate::corpus::QCSTriple> {
    generate_synthetic(&SyntheticSpec {
        n_templates: templates,
        n_triples: n,
        seed: 4,
    })
    .unwrap()
}

fn experiment(n: usize) -> Experiment {
    let (train, test) = train_test_split(&corpus(n, 4), 0.25, 1).unwrap();
    Experiment {
        train,
        test,
        tokenizer: TokenizerKind::Word,
        min_count: 1,
        model: ModelConfig {
            embed_dim: 6,
            hidden_dim: 6,
            max_decode_len: 8,
            ..Default::default()
        },
        train_config: TrainConfig {
            iterations: 2,
            batch_size: 4,
            seed: 3,
            ..Default::default()
        },
    }
}

fn memorised() -> (Checkpoint, Vec<crate::corpus::QCSTriple>) {
    let triples = corpus(3, 3);
    let vocab = Vocabulary::build(&triples, 1, TokenizerKind::Word).unwrap();
    let model = ModelConfig {
        embed_dim: 12,
        hidden_dim: 12,
        vocab_size: vocab.len(),
        max_decode_len: 12,
        ..Default::default()
    };
    let train = TrainConfig {
        iterations: 150,
        lr: 0.1,
        seed: 2,
        ..Default::default()
    };
    let out = fit(&encode_all(&triples, &vocab).unwrap(), &vocab, &model, &train).unwrap();
    let ckpt = Checkpoint {
        model,
        vocab,
        train: serde_json::to_value(&train).unwrap(),
        iteration: 150,
        params: out.params,
    };
    (ckpt, triples)
}

#[test]
fn memorised_model_scores_one() {
    let (ckpt, triples) = memorised();
    let report = evaluate_corpus(&ckpt, &triples).unwrap();
    assert_eq!(report.rouge_l, 1.0, "{:#?}", report.examples);
    assert_eq!(report.conclusion.rouge_l, 1.0);
    assert_eq!(report.supplement.rouge_l, 1.0);
    assert_eq!(report.examples[0].generated_conclusion, triples[0].conclusion);
    assert_eq!(evaluate_corpus(&ckpt, &triples).unwrap(), report);
}

#[test]
fn means_aggregate_examples() {
    let exp = experiment(12);
    let report = exp.run(&exp.model).unwrap();
    let n = report.examples.len() as f64;
    let r: f64 = report.examples.iter().map(|e| e.answer.rouge_l).sum::<f64>() / n;
    let b: f64 = report.examples.iter().map(|e| e.answer.bleu_4).sum::<f64>() / n;
    assert!((report.rouge_l - r).abs() < 1e-12);
    assert!((report.bleu_4 - b).abs() < 1e-12);
    for e in &report.examples {
        for s in [e.answer, e.conclusion, e.supplement] {
            assert!((0.0..=1.0).contains(&s.rouge_l) && (0.0..=1.0).contains(&s.bleu_4));
        }
    }
    assert_eq!(report.config["model"]["vocab_size"], report.config["model"]["vocab_size"]);
    assert_eq!(report.config_hash, config_hash(&report.config).unwrap());
}

#[test]
fn split_is_seeded_and_disjoint() {
    let all = corpus(20, 4);
    let (a_train, a_test) = train_test_split(&all, 0.2, 5).unwrap();
    let (b_train, b_test) = train_test_split(&all, 0.2, 5).unwrap();
    assert_eq!((a_train.clone(), a_test.clone()), (b_train, b_test));
    assert_eq!(a_test.len(), 4);
    assert_eq!(a_train.len(), 16);
    assert!(a_test.iter().all(|t| a_train.iter().all(|u| u.id != t.id)));
    assert!(train_test_split(&all[..2], 0.5, 0).is_err());
    assert!(train_test_split(&all, 1.0, 0).is_err());
}

#[test]
fn sweep_rows_are_sorted_and_fingerprinted() {
    let exp = experiment(12);
    let rows = alpha_sweep(&exp, &[1.0]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].variant_or_alpha, "1");
    let rows = alpha_sweep(&exp, &[2.0, 0.0]).unwrap();
    assert_eq!(rows[0].variant_or_alpha, "0");
    assert_eq!(rows[1].variant_or_alpha, "2");
    assert_ne!(rows[0].config_hash, rows[1].config_hash);
    // The row hash is the hash of the exact run configuration.
    let vocab_size = Vocabulary::build(&exp.train, 1, TokenizerKind::Word).unwrap().len();
    let zero = serde_json::json!({
        "model": ModelConfig { alpha: 0.0, vocab_size, ..exp.model.clone() },
        "train": exp.train_config,
        "tokenizer": exp.tokenizer,
        "min_count": exp.min_count,
    });
    assert_eq!(rows[0].config_hash, config_hash(&zero).unwrap());
    assert!(alpha_sweep(&exp, &[]).is_err());
    let csv = table_csv(&rows);
    assert!(csv.starts_with("variant_or_alpha,rouge_l,bleu_4,seed,config_hash\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn ablation_maps_flags() {
    let exp = experiment(12);
    let rows = ablation_run(&exp).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.variant_or_alpha.as_str()).collect();
    assert_eq!(names, VARIANTS);
    let vocab_size = Vocabulary::build(&exp.train, 1, TokenizerKind::Word).unwrap().len();
    let expect = |use_attention, use_sentence_type| {
        config_hash(&serde_json::json!({
            "model": ModelConfig { vocab_size, use_attention, use_sentence_type, ..exp.model.clone() },
            "train": exp.train_config,
            "tokenizer": exp.tokenizer,
            "min_count": exp.min_count,
        }))
        .unwrap()
    };
    assert_eq!(rows[0].config_hash, expect(true, true));
    assert_eq!(rows[1].config_hash, expect(false, true));
    assert_eq!(rows[2].config_hash, expect(true, false));
}
