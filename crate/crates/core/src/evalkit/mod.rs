//! Generation metrics, corpus evaluation and experiment tables.

mod experiments;
mod metrics;
mod report;

pub use experiments::{
    ablation_run, alpha_sweep, experiment_hash, table_csv, train_test_split, write_table,
    Experiment, ExperimentRow, TABLE_HEADER, VARIANTS,
};
pub use metrics::{bleu_4, lcs_len, rouge_l, rouge_l_beta, Smoothing};
pub use report::{
    config_hash, evaluate_corpus, evaluate_params, EvalReport, ExampleReport, Scores,
};

#[cfg(test)]
mod tests;
