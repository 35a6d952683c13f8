use thiserror::Error;

use crate::edit_tree::BuildError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("sentence {sentence}, token {token} ('{form}'): no gold lemma")]
    MissingLemma {
        sentence: usize,
        token: usize,
        form: String,
    },
    #[error("sentence {sentence}, token {token}: {source}")]
    Tree {
        sentence: usize,
        token: usize,
        source: BuildError,
    },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no edit tree occurs at least {min_tree_freq} times; nothing to train on")]
    EmptyLabelSpace { min_tree_freq: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}
