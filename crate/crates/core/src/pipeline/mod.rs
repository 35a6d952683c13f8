//! The three-stage hybrid lemmatizer.
//!
//! For every token the lookup table is consulted first; a hit is final. On
//! a miss the selector's top-k edit trees are tried, falling back to the
//! normalized form. The post-processing rules run over whatever candidate
//! the first two stages produced.

mod archive;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, Sentence};
use crate::edit_tree::TreeInventory;
use crate::error::TrainError;
use crate::lookup::LookupTable;
use crate::rules::{self, RuleConfig};
use crate::selector::{self, SelectorConfig, SelectorModel};

pub use archive::{load_model, save_model, ModelError, FORMAT_VERSION, MAGIC};

#[derive(Clone, Debug, PartialEq)]
pub struct LemmatizerModel {
    pub inventory: TreeInventory,
    pub lookup: LookupTable,
    pub selector: SelectorModel,
    pub rules: RuleConfig,
    pub format_version: u32,
    /// Free-form provenance, JSON when produced by [`train`].
    pub metadata: String,
}

/// Which stages run. The selector always runs on lookup misses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub lookup: bool,
    pub rules: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            lookup: true,
            rules: true,
        }
    }
}

impl Stages {
    pub fn selector_only() -> Self {
        Stages {
            lookup: false,
            rules: false,
        }
    }
}

/// Which stage produced the candidate lemma.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Lookup,
    /// Zero-based rank of the applied tree in the top-k list.
    Selector(usize),
    /// No top-k tree applied; the normalized form was used.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub lemma: String,
    pub source: Source,
}

#[derive(Serialize)]
struct TrainingMetadata<'a> {
    corpus: &'a str,
    sentences: usize,
    tokens: usize,
    trees: usize,
    lookup_entries: usize,
    selector_classes: usize,
    selector: &'a SelectorConfig,
    rules: &'a RuleConfig,
}

/// Train the lookup table and the selector on the same casing-normalized
/// training pairs.
pub fn train(
    corpus: &Corpus,
    config: &SelectorConfig,
    rules: &RuleConfig,
) -> Result<LemmatizerModel, TrainError> {
    config.validate()?;
    if corpus.token_count() == 0 {
        return Err(TrainError::EmptyCorpus);
    }
    let casing = rules.enable_casing;

    let mut inventory = TreeInventory::new();
    selector::populate_inventory(corpus, &mut inventory, casing)?;
    let selector = SelectorModel::train(corpus, &inventory, config, casing)?;
    let lookup = LookupTable::train(corpus, &mut inventory, casing)?;

    let metadata = serde_json::to_string(&TrainingMetadata {
        corpus: &corpus.source_name,
        sentences: corpus.sentences.len(),
        tokens: corpus.token_count(),
        trees: inventory.len(),
        lookup_entries: lookup.len(),
        selector_classes: selector.n_classes(),
        selector: config,
        rules,
    })
    .expect("metadata serializes");

    Ok(LemmatizerModel {
        inventory,
        lookup,
        selector,
        rules: *rules,
        format_version: FORMAT_VERSION,
        metadata,
    })
}

impl LemmatizerModel {
    pub fn lemmatize(&self, sentence: &Sentence) -> Vec<String> {
        self.lemmatize_with(sentence, Stages::default())
            .into_iter()
            .map(|d| d.lemma)
            .collect()
    }

    pub fn lemmatize_with(&self, sentence: &Sentence, stages: Stages) -> Vec<Decision> {
        let casing = self.rules.enable_casing;
        let top_k = self.selector.config.top_k;
        sentence
            .tokens()
            .iter()
            .enumerate()
            .map(|(position, token)| {
                let form = rules::normalized_form(token, casing);
                let hit = if stages.lookup {
                    self.lookup
                        .apply(&self.inventory, token, &form)
                        .filter(|lemma| !lemma.is_empty())
                } else {
                    None
                };
                let (candidate, source) = match hit {
                    Some(lemma) => (lemma, Source::Lookup),
                    None => match self.selector.first_applicable(
                        &self.inventory,
                        sentence,
                        position,
                        &form,
                        top_k,
                    ) {
                        Some((rank, lemma)) => (lemma, Source::Selector(rank)),
                        None => (form, Source::Fallback),
                    },
                };
                let lemma = if stages.rules {
                    rules::postprocess(token, &candidate, &self.rules)
                } else {
                    candidate
                };
                Decision { lemma, source }
            })
            .collect()
    }

    /// Lemmatize a corpus, filling in the lemma of every token. Sentences
    /// are processed in parallel; output order equals input order.
    pub fn lemmatize_corpus(&self, corpus: &Corpus, stages: Stages) -> Corpus {
        let sentences = corpus
            .sentences
            .par_iter()
            .map(|sentence| self.lemmatized_sentence(sentence, stages))
            .collect();
        Corpus::new(corpus.source_name.clone(), sentences)
    }

    /// Single-threaded variant of [`LemmatizerModel::lemmatize_corpus`].
    pub fn lemmatize_corpus_serial(&self, corpus: &Corpus, stages: Stages) -> Corpus {
        let sentences = corpus
            .sentences
            .iter()
            .map(|sentence| self.lemmatized_sentence(sentence, stages))
            .collect();
        Corpus::new(corpus.source_name.clone(), sentences)
    }

    fn lemmatized_sentence(&self, sentence: &Sentence, stages: Stages) -> Sentence {
        let mut out = sentence.clone();
        for (token, decision) in out
            .tokens_mut()
            .iter_mut()
            .zip(self.lemmatize_with(sentence, stages))
        {
            token.lemma = Some(decision.lemma);
        }
        out
    }

    pub fn save<W: std::io::Write>(&self, writer: W) -> Result<(), ModelError> {
        save_model(self, writer)
    }

    pub fn load<R: std::io::Read>(reader: R) -> Result<Self, ModelError> {
        load_model(reader)
    }

    /// `id<TAB>freq<TAB>tree` per interned tree.
    pub fn dump_trees(&self) -> String {
        let mut out = String::new();
        for (id, tree, freq) in self.inventory.iter() {
            out.push_str(&format!("{}\t{}\t{}\n", id, freq, tree));
        }
        out
    }
}
