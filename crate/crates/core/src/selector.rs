//! Edit-tree selection with a hashed-feature linear classifier.
//!
//! Every token is described by a sparse set of binary features (affixes,
//! tags, neighbor context) hashed into a fixed index space. A multinomial
//! logistic regression over the retained edit trees is trained with SGD on
//! the cross-entropy loss; negligible non-gold gradient components are
//! skipped so that weight rows stay sparse. At prediction time the `top_k` best
//! scoring trees are tried in order and the first one that fits the form
//! produces the lemma.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, Token};
use crate::edit_tree::{EditTree, TreeId, TreeInventory};
use crate::error::TrainError;
use crate::rules;

/// Weights whose magnitude stays below this after training are dropped
/// when the model is frozen.
pub const PRUNE_THRESHOLD: f32 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub top_k: usize,
    pub feature_space_size: u32,
    pub epochs: usize,
    pub learning_rate: f32,
    pub seed: u64,
    pub min_tree_freq: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            top_k: 3,
            feature_space_size: 1 << 20,
            epochs: 10,
            learning_rate: 0.1,
            seed: 0,
            min_tree_freq: 1,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.top_k == 0 {
            return Err(TrainError::Config("top_k must be at least 1".to_owned()));
        }
        if !self.feature_space_size.is_power_of_two() || self.feature_space_size < 1 << 10 {
            return Err(TrainError::Config(format!(
                "feature space size must be a power of two >= 1024, got {}",
                self.feature_space_size
            )));
        }
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1".to_owned()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Feature templates. The discriminant is hashed together with the value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Template {
    Bias = 0,
    Suffix1 = 1,
    Suffix2,
    Suffix3,
    Suffix4,
    Suffix5,
    Prefix1,
    Prefix2,
    Prefix3,
    Form,
    Upos,
    Feat,
    PrevUpos,
    NextUpos,
    PrevSuffix1,
    PrevSuffix2,
    PrevSuffix3,
    NextSuffix1,
    NextSuffix2,
    NextSuffix3,
    HasDigit,
    UposSuffix1,
    UposSuffix2,
    UposSuffix3,
    UposSuffix4,
    UposSuffix5,
    UposFeats,
}

const SUFFIXES: [Template; 5] = [
    Template::Suffix1,
    Template::Suffix2,
    Template::Suffix3,
    Template::Suffix4,
    Template::Suffix5,
];
const UPOS_SUFFIXES: [Template; 5] = [
    Template::UposSuffix1,
    Template::UposSuffix2,
    Template::UposSuffix3,
    Template::UposSuffix4,
    Template::UposSuffix5,
];
const PREFIXES: [Template; 3] = [Template::Prefix1, Template::Prefix2, Template::Prefix3];
const PREV_SUFFIXES: [Template; 3] = [
    Template::PrevSuffix1,
    Template::PrevSuffix2,
    Template::PrevSuffix3,
];
const NEXT_SUFFIXES: [Template; 3] = [
    Template::NextSuffix1,
    Template::NextSuffix2,
    Template::NextSuffix3,
];

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

struct Fnv(u64);

impl Fnv {
    fn new(template: Template) -> Self {
        let mut h = Fnv(0xcbf2_9ce4_8422_2325);
        h.write(&[template as u8, 0xff]);
        h
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self, mask: u32) -> u32 {
        ((self.0 ^ (self.0 >> 32)) as u32) & mask
    }
}

/// Hash index of a (template, value) pair; `value` parts are hashed as if
/// joined by a `\x01` separator.
pub fn feature_index(template: Template, parts: &[&str], feature_space_size: u32) -> u32 {
    let mut h = Fnv::new(template);
    for (idx, part) in parts.iter().enumerate() {
        if idx > 0 {
            h.write(&[0x01]);
        }
        h.write(part.as_bytes());
    }
    h.finish(feature_space_size - 1)
}

/// Sorted, deduplicated hashed feature indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
}

/// The last `n` chars, if the text has that many.
fn suffix(text: &str, n: usize) -> Option<&str> {
    let (idx, _) = text.char_indices().rev().nth(n - 1)?;
    Some(&text[idx..])
}

fn prefix(text: &str, n: usize) -> Option<&str> {
    match text.char_indices().nth(n) {
        Some((idx, _)) => Some(&text[..idx]),
        None if text.chars().count() == n => Some(text),
        None => None,
    }
}

/// Extracts hashed context features for tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureExtractor {
    pub feature_space_size: u32,
    pub casing: bool,
}

impl FeatureExtractor {
    pub fn new(feature_space_size: u32, casing: bool) -> Self {
        FeatureExtractor {
            feature_space_size,
            casing,
        }
    }

    pub fn extract(&self, sentence: &Sentence, position: usize) -> FeatureVector {
        let tokens = sentence.tokens();
        let token = &tokens[position];
        let form = rules::normalized_form(token, self.casing);
        let mut indices = Vec::with_capacity(40);
        let mut push = |template: Template, parts: &[&str]| {
            indices.push(feature_index(template, parts, self.feature_space_size))
        };

        push(Template::Bias, &[]);
        for n in 1..=5 {
            if let Some(s) = suffix(&form, n) {
                push(SUFFIXES[n - 1], &[s]);
                push(UPOS_SUFFIXES[n - 1], &[&token.upos, s]);
            }
        }
        for n in 1..=3 {
            if let Some(p) = prefix(&form, n) {
                push(PREFIXES[n - 1], &[p]);
            }
        }
        push(Template::Form, &[&form]);
        push(Template::Upos, &[&token.upos]);
        for (key, value) in &token.feats {
            push(Template::Feat, &[key, value]);
        }
        push(Template::UposFeats, &[&token.upos, &token.feats_string()]);
        if form.chars().any(rules::is_decimal_digit) {
            push(Template::HasDigit, &["1"]);
        }

        self.neighbor(
            position.checked_sub(1).map(|p| &tokens[p]),
            Template::PrevUpos,
            &PREV_SUFFIXES,
            BOS,
            &mut push,
        );
        self.neighbor(
            tokens.get(position + 1),
            Template::NextUpos,
            &NEXT_SUFFIXES,
            EOS,
            &mut push,
        );

        indices.sort_unstable();
        indices.dedup();
        FeatureVector { indices }
    }

    fn neighbor(
        &self,
        token: Option<&Token>,
        upos_template: Template,
        suffix_templates: &[Template; 3],
        boundary: &str,
        push: &mut impl FnMut(Template, &[&str]),
    ) {
        match token {
            None => push(upos_template, &[boundary]),
            Some(token) => {
                push(upos_template, &[&token.upos]);
                let form = rules::normalized_form(token, self.casing);
                for n in 1..=3 {
                    if let Some(s) = suffix(&form, n) {
                        push(suffix_templates[n - 1], &[s]);
                    }
                }
            }
        }
    }
}

/// Softmax cross-entropy of `logits` against class `gold`.
///
/// Returns the loss and writes d(loss)/d(logits) into `grad`.
pub fn softmax_cross_entropy_into(logits: &[f64], gold: usize, grad: &mut Vec<f64>) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    grad.clear();
    grad.extend(logits.iter().map(|&l| (l - max).exp()));
    let norm: f64 = grad.iter().sum();
    for g in grad.iter_mut() {
        *g /= norm;
    }
    let loss = norm.ln() - (logits[gold] - max);
    grad[gold] -= 1.0;
    loss
}

pub fn softmax_cross_entropy(logits: &[f64], gold: usize) -> (f64, Vec<f64>) {
    let mut grad = Vec::with_capacity(logits.len());
    let loss = softmax_cross_entropy_into(logits, gold, &mut grad);
    (loss, grad)
}

/// Loss and weight gradient of a dense linear softmax model.
///
/// `weights[c][f]` is the weight of feature `f` for class `c`; `input` holds
/// the feature values.
pub fn linear_loss_gradient(
    weights: &[Vec<f64>],
    input: &[f64],
    gold: usize,
) -> (f64, Vec<Vec<f64>>) {
    let logits: Vec<f64> = weights
        .iter()
        .map(|row| row.iter().zip(input).map(|(w, x)| w * x).sum())
        .collect();
    let (loss, dlogits) = softmax_cross_entropy(&logits, gold);
    let grad = dlogits
        .iter()
        .map(|&d| input.iter().map(|&x| d * x).collect())
        .collect();
    (loss, grad)
}

/// Non-gold gradient components below this magnitude are not applied, so a
/// feature's row only holds classes that were gold or competitive for it.
pub const UPDATE_THRESHOLD: f64 = 1e-2;

/// Weights of one feature, sorted by class.
#[derive(Clone, Debug, Default)]
struct Row {
    classes: Vec<u32>,
    values: Vec<f32>,
}

impl Row {
    fn get(&self, class: u32) -> f32 {
        match self.classes.binary_search(&class) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    fn slot(&mut self, class: u32) -> &mut f32 {
        let i = match self.classes.binary_search(&class) {
            Ok(i) => i,
            Err(i) => {
                self.classes.insert(i, class);
                self.values.insert(i, 0.0);
                i
            }
        };
        &mut self.values[i]
    }
}

/// Weights during training: a sparse row over classes per seen feature.
#[derive(Clone, Debug, Default)]
pub struct TrainingWeights {
    n_classes: usize,
    rows: HashMap<u32, Row>,
}

impl TrainingWeights {
    pub fn new(n_classes: usize) -> Self {
        TrainingWeights {
            n_classes,
            rows: HashMap::new(),
        }
    }

    pub fn get(&self, feature: u32, class: usize) -> f32 {
        self.rows
            .get(&feature)
            .map_or(0.0, |row| row.get(class as u32))
    }

    pub fn set(&mut self, feature: u32, class: usize, value: f32) {
        *self.rows.entry(feature).or_default().slot(class as u32) = value;
    }

    pub fn logits(&self, features: &[u32], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.n_classes, 0.0);
        for f in features {
            if let Some(row) = self.rows.get(f) {
                for (&c, &w) in row.classes.iter().zip(&row.values) {
                    out[c as usize] += w as f64;
                }
            }
        }
    }

    /// One SGD step on a single example with binary features. Returns the
    /// loss before the update.
    pub fn sgd_step(&mut self, features: &[u32], gold: usize, learning_rate: f32) -> f64 {
        let mut buffers = StepBuffers::default();
        self.step_with_buffers(features, gold, learning_rate, &mut buffers)
    }

    fn step_with_buffers(
        &mut self,
        features: &[u32],
        gold: usize,
        learning_rate: f32,
        buffers: &mut StepBuffers,
    ) -> f64 {
        self.logits(features, &mut buffers.logits);
        let loss = softmax_cross_entropy_into(&buffers.logits, gold, &mut buffers.grad);
        buffers.updates.clear();
        buffers.updates.extend(
            buffers
                .grad
                .iter()
                .enumerate()
                .filter(|&(c, g)| c == gold || g.abs() >= UPDATE_THRESHOLD)
                .map(|(c, &g)| (c as u32, learning_rate * g as f32)),
        );
        for &f in features {
            let row = self.rows.entry(f).or_default();
            for &(c, delta) in &buffers.updates {
                *row.slot(c) -= delta;
            }
        }
        loss
    }

    fn freeze(self) -> SparseWeights {
        let mut rows: Vec<(u32, Row)> = self.rows.into_iter().collect();
        rows.sort_unstable_by_key(|&(f, _)| f);

        let mut weights = SparseWeights {
            n_classes: self.n_classes as u32,
            ..SparseWeights::default()
        };
        for (f, row) in rows {
            let start = weights.classes.len();
            for (&class, &w) in row.classes.iter().zip(&row.values) {
                if w.abs() >= PRUNE_THRESHOLD {
                    weights.classes.push(class);
                    weights.values.push(w);
                }
            }
            if weights.classes.len() > start {
                weights.features.push(f);
                weights.offsets.push(weights.classes.len() as u32);
            }
        }
        weights
    }
}

#[derive(Default)]
struct StepBuffers {
    logits: Vec<f64>,
    grad: Vec<f64>,
    updates: Vec<(u32, f32)>,
}

/// Frozen weights in compressed sparse rows keyed by feature index.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseWeights {
    pub n_classes: u32,
    /// Sorted feature indices that have at least one stored weight.
    pub features: Vec<u32>,
    /// `offsets[i]..offsets[i + 1]` delimits the entries of `features[i]`.
    pub offsets: Vec<u32>,
    pub classes: Vec<u32>,
    pub values: Vec<f32>,
}

impl Default for SparseWeights {
    fn default() -> Self {
        SparseWeights {
            n_classes: 0,
            features: Vec::new(),
            offsets: vec![0],
            classes: Vec::new(),
            values: Vec::new(),
        }
    }
}

impl SparseWeights {
    pub fn validate(&self) -> Result<(), String> {
        if self.offsets.len() != self.features.len() + 1 || self.offsets.first() != Some(&0) {
            return Err("offset table does not match feature count".to_owned());
        }
        if self.classes.len() != self.values.len()
            || *self.offsets.last().unwrap() as usize != self.classes.len()
        {
            return Err("entry arrays do not match offsets".to_owned());
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err("offsets are not monotone".to_owned());
        }
        if self.features.windows(2).any(|w| w[0] >= w[1]) {
            return Err("feature indices are not strictly increasing".to_owned());
        }
        if self.classes.iter().any(|&c| c >= self.n_classes) {
            return Err("class index out of range".to_owned());
        }
        Ok(())
    }

    pub fn add_logits(&self, features: &[u32], logits: &mut [f32]) {
        for f in features {
            if let Ok(i) = self.features.binary_search(f) {
                let (start, end) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
                for (&c, &w) in self.classes[start..end]
                    .iter()
                    .zip(&self.values[start..end])
                {
                    logits[c as usize] += w;
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectorModel {
    pub config: SelectorConfig,
    pub casing: bool,
    /// Class index to tree id, ascending by tree id.
    pub labels: Vec<TreeId>,
    pub weights: SparseWeights,
}

/// Intern the tree of every training token. This is the pass that fills the
/// inventory before the selector is trained.
pub fn populate_inventory(
    corpus: &Corpus,
    inventory: &mut TreeInventory,
    casing: bool,
) -> Result<(), TrainError> {
    for (sent_idx, sentence) in corpus.sentences.iter().enumerate() {
        for (tok_idx, token) in sentence.tokens().iter().enumerate() {
            let (form, lemma) = rules::training_pair(token, casing, sent_idx, tok_idx)?;
            let tree = EditTree::build(&form, &lemma).map_err(|source| TrainError::Tree {
                sentence: sent_idx,
                token: tok_idx,
                source,
            })?;
            inventory.intern(tree);
        }
    }
    Ok(())
}

struct Example {
    features: Vec<u32>,
    class: usize,
}

impl SelectorModel {
    /// Train the classifier. `inventory` must already hold the tree of every
    /// training token (see [`populate_inventory`]).
    pub fn train(
        corpus: &Corpus,
        inventory: &TreeInventory,
        config: &SelectorConfig,
        casing: bool,
    ) -> Result<SelectorModel, TrainError> {
        config.validate()?;
        if corpus.token_count() == 0 {
            return Err(TrainError::EmptyCorpus);
        }

        // Tree of each token and label frequencies, counted from the corpus
        // itself so lookup interning cannot inflate them.
        let mut token_trees = Vec::with_capacity(corpus.token_count());
        let mut counts: HashMap<TreeId, u64> = HashMap::new();
        for (sent_idx, sentence) in corpus.sentences.iter().enumerate() {
            for (tok_idx, token) in sentence.tokens().iter().enumerate() {
                let (form, lemma) = rules::training_pair(token, casing, sent_idx, tok_idx)?;
                let tree = EditTree::build(&form, &lemma).map_err(|source| TrainError::Tree {
                    sentence: sent_idx,
                    token: tok_idx,
                    source,
                })?;
                let id = inventory.id(&tree).ok_or_else(|| {
                    TrainError::Config(format!(
                        "tree of sentence {}, token {} is missing from the inventory",
                        sent_idx, tok_idx
                    ))
                })?;
                token_trees.push(id);
                *counts.entry(id).or_default() += 1;
            }
        }

        let mut labels: Vec<TreeId> = counts
            .iter()
            .filter(|(_, &n)| n >= config.min_tree_freq)
            .map(|(&id, _)| id)
            .collect();
        labels.sort_unstable();
        if labels.is_empty() {
            return Err(TrainError::EmptyLabelSpace {
                min_tree_freq: config.min_tree_freq,
            });
        }
        let class_of: HashMap<TreeId, usize> =
            labels.iter().enumerate().map(|(c, &id)| (id, c)).collect();

        let extractor = FeatureExtractor::new(config.feature_space_size, casing);
        let mut examples = Vec::new();
        let mut trees = token_trees.into_iter();
        for sentence in &corpus.sentences {
            for position in 0..sentence.len() {
                let tree = trees.next().expect("one tree per token");
                if let Some(&class) = class_of.get(&tree) {
                    examples.push(Example {
                        features: extractor.extract(sentence, position).indices,
                        class,
                    });
                }
            }
        }

        let mut weights = TrainingWeights::new(labels.len());
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut buffers = StepBuffers::default();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &idx in &order {
                let example = &examples[idx];
                weights.step_with_buffers(
                    &example.features,
                    example.class,
                    config.learning_rate,
                    &mut buffers,
                );
            }
        }

        Ok(SelectorModel {
            config: config.clone(),
            casing,
            labels,
            weights: weights.freeze(),
        })
    }

    pub fn extractor(&self) -> FeatureExtractor {
        FeatureExtractor::new(self.config.feature_space_size, self.casing)
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    /// Scores of every retained tree, indexed by class.
    pub fn scores(&self, sentence: &Sentence, position: usize) -> Vec<f32> {
        let features = self.extractor().extract(sentence, position);
        let mut logits = vec![0.0f32; self.labels.len()];
        self.weights.add_logits(&features.indices, &mut logits);
        logits
    }

    /// The `config.top_k` best trees, best first.
    pub fn predict_topk(&self, sentence: &Sentence, position: usize) -> Vec<(TreeId, f32)> {
        self.predict_top(sentence, position, self.config.top_k)
    }

    /// The `k` best trees, score-descending, ties to the smaller tree id.
    pub fn predict_top(
        &self,
        sentence: &Sentence,
        position: usize,
        k: usize,
    ) -> Vec<(TreeId, f32)> {
        let scores = self.scores(sentence, position);
        let k = k.min(scores.len());
        let mut best: Vec<(usize, f32)> = Vec::with_capacity(k + 1);
        for (class, &score) in scores.iter().enumerate() {
            // Classes are visited in ascending tree-id order, so a strict
            // comparison keeps the earlier class on ties.
            if best.len() == k && best.last().is_some_and(|&(_, s)| score <= s) {
                continue;
            }
            let pos = best.partition_point(|&(_, s)| s >= score);
            best.insert(pos, (class, score));
            best.truncate(k);
        }
        best.into_iter()
            .map(|(class, score)| (self.labels[class], score))
            .collect()
    }

    /// Rank of the first applicable candidate among the top `k` together
    /// with its output.
    pub fn first_applicable(
        &self,
        inventory: &TreeInventory,
        sentence: &Sentence,
        position: usize,
        normalized_form: &str,
        k: usize,
    ) -> Option<(usize, String)> {
        let chars: Vec<char> = normalized_form.chars().collect();
        self.predict_top(sentence, position, k)
            .into_iter()
            .enumerate()
            .find_map(|(rank, (id, _))| {
                let lemma = inventory.get(id)?.apply_chars(&chars)?;
                (!lemma.is_empty()).then_some((rank, lemma))
            })
    }

    /// Lemma from the first applicable top-k tree, or the normalized form
    /// when none applies.
    pub fn lemmatize(
        &self,
        inventory: &TreeInventory,
        sentence: &Sentence,
        position: usize,
    ) -> String {
        let form = rules::normalized_form(&sentence.tokens()[position], self.casing);
        match self.first_applicable(inventory, sentence, position, &form, self.config.top_k) {
            Some((_, lemma)) => lemma,
            None => form,
        }
    }

    /// Fraction of corpus tokens for which one of the top `k` trees applies.
    pub fn coverage(&self, inventory: &TreeInventory, corpus: &Corpus, k: usize) -> f64 {
        let total = corpus.token_count();
        if total == 0 {
            return 0.0;
        }
        let covered: usize = corpus
            .sentences
            .iter()
            .map(|sentence| {
                (0..sentence.len())
                    .filter(|&position| {
                        let form =
                            rules::normalized_form(&sentence.tokens()[position], self.casing);
                        self.first_applicable(inventory, sentence, position, &form, k)
                            .is_some()
                    })
                    .count()
            })
            .sum();
        covered as f64 / total as f64
    }
}
