//! Dictionary lemmatizer keyed on (digit-masked form, UPOS, FEATS).
//!
//! Entries store an edit-tree id rather than a literal lemma. Applying the
//! tree to the unmasked form carries the token's own digits into the lemma,
//! so an entry learned from `1000-ben` also serves `3000-ben`.

use std::collections::HashMap;

use crate::corpus::{feats_to_string, Corpus, Feats, Token};
use crate::edit_tree::{EditTree, TreeId, TreeInventory};
use crate::error::TrainError;
use crate::rules;

/// Replace every Unicode decimal digit with `0`.
pub fn mask_digits(text: &str) -> String {
    text.chars()
        .map(|c| if rules::is_decimal_digit(c) { '0' } else { c })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LookupKey {
    pub masked_form: String,
    pub upos: String,
    pub feats: Feats,
}

impl LookupKey {
    /// `normalized_form` is the casing-normalized surface form.
    pub fn new(normalized_form: &str, token: &Token) -> Self {
        LookupKey {
            masked_form: mask_digits(normalized_form),
            upos: token.upos.clone(),
            feats: token.feats.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LookupEntry {
    pub tree: TreeId,
    /// Occurrences of the stored transformation under this key.
    pub count: u64,
    /// Occurrences of the key.
    pub total: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LookupTable {
    entries: HashMap<LookupKey, LookupEntry>,
}

impl LookupTable {
    /// Memorize the most frequent transformation for each key of the
    /// training corpus. Ties go to the smaller tree id.
    pub fn train(
        corpus: &Corpus,
        inventory: &mut TreeInventory,
        casing: bool,
    ) -> Result<LookupTable, TrainError> {
        let mut counts: HashMap<LookupKey, HashMap<TreeId, u64>> = HashMap::new();

        for (sent_idx, sentence) in corpus.sentences.iter().enumerate() {
            for (tok_idx, token) in sentence.tokens().iter().enumerate() {
                let (form, lemma) = rules::training_pair(token, casing, sent_idx, tok_idx)?;
                let tree = EditTree::build(&mask_digits(&form), &mask_digits(&lemma)).map_err(
                    |source| TrainError::Tree {
                        sentence: sent_idx,
                        token: tok_idx,
                        source,
                    },
                )?;
                let id = inventory.intern(tree);
                *counts
                    .entry(LookupKey::new(&form, token))
                    .or_default()
                    .entry(id)
                    .or_default() += 1;
            }
        }

        let entries = counts
            .into_iter()
            .map(|(key, per_tree)| {
                let total = per_tree.values().sum();
                let (tree, count) = per_tree
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                    .expect("every key has at least one tree");
                (key, LookupEntry { tree, count, total })
            })
            .collect();

        Ok(LookupTable { entries })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (LookupKey, LookupEntry)>) -> Self {
        LookupTable {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, key: &LookupKey) -> Option<&LookupEntry> {
        self.entries.get(key)
    }

    /// Lemmatize a token whose casing-normalized form is `normalized_form`.
    /// `None` on a key miss or when the stored tree does not fit.
    pub fn apply(
        &self,
        inventory: &TreeInventory,
        token: &Token,
        normalized_form: &str,
    ) -> Option<String> {
        let entry = self.entries.get(&LookupKey::new(normalized_form, token))?;
        inventory.get(entry.tree)?.apply(normalized_form)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn sorted_entries(&self) -> Vec<(&LookupKey, &LookupEntry)> {
        let mut entries: Vec<_> = self.entries.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries
    }

    /// Tab-separated dump: masked form, UPOS, FEATS, tree, count, total.
    pub fn dump(&self, inventory: &TreeInventory) -> String {
        let mut out = String::new();
        for (key, entry) in self.sorted_entries() {
            let tree = inventory
                .get(entry.tree)
                .map(|t| t.to_string())
                .unwrap_or_else(|| format!("#{}", entry.tree));
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                key.masked_form,
                key.upos,
                feats_to_string(&key.feats),
                tree,
                entry.count,
                entry.total
            ));
        }
        out
    }
}
