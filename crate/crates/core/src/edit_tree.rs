//! Edit trees.
//!
//! An edit tree rewrites an inflected form into its lemma. A match node
//! splits the form around the longest common substring shared with the
//! lemma, copies that segment verbatim and delegates the prefix and suffix
//! to its subtrees. A replace node substitutes one literal segment for
//! another and only applies to exactly that segment.
//!
//! All lengths are counted in Unicode scalar values.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EditTree {
    Match {
        prefix_len: usize,
        suffix_len: usize,
        left: Box<EditTree>,
        right: Box<EditTree>,
    },
    Replace {
        source: String,
        target: String,
    },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("cannot build an edit tree for an empty form")]
    EmptyForm,
    #[error("cannot build an edit tree for an empty lemma (form '{0}')")]
    EmptyLemma(String),
}

/// Location of a longest common substring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommonSegment {
    pub start_a: usize,
    pub start_b: usize,
    pub len: usize,
}

/// Longest common contiguous substring of two character sequences.
///
/// Ties go to the smallest start in `a`, then the smallest start in `b`.
pub fn longest_common_substring_chars(a: &[char], b: &[char]) -> Option<CommonSegment> {
    if a.is_empty() || b.is_empty() {
        return None;
    }

    // prev[j + 1]: length of the common suffix of a[..i] and b[..=j].
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best: Option<CommonSegment> = None;

    for (i, &ca) in a.iter().enumerate() {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            let len = cur[j + 1];
            // Scanning end positions in ascending order and only accepting
            // strictly longer matches yields the leftmost segment in `a`, then
            // in `b`, for a fixed length.
            if len > best.map_or(0, |b| b.len) {
                best = Some(CommonSegment {
                    start_a: i + 1 - len,
                    start_b: j + 1 - len,
                    len,
                });
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    best
}

pub fn longest_common_substring(a: &str, b: &str) -> Option<CommonSegment> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    longest_common_substring_chars(&a, &b)
}

impl EditTree {
    /// Build the tree that rewrites `form` into `lemma`.
    pub fn build(form: &str, lemma: &str) -> Result<EditTree, BuildError> {
        if form.is_empty() {
            return Err(BuildError::EmptyForm);
        }
        if lemma.is_empty() {
            return Err(BuildError::EmptyLemma(form.to_owned()));
        }
        let form: Vec<char> = form.chars().collect();
        let lemma: Vec<char> = lemma.chars().collect();
        Ok(Self::build_chars(&form, &lemma))
    }

    /// Build a tree for arbitrary (possibly empty) character sequences.
    pub fn build_chars(form: &[char], lemma: &[char]) -> EditTree {
        match longest_common_substring_chars(form, lemma) {
            None => EditTree::Replace {
                source: form.iter().collect(),
                target: lemma.iter().collect(),
            },
            Some(seg) => {
                let form_end = seg.start_a + seg.len;
                let lemma_end = seg.start_b + seg.len;
                EditTree::Match {
                    prefix_len: seg.start_a,
                    suffix_len: form.len() - form_end,
                    left: Box::new(Self::build_chars(
                        &form[..seg.start_a],
                        &lemma[..seg.start_b],
                    )),
                    right: Box::new(Self::build_chars(&form[form_end..], &lemma[lemma_end..])),
                }
            }
        }
    }

    pub fn apply(&self, form: &str) -> Option<String> {
        let chars: Vec<char> = form.chars().collect();
        self.apply_chars(&chars)
    }

    /// Apply the tree to a form given as characters. Returns `None` when the
    /// tree does not fit the form.
    pub fn apply_chars(&self, form: &[char]) -> Option<String> {
        let mut out = String::with_capacity(form.len() + 4);
        if self.apply_into(form, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    fn apply_into(&self, form: &[char], out: &mut String) -> bool {
        match self {
            EditTree::Replace { source, target } => {
                if source.chars().eq(form.iter().copied()) {
                    out.push_str(target);
                    true
                } else {
                    false
                }
            }
            EditTree::Match {
                prefix_len,
                suffix_len,
                left,
                right,
            } => {
                if form.len() < prefix_len + suffix_len {
                    return false;
                }
                let middle_end = form.len() - suffix_len;
                if !left.apply_into(&form[..*prefix_len], out) {
                    return false;
                }
                out.extend(&form[*prefix_len..middle_end]);
                right.apply_into(&form[middle_end..], out)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            EditTree::Replace { .. } => 1,
            EditTree::Match { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

impl fmt::Display for EditTree {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            EditTree::Match {
                prefix_len,
                suffix_len,
                left,
                right,
            } => write!(
                f,
                "Match{{{},{}, {}, {}}}",
                prefix_len, suffix_len, left, right
            ),
            EditTree::Replace { source, target } => {
                write!(f, "Replace{{{:?},{:?}}}", source, target)
            }
        }
    }
}

pub type TreeId = u32;

/// Interned edit trees with training frequencies. Ids are dense and assigned
/// in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeInventory {
    trees: Vec<EditTree>,
    freq: Vec<u64>,
    index: HashMap<EditTree, TreeId>,
}

impl TreeInventory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Return the id of `tree`, registering it if needed, and count one
    /// occurrence.
    pub fn intern(&mut self, tree: EditTree) -> TreeId {
        if let Some(&id) = self.index.get(&tree) {
            self.freq[id as usize] += 1;
            return id;
        }
        let id = self.trees.len() as TreeId;
        self.index.insert(tree.clone(), id);
        self.trees.push(tree);
        self.freq.push(1);
        id
    }

    pub fn id(&self, tree: &EditTree) -> Option<TreeId> {
        self.index.get(tree).copied()
    }

    pub fn get(&self, id: TreeId) -> Option<&EditTree> {
        self.trees.get(id as usize)
    }

    pub fn freq(&self, id: TreeId) -> u64 {
        self.freq.get(id as usize).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TreeId, &EditTree, u64)> {
        self.trees
            .iter()
            .zip(&self.freq)
            .enumerate()
            .map(|(id, (tree, &freq))| (id as TreeId, tree, freq))
    }

    /// Rebuild an inventory from stored trees and frequencies.
    pub fn from_parts(trees: Vec<EditTree>, freq: Vec<u64>) -> Result<Self, String> {
        if trees.len() != freq.len() {
            return Err("tree and frequency counts differ".to_owned());
        }
        let mut index = HashMap::with_capacity(trees.len());
        for (id, tree) in trees.iter().enumerate() {
            if index.insert(tree.clone(), id as TreeId).is_some() {
                return Err(format!("duplicate tree at id {}", id));
            }
        }
        Ok(TreeInventory { trees, freq, index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn replace(source: &str, target: &str) -> Box<EditTree> {
        Box::new(EditTree::Replace {
            source: source.to_owned(),
            target: target.to_owned(),
        })
    }

    /// Enumerate every substring pair and keep the first longest one in
    /// (start_a, start_b) order.
    fn brute_force_lcs(a: &str, b: &str) -> Option<(usize, usize, usize)> {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut best: Option<(usize, usize, usize)> = None;
        for sa in 0..a.len() {
            for sb in 0..b.len() {
                let mut len = 0;
                while sa + len < a.len() && sb + len < b.len() && a[sa + len] == b[sb + len] {
                    len += 1;
                }
                if len > 0 && len > best.map_or(0, |b| b.2) {
                    best = Some((sa, sb, len));
                }
            }
        }
        best
    }

    #[test]
    fn lcs_worked_example() {
        assert_eq!(brute_force_lcs("leghosszabb", "hosszú"), Some((3, 0, 5)));
        assert_eq!(
            longest_common_substring("leghosszabb", "hosszú"),
            Some(CommonSegment {
                start_a: 3,
                start_b: 0,
                len: 5
            })
        );
    }

    #[test]
    fn lcs_edge_cases() {
        assert_eq!(longest_common_substring("leg", ""), None);
        assert_eq!(longest_common_substring("", "leg"), None);
        assert_eq!(longest_common_substring("abc", "xyz"), None);
        assert_eq!(
            longest_common_substring("abc", "abc"),
            Some(CommonSegment {
                start_a: 0,
                start_b: 0,
                len: 3
            })
        );
    }

    #[test]
    fn lcs_counts_diacritics_as_one_char() {
        // "ő" is two bytes in UTF-8.
        let seg = longest_common_substring("tőről", "tő").unwrap();
        assert_eq!((seg.start_a, seg.start_b, seg.len), (0, 0, 2));
        let seg = longest_common_substring("őzet", "őz").unwrap();
        assert_eq!((seg.start_a, seg.len), (0, 2));
    }

    #[test]
    fn build_worked_example() {
        let tree = EditTree::build("leghosszabb", "hosszú").unwrap();
        assert_eq!(
            tree,
            EditTree::Match {
                prefix_len: 3,
                suffix_len: 3,
                left: replace("leg", ""),
                right: replace("abb", "ú"),
            }
        );
        assert_eq!(
            tree.to_string(),
            r#"Match{3,3, Replace{"leg",""}, Replace{"abb","ú"}}"#
        );
    }

    #[test]
    fn build_identity() {
        let tree = EditTree::build("alma", "alma").unwrap();
        assert_eq!(
            tree,
            EditTree::Match {
                prefix_len: 0,
                suffix_len: 0,
                left: replace("", ""),
                right: replace("", ""),
            }
        );
    }

    #[test]
    fn build_ment_megy_golden() {
        let tree = EditTree::build("ment", "megy").unwrap();
        assert_eq!(tree.apply("ment").as_deref(), Some("megy"));
        assert_eq!(
            tree,
            EditTree::Match {
                prefix_len: 0,
                suffix_len: 2,
                left: replace("", ""),
                right: replace("nt", "gy"),
            }
        );
    }

    #[test]
    fn build_rejects_empty() {
        assert_eq!(EditTree::build("", "a"), Err(BuildError::EmptyForm));
        assert!(matches!(
            EditTree::build("a", ""),
            Err(BuildError::EmptyLemma(_))
        ));
    }

    #[test]
    fn no_common_char_is_single_replace() {
        let tree = EditTree::build("volt", "van").unwrap();
        // 'v' is shared, so this is a match node.
        assert!(matches!(tree, EditTree::Match { .. }));
        let tree = EditTree::build("is", "ki").unwrap();
        assert!(matches!(tree, EditTree::Match { .. }));
        let tree = EditTree::build("ő", "az").unwrap();
        assert_eq!(tree, *replace("ő", "az"));
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn apply_worked_example() {
        let tree = EditTree::build("leghosszabb", "hosszú").unwrap();
        assert_eq!(tree.apply("leghosszabb").as_deref(), Some("hosszú"));
        assert_eq!(tree.apply("legvadabb").as_deref(), Some("vadú"));
        assert_eq!(tree.apply("alma"), None);
        // Too short for prefix + suffix.
        assert_eq!(tree.apply("leg"), None);
    }

    #[test]
    fn intern_assigns_dense_ids() {
        let mut inventory = TreeInventory::new();
        let a = EditTree::build("házat", "ház").unwrap();
        let b = EditTree::build("falat", "fal").unwrap();
        let c = EditTree::build("leghosszabb", "hosszú").unwrap();
        assert_eq!(a, b);

        let id_a = inventory.intern(a.clone());
        assert_eq!(inventory.intern(a), id_a);
        assert_eq!(inventory.freq(id_a), 2);
        assert_eq!(inventory.intern(b), id_a);
        assert_eq!(inventory.freq(id_a), 3);
        let id_c = inventory.intern(c);
        assert_ne!(id_a, id_c);
        assert_eq!((id_a, id_c), (0, 1));
        assert_eq!(inventory.len(), 2);
    }

    fn hungarian_word() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[abcdeghijklmnoprstuvzáéíóöőúüű]{1,20}").unwrap()
    }

    proptest! {
        #[test]
        fn lcs_matches_brute_force(a in "[abő]{0,8}", b in "[abő]{0,8}") {
            let fast = longest_common_substring(&a, &b).map(|s| (s.start_a, s.start_b, s.len));
            prop_assert_eq!(fast, brute_force_lcs(&a, &b));
        }

        #[test]
        fn build_apply_roundtrip(form in hungarian_word(), lemma in hungarian_word()) {
            let tree = EditTree::build(&form, &lemma).unwrap();
            prop_assert_eq!(tree.apply(&form), Some(lemma));
        }

        #[test]
        fn rebuilt_tree_agrees(
            (form, lemma) in (hungarian_word(), hungarian_word()),
            other in hungarian_word(),
        ) {
            let tree = EditTree::build(&form, &lemma).unwrap();
            if let Some(out) = tree.apply(&other) {
                if !out.is_empty() {
                    let rebuilt = EditTree::build(&other, &out).unwrap();
                    prop_assert_eq!(rebuilt.apply(&other), Some(out));
                }
            }
        }

        #[test]
        fn build_is_deterministic(form in hungarian_word(), lemma in hungarian_word()) {
            prop_assert_eq!(
                EditTree::build(&form, &lemma).unwrap(),
                EditTree::build(&form, &lemma).unwrap()
            );
        }
    }
}
