//! Hand-written corrections applied around the statistical stages.
//!
//! * Casing: lemmas of anything but proper nouns start lowercase. The same
//!   normalization is applied to training pairs so that edit trees and
//!   lookup keys never encode sentence-initial capitals.
//! * Mark stripping: `!` and `?` never belong in a lemma.
//! * Number trimming: for tokens like `4-6-os` or `2020-ban` the lemma is
//!   the numeric core of the *token*, since predicted lemmas for such
//!   tokens are unreliable.

use serde::{Deserialize, Serialize};

use crate::corpus::Token;
use crate::error::TrainError;

pub const PROPER_NOUN: &str = "PROPN";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConfig {
    pub enable_casing: bool,
    pub enable_mark_strip: bool,
    pub enable_number_trim: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            enable_casing: true,
            enable_mark_strip: true,
            enable_number_trim: true,
        }
    }
}

impl RuleConfig {
    pub fn none() -> Self {
        RuleConfig {
            enable_casing: false,
            enable_mark_strip: false,
            enable_number_trim: false,
        }
    }
}

/// Unicode decimal digit (general category Nd).
pub fn is_decimal_digit(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_digit();
    }
    // Nd is a subset of the numeric categories; `regex` carries the tables.
    static ND: std::sync::LazyLock<regex::Regex> =
        std::sync::LazyLock::new(|| regex::Regex::new(r"^\p{Nd}$").unwrap());
    c.is_numeric() && ND.is_match(c.encode_utf8(&mut [0; 4]))
}

fn lowercase_first(text: &str) -> Option<String> {
    let mut chars = text.chars();
    let first = chars.next()?;
    if !first.is_uppercase() {
        return None;
    }
    let mut out = String::with_capacity(text.len());
    out.extend(first.to_lowercase());
    out.push_str(chars.as_str());
    Some(out)
}

/// Lowercase the first character of a non-PROPN word; leave proper nouns
/// alone.
pub fn normalize_case(text: &str, upos: &str) -> String {
    if upos == PROPER_NOUN {
        return text.to_owned();
    }
    lowercase_first(text).unwrap_or_else(|| text.to_owned())
}

/// Training-time casing normalization of a (form, lemma) pair.
///
/// Sentence position is accepted for completeness but does not change the
/// outcome: every non-PROPN pair is lowercased.
pub fn case_normalize_training(
    form: &str,
    lemma: &str,
    upos: &str,
    _is_sentence_initial: bool,
) -> (String, String) {
    (normalize_case(form, upos), normalize_case(lemma, upos))
}

/// Casing-normalized form of a token as seen by the lookup and selector
/// stages.
pub fn normalized_form(token: &Token, casing: bool) -> String {
    if casing {
        normalize_case(&token.form, &token.upos)
    } else {
        token.form.clone()
    }
}

/// The normalized (form, lemma) pair a training token contributes.
pub fn training_pair(
    token: &Token,
    casing: bool,
    sentence: usize,
    index: usize,
) -> Result<(String, String), TrainError> {
    let lemma = match token.lemma.as_deref() {
        Some(lemma) if !lemma.is_empty() => lemma,
        _ => {
            return Err(TrainError::MissingLemma {
                sentence,
                token: index,
                form: token.form.clone(),
            })
        }
    };
    if casing {
        Ok(case_normalize_training(
            &token.form,
            lemma,
            &token.upos,
            token.is_sentence_initial,
        ))
    } else {
        Ok((token.form.clone(), lemma.to_owned()))
    }
}

pub fn apply_casing(lemma: &str, upos: &str) -> String {
    normalize_case(lemma, upos)
}

/// Remove `!` and `?` from a lemma unless nothing would be left.
pub fn strip_marks(_token_form: &str, lemma: &str) -> String {
    if !lemma.contains(['!', '?']) {
        return lemma.to_owned();
    }
    let stripped: String = lemma.chars().filter(|&c| c != '!' && c != '?').collect();
    if stripped.is_empty() {
        lemma.to_owned()
    } else {
        stripped
    }
}

fn is_core_separator(c: char) -> bool {
    matches!(c, '.' | ',' | ':' | '/' | '–' | '—')
}

/// If `form` is a numeric or date core followed by `-` and an alphabetic
/// suffix, return the core without trailing separators.
///
/// The core starts with a decimal digit and consists of digits and the
/// separators `. , : / – —`; a hyphen may appear inside the core only when
/// a digit follows it.
pub fn numeric_core(form: &str) -> Option<&str> {
    let (core, suffix) = form.rsplit_once('-')?;
    if suffix.is_empty() || !suffix.chars().all(char::is_alphabetic) {
        return None;
    }

    let chars: Vec<char> = core.chars().collect();
    if !chars.first().copied().is_some_and(is_decimal_digit) {
        return None;
    }
    for (idx, &c) in chars.iter().enumerate() {
        let ok = is_decimal_digit(c)
            || is_core_separator(c)
            || (c == '-' && chars.get(idx + 1).copied().is_some_and(is_decimal_digit));
        if !ok {
            return None;
        }
    }

    Some(core.trim_end_matches(is_core_separator))
}

pub fn trim_number_suffix(token_form: &str, lemma: &str) -> String {
    match numeric_core(token_form) {
        Some(core) => core.to_owned(),
        None => lemma.to_owned(),
    }
}

/// Run the enabled rules over a candidate lemma.
///
/// Marks are stripped before casing is applied so that a mark in front of
/// a capital (`!Alma`) cannot leave an uppercase initial behind.
pub fn postprocess(token: &Token, lemma: &str, config: &RuleConfig) -> String {
    let mut lemma = lemma.to_owned();
    if config.enable_mark_strip {
        lemma = strip_marks(&token.form, &lemma);
    }
    if config.enable_casing {
        lemma = apply_casing(&lemma, &token.upos);
    }
    if config.enable_number_trim {
        lemma = trim_number_suffix(&token.form, &lemma);
    }
    lemma
}
