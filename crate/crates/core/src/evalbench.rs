//! Lemma accuracy scoring and throughput measurement.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;
use crate::pipeline::{LemmatizerModel, Stages};

/// Maximum number of mismatches kept in a report.
pub const MAX_ERROR_SAMPLES: usize = 50;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("corpora differ in sentence count ({gold} gold, {predicted} predicted)")]
    SentenceCount { gold: usize, predicted: usize },
    #[error("sentence {sentence}: {gold} gold tokens, {predicted} predicted")]
    TokenCount {
        sentence: usize,
        gold: usize,
        predicted: usize,
    },
    #[error("benchmark corpus is empty")]
    EmptyCorpus,
    #[error("at least one benchmark run is required")]
    NoRuns,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorSample {
    pub form: String,
    pub gold: String,
    pub predicted: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct UposScore {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub total_tokens: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub per_upos: BTreeMap<String, UposScore>,
    pub error_samples: Vec<ErrorSample>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Exact-match lemma accuracy over token-aligned corpora. Gold tokens
/// without a lemma still count and can only be matched by an absent
/// prediction.
pub fn lemma_accuracy(gold: &Corpus, predicted: &Corpus) -> Result<EvalReport, EvalError> {
    if gold.sentences.len() != predicted.sentences.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.sentences.len(),
            predicted: predicted.sentences.len(),
        });
    }
    for (idx, (g, p)) in gold.sentences.iter().zip(&predicted.sentences).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::TokenCount {
                sentence: idx,
                gold: g.len(),
                predicted: p.len(),
            });
        }
    }

    let mut total = 0;
    let mut correct = 0;
    let mut per_upos: BTreeMap<String, UposScore> = BTreeMap::new();
    let mut error_samples = Vec::new();

    for (g, p) in gold.tokens().zip(predicted.tokens()) {
        let ok = g.lemma == p.lemma;
        total += 1;
        let score = per_upos.entry(g.upos.clone()).or_default();
        score.total += 1;
        if ok {
            correct += 1;
            score.correct += 1;
        } else if error_samples.len() < MAX_ERROR_SAMPLES {
            error_samples.push(ErrorSample {
                form: g.form.clone(),
                gold: g.lemma.clone().unwrap_or_default(),
                predicted: p.lemma.clone().unwrap_or_default(),
            });
        }
    }
    for score in per_upos.values_mut() {
        score.accuracy = ratio(score.correct, score.total);
    }

    Ok(EvalReport {
        total_tokens: total,
        correct,
        accuracy: ratio(correct, total),
        per_upos,
        error_samples,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        writeln!(
            f,
            "lemma accuracy: {:.2}% ({} / {})",
            self.accuracy * 100.0,
            self.correct,
            self.total_tokens
        )?;
        writeln!(
            f,
            "{:<8} {:>8} {:>8} {:>9}",
            "UPOS", "tokens", "correct", "accuracy"
        )?;
        for (upos, score) in &self.per_upos {
            writeln!(
                f,
                "{:<8} {:>8} {:>8} {:>8.2}%",
                upos,
                score.total,
                score.correct,
                score.accuracy * 100.0
            )?;
        }
        if !self.error_samples.is_empty() {
            writeln!(f, "sample errors (form, gold, predicted):")?;
            for e in &self.error_samples {
                writeln!(f, "  {}\t{}\t{}", e.form, e.gold, e.predicted)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub tokens_per_second: f64,
    pub wall_seconds: f64,
    pub token_count: usize,
    pub runs: usize,
    pub best_of: usize,
    /// Wall time of every timed run, in order.
    pub run_seconds: Vec<f64>,
}

impl BenchReport {
    /// Build a report from per-run wall times; the fastest run wins.
    pub fn from_runs(token_count: usize, run_seconds: Vec<f64>) -> Self {
        let wall_seconds = run_seconds.iter().copied().fold(f64::INFINITY, f64::min);
        BenchReport {
            tokens_per_second: token_count as f64 / wall_seconds,
            wall_seconds,
            token_count,
            runs: run_seconds.len(),
            best_of: run_seconds.len(),
            run_seconds,
        }
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        writeln!(
            f,
            "{:.0} tokens/s (best of {} runs, {} tokens in {:.4} s)",
            self.tokens_per_second, self.best_of, self.token_count, self.wall_seconds
        )
    }
}

/// Time single-threaded end-to-end lemmatization of `corpus`: one untimed
/// warmup, then `runs` timed passes; the best pass is reported.
pub fn throughput_bench(
    model: &LemmatizerModel,
    corpus: &Corpus,
    runs: usize,
) -> Result<BenchReport, EvalError> {
    if runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let token_count = corpus.token_count();
    if token_count == 0 {
        return Err(EvalError::EmptyCorpus);
    }

    let pass = || {
        let mut produced = 0;
        for sentence in &corpus.sentences {
            produced +=
                std::hint::black_box(model.lemmatize_with(sentence, Stages::default())).len();
        }
        produced
    };

    pass();
    let mut run_seconds = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        let produced = pass();
        let elapsed = start.elapsed().as_secs_f64();
        debug_assert_eq!(produced, token_count);
        run_seconds.push(elapsed.max(f64::MIN_POSITIVE));
    }

    Ok(BenchReport::from_runs(token_count, run_seconds))
}
