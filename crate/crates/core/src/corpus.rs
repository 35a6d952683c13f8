//! CoNLL-U reading and writing.
//!
//! Only the columns the lemmatizer consumes are modeled: FORM, LEMMA, UPOS
//! and FEATS. Multiword token ranges (`1-2`) and empty nodes (`1.1`) are
//! skipped while reading; every other column is written back as `_`.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

/// A canonical FEATS list: sorted by attribute name, no duplicate names.
pub type Feats = Vec<(String, String)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub upos: String,
    pub feats: Feats,
    pub lemma: Option<String>,
    pub is_sentence_initial: bool,
}

impl Token {
    pub fn new(form: impl Into<String>, upos: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            upos: upos.into(),
            feats: Vec::new(),
            lemma: None,
            is_sentence_initial: false,
        }
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = Some(lemma.into());
        self
    }

    /// Set FEATS from a UD `Key=Value|Key=Value` string. Invalid pairs are
    /// ignored; use [`parse_feats`] when errors matter.
    pub fn with_feats(mut self, feats: &str) -> Self {
        self.feats = parse_feats(feats).unwrap_or_default();
        self
    }

    pub fn feats_string(&self) -> String {
        feats_to_string(&self.feats)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Build a sentence, fixing up the sentence-initial flags.
    ///
    /// Panics if `tokens` is empty.
    pub fn new(mut tokens: Vec<Token>) -> Self {
        assert!(!tokens.is_empty(), "a sentence needs at least one token");
        for (idx, token) in tokens.iter_mut().enumerate() {
            token.is_sentence_initial = idx == 0;
        }
        Sentence { tokens }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tokens_mut(&mut self) -> &mut [Token] {
        &mut self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub source_name: String,
}

impl Corpus {
    pub fn new(source_name: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Corpus {
            sentences,
            source_name: source_name.into(),
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens().iter())
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("read error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("sentence {sentence}, token {token}: no lemma to write")]
    MissingLemma { sentence: usize, token: usize },
    #[error("write error: {0}")]
    Io(#[from] io::Error),
}

/// Parse a UD FEATS column into its canonical form.
pub fn parse_feats(column: &str) -> Result<Feats, String> {
    if column.is_empty() || column == "_" {
        return Ok(Vec::new());
    }

    let mut feats = Vec::new();
    for pair in column.split('|') {
        match pair.split_once('=') {
            Some((key, value)) if !key.is_empty() && !value.is_empty() => {
                feats.push((key.to_owned(), value.to_owned()))
            }
            _ => return Err(format!("invalid FEATS pair '{}'", pair)),
        }
    }

    canonicalize_feats(&mut feats);
    Ok(feats)
}

/// Sort by attribute name and keep the first value of duplicated names.
pub fn canonicalize_feats(feats: &mut Feats) {
    feats.sort_by(|a, b| a.0.cmp(&b.0));
    feats.dedup_by(|later, earlier| later.0 == earlier.0);
}

pub fn feats_to_string(feats: &[(String, String)]) -> String {
    if feats.is_empty() {
        return "_".to_owned();
    }
    let mut out = String::new();
    for (idx, (key, value)) in feats.iter().enumerate() {
        if idx > 0 {
            out.push('|');
        }
        out.push_str(key);
        out.push('=');
        out.push_str(value);
    }
    out
}

enum LineId {
    Word(usize),
    Skipped,
}

fn parse_id(id: &str) -> Option<LineId> {
    if id.contains('-') || id.contains('.') {
        let ok = id
            .split(['-', '.'])
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()));
        return ok.then_some(LineId::Skipped);
    }
    id.parse::<usize>().ok().map(LineId::Word)
}

/// Read a CoNLL-U corpus.
///
/// Empty input gives an empty corpus. Windows line endings are accepted.
pub fn parse_conllu<R: BufRead>(reader: R, source_name: &str) -> Result<Corpus, ParseError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut last_id = 0;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let malformed = |message: String| ParseError::Malformed {
            line: line_no,
            message,
        };

        if line.trim().is_empty() {
            if !tokens.is_empty() {
                sentences.push(Sentence::new(std::mem::take(&mut tokens)));
            }
            last_id = 0;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != 10 {
            return Err(malformed(format!(
                "expected 10 tab-separated columns, found {}",
                columns.len()
            )));
        }

        match parse_id(columns[0]) {
            None => return Err(malformed(format!("invalid ID '{}'", columns[0]))),
            Some(LineId::Skipped) => continue,
            Some(LineId::Word(id)) => {
                if id != last_id + 1 {
                    return Err(malformed(format!(
                        "word ID {} does not follow ID {}",
                        id, last_id
                    )));
                }
                last_id = id;
            }
        }

        let form = columns[1];
        if form.is_empty() {
            return Err(malformed("empty FORM".to_owned()));
        }
        let lemma = match columns[2] {
            // An underscore token's lemma is the underscore itself.
            "_" if form == "_" => Some("_".to_owned()),
            "_" | "" => None,
            lemma => Some(lemma.to_owned()),
        };
        let feats = parse_feats(columns[5]).map_err(malformed)?;

        tokens.push(Token {
            form: form.to_owned(),
            upos: columns[3].to_owned(),
            feats,
            lemma,
            is_sentence_initial: false,
        });
    }

    if !tokens.is_empty() {
        sentences.push(Sentence::new(tokens));
    }

    Ok(Corpus::new(source_name, sentences))
}

pub fn parse_conllu_str(text: &str, source_name: &str) -> Result<Corpus, ParseError> {
    parse_conllu(text.as_bytes(), source_name)
}

/// Write a corpus as CoNLL-U with Unix line endings. Every token must
/// carry a lemma.
pub fn write_conllu<W: Write>(corpus: &Corpus, mut writer: W) -> Result<(), WriteError> {
    for (sent_idx, sentence) in corpus.sentences.iter().enumerate() {
        for (token_idx, token) in sentence.tokens().iter().enumerate() {
            let lemma = token.lemma.as_deref().ok_or(WriteError::MissingLemma {
                sentence: sent_idx,
                token: token_idx,
            })?;
            writeln!(
                writer,
                "{}\t{}\t{}\t{}\t_\t{}\t_\t_\t_\t_",
                token_idx + 1,
                token.form,
                lemma,
                if token.upos.is_empty() {
                    "_"
                } else {
                    &token.upos
                },
                feats_to_string(&token.feats)
            )?;
        }
        writeln!(writer)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_conllu_string(corpus: &Corpus) -> Result<String, WriteError> {
    let mut buf = Vec::new();
    write_conllu(corpus, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CoNLL-U output is UTF-8"))
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}/{}", self.form, self.upos)
    }
}
