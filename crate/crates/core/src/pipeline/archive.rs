//! Single-file model archive.
//!
//! ```text
//! magic          8 bytes  "HYLEMMDL"
//! format_version u32
//! section_count  u32
//! sections       section_count x { tag [u8; 4], offset u64, length u64, crc32 u32 }
//! header_crc     u32      CRC-32 of every preceding byte
//! payloads       at the recorded absolute offsets
//! ```
//!
//! All integers and floats are little-endian. Strings are a `u32` byte
//! length followed by UTF-8 bytes. The full layout of each section is
//! documented in `docs/model-format.md`.

use std::io::{self, Cursor, Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use super::LemmatizerModel;
use crate::corpus::canonicalize_feats;
use crate::edit_tree::{EditTree, TreeInventory};
use crate::lookup::{LookupEntry, LookupKey, LookupTable};
use crate::rules::RuleConfig;
use crate::selector::{SelectorConfig, SelectorModel, SparseWeights};

pub const MAGIC: &[u8; 8] = b"HYLEMMDL";
pub const FORMAT_VERSION: u32 = 1;

const SECTION_ENTRY_LEN: usize = 4 + 8 + 8 + 4;
const MAX_TREE_DEPTH: usize = 512;

const META: [u8; 4] = *b"META";
const RULE: [u8; 4] = *b"RULE";
const TREE: [u8; 4] = *b"TREE";
const LOOK: [u8; 4] = *b"LOOK";
const SELC: [u8; 4] = *b"SELC";
const SELW: [u8; 4] = *b"SELW";
const SECTIONS: [[u8; 4]; 6] = [META, RULE, TREE, LOOK, SELC, SELW];

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("not a model archive (bad magic bytes)")]
    BadMagic,
    #[error("unsupported archive format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("archive truncated in {0}")]
    Truncated(String),
    #[error("checksum mismatch in {0}")]
    Checksum(String),
    #[error("missing section {0}")]
    MissingSection(String),
    #[error("malformed section {section}: {message}")]
    Malformed { section: String, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

fn tag_name(tag: &[u8; 4]) -> String {
    String::from_utf8_lossy(tag).into_owned()
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.write_u32::<LE>(s.len() as u32).unwrap();
    buf.extend_from_slice(s.as_bytes());
}

fn put_tree(buf: &mut Vec<u8>, tree: &EditTree) {
    match tree {
        EditTree::Match {
            prefix_len,
            suffix_len,
            left,
            right,
        } => {
            buf.push(0);
            buf.write_u32::<LE>(*prefix_len as u32).unwrap();
            buf.write_u32::<LE>(*suffix_len as u32).unwrap();
            put_tree(buf, left);
            put_tree(buf, right);
        }
        EditTree::Replace { source, target } => {
            buf.push(1);
            put_str(buf, source);
            put_str(buf, target);
        }
    }
}

fn encode_rules(rules: &RuleConfig) -> Vec<u8> {
    vec![
        rules.enable_casing as u8,
        rules.enable_mark_strip as u8,
        rules.enable_number_trim as u8,
    ]
}

fn encode_trees(inventory: &TreeInventory) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.write_u32::<LE>(inventory.len() as u32).unwrap();
    for (_, tree, freq) in inventory.iter() {
        buf.write_u64::<LE>(freq).unwrap();
        put_tree(&mut buf, tree);
    }
    buf
}

fn encode_lookup(lookup: &LookupTable) -> Vec<u8> {
    let mut buf = Vec::new();
    let entries = lookup.sorted_entries();
    buf.write_u32::<LE>(entries.len() as u32).unwrap();
    for (key, entry) in entries {
        put_str(&mut buf, &key.masked_form);
        put_str(&mut buf, &key.upos);
        buf.write_u32::<LE>(key.feats.len() as u32).unwrap();
        for (name, value) in &key.feats {
            put_str(&mut buf, name);
            put_str(&mut buf, value);
        }
        buf.write_u32::<LE>(entry.tree).unwrap();
        buf.write_u64::<LE>(entry.count).unwrap();
        buf.write_u64::<LE>(entry.total).unwrap();
    }
    buf
}

fn encode_selector_config(selector: &SelectorModel) -> Vec<u8> {
    let config = &selector.config;
    let mut buf = Vec::new();
    buf.write_u32::<LE>(config.top_k as u32).unwrap();
    buf.write_u32::<LE>(config.feature_space_size).unwrap();
    buf.write_u32::<LE>(config.epochs as u32).unwrap();
    buf.write_f32::<LE>(config.learning_rate).unwrap();
    buf.write_u64::<LE>(config.seed).unwrap();
    buf.write_u64::<LE>(config.min_tree_freq).unwrap();
    buf.push(selector.casing as u8);
    buf
}

fn encode_weights(selector: &SelectorModel) -> Vec<u8> {
    let w = &selector.weights;
    let mut buf = Vec::new();
    buf.write_u32::<LE>(selector.labels.len() as u32).unwrap();
    for &label in &selector.labels {
        buf.write_u32::<LE>(label).unwrap();
    }
    buf.write_u32::<LE>(w.n_classes).unwrap();
    buf.write_u32::<LE>(selector.config.feature_space_size)
        .unwrap();
    buf.write_u32::<LE>(w.features.len() as u32).unwrap();
    buf.write_u64::<LE>(w.values.len() as u64).unwrap();
    for &f in &w.features {
        buf.write_u32::<LE>(f).unwrap();
    }
    for &o in &w.offsets {
        buf.write_u32::<LE>(o).unwrap();
    }
    for &c in &w.classes {
        buf.write_u32::<LE>(c).unwrap();
    }
    for &v in &w.values {
        buf.write_f32::<LE>(v).unwrap();
    }
    buf
}

/// Serialize a model. Output is a pure function of the model.
pub fn save_model<W: Write>(model: &LemmatizerModel, mut writer: W) -> Result<(), ModelError> {
    let payloads: Vec<([u8; 4], Vec<u8>)> = vec![
        (META, model.metadata.as_bytes().to_vec()),
        (RULE, encode_rules(&model.rules)),
        (TREE, encode_trees(&model.inventory)),
        (LOOK, encode_lookup(&model.lookup)),
        (SELC, encode_selector_config(&model.selector)),
        (SELW, encode_weights(&model.selector)),
    ];

    let header_len = MAGIC.len() + 4 + 4 + payloads.len() * SECTION_ENTRY_LEN + 4;
    let mut header = Vec::with_capacity(header_len);
    header.extend_from_slice(MAGIC);
    header.write_u32::<LE>(FORMAT_VERSION).unwrap();
    header.write_u32::<LE>(payloads.len() as u32).unwrap();
    let mut offset = header_len as u64;
    for (tag, payload) in &payloads {
        header.extend_from_slice(tag);
        header.write_u64::<LE>(offset).unwrap();
        header.write_u64::<LE>(payload.len() as u64).unwrap();
        header.write_u32::<LE>(crc32fast::hash(payload)).unwrap();
        offset += payload.len() as u64;
    }
    let header_crc = crc32fast::hash(&header);
    header.write_u32::<LE>(header_crc).unwrap();

    writer.write_all(&header)?;
    for (_, payload) in &payloads {
        writer.write_all(payload)?;
    }
    writer.flush()?;
    Ok(())
}

struct SectionReader<'a> {
    name: String,
    cursor: Cursor<&'a [u8]>,
}

impl<'a> SectionReader<'a> {
    fn new(tag: &[u8; 4], data: &'a [u8]) -> Self {
        SectionReader {
            name: tag_name(tag),
            cursor: Cursor::new(data),
        }
    }

    fn truncated(&self) -> ModelError {
        ModelError::Truncated(self.name.clone())
    }

    fn malformed(&self, message: impl Into<String>) -> ModelError {
        ModelError::Malformed {
            section: self.name.clone(),
            message: message.into(),
        }
    }

    fn remaining(&self) -> usize {
        self.cursor.get_ref().len() - self.cursor.position() as usize
    }

    fn u8(&mut self) -> Result<u8, ModelError> {
        self.cursor.read_u8().map_err(|_| self.truncated())
    }

    fn flag(&mut self) -> Result<bool, ModelError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(self.malformed(format!("invalid flag byte {}", other))),
        }
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        self.cursor.read_u32::<LE>().map_err(|_| self.truncated())
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        self.cursor.read_u64::<LE>().map_err(|_| self.truncated())
    }

    fn f32(&mut self) -> Result<f32, ModelError> {
        self.cursor.read_f32::<LE>().map_err(|_| self.truncated())
    }

    /// Read a count of items that each take at least `min_item_len` bytes.
    fn count(&mut self, min_item_len: usize) -> Result<usize, ModelError> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_len) > self.remaining() {
            return Err(self.truncated());
        }
        Ok(n)
    }

    fn string(&mut self) -> Result<String, ModelError> {
        let len = self.count(1)?;
        let mut bytes = vec![0; len];
        self.cursor
            .read_exact(&mut bytes)
            .map_err(|_| self.truncated())?;
        String::from_utf8(bytes).map_err(|_| self.malformed("invalid UTF-8 string"))
    }

    fn tree(&mut self, depth: usize) -> Result<EditTree, ModelError> {
        if depth > MAX_TREE_DEPTH {
            return Err(self.malformed("edit tree nested too deeply"));
        }
        match self.u8()? {
            0 => {
                let prefix_len = self.u32()? as usize;
                let suffix_len = self.u32()? as usize;
                let left = Box::new(self.tree(depth + 1)?);
                let right = Box::new(self.tree(depth + 1)?);
                Ok(EditTree::Match {
                    prefix_len,
                    suffix_len,
                    left,
                    right,
                })
            }
            1 => Ok(EditTree::Replace {
                source: self.string()?,
                target: self.string()?,
            }),
            other => Err(self.malformed(format!("unknown tree node tag {}", other))),
        }
    }

    fn finish(&self) -> Result<(), ModelError> {
        if self.remaining() != 0 {
            return Err(self.malformed(format!("{} trailing bytes", self.remaining())));
        }
        Ok(())
    }
}

fn decode_rules(data: &[u8]) -> Result<RuleConfig, ModelError> {
    let mut r = SectionReader::new(&RULE, data);
    let rules = RuleConfig {
        enable_casing: r.flag()?,
        enable_mark_strip: r.flag()?,
        enable_number_trim: r.flag()?,
    };
    r.finish()?;
    Ok(rules)
}

fn decode_trees(data: &[u8]) -> Result<TreeInventory, ModelError> {
    let mut r = SectionReader::new(&TREE, data);
    let n = r.count(8 + 1)?;
    let mut trees = Vec::with_capacity(n);
    let mut freq = Vec::with_capacity(n);
    for _ in 0..n {
        freq.push(r.u64()?);
        trees.push(r.tree(0)?);
    }
    r.finish()?;
    TreeInventory::from_parts(trees, freq).map_err(|message| r.malformed(message))
}

fn decode_lookup(data: &[u8], n_trees: usize) -> Result<LookupTable, ModelError> {
    let mut r = SectionReader::new(&LOOK, data);
    let n = r.count(4 + 4 + 4 + 4 + 8 + 8)?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let masked_form = r.string()?;
        let upos = r.string()?;
        let n_feats = r.count(8)?;
        let mut feats = Vec::with_capacity(n_feats);
        for _ in 0..n_feats {
            feats.push((r.string()?, r.string()?));
        }
        let mut canonical = feats.clone();
        canonicalize_feats(&mut canonical);
        if canonical != feats {
            return Err(r.malformed("FEATS not in canonical order"));
        }
        let entry = LookupEntry {
            tree: r.u32()?,
            count: r.u64()?,
            total: r.u64()?,
        };
        if entry.tree as usize >= n_trees {
            return Err(r.malformed(format!("tree id {} out of range", entry.tree)));
        }
        if entry.count == 0 || entry.count > entry.total {
            return Err(r.malformed("entry count exceeds key total"));
        }
        entries.push((
            LookupKey {
                masked_form,
                upos,
                feats,
            },
            entry,
        ));
    }
    r.finish()?;
    let len = entries.len();
    let table = LookupTable::from_entries(entries);
    if table.len() != len {
        return Err(r.malformed("duplicate lookup keys"));
    }
    Ok(table)
}

fn decode_selector_config(data: &[u8]) -> Result<(SelectorConfig, bool), ModelError> {
    let mut r = SectionReader::new(&SELC, data);
    let config = SelectorConfig {
        top_k: r.u32()? as usize,
        feature_space_size: r.u32()?,
        epochs: r.u32()? as usize,
        learning_rate: r.f32()?,
        seed: r.u64()?,
        min_tree_freq: r.u64()?,
    };
    let casing = r.flag()?;
    r.finish()?;
    config.validate().map_err(|e| r.malformed(e.to_string()))?;
    Ok((config, casing))
}

fn decode_weights(
    data: &[u8],
    config: SelectorConfig,
    casing: bool,
    n_trees: usize,
) -> Result<SelectorModel, ModelError> {
    let mut r = SectionReader::new(&SELW, data);
    let n_labels = r.count(4)?;
    let mut labels = Vec::with_capacity(n_labels);
    for _ in 0..n_labels {
        labels.push(r.u32()?);
    }
    if labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(r.malformed("labels not strictly increasing"));
    }
    if labels.iter().any(|&l| l as usize >= n_trees) {
        return Err(r.malformed("label refers to unknown tree"));
    }

    let n_classes = r.u32()?;
    let n_cols = r.u32()?;
    if n_classes as usize != n_labels || n_cols != config.feature_space_size {
        return Err(r.malformed("weight dimensions disagree with labels or config"));
    }
    let n_features = r.count(8)?;
    let nnz = r.u64()? as usize;
    let needed = (n_features + 1)
        .saturating_mul(4)
        .saturating_add(nnz.saturating_mul(8));
    if needed > r.remaining() {
        return Err(r.truncated());
    }

    let mut read_u32s =
        |n: usize| -> Result<Vec<u32>, ModelError> { (0..n).map(|_| r.u32()).collect() };
    let features = read_u32s(n_features)?;
    let offsets = read_u32s(n_features + 1)?;
    let classes = read_u32s(nnz)?;
    let values = (0..nnz).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
    r.finish()?;

    let weights = SparseWeights {
        n_classes,
        features,
        offsets,
        classes,
        values,
    };
    weights.validate().map_err(|m| r.malformed(m))?;
    if weights.features.iter().any(|&f| f >= n_cols) {
        return Err(r.malformed("feature index outside the feature space"));
    }

    Ok(SelectorModel {
        config,
        casing,
        labels,
        weights,
    })
}

/// Read a model archive. The whole stream is validated before a model is
/// returned.
pub fn load_model<R: Read>(mut reader: R) -> Result<LemmatizerModel, ModelError> {
    let mut data = Vec::new();
    reader.read_to_end(&mut data)?;

    if data.len() < MAGIC.len() || &data[..MAGIC.len()] != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let mut header = SectionReader::new(b"HEAD", &data);
    header.cursor.set_position(MAGIC.len() as u64);
    let version = header.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let n_sections = header.count(SECTION_ENTRY_LEN)?;
    let mut table = Vec::with_capacity(n_sections);
    for _ in 0..n_sections {
        let mut tag = [0u8; 4];
        header
            .cursor
            .read_exact(&mut tag)
            .map_err(|_| header.truncated())?;
        let offset = header.u64()?;
        let length = header.u64()?;
        let crc = header.u32()?;
        table.push((tag, offset, length, crc));
    }
    let header_end = header.cursor.position() as usize;
    let stored_header_crc = header.u32()?;
    if crc32fast::hash(&data[..header_end]) != stored_header_crc {
        return Err(ModelError::Checksum("header".to_owned()));
    }

    let section = |wanted: [u8; 4]| -> Result<&[u8], ModelError> {
        let &(tag, offset, length, crc) = table
            .iter()
            .find(|entry| entry.0 == wanted)
            .ok_or_else(|| ModelError::MissingSection(tag_name(&wanted)))?;
        let end = offset
            .checked_add(length)
            .filter(|&end| end <= data.len() as u64)
            .ok_or_else(|| ModelError::Truncated(tag_name(&tag)))?;
        let payload = &data[offset as usize..end as usize];
        if crc32fast::hash(payload) != crc {
            return Err(ModelError::Checksum(tag_name(&tag)));
        }
        Ok(payload)
    };
    for tag in SECTIONS {
        section(tag)?;
    }

    let metadata =
        String::from_utf8(section(META)?.to_vec()).map_err(|_| ModelError::Malformed {
            section: "META".to_owned(),
            message: "metadata is not UTF-8".to_owned(),
        })?;
    let rules = decode_rules(section(RULE)?)?;
    let inventory = decode_trees(section(TREE)?)?;
    let lookup = decode_lookup(section(LOOK)?, inventory.len())?;
    let (config, casing) = decode_selector_config(section(SELC)?)?;
    let selector = decode_weights(section(SELW)?, config, casing, inventory.len())?;

    Ok(LemmatizerModel {
        inventory,
        lookup,
        selector,
        rules,
        format_version: version,
        metadata,
    })
}
