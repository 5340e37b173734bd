//! Index directory layout:
//!
//! ```text
//! manifest.json   {"format_version":1,"tokenizer_profile":{..},"doc_count":N,"avg_chunk_len":x,"bm25":{"k1":..,"b":..}}
//! postings.bin    u32 term_count, then per term (sorted):
//!                 u32 term_len, term bytes (UTF-8), u32 n, n × (u32 chunk_row, u32 tf)
//! chunks.jsonl    one ChunkRecord per line; line number = chunk_row
//! ```
//!
//! All integers are little-endian.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::index::{mean_len, Bm25Params, ChunkRecord, Index, Posting};
use super::RetrievalError;
use crate::textcore::{RuleTokenizer, Tokenizer, TokenizerProfile};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const POSTINGS: &str = "postings.bin";
const CHUNKS: &str = "chunks.jsonl";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    tokenizer_profile: TokenizerProfile,
    doc_count: usize,
    avg_chunk_len: f64,
    #[serde(default)]
    bm25: Bm25Params,
}

pub fn persist_index(index: &Index, dir: impl AsRef<Path>) -> Result<(), RetrievalError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        tokenizer_profile: index.tokenizer_profile(),
        doc_count: index.doc_count(),
        avg_chunk_len: index.avg_chunk_len,
        bm25: index.params,
    };
    fs::write(
        dir.join(MANIFEST),
        serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
    )?;

    let mut out = BufWriter::new(fs::File::create(dir.join(POSTINGS))?);
    write_u32(&mut out, index.postings.len())?;
    for (term, list) in &index.postings {
        write_u32(&mut out, term.len())?;
        out.write_all(term.as_bytes())?;
        write_u32(&mut out, list.len())?;
        for p in list {
            out.write_all(&p.chunk.to_le_bytes())?;
            out.write_all(&p.tf.to_le_bytes())?;
        }
    }
    out.flush()?;

    let mut out = BufWriter::new(fs::File::create(dir.join(CHUNKS))?);
    for record in &index.chunks {
        serde_json::to_writer(&mut out, record).expect("chunk record serializes");
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn write_u32<W: Write>(out: &mut W, value: usize) -> std::io::Result<()> {
    let value = u32::try_from(value)
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "count exceeds u32"))?;
    out.write_all(&value.to_le_bytes())
}

/// Loads an index built with the `rule-v1` tokenizer.
pub fn load_index(dir: impl AsRef<Path>) -> Result<Index, RetrievalError> {
    load_index_with(dir, Arc::new(RuleTokenizer))
}

/// Loads an index, checking that `tokenizer` matches the recorded profile.
pub fn load_index_with(
    dir: impl AsRef<Path>,
    tokenizer: Arc<dyn Tokenizer>,
) -> Result<Index, RetrievalError> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let expected = tokenizer.profile();
    if manifest.tokenizer_profile != expected {
        return Err(RetrievalError::TokenizerMismatch {
            expected: expected.to_string(),
            found: manifest.tokenizer_profile.to_string(),
        });
    }

    let chunks = read_chunks(dir)?;
    if chunks.len() != manifest.doc_count {
        return Err(RetrievalError::CorruptManifest(format!(
            "doc_count {} but chunk table has {} rows",
            manifest.doc_count,
            chunks.len()
        )));
    }
    if chunks.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let avg = mean_len(&chunks);
    if avg.to_bits() != manifest.avg_chunk_len.to_bits() {
        return Err(RetrievalError::CorruptManifest(format!(
            "avg_chunk_len {} disagrees with chunk table ({avg})",
            manifest.avg_chunk_len
        )));
    }

    let mut by_ref = HashMap::with_capacity(chunks.len());
    for (i, c) in chunks.iter().enumerate() {
        if by_ref.insert(c.chunk_ref.clone(), i as u32).is_some() {
            return Err(RetrievalError::CorruptChunks(format!(
                "duplicate chunk {}",
                c.chunk_ref
            )));
        }
    }

    let postings = read_postings(dir, chunks.len())?;
    Ok(Index {
        tokenizer,
        params: manifest.bm25,
        chunks,
        by_ref,
        postings,
        avg_chunk_len: manifest.avg_chunk_len,
    })
}

fn read_manifest(dir: &Path) -> Result<Manifest, RetrievalError> {
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        return Err(RetrievalError::MissingManifest(dir.to_path_buf()));
    }
    let bytes = fs::read(&path)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| RetrievalError::CorruptManifest(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| RetrievalError::CorruptManifest("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(RetrievalError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| RetrievalError::CorruptManifest(e.to_string()))
}

fn read_chunks(dir: &Path) -> Result<Vec<ChunkRecord>, RetrievalError> {
    let path = dir.join(CHUNKS);
    if !path.is_file() {
        return Err(RetrievalError::MissingFile(CHUNKS));
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let record: ChunkRecord = serde_json::from_str(&line)
            .map_err(|e| RetrievalError::CorruptChunks(format!("line {}: {e}", i + 1)))?;
        if !record.sentences_are_consistent() {
            return Err(RetrievalError::CorruptChunks(format!(
                "line {}: sentence lengths do not match text",
                i + 1
            )));
        }
        out.push(record);
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| RetrievalError::CorruptPostings("unexpected end of file".into()))?;
        let slice = &self.bytes[self.at..end];
        self.at = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn read_postings(
    dir: &Path,
    chunk_count: usize,
) -> Result<BTreeMap<String, Vec<Posting>>, RetrievalError> {
    let path = dir.join(POSTINGS);
    if !path.is_file() {
        return Err(RetrievalError::MissingFile(POSTINGS));
    }
    let bytes = fs::read(path)?;
    let mut cur = Cursor {
        bytes: &bytes,
        at: 0,
    };
    let corrupt = |msg: String| RetrievalError::CorruptPostings(msg);

    let term_count = cur.u32()?;
    let mut postings = BTreeMap::new();
    for _ in 0..term_count {
        let len = cur.u32()? as usize;
        let term = std::str::from_utf8(cur.take(len)?)
            .map_err(|e| corrupt(format!("term is not UTF-8: {e}")))?
            .to_string();
        let n = cur.u32()? as usize;
        if n == 0 {
            return Err(corrupt(format!("term {term:?} has no postings")));
        }
        let mut list = Vec::with_capacity(n.min(chunk_count));
        for _ in 0..n {
            let chunk = cur.u32()?;
            let tf = cur.u32()?;
            if chunk as usize >= chunk_count {
                return Err(corrupt(format!("term {term:?} references row {chunk}")));
            }
            if tf == 0 || list.last().is_some_and(|p: &Posting| p.chunk >= chunk) {
                return Err(corrupt(format!("term {term:?} has an invalid posting list")));
            }
            list.push(Posting { chunk, tf });
        }
        if postings.insert(term.clone(), list).is_some() {
            return Err(corrupt(format!("term {term:?} appears twice")));
        }
    }
    if cur.at != bytes.len() {
        return Err(corrupt("trailing bytes".into()));
    }
    Ok(postings)
}
