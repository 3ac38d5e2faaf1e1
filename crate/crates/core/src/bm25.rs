//! Okapi BM25 over an in-memory inverted index.
//!
//! `score(d) = sum over query tokens t of idf(t) * tf / (tf + k1 * (1 - b + b * len / avglen))`
//! with `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`, which is always
//! positive. Repeated query tokens contribute once per occurrence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{ranking_order, InstructedQuery, Passage, RunList, ScoredDoc};

const INDEX_MAGIC: &[u8; 8] = b"BM25IDX\0";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

/// Lowercases and splits on non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn idf(num_docs: usize, df: usize) -> f64 {
    let (n, df) = (num_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_lens: Vec<u32>,
    avg_len: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

pub fn build_index(corpus: &[Passage], params: Bm25Params) -> Result<InvertedIndex> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot index an empty corpus".into()));
    }
    let num_docs = u32::try_from(corpus.len())
        .map_err(|_| Error::InvalidArgument("corpus exceeds u32 documents".into()))?;
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_lens = Vec::with_capacity(corpus.len());
    for (ord, passage) in (0..num_docs).zip(corpus) {
        let tokens = tokenize(&passage.full_text());
        doc_lens.push(tokens.len() as u32);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting { doc: ord, tf: count });
        }
    }
    InvertedIndex::from_parts(
        params,
        corpus.iter().map(|p| p.doc_id.clone()).collect(),
        doc_lens,
        postings,
    )
}

impl InvertedIndex {
    fn from_parts(
        params: Bm25Params,
        doc_ids: Vec<String>,
        doc_lens: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Result<Self> {
        let total: u64 = doc_lens.iter().map(|&l| u64::from(l)).sum();
        if doc_ids.is_empty() || total == 0 {
            return Err(Error::InvalidArgument("corpus has no indexable terms".into()));
        }
        let avg_len = total as f64 / doc_ids.len() as f64;
        Ok(Self {
            params,
            doc_ids,
            doc_lens,
            avg_len,
            postings,
        })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_len(&self, ord: usize) -> u32 {
        self.doc_lens[ord]
    }

    pub fn doc_id(&self, ord: usize) -> &str {
        &self.doc_ids[ord]
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    /// BM25 score of every document, indexed by doc ordinal.
    pub fn score(&self, query_terms: &[String]) -> Vec<f64> {
        let mut scores = vec![0.0; self.num_docs()];
        let Bm25Params { k1, b } = self.params;
        for term in query_terms {
            let plist = self.postings(term);
            if plist.is_empty() {
                continue;
            }
            let w = idf(self.num_docs(), plist.len());
            for p in plist {
                let tf = f64::from(p.tf);
                let len = f64::from(self.doc_lens[p.doc as usize]);
                scores[p.doc as usize] += w * tf / (tf + k1 * (1.0 - b + b * len / self.avg_len));
            }
        }
        scores
    }

    /// Top-k documents containing at least one query token.
    pub fn search(&self, query: &str, k: usize) -> Vec<ScoredDoc> {
        let terms = tokenize(query);
        let mut matched = vec![false; self.num_docs()];
        for t in &terms {
            for p in self.postings(t) {
                matched[p.doc as usize] = true;
            }
        }
        let scores = self.score(&terms);
        let mut hits: Vec<ScoredDoc> = matched
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(ord, _)| ScoredDoc::new(self.doc_ids[ord].as_str(), crate::types::quantize_score(scores[ord])))
            .collect();
        if k < hits.len() {
            if k == 0 {
                return Vec::new();
            }
            hits.select_nth_unstable_by(k - 1, ranking_order);
            hits.truncate(k);
        }
        hits.sort_by(ranking_order);
        hits
    }

    /// Runs every query (joined with its instruction) and collects a run.
    pub fn search_queries(&self, queries: &[InstructedQuery], k: usize, run_tag: &str) -> Result<RunList> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let results: Vec<Vec<ScoredDoc>> = queries.par_iter().map(|q| self.search(&q.text(), k)).collect();
        let mut run = RunList::new(run_tag);
        for (q, docs) in queries.iter().zip(results) {
            run.insert(q.query_id.as_str(), docs)?;
        }
        Ok(run)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        out.extend_from_slice(&self.params.k1.to_le_bytes());
        out.extend_from_slice(&self.params.b.to_le_bytes());
        put_u32(&mut out, self.doc_ids.len());
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lens) {
            put_str(&mut out, id);
            out.extend_from_slice(&len.to_le_bytes());
        }
        put_u32(&mut out, self.postings.len());
        for (term, plist) in &self.postings {
            put_str(&mut out, term);
            put_u32(&mut out, plist.len());
            for p in plist {
                out.extend_from_slice(&p.doc.to_le_bytes());
                out.extend_from_slice(&p.tf.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], source: &Path) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0, source };
        if r.take(8)? != INDEX_MAGIC {
            return Err(r.err_at(0, "bad magic, expected BM25 index"));
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(r.err_at(8, format!("unsupported index version {version}")));
        }
        let k1 = r.f64()?;
        let b = r.f64()?;
        let n = r.u32()? as usize;
        let mut doc_ids = Vec::with_capacity(n);
        let mut doc_lens = Vec::with_capacity(n);
        for _ in 0..n {
            doc_ids.push(r.string()?);
            doc_lens.push(r.u32()?);
        }
        let vocab = r.u32()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..vocab {
            let term = r.string()?;
            let count = r.u32()? as usize;
            let mut plist = Vec::with_capacity(count);
            for _ in 0..count {
                let at = r.pos;
                let doc = r.u32()?;
                let tf = r.u32()?;
                if doc as usize >= n {
                    return Err(r.err_at(at, format!("posting refers to doc {doc} of {n}")));
                }
                plist.push(Posting { doc, tf });
            }
            postings.insert(term, plist);
        }
        if r.pos != bytes.len() {
            return Err(r.err_at(r.pos, "trailing bytes"));
        }
        Self::from_parts(Bm25Params { k1, b }, doc_ids, doc_lens, postings)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes, path)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn err_at(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Binary {
            path: self.source.to_path_buf(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err_at(self.bytes.len(), "truncated index file"));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let at = self.pos;
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| self.err_at(at, "invalid UTF-8 string"))
    }
}
