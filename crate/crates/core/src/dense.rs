//! Exact inner-product search over id-aligned embedding matrices.
//!
//! On disk a matrix is an EMB1 file: the magic `EMB1`, little-endian `u32`
//! row count, `u32` dim, then `count * dim` little-endian `f32` values in
//! row-major order. Ids live in a companion text file next to it (same stem,
//! `.ids` extension), one per line in row order.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{quantize_score, ranking_order, RunList, ScoredDoc};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;
const NORM_TOLERANCE: f64 = 1e-4;

/// Row-major `f32` matrix with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "{} ids x dim {dim} needs {} values, got {}",
                ids.len(),
                ids.len() * dim,
                data.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate embedding id `{id}`")));
            }
        }
        let mut m = Self {
            ids,
            dim,
            data,
            normalized: false,
        };
        m.normalized = m.rows_are_unit();
        Ok(m)
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimMismatch {
                left: dim,
                right: rows[bad].len(),
            });
        }
        Self::new(ids, dim, rows.concat())
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// True when every row has unit L2 norm (within 1e-4).
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    fn rows_are_unit(&self) -> bool {
        (0..self.len()).all(|i| (row_norm(self.row(i)) - 1.0).abs() <= NORM_TOLERANCE)
    }
}

fn row_norm(row: &[f32]) -> f64 {
    row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Inner product accumulated in f64 over ascending index.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for i in 0..a.len() {
        acc += f64::from(a[i]) * f64::from(b[i]);
    }
    acc
}

/// `foo.emb` -> `foo.ids`.
pub fn ids_path(path: &Path) -> PathBuf {
    path.with_extension("ids")
}

fn binary_err(path: &Path, offset: usize, message: impl Into<String>) -> Error {
    Error::Binary {
        path: path.to_path_buf(),
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(binary_err(path, bytes.len(), "truncated header"));
    }
    if &bytes[..4] != EMB1_MAGIC {
        return Err(binary_err(path, 0, "bad magic, expected `EMB1`"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let expected = HEADER_LEN + count * dim * 4;
    if bytes.len() < expected {
        return Err(binary_err(
            path,
            bytes.len(),
            format!(
                "truncated: header declares {count}x{dim} floats ({expected} bytes), file has {}",
                bytes.len()
            ),
        ));
    }
    if bytes.len() > expected {
        return Err(binary_err(path, expected, "trailing bytes after declared matrix"));
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();

    let ids_file = ids_path(path);
    let ids: Vec<String> = fs::read_to_string(&ids_file)?
        .lines()
        .map(str::to_string)
        .collect();
    if ids.len() != count {
        return Err(binary_err(
            path,
            4,
            format!("{} lists {} ids but header count is {count}", ids_file.display(), ids.len()),
        ));
    }
    EmbeddingMatrix::new(ids, dim, data)
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{what} {v} exceeds u32")))
    };
    let mut bytes = Vec::with_capacity(HEADER_LEN + matrix.data.len() * 4);
    bytes.extend_from_slice(EMB1_MAGIC);
    bytes.extend_from_slice(&to_u32(matrix.len(), "row count")?.to_le_bytes());
    bytes.extend_from_slice(&to_u32(matrix.dim, "dim")?.to_le_bytes());
    for x in &matrix.data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes)?;

    let mut ids = Vec::new();
    for id in &matrix.ids {
        if id.contains('\n') {
            return Err(Error::InvalidArgument(format!("id `{id}` contains a newline")));
        }
        writeln!(ids, "{id}")?;
    }
    fs::write(ids_path(path), ids)?;
    Ok(())
}

/// Scales every row to unit L2 norm. Rows already within 1e-6 of unit norm
/// are kept bit-for-bit, which makes the operation idempotent.
pub fn normalize(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = matrix.data.clone();
    if matrix.dim > 0 {
        for (i, row) in data.chunks_exact_mut(matrix.dim).enumerate() {
            let norm = row_norm(row);
            if norm == 0.0 {
                return Err(Error::ZeroNorm(matrix.ids[i].clone()));
            }
            if (norm - 1.0).abs() <= 1e-6 {
                continue;
            }
            for x in row.iter_mut() {
                *x = (f64::from(*x) / norm) as f32;
            }
        }
    } else if !matrix.is_empty() {
        return Err(Error::ZeroNorm(matrix.ids[0].clone()));
    }
    Ok(EmbeddingMatrix {
        ids: matrix.ids.clone(),
        dim: matrix.dim,
        data,
        normalized: true,
    })
}

/// Top-k passages per query by inner product. Scores are compared at the
/// 6-decimal run-file precision, ties broken by ascending doc id.
pub fn search_topk(
    queries: &EmbeddingMatrix,
    passages: &EmbeddingMatrix,
    k: usize,
    run_tag: &str,
) -> Result<RunList> {
    if queries.dim != passages.dim {
        return Err(Error::DimMismatch {
            left: queries.dim,
            right: passages.dim,
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let ranked: Vec<Vec<ScoredDoc>> = (0..queries.len())
        .into_par_iter()
        .map(|qi| topk_for_query(queries.row(qi), passages, k))
        .collect();
    let mut run = RunList::new(run_tag);
    for (qid, docs) in queries.ids.iter().zip(ranked) {
        run.insert(qid.as_str(), docs)?;
    }
    Ok(run)
}

fn topk_for_query(query: &[f32], passages: &EmbeddingMatrix, k: usize) -> Vec<ScoredDoc> {
    let mut scored: Vec<ScoredDoc> = (0..passages.len())
        .map(|pi| ScoredDoc {
            doc_id: passages.ids[pi].clone(),
            score: quantize_score(dot(query, passages.row(pi))),
        })
        .collect();
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, ranking_order);
        scored.truncate(k);
    }
    scored.sort_by(ranking_order);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn normalize_three_four_five() {
        let m = EmbeddingMatrix::from_rows(ids(1), &[vec![3.0, 4.0]]).unwrap();
        assert!(!m.is_normalized());
        let n = normalize(&m).unwrap();
        assert_eq!(n.row(0), &[0.6f32, 0.8f32]);
        assert!(n.is_normalized());
    }

    #[test]
    fn normalize_is_idempotent_on_unit_rows() {
        let m = EmbeddingMatrix::from_rows(ids(2), &[vec![0.6, 0.8], vec![1.0, 0.0]]).unwrap();
        let n = normalize(&m).unwrap();
        for (a, b) in m.as_slice().iter().zip(n.as_slice()) {
            assert!((f64::from(*a) - f64::from(*b)).abs() <= 1e-12);
        }
        assert_eq!(normalize(&n).unwrap(), n);
    }

    #[test]
    fn normalize_rejects_zero_row() {
        let m = EmbeddingMatrix::from_rows(vec!["a".into(), "z".into()], &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        match normalize(&m).unwrap_err() {
            Error::ZeroNorm(id) => assert_eq!(id, "z"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_match_ranks_first() {
        let p = normalize(
            &EmbeddingMatrix::from_rows(ids(3), &[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]]).unwrap(),
        )
        .unwrap();
        let q = EmbeddingMatrix::new(vec!["q".into()], 2, p.row(1).to_vec()).unwrap();
        let run = search_topk(&q, &p, 1, "dense").unwrap();
        let top = &run.get("q").unwrap()[0];
        assert_eq!(top.doc_id, "d1");
        assert_eq!(top.score, 1.0);
    }

    #[test]
    fn k_beyond_corpus_returns_everything_sorted() {
        let p = EmbeddingMatrix::from_rows(ids(3), &[vec![1.0], vec![3.0], vec![3.0]]).unwrap();
        let q = EmbeddingMatrix::from_rows(vec!["q".into()], &[vec![1.0]]).unwrap();
        let run = search_topk(&q, &p, 10, "t").unwrap();
        let got: Vec<_> = run.get("q").unwrap().iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(got, ["d1", "d2", "d0"]);
    }

    #[test]
    fn empty_corpus_searches_to_empty_lists() {
        let p = EmbeddingMatrix::new(vec![], 4, vec![]).unwrap();
        let q = EmbeddingMatrix::from_rows(vec!["q".into()], &[vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let run = search_topk(&q, &p, 5, "t").unwrap();
        assert!(run.get("q").unwrap().is_empty());
    }

    #[test]
    fn dim_mismatch() {
        let p = EmbeddingMatrix::from_rows(ids(1), &[vec![1.0, 0.0]]).unwrap();
        let q = EmbeddingMatrix::from_rows(vec!["q".into()], &[vec![1.0]]).unwrap();
        assert!(matches!(search_topk(&q, &p, 1, "t"), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb");
        let rows: Vec<Vec<f32>> = (0..3)
            .map(|r| (0..4).map(|c| (r * 4 + c) as f32 * 0.37 - 1.1).collect())
            .collect();
        let mut rows = rows;
        rows[2][3] = f32::from_bits(0x7fc0_1234); // NaN payload survives
        let m = EmbeddingMatrix::from_rows(ids(3), &rows).unwrap();
        save_embeddings(&m, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back.ids(), m.ids());
        let bits = |x: &EmbeddingMatrix| x.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(fs::read(ids_path(&path)).unwrap(), b"d0\nd1\nd2\n");
    }

    #[test]
    fn truncated_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.emb");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(EMB1_MAGIC);
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&4u32.to_le_bytes());
        for i in 0..15 {
            bytes.extend_from_slice(&(i as f32).to_le_bytes());
        }
        fs::write(&path, &bytes).unwrap();
        fs::write(ids_path(&path), "a\nb\nc\nd\n").unwrap();
        match load_embeddings(&path).unwrap_err() {
            Error::Binary { offset, message, .. } => {
                assert_eq!(offset, 12 + 15 * 4);
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_id_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.emb");
        fs::write(&path, b"EMB2\0\0\0\0\0\0\0\0").unwrap();
        fs::write(ids_path(&path), "").unwrap();
        assert!(matches!(load_embeddings(&path), Err(Error::Binary { offset: 0, .. })));

        let m = EmbeddingMatrix::from_rows(ids(2), &[vec![1.0], vec![2.0]]).unwrap();
        save_embeddings(&m, &path).unwrap();
        fs::write(ids_path(&path), "only-one\n").unwrap();
        assert!(load_embeddings(&path).is_err());
    }

    #[test]
    fn empty_matrix_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.emb");
        let m = EmbeddingMatrix::new(vec![], 8, vec![]).unwrap();
        save_embeddings(&m, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.dim(), 8);
    }
}
