//! TREC qrels and run files.
//!
//! qrels: `qid 0 docid rel`. runs: `qid Q0 docid rank score tag`, scores
//! printed with six decimals. Both are UTF-8 with LF line endings.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::types::{ranking_order, Judgments, RunList, ScoredDoc};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Judgments> {
    let mut judgments = Judgments::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(parse_err(
                line_no,
                format!("missing field: expected 4 fields, found {}", fields.len()),
            ));
        }
        if fields.len() > 4 {
            return Err(parse_err(
                line_no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| parse_err(line_no, format!("grade `{}` is not an integer", fields[3])))?;
        let grade = u32::try_from(grade)
            .map_err(|_| parse_err(line_no, format!("grade {grade} is negative or too large")))?;
        if !judgments.insert(fields[0], fields[2], grade) {
            return Err(Error::DuplicateJudgment {
                line: line_no,
                query_id: fields[0].to_string(),
                doc_id: fields[2].to_string(),
            });
        }
    }
    Ok(judgments)
}

pub fn write_qrels<W: Write>(judgments: &Judgments, mut writer: W) -> Result<()> {
    for (q, d, g) in judgments.iter() {
        writeln!(writer, "{q} 0 {d} {g}")?;
    }
    Ok(())
}

/// How `parse_run` treats files whose ranks disagree with the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunParseMode {
    /// Ranks must be 1..n and agree with descending score / ascending doc id.
    #[default]
    Strict,
    /// Ignore the rank column and re-sort by score (what trec_eval does).
    Resort,
}

struct RawEntry {
    line: usize,
    doc_id: String,
    rank: usize,
    score: f64,
}

pub fn parse_run<R: BufRead>(reader: R, mode: RunParseMode) -> Result<RunList> {
    let mut tag: Option<String> = None;
    let mut per_query: BTreeMap<String, Vec<RawEntry>> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(parse_err(
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let rank: usize = fields[3]
            .parse()
            .map_err(|_| parse_err(line_no, format!("rank `{}` is not a positive integer", fields[3])))?;
        if rank == 0 {
            return Err(parse_err(line_no, "rank must be >= 1"));
        }
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| parse_err(line_no, format!("score `{}` is not a number", fields[4])))?;
        if !score.is_finite() {
            return Err(parse_err(line_no, "score is not finite"));
        }
        match &tag {
            None => tag = Some(fields[5].to_string()),
            Some(t) if t != fields[5] => {
                return Err(parse_err(
                    line_no,
                    format!("run tag `{}` differs from `{t}`", fields[5]),
                ))
            }
            Some(_) => {}
        }
        per_query
            .entry(fields[0].to_string())
            .or_default()
            .push(RawEntry {
                line: line_no,
                doc_id: fields[2].to_string(),
                rank,
                score,
            });
    }

    let mut run = RunList::new(tag.unwrap_or_default());
    for (qid, mut entries) in per_query {
        if mode == RunParseMode::Strict {
            entries.sort_by_key(|e| e.rank);
            for (i, e) in entries.iter().enumerate() {
                if e.rank != i + 1 {
                    return Err(Error::RunOrder {
                        query_id: qid,
                        message: format!(
                            "line {}: rank {} where {} was expected",
                            e.line,
                            e.rank,
                            i + 1
                        ),
                    });
                }
            }
            for pair in entries.windows(2) {
                let a = ScoredDoc::new(pair[0].doc_id.as_str(), pair[0].score);
                let b = ScoredDoc::new(pair[1].doc_id.as_str(), pair[1].score);
                if ranking_order(&a, &b) != std::cmp::Ordering::Less {
                    return Err(Error::RunOrder {
                        query_id: qid,
                        message: format!(
                            "line {}: rank {} (`{}`, {}) inconsistent with rank {} (`{}`, {})",
                            pair[1].line,
                            pair[1].rank,
                            b.doc_id,
                            b.score,
                            pair[0].rank,
                            a.doc_id,
                            a.score
                        ),
                    });
                }
            }
        }
        let docs = entries
            .into_iter()
            .map(|e| ScoredDoc::new(e.doc_id, e.score))
            .collect();
        run.insert(qid, docs)?;
    }
    Ok(run)
}

/// Writes a run in canonical form: queries sorted by id, ranks ascending.
pub fn write_run<W: Write>(run: &RunList, mut writer: W) -> Result<()> {
    let tag = if run.tag().is_empty() { "run" } else { run.tag() };
    for (qid, docs) in run.iter() {
        for (i, d) in docs.iter().enumerate() {
            writeln!(writer, "{qid} Q0 {} {} {:.6} {tag}", d.doc_id, i + 1, d.score)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_from(s: &str) -> Result<RunList> {
        parse_run(s.as_bytes(), RunParseMode::Strict)
    }

    #[test]
    fn qrels_single_line() {
        let j = parse_qrels("q1 0 d1 1\n".as_bytes()).unwrap();
        assert_eq!(j.grade("q1", "d1"), Some(1));
        assert_eq!(j.len(), 1);
    }

    #[test]
    fn qrels_two_lines() {
        let j = parse_qrels("q1 0 d1 2\nq1 0 d2 0\n".as_bytes()).unwrap();
        assert_eq!(j.grade("q1", "d1"), Some(2));
        assert_eq!(j.grade("q1", "d2"), Some(0));
        assert_eq!(j.num_relevant("q1"), 1);
    }

    #[test]
    fn qrels_missing_field() {
        let err = parse_qrels("q1 0 d1\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("missing field"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn qrels_duplicate_and_negative() {
        let err = parse_qrels("q1 0 d1 1\nq1 0 d1 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateJudgment { line: 2, .. }));
        assert!(parse_qrels("q1 0 d1 -1\n".as_bytes()).is_err());
        assert!(parse_qrels("q1 0 d1 x\n".as_bytes()).is_err());
    }

    #[test]
    fn run_single_line() {
        let run = run_from("q1 Q0 d9 1 3.500000 t\n").unwrap();
        assert_eq!(run.get("q1").unwrap(), &[ScoredDoc::new("d9", 3.5)]);
        assert_eq!(run.tag(), "t");
    }

    #[test]
    fn run_round_trip_canonical() {
        let text = "q1 Q0 d2 1 2.000000 bm25\nq1 Q0 d1 2 1.000000 bm25\nq1 Q0 d3 3 1.000000 bm25\nq2 Q0 d7 1 -0.250000 bm25\n";
        let run = run_from(text).unwrap();
        let mut out = Vec::new();
        write_run(&run, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn run_ties_ranked_by_doc_id() {
        let mut run = RunList::new("t");
        run.insert("q", vec![ScoredDoc::new("b", 1.0), ScoredDoc::new("a", 1.0)])
            .unwrap();
        let mut out = Vec::new();
        write_run(&run, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "q Q0 a 1 1.000000 t\nq Q0 b 2 1.000000 t\n"
        );
        // the reverse assignment is rejected in strict mode
        let err = run_from("q Q0 b 1 1.000000 t\nq Q0 a 2 1.000000 t\n").unwrap_err();
        assert!(matches!(err, Error::RunOrder { ref query_id, .. } if query_id == "q"));
        let resorted = parse_run(
            "q Q0 b 1 1.000000 t\nq Q0 a 2 1.000000 t\n".as_bytes(),
            RunParseMode::Resort,
        )
        .unwrap();
        assert_eq!(resorted.rank_of("q", "a"), Some(1));
    }

    #[test]
    fn run_rank_gaps_rejected() {
        let err = run_from("q Q0 a 1 2.0 t\nq Q0 b 3 1.0 t\n").unwrap_err();
        assert!(err.to_string().contains("query `q`"));
        let err = run_from("q Q0 a 1 1.0 t\nq Q0 b 2 2.0 t\n").unwrap_err();
        assert!(matches!(err, Error::RunOrder { .. }));
    }

    #[test]
    fn run_field_count() {
        assert!(matches!(
            run_from("q Q0 a 1 2.0\n").unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }
}
