//! Ranking metrics (nDCG, MAP, MRR), paired rank-shift sensitivity (p-MRR),
//! robustness across prompts and cross-prompt spread.
//!
//! Binary relevance means grade >= 1 everywhere in this module.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{Judgments, RunList, ScoredDoc};

/// Gain function for nDCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gain {
    /// `rel / log2(i + 1)`, the trec_eval convention.
    #[default]
    Linear,
    /// `(2^rel - 1) / log2(i + 1)`.
    Exponential,
}

impl Gain {
    fn apply(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Drop run queries that have no judgments at all from the mean. When
    /// false they score 0 and count towards the mean.
    pub exclude_unjudged: bool,
    pub gain: Gain,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            exclude_unjudged: true,
            gain: Gain::Linear,
        }
    }
}

/// Why a query was left out of a report's mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryFlag {
    /// Present in the run, absent from the judgments.
    Unjudged,
    /// Judged, but without any document of grade >= 1.
    NoRelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Ndcg(usize),
    Map(usize),
    Mrr(usize),
}

impl Metric {
    pub fn k(self) -> usize {
        match self {
            Metric::Ndcg(k) | Metric::Map(k) | Metric::Mrr(k) => k,
        }
    }

    fn base_name(self) -> &'static str {
        match self {
            Metric::Ndcg(_) => "ndcg",
            Metric::Map(_) => "map",
            Metric::Mrr(_) => "mrr",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.base_name(), self.k())
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Parses `ndcg@10`, `map@1000`, `mrr@10`. A bare name uses 10 for
    /// nDCG/MRR and 1000 for MAP.
    fn from_str(s: &str) -> Result<Self> {
        let (name, k) = match s.split_once('@') {
            Some((name, k)) => {
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad cutoff in metric `{s}`")))?;
                (name, Some(k))
            }
            None => (s, None),
        };
        let metric = match name.to_ascii_lowercase().as_str() {
            "ndcg" | "ndcg_cut" => Metric::Ndcg(k.unwrap_or(10)),
            "map" | "map_cut" => Metric::Map(k.unwrap_or(1000)),
            "mrr" | "recip_rank" => Metric::Mrr(k.unwrap_or(10)),
            _ => return Err(Error::InvalidArgument(format!("unknown metric `{s}`"))),
        };
        if metric.k() == 0 {
            return Err(Error::InvalidArgument(format!("cutoff must be >= 1 in `{s}`")));
        }
        Ok(metric)
    }
}

/// Per-query values and their mean for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub metric_name: String,
    pub k: usize,
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
    pub flagged: BTreeMap<String, QueryFlag>,
}

impl MetricReport {
    fn from_values(
        metric_name: String,
        k: usize,
        per_query: BTreeMap<String, f64>,
        flagged: BTreeMap<String, QueryFlag>,
    ) -> Self {
        let mean = if per_query.is_empty() {
            0.0
        } else {
            per_query.values().sum::<f64>() / per_query.len() as f64
        };
        Self {
            metric_name,
            k,
            per_query,
            mean,
            flagged,
        }
    }

    /// `metric<TAB>query_id<TAB>value` rows in query order, then an `all` row.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (qid, v) in &self.per_query {
            writeln!(w, "{}\t{qid}\t{v:.4}", self.metric_name)?;
        }
        writeln!(w, "{}\tall\t{:.4}", self.metric_name, self.mean)
    }
}

/// nDCG@k of a single ranked list. Returns `None` when no judged document
/// has grade >= 1.
pub fn ndcg_query(docs: &[ScoredDoc], grades: &BTreeMap<String, u32>, k: usize, gain: Gain) -> Option<f64> {
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = docs
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| gain.apply(grades.get(&d.doc_id).copied().unwrap_or(0)) * discount(i))
        .sum();
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain.apply(g) * discount(i))
        .sum();
    Some(dcg / idcg)
}

/// AP@k of a single ranked list; `None` when the query has no relevant docs.
pub fn ap_query(docs: &[ScoredDoc], grades: &BTreeMap<String, u32>, k: usize) -> Option<f64> {
    let total_relevant = grades.values().filter(|&&g| g >= 1).count();
    if total_relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in docs.iter().take(k).enumerate() {
        if grades.get(&d.doc_id).is_some_and(|&g| g >= 1) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total_relevant as f64)
}

/// Reciprocal rank of the first relevant doc within k; `None` when the query
/// has no relevant docs.
pub fn rr_query(docs: &[ScoredDoc], grades: &BTreeMap<String, u32>, k: usize) -> Option<f64> {
    if !grades.values().any(|&g| g >= 1) {
        return None;
    }
    let first = docs
        .iter()
        .take(k)
        .position(|d| grades.get(&d.doc_id).is_some_and(|&g| g >= 1));
    Some(first.map_or(0.0, |i| 1.0 / (i + 1) as f64))
}

fn evaluate_per_query<F>(
    name: String,
    k: usize,
    run: &RunList,
    judgments: &Judgments,
    opts: EvalOptions,
    score: F,
) -> Result<MetricReport>
where
    F: Fn(&[ScoredDoc], &BTreeMap<String, u32>) -> Option<f64> + Sync,
{
    if k == 0 {
        return Err(Error::InvalidArgument("cutoff k must be >= 1".into()));
    }
    let queries: Vec<(&str, &[ScoredDoc])> = run.iter().collect();
    let results: Vec<(String, std::result::Result<f64, QueryFlag>)> = queries
        .par_iter()
        .map(|&(qid, docs)| {
            let outcome = match judgments.query(qid) {
                None if opts.exclude_unjudged => Err(QueryFlag::Unjudged),
                None => Ok(0.0),
                Some(grades) => score(docs, grades).ok_or(QueryFlag::NoRelevant),
            };
            (qid.to_string(), outcome)
        })
        .collect();

    let mut per_query = BTreeMap::new();
    let mut flagged = BTreeMap::new();
    for (qid, outcome) in results {
        match outcome {
            Ok(v) => {
                per_query.insert(qid, v);
            }
            Err(flag) => {
                flagged.insert(qid, flag);
            }
        }
    }
    Ok(MetricReport::from_values(name, k, per_query, flagged))
}

pub fn ndcg_at_k(run: &RunList, judgments: &Judgments, k: usize) -> Result<MetricReport> {
    ndcg_at_k_with(run, judgments, k, EvalOptions::default())
}

pub fn ndcg_at_k_with(run: &RunList, judgments: &Judgments, k: usize, opts: EvalOptions) -> Result<MetricReport> {
    let name = match opts.gain {
        Gain::Linear => format!("ndcg@{k}"),
        Gain::Exponential => format!("ndcg_exp@{k}"),
    };
    evaluate_per_query(name, k, run, judgments, opts, |docs, grades| {
        ndcg_query(docs, grades, k, opts.gain)
    })
}

pub fn map_at_k(run: &RunList, judgments: &Judgments, k: usize) -> Result<MetricReport> {
    map_at_k_with(run, judgments, k, EvalOptions::default())
}

pub fn map_at_k_with(run: &RunList, judgments: &Judgments, k: usize, opts: EvalOptions) -> Result<MetricReport> {
    evaluate_per_query(format!("map@{k}"), k, run, judgments, opts, |docs, grades| {
        ap_query(docs, grades, k)
    })
}

pub fn mrr_at_k(run: &RunList, judgments: &Judgments, k: usize) -> Result<MetricReport> {
    mrr_at_k_with(run, judgments, k, EvalOptions::default())
}

pub fn mrr_at_k_with(run: &RunList, judgments: &Judgments, k: usize, opts: EvalOptions) -> Result<MetricReport> {
    evaluate_per_query(format!("mrr@{k}"), k, run, judgments, opts, |docs, grades| {
        rr_query(docs, grades, k)
    })
}

pub fn evaluate(metric: Metric, run: &RunList, judgments: &Judgments, opts: EvalOptions) -> Result<MetricReport> {
    match metric {
        Metric::Ndcg(k) => ndcg_at_k_with(run, judgments, k, opts),
        Metric::Map(k) => map_at_k_with(run, judgments, k, opts),
        Metric::Mrr(k) => mrr_at_k_with(run, judgments, k, opts),
    }
}

/// Which way a document's rank is expected to move once the instruction
/// changes its relevance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Relevant before, non-relevant after: should move down.
    Demote,
    /// Non-relevant before, relevant after: should move up.
    Promote,
}

/// One document whose relevance an instruction change flipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedRankCase {
    pub query_id: String,
    pub doc_id: String,
    pub rank_before: Option<usize>,
    pub rank_after: Option<usize>,
    pub expected: Direction,
}

/// Relative rank movement in (-1, 1]: positive for a demotion, negative for
/// a promotion, zero when unchanged.
pub fn rank_shift(rank_before: usize, rank_after: usize) -> Result<f64> {
    if rank_before == 0 || rank_after == 0 {
        return Err(Error::InvalidArgument(format!(
            "ranks must be >= 1, got ({rank_before}, {rank_after})"
        )));
    }
    let (before, after) = (rank_before as f64, rank_after as f64);
    Ok(match rank_after.cmp(&rank_before) {
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => 1.0 - before / after,
        std::cmp::Ordering::Less => after / before - 1.0,
    })
}

/// How p-MRR averages case scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmrrAggregation {
    /// Mean over all cases.
    #[default]
    PerCase,
    /// Mean within each query first, then over queries.
    PerQuery,
}

/// p-MRR on the -100..100 scale. Missing ranks, and ranks beyond
/// `max_rank`, are imputed as `max_rank + 1`.
pub fn p_mrr(cases: &[PairedRankCase], max_rank: usize) -> Result<f64> {
    p_mrr_with(cases, max_rank, PmrrAggregation::PerCase)
}

pub fn p_mrr_with(cases: &[PairedRankCase], max_rank: usize, aggregation: PmrrAggregation) -> Result<f64> {
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be >= 1".into()));
    }
    if cases.is_empty() {
        return Err(Error::InvalidArgument("p-MRR needs at least one case".into()));
    }
    let impute = |r: Option<usize>| match r {
        Some(0) => Err(Error::InvalidArgument("ranks must be >= 1".into())),
        Some(r) if r <= max_rank => Ok(r),
        _ => Ok(max_rank + 1),
    };
    let mut by_query: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    for case in cases {
        let shift = rank_shift(impute(case.rank_before)?, impute(case.rank_after)?)?;
        let s = match case.expected {
            Direction::Demote => shift,
            Direction::Promote => -shift,
        };
        total += s;
        let entry = by_query.entry(case.query_id.as_str()).or_insert((0.0, 0));
        entry.0 += s;
        entry.1 += 1;
    }
    let mean = match aggregation {
        PmrrAggregation::PerCase => total / cases.len() as f64,
        PmrrAggregation::PerQuery => {
            by_query.values().map(|(sum, n)| sum / *n as f64).sum::<f64>() / by_query.len() as f64
        }
    };
    Ok(100.0 * mean)
}

/// Builds p-MRR cases from two runs (original vs. changed instruction) and
/// their judgments. A doc relevant before and not after expects a demotion;
/// the reverse expects a promotion. Unjudged counts as grade 0.
pub fn paired_cases(
    run_before: &RunList,
    run_after: &RunList,
    judgments_before: &Judgments,
    judgments_after: &Judgments,
) -> Vec<PairedRankCase> {
    let query_ids: BTreeSet<&str> = judgments_before
        .query_ids()
        .chain(judgments_after.query_ids())
        .collect();
    let mut cases = Vec::new();
    for qid in query_ids {
        let docs: BTreeSet<&str> = judgments_before
            .query(qid)
            .into_iter()
            .chain(judgments_after.query(qid))
            .flat_map(|m| m.keys().map(String::as_str))
            .collect();
        for doc in docs {
            let before = judgments_before.grade(qid, doc).unwrap_or(0) >= 1;
            let after = judgments_after.grade(qid, doc).unwrap_or(0) >= 1;
            let expected = match (before, after) {
                (true, false) => Direction::Demote,
                (false, true) => Direction::Promote,
                _ => continue,
            };
            cases.push(PairedRankCase {
                query_id: qid.to_string(),
                doc_id: doc.to_string(),
                rank_before: run_before.rank_of(qid, doc),
                rank_after: run_after.rank_of(qid, doc),
                expected,
            });
        }
    }
    cases
}

fn check_same_queries(runs: &[RunList]) -> Result<()> {
    let first: BTreeSet<&str> = runs[0].query_ids().collect();
    let mut diff = BTreeSet::new();
    for run in &runs[1..] {
        let other: BTreeSet<&str> = run.query_ids().collect();
        diff.extend(first.symmetric_difference(&other).copied());
    }
    if diff.is_empty() {
        Ok(())
    } else {
        Err(Error::QuerySetMismatch(diff.into_iter().map(str::to_string).collect()))
    }
}

/// Per query, the minimum nDCG@k over prompts; averaged over queries.
pub fn robustness_at_k(runs_by_prompt: &[RunList], judgments: &Judgments, k: usize) -> Result<MetricReport> {
    if runs_by_prompt.is_empty() {
        return Err(Error::InvalidArgument("robustness needs at least one prompt run".into()));
    }
    check_same_queries(runs_by_prompt)?;
    let reports = runs_by_prompt
        .iter()
        .map(|run| ndcg_at_k(run, judgments, k))
        .collect::<Result<Vec<_>>>()?;
    let mut per_query = reports[0].per_query.clone();
    for report in &reports[1..] {
        for (qid, v) in per_query.iter_mut() {
            // all runs share query sets and judgments, so the key is present
            if let Some(&other) = report.per_query.get(qid) {
                *v = v.min(other);
            }
        }
    }
    Ok(MetricReport::from_values(
        format!("robustness@{k}"),
        k,
        per_query,
        reports[0].flagged.clone(),
    ))
}

/// Population standard deviation of per-prompt mean nDCG@k, on the x100
/// scale.
pub fn prompt_stddev(runs_by_prompt: &[RunList], judgments: &Judgments, k: usize) -> Result<f64> {
    let means = runs_by_prompt
        .iter()
        .map(|run| ndcg_at_k(run, judgments, k).map(|r| r.mean))
        .collect::<Result<Vec<_>>>()?;
    population_stddev(&means)
        .map(|s| s * 100.0)
        .ok_or_else(|| Error::InvalidArgument("prompt_stddev needs at least one prompt run".into()))
}

pub fn population_stddev(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_of(qid: &str, ids: &[&str]) -> RunList {
        let mut run = RunList::new("t");
        let n = ids.len();
        run.insert(
            qid,
            ids.iter()
                .enumerate()
                .map(|(i, id)| ScoredDoc::new(*id, (n - i) as f64))
                .collect(),
        )
        .unwrap();
        run
    }

    fn qrels(entries: &[(&str, &str, u32)]) -> Judgments {
        let mut j = Judgments::new();
        for (q, d, g) in entries {
            j.insert(*q, *d, *g);
        }
        j
    }

    #[test]
    fn ndcg_hand_case() {
        let run = run_of("q", &["d1", "d2", "d3"]);
        let j = qrels(&[("q", "d1", 1), ("q", "d2", 0), ("q", "d3", 1)]);
        let r = ndcg_at_k(&run, &j, 10).unwrap();
        // DCG = 1 + 1/2, IDCG = 1 + 1/log2(3)
        let expected = 1.5 / (1.0 + 1.0 / 3f64.log2());
        assert!((r.mean - expected).abs() < 1e-12);
        assert!((r.mean - 0.9197).abs() < 1e-4);
    }

    #[test]
    fn ndcg_ideal_and_miss() {
        let j = qrels(&[("q", "a", 3), ("q", "b", 2), ("q", "c", 1)]);
        assert_eq!(ndcg_at_k(&run_of("q", &["a", "b", "c"]), &j, 10).unwrap().mean, 1.0);
        assert_eq!(ndcg_at_k(&run_of("q", &["x", "y"]), &j, 10).unwrap().mean, 0.0);
        let exp = ndcg_at_k_with(
            &run_of("q", &["a", "b", "c"]),
            &j,
            10,
            EvalOptions {
                gain: Gain::Exponential,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(exp.mean, 1.0);
        assert_eq!(exp.metric_name, "ndcg_exp@10");
    }

    #[test]
    fn map_cases() {
        let j = qrels(&[("q", "a", 1), ("q", "c", 1)]);
        let r = map_at_k(&run_of("q", &["a", "b", "c"]), &j, 1000).unwrap();
        assert!((r.mean - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        let single = qrels(&[("q", "a", 1)]);
        assert_eq!(map_at_k(&run_of("q", &["a"]), &single, 1000).unwrap().mean, 1.0);
        assert_eq!(map_at_k(&run_of("q", &["b", "a"]), &single, 1).unwrap().mean, 0.0);
    }

    #[test]
    fn mrr_cases() {
        let j = qrels(&[("q", "c", 2)]);
        assert_eq!(mrr_at_k(&run_of("q", &["c"]), &j, 10).unwrap().mean, 1.0);
        let r = mrr_at_k(&run_of("q", &["a", "b", "c"]), &j, 10).unwrap();
        assert!((r.mean - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mrr_at_k(&run_of("q", &["a", "b", "c"]), &j, 2).unwrap().mean, 0.0);
    }

    #[test]
    fn unjudged_and_norelevant_are_flagged() {
        let mut run = run_of("q1", &["a"]);
        run.insert("q2", vec![ScoredDoc::new("a", 1.0)]).unwrap();
        run.insert("q3", vec![ScoredDoc::new("a", 1.0)]).unwrap();
        let j = qrels(&[("q1", "a", 1), ("q3", "a", 0)]);
        let r = ndcg_at_k(&run, &j, 10).unwrap();
        assert_eq!(r.per_query.len(), 1);
        assert_eq!(r.flagged.get("q2"), Some(&QueryFlag::Unjudged));
        assert_eq!(r.flagged.get("q3"), Some(&QueryFlag::NoRelevant));

        let inclusive = ndcg_at_k_with(
            &run,
            &j,
            10,
            EvalOptions {
                exclude_unjudged: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(inclusive.per_query.len(), 2);
        assert_eq!(inclusive.mean, 0.5);
    }

    #[test]
    fn zero_cutoff_rejected() {
        let run = run_of("q", &["a"]);
        assert!(ndcg_at_k(&run, &Judgments::new(), 0).is_err());
        assert!("ndcg@0".parse::<Metric>().is_err());
    }

    #[test]
    fn metric_names() {
        assert_eq!("ndcg@10".parse::<Metric>().unwrap(), Metric::Ndcg(10));
        assert_eq!("map".parse::<Metric>().unwrap(), Metric::Map(1000));
        assert_eq!("MRR@5".parse::<Metric>().unwrap().to_string(), "mrr@5");
        assert!("p@10".parse::<Metric>().is_err());
    }

    #[test]
    fn rank_shift_cases() {
        assert_eq!(rank_shift(1, 1).unwrap(), 0.0);
        assert_eq!(rank_shift(1, 2).unwrap(), 0.5);
        assert_eq!(rank_shift(2, 1).unwrap(), -0.5);
        assert!(rank_shift(0, 1).is_err());
    }

    fn case(before: Option<usize>, after: Option<usize>, expected: Direction) -> PairedRankCase {
        PairedRankCase {
            query_id: "q".into(),
            doc_id: "d".into(),
            rank_before: before,
            rank_after: after,
            expected,
        }
    }

    #[test]
    fn p_mrr_cases() {
        assert_eq!(p_mrr(&[case(Some(3), Some(3), Direction::Demote)], 100).unwrap(), 0.0);
        let demoted = p_mrr(&[case(Some(1), Some(101), Direction::Demote)], 100).unwrap();
        assert!((demoted - 100.0 * (1.0 - 1.0 / 101.0)).abs() < 1e-9);
        // absent after-rank imputes to max_rank + 1
        assert_eq!(p_mrr(&[case(Some(1), None, Direction::Demote)], 100).unwrap(), demoted);
        assert_eq!(p_mrr(&[case(Some(1), Some(2), Direction::Promote)], 100).unwrap(), -50.0);
        assert!(p_mrr(&[], 100).is_err());
    }

    #[test]
    fn p_mrr_per_query_aggregation() {
        let mut a = case(Some(1), Some(2), Direction::Demote);
        a.query_id = "q1".into();
        let mut b = a.clone();
        b.doc_id = "e".into();
        let mut c = case(Some(1), Some(1), Direction::Demote);
        c.query_id = "q2".into();
        let cases = [a, b, c];
        // per case: (0.5 + 0.5 + 0) / 3; per query: (0.5 + 0) / 2
        assert!((p_mrr(&cases, 10).unwrap() - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(p_mrr_with(&cases, 10, PmrrAggregation::PerQuery).unwrap(), 25.0);
    }

    #[test]
    fn paired_cases_from_runs() {
        let before = run_of("q", &["a", "b", "c"]);
        let after = run_of("q", &["b", "c", "a"]);
        let jb = qrels(&[("q", "a", 1), ("q", "b", 1), ("q", "c", 0)]);
        let ja = qrels(&[("q", "a", 0), ("q", "b", 1), ("q", "c", 1)]);
        let cases = paired_cases(&before, &after, &jb, &ja);
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].doc_id, "a");
        assert_eq!(cases[0].expected, Direction::Demote);
        assert_eq!((cases[0].rank_before, cases[0].rank_after), (Some(1), Some(3)));
        assert_eq!(cases[1].expected, Direction::Promote);
        // a: 1 - 1/3; c: promoted 3 -> 2, shift = 2/3 - 1, negated
        let expected = 100.0 * ((1.0 - 1.0 / 3.0) + (1.0 - 2.0 / 3.0)) / 2.0;
        assert!((p_mrr(&cases, 1000).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn robustness_cases() {
        let j = qrels(&[("q1", "a", 1), ("q2", "b", 1)]);
        let mut good = RunList::new("p1");
        good.insert("q1", vec![ScoredDoc::new("a", 1.0)]).unwrap();
        good.insert("q2", vec![ScoredDoc::new("b", 1.0)]).unwrap();
        let mut bad = RunList::new("p2");
        bad.insert("q1", vec![ScoredDoc::new("x", 1.0)]).unwrap();
        bad.insert("q2", vec![ScoredDoc::new("x", 1.0)]).unwrap();

        let single = robustness_at_k(std::slice::from_ref(&good), &j, 10).unwrap();
        assert_eq!(single.per_query, ndcg_at_k(&good, &j, 10).unwrap().per_query);
        let both = robustness_at_k(&[good.clone(), bad.clone()], &j, 10).unwrap();
        assert_eq!(both.mean, 0.0);

        let mut partial = RunList::new("p3");
        partial.insert("q1", vec![ScoredDoc::new("a", 1.0)]).unwrap();
        partial.insert("q9", vec![ScoredDoc::new("a", 1.0)]).unwrap();
        match robustness_at_k(&[good, partial], &j, 10).unwrap_err() {
            Error::QuerySetMismatch(diff) => assert_eq!(diff, vec!["q2".to_string(), "q9".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stddev_cases() {
        assert_eq!(population_stddev(&[0.5, 0.5, 0.5]), Some(0.0));
        let s = population_stddev(&[0.5, 0.6]).unwrap() * 100.0;
        assert!((s - 5.0).abs() < 1e-12);
        assert_eq!(population_stddev(&[]), None);
    }

    #[test]
    fn tsv_shape() {
        let j = qrels(&[("q", "a", 1)]);
        let r = ndcg_at_k(&run_of("q", &["a"]), &j, 10).unwrap();
        let mut out = Vec::new();
        r.write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "ndcg@10\tq\t1.0000\nndcg@10\tall\t1.0000\n");
    }
}
