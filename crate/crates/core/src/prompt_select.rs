//! Zero-shot prompt selection: score a fixed prompt pool on a small dev
//! sample, pick the dev winner, and report it next to the test-best prompt
//! and the no-prompt baseline.

use std::collections::HashSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{ndcg_at_k, population_stddev, prompt_stddev};
use crate::types::{InstructedQuery, Judgments, LengthFormat, RunList, Style};

/// The 10 shipped generic retrieval prompts, one per line.
pub const RETRIEVAL_PROMPTS: &str = include_str!("../assets/retrieval_prompts.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPool {
    prompts: Vec<String>,
}

impl PromptPool {
    pub fn new(prompts: Vec<String>) -> Result<Self> {
        if prompts.is_empty() {
            return Err(Error::InvalidArgument("prompt pool is empty".into()));
        }
        let mut seen = HashSet::new();
        for p in &prompts {
            if !seen.insert(p.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate prompt `{p}`")));
            }
        }
        Ok(Self { prompts })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(crate::ablation::parse_pool(text))
    }

    pub fn default_pool() -> Self {
        Self::parse(RETRIEVAL_PROMPTS).expect("shipped prompt pool is valid")
    }

    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }
}

/// Uniform sample of `n` queries without replacement, sorted by query id.
pub fn sample_dev(queries: &[InstructedQuery], n: usize, seed: u64) -> Result<Vec<InstructedQuery>> {
    if n > queries.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {n} dev queries from {}",
            queries.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<InstructedQuery> = rand::seq::index::sample(&mut rng, queries.len(), n)
        .into_iter()
        .map(|i| queries[i].clone())
        .collect();
    picked.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(picked)
}

/// Sets the query's instruction to `prompt`. An empty prompt leaves the
/// query untouched.
pub fn apply_prompt(query: &InstructedQuery, prompt: &str) -> InstructedQuery {
    if prompt.is_empty() {
        return query.clone();
    }
    InstructedQuery {
        instruction: Some(prompt.to_string()),
        style: Some(query.style.unwrap_or(Style::None)),
        length: Some(query.length.unwrap_or(LengthFormat::Short)),
        ..query.clone()
    }
}

/// Index of the best dev score; ties go to the lowest index.
pub fn select_prompt(pool: &PromptPool, dev_scores: &[f64]) -> Result<usize> {
    if dev_scores.len() != pool.len() {
        return Err(Error::InvalidArgument(format!(
            "{} dev scores for {} prompts",
            dev_scores.len(),
            pool.len()
        )));
    }
    argmax(dev_scores)
}

fn argmax(scores: &[f64]) -> Result<usize> {
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptEvalReport {
    pub prompts: Vec<String>,
    /// Mean dev nDCG per prompt; `None` for datasets without a dev split.
    pub dev_scores: Option<Vec<f64>>,
    pub test_scores: Vec<f64>,
    pub baseline: f64,
    pub selected: Option<usize>,
    pub best: usize,
    /// Population standard deviation of the test scores, x100.
    pub stddev: f64,
}

impl PromptEvalReport {
    pub fn selected_test(&self) -> Option<f64> {
        self.selected.map(|i| self.test_scores[i])
    }

    pub fn best_test(&self) -> f64 {
        self.test_scores[self.best]
    }

    /// Per-prompt rows: `index<TAB>dev<TAB>test<TAB>prompt`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "prompt_index\tdev\ttest\tprompt")?;
        writeln!(w, "none\t-\t{:.4}\t", self.baseline)?;
        for (i, p) in self.prompts.iter().enumerate() {
            let dev = self
                .dev_scores
                .as_ref()
                .map_or_else(|| "-".to_string(), |d| format!("{:.4}", d[i]));
            writeln!(w, "{i}\t{dev}\t{:.4}\t{p}", self.test_scores[i])?;
        }
        let selected = self.selected.map_or_else(|| "-".to_string(), |i| i.to_string());
        writeln!(w, "selected\t{selected}")?;
        writeln!(w, "best\t{}", self.best)?;
        writeln!(w, "stddev\t{:.4}", self.stddev)
    }
}

/// Assembles the report from per-prompt scores. Selection only sees the dev
/// scores.
pub fn report(
    pool: &PromptPool,
    dev_scores: Option<&[f64]>,
    test_scores: &[f64],
    baseline: f64,
) -> Result<PromptEvalReport> {
    if test_scores.len() != pool.len() {
        return Err(Error::InvalidArgument(format!(
            "{} test scores for {} prompts",
            test_scores.len(),
            pool.len()
        )));
    }
    let selected = dev_scores.map(|d| select_prompt(pool, d)).transpose()?;
    let best = argmax(test_scores)?;
    let stddev = population_stddev(test_scores).expect("pool is non-empty") * 100.0;
    Ok(PromptEvalReport {
        prompts: pool.prompts().to_vec(),
        dev_scores: dev_scores.map(<[f64]>::to_vec),
        test_scores: test_scores.to_vec(),
        baseline,
        selected,
        best,
        stddev,
    })
}

/// A dataset split to score prompts on.
pub struct Split<'a> {
    pub queries: &'a [InstructedQuery],
    pub judgments: &'a Judgments,
}

/// Runs `retrieve` once per prompt (and once without a prompt) and builds the
/// report. `dev` is `None` for datasets without a dev/train split.
pub fn evaluate_pool<F>(
    pool: &PromptPool,
    dev: Option<Split<'_>>,
    test: Split<'_>,
    k: usize,
    mut retrieve: F,
) -> Result<PromptEvalReport>
where
    F: FnMut(&[InstructedQuery]) -> Result<RunList>,
{
    let mut with_prompt = |split: &Split<'_>, prompt: &str| -> Result<RunList> {
        let prompted: Vec<InstructedQuery> = split.queries.iter().map(|q| apply_prompt(q, prompt)).collect();
        retrieve(&prompted)
    };

    let dev_scores = match &dev {
        Some(split) => {
            let mut scores = Vec::with_capacity(pool.len());
            for p in pool.prompts() {
                let run = with_prompt(split, p)?;
                scores.push(ndcg_at_k(&run, split.judgments, k)?.mean);
            }
            Some(scores)
        }
        None => None,
    };

    let baseline = ndcg_at_k(&with_prompt(&test, "")?, test.judgments, k)?.mean;
    let test_runs = pool
        .prompts()
        .iter()
        .map(|p| with_prompt(&test, p))
        .collect::<Result<Vec<_>>>()?;
    let test_scores = test_runs
        .iter()
        .map(|run| ndcg_at_k(run, test.judgments, k).map(|r| r.mean))
        .collect::<Result<Vec<_>>>()?;
    let mut rep = report(pool, dev_scores.as_deref(), &test_scores, baseline)?;
    rep.stddev = prompt_stddev(&test_runs, test.judgments, k)?;
    Ok(rep)
}

/// Markdown table with one row per dataset: None / Selected / Best / sigma.
/// Scores are shown x100. Datasets without a dev split leave Selected blank.
pub fn render_markdown(rows: &[(String, PromptEvalReport)]) -> String {
    let mut out = String::from("| Dataset | None | Selected Prompt | Best Prompt | σ |\n|---|---|---|---|---|\n");
    for (name, r) in rows {
        let selected = r
            .selected_test()
            .map_or_else(String::new, |s| format!("{:.1}", s * 100.0));
        out.push_str(&format!(
            "| {name} | {:.1} | {selected} | {:.1} | {:.1} |\n",
            r.baseline * 100.0,
            r.best_test() * 100.0,
            r.stddev
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn queries(n: usize) -> Vec<InstructedQuery> {
        (0..n)
            .map(|i| InstructedQuery::bare(format!("q{i:04}"), format!("query {i}")))
            .collect()
    }

    #[test]
    fn default_pool_has_ten_prompts() {
        assert_eq!(PromptPool::default_pool().len(), 10);
    }

    #[test]
    fn pool_rejects_empty_and_duplicates() {
        assert!(PromptPool::new(vec![]).is_err());
        assert!(PromptPool::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn sampling() {
        let qs = queries(30);
        let full = sample_dev(&qs, 30, 1).unwrap();
        assert_eq!(full, qs);
        let a = sample_dev(&qs, 10, 7).unwrap();
        assert_eq!(a, sample_dev(&qs, 10, 7).unwrap());
        assert!(a.windows(2).all(|w| w[0].query_id < w[1].query_id));
        assert!(sample_dev(&qs, 31, 0).is_err());
    }

    #[test]
    fn prompt_application() {
        let q = InstructedQuery::bare("q", "what is a volcano");
        assert_eq!(apply_prompt(&q, ""), q);
        let once = apply_prompt(&q, "Think carefully about relevance");
        assert_eq!(apply_prompt(&once, "Think carefully about relevance"), once);
        assert_eq!(once.text(), "what is a volcano Think carefully about relevance");
        once.validate().unwrap();
    }

    #[test]
    fn selection_rules() {
        let pool = PromptPool::new((0..4).map(|i| format!("p{i}")).collect()).unwrap();
        assert_eq!(select_prompt(&pool, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 3);
        assert_eq!(select_prompt(&pool, &[0.5; 4]).unwrap(), 0);
        assert_eq!(select_prompt(&pool, &[0.1, 0.9, 0.9, 0.2]).unwrap(), 1);
        assert!(select_prompt(&pool, &[0.1]).is_err());
    }

    #[test]
    fn report_rules() {
        let single = PromptPool::new(vec!["p".into()]).unwrap();
        let r = report(&single, Some(&[0.3]), &[0.4], 0.2).unwrap();
        assert_eq!(r.selected, Some(r.best));
        assert_eq!(r.stddev, 0.0);

        let pool = PromptPool::new(vec!["a".into(), "b".into()]).unwrap();
        let r = report(&pool, Some(&[0.9, 0.1]), &[0.5, 0.6], 0.8).unwrap();
        assert_eq!(r.selected, Some(0));
        assert_eq!(r.best, 1);
        assert!(r.selected_test().unwrap() <= r.best_test());
        assert!(r.best_test() - r.baseline < 0.0);
        assert!((r.stddev - 5.0).abs() < 1e-12);

        let no_dev = report(&pool, None, &[0.5, 0.6], 0.1).unwrap();
        assert_eq!(no_dev.selected, None);
        let md = render_markdown(&[("scifact".into(), no_dev)]);
        assert!(md.contains("| scifact | 10.0 |  | 60.0 | 5.0 |"), "{md}");
    }
}
