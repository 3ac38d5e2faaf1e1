use instrir_core::metrics::{
    map_at_k, mrr_at_k, ndcg_at_k, p_mrr, rank_shift, robustness_at_k, Direction, PairedRankCase,
};
use instrir_core::{Judgments, RunList, ScoredDoc};
use proptest::prelude::*;

/// (grades of the ranked docs, grades of judged-but-unretrieved docs)
fn ranked_case() -> impl Strategy<Value = (Vec<Option<u32>>, Vec<u32>)> {
    (
        proptest::collection::vec(proptest::option::of(0u32..4), 1..30),
        proptest::collection::vec(0u32..4, 0..6),
    )
}

fn build(grades: &[Option<u32>], extra: &[u32], scale: f64) -> (RunList, Judgments) {
    let mut run = RunList::new("p");
    let n = grades.len();
    run.insert(
        "q",
        (0..n)
            .map(|i| ScoredDoc::new(format!("d{i:03}"), scale * (n - i) as f64))
            .collect(),
    )
    .unwrap();
    let mut j = Judgments::new();
    for (i, g) in grades.iter().enumerate() {
        if let Some(g) = g {
            j.insert("q", format!("d{i:03}"), *g);
        }
    }
    for (i, g) in extra.iter().enumerate() {
        j.insert("q", format!("x{i}"), *g);
    }
    (run, j)
}

proptest! {
    #[test]
    fn ranking_metrics_bounded_and_scale_invariant((grades, extra) in ranked_case(), k in 1usize..40) {
        let (run, j) = build(&grades, &extra, 1.0);
        let (scaled, _) = build(&grades, &extra, 7.5);
        for f in [ndcg_at_k, map_at_k, mrr_at_k] {
            let a = f(&run, &j, k).unwrap();
            let b = f(&scaled, &j, k).unwrap();
            prop_assert_eq!(&a.per_query, &b.per_query);
            for v in a.per_query.values() {
                prop_assert!((0.0..=1.0 + 1e-12).contains(v));
            }
        }
    }

    #[test]
    fn unjudged_tail_permutation_keeps_map_and_mrr(
        grades in proptest::collection::vec(0u32..3, 1..10),
        tail in 1usize..10,
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut j = Judgments::new();
        let head: Vec<String> = (0..grades.len()).map(|i| format!("j{i}")).collect();
        for (id, g) in head.iter().zip(&grades) {
            j.insert("q", id.as_str(), *g);
        }
        let mut tail_ids: Vec<String> = (0..tail).map(|i| format!("u{i}")).collect();
        let make = |tail_ids: &[String]| {
            let ids: Vec<&String> = head.iter().chain(tail_ids).collect();
            let n = ids.len();
            let mut run = RunList::new("t");
            run.insert("q", ids.iter().enumerate().map(|(i, id)| ScoredDoc::new(id.as_str(), (n - i) as f64)).collect()).unwrap();
            run
        };
        let a = make(&tail_ids);
        tail_ids.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let b = make(&tail_ids);
        prop_assert_eq!(map_at_k(&a, &j, 1000).unwrap(), map_at_k(&b, &j, 1000).unwrap());
        prop_assert_eq!(mrr_at_k(&a, &j, 1000).unwrap(), mrr_at_k(&b, &j, 1000).unwrap());
    }

    #[test]
    fn rank_shift_antisymmetric(a in 1usize..5000, b in 1usize..5000) {
        let fwd = rank_shift(a, b).unwrap();
        let back = rank_shift(b, a).unwrap();
        prop_assert_eq!(fwd, -back);
        prop_assert!(fwd.abs() < 1.0);
    }

    #[test]
    fn p_mrr_in_range(
        cases in proptest::collection::vec((proptest::option::of(1usize..200), proptest::option::of(1usize..200), any::<bool>()), 1..20),
    ) {
        let cases: Vec<PairedRankCase> = cases
            .into_iter()
            .enumerate()
            .map(|(i, (b, a, demote))| PairedRankCase {
                query_id: format!("q{}", i % 3),
                doc_id: format!("d{i}"),
                rank_before: b,
                rank_after: a,
                expected: if demote { Direction::Demote } else { Direction::Promote },
            })
            .collect();
        let v = p_mrr(&cases, 100).unwrap();
        prop_assert!(v > -100.0 && v <= 100.0);
        let same: Vec<PairedRankCase> = cases
            .iter()
            .map(|c| PairedRankCase { rank_after: c.rank_before, ..c.clone() })
            .collect();
        prop_assert_eq!(p_mrr(&same, 100).unwrap(), 0.0);
    }

    #[test]
    fn robustness_below_mean(
        prompts in proptest::collection::vec(proptest::collection::vec(0usize..8, 4), 1..5),
    ) {
        let mut j = Judgments::new();
        for q in 0..4 {
            j.insert(format!("q{q}"), "rel", 1);
        }
        // rank of the relevant doc per (prompt, query)
        let runs: Vec<RunList> = prompts
            .iter()
            .enumerate()
            .map(|(p, ranks)| {
                let mut run = RunList::new(format!("p{p}"));
                for (q, &r) in ranks.iter().enumerate() {
                    let mut docs: Vec<ScoredDoc> = (0..8).map(|i| ScoredDoc::new(format!("n{i}"), (20 - i) as f64)).collect();
                    docs[r] = ScoredDoc::new("rel", (20 - r) as f64);
                    run.insert(format!("q{q}"), docs).unwrap();
                }
                run
            })
            .collect();
        let robust = robustness_at_k(&runs, &j, 5).unwrap();
        let per_prompt: Vec<_> = runs.iter().map(|r| ndcg_at_k(r, &j, 5).unwrap()).collect();
        for (qid, v) in &robust.per_query {
            let mean = per_prompt.iter().map(|r| r.per_query[qid]).sum::<f64>() / runs.len() as f64;
            prop_assert!(*v <= mean + 1e-12);
        }
        let mean_all = per_prompt.iter().map(|r| r.mean).sum::<f64>() / runs.len() as f64;
        prop_assert!(robust.mean <= mean_all + 1e-12);
    }
}
