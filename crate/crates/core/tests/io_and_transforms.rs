use instrir_core::ablation::repeat_query;
use instrir_core::jsonl::{parse_train, write_train};
use instrir_core::prompt_select::sample_dev;
use instrir_core::trec::{parse_qrels, parse_run, write_qrels, write_run, RunParseMode};
use instrir_core::{
    word_count, InstructedQuery, Judgments, LengthFormat, NegativeSource, Passage, RunList, ScoredDoc, Style,
    TrainInstance, TrainNegative,
};
use proptest::prelude::*;

fn run_strategy() -> impl Strategy<Value = RunList> {
    proptest::collection::btree_map(
        "q[0-9]{1,3}",
        proptest::collection::btree_map("d[a-z0-9]{1,4}", -1_000_000i64..1_000_000, 0..12),
        0..6,
    )
    .prop_map(|queries| {
        let mut run = RunList::new("tag");
        for (qid, docs) in queries {
            run.insert(
                qid,
                docs.into_iter()
                    .map(|(d, s)| ScoredDoc::new(d, s as f64 / 997.0))
                    .collect(),
            )
            .unwrap();
        }
        run
    })
}

proptest! {
    #[test]
    fn run_write_parse_write_is_byte_stable(run in run_strategy()) {
        let mut first = Vec::new();
        write_run(&run, &mut first).unwrap();
        let parsed = parse_run(first.as_slice(), RunParseMode::Strict).unwrap();
        let mut second = Vec::new();
        write_run(&parsed, &mut second).unwrap();
        prop_assert_eq!(first, second);
        parsed.validate().unwrap();
    }

    #[test]
    fn qrels_write_parse_is_identity(entries in proptest::collection::btree_map(("q[0-9]", "d[0-9]{1,3}"), 0u32..4, 0..30)) {
        let mut j = Judgments::new();
        for ((q, d), g) in &entries {
            j.insert(q.as_str(), d.as_str(), *g);
        }
        let mut text = Vec::new();
        write_qrels(&j, &mut text).unwrap();
        let back = parse_qrels(text.as_slice()).unwrap();
        prop_assert_eq!(&back, &j);
        let mut again = Vec::new();
        write_qrels(&back, &mut again).unwrap();
        prop_assert_eq!(text, again);
    }

    #[test]
    fn train_jsonl_is_byte_stable(
        n_instr in 0usize..4,
        n_hard in 0usize..5,
        instruction in proptest::option::of("[a-zA-Z \"\\\\é]{0,30}"),
    ) {
        let negatives = (0..n_instr)
            .map(|i| TrainNegative { passage: Passage::new(format!("g{i}"), "t", "gen ü"), source: NegativeSource::Instruction })
            .chain((0..n_hard).map(|i| TrainNegative { passage: Passage::new(format!("h{i}"), "", "hard"), source: NegativeSource::Hard }))
            .collect();
        let has = instruction.is_some();
        let inst = TrainInstance {
            query_id: "q".into(),
            query: "what is lava".into(),
            instruction,
            style: has.then_some(Style::Background),
            length: has.then_some(LengthFormat::VeryLong),
            positive: Passage::new("p", "", "pos"),
            negatives,
        };
        let mut first = Vec::new();
        write_train(std::slice::from_ref(&inst), &mut first).unwrap();
        let parsed = parse_train(first.as_slice()).unwrap();
        prop_assert_eq!(&parsed[0], &inst);
        let mut second = Vec::new();
        write_train(&parsed, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn repeat_query_reaches_instruction_length(
        query in "[a-z]{1,6}( [a-z]{1,6}){0,5}",
        instruction in "[a-z]{1,6}( [a-z]{1,6}){0,60}",
    ) {
        let inst = TrainInstance {
            query_id: "q".into(),
            query: query.clone(),
            instruction: Some(instruction.clone()),
            style: Some(Style::None),
            length: Some(LengthFormat::Short),
            positive: Passage::new("p", "", "x"),
            negatives: vec![],
        };
        let out = repeat_query(&inst).instance;
        let got = word_count(out.instruction.as_deref().unwrap());
        let (qw, iw) = (word_count(&query), word_count(&instruction));
        prop_assert!(got >= iw);
        // minimal: one fewer copy would fall short (unless a single copy)
        prop_assert!(got == qw || got - qw < iw);
    }
}

#[test]
fn dev_sample_overlap_matches_hypergeometric_mean() {
    let queries: Vec<InstructedQuery> = (0..1000)
        .map(|i| InstructedQuery::bare(format!("q{i:04}"), "text"))
        .collect();
    let trials = 2000u64;
    let mut total_overlap = 0usize;
    let mut any_overlap = 0usize;
    for t in 0..trials {
        let a = sample_dev(&queries, 10, 2 * t).unwrap();
        let b = sample_dev(&queries, 10, 2 * t + 1).unwrap();
        let overlap = a.iter().filter(|q| b.contains(q)).count();
        total_overlap += overlap;
        any_overlap += usize::from(overlap > 0);
    }
    // brute-force expectation: 10 draws, 10 marked out of 1000
    let expected_mean = 10.0 * 10.0 / 1000.0;
    let p_none: f64 = (0..10).map(|i| (990.0 - i as f64) / (1000.0 - i as f64)).product();
    let mean = total_overlap as f64 / trials as f64;
    let frac_any = any_overlap as f64 / trials as f64;
    // about four standard errors
    assert!((mean - expected_mean).abs() < 0.03, "mean overlap {mean}");
    assert!((frac_any - (1.0 - p_none)).abs() < 0.027, "P(overlap) {frac_any}");
}
