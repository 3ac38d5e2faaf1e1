use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use instrir_core::ablation::{default_generic_pool, parse_pool, TransformKind, TransformSpec};
use instrir_core::bm25::{build_index, Bm25Params, InvertedIndex};
use instrir_core::dense::{ids_path, load_embeddings, normalize, save_embeddings, search_topk};
use instrir_core::jsonl::{parse_corpus, parse_queries, parse_train, read_jsonl, write_jsonl, write_train};
use instrir_core::metrics::{
    evaluate, p_mrr_with, paired_cases, robustness_at_k, EvalOptions, Gain, Metric, PmrrAggregation,
};
use instrir_core::prompt_select::{
    apply_prompt, evaluate_pool, render_markdown, report, sample_dev, PromptEvalReport, PromptPool, Split,
};
use instrir_core::trec::{parse_qrels, parse_run, write_run, RunParseMode};
use instrir_core::{ablation, Judgments, RunList};
use instrir_datagen::assemble::{assemble_training_set, AssembleConfig};
use instrir_datagen::backend::{
    CachedBackend, HttpBackend, LmBackend, MockBackend, ModelParams, RetryPolicy, RetryingBackend,
};
use instrir_datagen::generate::{gen_instructions, mine_negatives, GenConfig};
use instrir_datagen::judge::{parse_verdict, LmJudge};
use instrir_datagen::records::{CandidateSet, InstructionRecord, Status};
use instrir_datagen::stats::{agreement, dataset_stats};
use instrir_datagen::templates::Templates;
use thiserror::Error;

use crate::args::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Backend(_) => 2,
        }
    }
}

impl From<instrir_core::Error> for CliError {
    fn from(e: instrir_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<instrir_datagen::Error> for CliError {
    fn from(e: instrir_datagen::Error) -> Self {
        match e {
            instrir_datagen::Error::Backend(b) => CliError::Backend(b.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// What a command produced, for the manifest and the exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Text for stdout, for commands that report rather than write files.
    pub stdout: Option<String>,
    /// Manifest location; `None` for stdout commands without `--manifest`.
    pub manifest: Option<PathBuf>,
    /// Items that ended in a backend failure after retries.
    pub backend_failures: usize,
}

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Invalid(format!("input file not found: {}", p.display())));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn effective_concurrency(requested: usize, jobs: Option<usize>) -> usize {
    jobs.map_or(requested, |j| requested.min(j)).max(1)
}

fn build_backend(spec: &str, args: &BackendArgs) -> Result<Arc<dyn LmBackend>> {
    let base: Arc<dyn LmBackend> = if let Some(path) = spec.strip_prefix("mock:") {
        require_files(&[Path::new(path)])?;
        Arc::new(MockBackend::from_path(Path::new(path))?)
    } else {
        let url = spec
            .strip_prefix("http:")
            .filter(|rest| rest.starts_with("http://") || rest.starts_with("https://"))
            .unwrap_or(spec);
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(CliError::Invalid(format!(
                "backend `{spec}` must be `mock:<file>` or an http(s) URL"
            )));
        }
        Arc::new(HttpBackend::new(url, &args.api_key_env, Duration::from_secs(args.timeout_secs)))
    };
    let policy = RetryPolicy {
        max_retries: args.max_retries,
        base_delay: Duration::from_millis(args.retry_base_ms),
        ..RetryPolicy::default()
    };
    let retrying = RetryingBackend::new(base, policy);
    Ok(match &args.cache_dir {
        Some(dir) => Arc::new(CachedBackend::new(retrying, dir)?),
        None => Arc::new(retrying),
    })
}

fn load_templates(dir: Option<&Path>) -> Result<Templates> {
    Ok(match dir {
        Some(d) => Templates::with_overrides(d)?,
        None => Templates::default(),
    })
}

fn build_judge(j: &JudgeArgs, backend: &BackendArgs, templates: &Templates) -> Result<Option<LmJudge<Arc<dyn LmBackend>>>> {
    let Some(spec) = &j.judge_backend else {
        return Ok(None);
    };
    let params = ModelParams {
        model: j.judge_model.clone(),
        temperature: 0.0,
        max_tokens: j.judge_max_tokens,
    };
    Ok(Some(LmJudge::new(build_backend(spec, backend)?, templates.clone(), params)))
}

fn model_params(model: &str, b: &BackendArgs) -> ModelParams {
    ModelParams {
        model: model.to_string(),
        temperature: b.temperature,
        max_tokens: b.max_tokens,
    }
}

pub fn gen_instructions_cmd(a: &GenInstructionsArgs, jobs: Option<usize>) -> Result<Outcome> {
    require_files(&[&a.input])?;
    let sources = parse_train(open(&a.input)?)?;
    let templates = load_templates(a.backend.templates.as_deref())?;
    let backend = build_backend(&a.backend.backend, &a.backend)?;
    let judge = build_judge(&a.judge, &a.backend, &templates)?;
    let cfg = GenConfig {
        params: model_params(&a.model, &a.backend),
        templates,
        seed: a.seed,
        exhaustive_grid: a.exhaustive_grid,
        prompt_negatives: a.prompt_negatives,
        concurrency: effective_concurrency(a.backend.concurrency, jobs),
    };
    let judge_ref = judge.as_ref().map(|j| j as &dyn instrir_datagen::judge::Judge);
    let records = gen_instructions(&sources, backend.as_ref(), judge_ref, &cfg)?;
    let mut buf = Vec::new();
    write_jsonl(&records, &mut buf)?;
    write_file(&a.out, &buf)?;
    let ok = records.iter().filter(|r| r.is_ok()).count();
    let backend_failures = records.iter().filter(|r| r.status == Status::BackendFailed).count();
    log::info!("{ok} of {} instruction records succeeded", records.len());
    Ok(Outcome {
        inputs: vec![a.input.clone()],
        outputs: vec![a.out.clone()],
        manifest: Some(crate::manifest::default_path(&a.out)),
        backend_failures,
        ..Outcome::default()
    })
}

pub fn mine_negatives_cmd(a: &MineNegativesArgs, jobs: Option<usize>) -> Result<Outcome> {
    require_files(&[&a.records])?;
    let records: Vec<InstructionRecord> = read_jsonl(open(&a.records)?)?;
    let templates = load_templates(a.backend.templates.as_deref())?;
    let backend = build_backend(&a.backend.backend, &a.backend)?;
    let judge = build_judge(&a.judge, &a.backend, &templates)?
        .ok_or_else(|| CliError::Invalid("mine-negatives requires --judge-backend".into()))?;
    let cfg = GenConfig {
        params: model_params(&a.model, &a.backend),
        templates,
        seed: 0,
        exhaustive_grid: false,
        prompt_negatives: 0,
        concurrency: effective_concurrency(a.backend.concurrency, jobs),
    };
    let sets = mine_negatives(&records, backend.as_ref(), &judge, &cfg);
    let mut buf = Vec::new();
    write_jsonl(&sets, &mut buf)?;
    write_file(&a.out, &buf)?;
    let kept: usize = sets.iter().map(|s| s.kept_negatives().count()).sum();
    log::info!("{} candidate sets, {kept} instruction negatives kept", sets.len());
    Ok(Outcome {
        inputs: vec![a.records.clone()],
        outputs: vec![a.out.clone()],
        manifest: Some(crate::manifest::default_path(&a.out)),
        backend_failures: sets.iter().filter(|s| s.status == Status::BackendFailed).count(),
        ..Outcome::default()
    })
}

fn default_sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn assemble_cmd(a: &AssembleArgs) -> Result<Outcome> {
    let mut inputs = vec![a.input.clone(), a.records.clone()];
    inputs.extend(a.candidates.clone());
    require_files(&inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let sources = parse_train(open(&a.input)?)?;
    let records: Vec<InstructionRecord> = read_jsonl(open(&a.records)?)?;
    let sets: Vec<CandidateSet> = match &a.candidates {
        Some(p) => read_jsonl(open(p)?)?,
        None => Vec::new(),
    };
    let cfg = AssembleConfig {
        negatives_per_instance: a.negatives,
        seed: a.seed,
        include_originals: a.include_originals,
    };
    let (instances, audit) = assemble_training_set(&sources, &records, &sets, &cfg)?;
    let audit_path = a.audit.clone().unwrap_or_else(|| default_sidecar(&a.out, ".audit.jsonl"));
    let mut buf = Vec::new();
    write_train(&instances, &mut buf)?;
    write_file(&a.out, &buf)?;
    let mut buf = Vec::new();
    write_jsonl(&audit, &mut buf)?;
    write_file(&audit_path, &buf)?;
    log::info!("assembled {} training instances", instances.len());
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone(), audit_path],
        manifest: Some(crate::manifest::default_path(&a.out)),
        ..Outcome::default()
    })
}

pub fn ablate_cmd(a: &AblateArgs) -> Result<Outcome> {
    let mut inputs = vec![a.input.clone()];
    inputs.extend(a.pool.clone());
    require_files(&inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let instances = parse_train(open(&a.input)?)?;
    let kind = match a.transform {
        TransformArg::RepeatQuery => TransformKind::RepeatQuery,
        TransformArg::Generic => TransformKind::GenericInstruction,
        TransformArg::Swap => TransformKind::SwapInstruction,
    };
    let generic_pool = match &a.pool {
        Some(p) => parse_pool(&std::fs::read_to_string(p)?),
        None => default_generic_pool(),
    };
    let spec = TransformSpec {
        kind,
        seed: a.seed,
        generic_pool,
        derangement: a.derangement,
    };
    spec.validate()?;
    let (out, passed_through) = ablation::apply(&spec, &instances)?;
    if passed_through > 0 {
        log::warn!("{passed_through} instances without an instruction were passed through unchanged");
    }
    let mut buf = Vec::new();
    write_train(&out, &mut buf)?;
    write_file(&a.out, &buf)?;
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        manifest: Some(crate::manifest::default_path(&a.out)),
        ..Outcome::default()
    })
}

pub fn stats_cmd(a: &StatsArgs) -> Result<Outcome> {
    require_files(&[&a.records])?;
    let records: Vec<InstructionRecord> = read_jsonl(open(&a.records)?)?;
    let stats = dataset_stats(&records)?;
    Ok(Outcome {
        inputs: vec![a.records.clone()],
        stdout: Some(stats.to_tsv()),
        manifest: a.manifest.clone(),
        ..Outcome::default()
    })
}

pub fn index_cmd(a: &IndexArgs) -> Result<Outcome> {
    let (inputs, outputs) = match a.kind {
        IndexKind::Bm25 => {
            let corpus_path = a.corpus.as_deref().expect("clap requires --corpus");
            require_files(&[corpus_path])?;
            let corpus = parse_corpus(open(corpus_path)?)?;
            let idx = build_index(&corpus, Bm25Params { k1: a.k1, b: a.b })?;
            if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            idx.save(&a.out)?;
            log::info!("indexed {} documents", idx.num_docs());
            (vec![corpus_path.to_path_buf()], vec![a.out.clone()])
        }
        IndexKind::Dense => {
            let emb = a.embeddings.as_deref().expect("clap requires --embeddings");
            require_files(&[emb, &ids_path(emb)])?;
            let mut m = load_embeddings(emb)?;
            if !a.no_normalize {
                m = normalize(&m)?;
            }
            if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            save_embeddings(&m, &a.out)?;
            (vec![emb.to_path_buf(), ids_path(emb)], vec![a.out.clone(), ids_path(&a.out)])
        }
    };
    Ok(Outcome {
        inputs,
        outputs,
        manifest: Some(crate::manifest::default_path(&a.out)),
        ..Outcome::default()
    })
}

pub fn search_cmd(a: &SearchArgs) -> Result<Outcome> {
    let tag = a.tag.clone().unwrap_or_else(|| match a.kind {
        IndexKind::Bm25 => "bm25".into(),
        IndexKind::Dense => "dense".into(),
    });
    let (inputs, run) = match a.kind {
        IndexKind::Bm25 => {
            require_files(&[&a.index, &a.queries])?;
            let idx = InvertedIndex::load(&a.index)?;
            let mut queries = parse_queries(open(&a.queries)?)?;
            if let Some(prompt) = &a.prompt {
                queries = queries.iter().map(|q| apply_prompt(q, prompt)).collect();
            }
            (vec![a.index.clone(), a.queries.clone()], idx.search_queries(&queries, a.k, &tag)?)
        }
        IndexKind::Dense => {
            if a.prompt.is_some() {
                return Err(CliError::Invalid("--prompt applies to bm25 search only".into()));
            }
            let inputs = vec![a.index.clone(), ids_path(&a.index), a.queries.clone(), ids_path(&a.queries)];
            require_files(&inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
            let passages = load_embeddings(&a.index)?;
            let queries = load_embeddings(&a.queries)?;
            (inputs, search_topk(&queries, &passages, a.k, &tag)?)
        }
    };
    let mut buf = Vec::new();
    write_run(&run, &mut buf)?;
    write_file(&a.out, &buf)?;
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        manifest: Some(crate::manifest::default_path(&a.out)),
        ..Outcome::default()
    })
}

fn load_run(path: &Path, strict: bool) -> Result<RunList> {
    let mode = if strict { RunParseMode::Strict } else { RunParseMode::Resort };
    parse_run(open(path)?, mode).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_qrels(path: &Path) -> Result<Judgments> {
    parse_qrels(open(path)?).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn eval_cmd(a: &EvalArgs) -> Result<Outcome> {
    let mut inputs: Vec<PathBuf> = a.run.clone();
    inputs.push(a.qrels.clone());
    inputs.extend(a.run_changed.clone());
    inputs.extend(a.qrels_changed.clone());
    require_files(&inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let qrels = load_qrels(&a.qrels)?;
    let runs = a.run.iter().map(|p| load_run(p, a.strict)).collect::<Result<Vec<_>>>()?;
    let opts = EvalOptions {
        exclude_unjudged: !a.include_unjudged,
        gain: match a.gain {
            GainArg::Linear => Gain::Linear,
            GainArg::Exponential => Gain::Exponential,
        },
    };
    let single_run = || -> Result<&RunList> {
        match runs.as_slice() {
            [run] => Ok(run),
            _ => Err(CliError::Invalid(format!("this metric takes exactly one --run, got {}", runs.len()))),
        }
    };
    let mut out = Vec::new();
    for name in &a.metric {
        let lower = name.to_ascii_lowercase();
        if matches!(lower.as_str(), "p-mrr" | "pmrr" | "p_mrr") {
            let (Some(changed), Some(changed_qrels)) = (&a.run_changed, &a.qrels_changed) else {
                return Err(CliError::Invalid("p-mrr requires --run-changed and --qrels-changed".into()));
            };
            let cases = paired_cases(
                single_run()?,
                &load_run(changed, a.strict)?,
                &qrels,
                &load_qrels(changed_qrels)?,
            );
            let aggregation = match a.pmrr_aggregation {
                AggregationArg::PerCase => PmrrAggregation::PerCase,
                AggregationArg::PerQuery => PmrrAggregation::PerQuery,
            };
            let value = p_mrr_with(&cases, a.max_rank, aggregation)?;
            out.extend(format!("p-mrr\tall\t{value:.4}\n").into_bytes());
        } else if let Some(k) = lower.strip_prefix("robustness") {
            let k = match k.strip_prefix('@') {
                Some(k) => k
                    .parse::<usize>()
                    .ok()
                    .filter(|&k| k > 0)
                    .ok_or_else(|| CliError::Invalid(format!("bad cutoff in metric `{name}`")))?,
                None if k.is_empty() => 10,
                None => return Err(CliError::Invalid(format!("unknown metric `{name}`"))),
            };
            robustness_at_k(&runs, &qrels, k)?.write_tsv(&mut out)?;
        } else {
            let metric: Metric = name.parse()?;
            evaluate(metric, single_run()?, &qrels, opts)?.write_tsv(&mut out)?;
        }
    }
    Ok(Outcome {
        inputs,
        stdout: Some(String::from_utf8(out).expect("reports are UTF-8")),
        manifest: a.manifest.clone(),
        ..Outcome::default()
    })
}

/// Pool, dev scores, test scores and the no-prompt baseline.
type ScoreTable = (PromptPool, Option<Vec<f64>>, Vec<f64>, f64);

/// Reads a table in the layout `PromptEvalReport::write_tsv` produces.
fn parse_score_table(text: &str) -> Result<ScoreTable> {
    let bad = |line: usize, msg: &str| CliError::Invalid(format!("score table line {line}: {msg}"));
    let mut baseline = None;
    let mut rows: Vec<(usize, Option<f64>, f64, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0].trim() {
            "" | "prompt_index" | "selected" | "best" | "stddev" => continue,
            "none" => {
                let v = fields.get(2).ok_or_else(|| bad(n, "missing test score"))?;
                baseline = Some(v.trim().parse::<f64>().map_err(|_| bad(n, "bad baseline score"))?);
            }
            idx => {
                let idx: usize = idx.parse().map_err(|_| bad(n, "bad prompt index"))?;
                let dev = match fields.get(1).map(|s| s.trim()) {
                    None | Some("-") | Some("") => None,
                    Some(s) => Some(s.parse::<f64>().map_err(|_| bad(n, "bad dev score"))?),
                };
                let test = fields
                    .get(2)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| bad(n, "bad test score"))?;
                let prompt = fields
                    .get(3)
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .unwrap_or_else(|| format!("prompt {idx}"));
                rows.push((idx, dev, test, prompt));
            }
        }
    }
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(CliError::Invalid("score table prompt indices must run 0, 1, 2, ...".into()));
    }
    let with_dev = rows.iter().filter(|r| r.1.is_some()).count();
    if with_dev != 0 && with_dev != rows.len() {
        return Err(CliError::Invalid("dev scores must be given for all prompts or none".into()));
    }
    let pool = PromptPool::new(rows.iter().map(|r| r.3.clone()).collect())?;
    let dev = (with_dev > 0).then(|| rows.iter().map(|r| r.1.unwrap_or_default()).collect());
    let test = rows.iter().map(|r| r.2).collect();
    let baseline = baseline.ok_or_else(|| CliError::Invalid("score table lacks a `none` row".into()))?;
    Ok((pool, dev, test, baseline))
}

pub fn prompt_select_cmd(a: &PromptSelectArgs) -> Result<Outcome> {
    let mut inputs = Vec::new();
    let rep: PromptEvalReport = if let Some(scores) = &a.scores {
        require_files(&[scores])?;
        inputs.push(scores.clone());
        let (pool, dev, test, baseline) = parse_score_table(&std::fs::read_to_string(scores)?)?;
        report(&pool, dev.as_deref(), &test, baseline)?
    } else if let Some(index) = &a.index {
        let test_q = a.test_queries.as_ref().expect("clap requires --test-queries");
        let test_j = a.test_qrels.as_ref().expect("clap requires --test-qrels");
        inputs.extend([index.clone(), test_q.clone(), test_j.clone()]);
        inputs.extend(a.dev_queries.clone());
        inputs.extend(a.dev_qrels.clone());
        inputs.extend(a.prompts.clone());
        require_files(&inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
        let pool = match &a.prompts {
            Some(p) => PromptPool::parse(&std::fs::read_to_string(p)?)?,
            None => PromptPool::default_pool(),
        };
        let idx = InvertedIndex::load(index)?;
        let test_queries = parse_queries(open(test_q)?)?;
        let test_qrels = load_qrels(test_j)?;
        let dev = match (&a.dev_queries, &a.dev_qrels) {
            (Some(q), Some(j)) => {
                let all = parse_queries(open(q)?)?;
                Some((sample_dev(&all, a.dev_sample, a.seed)?, load_qrels(j)?))
            }
            _ => None,
        };
        let depth = a.k;
        evaluate_pool(
            &pool,
            dev.as_ref().map(|(queries, judgments)| Split { queries, judgments }),
            Split {
                queries: &test_queries,
                judgments: &test_qrels,
            },
            a.k,
            |qs| idx.search_queries(qs, depth, "prompt"),
        )?
    } else {
        return Err(CliError::Invalid("prompt-select needs --scores or --index".into()));
    };
    let stdout = if a.markdown {
        render_markdown(&[(a.dataset.clone(), rep)])
    } else {
        let mut buf = Vec::new();
        rep.write_tsv(&mut buf)?;
        String::from_utf8(buf).expect("report is UTF-8")
    };
    Ok(Outcome {
        inputs,
        stdout: Some(stdout),
        manifest: a.manifest.clone(),
        ..Outcome::default()
    })
}

fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let mut labels = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let label = match t {
            "1" => Some(true),
            "0" => Some(false),
            _ => parse_verdict(t),
        };
        labels.push(label.ok_or_else(|| {
            CliError::Invalid(format!("{} line {}: unreadable label `{t}`", path.display(), i + 1))
        })?);
    }
    Ok(labels)
}

pub fn agreement_cmd(a: &AgreementArgs) -> Result<Outcome> {
    require_files(&[&a.a, &a.b])?;
    let (x, y) = (read_labels(&a.a)?, read_labels(&a.b)?);
    let frac = agreement(&x, &y)?;
    let matches = x.iter().zip(&y).filter(|(p, q)| p == q).count();
    Ok(Outcome {
        inputs: vec![a.a.clone(), a.b.clone()],
        stdout: Some(format!("agreement\t{matches}/{}\t{frac:.4}\n", x.len())),
        manifest: a.manifest.clone(),
        ..Outcome::default()
    })
}

pub fn run(command: &Command, jobs: Option<usize>) -> Result<Outcome> {
    match command {
        Command::GenInstructions(a) => gen_instructions_cmd(a, jobs),
        Command::MineNegatives(a) => mine_negatives_cmd(a, jobs),
        Command::Assemble(a) => assemble_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::Stats(a) => stats_cmd(a),
        Command::Index(a) => index_cmd(a),
        Command::Search(a) => search_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::PromptSelect(a) => prompt_select_cmd(a),
        Command::Agreement(a) => agreement_cmd(a),
    }
}
