//! `run`: prompt every test example, score and persist the results.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use bookprobe::analysis::{coverage_of, CoverageReport};
use bookprobe::corpus::{load_parallel_jsonl, IgtExample, ParallelPair};
use bookprobe::glossing::{build_gloss_prompt, predict_topclass, IgtRetriever};
use bookprobe::grammaticality::{
    build_judgment_prompt, build_judgment_set, parse_answer, Answer, CorruptionSetting, JudgmentItem,
    JudgmentScore,
};
use bookprobe::metrics::{aggregate_igt, chrf_pp, corpus_chrf_pp, score_igt, ChrfParams, IgtScore, IgtSummary};
use bookprobe::prompts::{compose, count_prompt_tokens, Prompt};
use bookprobe_llm::{
    trim_response, CompletionRequest, DiskCache, HttpTransport, LlmClient, LlmError, Transport,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Task};
use crate::settings::{load_igt, PromptFactory, Setting};
use crate::{create_dir, write_file, CliError};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const PARTIAL_FILE: &str = "results.partial.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FROZEN_CONFIG_FILE: &str = "config.frozen.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Infeasible,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExampleScores {
    Translation { chrf_pp: f64 },
    Judgment { answer: Option<Answer>, correct: bool },
    Gloss(IgtScore),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub prompt_digest: String,
    pub status: Status,
    /// Untrimmed model output; `None` for local settings and failures.
    pub raw: Option<String>,
    /// First line of the output, which is what gets scored.
    pub output: String,
    pub reference: String,
    pub scores: Option<ExampleScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chrf_pp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment: Option<JudgmentScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub igt: Option<IgtSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub task: Task,
    pub setting: String,
    pub direction: String,
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<CorruptionSetting>,
    pub n_examples: usize,
    pub n_ok: usize,
    pub n_error: usize,
    pub n_infeasible: usize,
    /// Set when any prompt exceeded the context window; scores are then
    /// withheld and reported as `--`.
    pub infeasible: bool,
    pub scores: CorpusScores,
    /// Mean data-token count of the prompts.
    pub prompt_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
}

/// Corpus-level scores from records. Failed examples count as empty
/// outputs; any infeasible record withholds the scores.
pub fn corpus_scores(task: Task, records: &[ResultRecord]) -> Result<(bool, CorpusScores), CliError> {
    let infeasible = records.iter().any(|r| r.status == Status::Infeasible);
    if infeasible || records.is_empty() {
        return Ok((infeasible, CorpusScores::default()));
    }
    fn output(r: &ResultRecord) -> &str {
        if r.status == Status::Ok {
            &r.output
        } else {
            ""
        }
    }
    let mut scores = CorpusScores::default();
    match task {
        Task::Translate => {
            let hyps: Vec<&str> = records.iter().map(output).collect();
            let refs: Vec<&str> = records.iter().map(|r| r.reference.as_str()).collect();
            scores.chrf_pp = Some(corpus_chrf_pp(&hyps, &refs, &ChrfParams::default())?);
        }
        Task::Judge => {
            let mut correct = 0;
            let mut unparseable = 0;
            for r in records {
                match parse_answer(output(r)) {
                    Some(a) if answer_letter(a) == r.reference => correct += 1,
                    Some(_) => {}
                    None => unparseable += 1,
                }
            }
            scores.judgment = Some(JudgmentScore {
                total: records.len(),
                correct,
                unparseable,
                accuracy: correct as f64 / records.len() as f64,
            });
        }
        Task::Gloss => {
            let per: Vec<IgtScore> = records.iter().map(|r| score_igt(output(r), &r.reference)).collect();
            scores.igt = Some(aggregate_igt(&per));
        }
    }
    Ok((false, scores))
}

fn answer_letter(a: Answer) -> &'static str {
    match a {
        Answer::A => "A",
        Answer::B => "B",
    }
}

fn example_scores(task: Task, output: &str, reference: &str) -> Result<ExampleScores, CliError> {
    Ok(match task {
        Task::Translate => ExampleScores::Translation {
            chrf_pp: chrf_pp(output, reference, &ChrfParams::default())?,
        },
        Task::Judge => {
            let answer = parse_answer(output);
            ExampleScores::Judgment {
                answer,
                correct: answer.is_some_and(|a| answer_letter(a) == reference),
            }
        }
        Task::Gloss => ExampleScores::Gloss(score_igt(output, reference)),
    })
}

/// One test example, ready to prompt.
enum Example {
    Pair(ParallelPair),
    Judgment(JudgmentItem),
    Igt(IgtExample),
}

impl Example {
    fn id(&self) -> &str {
        match self {
            Example::Pair(p) => &p.id,
            Example::Judgment(j) => &j.id,
            Example::Igt(e) => &e.id,
        }
    }
}

struct Job<'a> {
    cfg: &'a ExperimentConfig,
    factory: &'a PromptFactory,
    retriever: Option<IgtRetriever<'a>>,
}

impl Job<'_> {
    fn source_and_reference(&self, pair: &ParallelPair) -> (String, String) {
        if self.factory.direction().source.is_english() {
            (pair.target.clone(), pair.source.clone())
        } else {
            (pair.source.clone(), pair.target.clone())
        }
    }

    fn reference(&self, ex: &Example) -> String {
        match ex {
            Example::Pair(p) => self.source_and_reference(p).1,
            Example::Judgment(j) => answer_letter(j.correct_answer()).to_string(),
            Example::Igt(e) => e.gloss_line(),
        }
    }

    /// The prompt for `ex`; local settings get a prompt without data
    /// sections whose digest identifies their input.
    fn prompt(&self, ex: &Example) -> Result<Prompt, CliError> {
        let name = &self.factory.setting().name;
        let local = self.factory.setting().is_local();
        let dir = self.factory.direction();
        Ok(match ex {
            Example::Pair(p) => {
                let (source, _) = self.source_and_reference(p);
                let sections = if local { Vec::new() } else { self.factory.sections_for(&source)? };
                let mut prompt = compose(name, sections, dir, &source)?;
                prompt.source_id = Some(p.id.clone());
                prompt
            }
            Example::Judgment(item) => {
                let sections = self.factory.sections_for(&item.original.join(" "))?;
                build_judgment_prompt(item, dir.low_resource(), name, sections)?
            }
            Example::Igt(e) => {
                let sections = if local {
                    Vec::new()
                } else {
                    self.factory.gloss_sections_for(e, self.retriever.as_ref())?
                };
                build_gloss_prompt(e, name, dir.low_resource(), sections)?
            }
        })
    }

    fn local_output(&self, ex: &Example) -> String {
        let f = self.factory;
        match ex {
            Example::Pair(p) => {
                let (source, _) = self.source_and_reference(p);
                f.lexicon.as_ref().expect("w4w lexicon").translate(&source, self.cfg.w4w_threshold)
            }
            Example::Igt(e) => predict_topclass(f.topclass.as_ref().expect("top-class model"), &e.transcription),
            Example::Judgment(_) => unreachable!("no local judgment settings"),
        }
    }

    fn process(&self, ex: &Example, client: Option<&LlmClient>, previous: Option<&ResultRecord>) -> ResultRecord {
        let reference = self.reference(ex);
        let mut record = ResultRecord {
            id: ex.id().to_string(),
            prompt_digest: String::new(),
            status: Status::Error,
            raw: None,
            output: String::new(),
            reference: reference.clone(),
            scores: None,
            error: None,
        };
        let prompt = match self.prompt(ex) {
            Ok(p) => p,
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        };
        record.prompt_digest = prompt.digest();
        if let Some(prev) = previous {
            if prev.status == Status::Ok && prev.prompt_digest == record.prompt_digest {
                return prev.clone();
            }
        }
        let output = match client {
            None => Ok((None, self.local_output(ex))),
            Some(client) => {
                let model = self.cfg.model.as_ref().expect("model configured");
                let mut req = CompletionRequest::new(&model.name, prompt.text());
                req.temperature = model.temperature;
                req.max_output_tokens = model.max_output_tokens;
                client
                    .complete(&req)
                    .map(|c| (Some(c.text.clone()), trim_response(&c.text).to_string()))
            }
        };
        match output {
            Ok((raw, out)) => match example_scores(self.cfg.task, &out, &reference) {
                Ok(scores) => {
                    record.status = Status::Ok;
                    record.raw = raw;
                    record.output = out;
                    record.scores = Some(scores);
                }
                Err(e) => record.error = Some(e.to_string()),
            },
            Err(e) => {
                if matches!(e, LlmError::ContextLength { .. }) {
                    record.status = Status::Infeasible;
                }
                record.error = Some(e.to_string());
            }
        }
        record
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reuse ok records from a previous run whose prompt digest matches.
    pub resume: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub summary: Summary,
    pub records: Vec<ResultRecord>,
}

fn load_examples(cfg: &ExperimentConfig, factory: &PromptFactory) -> Result<Vec<Example>, CliError> {
    let limit = cfg.limit.unwrap_or(usize::MAX);
    Ok(match cfg.task {
        Task::Translate => load_parallel_jsonl(&cfg.data.test)?
            .into_iter()
            .take(limit)
            .map(Example::Pair)
            .collect(),
        Task::Judge => {
            let pairs: Vec<ParallelPair> = load_parallel_jsonl(&cfg.data.test)?.into_iter().take(limit).collect();
            let corruption = cfg
                .corruption
                .ok_or_else(|| CliError::Config("judge runs need a corruption setting".into()))?;
            build_judgment_set(
                pairs.iter().map(|p| (p.id.as_str(), p.source.as_str())),
                corruption,
                cfg.seed,
            )
            .into_iter()
            .map(Example::Judgment)
            .collect()
        }
        Task::Gloss => load_igt(&cfg.data.test, factory.direction().low_resource())?
            .into_iter()
            .take(limit)
            .map(Example::Igt)
            .collect(),
    })
}

/// Reads records written by an earlier run, last write per id winning.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ResultRecord>(&line) {
            Ok(r) => out.push(r),
            Err(e) => {
                return Err(CliError::BadRecord {
                    path: path.to_path_buf(),
                    message: format!("line {}: {e}", i + 1),
                })
            }
        }
    }
    Ok(out)
}

fn previous_records(out_dir: &Path) -> HashMap<String, ResultRecord> {
    let mut map = HashMap::new();
    for name in [RESULTS_FILE, PARTIAL_FILE] {
        let path = out_dir.join(name);
        if !path.exists() {
            continue;
        }
        match read_records(&path) {
            Ok(records) => map.extend(records.into_iter().map(|r| (r.id.clone(), r))),
            // a run killed mid-write can leave a torn last line
            Err(e) => warn!("ignoring unreadable {}: {e}", path.display()),
        }
    }
    map
}

pub fn build_client(cfg: &ExperimentConfig) -> Result<Option<LlmClient>, CliError> {
    let Some(model) = &cfg.model else { return Ok(None) };
    let transport: Box<dyn Transport> = Box::new(HttpTransport::new(model.profile.timeout()));
    let mut client = LlmClient::new(model.profile.clone(), transport).with_max_in_flight(model.max_in_flight);
    if let Some(dir) = &model.cache_dir {
        client = client.with_cache(DiskCache::new(dir));
    }
    if let Some(retry) = model.retry {
        client = client.with_retry(retry);
    }
    Ok(Some(client))
}

/// Mean prompt tokens and, for translation, type coverage of the test
/// targets. Static settings share one set of data sections, so the first
/// prompt stands for all of them; retrieval settings are measured against
/// their whole retrieval pool.
pub fn prompt_stats(cfg: &ExperimentConfig) -> Result<(usize, Option<CoverageReport>), CliError> {
    let setting = cfg.validate()?;
    let factory = PromptFactory::new(cfg, &setting)?;
    let examples = load_examples(cfg, &factory)?;
    let retriever = match (cfg.task, setting.is_retrieval()) {
        (Task::Gloss, true) => Some(IgtRetriever::new(factory.igt_pool())?),
        _ => None,
    };
    let job = Job {
        cfg,
        factory: &factory,
        retriever,
    };
    job_prompt_stats(&job, &examples)
}

fn job_prompt_stats(job: &Job<'_>, examples: &[Example]) -> Result<(usize, Option<CoverageReport>), CliError> {
    let setting = job.factory.setting();
    let sample: &[Example] = if setting.is_retrieval() {
        examples
    } else {
        &examples[..examples.len().min(1)]
    };
    let prompts = sample.iter().map(|e| job.prompt(e)).collect::<Result<Vec<_>, _>>()?;
    let tokens = if prompts.is_empty() {
        0
    } else {
        (prompts.iter().map(count_prompt_tokens).sum::<usize>() as f64 / prompts.len() as f64).round() as usize
    };
    if job.cfg.task != Task::Translate || examples.is_empty() {
        return Ok((tokens, None));
    }
    let measured = if setting.is_retrieval() {
        let Example::Pair(p) = &examples[0] else { unreachable!("translation examples are pairs") };
        compose(&setting.name, job.factory.pool_sections()?, job.factory.direction(), &job.source_and_reference(p).0)?
    } else {
        prompts[0].clone()
    };
    let targets: Vec<String> = examples.iter().map(|e| job.reference(e)).collect();
    let mut report = coverage_of(&setting.name, &job.factory.direction().label(), &[&measured], &targets)?;
    report.prompt_tokens = tokens;
    Ok((tokens, Some(report)))
}

pub fn cmd_run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let client = match cfg.parsed_setting()?.needs_model() {
        true => build_client(cfg)?,
        false => None,
    };
    run_with_client(cfg, opts, client.as_ref())
}

/// `cmd_run` with an explicit client; `None` is only valid for local
/// settings.
pub fn run_with_client(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    client: Option<&LlmClient>,
) -> Result<RunOutcome, CliError> {
    let setting: Setting = cfg.validate()?;
    if setting.needs_model() && client.is_none() {
        return Err(CliError::Config(format!("setting {} needs a model client", setting.name)));
    }
    let client = if setting.is_local() { None } else { client };
    let factory = PromptFactory::new(cfg, &setting)?;
    let examples = load_examples(cfg, &factory)?;
    let retriever = match (cfg.task, setting.is_retrieval()) {
        (Task::Gloss, true) => Some(IgtRetriever::new(factory.igt_pool())?),
        _ => None,
    };
    let job = Job {
        cfg,
        factory: &factory,
        retriever,
    };

    let out_dir = cfg.out_dir.clone();
    create_dir(&out_dir)?;
    let previous = if opts.resume { previous_records(&out_dir) } else { HashMap::new() };
    let partial_path = out_dir.join(PARTIAL_FILE);
    let partial = OpenOptions::new()
        .create(true)
        .write(true)
        .append(opts.resume)
        .truncate(!opts.resume)
        .open(&partial_path)
        .map_err(|e| CliError::io(&partial_path, e))?;
    let partial = Mutex::new(partial);

    let slots: Vec<Mutex<Option<ResultRecord>>> = examples.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = client
        .map(|_| cfg.model.as_ref().map_or(1, |m| m.max_in_flight.max(1)))
        .unwrap_or(1)
        .min(examples.len().max(1));
    info!("{}: {} examples, {workers} workers", setting.name, examples.len());
    let write_error: Mutex<Option<std::io::Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(ex) = examples.get(i) else { break };
                let record = job.process(ex, client, previous.get(ex.id()));
                let line = serde_json::to_string(&record).expect("record serializes");
                if let Err(e) = writeln!(partial.lock().unwrap(), "{line}") {
                    write_error.lock().unwrap().get_or_insert(e);
                }
                *slots[i].lock().unwrap() = Some(record);
            });
        }
    });
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(CliError::io(&partial_path, e));
    }
    let records: Vec<ResultRecord> = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every example processed"))
        .collect();

    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    write_file(&out_dir.join(RESULTS_FILE), text)?;
    let _ = std::fs::remove_file(&partial_path);

    let (prompt_tokens, coverage) = job_prompt_stats(&job, &examples)?;
    let (infeasible, scores) = corpus_scores(cfg.task, &records)?;
    let count = |s: Status| records.iter().filter(|r| r.status == s).count();
    let summary = Summary {
        schema_version: crate::config::SCHEMA_VERSION,
        task: cfg.task,
        setting: setting.name.clone(),
        direction: cfg.direction()?.label(),
        model: client.and(cfg.model.as_ref()).map(|m| m.name.clone()),
        corruption: cfg.corruption.filter(|_| cfg.task == Task::Judge),
        n_examples: records.len(),
        n_ok: count(Status::Ok),
        n_error: count(Status::Error),
        n_infeasible: count(Status::Infeasible),
        infeasible,
        scores,
        prompt_tokens,
        coverage,
    };
    write_json(&out_dir.join(SUMMARY_FILE), &summary)?;
    write_json(&out_dir.join(FROZEN_CONFIG_FILE), cfg)?;
    Ok(RunOutcome {
        out_dir,
        summary,
        records,
    })
}

/// The prompt for test example `index`, as `run` would send it.
pub fn prompt_for(cfg: &ExperimentConfig, index: usize) -> Result<Prompt, CliError> {
    let setting = cfg.validate()?;
    let factory = PromptFactory::new(cfg, &setting)?;
    let examples = load_examples(cfg, &factory)?;
    let retriever = match (cfg.task, setting.is_retrieval()) {
        (Task::Gloss, true) => Some(IgtRetriever::new(factory.igt_pool())?),
        _ => None,
    };
    let job = Job {
        cfg,
        factory: &factory,
        retriever,
    };
    let ex = examples.get(index).ok_or_else(|| {
        CliError::Config(format!("test set has {} examples, no index {index}", examples.len()))
    })?;
    job.prompt(ex)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, status: Status, output: &str, reference: &str) -> ResultRecord {
        ResultRecord {
            id: id.into(),
            prompt_digest: "d".into(),
            status,
            raw: None,
            output: output.into(),
            reference: reference.into(),
            scores: None,
            error: None,
        }
    }

    #[test]
    fn errors_score_as_empty() {
        let ok = rec("1", Status::Ok, "They run.", "They run.");
        let err = rec("2", Status::Error, "ignored", "The dog runs.");
        let (inf, s) = corpus_scores(Task::Translate, &[ok.clone(), err]).unwrap();
        assert!(!inf);
        let expected = corpus_chrf_pp(&["They run.", ""], &["They run.", "The dog runs."], &ChrfParams::default()).unwrap();
        assert_eq!(s.chrf_pp, Some(expected));
        let (inf, s) = corpus_scores(Task::Translate, &[ok, rec("3", Status::Infeasible, "", "x")]).unwrap();
        assert!(inf);
        assert_eq!(s.chrf_pp, None);
    }

    #[test]
    fn judgment_records() {
        let rs = [
            rec("1", Status::Ok, "A", "A"),
            rec("2", Status::Ok, "b) because", "A"),
            rec("3", Status::Ok, "Neither", "B"),
            rec("4", Status::Ok, "B", "B"),
        ];
        let (_, s) = corpus_scores(Task::Judge, &rs).unwrap();
        let j = s.judgment.unwrap();
        assert_eq!((j.correct, j.unparseable, j.total), (2, 1, 4));
        assert_eq!(j.accuracy, 0.5);
    }

    #[test]
    fn record_roundtrip() {
        let mut r = rec("1", Status::Ok, "x", "y");
        for scores in [
            ExampleScores::Translation { chrf_pp: 12.5 },
            ExampleScores::Judgment { answer: Some(Answer::B), correct: false },
            ExampleScores::Gloss(score_igt("dog IAM", "dog IAM")),
        ] {
            r.scores = Some(scores);
            let back: ResultRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
            assert_eq!(back, r);
        }
    }
}
