//! Data-preparation commands: book splitting, judgment items and the
//! Top-Class glosser.

use std::path::Path;

use bookprobe::corpus::{
    book_stats, load_parallel_jsonl, project_subset, segment_book, write_jsonl, BookStats, FormatRules,
    IgtRecord, Subset,
};
use bookprobe::glossing::{predict_topclass, train_topclass, TopClassModel};
use bookprobe::grammaticality::{build_judgment_set, CorruptionSetting, JudgmentItem};
use bookprobe::lang::Language;
use bookprobe::metrics::{aggregate_igt, score_igt, IgtScore, IgtSummary};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::runner::write_json;
use crate::settings::load_igt;
use crate::{create_dir, write_file, CliError};

pub const BOOK_STATS_FILE: &str = "book_stats.json";
pub const BOOK_EXAMPLES_FILE: &str = "book_examples.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub language: String,
    pub all: BookStats,
    pub para: BookStats,
    pub non_para: BookStats,
    pub examples: usize,
    pub malformed: usize,
}

/// Splits a raw book into its parallel and prose subsets and writes the
/// three text files, the recovered examples and their statistics.
pub fn cmd_split_book(
    book_path: &Path,
    rules_path: Option<&Path>,
    language: &str,
    out_dir: &Path,
) -> Result<SplitStats, CliError> {
    let text = std::fs::read_to_string(book_path).map_err(|e| CliError::io(book_path, e))?;
    let rules = match rules_path {
        Some(p) => FormatRules::from_json_file(p)?,
        None => FormatRules::default(),
    };
    let seg = segment_book(language, &text, &rules)?;
    for m in &seg.malformed {
        warn!("{}: {m}", book_path.display());
    }
    create_dir(out_dir)?;
    let mut stats = SplitStats {
        language: language.to_string(),
        all: BookStats::default(),
        para: BookStats::default(),
        non_para: BookStats::default(),
        examples: seg.examples.len(),
        malformed: seg.malformed.len(),
    };
    for subset in [Subset::All, Subset::Para, Subset::NonPara] {
        let body = project_subset(&seg.document, subset);
        let s = book_stats(&body);
        match subset {
            Subset::All => stats.all = s,
            Subset::Para => stats.para = s,
            Subset::NonPara => stats.non_para = s,
        }
        write_file(&out_dir.join(subset.file_name()), body)?;
    }
    let records: Vec<IgtRecord> = seg.examples.iter().map(|e| e.to_record()).collect();
    write_jsonl(&out_dir.join(BOOK_EXAMPLES_FILE), &records)?;
    write_json(&out_dir.join(BOOK_STATS_FILE), &stats)?;
    Ok(stats)
}

/// Judgment items for the low-resource side of a parallel JSONL file.
pub fn cmd_corrupt(
    input: &Path,
    setting: CorruptionSetting,
    seed: u64,
    limit: Option<usize>,
    out: Option<&Path>,
) -> Result<Vec<JudgmentItem>, CliError> {
    let pairs = load_parallel_jsonl(input)?;
    let pairs = &pairs[..pairs.len().min(limit.unwrap_or(usize::MAX))];
    let items = build_judgment_set(pairs.iter().map(|p| (p.id.as_str(), p.source.as_str())), setting, seed);
    if let Some(out) = out {
        write_jsonl(out, &items)?;
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlossTrainOutcome {
    pub model: TopClassModel,
    pub eval: Option<IgtSummary>,
}

/// Trains Top-Class on `train`, writes the TSV model and optionally scores
/// an evaluation set.
pub fn cmd_gloss_train(
    train: &Path,
    language: &str,
    out: &Path,
    eval: Option<&Path>,
) -> Result<GlossTrainOutcome, CliError> {
    let xlr = Language::from_code(language);
    let examples = load_igt(train, &xlr)?;
    let model = train_topclass(&examples);
    write_file(out, model.to_tsv())?;
    let eval = match eval {
        Some(path) => {
            let test = load_igt(path, &xlr)?;
            let scores: Vec<IgtScore> = test
                .iter()
                .map(|e| score_igt(&predict_topclass(&model, &e.transcription), &e.gloss_line()))
                .collect();
            Some(aggregate_igt(&scores))
        }
        None => None,
    };
    Ok(GlossTrainOutcome { model, eval })
}
