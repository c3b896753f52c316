//! `report`: tables, coverage and regressions over finished runs.

use std::path::{Path, PathBuf};

use bookprobe::analysis::{
    describe_regression, ols_fit, render_coverage_table, scatter_csv, token_regression, CoverageReport,
    TextTable, BOOK_SETTINGS,
};

use crate::config::Task;
use crate::runner::{corpus_scores, read_records, Summary, RESULTS_FILE, SUMMARY_FILE};
use crate::CliError;

/// Absolute tolerance when comparing a stored score with its recomputation.
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub summary: Summary,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub text: String,
    /// One row per run.
    pub csv: String,
    /// Coverage scatter data per direction, for plotting.
    pub scatter: Vec<(String, String)>,
    pub inconsistencies: Vec<String>,
}

fn load_summary(path: &Path) -> Result<Summary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadRecord {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Each path is a run directory or a directory of run directories.
pub fn collect_runs(paths: &[PathBuf]) -> Result<Vec<LoadedRun>, CliError> {
    let mut runs = Vec::new();
    for path in paths {
        let direct = path.join(SUMMARY_FILE);
        if direct.is_file() {
            runs.push(LoadedRun {
                dir: path.clone(),
                summary: load_summary(&direct)?,
            });
            continue;
        }
        let entries = std::fs::read_dir(path).map_err(|e| CliError::io(path, e))?;
        let mut children: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(SUMMARY_FILE).is_file())
            .collect();
        children.sort();
        for dir in children {
            let summary = load_summary(&dir.join(SUMMARY_FILE))?;
            runs.push(LoadedRun { dir, summary });
        }
    }
    if runs.is_empty() {
        let shown: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::MissingSummary(shown.join(", ")));
    }
    Ok(runs)
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => (a - b).abs() <= CONSISTENCY_TOL,
        _ => false,
    }
}

/// Recomputes corpus scores from results.jsonl where present.
pub fn check_consistency(run: &LoadedRun) -> Result<Option<String>, CliError> {
    let path = run.dir.join(RESULTS_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let records = read_records(&path)?;
    let s = &run.summary;
    let (infeasible, scores) = corpus_scores(s.task, &records)?;
    let stored = &s.scores;
    let ok = records.len() == s.n_examples
        && infeasible == s.infeasible
        && close(scores.chrf_pp, stored.chrf_pp)
        && close(scores.judgment.map(|j| j.accuracy), stored.judgment.map(|j| j.accuracy))
        && close(scores.igt.map(|g| g.morph_acc), stored.igt.map(|g| g.morph_acc))
        && close(scores.igt.map(|g| g.word_acc), stored.igt.map(|g| g.word_acc))
        && close(scores.igt.map(|g| g.stem_f1), stored.igt.map(|g| g.stem_f1))
        && close(scores.igt.map(|g| g.gram_f1), stored.igt.map(|g| g.gram_f1));
    Ok((!ok).then(|| {
        format!(
            "{}: summary {:?} vs records {:?} ({} records, summary says {})",
            run.dir.display(),
            stored,
            scores,
            records.len(),
            s.n_examples
        )
    }))
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map_or("--".into(), |v| format!("{v:.1}"))
}

/// The headline score: ChrF++, judgment accuracy or morpheme accuracy, in
/// percent.
pub fn headline(s: &Summary) -> Option<f64> {
    if s.infeasible {
        return None;
    }
    match s.task {
        Task::Translate => s.scores.chrf_pp,
        Task::Judge => s.scores.judgment.map(|j| 100.0 * j.accuracy),
        Task::Gloss => s.scores.igt.map(|g| g.morph_acc),
    }
}

fn column_key(s: &Summary) -> String {
    match (s.task, s.corruption) {
        (Task::Judge, Some(c)) => format!("{} {c}", s.direction),
        _ => s.direction.clone(),
    }
}

fn score_grid(title: &str, runs: &[&Summary]) -> String {
    let settings = first_seen(runs.iter().map(|s| s.setting.as_str()));
    let keys: Vec<String> = {
        let mut k: Vec<String> = Vec::new();
        for s in runs {
            let c = column_key(s);
            if !k.contains(&c) {
                k.push(c);
            }
        }
        k
    };
    let mut header = vec!["Setting".to_string()];
    header.extend(keys.iter().cloned());
    header.push("Tokens".into());
    let mut table = TextTable::new(header);
    for setting in settings {
        let mut row = vec![setting.to_string()];
        for k in &keys {
            let found = runs.iter().find(|s| s.setting == setting && column_key(s) == *k);
            row.push(found.map_or("--".into(), |s| cell(headline(s))));
        }
        let tokens = runs.iter().find(|s| s.setting == setting).map(|s| s.prompt_tokens);
        row.push(tokens.map_or("--".into(), |t| t.to_string()));
        table.row(row);
    }
    format!("{title}\n{}", table.render())
}

fn gloss_grid(runs: &[&Summary]) -> String {
    let mut table = TextTable::new(["Setting", "Language", "Morph", "Word", "Stem F1", "Gram F1"]);
    for s in runs {
        let lang = s.direction.split('-').next().unwrap_or("").to_string();
        let g = s.scores.igt.filter(|_| !s.infeasible);
        table.row([
            s.setting.clone(),
            lang,
            cell(g.map(|g| g.morph_acc)),
            cell(g.map(|g| g.word_acc)),
            cell(g.map(|g| g.stem_f1)),
            cell(g.map(|g| g.gram_f1)),
        ]);
    }
    format!("Gloss prediction\n{}", table.render())
}

fn regression_section(translate: &[&Summary], report: &mut Report) -> String {
    let mut out = String::from("Regression of ChrF++ on test type coverage\n");
    let directions = first_seen(translate.iter().map(|s| s.direction.as_str()));
    for d in &directions {
        let points: Vec<(f64, f64)> = translate
            .iter()
            .filter(|s| s.direction == *d)
            .filter_map(|s| Some((s.coverage.as_ref()?.coverage_pct, headline(s)?)))
            .collect();
        match ols_fit(
            &points.iter().map(|p| p.0).collect::<Vec<_>>(),
            &points.iter().map(|p| p.1).collect::<Vec<_>>(),
        ) {
            Ok(fit) => {
                out.push_str(&format!("  {d} (n={}): {}\n", points.len(), describe_regression(&fit)));
                report.scatter.push((d.to_string(), scatter_csv(&points, &fit, 50)));
            }
            Err(e) => out.push_str(&format!("  {d} (n={}): not fitted: {e}\n", points.len())),
        }
    }
    out.push_str("Regression of ChrF++ on prompt tokens (book subsets)\n");
    for d in &directions {
        let points: Vec<(f64, f64)> = BOOK_SETTINGS
            .iter()
            .filter_map(|b| translate.iter().find(|s| s.direction == *d && s.setting == *b))
            .filter_map(|s| Some((s.prompt_tokens as f64, headline(s)?)))
            .collect();
        if points.len() < BOOK_SETTINGS.len() {
            out.push_str(&format!("  {d}: needs all of {}\n", BOOK_SETTINGS.join(", ")));
            continue;
        }
        match token_regression(&points) {
            Ok(fit) => out.push_str(&format!("  {d}: {}\n", describe_regression(&fit))),
            Err(e) => out.push_str(&format!("  {d}: not fitted: {e}\n")),
        }
    }
    out
}

fn csv_rows(runs: &[LoadedRun]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "task", "setting", "direction", "corruption", "model", "score", "prompt_tokens", "oov", "coverage",
        "infeasible",
    ])
    .unwrap();
    for r in runs {
        let s = &r.summary;
        let task = serde_json::to_value(s.task).unwrap();
        w.serialize((
            task.as_str().unwrap_or(""),
            &s.setting,
            &s.direction,
            s.corruption.map(|c| c.name()),
            s.model.as_deref(),
            headline(s),
            s.prompt_tokens,
            s.coverage.as_ref().map(|c| c.oov_count),
            s.coverage.as_ref().map(|c| c.coverage_pct),
            s.infeasible,
        ))
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Report over the given result directories.
pub fn cmd_report(paths: &[PathBuf]) -> Result<Report, CliError> {
    let runs = collect_runs(paths)?;
    report_runs(&runs)
}

pub fn report_runs(runs: &[LoadedRun]) -> Result<Report, CliError> {
    let mut report = Report::default();
    for run in runs {
        if let Some(msg) = check_consistency(run)? {
            report.inconsistencies.push(msg);
        }
    }
    let by_task = |t: Task| runs.iter().map(|r| &r.summary).filter(|s| s.task == t).collect::<Vec<_>>();
    let (translate, judge, gloss) = (by_task(Task::Translate), by_task(Task::Judge), by_task(Task::Gloss));
    let mut sections = Vec::new();
    if !translate.is_empty() {
        sections.push(score_grid("Translation (ChrF++)", &translate));
        let reports: Vec<CoverageReport> = translate.iter().filter_map(|s| s.coverage.clone()).collect();
        if !reports.is_empty() {
            let dirs = first_seen(reports.iter().map(|r| r.direction.as_str()));
            sections.push(format!("Test type coverage\n{}", render_coverage_table(&reports, &dirs)));
        }
        let reg = regression_section(&translate, &mut report);
        sections.push(reg);
    }
    if !judge.is_empty() {
        sections.push(score_grid("Grammaticality judgment (accuracy %)", &judge));
    }
    if !gloss.is_empty() {
        sections.push(gloss_grid(&gloss));
    }
    let checked = runs.iter().filter(|r| r.dir.join(RESULTS_FILE).is_file()).count();
    if report.inconsistencies.is_empty() {
        sections.push(format!("Consistency: {checked} of {} runs recomputed from records, all match\n", runs.len()));
    } else {
        sections.push(format!(
            "Consistency: {} mismatches\n{}\n",
            report.inconsistencies.len(),
            report.inconsistencies.join("\n")
        ));
    }
    report.text = sections.join("\n");
    report.csv = csv_rows(runs);
    Ok(report)
}
