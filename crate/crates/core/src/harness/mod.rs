//! End-to-end evaluation: datasets, prompting, sampling, triage, scoring
//! and reports.

pub mod dataset;
pub mod generate;
pub mod prompt;
pub mod records;
pub mod report;

use std::path::Path;

use thiserror::Error;

use crate::clue::ClueError;
use crate::exec::ExecMode;

pub use dataset::{load_dataset, Dataset, DatasetError, Task, TaskMetadata};
pub use generate::{generate, run_generation, ChatClient, HttpChatClient, SamplingConfig};
pub use prompt::{build_prompt, PromptParts};
pub use records::{score_records, FailureCategory, GenerationRecord, Scorer};
pub use report::{report, EvaluationReport};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Clue(#[from] ClueError),
    #[error("record refers to unknown task {0}")]
    UnknownTask(u64),
    #[error("{0}")]
    Format(String),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Scores every persisted raw output under `outputs`.
pub fn evaluate_outputs(
    outputs: &Path,
    dataset: &Dataset,
    scorer: Scorer<'_>,
    mode: ExecMode,
) -> Result<Vec<GenerationRecord>, HarnessError> {
    let stored = generate::load_outputs(outputs)?;
    let mut pending = Vec::with_capacity(stored.len());
    for s in stored {
        let task = dataset.task(s.task_id).ok_or(HarnessError::UnknownTask(s.task_id))?;
        pending.push((task, s));
    }
    crate::exec::try_map_collect(mode, &pending, |(task, s)| {
        GenerationRecord::evaluate(task, &s.generator, s.sample, s.raw.clone(), s.error.clone(), scorer)
    })
    .map_err(HarnessError::from)
}

/// Writes `records.jsonl`, `report.json` and `report.txt` into `dir`.
pub fn write_results(dir: &Path, records: &[GenerationRecord], ks: &[usize]) -> Result<EvaluationReport, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let rep = report(records, ks);
    let files = [
        (RECORDS_FILE, records::to_jsonl(records)),
        (REPORT_JSON, rep.to_json()),
        (REPORT_TEXT, rep.to_text()),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(rep)
}

/// Reads `records.jsonl` from a directory, or the given file.
pub fn read_records(path: &Path) -> Result<Vec<GenerationRecord>, HarnessError> {
    let file = if path.is_dir() { path.join(RECORDS_FILE) } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
    records::from_jsonl(&text)
}
