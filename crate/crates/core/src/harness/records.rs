//! Per-sample generation records: extraction, parsing, failure triage and
//! scoring of one raw model output.

use serde::{Deserialize, Serialize};

use crate::clue::{ClueError, ClueScores, PairSimilarities};
use crate::difficulty::Band;
use crate::exec::{self, ExecMode};
use crate::model::ClassModel;
use crate::plantuml::{self, Diagnostic, ExtractionOutcome, ParseStatus};
use crate::semantics::SimilarityProvider;
use crate::weights::ClueConfig;

use super::dataset::Task;
use super::HarnessError;

/// A parsed record with `clue` below this is a semantic deviation.
pub const SEMANTIC_BIAS_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    /// No `@startuml ... @enduml` block in the output.
    InstructionFailure,
    /// A block was found but does not parse.
    SyntaxError,
    /// Parses, but differs from the reference.
    SemanticBias,
    #[serde(rename = "none")]
    NoFailure,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 4] = [
        FailureCategory::InstructionFailure,
        FailureCategory::SyntaxError,
        FailureCategory::SemanticBias,
        FailureCategory::NoFailure,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FailureCategory::InstructionFailure => "instruction_failure",
            FailureCategory::SyntaxError => "syntax_error",
            FailureCategory::SemanticBias => "semantic_bias",
            FailureCategory::NoFailure => "none",
        }
    }
}

/// What scoring needs: similarity provider and weight configuration.
#[derive(Clone, Copy)]
pub struct Scorer<'a> {
    pub provider: &'a dyn SimilarityProvider,
    pub config: &'a ClueConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub task_id: u64,
    pub generator: String,
    pub sample: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    pub raw_output: String,
    /// Transport failure that left `raw_output` empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub extraction: ExtractionOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_status: Option<ParseStatus>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    pub category: FailureCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ClueScores>,
    #[serde(skip)]
    pub model: Option<ClassModel>,
}

impl GenerationRecord {
    /// Extracts and parses `raw_output`, scores it against the task
    /// reference when it parses, and assigns the failure category.
    pub fn evaluate(
        task: &Task,
        generator: &str,
        sample: usize,
        raw_output: String,
        error: Option<String>,
        scorer: Scorer<'_>,
    ) -> Result<Self, ClueError> {
        let mut record = Self::unscored(task, generator, sample, raw_output, error);
        record.score(task, scorer)?;
        Ok(record)
    }

    fn unscored(task: &Task, generator: &str, sample: usize, raw_output: String, error: Option<String>) -> Self {
        let extraction = plantuml::extract_plantuml(&raw_output);
        let (parse_status, diagnostics, model) = match extraction.code() {
            Some(code) => {
                let outcome = plantuml::parse(code);
                (Some(outcome.status), outcome.diagnostics, outcome.model)
            }
            None => (None, Vec::new(), None),
        };
        let category = match (&extraction, parse_status) {
            (ExtractionOutcome::MissingMarkers, _) => FailureCategory::InstructionFailure,
            (_, Some(ParseStatus::Ok)) => FailureCategory::SemanticBias,
            _ => FailureCategory::SyntaxError,
        };
        Self {
            task_id: task.id,
            generator: generator.to_string(),
            sample,
            band: task.band(),
            raw_output,
            error,
            extraction,
            parse_status,
            diagnostics,
            category,
            scores: None,
            model,
        }
    }

    fn score(&mut self, task: &Task, scorer: Scorer<'_>) -> Result<(), ClueError> {
        let Some(model) = &self.model else {
            return Ok(());
        };
        let scores = PairSimilarities::compute(&task.reference, model, scorer.provider)?.evaluate(scorer.config);
        self.category = if scores.clue < SEMANTIC_BIAS_THRESHOLD {
            FailureCategory::SemanticBias
        } else {
            FailureCategory::NoFailure
        };
        self.scores = Some(scores);
        Ok(())
    }

    pub fn parsed(&self) -> bool {
        self.parse_status == Some(ParseStatus::Ok)
    }

    /// Scores used in aggregates: a failed generation counts as zero.
    pub fn effective_scores(&self) -> ClueScores {
        self.scores.unwrap_or(ClueScores::ZERO)
    }
}

/// Re-derives every record from its raw output against the current tasks,
/// provider and weights. Records keep their order.
pub fn score_records(
    records: &[GenerationRecord],
    tasks: &[Task],
    scorer: Scorer<'_>,
    mode: ExecMode,
) -> Result<Vec<GenerationRecord>, HarnessError> {
    for r in records {
        if !tasks.iter().any(|t| t.id == r.task_id) {
            return Err(HarnessError::UnknownTask(r.task_id));
        }
    }
    let scored = exec::try_map_collect(mode, records, |r| {
        let task = tasks.iter().find(|t| t.id == r.task_id).expect("checked above");
        GenerationRecord::evaluate(task, &r.generator, r.sample, r.raw_output.clone(), r.error.clone(), scorer)
    })?;
    Ok(scored)
}

/// One JSON object per line.
pub fn to_jsonl(records: &[GenerationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<GenerationRecord>, HarnessError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Format(format!("records line {}: {e}", i + 1)))
        })
        .collect()
}
