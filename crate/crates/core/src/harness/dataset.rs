//! Task datasets: a directory of `*.json` files (each one task or an array
//! of tasks) or a single JSON file holding an array.
//!
//! ```json
//! {
//!   "id": 7,
//!   "requirement": "A library lends books to members ...",
//!   "reference": "@startuml\nclass Library\n...\n@enduml",
//!   "metadata": { "class_count": 4, "relationship_count": 3, "band": "simple" }
//! }
//! ```
//!
//! `reference` is either PlantUML source (markers optional) or a canonical
//! model document. Metadata is optional; counts that disagree with the
//! reference produce warnings, and missing bands are computed from the
//! dataset when it has at least three tasks.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::difficulty::{difficulty_ratings, Band, TaskFeatures};
use crate::model::{ClassModel, ModelStats};
use crate::plantuml;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {message}")]
    Json { path: String, message: String },
    #[error("task {task}: field `{field}`: {message}")]
    Schema { task: String, field: String, message: String },
    #[error("duplicate task id {0}")]
    DuplicateId(u64),
    #[error("{0}: no task files found")]
    Empty(String),
}

/// Optional per-task annotations. Counts mirror [`ModelStats`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_attributes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_methods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relationship_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u64,
    pub requirement: String,
    pub reference: ClassModel,
    /// PlantUML source of the reference when the task supplied one.
    pub reference_source: Option<String>,
    pub metadata: TaskMetadata,
    /// Computed features; `None` when the requirement has no words.
    pub features: Option<TaskFeatures>,
}

impl Task {
    pub fn band(&self) -> Option<Band> {
        self.metadata.band
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub tasks: Vec<Task>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn task(&self, id: u64) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let files = if path.is_dir() { json_files(path)? } else { vec![path.to_path_buf()] };
    if files.is_empty() {
        return Err(DatasetError::Empty(path.display().to_string()));
    }
    let mut values = Vec::new();
    for file in &files {
        let value: Value = serde_json::from_str(&read(file)?).map_err(|e| DatasetError::Json {
            path: file.display().to_string(),
            message: e.to_string(),
        })?;
        match value {
            Value::Array(items) => values.extend(items),
            other => values.push(other),
        }
    }
    parse_tasks(values)
}

/// Builds a dataset from already-decoded task objects.
pub fn parse_tasks(values: Vec<Value>) -> Result<Dataset, DatasetError> {
    let mut tasks = Vec::with_capacity(values.len());
    let mut warnings = Vec::new();
    let mut ids = BTreeSet::new();
    for (position, value) in values.into_iter().enumerate() {
        let task = parse_task(&value, position, &mut warnings)?;
        if !ids.insert(task.id) {
            return Err(DatasetError::DuplicateId(task.id));
        }
        tasks.push(task);
    }
    assign_missing_bands(&mut tasks, &mut warnings);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Dataset { tasks, warnings })
}

fn schema(task: &str, field: &str, message: impl Into<String>) -> DatasetError {
    DatasetError::Schema {
        task: task.to_string(),
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_task(value: &Value, position: usize, warnings: &mut Vec<String>) -> Result<Task, DatasetError> {
    let positional = format!("#{position}");
    let Value::Object(obj) = value else {
        return Err(schema(&positional, "(task)", "expected an object"));
    };
    let id = match obj.get("id") {
        Some(v) => v.as_u64().ok_or_else(|| schema(&positional, "id", "expected a non-negative integer"))?,
        None => return Err(schema(&positional, "id", "missing")),
    };
    let label = id.to_string();
    let requirement = match obj.get("requirement") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::String(_)) => return Err(schema(&label, "requirement", "empty")),
        Some(_) => return Err(schema(&label, "requirement", "expected a string")),
        None => return Err(schema(&label, "requirement", "missing")),
    };
    let (reference, reference_source) = match obj.get("reference") {
        Some(Value::String(source)) => {
            let code = plantuml::extract_plantuml(source)
                .code()
                .map(str::to_string)
                .unwrap_or_else(|| source.clone());
            let outcome = plantuml::parse(&code);
            match outcome.model {
                Some(model) => (model, Some(source.clone())),
                None => {
                    let detail: Vec<String> = outcome.diagnostics.iter().map(ToString::to_string).collect();
                    return Err(schema(&label, "reference", format!("PlantUML does not parse: {}", detail.join("; "))));
                }
            }
        }
        Some(doc @ Value::Object(_)) => {
            let model: ClassModel =
                serde_json::from_value(doc.clone()).map_err(|e| schema(&label, "reference", e.to_string()))?;
            model.validate().map_err(|e| schema(&label, "reference", e.to_string()))?;
            (model, None)
        }
        Some(_) => return Err(schema(&label, "reference", "expected PlantUML text or a model document")),
        None => return Err(schema(&label, "reference", "missing")),
    };
    let metadata: TaskMetadata = match obj.get("metadata") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| schema(&label, "metadata", e.to_string()))?,
        None => TaskMetadata::default(),
    };
    let features = TaskFeatures::from_model(&reference, &requirement).ok();
    check_metadata(id, &metadata, &reference.stats(), features.as_ref(), warnings);
    Ok(Task {
        id,
        requirement,
        reference,
        reference_source,
        metadata,
        features,
    })
}

fn check_metadata(
    id: u64,
    meta: &TaskMetadata,
    stats: &ModelStats,
    features: Option<&TaskFeatures>,
    warnings: &mut Vec<String>,
) {
    let mut compare = |field: &str, declared: Option<f64>, actual: f64| {
        if let Some(declared) = declared {
            if (declared - actual).abs() > 1e-6 {
                warnings.push(format!("task {id}: metadata {field} = {declared} but the reference has {actual}"));
            }
        }
    };
    compare("class_count", meta.class_count.map(|v| v as f64), stats.class_count as f64);
    compare("avg_attributes", meta.avg_attributes, stats.avg_attributes_per_class);
    compare("avg_methods", meta.avg_methods, stats.avg_methods_per_class);
    compare("relationship_count", meta.relationship_count.map(|v| v as f64), stats.relationship_count as f64);
    if let (Some(declared), Some(f)) = (meta.readability, features) {
        // declared readability may come from another tokenizer; flag large gaps only
        if (declared - f.readability).abs() > 5.0 {
            warnings.push(format!(
                "task {id}: metadata readability = {declared} but the requirement scores {:.2}",
                f.readability
            ));
        }
    }
}

fn assign_missing_bands(tasks: &mut [Task], warnings: &mut Vec<String>) {
    if tasks.iter().all(|t| t.metadata.band.is_some()) {
        return;
    }
    let Some(features) = tasks.iter().map(|t| t.features).collect::<Option<Vec<_>>>() else {
        warnings.push("some requirements have no words; difficulty bands left unset".into());
        return;
    };
    match difficulty_ratings(&features) {
        Ok(report) => {
            for (task, band) in tasks.iter_mut().zip(report.bands) {
                task.metadata.band.get_or_insert(band);
            }
        }
        Err(e) => warnings.push(format!("difficulty bands left unset: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn task(id: u64, reference: &str) -> Value {
        json!({ "id": id, "requirement": "A shop sells products to customers.", "reference": reference })
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_tasks(vec![task(7, "class A"), task(7, "class B")]).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateId(7)));
        assert!(err.to_string().contains('7'));
    }

    #[test]
    fn schema_errors_name_task_and_field() {
        let err = parse_tasks(vec![json!({ "id": 3, "reference": "class A" })]).unwrap_err();
        assert_eq!(err.to_string(), "task 3: field `requirement`: missing");
        let err = parse_tasks(vec![task(4, "A --?> B")]).unwrap_err();
        assert!(err.to_string().starts_with("task 4: field `reference`"));
        let err = parse_tasks(vec![json!({ "requirement": "x", "reference": "class A" })]).unwrap_err();
        assert!(err.to_string().contains("`id`"));
    }

    #[test]
    fn metadata_mismatch_warns_with_both_values() {
        let mut v = task(1, "@startuml\nclass A\nclass B\nA --> B\n@enduml");
        v["metadata"] = json!({ "class_count": 3, "relationship_count": 1 });
        let d = parse_tasks(vec![v]).unwrap();
        assert_eq!(d.warnings.iter().filter(|w| w.contains("class_count")).count(), 1);
        let w = d.warnings.iter().find(|w| w.contains("class_count")).unwrap();
        assert!(w.contains('3') && w.contains('2'), "{w}");
        assert!(!d.warnings.iter().any(|w| w.contains("relationship_count")));
    }

    #[test]
    fn canonical_reference_accepted() {
        let doc = serde_json::from_str::<Value>(&crate::model::to_canonical_document(&ClassModel::default())).unwrap();
        let d = parse_tasks(vec![json!({ "id": 1, "requirement": "Nothing.", "reference": doc })]).unwrap();
        assert!(d.tasks[0].reference.is_empty());
        assert!(d.tasks[0].reference_source.is_none());
    }

    #[test]
    fn bands_computed_when_missing() {
        let d = parse_tasks(vec![
            task(1, "class A"),
            task(2, "class A\nclass B\nA --> B"),
            task(3, "class A\nclass B\nclass C\nA --> B\nB --> C\nC --> A"),
        ])
        .unwrap();
        assert!(d.tasks.iter().all(|t| t.band().is_some()));
        assert_eq!(d.tasks[0].band(), Some(Band::Simple));
        assert_eq!(d.tasks[2].band(), Some(Band::Hard));
    }
}
