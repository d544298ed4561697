//! Aggregate reports over generation records.
//!
//! Failed generations score zero on every metric and count as failures for
//! pass@k. `±` values are standard errors (sample std / √n). All reported
//! numbers are rounded to three decimals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clue::MetricKind;
use crate::difficulty::Band;
use crate::passk::{pass_at_k, TaskSampleRecord};
use crate::stats;

use super::records::{FailureCategory, GenerationRecord};

pub fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: MetricKind,
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtK {
    pub k: usize,
    /// `None` when some task has fewer than `k` samples.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub tasks: usize,
    pub samples: usize,
    pub pass_at_k: Vec<PassAtK>,
    pub metrics: Vec<MetricSummary>,
}

/// Percentages of records per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub instruction_failure: f64,
    pub syntax_error: f64,
    pub semantic_bias: f64,
    pub none: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub generator: String,
    pub overall: SubsetReport,
    /// Only bands with at least one record.
    pub bands: BTreeMap<Band, SubsetReport>,
    pub failures: FailureBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub ks: Vec<usize>,
    pub generators: Vec<GeneratorReport>,
}

fn subset(records: &[&GenerationRecord], ks: &[usize]) -> SubsetReport {
    let mut per_task: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = per_task.entry(r.task_id).or_default();
        e.0 += 1;
        if r.parsed() {
            e.1 += 1;
        }
    }
    let counts: Vec<TaskSampleRecord> = per_task
        .iter()
        .map(|(&task_id, &(n, c))| TaskSampleRecord::new(task_id, n, c))
        .collect();
    let pass = ks
        .iter()
        .map(|&k| {
            let value = match pass_at_k(&counts, k) {
                Ok(v) => Some(round3(v)),
                Err(e) => {
                    log::warn!("pass@{k} skipped: {e}");
                    None
                }
            };
            PassAtK { k, value }
        })
        .collect();
    let metrics = MetricKind::ALL
        .iter()
        .map(|&metric| {
            let values: Vec<f64> = records.iter().map(|r| r.effective_scores().get(metric)).collect();
            let (mean, stderr) = match stats::mean_stderr(&values) {
                Ok((m, se)) => (m, Some(round3(se))),
                Err(_) => (values.first().copied().unwrap_or(0.0), None),
            };
            MetricSummary {
                metric,
                mean: round3(mean),
                stderr,
            }
        })
        .collect();
    SubsetReport {
        tasks: per_task.len(),
        samples: records.len(),
        pass_at_k: pass,
        metrics,
    }
}

fn failures(records: &[&GenerationRecord]) -> FailureBreakdown {
    let total = records.len().max(1) as f64;
    let pct = |c: FailureCategory| round3(100.0 * records.iter().filter(|r| r.category == c).count() as f64 / total);
    FailureBreakdown {
        instruction_failure: pct(FailureCategory::InstructionFailure),
        syntax_error: pct(FailureCategory::SyntaxError),
        semantic_bias: pct(FailureCategory::SemanticBias),
        none: pct(FailureCategory::NoFailure),
    }
}

/// Groups records by generator (sorted by name) and band.
pub fn report(records: &[GenerationRecord], ks: &[usize]) -> EvaluationReport {
    let mut by_generator: BTreeMap<&str, Vec<&GenerationRecord>> = BTreeMap::new();
    for r in records {
        by_generator.entry(r.generator.as_str()).or_default().push(r);
    }
    let generators = by_generator
        .into_iter()
        .map(|(generator, mut rs)| {
            rs.sort_by_key(|r| (r.task_id, r.sample));
            let mut bands: BTreeMap<Band, Vec<&GenerationRecord>> = BTreeMap::new();
            for r in &rs {
                if let Some(b) = r.band {
                    bands.entry(b).or_default().push(r);
                }
            }
            GeneratorReport {
                generator: generator.to_string(),
                overall: subset(&rs, ks),
                bands: bands.into_iter().map(|(b, v)| (b, subset(&v, ks))).collect(),
                failures: failures(&rs),
            }
        })
        .collect();
    EvaluationReport {
        ks: ks.to_vec(),
        generators,
    }
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text tables: metrics per subset, then failure shares.
    pub fn to_text(&self) -> String {
        let mut header: Vec<String> = vec!["generator".into(), "subset".into(), "tasks".into(), "samples".into()];
        header.extend(self.ks.iter().map(|k| format!("pass@{k}")));
        header.extend(MetricKind::ALL.iter().map(|m| format!("{} (± se)", m.label())));
        let mut rows = vec![header];
        for g in &self.generators {
            let mut push = |name: &str, s: &SubsetReport| {
                let mut row = vec![g.generator.clone(), name.to_string(), s.tasks.to_string(), s.samples.to_string()];
                row.extend(s.pass_at_k.iter().map(|p| p.value.map_or("n/a".into(), |v| format!("{v:.3}"))));
                row.extend(s.metrics.iter().map(|m| match m.stderr {
                    Some(se) => format!("{:.3} ± {se:.3}", m.mean),
                    None => format!("{:.3}", m.mean),
                }));
                rows.push(row);
            };
            push("overall", &g.overall);
            for (band, s) in &g.bands {
                push(band.label(), s);
            }
        }
        let mut out = align(&rows);
        out.push('\n');

        let mut rows = vec![vec![
            "generator".to_string(),
            "instruction_failure %".into(),
            "syntax_error %".into(),
            "semantic_bias %".into(),
            "none %".into(),
        ]];
        for g in &self.generators {
            let f = &g.failures;
            rows.push(vec![
                g.generator.clone(),
                format!("{:.3}", f.instruction_failure),
                format!("{:.3}", f.syntax_error),
                format!("{:.3}", f.semantic_bias),
                format!("{:.3}", f.none),
            ]);
        }
        out.push_str(&align(&rows));
        out
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<width$}", width = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clue::ClueScores;
    use crate::plantuml::{ExtractionOutcome, ParseStatus};

    fn record(task_id: u64, sample: usize, scores: Option<f64>, band: Band) -> GenerationRecord {
        let parsed = scores.is_some();
        GenerationRecord {
            task_id,
            generator: "g".into(),
            sample,
            band: Some(band),
            raw_output: String::new(),
            error: None,
            extraction: if parsed {
                ExtractionOutcome::Found { code: String::new() }
            } else {
                ExtractionOutcome::MissingMarkers
            },
            parse_status: parsed.then_some(ParseStatus::Ok),
            diagnostics: Vec::new(),
            category: match scores {
                None => FailureCategory::InstructionFailure,
                Some(v) if v < 1.0 => FailureCategory::SemanticBias,
                Some(_) => FailureCategory::NoFailure,
            },
            scores: scores.map(|v| ClueScores {
                clue: v,
                clue_class: v,
                clue_attribute: v,
                clue_method: v,
                clue_relation: v,
            }),
            model: None,
        }
    }

    #[test]
    fn all_perfect() {
        let rs: Vec<_> = (0..5).map(|s| record(1, s, Some(1.0), Band::Simple)).collect();
        let r = report(&rs, &[1]);
        let g = &r.generators[0];
        assert_eq!(g.overall.pass_at_k[0].value, Some(1.0));
        for m in &g.overall.metrics {
            assert_eq!((m.mean, m.stderr), (1.0, Some(0.0)));
        }
        assert_eq!(g.failures.none, 100.0);
    }

    #[test]
    fn all_instruction_failures() {
        let rs: Vec<_> = (0..5).map(|s| record(1, s, None, Band::Hard)).collect();
        let r = report(&rs, &[1, 5, 6]);
        let g = &r.generators[0];
        assert_eq!(g.overall.pass_at_k[0].value, Some(0.0));
        assert_eq!(g.overall.pass_at_k[1].value, Some(0.0));
        assert_eq!(g.overall.pass_at_k[2].value, None);
        assert!(g.overall.metrics.iter().all(|m| m.mean == 0.0));
        assert_eq!(g.failures.instruction_failure, 100.0);
        assert!(r.to_text().contains("n/a"));
    }

    #[test]
    fn text_is_aligned_and_stable() {
        let mut rs: Vec<_> = (0..3).map(|s| record(1, s, Some(0.5), Band::Simple)).collect();
        rs.push(record(2, 0, None, Band::Moderate));
        let a = report(&rs, &[1]).to_text();
        rs.reverse();
        assert_eq!(report(&rs, &[1]).to_text(), a);
        let lines: Vec<&str> = a.lines().take(4).collect();
        let col = lines[0].find("tasks").unwrap();
        assert!(lines[1..].iter().all(|l| l.chars().nth(col - 2) == Some(' ')));
    }

    #[test]
    fn rounding() {
        assert_eq!(round3(0.8504999), 0.85);
        assert_eq!(round3(-0.0001), 0.0);
        assert_eq!(round3(2.0 / 3.0), 0.667);
    }
}
