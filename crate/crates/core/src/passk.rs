//! Syntax pass@k over per-task validation counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PassKError {
    #[error("k = {k} exceeds the {n} samples of task {task_id}")]
    KExceedsSamples { task_id: u64, n: usize, k: usize },
    #[error("task {task_id} reports {c} passing samples out of {n}")]
    InvalidCounts { task_id: u64, n: usize, c: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no task records")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSampleRecord {
    pub task_id: u64,
    /// Samples generated.
    pub n: usize,
    /// Samples that parse.
    pub c: usize,
}

impl TaskSampleRecord {
    pub fn new(task_id: u64, n: usize, c: usize) -> Self {
        Self { task_id, n, c }
    }
}

/// Unbiased per-task estimate `1 - C(n-c, k) / C(n, k)`, as a running
/// product so no binomial is ever materialized.
pub fn pass_at_k_single(record: &TaskSampleRecord, k: usize) -> Result<f64, PassKError> {
    let TaskSampleRecord { task_id, n, c } = *record;
    if k == 0 {
        return Err(PassKError::ZeroK);
    }
    if c > n {
        return Err(PassKError::InvalidCounts { task_id, n, c });
    }
    if k > n {
        return Err(PassKError::KExceedsSamples { task_id, n, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let mut all_fail = 1.0;
    for i in 0..k {
        all_fail *= (n - c - i) as f64 / (n - i) as f64;
    }
    Ok(1.0 - all_fail)
}

/// Mean of the per-task estimates.
pub fn pass_at_k(records: &[TaskSampleRecord], k: usize) -> Result<f64, PassKError> {
    if records.is_empty() {
        return Err(PassKError::Empty);
    }
    let mut total = 0.0;
    for r in records {
        total += pass_at_k_single(r, k)?;
    }
    Ok(total / records.len() as f64)
}
