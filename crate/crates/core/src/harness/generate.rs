//! Sampling designs from a chat-completions endpoint and persisting the raw
//! outputs.
//!
//! Layout under the outputs directory:
//!
//! ```text
//! manifest.jsonl                      one line per finished sample
//! <generator>/<task_id>/<sample>.txt  raw model output
//! ```
//!
//! Raw outputs are the source of truth: scoring always re-reads them, so an
//! interrupted run resumes by skipping samples already in the manifest.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::dataset::Task;
use super::prompt::{build_prompt_within, PromptParts};
use super::records::{GenerationRecord, Scorer};
use super::HarnessError;

pub const API_KEY_ENV: &str = "CLUE_API_KEY";
pub const MANIFEST: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub samples: usize,
    pub max_output_tokens: usize,
    /// Extra attempts after a failed request.
    pub max_retries: usize,
    /// Delay before the first retry; doubles on each further retry.
    #[serde(with = "millis")]
    pub retry_backoff: Duration,
    /// Concurrent requests.
    pub workers: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            samples: 5,
            max_output_tokens: 2048,
            max_retries: 3,
            retry_backoff: Duration::from_millis(500),
            workers: 4,
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl ChatRequest {
    pub fn new(model: &str, prompt: &PromptParts, sampling: &SamplingConfig) -> Self {
        Self {
            model: model.to_string(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: prompt.system.clone(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: prompt.user.clone(),
                },
            ],
            temperature: sampling.temperature,
            max_tokens: sampling.max_output_tokens,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

pub trait ChatClient: Send + Sync {
    /// Assistant message text, or a description of the failure.
    fn complete(&self, request: &ChatRequest) -> Result<String, String>;
}

/// OpenAI-style `POST {base}/chat/completions` client.
pub struct HttpChatClient {
    url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    /// `endpoint` is either the base URL or the full completions URL.
    pub fn new(endpoint: &str) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(false)
            .build();
        Self {
            url,
            token: std::env::var(API_KEY_ENV).ok().filter(|t| !t.is_empty()),
            agent: config.into(),
        }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, String> {
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(request).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(format!("HTTP {status}: {}", body.chars().take(500).collect::<String>()));
        }
        let parsed: ChatResponse = resp.body_mut().read_json().map_err(|e| format!("malformed response: {e}"))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| "response has no choices".to_string())
    }
}

fn complete_with_retry(client: &dyn ChatClient, request: &ChatRequest, sampling: &SamplingConfig) -> Result<String, String> {
    let mut delay = sampling.retry_backoff;
    let mut attempt = 0;
    loop {
        match client.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if attempt < sampling.max_retries => {
                log::warn!("request failed (attempt {}): {e}; retrying", attempt + 1);
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(e) => return Err(format!("{e} (after {} attempts)", attempt + 1)),
        }
    }
}

/// Output of one request; `raw` is empty when `error` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub raw: String,
    pub error: Option<String>,
    pub truncated: bool,
}

pub fn sample_once(client: &dyn ChatClient, model: &str, task: &Task, sampling: &SamplingConfig) -> RawSample {
    let prompt = build_prompt_within(&task.requirement, sampling.max_output_tokens);
    let request = ChatRequest::new(model, &prompt, sampling);
    match complete_with_retry(client, &request, sampling) {
        Ok(raw) => RawSample {
            raw,
            error: None,
            truncated: prompt.truncated,
        },
        Err(e) => {
            log::warn!("task {}: giving up on sample: {e}", task.id);
            RawSample {
                raw: String::new(),
                error: Some(e),
                truncated: prompt.truncated,
            }
        }
    }
}

/// Runs `f` over `0..jobs` on at most `workers` threads; results keep job
/// order.
fn run_pool<R: Send>(jobs: usize, workers: usize, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs {
                    break;
                }
                let r = f(i);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

/// Samples `sampling.samples` designs for one task and scores them.
pub fn generate(
    task: &Task,
    client: &dyn ChatClient,
    model: &str,
    sampling: &SamplingConfig,
    scorer: Scorer<'_>,
) -> Result<Vec<GenerationRecord>, HarnessError> {
    let raws = run_pool(sampling.samples, sampling.workers, |_| sample_once(client, model, task, sampling));
    raws.into_iter()
        .enumerate()
        .map(|(sample, r)| Ok(GenerationRecord::evaluate(task, model, sample, r.raw, r.error, scorer)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub generator: String,
    pub task_id: u64,
    pub sample: usize,
    pub file: String,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

type SampleKey = (String, u64, usize);

/// Last manifest entry per sample.
pub fn read_manifest(outputs: &Path) -> Result<BTreeMap<SampleKey, ManifestEntry>, HarnessError> {
    let path = outputs.join(MANIFEST);
    let mut entries = BTreeMap::new();
    if !path.exists() {
        return Ok(entries);
    }
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(e) => {
                // a torn final line from an interrupted append
                log::warn!("{}: skipping line {}: {e}", path.display(), i + 1);
                continue;
            }
        };
        entries.insert((entry.generator.clone(), entry.task_id, entry.sample), entry);
    }
    Ok(entries)
}

fn sample_path(outputs: &Path, generator: &str, task_id: u64, sample: usize) -> PathBuf {
    outputs.join(generator).join(task_id.to_string()).join(format!("{sample}.txt"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub requested: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Generates every missing `(task, sample)` for `generator`, persisting
/// each raw output and manifest line as soon as it arrives. Samples whose
/// last manifest entry has no error are skipped.
pub fn run_generation(
    tasks: &[Task],
    client: &dyn ChatClient,
    generator: &str,
    sampling: &SamplingConfig,
    outputs: &Path,
) -> Result<RunSummary, HarnessError> {
    fs::create_dir_all(outputs).map_err(|e| HarnessError::io(outputs, e))?;
    let done = read_manifest(outputs)?;
    let mut jobs = Vec::new();
    let mut summary = RunSummary::default();
    for task in tasks {
        for sample in 0..sampling.samples {
            let key = (generator.to_string(), task.id, sample);
            let finished = done.get(&key).is_some_and(|e| e.error.is_none())
                && sample_path(outputs, generator, task.id, sample).exists();
            if finished {
                summary.skipped += 1;
            } else {
                jobs.push((task, sample));
            }
        }
    }
    summary.requested = jobs.len();

    let manifest_path = outputs.join(MANIFEST);
    let manifest = Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&manifest_path)
            .map_err(|e| HarnessError::io(&manifest_path, e))?,
    );
    let results = run_pool(jobs.len(), sampling.workers, |i| -> Result<bool, HarnessError> {
        let (task, sample) = jobs[i];
        let r = sample_once(client, generator, task, sampling);
        let path = sample_path(outputs, generator, task.id, sample);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        fs::write(&path, &r.raw).map_err(|e| HarnessError::io(&path, e))?;
        let entry = ManifestEntry {
            generator: generator.to_string(),
            task_id: task.id,
            sample,
            file: format!("{generator}/{}/{sample}.txt", task.id),
            truncated: r.truncated,
            error: r.error.clone(),
        };
        let mut line = serde_json::to_string(&entry).expect("manifest entry serializes");
        line.push('\n');
        let mut file = manifest.lock().expect("manifest lock poisoned");
        file.write_all(line.as_bytes()).map_err(|e| HarnessError::io(&manifest_path, e))?;
        file.flush().map_err(|e| HarnessError::io(&manifest_path, e))?;
        Ok(r.error.is_some())
    });
    for r in results {
        if r? {
            summary.failed += 1;
        }
    }
    Ok(summary)
}

/// A persisted raw output with its manifest error, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredOutput {
    pub generator: String,
    pub task_id: u64,
    pub sample: usize,
    pub raw: String,
    pub error: Option<String>,
}

/// Every `<generator>/<task_id>/<sample>.txt` under `outputs`, sorted by
/// generator, task and sample.
pub fn load_outputs(outputs: &Path) -> Result<Vec<StoredOutput>, HarnessError> {
    let manifest = read_manifest(outputs)?;
    let mut found = Vec::new();
    let read_dir = |p: &Path| fs::read_dir(p).map_err(|e| HarnessError::io(p, e));
    for generator_dir in read_dir(outputs)? {
        let generator_dir = generator_dir.map_err(|e| HarnessError::io(outputs, e))?.path();
        if !generator_dir.is_dir() {
            continue;
        }
        let generator = generator_dir.file_name().unwrap_or_default().to_string_lossy().to_string();
        for task_dir in read_dir(&generator_dir)? {
            let task_dir = task_dir.map_err(|e| HarnessError::io(&generator_dir, e))?.path();
            let Some(task_id) = task_dir.file_name().and_then(|n| n.to_str()).and_then(|n| n.parse::<u64>().ok()) else {
                continue;
            };
            for file in read_dir(&task_dir)? {
                let file = file.map_err(|e| HarnessError::io(&task_dir, e))?.path();
                if file.extension().is_none_or(|x| x != "txt") {
                    continue;
                }
                let Some(sample) = file.file_stem().and_then(|n| n.to_str()).and_then(|n| n.parse::<usize>().ok()) else {
                    continue;
                };
                let raw = fs::read_to_string(&file).map_err(|e| HarnessError::io(&file, e))?;
                let error = manifest
                    .get(&(generator.clone(), task_id, sample))
                    .and_then(|e| e.error.clone());
                found.push(StoredOutput {
                    generator: generator.clone(),
                    task_id,
                    sample,
                    raw,
                    error,
                });
            }
        }
    }
    found.sort_by(|a, b| (&a.generator, a.task_id, a.sample).cmp(&(&b.generator, b.task_id, b.sample)));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    struct Flaky {
        failures: usize,
        calls: AtomicUsize,
    }

    impl ChatClient for Flaky {
        fn complete(&self, _: &ChatRequest) -> Result<String, String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err("HTTP 503".into())
            } else {
                Ok("@startuml\nclass A\n@enduml".into())
            }
        }
    }

    fn quick() -> SamplingConfig {
        SamplingConfig {
            retry_backoff: Duration::ZERO,
            ..Default::default()
        }
    }

    #[test]
    fn retries_are_bounded() {
        let req = ChatRequest::new("m", &build_prompt_within("x", 2048), &quick());
        let ok = Flaky {
            failures: 3,
            calls: AtomicUsize::new(0),
        };
        assert!(complete_with_retry(&ok, &req, &quick()).is_ok());
        let bad = Flaky {
            failures: 4,
            calls: AtomicUsize::new(0),
        };
        let err = complete_with_retry(&bad, &req, &quick()).unwrap_err();
        assert!(err.contains("after 4 attempts"));
        assert_eq!(bad.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn request_wire_shape() {
        let req = ChatRequest::new("m", &build_prompt_within("x", 2048), &SamplingConfig::default());
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(v["model"], "m");
        assert_eq!(v["temperature"], 0.2);
        assert_eq!(v["max_tokens"], 2048);
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(v["messages"][1]["role"], "user");
    }

    #[test]
    fn pool_keeps_order() {
        let out = run_pool(100, 7, |i| i * 2);
        assert_eq!(out, (0..100).map(|i| i * 2).collect::<Vec<_>>());
        assert!(run_pool(0, 4, |i| i).is_empty());
    }

    #[test]
    fn endpoint_normalization() {
        assert_eq!(HttpChatClient::new("http://h/v1/").url(), "http://h/v1/chat/completions");
        assert_eq!(HttpChatClient::new("http://h/v1/chat/completions").url(), "http://h/v1/chat/completions");
    }
}
