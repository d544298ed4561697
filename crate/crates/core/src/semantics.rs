//! String semantic similarity providers.
//!
//! Every provider returns values in `[0, 1]`, is symmetric, gives 1 for
//! identical strings and is deterministic. Two providers ship:
//!
//! * [`LexicalSimilarity`]: Dice coefficient over character bigrams of
//!   identifier tokens. Needs no network and no model weights.
//! * [`EmbeddingSimilarity`]: cosine of unit-norm vectors returned by an
//!   embedding service, clamped at 0.
//!
//! [`CachedSimilarity`] memoizes any provider on the unordered string pair.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable holding the embedding service bearer token.
pub const EMBED_TOKEN_ENV: &str = "CLUE_EMBED_TOKEN";

/// Maximum number of texts sent in one `/embed` request.
pub const EMBED_BATCH_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("embedding service request for {text:?} failed: {message}")]
    Transport { text: String, message: String },
    #[error("embedding service returned an invalid response for {text:?}: {message}")]
    InvalidResponse { text: String, message: String },
    #[error("provider `{0}` cannot produce embeddings")]
    NotAnEmbeddingProvider(String),
}

pub trait SimilarityProvider: Send + Sync {
    fn name(&self) -> &str;

    fn similarity(&self, s1: &str, s2: &str) -> Result<f64, SemanticsError>;

    /// Hint that these strings are about to be compared. Providers backed by
    /// a remote service may batch their requests here.
    fn prefetch(&self, _texts: &[&str]) -> Result<(), SemanticsError> {
        Ok(())
    }
}

impl<P: SimilarityProvider + ?Sized> SimilarityProvider for &P {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn similarity(&self, s1: &str, s2: &str) -> Result<f64, SemanticsError> {
        (**self).similarity(s1, s2)
    }
    fn prefetch(&self, texts: &[&str]) -> Result<(), SemanticsError> {
        (**self).prefetch(texts)
    }
}

impl<P: SimilarityProvider + ?Sized> SimilarityProvider for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn similarity(&self, s1: &str, s2: &str) -> Result<f64, SemanticsError> {
        (**self).similarity(s1, s2)
    }
    fn prefetch(&self, texts: &[&str]) -> Result<(), SemanticsError> {
        (**self).prefetch(texts)
    }
}

/// Provider selection as it appears in configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    #[default]
    Lexical,
    EmbeddingService {
        endpoint: String,
        #[serde(default)]
        model: Option<String>,
    },
}

/// Builds the configured provider wrapped in a cache.
pub fn build_provider(config: &ProviderConfig) -> CachedSimilarity<Box<dyn SimilarityProvider>> {
    let inner: Box<dyn SimilarityProvider> = match config {
        ProviderConfig::Lexical => Box::new(LexicalSimilarity),
        ProviderConfig::EmbeddingService { endpoint, model } => {
            let mut client = EmbeddingSimilarity::new(endpoint.clone());
            if let Some(model) = model {
                client = client.with_model(model.clone());
            }
            if let Ok(token) = std::env::var(EMBED_TOKEN_ENV) {
                client = client.with_token(token);
            }
            Box::new(client)
        }
    };
    CachedSimilarity::new(inner)
}

// ---------------------------------------------------------------------------
// Lexical provider

#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalSimilarity;

impl LexicalSimilarity {
    /// Splits on non-alphanumerics, `snake_case` underscores and camelCase
    /// humps (`HTTPServer` -> `http`, `server`), then lowercases.
    pub fn tokens(s: &str) -> Vec<String> {
        let chars: Vec<char> = s.chars().collect();
        let mut tokens = Vec::new();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if !c.is_alphanumeric() {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                continue;
            }
            if !current.is_empty() {
                let prev = chars[i - 1];
                let next = chars.get(i + 1).copied();
                let hump = c.is_uppercase()
                    && (prev.is_lowercase()
                        || prev.is_numeric()
                        || (prev.is_uppercase() && next.is_some_and(|n| n.is_lowercase())));
                if hump {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            tokens.push(current);
        }
        tokens
    }

    /// Character bigrams of every token; a one-character token contributes
    /// itself.
    pub fn bigrams(s: &str) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        for token in Self::tokens(s) {
            let chars: Vec<char> = token.chars().collect();
            if chars.len() == 1 {
                set.insert(token);
            } else {
                for w in chars.windows(2) {
                    set.insert(w.iter().collect());
                }
            }
        }
        set
    }

    pub fn score(s1: &str, s2: &str) -> f64 {
        if s1 == s2 {
            return 1.0;
        }
        if s1.is_empty() || s2.is_empty() {
            return 0.0;
        }
        let a = Self::bigrams(s1);
        let b = Self::bigrams(s2);
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let shared = a.intersection(&b).count();
        2.0 * shared as f64 / (a.len() + b.len()) as f64
    }
}

impl SimilarityProvider for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical"
    }

    fn similarity(&self, s1: &str, s2: &str) -> Result<f64, SemanticsError> {
        Ok(Self::score(s1, s2))
    }
}

// ---------------------------------------------------------------------------
// Embedding service provider

/// Fixed-length, unit-norm embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes to unit length. Rejects empty, non-finite and zero vectors.
    pub fn normalized(components: Vec<f64>) -> Option<Self> {
        if components.is_empty() || components.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        Some(Self(components.into_iter().map(|x| x / norm).collect()))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [&'a str],
}

#[derive(Debug, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// Client of the `/embed` route. Vectors are cached per string for the
/// lifetime of the client.
pub struct EmbeddingSimilarity {
    endpoint: String,
    model: Option<String>,
    token: Option<String>,
    agent: ureq::Agent,
    vectors: RwLock<HashMap<String, EmbeddingVector>>,
    requests: AtomicUsize,
}

impl EmbeddingSimilarity {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build();
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            model: None,
            token: None,
            agent: config.into(),
            vectors: RwLock::new(HashMap::new()),
            requests: AtomicUsize::new(0),
        }
    }

    /// Label recorded in reports; the service decides which encoder it runs.
    pub fn with_model(mut self, model: String) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_token(mut self, token: String) -> Self {
        self.token = Some(token);
        self
    }

    /// Number of HTTP requests issued so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, SemanticsError> {
        if let Some(v) = self.vectors.read().expect("vector cache poisoned").get(text) {
            return Ok(v.clone());
        }
        self.embed_batch(&[text])?;
        Ok(self.vectors.read().expect("vector cache poisoned")[text].clone())
    }

    /// Embeds every uncached text, in chunks of [`EMBED_BATCH_CAP`].
    pub fn embed_batch(&self, texts: &[&str]) -> Result<(), SemanticsError> {
        let missing: Vec<&str> = {
            let cache = self.vectors.read().expect("vector cache poisoned");
            let mut seen = BTreeSet::new();
            texts
                .iter()
                .copied()
                .filter(|t| !cache.contains_key(*t) && seen.insert(*t))
                .collect()
        };
        for chunk in missing.chunks(EMBED_BATCH_CAP) {
            let vectors = self.request(chunk)?;
            let mut cache = self.vectors.write().expect("vector cache poisoned");
            for (text, v) in chunk.iter().zip(vectors) {
                cache.insert((*text).to_string(), v);
            }
        }
        Ok(())
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SemanticsError> {
        let first = texts.first().copied().unwrap_or_default().to_string();
        self.requests.fetch_add(1, Ordering::Relaxed);
        let url = format!("{}/embed", self.endpoint);
        let mut req = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(EmbedRequest { texts }).map_err(|e| SemanticsError::Transport {
            text: first.clone(),
            message: e.to_string(),
        })?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(SemanticsError::Transport {
                text: first,
                message: format!("HTTP {status}: {body}"),
            });
        }
        let parsed: EmbedResponse = resp.body_mut().read_json().map_err(|e| SemanticsError::InvalidResponse {
            text: first.clone(),
            message: e.to_string(),
        })?;
        if parsed.vectors.len() != texts.len() {
            return Err(SemanticsError::InvalidResponse {
                text: first,
                message: format!("expected {} vectors, got {}", texts.len(), parsed.vectors.len()),
            });
        }
        let dim = parsed.vectors.first().map_or(0, Vec::len);
        parsed
            .vectors
            .into_iter()
            .zip(texts)
            .map(|(v, text)| {
                if v.len() != dim {
                    return Err(SemanticsError::InvalidResponse {
                        text: (*text).to_string(),
                        message: "vectors differ in length".into(),
                    });
                }
                EmbeddingVector::normalized(v).ok_or_else(|| SemanticsError::InvalidResponse {
                    text: (*text).to_string(),
                    message: "vector is empty, zero or non-finite".into(),
                })
            })
            .collect()
    }
}

impl SimilarityProvider for EmbeddingSimilarity {
    fn name(&self) -> &str {
        self.model.as_deref().unwrap_or("embedding_service")
    }

    fn similarity(&self, s1: &str, s2: &str) -> Result<f64, SemanticsError> {
        if s1 == s2 {
            return Ok(1.0);
        }
        if s1.is_empty() || s2.is_empty() {
            return Ok(0.0);
        }
        let a = self.embed(s1)?;
        let b = self.embed(s2)?;
        Ok(a.cosine(&b).clamp(0.0, 1.0))
    }

    fn prefetch(&self, texts: &[&str]) -> Result<(), SemanticsError> {
        let non_empty: Vec<&str> = texts.iter().copied().filter(|t| !t.is_empty()).collect();
        self.embed_batch(&non_empty)
    }
}

// ---------------------------------------------------------------------------
// Cache

/// Memoizes a provider on the unordered string pair. Concurrent misses on the
/// same pair may both compute; the stored value is the same either way.
pub struct CachedSimilarity<P> {
    inner: P,
    memo: Mutex<HashMap<(String, String), f64>>,
}

impl<P: SimilarityProvider> CachedSimilarity<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.memo.lock().expect("similarity cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(s1: &str, s2: &str) -> (String, String) {
        if s1 <= s2 {
            (s1.to_string(), s2.to_string())
        } else {
            (s2.to_string(), s1.to_string())
        }
    }
}

/// Wraps `provider` in a pair cache.
pub fn cached<P: SimilarityProvider>(provider: P) -> CachedSimilarity<P> {
    CachedSimilarity::new(provider)
}

impl<P: SimilarityProvider> SimilarityProvider for CachedSimilarity<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn similarity(&self, s1: &str, s2: &str) -> Result<f64, SemanticsError> {
        let key = Self::key(s1, s2);
        if let Some(&v) = self.memo.lock().expect("similarity cache poisoned").get(&key) {
            return Ok(v);
        }
        // Always evaluate in key order so (a, b) and (b, a) agree bit-for-bit.
        let v = self.inner.similarity(&key.0, &key.1)?;
        self.memo.lock().expect("similarity cache poisoned").insert(key, v);
        Ok(v)
    }

    fn prefetch(&self, texts: &[&str]) -> Result<(), SemanticsError> {
        self.inner.prefetch(texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenization() {
        assert_eq!(LexicalSimilarity::tokens("orderItem"), vec!["order", "item"]);
        assert_eq!(LexicalSimilarity::tokens("order_item"), vec!["order", "item"]);
        assert_eq!(LexicalSimilarity::tokens("HTTPServer"), vec!["http", "server"]);
        assert_eq!(LexicalSimilarity::tokens("List<Item>"), vec!["list", "item"]);
        assert!(LexicalSimilarity::tokens("*").is_empty());
    }

    #[test]
    fn lexical_fixed_points() {
        assert_eq!(LexicalSimilarity::score("Teacher", "Teacher"), 1.0);
        assert_eq!(LexicalSimilarity::score("Teacher", ""), 0.0);
        assert_eq!(LexicalSimilarity::score("", ""), 1.0);
        assert_eq!(LexicalSimilarity::score("OrderItem", "order_item"), 1.0);
        assert_eq!(LexicalSimilarity::score("*", "+"), 0.0);
    }

    #[test]
    fn embedding_vector_normalizes() {
        let v = EmbeddingVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert_eq!(v.components(), &[0.6, 0.8]);
        assert!(EmbeddingVector::normalized(vec![0.0, 0.0]).is_none());
        assert!(EmbeddingVector::normalized(vec![f64::NAN]).is_none());
    }

    #[test]
    fn provider_config_serde() {
        let c: ProviderConfig = serde_json::from_str(r#"{"kind":"embedding_service","endpoint":"http://x"}"#).unwrap();
        assert_eq!(
            c,
            ProviderConfig::EmbeddingService {
                endpoint: "http://x".into(),
                model: None
            }
        );
        let c: ProviderConfig = serde_json::from_str(r#"{"kind":"lexical"}"#).unwrap();
        assert_eq!(c, ProviderConfig::Lexical);
    }

    #[test]
    fn unreachable_service_is_an_error() {
        let p = EmbeddingSimilarity::new("http://127.0.0.1:9");
        let err = p.similarity("Teacher", "Tutor").unwrap_err();
        assert!(err.to_string().contains("Teacher"), "{err}");
    }
}
