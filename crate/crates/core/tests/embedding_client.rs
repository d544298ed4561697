//! The `/embed` client against a local stand-in for the service.

mod common;

use clue_core::semantics::{EmbeddingSimilarity, SemanticsError, SimilarityProvider, EMBED_BATCH_CAP};
use serde_json::{json, Value};

/// Deterministic fake encoder: letter-frequency vectors.
fn encode(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; 26];
    for c in text.to_lowercase().chars().filter(char::is_ascii_lowercase) {
        v[(c as u8 - b'a') as usize] += 1.0;
    }
    v
}

fn service() -> common::MockServer {
    common::MockServer::start(|req| {
        if req.path != "/embed" {
            return (404, "{}".into());
        }
        let body: Value = serde_json::from_str(&req.body).unwrap();
        let texts = body["texts"].as_array().unwrap();
        let vectors: Vec<Vec<f64>> = texts.iter().map(|t| encode(t.as_str().unwrap())).collect();
        (200, json!({ "vectors": vectors }).to_string())
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn similarity_is_cosine_of_service_vectors() {
    let server = service();
    let client = EmbeddingSimilarity::new(&server.url).with_token("tok".into());
    let got = client.similarity("Teacher", "Tutor").unwrap();
    assert!((got - cosine(&encode("Teacher"), &encode("Tutor"))).abs() < 1e-12);
    assert!(got > client.similarity("Teacher", "Invoice").unwrap());
    assert_eq!(client.similarity("Order", "Order").unwrap(), 1.0);
    assert_eq!(client.similarity("", "Order").unwrap(), 0.0);

    let log = server.log.lock().unwrap();
    assert_eq!(log[0].header("authorization"), Some("Bearer tok"));
    assert_eq!(log[0].method, "POST");
}

#[test]
fn vectors_are_cached_and_batched() {
    let server = service();
    let client = EmbeddingSimilarity::new(format!("{}/", server.url));
    let texts: Vec<String> = (0..150).map(|i| format!("name{}", "x".repeat(i % 40) + &i.to_string())).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    client.prefetch(&refs).unwrap();
    assert_eq!(client.request_count(), 150usize.div_ceil(EMBED_BATCH_CAP));
    let sizes: Vec<usize> = server
        .log
        .lock()
        .unwrap()
        .iter()
        .map(|r| serde_json::from_str::<Value>(&r.body).unwrap()["texts"].as_array().unwrap().len())
        .collect();
    assert!(sizes.iter().all(|s| *s <= EMBED_BATCH_CAP));
    assert_eq!(sizes.iter().sum::<usize>(), 150);

    client.similarity(refs[0], refs[1]).unwrap();
    assert_eq!(client.request_count(), 3);
}

#[test]
fn bad_responses_are_errors() {
    let short = common::MockServer::start(|_| (200, json!({ "vectors": [] }).to_string()));
    let err = EmbeddingSimilarity::new(&short.url).similarity("a", "b").unwrap_err();
    assert!(matches!(err, SemanticsError::InvalidResponse { .. }), "{err}");

    let zero = common::MockServer::start(|_| (200, json!({ "vectors": [[0.0, 0.0]] }).to_string()));
    assert!(EmbeddingSimilarity::new(&zero.url).similarity("a", "b").is_err());

    let down = common::MockServer::start(|_| (503, "unavailable".into()));
    let err = EmbeddingSimilarity::new(&down.url).similarity("a", "b").unwrap_err();
    assert!(matches!(err, SemanticsError::Transport { .. }), "{err}");
    assert!(err.to_string().contains("503"));
}
