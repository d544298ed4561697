//! Shared helpers for the integration tests: a brute-force CLUE evaluator,
//! fixture paths and a tiny blocking HTTP server.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use clue_core::model::{ClassEntity, ClassModel, Method, Relationship, RelationshipKind};
use clue_core::semantics::LexicalSimilarity;
use clue_core::weights::ClueConfig;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// Every `.puml` file of the reference corpus, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let dir = fixtures().join("diagrams");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .expect("diagram corpus exists")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "puml"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().to_string();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

/// Diagram body between the markers.
pub fn body(source: &str) -> String {
    let start = source.find("@startuml").map_or(0, |i| i + "@startuml".len());
    let end = source.find("@enduml").unwrap_or(source.len());
    source[start..end].to_string()
}

// ---------------------------------------------------------------------------
// Brute-force optimal matching

/// Every injective assignment between rows and columns, as sorted
/// `(row, col)` lists, smaller side fully matched.
pub fn injections(n: usize, m: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(i: usize, n: usize, m: usize, used: &mut Vec<bool>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let matched_needed = n.min(m);
        if cur.len() == matched_needed {
            out.push(cur.clone());
            return;
        }
        if i == n {
            return;
        }
        // rows left must still be able to fill the remaining slots
        if n - i < matched_needed - cur.len() {
            return;
        }
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                cur.push((i, j));
                rec(i + 1, n, m, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
        // leave row i unmatched
        rec(i + 1, n, m, used, cur, out);
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

/// `(score, pairs)`: the best total over `n`, and the lexicographically
/// smallest pair list whose total is within 1e-9 of the best.
pub fn brute_matching(es: &[Vec<f64>], m: usize) -> (f64, Vec<(usize, usize)>) {
    let n = es.len();
    if n == 0 {
        return (1.0, Vec::new());
    }
    if m == 0 {
        return (0.0, Vec::new());
    }
    let all = injections(n, m);
    let total = |p: &Vec<(usize, usize)>| p.iter().map(|&(i, j)| es[i][j]).sum::<f64>();
    let best = all.iter().map(total).fold(f64::NEG_INFINITY, f64::max);
    let pairs = all.into_iter().filter(|p| total(p) >= best - 1e-9).min().unwrap();
    (best / n as f64, pairs)
}

// ---------------------------------------------------------------------------
// Naive CLUE evaluator: builds every similarity matrix explicitly and
// matches by enumeration.

fn sigma(a: &str, b: &str) -> f64 {
    LexicalSimilarity::score(a, b)
}

fn sim(es: &[Vec<f64>], m: usize) -> f64 {
    brute_matching(es, m).0
}

fn many(q: &str) -> bool {
    let q = q.to_lowercase();
    ["*", "many", "much", "multi"].iter().any(|k| q.contains(k))
}

fn matches(a: &str, b: &str) -> f64 {
    if a == b || (many(a) && many(b)) {
        1.0
    } else {
        0.0
    }
}

fn structural(k: RelationshipKind) -> bool {
    matches!(k, RelationshipKind::AS | RelationshipKind::AG | RelationshipKind::CO)
}

fn sim_rq(a: &Relationship, b: &Relationship) -> f64 {
    match (structural(a.kind), structural(b.kind)) {
        (true, true) => 0.5 * matches(&a.label.from_end, &b.label.from_end) + 0.5 * matches(&a.label.to_end, &b.label.to_end),
        (false, false) => 1.0,
        _ => 0.0,
    }
}

fn sim_mp(a: &Method, b: &Method, cfg: &ClueConfig) -> f64 {
    let w = &cfg.weights;
    let es: Vec<Vec<f64>> = a
        .params
        .iter()
        .map(|p| {
            b.params
                .iter()
                .map(|q| w.w_pt * sigma(&p.type_name, &q.type_name) + w.w_pn * sigma(&p.name, &q.name))
                .collect()
        })
        .collect();
    sim(&es, b.params.len())
}

fn sim_ca(a: &ClassEntity, b: &ClassEntity, cfg: &ClueConfig) -> f64 {
    let w = &cfg.weights;
    let es: Vec<Vec<f64>> = a
        .attributes
        .iter()
        .map(|x| {
            b.attributes
                .iter()
                .map(|y| w.w_at * sigma(&x.type_name, &y.type_name) + w.w_an * sigma(&x.name, &y.name))
                .collect()
        })
        .collect();
    sim(&es, b.attributes.len())
}

fn sim_cm(a: &ClassEntity, b: &ClassEntity, cfg: &ClueConfig) -> f64 {
    let w = &cfg.weights;
    let es: Vec<Vec<f64>> = a
        .methods
        .iter()
        .map(|x| {
            b.methods
                .iter()
                .map(|y| {
                    w.w_mt * sigma(&x.return_type, &y.return_type) + w.w_mn * sigma(&x.name, &y.name) + w.w_mp * sim_mp(x, y, cfg)
                })
                .collect()
        })
        .collect();
    sim(&es, b.methods.len())
}

/// `[clue, class, attribute, method, relation]`.
pub fn naive_clue(r: &ClassModel, c: &ClassModel, cfg: &ClueConfig) -> [f64; 5] {
    let w = &cfg.weights;
    let (n, m) = (r.classes.len(), c.classes.len());
    let es_ce: Vec<Vec<f64>> = r
        .classes
        .iter()
        .map(|a| {
            c.classes
                .iter()
                .map(|b| w.w_n * sigma(&a.name, &b.name) + w.w_a * sim_ca(a, b, cfg) + w.w_m * sim_cm(a, b, cfg))
                .collect()
        })
        .collect();
    let (class, pairs) = brute_matching(&es_ce, m);
    let (attribute, method) = if n == 0 {
        (1.0, 1.0)
    } else if m == 0 {
        (0.0, 0.0)
    } else {
        let a: f64 = pairs.iter().map(|&(i, j)| sim_ca(&r.classes[i], &c.classes[j], cfg)).sum();
        let mm: f64 = pairs.iter().map(|&(i, j)| sim_cm(&r.classes[i], &c.classes[j], cfg)).sum();
        (a / n as f64, mm / n as f64)
    };
    let idx = |model: &ClassModel, name: &str| model.classes.iter().position(|k| k.name == name).unwrap();
    let es_cr: Vec<Vec<f64>> = r
        .relationships
        .iter()
        .map(|x| {
            c.relationships
                .iter()
                .map(|y| {
                    let begin = es_ce[idx(r, &x.source)][idx(c, &y.source)];
                    let end = es_ce[idx(r, &x.target)][idx(c, &y.target)];
                    w.w_rt * cfg.lut.get(x.kind, y.kind) + w.w_rq * sim_rq(x, y) + w.w_rn / 2.0 * (begin + end)
                })
                .collect()
        })
        .collect();
    let relation = sim(&es_cr, c.relationships.len());
    [w.w_e * class + w.w_r * relation, class, attribute, method, relation]
}

// ---------------------------------------------------------------------------
// Mock HTTP server

pub struct Request {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl Request {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

type Handler = dyn Fn(&Request) -> (u16, String) + Send + Sync;

/// Serves each connection with `handler` on a background thread until the
/// process exits. Requests are logged in arrival order.
pub struct MockServer {
    pub url: String,
    pub log: Arc<Mutex<Vec<Request>>>,
}

impl MockServer {
    pub fn start(handler: impl Fn(&Request) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let log: Arc<Mutex<Vec<Request>>> = Arc::default();
        let handler: Arc<Handler> = Arc::new(handler);
        let shared = Arc::clone(&log);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let handler = Arc::clone(&handler);
                let log = Arc::clone(&shared);
                std::thread::spawn(move || serve(stream, &*handler, &log));
            }
        });
        Self { url, log }
    }

    pub fn requests(&self) -> usize {
        self.log.lock().unwrap().len()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<Request>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut stream = stream;
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    {
        let mut parts = line.split_whitespace();
        let method = parts.next().unwrap_or_default().to_string();
        let path = parts.next().unwrap_or_default().to_string();
        let mut headers = Vec::new();
        loop {
            let mut h = String::new();
            reader.read_line(&mut h).unwrap();
            let h = h.trim_end();
            if h.is_empty() {
                break;
            }
            if let Some((k, v)) = h.split_once(':') {
                headers.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let len = headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("content-length"))
            .and_then(|(_, v)| v.parse::<usize>().ok())
            .unwrap_or(0);
        let mut buf = vec![0; len];
        reader.read_exact(&mut buf).unwrap();
        let request = Request {
            method,
            path,
            headers,
            body: String::from_utf8_lossy(&buf).to_string(),
        };
        let (status, body) = handler(&request);
        log.lock().unwrap().push(request);
        let response = format!(
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        let _ = stream.write_all(response.as_bytes());
        let _ = stream.flush();
    }
}

/// Chat-completions response body carrying `content`.
pub fn chat_body(content: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
}
