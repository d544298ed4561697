//! Fitting the fifteen weights to human ratings.
//!
//! The objective is the sum, over the five metrics, of the Pearson
//! correlation between metric scores and human scores on the training pairs.
//! Nine free weights are searched; the other six follow from the group sums.
//! The search runs in the unit cube `[0,1]^9` and maps each point onto the
//! feasible region, so every evaluated vector satisfies the constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clue::{ClueError, ClueScores, MetricKind, PairSimilarities};
use crate::exec::{self, ExecMode};
use crate::model::ClassModel;
use crate::semantics::SimilarityProvider;
use crate::stats::{self, CorrelationResult, StatsError};
use crate::weights::{ClueConfig, RelationshipTypeLut, WeightConfig};

const FEASIBILITY_TOLERANCE: f64 = 1e-12;
pub const DIMENSIONS: usize = 9;
const SUBSET_RATE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("decision vector is infeasible: {0}")]
    Domain(String),
    #[error("objective undefined: {0}")]
    Objective(#[from] StatsError),
    #[error(transparent)]
    Clue(#[from] ClueError),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("budget must allow at least one evaluation")]
    ZeroBudget,
    #[error("invalid ratings: {0}")]
    Input(String),
    #[error("pair {index}: human score {score} outside [0, 100]")]
    ScoreRange { index: usize, score: f64 },
}

/// Free weights: `a = w_e`, `b = w_n`, `c = w_a`, `d = w_at`, `e = w_mp`,
/// `f = w_mn`, `g = w_pt`, `h = w_rt`, `k = w_rq`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub k: f64,
}

impl DecisionVector {
    pub fn uniform() -> Self {
        Self::from_weights(&WeightConfig::uniform())
    }

    pub fn from_weights(w: &WeightConfig) -> Self {
        Self {
            a: w.w_e,
            b: w.w_n,
            c: w.w_a,
            d: w.w_at,
            e: w.w_mp,
            f: w.w_mn,
            g: w.w_pt,
            h: w.w_rt,
            k: w.w_rq,
        }
    }

    pub fn as_array(&self) -> [f64; DIMENSIONS] {
        [self.a, self.b, self.c, self.d, self.e, self.f, self.g, self.h, self.k]
    }

    pub fn check(&self) -> Result<(), OptimizerError> {
        let names = ["a", "b", "c", "d", "e", "f", "g", "h", "k"];
        for (name, v) in names.iter().zip(self.as_array()) {
            if !(-FEASIBILITY_TOLERANCE..=1.0 + FEASIBILITY_TOLERANCE).contains(&v) || v.is_nan() {
                return Err(OptimizerError::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (label, x, y) in [("b + c", self.b, self.c), ("e + f", self.e, self.f), ("h + k", self.h, self.k)] {
            if x + y > 1.0 + FEASIBILITY_TOLERANCE {
                return Err(OptimizerError::Domain(format!("{label} = {} exceeds 1", x + y)));
            }
        }
        Ok(())
    }

    /// Maps a unit-cube point onto the feasible region. Each pair with a
    /// sum constraint uses the triangle map `(1 - √u, √u·v)`.
    pub fn from_unit(u: &[f64; DIMENSIONS]) -> Self {
        let tri = |u1: f64, u2: f64| {
            let r = u1.clamp(0.0, 1.0).sqrt();
            (1.0 - r, r * u2.clamp(0.0, 1.0))
        };
        let (b, c) = tri(u[1], u[2]);
        let (f, e) = tri(u[4], u[5]);
        let (h, k) = tri(u[7], u[8]);
        Self {
            a: u[0].clamp(0.0, 1.0),
            b,
            c,
            d: u[3].clamp(0.0, 1.0),
            e,
            f,
            g: u[6].clamp(0.0, 1.0),
            h,
            k,
        }
    }

    /// Inverse of [`DecisionVector::from_unit`].
    pub fn to_unit(&self) -> [f64; DIMENSIONS] {
        let inv = |x: f64, y: f64| {
            let r = (1.0 - x).clamp(0.0, 1.0);
            let v = if r > 0.0 { (y / r).clamp(0.0, 1.0) } else { 0.5 };
            (r * r, v)
        };
        let (u1, u2) = inv(self.b, self.c);
        let (u4, u5) = inv(self.f, self.e);
        let (u7, u8) = inv(self.h, self.k);
        [self.a, u1, u2, self.d, u4, u5, self.g, u7, u8]
    }
}

/// The fifteen weights of a decision vector.
pub fn expand(v: &DecisionVector) -> Result<WeightConfig, OptimizerError> {
    v.check()?;
    let unit = |x: f64| x.clamp(0.0, 1.0);
    Ok(WeightConfig {
        w_e: unit(v.a),
        w_r: unit(1.0 - v.a),
        w_n: unit(v.b),
        w_a: unit(v.c),
        w_m: unit(1.0 - v.b - v.c),
        w_at: unit(v.d),
        w_an: unit(1.0 - v.d),
        w_mn: unit(v.f),
        w_mt: unit(1.0 - v.f - v.e),
        w_mp: unit(v.e),
        w_pt: unit(v.g),
        w_pn: unit(1.0 - v.g),
        w_rt: unit(v.h),
        w_rq: unit(v.k),
        w_rn: unit(1.0 - v.h - v.k),
    })
}

/// A candidate model with its reference and a human score on 0-100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedPair {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<u64>,
    pub reference: ClassModel,
    pub candidate: ClassModel,
    pub score: f64,
}

impl RatedPair {
    pub fn new(reference: ClassModel, candidate: ClassModel, score: f64) -> Self {
        Self {
            task_id: None,
            reference,
            candidate,
            score,
        }
    }
}

/// Reads a JSON array of rated pairs. `reference` and `candidate` are
/// each PlantUML text or a canonical model document.
pub fn parse_rated_pairs(text: &str) -> Result<Vec<RatedPair>, OptimizerError> {
    use serde_json::Value;
    let bad = |i: usize, field: &str, msg: String| OptimizerError::Input(format!("pair {i}: field `{field}`: {msg}"));
    let values: Vec<Value> = serde_json::from_str(text).map_err(|e| OptimizerError::Input(e.to_string()))?;
    let model = |i: usize, field: &str, v: Option<&Value>| -> Result<ClassModel, OptimizerError> {
        match v {
            Some(Value::String(src)) => {
                let code = crate::plantuml::extract_plantuml(src).code().map(str::to_string).unwrap_or_else(|| src.clone());
                let out = crate::plantuml::parse(&code);
                out.model.ok_or_else(|| {
                    let d: Vec<String> = out.diagnostics.iter().map(ToString::to_string).collect();
                    bad(i, field, format!("PlantUML does not parse: {}", d.join("; ")))
                })
            }
            Some(doc @ Value::Object(_)) => {
                let m: ClassModel = serde_json::from_value(doc.clone()).map_err(|e| bad(i, field, e.to_string()))?;
                m.validate().map_err(|e| bad(i, field, e.to_string()))?;
                Ok(m)
            }
            Some(_) => Err(bad(i, field, "expected PlantUML text or a model document".into())),
            None => Err(bad(i, field, "missing".into())),
        }
    };
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let score = v.get("score").and_then(Value::as_f64).ok_or_else(|| bad(i, "score", "missing or not a number".into()))?;
            Ok(RatedPair {
                task_id: v.get("task_id").and_then(Value::as_u64),
                reference: model(i, "reference", v.get("reference"))?,
                candidate: model(i, "candidate", v.get("candidate"))?,
                score,
            })
        })
        .collect()
}

/// Splits by score decade (`[0,10]`, `(10,20]`, ..., `(90,100]`): each
/// bucket is shuffled with `seed` and its first `⌈fraction·size⌉` pairs go
/// to training. Output keeps bucket order.
pub fn stratified_split<T: Clone>(
    items: &[T],
    score: impl Fn(&T) -> f64,
    train_fraction: f64,
    seed: u64,
) -> (Vec<T>, Vec<T>) {
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 10];
    for (i, item) in items.iter().enumerate() {
        let bucket = ((score(item) / 10.0).ceil() as i64).clamp(1, 10) as usize - 1;
        buckets[bucket].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut bucket in buckets {
        if bucket.is_empty() {
            continue;
        }
        rand::seq::SliceRandom::shuffle(bucket.as_mut_slice(), &mut rng);
        let take = ((train_fraction * bucket.len() as f64) - 1e-9).ceil().max(0.0) as usize;
        for (pos, &i) in bucket.iter().enumerate() {
            if pos < take {
                train.push(items[i].clone());
            } else {
                test.push(items[i].clone());
            }
        }
    }
    (train, test)
}

/// Pairs with their weight-independent similarities precomputed.
pub struct PreparedPairs {
    sims: Vec<PairSimilarities>,
    human: Vec<f64>,
    mode: ExecMode,
}

impl PreparedPairs {
    pub fn new(pairs: &[RatedPair], provider: &dyn SimilarityProvider, mode: ExecMode) -> Result<Self, OptimizerError> {
        for (index, p) in pairs.iter().enumerate() {
            if !(0.0..=100.0).contains(&p.score) {
                return Err(OptimizerError::ScoreRange { index, score: p.score });
            }
        }
        let sims = exec::try_map_collect(mode, pairs, |p| {
            PairSimilarities::compute(&p.reference, &p.candidate, provider)
        })?;
        Ok(Self {
            sims,
            human: pairs.iter().map(|p| p.score).collect(),
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.sims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sims.is_empty()
    }

    pub fn with_mode(mut self, mode: ExecMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn scores(&self, config: &ClueConfig) -> Vec<ClueScores> {
        exec::map_collect(self.mode, &self.sims, |s| s.evaluate(config))
    }

    /// Per-metric Pearson correlation with the human scores.
    pub fn correlations(&self, config: &ClueConfig) -> Result<MetricCorrelations, StatsError> {
        let scores = self.scores(config);
        let mut out = Vec::with_capacity(MetricKind::ALL.len());
        for metric in MetricKind::ALL {
            let xs: Vec<f64> = scores.iter().map(|s| s.get(metric)).collect();
            out.push((metric, stats::pearson(&xs, &self.human)?));
        }
        Ok(MetricCorrelations(out))
    }

    pub fn objective(&self, config: &ClueConfig) -> Result<f64, StatsError> {
        Ok(self.correlations(config)?.sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelations(pub Vec<(MetricKind, CorrelationResult)>);

impl MetricCorrelations {
    pub fn sum(&self) -> f64 {
        self.0.iter().map(|(_, c)| c.coefficient).sum()
    }

    pub fn get(&self, metric: MetricKind) -> Option<CorrelationResult> {
        self.0.iter().find(|(m, _)| *m == metric).map(|(_, c)| *c)
    }
}

/// Summed Pearson objective of `v` on `train`.
pub fn objective(v: &DecisionVector, train: &[RatedPair], provider: &dyn SimilarityProvider) -> Result<f64, OptimizerError> {
    let config = ClueConfig::new(expand(v)?);
    let prepared = PreparedPairs::new(train, provider, ExecMode::default())?;
    Ok(prepared.objective(&config)?)
}

/// Black-box search over the unit cube.
pub trait SearchStrategy {
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> [f64; DIMENSIONS];
    /// `value` is `None` when the objective is undefined at `point`.
    fn observe(&mut self, point: [f64; DIMENSIONS], value: Option<f64>);
}

/// Space-filling start, then Gaussian steps around the best points so far,
/// choosing among candidates by an inverse-distance-weighted estimate of the
/// objective plus a bonus for distance from evaluated points.
pub struct SurrogateSearch {
    initial: usize,
    candidates: usize,
    incumbents: usize,
    step: f64,
    min_step: f64,
    max_step: f64,
    observed: Vec<([f64; DIMENSIONS], f64)>,
    failed: Vec<[f64; DIMENSIONS]>,
    pending_init: Vec<[f64; DIMENSIONS]>,
    since_improvement: usize,
    best: f64,
}

impl Default for SurrogateSearch {
    fn default() -> Self {
        Self {
            initial: 20,
            candidates: 48,
            incumbents: 3,
            step: 0.15,
            min_step: 0.01,
            max_step: 0.3,
            observed: Vec::new(),
            failed: Vec::new(),
            pending_init: Vec::new(),
            since_improvement: 0,
            best: f64::NEG_INFINITY,
        }
    }
}

impl SurrogateSearch {
    fn latin_hypercube(&self, rng: &mut ChaCha8Rng) -> Vec<[f64; DIMENSIONS]> {
        let n = self.initial;
        let mut points = vec![[0.0; DIMENSIONS]; n];
        for dim in 0..DIMENSIONS {
            let mut strata: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(strata.as_mut_slice(), rng);
            for (point, s) in points.iter_mut().zip(strata) {
                point[dim] = (s as f64 + rng.random::<f64>()) / n as f64;
            }
        }
        points
    }

    fn predict(&self, x: &[f64; DIMENSIONS]) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut nearest = f64::INFINITY;
        for (p, y) in &self.observed {
            let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            nearest = nearest.min(d2.sqrt());
            if d2 < 1e-18 {
                return (*y, 0.0);
            }
            num += y / d2;
            den += 1.0 / d2;
        }
        for p in &self.failed {
            let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            nearest = nearest.min(d2.sqrt());
        }
        (if den > 0.0 { num / den } else { 0.0 }, nearest)
    }
}

impl SearchStrategy for SurrogateSearch {
    fn propose(&mut self, rng: &mut ChaCha8Rng) -> [f64; DIMENSIONS] {
        if self.observed.len() + self.failed.len() <= 1 && self.pending_init.is_empty() {
            self.pending_init = self.latin_hypercube(rng);
            self.pending_init.reverse();
        }
        if let Some(p) = self.pending_init.pop() {
            return p;
        }
        let mut ranked: Vec<&([f64; DIMENSIONS], f64)> = self.observed.iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        if ranked.is_empty() {
            return std::array::from_fn(|_| rng.random::<f64>());
        }
        let ys: Vec<f64> = ranked.iter().map(|(_, y)| *y).collect();
        let spread = (ys[0] - ys[ys.len() - 1]).max(1e-6);
        let kappa = 0.1 * spread;
        let normal = Normal::new(0.0, self.step).expect("positive step");

        let mut best_candidate = ranked[0].0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..self.candidates {
            let candidate: [f64; DIMENSIONS] = if i % 8 == 7 {
                std::array::from_fn(|_| rng.random::<f64>())
            } else {
                // perturb a random subset of coordinates, at least one
                let centre = ranked[rng.random_range(0..self.incumbents.min(ranked.len()))].0;
                let forced = rng.random_range(0..DIMENSIONS);
                std::array::from_fn(|d| {
                    if d == forced || rng.random_bool(SUBSET_RATE) {
                        (centre[d] + normal.sample(rng)).clamp(0.0, 1.0)
                    } else {
                        centre[d]
                    }
                })
            };
            let (mean, distance) = self.predict(&candidate);
            let score = mean + kappa * distance;
            if score > best_score {
                best_score = score;
                best_candidate = candidate;
            }
        }
        best_candidate
    }

    fn observe(&mut self, point: [f64; DIMENSIONS], value: Option<f64>) {
        match value {
            Some(y) => {
                if y > self.best + 1e-12 {
                    self.best = y;
                    self.since_improvement = 0;
                    self.step = (self.step * 1.5).min(self.max_step);
                } else {
                    self.since_improvement += 1;
                    if self.since_improvement.is_multiple_of(10) {
                        self.step = (self.step * 0.5).max(self.min_step);
                    }
                }
                self.observed.push((point, y));
            }
            None => self.failed.push(point),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Stalled,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    /// Maximum objective evaluations, counting the uniform start.
    pub budget: usize,
    /// Consecutive non-improving evaluations before stopping.
    pub stall_limit: usize,
    pub seed: u64,
    pub exec: ExecMode,
    /// Kept fixed during the search.
    pub lut: RelationshipTypeLut,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            budget: 1000,
            stall_limit: 50,
            seed: 0,
            exec: ExecMode::default(),
            lut: RelationshipTypeLut::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub vector: DecisionVector,
    /// `None` when a correlation was undefined at this point.
    pub objective: Option<f64>,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: DecisionVector,
    pub config: ClueConfig,
    pub train_objective: f64,
    pub uniform_objective: f64,
    pub train: MetricCorrelations,
    /// Absent when the held-out set has fewer than three pairs or a
    /// constant metric.
    pub test: Option<MetricCorrelations>,
    pub log: Vec<IterationRecord>,
    pub stop: StopReason,
}

pub fn optimize(
    train: &[RatedPair],
    test: &[RatedPair],
    provider: &dyn SimilarityProvider,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult, OptimizerError> {
    optimize_with(train, test, provider, settings, &mut SurrogateSearch::default())
}

pub fn optimize_with(
    train: &[RatedPair],
    test: &[RatedPair],
    provider: &dyn SimilarityProvider,
    settings: &OptimizerSettings,
    strategy: &mut dyn SearchStrategy,
) -> Result<OptimizationResult, OptimizerError> {
    if train.is_empty() {
        return Err(OptimizerError::EmptyTrainSet);
    }
    if settings.budget == 0 {
        return Err(OptimizerError::ZeroBudget);
    }
    let prepared = PreparedPairs::new(train, provider, settings.exec)?;
    let config_of = |v: &DecisionVector| -> Result<ClueConfig, OptimizerError> {
        Ok(ClueConfig {
            weights: expand(v)?,
            lut: settings.lut.clone(),
        })
    };

    let start = DecisionVector::uniform();
    let uniform_objective = prepared.objective(&config_of(&start)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    strategy.observe(start.to_unit(), Some(uniform_objective));
    let mut best = (start, uniform_objective);
    let mut log = vec![IterationRecord {
        iteration: 0,
        vector: start,
        objective: Some(uniform_objective),
        best: uniform_objective,
    }];

    let mut stall = 0;
    let mut stop = StopReason::BudgetExhausted;
    for iteration in 1..settings.budget {
        let point = strategy.propose(&mut rng);
        let v = DecisionVector::from_unit(&point);
        let value = prepared.objective(&config_of(&v)?).ok();
        strategy.observe(point, value);
        match value {
            Some(y) if y > best.1 + 1e-12 => {
                best = (v, y);
                stall = 0;
            }
            _ => stall += 1,
        }
        log.push(IterationRecord {
            iteration,
            vector: v,
            objective: value,
            best: best.1,
        });
        if stall >= settings.stall_limit {
            stop = StopReason::Stalled;
            break;
        }
    }
    log::info!("optimizer stopped after {} evaluations ({stop:?}), objective {:.4}", log.len(), best.1);

    let config = config_of(&best.0)?;
    let train_corr = prepared.correlations(&config)?;
    let test_corr = if test.len() >= 3 {
        let held_out = PreparedPairs::new(test, provider, settings.exec)?;
        match held_out.correlations(&config) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("test correlations undefined: {e}");
                None
            }
        }
    } else {
        log::warn!("test set has {} pairs; skipping held-out correlations", test.len());
        None
    };
    Ok(OptimizationResult {
        best: best.0,
        config,
        train_objective: best.1,
        uniform_objective,
        train: train_corr,
        test: test_corr,
        log,
        stop,
    })
}
