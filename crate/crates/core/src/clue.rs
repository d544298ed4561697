//! The five class-diagram metrics: `clue`, `clue_class`, `clue_attribute`,
//! `clue_method` and `clue_relation`.
//!
//! Metrics are computed bottom-up. Parameter sets feed method similarity,
//! attribute and method sets feed class similarity, and the class
//! similarity matrix feeds both the class matching and the endpoint terms
//! of relationship similarity. Every set comparison goes through
//! [`optimal_matching`] and is normalized by the reference side.
//!
//! The free functions evaluate one level directly against the similarity
//! provider. [`clue`] instead precomputes every string similarity once into
//! a [`PairSimilarities`] table, which can then be re-weighted cheaply.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{matching_score, optimal_matching, MatchingResult, SimilarityMatrix};
use crate::model::{ClassEntity, ClassModel, Method, ModelError, Relationship};
use crate::semantics::{SemanticsError, SimilarityProvider};
use crate::weights::{ClueConfig, RelationshipTypeLut, WeightConfig};

#[derive(Debug, Error)]
pub enum ClueError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClueScores {
    pub clue: f64,
    pub clue_class: f64,
    pub clue_attribute: f64,
    pub clue_method: f64,
    pub clue_relation: f64,
}

/// Metric identifiers in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Clue,
    ClueClass,
    ClueAttribute,
    ClueMethod,
    ClueRelation,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Clue,
        MetricKind::ClueClass,
        MetricKind::ClueAttribute,
        MetricKind::ClueMethod,
        MetricKind::ClueRelation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Clue => "clue",
            MetricKind::ClueClass => "clue-class",
            MetricKind::ClueAttribute => "clue-attribute",
            MetricKind::ClueMethod => "clue-method",
            MetricKind::ClueRelation => "clue-relation",
        }
    }
}

impl ClueScores {
    pub const ZERO: ClueScores = ClueScores {
        clue: 0.0,
        clue_class: 0.0,
        clue_attribute: 0.0,
        clue_method: 0.0,
        clue_relation: 0.0,
    };

    pub fn get(&self, metric: MetricKind) -> f64 {
        match metric {
            MetricKind::Clue => self.clue,
            MetricKind::ClueClass => self.clue_class,
            MetricKind::ClueAttribute => self.clue_attribute,
            MetricKind::ClueMethod => self.clue_method,
            MetricKind::ClueRelation => self.clue_relation,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        MetricKind::ALL.map(|m| self.get(m))
    }
}

/// True when either multiplicity denotes "many".
fn is_many(q: &str) -> bool {
    let q = q.to_lowercase();
    q.contains('*') || q.contains("many") || q.contains("much") || q.contains("multi")
}

fn multiplicity_match(q1: &str, q2: &str) -> f64 {
    if q1 == q2 || (is_many(q1) && is_many(q2)) {
        1.0
    } else {
        0.0
    }
}

/// Relationship multiplicity similarity.
pub fn sim_rq(r1: &Relationship, r2: &Relationship) -> f64 {
    if r1.kind.is_structural() && r2.kind.is_structural() {
        0.5 * multiplicity_match(&r1.label.from_end, &r2.label.from_end)
            + 0.5 * multiplicity_match(&r1.label.to_end, &r2.label.to_end)
    } else if !r1.kind.is_structural() && !r2.kind.is_structural() {
        1.0
    } else {
        0.0
    }
}

type Sigma<'a> = &'a dyn SimilarityProvider;

/// Parameter set similarity of a reference method and a candidate method.
pub fn parameter_set_similarity(m1: &Method, m2: &Method, provider: Sigma, weights: &WeightConfig) -> Result<f64, ClueError> {
    let (r1, r2) = (m1.params.len(), m2.params.len());
    let mut entries = Vec::with_capacity(r1 * r2);
    for p1 in &m1.params {
        for p2 in &m2.params {
            let t = provider.similarity(&p1.type_name, &p2.type_name)?;
            let n = provider.similarity(&p1.name, &p2.name)?;
            entries.push(weights.w_pt * t + weights.w_pn * n);
        }
    }
    Ok(score_of(r1, r2, entries))
}

/// Attribute set similarity of a reference class and a candidate class.
pub fn attribute_set_similarity(
    c1: &ClassEntity,
    c2: &ClassEntity,
    provider: Sigma,
    weights: &WeightConfig,
) -> Result<f64, ClueError> {
    let (p1, p2) = (c1.attributes.len(), c2.attributes.len());
    let mut entries = Vec::with_capacity(p1 * p2);
    for a1 in &c1.attributes {
        for a2 in &c2.attributes {
            let t = provider.similarity(&a1.type_name, &a2.type_name)?;
            let n = provider.similarity(&a1.name, &a2.name)?;
            entries.push(weights.w_at * t + weights.w_an * n);
        }
    }
    Ok(score_of(p1, p2, entries))
}

/// Method set similarity of a reference class and a candidate class.
pub fn method_set_similarity(
    c1: &ClassEntity,
    c2: &ClassEntity,
    provider: Sigma,
    weights: &WeightConfig,
) -> Result<f64, ClueError> {
    let (q1, q2) = (c1.methods.len(), c2.methods.len());
    let mut entries = Vec::with_capacity(q1 * q2);
    for m1 in &c1.methods {
        for m2 in &c2.methods {
            let t = provider.similarity(&m1.return_type, &m2.return_type)?;
            let n = provider.similarity(&m1.name, &m2.name)?;
            let p = parameter_set_similarity(m1, m2, provider, weights)?;
            entries.push(weights.w_mt * t + weights.w_mn * n + weights.w_mp * p);
        }
    }
    Ok(score_of(q1, q2, entries))
}

/// Reference-class × candidate-class similarity, rows and columns in
/// declaration order.
pub fn class_similarity_matrix(
    reference: &ClassModel,
    candidate: &ClassModel,
    provider: Sigma,
    weights: &WeightConfig,
) -> Result<SimilarityMatrix, ClueError> {
    let (n, m) = (reference.classes.len(), candidate.classes.len());
    let mut entries = Vec::with_capacity(n * m);
    for c1 in &reference.classes {
        for c2 in &candidate.classes {
            let name = provider.similarity(&c1.name, &c2.name)?;
            let attrs = attribute_set_similarity(c1, c2, provider, weights)?;
            let methods = method_set_similarity(c1, c2, provider, weights)?;
            entries.push(weights.w_n * name + weights.w_a * attrs + weights.w_m * methods);
        }
    }
    Ok(matrix_of(n, m, entries))
}

fn class_matching(
    reference: &ClassModel,
    candidate: &ClassModel,
    provider: Sigma,
    weights: &WeightConfig,
) -> Result<(SimilarityMatrix, MatchingResult), ClueError> {
    let es_ce = class_similarity_matrix(reference, candidate, provider, weights)?;
    let matching = optimal_matching(&es_ce);
    Ok((es_ce, matching))
}

pub fn clue_class(reference: &ClassModel, candidate: &ClassModel, provider: Sigma, weights: &WeightConfig) -> Result<f64, ClueError> {
    Ok(class_matching(reference, candidate, provider, weights)?.1.score)
}

/// Relationship similarity given an already computed class matrix.
pub fn clue_relation_with(
    reference: &ClassModel,
    candidate: &ClassModel,
    es_ce: &SimilarityMatrix,
    weights: &WeightConfig,
    lut: &RelationshipTypeLut,
) -> Result<f64, ClueError> {
    let ref_ends = endpoint_indices(reference)?;
    let cand_ends = endpoint_indices(candidate)?;
    let (p, q) = (reference.relationships.len(), candidate.relationships.len());
    let mut entries = Vec::with_capacity(p * q);
    for (r1, &(b1, e1)) in reference.relationships.iter().zip(&ref_ends) {
        for (r2, &(b2, e2)) in candidate.relationships.iter().zip(&cand_ends) {
            entries.push(
                weights.w_rt * lut.get(r1.kind, r2.kind)
                    + weights.w_rq * sim_rq(r1, r2)
                    + weights.w_rn / 2.0 * (es_ce.get(b1, b2) + es_ce.get(e1, e2)),
            );
        }
    }
    Ok(score_of(p, q, entries))
}

pub fn clue_relation(reference: &ClassModel, candidate: &ClassModel, provider: Sigma, config: &ClueConfig) -> Result<f64, ClueError> {
    let es_ce = class_similarity_matrix(reference, candidate, provider, &config.weights)?;
    clue_relation_with(reference, candidate, &es_ce, &config.weights, &config.lut)
}

/// Mean attribute-set similarity over the optimal class assignment,
/// divided by the reference class count.
pub fn clue_attribute(reference: &ClassModel, candidate: &ClassModel, provider: Sigma, weights: &WeightConfig) -> Result<f64, ClueError> {
    let (_, matching) = class_matching(reference, candidate, provider, weights)?;
    matched_average(reference, candidate, &matching, |c1, c2| {
        attribute_set_similarity(c1, c2, provider, weights)
    })
}

pub fn clue_method(reference: &ClassModel, candidate: &ClassModel, provider: Sigma, weights: &WeightConfig) -> Result<f64, ClueError> {
    let (_, matching) = class_matching(reference, candidate, provider, weights)?;
    matched_average(reference, candidate, &matching, |c1, c2| {
        method_set_similarity(c1, c2, provider, weights)
    })
}

fn matched_average<F>(reference: &ClassModel, candidate: &ClassModel, matching: &MatchingResult, mut f: F) -> Result<f64, ClueError>
where
    F: FnMut(&ClassEntity, &ClassEntity) -> Result<f64, ClueError>,
{
    let n = reference.classes.len();
    if n == 0 {
        return Ok(1.0);
    }
    if candidate.classes.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &(i, j) in &matching.pairs {
        total += f(&reference.classes[i], &candidate.classes[j])?;
    }
    Ok((total / n as f64).clamp(0.0, 1.0))
}

/// All five metrics for one (reference, candidate) pair.
pub fn clue(reference: &ClassModel, candidate: &ClassModel, provider: Sigma, config: &ClueConfig) -> Result<ClueScores, ClueError> {
    Ok(PairSimilarities::compute(reference, candidate, provider)?.evaluate(config))
}

fn endpoint_indices(model: &ClassModel) -> Result<Vec<(usize, usize)>, ModelError> {
    model
        .relationships
        .iter()
        .map(|r| {
            let b = model
                .class_index(&r.source)
                .ok_or_else(|| ModelError::DanglingEndpoint(r.source.clone()))?;
            let e = model
                .class_index(&r.target)
                .ok_or_else(|| ModelError::DanglingEndpoint(r.target.clone()))?;
            Ok((b, e))
        })
        .collect()
}

fn matrix_of(rows: usize, cols: usize, entries: Vec<f64>) -> SimilarityMatrix {
    if rows == 0 || cols == 0 {
        return SimilarityMatrix::empty(rows, cols);
    }
    // Entries are convex combinations of values in [0, 1].
    SimilarityMatrix::new(rows, cols, entries).expect("weighted similarities stay within [0, 1]")
}

fn score_of(rows: usize, cols: usize, entries: Vec<f64>) -> f64 {
    matching_score(&matrix_of(rows, cols, entries))
}

// ---------------------------------------------------------------------------
// Precomputed similarity tables

/// σ values of two equally shaped string lists, row-major.
#[derive(Debug, Clone, Default)]
struct Grid {
    rows: usize,
    cols: usize,
    first: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct ClassPairTable {
    /// type σ, name σ
    attributes: Grid,
    /// return-type σ, name σ
    methods: Grid,
    /// per method pair: type σ, name σ
    params: Vec<Grid>,
}

/// Every weight-independent quantity of a (reference, candidate) pair:
/// string similarities, multiplicity similarities and endpoint indices.
/// Re-weighting only repeats the weighted sums and matchings.
#[derive(Debug, Clone)]
pub struct PairSimilarities {
    n: usize,
    m: usize,
    class_names: Vec<f64>,
    class_pairs: Vec<ClassPairTable>,
    ref_relations: Vec<RelationEnds>,
    cand_relations: Vec<RelationEnds>,
    relation_rq: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct RelationEnds {
    kind: crate::model::RelationshipKind,
    begin: usize,
    end: usize,
}

impl PairSimilarities {
    pub fn compute(reference: &ClassModel, candidate: &ClassModel, provider: Sigma) -> Result<Self, ClueError> {
        reference.validate()?;
        candidate.validate()?;
        prefetch_strings(reference, candidate, provider)?;

        let (n, m) = (reference.classes.len(), candidate.classes.len());
        let mut class_names = Vec::with_capacity(n * m);
        let mut class_pairs = Vec::with_capacity(n * m);
        for c1 in &reference.classes {
            for c2 in &candidate.classes {
                class_names.push(provider.similarity(&c1.name, &c2.name)?);
                class_pairs.push(ClassPairTable::compute(c1, c2, provider)?);
            }
        }
        let ref_relations = relation_ends(reference)?;
        let cand_relations = relation_ends(candidate)?;
        let mut relation_rq = Vec::with_capacity(ref_relations.len() * cand_relations.len());
        for r1 in &reference.relationships {
            for r2 in &candidate.relationships {
                relation_rq.push(sim_rq(r1, r2));
            }
        }
        Ok(Self {
            n,
            m,
            class_names,
            class_pairs,
            ref_relations,
            cand_relations,
            relation_rq,
        })
    }

    pub fn evaluate(&self, config: &ClueConfig) -> ClueScores {
        let w = &config.weights;
        let (n, m) = (self.n, self.m);
        let mut sim_ca = Vec::with_capacity(n * m);
        let mut sim_cm = Vec::with_capacity(n * m);
        let mut es_ce = Vec::with_capacity(n * m);
        for (name, table) in self.class_names.iter().zip(&self.class_pairs) {
            let ca = table.attribute_similarity(w);
            let cm = table.method_similarity(w);
            es_ce.push(w.w_n * name + w.w_a * ca + w.w_m * cm);
            sim_ca.push(ca);
            sim_cm.push(cm);
        }
        let es_ce = matrix_of(n, m, es_ce);
        let class_match = optimal_matching(&es_ce);

        let matched = |values: &[f64]| -> f64 {
            if n == 0 {
                1.0
            } else if m == 0 {
                0.0
            } else {
                let total: f64 = class_match.pairs.iter().map(|&(i, j)| values[i * m + j]).sum();
                (total / n as f64).clamp(0.0, 1.0)
            }
        };
        let clue_attribute = matched(&sim_ca);
        let clue_method = matched(&sim_cm);

        let (p, q) = (self.ref_relations.len(), self.cand_relations.len());
        let mut es_cr = Vec::with_capacity(p * q);
        for (a, r1) in self.ref_relations.iter().enumerate() {
            for (b, r2) in self.cand_relations.iter().enumerate() {
                es_cr.push(
                    w.w_rt * config.lut.get(r1.kind, r2.kind)
                        + w.w_rq * self.relation_rq[a * q + b]
                        + w.w_rn / 2.0 * (es_ce.get(r1.begin, r2.begin) + es_ce.get(r1.end, r2.end)),
                );
            }
        }
        let clue_relation = score_of(p, q, es_cr);
        let clue_class = class_match.score;
        ClueScores {
            clue: w.w_e * clue_class + w.w_r * clue_relation,
            clue_class,
            clue_attribute,
            clue_method,
            clue_relation,
        }
    }
}

impl ClassPairTable {
    fn compute(c1: &ClassEntity, c2: &ClassEntity, provider: Sigma) -> Result<Self, ClueError> {
        let attributes = Grid::compute(
            &c1.attributes,
            &c2.attributes,
            |a| (&a.type_name, &a.name),
            provider,
        )?;
        let methods = Grid::compute(&c1.methods, &c2.methods, |m| (&m.return_type, &m.name), provider)?;
        let mut params = Vec::with_capacity(c1.methods.len() * c2.methods.len());
        for m1 in &c1.methods {
            for m2 in &c2.methods {
                params.push(Grid::compute(&m1.params, &m2.params, |p| (&p.type_name, &p.name), provider)?);
            }
        }
        Ok(Self {
            attributes,
            methods,
            params,
        })
    }

    fn attribute_similarity(&self, w: &WeightConfig) -> f64 {
        let g = &self.attributes;
        let entries = g.first.iter().zip(&g.second).map(|(t, n)| w.w_at * t + w.w_an * n).collect();
        score_of(g.rows, g.cols, entries)
    }

    fn method_similarity(&self, w: &WeightConfig) -> f64 {
        let g = &self.methods;
        let entries = g
            .first
            .iter()
            .zip(&g.second)
            .zip(&self.params)
            .map(|((t, n), params)| {
                let p_entries = params.first.iter().zip(&params.second).map(|(t, n)| w.w_pt * t + w.w_pn * n).collect();
                let p = score_of(params.rows, params.cols, p_entries);
                w.w_mt * t + w.w_mn * n + w.w_mp * p
            })
            .collect();
        score_of(g.rows, g.cols, entries)
    }
}

impl Grid {
    fn compute<T, F>(left: &[T], right: &[T], fields: F, provider: Sigma) -> Result<Self, ClueError>
    where
        F: Fn(&T) -> (&String, &String),
    {
        let mut first = Vec::with_capacity(left.len() * right.len());
        let mut second = Vec::with_capacity(left.len() * right.len());
        for l in left {
            let (l1, l2) = fields(l);
            for r in right {
                let (r1, r2) = fields(r);
                first.push(provider.similarity(l1, r1)?);
                second.push(provider.similarity(l2, r2)?);
            }
        }
        Ok(Self {
            rows: left.len(),
            cols: right.len(),
            first,
            second,
        })
    }
}

fn relation_ends(model: &ClassModel) -> Result<Vec<RelationEnds>, ClueError> {
    Ok(endpoint_indices(model)?
        .into_iter()
        .zip(&model.relationships)
        .map(|((begin, end), r)| RelationEnds { kind: r.kind, begin, end })
        .collect())
}

fn prefetch_strings(reference: &ClassModel, candidate: &ClassModel, provider: Sigma) -> Result<(), SemanticsError> {
    let mut texts: Vec<&str> = Vec::new();
    for model in [reference, candidate] {
        for c in &model.classes {
            texts.push(&c.name);
            for a in &c.attributes {
                texts.push(&a.name);
                texts.push(&a.type_name);
            }
            for m in &c.methods {
                texts.push(&m.name);
                texts.push(&m.return_type);
                for p in &m.params {
                    texts.push(&p.name);
                    texts.push(&p.type_name);
                }
            }
        }
    }
    texts.sort_unstable();
    texts.dedup();
    provider.prefetch(&texts)
}
