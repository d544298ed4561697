//! Class-diagram generation benchmark: PlantUML parsing, optimal-matching
//! similarity scoring of class models, syntax pass@k, task difficulty,
//! weight optimization and the evaluation harness.

pub mod clue;
pub mod difficulty;
pub mod exec;
pub mod harness;
pub mod matching;
pub mod model;
pub mod optimizer;
pub mod passk;
pub mod plantuml;
pub mod semantics;
pub mod stats;
pub mod synth;
pub mod weights;

pub use clue::{clue, ClueError, ClueScores, MetricKind, PairSimilarities};
pub use exec::ExecMode;
pub use matching::{optimal_matching, MatchingResult, SimilarityMatrix};
pub use model::{
    Attribute, ClassEntity, ClassModel, Method, ModelError, MultiplicityLabel, Parameter, Relationship,
    RelationshipKind, Stereotype,
};
pub use semantics::{LexicalSimilarity, SimilarityProvider};
pub use weights::{ClueConfig, RelationshipTypeLut, WeightConfig};
