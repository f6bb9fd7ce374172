//! Knowledge-graph embedding with adversarial feature transfer.
//!
//! A target graph is embedded with a shallow scoring model (TransE, DistMult,
//! ComplEx or RotatE) trained by negative sampling. Frozen entity embeddings of
//! one or more teacher graphs are projected into the target space by a
//! transition network and act as soft targets through two constraints: a cosine
//! distance constraint on aligned entity pairs and a transferred-triplet
//! constraint. A conditional generator/discriminator pair scores how consistent
//! each aligned pair is, and those scores weight the constraints.
//!
//! Evaluation follows the filtered link-prediction protocol (MR, MRR, Hits@K).

pub mod adversarial;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod math;
pub mod nn;
pub mod rng;
pub mod scoring;
pub mod synth;
pub mod trainer;
pub mod transfer;

pub use error::{Error, Result};
pub use eval::{Evaluator, RankingMetrics, TiePolicy};
pub use graph::{
    AlignmentSet, FilterIndex, KnowledgeGraph, SplitDataset, TeacherEmbeddings, Triplet, Vocab,
};
pub use scoring::{EmbeddingTable, ModelKind, Norm, Scorer};
pub use trainer::{Mode, TeacherInput, TrainOutcome, Trainer, TrainingConfig};
