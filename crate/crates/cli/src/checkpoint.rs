use std::path::Path;

use serde::{Deserialize, Serialize};

use atransn::trainer::CheckpointRecord;
use atransn::{EmbeddingTable, KnowledgeGraph, TrainingConfig, Vocab};

use crate::usage;

/// A trained table with the vocabularies and configuration it was trained
/// under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: TrainingConfig,
    pub entities: Vocab,
    pub relations: Vocab,
    pub table: EmbeddingTable,
    pub best: Option<CheckpointRecord>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| atransn::Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| atransn::Error::io(path, e))?;
        let ckpt: Self = serde_json::from_str(&text)
            .map_err(|e| usage(format!("{}: not a checkpoint: {e}", path.display())))?;
        let t = &ckpt.table;
        if t.num_entities != ckpt.entities.len() || t.num_relations != ckpt.relations.len() {
            return Err(usage(format!(
                "{}: table has {}x{} rows but vocabularies have {}x{}",
                path.display(),
                t.num_entities,
                t.num_relations,
                ckpt.entities.len(),
                ckpt.relations.len()
            )));
        }
        Ok(ckpt)
    }

    /// Rejects a dataset whose vocabularies differ from the checkpoint's.
    pub fn check_vocab(&self, graph: &KnowledgeGraph) -> anyhow::Result<()> {
        for (what, ours, theirs) in [
            ("entity", &self.entities, &graph.entities),
            ("relation", &self.relations, &graph.relations),
        ] {
            if ours != theirs {
                let first = ours
                    .labels()
                    .iter()
                    .zip(theirs.labels())
                    .position(|(a, b)| a != b)
                    .unwrap_or(ours.len().min(theirs.len()));
                return Err(usage(format!(
                    "{what} vocabulary mismatch: checkpoint has {} labels, dataset {} (first difference at id {first})",
                    ours.len(),
                    theirs.len()
                )));
            }
        }
        Ok(())
    }
}
