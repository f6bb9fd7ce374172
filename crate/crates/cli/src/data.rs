use std::path::PathBuf;

use clap::Args;

use atransn::{KnowledgeGraph, SplitDataset, TrainingConfig};

use crate::usage;

/// Where the target triplets come from.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Single triplet file, split with the configured ratios and seed.
    #[arg(long, conflicts_with_all = ["train", "valid", "test"])]
    pub data: Option<PathBuf>,
    /// Training triplets (with --valid and --test).
    #[arg(long, requires_all = ["valid", "test"])]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub valid: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
}

impl DataArgs {
    pub fn files(&self) -> Vec<PathBuf> {
        [&self.data, &self.train, &self.valid, &self.test]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }

    pub fn load(&self, config: &TrainingConfig) -> anyhow::Result<(KnowledgeGraph, SplitDataset)> {
        if let Some(path) = &self.data {
            let (graph, report) = KnowledgeGraph::load(path)?;
            log::info!(
                "{}: {} triplets, {} duplicates dropped",
                path.display(),
                graph.triplets.len(),
                report.duplicates
            );
            let splits = SplitDataset::split(&graph, config.split, config.seed)?;
            return Ok((graph, splits));
        }
        match (&self.train, &self.valid, &self.test) {
            (Some(train), Some(valid), Some(test)) => {
                Ok(SplitDataset::load_files(train, valid, test)?)
            }
            _ => Err(usage(
                "give either --data or all of --train, --valid and --test",
            )),
        }
    }
}
