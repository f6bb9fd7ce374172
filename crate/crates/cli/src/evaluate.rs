use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use atransn::graph::{DumpSection, EmbeddingDump, FilterIndex};
use atransn::{Evaluator, RankingMetrics, Scorer, SplitDataset};

use crate::checkpoint::Checkpoint;
use crate::data::DataArgs;
use crate::manifest::write_json;
use crate::usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Valid,
    Test,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    /// Per-triplet head and tail ranks as CSV.
    #[arg(long)]
    pub ranks: Option<PathBuf>,
    /// Metrics JSON; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Append a REL section with the relation embeddings.
    #[arg(long)]
    pub include_relations: bool,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    split: Split,
    #[serde(flatten)]
    metrics: RankingMetrics,
    selection_score: f64,
}

fn evaluator<'a>(ckpt: &Checkpoint, filter: &'a FilterIndex) -> Evaluator<'a> {
    let c = &ckpt.config;
    Evaluator::new(Scorer::with_norm(c.kind, c.norm()), filter)
        .with_ties(c.tie_policy)
        .with_candidates(ckpt.table.num_entities)
}

fn part(splits: &SplitDataset, split: Split) -> &[atransn::graph::Triplet] {
    match split {
        Split::Valid => &splits.valid,
        Split::Test => &splits.test,
    }
}

pub fn evaluate_split(
    ckpt: &Checkpoint,
    splits: &SplitDataset,
    split: Split,
) -> anyhow::Result<RankingMetrics> {
    let filter = FilterIndex::build(splits);
    Ok(evaluator(ckpt, &filter).evaluate(&ckpt.table, part(splits, split))?)
}

pub fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let (graph, splits) = args.data.load(&ckpt.config)?;
    ckpt.check_vocab(&graph)?;
    let triplets = part(&splits, args.split);
    if triplets.is_empty() {
        return Err(usage(
            format!("the {:?} split is empty", args.split).to_lowercase(),
        ));
    }
    let filter = FilterIndex::build(&splits);
    let ev = evaluator(&ckpt, &filter);
    let ranks = ev.rank_all(&ckpt.table, triplets);
    let flat: Vec<f64> = ranks
        .iter()
        .flat_map(|r| [r.head_rank, r.tail_rank])
        .collect();
    let metrics = RankingMetrics::from_ranks(&flat)?;

    if let Some(path) = &args.ranks {
        let mut w =
            csv::Writer::from_path(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        w.write_record(["head", "relation", "tail", "head_rank", "tail_rank"])?;
        for (t, r) in triplets.iter().zip(&ranks) {
            let (h, rel, tl) = graph.label_triplet(t);
            w.write_record([
                h,
                rel,
                tl,
                &r.head_rank.to_string(),
                &r.tail_rank.to_string(),
            ])?;
        }
        w.flush().map_err(|e| atransn::Error::io(path, e))?;
    }

    let report = EvalReport {
        split: args.split,
        selection_score: metrics.selection_score(),
        metrics,
    };
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

pub fn export(args: ExportArgs) -> anyhow::Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let t = &ckpt.table;
    let entities = DumpSection {
        labels: ckpt.entities.labels().to_vec(),
        dim: t.entities.len() / t.num_entities.max(1),
        values: t.entities.clone(),
    };
    let relations = args.include_relations.then(|| DumpSection {
        labels: ckpt.relations.labels().to_vec(),
        dim: t.relation_dim,
        values: t.relations.clone(),
    });
    EmbeddingDump {
        entities,
        relations,
    }
    .write(&args.out)?;
    Ok(())
}
