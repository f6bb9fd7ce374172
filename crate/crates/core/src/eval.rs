//! Filtered link-prediction ranking.
//!
//! For each test triplet the head and the tail are replaced by every candidate
//! entity. Candidates forming a triplet known anywhere in the dataset are
//! skipped (the true entity itself always stays), and the rank of the true
//! triplet is one plus the number of remaining candidates that score strictly
//! better under the default optimistic tie policy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FilterIndex, Triplet};
use crate::scoring::{EmbeddingTable, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Ties do not count against the true entity.
    #[default]
    Optimistic,
    /// Every tie counts against the true entity.
    Pessimistic,
    /// Half of the ties count.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub n_queries: usize,
}

impl RankingMetrics {
    /// Aggregates a list of ranks (each ≥ 1).
    pub fn from_ranks(ranks: &[f64]) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::Usage("cannot aggregate an empty rank list".into()));
        }
        let n = ranks.len() as f64;
        let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Ok(Self {
            mr: ranks.iter().sum::<f64>() / n,
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
            hits1: hits(1.0),
            hits3: hits(3.0),
            hits10: hits(10.0),
            n_queries: ranks.len(),
        })
    }

    /// `100/MR + MRR + Hits@3 + Hits@10`, Hits as fractions.
    pub fn selection_score(&self) -> f64 {
        selection_score(self)
    }
}

pub fn selection_score(m: &RankingMetrics) -> f64 {
    100.0 / m.mr + m.mrr + m.hits3 + m.hits10
}

/// Head and tail rank of one triplet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletRanks {
    pub head_rank: f64,
    pub tail_rank: f64,
}

/// Rank of a true score among the scores of its surviving candidates.
pub fn filtered_rank(
    truth: f64,
    candidates: impl IntoIterator<Item = f64>,
    ties: TiePolicy,
) -> f64 {
    let (mut better, mut tied) = (0usize, 0usize);
    for score in candidates {
        better += usize::from(score < truth);
        tied += usize::from(score == truth);
    }
    1.0 + better as f64
        + match ties {
            TiePolicy::Optimistic => 0.0,
            TiePolicy::Pessimistic => tied as f64,
            TiePolicy::Mean => tied as f64 / 2.0,
        }
}

#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    pub scorer: Scorer,
    pub filter: &'a FilterIndex,
    pub ties: TiePolicy,
    /// Candidates are entity ids `0..num_candidates`; `None` means every row.
    pub num_candidates: Option<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(scorer: Scorer, filter: &'a FilterIndex) -> Self {
        Self {
            scorer,
            filter,
            ties: TiePolicy::default(),
            num_candidates: None,
        }
    }

    pub fn with_ties(mut self, ties: TiePolicy) -> Self {
        self.ties = ties;
        self
    }

    pub fn with_candidates(mut self, n: usize) -> Self {
        self.num_candidates = Some(n);
        self
    }

    pub fn rank_triplet(&self, table: &EmbeddingTable, t: &Triplet) -> TripletRanks {
        let n = self.num_candidates.unwrap_or(table.num_entities);
        let s = &self.scorer;
        let (h, r, tl) = (
            table.entity(t.head),
            table.relation(t.relation),
            table.entity(t.tail),
        );
        let truth = s.score_unchecked(h, r, tl);

        let known_heads = self.filter.heads(t.relation, t.tail);
        let heads = (0..n)
            .filter(|&e| e != t.head && !known_heads.is_some_and(|k| k.contains(&e)))
            .map(|e| s.score_unchecked(table.entity(e), r, tl));
        let head_rank = filtered_rank(truth, heads, self.ties);

        let known_tails = self.filter.tails(t.head, t.relation);
        let tails = (0..n)
            .filter(|&e| e != t.tail && !known_tails.is_some_and(|k| k.contains(&e)))
            .map(|e| s.score_unchecked(h, r, table.entity(e)));
        TripletRanks {
            head_rank,
            tail_rank: filtered_rank(truth, tails, self.ties),
        }
    }

    /// Ranks of every triplet, in input order.
    pub fn rank_all(&self, table: &EmbeddingTable, test: &[Triplet]) -> Vec<TripletRanks> {
        test.par_iter()
            .map(|t| self.rank_triplet(table, t))
            .collect()
    }

    pub fn evaluate(&self, table: &EmbeddingTable, test: &[Triplet]) -> Result<RankingMetrics> {
        if test.is_empty() {
            return Err(Error::Usage("evaluation needs at least one triplet".into()));
        }
        let ranks: Vec<f64> = self
            .rank_all(table, test)
            .iter()
            .flat_map(|r| [r.head_rank, r.tail_rank])
            .collect();
        RankingMetrics::from_ranks(&ranks)
    }
}
