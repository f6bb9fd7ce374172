//! Merged training set for the joint baseline.

use std::collections::{HashMap, HashSet};

use crate::graph::{AlignmentSet, KnowledgeGraph, SplitDataset, Triplet};

/// Maps teacher triplets into the target id space and appends them to the
/// target training part. Aligned teacher entities take their target id (the
/// first aligned one when there are several), other teacher entities and all
/// teacher relations get fresh ids after the target's, so target ids are kept.
pub fn merge_teachers(
    target: &KnowledgeGraph,
    splits: &SplitDataset,
    teachers: &[(&KnowledgeGraph, &AlignmentSet)],
) -> (KnowledgeGraph, SplitDataset) {
    let mut merged = target.clone();
    let mut seen: HashSet<Triplet> = splits.all().copied().collect();
    let mut train = splits.train.clone();
    for (i, (graph, alignment)) in teachers.iter().enumerate() {
        let mut to_target: HashMap<usize, usize> = HashMap::new();
        for &(t, s) in alignment.pairs() {
            to_target.entry(t).or_insert(s);
        }
        let entity_ids: Vec<usize> = (0..graph.num_entities())
            .map(|e| match to_target.get(&e) {
                Some(&s) => s,
                None => merged
                    .entities
                    .insert(&format!("teacher{i}:{}", graph.entities.labels()[e])),
            })
            .collect();
        let relation_ids: Vec<usize> = graph
            .relations
            .labels()
            .iter()
            .map(|label| merged.relations.insert(&format!("teacher{i}:{label}")))
            .collect();
        for t in &graph.triplets {
            let mapped = Triplet::new(
                entity_ids[t.head],
                relation_ids[t.relation],
                entity_ids[t.tail],
            );
            if seen.insert(mapped) {
                train.push(mapped);
                merged.triplets.push(mapped);
            }
        }
    }
    let split = SplitDataset {
        train,
        valid: splits.valid.clone(),
        test: splits.test.clone(),
        seed: splits.seed,
    };
    (merged, split)
}
