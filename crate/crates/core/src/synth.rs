//! Synthetic worlds for transfer experiments.
//!
//! Entities are split into latent clusters laid out on a 2-D grid, and every
//! entity has a small random offset inside its cluster. Each relation is a
//! grid shift: a triplet `(h, r, t)` puts `t` in the cluster reached by
//! shifting `h`'s cluster, choosing the member whose offset is closest to
//! `h`'s with probability `determinism` and a uniform member otherwise. The
//! structure is therefore close to a translation in the latent plane.
//!
//! The teacher view holds every triplet under its own labels. The target view
//! holds a sampled fraction of the triplets with a fixed train/valid/test
//! split. Alignments for different ratios are prefixes of one seeded
//! permutation of the target entities, so they nest.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AlignmentSet, KnowledgeGraph, SplitDataset, Triplet};
use crate::rng::{stream, Stream};

pub const TEACHER_PREFIX: &str = "t:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub entities: usize,
    pub relations: usize,
    pub triplets: usize,
    pub clusters: usize,
    pub determinism: f64,
    /// Fraction of the triplets the target view keeps.
    pub target_fraction: f64,
    pub split: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            entities: 200,
            relations: 8,
            triplets: 2000,
            clusters: 20,
            determinism: 0.8,
            target_fraction: 0.4,
            split: [0.6, 0.2, 0.2],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.entities < 2 || self.relations == 0 || self.clusters < 2 {
            return fail(
                "synthetic world needs at least 2 entities, 1 relation and 2 clusters".into(),
            );
        }
        if self.clusters > self.entities {
            return fail(format!(
                "{} clusters for {} entities",
                self.clusters, self.entities
            ));
        }
        if self.triplets < self.entities {
            return fail(format!(
                "{} triplets cannot cover {} entities",
                self.triplets, self.entities
            ));
        }
        if !(0.0..=1.0).contains(&self.determinism) {
            return fail(format!(
                "determinism must lie in [0, 1], got {}",
                self.determinism
            ));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction <= 1.0) {
            return fail(format!(
                "target_fraction must lie in (0, 1], got {}",
                self.target_fraction
            ));
        }
        Ok(())
    }
}

pub fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "overlap ratio must lie in (0, 1], got {ratio}"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct SynthWorld {
    /// Every generated triplet, labels `e{i}` / `r{j}`.
    pub ground_truth: KnowledgeGraph,
    /// All triplets under teacher labels.
    pub teacher: KnowledgeGraph,
    pub target: KnowledgeGraph,
    pub splits: SplitDataset,
    /// `(teacher id, target id)` for every target entity, in alignment order.
    alignment_order: Vec<(usize, usize)>,
}

/// Paths written by [`SynthWorld::write`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFiles {
    pub teacher: PathBuf,
    pub train: PathBuf,
    pub valid: PathBuf,
    pub test: PathBuf,
    /// `(ratio, path)` per alignment file.
    pub alignments: Vec<(f64, PathBuf)>,
}

/// Cluster grid: cluster `k` sits at column `k % cols`, row `k / cols`.
struct Grid {
    cols: i64,
    clusters: usize,
}

impl Grid {
    fn new(clusters: usize) -> Self {
        let cols = (clusters as f64).sqrt().ceil() as i64;
        Self { cols, clusters }
    }

    fn shifted(&self, k: usize, (dx, dy): (i64, i64)) -> Option<usize> {
        let (x, y) = (k as i64 % self.cols + dx, k as i64 / self.cols + dy);
        if x < 0 || x >= self.cols || y < 0 {
            return None;
        }
        let moved = (y * self.cols + x) as usize;
        (moved < self.clusters).then_some(moved)
    }

    /// Every nonzero shift with at least one valid source cluster, nearest first.
    fn shifts(&self) -> Vec<(i64, i64)> {
        let reach = self.cols.max(2);
        let mut all: Vec<(i64, i64)> = (-reach..=reach)
            .flat_map(|dx| (-reach..=reach).map(move |dy| (dx, dy)))
            .filter(|&s| s != (0, 0))
            .filter(|&s| (0..self.clusters).any(|k| self.shifted(k, s).is_some()))
            .collect();
        all.sort_by_key(|(dx, dy)| dx.abs() + dy.abs());
        all
    }
}

impl SynthWorld {
    pub fn generate(config: &SynthConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = stream(seed, Stream::Synth);
        let n = config.entities;
        let grid = Grid::new(config.clusters);
        let cluster_of = |e: usize| e % config.clusters;
        let members: Vec<Vec<usize>> = (0..config.clusters)
            .map(|c| (c..n).step_by(config.clusters).collect())
            .collect();
        let offsets: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();

        // Relations take the nearest shifts, shuffled within equal lengths.
        let mut shifts = grid.shifts();
        if shifts.len() < config.relations {
            return Err(Error::Config(format!(
                "{} clusters support at most {} relations",
                config.clusters,
                shifts.len()
            )));
        }
        let cutoff = shifts[config.relations - 1].0.abs() + shifts[config.relations - 1].1.abs();
        let (mut near, mut ring): (Vec<_>, Vec<_>) = shifts
            .drain(..)
            .filter(|(dx, dy)| dx.abs() + dy.abs() <= cutoff)
            .partition(|(dx, dy)| dx.abs() + dy.abs() < cutoff);
        ring.shuffle(&mut rng);
        near.extend(ring);
        near.truncate(config.relations);
        let relation_shifts = near;

        let nearest = |h: usize, cluster: &[usize]| {
            let d = |e: usize| {
                let (a, b) = (offsets[h], offsets[e]);
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            };
            *cluster
                .iter()
                .min_by(|&&x, &&y| d(x).total_cmp(&d(y)))
                .expect("clusters are nonempty")
        };
        let valid: Vec<Vec<usize>> = (0..n)
            .map(|h| {
                (0..config.relations)
                    .filter(|&r| grid.shifted(cluster_of(h), relation_shifts[r]).is_some())
                    .collect()
            })
            .collect();
        let heads_of: Vec<Vec<usize>> = (0..config.relations)
            .map(|r| (0..n).filter(|h| valid[*h].contains(&r)).collect())
            .collect();
        let draw = |h: usize, r: usize, rng: &mut crate::rng::Rng| {
            let k = grid
                .shifted(cluster_of(h), relation_shifts[r])
                .expect("relation is valid for head");
            let cluster = &members[k];
            let t = if rng.random_bool(config.determinism) {
                nearest(h, cluster)
            } else {
                cluster[rng.random_range(0..cluster.len())]
            };
            Triplet::new(h, r, t)
        };

        let mut seen = HashSet::new();
        let mut triplets = Vec::with_capacity(config.triplets);
        // Every entity heads at least one triplet so the vocabulary is complete.
        for h in 0..n {
            if valid[h].is_empty() {
                return Err(Error::Config(format!("entity {h} has no valid relation")));
            }
            let r = valid[h][rng.random_range(0..valid[h].len())];
            let t = draw(h, r, &mut rng);
            if seen.insert(t) {
                triplets.push(t);
            }
        }
        let max_attempts = 100 * config.triplets;
        let mut attempts = 0;
        while triplets.len() < config.triplets {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::Data(format!(
                    "could only draw {} distinct triplets out of {}",
                    triplets.len(),
                    config.triplets
                )));
            }
            let r = rng.random_range(0..config.relations);
            let h = heads_of[r][rng.random_range(0..heads_of[r].len())];
            let t = draw(h, r, &mut rng);
            if seen.insert(t) {
                triplets.push(t);
            }
        }

        let e_label: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let r_label: Vec<String> = (0..config.relations).map(|i| format!("r{i}")).collect();
        let labeled = |prefix: &str, ts: &[Triplet]| {
            let rows: Vec<(String, String, String)> = ts
                .iter()
                .map(|t| {
                    (
                        format!("{prefix}{}", e_label[t.head]),
                        format!("{prefix}{}", r_label[t.relation]),
                        format!("{prefix}{}", e_label[t.tail]),
                    )
                })
                .collect();
            KnowledgeGraph::from_labels(
                rows.iter()
                    .map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())),
            )
        };
        let ground_truth = labeled("", &triplets);
        let teacher = labeled(TEACHER_PREFIX, &triplets);

        let mut sampled = triplets.clone();
        sampled.shuffle(&mut rng);
        sampled.truncate(((config.target_fraction * triplets.len() as f64).ceil() as usize).max(3));
        let target = labeled("", &sampled);
        let splits = SplitDataset::split(&target, config.split, seed)?;

        let mut alignment_order: Vec<(usize, usize)> = target
            .entities
            .labels()
            .iter()
            .enumerate()
            .map(|(s, label)| {
                let t = teacher
                    .entities
                    .id(&format!("{TEACHER_PREFIX}{label}"))
                    .expect("teacher view holds every entity");
                (t, s)
            })
            .collect();
        alignment_order.shuffle(&mut rng);
        Ok(Self {
            ground_truth,
            teacher,
            target,
            splits,
            alignment_order,
        })
    }

    /// Aligns the first `⌈ratio·|E_target|⌉` target entities of the fixed
    /// alignment order.
    pub fn alignment(&self, ratio: f64) -> Result<AlignmentSet> {
        check_ratio(ratio)?;
        let count = (ratio * self.alignment_order.len() as f64 - 1e-9).ceil() as usize;
        AlignmentSet::new(
            self.alignment_order[..count.max(1)].iter().copied(),
            self.teacher.num_entities(),
            self.target.num_entities(),
        )
    }

    /// Writes teacher triplets, target splits and one alignment file per
    /// ratio (`teacher label<TAB>target label`).
    pub fn write(&self, dir: &Path, ratios: &[f64]) -> Result<SynthFiles> {
        for &r in ratios {
            check_ratio(r)?;
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SynthFiles {
            teacher: dir.join("teacher.tsv"),
            train: dir.join("target_train.tsv"),
            valid: dir.join("target_valid.tsv"),
            test: dir.join("target_test.tsv"),
            alignments: ratios
                .iter()
                .map(|r| (*r, dir.join(format!("align_{r}.tsv"))))
                .collect(),
        };
        self.teacher.export(&files.teacher)?;
        self.target
            .write_triplets(&files.train, &self.splits.train)?;
        self.target
            .write_triplets(&files.valid, &self.splits.valid)?;
        self.target.write_triplets(&files.test, &self.splits.test)?;
        for (ratio, path) in &files.alignments {
            let set = self.alignment(*ratio)?;
            let mut text = String::new();
            for &(t, s) in set.pairs() {
                text.push_str(self.teacher.entities.labels()[t].as_str());
                text.push('\t');
                text.push_str(self.target.entities.labels()[s].as_str());
                text.push('\n');
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
        }
        Ok(files)
    }
}
