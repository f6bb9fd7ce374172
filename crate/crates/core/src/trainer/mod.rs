//! The outer training loop.
//!
//! Each outer step runs, per teacher, `t_d` discriminator updates and `t_g`
//! generator updates, then a single embedding update on one batch of target
//! triplets. The embedding update combines the negative-sampling loss with the
//! annealed, consistency-weighted distance and transferred-triplet constraints
//! summed over teachers.

mod config;
mod joint;
mod schedule;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use config::{FakePool, Mode, TrainingConfig};
pub use joint::merge_teachers;
pub use schedule::{anneal_weight, warmup_lr};

use crate::adversarial::{
    consistency_weights, discriminator_loss, generator_loss, sample_noise, Discriminator, Generator,
};
use crate::embedding::{embedding_loss, sample_negative_batch};
use crate::error::{Error, Result};
use crate::eval::{Evaluator, RankingMetrics};
use crate::graph::{
    AlignmentSet, FilterIndex, KnowledgeGraph, SplitDataset, TeacherEmbeddings, Triplet,
};
use crate::nn::NetGrads;
use crate::nn::{Adam, AdamConfig, RowAdam};
use crate::rng::{stream, Rng, Stream};
use crate::scoring::{EmbeddingTable, Scorer};
use crate::transfer::{
    distance_constraint, expand_transferred, triplet_constraint, TransitionNetwork,
};

/// Batch sizing target when `n_l` is not set.
pub const STEPS_PER_EPOCH: usize = 100;

/// One teacher as supplied by the caller.
#[derive(Debug, Clone)]
pub struct TeacherInput {
    /// Frozen entity embeddings, rows in the alignment's teacher id order.
    pub embeddings: Option<TeacherEmbeddings>,
    pub alignment: AlignmentSet,
    /// Teacher triplets; only joint mode reads them.
    pub graph: Option<KnowledgeGraph>,
}

/// Per-teacher networks, optimizers and random streams.
#[derive(Debug, Clone)]
pub struct TeacherContext {
    pub embeddings: TeacherEmbeddings,
    pub alignment: AlignmentSet,
    pub transition: TransitionNetwork,
    pub generator: Generator,
    pub discriminator: Discriminator,
    /// Discriminator tensors followed by transition tensors.
    adversarial_opt: Adam,
    generator_opt: Adam,
    /// Transition tensors, updated in the embedding phase.
    transition_opt: Adam,
    adversarial_rng: Rng,
    alignment_rng: Rng,
}

impl TeacherContext {
    fn new(
        index: usize,
        input: TeacherInput,
        config: &TrainingConfig,
        num_target: usize,
    ) -> Result<Self> {
        let embeddings = input
            .embeddings
            .ok_or_else(|| Error::Config(format!("teacher {index} has no embeddings")))?;
        if input.alignment.is_empty() {
            return Err(Error::Alignment(format!(
                "teacher {index} has an empty alignment"
            )));
        }
        if let Some(dim) = config.teacher_dim {
            if dim != embeddings.dim() {
                return Err(Error::Config(format!(
                    "teacher {index} embeddings have dim {}, config teacher_dim is {dim}",
                    embeddings.dim()
                )));
            }
        }
        for &(t, s) in input.alignment.pairs() {
            if t >= embeddings.rows() || s >= num_target {
                return Err(Error::Alignment(format!(
                    "teacher {index} pair ({t}, {s}) is out of range"
                )));
            }
        }
        let mut rng = stream(config.seed, Stream::TeacherInit(index));
        let slope = config.leaky_slope;
        let transition = TransitionNetwork::new(
            embeddings.dim(),
            config.dim,
            config.transition_activation.then_some(slope),
            &mut rng,
        );
        let generator = Generator::new(config.dim, slope, &mut rng);
        let discriminator = Discriminator::new(config.dim, slope, &mut rng);

        let adam = AdamConfig::default();
        let mut names = discriminator.net.tensor_names("discriminator");
        names.extend(transition.net.tensor_names("transition"));
        let mut sizes = discriminator.net.tensor_sizes();
        sizes.extend(transition.net.tensor_sizes());
        let adversarial_opt = Adam::new(names, &sizes, adam);
        let generator_opt = Adam::new(
            generator.net.tensor_names("generator"),
            &generator.net.tensor_sizes(),
            adam,
        );
        let transition_opt = Adam::new(
            transition.net.tensor_names("transition"),
            &transition.net.tensor_sizes(),
            adam,
        );
        Ok(Self {
            embeddings,
            alignment: input.alignment,
            transition,
            generator,
            discriminator,
            adversarial_opt,
            generator_opt,
            transition_opt,
            adversarial_rng: stream(config.seed, Stream::Adversarial(index)),
            alignment_rng: stream(config.seed, Stream::Alignment(index)),
        })
    }

    fn sample_pair(&mut self) -> (usize, usize) {
        let pairs = self.alignment.pairs();
        pairs[self.adversarial_rng.random_range(0..pairs.len())]
    }

    fn discriminator_update(
        &mut self,
        table: &EmbeddingTable,
        config: &TrainingConfig,
        lr: f64,
    ) -> Result<f64> {
        let mut real_ids = Vec::with_capacity(config.n_a);
        let mut fakes = Vec::with_capacity(config.n_a);
        for _ in 0..config.n_a {
            let (t, s) = self.sample_pair();
            real_ids.push((t, s));
            let cond = match config.fake_pool {
                FakePool::Aligned => s,
                FakePool::All => self.adversarial_rng.random_range(0..table.num_entities),
            };
            let z = sample_noise(table.dim, &mut self.adversarial_rng);
            fakes.push((cond, self.generator.generate(table.entity(cond), &z)?));
        }
        let real: Vec<(&[f64], &[f64])> = real_ids
            .iter()
            .map(|&(t, s)| (table.entity(s), self.embeddings.row(t)))
            .collect();
        let fake: Vec<(&[f64], &[f64])> = fakes
            .iter()
            .map(|(c, v)| (table.entity(*c), v.as_slice()))
            .collect();
        let out = discriminator_loss(&self.discriminator, &self.transition, &real, &fake)?;
        let w_grads = out
            .transition_grads
            .unwrap_or_else(|| self.transition.net.zero_grads());
        let mut grads = out.discriminator_grads.tensors();
        grads.extend(w_grads.tensors());
        let mut params = self.discriminator.net.tensors_mut();
        params.extend(self.transition.net.tensors_mut());
        self.adversarial_opt.step(&mut params, &grads, lr)?;
        Ok(out.loss)
    }

    fn generator_update(
        &mut self,
        table: &EmbeddingTable,
        config: &TrainingConfig,
        lr: f64,
    ) -> Result<f64> {
        let mut targets = Vec::with_capacity(config.n_a);
        let mut noises = Vec::with_capacity(config.n_a);
        for _ in 0..config.n_a {
            let s = match config.fake_pool {
                FakePool::Aligned => self.sample_pair().1,
                FakePool::All => self.adversarial_rng.random_range(0..table.num_entities),
            };
            targets.push(table.entity(s));
            noises.push(sample_noise(table.dim, &mut self.adversarial_rng));
        }
        let (loss, grads) = generator_loss(
            &self.generator,
            &self.discriminator,
            &targets,
            &noises,
            config.lambda_g,
        )?;
        self.generator_opt
            .step(&mut self.generator.net.tensors_mut(), &grads.tensors(), lr)?;
        Ok(loss)
    }

    /// Constraint weights for `(teacher, target)` pairs.
    fn weights(
        &self,
        table: &EmbeddingTable,
        pairs: &[(usize, usize)],
        constant: Option<f64>,
    ) -> Result<Vec<f64>> {
        if let Some(c) = constant {
            return Ok(vec![c; pairs.len()]);
        }
        let vectors: Vec<(&[f64], &[f64])> = pairs
            .iter()
            .map(|&(t, s)| (self.embeddings.row(t), table.entity(s)))
            .collect();
        consistency_weights(&self.discriminator, &self.transition, &vectors)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub loss_e: f64,
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
    pub alpha_t: f64,
    pub beta_t: f64,
    pub lr_t: f64,
    pub mean_consistency_weight: Option<f64>,
    pub wall_ms: u64,
}

/// A validation evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub step: usize,
    pub metrics: RankingMetrics,
    pub selection_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingPhase {
    pub loss_e: f64,
    /// Annealed constraint terms summed over teachers.
    pub constraint_loss: f64,
    pub mean_weight: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best validation snapshot (final table without validation data),
    /// restricted to the target vocabulary.
    pub table: EmbeddingTable,
    pub final_table: EmbeddingTable,
    pub log: Vec<StepRecord>,
    pub evaluations: Vec<CheckpointRecord>,
    pub best: Option<CheckpointRecord>,
    pub total_steps: usize,
    pub steps_per_epoch: usize,
}

pub struct Trainer {
    config: TrainingConfig,
    mode: Mode,
    scorer: Scorer,
    table: EmbeddingTable,
    entity_opt: RowAdam,
    relation_opt: RowAdam,
    train: Vec<Triplet>,
    valid: Vec<Triplet>,
    filter: FilterIndex,
    target_entities: usize,
    target_relations: usize,
    teachers: Vec<TeacherContext>,
    shuffle_rng: Rng,
    negative_rng: Rng,
    order: Vec<usize>,
    cursor: usize,
    batch_size: usize,
    steps_per_epoch: usize,
    total_steps: usize,
    eval_every: usize,
    step: usize,
    log: Vec<StepRecord>,
    evaluations: Vec<CheckpointRecord>,
    best: Option<(CheckpointRecord, EmbeddingTable)>,
    started: Instant,
}

impl Trainer {
    pub fn new(
        config: TrainingConfig,
        target: &KnowledgeGraph,
        splits: &SplitDataset,
        teachers: Vec<TeacherInput>,
    ) -> Result<Self> {
        config.validate()?;
        let target_entities = target.num_entities();
        let target_relations = target.num_relations();
        let filter = FilterIndex::build(splits);

        let mut mode = config.mode;
        if matches!(mode, Mode::Atransn | Mode::Ctranse) && teachers.is_empty() {
            log::info!("no teachers given, training in plain mode");
            mode = Mode::Plain;
        }
        let (num_entities, num_relations, train) = if mode == Mode::Joint {
            if teachers.is_empty() || teachers.iter().any(|t| t.graph.is_none()) {
                return Err(Error::Config(
                    "joint mode needs teacher triplets for every teacher".into(),
                ));
            }
            let refs: Vec<(&KnowledgeGraph, &AlignmentSet)> = teachers
                .iter()
                .map(|t| (t.graph.as_ref().expect("checked above"), &t.alignment))
                .collect();
            let (merged, merged_splits) = merge_teachers(target, splits, &refs);
            (
                merged.num_entities(),
                merged.num_relations(),
                merged_splits.train,
            )
        } else {
            (target_entities, target_relations, splits.train.clone())
        };
        if train.is_empty() {
            return Err(Error::Data("training split is empty".into()));
        }

        let mut table = EmbeddingTable::init_uniform(
            config.kind,
            num_entities,
            num_relations,
            config.dim,
            config.gamma,
            config.epsilon,
            &mut stream(config.seed, Stream::EmbeddingInit),
        )?;
        table.project_constraints();

        let contexts = if matches!(mode, Mode::Atransn | Mode::Ctranse) {
            teachers
                .into_iter()
                .enumerate()
                .map(|(i, t)| TeacherContext::new(i, t, &config, target_entities))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };

        let batch_size = config
            .n_l
            .unwrap_or_else(|| train.len().div_ceil(STEPS_PER_EPOCH))
            .max(1);
        let steps_per_epoch = train.len().div_ceil(batch_size);
        let total_steps = config.t_l.unwrap_or(config.epochs_max * steps_per_epoch);
        let eval_every = config.eval_every.unwrap_or(steps_per_epoch);
        Ok(Self {
            scorer: Scorer::with_norm(config.kind, config.norm()),
            mode,
            table,
            entity_opt: RowAdam::new(AdamConfig::default()),
            relation_opt: RowAdam::new(AdamConfig::default()),
            order: (0..train.len()).collect(),
            cursor: train.len(),
            train,
            valid: splits.valid.clone(),
            filter,
            target_entities,
            target_relations,
            teachers: contexts,
            shuffle_rng: stream(config.seed, Stream::Shuffle),
            negative_rng: stream(config.seed, Stream::Negatives),
            batch_size,
            steps_per_epoch,
            total_steps,
            eval_every,
            step: 0,
            log: Vec::new(),
            evaluations: Vec::new(),
            best: None,
            started: Instant::now(),
            config,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    /// The mode actually trained (ATransN without teachers runs plain).
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn teachers(&self) -> &[TeacherContext] {
        &self.teachers
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.steps_per_epoch
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    fn next_batch(&mut self) -> Vec<Triplet> {
        if self.cursor >= self.order.len() {
            self.order.shuffle(&mut self.shuffle_rng);
            self.cursor = 0;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = self.order[self.cursor..end]
            .iter()
            .map(|&i| self.train[i])
            .collect();
        self.cursor = end;
        batch
    }

    fn constant_weight(&self) -> Option<f64> {
        match self.mode {
            Mode::Ctranse => Some(self.config.constant_weight.unwrap_or(1.0)),
            _ => self.config.constant_weight,
        }
    }

    /// `t_d` discriminator updates for one teacher; returns their mean loss.
    /// Touches only that teacher's discriminator and transition network.
    pub fn discriminator_phase(&mut self, teacher: usize, lr: f64) -> Result<Option<f64>> {
        let (table, config) = (&self.table, &self.config);
        let ctx = self
            .teachers
            .get_mut(teacher)
            .ok_or_else(|| Error::Usage(format!("no teacher {teacher}")))?;
        let mut total = None;
        for _ in 0..config.t_d {
            let loss = ctx.discriminator_update(table, config, lr)?;
            *total.get_or_insert(0.0) += loss / config.t_d as f64;
        }
        Ok(total)
    }

    /// `t_g` generator updates for one teacher; returns their mean loss.
    pub fn generator_phase(&mut self, teacher: usize, lr: f64) -> Result<Option<f64>> {
        let (table, config) = (&self.table, &self.config);
        let ctx = self
            .teachers
            .get_mut(teacher)
            .ok_or_else(|| Error::Usage(format!("no teacher {teacher}")))?;
        let mut total = None;
        for _ in 0..config.t_g {
            let loss = ctx.generator_update(table, config, lr)?;
            *total.get_or_insert(0.0) += loss / config.t_g as f64;
        }
        Ok(total)
    }

    /// One embedding update on the next batch. Changes embedding rows and the
    /// transition networks, never a generator or discriminator.
    pub fn embedding_phase(&mut self, lr: f64, alpha: f64, beta: f64) -> Result<EmbeddingPhase> {
        let batch = self.next_batch();
        let negatives = sample_negative_batch(
            &batch,
            self.config.k,
            self.table.num_entities,
            &mut self.negative_rng,
        );
        let base = embedding_loss(
            &self.scorer,
            &self.table,
            &batch,
            &negatives,
            self.config.gamma,
        )?;
        let mut entity_grads = base.entity_grads;
        let mut relation_grads = base.relation_grads;
        let mut constraint_loss = 0.0;
        let (mut weight_sum, mut weight_count) = (0.0, 0usize);
        let mut transition_grads: Vec<Option<NetGrads>> = Vec::with_capacity(self.teachers.len());
        let constant = self.constant_weight();

        for ctx in &mut self.teachers {
            let mut w_grads: Option<NetGrads> = None;
            if alpha != 0.0 {
                let pairs: Vec<(usize, usize)> = if self.config.full_alignment {
                    ctx.alignment.pairs().to_vec()
                } else {
                    let all = ctx.alignment.pairs();
                    (0..self.config.n_a)
                        .map(|_| all[ctx.alignment_rng.random_range(0..all.len())])
                        .collect()
                };
                let weights = ctx.weights(&self.table, &pairs, constant)?;
                weight_sum += weights.iter().sum::<f64>();
                weight_count += weights.len();
                let out = distance_constraint(
                    &ctx.transition,
                    &ctx.embeddings,
                    &self.table,
                    &pairs,
                    &weights,
                )?;
                constraint_loss += alpha * out.loss;
                entity_grads.merge(&out.entity_grads, alpha);
                relation_grads.merge(&out.relation_grads, alpha);
                w_grads
                    .get_or_insert_with(|| ctx.transition.net.zero_grads())
                    .add_scaled(&out.transition_grads, alpha);
            }
            if beta != 0.0 {
                let transferred = expand_transferred(
                    &batch,
                    &ctx.alignment,
                    self.config.transfer_cap,
                    &mut ctx.alignment_rng,
                );
                let pairs: Vec<(usize, usize)> = transferred
                    .iter()
                    .map(|t| (t.teacher, t.replaced()))
                    .collect();
                let weights = ctx.weights(&self.table, &pairs, constant)?;
                weight_sum += weights.iter().sum::<f64>();
                weight_count += weights.len();
                let out = triplet_constraint(
                    &ctx.transition,
                    &ctx.embeddings,
                    &self.table,
                    &self.scorer,
                    &transferred,
                    &weights,
                    self.config.gamma,
                )?;
                constraint_loss += beta * out.loss;
                entity_grads.merge(&out.entity_grads, beta);
                relation_grads.merge(&out.relation_grads, beta);
                w_grads
                    .get_or_insert_with(|| ctx.transition.net.zero_grads())
                    .add_scaled(&out.transition_grads, beta);
            }
            transition_grads.push(w_grads);
        }

        if !(base.loss + constraint_loss).is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss (embedding {}, constraints {constraint_loss})",
                base.loss
            )));
        }
        for (ctx, grads) in self.teachers.iter_mut().zip(&transition_grads) {
            if let Some(g) = grads {
                ctx.transition_opt
                    .step(&mut ctx.transition.net.tensors_mut(), &g.tensors(), lr)?;
            }
        }
        let (dim, relation_dim) = (self.table.dim, self.table.relation_dim);
        self.entity_opt.step(
            "entity",
            &mut self.table.entities,
            dim,
            entity_grads.iter(),
            lr,
        )?;
        self.relation_opt.step(
            "relation",
            &mut self.table.relations,
            relation_dim,
            relation_grads.iter(),
            lr,
        )?;
        self.table
            .project_rows(&entity_grads.row_ids(), &relation_grads.row_ids());

        Ok(EmbeddingPhase {
            loss_e: base.loss,
            constraint_loss,
            mean_weight: (weight_count > 0).then(|| weight_sum / weight_count as f64),
        })
    }

    /// Runs one outer step and, when due, a validation evaluation.
    pub fn step(&mut self) -> Result<StepRecord> {
        let s = self.step;
        self.outer_step(s).map_err(|e| match e {
            Error::Training(msg) => Error::Training(format!("step {}: {msg}", s + 1)),
            other => other,
        })
    }

    fn outer_step(&mut self, s: usize) -> Result<StepRecord> {
        let c = &self.config;
        let total = self.total_steps;
        let lr_e = warmup_lr(s + 1, total, c.lr_e, c.warmup_fraction);
        let lr_a = warmup_lr(s + 1, total, c.lr_a, c.warmup_fraction);
        let alpha = anneal_weight(s, total, c.alpha, c.anneal_cycles);
        let beta = anneal_weight(s, total, c.beta, c.anneal_cycles);

        let (mut loss_d, mut loss_g) = (None, None);
        if self.mode == Mode::Atransn {
            let n = self.teachers.len() as f64;
            for i in 0..self.teachers.len() {
                if let Some(l) = self.discriminator_phase(i, lr_a)? {
                    *loss_d.get_or_insert(0.0) += l / n;
                }
                if let Some(l) = self.generator_phase(i, lr_a)? {
                    *loss_g.get_or_insert(0.0) += l / n;
                }
            }
        }
        for (name, v) in [("discriminator", loss_d), ("generator", loss_g)] {
            if v.is_some_and(|v: f64| !v.is_finite()) {
                return Err(Error::Training(format!("non-finite {name} loss")));
            }
        }
        let phase = self.embedding_phase(lr_e, alpha, beta)?;
        self.step += 1;
        let record = StepRecord {
            step: self.step,
            epoch: s / self.steps_per_epoch + 1,
            loss_e: phase.loss_e,
            loss_d,
            loss_g,
            alpha_t: alpha,
            beta_t: beta,
            lr_t: lr_e,
            mean_consistency_weight: phase.mean_weight,
            wall_ms: if self.config.log_wall_clock {
                self.started.elapsed().as_millis() as u64
            } else {
                0
            },
        };
        self.log.push(record.clone());
        if self.step.is_multiple_of(self.eval_every) || self.step == self.total_steps {
            self.validate()?;
        }
        Ok(record)
    }

    /// Filtered validation metrics of the current table, ranked over target
    /// entities only. `None` without validation triplets.
    pub fn validation_metrics(&self) -> Result<Option<RankingMetrics>> {
        if self.valid.is_empty() {
            return Ok(None);
        }
        Evaluator::new(self.scorer, &self.filter)
            .with_ties(self.config.tie_policy)
            .with_candidates(self.target_entities)
            .evaluate(&self.table, &self.valid)
            .map(Some)
    }

    fn validate(&mut self) -> Result<()> {
        let Some(metrics) = self.validation_metrics()? else {
            return Ok(());
        };
        let record = CheckpointRecord {
            step: self.step,
            selection_score: metrics.selection_score(),
            metrics,
        };
        log::info!(
            "step {}: valid MRR {:.4} MR {:.1} selection {:.4}",
            record.step,
            metrics.mrr,
            metrics.mr,
            record.selection_score
        );
        let improved = self
            .best
            .as_ref()
            .is_none_or(|(b, _)| record.selection_score > b.selection_score);
        if improved {
            self.best = Some((record.clone(), self.table.clone()));
        }
        self.evaluations.push(record);
        Ok(())
    }

    pub fn run(mut self) -> Result<TrainOutcome> {
        while self.step < self.total_steps {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> TrainOutcome {
        let (e, r) = (self.target_entities, self.target_relations);
        let final_table = self.table.truncated(e, r);
        let (best, table) = match self.best {
            Some((record, table)) => (Some(record), table.truncated(e, r)),
            None => (None, final_table.clone()),
        };
        TrainOutcome {
            table,
            final_table,
            log: self.log,
            evaluations: self.evaluations,
            best,
            total_steps: self.total_steps,
            steps_per_epoch: self.steps_per_epoch,
        }
    }
}

/// Builds a trainer and runs it to completion.
pub fn train(
    config: TrainingConfig,
    target: &KnowledgeGraph,
    splits: &SplitDataset,
    teachers: Vec<TeacherInput>,
) -> Result<TrainOutcome> {
    Trainer::new(config, target, splits, teachers)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> (KnowledgeGraph, SplitDataset) {
        let labels: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
        let rows: Vec<(&str, &str, &str)> = (0..n)
            .flat_map(|i| {
                [
                    (labels[i].as_str(), "next", labels[(i + 1) % n].as_str()),
                    (labels[i].as_str(), "skip", labels[(i + 2) % n].as_str()),
                ]
            })
            .collect();
        let g = KnowledgeGraph::from_labels(rows);
        let s = SplitDataset::split(&g, [0.8, 0.1, 0.1], 1).unwrap();
        (g, s)
    }

    fn small_config() -> TrainingConfig {
        TrainingConfig {
            dim: 8,
            k: 4,
            n_l: Some(8),
            n_a: 4,
            t_l: Some(12),
            t_d: 1,
            t_g: 1,
            log_wall_clock: false,
            ..TrainingConfig::default()
        }
    }

    fn identity_teacher(n: usize, dim: usize) -> TeacherInput {
        let values: Vec<f64> = (0..n * dim)
            .map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5)
            .collect();
        TeacherInput {
            embeddings: Some(TeacherEmbeddings::new(n, dim, values).unwrap()),
            alignment: AlignmentSet::new((0..n / 2).map(|i| (i, i)), n, n).unwrap(),
            graph: None,
        }
    }

    #[test]
    fn batch_sizing_and_step_count() {
        let (g, s) = ring(30);
        let c = TrainingConfig {
            n_l: None,
            t_l: None,
            epochs_max: 2,
            ..small_config()
        };
        let t = Trainer::new(c, &g, &s, vec![]).unwrap();
        // 48 training triplets, about 100 steps per epoch means batches of 1.
        assert_eq!(t.batch_size(), 1);
        assert_eq!(t.steps_per_epoch(), 48);
        assert_eq!(t.total_steps(), 96);
    }

    #[test]
    fn atransn_without_teachers_runs_plain() {
        let (g, s) = ring(20);
        let t = Trainer::new(small_config(), &g, &s, vec![]).unwrap();
        assert_eq!(t.mode(), Mode::Plain);
    }

    #[test]
    fn empty_alignment_is_an_alignment_error() {
        let (g, s) = ring(20);
        let mut teacher = identity_teacher(20, 4);
        teacher.alignment = AlignmentSet::new([], 20, 20).unwrap();
        let err = Trainer::new(small_config(), &g, &s, vec![teacher])
            .err()
            .unwrap();
        assert!(matches!(err, Error::Alignment(_)), "{err}");
    }

    #[test]
    fn joint_without_teacher_triplets_is_rejected() {
        let (g, s) = ring(20);
        let c = TrainingConfig {
            mode: Mode::Joint,
            ..small_config()
        };
        assert!(matches!(
            Trainer::new(c, &g, &s, vec![identity_teacher(20, 4)]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn log_has_one_record_per_step_within_envelope() {
        let (g, s) = ring(20);
        let out = train(small_config(), &g, &s, vec![identity_teacher(20, 4)]).unwrap();
        assert_eq!(out.log.len(), 12);
        for (i, r) in out.log.iter().enumerate() {
            assert_eq!(r.step, i + 1);
            assert!(r.alpha_t >= 0.0 && r.alpha_t <= 30.0);
            assert!(r.beta_t >= 0.0 && r.beta_t <= 0.1);
            assert!(r.lr_t >= 0.0 && r.lr_t <= 1e-3);
            assert!(r.loss_d.is_some() && r.loss_g.is_some());
            assert_eq!(r.wall_ms, 0);
        }
        assert_eq!(out.log[0].alpha_t, 0.0);
        assert!(out.best.is_some());
        assert_eq!(out.table.num_entities, g.num_entities());
    }

    #[test]
    fn embedding_phase_leaves_adversarial_networks_alone() {
        let (g, s) = ring(20);
        let mut t = Trainer::new(small_config(), &g, &s, vec![identity_teacher(20, 4)]).unwrap();
        let d = t.teachers()[0].discriminator.clone();
        let gen = t.teachers()[0].generator.clone();
        let w = t.teachers()[0].transition.clone();
        t.embedding_phase(1e-2, 1.0, 1.0).unwrap();
        assert_eq!(t.teachers()[0].discriminator, d);
        assert_eq!(t.teachers()[0].generator, gen);
        assert_ne!(t.teachers()[0].transition, w);
    }

    #[test]
    fn joint_mode_restricts_output_to_target() {
        let (g, s) = ring(20);
        let teacher_graph = KnowledgeGraph::from_labels([("x", "p", "y"), ("y", "p", "z")]);
        let teacher = TeacherInput {
            embeddings: None,
            alignment: AlignmentSet::new([(0, 0), (1, 1)], 3, 20).unwrap(),
            graph: Some(teacher_graph),
        };
        let c = TrainingConfig {
            mode: Mode::Joint,
            ..small_config()
        };
        let out = train(c, &g, &s, vec![teacher]).unwrap();
        assert_eq!(out.table.num_entities, 20);
        assert_eq!(out.table.num_relations, 2);
        assert!(out.log.iter().all(|r| r.loss_d.is_none()));
    }
}
