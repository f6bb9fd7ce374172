//! Knowledge graphs, splits, alignments, teacher embedding dumps and the
//! filter index used for filtered ranking.
//!
//! Triplet files are UTF-8 with one `head<TAB>relation<TAB>tail` per line,
//! alignment files carry `teacher_label<TAB>target_label`. Blank lines and lines
//! starting with `#` are ignored in both.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::all_finite;
use crate::rng::{self, Stream};

/// Bidirectional label ↔ dense id map. Ids are assigned in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(labels: Vec<String>) -> Self {
        let mut vocab = Vocab::default();
        for label in labels {
            vocab.insert(&label);
        }
        vocab
    }
}

impl From<Vocab> for Vec<String> {
    fn from(vocab: Vocab) -> Self {
        vocab.labels
    }
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `label`, assigning the next free id if it is new.
    pub fn insert(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triplet {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// How a loader treats labels missing from the vocabularies it was given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabPolicy {
    /// Unknown labels get fresh ids.
    Extend,
    /// Unknown labels are a vocabulary error.
    Frozen,
}

/// Counters reported by the file loaders.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub duplicates: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    pub entities: Vocab,
    pub relations: Vocab,
    pub triplets: Vec<Triplet>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Yields `(line_number, content)` for every non-blank, non-comment line.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push((i + 1, line.to_owned()));
    }
    Ok(out)
}

impl KnowledgeGraph {
    /// Loads a triplet file, building fresh vocabularies.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, LoadReport)> {
        Self::load_with(path, Vocab::new(), Vocab::new(), VocabPolicy::Extend)
    }

    /// Loads a triplet file on top of existing vocabularies.
    pub fn load_with(
        path: impl AsRef<Path>,
        entities: Vocab,
        relations: Vocab,
        policy: VocabPolicy,
    ) -> Result<(Self, LoadReport)> {
        let path = path.as_ref();
        let mut graph = KnowledgeGraph {
            entities,
            relations,
            triplets: Vec::new(),
        };
        let mut seen = HashSet::new();
        let mut report = LoadReport::default();
        for (line_no, line) in data_lines(path)? {
            report.lines += 1;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let triplet = graph.intern(fields[0], fields[1], fields[2], policy, path, line_no)?;
            if seen.insert(triplet) {
                graph.triplets.push(triplet);
            } else {
                report.duplicates += 1;
            }
        }
        if report.duplicates > 0 {
            log::warn!(
                "{}: dropped {} duplicate triplet(s)",
                path.display(),
                report.duplicates
            );
        }
        Ok((graph, report))
    }

    fn intern(
        &mut self,
        head: &str,
        relation: &str,
        tail: &str,
        policy: VocabPolicy,
        path: &Path,
        line: usize,
    ) -> Result<Triplet> {
        let lookup = |vocab: &mut Vocab, label: &str, what: &str| match policy {
            VocabPolicy::Extend => Ok(vocab.insert(label)),
            VocabPolicy::Frozen => vocab.id(label).ok_or_else(|| {
                Error::Vocabulary(format!(
                    "{}:{}: unknown {} '{}'",
                    path.display(),
                    line,
                    what,
                    label
                ))
            }),
        };
        let h = lookup(&mut self.entities, head, "entity")?;
        let r = lookup(&mut self.relations, relation, "relation")?;
        let t = lookup(&mut self.entities, tail, "entity")?;
        Ok(Triplet::new(h, r, t))
    }

    /// Builds a graph from in-memory label triplets (duplicates dropped).
    pub fn from_labels<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Self {
        let mut graph = KnowledgeGraph::default();
        let mut seen = HashSet::new();
        for (h, r, t) in rows {
            let triplet = Triplet::new(
                graph.entities.insert(h),
                graph.relations.insert(r),
                graph.entities.insert(t),
            );
            if seen.insert(triplet) {
                graph.triplets.push(triplet);
            }
        }
        graph
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn label_triplet(&self, t: &Triplet) -> (&str, &str, &str) {
        (
            self.entities.label(t.head).unwrap_or_default(),
            self.relations.label(t.relation).unwrap_or_default(),
            self.entities.label(t.tail).unwrap_or_default(),
        )
    }

    /// Writes `triplets` (ids into this graph's vocabularies) as a TSV file.
    pub fn write_triplets(&self, path: impl AsRef<Path>, triplets: &[Triplet]) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        for t in triplets {
            let (h, r, tl) = self.label_triplet(t);
            writeln!(out, "{h}\t{r}\t{tl}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_triplets(path, &self.triplets)
    }

    /// Checks the structural invariants: ids in range and no duplicates.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for t in &self.triplets {
            if t.head >= self.num_entities()
                || t.tail >= self.num_entities()
                || t.relation >= self.num_relations()
            {
                return Err(Error::Data(format!(
                    "triplet {t:?} references an unknown id"
                )));
            }
            if !seen.insert(*t) {
                return Err(Error::Data(format!("duplicate triplet {t:?}")));
            }
        }
        Ok(())
    }
}

/// Train / validation / test partition of a graph's triplets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub train: Vec<Triplet>,
    pub valid: Vec<Triplet>,
    pub test: Vec<Triplet>,
    /// `None` when the parts were read from pre-split files.
    pub seed: Option<u64>,
}

impl SplitDataset {
    /// Uniform random split. Validation and test sizes are floored, the
    /// remainder goes to training.
    pub fn split(graph: &KnowledgeGraph, ratios: [f64; 3], seed: u64) -> Result<Self> {
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|r| *r < 0.0) {
            return Err(Error::Config(format!(
                "split ratios {ratios:?} must be non-negative and sum to 1"
            )));
        }
        let n = graph.triplets.len();
        if n < 3 {
            return Err(Error::Data(format!(
                "cannot split {n} triplet(s); at least 3 are required"
            )));
        }
        let n_valid = (ratios[1] * n as f64 + 1e-9).floor() as usize;
        let n_test = (ratios[2] * n as f64 + 1e-9).floor() as usize;
        let mut shuffled = graph.triplets.clone();
        shuffled.shuffle(&mut rng::stream(seed, Stream::Split));
        let test = shuffled.split_off(n - n_test);
        let valid = shuffled.split_off(n - n_test - n_valid);
        Ok(Self {
            train: shuffled,
            valid,
            test,
            seed: Some(seed),
        })
    }

    /// Loads pre-split files into one graph with shared vocabularies. A triplet
    /// repeated in a later file is kept only in the first.
    pub fn load_files(
        train: impl AsRef<Path>,
        valid: impl AsRef<Path>,
        test: impl AsRef<Path>,
    ) -> Result<(KnowledgeGraph, Self)> {
        let (mut graph, _) = KnowledgeGraph::load(train)?;
        let train_part = graph.triplets.clone();
        let mut seen: HashSet<Triplet> = train_part.iter().copied().collect();
        let mut parts = Vec::new();
        for path in [valid.as_ref(), test.as_ref()] {
            let (g, _) = KnowledgeGraph::load_with(
                path,
                std::mem::take(&mut graph.entities),
                std::mem::take(&mut graph.relations),
                VocabPolicy::Extend,
            )?;
            graph.entities = g.entities;
            graph.relations = g.relations;
            let part: Vec<Triplet> = g.triplets.into_iter().filter(|t| seen.insert(*t)).collect();
            graph.triplets.extend_from_slice(&part);
            parts.push(part);
        }
        let test_part = parts.pop().unwrap_or_default();
        let valid_part = parts.pop().unwrap_or_default();
        Ok((
            graph,
            Self {
                train: train_part,
                valid: valid_part,
                test: test_part,
                seed: None,
            },
        ))
    }

    pub fn all(&self) -> impl Iterator<Item = &Triplet> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Aligned `(teacher_entity, target_entity)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSet {
    pairs: Vec<(usize, usize)>,
    by_target: Vec<Vec<usize>>,
}

impl AlignmentSet {
    /// Validates ids, drops repeated pairs and indexes by target entity.
    pub fn new(
        pairs: impl IntoIterator<Item = (usize, usize)>,
        num_teacher: usize,
        num_target: usize,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut by_target = vec![Vec::new(); num_target];
        for (teacher, target) in pairs {
            if teacher >= num_teacher || target >= num_target {
                return Err(Error::Alignment(format!(
                    "pair ({teacher}, {target}) out of range for vocabularies of size \
                     {num_teacher} and {num_target}"
                )));
            }
            if seen.insert((teacher, target)) {
                kept.push((teacher, target));
                by_target[target].push(teacher);
            }
        }
        Ok(Self {
            pairs: kept,
            by_target,
        })
    }

    /// Loads an alignment file. Pairs whose labels are unknown on either side
    /// are skipped and counted; an empty result is an error.
    pub fn load(
        path: impl AsRef<Path>,
        teacher: &Vocab,
        target: &Vocab,
    ) -> Result<(Self, LoadReport)> {
        let path = path.as_ref();
        let mut report = LoadReport::default();
        let mut pairs = Vec::new();
        for (line_no, line) in data_lines(path)? {
            report.lines += 1;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: line_no,
                    message: format!("expected 2 tab-separated fields, found {}", fields.len()),
                });
            }
            match (teacher.id(fields[0]), target.id(fields[1])) {
                (Some(a), Some(b)) => pairs.push((a, b)),
                _ => report.skipped += 1,
            }
        }
        if report.skipped > 0 {
            log::warn!(
                "{}: skipped {} alignment pair(s) with unknown labels",
                path.display(),
                report.skipped
            );
        }
        let set = Self::new(pairs, teacher.len(), target.len())?;
        if set.is_empty() {
            return Err(Error::Alignment(format!(
                "{}: no usable aligned pairs",
                path.display()
            )));
        }
        Ok((set, report))
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Teacher entities aligned to `target`.
    pub fn teachers_of(&self, target: usize) -> &[usize] {
        self.by_target.get(target).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of distinct target entities with at least one alignment.
    pub fn aligned_target_count(&self) -> usize {
        self.by_target.iter().filter(|v| !v.is_empty()).count()
    }

    pub fn alignment_ratio(&self) -> f64 {
        if self.by_target.is_empty() {
            0.0
        } else {
            self.aligned_target_count() as f64 / self.by_target.len() as f64
        }
    }
}

/// One section (entities or relations) of an embedding dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpSection {
    pub labels: Vec<String>,
    pub dim: usize,
    /// Row-major, `labels.len() * dim` values.
    pub values: Vec<f64>,
}

impl DumpSection {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Text embedding dump: an `ENT rows dim` header followed by
/// `label<TAB>v1 v2 ...` lines, optionally followed by a `REL rows dim` section.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDump {
    pub entities: DumpSection,
    pub relations: Option<DumpSection>,
}

impl EmbeddingDump {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = create(path)?;
        let mut emit = |tag: &str, section: &DumpSection| -> std::io::Result<()> {
            writeln!(out, "{tag} {} {}", section.labels.len(), section.dim)?;
            for (i, label) in section.labels.iter().enumerate() {
                let row: Vec<String> = section.row(i).iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{label}\t{}", row.join(" "))?;
            }
            Ok(())
        };
        emit("ENT", &self.entities).map_err(|e| Error::io(path, e))?;
        if let Some(rel) = &self.relations {
            emit("REL", rel).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let lines = data_lines(path)?;
        let mut iter = lines.into_iter().peekable();
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let mut sections: Vec<(String, DumpSection)> = Vec::new();
        while let Some((line_no, header)) = iter.next() {
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.len() != 3 || !(parts[0] == "ENT" || parts[0] == "REL") {
                return Err(parse_err(
                    line_no,
                    format!("expected section header 'ENT|REL rows dim', found '{header}'"),
                ));
            }
            let rows: usize = parts[1]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad row count '{}'", parts[1])))?;
            let dim: usize = parts[2]
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad dimension '{}'", parts[2])))?;
            let mut section = DumpSection {
                labels: Vec::with_capacity(rows),
                dim,
                values: Vec::with_capacity(rows * dim),
            };
            for _ in 0..rows {
                let (line_no, line) = iter.next().ok_or_else(|| {
                    parse_err(line_no, format!("{} section ended early", parts[0]))
                })?;
                let (label, vector) = line
                    .split_once('\t')
                    .ok_or_else(|| parse_err(line_no, "missing tab after label".into()))?;
                let before = section.values.len();
                for token in vector.split_whitespace() {
                    let v: f64 = token
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad number '{token}'")))?;
                    if !v.is_finite() {
                        return Err(Error::Data(format!(
                            "{}:{}: non-finite value for '{}'",
                            path.display(),
                            line_no,
                            label
                        )));
                    }
                    section.values.push(v);
                }
                if section.values.len() - before != dim {
                    return Err(parse_err(
                        line_no,
                        format!(
                            "'{}' has {} values, header says {}",
                            label,
                            section.values.len() - before,
                            dim
                        ),
                    ));
                }
                section.labels.push(label.to_owned());
            }
            sections.push((parts[0].to_owned(), section));
        }
        let mut entities = None;
        let mut relations = None;
        for (tag, section) in sections {
            let slot = if tag == "ENT" {
                &mut entities
            } else {
                &mut relations
            };
            if slot.replace(section).is_some() {
                return Err(Error::Load(format!(
                    "{}: repeated {tag} section",
                    path.display()
                )));
            }
        }
        let entities =
            entities.ok_or_else(|| Error::Load(format!("{}: no ENT section", path.display())))?;
        Ok(Self {
            entities,
            relations,
        })
    }
}

/// Frozen pre-trained entity embeddings of a teacher graph, rows in teacher
/// vocabulary order.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherEmbeddings {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl TeacherEmbeddings {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * dim {
            return Err(Error::shape("teacher embeddings", rows * dim, values.len()));
        }
        if !all_finite(&values) {
            return Err(Error::Data(
                "teacher embeddings contain non-finite values".into(),
            ));
        }
        Ok(Self { rows, dim, values })
    }

    /// Loads a dump and reorders its rows to match `vocab`.
    pub fn load(path: impl AsRef<Path>, vocab: &Vocab) -> Result<Self> {
        let dump = EmbeddingDump::read(path)?;
        Self::from_section(&dump.entities, vocab)
    }

    /// Loads a dump and takes the vocabulary from its own row order.
    pub fn load_standalone(path: impl AsRef<Path>) -> Result<(Vocab, Self)> {
        let dump = EmbeddingDump::read(path)?;
        let vocab = Vocab::from(dump.entities.labels.clone());
        let emb = Self::from_section(&dump.entities, &vocab)?;
        Ok((vocab, emb))
    }

    pub fn from_section(section: &DumpSection, vocab: &Vocab) -> Result<Self> {
        let by_label: HashMap<&str, usize> = section
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut values = Vec::with_capacity(vocab.len() * section.dim);
        for label in vocab.labels() {
            let row = by_label.get(label.as_str()).ok_or_else(|| {
                Error::Load(format!("embedding dump has no row for entity '{label}'"))
            })?;
            values.extend_from_slice(section.row(*row));
        }
        Self::new(vocab.len(), section.dim, values)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Known-true heads per `(relation, tail)` and tails per `(head, relation)`.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    heads: HashMap<(usize, usize), HashSet<usize>>,
    tails: HashMap<(usize, usize), HashSet<usize>>,
}

impl FilterIndex {
    pub fn build(splits: &SplitDataset) -> Self {
        Self::from_triplets(splits.all())
    }

    pub fn from_triplets<'a>(triplets: impl IntoIterator<Item = &'a Triplet>) -> Self {
        let mut index = Self::default();
        index.extend(triplets);
        index
    }

    pub fn extend<'a>(&mut self, triplets: impl IntoIterator<Item = &'a Triplet>) {
        for t in triplets {
            self.heads
                .entry((t.relation, t.tail))
                .or_default()
                .insert(t.head);
            self.tails
                .entry((t.head, t.relation))
                .or_default()
                .insert(t.tail);
        }
    }

    pub fn heads(&self, relation: usize, tail: usize) -> Option<&HashSet<usize>> {
        self.heads.get(&(relation, tail))
    }

    pub fn tails(&self, head: usize, relation: usize) -> Option<&HashSet<usize>> {
        self.tails.get(&(head, relation))
    }

    pub fn is_known_head(&self, relation: usize, tail: usize, head: usize) -> bool {
        self.heads(relation, tail)
            .is_some_and(|s| s.contains(&head))
    }

    pub fn is_known_tail(&self, head: usize, relation: usize, tail: usize) -> bool {
        self.tails(head, relation)
            .is_some_and(|s| s.contains(&tail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn load_counts_entities_relations_triplets() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "g.tsv", "a\tr\tb\nb\tr\tc\n");
        let (g, report) = KnowledgeGraph::load(&p).unwrap();
        assert_eq!(
            (g.num_entities(), g.num_relations(), g.triplets.len()),
            (3, 1, 2)
        );
        assert_eq!(report.duplicates, 0);
        assert_eq!(g.entities.labels(), ["a", "b", "c"]);
    }

    #[test]
    fn load_drops_duplicates_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "g.tsv", "# header\na\tr\tb\n\na\tr\tb\r\nb\tr\tc\n");
        let (g, report) = KnowledgeGraph::load(&p).unwrap();
        assert_eq!(g.triplets.len(), 2);
        assert_eq!(report.duplicates, 1);
        g.validate().unwrap();
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "g.tsv", "a\tr\tb\nbroken\tline\n");
        match KnowledgeGraph::load(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn frozen_vocab_rejects_unknown_entity() {
        let dir = tempfile::tempdir().unwrap();
        let base = write_file(&dir, "a.tsv", "a\tr\tb\n");
        let extra = write_file(&dir, "b.tsv", "a\tr\tz\n");
        let (g, _) = KnowledgeGraph::load(&base).unwrap();
        let err = KnowledgeGraph::load_with(&extra, g.entities, g.relations, VocabPolicy::Frozen)
            .unwrap_err();
        assert!(
            matches!(err, Error::Vocabulary(ref m) if m.contains("'z'")),
            "{err}"
        );
    }

    #[test]
    fn split_sizes_follow_floor_allocation() {
        let rows: Vec<(String, String, String)> = (0..10)
            .map(|i| (format!("e{i}"), "r".to_string(), format!("e{}", i + 1)))
            .collect();
        let g = KnowledgeGraph::from_labels(
            rows.iter()
                .map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())),
        );
        let s = SplitDataset::split(&g, [0.6, 0.2, 0.2], 3).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (6, 2, 2));
        assert_eq!(s, SplitDataset::split(&g, [0.6, 0.2, 0.2], 3).unwrap());
    }

    #[test]
    fn split_rejects_bad_ratios_and_tiny_graphs() {
        let g = KnowledgeGraph::from_labels([("a", "r", "b"), ("b", "r", "c"), ("c", "r", "a")]);
        assert!(matches!(
            SplitDataset::split(&g, [0.5, 0.2, 0.2], 1),
            Err(Error::Config(_))
        ));
        let tiny = KnowledgeGraph::from_labels([("a", "r", "b")]);
        assert!(SplitDataset::split(&tiny, [0.6, 0.2, 0.2], 1).is_err());
    }

    #[test]
    fn alignment_skips_unknown_labels_and_keeps_multi_alignment() {
        let dir = tempfile::tempdir().unwrap();
        let teacher = Vocab::from(vec!["x".to_string(), "y".to_string()]);
        let target = Vocab::from(vec!["a".to_string(), "b".to_string()]);
        let p = write_file(&dir, "al.tsv", "x\ta\ny\tb\nq\ta\n");
        let (al, report) = AlignmentSet::load(&p, &teacher, &target).unwrap();
        assert_eq!(al.len(), 2);
        assert_eq!(report.skipped, 1);

        let p = write_file(&dir, "multi.tsv", "x\ta\nx\tb\n");
        let (al, _) = AlignmentSet::load(&p, &teacher, &target).unwrap();
        assert_eq!(al.pairs(), &[(0, 0), (0, 1)]);
        assert_eq!(al.teachers_of(1), &[0]);
        assert_eq!(al.alignment_ratio(), 1.0);
    }

    #[test]
    fn empty_alignment_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let teacher = Vocab::from(vec!["x".to_string()]);
        let target = Vocab::from(vec!["a".to_string()]);
        let p = write_file(&dir, "al.tsv", "nope\ta\n");
        assert!(matches!(
            AlignmentSet::load(&p, &teacher, &target),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn teacher_dump_round_trips_bitwise_and_reorders() {
        let dir = tempfile::tempdir().unwrap();
        let dump = EmbeddingDump {
            entities: DumpSection {
                labels: vec!["b".into(), "a".into()],
                dim: 3,
                values: vec![0.1, -2.5e-17, 1.0 / 3.0, std::f64::consts::PI, 7.0, -0.0],
            },
            relations: None,
        };
        let p = dir.path().join("emb.txt");
        dump.write(&p).unwrap();
        assert_eq!(EmbeddingDump::read(&p).unwrap(), dump);

        let vocab = Vocab::from(vec!["a".to_string(), "b".to_string()]);
        let emb = TeacherEmbeddings::load(&p, &vocab).unwrap();
        assert_eq!(emb.row(0), dump.entities.row(1));
        assert_eq!(emb.row(1), dump.entities.row(0));
    }

    #[test]
    fn teacher_dump_missing_entity_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "emb.txt", "ENT 1 2\na\t1 2\n");
        let vocab = Vocab::from(vec!["a".to_string(), "ghost".to_string()]);
        let err = TeacherEmbeddings::load(&p, &vocab).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");
    }

    #[test]
    fn teacher_dump_rejects_non_finite() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_file(&dir, "emb.txt", "ENT 1 2\na\t1 NaN\n");
        assert!(matches!(EmbeddingDump::read(&p), Err(Error::Data(_))));
    }

    #[test]
    fn filter_index_direct_construction() {
        let f = FilterIndex::from_triplets(&[Triplet::new(0, 0, 1)]);
        assert_eq!(f.heads(0, 1).unwrap(), &HashSet::from([0]));
        assert_eq!(f.tails(0, 0).unwrap(), &HashSet::from([1]));

        let f = FilterIndex::from_triplets(&[Triplet::new(0, 0, 1), Triplet::new(0, 0, 2)]);
        assert_eq!(f.tails(0, 0).unwrap(), &HashSet::from([1, 2]));
    }
}
