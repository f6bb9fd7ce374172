//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the run
//! seed, so adding or removing one consumer never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split,
    EmbeddingInit,
    Shuffle,
    Negatives,
    Synth,
    /// Per-teacher network initialization.
    TeacherInit(usize),
    /// Per-teacher pair and noise sampling for the adversarial phases.
    Adversarial(usize),
    /// Per-teacher aligned-pair sampling inside the embedding phase.
    Alignment(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Split => 1,
            Stream::EmbeddingInit => 2,
            Stream::Shuffle => 3,
            Stream::Negatives => 4,
            Stream::Synth => 5,
            Stream::TeacherInit(i) => 1000 + 3 * i as u64,
            Stream::Adversarial(i) => 1001 + 3 * i as u64,
            Stream::Alignment(i) => 1002 + 3 * i as u64,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
