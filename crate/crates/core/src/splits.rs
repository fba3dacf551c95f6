//! Seeded sampling of train/test class partitions and of the class subsets
//! that ensemble members are trained on.
//!
//! Every random stream is a ChaCha20 generator keyed by `base_seed` (expanded
//! with `seed_from_u64`) and positioned on stream `job_index`. A stream
//! therefore depends on nothing but its [`SeedSpec`], which keeps parallel
//! sweeps independent of scheduling.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dataset::ClassSet;
use crate::error::{Error, Result};

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    /// Experiment-wide seed.
    pub base_seed: u64,
    /// Index of the job inside the experiment.
    pub job_index: u64,
}

impl SeedSpec {
    /// Stream `job_index` of `base_seed`.
    pub const fn new(base_seed: u64, job_index: u64) -> Self {
        Self { base_seed, job_index }
    }

    /// The generator for this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.job_index);
        rng
    }

    /// A 64-bit digest of `(base_seed, job_index)`, used as the base seed of
    /// streams nested under this one.
    pub fn stream_seed(&self) -> u64 {
        splitmix64(splitmix64(self.base_seed) ^ self.job_index)
    }

    /// Stream `index` nested under this one.
    pub fn child(&self, index: u64) -> SeedSpec {
        SeedSpec::new(self.stream_seed(), index)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Disjoint seen (training) and unseen (test) classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    train_classes: ClassSet,
    test_classes: ClassSet,
}

impl ClassPartition {
    /// Checks disjointness, `|train| >= 2` and `|test| >= 1`.
    pub fn new(train_classes: ClassSet, test_classes: ClassSet) -> Result<Self> {
        if train_classes.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "partition needs at least 2 training classes, got {}",
                train_classes.len()
            )));
        }
        if test_classes.is_empty() {
            return Err(Error::EmptyClassSet);
        }
        if !train_classes.is_disjoint(&test_classes) {
            return Err(Error::InvalidParameter("train and test classes overlap".into()));
        }
        Ok(Self { train_classes, test_classes })
    }

    /// Seen classes.
    pub fn train_classes(&self) -> &ClassSet {
        &self.train_classes
    }

    /// Unseen classes.
    pub fn test_classes(&self) -> &ClassSet {
        &self.test_classes
    }
}

/// Draws `test_count` of the `num_classes` classes uniformly as test classes;
/// the rest are training classes.
pub fn sample_partition(num_classes: usize, test_count: usize, seed: SeedSpec) -> Result<ClassPartition> {
    if test_count < 2 || test_count + 2 > num_classes {
        return Err(Error::InvalidParameter(format!(
            "test class count {test_count} must lie in [2, {}] for {num_classes} classes",
            num_classes.saturating_sub(2)
        )));
    }
    let mut rng = seed.rng();
    let test: ClassSet = rand::seq::index::sample(&mut rng, num_classes, test_count).into_iter().collect();
    let train: ClassSet = (0..num_classes).filter(|&c| !test.contains(c)).collect();
    ClassPartition::new(train, test)
}

/// `k` independent partitions; partition `i` uses stream `(base_seed, i)`.
pub fn sample_partitions(
    num_classes: usize,
    test_count: usize,
    k: usize,
    base_seed: u64,
) -> Result<Vec<ClassPartition>> {
    if k == 0 {
        return Err(Error::InvalidParameter("number of partitions must be at least 1".into()));
    }
    (0..k as u64)
        .map(|i| sample_partition(num_classes, test_count, SeedSpec::new(base_seed, i)))
        .collect()
}

/// Size of a class subset drawn with proportion `s` from `n` classes:
/// `max(2, round_half_up(s * n))`, never more than `n`.
pub fn subset_size(n: usize, s: f64) -> usize {
    let rounded = libm::floor(s * n as f64 + 0.5) as usize;
    rounded.max(2).min(n)
}

/// Uniform subset of `train_classes` of size [`subset_size`], drawn without
/// replacement. `s == 1` returns the whole set.
pub fn sample_subset_classes(train_classes: &ClassSet, s: f64, seed: SeedSpec) -> Result<ClassSet> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("subset proportion {s} outside (0, 1]")));
    }
    let n = train_classes.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "subset sampling needs at least 2 training classes, got {n}"
        )));
    }
    if s == 1.0 {
        return Ok(train_classes.clone());
    }
    let size = subset_size(n, s);
    let ids = train_classes.as_slice();
    let mut rng = seed.rng();
    Ok(rand::seq::index::sample(&mut rng, n, size).into_iter().map(|i| ids[i]).collect::<ClassSet>())
}
