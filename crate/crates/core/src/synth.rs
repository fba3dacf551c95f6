//! Synthetic zero-shot problems with a linear ground truth.
//!
//! Class attributes are uniform on the unit sphere of `ℝ^E`. A hidden
//! standard-normal map `M: ℝ^E → ℝ^D` turns each attribute into a class
//! centre, and every sample is `x = M z_c + ε` with `ε ~ N(0, σ² I)`. Since
//! the generator is bilinear-recoverable, a noiseless instance should be
//! solved almost perfectly by ESZSL on unseen classes.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{l2_normalize, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::splits::SeedSpec;

/// Attribute draws attempted before giving up on the separation constraint.
pub const SEPARATION_RETRIES: usize = 1000;

/// Parameters of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Number of classes `C` (at least 4).
    pub num_classes: usize,
    /// Attribute dimension `E`.
    pub attr_dim: usize,
    /// Feature dimension `D`, at least `E`.
    pub feature_dim: usize,
    /// Samples generated per class.
    pub samples_per_class: usize,
    /// Standard deviation of the additive feature noise.
    pub noise_sigma: f64,
    /// Minimum Euclidean distance between any two class attributes.
    pub min_attr_separation: f64,
    /// Seed of every random draw.
    pub seed: u64,
}

impl SynthSpec {
    /// Checks the structural constraints.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        if self.num_classes < 4 {
            return fail(format!("num_classes must be >= 4, got {}", self.num_classes));
        }
        if self.attr_dim == 0 || self.feature_dim < self.attr_dim {
            return fail(format!(
                "need 1 <= attr_dim <= feature_dim, got attr_dim={} feature_dim={}",
                self.attr_dim, self.feature_dim
            ));
        }
        if self.samples_per_class == 0 {
            return fail("samples_per_class must be >= 1".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma));
        }
        if !(self.min_attr_separation > 0.0 && self.min_attr_separation.is_finite()) {
            return fail(format!("min_attr_separation must be > 0, got {}", self.min_attr_separation));
        }
        Ok(())
    }
}

fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("buffer sized to shape")
}

fn min_pairwise_distance(m: &Matrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..m.rows() {
        for j in i + 1..m.rows() {
            let d: f64 = m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.min(libm::sqrt(d));
        }
    }
    best
}

fn unit_sphere_rows<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        loop {
            let r = m.row_mut(i);
            for v in r.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let n = norm(r);
            if n > 1e-9 {
                r.iter_mut().for_each(|v| *v /= n);
                break;
            }
        }
    }
    m
}

/// Generates a dataset; samples are grouped by class in ascending id order.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let (c, e, d) = (spec.num_classes, spec.attr_dim, spec.feature_dim);

    let mut attr_rng = SeedSpec::new(spec.seed, 0).rng();
    let mut best = 0.0f64;
    let mut attributes = None;
    for _ in 0..SEPARATION_RETRIES {
        let candidate = unit_sphere_rows(&mut attr_rng, c, e);
        let sep = min_pairwise_distance(&candidate);
        best = best.max(sep);
        if sep >= spec.min_attr_separation {
            attributes = Some(candidate);
            break;
        }
    }
    let attributes = attributes.ok_or(Error::SeparationUnachievable { required: spec.min_attr_separation, best })?;

    let hidden = normal_matrix(&mut SeedSpec::new(spec.seed, 1).rng(), d, e);
    let centres = attributes.matmul(&hidden.transpose())?;
    let mut noise_rng = SeedSpec::new(spec.seed, 2).rng();
    let n = c * spec.samples_per_class;
    let mut features = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for class in 0..c {
        for _ in 0..spec.samples_per_class {
            let row = features.row_mut(labels.len());
            for (x, &m) in row.iter_mut().zip(centres.row(class)) {
                let eps: f64 = noise_rng.sample(StandardNormal);
                *x = m + spec.noise_sigma * eps;
            }
            labels.push(class);
        }
    }
    let names = (0..c).map(|k| format!("class_{k:03}")).collect();
    l2_normalize(&Dataset::new(features, labels, attributes, Some(names))?)
}
