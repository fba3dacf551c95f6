//! Bilinear compatibility models `F(x, z) = xᵀ W z` and their two trainers:
//! the ESZSL closed form and SJE structured-ranking SGD.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{ClassId, ClassSet, DatasetView};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::splits::SeedSpec;

/// A trained `D × E` bilinear map together with the classes it was fit on.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityModel {
    weight: Matrix,
    trained_classes: ClassSet,
}

impl CompatibilityModel {
    /// Wraps a weight matrix; rejects non-finite entries.
    pub fn new(weight: Matrix, trained_classes: ClassSet) -> Result<Self> {
        if !weight.is_finite() {
            return Err(Error::NonFinite("model weight"));
        }
        Ok(Self { weight, trained_classes })
    }

    /// The `D × E` weight.
    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    /// Classes seen during training.
    pub fn trained_classes(&self) -> &ClassSet {
        &self.trained_classes
    }

    /// Feature dimension `D`.
    pub fn feature_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Attribute dimension `E`.
    pub fn attr_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Ridge strengths of the ESZSL closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EszslParams {
    /// Feature-side ridge.
    pub gamma: f64,
    /// Attribute-side ridge.
    pub lambda: f64,
}

impl Default for EszslParams {
    fn default() -> Self {
        Self { gamma: 1.0, lambda: 1.0 }
    }
}

impl EszslParams {
    /// Both ridges must be strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite() && self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ESZSL needs gamma > 0 and lambda > 0, got gamma={} lambda={}",
                self.gamma, self.lambda
            )));
        }
        Ok(())
    }
}

/// SGD schedule for SJE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SjeParams {
    /// Constant learning rate.
    pub eta: f64,
    /// Number of passes over the training samples.
    pub epochs: usize,
    /// Stream used to shuffle the visiting order of each epoch.
    pub seed: SeedSpec,
}

impl Default for SjeParams {
    fn default() -> Self {
        Self { eta: 0.1, epochs: 50, seed: SeedSpec::new(0, 0) }
    }
}

impl SjeParams {
    /// `eta > 0` and at least one epoch.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) || self.epochs == 0 {
            return Err(Error::InvalidParameter(format!(
                "SJE needs eta > 0 and epochs >= 1, got eta={} epochs={}",
                self.eta, self.epochs
            )));
        }
        Ok(())
    }
}

/// A base-model training rule with fixed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trainer {
    /// Closed-form ESZSL.
    Eszsl(EszslParams),
    /// Ranking-loss SGD.
    Sje(SjeParams),
}

impl Trainer {
    /// Fits a model on `view`.
    pub fn train(&self, view: &DatasetView<'_>) -> Result<CompatibilityModel> {
        match self {
            Trainer::Eszsl(p) => train_eszsl(view, p),
            Trainer::Sje(p) => train_sje(view, p),
        }
    }

    /// Same trainer with its random stream replaced by `seed`. ESZSL is
    /// deterministic and unaffected.
    pub fn with_seed(self, seed: SeedSpec) -> Self {
        match self {
            Trainer::Sje(p) => Trainer::Sje(SjeParams { seed, ..p }),
            other => other,
        }
    }

    /// `"eszsl"` or `"sje"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Trainer::Eszsl(_) => "eszsl",
            Trainer::Sje(_) => "sje",
        }
    }
}

fn check_training_view(view: &DatasetView<'_>) -> Result<()> {
    if view.classes().len() < 2 {
        return Err(Error::TooFewClasses(view.classes().len()));
    }
    if view.is_empty() {
        return Err(Error::InvalidInput("training view has no samples".into()));
    }
    Ok(())
}

/// Trains ESZSL on the samples of `view`, with the view's classes as the
/// training classes. See [`eszsl_weight`] for the closed form.
pub fn train_eszsl(view: &DatasetView<'_>, params: &EszslParams) -> Result<CompatibilityModel> {
    check_training_view(view)?;
    let d = view.dataset();
    let classes = view.classes();
    let attributes = d.attributes().select_rows(classes.as_slice());
    // each label's row in `attributes`
    let rows: Vec<usize> = view
        .labels()
        .map(|l| classes.as_slice().binary_search(&l).expect("view labels lie in its classes"))
        .collect();
    let weight = eszsl_weight(&view.features(), &rows, &attributes, params)?;
    CompatibilityModel::new(weight, classes.clone())
}

/// Closed-form ESZSL:
/// `W = (XᵀX + γI)⁻¹ Xᵀ Y S (SᵀS + λI)⁻¹`,
/// with `X` the `N × D` features, `S` the `C_tr × E` training-class
/// attributes and `Y` the `N × C_tr` matrix holding `+1` at `(i, rows[i])`
/// and `-1` elsewhere.
///
/// When `N < D` the left solve goes through the `N × N` Gram system
/// `Xᵀ(XXᵀ + γI)⁻¹`, which is algebraically identical.
pub fn eszsl_weight(x: &Matrix, rows: &[usize], s: &Matrix, params: &EszslParams) -> Result<Matrix> {
    params.validate()?;
    if rows.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} samples", rows.len(), x.rows())));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= s.rows()) {
        return Err(Error::ClassOutOfRange { id: bad, num_classes: s.rows() });
    }
    // Y S row i = 2 z_{y_i} - Σ_c z_c
    let attr_sum: Vec<f64> = (0..s.cols()).map(|e| (0..s.rows()).map(|c| s[(c, e)]).sum()).collect();
    let mut ys = Matrix::zeros(x.rows(), s.cols());
    for (i, &r) in rows.iter().enumerate() {
        let z = s.row(r);
        for (e, out) in ys.row_mut(i).iter_mut().enumerate() {
            *out = 2.0 * z[e] - attr_sum[e];
        }
    }

    let left = if x.rows() < x.cols() {
        eszsl_left_gram(x, &ys, params.gamma)?
    } else {
        eszsl_left_primal(x, &ys, params.gamma)?
    };

    let mut k = s.transpose_matmul(s)?;
    k.add_diagonal(params.lambda);
    let weight = Cholesky::factor(&k)?.solve(&left.transpose())?.transpose();
    if !weight.is_finite() {
        return Err(Error::NonFinite("ESZSL weight"));
    }
    Ok(weight)
}

/// `(XᵀX + γI)⁻¹ Xᵀ R`
fn eszsl_left_primal(x: &Matrix, r: &Matrix, gamma: f64) -> Result<Matrix> {
    let mut a = x.transpose_matmul(x)?;
    a.add_diagonal(gamma);
    Cholesky::factor(&a)?.solve(&x.transpose_matmul(r)?)
}

/// `Xᵀ (XXᵀ + γI)⁻¹ R`
fn eszsl_left_gram(x: &Matrix, r: &Matrix, gamma: f64) -> Result<Matrix> {
    let mut g = x.matmul(&x.transpose())?;
    g.add_diagonal(gamma);
    x.transpose_matmul(&Cholesky::factor(&g)?.solve(r)?)
}

/// Structured joint embedding trained by single-violator SGD.
///
/// `W` starts at zero. Each epoch visits the samples in a freshly shuffled
/// order; for sample `(x, y)` the most violating class
/// `y* = argmax_{y'} Δ(y, y') + xᵀ W z_{y'}` (0/1 cost, ties to the smallest
/// id) triggers `W += η x (z_y − z_{y*})ᵀ` whenever `y* ≠ y`.
pub fn train_sje(view: &DatasetView<'_>, params: &SjeParams) -> Result<CompatibilityModel> {
    params.validate()?;
    check_training_view(view)?;
    let d = view.dataset();
    let attrs = d.attributes();
    let classes = view.classes();
    let (dim_x, dim_z) = (d.feature_dim(), d.attr_dim());

    let mut w = Matrix::zeros(dim_x, dim_z);
    let mut order: Vec<usize> = (0..view.len()).collect();
    let mut rng = params.seed.rng();
    let mut projected = vec![0.0; dim_z];
    let mut diff = vec![0.0; dim_z];

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = view.feature(i);
            let y = view.label(i);
            project(&w, x, &mut projected);
            let mut best: Option<(ClassId, f64)> = None;
            for c in classes {
                let margin = if c == y { 0.0 } else { 1.0 };
                let v = margin + dot(&projected, attrs.row(c));
                if best.map_or(true, |(_, b)| v > b) {
                    best = Some((c, v));
                }
            }
            let (violator, _) = best.expect("view has at least two classes");
            if violator == y {
                continue;
            }
            for ((o, a), b) in diff.iter_mut().zip(attrs.row(y)).zip(attrs.row(violator)) {
                *o = a - b;
            }
            for (row, &xd) in x.iter().enumerate() {
                let step = params.eta * xd;
                if step == 0.0 {
                    continue;
                }
                for (wv, &g) in w.row_mut(row).iter_mut().zip(&diff) {
                    *wv += step * g;
                }
            }
        }
    }
    if !w.is_finite() {
        return Err(Error::NonFinite("SJE weight"));
    }
    CompatibilityModel::new(w, classes.clone())
}

/// `out = Wᵀ x`
fn project(w: &Matrix, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (row, &xd) in x.iter().enumerate() {
        if xd == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(w.row(row)) {
            *o += xd * wv;
        }
    }
}

fn check_shapes(model: &CompatibilityModel, features: &Matrix, attributes: &Matrix, candidates: &ClassSet) -> Result<()> {
    if features.cols() != model.feature_dim() {
        return Err(Error::DimensionMismatch(format!(
            "features have {} columns, model expects {}",
            features.cols(),
            model.feature_dim()
        )));
    }
    if attributes.cols() != model.attr_dim() {
        return Err(Error::DimensionMismatch(format!(
            "attributes have {} columns, model expects {}",
            attributes.cols(),
            model.attr_dim()
        )));
    }
    candidates.check_range(attributes.rows())
}

/// `N × |candidates|` scores `x_iᵀ W z_c`, candidates in ascending id order.
pub fn score_matrix(
    model: &CompatibilityModel,
    features: &Matrix,
    attributes: &Matrix,
    candidates: &ClassSet,
) -> Result<Matrix> {
    check_shapes(model, features, attributes, candidates)?;
    let projected = features.matmul(&model.weight)?;
    let mut out = Matrix::zeros(features.rows(), candidates.len());
    for i in 0..features.rows() {
        let p = projected.row(i);
        for (j, c) in candidates.iter().enumerate() {
            out[(i, j)] = dot(p, attributes.row(c));
        }
    }
    Ok(out)
}

/// Position of the first maximum of `row`.
pub(crate) fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Highest-scoring candidate per sample, ties to the smallest class id.
pub fn predict(
    model: &CompatibilityModel,
    features: &Matrix,
    attributes: &Matrix,
    candidates: &ClassSet,
) -> Result<Vec<ClassId>> {
    if candidates.is_empty() {
        return Err(Error::EmptyClassSet);
    }
    let scores = score_matrix(model, features, attributes, candidates)?;
    Ok(scores_to_classes(&scores, candidates))
}

pub(crate) fn scores_to_classes(scores: &Matrix, candidates: &ClassSet) -> Vec<ClassId> {
    let ids = candidates.as_slice();
    scores.row_iter().map(|row| ids[argmax_first(row)]).collect()
}
