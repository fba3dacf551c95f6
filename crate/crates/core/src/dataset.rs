//! Zero-shot datasets: sample features, sample labels and one attribute
//! vector per class, plus class-restricted views over them.
//!
//! Class ids are global. A view keeps the ids of the parent dataset, so
//! models trained on different class subsets always score the same rows of
//! the attribute matrix.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};

/// Row index into the attribute matrix.
pub type ClassId = usize;

/// Below this Euclidean norm a row cannot be normalized.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Sorted set of distinct class ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ClassSet(Vec<ClassId>);

impl ClassSet {
    /// Builds a set from any ids; duplicates are dropped.
    pub fn new(ids: impl IntoIterator<Item = ClassId>) -> Self {
        let mut v: Vec<ClassId> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    /// `{0, 1, …, n-1}`.
    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Ids in ascending order.
    pub fn as_slice(&self) -> &[ClassId] {
        &self.0
    }

    /// Ascending iterator.
    pub fn iter(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.0.iter().copied()
    }

    /// Number of ids.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when the set has no ids.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Membership test.
    pub fn contains(&self, id: ClassId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    /// True when every id of `self` is in `other`.
    pub fn is_subset(&self, other: &ClassSet) -> bool {
        self.iter().all(|c| other.contains(c))
    }

    /// True when no id is shared.
    pub fn is_disjoint(&self, other: &ClassSet) -> bool {
        self.iter().all(|c| !other.contains(c))
    }

    /// Largest id, if any.
    pub fn max(&self) -> Option<ClassId> {
        self.0.last().copied()
    }

    /// Fails if any id is `>= num_classes`.
    pub fn check_range(&self, num_classes: usize) -> Result<()> {
        match self.max() {
            Some(id) if id >= num_classes => Err(Error::ClassOutOfRange { id, num_classes }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<ClassId> for ClassSet {
    fn from_iter<I: IntoIterator<Item = ClassId>>(iter: I) -> Self {
        Self::new(iter)
    }
}

impl<'a> IntoIterator for &'a ClassSet {
    type Item = ClassId;
    type IntoIter = core::iter::Copied<core::slice::Iter<'a, ClassId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

/// Features, labels and class attributes of a zero-shot problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<ClassId>,
    attributes: Matrix,
    class_names: Option<Vec<String>>,
}

impl Dataset {
    /// Validates and assembles a dataset.
    pub fn new(
        features: Matrix,
        labels: Vec<ClassId>,
        attributes: Matrix,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::InvalidDataset(alloc::format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if features.cols() == 0 {
            return Err(Error::InvalidDataset("feature dimension must be at least 1".into()));
        }
        if attributes.cols() == 0 {
            return Err(Error::InvalidDataset("attribute dimension must be at least 1".into()));
        }
        let num_classes = attributes.rows();
        if num_classes < 2 {
            return Err(Error::InvalidDataset(alloc::format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if let Some(row) = labels.iter().position(|&l| l >= num_classes) {
            return Err(Error::InvalidDataset(alloc::format!(
                "label {} at row {row} out of range for {num_classes} classes",
                labels[row]
            )));
        }
        if let Some(i) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(alloc::format!(
                "non-finite feature at row {}",
                i / features.cols()
            )));
        }
        if let Some(i) = attributes.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(alloc::format!(
                "non-finite attribute at row {}",
                i / attributes.cols()
            )));
        }
        if let Some(names) = &class_names {
            if names.len() != num_classes {
                return Err(Error::InvalidDataset(alloc::format!(
                    "{} class names for {num_classes} classes",
                    names.len()
                )));
            }
        }
        Ok(Self { features, labels, attributes, class_names })
    }

    /// `N × D` sample features.
    pub fn features(&self) -> &Matrix {
        &self.features
    }

    /// One global class id per sample.
    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    /// `C × E` class attributes; row `c` embeds class `c`.
    pub fn attributes(&self) -> &Matrix {
        &self.attributes
    }

    /// Optional human-readable class names.
    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Number of samples `N`.
    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    /// Feature dimension `D`.
    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Number of classes `C`.
    pub fn num_classes(&self) -> usize {
        self.attributes.rows()
    }

    /// Attribute dimension `E`.
    pub fn attr_dim(&self) -> usize {
        self.attributes.cols()
    }

    /// View over every sample.
    pub fn view_all(&self) -> DatasetView<'_> {
        DatasetView {
            dataset: self,
            indices: (0..self.num_samples()).collect(),
            classes: ClassSet::all(self.num_classes()),
        }
    }

    /// Samples per class over the whole dataset.
    pub fn class_sample_counts(&self) -> Vec<usize> {
        counts(self.labels.iter().copied(), self.num_classes())
    }
}

/// The samples of a dataset whose label lies in a class set.
///
/// Sample indices are ascending, so two views over the same class set present
/// samples in the same order.
#[derive(Debug, Clone)]
pub struct DatasetView<'a> {
    dataset: &'a Dataset,
    indices: Vec<usize>,
    classes: ClassSet,
}

impl<'a> DatasetView<'a> {
    /// Parent dataset.
    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    /// Positions of the retained samples in the parent dataset.
    pub fn sample_indices(&self) -> &[usize] {
        &self.indices
    }

    /// Class ids this view was restricted to.
    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    /// Number of retained samples.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when no sample is retained.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Global label of the `i`-th retained sample.
    pub fn label(&self, i: usize) -> ClassId {
        self.dataset.labels[self.indices[i]]
    }

    /// Feature row of the `i`-th retained sample.
    pub fn feature(&self, i: usize) -> &'a [f64] {
        self.dataset.features.row(self.indices[i])
    }

    /// Global labels of the retained samples.
    pub fn labels(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.indices.iter().map(|&i| self.dataset.labels[i])
    }

    /// Feature rows of the retained samples, copied into a matrix.
    pub fn features(&self) -> Matrix {
        self.dataset.features.select_rows(&self.indices)
    }

    /// Narrows the view to the samples whose label is in `keep`, which must be
    /// a nonempty subset of this view's classes.
    pub fn restrict(&self, keep: &ClassSet) -> Result<DatasetView<'a>> {
        if keep.is_empty() {
            return Err(Error::EmptyClassSet);
        }
        keep.check_range(self.dataset.num_classes())?;
        if !keep.is_subset(&self.classes) {
            return Err(Error::InvalidParameter("class subset is not contained in the view's classes".into()));
        }
        let indices = self.indices.iter().copied().filter(|&i| keep.contains(self.dataset.labels[i])).collect();
        Ok(DatasetView { dataset: self.dataset, indices, classes: keep.clone() })
    }

    /// Distinct labels that actually occur among the retained samples.
    pub fn present_classes(&self) -> ClassSet {
        self.labels().collect()
    }
}

/// Scales every feature row and every attribute row to unit Euclidean norm.
pub fn l2_normalize(d: &Dataset) -> Result<Dataset> {
    let features = normalize_rows(&d.features, "features")?;
    let attributes = normalize_rows(&d.attributes, "attributes")?;
    Ok(Dataset { features, labels: d.labels.clone(), attributes, class_names: d.class_names.clone() })
}

fn normalize_rows(m: &Matrix, matrix: &'static str) -> Result<Matrix> {
    let mut out = m.clone();
    for row in 0..m.rows() {
        let r = out.row_mut(row);
        let n = norm(r);
        if !(n > DEGENERATE_NORM) {
            return Err(Error::DegenerateRow { matrix, row, norm: n });
        }
        for v in r.iter_mut() {
            *v /= n;
        }
    }
    Ok(out)
}

/// View over the samples whose label is in `keep`. Class ids stay global.
pub fn restrict_to_classes<'a>(d: &'a Dataset, keep: &ClassSet) -> Result<DatasetView<'a>> {
    if keep.is_empty() {
        return Err(Error::EmptyClassSet);
    }
    keep.check_range(d.num_classes())?;
    let indices = d
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| keep.contains(l))
        .map(|(i, _)| i)
        .collect();
    Ok(DatasetView { dataset: d, indices, classes: keep.clone() })
}

/// Number of samples of each of the `C` classes within a view.
pub fn class_sample_counts(view: &DatasetView<'_>) -> Vec<usize> {
    counts(view.labels(), view.dataset.num_classes())
}

fn counts(labels: impl Iterator<Item = ClassId>, num_classes: usize) -> Vec<usize> {
    let mut out = vec![0; num_classes];
    for l in labels {
        out[l] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(labels: Vec<ClassId>, num_classes: usize) -> Dataset {
        let n = labels.len();
        let features = Matrix::from_vec(n, 2, (0..2 * n).map(|i| i as f64 + 1.0).collect()).unwrap();
        let attributes = Matrix::from_vec(num_classes, 2, (0..2 * num_classes).map(|i| i as f64 + 1.0).collect()).unwrap();
        Dataset::new(features, labels, attributes, None).unwrap()
    }

    #[test]
    fn normalizes_three_four_five() {
        let d = Dataset::new(
            Matrix::from_rows(&[[3.0, 4.0]]).unwrap(),
            vec![0],
            Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap(),
            None,
        )
        .unwrap();
        let n = l2_normalize(&d).unwrap();
        assert!((n.features()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((n.features()[(0, 1)] - 0.8).abs() < 1e-15);
        assert_eq!(n.attributes().row(0), &[1.0, 0.0]);
        assert_eq!(n.attributes().row(1), &[0.0, 1.0]);
        assert_eq!(n.labels(), d.labels());
    }

    #[test]
    fn zero_row_is_degenerate() {
        let d = Dataset::new(
            Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap(),
            vec![0, 1],
            Matrix::identity(2),
            None,
        )
        .unwrap();
        assert_eq!(
            l2_normalize(&d),
            Err(Error::DegenerateRow { matrix: "features", row: 1, norm: 0.0 })
        );
    }

    #[test]
    fn restrict_keeps_matching_positions() {
        let d = toy(vec![0, 1, 0, 2], 3);
        let v = restrict_to_classes(&d, &ClassSet::new([0, 2])).unwrap();
        assert_eq!(v.sample_indices(), &[0, 2, 3]);
        assert_eq!(v.labels().collect::<Vec<_>>(), vec![0, 0, 2]);
        assert_eq!(v.feature(2), d.features().row(3));
    }

    #[test]
    fn restrict_to_everything_is_identity() {
        let d = toy(vec![0, 1, 0, 2], 3);
        let v = restrict_to_classes(&d, &ClassSet::all(3)).unwrap();
        assert_eq!(v.len(), d.num_samples());
        assert_eq!(&v.features(), d.features());
        assert_eq!(v.labels().collect::<Vec<_>>(), d.labels());
    }

    #[test]
    fn restrict_errors() {
        let d = toy(vec![0, 1, 2], 3);
        assert_eq!(
            restrict_to_classes(&d, &ClassSet::new([7])).unwrap_err(),
            Error::ClassOutOfRange { id: 7, num_classes: 3 }
        );
        assert_eq!(restrict_to_classes(&d, &ClassSet::default()).unwrap_err(), Error::EmptyClassSet);
    }

    #[test]
    fn counts_per_class() {
        assert_eq!(toy(vec![0, 1, 0, 2], 3).class_sample_counts(), vec![2, 1, 1]);
        assert_eq!(toy(vec![1, 1, 1], 2).class_sample_counts(), vec![0, 3]);
        assert_eq!(toy(vec![], 3).class_sample_counts(), vec![0, 0, 0]);
        let d = toy(vec![0, 0, 2], 3);
        let v = restrict_to_classes(&d, &ClassSet::new([1])).unwrap();
        assert!(v.is_empty());
        assert_eq!(class_sample_counts(&v), vec![0, 0, 0]);
    }

    #[test]
    fn rejects_invalid_datasets() {
        let attrs = Matrix::identity(2);
        assert!(Dataset::new(Matrix::zeros(2, 2), vec![0], attrs.clone(), None).is_err());
        assert!(Dataset::new(Matrix::zeros(1, 2), vec![5], attrs.clone(), None).is_err());
        assert!(Dataset::new(Matrix::zeros(1, 2), vec![0], Matrix::identity(1), None).is_err());
        let mut f = Matrix::zeros(1, 2);
        f[(0, 1)] = f64::NAN;
        assert!(Dataset::new(f, vec![0], attrs.clone(), None).is_err());
        assert!(Dataset::new(Matrix::zeros(1, 2), vec![0], attrs, Some(vec!["a".into()])).is_err());
    }
}
