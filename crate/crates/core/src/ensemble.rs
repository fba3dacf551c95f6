//! Bagging over random subsets of the training classes, combined by hard
//! (majority) or soft (summed score) voting.
//!
//! Member `i` draws its class subset from stream `(base_seed, i)` and, for
//! stochastic trainers, shuffles with the nested stream `child(0)` of that
//! seed. Members are therefore independent of the order they are trained in.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{ClassId, ClassSet, DatasetView};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{argmax_first, predict, score_matrix, scores_to_classes, CompatibilityModel, Trainer};
use crate::splits::{sample_subset_classes, SeedSpec};

/// How member outputs are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Voting {
    /// Most frequent member prediction.
    Hard,
    /// Argmax of the summed raw scores.
    Soft,
}

/// One ensemble member and the class subset it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    /// Trained model.
    pub model: CompatibilityModel,
    /// Training classes the model saw.
    pub classes: ClassSet,
}

/// A non-empty set of members sharing feature and attribute dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<Member>,
    voting: Voting,
}

impl Ensemble {
    /// Checks `n >= 1` and that every member has the same `D × E` shape.
    pub fn new(members: Vec<Member>, voting: Voting) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidParameter("ensemble needs at least one member".into()))?;
        let shape = (first.model.feature_dim(), first.model.attr_dim());
        if let Some(i) = members.iter().position(|m| (m.model.feature_dim(), m.model.attr_dim()) != shape) {
            return Err(Error::DimensionMismatch(format!("member {i} has a different weight shape")));
        }
        Ok(Self { members, voting })
    }

    /// Members in index order.
    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// Configured voting scheme.
    pub fn voting(&self) -> Voting {
        self.voting
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Always false; kept for API symmetry with [`Ensemble::len`].
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Predicts with the configured voting scheme.
    pub fn predict(&self, features: &Matrix, attributes: &Matrix, candidates: &ClassSet) -> Result<Vec<ClassId>> {
        match self.voting {
            Voting::Hard => predict_hard(self, features, attributes, candidates),
            Voting::Soft => predict_soft(self, features, attributes, candidates),
        }
    }
}

/// Trains member `index` of a bagged ensemble.
pub fn train_member(
    train: &DatasetView<'_>,
    train_classes: &ClassSet,
    s: f64,
    trainer: &Trainer,
    base_seed: u64,
    index: u64,
) -> Result<Member> {
    let wrap = |e: Error| Error::Member { member: index as usize, source: Box::new(e) };
    let seed = SeedSpec::new(base_seed, index);
    let classes = sample_subset_classes(train_classes, s, seed).map_err(wrap)?;
    let view = train.restrict(&classes).map_err(wrap)?;
    let model = trainer.with_seed(seed.child(0)).train(&view).map_err(wrap)?;
    Ok(Member { model, classes })
}

/// Trains `n` members, each on a random proportion `s` of `train_classes`.
pub fn train_bagged(
    train: &DatasetView<'_>,
    train_classes: &ClassSet,
    n: usize,
    s: f64,
    trainer: &Trainer,
    base_seed: u64,
    voting: Voting,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidParameter("ensemble size must be at least 1".into()));
    }
    let members = (0..n as u64)
        .map(|i| train_member(train, train_classes, s, trainer, base_seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members, voting)
}

/// Most frequent entry of `votes`, ties to the smallest class id.
pub fn majority_vote(votes: &[ClassId]) -> Option<ClassId> {
    let mut sorted = votes.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(ClassId, usize)> = None;
    for run in sorted.chunk_by(|a, b| a == b) {
        if best.map_or(true, |(_, n)| run.len() > n) {
            best = Some((run[0], run.len()));
        }
    }
    best.map(|(c, _)| c)
}

/// Majority vote over member predictions.
pub fn predict_hard(e: &Ensemble, features: &Matrix, attributes: &Matrix, candidates: &ClassSet) -> Result<Vec<ClassId>> {
    if candidates.is_empty() {
        return Err(Error::EmptyClassSet);
    }
    let ids = candidates.as_slice();
    let mut tally = vec![0usize; features.rows() * ids.len()];
    for member in &e.members {
        let votes = predict(&member.model, features, attributes, candidates)?;
        for (i, v) in votes.into_iter().enumerate() {
            let j = ids.binary_search(&v).expect("prediction is a candidate");
            tally[i * ids.len() + j] += 1;
        }
    }
    Ok(tally
        .chunks_exact(ids.len())
        .map(|row| {
            let counts: Vec<f64> = row.iter().map(|&c| c as f64).collect();
            ids[argmax_first(&counts)]
        })
        .collect())
}

/// Argmax of the entrywise sum of raw member scores.
pub fn predict_soft(e: &Ensemble, features: &Matrix, attributes: &Matrix, candidates: &ClassSet) -> Result<Vec<ClassId>> {
    if candidates.is_empty() {
        return Err(Error::EmptyClassSet);
    }
    let mut total = Matrix::zeros(features.rows(), candidates.len());
    for member in &e.members {
        total = total.add(&score_matrix(&member.model, features, attributes, candidates)?)?;
    }
    Ok(scores_to_classes(&total, candidates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::models::{EszslParams, SjeParams};
    use proptest::prelude::*;

    /// One-hot attributes over `k` classes and a single constant feature, so
    /// a member with weight `e_c` always predicts class `c`.
    fn voter(c: usize, k: usize) -> Member {
        let mut w = Matrix::zeros(1, k);
        w[(0, c)] = 1.0;
        Member { model: CompatibilityModel::new(w, ClassSet::all(k)).unwrap(), classes: ClassSet::all(k) }
    }

    fn vote(profile: &[usize], k: usize, voting: Voting) -> ClassId {
        let e = Ensemble::new(profile.iter().map(|&c| voter(c, k)).collect(), voting).unwrap();
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        e.predict(&x, &Matrix::identity(k), &ClassSet::all(k)).unwrap()[0]
    }

    #[test]
    fn hard_vote_majority_and_ties() {
        assert_eq!(vote(&[2, 2, 3], 5, Voting::Hard), 2);
        assert_eq!(vote(&[3, 2], 5, Voting::Hard), 2);
        assert_eq!(vote(&[4], 5, Voting::Hard), 4);
        assert_eq!(majority_vote(&[3, 1, 3, 1, 0]), Some(1));
        assert_eq!(majority_vote(&[]), None);
    }

    #[test]
    fn soft_vote_sums_scores() {
        let m = |a: f64, b: f64| Member {
            model: CompatibilityModel::new(Matrix::from_rows(&[[a, b]]).unwrap(), ClassSet::all(2)).unwrap(),
            classes: ClassSet::all(2),
        };
        let e = Ensemble::new(vec![m(1.0, 0.0), m(0.0, 0.9)], Voting::Soft).unwrap();
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        assert_eq!(predict_soft(&e, &x, &Matrix::identity(2), &ClassSet::all(2)).unwrap(), vec![0]);
        // a hard vote of the same two members ties and goes to class 0 as well
        assert_eq!(predict_hard(&e, &x, &Matrix::identity(2), &ClassSet::all(2)).unwrap(), vec![0]);
    }

    #[test]
    fn rejects_empty_or_mixed_members() {
        assert!(Ensemble::new(vec![], Voting::Soft).is_err());
        assert!(Ensemble::new(vec![voter(0, 2), voter(0, 3)], Voting::Soft).is_err());
    }

    fn toy() -> Dataset {
        let c = 6;
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for class in 0..c {
            for j in 0..3 {
                let t = (class * 3 + j) as f64;
                feats.push([libm::sin(t), libm::cos(1.7 * t), 0.3 + libm::sin(0.4 * t)]);
                labels.push(class);
            }
        }
        let attrs: Vec<[f64; 2]> = (0..c).map(|k| [libm::cos(k as f64), libm::sin(k as f64)]).collect();
        Dataset::new(Matrix::from_rows(&feats).unwrap(), labels, Matrix::from_rows(&attrs).unwrap(), None).unwrap()
    }

    #[test]
    fn bagging_contracts() {
        let d = toy();
        let train = ClassSet::new([0, 1, 2, 3, 4]);
        let view = d.view_all().restrict(&train).unwrap();
        let trainer = Trainer::Sje(SjeParams { epochs: 3, ..SjeParams::default() });
        let a = train_bagged(&view, &train, 3, 0.5, &trainer, 9, Voting::Soft).unwrap();
        assert_eq!(a, train_bagged(&view, &train, 3, 0.5, &trainer, 9, Voting::Soft).unwrap());
        for m in a.members() {
            assert!(m.classes.is_subset(&train));
            assert_eq!(m.classes.len(), 3);
            assert_eq!(m.model.trained_classes(), &m.classes);
        }
        let eszsl = Trainer::Eszsl(EszslParams::default());
        let single = train_bagged(&view, &train, 1, 1.0, &eszsl, 9, Voting::Hard).unwrap();
        assert_eq!(single.members()[0].model, eszsl.train(&view).unwrap());
        assert!(train_bagged(&view, &train, 0, 0.5, &eszsl, 9, Voting::Hard).is_err());
        assert!(matches!(
            train_bagged(&view, &train, 2, 0.0, &eszsl, 9, Voting::Hard),
            Err(Error::Member { member: 0, .. })
        ));
    }

    #[test]
    fn single_member_and_copies_match_plain_predict() {
        let d = toy();
        let train = ClassSet::new([0, 1, 2, 3]);
        let test = ClassSet::new([4, 5]);
        let view = d.view_all().restrict(&train).unwrap();
        let model = Trainer::Eszsl(EszslParams::default()).train(&view).unwrap();
        let expected = predict(&model, d.features(), d.attributes(), &test).unwrap();
        for n in [1, 4] {
            let members = vec![Member { model: model.clone(), classes: train.clone() }; n];
            for voting in [Voting::Hard, Voting::Soft] {
                let e = Ensemble::new(members.clone(), voting).unwrap();
                assert_eq!(e.predict(d.features(), d.attributes(), &test).unwrap(), expected);
            }
        }
    }

    proptest! {
        #[test]
        fn strict_majority_wins(
            k in 2usize..8,
            winner_seed in any::<usize>(),
            others in proptest::collection::vec(any::<usize>(), 0..20),
        ) {
            let winner = winner_seed % k;
            let minority: Vec<usize> = others.iter().map(|o| o % k).collect();
            let mut profile = minority.clone();
            let extra = minority.len() + 1;
            profile.extend(core::iter::repeat(winner).take(extra));
            let shift = winner_seed % profile.len();
            profile.rotate_left(shift);
            prop_assert_eq!(vote(&profile, k, Voting::Hard), winner);
        }

        #[test]
        fn soft_vote_ignores_positive_scale(
            weights in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 4), 1..6),
            factor in 0.01f64..100.0,
        ) {
            let members = |scale: f64| -> Vec<Member> {
                weights.iter().map(|w| {
                    let mut m = Matrix::from_vec(1, 4, w.clone()).unwrap();
                    m.scale(scale);
                    Member { model: CompatibilityModel::new(m, ClassSet::all(4)).unwrap(), classes: ClassSet::all(4) }
                }).collect()
            };
            let x = Matrix::from_rows(&[[1.0], [-0.5]]).unwrap();
            let a = Matrix::identity(4);
            let cands = ClassSet::all(4);
            let base = predict_soft(&Ensemble::new(members(1.0), Voting::Soft).unwrap(), &x, &a, &cands).unwrap();
            // exact power-of-two scaling never reorders sums
            let pow2 = libm::exp2(libm::round(libm::log2(factor)));
            let scaled = predict_soft(&Ensemble::new(members(pow2), Voting::Soft).unwrap(), &x, &a, &cands).unwrap();
            prop_assert_eq!(base, scaled);
        }
    }
}
