//! Seeded labeled/unlabeled/test splits.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::supervised::LabeledSet;

/// Number of labeled objects to draw: either the protocol default
/// `max(d+5, 20)` or an explicit override.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabeledSize {
    Auto,
    Fixed(usize),
}

impl LabeledSize {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            LabeledSize::Auto => auto_labeled_size(d),
            LabeledSize::Fixed(l) => l,
        }
    }
}

/// The protocol default labeled-set size.
pub fn auto_labeled_size(d: usize) -> usize {
    (d + 5).max(20)
}

/// Disjoint index sets for one experimental repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub labeled_idx: Vec<usize>,
    pub unlabeled_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

const STRATIFY_ATTEMPTS: usize = 10_000;

/// Sample labeled indices uniformly without replacement from `pool`, redrawing
/// until both classes appear.
pub(crate) fn draw_stratified_labeled(
    rng: &mut ChaCha8Rng,
    pool: &[usize],
    labels: &Vector,
    l: usize,
) -> Result<Vec<usize>> {
    if l < 2 || l > pool.len() {
        return Err(Error::invalid(format!(
            "labeled draw: need 2 <= L <= pool size, got L={l}, pool={}",
            pool.len()
        )));
    }
    for _ in 0..STRATIFY_ATTEMPTS {
        let picks = index::sample(rng, pool.len(), l);
        let chosen: Vec<usize> = picks.iter().map(|k| pool[k]).collect();
        let positives = chosen.iter().filter(|&&i| labels[i] == 1.0).count();
        if positives > 0 && positives < l {
            return Ok(chosen);
        }
    }
    Err(Error::invalid(
        "labeled draw: could not obtain one object of each class",
    ))
}

/// Draw a labeled/unlabeled/test split: `l` labeled objects with both classes
/// present, `u` unlabeled objects from the remainder, and everything else as
/// the test set.
pub fn sample_split(data: &Dataset, l: LabeledSize, u: usize, seed: u64) -> Result<SplitPlan> {
    let n = data.n();
    let l = l.resolve(data.dim());
    if l + u > n - 1 {
        return Err(Error::invalid(format!(
            "sample_split: L={l} + U={u} leaves no test objects out of n={n}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<usize> = (0..n).collect();
    let labeled_idx = draw_stratified_labeled(&mut rng, &all, &data.y, l)?;

    let mut in_labeled = vec![false; n];
    for &i in &labeled_idx {
        in_labeled[i] = true;
    }
    let remainder: Vec<usize> = (0..n).filter(|&i| !in_labeled[i]).collect();
    let picks = index::sample(&mut rng, remainder.len(), u);
    let unlabeled_idx: Vec<usize> = picks.iter().map(|k| remainder[k]).collect();

    let mut in_unlabeled = vec![false; n];
    for &i in &unlabeled_idx {
        in_unlabeled[i] = true;
    }
    let test_idx: Vec<usize> = (0..n)
        .filter(|&i| !in_labeled[i] && !in_unlabeled[i])
        .collect();

    Ok(SplitPlan {
        labeled_idx,
        unlabeled_idx,
        test_idx,
    })
}

pub(crate) fn select_rows(x: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

pub(crate) fn select_entries(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Materialized views of a plan: the labeled set, unlabeled features, their
/// true labels (for the oracle), and the test pair.
pub(crate) struct SplitData {
    pub labeled: LabeledSet,
    pub x_u: Matrix,
    pub y_u_true: Vector,
    pub x_test: Matrix,
    pub y_test: Vector,
}

pub(crate) fn materialize(data: &Dataset, plan: &SplitPlan) -> Result<SplitData> {
    Ok(SplitData {
        labeled: LabeledSet::new(
            select_rows(&data.x, &plan.labeled_idx),
            select_entries(&data.y, &plan.labeled_idx),
        )?,
        x_u: select_rows(&data.x, &plan.unlabeled_idx),
        y_u_true: select_entries(&data.y, &plan.unlabeled_idx),
        x_test: select_rows(&data.x, &plan.test_idx),
        y_test: select_entries(&data.y, &plan.test_idx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::dataset::synthetic_two_gaussians;

    #[test]
    fn auto_size_rules() {
        assert_eq!(auto_labeled_size(3), 20);
        assert_eq!(auto_labeled_size(15), 20);
        assert_eq!(auto_labeled_size(30), 35);
    }

    #[test]
    fn same_seed_same_plan() {
        let data = synthetic_two_gaussians(100, 1.0, 1).unwrap();
        let a = sample_split(&data, LabeledSize::Auto, 10, 42).unwrap();
        let b = sample_split(&data, LabeledSize::Auto, 10, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_split(&data, LabeledSize::Auto, 10, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_sizes_rejected() {
        let data = synthetic_two_gaussians(30, 1.0, 1).unwrap();
        assert!(sample_split(&data, LabeledSize::Fixed(20), 10, 0).is_err());
    }

    #[test]
    fn plans_are_disjoint_and_stratified() {
        let data = synthetic_two_gaussians(80, 1.0, 3).unwrap();
        for seed in 0..1000 {
            let plan = sample_split(&data, LabeledSize::Fixed(5), 30, seed).unwrap();
            let mut seen = vec![0u8; data.n()];
            for &i in plan
                .labeled_idx
                .iter()
                .chain(&plan.unlabeled_idx)
                .chain(&plan.test_idx)
            {
                seen[i] += 1;
            }
            assert!(seen.iter().all(|&c| c <= 1));
            assert_eq!(
                plan.labeled_idx.len() + plan.unlabeled_idx.len() + plan.test_idx.len(),
                data.n()
            );
            let positives = plan
                .labeled_idx
                .iter()
                .filter(|&&i| data.y[i] == 1.0)
                .count();
            assert!(positives >= 1 && positives < plan.labeled_idx.len());
            assert!(!plan.test_idx.is_empty());
        }
    }
}
