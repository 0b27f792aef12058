//! Stratified fold assignment and train/validation splitting.

use rand::seq::SliceRandom;

use crate::eeg_io::Label;
use crate::error::{Error, Result};
use crate::seed;

/// Fold index of every subject, aligned with the subject order given to
/// [`stratified_kfold`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub subject_ids: Vec<String>,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// `subject_id,fold` rows in subject order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id,fold\n");
        for (id, f) in self.subject_ids.iter().zip(&self.assignments) {
            out.push_str(&format!("{id},{f}\n"));
        }
        out
    }
}

fn class_members(indices: &[usize], labels: &[Label]) -> [Vec<usize>; 2] {
    let mut members = [Vec::new(), Vec::new()];
    for &i in indices {
        members[labels[i]].push(i);
    }
    members
}

/// Shuffles each class with a seeded stream, then deals subjects round robin,
/// continuing the deal position from one class to the next so fold sizes
/// differ by at most one.
pub fn stratified_kfold(subject_ids: &[String], labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::validation(format!("fold count must be at least 2, got {k}")));
    }
    if subject_ids.len() != labels.len() {
        return Err(Error::shape(format!("{} subjects but {} labels", subject_ids.len(), labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::validation(format!("label {bad} is not binary")));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let mut members = class_members(&all, labels);
    for (class, m) in members.iter().enumerate() {
        if m.len() < k {
            return Err(Error::validation(format!(
                "class {class} has {} subjects, fewer than {k} folds",
                m.len()
            )));
        }
    }
    let mut assignments = vec![0; labels.len()];
    let mut pos = 0;
    for (class, m) in members.iter_mut().enumerate() {
        m.shuffle(&mut seed::rng(seed, &format!("folds/class{class}")));
        for &i in m.iter() {
            assignments[i] = pos % k;
            pos += 1;
        }
    }
    Ok(FoldPlan { k, seed, subject_ids: subject_ids.to_vec(), assignments })
}

/// Splits `indices` into `(train, validation)` with about `fraction` of each
/// class held out. A class with at least two members always contributes one
/// validation subject and keeps one for training.
pub fn stratified_split(indices: &[usize], labels: &[Label], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::validation(format!("validation fraction {fraction} outside [0, 1)")));
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (class, mut m) in class_members(indices, labels).into_iter().enumerate() {
        m.shuffle(&mut seed::rng(seed, &format!("split/class{class}")));
        let mut n_val = (m.len() as f64 * fraction).round() as usize;
        if fraction > 0.0 && m.len() >= 2 {
            n_val = n_val.clamp(1, m.len() - 1);
        }
        val.extend_from_slice(&m[..n_val]);
        train.extend_from_slice(&m[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cohort(pos: usize, neg: usize) -> (Vec<String>, Vec<Label>) {
        let ids = (0..pos + neg).map(|i| format!("s{i}")).collect();
        let labels = (0..pos + neg).map(|i| usize::from(i >= pos)).collect();
        (ids, labels)
    }

    #[test]
    fn paper_cohort_fold_sizes() {
        let (ids, labels) = cohort(45, 39);
        let plan = stratified_kfold(&ids, &labels, 5, 11).unwrap();
        assert_eq!(plan.fold_sizes(), vec![17, 17, 17, 17, 16]);
        for f in 0..5 {
            let pos = plan.test_indices(f).iter().filter(|&&i| labels[i] == 0).count();
            assert!((8..=10).contains(&pos), "fold {f} has {pos} positives");
        }
    }

    #[test]
    fn rejects_bad_k() {
        let (ids, labels) = cohort(6, 6);
        assert!(stratified_kfold(&ids, &labels, 1, 0).is_err());
        assert!(stratified_kfold(&ids, &labels, 7, 0).is_err());
    }

    #[test]
    fn seeded_plan_is_stable() {
        let (ids, labels) = cohort(20, 15);
        let a = stratified_kfold(&ids, &labels, 5, 3).unwrap();
        assert_eq!(a, stratified_kfold(&ids, &labels, 5, 3).unwrap());
        assert_ne!(a, stratified_kfold(&ids, &labels, 5, 4).unwrap());
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let (_, labels) = cohort(36, 31);
        let idx: Vec<usize> = (0..67).collect();
        let (train, val) = stratified_split(&idx, &labels, 0.15, 9).unwrap();
        assert_eq!(train.len() + val.len(), 67);
        assert!(train.iter().all(|i| !val.contains(i)));
        assert_eq!(val.iter().filter(|&&i| labels[i] == 0).count(), 5);
        assert_eq!(val.iter().filter(|&&i| labels[i] == 1).count(), 5);
    }

    #[test]
    fn csv_lists_every_subject() {
        let (ids, labels) = cohort(5, 5);
        let plan = stratified_kfold(&ids, &labels, 5, 0).unwrap();
        let csv = plan.to_csv();
        assert!(csv.starts_with("subject_id,fold\n"));
        assert_eq!(csv.lines().count(), 11);
    }
}
