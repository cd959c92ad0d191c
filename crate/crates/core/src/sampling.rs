//! Repeated-sampling trial logs: answer and position histograms.
//!
//! Each trial shows the options of a problem in a shuffled order. Recording
//! the permutation lets the same log be read either by original option (what
//! was chosen) or by displayed position (where it was on screen).

use alloc::string::String;
use alloc::vec::Vec;

use crate::rng;
use crate::{Error, Result};

/// One query of a problem with shuffled options.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub problem: String,
    pub k: u32,
    /// `permutation[p]` is the original option shown at position `p`.
    pub permutation: Vec<u32>,
    pub selected_position: u32,
}

impl TrialRecord {
    /// Checks that the permutation is a bijection on `0..k` and the
    /// selected position is in range.
    pub fn new(problem: impl Into<String>, permutation: Vec<u32>, selected_position: u32) -> Result<Self> {
        let k = permutation.len() as u32;
        if k == 0 {
            return Err(Error::InvalidK(0));
        }
        let mut seen = alloc::vec![false; k as usize];
        for &o in &permutation {
            if o >= k || core::mem::replace(&mut seen[o as usize], true) {
                return Err(Error::InvalidRecord(String::from("permutation is not a bijection on 0..k")));
            }
        }
        if selected_position >= k {
            return Err(Error::InvalidRecord(String::from("selected_position out of range")));
        }
        Ok(TrialRecord {
            problem: problem.into(),
            k,
            permutation,
            selected_position,
        })
    }

    /// Original option index that was chosen.
    pub fn selected_option(&self) -> u32 {
        self.permutation[self.selected_position as usize]
    }
}

fn tally(trials: &[TrialRecord], problem: &str, index: impl Fn(&TrialRecord) -> u32) -> Result<Vec<u64>> {
    let mut counts: Vec<u64> = Vec::new();
    let mut k = None;
    for t in trials.iter().filter(|t| t.problem == problem) {
        match k {
            None => {
                k = Some(t.k);
                counts.resize(t.k as usize, 0);
            }
            Some(expected) if expected != t.k => {
                return Err(Error::InconsistentK {
                    problem: t.problem.clone(),
                    expected,
                    found: t.k,
                })
            }
            Some(_) => {}
        }
        counts[index(t) as usize] += 1;
    }
    Ok(counts)
}

/// Counts per original option index for one problem. Empty when the
/// problem has no trials.
pub fn answer_histogram(trials: &[TrialRecord], problem: &str) -> Result<Vec<u64>> {
    tally(trials, problem, TrialRecord::selected_option)
}

/// Counts per displayed position for one problem.
pub fn position_histogram(trials: &[TrialRecord], problem: &str) -> Result<Vec<u64>> {
    tally(trials, problem, |t| t.selected_position)
}

/// Total-variation distance between the normalised histogram and the
/// uniform distribution over its `k` bins. Lies in `[0, 1 - 1/k]`.
pub fn tv_from_uniform(counts: &[u64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::InvalidK(counts.len() as u64));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let (total, u) = (total as f64, 1.0 / counts.len() as f64);
    Ok(0.5 * counts.iter().map(|&c| libm::fabs(c as f64 / total - u)).sum::<f64>())
}

/// Fisher–Yates shuffle of `0..k`, keyed by `(seed, trial_index)`.
pub fn make_permutation(seed: u64, trial_index: u64, k: u32) -> Result<Vec<u32>> {
    if k == 0 {
        return Err(Error::InvalidK(0));
    }
    let mut rng = rng::stream(seed, trial_index);
    let mut perm: Vec<u32> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng::below(&mut rng, i + 1);
        perm.swap(i as usize, j as usize);
    }
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(problem: &str, perm: &[u32], pos: u32) -> TrialRecord {
        TrialRecord::new(problem, perm.to_vec(), pos).unwrap()
    }

    #[test]
    fn decodes_through_permutation() {
        let trials = [
            trial("p", &[2, 0, 1], 0),
            trial("p", &[0, 2, 1], 1),
            trial("p", &[1, 0, 2], 2),
        ];
        assert_eq!(answer_histogram(&trials, "p").unwrap(), [0, 0, 3]);
        assert_eq!(position_histogram(&trials, "p").unwrap(), [1, 1, 1]);
    }

    #[test]
    fn positions() {
        let trials = [
            trial("p", &[0, 1, 2], 0),
            trial("p", &[1, 2, 0], 0),
            trial("p", &[0, 1, 2], 1),
            trial("other", &[0, 1], 1),
        ];
        assert_eq!(position_histogram(&trials, "p").unwrap(), [2, 1, 0]);
    }

    #[test]
    fn no_trials() {
        assert!(answer_histogram(&[], "p").unwrap().iter().all(|&c| c == 0));
        assert!(position_histogram(&[], "p").unwrap().is_empty());
    }

    #[test]
    fn inconsistent_k() {
        let trials = [trial("p", &[0, 1, 2], 0), trial("p", &[1, 0], 0)];
        assert!(matches!(
            answer_histogram(&trials, "p"),
            Err(Error::InconsistentK { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn record_validation() {
        assert!(TrialRecord::new("p", alloc::vec![0, 0], 0).is_err());
        assert!(TrialRecord::new("p", alloc::vec![0, 2], 0).is_err());
        assert!(TrialRecord::new("p", alloc::vec![0, 1], 2).is_err());
        assert!(TrialRecord::new("p", alloc::vec![], 0).is_err());
    }

    #[test]
    fn tv_values() {
        assert_eq!(tv_from_uniform(&[600, 600]).unwrap(), 0.0);
        assert!((tv_from_uniform(&[1200, 0, 0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        // 0.5 * (|0.99 - 0.5| + |0.01 - 0.5|)
        assert!((tv_from_uniform(&[99, 1]).unwrap() - 0.49).abs() < 1e-15);
        assert_eq!(tv_from_uniform(&[0, 0]), Err(Error::EmptyHistogram));
        assert!(tv_from_uniform(&[5]).is_err());
    }

    #[test]
    fn permutation_basics() {
        assert_eq!(make_permutation(1, 2, 1).unwrap(), [0]);
        assert_eq!(make_permutation(5, 9, 7).unwrap(), make_permutation(5, 9, 7).unwrap());
        assert_ne!(make_permutation(5, 9, 7).unwrap(), make_permutation(5, 10, 7).unwrap());
        assert_eq!(make_permutation(5, 9, 0), Err(Error::InvalidK(0)));
        let mut p = make_permutation(3, 4, 10).unwrap();
        p.sort_unstable();
        assert_eq!(p, (0..10).collect::<Vec<_>>());
    }
}
