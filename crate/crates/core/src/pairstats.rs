//! Pairwise correlation of wrong answers.
//!
//! For two models we keep only the questions both got wrong (the *common
//! errors*). If each model picked uniformly among the `k - 1` wrong options,
//! independently, the two would agree with probability `1 / (k - 1)`. The
//! number of agreements is therefore a sum of independent Bernoulli
//! variables, whose mean and variance give a z-score for the observed count.
//! [`exact_match_pmf`] computes the exact (Poisson-binomial) law of that sum
//! as a check on the normal approximation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::table::{Cell, EvalTable};
use crate::{condensed_index, median, Error, Result};

/// Largest number of trials accepted by [`exact_match_pmf`].
pub const MAX_PMF_TRIALS: usize = 10_000;

/// Match statistics for one pair of models.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub model_a: String,
    pub model_b: String,
    pub n_common_errors: usize,
    /// Common errors on which both picked the same wrong option.
    pub n_matches: usize,
    /// Expected matches under the uniform null.
    pub mu: f64,
    /// Null variance of the match count.
    pub sigma2: f64,
    pub z: f64,
}

/// Probability that two independent uniform picks among the wrong options
/// of a `k`-option question coincide.
pub fn match_probability(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidK(k.into()));
    }
    Ok(1.0 / f64::from(k - 1))
}

/// Null mean and variance of the match count over questions with the given
/// option counts. Sums run in iteration order.
pub fn null_moments<I: IntoIterator<Item = u32>>(ks: I) -> Result<(f64, f64)> {
    let mut mu = 0.0;
    let mut sigma2 = 0.0;
    for k in ks {
        let p = match_probability(k)?;
        mu += p;
        sigma2 += p * (1.0 - p);
    }
    Ok((mu, sigma2))
}

fn resolve(table: &EvalTable, model: &str) -> Result<usize> {
    table
        .model_index(model)
        .ok_or_else(|| Error::UnknownModel(model.to_string()))
}

fn resolve_pair(table: &EvalTable, a: &str, b: &str) -> Result<(usize, usize)> {
    let ia = resolve(table, a)?;
    let ib = resolve(table, b)?;
    if ia == ib {
        return Err(Error::InvalidParameter("a pair needs two distinct models"));
    }
    Ok((ia, ib))
}

/// Both wrong, with neither cell missing nor abstained.
fn common_error(table: &EvalTable, a: usize, b: usize, q: usize) -> Option<(u32, u32)> {
    let correct = table.questions()[q].correct;
    match (table.cell(a, q), table.cell(b, q)) {
        (Cell::Chosen(x), Cell::Chosen(y)) if x != correct && y != correct => Some((x, y)),
        _ => None,
    }
}

/// Question indices, in table order, that both models answered wrongly.
pub fn common_error_indices(table: &EvalTable, a: usize, b: usize) -> Vec<usize> {
    (0..table.n_questions())
        .filter(|&q| common_error(table, a, b, q).is_some())
        .collect()
}

/// Ids of the questions both models answered wrongly, in table order.
pub fn common_error_questions<'t>(table: &'t EvalTable, a: &str, b: &str) -> Result<Vec<&'t str>> {
    let (ia, ib) = resolve_pair(table, a, b)?;
    Ok(common_error_indices(table, ia, ib)
        .into_iter()
        .map(|q| table.questions()[q].id.as_str())
        .collect())
}

/// Raw counts and null moments for models at indices `a` and `b`, before any
/// error checking on the result.
fn tally(table: &EvalTable, a: usize, b: usize) -> (usize, usize, f64, f64) {
    let mut n_common = 0;
    let mut n_matches = 0;
    let mut mu = 0.0;
    let mut sigma2 = 0.0;
    for (q, question) in table.questions().iter().enumerate() {
        if let Some((x, y)) = common_error(table, a, b, q) {
            n_common += 1;
            if x == y {
                n_matches += 1;
            }
            // k >= 2 is guaranteed by the table
            let p = 1.0 / f64::from(question.k - 1);
            mu += p;
            sigma2 += p * (1.0 - p);
        }
    }
    (n_common, n_matches, mu, sigma2)
}

fn stats_from_tally(
    table: &EvalTable,
    a: usize,
    b: usize,
    (n_common, n_matches, mu, sigma2): (usize, usize, f64, f64),
) -> Result<PairStats> {
    let (name_a, name_b) = (&table.models()[a], &table.models()[b]);
    if n_common == 0 {
        return Err(Error::NoCommonErrors(name_a.clone(), name_b.clone()));
    }
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateVariance(name_a.clone(), name_b.clone()));
    }
    Ok(PairStats {
        model_a: name_a.clone(),
        model_b: name_b.clone(),
        n_common_errors: n_common,
        n_matches,
        mu,
        sigma2,
        z: (n_matches as f64 - mu) / libm::sqrt(sigma2),
    })
}

/// Common-error match statistics and z-score for models `a` and `b`.
pub fn pair_stats(table: &EvalTable, a: &str, b: &str) -> Result<PairStats> {
    let (ia, ib) = resolve_pair(table, a, b)?;
    stats_from_tally(table, ia, ib, tally(table, ia, ib))
}

/// Why a [`ZMatrix`] pair carries no statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbsentReason {
    /// Fewer common errors than the requested minimum.
    BelowMinCommon,
    NoCommonErrors,
    DegenerateVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairEntry {
    Present(PairStats),
    Absent {
        n_common_errors: usize,
        n_matches: usize,
        reason: AbsentReason,
    },
}

impl PairEntry {
    pub fn stats(&self) -> Option<&PairStats> {
        match self {
            PairEntry::Present(s) => Some(s),
            PairEntry::Absent { .. } => None,
        }
    }

    pub fn n_common_errors(&self) -> usize {
        match self {
            PairEntry::Present(s) => s.n_common_errors,
            PairEntry::Absent { n_common_errors, .. } => *n_common_errors,
        }
    }

    pub fn n_matches(&self) -> usize {
        match self {
            PairEntry::Present(s) => s.n_matches,
            PairEntry::Absent { n_matches, .. } => *n_matches,
        }
    }

    pub fn z(&self) -> Option<f64> {
        self.stats().map(|s| s.z)
    }
}

/// Pair statistics for every unordered pair of models.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    models: Vec<String>,
    // upper triangle, row-major
    entries: Vec<PairEntry>,
}

impl ZMatrix {
    pub fn models(&self) -> &[String] {
        &self.models
    }

    /// Entry for models `i` and `j`; `None` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<&PairEntry> {
        if i == j {
            return None;
        }
        Some(&self.entries[condensed_index(self.models.len(), i, j)])
    }

    /// All pairs `(i, j, entry)` with `i < j`, row-major.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &PairEntry)> + '_ {
        let n = self.models.len();
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.entries.iter())
            .map(|((i, j), e)| (i, j, e))
    }

    pub fn z_scores(&self) -> ZScores {
        ZScores {
            labels: self.models.clone(),
            values: self.entries.iter().map(PairEntry::z).collect(),
        }
    }

    pub fn summary(&self) -> ZSummary {
        let zs: Vec<f64> = self.entries.iter().filter_map(PairEntry::z).collect();
        let commons: Vec<f64> = self
            .entries
            .iter()
            .map(|e| e.n_common_errors() as f64)
            .collect();
        ZSummary {
            n_pairs: self.entries.len(),
            n_present: zs.len(),
            min_z: zs.iter().copied().min_by(f64::total_cmp),
            median_z: median(&zs),
            min_common_errors: self.entries.iter().map(PairEntry::n_common_errors).min(),
            median_common_errors: median(&commons),
        }
    }
}

/// Headline numbers of a [`ZMatrix`]. z statistics cover present pairs;
/// common-error counts cover every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ZSummary {
    pub n_pairs: usize,
    pub n_present: usize,
    pub min_z: Option<f64>,
    pub median_z: Option<f64>,
    pub min_common_errors: Option<usize>,
    pub median_common_errors: Option<f64>,
}

/// Computes [`PairStats`] for every pair with at least `min_common` common
/// errors. Other pairs, and pairs whose statistics are undefined, are
/// recorded as absent.
pub fn z_matrix(table: &EvalTable, min_common: usize) -> Result<ZMatrix> {
    let n = table.n_models();
    if n < 2 {
        return Err(Error::TooFewModels(n));
    }
    let mut entries = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let counts = tally(table, i, j);
            let (n_common_errors, n_matches, _, _) = counts;
            let absent = |reason| PairEntry::Absent {
                n_common_errors,
                n_matches,
                reason,
            };
            let entry = if n_common_errors < min_common {
                absent(AbsentReason::BelowMinCommon)
            } else {
                match stats_from_tally(table, i, j, counts) {
                    Ok(s) => PairEntry::Present(s),
                    Err(Error::NoCommonErrors(..)) => absent(AbsentReason::NoCommonErrors),
                    Err(Error::DegenerateVariance(..)) => absent(AbsentReason::DegenerateVariance),
                    Err(e) => return Err(e),
                }
            };
            entries.push(entry);
        }
    }
    Ok(ZMatrix {
        models: table.models().to_vec(),
        entries,
    })
}

/// Symmetric matrix of z-scores, with `None` for absent pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    labels: Vec<String>,
    values: Vec<Option<f64>>,
}

impl ZScores {
    /// Builds from a full square matrix given row by row. The diagonal is
    /// ignored; off-diagonal entries must be symmetric.
    pub fn from_square(labels: Vec<String>, rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("z matrix is not square"));
        }
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (i, row) in rows.iter().enumerate() {
            for (j, other) in rows.iter().enumerate().skip(i + 1) {
                let (x, y) = (row[j], other[i]);
                let same = match (x, y) {
                    (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
                    (None, None) => true,
                    _ => false,
                };
                if !same {
                    return Err(Error::InvalidMatrix("z matrix is not symmetric"));
                }
                if x.is_some_and(|v| !v.is_finite()) {
                    return Err(Error::InvalidMatrix("z matrix has a non-finite entry"));
                }
                values.push(x);
            }
        }
        Ok(ZScores { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        self.values[condensed_index(self.labels.len(), i, j)]
    }
}

/// Exact distribution of the number of successes among independent
/// Bernoulli trials with the given probabilities (Poisson-binomial), by
/// dynamic programming. Entry `j` is `P(X = j)`.
pub fn exact_match_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    if probs.len() > MAX_PMF_TRIALS {
        return Err(Error::InvalidCount("more than 10000 trials"));
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let mut pmf = alloc::vec![0.0; probs.len() + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        let q = 1.0 - p;
        for j in (1..=i + 1).rev() {
            pmf[j] = pmf[j] * q + pmf[j - 1] * p;
        }
        pmf[0] *= q;
    }
    Ok(pmf)
}

/// Mean and variance of a distribution on `0..pmf.len()`.
pub fn pmf_moments(pmf: &[f64]) -> (f64, f64) {
    let mean: f64 = pmf.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
    let var = pmf
        .iter()
        .enumerate()
        .map(|(j, p)| (j as f64 - mean) * (j as f64 - mean) * p)
        .sum();
    (mean, var)
}

/// `P(X >= x)` under `pmf`.
pub fn exact_upper_tail(pmf: &[f64], x: usize) -> f64 {
    pmf.iter().skip(x).sum::<f64>().min(1.0)
}

/// `P(Z >= z)` for a standard normal `Z`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ResponseRecord;

    fn table(rows: &[(&str, &str, u32, Option<u32>, u32)]) -> EvalTable {
        EvalTable::from_records(
            rows.iter()
                .map(|&(m, q, k, s, c)| ResponseRecord::new(m, q, k, s, c)),
        )
        .unwrap()
    }

    #[test]
    fn common_errors_by_definition() {
        let t = table(&[
            ("a", "q1", 4, Some(1), 0),
            ("b", "q1", 4, Some(2), 0),
            ("a", "q2", 4, Some(0), 0),
            ("b", "q2", 4, Some(2), 0),
        ]);
        assert_eq!(common_error_questions(&t, "a", "b").unwrap(), ["q1"]);
    }

    #[test]
    fn abstain_excluded() {
        let t = table(&[
            ("a", "q1", 4, Some(1), 0),
            ("b", "q1", 4, None, 0),
            ("a", "q2", 4, Some(1), 0),
            ("b", "q2", 4, Some(1), 0),
        ]);
        assert_eq!(common_error_questions(&t, "a", "b").unwrap(), ["q2"]);
    }

    #[test]
    fn all_wrong_in_table_order() {
        let t = table(&[
            ("a", "q3", 4, Some(1), 0),
            ("a", "q1", 4, Some(1), 0),
            ("a", "q2", 4, Some(1), 0),
            ("b", "q1", 4, Some(2), 0),
            ("b", "q2", 4, Some(3), 0),
            ("b", "q3", 4, Some(1), 0),
        ]);
        assert_eq!(
            common_error_questions(&t, "a", "b").unwrap(),
            ["q3", "q1", "q2"]
        );
    }

    #[test]
    fn unknown_and_identical_models() {
        let t = table(&[("a", "q1", 4, Some(1), 0), ("b", "q1", 4, Some(1), 0)]);
        assert_eq!(
            common_error_questions(&t, "a", "zz"),
            Err(Error::UnknownModel("zz".into()))
        );
        assert!(pair_stats(&t, "a", "a").is_err());
    }

    #[test]
    fn match_probability_values() {
        assert!((match_probability(10).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(match_probability(2).unwrap(), 1.0);
        assert_eq!(match_probability(1), Err(Error::InvalidK(1)));
    }

    fn uniform_pair(n_common: usize, n_match: usize, k: u32) -> EvalTable {
        let mut rows = Vec::new();
        for i in 0..n_common {
            let q = alloc::format!("q{i}");
            rows.push(ResponseRecord::new("a", q.clone(), k, Some(1), 0));
            let sel = if i < n_match { 1 } else { 2.min(k - 1) };
            rows.push(ResponseRecord::new("b", q, k, Some(sel), 0));
        }
        EvalTable::from_records(rows).unwrap()
    }

    #[test]
    fn four_matches_of_four() {
        let s = pair_stats(&uniform_pair(4, 4, 10), "a", "b").unwrap();
        assert_eq!((s.n_common_errors, s.n_matches), (4, 4));
        assert!((s.mu - 4.0 / 9.0).abs() < 1e-12);
        assert!((s.sigma2 - 32.0 / 81.0).abs() < 1e-12);
        // (4 - 4/9) / sqrt(32/81) = 32 / sqrt(32) = sqrt(32)
        assert!((s.z - 32f64.sqrt()).abs() < 1e-9);
        assert!((s.z - 5.657).abs() < 1e-3);
    }

    #[test]
    fn observed_equals_mean() {
        let s = pair_stats(&uniform_pair(9, 1, 10), "a", "b").unwrap();
        assert!(s.z.abs() < 1e-12);
    }

    #[test]
    fn all_k2_is_degenerate() {
        let t = uniform_pair(5, 5, 2);
        assert!(matches!(
            pair_stats(&t, "a", "b"),
            Err(Error::DegenerateVariance(..))
        ));
        let t = table(&[("a", "q1", 4, Some(0), 0), ("b", "q1", 4, Some(1), 0)]);
        assert!(matches!(
            pair_stats(&t, "a", "b"),
            Err(Error::NoCommonErrors(..))
        ));
    }

    #[test]
    fn z_matrix_shape_and_absent_pairs() {
        let t = table(&[
            ("a", "q1", 4, Some(1), 0),
            ("b", "q1", 4, Some(1), 0),
            ("c", "q1", 4, Some(0), 0),
            ("a", "q2", 4, Some(2), 0),
            ("b", "q2", 4, Some(3), 0),
            ("c", "q2", 4, Some(0), 0),
        ]);
        let zm = z_matrix(&t, 1).unwrap();
        assert_eq!(zm.pairs().count(), 3);
        assert!(zm.get(0, 1).unwrap().stats().is_some());
        assert_eq!(zm.get(0, 1), zm.get(1, 0));
        assert!(zm.get(0, 0).is_none());
        assert!(matches!(
            zm.get(0, 2),
            Some(PairEntry::Absent {
                n_common_errors: 0,
                reason: AbsentReason::BelowMinCommon,
                ..
            })
        ));
        let zm0 = z_matrix(&t, 0).unwrap();
        assert!(matches!(
            zm0.get(2, 1),
            Some(PairEntry::Absent {
                reason: AbsentReason::NoCommonErrors,
                ..
            })
        ));
        let s = zm.summary();
        assert_eq!((s.n_pairs, s.n_present), (3, 1));
        assert_eq!(s.min_common_errors, Some(0));
        assert_eq!(s.median_common_errors, Some(0.0));
    }

    #[test]
    fn too_few_models() {
        let t = table(&[("a", "q1", 4, Some(1), 0)]);
        assert_eq!(z_matrix(&t, 1), Err(Error::TooFewModels(1)));
    }

    #[test]
    fn pmf_two_ninths_by_enumeration() {
        let p = 1.0 / 9.0;
        let pmf = exact_match_pmf(&[p, p]).unwrap();
        // outcomes: (0,0) (0,1) (1,0) (1,1)
        let q = 1.0 - p;
        assert!((pmf[0] - q * q).abs() < 1e-15);
        assert!((pmf[1] - 2.0 * p * q).abs() < 1e-15);
        assert!((pmf[2] - p * p).abs() < 1e-15);
        assert!((pmf[0] - 64.0 / 81.0).abs() < 1e-12);
        assert!((pmf[1] - 16.0 / 81.0).abs() < 1e-12);
        assert!((pmf[2] - 1.0 / 81.0).abs() < 1e-12);
    }

    #[test]
    fn pmf_edge_cases() {
        assert_eq!(exact_match_pmf(&[]).unwrap(), [1.0]);
        assert_eq!(exact_match_pmf(&[1.0]).unwrap(), [0.0, 1.0]);
        assert_eq!(exact_match_pmf(&[1.5]), Err(Error::InvalidProbability(1.5)));
        assert!(exact_match_pmf(&[f64::NAN]).is_err());
        assert!(exact_match_pmf(&alloc::vec![0.5; MAX_PMF_TRIALS + 1]).is_err());
    }

    #[test]
    fn normal_tail_values() {
        assert!((normal_upper_tail(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_upper_tail(1.959963984540054) - 0.025).abs() < 1e-12);
        assert!((normal_upper_tail(3.0) - 0.0013498980316301).abs() < 1e-12);
    }

    #[test]
    fn tail_at_three_sigma_n500() {
        let probs = alloc::vec![1.0 / 9.0; 500];
        let pmf = exact_match_pmf(&probs).unwrap();
        let (mu, s2) = null_moments(core::iter::repeat_n(10, 500)).unwrap();
        let x = libm::ceil(mu + 3.0 * libm::sqrt(s2)) as usize;
        let tail = exact_upper_tail(&pmf, x);
        assert!((0.0005..=0.005).contains(&tail), "tail = {tail}");
    }
}
