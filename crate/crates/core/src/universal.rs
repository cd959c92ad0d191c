//! Universal errors: questions that (nearly) every model gets wrong, and how
//! strongly the wrong answers concentrate on one option.

use alloc::string::String;
use alloc::vec::Vec;

use crate::rng;
use crate::table::{Cell, EvalTable};
use crate::{Error, Result};

/// Modal wrong answer on a question nobody answered correctly.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalErrorRecord {
    pub question: String,
    pub k: u32,
    /// Models with a wrong, non-abstained answer.
    pub n_wrong: usize,
    pub modal_answer: u32,
    pub modal_count: usize,
    /// `modal_count / n_wrong`.
    pub fraction: f64,
}

/// Questions with at least `min_wrong` wrong answers and no correct one.
/// Abstentions and missing cells count as neither. Ties for the modal answer
/// go to the smallest option index.
pub fn universal_questions(table: &EvalTable, min_wrong: usize) -> Result<Vec<UniversalErrorRecord>> {
    if min_wrong == 0 {
        return Err(Error::InvalidCount("min_wrong must be at least 1"));
    }
    let mut out = Vec::new();
    let mut counts = Vec::new();
    for (q, question) in table.questions().iter().enumerate() {
        counts.clear();
        counts.resize(question.k as usize, 0usize);
        let mut any_correct = false;
        for m in 0..table.n_models() {
            if let Cell::Chosen(o) = table.cell(m, q) {
                if o == question.correct {
                    any_correct = true;
                    break;
                }
                counts[o as usize] += 1;
            }
        }
        let n_wrong: usize = counts.iter().sum();
        if any_correct || n_wrong < min_wrong {
            continue;
        }
        let mut modal = 0;
        for (o, &c) in counts.iter().enumerate() {
            if c > counts[modal] {
                modal = o;
            }
        }
        out.push(UniversalErrorRecord {
            question: question.id.clone(),
            k: question.k,
            n_wrong,
            modal_answer: modal as u32,
            modal_count: counts[modal],
            fraction: counts[modal] as f64 / n_wrong as f64,
        });
    }
    Ok(out)
}

/// Approximate expected largest share when `n_models` balls fall uniformly
/// into `m_bins` bins: `1/M + sqrt(2 ln M / (N M))`.
pub fn expected_max_fraction(n_models: u64, m_bins: u64) -> Result<f64> {
    if n_models == 0 || m_bins == 0 {
        return Err(Error::InvalidCount("models and bins must be at least 1"));
    }
    let (n, m) = (n_models as f64, m_bins as f64);
    Ok(1.0 / m + libm::sqrt(2.0 * libm::log(m) / (n * m)))
}

/// Monte Carlo mean of the largest bin share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxFractionEstimate {
    pub mean: f64,
    /// Standard error of `mean`; zero for a single trial.
    pub std_error: f64,
    pub trials: u64,
}

/// Drops `n_models` balls uniformly into `m_bins` bins `trials` times and
/// averages the largest share. Reproducible for a given seed.
pub fn simulate_max_fraction(n_models: u32, m_bins: u32, trials: u64, seed: u64) -> Result<MaxFractionEstimate> {
    if n_models == 0 || m_bins == 0 || trials == 0 {
        return Err(Error::InvalidCount("models, bins and trials must be at least 1"));
    }
    let mut rng = rng::generator(seed);
    let mut bins = alloc::vec![0u32; m_bins as usize];
    // exact integer accumulation keeps the mean inside [ceil(N/M)/N, 1]
    let mut sum: u128 = 0;
    let mut sum_sq: u128 = 0;
    for _ in 0..trials {
        bins.iter_mut().for_each(|b| *b = 0);
        for _ in 0..n_models {
            bins[rng::below(&mut rng, m_bins) as usize] += 1;
        }
        let max = u128::from(*bins.iter().max().expect("m_bins >= 1"));
        sum += max;
        sum_sq += max * max;
    }
    let n = f64::from(n_models);
    let t = trials as f64;
    let mean_load = sum as f64 / t;
    let std_error = if trials > 1 {
        let var = (sum_sq as f64 - t * mean_load * mean_load) / (t - 1.0);
        libm::sqrt(var.max(0.0) / t) / n
    } else {
        0.0
    };
    Ok(MaxFractionEstimate {
        mean: (sum as f64 / (n * t)).min(1.0),
        std_error,
        trials,
    })
}

/// Right-continuous empirical CDF as `(x, F(x))` at each distinct value,
/// ascending.
pub fn empirical_cdf(fractions: &[f64]) -> Result<Vec<(f64, f64)>> {
    if fractions.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&x) = fractions.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidFraction(x));
    }
    let mut sorted = fractions.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match steps.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => steps.push((x, f)),
        }
    }
    Ok(steps)
}

/// Kolmogorov–Smirnov distance between a step CDF (as returned by
/// [`empirical_cdf`]) and a continuous reference CDF.
pub fn ks_distance(steps: &[(f64, f64)], reference: impl Fn(f64) -> f64) -> f64 {
    let mut prev = 0.0;
    let mut worst: f64 = 0.0;
    for &(x, f) in steps {
        let g = reference(x);
        worst = worst.max(libm::fabs(f - g)).max(libm::fabs(g - prev));
        prev = f;
    }
    worst
}
