//! Validity and efficiency metrics over labeled prediction sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conformal::PredictionSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_MIN_BIN: usize = 20;

/// Human-readable description of the SSM rule, written into reports.
pub fn ssm_definition(min_bin: usize) -> String {
    format!(
        "max miscoverage over set-size strata; strata with fewer than {min_bin} sets merged into the next larger size, a short trailing stratum merged into the previous one; marginal EMR when no stratum reaches {min_bin}"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MetricReport<S> {
    pub emr: S,
    pub apss: S,
    pub ssm: S,
    /// `true` when SSM fell back to marginal EMR.
    pub ssm_fallback: bool,
    pub n_test: usize,
    pub fano_bound: Option<S>,
}

fn covered_flags(sets: &[PredictionSet]) -> Result<Vec<bool>> {
    sets.iter()
        .map(|s| s.covered.ok_or_else(|| Error::MissingLabels(s.question_id.clone())))
        .collect()
}

pub fn emr<S: Scalar>(sets: &[PredictionSet]) -> Result<S> {
    if sets.is_empty() {
        return Err(Error::EmptySets);
    }
    let flags = covered_flags(sets)?;
    let misses = flags.iter().filter(|&&c| !c).count();
    Ok(S::count(misses) / S::count(sets.len()))
}

pub fn apss<S: Scalar>(sets: &[PredictionSet]) -> Result<S> {
    if sets.is_empty() {
        return Err(Error::EmptySets);
    }
    let total: usize = sets.iter().map(|s| s.size).sum();
    Ok(S::count(total) / S::count(sets.len()))
}

/// Size-stratified miscoverage. Returns the value and whether it fell back
/// to marginal EMR.
pub fn ssm<S: Scalar>(sets: &[PredictionSet], min_bin: usize) -> Result<(S, bool)> {
    if min_bin == 0 {
        return Err(Error::InvalidConfig("min_bin must be at least 1".into()));
    }
    let flags = covered_flags(sets)?;
    let marginal = emr::<S>(sets)?;

    // size -> (count, misses), ascending
    let mut by_size: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (s, &covered) in sets.iter().zip(&flags) {
        let e = by_size.entry(s.size).or_default();
        e.0 += 1;
        e.1 += usize::from(!covered);
    }

    let mut strata: Vec<(usize, usize)> = Vec::new();
    let mut pending = (0usize, 0usize);
    for (n, miss) in by_size.into_values() {
        pending.0 += n;
        pending.1 += miss;
        if pending.0 >= min_bin {
            strata.push(pending);
            pending = (0, 0);
        }
    }
    if pending.0 > 0 {
        match strata.last_mut() {
            Some(last) => {
                last.0 += pending.0;
                last.1 += pending.1;
            }
            None => return Ok((marginal, true)),
        }
    }
    let worst = strata
        .iter()
        .map(|&(n, miss)| S::count(miss) / S::count(n))
        .fold(S::zero(), S::max);
    Ok((worst, false))
}

/// Binary entropy in nats.
pub fn binary_entropy<S: Scalar>(p: S) -> S {
    let term = |x: S| if x > S::zero() { -x * x.ln() } else { S::zero() };
    term(p) + term(S::one() - p)
}

/// Upper bound on `H(Y|X)` from conformal set sizes and miscoverage.
///
/// Conditional expectations over an empty event contribute zero. A miss by
/// a set covering the whole label space contributes `ln 1 = 0`.
pub fn fano_bound<S: Scalar>(sets: &[PredictionSet], alpha: S, n_cal: usize, label_space_size: usize) -> Result<S> {
    crate::conformal::check_alpha(alpha)?;
    let flags = covered_flags(sets)?;
    if let Some(s) = sets.iter().find(|s| s.size > label_space_size) {
        return Err(Error::SetExceedsLabelSpace {
            size: s.size,
            label_space: label_space_size,
        });
    }
    let (mut miss_n, mut miss_sum, mut hit_n, mut hit_sum) = (0usize, S::zero(), 0usize, S::zero());
    for (s, &covered) in sets.iter().zip(&flags) {
        if covered {
            hit_n += 1;
            hit_sum = hit_sum + S::count(s.size.max(1)).ln();
        } else {
            miss_n += 1;
            miss_sum = miss_sum + S::count((label_space_size - s.size).max(1)).ln();
        }
    }
    let cond = |sum: S, n: usize| if n == 0 { S::zero() } else { sum / S::count(n) };
    let alpha_n = alpha - S::one() / S::count(n_cal + 1);
    Ok(binary_entropy(alpha) + alpha * cond(miss_sum, miss_n) + (S::one() - alpha_n) * cond(hit_sum, hit_n))
}

/// Computes every metric for a batch of labeled sets.
pub fn evaluate<S: Scalar>(
    sets: &[PredictionSet],
    min_bin: usize,
    fano: Option<(S, usize, usize)>,
) -> Result<MetricReport<S>> {
    let (ssm_value, ssm_fallback) = ssm(sets, min_bin)?;
    let fano_bound = match fano {
        Some((alpha, n_cal, label_space)) => Some(fano_bound(sets, alpha, n_cal, label_space)?),
        None => None,
    };
    Ok(MetricReport {
        emr: emr(sets)?,
        apss: apss(sets)?,
        ssm: ssm_value,
        ssm_fallback,
        n_test: sets.len(),
        fano_bound,
    })
}

/// Area under the ROC curve of `scores` for `labels`, ties counted half.
/// `None` when one class is absent.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * mid_rank;
        i = j + 1;
    }
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return None;
    }
    Some((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg))
}

pub fn mean<S: Scalar>(values: &[S]) -> S {
    if values.is_empty() {
        return S::zero();
    }
    values.iter().copied().sum::<S>() / S::count(values.len())
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_std<S: Scalar>(values: &[S]) -> S {
    if values.len() < 2 {
        return S::zero();
    }
    let m = mean(values);
    let ss: S = values.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / S::count(values.len() - 1)).sqrt()
}
