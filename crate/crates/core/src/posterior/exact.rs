//! Exact posterior means by enumeration: over S-paths with the `φ`
//! weights, and independently over set partitions with the per-cell
//! weights `Π_C ξ_{|C|}(T_{max C})`.

use crate::combinat::{enumerate_paths_capped, PartitionLabels, SPath};
use crate::numeric::log_sum_exp;
use crate::{Error, Result};

use super::{log_phi, GridEvaluator, PosteriorModel};

/// Largest `n` the path-sum oracle accepts.
pub const PATH_ORACLE_CAP: usize = 12;
/// Largest `n` the partition-sum oracle accepts.
pub const PARTITION_ORACLE_CAP: usize = 9;

/// Every path with its normalized posterior probability.
pub fn exact_path_distribution(model: &PosteriorModel) -> Result<Vec<(SPath, f64)>> {
    let paths = enumerate_paths_capped(model.n(), PATH_ORACLE_CAP)?;
    let logw: Vec<f64> = paths.iter().map(|s| log_phi(s, model)).collect();
    let lse = log_sum_exp(&logw);
    if !lse.is_finite() {
        return Err(Error::Divergent("all path weights vanish".into()));
    }
    Ok(paths.into_iter().zip(logw).map(|(s, w)| (s, (w - lse).exp())).collect())
}

/// Posterior-mean hazard on `times` by summing over all S-paths.
pub fn exact_hazard_curve(model: &PosteriorModel, times: &[f64]) -> Result<Vec<f64>> {
    let dist = exact_path_distribution(model)?;
    let eval = GridEvaluator::new(model, times);
    let mut acc = vec![0.0; times.len()];
    let mut scratch = vec![0.0; times.len()];
    for (s, z) in &dist {
        scratch.iter_mut().for_each(|x| *x = 0.0);
        eval.accumulate(model, s, &mut scratch);
        for (a, v) in acc.iter_mut().zip(&scratch) {
            *a += z * v;
        }
    }
    Ok(acc.iter().zip(eval.prior_terms()).map(|(a, p)| a + p).collect())
}

pub fn estimate_hazard_exact(t: f64, model: &PosteriorModel) -> Result<f64> {
    Ok(exact_hazard_curve(model, &[t])?[0])
}

/// `(max, size)` of each block of a restricted-growth labelling, 1-based.
fn label_summaries(labels: &[usize]) -> Vec<(usize, usize)> {
    let blocks = labels.iter().max().map_or(0, |&m| m + 1);
    let mut out = vec![(0usize, 0usize); blocks];
    for (i, &l) in labels.iter().enumerate() {
        out[l].0 = i + 1;
        out[l].1 += 1;
    }
    out
}

/// `ln Π_C ξ_{|C|}(T_{max C})` for cells given as `(max, size)`.
pub fn partition_log_weight(cells: &[(usize, usize)], model: &PosteriorModel) -> f64 {
    cells.iter().map(|&(j, e)| model.ln_xi_at(e, j)).sum()
}

/// Posterior-mean hazard on `times` by summing over all set partitions of
/// the complete observations. Shares no code with the path sum beyond the
/// `ξ` table.
pub fn partition_hazard_curve(model: &PosteriorModel, times: &[f64]) -> Result<Vec<f64>> {
    let n = model.n();
    if n > PARTITION_ORACLE_CAP {
        return Err(Error::CapExceeded { n, cap: PARTITION_ORACLE_CAP });
    }
    let prior: Vec<f64> = times.iter().map(|&t| model.prior_term(t)).collect();
    if n == 0 {
        return Ok(prior);
    }
    let parts: Vec<Vec<(usize, usize)>> = PartitionLabels::new(n).map(|l| label_summaries(&l)).collect();
    let logw: Vec<f64> = parts.iter().map(|c| partition_log_weight(c, model)).collect();
    let lse = log_sum_exp(&logw);
    if !lse.is_finite() {
        return Err(Error::Divergent("all partition weights vanish".into()));
    }
    let mut acc = vec![0.0; times.len()];
    for (cells, w) in parts.iter().zip(&logw) {
        let p = (w - lse).exp();
        for (a, &t) in acc.iter_mut().zip(times) {
            *a += p * cells.iter().map(|&(j, e)| model.lambda_block(t, j, e)).sum::<f64>();
        }
    }
    Ok(acc.iter().zip(&prior).map(|(a, p)| a + p).collect())
}

pub fn estimate_hazard_partition_exact(t: f64, model: &PosteriorModel) -> Result<f64> {
    Ok(partition_hazard_curve(model, &[t])?[0])
}

/// Path of a restricted-growth labelling; test helper for the fiber identity.
#[cfg(test)]
pub(crate) fn path_of_labels(labels: &[usize]) -> SPath {
    crate::combinat::path_of_summaries(labels.len(), label_summaries(labels).into_iter())
}
