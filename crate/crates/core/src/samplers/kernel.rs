//! Exact one-cycle transition matrices for small `n`, built by pushing a
//! point mass through each step kernel in turn.

use std::collections::HashMap;
use std::hash::Hash;

use crate::combinat::{enumerate_partitions, enumerate_paths, Partition, SPath};
use crate::numeric::normalize_log_weights;
use crate::posterior::PosteriorModel;
use crate::{Error, Result};

use super::steps::{ap_candidates, gibbs_path_candidates, gwcr_options, PartitionState};
use super::SamplerKind;

/// Largest `n` for which kernels are built.
pub const KERNEL_CAP: usize = 7;

fn push_through<S, F>(states: &[S], steps: usize, mut step: F) -> Vec<Vec<f64>>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S, usize) -> Vec<(S, f64)>,
{
    let index: HashMap<&S, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    states
        .iter()
        .map(|start| {
            let mut dist = vec![0.0; states.len()];
            dist[index[start]] = 1.0;
            for r in 1..=steps {
                let mut next = vec![0.0; states.len()];
                for (i, &w) in dist.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (s, p) in step(&states[i], r) {
                        next[index[&s]] += w * p;
                    }
                }
                dist = next;
            }
            dist
        })
        .collect()
}

/// Full-cycle kernel of the path samplers over [`enumerate_paths`] order:
/// `P[a][b]` is the probability that one ascending sweep moves path `a` to
/// path `b`.
pub fn transition_matrix(model: &PosteriorModel, kind: SamplerKind) -> Result<(Vec<SPath>, Vec<Vec<f64>>)> {
    let n = model.n();
    if n > KERNEL_CAP {
        return Err(Error::CapExceeded { n, cap: KERNEL_CAP });
    }
    if kind == SamplerKind::Gwcr {
        return Err(Error::Config("the partition sampler's kernel lives on partitions".into()));
    }
    let states = enumerate_paths(n)?;
    let p = push_through(&states, n.saturating_sub(1), |s, r| {
        let (q, lo, lw) = match kind {
            SamplerKind::Ap => {
                let c = ap_candidates(model, s, r);
                (c.q, c.lo, c.log_weights)
            }
            _ => {
                let (lo, lw) = gibbs_path_candidates(model, s, r);
                (r + 1, lo, lw)
            }
        };
        let probs = normalize_log_weights(&lw).expect("some candidate has positive weight");
        probs
            .into_iter()
            .enumerate()
            .map(|(d, pr)| {
                let mut t = s.clone();
                t.fill(r, q, lo + d);
                (t, pr)
            })
            .collect()
    });
    Ok((states, p))
}

/// Full-cycle kernel of the reseating sampler over [`enumerate_partitions`]
/// order, items visited `1..n`.
pub fn partition_transition_matrix(model: &PosteriorModel) -> Result<(Vec<Partition>, Vec<Vec<f64>>)> {
    let n = model.n();
    if n > KERNEL_CAP - 1 {
        return Err(Error::CapExceeded { n, cap: KERNEL_CAP - 1 });
    }
    let states = enumerate_partitions(n);
    let p = push_through(&states, n, |part, k| {
        let opts = gwcr_options(model, &PartitionState::from_partition(part), k);
        let lw: Vec<f64> = opts.iter().map(|o| o.1).collect();
        let probs = normalize_log_weights(&lw).expect("some option has positive weight");
        opts.into_iter().zip(probs).map(|((st, _), pr)| (st.to_partition(), pr)).collect()
    });
    Ok((states, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::PriorSpec;
    use crate::posterior::{exact_path_distribution, partition_log_weight};
    use crate::survdata::{Record, SurvivalDataset};

    fn model(times: &[f64], prior: PriorSpec) -> PosteriorModel {
        let recs = times.iter().map(|&t| Record::complete(t)).collect();
        PosteriorModel::new(SurvivalDataset::from_records(recs, 3.0).unwrap(), prior).unwrap()
    }

    #[test]
    fn rows_are_stochastic_and_z_is_stationary() {
        let m = model(&[0.3, 0.4, 0.9, 1.5, 2.2], PriorSpec::new(0.5, 0.0, 2.0, 6.0).unwrap());
        let z: Vec<f64> = exact_path_distribution(&m).unwrap().into_iter().map(|x| x.1).collect();
        for kind in [SamplerKind::Ap, SamplerKind::Gp] {
            let (states, p) = transition_matrix(&m, kind).unwrap();
            assert_eq!(states.len(), 42);
            for row in &p {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            for b in 0..states.len() {
                let zp: f64 = (0..states.len()).map(|a| z[a] * p[a][b]).sum();
                assert!((zp - z[b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partition_kernel_preserves_weights() {
        let m = model(&[0.3, 0.4, 0.9, 1.5], PriorSpec::new(-0.7, 1.0, 1.0, 6.0).unwrap());
        let (states, p) = partition_transition_matrix(&m).unwrap();
        assert_eq!(states.len(), 15);
        let lw: Vec<f64> =
            states.iter().map(|s| partition_log_weight(&s.cell_summaries().collect::<Vec<_>>(), &m)).collect();
        let w = normalize_log_weights(&lw).unwrap();
        for b in 0..states.len() {
            let wp: f64 = (0..states.len()).map(|a| w[a] * p[a][b]).sum();
            assert!((wp - w[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn caps() {
        let m = model(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], PriorSpec::gamma_process(6.0));
        assert!(matches!(transition_matrix(&m, SamplerKind::Ap), Err(Error::CapExceeded { .. })));
        let m = model(&[0.1, 0.2], PriorSpec::gamma_process(6.0));
        assert!(transition_matrix(&m, SamplerKind::Gwcr).is_err());
    }
}
