//! Posterior weights over S-paths and the hazard estimator built on them.
//!
//! For a path `S` the unnormalized weight is
//! `φ(S) = Π_{j: m_j > 0} C(j-1-S_{j-1}, j-S_j) ξ_{m_j}(T_j)` with
//! `ξ_i(t) = ∫_t^∞ κ_i η(dy)`. The posterior-mean hazard is the prior term
//! `ξ_1(t)` plus the `Z`-average of `Σ_j λ_j(t|S)`, where
//! `λ_j = ξ_{m_j+1}(max(t, T_j)) / ξ_{m_j}(T_j)`.

mod draws;
mod exact;

pub use draws::{
    draw_crm_truncated, draw_latent, draw_q, draw_y, hazard_from_measure, CrmJump, LatentAtom, LatentDraw,
};
pub use exact::{
    estimate_hazard_exact, estimate_hazard_partition_exact, exact_hazard_curve, exact_path_distribution,
    partition_hazard_curve, partition_log_weight, PARTITION_ORACLE_CAP, PATH_ORACLE_CAP,
};

use crate::combinat::SPath;
use crate::levy::{PriorSpec, XiTable};
use crate::numeric::LnFactorials;
use crate::survdata::{PiecewiseLinear, SurvivalDataset};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PosteriorModel {
    data: SurvivalDataset,
    table: XiTable,
    ln_fact: LnFactorials,
    /// grid column of `T_j` in the table, index `j - 1`
    time_cols: Vec<usize>,
}

impl PosteriorModel {
    /// Model with the plain total-time-on-test transform.
    pub fn new(data: SurvivalDataset, prior: PriorSpec) -> Result<Self> {
        let g = data.ttt();
        Self::with_transform(data, prior, g)
    }

    /// Model whose tilting uses the given transform (the covariate-weighted
    /// one for proportional hazards).
    pub fn with_transform(data: SurvivalDataset, prior: PriorSpec, g: PiecewiseLinear) -> Result<Self> {
        if prior.eta_upper < data.tau() {
            return Err(Error::Prior(format!("eta_upper {} is below tau {}", prior.eta_upper, data.tau())));
        }
        if let Some(&last) = data.complete_times().last() {
            if last >= prior.eta_upper {
                return Err(Error::Prior(format!("eta_upper {} must exceed the last complete time", prior.eta_upper)));
            }
        }
        let n = data.n_complete();
        let table = XiTable::new(g, prior, n + 1)?;
        let time_cols =
            data.complete_times().iter().map(|&t| table.locate(t).unwrap_or(table.grid().len() - 1)).collect();
        Ok(Self { data, table, ln_fact: LnFactorials::new(n + 1), time_cols })
    }

    /// Same data and prior, new transform. Rebuilds the `ξ` table.
    pub fn retilted(&self, g: PiecewiseLinear) -> Result<Self> {
        Self::with_transform(self.data.clone(), *self.prior(), g)
    }

    pub fn data(&self) -> &SurvivalDataset {
        &self.data
    }

    pub fn prior(&self) -> &PriorSpec {
        self.table.prior()
    }

    pub fn g(&self) -> &PiecewiseLinear {
        self.table.g()
    }

    pub fn table(&self) -> &XiTable {
        &self.table
    }

    /// Number of complete observations.
    pub fn n(&self) -> usize {
        self.time_cols.len()
    }

    /// `T_j`, 1-based.
    #[inline]
    pub fn time(&self, j: usize) -> f64 {
        self.data.complete_times()[j - 1]
    }

    /// `ln ∫_{T_j}^∞ κ_i η`.
    #[inline]
    pub fn ln_xi_at(&self, i: usize, j: usize) -> f64 {
        self.table.at_grid(i, self.time_cols[j - 1])
    }

    #[inline]
    pub(crate) fn time_col(&self, j: usize) -> usize {
        self.time_cols[j - 1]
    }

    #[inline]
    pub fn ln_binom(&self, n: usize, k: usize) -> f64 {
        self.ln_fact.ln_binom(n, k)
    }

    /// Log factor contributed by location `j` when `S_{j-1} = prev` and
    /// `S_j = cur`; zero when the increment vanishes.
    #[inline]
    pub fn ln_block_factor(&self, j: usize, prev: usize, cur: usize) -> f64 {
        if cur == prev {
            return 0.0;
        }
        self.ln_fact.ln_binom(j - 1 - prev, j - cur) + self.ln_xi_at(cur - prev, j)
    }

    /// `ξ_1(t)`, the prior term.
    pub fn prior_term(&self, t: f64) -> f64 {
        self.table.ln_xi(1, t).exp()
    }

    /// `λ_j(t | S)`.
    pub fn lambda_j(&self, t: f64, path: &SPath, j: usize) -> f64 {
        let m = path.increment(j);
        if m == 0 {
            return 0.0;
        }
        self.lambda_block(t, j, m)
    }

    /// `λ_j` for a block of size `m` with maximum `j`.
    pub fn lambda_block(&self, t: f64, j: usize, m: usize) -> f64 {
        let den = self.ln_xi_at(m, j);
        let num = if t <= self.time(j) { self.ln_xi_at(m + 1, j) } else { self.table.ln_xi(m + 1, t) };
        if num == f64::NEG_INFINITY {
            return 0.0;
        }
        (num - den).exp()
    }

    /// `Σ_j λ_j(t | S)`.
    pub fn path_hazard(&self, t: f64, path: &SPath) -> f64 {
        path.blocks().fold(0.0, |s, (j, m)| s + self.lambda_block(t, j, m))
    }

    /// Hazard conditional on a path: prior term plus `Σ_j λ_j`.
    pub fn conditional_hazard(&self, t: f64, path: &SPath) -> f64 {
        self.prior_term(t) + self.path_hazard(t, path)
    }
}

/// `ln φ(S)`.
pub fn log_phi(path: &SPath, model: &PosteriorModel) -> f64 {
    assert_eq!(path.n(), model.n(), "path length does not match the data");
    (1..=path.n()).map(|j| model.ln_block_factor(j, path.get(j - 1), path.get(j))).sum()
}

/// Precomputed `λ` lookups on a fixed time grid, for ergodic averaging.
#[derive(Debug, Clone)]
pub struct GridEvaluator {
    times: Vec<f64>,
    prior: Vec<f64>,
    /// row `i - 1`: `ln ξ_i(t_g)` for `i = 2..=n+1` (row 0 unused)
    ln_xi: Vec<f64>,
    /// first grid index with `t_g > T_j`, index `j - 1`
    first_after: Vec<usize>,
}

impl GridEvaluator {
    pub fn new(model: &PosteriorModel, times: &[f64]) -> Self {
        let n = model.n();
        let g = times.len();
        let mut ln_xi = vec![f64::NEG_INFINITY; (n + 1) * g];
        for i in 2..=n + 1 {
            for (k, &t) in times.iter().enumerate() {
                ln_xi[(i - 1) * g + k] = model.table().ln_xi(i, t);
            }
        }
        let first_after = (1..=n)
            .map(|j| {
                let tj = model.time(j);
                times.iter().position(|&t| t > tj).unwrap_or(g)
            })
            .collect();
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]), "grid must be sorted");
        Self { times: times.to_vec(), prior: times.iter().map(|&t| model.prior_term(t)).collect(), ln_xi, first_after }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prior_terms(&self) -> &[f64] {
        &self.prior
    }

    /// Adds `Σ_j λ_j(t_g | S)` into `out` (length of the grid).
    pub fn accumulate(&self, model: &PosteriorModel, path: &SPath, out: &mut [f64]) {
        let g = self.times.len();
        for (j, m) in path.blocks() {
            let den = model.ln_xi_at(m, j);
            let head = (model.ln_xi_at(m + 1, j) - den).exp();
            let cut = self.first_after[j - 1];
            for v in &mut out[..cut] {
                *v += head;
            }
            let row = &self.ln_xi[m * g..(m + 1) * g];
            for k in cut..g {
                let num = row[k];
                if num > f64::NEG_INFINITY {
                    out[k] += (num - den).exp();
                }
            }
        }
    }
}
