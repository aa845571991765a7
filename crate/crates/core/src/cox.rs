//! Proportional hazards `λ(t | Z) = e^{θᵀZ} λ_0(t)` with the S-path prior on
//! the baseline `λ_0`.
//!
//! One cycle updates, in order: the path given `θ` (accelerated sweep under
//! `g_{N,θ}`), the latent `(y_j, Q_j)` pairs, and `θ` by random-walk
//! Metropolis against `π(θ) B(θ) Π_j exp(-g_{N,θ}(y_j) Q_j)` where
//! `ln B(θ) = -∫ψ(g_{N,θ}) dη + Σ_{complete} θᵀZ_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::combinat::SPath;
use crate::levy::{laplace_exponent_integral, PriorSpec};
use crate::posterior::{draw_latent, GridEvaluator, LatentDraw, PosteriorModel};
use crate::samplers::{ap_sweep, HazardCurve, StepScratch};
use crate::survdata::SurvivalDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoxConfig {
    pub cycles: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream: u64,
    /// standard deviation of the independent normal prior on each `θ_k`
    pub prior_sd: f64,
    /// initial random-walk scale
    pub step: f64,
    /// tune the scale toward 20–50% acceptance during burn-in
    pub adapt: bool,
    /// keep `θ` at its initial value (the chain then reduces to the plain
    /// path sampler plus latent draws)
    pub freeze_theta: bool,
    pub initial_theta: Option<Vec<f64>>,
    /// grid for the baseline-hazard estimate; may be empty
    pub grid: Vec<f64>,
    pub batches: usize,
}

impl CoxConfig {
    pub fn new(cycles: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            cycles,
            burn_in,
            seed,
            stream: 0,
            prior_sd: 10.0,
            step: 0.1,
            adapt: true,
            freeze_theta: false,
            initial_theta: None,
            grid: Vec::new(),
            batches: 20,
        }
    }

    /// Path stream and auxiliary stream. The path stream equals the one a
    /// plain chain with the same seed and stream uses.
    fn rngs(&self) -> (ChaCha8Rng, ChaCha8Rng) {
        let mut path = ChaCha8Rng::seed_from_u64(self.seed);
        path.set_stream(self.stream);
        let mut aux = ChaCha8Rng::seed_from_u64(self.seed);
        aux.set_stream(self.stream | (1 << 63));
        (path, aux)
    }
}

/// `ln B(θ)`.
pub fn log_b(theta: &[f64], data: &SurvivalDataset, prior: &PriorSpec) -> Result<f64> {
    let g = data.weighted_ttt(theta)?;
    Ok(-laplace_exponent_integral(&g, prior)? + data.complete_linear_predictor_sum(theta))
}

/// Log of the `θ` full conditional, up to a constant.
pub fn theta_log_target(
    theta: &[f64],
    data: &SurvivalDataset,
    prior: &PriorSpec,
    latent: &LatentDraw,
    prior_sd: f64,
) -> Result<f64> {
    let g = data.weighted_ttt(theta)?;
    let ln_prior: f64 = theta.iter().map(|x| -0.5 * (x / prior_sd).powi(2)).sum();
    let tilt: f64 = latent.atoms.iter().map(|a| g.eval(a.y) * a.q).sum();
    Ok(ln_prior - laplace_exponent_integral(&g, prior)? + data.complete_linear_predictor_sum(theta) - tilt)
}

/// Metropolis acceptance probability for a symmetric proposal.
#[inline]
pub fn acceptance_probability(log_current: f64, log_proposed: f64) -> f64 {
    if log_proposed >= log_current {
        1.0
    } else {
        (log_proposed - log_current).exp()
    }
}

#[derive(Debug, Clone)]
pub struct CoxState {
    pub path: SPath,
    pub latent: LatentDraw,
    pub theta: Vec<f64>,
    /// posterior model under the current `g_{N,θ}`
    pub model: PosteriorModel,
    pub step: f64,
    pub proposed: usize,
    pub accepted: usize,
    scratch: StepScratch,
}

impl CoxState {
    pub fn new(data: SurvivalDataset, prior: PriorSpec, theta: Vec<f64>, step: f64) -> Result<Self> {
        let g = data.weighted_ttt(&theta)?;
        let n = data.n_complete();
        let model = PosteriorModel::with_transform(data, prior, g)?;
        Ok(Self {
            path: SPath::singletons(n),
            latent: LatentDraw::default(),
            theta,
            model,
            step,
            proposed: 0,
            accepted: 0,
            scratch: StepScratch::default(),
        })
    }
}

/// Random-walk Metropolis update of `θ` given the path and latent pairs.
/// Returns whether the proposal was accepted.
pub fn metropolis_theta<R: Rng + ?Sized>(state: &mut CoxState, prior_sd: f64, rng: &mut R) -> Result<bool> {
    let d = state.theta.len();
    if d == 0 {
        return Ok(false);
    }
    let proposal: Vec<f64> = state
        .theta
        .iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(rng);
            x + state.step * z
        })
        .collect();
    let data = state.model.data();
    let prior = state.model.prior();
    let cur = theta_log_target(&state.theta, data, prior, &state.latent, prior_sd)?;
    let new = theta_log_target(&proposal, data, prior, &state.latent, prior_sd)?;
    let u: f64 = rng.random();
    state.proposed += 1;
    if u < acceptance_probability(cur, new) {
        let g = data.weighted_ttt(&proposal)?;
        state.model = state.model.retilted(g)?;
        state.theta = proposal;
        state.accepted += 1;
        return Ok(true);
    }
    Ok(false)
}

/// One three-step cycle. Path moves draw from `path_rng`; latent and `θ`
/// moves from `aux_rng`.
pub fn cox_gibbs_cycle<R: Rng + ?Sized>(
    state: &mut CoxState,
    config: &CoxConfig,
    path_rng: &mut R,
    aux_rng: &mut R,
) -> Result<bool> {
    ap_sweep(&state.model, &mut state.path, &mut state.scratch, path_rng);
    state.latent = draw_latent(&state.model, &state.path, aux_rng);
    if config.freeze_theta {
        return Ok(false);
    }
    metropolis_theta(state, config.prior_sd, aux_rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSummary {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// post-burn-in acceptance rate
    pub acceptance: f64,
    pub final_step: f64,
}

impl ThetaSummary {
    fn from_trace(trace: &[Vec<f64>], d: usize, level: f64, acceptance: f64, final_step: f64) -> Self {
        let m = trace.len() as f64;
        let mut s = Self { mean: vec![], sd: vec![], lower: vec![], upper: vec![], acceptance, final_step };
        for k in 0..d {
            let mut col: Vec<f64> = trace.iter().map(|t| t[k]).collect();
            let mean = col.iter().sum::<f64>() / m;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            col.sort_by(f64::total_cmp);
            let pick = |p: f64| col[((p * (m - 1.0)).round() as usize).min(col.len() - 1)];
            s.mean.push(mean);
            s.sd.push(var.sqrt());
            s.lower.push(pick(0.5 * (1.0 - level)));
            s.upper.push(pick(0.5 * (1.0 + level)));
        }
        s
    }

    pub fn covers(&self, k: usize, value: f64) -> bool {
        self.lower[k] <= value && value <= self.upper[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxRun {
    pub theta: ThetaSummary,
    pub theta_trace: Vec<Vec<f64>>,
    pub path_trace: Vec<SPath>,
    /// baseline-hazard ergodic average on `config.grid`
    pub baseline: HazardCurve,
}

/// Runs the chain; `θ` summaries use a central 95% interval.
pub fn run_cox(data: SurvivalDataset, prior: PriorSpec, config: &CoxConfig) -> Result<CoxRun> {
    if config.cycles == 0 {
        return Err(Error::Config("cycles must be at least 1".into()));
    }
    let d = data.covariate_dim();
    let theta0 = config.initial_theta.clone().unwrap_or_else(|| vec![0.0; d]);
    if theta0.len() != d {
        return Err(Error::Dimension { expected: d, got: theta0.len() });
    }
    let (mut path_rng, mut aux_rng) = config.rngs();
    let mut state = CoxState::new(data, prior, theta0, config.step)?;

    let mut window = (0usize, 0usize);
    for c in 0..config.burn_in {
        let acc = cox_gibbs_cycle(&mut state, config, &mut path_rng, &mut aux_rng)?;
        window.0 += acc as usize;
        window.1 += 1;
        if config.adapt && !config.freeze_theta && (c + 1) % 50 == 0 {
            let rate = window.0 as f64 / window.1 as f64;
            if rate < 0.2 {
                state.step *= 0.7;
            } else if rate > 0.5 {
                state.step *= 1.4;
            }
            window = (0, 0);
        }
    }
    let (p0, a0) = (state.proposed, state.accepted);

    let width = config.grid.len();
    let mut batches = crate::samplers::BatchMeans::new(config.cycles, config.batches, width);
    let mut eval = GridEvaluator::new(&state.model, &config.grid);
    let mut eval_theta = state.theta.clone();
    let mut buf = vec![0.0; width];
    let mut theta_trace = Vec::with_capacity(config.cycles);
    let mut path_trace = Vec::with_capacity(config.cycles);
    for _ in 0..config.cycles {
        cox_gibbs_cycle(&mut state, config, &mut path_rng, &mut aux_rng)?;
        if width > 0 {
            if state.theta != eval_theta {
                eval = GridEvaluator::new(&state.model, &config.grid);
                eval_theta = state.theta.clone();
            }
            buf.iter_mut().for_each(|x| *x = 0.0);
            eval.accumulate(&state.model, &state.path, &mut buf);
            for (b, p) in buf.iter_mut().zip(eval.prior_terms()) {
                *b += p;
            }
            batches.push(&buf);
        }
        theta_trace.push(state.theta.clone());
        path_trace.push(state.path.clone());
    }
    let (estimate, mc_se) = if width > 0 { batches.finish() } else { (Vec::new(), Vec::new()) };
    let proposed = state.proposed - p0;
    let acceptance = if proposed == 0 { 0.0 } else { (state.accepted - a0) as f64 / proposed as f64 };
    Ok(CoxRun {
        theta: ThetaSummary::from_trace(&theta_trace, d, 0.95, acceptance, state.step),
        theta_trace,
        path_trace,
        baseline: HazardCurve { grid: config.grid.clone(), estimate, mc_se },
    })
}

/// Largest flow imbalance `|π(a)K(a,b) - π(b)K(b,a)|` of the Metropolis
/// kernel restricted to a 1-d grid of `θ` values with a uniform proposal
/// over the other grid points. `log_target` is evaluated once per point.
pub fn flow_balance<F: FnMut(f64) -> Result<f64>>(grid: &[f64], mut log_target: F) -> Result<f64> {
    let lt: Vec<f64> = grid.iter().map(|&x| log_target(x)).collect::<Result<_>>()?;
    let max = lt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = lt.iter().map(|v| (v - max).exp()).sum();
    let pi: Vec<f64> = lt.iter().map(|v| (v - max).exp() / z).collect();
    let q = 1.0 / (grid.len() - 1) as f64;
    let mut worst = 0.0f64;
    for a in 0..grid.len() {
        for b in 0..grid.len() {
            if a != b {
                let fab = pi[a] * q * acceptance_probability(lt[a], lt[b]);
                let fba = pi[b] * q * acceptance_probability(lt[b], lt[a]);
                worst = worst.max((fab - fba).abs());
            }
        }
    }
    Ok(worst)
}
