//! MCMC over S-paths and the ergodic-average hazard estimate.
//!
//! Three samplers share one driver: the accelerated path sampler (`Ap`),
//! which rewrites a whole flat stretch per step; single-coordinate Gibbs on
//! the path (`Gp`); and a partition-level Gibbs sampler that reseats one
//! item at a time (`Gwcr`). Every cycle contributes the Rao–Blackwellized
//! hazard `Σ_j λ_j(t | S)` to the average.

mod kernel;
mod steps;

pub use kernel::{partition_transition_matrix, transition_matrix, KERNEL_CAP};
pub use steps::{
    ap_candidates, ap_candidates_closed_form, ap_step, ap_sweep, gibbs_path_candidates, gibbs_path_step, gwcr_options,
    gwcr_reseat_step, next_increment, ApCandidates, PartitionState, StepScratch,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinat::{sample_partition_given_path, SPath};
use crate::posterior::{draw_crm_truncated, draw_latent, hazard_from_measure, GridEvaluator, PosteriorModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Ap,
    Gp,
    Gwcr,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Ap, SamplerKind::Gp, SamplerKind::Gwcr];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Ap => "ap",
            SamplerKind::Gp => "gp",
            SamplerKind::Gwcr => "gwcr",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ap" => Ok(SamplerKind::Ap),
            "gp" => Ok(SamplerKind::Gp),
            "gwcr" => Ok(SamplerKind::Gwcr),
            other => Err(Error::Config(format!("unknown sampler '{other}' (expected ap, gp or gwcr)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanOrder {
    /// `r = 1, ..., n-1` every cycle.
    #[default]
    Ascending,
    /// `n - 1` sites drawn uniformly with replacement per cycle.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InitialPath {
    /// `(0, 1, ..., n)`.
    #[default]
    Singletons,
    /// `(0, ..., 0, n)`.
    SingleBlock,
    Given(SPath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub sampler: SamplerKind,
    /// retained cycles `M`
    pub cycles: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// ChaCha stream; replications differ only here
    pub stream: u64,
    pub scan: ScanOrder,
    pub initial: InitialPath,
    pub grid: Vec<f64>,
    pub batches: usize,
    pub keep_trace: bool,
}

impl ChainConfig {
    pub fn new(sampler: SamplerKind, cycles: usize, burn_in: usize, seed: u64, grid: Vec<f64>) -> Self {
        Self {
            sampler,
            cycles,
            burn_in,
            seed,
            stream: 0,
            scan: ScanOrder::Ascending,
            initial: InitialPath::Singletons,
            grid,
            batches: 20,
            keep_trace: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.cycles == 0 {
            return Err(Error::Config("cycles must be at least 1".into()));
        }
        if self.batches == 0 {
            return Err(Error::Config("batches must be at least 1".into()));
        }
        if let InitialPath::Given(p) = &self.initial {
            if p.n() != n {
                return Err(Error::Dimension { expected: n, got: p.n() });
            }
        }
        if self.grid.windows(2).any(|w| !(w[0] <= w[1])) || self.grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config("grid must be finite, nonnegative and sorted".into()));
        }
        Ok(())
    }

    /// Generator for this chain: `seed` with `stream` selected.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `count` points evenly spaced on `[0, upper]`.
pub fn uniform_grid(upper: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| upper * k as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HazardCurve {
    pub grid: Vec<f64>,
    pub estimate: Vec<f64>,
    /// batch-means standard error; `NaN` with fewer than two batches
    pub mc_se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDiagnostics {
    pub cycles: usize,
    pub burn_in: usize,
    /// fraction of steps that changed the path
    pub move_rate: f64,
    /// average number of positive increments over retained cycles
    pub mean_blocks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub curve: HazardCurve,
    pub diagnostics: ChainDiagnostics,
    pub final_path: SPath,
    /// retained paths, when requested
    pub trace: Option<Vec<SPath>>,
}

/// Running per-grid-point batch sums.
#[derive(Debug, Clone)]
pub(crate) struct BatchMeans {
    total: usize,
    batches: usize,
    seen: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
    width: usize,
}

impl BatchMeans {
    pub(crate) fn new(total: usize, batches: usize, width: usize) -> Self {
        let batches = batches.min(total).max(1);
        Self { total, batches, seen: 0, sums: vec![0.0; batches * width], counts: vec![0; batches], width }
    }

    pub(crate) fn push(&mut self, values: &[f64]) {
        let b = self.seen * self.batches / self.total;
        let row = &mut self.sums[b * self.width..(b + 1) * self.width];
        for (s, v) in row.iter_mut().zip(values) {
            *s += v;
        }
        self.counts[b] += 1;
        self.seen += 1;
    }

    /// Grand mean and batch-means standard error per column.
    pub(crate) fn finish(&self) -> (Vec<f64>, Vec<f64>) {
        let nb = self.batches;
        let mut mean = vec![0.0; self.width];
        let mut se = vec![f64::NAN; self.width];
        for g in 0..self.width {
            let means: Vec<f64> = (0..nb).map(|b| self.sums[b * self.width + g] / self.counts[b] as f64).collect();
            let total: f64 = (0..nb).map(|b| self.sums[b * self.width + g]).sum();
            mean[g] = total / self.seen as f64;
            if nb >= 2 {
                let bm = means.iter().sum::<f64>() / nb as f64;
                let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (nb - 1) as f64;
                se[g] = (var / nb as f64).sqrt();
            }
        }
        (mean, se)
    }
}

/// Sampler state that advances one cycle at a time and exposes the path.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub path: SPath,
    partition: Option<PartitionState>,
    kind: SamplerKind,
    scan: ScanOrder,
    scratch: StepScratch,
    pub cycles_done: usize,
    steps: usize,
    moves: usize,
}

impl ChainState {
    pub fn new<R: Rng + ?Sized>(model: &PosteriorModel, config: &ChainConfig, rng: &mut R) -> Result<Self> {
        let n = model.n();
        config.validate(n)?;
        let path = match &config.initial {
            InitialPath::Singletons => SPath::singletons(n),
            InitialPath::SingleBlock => SPath::single_block(n),
            InitialPath::Given(p) => p.clone(),
        };
        let partition = (config.sampler == SamplerKind::Gwcr).then(|| match &config.initial {
            InitialPath::Singletons => PartitionState::singletons(n),
            _ => PartitionState::from_partition(&sample_partition_given_path(&path, rng)),
        });
        Ok(Self {
            path,
            partition,
            kind: config.sampler,
            scan: config.scan,
            scratch: StepScratch::default(),
            cycles_done: 0,
            steps: 0,
            moves: 0,
        })
    }

    /// One full cycle: `n - 1` path steps, or `n` reseats for `Gwcr`.
    pub fn cycle<R: Rng + ?Sized>(&mut self, model: &PosteriorModel, rng: &mut R) {
        let n = self.path.n();
        match (self.kind, self.scan) {
            (SamplerKind::Ap, ScanOrder::Ascending) => {
                self.moves += ap_sweep(model, &mut self.path, &mut self.scratch, rng);
                self.steps += n.saturating_sub(1);
            }
            (SamplerKind::Ap | SamplerKind::Gp, _) => {
                for i in 1..n {
                    let r = match self.scan {
                        ScanOrder::Ascending => i,
                        ScanOrder::Random => rng.random_range(1..n),
                    };
                    let moved = if self.kind == SamplerKind::Ap {
                        ap_step(model, &mut self.path, r, &mut self.scratch, rng)
                    } else {
                        gibbs_path_step(model, &mut self.path, r, &mut self.scratch, rng)
                    };
                    self.moves += moved as usize;
                    self.steps += 1;
                }
            }
            (SamplerKind::Gwcr, _) => {
                let state = self.partition.as_mut().expect("partition sampler keeps a partition");
                for i in 1..=n {
                    let k = match self.scan {
                        ScanOrder::Ascending => i,
                        ScanOrder::Random => rng.random_range(1..=n),
                    };
                    gwcr_reseat_step(model, state, k, &mut self.scratch, rng);
                }
                let next = state.path();
                self.moves += (next != self.path) as usize;
                self.steps += 1;
                self.path = next;
            }
        }
        debug_assert!(self.path.is_valid(), "invalid path {}", self.path);
        self.cycles_done += 1;
    }

    pub fn move_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.moves as f64 / self.steps as f64
        }
    }
}

/// Runs one chain and returns the ergodic-average hazard on `config.grid`.
pub fn run_chain(model: &PosteriorModel, config: &ChainConfig) -> Result<ChainRun> {
    let mut rng = config.rng();
    let mut state = ChainState::new(model, config, &mut rng)?;
    let eval = GridEvaluator::new(model, &config.grid);
    let width = config.grid.len();
    let mut batches = BatchMeans::new(config.cycles, config.batches, width);
    let mut scratch = vec![0.0; width];
    let mut trace = config.keep_trace.then(|| Vec::with_capacity(config.cycles));
    let mut blocks = 0usize;
    for _ in 0..config.burn_in {
        state.cycle(model, &mut rng);
    }
    for _ in 0..config.cycles {
        state.cycle(model, &mut rng);
        scratch.iter_mut().for_each(|x| *x = 0.0);
        eval.accumulate(model, &state.path, &mut scratch);
        batches.push(&scratch);
        blocks += state.path.blocks().count();
        if let Some(t) = trace.as_mut() {
            t.push(state.path.clone());
        }
    }
    let (mean, mc_se) = batches.finish();
    let estimate = mean.iter().zip(eval.prior_terms()).map(|(m, p)| m + p).collect();
    Ok(ChainRun {
        curve: HazardCurve { grid: config.grid.clone(), estimate, mc_se },
        diagnostics: ChainDiagnostics {
            cycles: config.cycles,
            burn_in: config.burn_in,
            move_rate: state.move_rate(),
            mean_blocks: blocks as f64 / config.cycles as f64,
        },
        final_path: state.path,
        trace,
    })
}

/// `reps` independent chains differing only in their stream, `first_stream`
/// onward. Results are in stream order whatever the thread schedule.
pub fn run_replications(
    model: &PosteriorModel,
    config: &ChainConfig,
    reps: usize,
    first_stream: u64,
) -> Result<Vec<ChainRun>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.stream = first_stream + i;
            run_chain(model, &c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub t: f64,
    pub sampler: SamplerKind,
    pub mean: f64,
    /// standard deviation of the estimate across replications; `None` for a
    /// single replication
    pub se: Option<f64>,
}

/// Runs `reps` chains per sampler and summarizes the estimate at each of
/// `times` by its mean and spread across replications.
pub fn compare_samplers(
    model: &PosteriorModel,
    reps: usize,
    base: &ChainConfig,
    samplers: &[SamplerKind],
    times: &[f64],
) -> Result<Vec<ComparisonRow>> {
    if reps == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    let mut per_sampler = Vec::new();
    for (idx, &kind) in samplers.iter().enumerate() {
        let mut c = base.clone();
        c.sampler = kind;
        c.grid = times.to_vec();
        let runs = run_replications(model, &c, reps, ((idx as u64) << 32) + base.stream)?;
        per_sampler.push((kind, runs));
    }
    let mut rows = Vec::new();
    for (g, &t) in times.iter().enumerate() {
        for (kind, runs) in &per_sampler {
            let vals: Vec<f64> = runs.iter().map(|r| r.curve.estimate[g]).collect();
            let mean = vals.iter().sum::<f64>() / reps as f64;
            let se =
                (reps >= 2).then(|| (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt());
            rows.push(ComparisonRow { t, sampler: *kind, mean, se });
        }
    }
    Ok(rows)
}

/// Pointwise posterior quantiles of the hazard.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Pointwise central band at `level` from full posterior draws of the
/// measure: chain paths, latent `(y, Q)` atoms and the truncated random
/// measure above `eps`. Auxiliary draws use their own stream, so the path
/// trace matches [`run_chain`] under the same config.
pub fn credible_band(model: &PosteriorModel, config: &ChainConfig, eps: f64, level: f64) -> Result<CredibleBand> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("credible level must lie in (0, 1), got {level}")));
    }
    let mut rng = config.rng();
    let mut aux = ChaCha8Rng::seed_from_u64(config.seed);
    aux.set_stream(config.stream | (1 << 63));
    let mut state = ChainState::new(model, config, &mut rng)?;
    for _ in 0..config.burn_in {
        state.cycle(model, &mut rng);
    }
    let width = config.grid.len();
    let mut draws = vec![Vec::with_capacity(config.cycles); width];
    for _ in 0..config.cycles {
        state.cycle(model, &mut rng);
        let latent = draw_latent(model, &state.path, &mut aux);
        let jumps = draw_crm_truncated(model, eps, &mut aux)?;
        for (g, &t) in config.grid.iter().enumerate() {
            draws[g].push(hazard_from_measure(t, &latent, &jumps));
        }
    }
    let q = |v: &mut Vec<f64>, p: f64| -> f64 {
        v.sort_by(f64::total_cmp);
        let pos = p * (v.len() - 1) as f64;
        let (lo, frac) = (pos.floor() as usize, pos.fract());
        if lo + 1 < v.len() {
            v[lo] * (1.0 - frac) + v[lo + 1] * frac
        } else {
            v[lo]
        }
    };
    let tail = 0.5 * (1.0 - level);
    let (mut lower, mut median, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    for d in draws.iter_mut() {
        lower.push(q(d, tail));
        median.push(q(d, 0.5));
        upper.push(q(d, 1.0 - tail));
    }
    Ok(CredibleBand { grid: config.grid.clone(), lower, median, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::PriorSpec;
    use crate::posterior::exact_hazard_curve;
    use crate::survdata::{Record, SurvivalDataset};

    fn model(times: &[f64], prior: PriorSpec) -> PosteriorModel {
        let mut recs: Vec<Record> = times.iter().map(|&t| Record::complete(t)).collect();
        recs.push(Record::censored(3.0));
        PosteriorModel::new(SurvivalDataset::from_records(recs, 3.0).unwrap(), prior).unwrap()
    }

    #[test]
    fn batch_means_of_constant_columns() {
        let mut b = BatchMeans::new(40, 20, 2);
        for i in 0..40 {
            b.push(&[1.5, i as f64]);
        }
        let (m, se) = b.finish();
        assert_eq!(m[0], 1.5);
        assert_eq!(se[0], 0.0);
        assert!((m[1] - 19.5).abs() < 1e-12);
        assert!(se[1] > 0.0);
        let (_, se) = BatchMeans::new(1, 20, 1).finish();
        assert!(se[0].is_nan());
    }

    #[test]
    fn single_observation_chain_is_exact() {
        let m = model(&[0.7], PriorSpec::gamma_process(6.0));
        let grid = uniform_grid(6.0, 13);
        for kind in SamplerKind::ALL {
            let run = run_chain(&m, &ChainConfig::new(kind, 50, 5, 1, grid.clone())).unwrap();
            let exact = exact_hazard_curve(&m, &grid).unwrap();
            assert_eq!(run.final_path, SPath::singletons(1));
            for (a, b) in run.curve.estimate.iter().zip(&exact) {
                assert!((a - b).abs() <= 1e-14 * b.max(1.0));
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let m = model(&[0.2, 0.5, 0.9, 1.3, 2.2], PriorSpec::new(0.2, 1.0, 1.0, 6.0).unwrap());
        for kind in SamplerKind::ALL {
            let mut c = ChainConfig::new(kind, 300, 10, 42, uniform_grid(6.0, 20));
            c.keep_trace = true;
            let a = run_chain(&m, &c).unwrap();
            let b = run_chain(&m, &c).unwrap();
            assert_eq!(a, b);
            c.stream = 1;
            assert_ne!(a.trace, run_chain(&m, &c).unwrap().trace);
        }
    }

    #[test]
    fn chains_track_the_oracle() {
        let m = model(&[0.1, 0.3, 0.4, 0.8, 1.2, 1.9], PriorSpec::gamma_process(6.0));
        let grid = uniform_grid(4.0, 9);
        let exact = exact_hazard_curve(&m, &grid).unwrap();
        for kind in SamplerKind::ALL {
            for scan in [ScanOrder::Ascending, ScanOrder::Random] {
                let mut c = ChainConfig::new(kind, 20_000, 500, 3, grid.clone());
                c.scan = scan;
                let run = run_chain(&m, &c).unwrap();
                for g in 0..grid.len() {
                    let (est, se) = (run.curve.estimate[g], run.curve.mc_se[g]);
                    assert!(
                        (est - exact[g]).abs() <= 4.0 * se + 1e-12,
                        "{kind} {scan:?} t={} {est} {}",
                        grid[g],
                        exact[g]
                    );
                }
            }
        }
    }

    #[test]
    fn comparison_reports_spread() {
        let m = model(&[0.2, 0.5, 0.9, 1.3], PriorSpec::gamma_process(6.0));
        let base = ChainConfig::new(SamplerKind::Ap, 100, 10, 8, Vec::new());
        let rows = compare_samplers(&m, 4, &base, &SamplerKind::ALL, &[0.5, 2.0]).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.se.is_some_and(|s| s >= 0.0)));
        let rows = compare_samplers(&m, 1, &base, &[SamplerKind::Ap], &[0.5]).unwrap();
        assert_eq!(rows[0].se, None);
    }

    #[test]
    fn band_brackets_the_mean() {
        let m = model(&[0.2, 0.5, 0.9, 1.3, 2.0], PriorSpec::gamma_process(6.0));
        let grid = uniform_grid(3.0, 7);
        let c = ChainConfig::new(SamplerKind::Ap, 2000, 100, 4, grid.clone());
        let band = credible_band(&m, &c, 1e-6, 0.9).unwrap();
        let exact = exact_hazard_curve(&m, &grid).unwrap();
        for g in 0..grid.len() {
            assert!(band.lower[g] <= band.median[g] && band.median[g] <= band.upper[g]);
            assert!(band.lower[g] < exact[g] && exact[g] < band.upper[g]);
        }
    }

    #[test]
    fn parse_sampler_names() {
        assert_eq!("AP".parse::<SamplerKind>().unwrap(), SamplerKind::Ap);
        assert_eq!("gwcr".parse::<SamplerKind>().unwrap(), SamplerKind::Gwcr);
        assert!("hmc".parse::<SamplerKind>().is_err());
    }
}
