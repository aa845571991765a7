//! Right-censored survival data and the total-time-on-test transform.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    Censored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub time: f64,
    pub status: Status,
    pub covariates: Vec<f64>,
}

impl Record {
    pub fn complete(time: f64) -> Self {
        Self { time, status: Status::Complete, covariates: Vec::new() }
    }

    pub fn censored(time: f64) -> Self {
        Self { time, status: Status::Censored, covariates: Vec::new() }
    }

    pub fn with_covariates(mut self, z: Vec<f64>) -> Self {
        self.covariates = z;
        self
    }
}

/// Validated survival data observed on `(0, tau]`.
///
/// Complete times are indexed `T_1 <= ... <= T_n` by a stable sort on time,
/// so tied complete times keep their input order. That index is the one
/// S-path locations refer to.
#[derive(Debug, Clone)]
pub struct SurvivalDataset {
    records: Vec<Record>,
    tau: f64,
    dim: usize,
    /// record indices of complete observations, sorted by time (stable)
    complete_order: Vec<usize>,
    complete_times: Vec<f64>,
}

impl SurvivalDataset {
    pub fn from_records(records: Vec<Record>, tau: f64) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("no records".into()));
        }
        Self::from_records_allow_empty(records, tau)
    }

    /// Like [`from_records`](Self::from_records) but accepts an empty record
    /// list, which gives the prior-only model.
    pub fn from_records_allow_empty(records: Vec<Record>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Data(format!("tau must be positive and finite, got {tau}")));
        }
        let dim = records.first().map_or(0, |r| r.covariates.len());
        for (i, r) in records.iter().enumerate() {
            if !(r.time > 0.0) || !r.time.is_finite() {
                return Err(Error::Data(format!("record {i}: time {} is not positive", r.time)));
            }
            if r.time > tau {
                return Err(Error::Data(format!("record {i}: time {} exceeds tau {tau}", r.time)));
            }
            if r.covariates.len() != dim {
                return Err(Error::Data(format!("record {i}: {} covariates, expected {dim}", r.covariates.len())));
            }
            if r.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::Data(format!("record {i}: non-finite covariate")));
            }
        }
        let mut complete_order: Vec<usize> =
            (0..records.len()).filter(|&i| records[i].status == Status::Complete).collect();
        complete_order.sort_by(|&a, &b| records[a].time.total_cmp(&records[b].time));
        let complete_times = complete_order.iter().map(|&i| records[i].time).collect();
        Ok(Self { records, tau, dim, complete_order, complete_times })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `N`, the number of records.
    pub fn n_total(&self) -> usize {
        self.records.len()
    }

    /// `n`, the number of complete observations.
    pub fn n_complete(&self) -> usize {
        self.complete_times.len()
    }

    pub fn covariate_dim(&self) -> usize {
        self.dim
    }

    /// Sorted complete times; `complete_times()[j - 1]` is `T_j`.
    pub fn complete_times(&self) -> &[f64] {
        &self.complete_times
    }

    /// Covariates of the complete observation with path index `j` (1-based).
    pub fn complete_covariates(&self, j: usize) -> &[f64] {
        &self.records[self.complete_order[j - 1]].covariates
    }

    pub fn censored_count(&self) -> usize {
        self.n_total() - self.n_complete()
    }

    /// `g_N`, the total time on test.
    pub fn ttt(&self) -> PiecewiseLinear {
        PiecewiseLinear::total_time_on_test(&self.times_for_ttt(), &vec![1.0; self.records.len()])
    }

    /// `g_{N,θ}`: total time on test with each record weighted by `exp(θᵀZ)`.
    pub fn weighted_ttt(&self, theta: &[f64]) -> Result<PiecewiseLinear> {
        if theta.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: theta.len() });
        }
        let weights: Vec<f64> = self.ordered_records().map(|r| linear_predictor(theta, &r.covariates).exp()).collect();
        Ok(PiecewiseLinear::total_time_on_test(&self.times_for_ttt(), &weights))
    }

    /// `Σ_i θᵀZ_i` over complete observations.
    pub fn complete_linear_predictor_sum(&self, theta: &[f64]) -> f64 {
        self.complete_order.iter().map(|&i| linear_predictor(theta, &self.records[i].covariates)).sum()
    }

    /// The constant value of `g_N` past the last observation: the sum of all
    /// observed times (`Σ T_i + (N - n)τ` under type-I censoring).
    pub fn ttt_tail_value(&self) -> f64 {
        self.ordered_records().map(|r| r.time).fold(0.0, |acc, t| acc + t)
    }

    /// Complete records in path order, then censored records in input order.
    fn ordered_records(&self) -> impl Iterator<Item = &Record> + '_ {
        self.complete_order
            .iter()
            .map(|&i| &self.records[i])
            .chain(self.records.iter().filter(|r| r.status == Status::Censored))
    }

    fn times_for_ttt(&self) -> Vec<f64> {
        self.ordered_records().map(|r| r.time).collect()
    }
}

pub(crate) fn linear_predictor(theta: &[f64], z: &[f64]) -> f64 {
    theta.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Continuous piecewise-linear function on `[0, ∞)`, constant after the last
/// knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// slope on `[knots[k], knots[k + 1])`
    slopes: Vec<f64>,
}

impl PiecewiseLinear {
    /// Builds from knots `0 = x_0 < ... < x_K`, values at knots, and slopes of
    /// the `K` bounded segments.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots[0] != 0.0 {
            return Err(Error::Data("knots must start at 0".into()));
        }
        if values.len() != knots.len() || slopes.len() + 1 != knots.len() {
            return Err(Error::Data("knot, value and slope lengths disagree".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Data("knots must be strictly increasing".into()));
        }
        Ok(Self { knots, values, slopes })
    }

    /// `Σ_i w_i min(t_i, u)`, i.e. `∫_0^u Σ_i w_i 1(t_i >= s) ds`.
    fn total_time_on_test(times: &[f64], weights: &[f64]) -> Self {
        let mut sorted: Vec<(f64, f64)> = times.iter().copied().zip(weights.iter().copied()).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = vec![0.0];
        let mut mass_at_knot = vec![0.0];
        for &(t, w) in &sorted {
            if *knots.last().unwrap() == t {
                *mass_at_knot.last_mut().unwrap() += w;
            } else {
                knots.push(t);
                mass_at_knot.push(w);
            }
        }
        let k = knots.len();
        let mut slopes = vec![0.0; k - 1];
        let mut acc = 0.0;
        for i in (0..k - 1).rev() {
            acc += mass_at_knot[i + 1];
            slopes[i] = acc;
        }
        let values =
            knots.iter().map(|&x| times.iter().zip(weights).fold(0.0, |s, (&t, &w)| s + w * t.min(x))).collect();
        Self { knots, values, slopes }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Index of the segment containing `u`: `k` with `knots[k] <= u <
    /// knots[k+1]`, or the last knot index for the constant tail.
    #[inline]
    pub fn segment(&self, u: f64) -> usize {
        self.knots.partition_point(|&x| x <= u).saturating_sub(1)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        let k = self.segment(u);
        match self.slopes.get(k) {
            Some(&b) => self.values[k] + b * (u - self.knots[k]),
            None => self.values[k],
        }
    }

    /// Slope of the segment starting at knot `k` (0 on the tail).
    #[inline]
    pub fn slope(&self, k: usize) -> f64 {
        self.slopes.get(k).copied().unwrap_or(0.0)
    }

    /// Value of the last knot, which `g` keeps for all larger `u`.
    pub fn tail_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn is_concave_nondecreasing(&self) -> bool {
        self.slopes.iter().all(|&s| s >= 0.0) && self.slopes.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Piecewise-constant hazard: `rates[k]` applies on `[starts[k], starts[k+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantHazard {
    starts: Vec<f64>,
    rates: Vec<f64>,
}

impl PiecewiseConstantHazard {
    /// `pieces` are `(start, rate)`; the first start must be 0.
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self> {
        if pieces.is_empty() || pieces[0].0 != 0.0 {
            return Err(Error::Data("hazard pieces must start at 0".into()));
        }
        if pieces.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Data("hazard breakpoints must increase".into()));
        }
        if pieces.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
            return Err(Error::Data("hazard rates must be positive".into()));
        }
        let (starts, rates) = pieces.into_iter().unzip();
        Ok(Self { starts, rates })
    }

    /// Rate 1 on `[0, 1)` and 0.5 afterwards.
    pub fn step_down() -> Self {
        Self::new(vec![(0.0, 1.0), (1.0, 0.5)]).unwrap()
    }

    pub fn hazard(&self, t: f64) -> f64 {
        let k = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        self.rates[k]
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        let mut h = 0.0;
        for (k, (&s, &r)) in self.starts.iter().zip(&self.rates).enumerate() {
            if t <= s {
                break;
            }
            let end = self.starts.get(k + 1).copied().unwrap_or(f64::INFINITY).min(t);
            h += r * (end - s);
        }
        h
    }

    pub fn survival(&self, t: f64) -> f64 {
        (-self.cumulative(t)).exp()
    }

    /// Smallest `t` with cumulative hazard `h`.
    pub fn inverse_cumulative(&self, h: f64) -> f64 {
        let mut acc = 0.0;
        for (k, (&s, &r)) in self.starts.iter().zip(&self.rates).enumerate() {
            let end = self.starts.get(k + 1).copied().unwrap_or(f64::INFINITY);
            let seg = r * (end - s);
            if acc + seg >= h {
                return s + (h - acc) / r;
            }
            acc += seg;
        }
        unreachable!("last segment is unbounded")
    }
}

/// Draws `n` lifetimes from `hazard` by inversion; lifetimes beyond `tau` are
/// censored at `tau`.
pub fn simulate_piecewise_exponential<R: Rng + ?Sized>(
    hazard: &PiecewiseConstantHazard,
    n: usize,
    tau: f64,
    rng: &mut R,
) -> Result<SurvivalDataset> {
    let records = (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            censor(hazard.inverse_cumulative(e), tau, Vec::new())
        })
        .collect();
    SurvivalDataset::from_records_allow_empty(records, tau)
}

/// Proportional-hazards data: each record gets covariates from `covariates`
/// and hazard `exp(θᵀZ) λ_0(t)`.
pub fn simulate_proportional_hazards<R, F>(
    baseline: &PiecewiseConstantHazard,
    theta: &[f64],
    n: usize,
    tau: f64,
    rng: &mut R,
    mut covariates: F,
) -> Result<SurvivalDataset>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Vec<f64>,
{
    let records = (0..n)
        .map(|_| {
            let z = covariates(rng);
            let e: f64 = Exp1.sample(rng);
            let t = baseline.inverse_cumulative(e / linear_predictor(theta, &z).exp());
            censor(t, tau, z)
        })
        .collect();
    SurvivalDataset::from_records_allow_empty(records, tau)
}

fn censor(t: f64, tau: f64, z: Vec<f64>) -> Record {
    if t > tau {
        Record::censored(tau).with_covariates(z)
    } else {
        Record::complete(t).with_covariates(z)
    }
}
