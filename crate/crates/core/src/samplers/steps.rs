//! Single-site updates. Candidate weights are differences of the `φ`
//! factors at the locations a move touches.

use rand::Rng;

use crate::combinat::{path_of_summaries, Partition, SPath};
use crate::numeric::sample_log_categorical;
use crate::posterior::PosteriorModel;

/// First `ℓ > r` with `S_ℓ > S_r`; exists for `r < n`.
pub fn next_increment(path: &SPath, r: usize) -> usize {
    let c = path.get(r);
    (r + 1..=path.n()).find(|&l| path.get(l) > c).expect("S_n = n exceeds S_r for r < n")
}

/// Candidate set of the accelerated step at `r`: the flat stretch
/// `S_r..S_{q-1}` takes a common value `j` in `lo..lo + weights.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApCandidates {
    pub q: usize,
    pub lo: usize,
    pub log_weights: Vec<f64>,
}

fn ap_fill(model: &PosteriorModel, path: &SPath, r: usize, q: usize, buf: &mut Vec<f64>) -> usize {
    let a = path.get(r - 1);
    let s = path.get(q);
    let hi = r.min(s - 1);
    buf.clear();
    for j in a..=hi {
        buf.push(model.ln_block_factor(r, a, j) + model.ln_block_factor(q, j, s));
    }
    a
}

/// Accelerated-step candidate log-weights from the `φ` factors at `r` and `q`.
pub fn ap_candidates(model: &PosteriorModel, path: &SPath, r: usize) -> ApCandidates {
    let q = next_increment(path, r);
    let mut log_weights = Vec::new();
    let lo = ap_fill(model, path, r, q, &mut log_weights);
    ApCandidates { q, lo, log_weights }
}

/// The same candidate law in closed form:
/// for `j = a = S_{r-1}` the weight is `(r-a)/(S_q-1-a) ξ_{S_q-a}(T_q)` and
/// for `j > a` it is
/// `C(S_q-a-2, S_q-j-1) Π_{i=r+1}^{q-1} (i-j)/(i-a) ξ_{j-a}(T_r) ξ_{S_q-j}(T_q)`.
/// Equal to [`ap_candidates`] up to a constant factor.
pub fn ap_candidates_closed_form(model: &PosteriorModel, path: &SPath, r: usize) -> ApCandidates {
    let q = next_increment(path, r);
    let a = path.get(r - 1);
    let s = path.get(q);
    let hi = r.min(s - 1);
    if hi == a {
        return ApCandidates { q, lo: a, log_weights: vec![0.0] };
    }
    let mut w = Vec::with_capacity(hi - a + 1);
    w.push(((r - a) as f64 / (s - 1 - a) as f64).ln() + model.ln_xi_at(s - a, q));
    for j in a + 1..=hi {
        let ratio: f64 = (r + 1..q).map(|i| ((i - j) as f64 / (i - a) as f64).ln()).sum();
        w.push(model.ln_binom(s - a - 2, s - j - 1) + ratio + model.ln_xi_at(j - a, r) + model.ln_xi_at(s - j, q));
    }
    ApCandidates { q, lo: a, log_weights: w }
}

/// Reusable buffers for the step functions.
#[derive(Debug, Clone, Default)]
pub struct StepScratch {
    weights: Vec<f64>,
}

/// Accelerated step at `r` with a known `q`; returns whether the path changed.
pub(crate) fn ap_step_with_q<R: Rng + ?Sized>(
    model: &PosteriorModel,
    path: &mut SPath,
    r: usize,
    q: usize,
    scratch: &mut StepScratch,
    rng: &mut R,
) -> bool {
    let lo = ap_fill(model, path, r, q, &mut scratch.weights);
    let j = lo + sample_log_categorical(rng, &scratch.weights);
    if j == path.get(r) {
        return false;
    }
    path.fill(r, q, j);
    true
}

/// One accelerated step at `r` (`1 <= r <= n-1`). Returns whether the
/// path changed.
pub fn ap_step<R: Rng + ?Sized>(
    model: &PosteriorModel,
    path: &mut SPath,
    r: usize,
    scratch: &mut StepScratch,
    rng: &mut R,
) -> bool {
    let q = next_increment(path, r);
    ap_step_with_q(model, path, r, q, scratch, rng)
}

/// Ascending sweep `r = 1..n-1`, reusing `q` while it stays ahead of `r`.
/// Returns the number of steps that moved.
pub fn ap_sweep<R: Rng + ?Sized>(
    model: &PosteriorModel,
    path: &mut SPath,
    scratch: &mut StepScratch,
    rng: &mut R,
) -> usize {
    let n = path.n();
    let mut moved = 0;
    let mut q = 0;
    for r in 1..n {
        if q <= r {
            q = next_increment(path, r);
        }
        moved += ap_step_with_q(model, path, r, q, scratch, rng) as usize;
    }
    moved
}

/// Log-weights of `S_r ∈ lo..=min(r, S_{r+1})` for the single-coordinate
/// Gibbs step.
pub fn gibbs_path_candidates(model: &PosteriorModel, path: &SPath, r: usize) -> (usize, Vec<f64>) {
    let mut buf = Vec::new();
    let lo = gibbs_fill(model, path, r, &mut buf);
    (lo, buf)
}

fn gibbs_fill(model: &PosteriorModel, path: &SPath, r: usize, buf: &mut Vec<f64>) -> usize {
    let a = path.get(r - 1);
    let b = path.get(r + 1);
    buf.clear();
    for v in a..=r.min(b) {
        buf.push(model.ln_block_factor(r, a, v) + model.ln_block_factor(r + 1, v, b));
    }
    a
}

/// Resamples `S_r` from its full conditional.
pub fn gibbs_path_step<R: Rng + ?Sized>(
    model: &PosteriorModel,
    path: &mut SPath,
    r: usize,
    scratch: &mut StepScratch,
    rng: &mut R,
) -> bool {
    let lo = gibbs_fill(model, path, r, &mut scratch.weights);
    let v = lo + sample_log_categorical(rng, &scratch.weights);
    if v == path.get(r) {
        return false;
    }
    path.fill(r, r + 1, v);
    true
}

/// Partition of `{1..n}` kept in a form cheap to edit one item at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionState {
    /// `cell_of[k - 1]` indexes `cells`
    cell_of: Vec<usize>,
    /// members in increasing order
    cells: Vec<Vec<usize>>,
}

impl PartitionState {
    pub fn singletons(n: usize) -> Self {
        Self { cell_of: (0..n).collect(), cells: (1..=n).map(|k| vec![k]).collect() }
    }

    pub fn from_partition(p: &Partition) -> Self {
        let mut cell_of = vec![0; p.n()];
        for (c, cell) in p.cells().iter().enumerate() {
            for &k in cell {
                cell_of[k - 1] = c;
            }
        }
        Self { cell_of, cells: p.cells().to_vec() }
    }

    pub fn n(&self) -> usize {
        self.cell_of.len()
    }

    pub fn to_partition(&self) -> Partition {
        Partition::new(self.n(), self.cells.clone()).expect("state holds a valid partition")
    }

    pub fn path(&self) -> SPath {
        path_of_summaries(self.n(), self.cells.iter().map(|c| (*c.last().unwrap(), c.len())))
    }

    fn remove(&mut self, k: usize) {
        let c = self.cell_of[k - 1];
        let cell = &mut self.cells[c];
        let pos = cell.binary_search(&k).expect("item is in its cell");
        cell.remove(pos);
        if cell.is_empty() {
            self.cells.swap_remove(c);
            if c < self.cells.len() {
                for &i in &self.cells[c] {
                    self.cell_of[i - 1] = c;
                }
            }
        }
    }

    fn insert(&mut self, k: usize, target: Option<usize>) {
        match target {
            Some(c) => {
                let cell = &mut self.cells[c];
                let pos = cell.binary_search(&k).unwrap_err();
                cell.insert(pos, k);
                self.cell_of[k - 1] = c;
            }
            None => {
                self.cells.push(vec![k]);
                self.cell_of[k - 1] = self.cells.len() - 1;
            }
        }
    }
}

/// Reseating weights for item `k` after its removal: one entry per
/// remaining cell, then the new-cell option last.
fn reseat_fill(model: &PosteriorModel, state: &PartitionState, k: usize, buf: &mut Vec<f64>) {
    buf.clear();
    for cell in &state.cells {
        let mx = *cell.last().unwrap();
        let e = cell.len();
        buf.push(model.ln_xi_at(e + 1, mx.max(k)) - model.ln_xi_at(e, mx));
    }
    buf.push(model.ln_xi_at(1, k));
}

/// Partitions reachable by reseating `k`, with their log-weights.
pub fn gwcr_options(model: &PosteriorModel, state: &PartitionState, k: usize) -> Vec<(PartitionState, f64)> {
    let mut base = state.clone();
    base.remove(k);
    let mut w = Vec::new();
    reseat_fill(model, &base, k, &mut w);
    w.iter()
        .enumerate()
        .map(|(c, &lw)| {
            let mut next = base.clone();
            next.insert(k, (c < base.cells.len()).then_some(c));
            (next, lw)
        })
        .collect()
}

/// Removes item `k` and reseats it with probability proportional to the
/// partition weight of each outcome.
pub fn gwcr_reseat_step<R: Rng + ?Sized>(
    model: &PosteriorModel,
    state: &mut PartitionState,
    k: usize,
    scratch: &mut StepScratch,
    rng: &mut R,
) {
    state.remove(k);
    reseat_fill(model, state, k, &mut scratch.weights);
    let choice = sample_log_categorical(rng, &scratch.weights);
    state.insert(k, (choice < state.cells.len()).then_some(choice));
}
