//! Draws from the conditional laws given a path: the block locations `y_j`,
//! the block masses `Q_j`, and a truncated draw of the tilted completely
//! random measure.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::combinat::SPath;
use crate::numeric::ln_expm1_over;
use crate::{Error, Result};

use super::PosteriorModel;

/// Location and mass of the atom attached to the block with maximum `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentAtom {
    pub j: usize,
    pub m: usize,
    pub y: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatentDraw {
    pub atoms: Vec<LatentAtom>,
}

/// One jump `z` at location `u` of the truncated random measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrmJump {
    pub z: f64,
    pub u: f64,
}

/// Draws `y_j` from the density proportional to `κ_m(g(y)) η(dy)` on
/// `(T_j, L]`, where `m = m_j > 0`.
///
/// Inverse CDF: the target `ξ_m(y) = U ξ_m(T_j)` is located on the cached
/// grid by binary search, then solved inside its segment by Newton steps
/// safeguarded with bisection.
pub fn draw_y<R: Rng + ?Sized>(model: &PosteriorModel, j: usize, m: usize, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    solve_y(model, j, m, u)
}

pub(crate) fn solve_y(model: &PosteriorModel, j: usize, m: usize, u: f64) -> f64 {
    let table = model.table();
    let grid = table.grid();
    let col = model.time_col(j);
    let ln_r = u.ln() + table.at_grid(m, col);
    // last column holds -inf, so the search always stops below it
    let (mut k, mut above) = (col, grid.len() - 1);
    while above - k > 1 {
        let mid = (k + above) / 2;
        if table.at_grid(m, mid) > ln_r {
            k = mid;
        } else {
            above = mid;
        }
    }
    // mass to place inside segment k, measured from whichever end keeps
    // the subtraction well conditioned
    let left = table.at_grid(m, k);
    let right = table.at_grid(m, k + 1);
    let left_gap = left + (-(ln_r - left).exp_m1()).ln();
    let right_gap = if right == f64::NEG_INFINITY { ln_r } else { ln_r + (-(right - ln_r).exp()).ln_1p() };
    let from_left = left_gap <= right_gap;
    let (x0, x1) = (grid[k], grid[k + 1]);
    let (h0, b) = table.segment_line(k);
    let prior = table.prior();
    let p = m as f64 - prior.alpha;
    let c = prior.ln_moment_constant(m) + prior.eta_density().ln();
    // increasing in y on [x0, x1] in both orientations
    let residual = |y: f64| -> (f64, f64) {
        let part = if from_left { table.ln_partial(m, k, x0, y) } else { table.ln_partial(m, k, y, x1) };
        let value = if from_left { part - left_gap } else { right_gap - part };
        let ln_dens = c - p * (h0 + b * (y - x0)).ln();
        (value, (ln_dens - part).exp())
    };
    let (mut lo, mut hi) = (x0, x1);
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, slope) = residual(y);
        if f.abs() < 4.0 * f64::EPSILON {
            break;
        }
        if f < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            break;
        }
        let step = y - f / slope;
        y = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    y
}

/// `Q_j ~ Gamma(m - α, rate 1/β + g(y))`.
pub fn draw_q<R: Rng + ?Sized>(model: &PosteriorModel, m: usize, y: f64, rng: &mut R) -> f64 {
    let prior = model.prior();
    let rate = prior.beta_rate + model.g().eval(y);
    Gamma::new(m as f64 - prior.alpha, 1.0 / rate)
        .expect("shape m - α is positive and the rate is positive past T_j")
        .sample(rng)
}

/// One `(y_j, Q_j)` pair per positive increment of `path`.
pub fn draw_latent<R: Rng + ?Sized>(model: &PosteriorModel, path: &SPath, rng: &mut R) -> LatentDraw {
    let atoms = path
        .blocks()
        .map(|(j, m)| {
            let y = draw_y(model, j, m, rng);
            let q = draw_q(model, m, y, rng);
            LatentAtom { j, m, y, q }
        })
        .collect();
    LatentDraw { atoms }
}

/// Jumps above `eps` of the measure with intensity
/// `e^{-g(u) z} ρ(dz) η(du)`.
///
/// Poisson thinning: on `(eps, 1]` the proposal is `z^{-α-1} dz`, beyond
/// `max(eps, 1)` it is `e^{-z/β}` (Pareto in the stable case, a Gamma law
/// when `α < -1`), and each proposal is kept with the ratio of intensities.
pub fn draw_crm_truncated<R: Rng + ?Sized>(model: &PosteriorModel, eps: f64, rng: &mut R) -> Result<Vec<CrmJump>> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("truncation level must be positive, got {eps}")));
    }
    let prior = *model.prior();
    let (a, r, c, upper) = (prior.alpha, prior.beta_rate, prior.eta_mass, prior.eta_upper);
    let g = model.g();
    let ln_norm = ln_gamma(1.0 - a);
    let mut jumps = Vec::new();
    let poisson = |mean: f64, rng: &mut R| -> usize {
        if mean > 0.0 {
            Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
        } else {
            0
        }
    };

    if eps < 1.0 {
        let le = -eps.ln();
        // ∫_eps^1 z^{-α-1} dz = (eps^{-α} - 1)/α, stable near α = 0
        let mass = c * (le.ln() + ln_expm1_over(a * le) - ln_norm).exp();
        let big = (a * le).exp_m1();
        for _ in 0..poisson(mass, rng) {
            let v: f64 = rng.random();
            let ln_z = if a == 0.0 { -le * (1.0 - v) } else { -(big * (1.0 - v)).ln_1p() / a };
            let z = ln_z.exp();
            let u = upper * rng.random::<f64>();
            if rng.random::<f64>() < (-(r + g.eval(u)) * z).exp() {
                jumps.push(CrmJump { z, u });
            }
        }
    }

    let z0 = eps.max(1.0);
    if r == 0.0 {
        let mass = c * (-a * z0.ln() - a.ln() - ln_norm).exp();
        for _ in 0..poisson(mass, rng) {
            let v: f64 = Open01.sample(rng);
            let z = z0 * v.powf(-1.0 / a);
            let u = upper * rng.random::<f64>();
            if rng.random::<f64>() < (-g.eval(u) * z).exp() {
                jumps.push(CrmJump { z, u });
            }
        }
    } else if a >= -1.0 {
        let mass = c * ((-a - 1.0) * z0.ln() - r * z0 - r.ln() - ln_norm).exp();
        for _ in 0..poisson(mass, rng) {
            let e: f64 = Exp1.sample(rng);
            let z = z0 + e / r;
            let u = upper * rng.random::<f64>();
            let keep = ((-a - 1.0) * (z / z0).ln() - g.eval(u) * z).exp();
            if rng.random::<f64>() < keep {
                jumps.push(CrmJump { z, u });
            }
        }
    } else {
        let mass = c * (a * r.ln() - (-a).ln()).exp();
        let law = Gamma::new(-a, 1.0 / r).expect("shape -α > 1");
        for _ in 0..poisson(mass, rng) {
            let z = law.sample(rng);
            let u = upper * rng.random::<f64>();
            let accept: f64 = rng.random();
            if z > z0 && accept < (-g.eval(u) * z).exp() {
                jumps.push(CrmJump { z, u });
            }
        }
    }
    Ok(jumps)
}

/// Hazard of the measure `Σ Q_j δ_{y_j} + Σ z δ_u` at `t`: total mass
/// strictly to the right of `t`.
pub fn hazard_from_measure(t: f64, latent: &LatentDraw, jumps: &[CrmJump]) -> f64 {
    let atoms = latent.atoms.iter().filter(|a| a.y > t).fold(0.0, |s, a| s + a.q);
    jumps.iter().filter(|j| j.u > t).fold(atoms, |s, j| s + j.z)
}
