//! The generalized gamma family of completely random measures and the
//! tilted moment integrals it induces.
//!
//! The Lévy intensity is
//! `ρ(dz|u) η(du) = z^{-α-1} e^{-z/β} / Γ(1-α) dz · c/L du` on `[0, L]`,
//! with `β` constant. `α = 0` is the weighted gamma process; `β = ∞` with
//! `0 < α < 1` is the stable law. The rate `1/β` is stored directly so the
//! stable case is `beta_rate = 0`.

pub mod oracle;

use statrs::function::gamma::ln_gamma;

use crate::numeric::{ln_expm1_over, ln_ln1p_over, log_add_exp};
use crate::quadrature::{self, Tolerance};
use crate::survdata::PiecewiseLinear;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub alpha: f64,
    /// `1/β`; zero encodes the stable law.
    pub beta_rate: f64,
    /// total mass `c` of the uniform shape measure
    pub eta_mass: f64,
    /// upper end `L` of the uniform shape measure
    pub eta_upper: f64,
}

impl PriorSpec {
    pub fn new(alpha: f64, beta_rate: f64, eta_mass: f64, eta_upper: f64) -> Result<Self> {
        if !(alpha < 1.0) || !alpha.is_finite() {
            return Err(Error::Prior(format!("alpha must be < 1, got {alpha}")));
        }
        if !(beta_rate >= 0.0) || !beta_rate.is_finite() {
            return Err(Error::Prior(format!("beta_rate must be >= 0, got {beta_rate}")));
        }
        if beta_rate == 0.0 && !(alpha > 0.0) {
            return Err(Error::Prior("the stable law (beta_rate = 0) needs 0 < alpha < 1".into()));
        }
        if !(eta_mass > 0.0) || !eta_mass.is_finite() {
            return Err(Error::Prior(format!("eta_mass must be positive, got {eta_mass}")));
        }
        if !(eta_upper > 0.0) || !eta_upper.is_finite() {
            return Err(Error::Prior(format!("eta_upper must be positive, got {eta_upper}")));
        }
        Ok(Self { alpha, beta_rate, eta_mass, eta_upper })
    }

    /// Gamma process with `β = 1` and unit-mass uniform shape on `[0, L]`.
    pub fn gamma_process(eta_upper: f64) -> Self {
        Self::new(0.0, 1.0, 1.0, eta_upper).expect("valid gamma prior")
    }

    /// `η` density on `[0, L]`.
    #[inline]
    pub fn eta_density(&self) -> f64 {
        self.eta_mass / self.eta_upper
    }

    /// `ln Γ(i - α) - ln Γ(1 - α)`.
    #[inline]
    pub fn ln_moment_constant(&self, i: usize) -> f64 {
        ln_gamma(i as f64 - self.alpha) - ln_gamma(1.0 - self.alpha)
    }

    /// `ψ(g) = ∫ (1 - e^{-gz}) ρ(dz)`.
    pub fn laplace_exponent(&self, g: f64) -> Result<f64> {
        let (a, r) = (self.alpha, self.beta_rate);
        if g <= 0.0 {
            return Ok(0.0);
        }
        if r == 0.0 {
            if a <= 0.0 {
                return Err(Error::Divergent("stable law with alpha <= 0".into()));
            }
            return Ok(g.powf(a) / a);
        }
        let l = (g / r).ln_1p();
        if a == 0.0 {
            return Ok(l);
        }
        // r^α (e^{α l} - 1)/α, written to stay accurate as α → 0
        Ok(r.powf(a) * l * ln_expm1_over(a * l).exp())
    }
}

/// `κ_i = ∫ z^i e^{-gz} ρ(dz) = Γ(i-α)/Γ(1-α) · (1/β + g)^{-(i-α)}`.
pub fn kappa(i: usize, g: f64, prior: &PriorSpec) -> Result<f64> {
    ln_kappa(i, g, prior).map(f64::exp)
}

pub fn ln_kappa(i: usize, g: f64, prior: &PriorSpec) -> Result<f64> {
    assert!(i >= 1, "moment index starts at 1");
    let h = prior.beta_rate + g;
    if !(h > 0.0) {
        return Err(Error::Divergent(format!("κ_{i} with 1/β + g = {h}")));
    }
    Ok(prior.ln_moment_constant(i) - (i as f64 - prior.alpha) * h.ln())
}

/// `ln ∫_0^w (h + b v)^{-p} dv` for `h >= 0`, `b >= 0`, `p > 0`.
pub(crate) fn ln_power_integral(h: f64, b: f64, w: f64, p: f64) -> Result<f64> {
    if w <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if h > 0.0 {
        let x = b * w / h;
        let d = x.ln_1p();
        return Ok(-p * h.ln() + w.ln() + ln_ln1p_over(x) + ln_expm1_over((1.0 - p) * d));
    }
    if b > 0.0 && p < 1.0 {
        // ∫_0^w (b v)^{-p} dv = b^{-p} w^{1-p} / (1-p)
        return Ok(-p * b.ln() + (1.0 - p) * w.ln() - (1.0 - p).ln());
    }
    Err(Error::Divergent(format!("power integral with exponent {p} at a zero of 1/β + g")))
}

/// `ln ∫_lo^hi κ_i(g(v)) dv` restricted to one linear segment of `g` that
/// starts at `knot` with value `value` and slope `slope`. The `Γ` constant
/// is excluded.
#[inline]
fn ln_segment(prior: &PriorSpec, p: f64, knot: f64, value: f64, slope: f64, lo: f64, hi: f64) -> Result<f64> {
    let h = prior.beta_rate + value + slope * (lo - knot);
    ln_power_integral(h, slope, hi - lo, p)
}

/// `ln ξ_i(t) = ln ∫_t^L κ_i(g(v)) η(dv)`; `-inf` for `t >= L`.
pub fn ln_xi_integral(i: usize, t: f64, g: &PiecewiseLinear, prior: &PriorSpec) -> Result<f64> {
    ln_xi_between(i, t, prior.eta_upper, g, prior)
}

/// `ξ_i(t)`, the non-log form of [`ln_xi_integral`].
pub fn xi_integral(i: usize, t: f64, g: &PiecewiseLinear, prior: &PriorSpec) -> Result<f64> {
    ln_xi_integral(i, t, g, prior).map(f64::exp)
}

/// `ln ∫_lo^hi κ_i(g(v)) η(dv)`, with `hi` clipped to `L`.
pub fn ln_xi_between(i: usize, lo: f64, hi: f64, g: &PiecewiseLinear, prior: &PriorSpec) -> Result<f64> {
    assert!(i >= 1);
    let lo = lo.max(0.0);
    let hi = hi.min(prior.eta_upper);
    if lo >= hi {
        return Ok(f64::NEG_INFINITY);
    }
    let p = i as f64 - prior.alpha;
    let knots = g.knots();
    let mut acc = f64::NEG_INFINITY;
    let mut k = g.segment(lo);
    let mut start = lo;
    while start < hi {
        let end = knots.get(k + 1).copied().unwrap_or(f64::INFINITY).min(hi);
        let piece = ln_segment(prior, p, knots[k], g.values()[k], g.slope(k), start, end)?;
        acc = log_add_exp(acc, piece);
        start = end;
        k += 1;
    }
    Ok(acc + prior.ln_moment_constant(i) + prior.eta_density().ln())
}

/// `∫_0^L ψ(g(u)) η(du)`, integrated segment by segment with adaptive
/// Gauss–Kronrod at relative tolerance `1e-10`.
pub fn laplace_exponent_integral(g: &PiecewiseLinear, prior: &PriorSpec) -> Result<f64> {
    if prior.beta_rate == 0.0 && prior.alpha <= 0.0 {
        return Err(Error::Divergent("stable law with alpha <= 0".into()));
    }
    let upper = prior.eta_upper;
    let knots = g.knots();
    let mut total = 0.0;
    for k in 0..knots.len() {
        let lo = knots[k];
        if lo >= upper {
            break;
        }
        let hi = knots.get(k + 1).copied().unwrap_or(f64::INFINITY).min(upper);
        let slope = g.slope(k);
        let v0 = g.values()[k];
        total += if slope == 0.0 {
            prior.laplace_exponent(v0)? * (hi - lo)
        } else {
            let mut failure = None;
            let v = quadrature::integrate(
                |u| match prior.laplace_exponent(v0 + slope * (u - lo)) {
                    Ok(x) => x,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                Tolerance::new(1e-300, 1e-10),
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            v
        };
    }
    Ok(total * prior.eta_density())
}

/// Cached `ln ξ_i` at every knot of `g` below `L` (plus `L` itself), for
/// `i = 1..=max_order`.
#[derive(Debug, Clone)]
pub struct XiTable {
    prior: PriorSpec,
    g: PiecewiseLinear,
    /// knots of `g` below `L`, followed by `L`
    grid: Vec<f64>,
    max_order: usize,
    /// row `i - 1`, column `k`: `ln ∫_{grid[k]}^L κ_i η`
    suffix: Vec<f64>,
    /// `ln ∫_{grid[k]}^{grid[k+1]} κ_i η`, same layout minus the last column
    segments: Vec<f64>,
}

impl XiTable {
    pub fn new(g: PiecewiseLinear, prior: PriorSpec, max_order: usize) -> Result<Self> {
        let upper = prior.eta_upper;
        let mut grid: Vec<f64> = g.knots().iter().copied().filter(|&x| x < upper).collect();
        grid.push(upper);
        let cols = grid.len();
        let mut suffix = vec![f64::NEG_INFINITY; max_order * cols];
        let mut segments = vec![f64::NEG_INFINITY; max_order * (cols - 1)];
        for i in 1..=max_order {
            let p = i as f64 - prior.alpha;
            let c = prior.ln_moment_constant(i) + prior.eta_density().ln();
            let row = &mut suffix[(i - 1) * cols..i * cols];
            let seg_row = &mut segments[(i - 1) * (cols - 1)..i * (cols - 1)];
            for k in (0..cols - 1).rev() {
                // a stable law diverges at the origin for p >= 1; only ξ_1 is
                // ever read there, so the cell is kept as +inf
                let piece = match ln_segment(&prior, p, grid[k], g.values()[k], g.slope(k), grid[k], grid[k + 1]) {
                    Ok(v) => v + c,
                    Err(Error::Divergent(_)) if k == 0 => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                seg_row[k] = piece;
                row[k] = log_add_exp(row[k + 1], piece);
            }
        }
        Ok(Self { prior, g, grid, max_order, suffix, segments })
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn g(&self) -> &PiecewiseLinear {
        &self.g
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    #[inline]
    fn cols(&self) -> usize {
        self.grid.len()
    }

    /// `ln ξ_i(grid[k])`.
    #[inline]
    pub fn at_grid(&self, i: usize, k: usize) -> f64 {
        self.suffix[(i - 1) * self.cols() + k]
    }

    /// `ln ∫ κ_i η` over grid segment `k`.
    #[inline]
    pub fn segment(&self, i: usize, k: usize) -> f64 {
        self.segments[(i - 1) * (self.cols() - 1) + k]
    }

    /// Grid index `k` with `grid[k] <= t < grid[k+1]`, `None` when `t >= L`.
    #[inline]
    pub fn locate(&self, t: f64) -> Option<usize> {
        if t >= self.prior.eta_upper {
            return None;
        }
        Some(self.grid.partition_point(|&x| x <= t.max(0.0)).saturating_sub(1))
    }

    /// `ln ξ_i(t)` for any `t`, reusing the cached suffix.
    pub fn ln_xi(&self, i: usize, t: f64) -> f64 {
        let Some(k) = self.locate(t) else {
            return f64::NEG_INFINITY;
        };
        if self.grid[k] == t.max(0.0) {
            return self.at_grid(i, k);
        }
        let partial = self.ln_partial(i, k, t.max(0.0), self.grid[k + 1]);
        log_add_exp(self.at_grid(i, k + 1), partial)
    }

    /// `ln ∫_lo^hi κ_i η` within grid segment `k`; `+inf` where the
    /// integral diverges (stable law, `lo = 0`).
    pub(crate) fn ln_partial(&self, i: usize, k: usize, lo: f64, hi: f64) -> f64 {
        let p = i as f64 - self.prior.alpha;
        let c = self.prior.ln_moment_constant(i) + self.prior.eta_density().ln();
        ln_segment(&self.prior, p, self.grid[k], self.g.values()[k], self.g.slope(k), lo, hi)
            .map_or(f64::INFINITY, |v| v + c)
    }

    /// `h(v) = 1/β + g(v)` and its slope on grid segment `k`.
    #[inline]
    pub(crate) fn segment_line(&self, k: usize) -> (f64, f64) {
        (self.prior.beta_rate + self.g.values()[k], self.g.slope(k))
    }
}
