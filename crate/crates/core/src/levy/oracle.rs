//! Brute-force quadrature of the same integrals the closed forms in
//! [`super`] evaluate. Nothing here calls `ln_gamma` or the segment
//! antiderivatives; every moment is integrated numerically over the jump
//! size `z`.

use crate::quadrature::{self, Tolerance};
use crate::survdata::PiecewiseLinear;
use crate::{Error, Result};

use super::PriorSpec;

/// Integration range for [`quadrature_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounds {
    Finite(f64, f64),
    /// `[a, ∞)`, mapped with a characteristic length scale.
    ToInfinity {
        start: f64,
        scale: f64,
    },
}

/// Default oracle tolerance.
pub const ORACLE_TOL: f64 = 1e-10;

/// Adaptive quadrature of `f` over `bounds`: Simpson on finite ranges,
/// Gauss–Kronrod after the map `x = a + scale · s/(1-s)` on half lines.
pub fn quadrature_oracle<F: FnMut(f64) -> f64>(mut f: F, bounds: Bounds, tol: f64) -> Result<f64> {
    match bounds {
        Bounds::Finite(a, b) => quadrature::adaptive_simpson(f, a, b, tol),
        Bounds::ToInfinity { start, scale } => quadrature::integrate_to_infinity(
            |x| f(start + scale * (x - start)) * scale,
            start,
            Tolerance::new(1e-300, tol),
        ),
    }
}

/// `∫_0^∞ z^{s-1} e^{-bz} dz` by quadrature. For `s < 1` the substitution
/// `z = u^{1/s}` removes the singularity at zero.
pub fn tilted_power_moment(s: f64, b: f64) -> Result<f64> {
    if !(s > 0.0 && b > 0.0) {
        return Err(Error::Divergent(format!("moment with s = {s}, b = {b}")));
    }
    let tol = ORACLE_TOL * 0.01;
    if s < 1.0 {
        let v = quadrature_oracle(
            |u: f64| (-b * u.powf(1.0 / s)).exp(),
            Bounds::ToInfinity { start: 0.0, scale: b.powf(-s) },
            tol,
        )?;
        Ok(v / s)
    } else {
        quadrature_oracle(
            |z: f64| {
                if z == 0.0 {
                    if s == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((s - 1.0) * z.ln() - b * z).exp()
                }
            },
            Bounds::ToInfinity { start: 0.0, scale: s / b },
            tol,
        )
    }
}

/// `κ_i` by quadrature of `∫ z^i e^{-gz} ρ(dz)`, including the `1/Γ(1-α)`
/// normalizer which is itself integrated.
pub fn kappa(i: usize, g: f64, prior: &PriorSpec) -> Result<f64> {
    let s = i as f64 - prior.alpha;
    let b = prior.beta_rate + g;
    Ok(tilted_power_moment(s, b)? / tilted_power_moment(1.0 - prior.alpha, 1.0)?)
}

/// `ξ_i(t) = ∫_t^L κ_i(g(v)) η(dv)` by adaptive Simpson over each linear
/// segment of `g`. `κ_i(h) = h^{-(i-α)} κ_i(h = 1)` is used, with the unit
/// moment integrated once.
pub fn xi(i: usize, t: f64, g: &PiecewiseLinear, prior: &PriorSpec) -> Result<f64> {
    let s = i as f64 - prior.alpha;
    let unit = tilted_power_moment(s, 1.0)? / tilted_power_moment(1.0 - prior.alpha, 1.0)?;
    let upper = prior.eta_upper;
    let mut edges: Vec<f64> = g.knots().iter().copied().filter(|&x| x > t && x < upper).collect();
    edges.insert(0, t.max(0.0));
    edges.push(upper);
    let mut total = 0.0;
    for w in edges.windows(2) {
        if w[0] >= w[1] {
            continue;
        }
        total += quadrature_oracle(
            |v| (prior.beta_rate + g.eval(v)).powf(-s),
            Bounds::Finite(w[0], w[1]),
            ORACLE_TOL * 0.1,
        )?;
    }
    Ok(total * unit * prior.eta_mass / prior.eta_upper)
}

/// `ψ(g) = ∫ (1 - e^{-gz}) ρ(dz)` by quadrature, using `z = u^{1/(1-α)}`.
pub fn laplace_exponent(g: f64, prior: &PriorSpec) -> Result<f64> {
    if g <= 0.0 {
        return Ok(0.0);
    }
    let a = prior.alpha;
    let r = prior.beta_rate;
    let power = 1.0 / (1.0 - a);
    let scale = if r > 0.0 { r.powf(a - 1.0) } else { g.powf(a - 1.0) };
    let raw = quadrature_oracle(
        |u: f64| {
            let z = u.powf(power);
            if z == 0.0 {
                return g;
            }
            -(-g * z).exp_m1() / z * (-r * z).exp()
        },
        Bounds::ToInfinity { start: 0.0, scale },
        ORACLE_TOL * 0.01,
    )?;
    Ok(raw * power / tilted_power_moment(1.0 - a, 1.0)?)
}

/// `∫_0^L ψ(g(u)) η(du)` with an adaptive-Simpson outer integral.
pub fn laplace_exponent_integral(g: &PiecewiseLinear, prior: &PriorSpec) -> Result<f64> {
    let upper = prior.eta_upper;
    let mut edges: Vec<f64> = g.knots().iter().copied().filter(|&x| x < upper).collect();
    edges.push(upper);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let mut failure = None;
        total += quadrature_oracle(
            |u| {
                laplace_exponent(g.eval(u), prior).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
            },
            Bounds::Finite(w[0], w[1]),
            ORACLE_TOL * 0.1,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(total * prior.eta_mass / prior.eta_upper)
}

/// `∫_0^L ∫_{z > eps} z e^{-g(u) z} ρ(dz) η(du)`: expected total mass of the
/// jumps above `eps` of the tilted measure.
pub fn truncated_first_moment(g: &PiecewiseLinear, prior: &PriorSpec, eps: f64) -> Result<f64> {
    let a = prior.alpha;
    let norm = tilted_power_moment(1.0 - a, 1.0)?;
    let inner = |h: f64| -> Result<f64> {
        // ∫_eps^∞ z^{-α} e^{-hz} dz
        quadrature_oracle(
            |z: f64| (-a * z.ln() - h * z).exp(),
            Bounds::ToInfinity { start: eps, scale: 1.0 / h.max(1e-3) },
            ORACLE_TOL,
        )
    };
    let upper = prior.eta_upper;
    let mut edges: Vec<f64> = g.knots().iter().copied().filter(|&x| x < upper).collect();
    edges.push(upper);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let mut failure = None;
        total += quadrature_oracle(
            |u| {
                inner(prior.beta_rate + g.eval(u)).unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
            },
            Bounds::Finite(w[0], w[1]),
            1e-8,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
    }
    Ok(total / norm * prior.eta_mass / prior.eta_upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let v =
            quadrature_oracle(|z: f64| z * (-z).exp(), Bounds::ToInfinity { start: 0.0, scale: 1.0 }, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let v = quadrature_oracle(|v| v * v, Bounds::Finite(0.0, 1.0), 1e-10).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_oracle_gamma_case() {
        // ∫ z² e^{-3z} e^{-z} z^{-1} dz = 1!/4² ; κ_2 at g=3 for the gamma process
        let prior = PriorSpec::gamma_process(6.0);
        let direct =
            quadrature_oracle(|z: f64| z * (-4.0 * z).exp(), Bounds::ToInfinity { start: 0.0, scale: 0.25 }, 1e-12)
                .unwrap();
        assert!((direct - 0.0625).abs() < 1e-12);
        let k2 = kappa(2, 3.0, &prior).unwrap();
        assert!((k2 - 0.0625).abs() < 1e-11);
        // third moment: 2!/4³
        let k3 = kappa(3, 3.0, &prior).unwrap();
        assert!((k3 - 0.03125).abs() < 1e-11);
        assert!((k3 / k2 - 2.0 / 4.0).abs() < 1e-10);
    }

    #[test]
    fn singular_moment() {
        // s = 0.05: Γ(0.05) = 19.470085311...
        let v = tilted_power_moment(0.05, 1.0).unwrap();
        assert!((v - 19.470_085_311_255_51).abs() < 1e-8, "{v}");
    }

    #[test]
    fn laplace_oracle_matches_log_for_gamma() {
        let prior = PriorSpec::new(0.0, 1.0, 1.0, 6.0).unwrap();
        let v = laplace_exponent(3.0, &prior).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-10, "{v}");
    }
}
