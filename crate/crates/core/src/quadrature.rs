//! Adaptive quadrature: globally adaptive Gauss–Kronrod (7/15) and
//! recursive adaptive Simpson.

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Evaluation budget shared by the adaptive routines.
pub const MAX_EVALUATIONS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn met(&self, err: f64, value: f64) -> bool {
        err <= self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-300, 1e-10)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// `∫_a^b f` by globally adaptive Gauss–Kronrod bisection.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut evals = 15;
    let (v, e) = gk15(&mut f, a, b);
    if !v.is_finite() {
        return Err(Error::Quadrature { evaluations: evals });
    }
    let mut parts = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while !tol.met(err, total) {
        if evals > MAX_EVALUATIONS {
            return Err(Error::Quadrature { evaluations: evals });
        }
        let (idx, _) = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).unwrap();
        let (lo, hi, pv, pe) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return Err(Error::Quadrature { evaluations: evals });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        if !(v1 + v2).is_finite() {
            return Err(Error::Quadrature { evaluations: evals });
        }
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        if err < 0.0 || parts.len() % 64 == 0 {
            // refresh accumulated sums against drift
            total = parts.iter().map(|p| p.2).sum();
            err = parts.iter().map(|p| p.3).sum();
        }
    }
    Ok(parts.iter().map(|p| p.2).sum())
}

/// `∫_a^∞ f` through `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<f64> {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            let v = f(a + s / one_minus) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Recursive adaptive Simpson with Richardson correction, relative
/// tolerance `rel` against the magnitude of the integral.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // coarse pass over 16 panels to fix the absolute target
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut seeds = Vec::with_capacity(panels);
    let mut coarse = 0.0;
    let mut evals = 0usize;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        let (fl, fm, fh) = (f(lo), f(0.5 * (lo + hi)), f(hi));
        evals += 3;
        let s = (hi - lo) / 6.0 * (fl + 4.0 * fm + fh);
        coarse += s;
        seeds.push((lo, hi, fl, fm, fh, s));
    }
    let eps = (rel * coarse.abs()).max(f64::MIN_POSITIVE) / panels as f64;
    let mut total = 0.0;
    for (lo, hi, fl, fm, fh, s) in seeds {
        total += simpson_rec(&mut f, lo, hi, fl, fm, fh, s, eps, 60, &mut evals)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > MAX_EVALUATIONS || !(flm + frm).is_finite() {
        return Err(Error::Quadrature { evaluations: *evals });
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps || !(a < lm && rm < b) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, evals)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, evals)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_gamma_moment() {
        let tol = Tolerance::default();
        let v = integrate(|x| x * x, 0.0, 1.0, tol).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        let v = integrate_to_infinity(|z| z * (-z).exp(), 0.0, tol).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let v = adaptive_simpson(|x| x * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} = 2
        let v = integrate(|x| x.powf(-0.5), 0.0, 1.0, Tolerance::new(1e-12, 1e-10)).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn simpson_smooth() {
        let v = adaptive_simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-11).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
        let v = adaptive_simpson(|x: f64| (-x).exp(), 0.0, 30.0, 1e-11).unwrap();
        assert!((v / (1.0 - (-30f64).exp()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reports_nonconvergence() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::new(0.0, 1e-12));
        assert!(r.is_err());
    }
}
