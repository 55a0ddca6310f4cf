//! One-dimensional definite integrals.
//!
//! [`quadrature`] is adaptive Simpson with an absolute error target.
//! [`GaussPanels`] is a fixed composite Gauss–Legendre rule: its result is a
//! smooth function of the limits and of any parameters inside the integrand,
//! which adaptive refinement is not, so it backs the integrals inside φ
//! that finite-difference oracles later differentiate.

use std::sync::OnceLock;

use crate::{Error, Result};

/// Recursion depth at which adaptive Simpson gives up.
pub const MAX_DEPTH: u32 = 50;

/// `∫_a^b f` by adaptive Simpson with Richardson correction. `tol` is
/// absolute, except that panels are accepted once their error estimate
/// reaches the rounding level of their own value.
pub fn quadrature<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("quadrature tolerance must be positive, got {tol}")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Invalid(format!("quadrature limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return Ok(-quadrature(f, b, a, tol)?);
    }
    let fa = f(a)?;
    let fm = f(0.5 * (a + b))?;
    let fb = f(b)?;
    let whole = simpson(a, b, fa, fm, fb);
    step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Below the rounding floor of the panel, refinement cannot help.
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= floor {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(Error::Quadrature { a, b });
    }
    Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Nodes per Gauss–Legendre panel.
pub const GAUSS_ORDER: usize = 16;

/// Nodes and weights of the 16-point rule on `[−1, 1]`.
fn gauss_rule() -> &'static [(f64, f64); GAUSS_ORDER] {
    static RULE: OnceLock<[(f64, f64); GAUSS_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_ORDER;
        let mut rule = [(0.0, 0.0); GAUSS_ORDER];
        for (i, node) in rule.iter_mut().enumerate() {
            // Newton on Pₙ from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *node = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// Composite Gauss–Legendre with a fixed number of equal panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPanels {
    pub panels: usize,
}

impl GaussPanels {
    pub fn new(panels: usize) -> Self {
        GaussPanels { panels: panels.max(1) }
    }

    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        Ok(self.integrate_many(|x| Ok([f(x)?]), a, b)?[0])
    }

    /// Several integrands sharing one pass over the nodes.
    pub fn integrate_many<const K: usize, F>(&self, f: F, a: f64, b: f64) -> Result<[f64; K]>
    where
        F: Fn(f64) -> Result<[f64; K]>,
    {
        let mut acc = [0.0; K];
        if a == b {
            return Ok(acc);
        }
        let h = (b - a) / self.panels as f64;
        for k in 0..self.panels {
            let mid = a + h * (k as f64 + 0.5);
            let mut part = [0.0; K];
            for &(x, w) in gauss_rule() {
                let v = f(mid + 0.5 * h * x)?;
                for (p, vi) in part.iter_mut().zip(v) {
                    *p += w * vi;
                }
            }
            for (a, p) in acc.iter_mut().zip(part) {
                *a += 0.5 * h * p;
            }
        }
        Ok(acc)
    }

    /// Smallest power-of-two panel count (up to `max_panels`) whose result
    /// on `[a, b]` agrees with adaptive Simpson at `tol`.
    pub fn calibrate<F>(f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<GaussPanels>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let reference = quadrature(&f, a, b, tol)?;
        let mut panels = 1;
        loop {
            let rule = GaussPanels::new(panels);
            let value = rule.integrate(&f, a, b)?;
            if (value - reference).abs() <= 10.0 * tol * (1.0 + reference.abs()) {
                return Ok(rule);
            }
            if panels >= max_panels {
                return Err(Error::Quadrature { a, b });
            }
            panels *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Romberg table on the trapezoid rule: the independent oracle.
    fn romberg(f: impl Fn(f64) -> f64, a: f64, b: f64, levels: usize) -> f64 {
        let mut prev: Vec<f64> = Vec::new();
        for k in 0..levels {
            let n = 1usize << k;
            let h = (b - a) / n as f64;
            let trap = h * (0.5 * (f(a) + f(b)) + (1..n).map(|i| f(a + h * i as f64)).sum::<f64>());
            let mut row = vec![trap];
            for j in 1..=k {
                let c = 4f64.powi(j as i32);
                row.push((c * row[j - 1] - prev[j - 1]) / (c - 1.0));
            }
            prev = row;
        }
        *prev.last().unwrap()
    }

    #[test]
    fn linear_integral() {
        let v = quadrature(|x| Ok(2.0 * x), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_exactly_zero() {
        assert_eq!(quadrature(|x| Ok(x.exp()), 0.0, 0.0, 1e-12).unwrap(), 0.0);
        assert_eq!(GaussPanels::new(3).integrate(Ok, 2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| Ok(x.sin() + 1.0);
        let a = quadrature(f, 0.2, 1.7, 1e-12).unwrap();
        let b = quadrature(f, 1.7, 0.2, 1e-12).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn example_weight_against_romberg() {
        let g6 = |x: f64| (2.0 - (1.0 + 2.0 * x)) / (1.0 + x).powf(2.5);
        let oracle = romberg(g6, 0.0, 3.0, 20);
        let v = quadrature(|x| Ok(g6(x)), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
        let gl = GaussPanels::new(8).integrate(|x| Ok(g6(x)), 0.0, 3.0).unwrap();
        assert!((gl - oracle).abs() < 1e-12);
    }

    #[test]
    fn gauss_rule_is_exact_for_degree_31() {
        let v = GaussPanels::new(1).integrate(|x| Ok(x.powi(30)), -1.0, 1.0).unwrap();
        assert!((v - 2.0 / 31.0).abs() < 1e-15);
        let w: f64 = gauss_rule().iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_integrands_reach_rounding_floor() {
        let v = quadrature(|x| Ok(3.0 * x.powi(10) * 1e5), 0.0, 3.0, 1e-12).unwrap();
        let exact = 3.0 * 3f64.powi(11) / 11.0 * 1e5;
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let r = quadrature(|x| Ok((1.0 / x).sin()), 0.0, 1.0, 1e-15);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn calibration_refines() {
        let f = |x: f64| Ok((20.0 * x).sin());
        let rule = GaussPanels::calibrate(f, 0.0, 3.0, 1e-12, 64).unwrap();
        assert!(rule.panels > 1);
        let exact = (1.0 - 60f64.cos()) / 20.0;
        assert!((rule.integrate(f, 0.0, 3.0).unwrap() - exact).abs() < 1e-10);
    }
}
