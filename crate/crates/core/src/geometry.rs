//! Coordinates on `I × Bⁿ(ρ)`, the reduction `(x, y) → (x⁰, z, r, s)` and
//! evaluation of `F = |ȳ|·φ(x⁰, z, r, s)`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::phi::{PartialSet, PhiFunction, PhiPoint};
use crate::{Error, Result};

/// Points with `r` below this are excluded from sampling (the spray has `s/r`).
pub const R_MIN: f64 = 1e-6;
/// Smallest admissible `|ȳ|`.
pub const U_MIN: f64 = 1e-9;
const CAUCHY_SCHWARZ_SLACK: f64 = 1e-12;
const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BasePoint {
    pub x0: f64,
    pub xbar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Tangent {
    pub y0: f64,
    pub ybar: Vec<f64>,
}

impl BasePoint {
    pub fn new(x0: f64, xbar: impl Into<Vec<f64>>) -> Self {
        BasePoint { x0, xbar: xbar.into() }
    }

    /// `(x⁰, x¹, …, xⁿ)` as one vector.
    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.x0).chain(self.xbar.iter().copied()).collect()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        BasePoint::new(v[0], &v[1..])
    }
}

impl Tangent {
    pub fn new(y0: f64, ybar: impl Into<Vec<f64>>) -> Self {
        Tangent { y0, ybar: ybar.into() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        std::iter::once(self.y0).chain(self.ybar.iter().copied()).collect()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Tangent::new(v[0], &v[1..])
    }

    pub fn scaled(&self, k: f64) -> Self {
        Tangent::new(self.y0 * k, self.ybar.iter().map(|v| v * k).collect::<Vec<_>>())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The reduced coordinates of a tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ZrsCoords {
    pub z: f64,
    pub r: f64,
    pub s: f64,
    /// `|ȳ|`
    pub u: f64,
    /// `ȳ / |ȳ|`
    pub uvec: Vec<f64>,
}

pub fn to_zrs(x: &BasePoint, y: &Tangent) -> Result<ZrsCoords> {
    if x.xbar.len() != y.ybar.len() {
        return Err(Error::Dimension(format!(
            "xbar has {} components, ybar has {}",
            x.xbar.len(),
            y.ybar.len()
        )));
    }
    let u = norm(&y.ybar);
    if u == 0.0 || !u.is_finite() {
        return Err(Error::Slit(u));
    }
    let uvec: Vec<f64> = y.ybar.iter().map(|v| v / u).collect();
    let r = norm(&x.xbar);
    let s = dot(&x.xbar, &uvec).clamp(-r, r);
    debug_assert!(s.abs() <= r + CAUCHY_SCHWARZ_SLACK);
    Ok(ZrsCoords {
        z: y.y0 / u,
        r,
        s,
        u,
        uvec,
    })
}

/// A point `(x, y)` realising given reduced coordinates, with `|ȳ| = 1`:
/// `x̄ = r·e₁`, `ȳ = σe₁ + √(1−σ²)e₂`, `σ = s/r`.
pub fn realize(n: usize, x0: f64, z: f64, r: f64, s: f64) -> (BasePoint, Tangent) {
    assert!(n >= 2);
    let sigma = if r > 0.0 { (s / r).clamp(-1.0, 1.0) } else { 1.0 };
    let mut xbar = vec![0.0; n];
    xbar[0] = r;
    let mut ybar = vec![0.0; n];
    ybar[0] = sigma;
    ybar[1] = (1.0 - sigma * sigma).max(0.0).sqrt();
    (BasePoint::new(x0, xbar), Tangent::new(z, ybar))
}

/// Anything that evaluates a Finsler function on `TM`.
pub trait FinslerNorm: Send + Sync {
    /// Dimension of the `x̄` factor.
    fn n(&self) -> usize;
    fn eval(&self, x: &BasePoint, y: &Tangent) -> Result<f64>;
}

/// A complete description of one metric `F = |ȳ|·φ` on `I × Bⁿ(ρ)`.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    pub n: usize,
    pub rho: f64,
    pub interval: (f64, f64),
    pub phi: PhiFunction,
}

/// Reduced coordinates plus exact φ partials at one `(x, y)`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub x: BasePoint,
    pub y: Tangent,
    pub zrs: ZrsCoords,
    pub p: PartialSet,
}

impl Frame {
    pub fn point(&self) -> PhiPoint {
        PhiPoint::new(self.x.x0, self.zrs.z, self.zrs.r, self.zrs.s)
    }
}

impl MetricSpec {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        rho: f64,
        interval: (f64, f64),
        phi: PhiFunction,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("n = {n} must be at least 2")));
        }
        if !(rho > 0.0) {
            return Err(Error::Invalid(format!("rho = {rho} must be positive")));
        }
        if !(interval.0 < interval.1) {
            return Err(Error::Invalid(format!(
                "interval [{}, {}] is empty",
                interval.0, interval.1
            )));
        }
        Ok(MetricSpec {
            name: name.into(),
            n,
            rho,
            interval,
            phi,
        })
    }

    pub fn check_domain(&self, x: &BasePoint) -> Result<()> {
        if x.xbar.len() != self.n {
            return Err(Error::Dimension(format!(
                "expected {} spatial components, got {}",
                self.n,
                x.xbar.len()
            )));
        }
        let (lo, hi) = self.interval;
        if !(lo..=hi).contains(&x.x0) {
            return Err(Error::Domain(format!("x0 = {} not in [{lo}, {hi}]", x.x0)));
        }
        let r = norm(&x.xbar);
        if !(r < self.rho) {
            return Err(Error::Domain(format!("|xbar| = {r} not below rho = {}", self.rho)));
        }
        Ok(())
    }

    /// `F(x, y) = |ȳ|·φ(x⁰, z, r, s)`.
    pub fn eval_f(&self, x: &BasePoint, y: &Tangent) -> Result<f64> {
        self.check_domain(x)?;
        let c = to_zrs(x, y)?;
        Ok(c.u * self.phi.value(PhiPoint::new(x.x0, c.z, c.r, c.s))?)
    }

    /// Reduced coordinates and partials, enforcing `r ≥ R_MIN`, `u ≥ U_MIN`.
    pub fn frame(&self, x: &BasePoint, y: &Tangent) -> Result<Frame> {
        self.check_domain(x)?;
        let zrs = to_zrs(x, y)?;
        if zrs.u < U_MIN {
            return Err(Error::Slit(zrs.u));
        }
        if zrs.r < R_MIN {
            return Err(Error::Domain(format!("r = {:e} below r_min = {R_MIN:e}", zrs.r)));
        }
        let p = self.phi.partials(PhiPoint::new(x.x0, zrs.z, zrs.r, zrs.s))?;
        Ok(Frame {
            x: x.clone(),
            y: y.clone(),
            zrs,
            p,
        })
    }
}

impl FinslerNorm for MetricSpec {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &BasePoint, y: &Tangent) -> Result<f64> {
        self.eval_f(x, y)
    }
}

fn rotate(o: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..o.nrows())
        .map(|i| (0..o.ncols()).map(|j| o[(i, j)] * v[j]).sum())
        .collect()
}

/// `|F((x⁰, Ox̄), (y⁰, Oȳ)) − F(x, y)|`.
pub fn check_cylindrical_symmetry<M: FinslerNorm + ?Sized>(
    metric: &M,
    x: &BasePoint,
    y: &Tangent,
    o: &DMatrix<f64>,
) -> Result<f64> {
    let n = metric.n();
    if o.nrows() != n || o.ncols() != n {
        return Err(Error::Dimension(format!(
            "O is {}x{}, expected {n}x{n}",
            o.nrows(),
            o.ncols()
        )));
    }
    let defect = (o.transpose() * o - DMatrix::<f64>::identity(n, n)).amax();
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(defect));
    }
    let f = metric.eval(x, y)?;
    let xr = BasePoint::new(x.x0, rotate(o, &x.xbar));
    let yr = Tangent::new(y.y0, rotate(o, &y.ybar));
    Ok((metric.eval(&xr, &yr)? - f).abs())
}

/// Product of `n` Householder reflections with Gaussian normals drawn from
/// a generator seeded by `seed`.
pub fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    assert!(n >= 2, "random_orthogonal needs n >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = DMatrix::<f64>::identity(n, n);
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let vv = dot(&v, &v);
        if vv == 0.0 {
            continue;
        }
        let v = nalgebra::DVector::from_vec(v);
        let h = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
        q = h * q;
    }
    q
}

/// `max_λ |F(x, λy) − λF(x, y)| / (λF(x, y))`.
pub fn check_homogeneity<M: FinslerNorm + ?Sized>(
    metric: &M,
    x: &BasePoint,
    y: &Tangent,
    lambdas: &[f64],
) -> Result<f64> {
    let f = metric.eval(x, y)?;
    let mut worst: f64 = 0.0;
    for &l in lambdas {
        if !(l > 0.0) {
            return Err(Error::Invalid(format!("lambda = {l} must be positive")));
        }
        let fl = metric.eval(x, &y.scaled(l))?;
        worst = worst.max((fl - l * f).abs() / (l * f).abs());
    }
    Ok(worst)
}
