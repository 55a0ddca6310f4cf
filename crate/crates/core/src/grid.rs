//! Deterministic sampling grids over `(x⁰, z, r, σ)` with `s = σ·r`, plus
//! seeded random points in `TM`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::geometry::{norm, BasePoint, MetricSpec, Tangent, R_MIN};
use crate::{Error, Result};

/// Grid nodes stay this fraction of ρ inside the ball.
pub const RADIAL_MARGIN: f64 = 1e-3;
pub const DEFAULT_NODES: usize = 21;
pub const DEFAULT_Z_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis { lo, hi, n }
    }

    pub fn node(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    fn parse(text: &str) -> Result<Axis> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::Invalid(format!("axis `{text}` is not LO:HI:N"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        Ok(Axis { lo, hi, n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub index: usize,
    pub x0: f64,
    pub z: f64,
    pub r: f64,
    pub sigma: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingGrid {
    pub x0: Axis,
    pub z: Axis,
    pub r: Axis,
    pub sigma: Axis,
    pub seed: u64,
}

impl SamplingGrid {
    /// `nodes` per axis over `x⁰ ∈ I`, `|z| ≤ 10`, `r ∈ [r_min, 0.95ρ]`, `σ ∈ [−1, 1]`.
    pub fn with_nodes(spec: &MetricSpec, nodes: usize, seed: u64) -> Self {
        Self::for_domain(spec.interval, spec.rho, nodes, seed)
    }

    pub fn for_domain(interval: (f64, f64), rho: f64, nodes: usize, seed: u64) -> Self {
        SamplingGrid {
            x0: Axis::new(interval.0, interval.1, nodes),
            z: Axis::new(-DEFAULT_Z_MAX, DEFAULT_Z_MAX, nodes),
            r: Axis::new(R_MIN, 0.95 * rho, nodes),
            sigma: Axis::new(-1.0, 1.0, nodes),
            seed,
        }
    }

    pub fn default_for(spec: &MetricSpec) -> Self {
        Self::with_nodes(spec, DEFAULT_NODES, 0)
    }

    /// Override axes from `x0=LO:HI:N,z=LO:HI:N,r=…,sigma=…`; unspecified axes
    /// keep their defaults.
    pub fn with_flags(mut self, flags: &str) -> Result<Self> {
        for item in flags.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("grid item `{item}` has no `=`")))?;
            let axis = Axis::parse(value)?;
            match key.trim() {
                "x0" => self.x0 = axis,
                "z" => self.z = axis,
                "r" => self.r = axis,
                "sigma" => self.sigma = axis,
                other => return Err(Error::Invalid(format!("unknown grid axis `{other}`"))),
            }
        }
        Ok(self)
    }

    pub fn validate(&self, spec: &MetricSpec) -> Result<()> {
        for (name, a) in [("x0", self.x0), ("z", self.z), ("r", self.r), ("sigma", self.sigma)] {
            if a.n == 0 || !(a.lo <= a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::Invalid(format!(
                    "grid axis {name} = {}:{}:{} is empty",
                    a.lo, a.hi, a.n
                )));
            }
        }
        let r_max = spec.rho * (1.0 - RADIAL_MARGIN);
        if self.r.lo < R_MIN || self.r.hi > r_max {
            return Err(Error::Invalid(format!(
                "r axis [{}, {}] must lie in [{R_MIN:e}, {r_max}]",
                self.r.lo, self.r.hi
            )));
        }
        if self.sigma.lo < -1.0 || self.sigma.hi > 1.0 {
            return Err(Error::Invalid("sigma axis must lie in [-1, 1]".into()));
        }
        let (lo, hi) = spec.interval;
        if self.x0.lo < lo || self.x0.hi > hi {
            return Err(Error::Invalid(format!(
                "x0 axis [{}, {}] must lie in the interval [{lo}, {hi}]",
                self.x0.lo, self.x0.hi
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x0.n * self.z.n * self.r.n * self.sigma.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `index` in row-major order (x⁰ slowest, σ fastest).
    pub fn node(&self, index: usize) -> GridNode {
        let mut k = index;
        let is = k % self.sigma.n;
        k /= self.sigma.n;
        let ir = k % self.r.n;
        k /= self.r.n;
        let iz = k % self.z.n;
        let ix = k / self.z.n;
        let r = self.r.node(ir);
        let sigma = self.sigma.node(is);
        GridNode {
            index,
            x0: self.x0.node(ix),
            z: self.z.node(iz),
            r,
            sigma,
            s: sigma * r,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = GridNode> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Deterministic subsample mask: each node kept with probability `frac`.
    pub fn subsample(&self, frac: f64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.len()).map(|_| rng.random::<f64>() < frac).collect()
    }
}

/// Seeded random `(x, y)` pairs inside the domain of `spec`: `x⁰ ∈ I`,
/// `|x̄| ∈ [0.05ρ, 0.9ρ]`, `z ∈ [−3, 3]`, `|ȳ| ∈ [0.5, 2]`.
pub fn random_points(spec: &MetricSpec, count: usize, seed: u64) -> Vec<(BasePoint, Tangent)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let l = norm(&v);
            if l > 1e-3 {
                return v.into_iter().map(|c| c / l).collect();
            }
        }
    };
    (0..count)
        .map(|_| {
            let (lo, hi) = spec.interval;
            let x0 = rng.random_range(lo..=hi);
            let radius = spec.rho * rng.random_range(0.05..0.9);
            let xbar: Vec<f64> = unit(&mut rng).into_iter().map(|c| c * radius).collect();
            let u = rng.random_range(0.5..2.0);
            let z = rng.random_range(-3.0..3.0);
            let ybar: Vec<f64> = unit(&mut rng).into_iter().map(|c| c * u).collect();
            (BasePoint::new(x0, xbar), Tangent::new(z * u, ybar))
        })
        .collect()
}
