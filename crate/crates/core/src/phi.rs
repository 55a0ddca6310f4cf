//! The generating function φ(x⁰, z, r, s) and its partial derivatives.

use std::fmt;
use std::ops::{Add, Mul};
use std::sync::Arc;

use crate::expr::{Expr, Jet};
use crate::{Error, Result};

/// Variable names, in order, of a DSL-backed φ.
pub const PHI_VARS: [&str; 4] = ["x0", "z", "r", "s"];

/// Central-difference step for first derivatives.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Central-difference step for second derivatives.
pub const FD_STEP_SECOND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPoint {
    pub x0: f64,
    pub z: f64,
    pub r: f64,
    pub s: f64,
}

impl PhiPoint {
    pub fn new(x0: f64, z: f64, r: f64, s: f64) -> Self {
        PhiPoint { x0, z, r, s }
    }
}

/// φ together with the partials needed by the tensor, spray and flatness
/// formulas. Mixed partials are stored once per unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct PartialSet {
    pub phi: f64,
    pub d_x0: f64,
    pub d_z: f64,
    pub d_r: f64,
    pub d_s: f64,
    pub d_zz: f64,
    pub d_ss: f64,
    pub d_sz: f64,
    pub d_rz: f64,
    pub d_rs: f64,
    pub d_x0z: f64,
    pub d_x0s: f64,
    pub d_x0x0: f64,
}

impl PartialSet {
    pub fn from_jet(j: &Jet<4>) -> Self {
        PartialSet {
            phi: j.value,
            d_x0: j.grad[0],
            d_z: j.grad[1],
            d_r: j.grad[2],
            d_s: j.grad[3],
            d_zz: j.d2(1, 1),
            d_ss: j.d2(3, 3),
            d_sz: j.d2(1, 3),
            d_rz: j.d2(1, 2),
            d_rs: j.d2(2, 3),
            d_x0z: j.d2(0, 1),
            d_x0s: j.d2(0, 3),
            d_x0x0: j.d2(0, 0),
        }
    }

    pub fn as_array(&self) -> [f64; 13] {
        [
            self.phi, self.d_x0, self.d_z, self.d_r, self.d_s, self.d_zz, self.d_ss, self.d_sz,
            self.d_rz, self.d_rs, self.d_x0z, self.d_x0s, self.d_x0x0,
        ]
    }

    pub const NAMES: [&'static str; 13] = [
        "phi", "phi_x0", "phi_z", "phi_r", "phi_s", "phi_zz", "phi_ss", "phi_sz", "phi_rz",
        "phi_rs", "phi_x0z", "phi_x0s", "phi_x0x0",
    ];

    fn zip(self, o: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        PartialSet {
            phi: f(self.phi, o.phi),
            d_x0: f(self.d_x0, o.d_x0),
            d_z: f(self.d_z, o.d_z),
            d_r: f(self.d_r, o.d_r),
            d_s: f(self.d_s, o.d_s),
            d_zz: f(self.d_zz, o.d_zz),
            d_ss: f(self.d_ss, o.d_ss),
            d_sz: f(self.d_sz, o.d_sz),
            d_rz: f(self.d_rz, o.d_rz),
            d_rs: f(self.d_rs, o.d_rs),
            d_x0z: f(self.d_x0z, o.d_x0z),
            d_x0s: f(self.d_x0s, o.d_x0s),
            d_x0x0: f(self.d_x0x0, o.d_x0x0),
        }
    }
}

impl Add for PartialSet {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Mul<f64> for PartialSet {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.zip(self, |a, _| a * k)
    }
}

/// Something that can evaluate φ and its exact partials.
pub trait PhiBackend: Send + Sync + fmt::Debug {
    fn value(&self, p: PhiPoint) -> Result<f64>;
    fn partials(&self, p: PhiPoint) -> Result<PartialSet>;
    fn describe(&self) -> String;
}

/// Shared handle to a φ backend.
#[derive(Clone)]
pub struct PhiFunction(Arc<dyn PhiBackend>);

impl fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhiFunction({})", self.0.describe())
    }
}

impl PhiFunction {
    pub fn new(backend: impl PhiBackend + 'static) -> Self {
        PhiFunction(Arc::new(backend))
    }

    /// φ given as an expression in `x0`, `z`, `r`, `s`.
    pub fn dsl(source: &str) -> Result<Self> {
        Ok(Self::new(DslPhi::parse(source)?))
    }

    /// √(1+z²): the Euclidean norm in normal form.
    pub fn euclidean() -> Self {
        Self::dsl("sqrt(1+z^2)").expect("valid builtin")
    }

    pub fn value(&self, p: PhiPoint) -> Result<f64> {
        self.0.value(p)
    }

    pub fn partials(&self, p: PhiPoint) -> Result<PartialSet> {
        self.0.partials(p)
    }

    pub fn describe(&self) -> String {
        self.0.describe()
    }

    /// `self + other`.
    pub fn plus(&self, other: &PhiFunction) -> Self {
        Self::new(Linear {
            terms: vec![(1.0, self.clone()), (1.0, other.clone())],
        })
    }

    /// `(1 - t)·self + t·other`.
    pub fn lerp(&self, other: &PhiFunction, t: f64) -> Self {
        Self::new(Linear {
            terms: vec![(1.0 - t, self.clone()), (t, other.clone())],
        })
    }
}

#[derive(Debug, Clone)]
pub struct DslPhi {
    expr: Expr,
}

impl DslPhi {
    pub fn parse(source: &str) -> Result<Self> {
        Ok(DslPhi {
            expr: Expr::parse(source, &PHI_VARS)?,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl PhiBackend for DslPhi {
    fn value(&self, p: PhiPoint) -> Result<f64> {
        Ok(self.expr.eval(&[p.x0, p.z, p.r, p.s])?)
    }

    fn partials(&self, p: PhiPoint) -> Result<PartialSet> {
        let seeds = [
            Jet::<4>::variable(p.x0, 0),
            Jet::variable(p.z, 1),
            Jet::variable(p.r, 2),
            Jet::variable(p.s, 3),
        ];
        Ok(PartialSet::from_jet(&self.expr.jet(&seeds)?))
    }

    fn describe(&self) -> String {
        format!("dsl: {}", self.expr)
    }
}

/// Σ cₖ·φₖ.
#[derive(Debug, Clone)]
pub struct Linear {
    terms: Vec<(f64, PhiFunction)>,
}

impl PhiBackend for Linear {
    fn value(&self, p: PhiPoint) -> Result<f64> {
        let mut acc = 0.0;
        for (c, f) in &self.terms {
            acc += c * f.value(p)?;
        }
        Ok(acc)
    }

    fn partials(&self, p: PhiPoint) -> Result<PartialSet> {
        let mut acc = PartialSet::default();
        for (c, f) in &self.terms {
            acc = acc + f.partials(p)? * *c;
        }
        Ok(acc)
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, f)| format!("{c}*[{}]", f.describe()))
            .collect();
        parts.join(" + ")
    }
}

/// Exact partials from the backend.
pub fn partials(phi: &PhiFunction, x0: f64, z: f64, r: f64, s: f64) -> Result<PartialSet> {
    phi.partials(PhiPoint::new(x0, z, r, s))
}

/// Central finite differences of φ values. Test oracle only.
pub fn fd_partials(phi: &PhiFunction, x0: f64, z: f64, r: f64, s: f64) -> Result<PartialSet> {
    if r <= 2.0 * FD_STEP_SECOND {
        return Err(Error::Margin(format!(
            "r = {r:e} must exceed {:e}",
            2.0 * FD_STEP_SECOND
        )));
    }
    let base = [x0, z, r, s];
    let f = |d: [f64; 4]| -> Result<f64> {
        phi.value(PhiPoint::new(
            base[0] + d[0],
            base[1] + d[1],
            base[2] + d[2],
            base[3] + d[3],
        ))
    };
    let shift = |i: usize, h: f64| {
        let mut d = [0.0; 4];
        d[i] = h;
        d
    };
    let first = |i: usize| -> Result<f64> {
        let h = FD_STEP_FIRST;
        Ok((f(shift(i, h))? - f(shift(i, -h))?) / (2.0 * h))
    };
    let f0 = f([0.0; 4])?;
    let second = |i: usize, j: usize| -> Result<f64> {
        let h = FD_STEP_SECOND;
        if i == j {
            return Ok((f(shift(i, h))? - 2.0 * f0 + f(shift(i, -h))?) / (h * h));
        }
        let pp = |a: f64, b: f64| {
            let mut d = [0.0; 4];
            d[i] = a;
            d[j] = b;
            f(d)
        };
        Ok((pp(h, h)? - pp(h, -h)? - pp(-h, h)? + pp(-h, -h)?) / (4.0 * h * h))
    };
    const X0: usize = 0;
    const Z: usize = 1;
    const R: usize = 2;
    const S: usize = 3;
    Ok(PartialSet {
        phi: f0,
        d_x0: first(X0)?,
        d_z: first(Z)?,
        d_r: first(R)?,
        d_s: first(S)?,
        d_zz: second(Z, Z)?,
        d_ss: second(S, S)?,
        d_sz: second(S, Z)?,
        d_rz: second(R, Z)?,
        d_rs: second(R, S)?,
        d_x0z: second(X0, Z)?,
        d_x0s: second(X0, S)?,
        d_x0x0: second(X0, X0)?,
    })
}

/// Largest componentwise `|a - b| / (1 + |a|)`.
pub fn max_rel_diff(a: &PartialSet, b: &PartialSet) -> f64 {
    a.as_array()
        .iter()
        .zip(b.as_array())
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs()))
        .fold(0.0, f64::max)
}
