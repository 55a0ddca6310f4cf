//! Closed-form solutions of the flatness system: the six-function family,
//! its `k`-shifted corollary form, the spherically symmetric solution, and
//! the integral identities they are built on.
//!
//! The radial part `sg₅(r) + ½∫₀^{r²−s²}g₆ + s∫₀ˢg₆(r²−ξ²)dξ` is evaluated
//! with a fixed Gauss–Legendre rule chosen once per construction, so φ is a
//! smooth function of `(r, s)` and can be differentiated numerically by the
//! test oracles. Its partials follow from the Leibniz rule; `φ_r` and `φ_rs`
//! need `∫₀ˢg₆′(r²−ξ²)dξ`, which is integrated alongside the value.

use std::fmt;

use serde::Serialize;

use crate::expr::{Expr, Jet};
use crate::geometry::R_MIN;
use crate::grid::{Axis, SamplingGrid};
use crate::phi::{PartialSet, PhiBackend, PhiFunction, PhiPoint};
use crate::quadrature::{quadrature, GaussPanels};
use crate::report::ErratumFinding;
use crate::tensor::invariants;
use crate::{Error, Result};

/// Bound on `|g₂ − zg₂′ − g₃′|` over the constraint grid.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Tolerance of the adaptive reference quadratures.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;
/// `z`-grid on which the family constraint is checked.
const CONSTRAINT_Z: Axis = Axis {
    lo: -10.0,
    hi: 10.0,
    n: 401,
};
const MAX_PANELS: usize = 256;

/// A real function of one variable given by a DSL expression.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryFn {
    expr: Expr,
}

impl UnaryFn {
    pub fn parse(source: &str, var: &str) -> Result<Self> {
        Ok(UnaryFn {
            expr: Expr::parse(source, &[var])?,
        })
    }

    pub fn zero(var: &str) -> Self {
        UnaryFn {
            expr: Expr::constant(0.0, &[var]),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.expr.eval(&[t])?)
    }

    /// `(f, f′, f″)` at `t`.
    pub fn jet(&self, t: f64) -> Result<(f64, f64, f64)> {
        let j = self.expr.jet(&[Jet::<1>::variable(t, 0)])?;
        Ok((j.value, j.grad[0], j.d2(0, 0)))
    }

    pub fn var(&self) -> &str {
        &self.expr.vars()[0]
    }
}

impl fmt::Display for UnaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

/// Integrals of `g₆` needed at one `(r, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RadialIntegrals {
    /// `∫₀^{r²−s²} g₆`
    h: f64,
    /// `∫₀ˢ g₆(r²−ξ²)dξ` and the same for `g₆′`, `g₆″`.
    k0: f64,
    k1: f64,
    k2: f64,
}

/// `sg₅(r) + ½∫₀^{r²−s²}g₆ + s∫₀ˢg₆(r²−ξ²)dξ` with its `(r, s)` derivatives.
#[derive(Debug, Clone)]
struct RadialPart {
    g5: UnaryFn,
    g6: UnaryFn,
    rule: GaussPanels,
}

impl RadialPart {
    fn new(g5: UnaryFn, g6: UnaryFn, xi_max: f64, tol: f64) -> Result<Self> {
        let hi = xi_max.max(R_MIN);
        let value = GaussPanels::calibrate(|t| g6.eval(t), 0.0, hi, tol, MAX_PANELS)?;
        let slope = GaussPanels::calibrate(|t| Ok(g6.jet(t)?.1), 0.0, hi, tol, MAX_PANELS)?;
        let rule = GaussPanels::new(value.panels.max(slope.panels));
        Ok(RadialPart { g5, g6, rule })
    }

    fn integrals(&self, r: f64, s: f64) -> Result<RadialIntegrals> {
        let a = r * r - s * s;
        let h = self.rule.integrate(|t| self.g6.eval(t), 0.0, a)?;
        let k = self.rule.integrate_many(
            |xi| {
                let (v, d1, d2) = self.g6.jet(r * r - xi * xi)?;
                Ok([v, d1, d2])
            },
            0.0,
            s,
        )?;
        Ok(RadialIntegrals {
            h,
            k0: k[0],
            k1: k[1],
            k2: k[2],
        })
    }

    /// Jet in `(r, s)`, indices 0 and 1.
    fn jet(&self, r: f64, s: f64) -> Result<Jet<2>> {
        let a = r * r - s * s;
        let (g5, g5p, g5pp) = self.g5.jet(r)?;
        let (g6a, g6pa, _) = self.g6.jet(a)?;
        let ints = self.integrals(r, s)?;
        let mut j = Jet::<2>::constant(s * g5 + 0.5 * ints.h + s * ints.k0);
        j.grad[0] = s * g5p + r * g6a + 2.0 * r * s * ints.k1;
        j.grad[1] = g5 + ints.k0;
        j.set_d2(0, 0, s * g5pp + g6a + 2.0 * r * r * g6pa + s * (2.0 * ints.k1 + 4.0 * r * r * ints.k2));
        j.set_d2(0, 1, g5p + 2.0 * r * ints.k1);
        j.set_d2(1, 1, g6a);
        Ok(j)
    }

    fn value(&self, r: f64, s: f64) -> Result<f64> {
        let a = r * r - s * s;
        let h = self.rule.integrate(|t| self.g6.eval(t), 0.0, a)?;
        let k0 = self.rule.integrate(|xi| self.g6.eval(r * r - xi * xi), 0.0, s)?;
        Ok(s * self.g5.eval(r)? + 0.5 * h + s * k0)
    }
}

/// The six generating functions: `g₁, g₂, g₃` of `z`, `g₄` of `x⁰`, `g₅` of
/// `r`, `g₆` of `xi`.
#[derive(Debug, Clone)]
pub struct GFamilySpec {
    pub g1: UnaryFn,
    pub g2: UnaryFn,
    pub g3: UnaryFn,
    pub g4: UnaryFn,
    pub g5: UnaryFn,
    pub g6: UnaryFn,
    /// Tolerance of the reference quadrature used to calibrate the rule.
    pub quad_tol: f64,
    /// Upper end of the `g₆` argument range (`ρ²` for a ball of radius ρ).
    pub xi_max: f64,
}

impl GFamilySpec {
    /// Parse from sources; `None` means the zero function.
    pub fn parse(sources: [Option<&str>; 6]) -> Result<Self> {
        let vars = ["z", "z", "z", "x0", "r", "xi"];
        let mut fns = Vec::with_capacity(6);
        for (src, var) in sources.iter().zip(vars) {
            fns.push(match src {
                Some(s) => UnaryFn::parse(s, var)?,
                None => UnaryFn::zero(var),
            });
        }
        let mut it = fns.into_iter();
        let mut next = || it.next().expect("six functions");
        Ok(GFamilySpec {
            g1: next(),
            g2: next(),
            g3: next(),
            g4: next(),
            g5: next(),
            g6: next(),
            quad_tol: DEFAULT_QUAD_TOL,
            xi_max: 1.0,
        })
    }

    pub fn with_xi_max(mut self, xi_max: f64) -> Self {
        self.xi_max = xi_max;
        self
    }

    /// `max |g₂(z) − zg₂′(z) − g₃′(z)|` over `z ∈ [−10, 10]`.
    pub fn constraint_residual(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..CONSTRAINT_Z.n {
            let z = CONSTRAINT_Z.node(i);
            let (g2, g2p, _) = self.g2.jet(z)?;
            let (_, g3p, _) = self.g3.jet(z)?;
            worst = worst.max((g2 - z * g2p - g3p).abs());
        }
        Ok(worst)
    }
}

/// A constructed family member: `k + g₁ + x⁰g₂ + sg₃ + zg₄ + radial part`.
#[derive(Debug, Clone)]
pub struct Family {
    k: f64,
    g1: UnaryFn,
    g2: UnaryFn,
    g3: UnaryFn,
    g4: UnaryFn,
    radial: RadialPart,
}

/// The two displayed positivity expressions next to the generic Ω, Λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyConditions {
    pub omega_fam: f64,
    pub lambda_fam: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl Family {
    pub fn new(spec: &GFamilySpec) -> Result<Self> {
        Self::with_constant(spec, 0.0)
    }

    fn with_constant(spec: &GFamilySpec, k: f64) -> Result<Self> {
        let residual = spec.constraint_residual()?;
        if !(residual < CONSTRAINT_TOL) {
            return Err(Error::Constraint(format!(
                "g2 - z*g2' - g3' reaches {residual:e} on z in [-10, 10] (must stay below {CONSTRAINT_TOL:e})"
            )));
        }
        Ok(Family {
            k,
            g1: spec.g1.clone(),
            g2: spec.g2.clone(),
            g3: spec.g3.clone(),
            g4: spec.g4.clone(),
            radial: RadialPart::new(spec.g5.clone(), spec.g6.clone(), spec.xi_max, spec.quad_tol)?,
        })
    }

    pub fn phi(&self) -> PhiFunction {
        PhiFunction::new(self.clone())
    }

    /// `g₁ − zg₁′ + (x⁰−sz)g₃′ + ½∫g₆` and the Λ display built on it.
    pub fn finsler_conditions(&self, pt: PhiPoint) -> Result<FamilyConditions> {
        let PhiPoint { x0, z, r, s } = pt;
        let a = r * r - s * s;
        let (g1, g1p, g1pp) = self.g1.jet(z)?;
        let (_, _, g2pp) = self.g2.jet(z)?;
        let (_, g3p, _) = self.g3.jet(z)?;
        let h = self.radial.rule.integrate(|t| self.radial.g6.eval(t), 0.0, a)?;
        let g6a = self.radial.g6.eval(a)?;
        let omega_fam = self.k + g1 - z * g1p + (x0 - s * z) * g3p + 0.5 * h;
        let lambda_fam = (omega_fam + a * g6a) * (g1pp + (x0 - s * z) * g2pp) - a * g3p * g3p;
        let inv = invariants(&self.partials(pt)?, pt);
        Ok(FamilyConditions {
            omega_fam,
            lambda_fam,
            omega: inv.omega,
            lambda: inv.lambda,
        })
    }
}

impl PhiBackend for Family {
    fn value(&self, p: PhiPoint) -> Result<f64> {
        Ok(self.k
            + self.g1.eval(p.z)?
            + p.x0 * self.g2.eval(p.z)?
            + p.s * self.g3.eval(p.z)?
            + p.z * self.g4.eval(p.x0)?
            + self.radial.value(p.r, p.s)?)
    }

    fn partials(&self, p: PhiPoint) -> Result<PartialSet> {
        let PhiPoint { x0, z, r: _, s } = p;
        let (g1, g1p, g1pp) = self.g1.jet(z)?;
        let (g2, g2p, g2pp) = self.g2.jet(z)?;
        let (g3, g3p, g3pp) = self.g3.jet(z)?;
        let (g4, g4p, g4pp) = self.g4.jet(x0)?;
        let rad = self.radial.jet(p.r, s)?;
        Ok(PartialSet {
            phi: self.k + g1 + x0 * g2 + s * g3 + z * g4 + rad.value,
            d_x0: g2 + z * g4p,
            d_z: g1p + x0 * g2p + s * g3p + g4,
            d_r: rad.grad[0],
            d_s: g3 + rad.grad[1],
            d_zz: g1pp + x0 * g2pp + s * g3pp,
            d_ss: rad.d2(1, 1),
            d_sz: g3p,
            d_rz: 0.0,
            d_rs: rad.d2(0, 1),
            d_x0z: g2p + g4p,
            d_x0s: 0.0,
            d_x0x0: z * g4pp,
        })
    }

    fn describe(&self) -> String {
        format!(
            "family: k={}, g1={}, g2={}, g3={}, g4={}, g5={}, g6={}",
            self.k, self.g1, self.g2, self.g3, self.g4, self.radial.g5, self.radial.g6
        )
    }
}

pub fn build_family_phi(spec: &GFamilySpec) -> Result<PhiFunction> {
    Ok(Family::new(spec)?.phi())
}

pub fn family_finsler_conditions(spec: &GFamilySpec, pt: PhiPoint) -> Result<FamilyConditions> {
    Family::new(spec)?.finsler_conditions(pt)
}

/// `φ = k + g₁(z) + zg₄(x⁰) + sg₅(r) + ½∫₀^{r²−s²}g₆ + s∫₀ˢg₆(r²−ξ²)dξ`.
#[derive(Debug, Clone)]
pub struct CorollarySpec {
    pub k: f64,
    pub g1: UnaryFn,
    pub g4: UnaryFn,
    pub g5: UnaryFn,
    pub g6: UnaryFn,
    pub quad_tol: f64,
    pub xi_max: f64,
}

/// Smallest sampled value of each displayed inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryConditions {
    /// `g₁ + zg₄(x⁰)`
    pub a_positive: f64,
    /// `g₁ − zg₁′`
    pub a_omega: f64,
    /// `g₁″`
    pub a_convex: f64,
    /// `k + ½∫₀^{r²−s²}g₆ + (r²−s²)g₆(r²−s²)`
    pub b_lambda: f64,
    /// `k + ½∫₀^{r²−s²}g₆`, required only for `n ≥ 3`
    pub b_omega: f64,
}

impl CorollarySpec {
    pub fn parse(k: f64, g1: &str, g4: Option<&str>, g5: Option<&str>, g6: Option<&str>) -> Result<Self> {
        let opt = |src: Option<&str>, var: &str| match src {
            Some(s) => UnaryFn::parse(s, var),
            None => Ok(UnaryFn::zero(var)),
        };
        Ok(CorollarySpec {
            k,
            g1: UnaryFn::parse(g1, "z")?,
            g4: opt(g4, "x0")?,
            g5: opt(g5, "r")?,
            g6: opt(g6, "xi")?,
            quad_tol: DEFAULT_QUAD_TOL,
            xi_max: 1.0,
        })
    }

    pub fn with_xi_max(mut self, xi_max: f64) -> Self {
        self.xi_max = xi_max;
        self
    }

    fn as_family(&self) -> GFamilySpec {
        GFamilySpec {
            g1: self.g1.clone(),
            g2: UnaryFn::zero("z"),
            g3: UnaryFn::zero("z"),
            g4: self.g4.clone(),
            g5: self.g5.clone(),
            g6: self.g6.clone(),
            quad_tol: self.quad_tol,
            xi_max: self.xi_max,
        }
    }

    /// Evaluate conditions (a) on the `(x⁰, z)` axes of `grid` and (b) on its
    /// `(r, σ)` axes; the first violated inequality is an error.
    pub fn check_conditions(&self, n: usize, grid: &SamplingGrid) -> Result<CorollaryConditions> {
        let fam = Family::with_constant(&self.as_family(), self.k)?;
        let mut out = CorollaryConditions {
            a_positive: f64::INFINITY,
            a_omega: f64::INFINITY,
            a_convex: f64::INFINITY,
            b_lambda: f64::INFINITY,
            b_omega: f64::INFINITY,
        };
        let fail = |condition: &str, node: String, value: f64| Error::Condition {
            condition: condition.into(),
            node,
            value,
        };
        for iz in 0..grid.z.n {
            let z = grid.z.node(iz);
            let (g1, g1p, g1pp) = self.g1.jet(z)?;
            let omega = g1 - z * g1p;
            out.a_omega = out.a_omega.min(omega);
            out.a_convex = out.a_convex.min(g1pp);
            if !(omega > 0.0) {
                return Err(fail("g1 - z*g1' > 0", format!("z={z}"), omega));
            }
            if !(g1pp > 0.0) {
                return Err(fail("g1'' > 0", format!("z={z}"), g1pp));
            }
            for ix in 0..grid.x0.n {
                let x0 = grid.x0.node(ix);
                let v = g1 + z * self.g4.eval(x0)?;
                out.a_positive = out.a_positive.min(v);
                if !(v > 0.0) {
                    return Err(fail("g1 + z*g4(x0) > 0", format!("x0={x0}, z={z}"), v));
                }
            }
        }
        for ir in 0..grid.r.n {
            let r = grid.r.node(ir);
            for is in 0..grid.sigma.n {
                let s = grid.sigma.node(is) * r;
                let a = r * r - s * s;
                let h = fam.radial.rule.integrate(|t| self.g6.eval(t), 0.0, a)?;
                let b_omega = self.k + 0.5 * h;
                let b_lambda = b_omega + a * self.g6.eval(a)?;
                out.b_lambda = out.b_lambda.min(b_lambda);
                out.b_omega = out.b_omega.min(b_omega);
                if !(b_lambda >= 0.0) {
                    return Err(fail("k + 1/2 int g6 + (r^2-s^2) g6(r^2-s^2) >= 0", format!("r={r}, s={s}"), b_lambda));
                }
                if n >= 3 && !(b_omega >= 0.0) {
                    return Err(fail("k + 1/2 int g6 >= 0 (n >= 3)", format!("r={r}, s={s}"), b_omega));
                }
            }
        }
        Ok(out)
    }

    /// The φ without any condition check.
    pub fn family(&self) -> Result<Family> {
        Family::with_constant(&self.as_family(), self.k)
    }
}

pub fn build_corollary_phi(spec: &CorollarySpec, n: usize, grid: &SamplingGrid) -> Result<PhiFunction> {
    spec.check_conditions(n, grid)?;
    Ok(spec.family()?.phi())
}

/// `φ(b, s) = k + s·g(b) + ½∫₀^{b²−s²}f + s∫₀ˢf(b²−ξ²)dξ`.
#[derive(Debug, Clone)]
pub struct SphericalPhiSpec {
    pub k: f64,
    /// `f(ξ)`, the value of `φ_ss` along `ξ = b² − s²`.
    pub f: UnaryFn,
    /// Coefficient `g(b)` of the term linear in `s`.
    pub g: UnaryFn,
    /// Optional `g` of the alternative general-solution form, linked to `f`
    /// by `f = 2g′`.
    pub mosol_g: Option<UnaryFn>,
    pub b_max: f64,
    pub nodes: usize,
    pub quad_tol: f64,
}

impl SphericalPhiSpec {
    pub fn parse(k: f64, f: &str, g: Option<&str>, b_max: f64) -> Result<Self> {
        Ok(SphericalPhiSpec {
            k,
            f: UnaryFn::parse(f, "xi")?,
            g: match g {
                Some(src) => UnaryFn::parse(src, "b")?,
                None => UnaryFn::zero("b"),
            },
            mosol_g: None,
            b_max,
            nodes: crate::grid::DEFAULT_NODES,
            quad_tol: DEFAULT_QUAD_TOL,
        })
    }
}

/// Result of the spherical construction.
#[derive(Debug, Clone)]
pub struct SphericalPhi {
    k: f64,
    radial: RadialPart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalChecks {
    /// `min k + ½∫f`
    pub cond1_min: f64,
    /// `min k + ½∫f + (b²−s²)f(b²−s²)`
    pub cond2_min: f64,
    /// `max |sφ_bs + bφ_ss − φ_b|`
    pub pde_max: f64,
    /// `max |f − 2g′|` when the alternative `g` is supplied.
    pub link_max: Option<f64>,
}

impl SphericalPhi {
    /// Value and `(b, s)` jet (indices 0, 1).
    pub fn jet2(&self, b: f64, s: f64) -> Result<Jet<2>> {
        let mut j = self.radial.jet(b, s)?;
        j.value += self.k;
        Ok(j)
    }

    pub fn value(&self, b: f64, s: f64) -> Result<f64> {
        Ok(self.k + self.radial.value(b, s)?)
    }

    /// `sφ_bs + bφ_ss − φ_b`.
    pub fn pde_residual(&self, b: f64, s: f64) -> Result<f64> {
        let j = self.jet2(b, s)?;
        Ok(s * j.d2(0, 1) + b * j.d2(1, 1) - j.grad[0])
    }

    /// As a φ(x⁰, z, r, s) with `b ↦ r` and no `x⁰`, `z` dependence.
    pub fn phi(&self) -> PhiFunction {
        PhiFunction::new(self.clone())
    }
}

impl PhiBackend for SphericalPhi {
    fn value(&self, p: PhiPoint) -> Result<f64> {
        SphericalPhi::value(self, p.r, p.s)
    }

    fn partials(&self, p: PhiPoint) -> Result<PartialSet> {
        let j = self.jet2(p.r, p.s)?;
        Ok(PartialSet {
            phi: j.value,
            d_r: j.grad[0],
            d_s: j.grad[1],
            d_ss: j.d2(1, 1),
            d_rs: j.d2(0, 1),
            ..PartialSet::default()
        })
    }

    fn describe(&self) -> String {
        format!("spherical: k={}, g={}, f={}", self.k, self.radial.g5, self.radial.g6)
    }
}

/// Build φ(b, s) and verify both positivity conditions, the defining PDE and
/// (when given) the `f = 2g′` link on a `(b, σ)` grid.
pub fn build_spherical_phi(spec: &SphericalPhiSpec) -> Result<(SphericalPhi, SphericalChecks)> {
    let sph = SphericalPhi {
        k: spec.k,
        radial: RadialPart::new(spec.g.clone(), spec.f.clone(), spec.b_max * spec.b_max, spec.quad_tol)?,
    };
    let b_axis = Axis::new(R_MIN, spec.b_max, spec.nodes.max(2));
    let s_axis = Axis::new(-1.0, 1.0, spec.nodes.max(2));
    let mut checks = SphericalChecks {
        cond1_min: f64::INFINITY,
        cond2_min: f64::INFINITY,
        pde_max: 0.0,
        link_max: None,
    };
    for ib in 0..b_axis.n {
        let b = b_axis.node(ib);
        for is in 0..s_axis.n {
            let s = s_axis.node(is) * b;
            let a = b * b - s * s;
            let h = sph.radial.rule.integrate(|t| spec.f.eval(t), 0.0, a)?;
            let c1 = spec.k + 0.5 * h;
            let c2 = c1 + a * spec.f.eval(a)?;
            checks.cond1_min = checks.cond1_min.min(c1);
            checks.cond2_min = checks.cond2_min.min(c2);
            for (name, v) in [("k + 1/2 int f > 0", c1), ("k + 1/2 int f + (b^2-s^2) f(b^2-s^2) > 0", c2)] {
                if !(v > 0.0) {
                    return Err(Error::Condition {
                        condition: name.into(),
                        node: format!("b={b}, s={s}"),
                        value: v,
                    });
                }
            }
            checks.pde_max = checks.pde_max.max(sph.pde_residual(b, s)?.abs());
        }
    }
    if let Some(mg) = &spec.mosol_g {
        let t_axis = Axis::new(0.0, spec.b_max * spec.b_max, 4 * spec.nodes.max(2));
        let mut worst = 0.0f64;
        for i in 0..t_axis.n {
            let t = t_axis.node(i);
            worst = worst.max((spec.f.eval(t)? - 2.0 * mg.jet(t)?.1).abs());
        }
        checks.link_max = Some(worst);
        if !(worst < 1e-9) {
            return Err(Error::Constraint(format!("f = 2g' fails by {worst:e}")));
        }
    }
    Ok((sph, checks))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

/// Tolerance of the two sides of the integral identity.
pub const IDENTITY_TOL: f64 = 1e-11;

/// `∫₀ˢ∫₀^η g₆(r²−ξ²)dξdη + ∫₀ʳ ξg₆(ξ²)dξ`, by nested adaptive quadrature.
pub fn double_integral_form(g6: &UnaryFn, r: f64, s: f64, tol: f64) -> Result<f64> {
    let inner = |eta: f64| quadrature(|xi| g6.eval(r * r - xi * xi), 0.0, eta, tol * 1e-2);
    let outer = quadrature(inner, 0.0, s, tol)?;
    Ok(outer + quadrature(|xi| Ok(xi * g6.eval(xi * xi)?), 0.0, r, tol)?)
}

/// `½∫₀^{r²−s²}g₆ + s∫₀ˢg₆(r²−ξ²)dξ`, by adaptive quadrature.
pub fn single_integral_form(g6: &UnaryFn, r: f64, s: f64, tol: f64) -> Result<f64> {
    Ok(0.5 * quadrature(|t| g6.eval(t), 0.0, r * r - s * s, tol)?
        + s * quadrature(|xi| g6.eval(r * r - xi * xi), 0.0, s, tol)?)
}

pub fn integral_identity_check(g6: &UnaryFn, r: f64, s: f64) -> Result<IdentityCheck> {
    if !(s.abs() <= r) {
        return Err(Error::Invalid(format!("identity needs |s| <= r, got r={r}, s={s}")));
    }
    let lhs = double_integral_form(g6, r, s, IDENTITY_TOL)?;
    let rhs = single_integral_form(g6, r, s, IDENTITY_TOL)?;
    Ok(IdentityCheck {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).abs(),
    })
}

/// One row of the `I_m` audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImRow {
    pub m: u32,
    /// `∫₀ˢ(r²−ξ²)^m dξ` by quadrature.
    pub j: f64,
    /// `(1+2m)·J_m`
    pub i: f64,
    /// `s(r²−s²)^m + 2m·r²·I_{m−1}` iterated from `I₀ = s`.
    pub i_printed: f64,
    /// `s(r²−s²)^m + (2m/(2m−1))·r²·I_{m−1}` with the quadrature `I_{m−1}`.
    pub i_corrected: f64,
}

pub const IM_MAX: u32 = 12;

pub fn im_values(r: f64, s: f64, m_max: u32) -> Result<Vec<ImRow>> {
    if !(s.abs() <= r) {
        return Err(Error::Invalid(format!("I_m needs |s| <= r, got r={r}, s={s}")));
    }
    if m_max > IM_MAX {
        return Err(Error::Invalid(format!("m_max = {m_max} exceeds {IM_MAX}")));
    }
    let a = r * r - s * s;
    let mut rows: Vec<ImRow> = Vec::new();
    for m in 0..=m_max {
        // Degree 2m ≤ 24: a Gauss–Legendre panel integrates it exactly.
        let j = GaussPanels::new(4).integrate(|xi| Ok((r * r - xi * xi).powi(m as i32)), 0.0, s)?;
        let i = (1.0 + 2.0 * m as f64) * j;
        let (i_printed, i_corrected) = match rows.last() {
            None => (s, s),
            Some(prev) => {
                let mf = m as f64;
                let lead = s * a.powi(m as i32);
                (
                    lead + 2.0 * mf * r * r * prev.i_printed,
                    lead + 2.0 * mf / (2.0 * mf - 1.0) * r * r * prev.i,
                )
            }
        };
        rows.push(ImRow {
            m,
            j,
            i,
            i_printed,
            i_corrected,
        });
    }
    Ok(rows)
}

/// Rows where the printed recursion departs from quadrature.
pub fn im_findings(r: f64, s: f64, rows: &[ImRow]) -> Vec<ErratumFinding> {
    rows.iter()
        .filter(|row| (row.i_printed - row.i).abs() > 1e-9 * (1.0 + row.i.abs()))
        .map(|row| ErratumFinding {
            formula: "I_m recursion".into(),
            at: format!("r={r}, s={s}, m={}", row.m),
            printed: row.i_printed,
            measured: row.i,
            note: format!(
                "printed coefficient 2m*r^2 disagrees with quadrature; 2m/(2m-1)*r^2 reproduces it ({})",
                row.i_corrected
            ),
        })
        .collect()
}
