//! Named metrics with their expected properties.
//!
//! Entries are built through the same φ machinery as user specs. Where a
//! closed display formula for F exists it is attached as an independent
//! evaluator; entries whose display does not reproduce the normal form carry
//! an [`ErratumNote`] naming the divergent term.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::expr::Jet;
use crate::family::{build_corollary_phi, build_spherical_phi, CorollarySpec, SphericalPhi, SphericalPhiSpec};
use crate::geometry::{dot, norm, to_zrs, BasePoint, FinslerNorm, MetricSpec, Tangent};
use crate::grid::{random_points, SamplingGrid};
use crate::phi::{PartialSet, PhiBackend, PhiFunction, PhiPoint, PHI_VARS};
use crate::{Error, Result};

/// A catalog parameter: a number or an expression/text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Num(f64),
    Text(String),
}

pub type Params = BTreeMap<String, Param>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Flags {
    pub finsler: Option<bool>,
    pub projectively_flat: Option<bool>,
    pub cylindrically_symmetric: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErratumNote {
    pub term: String,
    pub detail: String,
}

/// A direct `(x, y) ↦ F` transcription of a displayed formula.
#[derive(Debug, Clone)]
pub enum DisplayFormula {
    FishTank,
    ShenRanders { n: usize },
    Spherical { n: usize, phi: SphericalPhi },
    Example1 { n: usize, eps: f64, gamma: f64, mu: f64 },
    Example2 { n: usize, eps: f64, k: f64, m: u32 },
}

impl FinslerNorm for DisplayFormula {
    fn n(&self) -> usize {
        match self {
            DisplayFormula::FishTank => 2,
            DisplayFormula::ShenRanders { n }
            | DisplayFormula::Spherical { n, .. }
            | DisplayFormula::Example1 { n, .. }
            | DisplayFormula::Example2 { n, .. } => *n,
        }
    }

    fn eval(&self, x: &BasePoint, y: &Tangent) -> Result<f64> {
        if x.xbar.len() != self.n() || y.ybar.len() != self.n() {
            return Err(Error::Dimension(format!("display formula expects n = {}", self.n())));
        }
        match self {
            DisplayFormula::FishTank => {
                let (x1, x2) = (x.xbar[0], x.xbar[1]);
                let (y0, y1, y2) = (y.y0, y.ybar[0], y.ybar[1]);
                let den = 1.0 - x1 * x1 - x2 * x2;
                if !(den > 0.0) {
                    return Err(Error::Domain("fish tank needs |xbar| < 1".into()));
                }
                let cross = -x2 * y1 + x1 * y2;
                let rad = cross * cross + (y0 * y0 + y1 * y1 + y2 * y2) * den;
                Ok(rad.sqrt() / den - (x2 * y1 - x1 * y2) / den)
            }
            DisplayFormula::ShenRanders { .. } => {
                let (xv, yv) = (x.to_vec(), y.to_vec());
                let x2 = dot(&xv, &xv);
                let den = 1.0 - x2 * x2;
                if !(den > 0.0) {
                    return Err(Error::Domain("Shen's Randers metric needs |x| < 1".into()));
                }
                let beta = y.y0 * x2 - 2.0 * x.x0 * dot(&xv, &yv);
                Ok((den * dot(&yv, &yv) + beta * beta).sqrt() / den + beta / den)
            }
            DisplayFormula::Spherical { phi, .. } => {
                let (xv, yv) = (x.to_vec(), y.to_vec());
                let ny = norm(&yv);
                Ok(ny * phi.value(norm(&xv), dot(&xv, &yv) / ny)?)
            }
            DisplayFormula::Example1 { eps, gamma, mu, .. } => {
                let (r, u) = (norm(&x.xbar), norm(&y.ybar));
                let xy = dot(&x.xbar, &y.ybar);
                let s = xy / u;
                let g5 = 2.0 * (1.0 + (1.0 + mu) * r * r).sqrt() / (1.0 + mu * r * r).powi(2);
                let num = (1.0 + (1.0 + mu) * r * r) * (u * u * r * r - xy * xy) + xy * xy;
                // The radicand carries ⟨x̄,ȳ⟩ to the first power, as displayed.
                let rad = u * u + mu * (r * r * u * u - xy);
                if !(rad > 0.0) {
                    return Err(Error::Domain(format!("display radicand {rad:e} is not positive")));
                }
                Ok((y.y0 * y.y0 + eps * u * u).sqrt() + gamma * y.y0 + s * g5 + num / ((1.0 + mu * r * r) * rad.sqrt()))
            }
            DisplayFormula::Example2 { eps, k, m, .. } => {
                let c = to_zrs(x, y)?;
                let (r, s) = (c.r, c.s);
                let a = r * r - s * s;
                let mut im = s;
                for j in 1..=*m {
                    im = s * a.powi(j as i32) + 2.0 * j as f64 * r * r * im;
                }
                let mf = *m as f64;
                let phi = k + (c.z * c.z + eps).sqrt() + a.powi(*m as i32 + 1) / (mf + 1.0) + 2.0 * s / (1.0 + 2.0 * mf) * im;
                Ok(c.u * phi)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub spec: MetricSpec,
    pub flags: Flags,
    pub display: Option<DisplayFormula>,
    pub params: Params,
    pub errata: Vec<ErratumNote>,
}

/// Display formula vs normal form at seeded random points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplayCheck {
    pub points: usize,
    /// `max |display − F| / F`
    pub max_rel: f64,
    /// Points where the display could not be evaluated.
    pub failures: usize,
}

impl CatalogEntry {
    pub fn display_check(&self, count: usize, seed: u64) -> Result<Option<DisplayCheck>> {
        let Some(d) = &self.display else { return Ok(None) };
        let mut out = DisplayCheck {
            points: count,
            max_rel: 0.0,
            failures: 0,
        };
        for (x, y) in random_points(&self.spec, count, seed) {
            let f = self.spec.eval_f(&x, &y)?;
            match d.eval(&x, &y) {
                Ok(v) => out.max_rel = out.max_rel.max((v - f).abs() / f.abs()),
                Err(_) => out.failures += 1,
            }
        }
        Ok(Some(out))
    }
}

pub const NAMES: [&str; 8] = [
    "euclidean",
    "fish_tank",
    "shen_randers",
    "spherically_symmetric",
    "warped_x0",
    "warped_r",
    "example1",
    "example2",
];

fn num(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(Param::Num(v)) => Ok(*v),
        Some(Param::Text(_)) => Err(Error::Invalid(format!("parameter `{key}` must be a number"))),
    }
}

fn text(params: &Params, key: &str, default: &str) -> Result<String> {
    match params.get(key) {
        None => Ok(default.to_string()),
        Some(Param::Text(v)) => Ok(v.clone()),
        Some(Param::Num(_)) => Err(Error::Invalid(format!("parameter `{key}` must be text"))),
    }
}

fn dim(params: &Params, default: usize) -> Result<usize> {
    let n = num(params, "n", default as f64)?;
    if n.fract() != 0.0 || n < 2.0 {
        return Err(Error::Invalid(format!("n = {n} must be an integer >= 2")));
    }
    Ok(n as usize)
}

/// Build a named entry; unknown names or parameters are errors.
pub fn lookup(name: &str, params: &Params) -> Result<CatalogEntry> {
    let allowed: &[&str] = match name {
        "euclidean" | "shen_randers" => &["n"],
        "fish_tank" => &[],
        "spherically_symmetric" => &["n", "k", "f", "g"],
        "warped_x0" | "warped_r" => &["n", "phi"],
        "example1" => &["n", "eps", "gamma", "mu", "rho"],
        "example2" => &["n", "eps", "k", "m", "rho", "g5"],
        other => return Err(Error::Invalid(format!("unknown catalog entry `{other}`"))),
    };
    if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Invalid(format!("`{name}` has no parameter `{extra}`")));
    }
    let mut entry = match name {
        "euclidean" => euclidean(dim(params, 3)?),
        "fish_tank" => fish_tank(),
        "shen_randers" => shen_randers(dim(params, 3)?),
        "spherically_symmetric" => spherically_symmetric(
            dim(params, 3)?,
            num(params, "k", 1.0)?,
            &text(params, "f", "2*xi")?,
            &text(params, "g", "0")?,
        ),
        "warped_x0" => warped_x0(dim(params, 3)?, &text(params, "phi", "sqrt(1+z^2)")?),
        "warped_r" => warped_r(dim(params, 3)?, &text(params, "phi", "sqrt(1+z^2) + r^2 + s^2")?),
        "example1" => example1(
            dim(params, 3)?,
            num(params, "eps", 1.0)?,
            num(params, "gamma", 0.5)?,
            num(params, "mu", 1.0)?,
            num(params, "rho", EXAMPLE1_RHO)?,
        ),
        _ => {
            let m = num(params, "m", 1.0)?;
            if m.fract() != 0.0 || m < 0.0 {
                return Err(Error::Invalid(format!("m = {m} must be a non-negative integer")));
            }
            example2(
                dim(params, 3)?,
                num(params, "eps", 1.0)?,
                num(params, "k", 1.0)?,
                m as u32,
                num(params, "rho", 1.0)?,
                &text(params, "g5", "0")?,
            )
        }
    }?;
    for (k, v) in params {
        entry.params.insert(k.clone(), v.clone());
    }
    Ok(entry)
}

fn symmetric_entry(name: &str, spec: MetricSpec) -> CatalogEntry {
    CatalogEntry {
        name: name.into(),
        spec,
        flags: Flags {
            cylindrically_symmetric: Some(true),
            ..Flags::default()
        },
        display: None,
        params: Params::new(),
        errata: Vec::new(),
    }
}

pub fn euclidean(n: usize) -> Result<CatalogEntry> {
    let mut e = symmetric_entry("euclidean", MetricSpec::new("euclidean", n, 1.0, (-1.0, 1.0), PhiFunction::euclidean())?);
    e.flags.finsler = Some(true);
    e.flags.projectively_flat = Some(true);
    Ok(e)
}

/// The fish-tank metric on `I × B²`.
pub fn fish_tank() -> Result<CatalogEntry> {
    let phi = PhiFunction::dsl("(sqrt(r^2 - s^2 + (1 + z^2)*(1 - r^2)) + sqrt(r^2 - s^2))/(1 - r^2)")?;
    let mut e = symmetric_entry("fish_tank", MetricSpec::new("fish_tank", 2, 1.0, (-1.0, 1.0), phi)?);
    e.display = Some(DisplayFormula::FishTank);
    e.errata.push(ErratumNote {
        term: "beta".into(),
        detail: "the 1-form term changes sign under reflections of the xbar-plane, so F is invariant only under \
                 rotations; the normal-form phi reproduces the display where x1*y2 - x2*y1 >= 0 and its s-derivative \
                 is singular at s = +-r"
            .into(),
    });
    Ok(e)
}

/// Shen's Randers metric on the unit ball of `ℝ^{n+1}`, restricted to
/// `I = (−½, ½)`, `ρ = 0.8` so that `|x| < 1`.
pub fn shen_randers(n: usize) -> Result<CatalogEntry> {
    let b = "(z*(x0^2 + r^2) - 2*x0*(x0*z + s))";
    let den = "(1 - (x0^2 + r^2)^2)";
    let phi = PhiFunction::dsl(&format!("(sqrt({den}*(1 + z^2) + {b}^2) + {b})/{den}"))?;
    let mut e = symmetric_entry("shen_randers", MetricSpec::new("shen_randers", n, 0.8, (-0.5, 0.5), phi)?);
    e.display = Some(DisplayFormula::ShenRanders { n });
    Ok(e)
}

/// `√(1+z²)·φ(b, σ)` with `b = √((x⁰)²+r²)`, `σ = (x⁰z+s)/√(1+z²)`: a
/// spherically symmetric `|y|φ(|x|, ⟨x,y⟩/|y|)` written in the normal form.
#[derive(Debug, Clone)]
struct SphericalNormal {
    phi: SphericalPhi,
}

impl PhiBackend for SphericalNormal {
    fn value(&self, p: PhiPoint) -> Result<f64> {
        let w = (1.0 + p.z * p.z).sqrt();
        let b = (p.x0 * p.x0 + p.r * p.r).sqrt();
        Ok(w * self.phi.value(b, (p.x0 * p.z + p.s) / w)?)
    }

    fn partials(&self, p: PhiPoint) -> Result<PartialSet> {
        let x0 = Jet::<4>::variable(p.x0, 0);
        let z = Jet::variable(p.z, 1);
        let r = Jet::variable(p.r, 2);
        let s = Jet::variable(p.s, 3);
        let one = Jet::constant(1.0);
        let w = (one + z * z).sqrt();
        let b = (x0 * x0 + r * r).sqrt();
        let sigma = (x0 * z + s) / w;
        let inner = self.phi.jet2(b.value, sigma.value)?;
        let composed = Jet::compose2(
            &b,
            &sigma,
            inner.value,
            (inner.grad[0], inner.grad[1]),
            (inner.d2(0, 0), inner.d2(0, 1), inner.d2(1, 1)),
        );
        Ok(PartialSet::from_jet(&(w * composed)))
    }

    fn describe(&self) -> String {
        format!("spherically symmetric, {}", PhiBackend::describe(&self.phi))
    }
}

/// A spherical `φ(b, s)` as a normal-form φ on `I × Bⁿ(ρ)`; needs
/// `b_max ≥ √(max(x⁰)² + ρ²)`.
pub fn spherical_normal(phi: SphericalPhi) -> PhiFunction {
    PhiFunction::new(SphericalNormal { phi })
}

/// Built from the spherical solution with the given `k`, `f(ξ)`, `g(b)`.
pub fn spherically_symmetric(n: usize, k: f64, f: &str, g: &str) -> Result<CatalogEntry> {
    let (rho, interval) = (0.8, (-0.5, 0.5));
    let b_max = (rho * rho + 0.25f64).sqrt();
    let (sph, _) = build_spherical_phi(&SphericalPhiSpec::parse(k, f, Some(g), b_max)?)?;
    let phi = spherical_normal(sph.clone());
    let mut e = symmetric_entry("spherically_symmetric", MetricSpec::new("spherically_symmetric", n, rho, interval, phi)?);
    e.flags.projectively_flat = Some(true);
    e.display = Some(DisplayFormula::Spherical { n, phi: sph });
    Ok(e)
}

fn restricted_dsl(src: &str, unused: &[&str]) -> Result<PhiFunction> {
    let phi = crate::phi::DslPhi::parse(src)?;
    for v in unused {
        if phi.expr().depends_on(v) {
            return Err(Error::Invalid(format!("`{src}` must not depend on {v}")));
        }
    }
    debug_assert_eq!(phi.expr().vars().len(), PHI_VARS.len());
    Ok(PhiFunction::new(phi))
}

/// `|ȳ|φ(x⁰, y⁰/|ȳ|)`.
pub fn warped_x0(n: usize, phi: &str) -> Result<CatalogEntry> {
    let phi = restricted_dsl(phi, &["r", "s"])?;
    Ok(symmetric_entry("warped_x0", MetricSpec::new("warped_x0", n, 1.0, (-1.0, 1.0), phi)?))
}

/// `|ȳ|φ(y⁰/|ȳ|, |x̄|, ⟨x̄,ȳ⟩/|ȳ|)`; `s` is admitted alongside `z, r`.
pub fn warped_r(n: usize, phi: &str) -> Result<CatalogEntry> {
    let phi = restricted_dsl(phi, &["x0"])?;
    Ok(symmetric_entry("warped_r", MetricSpec::new("warped_r", n, 1.0, (-1.0, 1.0), phi)?))
}

/// Ball radius for Example 1: with `k = 0` the second corollary condition
/// fails once `r² − s²` exceeds about 0.72 (`μ = 1`).
pub const EXAMPLE1_RHO: f64 = 0.88;

fn corollary_entry(name: &str, n: usize, rho: f64, cor: CorollarySpec) -> Result<(MetricSpec, SamplingGrid)> {
    let interval = (-1.0, 1.0);
    let grid = SamplingGrid::for_domain(interval, rho, crate::grid::DEFAULT_NODES, 0);
    let phi = build_corollary_phi(&cor.with_xi_max(rho * rho), n, &grid)?;
    Ok((MetricSpec::new(name, n, rho, interval, phi)?, grid))
}

pub fn example1(n: usize, eps: f64, gamma: f64, mu: f64, rho: f64) -> Result<CatalogEntry> {
    if !(eps > 0.0 && gamma.abs() < 1.0 && mu >= 0.0) {
        return Err(Error::Invalid(format!("example1 needs eps > 0, |gamma| < 1, mu >= 0 (got {eps}, {gamma}, {mu})")));
    }
    let cor = CorollarySpec::parse(
        0.0,
        &format!("sqrt(z^2 + ({eps:?})) + ({gamma:?})*z"),
        None,
        Some(&format!("2*sqrt(1 + (1 + ({mu:?}))*r^2)/(1 + ({mu:?})*r^2)^2")),
        Some(&format!("(2 - ({mu:?})*(1 + (1 + ({mu:?}))*xi))/(1 + ({mu:?})*xi)^(5/2)")),
    )?;
    let (spec, _) = corollary_entry("example1", n, rho, cor)?;
    let mut e = symmetric_entry("example1", spec);
    e.flags.projectively_flat = Some(true);
    e.flags.finsler = Some(true);
    e.display = Some(DisplayFormula::Example1 { n, eps, gamma, mu });
    e.errata.push(ErratumNote {
        term: "integral part".into(),
        detail: "the displayed F has <xbar,ybar> unsquared inside the square root and s*g5 without the |ybar| factor; \
                 it is kept as a diagnostic only and the entry uses the corollary construction"
            .into(),
    });
    for (k, v) in [("eps", eps), ("gamma", gamma), ("mu", mu), ("rho", rho), ("k", 0.0)] {
        e.params.insert(k.into(), Param::Num(v));
    }
    Ok(e)
}

pub fn example2(n: usize, eps: f64, k: f64, m: u32, rho: f64, g5: &str) -> Result<CatalogEntry> {
    if !(eps > 0.0 && k >= 0.0) {
        return Err(Error::Invalid(format!("example2 needs eps > 0, k >= 0 (got {eps}, {k})")));
    }
    let cor = CorollarySpec::parse(
        k,
        &format!("sqrt(z^2 + ({eps:?}))"),
        None,
        Some(g5),
        Some(&format!("2*xi^{m}")),
    )?;
    let (spec, _) = corollary_entry("example2", n, rho, cor)?;
    let mut e = symmetric_entry("example2", spec);
    e.flags.projectively_flat = Some(true);
    e.flags.finsler = Some(true);
    if g5.trim() == "0" {
        e.display = Some(DisplayFormula::Example2 { n, eps, k, m });
    }
    if m >= 2 {
        e.errata.push(ErratumNote {
            term: "I_m".into(),
            detail: "the printed recursion I_m = s(r^2-s^2)^m + 2m r^2 I_(m-1) departs from (1+2m)*int_0^s (r^2-xi^2)^m \
                     for m >= 2; the coefficient 2m/(2m-1) r^2 reproduces the integral"
                .into(),
        });
    }
    for (key, v) in [("eps", eps), ("k", k), ("m", m as f64), ("rho", rho)] {
        e.params.insert(key.into(), Param::Num(v));
    }
    e.params.insert("g5".into(), Param::Text(g5.into()));
    Ok(e)
}

/// Every entry with default parameters.
pub fn all() -> Result<Vec<CatalogEntry>> {
    NAMES.iter().map(|n| lookup(n, &Params::new())).collect()
}
