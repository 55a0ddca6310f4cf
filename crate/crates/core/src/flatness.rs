//! Projective-flatness diagnostics: the Hamel residual of F, the two
//! reduced equations `Ω_{x⁰} = φ_{sz}`, `Ω_r = rφ_{ss}` and the intermediate
//! relations they are equivalent to.

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{realize, BasePoint, Frame, MetricSpec, Tangent};
use crate::grid::SamplingGrid;
use crate::phi::{PartialSet, PhiFunction, PhiPoint};
use crate::spray::f_partials_at;
use crate::tensor::OmegaTerms;
use crate::Result;

/// Default verdict tolerance on `max(|R1|, |R2|)`.
pub const DEFAULT_FLAT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamelResidual {
    /// `F_{x^C y^l} y^C − F_{x^l}` for `l = 0..n`.
    pub components: Vec<f64>,
    /// `φ̃_z − 2φ_{x⁰}`
    pub reduced_z: f64,
    /// `φ̃_s − (2/r)φ_r`
    pub reduced_s: f64,
    /// `u(1 + |φ̃|)`, the natural size of the components.
    pub scale: f64,
}

impl HamelResidual {
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn hamel_residual_at(fr: &Frame) -> HamelResidual {
    let fp = f_partials_at(fr);
    let y = fr.y.to_vec();
    let components = (0..y.len())
        .map(|l| (0..y.len()).map(|c| fp.fxy[c][l] * y[c]).sum::<f64>() - fp.fx[l])
        .collect();
    let p = &fr.p;
    let pt = fr.point();
    let (z, r, s) = (pt.z, pt.r, pt.s);
    let varphi = z * p.d_x0 + s / r * p.d_r + p.d_s;
    let varphi_z = p.d_x0 + z * p.d_x0z + s / r * p.d_rz + p.d_sz;
    let varphi_s = z * p.d_x0s + p.d_r / r + s / r * p.d_rs + p.d_ss;
    HamelResidual {
        components,
        reduced_z: varphi_z - 2.0 * p.d_x0,
        reduced_s: varphi_s - 2.0 * p.d_r / r,
        scale: fr.zrs.u * (1.0 + varphi.abs()),
    }
}

pub fn hamel_residual(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<HamelResidual> {
    Ok(hamel_residual_at(&spec.frame(x, y)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FlatnessResiduals {
    /// `Ω_{x⁰} − φ_{sz}`
    pub r1: f64,
    /// `Ω_r − rφ_{ss}`
    pub r2: f64,
    /// `r(φ_{x⁰} − zφ_{x⁰z} − φ_{sz}) − sφ_{rz}`
    pub flat1: f64,
    /// `sφ_{rs} + r(φ_{ss} + zφ_{x⁰s}) − φ_r`
    pub flat2: f64,
    /// `φ_{rz} − rφ_{x⁰s}`
    pub resolv: f64,
}

pub fn residuals_from(p: &PartialSet, pt: PhiPoint) -> FlatnessResiduals {
    let t = OmegaTerms::new(p, pt);
    let (z, r, s) = (pt.z, pt.r, pt.s);
    FlatnessResiduals {
        r1: t.omega_x0 - p.d_sz,
        r2: t.omega_r - r * p.d_ss,
        flat1: r * (p.d_x0 - z * p.d_x0z - p.d_sz) - s * p.d_rz,
        flat2: s * p.d_rs + r * (p.d_ss + z * p.d_x0s) - p.d_r,
        resolv: p.d_rz - r * p.d_x0s,
    }
}

pub fn flatness_residuals(phi: &PhiFunction, pt: PhiPoint) -> Result<FlatnessResiduals> {
    Ok(residuals_from(&phi.partials(pt)?, pt))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstNode {
    pub x0: f64,
    pub z: f64,
    pub r: f64,
    pub s: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub samples: usize,
    pub tolerance: f64,
    /// Maxima of |·| over the grid.
    pub max: FlatnessResiduals,
    /// Largest `‖hamel‖∞ / scale`.
    pub hamel_max_scaled: f64,
    pub worst: Option<WorstNode>,
    pub flat: bool,
    pub evaluation_errors: usize,
    pub first_error: Option<String>,
}

/// Residual sweep over a grid; verdict is `flat` iff `max(|R1|, |R2|) < tol`.
pub fn flatness_report(spec: &MetricSpec, grid: &SamplingGrid, tol: f64) -> Result<FlatnessReport> {
    grid.validate(spec)?;
    let rows: Vec<std::result::Result<(FlatnessResiduals, f64), String>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let nd = grid.node(i);
            let (x, y) = realize(spec.n, nd.x0, nd.z, nd.r, nd.s);
            let fr = spec.frame(&x, &y).map_err(|e| e.to_string())?;
            let h = hamel_residual_at(&fr);
            Ok((residuals_from(&fr.p, fr.point()), h.max_abs() / h.scale))
        })
        .collect();
    let mut rep = FlatnessReport {
        samples: grid.len(),
        tolerance: tol,
        max: FlatnessResiduals::default(),
        hamel_max_scaled: 0.0,
        worst: None,
        flat: false,
        evaluation_errors: 0,
        first_error: None,
    };
    let mut worst = -1.0;
    for (i, row) in rows.into_iter().enumerate() {
        let (res, hamel) = match row {
            Ok(v) => v,
            Err(msg) => {
                rep.evaluation_errors += 1;
                rep.first_error.get_or_insert(msg);
                continue;
            }
        };
        let m = &mut rep.max;
        m.r1 = m.r1.max(res.r1.abs());
        m.r2 = m.r2.max(res.r2.abs());
        m.flat1 = m.flat1.max(res.flat1.abs());
        m.flat2 = m.flat2.max(res.flat2.abs());
        m.resolv = m.resolv.max(res.resolv.abs());
        rep.hamel_max_scaled = rep.hamel_max_scaled.max(hamel);
        let here = res.r1.abs().max(res.r2.abs());
        if here > worst {
            worst = here;
            let nd = grid.node(i);
            rep.worst = Some(WorstNode {
                x0: nd.x0,
                z: nd.z,
                r: nd.r,
                s: nd.s,
                r1: res.r1,
                r2: res.r2,
            });
        }
    }
    rep.flat = rep.evaluation_errors == 0 && rep.max.r1.max(rep.max.r2) < tol;
    Ok(rep)
}
