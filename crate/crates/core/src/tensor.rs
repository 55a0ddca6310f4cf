//! Ω, Λ, the fundamental tensor `g_AB = ½[F²]_{y^A y^B}`, its determinant
//! identity `det g = φ^{n+2} Ω^{n−2} Λ`, the closed-form inverse and the
//! grid-level Finsler validation.
//!
//! Every `(φΩ)_s` and `(φΩ)_z` is expanded by the product rule from the
//! [`PartialSet`], so all quantities here are exact up to rounding.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{dot, realize, Frame, MetricSpec, BasePoint, Tangent};
use crate::grid::SamplingGrid;
use crate::phi::{PartialSet, PhiFunction, PhiPoint};
use crate::{Error, Result};

/// Below this magnitude Ω or Λ count as singular for the closed-form inverse.
pub const SINGULAR_EPS: f64 = 1e-12;
/// Residual above which the closed-form inverse is flagged as discrepant.
pub const CLOSED_INVERSE_TOL: f64 = 1e-7;
/// Fraction of grid nodes that also get an eigenvalue check.
pub const EIGEN_SUBSAMPLE: f64 = 0.05;
const MAX_LISTED_FAILURES: usize = 50;

/// Ω and its first derivatives, plus the expanded products with φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaTerms {
    pub omega: f64,
    pub omega_s: f64,
    pub omega_z: f64,
    pub omega_r: f64,
    pub omega_x0: f64,
    /// `(φΩ)_s`
    pub phi_omega_s: f64,
    /// `(φΩ)_z`
    pub phi_omega_z: f64,
}

impl OmegaTerms {
    pub fn new(p: &PartialSet, pt: PhiPoint) -> Self {
        let (z, s) = (pt.z, pt.s);
        let omega = p.phi - s * p.d_s - z * p.d_z;
        let omega_s = -s * p.d_ss - z * p.d_sz;
        let omega_z = -s * p.d_sz - z * p.d_zz;
        OmegaTerms {
            omega,
            omega_s,
            omega_z,
            omega_r: p.d_r - s * p.d_rs - z * p.d_rz,
            omega_x0: p.d_x0 - s * p.d_x0s - z * p.d_x0z,
            phi_omega_s: p.d_s * omega + p.phi * omega_s,
            phi_omega_z: p.d_z * omega + p.phi * omega_z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarInvariants {
    pub omega: f64,
    pub lambda: f64,
    pub delta2: f64,
    pub delta3: f64,
}

/// Λ from its definition.
pub fn lambda_of(p: &PartialSet, omega: f64, r: f64, s: f64) -> f64 {
    omega * p.d_zz + (r * r - s * s) * (p.d_ss * p.d_zz - p.d_sz * p.d_sz)
}

pub fn invariants(p: &PartialSet, pt: PhiPoint) -> ScalarInvariants {
    let t = OmegaTerms::new(p, pt);
    let (phi, ps, pz, pss, pzz, psz) = (p.phi, p.d_s, p.d_z, p.d_ss, p.d_zz, p.d_sz);
    // δ₂ as printed, including its `φφ_s` and `φ_sz²` factors.
    let delta2 = (phi * pzz + pz * pz) * (phi * ps + ps * ps - t.phi_omega_s)
        - (ps * pz + phi * psz) * (ps * pz + psz * psz - t.phi_omega_z);
    let delta3 = phi * (pss * pzz - psz * psz)
        + ps * (ps * pzz - pz * psz)
        + pz * (pss * pz - ps * psz);
    ScalarInvariants {
        omega: t.omega,
        lambda: lambda_of(p, t.omega, pt.r, pt.s),
        delta2,
        delta3,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalTensor {
    pub entries: DMatrix<f64>,
}

/// Block assembly of `g_AB` from φ partials at a frame.
pub fn fundamental_tensor_at(f: &Frame) -> DMatrix<f64> {
    let p = &f.p;
    let t = OmegaTerms::new(p, f.point());
    let n = f.x.xbar.len();
    let u = &f.zrs.uvec;
    let x = &f.x.xbar;
    let s = f.zrs.s;
    let z = f.zrs.z;
    let phi_omega = p.phi * t.omega;
    let g0x = p.d_s * p.d_z + p.phi * p.d_sz;
    let cuu = -(s * t.phi_omega_s + z * t.phi_omega_z);
    let cux = t.phi_omega_s;
    let cxx = p.d_s * p.d_s + p.phi * p.d_ss;
    let mut g = DMatrix::<f64>::zeros(n + 1, n + 1);
    g[(0, 0)] = p.d_z * p.d_z + p.phi * p.d_zz;
    for i in 0..n {
        let gi0 = t.phi_omega_z * u[i] + g0x * x[i];
        g[(i + 1, 0)] = gi0;
        g[(0, i + 1)] = gi0;
        for j in i..n {
            let mut gij = cuu * u[i] * u[j] + cux * (u[i] * x[j] + x[i] * u[j]) + cxx * x[i] * x[j];
            if i == j {
                gij += phi_omega;
            }
            g[(i + 1, j + 1)] = gij;
            g[(j + 1, i + 1)] = gij;
        }
    }
    g
}

pub fn fundamental_tensor(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<FundamentalTensor> {
    let f = spec.frame(x, y)?;
    Ok(FundamentalTensor {
        entries: fundamental_tensor_at(&f),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetIdentity {
    pub det_numeric: f64,
    pub det_formula: f64,
    pub rel_diff: f64,
}

pub fn det_identity_at(f: &Frame) -> DetIdentity {
    let g = fundamental_tensor_at(f);
    let n = f.x.xbar.len() as i32;
    let inv = invariants(&f.p, f.point());
    let det_numeric = g.lu().determinant();
    let det_formula = f.p.phi.powi(n + 2) * inv.omega.powi(n - 2) * inv.lambda;
    DetIdentity {
        det_numeric,
        det_formula,
        rel_diff: (det_numeric - det_formula).abs() / det_numeric.abs().max(1e-300),
    }
}

pub fn det_identity_residual(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<DetIdentity> {
    Ok(det_identity_at(&spec.frame(x, y)?))
}

/// Coefficients of the lower-right block `Y_ij` of the inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseBlock {
    pub y11: f64,
    pub y12: f64,
    pub y22: f64,
}

/// The closed-form inverse, assembled term by term from the printed
/// `y⁰⁰`, `y⁰ⁱ`, `y₁₁`, `y₁₂`, `y₂₂`, `δ₂`, `δ₃`.
pub fn inverse_closed_at(f: &Frame) -> Result<(DMatrix<f64>, InverseBlock)> {
    let p = &f.p;
    let pt = f.point();
    let t = OmegaTerms::new(p, pt);
    let inv = invariants(p, pt);
    let (omega, lambda) = (inv.omega, inv.lambda);
    if omega.abs() < SINGULAR_EPS || lambda.abs() < SINGULAR_EPS {
        return Err(Error::Singular(format!(
            "closed-form inverse needs |Omega|, |Lambda| >= {SINGULAR_EPS:e} (Omega = {omega:e}, Lambda = {lambda:e})"
        )));
    }
    let (phi, ps, pz, pss, pzz, psz) = (p.phi, p.d_s, p.d_z, p.d_ss, p.d_zz, p.d_sz);
    let (z, r, s) = (pt.z, pt.r, pt.s);
    let a = r * r - s * s;
    let d3 = inv.delta3;
    let hess_sz = pss * pzz - psz * psz;

    let y00 = phi * omega * ((phi - z * pz).powi(2) + z * z * phi * pzz)
        + a * phi * (phi * phi * pss + 2.0 * z * phi * (ps * psz - pz * pss) + z * z * d3);
    let y0u = phi * (-(omega + s * ps) * t.phi_omega_z + a * (phi * (ps * psz - pz * pss) + z * d3));
    let y0x = phi * phi * (ps * t.omega_z - psz * omega);
    let block = InverseBlock {
        y11: phi
            * phi
            * (t.phi_omega_z.powi(2)
                + phi * pzz * (z * t.phi_omega_z + s * t.phi_omega_s)
                - a * (phi * phi * hess_sz - omega * inv.delta2)),
        y12: phi.powi(3) * (psz * t.phi_omega_z - pzz * t.phi_omega_s),
        y22: -phi.powi(4) * hess_sz,
    };

    let n = f.x.xbar.len();
    let u = &f.zrs.uvec;
    let x = &f.x.xbar;
    let scale = 1.0 / (phi.powi(4) * lambda);
    let diag = phi.powi(3) * lambda / omega;
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    m[(0, 0)] = y00 * scale;
    for i in 0..n {
        let v = (y0u * u[i] + y0x * x[i]) * scale;
        m[(0, i + 1)] = v;
        m[(i + 1, 0)] = v;
        for j in 0..n {
            let yij = (block.y11 * u[i] * u[j]
                + block.y12 * (u[i] * x[j] + x[i] * u[j])
                + block.y22 * x[i] * x[j])
                / (phi * omega);
            let d = if i == j { diag } else { 0.0 };
            m[(i + 1, j + 1)] = (d + yij) * scale;
        }
    }
    Ok((m, block))
}

pub fn inverse_tensor_closed(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<DMatrix<f64>> {
    Ok(inverse_closed_at(&spec.frame(x, y)?)?.0)
}

/// LU inverse of `g_AB`.
pub fn inverse_numeric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("fundamental tensor is not invertible".into()))
}

/// Closed-form inverse compared against the LU inverse at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseCheck {
    /// `‖g·g⁻¹_closed − I‖∞`
    pub identity_residual: f64,
    /// `‖g⁻¹_closed − g⁻¹_LU‖∞ / ‖g⁻¹_LU‖∞`
    pub rel_vs_numeric: f64,
    pub flagged: bool,
    pub printed: InverseBlock,
    /// The `Y_ij` coefficients that reproduce the LU inverse.
    pub implied: InverseBlock,
}

pub fn inverse_check_at(f: &Frame) -> Result<InverseCheck> {
    let g = fundamental_tensor_at(f);
    let (closed, printed) = inverse_closed_at(f)?;
    let numeric = inverse_numeric(&g)?;
    let n = g.nrows();
    let identity_residual = (&g * &closed - DMatrix::<f64>::identity(n, n)).amax();
    let rel_vs_numeric = (&closed - &numeric).amax() / numeric.amax();
    let implied = implied_block(f, &numeric)?;
    Ok(InverseCheck {
        identity_residual,
        rel_vs_numeric,
        flagged: identity_residual >= CLOSED_INVERSE_TOL || rel_vs_numeric >= CLOSED_INVERSE_TOL,
        printed,
        implied,
    })
}

/// Solve for `(y₁₁, y₁₂, y₂₂)` from the spatial block of a numeric inverse
/// by projecting onto `u` and `x̄`.
fn implied_block(f: &Frame, numeric: &DMatrix<f64>) -> Result<InverseBlock> {
    let p = &f.p;
    let inv = invariants(p, f.point());
    let (phi, omega, lambda) = (p.phi, inv.omega, inv.lambda);
    let n = f.x.xbar.len();
    let u = &f.zrs.uvec;
    let x = &f.x.xbar;
    let diag = phi.powi(3) * lambda / omega;
    let block = |i: usize, j: usize| {
        let d = if i == j { diag } else { 0.0 };
        (numeric[(i + 1, j + 1)] * phi.powi(4) * lambda - d) * phi * omega
    };
    let quad = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (i, ai) in a.iter().enumerate().take(n) {
            for (j, bj) in b.iter().enumerate().take(n) {
                acc += ai * block(i, j) * bj;
            }
        }
        acc
    };
    let (uu, ux, xx) = (dot(u, u), dot(u, x), dot(x, x));
    let lhs = nalgebra::Matrix3::new(
        uu * uu,
        2.0 * uu * ux,
        ux * ux,
        uu * ux,
        uu * xx + ux * ux,
        ux * xx,
        ux * ux,
        2.0 * ux * xx,
        xx * xx,
    );
    let rhs = nalgebra::Vector3::new(quad(u, u), quad(u, x), quad(x, x));
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("u and xbar are parallel; Y_ij not identifiable".into()))?;
    Ok(InverseBlock {
        y11: sol[0],
        y12: sol[1],
        y22: sol[2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailingNode {
    pub x0: f64,
    pub z: f64,
    pub r: f64,
    pub s: f64,
    pub phi: f64,
    pub omega: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinslerReport {
    pub n: usize,
    pub samples: usize,
    pub phi_min: f64,
    pub omega_min: f64,
    pub lambda_min: f64,
    /// Smallest eigenvalue of `g_AB` over the subsampled nodes.
    pub min_eigenvalue: Option<f64>,
    pub eigen_samples: usize,
    pub pass: bool,
    pub failing_count: usize,
    /// The first failing nodes in grid order.
    pub failing: Vec<FailingNode>,
    pub evaluation_errors: usize,
    pub first_error: Option<String>,
}

struct NodeResult {
    phi: f64,
    omega: f64,
    lambda: f64,
    eig: Option<f64>,
}

/// Evaluate Ω, Λ (and φ) on every grid node. A node fails when `φ ≤ 0`,
/// `Λ ≤ 0`, or `Ω ≤ 0` with `n ≥ 3`.
pub fn validate_finsler(spec: &MetricSpec, grid: &SamplingGrid) -> Result<FinslerReport> {
    grid.validate(spec)?;
    let mask = grid.subsample(EIGEN_SUBSAMPLE);
    let results: Vec<std::result::Result<NodeResult, String>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let nd = grid.node(i);
            let pt = PhiPoint::new(nd.x0, nd.z, nd.r, nd.s);
            let p = spec.phi.partials(pt).map_err(|e| e.to_string())?;
            let inv = invariants(&p, pt);
            let eig = if mask[i] {
                let (x, y) = realize(spec.n, nd.x0, nd.z, nd.r, nd.s);
                let f = spec.frame(&x, &y).map_err(|e| e.to_string())?;
                let g = fundamental_tensor_at(&f);
                Some(SymmetricEigen::new(g).eigenvalues.min())
            } else {
                None
            };
            Ok(NodeResult {
                phi: p.phi,
                omega: inv.omega,
                lambda: inv.lambda,
                eig,
            })
        })
        .collect();

    let mut rep = FinslerReport {
        n: spec.n,
        samples: grid.len(),
        phi_min: f64::INFINITY,
        omega_min: f64::INFINITY,
        lambda_min: f64::INFINITY,
        min_eigenvalue: None,
        eigen_samples: 0,
        pass: false,
        failing_count: 0,
        failing: Vec::new(),
        evaluation_errors: 0,
        first_error: None,
    };
    for (i, res) in results.into_iter().enumerate() {
        let nr = match res {
            Ok(v) => v,
            Err(msg) => {
                rep.evaluation_errors += 1;
                rep.first_error.get_or_insert(msg);
                continue;
            }
        };
        rep.phi_min = rep.phi_min.min(nr.phi);
        rep.omega_min = rep.omega_min.min(nr.omega);
        rep.lambda_min = rep.lambda_min.min(nr.lambda);
        if let Some(e) = nr.eig {
            rep.eigen_samples += 1;
            rep.min_eigenvalue = Some(rep.min_eigenvalue.map_or(e, |m: f64| m.min(e)));
        }
        let fails = !(nr.phi > 0.0) || !(nr.lambda > 0.0) || (spec.n >= 3 && !(nr.omega > 0.0));
        if fails {
            rep.failing_count += 1;
            if rep.failing.len() < MAX_LISTED_FAILURES {
                let nd = grid.node(i);
                rep.failing.push(FailingNode {
                    x0: nd.x0,
                    z: nd.z,
                    r: nd.r,
                    s: nd.s,
                    phi: nr.phi,
                    omega: nr.omega,
                    lambda: nr.lambda,
                });
            }
        }
    }
    rep.pass = rep.evaluation_errors == 0
        && rep.phi_min > 0.0
        && rep.lambda_min > 0.0
        && (spec.n < 3 || rep.omega_min > 0.0);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathCheck {
    pub omega_min: f64,
    pub lambda_min: f64,
}

/// Ω and Λ along `φ_t = (1−t)√(1+z²) + tφ` at one point.
pub fn interpolation_path_check(phi: &PhiFunction, pt: PhiPoint, t_grid: &[f64]) -> Result<PathCheck> {
    let base = PhiFunction::euclidean().partials(pt)?;
    let target = phi.partials(pt)?;
    let mut out = PathCheck {
        omega_min: f64::INFINITY,
        lambda_min: f64::INFINITY,
    };
    for &t in t_grid {
        let pt_t = base * (1.0 - t) + target * t;
        let inv = invariants(&pt_t, pt);
        out.omega_min = out.omega_min.min(inv.omega);
        out.lambda_min = out.lambda_min.min(inv.lambda);
    }
    Ok(out)
}
