//! Geodesic spray coefficients `G^A = P y^A + Q^A`.
//!
//! Two independent routes: the closed form in terms of φ̃, U, V, W
//! ([`spray_scalars`], [`spray_coeffs`]) and the generic route through the
//! chain-rule partials of F and the numeric inverse of `g_AB`
//! ([`spray_oracle`]).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::geometry::{BasePoint, Frame, MetricSpec, Tangent};
use crate::tensor::{fundamental_tensor_at, inverse_numeric, OmegaTerms, SINGULAR_EPS};
use crate::{Error, Result};

/// First and mixed partials of `F = uφ` at one `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FPartials {
    pub f: f64,
    /// `F_{x^A}`, A = 0..n
    pub fx: Vec<f64>,
    /// `F_{y^A}`
    pub fy: Vec<f64>,
    /// `fxy[C][B] = ∂²F/∂x^C∂y^B`; not symmetric in general.
    pub fxy: Vec<Vec<f64>>,
}

pub fn f_partials_at(fr: &Frame) -> FPartials {
    let p = &fr.p;
    let t = OmegaTerms::new(p, fr.point());
    let n = fr.x.xbar.len();
    let (u, r) = (fr.zrs.u, fr.zrs.r);
    let uv = &fr.zrs.uvec;
    let xv = &fr.x.xbar;

    let mut fx = vec![u * p.d_x0];
    let mut fy = vec![p.d_z];
    for i in 0..n {
        fx.push(u * (p.d_s * uv[i] + p.d_r * xv[i] / r));
        fy.push(t.omega * uv[i] + p.d_s * xv[i]);
    }
    let mut fxy = vec![vec![0.0; n + 1]; n + 1];
    fxy[0][0] = p.d_x0z;
    for j in 0..n {
        fxy[0][j + 1] = t.omega_x0 * uv[j] + p.d_x0s * xv[j];
    }
    for i in 0..n {
        fxy[i + 1][0] = p.d_sz * uv[i] + p.d_rz * xv[i] / r;
        for j in 0..n {
            let mut v = t.omega_s * uv[i] * uv[j]
                + p.d_ss * uv[i] * xv[j]
                + t.omega_r * xv[i] * uv[j] / r
                + p.d_rs * xv[i] * xv[j] / r;
            if i == j {
                v += p.d_s;
            }
            fxy[i + 1][j + 1] = v;
        }
    }
    FPartials {
        f: u * p.phi,
        fx,
        fy,
        fxy,
    }
}

pub fn f_partials(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<FPartials> {
    Ok(f_partials_at(&spec.frame(x, y)?))
}

/// φ̃, W, U, V and the split `P`, `Q^A` at one `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprayScalars {
    /// `φ̃ = zφ_{x⁰} + (s/r)φ_r + φ_s`
    pub varphi: f64,
    pub w: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub q0: f64,
    pub qi: Vec<f64>,
    pub omega: f64,
    pub lambda: f64,
    /// `φ̃_z − 2φ_{x⁰}`
    pub hamel_z: f64,
    /// `φ̃_s − (2/r)φ_r`
    pub hamel_s: f64,
}

pub fn spray_scalars_at(fr: &Frame) -> Result<SprayScalars> {
    let p = &fr.p;
    let pt = fr.point();
    let t = OmegaTerms::new(p, pt);
    let (z, r, s, un) = (pt.z, pt.r, pt.s, fr.zrs.u);
    let a = r * r - s * s;
    let omega = t.omega;
    let lambda = omega * p.d_zz + a * (p.d_ss * p.d_zz - p.d_sz * p.d_sz);
    if lambda.abs() < SINGULAR_EPS {
        return Err(Error::Singular(format!("Lambda = {lambda:e} at {pt:?}")));
    }
    if p.phi.abs() < SINGULAR_EPS {
        return Err(Error::Singular(format!("phi = {:e} at {pt:?}", p.phi)));
    }
    let phi = p.phi;

    let varphi = z * p.d_x0 + s / r * p.d_r + p.d_s;
    let varphi_z = p.d_x0 + z * p.d_x0z + s / r * p.d_rz + p.d_sz;
    let varphi_s = z * p.d_x0s + p.d_r / r + s / r * p.d_rs + p.d_ss;
    let hz = varphi_z - 2.0 * p.d_x0;
    let hs = varphi_s - 2.0 * p.d_r / r;

    let cu = (hs * p.d_zz - hz * p.d_sz) / (2.0 * lambda);
    let cv = (hs * p.d_sz - hz * p.d_ss) / (2.0 * lambda);
    let w = (varphi / 2.0
        - s * phi * cu
        - p.d_z * omega / (2.0 * lambda) * hz
        - a * (p.d_s * cu - p.d_z * cv))
        / phi;

    let u2 = un * un;
    let f = un * phi;
    let q0 = u2
        * ((phi - z * p.d_z) * hz * omega / (2.0 * phi * lambda)
            - a * (z * p.d_s / phi * cu + (phi - z * p.d_z) / phi * cv));
    let radial = -u2
        * (s * cu + a * (p.d_s / phi * cu - p.d_z / phi * cv) + p.d_z * omega / (2.0 * phi * lambda) * hz);
    let qi = (0..fr.x.xbar.len())
        .map(|i| radial * fr.y.ybar[i] / un + u2 * cu * fr.x.xbar[i])
        .collect();
    Ok(SprayScalars {
        varphi,
        w,
        u: cu,
        v: cv,
        p: u2 * varphi / (2.0 * f),
        q0,
        qi,
        omega,
        lambda,
        hamel_z: hz,
        hamel_s: hs,
    })
}

pub fn spray_scalars(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<SprayScalars> {
    spray_scalars_at(&spec.frame(x, y)?)
}

/// `(G⁰, G¹…Gⁿ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprayCoeffs {
    pub g0: f64,
    pub gi: Vec<f64>,
}

impl SprayCoeffs {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.g0];
        v.extend_from_slice(&self.gi);
        v
    }

    /// `‖a − b‖∞ / (1 + ‖b‖∞)`
    pub fn rel_diff(&self, other: &SprayCoeffs) -> f64 {
        let (a, b) = (self.to_vec(), other.to_vec());
        let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    }
}

/// The closed-form `G⁰`, `Gⁱ`.
pub fn spray_coeffs_at(fr: &Frame) -> Result<SprayCoeffs> {
    let sc = spray_scalars_at(fr)?;
    let (z, r, s, un) = (fr.zrs.z, fr.zrs.r, fr.zrs.s, fr.zrs.u);
    let u2 = un * un;
    let g0 = u2 * (z * (sc.w + s * sc.u) + sc.omega / (2.0 * sc.lambda) * sc.hamel_z - (r * r - s * s) * sc.v);
    let gi = (0..fr.x.xbar.len())
        .map(|i| un * sc.w * fr.y.ybar[i] + u2 * sc.u * fr.x.xbar[i])
        .collect();
    Ok(SprayCoeffs { g0, gi })
}

pub fn spray_coeffs(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<SprayCoeffs> {
    spray_coeffs_at(&spec.frame(x, y)?)
}

/// `P y^A + Q^A` assembled from the displayed P and Q.
pub fn spray_from_pq_at(fr: &Frame) -> Result<SprayCoeffs> {
    let sc = spray_scalars_at(fr)?;
    Ok(SprayCoeffs {
        g0: sc.p * fr.y.y0 + sc.q0,
        gi: (0..fr.x.xbar.len()).map(|i| sc.p * fr.y.ybar[i] + sc.qi[i]).collect(),
    })
}

/// P and Q from `P = F_{x^C}y^C/2F`, `Q^A = (F/2)g^{AB}{F_{x^Cy^B}y^C − F_{x^B}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpray {
    pub p: f64,
    pub q: Vec<f64>,
    pub coeffs: SprayCoeffs,
}

pub fn spray_oracle_at(fr: &Frame) -> Result<OracleSpray> {
    let fp = f_partials_at(fr);
    let g = fundamental_tensor_at(fr);
    let ginv: DMatrix<f64> = inverse_numeric(&g)?;
    let y = fr.y.to_vec();
    let dim = y.len();
    let fxc_yc: f64 = fp.fx.iter().zip(&y).map(|(a, b)| a * b).sum();
    let p = fxc_yc / (2.0 * fp.f);
    let rhs = DVector::from_iterator(
        dim,
        (0..dim).map(|b| (0..dim).map(|c| fp.fxy[c][b] * y[c]).sum::<f64>() - fp.fx[b]),
    );
    let q: Vec<f64> = (ginv * rhs * (fp.f / 2.0)).iter().copied().collect();
    let coeffs = SprayCoeffs {
        g0: p * y[0] + q[0],
        gi: (1..dim).map(|a| p * y[a] + q[a]).collect(),
    };
    Ok(OracleSpray { p, q, coeffs })
}

pub fn spray_oracle(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> Result<SprayCoeffs> {
    Ok(spray_oracle_at(&spec.frame(x, y)?)?.coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::random_points;
    use crate::phi::PhiFunction;

    fn spec(phi: &str) -> MetricSpec {
        MetricSpec::new("t", 3, 1.0, (-1.0, 1.0), PhiFunction::dsl(phi).unwrap()).unwrap()
    }

    #[test]
    fn euclidean_partials() {
        let s = spec("sqrt(1+z^2)");
        for (x, y) in random_points(&s, 5, 1) {
            let fp = f_partials(&s, &x, &y).unwrap();
            let norm = y.to_vec().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(fp.fx.iter().all(|v| v.abs() < 1e-15));
            for (a, ya) in y.to_vec().iter().enumerate() {
                assert!((fp.fy[a] - ya / norm).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn z_only_phi_has_zero_spray() {
        let s = spec("sqrt(1+z^2) + 0.3*z/sqrt(2+z^2)");
        for (x, y) in random_points(&s, 5, 2) {
            let sc = spray_scalars(&s, &x, &y).unwrap();
            assert_eq!((sc.varphi, sc.u, sc.v, sc.w, sc.p, sc.q0), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
            let g = spray_coeffs(&s, &x, &y).unwrap();
            assert!(g.to_vec().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn closed_and_pq_routes_agree() {
        let s = spec("sqrt(1+z^2) + 0.2*s*z^2 + 0.1*x0*z + 0.15*r^2*s + 0.1*s^2");
        for (x, y) in random_points(&s, 20, 3) {
            let fr = s.frame(&x, &y).unwrap();
            let a = spray_coeffs_at(&fr).unwrap();
            let b = spray_from_pq_at(&fr).unwrap();
            let c = spray_oracle_at(&fr).unwrap();
            assert!(a.rel_diff(&b) < 1e-10);
            assert!(a.rel_diff(&c.coeffs) < 1e-8, "{a:?} vs {:?}", c.coeffs);
        }
    }

    #[test]
    fn singular_lambda_is_reported() {
        let s = spec("1 + 0.1*z");
        let x = BasePoint::new(0.0, vec![0.5, 0.0, 0.0]);
        let y = Tangent::new(0.2, vec![1.0, 0.0, 0.0]);
        assert!(matches!(spray_coeffs(&s, &x, &y), Err(Error::Singular(_))));
    }
}
