//! Fixed-step RK4 integration of `ẍ^A + 2G^A(x, ẋ) = 0` and a scale-free
//! straightness measure for the resulting traces.

use serde::Serialize;

use crate::geometry::{norm, BasePoint, MetricSpec, Tangent, U_MIN};
use crate::spray::spray_coeffs_at;
use crate::{Error, Result};

/// Trajectories stop once `|x̄| ≥ ρ(1 − DOMAIN_MARGIN)`.
pub const DOMAIN_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicConfig {
    pub step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    StepsExhausted,
    LeftDomain,
    SlitMin,
    SpraySingular,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::StepsExhausted => "steps-exhausted",
            Termination::LeftDomain => "left-domain",
            Termination::SlitMin => "slit-min",
            Termination::SpraySingular => "spray-singular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub positions: Vec<BasePoint>,
    pub velocities: Vec<Tangent>,
    pub termination: Termination,
    /// Error text when the integration stopped on an evaluation failure.
    pub detail: Option<String>,
}

impl GeodesicTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn inside(spec: &MetricSpec, x: &[f64]) -> bool {
    let (lo, hi) = spec.interval;
    (lo..=hi).contains(&x[0]) && norm(&x[1..]) < spec.rho * (1.0 - DOMAIN_MARGIN)
}

/// `v̇ = −2G(x, v)` as a flat vector.
fn accel(spec: &MetricSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let fr = spec.frame(&BasePoint::from_slice(x), &Tangent::from_slice(v))?;
    Ok(spray_coeffs_at(&fr)?.to_vec().into_iter().map(|g| -2.0 * g).collect())
}

fn classify(e: &Error) -> Termination {
    match e {
        Error::Slit(_) => Termination::SlitMin,
        Error::Domain(_) => Termination::LeftDomain,
        _ => Termination::SpraySingular,
    }
}

fn axpy(x: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

pub fn integrate_geodesic(
    spec: &MetricSpec,
    x0: &BasePoint,
    v0: &Tangent,
    cfg: GeodesicConfig,
) -> Result<GeodesicTrace> {
    if !(cfg.step > 0.0) {
        return Err(Error::Invalid(format!("step = {} must be positive", cfg.step)));
    }
    if v0.ybar.len() != spec.n {
        return Err(Error::Dimension(format!("v0 has {} spatial components, expected {}", v0.ybar.len(), spec.n)));
    }
    spec.check_domain(x0)?;
    let mut x = x0.to_vec();
    if !inside(spec, &x) {
        return Err(Error::Domain("starting point is within the boundary margin".into()));
    }
    if norm(&v0.ybar) < U_MIN {
        return Err(Error::Slit(norm(&v0.ybar)));
    }
    let mut v = v0.to_vec();
    let h = cfg.step;
    let mut trace = GeodesicTrace {
        times: vec![0.0],
        positions: vec![x0.clone()],
        velocities: vec![v0.clone()],
        termination: Termination::StepsExhausted,
        detail: None,
    };
    for k in 0..cfg.max_steps {
        let stepped = (|| -> Result<(Vec<f64>, Vec<f64>)> {
            let a1 = accel(spec, &x, &v)?;
            let (x2, v2) = (axpy(&x, h / 2.0, &v), axpy(&v, h / 2.0, &a1));
            let a2 = accel(spec, &x2, &v2)?;
            let (x3, v3) = (axpy(&x, h / 2.0, &v2), axpy(&v, h / 2.0, &a2));
            let a3 = accel(spec, &x3, &v3)?;
            let (x4, v4) = (axpy(&x, h, &v3), axpy(&v, h, &a3));
            let a4 = accel(spec, &x4, &v4)?;
            let xn = (0..x.len())
                .map(|i| x[i] + h / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]))
                .collect();
            let vn = (0..v.len())
                .map(|i| v[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]))
                .collect();
            Ok((xn, vn))
        })();
        let (xn, vn) = match stepped {
            Ok(pair) => pair,
            Err(e) => {
                trace.termination = classify(&e);
                trace.detail = Some(e.to_string());
                return Ok(trace);
            }
        };
        if !inside(spec, &xn) {
            trace.termination = Termination::LeftDomain;
            return Ok(trace);
        }
        if norm(&vn[1..]) < U_MIN {
            trace.termination = Termination::SlitMin;
            return Ok(trace);
        }
        x = xn;
        v = vn;
        trace.times.push(h * (k + 1) as f64);
        trace.positions.push(BasePoint::from_slice(&x));
        trace.velocities.push(Tangent::from_slice(&v));
    }
    Ok(trace)
}

/// Largest distance from a trace node to the line `{x(0) + t·v(0)}`, divided
/// by the polygonal arc length of the trace.
pub fn straightness_deviation(trace: &GeodesicTrace) -> Result<f64> {
    if trace.len() < 3 {
        return Err(Error::DegenerateTrace(format!("{} nodes, need at least 3", trace.len())));
    }
    let running = running_deviation(trace)?;
    if running.arc == 0.0 {
        return Err(Error::DegenerateTrace("zero arc length".into()));
    }
    Ok(*running.values.last().expect("at least 3 nodes"))
}

/// [`straightness_deviation`] of every prefix of the trace; 0 while the arc
/// length is still 0.
pub fn prefix_deviations(trace: &GeodesicTrace) -> Result<Vec<f64>> {
    Ok(running_deviation(trace)?.values)
}

struct Running {
    values: Vec<f64>,
    arc: f64,
}

fn running_deviation(trace: &GeodesicTrace) -> Result<Running> {
    let Some(first) = trace.positions.first() else {
        return Err(Error::DegenerateTrace("empty trace".into()));
    };
    let p0 = first.to_vec();
    let d = trace.velocities[0].to_vec();
    let dn = norm(&d);
    if dn == 0.0 {
        return Err(Error::DegenerateTrace("zero initial velocity".into()));
    }
    let dir: Vec<f64> = d.iter().map(|c| c / dn).collect();
    let mut values = vec![0.0];
    let mut max_dist = 0.0f64;
    let mut arc = 0.0;
    let mut prev = p0.clone();
    for pos in &trace.positions[1..] {
        let p = pos.to_vec();
        let w: Vec<f64> = p.iter().zip(&p0).map(|(a, b)| a - b).collect();
        let along: f64 = w.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let perp: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a - along * b).collect();
        max_dist = max_dist.max(norm(&perp));
        arc += norm(&p.iter().zip(&prev).map(|(a, b)| a - b).collect::<Vec<_>>());
        prev = p;
        values.push(if arc > 0.0 { max_dist / arc } else { 0.0 });
    }
    Ok(Running { values, arc })
}
