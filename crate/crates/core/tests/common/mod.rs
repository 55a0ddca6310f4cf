//! Metrics shared by the integration tests.

#![allow(dead_code)]

use cylfinsler::catalog::{self, Params};
use cylfinsler::family::{build_corollary_phi, CorollarySpec};
use cylfinsler::grid::SamplingGrid;
use cylfinsler::{BasePoint, MetricSpec, PhiFunction, Tangent};

pub fn dsl(name: &str, n: usize, phi: &str) -> MetricSpec {
    MetricSpec::new(name, n, 1.0, (-1.0, 1.0), PhiFunction::dsl(phi).unwrap()).unwrap()
}

pub fn control(n: usize) -> MetricSpec {
    dsl("control", n, "sqrt(1+z^2) + 0.2*s*z^2")
}

pub fn example2(n: usize) -> MetricSpec {
    catalog::example2(n, 1.0, 1.0, 1, 1.0, "0").unwrap().spec
}

pub fn corollary(n: usize) -> MetricSpec {
    let cor = CorollarySpec::parse(0.0, "sqrt(1+z^2)", None, None, Some("2")).unwrap();
    let grid = SamplingGrid::for_domain((-1.0, 1.0), 1.0, 11, 0);
    let phi = build_corollary_phi(&cor, n, &grid).unwrap();
    MetricSpec::new("corollary", n, 1.0, (-1.0, 1.0), phi).unwrap()
}

/// Smooth metrics with non-trivial dependence on every variable.
pub fn zoo() -> Vec<MetricSpec> {
    let mut out: Vec<MetricSpec> = ["shen_randers", "spherically_symmetric", "warped_x0", "warped_r", "example1"]
        .iter()
        .map(|n| catalog::lookup(n, &Params::new()).unwrap().spec)
        .collect();
    out.push(example2(3));
    out.push(corollary(3));
    out.push(control(3));
    out.push(dsl("mixed", 2, "sqrt(1+z^2) + 0.1*x0*z + 0.05*r^2*s + 0.1*s*z"));
    out
}

/// Central difference of `F` in one coordinate of `x` or `y`.
pub fn fd_f(spec: &MetricSpec, x: &BasePoint, y: &Tangent, in_x: bool, a: usize, h: f64) -> f64 {
    let shift = |d: f64| {
        let (mut xv, mut yv) = (x.to_vec(), y.to_vec());
        if in_x {
            xv[a] += d;
        } else {
            yv[a] += d;
        }
        spec.eval_f(&BasePoint::from_slice(&xv), &Tangent::from_slice(&yv)).unwrap()
    };
    (shift(h) - shift(-h)) / (2.0 * h)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}
