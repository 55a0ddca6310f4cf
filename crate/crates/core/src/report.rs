//! Machine-readable findings and the top-level report document.
//!
//! Reports are byte-deterministic: parallel sweeps are collected in input
//! order and reduced sequentially, maps are key-sorted, and every random
//! choice flows from the recorded seed.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::catalog::CatalogEntry;
use crate::family::{im_findings, im_values, integral_identity_check, ImRow, UnaryFn, IDENTITY_TOL};
use crate::geodesic::{prefix_deviations, GeodesicTrace};
use crate::grid::{random_points, SamplingGrid};
use crate::specfile::LoadedSpec;
use crate::spray::{spray_coeffs_at, spray_oracle};
use crate::tensor::{det_identity_at, inverse_check_at, InverseCheck};
use crate::{FinslerNorm, MetricSpec, Result};

pub const TOOL: &str = "cylfinsler";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Random points behind the per-point statistics of a report.
pub const SAMPLE_POINTS: usize = 200;

/// A reproducible mismatch between a printed formula and its numerical
/// oracle. The oracle value is the one the rest of the toolkit uses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErratumFinding {
    /// Short identifier of the printed formula.
    pub formula: String,
    /// Where it was evaluated.
    pub at: String,
    pub printed: f64,
    pub measured: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecSummary {
    pub name: String,
    pub n: usize,
    pub rho: f64,
    pub interval: [f64; 2],
    pub kind: String,
    /// SHA-256 of the canonical spec document.
    pub digest: String,
    pub phi: String,
}

impl SpecSummary {
    pub fn new(loaded: &LoadedSpec) -> Self {
        let s = &loaded.spec;
        SpecSummary {
            name: s.name.clone(),
            n: s.n,
            rho: s.rho,
            interval: [s.interval.0, s.interval.1],
            kind: loaded.kind.clone(),
            digest: loaded.digest.clone(),
            phi: s.phi.describe(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub spec: Option<SpecSummary>,
    pub grid: Option<SamplingGrid>,
    pub seed: Option<u64>,
    pub checks: BTreeMap<String, Value>,
    pub errata: Vec<ErratumFinding>,
    pub verdict: Verdict,
}

impl ReportDocument {
    pub fn new(command: impl Into<String>) -> Self {
        ReportDocument {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            spec: None,
            grid: None,
            seed: None,
            checks: BTreeMap::new(),
            errata: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn insert_check<T: Serialize>(&mut self, name: &str, value: &T) {
        let v = serde_json::to_value(value).expect("report values are plain data");
        self.checks.insert(name.into(), v);
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain data");
        s.push('\n');
        s
    }
}

/// Per-point statistics at seeded random points of `TM`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStats {
    pub points: usize,
    pub seed: u64,
    /// `max |det g − φ^{n+2}Ω^{n−2}Λ| / |det g|`
    pub det_identity_max_rel: f64,
    /// Closed-form spray against the `P`, `Q` oracle.
    pub spray_route_max_rel: f64,
    /// Closed-form inverse against LU.
    pub closed_inverse_max_rel: f64,
    pub closed_inverse_flagged: usize,
    pub evaluation_errors: usize,
    pub first_error: Option<String>,
    /// The point with the largest closed-form inverse discrepancy.
    #[serde(skip)]
    pub worst_inverse: Option<(String, InverseCheck)>,
}

struct PointStats {
    det: f64,
    spray: f64,
    inverse: InverseCheck,
}

pub fn sample_stats(spec: &MetricSpec, count: usize, seed: u64) -> SampleStats {
    let points = random_points(spec, count, seed);
    let results: Vec<std::result::Result<PointStats, String>> = points
        .par_iter()
        .map(|(x, y)| {
            let run = || -> Result<PointStats> {
                let f = spec.frame(x, y)?;
                let closed = spray_coeffs_at(&f)?;
                let oracle = spray_oracle(spec, x, y)?;
                Ok(PointStats {
                    det: det_identity_at(&f).rel_diff,
                    spray: closed.rel_diff(&oracle),
                    inverse: inverse_check_at(&f)?,
                })
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut out = SampleStats {
        points: count,
        seed,
        det_identity_max_rel: 0.0,
        spray_route_max_rel: 0.0,
        closed_inverse_max_rel: 0.0,
        closed_inverse_flagged: 0,
        evaluation_errors: 0,
        first_error: None,
        worst_inverse: None,
    };
    for ((x, y), res) in points.iter().zip(results) {
        match res {
            Ok(p) => {
                out.det_identity_max_rel = out.det_identity_max_rel.max(p.det);
                out.spray_route_max_rel = out.spray_route_max_rel.max(p.spray);
                out.closed_inverse_flagged += p.inverse.flagged as usize;
                if p.inverse.rel_vs_numeric > out.closed_inverse_max_rel || out.worst_inverse.is_none() {
                    out.closed_inverse_max_rel = p.inverse.rel_vs_numeric.max(out.closed_inverse_max_rel);
                    out.worst_inverse = Some((format!("x={:?}, y={:?}", x.to_vec(), y.to_vec()), p.inverse));
                }
            }
            Err(msg) => {
                out.evaluation_errors += 1;
                out.first_error.get_or_insert(msg);
            }
        }
    }
    out
}

/// The closed-form inverse finding, when any sampled point was flagged.
pub fn inverse_finding(stats: &SampleStats) -> Option<ErratumFinding> {
    if stats.closed_inverse_flagged == 0 {
        return None;
    }
    let (at, check) = stats.worst_inverse.as_ref()?;
    let (p, m) = (check.printed, check.implied);
    Some(ErratumFinding {
        formula: "closed-form inverse y11".into(),
        at: at.clone(),
        printed: p.y11,
        measured: m.y11,
        note: format!(
            "{} of {} points exceed the tolerance; the LU inverse is used. implied/printed: y11 {:.6e}, y12 {:.6e}, y22 {:.6e}",
            stats.closed_inverse_flagged,
            stats.points,
            ratio(m.y11, p.y11),
            ratio(m.y12, p.y12),
            ratio(m.y22, p.y22),
        ),
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Printed display formula against the normal-form route, at the worst of
/// `count` seeded points.
pub fn display_finding(entry: &CatalogEntry, count: usize, seed: u64) -> Result<Option<ErratumFinding>> {
    let Some(display) = &entry.display else { return Ok(None) };
    let mut worst: Option<(f64, String, f64, f64)> = None;
    let mut failures = 0;
    for (x, y) in random_points(&entry.spec, count, seed) {
        let f = entry.spec.eval_f(&x, &y)?;
        match display.eval(&x, &y) {
            Ok(d) => {
                let rel = (d - f).abs() / f.abs();
                if worst.as_ref().is_none_or(|w| rel > w.0) {
                    worst = Some((rel, format!("x={:?}, y={:?}", x.to_vec(), y.to_vec()), d, f));
                }
            }
            Err(_) => failures += 1,
        }
    }
    Ok(match worst {
        Some((rel, at, d, f)) if rel >= 1e-9 || failures > 0 => Some(ErratumFinding {
            formula: format!("{} display", entry.name),
            at,
            printed: d,
            measured: f,
            note: format!(
                "max relative deviation {rel:.3e} over {count} points ({failures} undefined); {}",
                entry.errata.first().map_or("no erratum recorded for this entry", |e| e.detail.as_str())
            ),
        }),
        _ => None,
    })
}

/// Identity sides for one `g₆` on a 5 × 5 `(r, σ)` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityAudit {
    pub g6: String,
    pub evaluations: usize,
    pub max_abs_diff: f64,
}

pub const AUDIT_G6: [&str; 3] = ["2", "2*xi", "(2 - (1 + 2*xi))/(1 + xi)^(5/2)"];

pub fn identity_audit(g6: &str) -> Result<(IdentityAudit, Option<ErratumFinding>)> {
    let g = UnaryFn::parse(g6, "xi")?;
    let mut worst = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for r in [0.1, 0.4, 0.7, 1.0, 1.5] {
        for sigma in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let c = integral_identity_check(&g, r, sigma * r)?;
            if c.abs_diff >= worst.0 {
                worst = (c.abs_diff, r, sigma * r, c.lhs, c.rhs);
            }
        }
    }
    let audit = IdentityAudit {
        g6: g6.into(),
        evaluations: 25,
        max_abs_diff: worst.0,
    };
    let finding = (worst.0 > 1e3 * IDENTITY_TOL).then(|| ErratumFinding {
        formula: "integral identity".into(),
        at: format!("g6={g6}, r={}, s={}", worst.1, worst.2),
        printed: worst.4,
        measured: worst.3,
        note: "single-integral form disagrees with the double integral".into(),
    });
    Ok((audit, finding))
}

/// `I_m` rows at `r = 2, s = 1`, the point where the printed recursion
/// first visibly departs.
pub const IM_POINT: (f64, f64) = (2.0, 1.0);
pub const IM_ROWS: u32 = 8;

pub fn im_audit() -> Result<(Vec<ImRow>, Vec<ErratumFinding>)> {
    let rows = im_values(IM_POINT.0, IM_POINT.1, IM_ROWS)?;
    let findings = im_findings(IM_POINT.0, IM_POINT.1, &rows);
    Ok((rows, findings))
}

/// Significant digits in CSV traces: enough for an exact `f64` round trip.
pub const CSV_DIGITS: usize = 17;

/// Geodesic trace as CSV: `t, x0..xn, v0..vn, F, deviation`, LF endings.
pub fn trace_csv(spec: &MetricSpec, trace: &GeodesicTrace) -> Result<String> {
    let n = spec.n;
    let mut header = vec!["t".to_string()];
    header.extend((0..=n).map(|i| format!("x{i}")));
    header.extend((0..=n).map(|i| format!("v{i}")));
    header.extend(["F".to_string(), "deviation".to_string()]);
    let mut out = header.join(",");
    out.push('\n');
    let deviations = prefix_deviations(trace)?;
    let num = |v: f64| format!("{v:.prec$e}", prec = CSV_DIGITS - 1);
    for (i, &dev) in deviations.iter().enumerate() {
        let (x, v) = (&trace.positions[i], &trace.velocities[i]);
        let f = spec.eval_f(x, v)?;
        let row: Vec<String> = std::iter::once(trace.times[i])
            .chain(x.to_vec())
            .chain(v.to_vec())
            .chain([f, dev])
            .map(num)
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}
