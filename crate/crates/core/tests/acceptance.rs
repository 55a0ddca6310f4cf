//! End-to-end acceptance suite. Runs every criterion, prints one
//! `[PASS]`/`[FAIL]` line each and exits non-zero if any failed.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cylfinsler::catalog::{self, CatalogEntry, Params};
use cylfinsler::expr::{Bindings, Expr};
use cylfinsler::family::{
    build_family_phi, im_values, integral_identity_check, CorollarySpec, GFamilySpec, UnaryFn,
};
use cylfinsler::flatness::{flatness_report, hamel_residual};
use cylfinsler::geodesic::{integrate_geodesic, straightness_deviation, GeodesicConfig};
use cylfinsler::geometry::{check_cylindrical_symmetry, check_homogeneity, random_orthogonal, FinslerNorm};
use cylfinsler::grid::{random_points, SamplingGrid};
use cylfinsler::phi::PHI_VARS;
use cylfinsler::spray::{spray_coeffs, spray_oracle};
use cylfinsler::tensor::{det_identity_residual, fundamental_tensor, interpolation_path_check, invariants, validate_finsler};
use cylfinsler::{BasePoint, MetricSpec, PhiFunction, Tangent};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn entry(name: &str) -> CatalogEntry {
    catalog::lookup(name, &Params::new()).unwrap()
}

fn dsl_spec(name: &str, n: usize, phi: &str) -> MetricSpec {
    MetricSpec::new(name, n, 1.0, (-1.0, 1.0), PhiFunction::dsl(phi).unwrap()).unwrap()
}

fn example2_m(n: usize, m: u32) -> MetricSpec {
    catalog::example2(n, 1.0, 1.0, m, 1.0, "0").unwrap().spec
}

fn corollary_g6_2(n: usize) -> MetricSpec {
    let cor = CorollarySpec::parse(0.0, "sqrt(1+z^2)", None, None, Some("2")).unwrap();
    let grid = SamplingGrid::for_domain((-1.0, 1.0), 1.0, 11, 0);
    let phi = cylfinsler::family::build_corollary_phi(&cor, n, &grid).unwrap();
    MetricSpec::new("corollary_g6_2", n, 1.0, (-1.0, 1.0), phi).unwrap()
}

/// The smooth metrics exercised by the tensor and spray criteria.
fn metric_zoo() -> Vec<MetricSpec> {
    vec![
        entry("euclidean").spec,
        entry("shen_randers").spec,
        entry("spherically_symmetric").spec,
        entry("warped_x0").spec,
        entry("warped_r").spec,
        entry("example1").spec,
        example2_m(3, 1),
        corollary_g6_2(3),
        dsl_spec("control", 3, "sqrt(1+z^2) + 0.2*s*z^2"),
    ]
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

fn c1_euclidean() -> Outcome {
    let spec = entry("euclidean").spec;
    let (mut g_err, mut spray_max, mut hamel_max) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in random_points(&spec, 100, 1) {
        let g = fundamental_tensor(&spec, &x, &y).unwrap().entries;
        g_err = g_err.max(inf_norm(&(g - DMatrix::identity(4, 4))));
        let s = spray_coeffs(&spec, &x, &y).unwrap();
        spray_max = s.to_vec().iter().fold(spray_max, |m, v| m.max(v.abs()));
        hamel_max = hamel_max.max(hamel_residual(&spec, &x, &y).unwrap().max_abs());
    }
    check(
        g_err < 1e-10 && spray_max < 1e-10 && hamel_max < 1e-10,
        format!("|g-I| = {g_err:.1e}, |G| = {spray_max:.1e}, |hamel| = {hamel_max:.1e}"),
    )
}

fn c2_det_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3, 4] {
        let metrics = [
            catalog::example1(n, 1.0, 0.5, 1.0, catalog::EXAMPLE1_RHO).unwrap().spec,
            example2_m(n, 1),
            corollary_g6_2(n),
        ];
        for spec in &metrics {
            for (x, y) in random_points(spec, 200, 2 + n as u64) {
                worst = worst.max(det_identity_residual(spec, &x, &y).unwrap().rel_diff);
            }
        }
    }
    check(worst < 1e-8, format!("max relative residual {worst:.2e}"))
}

/// `½[F²]_{y^A y^B}` by central differences with step 1e-4.
fn fd_tensor(spec: &MetricSpec, x: &BasePoint, y: &Tangent) -> DMatrix<f64> {
    let h = 1e-4;
    let yv = y.to_vec();
    let dim = yv.len();
    let f2 = |d: &[(usize, f64)]| {
        let mut v = yv.clone();
        for &(i, dv) in d {
            v[i] += dv;
        }
        spec.eval_f(x, &Tangent::from_slice(&v)).unwrap().powi(2)
    };
    let f0 = f2(&[]);
    let mut g = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let v = if a == b {
                (f2(&[(a, h)]) - 2.0 * f0 + f2(&[(a, -h)])) / (h * h)
            } else {
                (f2(&[(a, h), (b, h)]) - f2(&[(a, h), (b, -h)]) - f2(&[(a, -h), (b, h)]) + f2(&[(a, -h), (b, -h)]))
                    / (4.0 * h * h)
            };
            g[(a, b)] = 0.5 * v;
            g[(b, a)] = 0.5 * v;
        }
    }
    g
}

fn c3_tensor_oracle() -> Outcome {
    let mut zoo = metric_zoo();
    zoo.push(entry("fish_tank").spec);
    let worst = zoo
        .par_iter()
        .map(|spec| {
            let mut w = 0.0f64;
            for (x, y) in random_points(spec, 100, 3) {
                let g = fundamental_tensor(spec, &x, &y).unwrap().entries;
                let fd = fd_tensor(spec, &x, &y);
                w = w.max(inf_norm(&(&g - fd)) / inf_norm(&g));
            }
            (spec.name.clone(), w)
        })
        .collect::<Vec<_>>();
    let max = worst.iter().map(|p| p.1).fold(0.0, f64::max);
    let (name, _) = worst.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    check(max < 1e-5, format!("{} metrics, max relative error {max:.2e} ({name})", worst.len()))
}

fn c4_spray() -> Outcome {
    let zoo = metric_zoo();
    let rows: Vec<(f64, f64)> = zoo
        .par_iter()
        .map(|spec| {
            let (mut route, mut homog) = (0.0f64, 0.0f64);
            for (x, y) in random_points(spec, 100, 4) {
                let closed = spray_coeffs(spec, &x, &y).unwrap();
                let oracle = spray_oracle(spec, &x, &y).unwrap();
                route = route.max(closed.rel_diff(&oracle));
                for l in [0.5, 2.0, 4.0] {
                    let yl = y.scaled(l);
                    for (base, scaled) in [
                        (&closed, spray_coeffs(spec, &x, &yl).unwrap()),
                        (&oracle, spray_oracle(spec, &x, &yl).unwrap()),
                    ] {
                        let expect = cylfinsler::spray::SprayCoeffs {
                            g0: base.g0 * l * l,
                            gi: base.gi.iter().map(|v| v * l * l).collect(),
                        };
                        homog = homog.max(scaled.rel_diff(&expect));
                    }
                }
            }
            (route, homog)
        })
        .collect();
    let route = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let homog = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    check(
        route < 1e-6 && homog < 1e-10,
        format!("{} metrics, route diff {route:.2e}, homogeneity {homog:.2e}", rows.len()),
    )
}

fn family_instances() -> Vec<(&'static str, GFamilySpec)> {
    let ex1_g6 = "(2 - (1 + 2*xi))/(1 + xi)^(5/2)";
    let ex1_g5 = "2*sqrt(1 + 2*r^2)/(1 + r^2)^2";
    vec![
        ("g6=2", GFamilySpec::parse([Some("sqrt(1+z^2)"), None, None, None, None, Some("2")]).unwrap()),
        (
            "all-six",
            GFamilySpec::parse([
                Some("sqrt(1+z^2)"),
                Some("0.1"),
                Some("0.1*z + 0.05"),
                Some("0.2*x0"),
                Some("0.1*r^2"),
                Some("1/(1+xi)"),
            ])
            .unwrap(),
        ),
        (
            "cubic-g3",
            GFamilySpec::parse([
                Some("sqrt(z^2+1) + 0.5*z"),
                Some("0.1*z^2"),
                Some("0.2 - 0.1*z^3/3"),
                Some("sin(x0)"),
                Some(ex1_g5),
                Some(ex1_g6),
            ])
            .unwrap(),
        ),
        ("xi^2", GFamilySpec::parse([Some("sqrt(z^2+1)"), None, None, None, None, Some("2*xi^2")]).unwrap()),
    ]
}

fn thousand_node_grid(spec: &MetricSpec) -> SamplingGrid {
    SamplingGrid::with_nodes(spec, 10, 0)
        .with_flags(&format!("x0=-1:1:5,z=-10:10:10,r=1e-6:{}:5,sigma=-1:1:4", 0.95 * spec.rho))
        .unwrap()
}

fn c5_flatness() -> Outcome {
    let (mut r_max, mut hamel_max) = (0.0f64, 0.0f64);
    let mut detected = f64::INFINITY;
    for (_, fam) in family_instances() {
        let phi = build_family_phi(&fam).unwrap();
        let spec = MetricSpec::new("family", 3, 1.0, (-1.0, 1.0), phi.clone()).unwrap();
        let grid = thousand_node_grid(&spec);
        let rep = flatness_report(&spec, &grid, 1e-10).unwrap();
        assert_eq!(rep.samples, 1000);
        r_max = r_max.max(rep.max.r1).max(rep.max.r2);
        hamel_max = hamel_max.max(rep.hamel_max_scaled);
        let bumped = phi.plus(&PhiFunction::dsl("0.2*s*z^2").unwrap());
        let spec = MetricSpec::new("perturbed", 3, 1.0, (-1.0, 1.0), bumped).unwrap();
        let rep = flatness_report(&spec, &grid, 1e-10).unwrap();
        detected = detected.min(rep.max.r1.max(rep.max.r2));
    }
    check(
        r_max < 1e-10 && hamel_max < 1e-8 && detected > 1e-3,
        format!("family max(|R1|,|R2|) = {r_max:.1e}, hamel/scale = {hamel_max:.1e}, perturbation >= {detected:.2e}"),
    )
}

fn geodesic_starts(count: usize, seed: u64) -> Vec<(BasePoint, Tangent)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x0 = BasePoint::new(
                rng.random_range(-0.3..0.3),
                (0..3).map(|_| rng.random_range(-0.25..0.25)).collect::<Vec<f64>>(),
            );
            let v0 = Tangent::new(
                rng.random_range(-0.3..0.3),
                (0..3).map(|_| rng.random_range(-0.3..0.3)).collect::<Vec<f64>>(),
            );
            (x0, v0)
        })
        .collect()
}

fn deviations(spec: &MetricSpec, starts: &[(BasePoint, Tangent)], step: f64, steps: usize) -> Vec<f64> {
    starts
        .par_iter()
        .map(|(x, v)| {
            let tr = integrate_geodesic(spec, x, v, GeodesicConfig { step, max_steps: steps }).unwrap();
            straightness_deviation(&tr).unwrap()
        })
        .collect()
}

fn c6_geodesics() -> Outcome {
    let flat = example2_m(3, 1);
    let control = dsl_spec("control", 3, "sqrt(1+z^2) + 0.2*s*z^2");
    let starts = geodesic_starts(20, 6);
    let dev = deviations(&flat, &starts, 1e-3, 2000);
    let flat_max = dev.iter().copied().fold(0.0, f64::max);
    let halved = deviations(&flat, &starts, 5e-4, 4000);
    let order_ok = dev.iter().zip(&halved).all(|(a, b)| *a < 1e-8 || b * 8.0 <= *a);
    // The flat metric keeps RK4 on the line up to roundoff, so the order is
    // measured on the control metric: endpoint error against a fine reference.
    let endpoint = |(x, v): &(BasePoint, Tangent), step: f64| {
        let steps = (1.0 / step).round() as usize;
        let tr = integrate_geodesic(&control, x, v, GeodesicConfig { step, max_steps: steps }).unwrap();
        assert_eq!(tr.len(), steps + 1);
        tr.positions.last().unwrap().to_vec()
    };
    let order_ratio = starts[..4]
        .par_iter()
        .map(|st| {
            let reference = endpoint(st, 1.0 / 640.0);
            let err = |step: f64| {
                endpoint(st, step).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            err(0.05) / err(0.025)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let ctrl = deviations(&control, &starts, 1e-3, 2000);
    let ctrl_max = ctrl.iter().copied().fold(0.0, f64::max);
    check(
        flat_max < 1e-5 && order_ok && order_ratio >= 8.0 && ctrl_max > 1e-3,
        format!(
            "flat max {flat_max:.1e} (halving ok = {order_ok}), RK4 halving ratio >= {order_ratio:.1}, control max {ctrl_max:.2e}"
        ),
    )
}

fn c7_identity() -> Outcome {
    let mut worst = 0.0f64;
    for src in ["2", "2*xi", "(2 - 1*(1 + 2*xi))/(1 + 1*xi)^(5/2)"] {
        let g6 = UnaryFn::parse(src, "xi").unwrap();
        for r in [0.1, 0.4, 0.7, 1.0, 1.5] {
            for sigma in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                worst = worst.max(integral_identity_check(&g6, r, sigma * r).unwrap().abs_diff);
            }
        }
    }
    check(worst < 1e-9, format!("75 evaluations, max |lhs-rhs| = {worst:.1e}"))
}

fn c8_im_audit() -> Outcome {
    let mut worst = 0.0f64;
    for (r, s) in [(2.0, 1.0), (0.8, 0.3), (1.0, -0.9), (1.5, 1.5)] {
        for row in im_values(r, s, 8).unwrap().iter().skip(1) {
            worst = worst.max((row.i_corrected - row.i).abs() / (1.0 + row.i.abs()));
        }
    }
    let rows = im_values(2.0, 1.0, 2).unwrap();
    let reproduced = rows[2].i_printed == 185.0 && (rows[2].i - 203.0 / 3.0).abs() < 1e-9;
    let reported = cylfinsler::family::im_findings(2.0, 1.0, &rows).len() == 1;
    check(
        worst < 1e-9 && reproduced && reported,
        format!(
            "corrected relation max rel {worst:.1e}; m=2: printed {} vs quadrature {:.6}",
            rows[2].i_printed, rows[2].i
        ),
    )
}

fn all_entries(n: usize) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for name in catalog::NAMES {
        if name == "fish_tank" {
            if n == 2 {
                out.push(entry(name));
            }
            continue;
        }
        let mut p = Params::new();
        p.insert("n".into(), catalog::Param::Num(n as f64));
        out.push(catalog::lookup(name, &p).unwrap());
    }
    out
}

fn c9_symmetry() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [2, 3] {
        for e in all_entries(n) {
            let pts = random_points(&e.spec, 50, 9);
            for (k, (x, y)) in pts.iter().enumerate() {
                let o = random_orthogonal(n, 1000 + k as u64);
                let f = e.spec.eval_f(x, y).unwrap();
                worst = worst.max(check_cylindrical_symmetry(&e.spec, x, y, &o).unwrap() / f);
                if let Some(d) = &e.display {
                    if let Ok(fd) = d.eval(x, y) {
                        worst = worst.max(check_cylindrical_symmetry(d, x, y, &o).unwrap() / fd.abs());
                    }
                }
            }
            count += 1;
        }
    }
    check(worst < 1e-10, format!("{count} entries, max residual/F = {worst:.1e}"))
}

fn c10_homogeneity() -> Outcome {
    let mut metrics: Vec<Box<dyn FinslerNorm>> = Vec::new();
    // Transcribed display formulas with a known defect, scored separately.
    let mut flawed: Vec<Box<dyn FinslerNorm>> = Vec::new();
    for n in [2, 3] {
        for e in all_entries(n) {
            if let Some(d) = e.display.clone() {
                if e.name == "example1" {
                    flawed.push(Box::new(d));
                } else {
                    metrics.push(Box::new(d));
                }
            }
            metrics.push(Box::new(e.spec));
        }
    }
    metrics.push(Box::new(dsl_spec("control", 3, "sqrt(1+z^2) + 0.2*s*z^2")));
    let probe = MetricSpec::new("probe", 3, 0.8, (-0.5, 0.5), PhiFunction::euclidean()).unwrap();
    let defect = |set: &[Box<dyn FinslerNorm>]| {
        let mut worst = 0.0f64;
        for m in set {
            let probe_n = MetricSpec { n: m.n(), ..probe.clone() };
            for (x, y) in random_points(&probe_n, 30, 10) {
                if let Ok(v) = check_homogeneity(m.as_ref(), &x, &y, &[0.5, 2.0, 10.0]) {
                    worst = worst.max(v);
                }
            }
        }
        worst
    };
    let worst = defect(&metrics);
    let display_defect = defect(&flawed);
    check(
        worst < 1e-12,
        format!(
            "{} evaluators, max relative defect {worst:.1e} (example1 display, diagnostic only: {display_defect:.1e})",
            metrics.len()
        ),
    )
}

fn c11_path() -> Outcome {
    let t_grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut passing = Vec::new();
    let mut skipped = Vec::new();
    for e in all_entries(3) {
        let grid = SamplingGrid::with_nodes(&e.spec, 11, 0);
        if validate_finsler(&e.spec, &grid).map(|r| r.pass).unwrap_or(false) {
            passing.push(e);
        } else {
            skipped.push(e.name);
        }
    }
    let (mut om, mut la) = (f64::INFINITY, f64::INFINITY);
    for e in &passing {
        for (x, y) in random_points(&e.spec, 50, 11) {
            let f = e.spec.frame(&x, &y).unwrap();
            let pc = interpolation_path_check(&e.spec.phi, f.point(), &t_grid).unwrap();
            om = om.min(pc.omega_min);
            la = la.min(pc.lambda_min);
            // Sanity: the t = 1 end is the metric itself.
            let inv = invariants(&f.p, f.point());
            assert!(pc.lambda_min <= inv.lambda);
        }
    }
    check(
        om > 0.0 && la > 0.0 && !passing.is_empty(),
        format!(
            "{} passing metrics (not Finsler on the grid: {}), min Omega_t = {om:.2e}, min Lambda_t = {la:.2e}",
            passing.len(),
            if skipped.is_empty() { "none".to_string() } else { skipped.join(", ") }
        ),
    )
}

const CORPUS: [&str; 30] = [
    "x0 + z + r + s",
    "x0*z*r*s",
    "sqrt(1+z^2)",
    "sqrt(1+z^2) + 0.2*s*z^2",
    "exp(x0*z) - r^2",
    "log(2 + s) * cos(z)",
    "sin(x0)*sin(z) + cos(r)*cos(s)",
    "atan(z - s) / (1 + r^2)",
    "(1 + x0^2)^(1/3)",
    "r^2 - s^2",
    "sqrt(r^2 - s^2 + 1)",
    "z^3 - 3*z*s^2 + x0^4",
    "1/(1 + z^2 + s^2)",
    "exp(-z^2)*r",
    "pow(1 + r, 2.5) - pow(2 + s, -1.5)",
    "-(z - x0)^2 + s*r",
    "log(1 + exp(z))",
    "sqrt(z^2 + 1) + 0.5*z + s*2*sqrt(1 + 2*r^2)/(1 + r^2)^2",
    "(2 - (1 + 2*(r^2 - s^2)))/(1 + (r^2 - s^2))^(5/2)",
    "z*sin(x0) + x0*cos(z)",
    "atan(x0*z*r)",
    "(x0 + 2)^z",
    "exp(sin(z) + cos(s))",
    "sqrt(sqrt(1 + z^4))",
    "r*s/(1 + z^2)^(3/2)",
    "2^(-z^2)",
    "cos(z)^2 + sin(z)^2 + 0*r",
    "(1 + x0*z)^3 / (3 + s)^2",
    "log(r) + log(3 - s)",
    "-z / sqrt(z^2 + 2) + r^4*s",
];

fn c12_dsl() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for src in CORPUS {
        let e = Expr::parse(src, &PHI_VARS).unwrap();
        for _ in 0..20 {
            let p = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.2..1.0),
                rng.random_range(-0.5..0.5),
            ];
            let at = Bindings::from_pairs(PHI_VARS.iter().copied().zip(p));
            let jet = e.eval_jet(&at, &PHI_VARS).unwrap();
            let f = |d: [f64; 4]| e.eval(&[p[0] + d[0], p[1] + d[1], p[2] + d[2], p[3] + d[3]]).unwrap();
            let unit = |i: usize, h: f64| {
                let mut d = [0.0; 4];
                d[i] = h;
                d
            };
            for (i, a) in PHI_VARS.iter().enumerate() {
                let h = 1e-5;
                let fd = (f(unit(i, h)) - f(unit(i, -h))) / (2.0 * h);
                let exact = jet.d(a).unwrap();
                worst = worst.max((exact - fd).abs() / (1.0 + exact.abs()));
                for (j, b) in PHI_VARS.iter().enumerate().skip(i) {
                    let h = 1e-4;
                    let fd = if i == j {
                        (f(unit(i, h)) - 2.0 * f([0.0; 4]) + f(unit(i, -h))) / (h * h)
                    } else {
                        let dd = |a: f64, b: f64| {
                            let mut d = [0.0; 4];
                            d[i] = a;
                            d[j] = b;
                            f(d)
                        };
                        (dd(h, h) - dd(h, -h) - dd(-h, h) + dd(-h, -h)) / (4.0 * h * h)
                    };
                    let exact = jet.d2(a, b).unwrap();
                    worst = worst.max((exact - fd).abs() / (1.0 + exact.abs()));
                }
            }
        }
    }
    check(worst < 1e-6, format!("30 expressions x 20 points, max relative error {worst:.1e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("1 euclidean baseline", c1_euclidean),
        ("2 determinant identity", c2_det_identity),
        ("3 tensor vs finite differences", c3_tensor_oracle),
        ("4 spray routes and homogeneity", c4_spray),
        ("5 flatness soundness", c5_flatness),
        ("6 geodesic straightness", c6_geodesics),
        ("7 integral identity", c7_identity),
        ("8 I_m audit", c8_im_audit),
        ("9 cylindrical symmetry", c9_symmetry),
        ("10 homogeneity", c10_homogeneity),
        ("11 interpolation path", c11_path),
        ("12 DSL differentiation", c12_dsl),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] {name}: {d} ({secs:.1}s)"),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {name}: {d} ({secs:.1}s)");
            }
        }
    }
    println!(
        "acceptance: {} of 12 passed in {:.1}s",
        12 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
