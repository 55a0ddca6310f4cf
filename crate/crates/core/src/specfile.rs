//! Metric spec files.
//!
//! ```json
//! {"name": "demo", "n": 3, "rho": 1.0, "interval": [-1, 1],
//!  "phi": {"kind": "dsl", "expr": "sqrt(1+z^2)"}}
//! ```
//!
//! `phi.kind` is one of `dsl` (`expr`), `family` (`g1`…`g6`), `corollary`
//! (`k`, `g1`, `g4`, `g5`, `g6`), `spherical` (`k`, `f`, `g`, `g_alt`) or
//! `catalog` (`catalog`, `params`). Schema errors carry a JSON pointer.

use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::catalog::{self, CatalogEntry, Param, Params};
use crate::family::{
    build_family_phi, build_spherical_phi, CorollarySpec, GFamilySpec, SphericalPhiSpec, UnaryFn,
};
use crate::grid::{SamplingGrid, DEFAULT_NODES};
use crate::{Error, MetricSpec, PhiFunction};

pub const KINDS: [&str; 5] = ["dsl", "family", "corollary", "spherical", "catalog"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("{0}")]
    Constraint(Error),
}

impl LoadError {
    /// Process exit code: 2 for I/O and schema errors, 3 for constraints.
    pub fn exit_code(&self) -> i32 {
        match self {
            LoadError::Io { .. } | LoadError::Schema { .. } => 2,
            LoadError::Constraint(_) => 3,
        }
    }

    fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        LoadError::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// Classify a construction error raised while building the field at `pointer`.
    fn build(pointer: &str, e: Error) -> Self {
        match e {
            Error::Constraint(_) | Error::Condition { .. } => LoadError::Constraint(e),
            other => LoadError::schema(pointer, other.to_string()),
        }
    }
}

/// A loaded spec with what the reports need besides the metric.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: MetricSpec,
    pub kind: String,
    /// SHA-256 of the canonical (key-sorted, compact) JSON document.
    pub digest: String,
    /// Present for `kind = catalog`.
    pub entry: Option<CatalogEntry>,
    /// Condition minima recorded while constructing corollary and spherical φ.
    pub construction: Option<Value>,
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<LoadedSpec, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<LoadedSpec, LoadError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| LoadError::schema("", format!("invalid JSON: {e}")))?;
    let digest = spec_digest(&doc);
    let root = object(&doc, "")?;
    allow_keys(root, "", &["name", "n", "rho", "interval", "phi"])?;
    let name = string(root, "", "name")?.to_string();
    let n = dimension(root)?;
    let rho = optional_number(root, "", "rho")?.unwrap_or(1.0);
    if !(rho > 0.0) {
        return Err(LoadError::schema("/rho", format!("must be positive, got {rho}")));
    }
    let interval = match root.get("interval") {
        None => (-1.0, 1.0),
        Some(v) => interval(v)?,
    };
    let phi_doc = object(field(root, "", "phi")?, "/phi")?;
    let kind = string(phi_doc, "/phi", "kind")?.to_string();
    let mut loaded = LoadedSpec {
        spec: MetricSpec::new(name.clone(), n, rho, interval, PhiFunction::euclidean())
            .map_err(|e| LoadError::schema("", e.to_string()))?,
        kind: kind.clone(),
        digest,
        entry: None,
        construction: None,
    };
    let phi = match kind.as_str() {
        "dsl" => {
            allow_keys(phi_doc, "/phi", &["kind", "expr"])?;
            PhiFunction::dsl(string(phi_doc, "/phi", "expr")?).map_err(|e| LoadError::build("/phi/expr", e))?
        }
        "family" => family(phi_doc, rho)?,
        "corollary" => {
            let (phi, conditions) = corollary(phi_doc, n, rho, interval)?;
            loaded.construction = Some(conditions);
            phi
        }
        "spherical" => {
            let (phi, checks) = spherical(phi_doc, rho, interval)?;
            loaded.construction = Some(checks);
            phi
        }
        "catalog" => {
            let entry = catalog_entry(phi_doc, root, n, rho, interval)?;
            let phi = entry.spec.phi.clone();
            loaded.entry = Some(entry);
            phi
        }
        other => {
            return Err(LoadError::schema(
                "/phi/kind",
                format!("unknown kind `{other}` (expected one of {})", KINDS.join(", ")),
            ))
        }
    };
    loaded.spec.phi = phi;
    Ok(loaded)
}

/// Hex SHA-256 of the document re-serialized with sorted keys and no
/// whitespace, so formatting does not change it.
pub fn spec_digest(doc: &Value) -> String {
    // serde_json's Map is ordered by key, so this is canonical.
    let bytes = serde_json::to_vec(doc).expect("a Value always serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn family(doc: &Map<String, Value>, rho: f64) -> Result<PhiFunction, LoadError> {
    const KEYS: [&str; 6] = ["g1", "g2", "g3", "g4", "g5", "g6"];
    const VARS: [&str; 6] = ["z", "z", "z", "x0", "r", "xi"];
    allow_keys(doc, "/phi", &["kind", "g1", "g2", "g3", "g4", "g5", "g6"])?;
    let mut sources: [Option<&str>; 6] = [None; 6];
    for (i, key) in KEYS.iter().enumerate() {
        sources[i] = optional_string(doc, "/phi", key)?;
        if let Some(src) = sources[i] {
            UnaryFn::parse(src, VARS[i]).map_err(|e| LoadError::build(&format!("/phi/{key}"), e))?;
        }
    }
    let spec = GFamilySpec::parse(sources)
        .map_err(|e| LoadError::build("/phi", e))?
        .with_xi_max(rho * rho);
    build_family_phi(&spec).map_err(|e| LoadError::build("/phi", e))
}

fn corollary(
    doc: &Map<String, Value>,
    n: usize,
    rho: f64,
    interval: (f64, f64),
) -> Result<(PhiFunction, Value), LoadError> {
    allow_keys(doc, "/phi", &["kind", "k", "g1", "g4", "g5", "g6"])?;
    let k = optional_number(doc, "/phi", "k")?.unwrap_or(0.0);
    let g1 = string(doc, "/phi", "g1")?;
    UnaryFn::parse(g1, "z").map_err(|e| LoadError::build("/phi/g1", e))?;
    let mut rest = [None; 3];
    for (slot, (key, var)) in rest.iter_mut().zip([("g4", "x0"), ("g5", "r"), ("g6", "xi")]) {
        *slot = optional_string(doc, "/phi", key)?;
        if let Some(src) = *slot {
            UnaryFn::parse(src, var).map_err(|e| LoadError::build(&format!("/phi/{key}"), e))?;
        }
    }
    let spec = CorollarySpec::parse(k, g1, rest[0], rest[1], rest[2])
        .map_err(|e| LoadError::build("/phi", e))?
        .with_xi_max(rho * rho);
    let grid = SamplingGrid::for_domain(interval, rho, DEFAULT_NODES, 0);
    let conditions = spec.check_conditions(n, &grid).map_err(|e| LoadError::build("/phi", e))?;
    let phi = spec.family().map_err(|e| LoadError::build("/phi", e))?.phi();
    Ok((phi, serde_json::to_value(conditions).expect("plain numbers")))
}

fn spherical(doc: &Map<String, Value>, rho: f64, interval: (f64, f64)) -> Result<(PhiFunction, Value), LoadError> {
    allow_keys(doc, "/phi", &["kind", "k", "f", "g", "g_alt"])?;
    let k = optional_number(doc, "/phi", "k")?.unwrap_or(1.0);
    let f = string(doc, "/phi", "f")?;
    let g = optional_string(doc, "/phi", "g")?;
    // |x|² = (x⁰)² + |x̄|² stays below this on the domain.
    let x0_max = interval.0.abs().max(interval.1.abs());
    let b_max = (rho * rho + x0_max * x0_max).sqrt();
    let mut spec = SphericalPhiSpec::parse(k, f, g, b_max).map_err(|e| {
        let pointer = if UnaryFn::parse(f, "xi").is_err() { "/phi/f" } else { "/phi/g" };
        LoadError::build(pointer, e)
    })?;
    if let Some(src) = optional_string(doc, "/phi", "g_alt")? {
        spec.mosol_g = Some(UnaryFn::parse(src, "b").map_err(|e| LoadError::build("/phi/g_alt", e))?);
    }
    let (sph, checks) = build_spherical_phi(&spec).map_err(|e| LoadError::build("/phi", e))?;
    Ok((catalog::spherical_normal(sph), serde_json::to_value(checks).expect("plain numbers")))
}

/// Catalog entries carry their own domain; the file's `rho` and `interval`
/// may only shrink it.
fn catalog_entry(
    doc: &Map<String, Value>,
    root: &Map<String, Value>,
    n: usize,
    rho: f64,
    interval: (f64, f64),
) -> Result<CatalogEntry, LoadError> {
    allow_keys(doc, "/phi", &["kind", "catalog", "params"])?;
    let name = string(doc, "/phi", "catalog")?;
    if !catalog::NAMES.contains(&name) {
        return Err(LoadError::schema(
            "/phi/catalog",
            format!("unknown entry `{name}` (expected one of {})", catalog::NAMES.join(", ")),
        ));
    }
    let mut params: Params = match doc.get("params") {
        None => Params::new(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| LoadError::schema("/phi/params", format!("expected an object of numbers or strings: {e}")))?,
    };
    match params.get("n") {
        Some(Param::Num(v)) if *v != n as f64 => {
            return Err(LoadError::schema("/phi/params/n", format!("{v} disagrees with /n = {n}")));
        }
        _ if name != "fish_tank" => {
            params.insert("n".into(), Param::Num(n as f64));
        }
        _ => {}
    }
    let mut entry = catalog::lookup(name, &params).map_err(|e| LoadError::build("/phi/params", e))?;
    if entry.spec.n != n {
        return Err(LoadError::schema("/n", format!("`{name}` is defined for n = {} only", entry.spec.n)));
    }
    let own = (entry.spec.rho, entry.spec.interval);
    let rho = if root.contains_key("rho") { rho } else { own.0 };
    let interval = if root.contains_key("interval") { interval } else { own.1 };
    if rho > own.0 || interval.0 < own.1 .0 || interval.1 > own.1 .1 {
        return Err(LoadError::Constraint(Error::Constraint(format!(
            "`{name}` is defined on I = [{}, {}], rho = {}; the file asks for [{}, {}], rho = {rho}",
            own.1 .0, own.1 .1, own.0, interval.0, interval.1
        ))));
    }
    entry.spec.rho = rho;
    entry.spec.interval = interval;
    if let Some(Value::String(file_name)) = root.get("name") {
        entry.spec.name = file_name.clone();
    }
    Ok(entry)
}

fn pointer(parent: &str, key: &str) -> String {
    format!("{parent}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>, LoadError> {
    v.as_object()
        .ok_or_else(|| LoadError::schema(at, format!("expected an object, got {}", type_name(v))))
}

fn allow_keys(obj: &Map<String, Value>, at: &str, allowed: &[&str]) -> Result<(), LoadError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(LoadError::schema(pointer(at, k), "unknown field")),
        None => Ok(()),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value, LoadError> {
    obj.get(key).ok_or_else(|| LoadError::schema(pointer(at, key), "missing required field"))
}

fn string<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a str, LoadError> {
    let v = field(obj, at, key)?;
    v.as_str()
        .ok_or_else(|| LoadError::schema(pointer(at, key), format!("expected a string, got {}", type_name(v))))
}

fn optional_string<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<Option<&'a str>, LoadError> {
    match obj.get(key) {
        None => Ok(None),
        Some(_) => string(obj, at, key).map(Some),
    }
}

fn optional_number(obj: &Map<String, Value>, at: &str, key: &str) -> Result<Option<f64>, LoadError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| LoadError::schema(pointer(at, key), format!("expected a number, got {}", type_name(v)))),
    }
}

fn dimension(root: &Map<String, Value>) -> Result<usize, LoadError> {
    let v = field(root, "", "n")?;
    match v.as_u64() {
        Some(n) if n >= 2 => Ok(n as usize),
        _ => Err(LoadError::schema("/n", format!("expected an integer >= 2, got {v}"))),
    }
}

fn interval(v: &Value) -> Result<(f64, f64), LoadError> {
    let bad = || LoadError::schema("/interval", format!("expected [lo, hi] with lo < hi, got {v}"));
    let arr = v.as_array().ok_or_else(bad)?;
    match arr.as_slice() {
        [lo, hi] => match (lo.as_f64(), hi.as_f64()) {
            (Some(lo), Some(hi)) if lo < hi => Ok((lo, hi)),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family_doc(g2: &str, g3: &str) -> String {
        format!(r#"{{"name": "fam", "n": 3, "rho": 1.0, "interval": [-1, 1],
                    "phi": {{"kind": "family", "g1": "sqrt(1+z^2)", "g2": "{g2}", "g3": "{g3}"}}}}"#)
    }

    #[test]
    fn family_constraint_is_checked_at_load() {
        assert!(parse_spec(&family_doc("1", "z")).is_ok());
        let err = parse_spec(&family_doc("z", "z")).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn missing_dimension_names_pointer() {
        let err = parse_spec(r#"{"name": "x", "phi": {"kind": "dsl", "expr": "1"}}"#).unwrap_err();
        assert_eq!(err, LoadError::schema("/n", "missing required field"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_expression_points_at_field() {
        let err = parse_spec(r#"{"name": "x", "n": 2, "phi": {"kind": "dsl", "expr": "1 +"}}"#).unwrap_err();
        assert!(matches!(err, LoadError::Schema { ref pointer, .. } if pointer == "/phi/expr"), "{err}");
        let err = parse_spec(r#"{"name": "x", "n": 2, "phi": {"kind": "family", "g5": "z"}}"#).unwrap_err();
        assert!(matches!(err, LoadError::Schema { ref pointer, .. } if pointer == "/phi/g5"), "{err}");
    }

    #[test]
    fn unknown_fields_and_kinds_are_rejected() {
        let err = parse_spec(r#"{"name": "x", "n": 2, "rh0": 1, "phi": {"kind": "dsl", "expr": "1"}}"#).unwrap_err();
        assert_eq!(err, LoadError::schema("/rh0", "unknown field"));
        let err = parse_spec(r#"{"name": "x", "n": 2, "phi": {"kind": "magic"}}"#).unwrap_err();
        assert!(matches!(err, LoadError::Schema { ref pointer, .. } if pointer == "/phi/kind"));
        let err = parse_spec(r#"{"name": "x", "n": 2, "interval": [1, 0], "phi": {"kind": "dsl", "expr": "1"}}"#)
            .unwrap_err();
        assert!(matches!(err, LoadError::Schema { ref pointer, .. } if pointer == "/interval"));
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = parse_spec(r#"{"name":"e","n":3,"phi":{"kind":"dsl","expr":"sqrt(1+z^2)"}}"#).unwrap();
        let b = parse_spec("{\n  \"phi\": {\"expr\": \"sqrt(1+z^2)\", \"kind\": \"dsl\"},\n  \"n\": 3, \"name\": \"e\"\n}")
            .unwrap();
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.digest.len(), 64);
        let c = parse_spec(r#"{"name":"e","n":4,"phi":{"kind":"dsl","expr":"sqrt(1+z^2)"}}"#).unwrap();
        assert_ne!(a.digest, c.digest);
    }

    #[test]
    fn catalog_domain_can_only_shrink() {
        let ok = parse_spec(r#"{"name": "s", "n": 2, "rho": 0.5, "phi": {"kind": "catalog", "catalog": "shen_randers"}}"#)
            .unwrap();
        assert_eq!(ok.spec.rho, 0.5);
        assert_eq!(ok.entry.unwrap().spec.n, 2);
        let err = parse_spec(r#"{"name": "s", "n": 2, "rho": 2.0, "phi": {"kind": "catalog", "catalog": "shen_randers"}}"#)
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = parse_spec(r#"{"name": "f", "n": 3, "phi": {"kind": "catalog", "catalog": "fish_tank"}}"#).unwrap_err();
        assert!(matches!(err, LoadError::Schema { ref pointer, .. } if pointer == "/n"));
    }

    #[test]
    fn corollary_and_spherical_record_conditions() {
        let c = parse_spec(
            r#"{"name": "c", "n": 3, "phi": {"kind": "corollary", "k": 1, "g1": "sqrt(1+z^2)", "g6": "2*xi"}}"#,
        )
        .unwrap();
        assert!(c.construction.unwrap()["a_omega"].as_f64().unwrap() > 0.0);
        let bad = parse_spec(r#"{"name": "c", "n": 3, "phi": {"kind": "corollary", "g1": "z^2"}}"#).unwrap_err();
        assert_eq!(bad.exit_code(), 3);
        let s = parse_spec(
            r#"{"name": "s", "n": 2, "rho": 0.8, "interval": [-0.5, 0.5],
                "phi": {"kind": "spherical", "k": 1, "f": "2*xi", "g_alt": "b^2/2"}}"#,
        )
        .unwrap();
        assert!(s.construction.unwrap()["link_max"].as_f64().unwrap() < 1e-9);
    }
}
