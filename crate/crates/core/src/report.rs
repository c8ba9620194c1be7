//! Spec and right-hand-side ingestion, run manifests, per-command reports
//! and the fixture suite.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::criterion::{estimate_limsup_with, CriterionConfig, Verdict};
use crate::deficiency::classify_deficiency;
use crate::diagnostics::{
    apriori_bound_check, bracket_ratio_sweep, check_weight_lipschitz, commutator_split,
    energy_identity_residual, gauge_constants, weighted_row_smallness, SmallnessConfig, WeightProfile,
};
use crate::operator::{
    verify_band, verify_hermitian, BandProfile, DiagonalValues, Family, IndexRange, OperatorSpec,
};
use crate::section::{adaptive_resolvent, build_section, ResolventError, Shift, SparseVector, Window};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("entry ({x}, {y}) lies outside the band: offset {offset} > n <x>^gamma = {reach}")]
    OutOfBand { x: i64, y: i64, offset: i64, reach: f64 },
    #[error("family `{0}` has no file representation")]
    Unserializable(&'static str),
}

fn field(field: &str, message: impl Into<String>) -> SpecError {
    SpecError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    n: i64,
    gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    profile: RawProfile,
    family: String,
    #[serde(default)]
    params: Map<String, Value>,
    #[serde(default)]
    entries: Option<Vec<[f64; 4]>>,
}

fn param(params: &Map<String, Value>, name: &str) -> Result<f64, SpecError> {
    let key = format!("params.{name}");
    let v = params.get(name).ok_or_else(|| field(&key, "missing"))?;
    let v = v.as_f64().ok_or_else(|| field(&key, "must be a number"))?;
    if !v.is_finite() {
        return Err(field(&key, "must be finite"));
    }
    Ok(v)
}

fn as_index(v: f64, name: &str) -> Result<i64, SpecError> {
    if v.fract() != 0.0 || v.abs() > 2f64.powi(53) {
        return Err(field(name, format!("index {v} is not an integer")));
    }
    Ok(v as i64)
}

pub fn parse_spec(text: &str) -> Result<OperatorSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text)?;
    let profile = BandProfile::new(raw.profile.n, raw.profile.gamma).map_err(|e| {
        let name = if raw.profile.n < 1 { "profile.n" } else { "profile.gamma" };
        field(name, e.to_string())
    })?;
    let family = match raw.family.as_str() {
        "counterexample" => Family::Counterexample { growth_exponent: param(&raw.params, "delta")? },
        "poly_growth_band" => Family::PolyGrowthBand {
            beta: param(&raw.params, "beta")?,
            scale: if raw.params.contains_key("scale") { param(&raw.params, "scale")? } else { 1.0 },
        },
        "bounded_test" => Family::BoundedTest,
        "diagonal" => Family::Diagonal(DiagonalValues::Constant(param(&raw.params, "value")?)),
        "zero" => Family::Explicit(BTreeMap::new()),
        "explicit" => {
            let list = raw.entries.as_ref().ok_or_else(|| field("entries", "required for the explicit family"))?;
            let mut map = BTreeMap::new();
            for (i, [xf, yf, re, im]) in list.iter().copied().enumerate() {
                let name = format!("entries[{i}]");
                let x = as_index(xf, &name)?;
                let y = as_index(yf, &name)?;
                if x > y {
                    return Err(field(&name, "only pairs with x <= y are listed; the mirror is implied"));
                }
                if x == y && im != 0.0 {
                    return Err(field(&name, "diagonal entries of a Hermitian matrix are real"));
                }
                if !(re.is_finite() && im.is_finite()) {
                    return Err(field(&name, "value must be finite"));
                }
                let reach = profile.upper_reach(x);
                if (y - x) as f64 > reach {
                    return Err(SpecError::OutOfBand { x, y, offset: y - x, reach });
                }
                if map.insert((x, y), Complex64::new(re, im)).is_some() {
                    return Err(field(&name, format!("duplicate entry ({x}, {y})")));
                }
            }
            Family::Explicit(map)
        }
        other => return Err(field("family", format!("unknown family `{other}`"))),
    };
    if raw.entries.is_some() && raw.family != "explicit" {
        return Err(field("entries", "only the explicit family takes entries"));
    }
    Ok(OperatorSpec::new(profile, family))
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<OperatorSpec, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    parse_spec(&text)
}

/// File representation of a spec built from a serializable family.
pub fn emit_spec(spec: &OperatorSpec) -> Result<Value, SpecError> {
    let p = spec.profile();
    let profile = json!({"n": p.n(), "gamma": p.gamma()});
    Ok(match spec.family() {
        Family::Counterexample { growth_exponent } => {
            json!({"profile": profile, "family": "counterexample", "params": {"delta": growth_exponent}})
        }
        Family::PolyGrowthBand { beta, scale } => {
            json!({"profile": profile, "family": "poly_growth_band", "params": {"beta": beta, "scale": scale}})
        }
        Family::BoundedTest => json!({"profile": profile, "family": "bounded_test", "params": {}}),
        Family::Diagonal(DiagonalValues::Constant(v)) => {
            json!({"profile": profile, "family": "diagonal", "params": {"value": v}})
        }
        Family::Explicit(map) if map.is_empty() => json!({"profile": profile, "family": "zero", "params": {}}),
        Family::Explicit(map) => {
            let mut entries = Vec::with_capacity(map.len());
            for (&(x, y), v) in map {
                let (x, y, v) = if x <= y { (x, y, *v) } else { (y, x, v.conj()) };
                entries.push(json!([x, y, v.re, v.im]));
            }
            json!({"profile": profile, "family": "explicit", "entries": entries})
        }
        _ => return Err(SpecError::Unserializable(spec.family_name())),
    })
}

/// Hex SHA-256 of the canonical JSON form (sorted keys).
pub fn spec_digest(spec: &OperatorSpec) -> String {
    let canonical = match emit_spec(spec) {
        Ok(v) => v.to_string(),
        Err(_) => format!("{:?}", spec),
    };
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `[[x, re, im], ...]`.
pub fn parse_rhs(text: &str) -> Result<SparseVector, SpecError> {
    let list: Vec<[f64; 3]> = serde_json::from_str(text)?;
    let mut entries = Vec::with_capacity(list.len());
    for (i, [x, re, im]) in list.into_iter().enumerate() {
        let name = format!("rhs[{i}]");
        if !(re.is_finite() && im.is_finite()) {
            return Err(field(&name, "value must be finite"));
        }
        entries.push((as_index(x, &name)?, Complex64::new(re, im)));
    }
    if entries.is_empty() {
        return Err(field("rhs", "right-hand side is empty"));
    }
    Ok(SparseVector::from_entries(entries))
}

pub fn load_rhs(path: impl AsRef<Path>) -> Result<SparseVector, SpecError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    parse_rhs(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub spec_digest: Option<String>,
    pub parameters: BTreeMap<String, Value>,
    pub timestamp: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, spec: Option<&OperatorSpec>, parameters: BTreeMap<String, Value>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            command: command.into(),
            spec_digest: spec.map(spec_digest),
            parameters,
            timestamp,
            tool_version: TOOL_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Violation,
    Inconclusive,
    Error,
}

impl Status {
    /// Process exit code for a single command.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::Inconclusive => 0,
            Status::Violation => 1,
            Status::Error => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub manifest: RunManifest,
    pub status: Status,
    pub violations: Vec<String>,
    pub payload: Value,
}

impl Report {
    fn new(manifest: RunManifest, status: Status, violations: Vec<String>, payload: Value) -> Self {
        debug_assert!(status != Status::Ok || violations.is_empty());
        Self { manifest, status, violations, payload }
    }

    fn error(manifest: RunManifest, message: String) -> Self {
        Self::new(manifest, Status::Error, vec![message.clone()], json!({ "error": message }))
    }
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionParams {
    pub x_max: i64,
    pub shells: usize,
    pub k0: f64,
}

impl Default for CriterionParams {
    fn default() -> Self {
        Self { x_max: 10_000, shells: 8, k0: 3.0 }
    }
}

pub fn run_check_criterion(spec: &OperatorSpec, p: &CriterionParams) -> Report {
    let manifest = RunManifest::new(
        "check-criterion",
        Some(spec),
        params(&[("x_max", json!(p.x_max)), ("shells", json!(p.shells)), ("k0", json!(p.k0))]),
    );
    let config = CriterionConfig { k0: p.k0, ..CriterionConfig::default() };
    match estimate_limsup_with(spec, p.x_max, p.shells, &config) {
        Ok(report) => {
            let status = match report.verdict {
                Verdict::EsaThmMain | Verdict::EsaNjThreshold => Status::Ok,
                Verdict::Inconclusive => Status::Inconclusive,
            };
            let payload = serde_json::to_value(&report).expect("report serializes");
            Report::new(manifest, status, Vec::new(), payload)
        }
        Err(e) => Report::error(manifest, e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    pub shift: Shift,
    pub tol: f64,
    pub k: u32,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { shift: Shift::Plus, tol: 1e-8, k: 2 }
    }
}

/// Windowed solution as `(x, value)` pairs, returned next to the report.
pub type SolutionTable = Vec<(i64, Complex64)>;

pub fn run_solve(spec: &OperatorSpec, rhs: &SparseVector, p: &SolveParams) -> (Report, Option<SolutionTable>) {
    let rhs_list: Vec<Value> = rhs.iter().map(|(x, v)| json!([x, v.re, v.im])).collect();
    let manifest = RunManifest::new(
        "solve",
        Some(spec),
        params(&[
            ("sign", json!(p.shift.sign() as i32)),
            ("tol", json!(p.tol)),
            ("k", json!(p.k)),
            ("rhs", Value::Array(rhs_list)),
        ]),
    );
    match adaptive_resolvent(spec, rhs, p.shift, p.tol, p.k) {
        Ok(sol) => {
            let mut violations = Vec::new();
            let limit = 1e-10 * sol.certificate.rhs_norm;
            if sol.certificate.residual_norm > limit {
                violations.push(format!(
                    "residual {:e} above 1e-10 * ||g|| = {limit:e}",
                    sol.certificate.residual_norm
                ));
            }
            let status = if violations.is_empty() { Status::Ok } else { Status::Violation };
            let payload = json!({
                "converged": true,
                "certificate": sol.certificate,
                "history": sol.history,
            });
            let table = sol.window.iter().zip(sol.values.iter().copied()).collect();
            (Report::new(manifest, status, violations, payload), Some(table))
        }
        Err(ResolventError::NotConverged { steps, last, history }) => {
            let payload = json!({"converged": false, "steps": steps, "certificate": last, "history": history});
            let msg = format!("no convergence after {steps} window doublings");
            (Report::new(manifest, Status::Violation, vec![msg], payload), None)
        }
        Err(e) => (Report::error(manifest, e.to_string()), None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofParams {
    pub k: u32,
    pub delta: f64,
    pub x_max: i64,
    /// Plateau `X` for the a-priori ladder.
    pub apriori_plateau: f64,
}

impl Default for ProofParams {
    fn default() -> Self {
        Self { k: 2, delta: 0.5, x_max: 10_000, apriori_plateau: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub inequality: &'static str,
    pub status: Status,
    pub margin: Option<f64>,
    pub witness: Value,
}

fn check(name: &'static str, inequality: &'static str, ok: bool, margin: f64, witness: Value) -> BoundCheck {
    BoundCheck {
        name,
        inequality,
        status: if ok { Status::Ok } else { Status::Violation },
        margin: margin.is_finite().then_some(margin),
        witness,
    }
}

/// Unit-modulus test vector; its weighted mass sits on the transition region.
pub fn spread_vector(window: Window) -> Vec<Complex64> {
    window.iter().map(|x| Complex64::from_polar(1.0, x as f64 / 7.0)).collect()
}

/// Evaluates every inequality of the weighted estimate on `spec`.
pub fn proof_bound_checks(spec: &OperatorSpec, p: &ProofParams) -> Result<Vec<BoundCheck>, String> {
    let band = *spec.profile();
    let k = f64::from(p.k);
    let mut checks = Vec::new();

    let probe = IndexRange::symmetric(p.x_max.min(1000));
    let herm = verify_hermitian(spec, probe);
    checks.push(check(
        "hermitian",
        "a(x,y) = conj(a(y,x))",
        herm.passed(),
        f64::NAN,
        json!({"range": probe, "violations": herm.violations.iter().take(5).collect::<Vec<_>>()}),
    ));
    let bandr = verify_band(spec, probe);
    checks.push(check(
        "band",
        "a(x,x+z) = 0 for z > n<x>^gamma and a(x,x-z) = 0 for z > c_n<x>^gamma",
        bandr.passed(),
        f64::NAN,
        json!({"range": probe, "violations": bandr.violations.iter().take(5).collect::<Vec<_>>()}),
    ));

    let smallness = weighted_row_smallness(spec, k, p.delta, &SmallnessConfig::with_horizon(p.x_max))
        .map_err(|e| e.to_string())?;
    let found = smallness.found().cloned();
    checks.push(BoundCheck {
        name: "row_smallness",
        inequality: "sum_y |a_xy| |<y>^k/<x>^k - 1| < delta/(c_n+1)^(k/2) and the I2 analogue < delta/C_star^3 for |x| >= X_bar",
        status: if found.is_some() { Status::Ok } else { Status::Inconclusive },
        margin: found.as_ref().map(|f| f.margin_i1.min(f.margin_i2)),
        witness: serde_json::to_value(&smallness).expect("serializes"),
    });

    let g = SparseVector::unit(0);
    let solution = adaptive_resolvent(spec, &g, Shift::Plus, 1e-8, p.k).map_err(|e| e.to_string())?;
    let section = build_section(spec, solution.window).map_err(|e| e.to_string())?;
    let g_window = g.on_window(solution.window);

    let (plateau, cap) = match &found {
        Some(f) => (f.plateau, f.cap),
        None => (p.apriori_plateau, 10.0 * p.apriori_plateau),
    };
    let weight = WeightProfile::new(k, plateau, cap).map_err(|e| e.to_string())?;
    let gauge = gauge_constants(&weight, &band);
    checks.push(check(
        "gauge",
        "<x>^k / t_x <= (c_n+1)^(k/2) for X_bar <= |x| <= Y_bar",
        gauge.gauge_holds(),
        gauge.c_n_plus_one_pow - gauge.gauge_ratio,
        serde_json::to_value(&gauge).expect("serializes"),
    ));

    let reach = gauge.y_bar + band.lower_reach(gauge.y_bar.ceil() as i64);
    let lip_radius = (reach.ceil() as i64).min(4 * p.x_max);
    let lip = check_weight_lipschitz(
        &weight,
        Window::new(-lip_radius, lip_radius).expect("nonempty"),
        band.lower_width(lip_radius),
    );
    checks.push(check(
        "weight_lipschitz",
        "|t_x - t_y| <= |<x>^k - <y>^k|",
        lip.violations.is_empty(),
        lip.min_slack,
        json!({"pairs_checked": lip.pairs_checked, "violations": lip.violations.iter().take(5).collect::<Vec<_>>()}),
    ));

    let split = commutator_split(&section, &solution.values, &weight, &band, p.delta).map_err(|e| e.to_string())?;
    checks.push(check(
        "commutator_young",
        "|<Tf,[T,A]f>| <= I1 + I2",
        split.young_bound_holds(1e-10),
        (split.i1 + split.i2 - split.direct_form.norm()) / split.term_magnitude.max(f64::MIN_POSITIVE),
        serde_json::to_value(&split).expect("serializes"),
    ));
    checks.push(check(
        "commutator_assembly",
        "sum_x sum_y a_yx (t_x - t_y) t_x f_x conj(f_y) = <Tf, TAf - ATf>",
        split.assembly_gap() <= 1e-10,
        1e-10 - split.assembly_gap(),
        json!({"relative_gap": split.assembly_gap()}),
    ));
    let sym_rel = split.symmetric_gap();
    checks.push(check(
        "symmetric_cancellation",
        "Re(i <Tf, A Tf>) = 0",
        sym_rel <= 1e-10,
        1e-10 - sym_rel,
        json!({"relative": sym_rel}),
    ));
    let energy = energy_identity_residual(&section, Shift::Plus, &solution.values, &g_window, &weight)
        .map_err(|e| e.to_string())?;
    checks.push(check(
        "energy_identity",
        "||Tf||^2 - Im<Tf,[T,A]f> = Re<Tf,Tg>",
        energy <= 1e-8,
        1e-8 - energy,
        json!({"relative_residual": energy}),
    ));

    if let Some(f) = &found {
        let radius = (f.y_bar + band.lower_reach(f.y_bar.ceil() as i64)).ceil() as i64 + 1;
        let window = Window::new(-radius, radius).expect("nonempty");
        let wide = build_section(spec, window).map_err(|e| e.to_string())?;
        let spread = spread_vector(window);
        for (label, sec, vec) in [("solution", &section, &solution.values), ("spread", &wide, &spread)] {
            let s = commutator_split(sec, vec, &weight, &band, p.delta).map_err(|e| e.to_string())?;
            let (n1, n2) = match label {
                "solution" => ("i1_bound_solution", "i2_bound_solution"),
                _ => ("i1_bound_spread", "i2_bound_spread"),
            };
            let half = 0.5 * p.delta * s.weighted_norm_sq;
            checks.push(check(
                n1,
                "I1 <= delta/2 ||Tf||^2",
                s.i1_bound_holds(1e-12),
                (half - s.i1) / s.weighted_norm_sq,
                json!({"i1": s.i1, "weighted_norm_sq": s.weighted_norm_sq, "window": sec.window()}),
            ));
            checks.push(check(
                n2,
                "I2 <= delta/2 ||Tf||^2",
                s.i2_bound_holds(1e-12),
                (half - s.i2) / s.weighted_norm_sq,
                json!({"i2": s.i2, "weighted_norm_sq": s.weighted_norm_sq, "window": sec.window()}),
            ));
        }
    }

    let mut caps = Vec::new();
    let mut cap = 100.0;
    while cap <= p.x_max as f64 {
        if cap > p.apriori_plateau {
            caps.push(cap);
        }
        cap *= 10.0;
    }
    if !caps.is_empty() {
        let apriori = apriori_bound_check(solution.window, &solution.values, &g, k, p.apriori_plateau, p.delta, &caps)
            .map_err(|e| e.to_string())?;
        checks.push(check(
            "apriori_bound",
            "||Tf|| <= ||Tg|| / (1 - delta)",
            apriori.passed(),
            1.0 / (1.0 - p.delta) - apriori.worst_ratio(),
            serde_json::to_value(&apriori).expect("serializes"),
        ));
    }

    if band.gamma() == 0.0 {
        let sweep = bracket_ratio_sweep(band.n(), 3.0, p.x_max.min(100_000));
        checks.push(check(
            "bracket_ratio",
            "|(<x+m>/<x>)^k0 - 1| <= 3 k0 n / <x> for |m| <= n",
            sweep.passed(),
            sweep.constant - sweep.required,
            serde_json::to_value(&sweep).expect("serializes"),
        ));
    }
    Ok(checks)
}

pub fn run_verify_proof_bounds(spec: &OperatorSpec, p: &ProofParams) -> Report {
    let manifest = RunManifest::new(
        "verify-proof-bounds",
        Some(spec),
        params(&[
            ("k", json!(p.k)),
            ("delta", json!(p.delta)),
            ("x_max", json!(p.x_max)),
            ("apriori_plateau", json!(p.apriori_plateau)),
        ]),
    );
    match proof_bound_checks(spec, p) {
        Ok(checks) => {
            let violations: Vec<String> = checks
                .iter()
                .filter(|c| c.status == Status::Violation)
                .map(|c| format!("{}: {}", c.name, c.inequality))
                .collect();
            let status = if !violations.is_empty() {
                Status::Violation
            } else if checks.iter().any(|c| c.status == Status::Inconclusive) {
                Status::Inconclusive
            } else {
                Status::Ok
            };
            Report::new(manifest, status, violations, json!({ "checks": checks }))
        }
        Err(e) => Report::error(manifest, e),
    }
}

pub fn run_probe_deficiency(spec: &OperatorSpec, x_max: i64) -> Report {
    let manifest = RunManifest::new("probe-deficiency", Some(spec), params(&[("x_max", json!(x_max))]));
    match classify_deficiency(spec, x_max) {
        Ok(r) => {
            let (status, violations) = match r.esa_consistent {
                Some(true) => (Status::Ok, Vec::new()),
                Some(false) => (
                    Status::Violation,
                    vec!["square-summable defect solutions: not essentially self-adjoint".to_string()],
                ),
                None => (Status::Inconclusive, Vec::new()),
            };
            let payload = json!({
                "exponent": r.plus.exponent,
                "partial_sum_tail": r.plus.partial_sum_tail,
                "classification": r.plus.classification,
                "deficiency_estimate": r.deficiency_estimate,
                "esa_consistent": r.esa_consistent,
                "shifts": [r.plus, r.minus],
            });
            Report::new(manifest, status, violations, payload)
        }
        Err(e) => Report::error(manifest, e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteCommand {
    Criterion,
    Solve,
    ProofBounds,
    Deficiency,
}

impl SuiteCommand {
    pub const ALL: [SuiteCommand; 4] = [Self::Criterion, Self::Solve, Self::ProofBounds, Self::Deficiency];

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "criterion" => Some(Self::Criterion),
            "solve" => Some(Self::Solve),
            "proof-bounds" => Some(Self::ProofBounds),
            "deficiency" => Some(Self::Deficiency),
            _ => None,
        }
    }
}

/// Bundled fixture specs, keyed by file stem.
pub const FIXTURES: [(&str, &str); 5] = [
    ("poly_growth_band", include_str!("../fixtures/poly_growth_band.json")),
    ("counterexample", include_str!("../fixtures/counterexample.json")),
    ("bounded_test", include_str!("../fixtures/bounded_test.json")),
    ("diagonal", include_str!("../fixtures/diagonal.json")),
    ("tridiagonal", include_str!("../fixtures/tridiagonal.json")),
];

pub fn fixture(name: &str) -> Option<OperatorSpec> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_spec(text).expect("bundled fixtures parse"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteItem {
    pub command: SuiteCommand,
    pub fixture: String,
    pub expected: Status,
    pub status: Status,
    pub matches: bool,
    pub seconds: f64,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub manifest: RunManifest,
    pub status: Status,
    pub items: Vec<SuiteItem>,
}

impl SuiteReport {
    /// 0 when every item reached its expected status.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Error => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SuiteError {
    #[error("no commands selected")]
    Empty,
}

struct Planned {
    command: SuiteCommand,
    fixture: String,
    expected: Status,
    run: Box<dyn Fn() -> Report + Send + Sync>,
}

fn plan(command: SuiteCommand) -> Vec<Planned> {
    let mut out: Vec<Planned> = Vec::new();
    let mut add = |fixture: &str, expected: Status, run: Box<dyn Fn() -> Report + Send + Sync>| {
        out.push(Planned { command, fixture: fixture.to_string(), expected, run });
    };
    match command {
        SuiteCommand::Criterion => {
            for (name, expected) in [
                ("poly_growth_band", Status::Ok),
                ("counterexample", Status::Inconclusive),
                ("bounded_test", Status::Ok),
            ] {
                let spec = fixture(name).expect("fixture");
                add(name, expected, Box::new(move || run_check_criterion(&spec, &CriterionParams::default())));
            }
        }
        SuiteCommand::Solve => {
            for name in ["poly_growth_band", "diagonal", "tridiagonal"] {
                let spec = fixture(name).expect("fixture");
                let rhs = if name == "diagonal" {
                    SparseVector::from_entries([(0, Complex64::new(1.0, 0.0)), (5, Complex64::new(1.0, 0.0))])
                } else {
                    SparseVector::unit(0)
                };
                add(name, Status::Ok, Box::new(move || run_solve(&spec, &rhs, &SolveParams::default()).0));
            }
        }
        SuiteCommand::ProofBounds => {
            let spec = fixture("poly_growth_band").expect("fixture");
            let params = ProofParams { k: 1, ..ProofParams::default() };
            add("poly_growth_band", Status::Ok, Box::new(move || run_verify_proof_bounds(&spec, &params)));
            let spec = fixture("counterexample").expect("fixture");
            add(
                "counterexample",
                Status::Inconclusive,
                Box::new(move || run_verify_proof_bounds(&spec, &ProofParams::default())),
            );
        }
        SuiteCommand::Deficiency => {
            for (delta, expected) in [(1.5, Status::Violation), (0.5, Status::Ok), (1.0, Status::Inconclusive)] {
                let spec = OperatorSpec::counterexample(delta);
                add(&format!("counterexample(delta={delta})"), expected, Box::new(move || run_probe_deficiency(&spec, 10_000)));
            }
        }
    }
    out
}

/// Runs the selected commands over the bundled fixtures and compares each
/// status with its expected value.
pub fn run_suite(commands: &[SuiteCommand]) -> Result<SuiteReport, SuiteError> {
    use rayon::prelude::*;
    if commands.is_empty() {
        return Err(SuiteError::Empty);
    }
    let mut selected = commands.to_vec();
    selected.sort();
    selected.dedup();
    let manifest = RunManifest::new(
        "run-suite",
        None,
        params(&[("commands", serde_json::to_value(&selected).expect("serializes"))]),
    );
    let planned: Vec<Planned> = selected.iter().flat_map(|c| plan(*c)).collect();
    let items: Vec<SuiteItem> = planned
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let report = (p.run)();
            SuiteItem {
                command: p.command,
                fixture: p.fixture.clone(),
                expected: p.expected,
                status: report.status,
                matches: report.status == p.expected,
                seconds: start.elapsed().as_secs_f64(),
                report,
            }
        })
        .collect();
    let status = if items.iter().all(|i| i.matches) {
        Status::Ok
    } else if items.iter().any(|i| i.status == Status::Error) {
        Status::Error
    } else {
        Status::Violation
    };
    Ok(SuiteReport { manifest, status, items })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_counterexample() {
        let spec = parse_spec(r#"{"profile":{"n":1,"gamma":0.0},"family":"counterexample","params":{"delta":1.5}}"#)
            .unwrap();
        assert_eq!(spec.family_name(), "counterexample");
        assert_eq!(spec.entry(4, 5).re, 8.0);
    }

    #[test]
    fn rejects_gamma_one() {
        let err = parse_spec(r#"{"profile":{"n":1,"gamma":1.0},"family":"counterexample","params":{"delta":1.5}}"#)
            .unwrap_err();
        assert!(matches!(&err, SpecError::Field { field, .. } if field == "profile.gamma"), "{err}");
    }

    #[test]
    fn rejects_out_of_band_entry() {
        let err = parse_spec(r#"{"profile":{"n":1,"gamma":0.0},"family":"explicit","entries":[[0,5,1.0,0.0]]}"#)
            .unwrap_err();
        assert!(matches!(err, SpecError::OutOfBand { x: 0, y: 5, offset: 5, .. }));
    }

    #[test]
    fn schema_errors_name_fields() {
        let cases = [
            (r#"{"family":"zero"}"#, "profile"),
            (r#"{"profile":{"n":0,"gamma":0.0},"family":"zero"}"#, "profile.n"),
            (r#"{"profile":{"n":1,"gamma":0.0},"family":"counterexample"}"#, "params.delta"),
            (r#"{"profile":{"n":1,"gamma":0.0},"family":"nope"}"#, "family"),
            (r#"{"profile":{"n":1,"gamma":0.0},"family":"explicit","entries":[[1,0,1.0,0.0]]}"#, "entries[0]"),
            (r#"{"profile":{"n":1,"gamma":0.0},"family":"explicit","entries":[[1,1,1.0,2.0]]}"#, "entries[0]"),
            (r#"{"profile":{"n":1,"gamma":0.0},"family":"explicit","entries":[[0.5,1,1.0,0.0]]}"#, "entries[0]"),
            (r#"{"profile":{"n":1,"gamma":0.0},"family":"explicit"}"#, "entries"),
        ];
        for (text, name) in cases {
            let err = parse_spec(text).unwrap_err().to_string();
            assert!(err.contains(name), "{text}: {err}");
        }
    }

    #[test]
    fn rhs_parsing() {
        let g = parse_rhs("[[0, 1.0, 0.0], [3, 0.5, -0.5]]").unwrap();
        assert_eq!(g.get(3), Complex64::new(0.5, -0.5));
        assert!(parse_rhs("[]").is_err());
        assert!(parse_rhs("[[0.5, 1.0, 0.0]]").is_err());
    }

    #[test]
    fn fixtures_load() {
        for (name, _) in FIXTURES {
            assert!(fixture(name).is_some());
        }
    }

    #[test]
    fn digest_is_stable() {
        let a = fixture("poly_growth_band").unwrap();
        let b = OperatorSpec::poly_growth_band(1, 0.5, -0.2, 1.0).unwrap();
        assert_eq!(spec_digest(&a), spec_digest(&b));
        assert_ne!(spec_digest(&a), spec_digest(&OperatorSpec::counterexample(1.5)));
        assert_eq!(spec_digest(&a).len(), 64);
    }

    #[test]
    fn empty_suite_is_an_error() {
        assert_eq!(run_suite(&[]).unwrap_err(), SuiteError::Empty);
        assert_eq!(SuiteError::Empty.to_string(), "no commands selected");
    }

    #[test]
    fn unserializable_family() {
        let spec = OperatorSpec::diagonal_fn(|x| x as f64);
        assert!(matches!(emit_spec(&spec), Err(SpecError::Unserializable("diagonal"))));
    }
}
