use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fem::{SolverOptions, SymMatrix};
use crate::mesh::build_mesh;
use crate::scenarios::{Placement, PeriodicPattern, RadiusSchedule};
use crate::shape::ShapeExpr;

/// One experiment: a mesh, a scenario, an index schedule and the set-function
/// checks to run on named regions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mesh: MeshSpec,
    pub scenario: ScenarioSpec,
    /// Strictly increasing index schedule `k`.
    pub indices: Vec<usize>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub envelopes: Vec<EnvelopeSpec>,
    #[serde(default)]
    pub additivity: Vec<AdditivitySpec>,
    #[serde(default)]
    pub scans: Vec<ScanSpec>,
    #[serde(default)]
    pub sampled_audit: Option<SampledAuditSpec>,
    #[serde(default)]
    pub tail_window: Option<usize>,
    #[serde(default = "default_tau")]
    pub tau_spread: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_tau() -> f64 {
    0.05
}

fn default_tol() -> f64 {
    0.02
}

fn default_one() -> f64 {
    1.0
}

fn default_cells() -> usize {
    64
}

fn default_min_cells() -> f64 {
    8.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub dimension: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub resolution: Vec<usize>,
}

/// A scalar `a` (meaning `a·I`) or the upper triangle `[a11, a12, a22]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Scalar(f64),
    Matrix([f64; 3]),
}

impl CoefficientSpec {
    pub fn matrix(&self, dim: usize) -> Result<SymMatrix<f64>, String> {
        let m = match (*self, dim) {
            (CoefficientSpec::Scalar(a), _) => SymMatrix::scalar(dim, a),
            (CoefficientSpec::Matrix([a, b, c]), 2) => SymMatrix::new_2d(a, b, c),
            (CoefficientSpec::Matrix(_), _) => return Err("a 2x2 coefficient needs a 2D mesh".into()),
        };
        let (lo, hi) = m.eigen_bounds();
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(format!("coefficient must be positive definite, eigenvalues [{lo}, {hi}]"));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSpec {
    pub x0: [f64; 2],
    pub inward_normal: [f64; 2],
    pub u0: ShapeExpr<f64>,
    pub outer_radius: f64,
    #[serde(default = "dyadic")]
    pub schedule: RadiusSchedule,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default = "default_min_cells")]
    pub min_cells_per_radius: f64,
}

fn dyadic() -> RadiusSchedule {
    RadiusSchedule::Dyadic
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    ControlStrong {
        coefficient: CoefficientSpec,
        #[serde(default = "default_one")]
        density: f64,
    },
    #[serde(rename = "oscillation_1d")]
    Oscillation1d {
        #[serde(default = "default_one")]
        amplitude: f64,
    },
    PointwiseControl {
        base: f64,
        #[serde(default = "default_one")]
        amplitude: f64,
    },
    Concentration(ConcentrationSpec),
    TrapSet(ConcentrationSpec),
    Homogenization {
        pattern: PeriodicPattern,
        #[serde(default = "default_cells")]
        cell_resolution: usize,
        #[serde(default = "default_one")]
        density: f64,
    },
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::ControlStrong { .. } => "control_strong",
            ScenarioSpec::Oscillation1d { .. } => "oscillation_1d",
            ScenarioSpec::PointwiseControl { .. } => "pointwise_control",
            ScenarioSpec::Concentration(_) => "concentration",
            ScenarioSpec::TrapSet(_) => "trap_set",
            ScenarioSpec::Homogenization { .. } => "homogenization",
        }
    }

    fn dimension(&self) -> Option<usize> {
        match self {
            ScenarioSpec::Oscillation1d { .. } | ScenarioSpec::PointwiseControl { .. } => Some(1),
            ScenarioSpec::Concentration(_) | ScenarioSpec::TrapSet(_) => Some(2),
            ScenarioSpec::ControlStrong { .. } | ScenarioSpec::Homogenization { .. } => None,
        }
    }

    /// Whether the scenario obeys the oscillation resolution rule `h ≤ 1/(16k)`.
    fn has_resolution_rule(&self) -> bool {
        matches!(
            self,
            ScenarioSpec::Oscillation1d { .. } | ScenarioSpec::PointwiseControl { .. } | ScenarioSpec::Homogenization { .. }
        )
    }
}

/// A named region: either a shape expression or, for the trap-set scenario,
/// the derived trap region `Ω ∖ C`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    #[serde(default)]
    pub shape: Option<ShapeExpr<f64>>,
    #[serde(default)]
    pub trap_set: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub target: String,
    /// Strictly decreasing erosion margins, at least three.
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdditivitySpec {
    Superadditivity {
        v: String,
        w: String,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Subadditivity {
        v_inner: String,
        v: String,
        w: String,
        margin: f64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub label: String,
    pub members: Vec<ScanMember>,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanMember {
    pub t: f64,
    pub region: String,
}

/// Randomly drawn `(V, W)` and `(V′, V, W)` box configurations, seeded by
/// the experiment seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledAuditSpec {
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathSeg {
    Key(String),
    Index(usize),
}

/// A single validation finding with the offending field and, when it can be
/// located in the source text, its line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn render_path(path: &[PathSeg]) -> String {
    let mut out = String::new();
    for seg in path {
        match seg {
            PathSeg::Key(k) => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            PathSeg::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    if out.is_empty() {
        out.push_str("<root>");
    }
    out
}

struct Collector<'a> {
    text: &'a str,
    issues: Vec<ConfigIssue>,
}

impl Collector<'_> {
    fn push(&mut self, path: Vec<PathSeg>, message: impl Into<String>) {
        let line = locate(self.text, &path).map(|off| line_of(self.text, off));
        self.issues.push(ConfigIssue { field: render_path(&path), line, message: message.into() });
    }
}

fn key(k: &str) -> PathSeg {
    PathSeg::Key(k.to_string())
}

/// Parses a configuration and returns it together with every validation
/// issue found. A syntax or schema error yields no config and one issue.
pub fn parse_config(text: &str, allow_aliasing: bool) -> (Option<ExperimentConfig>, Vec<ConfigIssue>) {
    let config: ExperimentConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => {
            let issue = ConfigIssue {
                field: schema_field(&e.to_string()),
                line: Some(e.line()),
                message: e.to_string(),
            };
            return (None, vec![issue]);
        }
    };
    let mut c = Collector { text, issues: Vec::new() };
    check(&config, allow_aliasing, &mut c);
    (Some(config), c.issues)
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path, allow_aliasing: bool) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![ConfigIssue { field: "<file>".into(), line: None, message: format!("cannot read {}: {e}", path.display()) }]
    })?;
    match parse_config(&text, allow_aliasing) {
        (Some(c), issues) if issues.is_empty() => Ok(c),
        (_, issues) => Err(issues),
    }
}

/// Exhaustive list of issues in a configuration file; empty iff valid.
pub fn validate_config(path: &Path) -> Vec<ConfigIssue> {
    match load_config(path, false) {
        Ok(_) => Vec::new(),
        Err(issues) => issues,
    }
}

fn schema_field(msg: &str) -> String {
    for marker in ["missing field `", "unknown field `", "unknown variant `"] {
        if let Some(start) = msg.find(marker) {
            let rest = &msg[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "<schema>".into()
}

fn check(cfg: &ExperimentConfig, allow_aliasing: bool, c: &mut Collector<'_>) {
    if cfg.name.trim().is_empty() {
        c.push(vec![key("name")], "must not be empty");
    }
    let dim = cfg.mesh.dimension;
    let mesh_ok = check_mesh(&cfg.mesh, c);

    if cfg.indices.is_empty() {
        c.push(vec![key("indices")], "schedule must not be empty");
    }
    if cfg.indices.first() == Some(&0) {
        c.push(vec![key("indices"), PathSeg::Index(0)], "indices start at 1");
    }
    for (i, w) in cfg.indices.windows(2).enumerate() {
        if w[1] <= w[0] {
            c.push(
                vec![key("indices"), PathSeg::Index(i + 1)],
                format!("schedule must be strictly increasing, {} follows {}", w[1], w[0]),
            );
        }
    }
    if let Some(w) = cfg.tail_window {
        if w == 0 || w > cfg.indices.len() {
            c.push(vec![key("tail_window")], format!("must lie in 1..={}, got {w}", cfg.indices.len()));
        }
    }
    if !(cfg.tau_spread > 0.0 && cfg.tau_spread.is_finite()) {
        c.push(vec![key("tau_spread")], "must be positive and finite");
    }
    if let Err(e) = cfg.solver.validate() {
        c.push(vec![key("solver")], e.to_string());
    }

    check_scenario(cfg, mesh_ok, allow_aliasing, c);

    let mut names = BTreeSet::new();
    let trap = matches!(cfg.scenario, ScenarioSpec::TrapSet(_));
    for (i, r) in cfg.regions.iter().enumerate() {
        let at = |k: &str| vec![key("regions"), PathSeg::Index(i), key(k)];
        if r.name.trim().is_empty() {
            c.push(at("name"), "region name must not be empty");
        } else if !names.insert(r.name.as_str()) {
            c.push(at("name"), format!("duplicate region name `{}`", r.name));
        }
        match (&r.shape, r.trap_set) {
            (Some(_), true) | (None, false) => {
                c.push(vec![key("regions"), PathSeg::Index(i)], "give exactly one of `shape` or `trap_set: true`")
            }
            (Some(s), false) => {
                if let Err(e) = s.check_dimension(dim) {
                    c.push(at("shape"), e);
                }
            }
            (None, true) if !trap => c.push(at("trap_set"), "trap_set regions need the trap_set scenario"),
            (None, true) => {}
        }
    }
    let missing = |name: &str| !names.contains(name);

    for (i, e) in cfg.envelopes.iter().enumerate() {
        let at = |k: &str| vec![key("envelopes"), PathSeg::Index(i), key(k)];
        if missing(&e.target) {
            c.push(at("target"), format!("missing region reference `{}`", e.target));
        }
        if e.margins.len() < 3 {
            c.push(at("margins"), format!("need at least 3 margins, got {}", e.margins.len()));
        }
        if e.margins.iter().any(|&m| !(m > 0.0)) || e.margins.windows(2).any(|w| w[0] <= w[1]) {
            c.push(at("margins"), "margins must be positive and strictly decreasing");
        }
    }
    for (i, a) in cfg.additivity.iter().enumerate() {
        let at = |k: &str| vec![key("additivity"), PathSeg::Index(i), key(k)];
        let (refs, tol, margin): (Vec<(&str, &String)>, f64, Option<f64>) = match a {
            AdditivitySpec::Superadditivity { v, w, tol } => (vec![("v", v), ("w", w)], *tol, None),
            AdditivitySpec::Subadditivity { v_inner, v, w, margin, tol } => {
                (vec![("v_inner", v_inner), ("v", v), ("w", w)], *tol, Some(*margin))
            }
        };
        for (field, name) in refs {
            if missing(name) {
                c.push(at(field), format!("missing region reference `{name}`"));
            }
        }
        if !(tol >= 0.0 && tol.is_finite()) {
            c.push(at("tol"), "must be non-negative and finite");
        }
        if let Some(m) = margin {
            if !(m >= 0.0 && m.is_finite()) {
                c.push(at("margin"), "must be non-negative and finite");
            }
        }
    }
    for (i, s) in cfg.scans.iter().enumerate() {
        let at = |k: &str| vec![key("scans"), PathSeg::Index(i), key(k)];
        if s.members.len() < 2 {
            c.push(at("members"), "a scan needs at least 2 members");
        }
        for (j, m) in s.members.iter().enumerate() {
            if missing(&m.region) {
                c.push(
                    vec![key("scans"), PathSeg::Index(i), key("members"), PathSeg::Index(j), key("region")],
                    format!("missing region reference `{}`", m.region),
                );
            }
        }
        if !(s.margin >= 0.0 && s.margin.is_finite()) {
            c.push(at("margin"), "must be non-negative and finite");
        }
    }
    if let Some(a) = &cfg.sampled_audit {
        if a.samples == 0 {
            c.push(vec![key("sampled_audit"), key("samples")], "must be positive");
        }
        if !(a.tol >= 0.0 && a.tol.is_finite()) {
            c.push(vec![key("sampled_audit"), key("tol")], "must be non-negative and finite");
        }
    }
}

fn check_mesh(m: &MeshSpec, c: &mut Collector<'_>) -> bool {
    let at = |k: &str| vec![key("mesh"), key(k)];
    let mut ok = true;
    if !(1..=2).contains(&m.dimension) {
        c.push(at("dimension"), format!("must be 1 or 2, got {}", m.dimension));
        return false;
    }
    if m.bounds.len() != m.dimension {
        c.push(at("box"), format!("needs {} intervals, got {}", m.dimension, m.bounds.len()));
        ok = false;
    }
    if m.resolution.len() != m.dimension {
        c.push(at("resolution"), format!("needs {} entries, got {}", m.dimension, m.resolution.len()));
        ok = false;
    }
    if ok {
        let bounds: Vec<(f64, f64)> = m.bounds.iter().map(|b| (b[0], b[1])).collect();
        if let Err(e) = build_mesh::<f64>(m.dimension, &bounds, &m.resolution) {
            c.push(vec![key("mesh")], e.to_string());
            ok = false;
        }
    }
    ok
}

fn check_scenario(cfg: &ExperimentConfig, mesh_ok: bool, allow_aliasing: bool, c: &mut Collector<'_>) {
    let dim = cfg.mesh.dimension;
    let at = |k: &str| vec![key("scenario"), key(k)];
    if let Some(need) = cfg.scenario.dimension() {
        if need != dim {
            c.push(at("name"), format!("{} needs a {need}D mesh, got {dim}D", cfg.scenario.name()));
        }
    }
    match &cfg.scenario {
        ScenarioSpec::ControlStrong { coefficient, density } => {
            if let Err(e) = coefficient.matrix(dim) {
                c.push(at("coefficient"), e);
            }
            if !density.is_finite() {
                c.push(at("density"), "must be finite");
            }
        }
        ScenarioSpec::Oscillation1d { amplitude } => {
            if !amplitude.is_finite() {
                c.push(at("amplitude"), "must be finite");
            }
        }
        ScenarioSpec::PointwiseControl { base, amplitude } => {
            if !(*base > 0.0 && base.is_finite()) {
                c.push(at("base"), "must be positive and finite");
            }
            if !amplitude.is_finite() {
                c.push(at("amplitude"), "must be finite");
            }
        }
        ScenarioSpec::Concentration(p) | ScenarioSpec::TrapSet(p) => {
            if !(p.outer_radius > 0.0) {
                c.push(at("outer_radius"), "must be positive");
            }
            if p.inward_normal.iter().all(|&v| v == 0.0) {
                c.push(at("inward_normal"), "must be non-zero");
            }
            if let Err(e) = p.u0.check_dimension(2) {
                c.push(at("u0"), e);
            }
            if !(p.min_cells_per_radius > 0.0) {
                c.push(at("min_cells_per_radius"), "must be positive");
            }
            let valid_schedule = match &p.schedule {
                RadiusSchedule::Dyadic => true,
                RadiusSchedule::Geometric { first, ratio } => *first > 0.0 && *ratio > 0.0 && *ratio < 1.0,
                RadiusSchedule::Explicit { radii } => {
                    radii.iter().all(|&r| r > 0.0) && radii.windows(2).all(|w| w[0] > w[1])
                }
            };
            if !valid_schedule {
                c.push(at("schedule"), "radius schedule must be positive and strictly decreasing");
            }
            if mesh_ok && dim == 2 {
                let b = &cfg.mesh.bounds;
                let inside = (0..2).all(|a| p.x0[a] - 2.0 * p.outer_radius > b[a][0] && p.x0[a] + 2.0 * p.outer_radius < b[a][1]);
                if !inside {
                    c.push(at("outer_radius"), "B(x0, 2R) must lie inside the mesh box");
                }
            }
        }
        ScenarioSpec::Homogenization { pattern, cell_resolution, density } => {
            if let Err(e) = pattern.validate(dim) {
                c.push(at("pattern"), e.to_string());
            }
            if *cell_resolution < 16 {
                c.push(at("cell_resolution"), format!("must be at least 16, got {cell_resolution}"));
            }
            if !density.is_finite() {
                c.push(at("density"), "must be finite");
            }
        }
    }
    if cfg.scenario.has_resolution_rule() && mesh_ok && !allow_aliasing {
        let m = &cfg.mesh;
        let h = (0..m.dimension)
            .map(|a| (m.bounds[a][1] - m.bounds[a][0]) / m.resolution[a] as f64)
            .fold(0.0, f64::max);
        for (i, &k) in cfg.indices.iter().enumerate() {
            let limit = 1.0 / (16.0 * k as f64);
            if k > 0 && h > limit * (1.0 + 1e-12) {
                c.push(
                    vec![key("indices"), PathSeg::Index(i)],
                    format!("resolution rule: k = {k} needs h <= {limit:.6e}, mesh has h = {h:.6e} (run with --allow-aliasing to override)"),
                );
            }
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn skip_ws(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

/// End (exclusive) of the string literal starting at `i`.
fn string_end(b: &[u8], mut i: usize) -> usize {
    i += 1;
    while i < b.len() {
        match b[i] {
            b'\\' => i += 2,
            b'"' => return i + 1,
            _ => i += 1,
        }
    }
    b.len()
}

/// Offset of the value for `key` inside the object opening at `start`.
fn find_key(b: &[u8], start: usize, key: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = start;
    while i < b.len() {
        match b[i] {
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return None;
                }
            }
            b'"' => {
                let end = string_end(b, i);
                let colon = skip_ws(b, end);
                if depth == 1 && b.get(colon) == Some(&b':') && &b[i + 1..end - 1] == key.as_bytes() {
                    return Some(skip_ws(b, colon + 1));
                }
                i = end;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Offset of element `n` of the array opening at `start`.
fn find_element(b: &[u8], start: usize, n: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut seen = 0usize;
    let mut i = start;
    while i < b.len() {
        match b[i] {
            b'{' | b'[' => {
                depth += 1;
                if depth == 1 {
                    let first = skip_ws(b, i + 1);
                    if n == 0 && b.get(first) != Some(&b']') {
                        return Some(first);
                    }
                }
            }
            b'}' | b']' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return None;
                }
            }
            b',' if depth == 1 => {
                seen += 1;
                if seen == n {
                    return Some(skip_ws(b, i + 1));
                }
            }
            b'"' => {
                i = string_end(b, i);
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Byte offset of the deepest locatable prefix of `path` in `text`.
pub fn locate(text: &str, path: &[PathSeg]) -> Option<usize> {
    let b = text.as_bytes();
    let mut pos = skip_ws(b, 0);
    let mut found = None;
    for seg in path {
        let next = match (b.get(pos), seg) {
            (Some(b'{'), PathSeg::Key(k)) => find_key(b, pos, k),
            (Some(b'['), PathSeg::Index(n)) => find_element(b, pos, *n),
            _ => None,
        };
        match next {
            Some(p) => {
                pos = p;
                found = Some(p);
            }
            None => break,
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{
  "name": "demo",
  "mesh": { "dimension": 1, "box": [[0.0, 1.0]], "resolution": [256] },
  "scenario": { "name": "oscillation_1d", "amplitude": 1.0 },
  "indices": [4, 8, 12],
  "regions": [
    { "name": "all", "shape": "full" },
    { "name": "left", "shape": { "box": { "lower": [0.0], "upper": [0.5] } } }
  ]
}"#;

    #[test]
    fn valid_config_has_no_issues() {
        let (cfg, issues) = parse_config(VALID, false);
        assert!(issues.is_empty(), "{issues:?}");
        assert_eq!(cfg.unwrap().regions.len(), 2);
    }

    #[test]
    fn decreasing_schedule_is_named_with_line() {
        let text = VALID.replace("[4, 8, 12]", "[4, 12, 8]");
        let (_, issues) = parse_config(&text, false);
        assert_eq!(issues.len(), 1, "{issues:?}");
        assert_eq!(issues[0].field, "indices[2]");
        assert_eq!(issues[0].line, Some(5));
        assert!(issues[0].message.contains("strictly increasing"));
    }

    #[test]
    fn missing_region_reference_and_duplicates_are_all_reported() {
        let text = VALID.replace(
            r#""name": "left""#,
            r#""name": "all""#,
        )
        .replace(
            "\n  ]\n}",
            "\n  ],\n  \"envelopes\": [ { \"target\": \"nowhere\", \"margins\": [0.2, 0.1, 0.05] } ]\n}",
        );
        let (_, issues) = parse_config(&text, false);
        let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
        assert!(fields.contains(&"regions[1].name"), "{issues:?}");
        assert!(fields.contains(&"envelopes[0].target"), "{issues:?}");
        let target = issues.iter().find(|i| i.field == "envelopes[0].target").unwrap();
        assert!(target.message.contains("missing region reference `nowhere`"));
        assert_eq!(target.line, Some(10));
    }

    #[test]
    fn aliasing_is_an_issue_unless_allowed() {
        let text = VALID.replace("[256]", "[64]");
        let (_, issues) = parse_config(&text, false);
        assert_eq!(issues.len(), 2, "{issues:?}");
        assert!(parse_config(&text, true).1.is_empty());
    }

    #[test]
    fn schema_errors_carry_a_line() {
        let text = VALID.replace("\"amplitude\": 1.0", "\"amplitude\": 1.0, \"bogus\": 2");
        let (cfg, issues) = parse_config(&text, false);
        assert!(cfg.is_none());
        assert_eq!(issues[0].line, Some(4));
        let (_, issues) = parse_config("{ \"name\": \"x\" }", false);
        assert_eq!(issues[0].field, "mesh");
    }

    #[test]
    fn locator_walks_nested_arrays() {
        let text = "{\n\"a\": [\n 1,\n {\"b\": [0,\n 5]}\n]\n}";
        let path = [key("a"), PathSeg::Index(1), key("b"), PathSeg::Index(1)];
        assert_eq!(line_of(text, locate(text, &path).unwrap()), 5);
        assert_eq!(line_of(text, locate(text, &[key("a"), PathSeg::Index(7)]).unwrap()), 2);
    }
}
