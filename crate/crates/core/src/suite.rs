//! Runs check suites over zoo examples and produces a versioned report.
//!
//! Every check reduces to a single non-negative residual and a tolerance;
//! it passes when `residual <= tolerance`. Samples for one check come from
//! a seed derived from `(run seed, example, check)`, so results do not
//! depend on scheduling, and residuals aggregate by max.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{
    check_composition_axiom, check_functor_property, check_integrable, check_unit_axiom,
    pullback_connection, theta_iso_check, transport_groupoid, GroupoidConnection,
};
use crate::error::{GeomError, Result};
use crate::forms::{check_dclosure, check_groupoid_form, exterior_derivative};
use crate::groupoid::{check_groupoid_axioms, check_morita, check_morphism, concat};
use crate::principal::{
    check_atiyah_roundtrip, check_bundle_action, check_connection_form, check_curvature_two_route,
    check_flat, check_groupoid_compatibility, chern_weil, pullback_bundle,
};
use crate::sampling::{self, derive_seed};
use crate::smooth::{jacobian, jacobian_fd, SmoothMap, RANK_TOL};
use crate::zoo::{self, NamedExample, Outcome};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
/// Environment variable naming the directory for reports when no path is
/// given explicitly.
pub const REPORT_DIR_ENV: &str = "GROUPOID_REPORT_DIR";
pub const REPORT_FILE_NAME: &str = "groupoid-report.json";

/// Tolerance classes that can be overridden as a group. Checks in the
/// `rank` class compare reciprocal singular values against fixed bounds and
/// are not overridable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceClass {
    Algebraic,
    Derivative,
    Subspace,
    Rank,
}

impl fmt::Display for ToleranceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Algebraic => "algebraic",
            Self::Derivative => "derivative",
            Self::Subspace => "subspace",
            Self::Rank => "rank",
        })
    }
}

impl FromStr for ToleranceClass {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebraic" => Ok(Self::Algebraic),
            "derivative" => Ok(Self::Derivative),
            "subspace" => Ok(Self::Subspace),
            other => Err(GeomError::Config(format!(
                "unknown tolerance class '{other}' (expected algebraic, derivative or subspace)"
            ))),
        }
    }
}

/// Optional per-class tolerance overrides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassTolerances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebraic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subspace: Option<f64>,
}

impl ClassTolerances {
    pub fn get(&self, class: ToleranceClass) -> Option<f64> {
        match class {
            ToleranceClass::Algebraic => self.algebraic,
            ToleranceClass::Derivative => self.derivative,
            ToleranceClass::Subspace => self.subspace,
            ToleranceClass::Rank => None,
        }
    }

    pub fn set(&mut self, class: ToleranceClass, value: f64) -> Result<()> {
        let slot = match class {
            ToleranceClass::Algebraic => &mut self.algebraic,
            ToleranceClass::Derivative => &mut self.derivative,
            ToleranceClass::Subspace => &mut self.subspace,
            ToleranceClass::Rank => {
                return Err(GeomError::Config("the rank class has fixed bounds".into()))
            }
        };
        *slot = Some(value);
        Ok(())
    }

    /// Values set in `other` win.
    fn overlay(&self, other: &ClassTolerances) -> ClassTolerances {
        ClassTolerances {
            algebraic: other.algebraic.or(self.algebraic),
            derivative: other.derivative.or(self.derivative),
            subspace: other.subspace.or(self.subspace),
        }
    }

    fn validate(&self, context: &str) -> Result<()> {
        for (name, v) in [
            ("algebraic", self.algebraic),
            ("derivative", self.derivative),
            ("subspace", self.subspace),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(GeomError::Config(format!(
                        "{context}: tolerance {name} = {v} must be positive and finite"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parses `CLASS=VALUE`.
pub fn parse_tolerance_override(s: &str) -> Result<(ToleranceClass, f64)> {
    let (class, value) = s
        .split_once('=')
        .ok_or_else(|| GeomError::Config(format!("expected CLASS=VALUE, got '{s}'")))?;
    let class: ToleranceClass = class.trim().parse()?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| GeomError::Config(format!("tolerance '{value}' is not a number")))?;
    if !(value.is_finite() && value > 0.0) {
        return Err(GeomError::Config(format!("tolerance {value} must be positive and finite")));
    }
    Ok((class, value))
}

/// Per-example section of a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleSettings {
    pub samples: Option<usize>,
    #[serde(default)]
    pub tolerances: ClassTolerances,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Selected examples; empty means all.
    pub examples: Vec<String>,
    pub n_samples: usize,
    pub seed: u64,
    pub tolerances: ClassTolerances,
    pub per_example: BTreeMap<String, ExampleSettings>,
    pub report_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            examples: Vec::new(),
            n_samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tolerances: ClassTolerances::default(),
            per_example: BTreeMap::new(),
            report_path: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    examples: Option<Vec<String>>,
    samples: Option<usize>,
    seed: Option<u64>,
    report: Option<PathBuf>,
    #[serde(default)]
    tolerances: ClassTolerances,
    #[serde(default)]
    example: BTreeMap<String, ExampleSettings>,
}

impl RunConfig {
    /// Reads a TOML config:
    ///
    /// ```toml
    /// examples = ["pair_groupoid", "action_groupoid"]   # or "all" / omitted
    /// samples = 100
    /// seed = 42
    /// report = "report.json"
    ///
    /// [tolerances]
    /// algebraic = 1e-9
    ///
    /// [example.pair_groupoid]
    /// samples = 50
    /// tolerances = { derivative = 1e-6 }
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| GeomError::Config(format!("config: {e}")))?;
        let mut cfg = Self::default();
        if let Some(ex) = file.examples {
            cfg.examples = if ex.len() == 1 && ex[0] == "all" { Vec::new() } else { ex };
        }
        if let Some(n) = file.samples {
            cfg.n_samples = n;
        }
        if let Some(s) = file.seed {
            cfg.seed = s;
        }
        cfg.report_path = file.report;
        cfg.tolerances = file.tolerances;
        cfg.per_example = file.example;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(GeomError::Config("samples must be at least 1".into()));
        }
        self.tolerances.validate("tolerances")?;
        let known = zoo::example_names();
        for name in self.examples.iter().chain(self.per_example.keys()) {
            if !known.contains(&name.as_str()) {
                return Err(GeomError::Config(format!("unknown example '{name}'")));
            }
        }
        for (name, s) in &self.per_example {
            if s.samples == Some(0) {
                return Err(GeomError::Config(format!("example.{name}: samples must be at least 1")));
            }
            s.tolerances.validate(&format!("example.{name}"))?;
        }
        Ok(())
    }

    fn selected(&self) -> Vec<String> {
        if self.examples.is_empty() {
            zoo::example_names().into_iter().map(String::from).collect()
        } else {
            let mut names = self.examples.clone();
            names.sort();
            names.dedup();
            names
        }
    }
}

/// Where the report goes: the explicit path, else `$GROUPOID_REPORT_DIR`.
pub fn resolve_report_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(REPORT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(REPORT_FILE_NAME))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub class: ToleranceClass,
    /// `None` when the residual is not finite or the check errored.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub expected: Option<Outcome>,
    pub matches_expected: bool,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleRecord {
    pub name: String,
    pub description: String,
    pub checks: Vec<CheckRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub examples: usize,
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub expected_failures: usize,
    pub mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    pub n_samples: usize,
    pub tolerance_overrides: ClassTolerances,
    pub examples: Vec<ExampleRecord>,
    pub summary: Summary,
}

impl Report {
    pub fn all_match(&self) -> bool {
        self.summary.mismatches == 0
    }

    pub fn example(&self, name: &str) -> Option<&ExampleRecord> {
        self.examples.iter().find(|e| e.name == name)
    }

    pub fn check(&self, example: &str, check: &str) -> Option<&CheckRecord> {
        self.example(example)?.checks.iter().find(|c| c.check_name == check)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes through a temporary file in the target directory and renames
    /// it into place.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let io = |e: std::io::Error| GeomError::Config(format!("writing {}: {e}", path.display()));
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
        tmp.write_all(self.to_json().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

/// Residual and an optional note.
type CheckFn = Box<dyn Fn(usize, u64) -> Result<(f64, Option<String>)> + Send + Sync>;

/// One planned check: name, class, default tolerance and evaluation.
pub struct PlannedCheck {
    pub name: String,
    pub class: ToleranceClass,
    pub default_tolerance: f64,
    run: CheckFn,
}

impl fmt::Debug for PlannedCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlannedCheck")
            .field("name", &self.name)
            .field("class", &self.class)
            .field("default_tolerance", &self.default_tolerance)
            .finish()
    }
}

impl PlannedCheck {
    fn new<F>(name: impl Into<String>, class: ToleranceClass, default_tolerance: f64, run: F) -> Self
    where
        F: Fn(usize, u64) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            class,
            default_tolerance,
            run: Box::new(move |n, seed| run(n, seed).map(|r| (r, None))),
        }
    }

    fn with_note<F>(name: impl Into<String>, class: ToleranceClass, default_tolerance: f64, run: F) -> Self
    where
        F: Fn(usize, u64) -> Result<(f64, Option<String>)> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            class,
            default_tolerance,
            run: Box::new(run),
        }
    }

    pub fn evaluate(&self, n_samples: usize, seed: u64) -> Result<(f64, Option<String>)> {
        (self.run)(n_samples, seed)
    }
}

use ToleranceClass::{Algebraic, Derivative, Rank, Subspace};

/// Relative step of the finite-difference Jacobian oracle.
const FD_STEP: f64 = 1e-6;
/// Smallest admissible singular value of `ds` for the shipped zoo.
const SUBMERSION_BOUND: f64 = 0.1;
/// Smallest singular value of `theta` accepted as invertible.
const THETA_INVERTIBLE: f64 = 1e-6;
/// Pullback residuals may exceed the original tolerance by this factor.
pub const PULLBACK_FACTOR: f64 = 10.0;

/// `max |J - J_fd| / (1 + max |J_fd|)` of one map over sampled points.
fn ad_error(f: &SmoothMap, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let j = jacobian(f, p)?;
        let fd = jacobian_fd(f, p, FD_STEP)?;
        let err = if j.is_empty() { 0.0 } else { (&j - &fd).amax() / (1.0 + fd.amax()) };
        worst = if err.is_nan() { f64::NAN } else { worst.max(err) };
    }
    Ok(worst)
}

fn ad_jacobian_check(ex: &NamedExample, n: usize, seed: u64) -> Result<f64> {
    let g = &ex.groupoid;
    let mut rng = sampling::rng(seed);
    let mut arrows = Vec::new();
    let mut objects = Vec::new();
    let mut pairs = Vec::new();
    for _ in 0..n {
        objects.push(g.sample_object(&mut rng).as_slice().to_vec());
        arrows.push(g.sample_arrow(&mut rng).as_slice().to_vec());
        let (z, y) = g.sample_pair(&mut rng)?;
        pairs.push(concat(z.as_slice(), y.as_slice()));
    }
    let mut worst = ad_error(&g.s, &arrows)?
        .max(ad_error(&g.t, &arrows)?)
        .max(ad_error(&g.i, &arrows)?)
        .max(ad_error(&g.e, &objects)?)
        .max(ad_error(&g.m, &pairs)?);
    if let Some(c) = &ex.connection {
        if !c.frame_map().is_lifted() {
            worst = worst.max(ad_error(c.frame_map(), &arrows)?);
        }
    }
    if let Some(b) = &ex.bundle {
        let points: Vec<Vec<f64>> = arrows
            .iter()
            .map(|y| concat(y, b.sample_group_element(&mut rng).as_slice()))
            .collect();
        worst = worst.max(ad_error(b.action(), &points)?);
    }
    for m in &ex.morphisms {
        let src = &m.morphism.source;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for _ in 0..n {
            xs.push(src.sample_object(&mut rng).as_slice().to_vec());
            ys.push(src.sample_arrow(&mut rng).as_slice().to_vec());
        }
        worst = worst
            .max(ad_error(&m.morphism.phi0, &xs)?)
            .max(ad_error(&m.morphism.phi1, &ys)?);
    }
    Ok(worst)
}

/// `max |d omega|` at sampled objects; zero in top degree.
fn closedness(form: &crate::forms::DifferentialForm, g: &crate::groupoid::LieGroupoid, n: usize, seed: u64) -> Result<f64> {
    if form.degree() >= form.ambient_dim() {
        return Ok(0.0);
    }
    let d = exterior_derivative(form)?;
    let mut rng = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let x = g.sample_object(&mut rng);
        worst = worst.max(d.coefficients(x.as_slice())?.amax());
    }
    Ok(worst)
}

fn connection_checks(prefix: &str, c: &GroupoidConnection, tol_scale: f64) -> Vec<PlannedCheck> {
    let mut out = Vec::new();
    let name = |s: &str| format!("{prefix}{s}");
    let cc = c.clone();
    out.push(PlannedCheck::new(name("unit_axiom"), Subspace, 1e-8 * tol_scale, move |n, seed| {
        Ok(check_unit_axiom(&cc, n, seed)?.max())
    }));
    let cc = c.clone();
    out.push(PlannedCheck::new(name("composition_axiom"), Algebraic, 1e-8 * tol_scale, move |n, seed| {
        Ok(check_composition_axiom(&cc, n, seed)?.max())
    }));
    let cc = c.clone();
    out.push(PlannedCheck::new(name("obstruction_functor"), Algebraic, 1e-8 * tol_scale, move |n, seed| {
        Ok(check_functor_property(&cc, n, seed)?.get("obstruction").unwrap_or(0.0))
    }));
    if prefix.is_empty() {
        let cc = c.clone();
        out.push(PlannedCheck::new("obstruction_dt", Algebraic, 1e-8, move |n, seed| {
            Ok(check_functor_property(&cc, n, seed)?.get("obstruction_dt").unwrap_or(0.0))
        }));
        let cc = c.clone();
        out.push(PlannedCheck::new("integrability", Derivative, 1e-7, move |n, seed| {
            Ok(check_integrable(&cc, n, seed)?.max())
        }));
        let cc = c.clone();
        out.push(PlannedCheck::new("transport_groupoid", Algebraic, 1e-8, move |n, seed| {
            Ok(check_groupoid_axioms(&transport_groupoid(&cc), n, seed)?.residuals.max())
        }));
        let cc = c.clone();
        out.push(PlannedCheck::with_note("theta_iso", Algebraic, 1e-8, move |n, seed| {
            let rep = theta_iso_check(&cc, n, seed)?;
            let sv = rep.min_theta_singular_value;
            if sv < THETA_INVERTIBLE {
                return Ok((f64::INFINITY, Some(format!("theta is singular (min singular value {sv:.3e})"))));
            }
            Ok((rep.residuals.max(), None))
        }));
    }
    out
}

fn bundle_pullback_checks(ex: &NamedExample) -> Vec<PlannedCheck> {
    let (Some(cover), Some(b), Some(w)) = (&ex.cover, &ex.bundle, &ex.connection_form) else {
        return Vec::new();
    };
    let pulled = Arc::new(pullback_bundle(cover, b, w));
    let mut out = Vec::new();
    type Pulled = Arc<Result<(crate::principal::PrincipalGroupoidBundle, crate::principal::ConnectionForm)>>;
    let get = |p: &Pulled| -> Result<(crate::principal::PrincipalGroupoidBundle, crate::principal::ConnectionForm)> {
        match p.as_ref() {
            Ok(v) => Ok(v.clone()),
            Err(e) => Err(e.clone()),
        }
    };
    let p = pulled.clone();
    out.push(PlannedCheck::new("pullback_bundle_action", Algebraic, 1e-9 * PULLBACK_FACTOR, move |n, seed| {
        Ok(check_bundle_action(&get(&p)?.0, n, seed)?.max())
    }));
    let p = pulled.clone();
    out.push(PlannedCheck::new("pullback_connection_form", Algebraic, 1e-9 * PULLBACK_FACTOR, move |n, seed| {
        Ok(check_connection_form(&get(&p)?.1, n, seed)?.max())
    }));
    let p = pulled;
    out.push(PlannedCheck::new("pullback_compatibility", Algebraic, 1e-9 * PULLBACK_FACTOR, move |n, seed| {
        Ok(check_groupoid_compatibility(&get(&p)?.1, n, seed)?.max())
    }));
    out
}

/// Every check applicable to `ex`, in a fixed order.
pub fn plan(ex: &NamedExample) -> Vec<PlannedCheck> {
    let ex = Arc::new(ex.clone());
    let mut out = Vec::new();

    let e = ex.clone();
    out.push(PlannedCheck::new("ad_jacobian", Derivative, 1e-5, move |n, seed| {
        ad_jacobian_check(&e, n, seed)
    }));
    let e = ex.clone();
    out.push(PlannedCheck::new("groupoid_axioms", Algebraic, 1e-9, move |n, seed| {
        Ok(check_groupoid_axioms(&e.groupoid, n, seed)?.residuals.max())
    }));
    let e = ex.clone();
    out.push(PlannedCheck::with_note(
        "source_submersion",
        Rank,
        1.0 / SUBMERSION_BOUND,
        move |n, seed| {
            let sv = check_groupoid_axioms(&e.groupoid, n, seed)?.min_source_singular_value;
            Ok((1.0 / sv, Some(format!("min singular value of ds {sv:.6}"))))
        },
    ));

    if let Some(c) = &ex.connection {
        out.extend(connection_checks("", c, 1.0));
        for f in &ex.forms {
            let (cc, form) = (c.clone(), f.form.clone());
            out.push(PlannedCheck::new(
                format!("groupoid_form[{}]", f.label),
                Derivative,
                1e-7,
                move |n, seed| Ok(check_groupoid_form(&cc, &form, n, seed)?.max()),
            ));
            if f.form.degree() < f.form.ambient_dim() {
                let (cc, form) = (c.clone(), f.form.clone());
                out.push(PlannedCheck::new(
                    format!("dclosure[{}]", f.label),
                    Derivative,
                    1e-7,
                    move |n, seed| Ok(check_dclosure(&cc, &form, n, seed)?.max()),
                ));
            }
        }
    }

    if let Some(b) = &ex.bundle {
        let bb = b.clone();
        out.push(PlannedCheck::new("bundle_action", Algebraic, 1e-9, move |n, seed| {
            Ok(check_bundle_action(&bb, n, seed)?.max())
        }));
    }

    if let Some(w) = &ex.connection_form {
        let ww = w.clone();
        out.push(PlannedCheck::new("connection_form", Algebraic, 1e-9, move |n, seed| {
            Ok(check_connection_form(&ww, n, seed)?.max())
        }));
        let ww = w.clone();
        out.push(PlannedCheck::new("compatibility", Algebraic, 1e-9, move |n, seed| {
            Ok(check_groupoid_compatibility(&ww, n, seed)?.max())
        }));
        let ww = w.clone();
        out.push(PlannedCheck::new("atiyah_roundtrip", Algebraic, 1e-9, move |n, seed| {
            Ok(check_atiyah_roundtrip(&ww, n, seed)?.max())
        }));
        let ww = w.clone();
        out.push(PlannedCheck::new("curvature_two_route", Derivative, 1e-6, move |n, seed| {
            Ok(check_curvature_two_route(&ww, n, seed)?.max())
        }));
        let ww = w.clone();
        out.push(PlannedCheck::new("flatness", Derivative, 1e-8, move |n, seed| {
            Ok(check_flat(&ww, n, seed)?.max())
        }));

        if let Some(c) = &ex.connection {
            for p in &ex.chern_weil {
                let cw = chern_weil(w, &p.poly);
                let form = match cw {
                    Ok(cw) if !cw.degree_overflow => Ok(cw.form),
                    Ok(_) => Err(GeomError::Precondition(format!(
                        "2k exceeds dim X0 for {}",
                        p.label
                    ))),
                    Err(e) => Err(e),
                };
                let (f1, base) = (form.clone(), c.base.clone());
                out.push(PlannedCheck::new(
                    format!("chern_weil_closed[{}]", p.label),
                    Derivative,
                    1e-7,
                    move |n, seed| closedness(&f1.clone()?, &base, n, seed),
                ));
                let cc = c.clone();
                out.push(PlannedCheck::new(
                    format!("chern_weil_groupoid_form[{}]", p.label),
                    Derivative,
                    1e-6,
                    move |n, seed| Ok(check_groupoid_form(&cc, &form.clone()?, n, seed)?.max()),
                ));
            }
        }
    }

    for m in &ex.morphisms {
        let phi = m.morphism.clone();
        out.push(PlannedCheck::new(format!("morphism[{}]", m.label), Algebraic, 1e-9, move |n, seed| {
            Ok(check_morphism(&phi, n, seed)?.max())
        }));
        let phi = m.morphism.clone();
        out.push(PlannedCheck::with_note(
            format!("morita[{}]", m.label),
            Rank,
            1.0 / RANK_TOL,
            move |n, seed| {
                let r = check_morita(&phi, n, seed)?;
                let sv = r.min_object_singular_value.min(r.min_cartesian_singular_value);
                let note = format!(
                    "dimension defect {}, min singular values {:.3e} (objects) {:.3e} (Cartesian)",
                    r.dimension_defect, r.min_object_singular_value, r.min_cartesian_singular_value
                );
                let residual = if r.dimension_defect != 0 { f64::INFINITY } else { 1.0 / sv };
                Ok((residual, Some(note)))
            },
        ));
    }

    if let (Some(cover), Some(c)) = (&ex.cover, &ex.connection) {
        match pullback_connection(cover, c) {
            Ok(pc) => out.extend(connection_checks("pullback_", &pc, PULLBACK_FACTOR)),
            Err(e) => {
                for name in ["pullback_unit_axiom", "pullback_composition_axiom", "pullback_obstruction_functor"] {
                    let e = e.clone();
                    out.push(PlannedCheck::new(name, Algebraic, 1e-8 * PULLBACK_FACTOR, move |_, _| {
                        Err(e.clone())
                    }));
                }
            }
        }
    }
    out.extend(bundle_pullback_checks(&ex));
    out
}

fn run_example(ex: &NamedExample, cfg: &RunConfig) -> ExampleRecord {
    let settings = cfg.per_example.get(ex.name).cloned().unwrap_or_default();
    let n = settings.samples.unwrap_or(cfg.n_samples);
    let tols = cfg.tolerances.overlay(&settings.tolerances);
    let checks: Vec<CheckRecord> = plan(ex)
        .par_iter()
        .map(|check| {
            let seed = derive_seed(cfg.seed, ex.name, &check.name);
            let tolerance = match check.class {
                Rank => check.default_tolerance,
                class => {
                    let scale = if check.name.starts_with("pullback_") { PULLBACK_FACTOR } else { 1.0 };
                    tols.get(class).map_or(check.default_tolerance, |t| t * scale)
                }
            };
            let (residual, note) = match check.evaluate(n, seed) {
                Ok(r) => r,
                Err(e) => (f64::NAN, Some(format!("error: {e}"))),
            };
            let pass = residual <= tolerance;
            let expected = ex.expectation(&check.name).map(|e| e.outcome);
            let actual = if pass { Outcome::Pass } else { Outcome::Fail };
            CheckRecord {
                check_name: check.name.clone(),
                class: check.class,
                max_residual: residual.is_finite().then_some(residual),
                tolerance,
                pass,
                expected,
                matches_expected: expected == Some(actual),
                n_samples: n,
                seed,
                note,
            }
        })
        .collect();
    ExampleRecord {
        name: ex.name.to_string(),
        description: ex.description.to_string(),
        checks,
    }
}

/// Runs the configured checks. Errors only on an invalid config.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let examples: Vec<NamedExample> = cfg
        .selected()
        .iter()
        .map(|n| zoo::example(n))
        .collect::<Result<_>>()?;
    let records: Vec<ExampleRecord> = examples.par_iter().map(|ex| run_example(ex, cfg)).collect();
    let mut summary = Summary {
        examples: records.len(),
        ..Summary::default()
    };
    for c in records.iter().flat_map(|r| &r.checks) {
        summary.checks += 1;
        if c.pass {
            summary.passed += 1;
        } else {
            summary.failed += 1;
            if c.matches_expected {
                summary.expected_failures += 1;
            }
        }
        if !c.matches_expected {
            summary.mismatches += 1;
        }
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: "liegroupoid".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        n_samples: cfg.n_samples,
        tolerance_overrides: cfg.tolerances,
        examples: records,
        summary,
    })
}

/// `(name, description)` for every shipped example, alphabetically.
pub fn list_examples() -> Vec<(&'static str, &'static str)> {
    zoo::all_examples().into_iter().map(|e| (e.name, e.description)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_planned_check_has_an_expectation_and_vice_versa() {
        for ex in zoo::all_examples() {
            let planned: Vec<String> = plan(&ex).into_iter().map(|c| c.name).collect();
            for name in &planned {
                assert!(ex.expectation(name).is_some(), "{}: no expectation for {name}", ex.name);
            }
            for e in &ex.expected {
                assert!(planned.contains(&e.check), "{}: {} is never run", ex.name, e.check);
            }
            let mut unique = planned.clone();
            unique.sort();
            unique.dedup();
            assert_eq!(unique.len(), planned.len(), "{}: duplicate check names", ex.name);
        }
    }

    #[test]
    fn tolerance_overrides_parse() {
        assert_eq!(parse_tolerance_override("algebraic=1e-6").unwrap(), (Algebraic, 1e-6));
        assert!(parse_tolerance_override("rank=1").is_err());
        assert!(parse_tolerance_override("subspace=-1").is_err());
        assert!(parse_tolerance_override("subspace").is_err());
        assert!(parse_tolerance_override("derivative=abc").is_err());
    }

    #[test]
    fn config_file_round_trip() {
        let cfg = RunConfig::from_toml(
            r#"
examples = ["pair_groupoid"]
samples = 7
seed = 3
[tolerances]
algebraic = 1e-7
[example.pair_groupoid]
samples = 5
tolerances = { derivative = 1e-4 }
"#,
        )
        .unwrap();
        assert_eq!(cfg.examples, vec!["pair_groupoid".to_string()]);
        assert_eq!((cfg.n_samples, cfg.seed), (7, 3));
        assert_eq!(cfg.tolerances.algebraic, Some(1e-7));
        assert_eq!(cfg.per_example["pair_groupoid"].samples, Some(5));
    }

    #[test]
    fn malformed_config_reports_the_location() {
        let err = RunConfig::from_toml("samples = 3\nseeed = 4\n").unwrap_err().to_string();
        assert!(err.contains("seeed"), "{err}");
        assert!(err.contains("line 2"), "{err}");
        assert!(RunConfig::from_toml("examples = [\"nope\"]").is_err());
        assert!(RunConfig::from_toml("samples = 0").is_err());
        assert!(RunConfig::from_toml("[tolerances]\nalgebraic = 0.0").is_err());
    }

    #[test]
    fn all_keyword_selects_every_example() {
        let cfg = RunConfig::from_toml("examples = [\"all\"]").unwrap();
        assert_eq!(cfg.selected().len(), zoo::example_names().len());
    }
}
