//! JSON scenarios: one command plus its payload, run into an output
//! directory of reports, traces, point clouds and images.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::control::ControlPair;
use crate::engine::{
    iterate, probe_uniqueness, verify_contraction_grid, Compatibility, CompatibilityMeta, ContractionReport,
    IterateOptions, IterationStatus, MapQuartet, PiecewiseMap, Residuals, UniquenessReport,
};
use crate::error::{Error, Result};
use crate::hausdorff::{check_hausdorff_props, h_p, random_subsets, FiniteSet, HausdorffReport};
use crate::ifs::{
    check_family, iterate_attractor, render_attractor, AffineMap, AttractorOptions, AttractorStatus, Family,
    FamilyDistance, FamilyReport, IfsMap, IfsSystem, Raster,
};
use crate::integral::{
    solve, ConditionReport, GridFunction, IntegralProblem, KernelSpec, OuterSpec, SolveOptions, SolveStatus,
};
use crate::metric::{check_axioms, AxiomReport, BuiltinMetric, DomainDescriptor};
use crate::point::Point;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckAxioms,
    VerifyContraction,
    FixedPoint,
    Hausdorff,
    Ifs,
    Integral,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::CheckAxioms,
        Command::VerifyContraction,
        Command::FixedPoint,
        Command::Hausdorff,
        Command::Ifs,
        Command::Integral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckAxioms => "check-axioms",
            Command::VerifyContraction => "verify-contraction",
            Command::FixedPoint => "fixed-point",
            Command::Hausdorff => "hausdorff",
            Command::Ifs => "ifs",
            Command::Integral => "integral",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown command `{name}`")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    /// One of `max_metric`, `interval_metric`, `mixed_metric`,
    /// `sup_pair_metric`, `euclidean`.
    pub name: String,
    /// Right end of the carrier for `mixed_metric`.
    #[serde(default)]
    pub k: Option<f64>,
}

impl MetricSpec {
    pub fn build(&self) -> Result<BuiltinMetric> {
        BuiltinMetric::from_name(&self.name, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    RealInterval { lo: f64, hi: f64, n: usize },
    NonnegReals { hi: f64, n: usize },
    IntervalPairs { lo: f64, hi: f64, n: usize },
    GridFunctions { nodes: usize, count: usize, hi: f64 },
}

impl DomainSpec {
    pub fn build(self) -> Result<DomainDescriptor> {
        match self {
            DomainSpec::RealInterval { lo, hi, n } => DomainDescriptor::real_interval(lo, hi, n),
            DomainSpec::NonnegReals { hi, n } => DomainDescriptor::nonneg_reals(hi, n),
            DomainSpec::IntervalPairs { lo, hi, n } => DomainDescriptor::interval_pairs(lo, hi, n),
            DomainSpec::GridFunctions { nodes, count, hi } => DomainDescriptor::grid_functions(nodes, count, hi),
        }
    }

    /// A sample domain on which `metric` is defined.
    pub fn default_for(metric: &BuiltinMetric) -> Self {
        match *metric {
            BuiltinMetric::Max => DomainSpec::NonnegReals { hi: 10.0, n: 201 },
            BuiltinMetric::Interval => DomainSpec::IntervalPairs {
                lo: -2.0,
                hi: 3.0,
                n: 41,
            },
            BuiltinMetric::Mixed { k } => DomainSpec::RealInterval { lo: 0.0, hi: k, n: 401 },
            BuiltinMetric::SupPair => DomainSpec::GridFunctions {
                nodes: 21,
                count: 64,
                hi: 3.0,
            },
            BuiltinMetric::Euclidean => DomainSpec::RealInterval {
                lo: -5.0,
                hi: 5.0,
                n: 201,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlSpec {
    /// `psi(t) = t`, `phi(t) = c t`.
    Linear { c: f64 },
    /// The piecewise pair of the four-map worked example.
    Example22,
}

impl ControlSpec {
    pub fn build(self) -> Result<ControlPair> {
        match self {
            ControlSpec::Linear { c } => ControlPair::linear(c),
            ControlSpec::Example22 => Ok(ControlPair::example22()),
        }
    }
}

impl Default for ControlSpec {
    fn default() -> Self {
        ControlSpec::Linear { c: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuartetSpec {
    /// The four-map worked example on `[0, k]`.
    Example22 { k: f64 },
    /// All four maps are the identity.
    Identity,
    /// Scalar piecewise-affine maps; preimages are resolved on the grid.
    Piecewise {
        name: String,
        f: PiecewiseMap,
        g: PiecewiseMap,
        s: PiecewiseMap,
        t: PiecewiseMap,
        #[serde(default = "undeclared")]
        compat_f_s: Compatibility,
        #[serde(default = "undeclared")]
        compat_g_t: Compatibility,
    },
}

fn undeclared() -> Compatibility {
    Compatibility::Undeclared
}

impl QuartetSpec {
    pub fn build(&self) -> Result<MapQuartet> {
        match self {
            QuartetSpec::Example22 { k } => MapQuartet::example22(*k),
            QuartetSpec::Identity => Ok(MapQuartet::identity()),
            QuartetSpec::Piecewise {
                name,
                f,
                g,
                s,
                t,
                compat_f_s,
                compat_g_t,
            } => {
                let check = |m: &PiecewiseMap| PiecewiseMap::new(m.pieces.clone());
                Ok(MapQuartet::new(
                    name.clone(),
                    check(f)?.into_map(),
                    check(g)?.into_map(),
                    check(s)?.into_map(),
                    check(t)?.into_map(),
                )
                .with_compatibility(CompatibilityMeta {
                    f_s: *compat_f_s,
                    g_t: *compat_g_t,
                }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AxiomTarget {
    pub metric: MetricSpec,
    /// Defaults to a sample domain suited to the metric.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AxiomsPayload {
    #[serde(default = "default_triples")]
    pub n_triples: usize,
    pub metrics: Vec<AxiomTarget>,
}

fn default_triples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ContractionPayload {
    pub metric: MetricSpec,
    pub quartet: QuartetSpec,
    pub control: ControlSpec,
    pub domain: DomainSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FixedPointPayload {
    pub metric: MetricSpec,
    pub quartet: QuartetSpec,
    pub control: ControlSpec,
    /// Sample grid for the hypothesis and contraction checks.
    pub domain: DomainSpec,
    /// Starting points; each is a coordinate list.
    pub seeds: Vec<Vec<f64>>,
    #[serde(default)]
    pub options: IterateOptions,
    /// Also sweep the contractive inequality over every grid pair.
    #[serde(default = "yes")]
    pub verify_contraction: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HausdorffPayload {
    pub metrics: Vec<MetricSpec>,
    /// Grid the random subsets are drawn from.
    pub domain: DomainSpec,
    #[serde(default = "default_set_count")]
    pub count: usize,
    #[serde(default = "default_max_size")]
    pub max_size: usize,
}

fn default_set_count() -> usize {
    20
}

fn default_max_size() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IfsSpec {
    /// `sierpinski` or `dyadic`.
    Builtin { name: String },
    Affine {
        name: String,
        maps: Vec<AffineMap>,
        metric: MetricSpec,
        #[serde(default)]
        control: ControlSpec,
        family: Family,
    },
}

impl IfsSpec {
    pub fn build(&self) -> Result<IfsSystem> {
        match self {
            IfsSpec::Builtin { name } => match name.as_str() {
                "sierpinski" => Ok(IfsSystem::sierpinski()),
                "dyadic" => Ok(IfsSystem::dyadic()),
                other => Err(Error::invalid(format!("unknown IFS `{other}`"))),
            },
            IfsSpec::Affine {
                name,
                maps,
                metric,
                control,
                family,
            } => {
                let maps = maps
                    .iter()
                    .map(|m| AffineMap::new(m.matrix.clone(), m.offset.clone()).map(IfsMap::Affine))
                    .collect::<Result<_>>()?;
                IfsSystem::new(name.clone(), maps, Arc::new(metric.build()?), control.build()?, *family)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct IfsPayload {
    pub system: IfsSpec,
    /// Points of the starting cloud.
    pub seed_set: Vec<Vec<f64>>,
    #[serde(default)]
    pub options: AttractorOptions,
    #[serde(default = "default_raster")]
    pub raster: Raster,
    /// Random point pairs from the final cloud checked against the family.
    #[serde(default = "default_family_pairs")]
    pub family_pairs: usize,
    #[serde(default)]
    pub family_distance: FamilyDistance,
}

fn default_raster() -> Raster {
    Raster {
        width: 512,
        height: 512,
        bounds: None,
    }
}

fn default_family_pairs() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(untagged)]
pub enum InitialGuess {
    Constant(f64),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct IntegralPayload {
    pub outer: OuterSpec,
    pub kernel: KernelSpec,
    pub h: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub control: ControlSpec,
    pub x0: InitialGuess,
    #[serde(default)]
    pub options: SolveOptions,
}

fn default_nodes() -> usize {
    201
}

/// JSON schema of a command's payload.
pub fn payload_schema(command: Command) -> serde_json::Value {
    let schema = match command {
        Command::CheckAxioms => schemars::schema_for!(AxiomsPayload),
        Command::VerifyContraction => schemars::schema_for!(ContractionPayload),
        Command::FixedPoint => schemars::schema_for!(FixedPointPayload),
        Command::Hausdorff => schemars::schema_for!(HausdorffPayload),
        Command::Ifs => schemars::schema_for!(IfsPayload),
        Command::Integral => schemars::schema_for!(IntegralPayload),
    };
    serde_json::to_value(schema).expect("schemas serialize")
}

/// Result of running one scenario.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: Command,
    pub output_dir: PathBuf,
    /// A hypothesis, condition or contraction check failed.
    pub violation: bool,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.violation {
            2
        } else {
            0
        }
    }
}

/// Bundled scenarios as `(file name, contents)`.
pub const BUNDLED: [(&str, &str); 6] = [
    ("axioms.json", include_str!("../scenarios/axioms.json")),
    ("example22.json", include_str!("../scenarios/example22.json")),
    ("example22_k09.json", include_str!("../scenarios/example22_k09.json")),
    ("hausdorff.json", include_str!("../scenarios/hausdorff.json")),
    ("integral.json", include_str!("../scenarios/integral.json")),
    ("sierpinski.json", include_str!("../scenarios/sierpinski.json")),
];

/// Looks up a bundled scenario by file name, with or without `.json`.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name || n.strip_suffix(".json") == Some(name))
        .map(|(_, s)| *s)
}

/// Loads a scenario file; a bare bundled name such as `example22` or
/// `example22.json` that does not exist on disk resolves to the bundled copy.
pub fn load_scenario(path: &Path) -> Result<(Scenario, String)> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => match path.to_str().and_then(bundled) {
            Some(text) => text.to_owned(),
            None => return Err(Error::io(path, e)),
        },
    };
    let scenario = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    Ok((scenario, stem))
}

pub fn parse_scenario(json: &str) -> Result<Scenario> {
    serde_json::from_str(json).map_err(|e| Error::Parse {
        path: PathBuf::from("<scenario>"),
        message: e.to_string(),
    })
}

/// Runs a scenario file. `out` and `seed` override the scenario's own values;
/// the default output directory is `pmfix-out/<file stem>`.
pub fn run_file(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<Outcome> {
    let (scenario, stem) = load_scenario(path)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| Path::new("pmfix-out").join(stem));
    run(&scenario, &dir, seed)
}

fn payload<T: serde::de::DeserializeOwned>(s: &Scenario) -> Result<T> {
    serde_json::from_value(s.payload.clone()).map_err(|e| Error::Schema {
        command: s.command.name().into(),
        message: e.to_string(),
    })
}

/// Runs a parsed scenario into `dir`, creating it if needed.
pub fn run(scenario: &Scenario, dir: &Path, seed: Option<u64>) -> Result<Outcome> {
    let seed = seed.or(scenario.seed).unwrap_or(DEFAULT_SEED);
    let mut out = Artifacts::new(dir);
    let (violation, summary) = match scenario.command {
        Command::CheckAxioms => run_axioms(&payload(scenario)?, seed, &mut out)?,
        Command::VerifyContraction => run_contraction(&payload(scenario)?, &mut out)?,
        Command::FixedPoint => run_fixed_point(&payload(scenario)?, &mut out)?,
        Command::Hausdorff => run_hausdorff(&payload(scenario)?, seed, &mut out)?,
        Command::Ifs => run_ifs(&payload(scenario)?, seed, &mut out)?,
        Command::Integral => run_integral(&payload(scenario)?, &mut out)?,
    };
    Ok(Outcome {
        command: scenario.command,
        output_dir: dir.to_path_buf(),
        violation,
        summary,
        artifacts: out.written,
    })
}

struct Artifacts {
    dir: PathBuf,
    created: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: &Path) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
            created: false,
            written: Vec::new(),
        }
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        if !self.created {
            fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
            self.created = true;
        }
        let p = self.dir.join(name);
        self.written.push(p.clone());
        Ok(p)
    }

    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let p = self.path(name)?;
        fs::write(&p, data).map_err(|e| Error::io(&p, e))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.bytes(name, &text)
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.bytes(name, &buf)
    }
}

fn run_axioms(p: &AxiomsPayload, seed: u64, out: &mut Artifacts) -> Result<(bool, String)> {
    if p.metrics.is_empty() {
        return Err(Error::invalid("check-axioms needs at least one metric"));
    }
    let mut reports: Vec<AxiomReport> = Vec::new();
    for target in &p.metrics {
        let m = target.metric.build()?;
        let dom = target.domain.unwrap_or_else(|| DomainSpec::default_for(&m)).build()?;
        reports.push(check_axioms(&m, &dom, p.n_triples, seed)?);
    }
    out.csv("axioms.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["metric", "n_triples", "p1", "p2", "p3", "p4", "ps_triangle"])?;
        for r in &reports {
            let v = &r.violations;
            w.write_record([
                r.metric.clone(),
                r.n_triples.to_string(),
                v.p1.to_string(),
                v.p2.to_string(),
                v.p3.to_string(),
                v.p4.to_string(),
                v.ps_triangle.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("axioms.csv", e))?;
        Ok(())
    })?;
    out.json("report.json", &reports)?;
    let dirty = reports.iter().filter(|r| !r.is_clean()).count();
    Ok((
        dirty > 0,
        format!("{} metrics checked, {dirty} with axiom violations", reports.len()),
    ))
}

fn write_contraction(r: &ContractionReport, out: &mut Artifacts) -> Result<()> {
    out.csv("violations.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["x", "y", "lhs", "rhs", "slack"])?;
        for v in &r.violations {
            w.write_record([
                crate::engine::coords_field(&v.x),
                crate::engine::coords_field(&v.y),
                v.lhs.to_string(),
                v.rhs.to_string(),
                v.slack.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("violations.csv", e))?;
        Ok(())
    })?;
    out.json("contraction.json", r)
}

fn run_contraction(p: &ContractionPayload, out: &mut Artifacts) -> Result<(bool, String)> {
    let m = p.metric.build()?;
    let q = p.quartet.build()?;
    let cp = p.control.build()?;
    let dom = p.domain.build()?;
    let r = verify_contraction_grid(&m, &q, &cp, &dom)?;
    write_contraction(&r, out)?;
    Ok((
        !r.is_clean(),
        format!(
            "{} comparable pairs checked, {} violations",
            r.n_checked, r.n_violations
        ),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: Point,
    pub status: IterationStatus,
    pub steps: usize,
    pub converged_step: Option<usize>,
    pub limit: Option<Point>,
    pub residuals: Option<Residuals>,
    pub self_distance: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointSummary {
    pub quartet: String,
    pub runs: Vec<SeedRun>,
    pub uniqueness: Option<UniquenessReport>,
    pub contraction_violations: Option<usize>,
}

fn run_fixed_point(p: &FixedPointPayload, out: &mut Artifacts) -> Result<(bool, String)> {
    let m = p.metric.build()?;
    let q = p.quartet.build()?;
    let cp = p.control.build()?;
    let dom = p.domain.build()?;
    if p.seeds.is_empty() {
        return Err(Error::invalid("fixed-point needs at least one seed"));
    }
    let seeds = p
        .seeds
        .iter()
        .map(|s| Point::new(s.clone()))
        .collect::<Result<Vec<_>>>()?;

    let contraction = if p.verify_contraction {
        let r = verify_contraction_grid(&m, &q, &cp, &dom)?;
        write_contraction(&r, out)?;
        Some(r)
    } else {
        None
    };

    let mut runs = Vec::with_capacity(seeds.len());
    for (i, x0) in seeds.iter().enumerate() {
        let trace = iterate(&m, &q, &cp, x0, &p.options, Some(&dom))?;
        out.csv(&format!("trace_{i:02}.csv"), |buf| trace.write_csv(buf))?;
        runs.push(SeedRun {
            seed: x0.clone(),
            status: trace.status,
            steps: trace.step_distances.len(),
            converged_step: trace.converged_step,
            limit: trace.limit.clone(),
            residuals: trace.residuals,
            self_distance: trace.self_distance,
            message: trace.message.clone(),
        });
    }
    let uniqueness = if seeds.len() >= 2 {
        Some(probe_uniqueness(&m, &q, &cp, &seeds, &p.options, Some(&dom))?)
    } else {
        None
    };
    let summary = FixedPointSummary {
        quartet: q.name().to_owned(),
        runs,
        uniqueness,
        contraction_violations: contraction.as_ref().map(|r| r.n_violations),
    };
    out.json("fixed_point.json", &summary)?;

    let converged = summary
        .runs
        .iter()
        .filter(|r| r.status == IterationStatus::Converged)
        .count();
    let unique = summary.uniqueness.as_ref().map_or(true, UniquenessReport::unique);
    let violations = contraction.as_ref().map_or(0, |r| r.n_violations);
    let violation = violations > 0 || converged < summary.runs.len() || !unique;
    let limits = summary
        .uniqueness
        .as_ref()
        .map(|u| {
            u.distinct_limits
                .iter()
                .map(crate::engine::coords_field)
                .collect::<Vec<_>>()
                .join(", ")
        })
        .unwrap_or_default();
    Ok((
        violation,
        format!(
            "{converged}/{} seeds converged; distinct limits [{limits}]; {violations} contraction violations",
            summary.runs.len()
        ),
    ))
}

fn run_hausdorff(p: &HausdorffPayload, seed: u64, out: &mut Artifacts) -> Result<(bool, String)> {
    if p.metrics.is_empty() {
        return Err(Error::invalid("hausdorff needs at least one metric"));
    }
    let dom = p.domain.build()?;
    let sets = random_subsets(&dom, p.count, p.max_size, seed);
    out.csv("sets.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["set", "point"])?;
        for (i, s) in sets.iter().enumerate() {
            for x in s.to_points() {
                w.write_record([i.to_string(), crate::engine::coords_field(&x)])?;
            }
        }
        w.flush().map_err(|e| Error::io("sets.csv", e))?;
        Ok(())
    })?;
    let mut reports: Vec<HausdorffReport> = Vec::new();
    for (k, spec) in p.metrics.iter().enumerate() {
        let m = spec.build()?;
        reports.push(check_hausdorff_props(&m, &sets)?);
        let mut rows = Vec::with_capacity(sets.len() * sets.len());
        for (i, a) in sets.iter().enumerate() {
            for (j, b) in sets.iter().enumerate() {
                rows.push([i.to_string(), j.to_string(), h_p(&m, a, b)?.to_string()]);
            }
        }
        out.csv(&format!("distances_{k}_{}.csv", spec.name), |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["a", "b", "hp"])?;
            for r in &rows {
                w.write_record(r)?;
            }
            w.flush().map_err(|e| Error::io("distances", e))?;
            Ok(())
        })?;
    }
    out.json("report.json", &reports)?;
    let total: usize = reports.iter().map(|r| r.violations.total()).sum();
    Ok((
        total > 0,
        format!(
            "{} sets under {} metrics, {total} property violations",
            sets.len(),
            reports.len()
        ),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfsSummary {
    pub system: String,
    pub status: AttractorStatus,
    pub iterations: usize,
    pub hp_steps: Vec<f64>,
    pub sizes: Vec<usize>,
    pub merge_radius: f64,
    pub occupied_pixels: usize,
    pub family: Option<FamilyReport>,
}

fn sample_pairs(set: &FiniteSet, count: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let i = rng.gen_range(0..set.len());
            let j = rng.gen_range(0..set.len());
            (
                Point::from_slice_unchecked(set.point(i)),
                Point::from_slice_unchecked(set.point(j)),
            )
        })
        .collect()
}

fn run_ifs(p: &IfsPayload, seed: u64, out: &mut Artifacts) -> Result<(bool, String)> {
    let sys = p.system.build()?;
    let seed_points = p
        .seed_set
        .iter()
        .map(|s| Point::new(s.clone()))
        .collect::<Result<Vec<_>>>()?;
    let a0 = FiniteSet::new(&seed_points)?;
    let run = iterate_attractor(&sys, &a0, &p.options)?;
    let image = render_attractor(run.attractor(), &p.raster)?;
    out.csv("hp_steps.csv", |buf| run.write_steps_csv(buf))?;
    out.csv("attractor.csv", |buf| run.attractor().write_csv(buf))?;
    out.bytes("attractor.ppm", &image.to_ppm())?;
    let family = if p.family_pairs > 0 {
        Some(check_family(
            &sys,
            &sample_pairs(run.attractor(), p.family_pairs, seed),
            p.family_distance,
        )?)
    } else {
        None
    };
    let summary = IfsSummary {
        system: sys.name().to_owned(),
        status: run.status,
        iterations: run.iterations(),
        hp_steps: run.hp_steps.clone(),
        sizes: run.sizes.clone(),
        merge_radius: run.merge_radius,
        occupied_pixels: image.occupied(),
        family,
    };
    out.json("ifs.json", &summary)?;
    let family_violations = summary.family.as_ref().map_or(0, |f| f.n_violations);
    Ok((
        run.status != AttractorStatus::Converged || family_violations > 0,
        format!(
            "{:?} after {} iterations, {} points, final step {:e}, {} pixels, {family_violations} family violations",
            run.status,
            run.iterations(),
            run.attractor().len(),
            run.hp_steps.last().copied().unwrap_or(0.0),
            image.occupied()
        ),
    ))
}

fn run_integral(p: &IntegralPayload, out: &mut Artifacts) -> Result<(bool, String)> {
    let prob = IntegralProblem::from_specs(p.outer, p.kernel, p.h, p.nodes, p.control.build()?)?;
    let x0 = match &p.x0 {
        InitialGuess::Constant(c) => GridFunction::constant(p.nodes, *c)?,
        InitialGuess::Values(v) => GridFunction::new(v.clone())?,
    };
    let result = solve(&prob, &x0, &p.options)?;
    out.csv("solution.csv", |buf| result.write_csv(&prob, buf))?;
    out.json("integral.json", &IntegralSummary::from(&result))?;
    Ok((
        result.status != SolveStatus::Converged || result.contraction_violations > 0,
        format!(
            "{:?} after {} cycles, sup |u| = {:e}, residual {:e}",
            result.status,
            result.cycles,
            result.solution.sup(),
            result.residual_sup
        ),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralSummary {
    pub status: SolveStatus,
    pub conditions: ConditionReport,
    pub steps: usize,
    pub cycles: usize,
    pub converged_step: Option<usize>,
    pub step_norms: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub p_values: Vec<f64>,
    pub contraction_violations: usize,
    pub residual_sup: f64,
}

impl From<&crate::integral::SolveResult> for IntegralSummary {
    fn from(r: &crate::integral::SolveResult) -> Self {
        IntegralSummary {
            status: r.status,
            conditions: r.conditions.clone(),
            steps: r.steps,
            cycles: r.cycles,
            converged_step: r.converged_step,
            step_norms: r.step_norms.clone(),
            sup_norms: r.sup_norms.clone(),
            p_values: r.p_values.clone(),
            contraction_violations: r.contraction_violations,
            residual_sup: r.residual_sup,
        }
    }
}

/// One line per bundled component, with where it comes from.
pub fn list_builtins() -> String {
    let rows: &[(&str, &str, &str)] = &[
        ("metric", "max_metric", "p(x,y) = max(x,y) on the nonnegative reals"),
        (
            "metric",
            "interval_metric",
            "p([a,b],[c,d]) = max(b,d) - min(a,c) on closed intervals",
        ),
        (
            "metric",
            "mixed_metric",
            "p(x,y) = |x - y| on [0,1)^2, else max(x,y), on [0,k]; carrier of the four-map worked example",
        ),
        (
            "metric",
            "sup_pair_metric",
            "p(x,y) = max(sup x, sup y) on nonnegative grid functions",
        ),
        (
            "metric",
            "euclidean",
            "|x - y| viewed as a partial metric with zero self-distance",
        ),
        ("control", "linear", "psi(t) = t, phi(t) = c t with 0 < c < 1"),
        ("control", "example22", "piecewise pair of the four-map worked example"),
        (
            "quartet",
            "example22",
            "f, g, S, T of the four-map worked example on [0,k]; unique common fixed point 0",
        ),
        (
            "quartet",
            "identity",
            "all four maps the identity; every point is a common fixed point",
        ),
        (
            "ifs",
            "sierpinski",
            "three half-scale affine maps; attractor is the Sierpinski triangle",
        ),
        ("ifs", "dyadic", "{x/2, x/2 + 1/2}; attractor is [0,1]"),
        ("outer", "linear / linear_t", "F(t,u) = c u and F(t,u) = c u t"),
        (
            "kernel",
            "linear / linear_s",
            "kappa(t,s,v) = c v and kappa(t,s,v) = c v s",
        ),
    ];
    let mut text = String::new();
    for (kind, name, about) in rows {
        text.push_str(&format!("{kind:<8} {name:<18} {about}\n"));
    }
    text.push_str("\nbundled scenarios:\n");
    for (name, _) in BUNDLED {
        text.push_str(&format!("  {name}\n"));
    }
    text
}
