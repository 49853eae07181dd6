//! Scenario runner behind the `hjsing` binary.
//!
//! A scenario is a TOML file naming a task, a model, an optional field
//! fixture and numeric options. Running it writes CSV arrays, a JSON report
//! and a JSON manifest into the output directory.
//!
//! ```toml
//! task = "trace"
//! output_dir = "out/two_source"
//!
//! [model]
//! id = "eikonal"
//! dim = 2
//!
//! [field]
//! id = "two_source_eikonal"
//! a = [-1.0, 0.0]
//! b = [1.0, 0.0]
//!
//! [options]
//! x = [0.0, 1.0]
//! horizon = 2.0
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hjsing_core::export::{arc_csv, grid_csv, table_csv, trajectory_csv};
use hjsing_core::models::MODEL_IDS;
use hjsing_core::{
    certify_inclusion, classify_point, energy_monitor, fixture_field, fundamental_solution_with,
    inf_convolution, lambda0, model_by_id, probe_convexity, probe_convexity_with,
    probe_semiconcavity, probe_semiconcavity_with, sup_convolution, trace_arc, trace_arc_torus,
    weak_kam_solve, ActionKernel, ActionOptions, ConvolutionOptions, EnergyOptions, FixtureSpec,
    HjError, PlanarKernel, SamplingOptions, ScalarField, SingularArc, TonelliModel, TorusKernel,
    TraceOptions, Vector, WeakKamOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use hjsing_core::fixtures::FIXTURE_IDS;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CERTIFIED_FAILURE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] HjError),
}

impl CliError {
    fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Fundamental,
    Probe,
    Supconv,
    Classify,
    Trace,
    Weakkam,
    Certify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Fundamental => "fundamental",
            Task::Probe => "probe",
            Task::Supconv => "supconv",
            Task::Classify => "classify",
            Task::Trace => "trace",
            Task::Weakkam => "weakkam",
            Task::Certify => "certify",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Registry id, e.g. `free`, `harmonic(1)`, `mechanical(cos(0.5))`.
    pub id: String,
    /// Configuration dimension; inferred from the field or the points when absent.
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Probe: midpoint convexity of `A_t(x, .)`.
    Convexity,
    /// Probe: semiconcavity of `A_t(x, .)`.
    Semiconcavity,
    /// Convolution: `T+_t u`.
    Sup,
    /// Convolution: `T-_t u`.
    Inf,
}

/// Numeric options; each task reads the subset it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOptions {
    pub seed: Option<u64>,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub horizon: Option<f64>,
    pub lambda: Option<f64>,
    pub samples: Option<usize>,
    pub kind: Option<Kind>,
    pub resolution: Option<usize>,
    pub t_step: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Work on the flat torus `R^n / Z^n` instead of the plane.
    #[serde(default)]
    pub torus: bool,
    pub sample_radius: Option<f64>,
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Must agree with the task given on the command line when present.
    pub task: Option<Task>,
    /// Defaults to the model the field solves, or `free`.
    pub model: Option<ModelSpec>,
    pub field: Option<FixtureSpec>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub options: ScenarioOptions,
}

/// Parses a scenario; errors carry the dotted path of the offending key.
pub fn parse_config(raw: &str) -> Result<ScenarioConfig, CliError> {
    let de = toml::Deserializer::parse(raw).map_err(|e| CliError::config("", e.message()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(&path, e.into_inner().message())
    })
}

/// Reads and parses a scenario file. Relative grid paths are resolved
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<(ScenarioConfig, String), CliError> {
    let raw = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&raw)?;
    if let Some(FixtureSpec::Grid { path: grid }) = &mut cfg.field {
        if grid.is_relative() {
            if let Some(dir) = path.parent() {
                *grid = dir.join(&*grid);
            }
        }
    }
    Ok((cfg, raw))
}

fn positive(path: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::config(
            path,
            format!("must be positive and finite, got {x}"),
        )),
        _ => Ok(()),
    }
}

/// Model, field and options resolved against the registries.
pub struct Scenario {
    pub task: Task,
    pub model: TonelliModel,
    pub field: Option<ScalarField>,
    pub options: ScenarioOptions,
}

impl ScenarioConfig {
    /// Checks the task, the positivity of tolerances and times, and that the
    /// referenced model and fixture exist.
    pub fn validate(&self, task: Task) -> Result<Scenario, CliError> {
        if let Some(t) = self.task {
            if t != task {
                return Err(CliError::config(
                    "task",
                    format!("config is for `{t}` but `{task}` was requested"),
                ));
            }
        }
        let o = &self.options;
        positive("options.t", o.t)?;
        positive("options.horizon", o.horizon)?;
        positive("options.lambda", o.lambda)?;
        positive("options.t_step", o.t_step)?;
        positive("options.tol", o.tol)?;
        positive("options.sample_radius", o.sample_radius)?;
        positive("options.max_step", o.max_step)?;
        if o.samples == Some(0) {
            return Err(CliError::config("options.samples", "must be positive"));
        }
        if matches!(o.resolution, Some(r) if r < 2) {
            return Err(CliError::config("options.resolution", "must be at least 2"));
        }
        for (name, v) in [("options.x", &o.x), ("options.y", &o.y)] {
            if let Some(v) = v {
                if v.is_empty() || v.iter().any(|a| !a.is_finite()) {
                    return Err(CliError::config(
                        name,
                        "must be a nonempty list of finite numbers",
                    ));
                }
            }
        }

        let field = match &self.field {
            Some(spec) => {
                Some(fixture_field(spec).map_err(|e| CliError::config("field", e.to_string()))?)
            }
            None => None,
        };
        let model_id = match (&self.model, &self.field) {
            (Some(m), _) => m.id.clone(),
            (None, Some(spec)) => spec.natural_model().to_string(),
            (None, None) => "free".to_string(),
        };
        let explicit = self.model.as_ref().and_then(|m| m.dim);
        let inferred = field
            .as_ref()
            .map(|u| u.dim)
            .or_else(|| o.x.as_ref().map(Vec::len));
        let model = match explicit.or(inferred) {
            Some(dim) => model_by_id(&model_id, dim),
            None => (1..=3)
                .map(|d| model_by_id(&model_id, d))
                .find(Result::is_ok)
                .unwrap_or_else(|| model_by_id(&model_id, 1)),
        }
        .map_err(|e| CliError::config("model", e.to_string()))?;
        let n = model.dim();
        if let Some(u) = &field {
            if u.dim != n {
                return Err(CliError::config(
                    "field",
                    format!("field has dimension {}, model has {n}", u.dim),
                ));
            }
        }
        for (name, v) in [("options.x", &o.x), ("options.y", &o.y)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(CliError::config(
                        name,
                        format!("expected {n} coordinates, got {}", v.len()),
                    ));
                }
            }
        }
        Ok(Scenario {
            task,
            model,
            field,
            options: o.clone(),
        })
    }
}

/// Result of a task before anything is written.
pub struct TaskOutput {
    pub result: Value,
    /// `(file name, contents)` pairs.
    pub files: Vec<(String, String)>,
    /// False when a probe or certificate ran to completion and failed.
    pub certified: bool,
}

fn require<T: Clone>(v: &Option<T>, path: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| CliError::config(path, "required by this task"))
}

fn point(v: &Option<Vec<f64>>, path: &str) -> Result<Vector, CliError> {
    Ok(Vector::from_vec(require(v, path)?))
}

fn field_of(s: &Scenario) -> Result<&ScalarField, CliError> {
    s.field
        .as_ref()
        .ok_or_else(|| CliError::config("field", "required by this task"))
}

fn action_options(o: &ScenarioOptions, base: ActionOptions) -> ActionOptions {
    ActionOptions {
        seed: o.seed.unwrap_or(base.seed),
        ..base
    }
}

fn sampling_options(o: &ScenarioOptions) -> SamplingOptions {
    let mut s = SamplingOptions::default();
    if let Some(r) = o.sample_radius {
        s = SamplingOptions::with_radius(r);
    }
    if let Some(seed) = o.seed {
        s.seed = seed;
    }
    if let Some(k) = o.samples {
        s.sample_count = k;
    }
    s
}

fn trace_options(o: &ScenarioOptions) -> TraceOptions {
    let mut opts = TraceOptions {
        sampling: sampling_options(o),
        ..TraceOptions::default()
    };
    if let Some(h) = o.max_step {
        opts.max_step = h;
    }
    if let Some(l) = o.lambda {
        opts.probe_lambda = Some(l);
    }
    if let Some(seed) = o.seed {
        opts.step.seed = seed;
    }
    opts
}

fn kernel_for(s: &Scenario) -> Result<Box<dyn ActionKernel>, CliError> {
    let o = &s.options;
    Ok(if o.torus {
        Box::new(TorusKernel::with_options(
            s.model.clone(),
            action_options(o, ActionOptions::fast()),
        )?)
    } else {
        Box::new(PlanarKernel::with_options(
            s.model.clone(),
            action_options(o, ActionOptions::fast()),
        ))
    })
}

fn vec_json(v: &Vector) -> Value {
    json!(v.as_slice())
}

fn run_fundamental(s: &Scenario) -> Result<TaskOutput, CliError> {
    let o = &s.options;
    let x = point(&o.x, "options.x")?;
    let y = point(&o.y, "options.y")?;
    let t = require(&o.t, "options.t")?;
    let opts = action_options(o, ActionOptions::default());
    let (sol, torus) = if o.torus {
        let ts = TorusKernel::with_options(s.model.clone(), opts)?.solve_torus(&x, &y, t, None)?;
        let extra = json!({
            "shift": ts.shift,
            "representative": vec_json(&ts.representative),
            "widened": ts.widened,
        });
        (ts.solution, Some(extra))
    } else {
        (fundamental_solution_with(&s.model, &x, &y, t, &opts)?, None)
    };
    let mut result = json!({
        "value": sol.value,
        "grad_y": vec_json(&sol.grad_y),
        "grad_x": vec_json(&sol.grad_x),
        "dt": sol.dt,
        "energy": sol.energy,
        "energy_variation": sol.minimizer.energy_variation(),
        "shooting_residual": sol.minimizer.residual,
        "multiplicity_hint": sol.multiplicity_hint,
    });
    if let Some(extra) = torus {
        result["torus"] = extra;
    }
    Ok(TaskOutput {
        result,
        files: vec![("trajectory.csv".into(), trajectory_csv(&sol.minimizer))],
        certified: true,
    })
}

fn run_probe(s: &Scenario) -> Result<TaskOutput, CliError> {
    let o = &s.options;
    let x = point(&o.x, "options.x")?;
    let t = require(&o.t, "options.t")?;
    let lambda = match o.lambda {
        Some(l) => l,
        None => 1.0 + lambda0(&s.model, 0.0)?,
    };
    let count = o.samples.unwrap_or(16);
    let kind = o.kind.unwrap_or(Kind::Convexity);
    let report = match (kind, o.seed) {
        (Kind::Convexity, None) => probe_convexity(&s.model, &x, t, lambda, count)?,
        (Kind::Semiconcavity, None) => probe_semiconcavity(&s.model, &x, t, lambda, count)?,
        (Kind::Convexity | Kind::Semiconcavity, Some(seed)) => {
            let kernel = PlanarKernel::with_options(
                s.model.clone(),
                ActionOptions {
                    multistart: 3,
                    ..ActionOptions::default()
                },
            );
            if kind == Kind::Convexity {
                probe_convexity_with(&kernel, &x, t, lambda, count, seed)?
            } else {
                probe_semiconcavity_with(&kernel, &x, t, lambda, count, seed)?
            }
        }
        _ => {
            return Err(CliError::config(
                "options.kind",
                "probe kind must be `convexity` or `semiconcavity`",
            ))
        }
    };
    let rows: Vec<Vec<f64>> = report
        .samples
        .iter()
        .map(|p| vec![p.z.norm(), p.h, p.excess, p.ratio, p.multiplicity as f64])
        .collect();
    let csv = table_csv(&["z_norm", "h", "excess", "ratio", "multiplicity"], &rows);
    Ok(TaskOutput {
        result: json!({
            "kind": kind,
            "lambda": lambda,
            "constant_estimate": report.constant_estimate,
            "worst_ratio": report.worst_ratio,
            "flagged": report.flagged,
            "verdict": report.verdict,
        }),
        files: vec![("probe.csv".into(), csv)],
        certified: report.verdict,
    })
}

fn run_supconv(s: &Scenario) -> Result<TaskOutput, CliError> {
    let o = &s.options;
    let u = field_of(s)?;
    let x = point(&o.x, "options.x")?;
    let t = require(&o.t, "options.t")?;
    let kernel = kernel_for(s)?;
    let mut opts = ConvolutionOptions::default();
    if let Some(tol) = o.tol {
        opts.tol = tol;
    }
    let kind = o.kind.unwrap_or(Kind::Sup);
    let r = match kind {
        Kind::Sup => sup_convolution(u, kernel.as_ref(), &x, t, &opts)?,
        Kind::Inf => inf_convolution(u, kernel.as_ref(), &x, t, &opts)?,
        _ => {
            return Err(CliError::config(
                "options.kind",
                "convolution kind must be `sup` or `inf`",
            ))
        }
    };
    Ok(TaskOutput {
        result: json!({
            "kind": kind,
            "value": r.value,
            "y": vec_json(&r.y),
            "dual_covector": vec_json(r.dual_covector()),
            "boundary_flag": r.boundary_flag,
            "concavity_ok": r.concavity_ok,
            "radius": r.radius,
            "lambda0": r.lambda0,
            "spread": r.spread,
            "iterations": r.iterations,
        }),
        files: Vec::new(),
        certified: true,
    })
}

fn run_classify(s: &Scenario) -> Result<TaskOutput, CliError> {
    let o = &s.options;
    let u = field_of(s)?;
    let x = point(&o.x, "options.x")?;
    let t = o.t.unwrap_or(0.1);
    let kernel = kernel_for(s)?;
    let c = classify_point(u, kernel.as_ref(), &x, t, &sampling_options(o))?;
    let rows: Vec<Vec<f64>> = c
        .estimate
        .hull_vertices
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect();
    let header: Vec<String> = (1..=x.len()).map(|i| format!("p{i}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(TaskOutput {
        result: serde_json::to_value(&c).expect("classification serializes"),
        files: vec![("hull.csv".into(), table_csv(&header, &rows))],
        certified: true,
    })
}

fn trace(s: &Scenario) -> Result<SingularArc, CliError> {
    let o = &s.options;
    let u = field_of(s)?;
    let x = point(&o.x, "options.x")?;
    let horizon = require(&o.horizon, "options.horizon")?;
    let opts = trace_options(o);
    Ok(if o.torus {
        trace_arc_torus(u, &s.model, &x, horizon, &opts)?
    } else {
        let kernel =
            PlanarKernel::with_options(s.model.clone(), action_options(o, ActionOptions::fast()));
        trace_arc(u, &kernel, &x, horizon, &opts)?
    })
}

fn arc_summary(arc: &SingularArc) -> Value {
    json!({
        "points": arc.len(),
        "segments": arc.step_times_used.len(),
        "final_time": arc.final_time(),
        "final_point": arc.points.last().map(vec_json),
        "stopped_reason": arc.stopped_reason,
        "all_singular": arc.singular_flags.iter().all(|&f| f),
        "lipschitz_constant": arc.lipschitz_constant,
        "max_distance_from_seed": arc.max_distance_from_seed(),
        "max_inclusion_residual": arc.inclusion_residuals.iter().copied().fold(0.0, f64::max),
        "winding": arc.winding.last(),
    })
}

fn run_trace(s: &Scenario) -> Result<TaskOutput, CliError> {
    let arc = trace(s)?;
    Ok(TaskOutput {
        result: arc_summary(&arc),
        files: vec![("arc.csv".into(), arc_csv(&arc))],
        certified: true,
    })
}

fn run_certify(s: &Scenario) -> Result<TaskOutput, CliError> {
    let arc = trace(s)?;
    let u = field_of(s)?;
    let sampling = sampling_options(&s.options);
    let tol = s.options.tol.unwrap_or(2e-2);
    let cert = certify_inclusion(&arc, u, &s.model, tol, &sampling)?;
    let energy = energy_monitor(
        &arc,
        u,
        &s.model,
        &EnergyOptions {
            sampling,
            ..EnergyOptions::default()
        },
    )?;
    let rows: Vec<Vec<f64>> = cert
        .samples
        .iter()
        .map(|p| vec![p.time, p.velocity.norm(), p.residual])
        .collect();
    let certified = cert.passed && energy.feasible;
    Ok(TaskOutput {
        result: json!({
            "arc": arc_summary(&arc),
            "inclusion": {
                "max_residual": cert.max_residual,
                "velocity_scale": cert.velocity_scale,
                "tol": cert.tol,
                "passed": cert.passed,
            },
            "energy": {
                "c1": energy.c1,
                "c2": energy.c2,
                "feasible": energy.feasible,
            },
        }),
        files: vec![
            ("arc.csv".into(), arc_csv(&arc)),
            (
                "inclusion.csv".into(),
                table_csv(&["time", "velocity_norm", "residual"], &rows),
            ),
        ],
        certified,
    })
}

fn run_weakkam(s: &Scenario) -> Result<TaskOutput, CliError> {
    let o = &s.options;
    let d = WeakKamOptions::default();
    let opts = WeakKamOptions {
        resolution: o.resolution.unwrap_or(d.resolution),
        t_step: o.t_step.unwrap_or(d.t_step),
        tol: o.tol.unwrap_or(d.tol),
        max_iter: o.max_iter.unwrap_or(d.max_iter),
        search_radius: o.sample_radius,
    };
    let r = weak_kam_solve(&s.model, &opts)?;
    Ok(TaskOutput {
        result: json!({
            "c": r.c,
            "iterations": r.iterations,
            "residual": r.residual,
            "search_radius": r.search_radius,
            "kernel_offsets": r.kernel_offsets,
            "resolution": opts.resolution,
            "t_step": opts.t_step,
            "history": r.history,
        }),
        files: vec![("grid.csv".into(), grid_csv(&r.u))],
        certified: true,
    })
}

/// Dispatches to the module operation without touching the filesystem.
pub fn execute(s: &Scenario) -> Result<TaskOutput, CliError> {
    match s.task {
        Task::Fundamental => run_fundamental(s),
        Task::Probe => run_probe(s),
        Task::Supconv => run_supconv(s),
        Task::Classify => run_classify(s),
        Task::Trace => run_trace(s),
        Task::Weakkam => run_weakkam(s),
        Task::Certify => run_certify(s),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: String,
    pub library: String,
    pub version: String,
    pub config_sha256: String,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// What a run produced; `exit_code` follows the process convention.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub report: Value,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs a validated scenario and writes its outputs into `out_dir`.
///
/// Solver errors are recorded in `report.json` with exit code 1; only
/// configuration and I/O problems are returned as `Err`.
pub fn run_scenario(
    config: &ScenarioConfig,
    task: Task,
    config_raw: &str,
    out_dir: &Path,
) -> Result<RunReport, CliError> {
    let scenario = config.validate(task)?;
    let outcome = execute(&scenario);
    if let Err(e @ (CliError::Config { .. } | CliError::Io { .. })) = outcome {
        return Err(e);
    }
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let header = json!({
        "task": task.name(),
        "model": scenario.model.id,
        "dim": scenario.model.dim(),
        "field": config.field,
        "options": scenario.options,
    });
    let (exit_code, status, body, files) = match outcome {
        Ok(out) => {
            let (code, status) = if out.certified {
                (EXIT_OK, "ok")
            } else {
                (EXIT_CERTIFIED_FAILURE, "certified_failure")
            };
            (code, status, json!({ "result": out.result }), out.files)
        }
        Err(e) => (
            EXIT_ERROR,
            "error",
            json!({ "error": { "message": e.to_string(), "detail": format!("{e:?}") } }),
            Vec::new(),
        ),
    };
    let mut report = header;
    report["status"] = json!(status);
    report["exit_code"] = json!(exit_code);
    for (k, v) in body.as_object().expect("object").iter() {
        report[k] = v.clone();
    }

    let mut entries = Vec::new();
    let mut record = |name: &str, contents: &[u8]| -> Result<(), CliError> {
        write_file(&out_dir.join(name), contents)?;
        entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(())
    };
    for (name, contents) in &files {
        record(name, contents.as_bytes())?;
    }
    let mut report_text = serde_json::to_string_pretty(&report).expect("report serializes");
    report_text.push('\n');
    record("report.json", report_text.as_bytes())?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));

    let manifest = Manifest {
        task: task.name().to_string(),
        library: "hjsing-core".to_string(),
        version: hjsing_core::VERSION.to_string(),
        config_sha256: sha256_hex(config_raw.as_bytes()),
        files: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&out_dir.join("manifest.json"), text.as_bytes())?;
    Ok(RunReport {
        exit_code,
        out_dir: out_dir.to_path_buf(),
        manifest,
        report,
    })
}

/// One registry id per line.
pub fn model_listing() -> String {
    MODEL_IDS.iter().map(|id| format!("{id}\n")).collect()
}

pub fn fixture_listing() -> String {
    FIXTURE_IDS.iter().map(|id| format!("{id}\n")).collect()
}
