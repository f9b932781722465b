//! The `corner-waves` command line: meshing, the Dirichlet–Neumann spectrum,
//! time evolution, verification suites and trace reports.
//!
//! Every run may start from a JSON [`RunConfig`] given with `--config`;
//! command-line flags override its values. Exit codes: 0 on success, 1 when
//! a verification check fails, 2 on usage, configuration or runtime errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::domain::{DomainConfig, DomainSpec};
use crate::error::{Error, Result};
use crate::evolution::{evolve, write_state_csv, EvolveConfig, Unforced, WaveState};
use crate::mesh::{generate, grading_samples, GradingParams};
use crate::traces::{TraceField, TraceNorms, DEFAULT_SCREEN};
use crate::verify::{
    run_suite_on, spectrum_rows, standing_mode, zero_mean_state, Discretization, Ensemble, Suite, SuiteParams,
    CONTINUUM_MODES,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const SCHEMA_HELP: &str = r#"run configuration (JSON, every field optional):
{
  "geometry": "rectangle" | "one-object" | "two-object" | "sector" | "emerging-beach"
              | "path/to/domain.json" | { inline domain object },
  "mesh":   { "h0": 0.1, "grading_exponent": 3.0, "rho0": 0.25 },
  "evolve": { "dt": 0.01, "steps": 1000, "initial": "standing" | "continuum",
              "zero_mass": false, "monitor_order": 1, "snapshot_every": 0, "gravity": 1.0 },
  "verify": { "suite": "all", "samples": 100, "steps": 1000 },
  "modes": 5,
  "seed": 42,
  "out": "out",
  "threads": 4
}
domain object:
{ "gravity": 1.0,
  "dirichlet_intervals": [[-3, -0.5], {"a": 0.5, "b": 3, "average_window": [0.5, 1.5]}],
  "objects": [{"arc": [[-0.5, 0], [-0.2, -0.3], [0.2, -0.3], [0.5, 0]]}],
  "bottom": [[-3, -1], [3, -1]],
  "truncation": {"left": true, "right": true} }"#;

/// Where the domain comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySource {
    /// Built-in id or path to a domain JSON file.
    Named(String),
    Inline(DomainConfig),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSettings {
    pub h0: Option<f64>,
    pub grading_exponent: Option<f64>,
    pub rho0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// ψ is the first non-constant eigenvector, ζ = 0.
    Standing,
    /// Zero-mean smooth random data; needs a seed.
    Continuum,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSettings {
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub initial: Option<InitialState>,
    pub zero_mass: Option<bool>,
    pub monitor_order: Option<usize>,
    pub snapshot_every: Option<usize>,
    pub gravity: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub suite: Option<String>,
    pub samples: Option<usize>,
    pub steps: Option<usize>,
}

/// Everything a run can be configured with.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<GeometrySource>,
    pub mesh: MeshSettings,
    pub evolve: EvolveSettings,
    pub verify: VerifySettings,
    pub modes: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Resolves a built-in id, an inline JSON object or a domain file.
pub fn resolve_geometry(source: &GeometrySource) -> Result<(String, DomainSpec)> {
    let spec = match source {
        GeometrySource::Inline(cfg) => return Ok(("inline".into(), DomainSpec::from_config(cfg))),
        GeometrySource::Named(name) => name,
    };
    if let Ok(spec) = DomainSpec::builtin(spec) {
        return Ok((spec_label(source), spec));
    }
    if spec.trim_start().starts_with('{') {
        return Ok(("inline".into(), DomainSpec::from_json(spec)?));
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(Error::UnknownGeometry(spec.clone()));
    }
    Ok((spec_label(source), DomainSpec::load(path)?))
}

fn spec_label(source: &GeometrySource) -> String {
    match source {
        GeometrySource::Named(n) => {
            Path::new(n).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| n.clone())
        }
        GeometrySource::Inline(_) => "inline".into(),
    }
}

#[derive(Parser, Debug)]
#[command(name = "corner-waves", version, about = "Linear water waves on 2D corner domains", after_help = SCHEMA_HELP)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "CORNER_WAVES_OUT")]
    out: Option<PathBuf>,
    /// Omit the timestamp line from CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct MeshFlags {
    /// Built-in id, inline JSON object or domain file.
    #[arg(long)]
    geometry: Option<String>,
    /// Mesh size away from corners.
    #[arg(long)]
    h0: Option<f64>,
    /// Grading exponent in [1, 4].
    #[arg(long)]
    grading: Option<f64>,
    /// Radius of the graded corner regions.
    #[arg(long)]
    rho0: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a mesh and write it in the plain-text mesh format.
    Mesh {
        #[command(flatten)]
        mesh: MeshFlags,
    },
    /// Spectrum of the Dirichlet–Neumann operator.
    Dn {
        #[command(flatten)]
        mesh: MeshFlags,
        /// Number of non-zero eigenvalues.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Crank–Nicolson evolution of the surface system.
    Evolve {
        #[command(flatten)]
        mesh: MeshFlags,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        initial: Option<InitialState>,
        /// Keep the zero-mass realization.
        #[arg(long)]
        zero_mass: bool,
        /// Highest order of the weighted monitors (0, 1 or 2).
        #[arg(long)]
        monitor_order: Option<usize>,
        #[arg(long)]
        snapshot_every: Option<usize>,
        #[arg(long)]
        gravity: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a verification suite and write its JSON report.
    Verify {
        #[command(flatten)]
        mesh: MeshFlags,
        /// traces, dno, rellich, evolution, commutator, corner or all.
        #[arg(long)]
        suite: Option<String>,
        /// Master seed, required by suites that draw random fields.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Domain, mesh and trace semi-norm report for one surface field.
    Report {
        #[command(flatten)]
        mesh: MeshFlags,
        #[arg(long, value_enum)]
        field: Option<InitialState>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Runs the command line and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if is_config_error(&e) {
                eprintln!("\n{SCHEMA_HELP}");
            }
            EXIT_USAGE
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::UnknownGeometry(_) | Error::UnknownSuite(_) | Error::Json(_) | Error::InvalidDomain(_))
}

struct Session {
    cfg: RunConfig,
    out: PathBuf,
    timestamp: bool,
}

impl Session {
    fn geometry(&self, flag: &Option<String>) -> Result<(String, DomainSpec)> {
        let source = match flag {
            Some(g) => GeometrySource::Named(g.clone()),
            None => self
                .cfg
                .geometry
                .clone()
                .ok_or_else(|| Error::InvalidArgument("no geometry given (--geometry or config)".into()))?,
        };
        let (label, spec) = resolve_geometry(&source)?;
        spec.validate().into_result()?;
        Ok((label, spec))
    }

    fn grading(&self, spec: &DomainSpec, flags: &MeshFlags) -> Result<GradingParams> {
        let m = &self.cfg.mesh;
        let h0 = flags.h0.or(m.h0).unwrap_or(0.1);
        let beta = flags.grading.or(m.grading_exponent).unwrap_or(3.0);
        let rho0 = flags.rho0.or(m.rho0).unwrap_or_else(|| GradingParams::default_rho0(spec));
        let params = GradingParams::new(h0, beta, rho0);
        params.validate(spec)?;
        Ok(params)
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    /// Writes a CSV file, preceded by a timestamp comment unless disabled.
    fn write_csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        if self.timestamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            writeln!(buf, "# generated at unix time {secs}")?;
        }
        body(&mut buf)?;
        let path = self.path(name)?;
        std::fs::write(&path, buf)?;
        Ok(path)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name)?;
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        // a pool already set up by an earlier run in this process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let session = Session { cfg, out, timestamp: !cli.no_timestamp };
    match cli.command {
        Command::Mesh { mesh } => run_mesh(&session, &mesh),
        Command::Dn { mesh, modes } => run_dn(&session, &mesh, modes),
        Command::Evolve { mesh, dt, steps, initial, zero_mass, monitor_order, snapshot_every, gravity, seed } => {
            let e = &session.cfg.evolve;
            let settings = EvolveSettings {
                dt: dt.or(e.dt),
                steps: steps.or(e.steps),
                initial: initial.or(e.initial),
                zero_mass: Some(zero_mass || e.zero_mass.unwrap_or(false)),
                monitor_order: monitor_order.or(e.monitor_order),
                snapshot_every: snapshot_every.or(e.snapshot_every),
                gravity: gravity.or(e.gravity),
            };
            run_evolve(&session, &mesh, &settings, seed.or(session.cfg.seed))
        }
        Command::Verify { mesh, suite, seed, samples, steps } => {
            let v = &session.cfg.verify;
            let settings =
                VerifySettings { suite: suite.or(v.suite.clone()), samples: samples.or(v.samples), steps: steps.or(v.steps) };
            run_verify(&session, &mesh, &settings, seed.or(session.cfg.seed))
        }
        Command::Report { mesh, field, seed } => run_report(&session, &mesh, field, seed.or(session.cfg.seed)),
    }
}

#[derive(Serialize)]
struct MeshSummary {
    geometry: String,
    params: GradingParams,
    vertices: usize,
    triangles: usize,
    trace_nodes: usize,
    components: usize,
    min_angle_deg: f64,
    min_boundary_edge: f64,
    max_boundary_edge: f64,
    file: PathBuf,
}

fn run_mesh(s: &Session, flags: &MeshFlags) -> Result<i32> {
    let (label, spec) = s.geometry(&flags.geometry)?;
    let params = s.grading(&spec, flags)?;
    let mesh = generate(&spec, &params)?;
    let file = s.write_text("mesh.txt", &mesh.to_text())?;
    let grid = crate::mesh::boundary_trace_grid(&mesh);
    let summary = MeshSummary {
        geometry: label,
        params,
        vertices: mesh.num_vertices(),
        triangles: mesh.num_triangles(),
        trace_nodes: grid.len(),
        components: grid.num_components(),
        min_angle_deg: mesh.min_angle().to_degrees(),
        min_boundary_edge: mesh.min_boundary_edge(),
        max_boundary_edge: mesh.max_boundary_edge(),
        file,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(EXIT_OK)
}

fn run_dn(s: &Session, flags: &MeshFlags, modes: Option<usize>) -> Result<i32> {
    let (_, spec) = s.geometry(&flags.geometry)?;
    let params = s.grading(&spec, flags)?;
    let modes = modes.or(s.cfg.modes).unwrap_or(5);
    let d = Discretization::generate(&spec, &params)?;
    let rows = spectrum_rows(&d.op, &spec, (modes + 1).min(d.op.dim()))?;
    let path = s.write_csv("spectrum.csv", |out| {
        writeln!(out, "index,lambda,analytic_lambda,rel_error")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &rows {
            writeln!(out, "{},{:.17e},{},{}", r.index, r.lambda, opt(r.analytic), opt(r.rel_error))?;
        }
        Ok(())
    })?;
    for r in &rows {
        match r.rel_error {
            Some(e) => println!("{:3} {:.10} rel_error {:.3e}", r.index, r.lambda, e),
            None => println!("{:3} {:.10}", r.index, r.lambda),
        }
    }
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

fn initial_field(d: &Discretization, kind: InitialState, seed: Option<u64>) -> Result<WaveState> {
    let n = d.op.dim();
    match kind {
        InitialState::Standing => Ok(WaveState::new(TraceField::zeros(n), standing_mode(&d.op)?.1, 0.0)),
        InitialState::Continuum => {
            let seed = seed.ok_or_else(|| Error::InvalidArgument("continuum initial data needs --seed".into()))?;
            Ok(zero_mean_state(&d.op, seed))
        }
    }
}

fn run_evolve(s: &Session, flags: &MeshFlags, e: &EvolveSettings, seed: Option<u64>) -> Result<i32> {
    let (_, spec) = s.geometry(&flags.geometry)?;
    let params = s.grading(&spec, flags)?;
    let d = Discretization::generate(&spec, &params)?;
    let g = e.gravity.unwrap_or(spec.gravity);
    let mut cfg = EvolveConfig::new(e.dt.unwrap_or(0.01), e.steps.unwrap_or(1000));
    cfg.zero_mass = e.zero_mass.unwrap_or(false);
    cfg.monitor_order = e.monitor_order.unwrap_or(1);
    cfg.snapshot_every = e.snapshot_every.unwrap_or(0);
    let u0 = initial_field(&d, e.initial.unwrap_or(InitialState::Standing), seed)?;
    let tr = evolve(&d.op, g, &u0, &Unforced(d.op.dim()), &cfg, Some(&d.weight))?;
    let series = s.write_csv("series.csv", |out| tr.write_csv(out))?;
    let last = s.write_csv("final_state.csv", |out| write_state_csv(&d.op, &tr.final_state, out))?;
    for (step, state) in tr.snapshots.iter().filter(|(k, _)| *k != 0 && *k != cfg.steps) {
        s.write_csv(&format!("state_{step:06}.csv"), |out| write_state_csv(&d.op, state, out))?;
    }
    println!("energy drift {:.3e} over {} steps", tr.max_energy_drift(), cfg.steps);
    println!("wrote {} and {}", series.display(), last.display());
    Ok(EXIT_OK)
}

fn run_verify(s: &Session, flags: &MeshFlags, v: &VerifySettings, seed: Option<u64>) -> Result<i32> {
    let suite: Suite = v.suite.as_deref().unwrap_or("all").parse()?;
    let seed = match (seed, suite.uses_ensembles()) {
        (Some(seed), _) => seed,
        (None, false) => 0,
        (None, true) => {
            return Err(Error::InvalidArgument(format!("suite `{suite}` draws random fields and needs --seed")))
        }
    };
    let (label, spec) = s.geometry(&flags.geometry)?;
    let defaults = SuiteParams::default();
    let params = SuiteParams {
        h0: flags.h0.or(s.cfg.mesh.h0).unwrap_or(defaults.h0),
        grading_exponent: flags.grading.or(s.cfg.mesh.grading_exponent).unwrap_or(defaults.grading_exponent),
        rho0: flags.rho0.or(s.cfg.mesh.rho0),
        samples: v.samples.unwrap_or(defaults.samples),
        steps: v.steps.unwrap_or(defaults.steps),
    };
    let report = run_suite_on(suite, &label, &spec, &params, seed)?;
    let path = s.write_text(&format!("verify_{suite}_{label}.json"), &(report.to_json()? + "\n"))?;
    for c in &report.checks {
        println!("{} {:44} {:.6e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    let failed = report.failures().count();
    println!("{} checks, {failed} failed; wrote {}", report.checks.len(), path.display());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[derive(Serialize)]
struct TraceReport {
    geometry: String,
    params: GradingParams,
    corners: Vec<CornerRow>,
    field: InitialState,
    components: Vec<crate::traces::ComponentReport>,
    seminorm_half: f64,
    seminorm_one: f64,
    grading_ratio: [f64; 2],
}

#[derive(Serialize)]
struct CornerRow {
    x: f64,
    z: f64,
    angle: f64,
    kind: String,
    mixed: bool,
}

fn run_report(s: &Session, flags: &MeshFlags, field: Option<InitialState>, seed: Option<u64>) -> Result<i32> {
    let (label, spec) = s.geometry(&flags.geometry)?;
    let params = s.grading(&spec, flags)?;
    let d = Discretization::generate(&spec, &params)?;
    let kind = field.unwrap_or(InitialState::Standing);
    let f = match kind {
        InitialState::Standing => standing_mode(&d.op)?.1,
        InitialState::Continuum => {
            let seed = seed.ok_or_else(|| Error::InvalidArgument("a continuum field needs --seed".into()))?;
            Ensemble::Continuum { modes: CONTINUUM_MODES }.sample(d.grid(), seed, 0)
        }
    };
    let norms = TraceNorms::new(d.grid(), DEFAULT_SCREEN)?;
    let ratios: Vec<f64> = grading_samples(d.mesh(), &params).iter().map(|g| g.ratio()).collect();
    let report = TraceReport {
        geometry: label,
        params,
        corners: spec
            .corners
            .iter()
            .map(|c| CornerRow { x: c.x, z: c.z, angle: c.angle, kind: format!("{:?}", c.kind), mixed: c.is_mixed() })
            .collect(),
        field: kind,
        components: norms.report(&f),
        seminorm_half: norms.half(&f),
        seminorm_one: norms.one(&f),
        grading_ratio: [ratios.iter().copied().fold(f64::INFINITY, f64::min), ratios.iter().copied().fold(0.0, f64::max)],
    };
    let text = serde_json::to_string_pretty(&report)?;
    let path = s.write_text("trace_report.json", &(text.clone() + "\n"))?;
    println!("{text}");
    eprintln!("wrote {}", path.display());
    Ok(EXIT_OK)
}
