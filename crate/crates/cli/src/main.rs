// Negated comparisons are deliberate: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ptsideband::error::{Error, ErrorKind};
use ptsideband::observables::{linspace, spectrum_on};
use ptsideband::oracle::{validate_on, OracleSettings, MIN_WINDOW_PERIODS};
use ptsideband::provenance::{config_hash, value_hash, VERSION};
use ptsideband::sweep::write_sweep_csv;
use ptsideband::{
    assess_linear_stability, derive, reproduce_figure, run_sweep, selftest, solve_steady_state,
    write_spectrum_csv, BranchPolicy, ConfigDocument, SweepSpec, C,
};
use serde::Serialize;
use serde_json::{json, Value};

const EXIT_INPUT: u8 = 1;
const EXIT_PHYSICS: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "ptsideband",
    version,
    about = "Sideband generation in a gain/loss optomechanical system with atoms"
)]
struct Cli {
    /// Worker threads for sweep grids (default: all cores).
    #[arg(long, global = true, env = "PTSIDEBAND_THREADS")]
    threads: Option<usize>,

    /// Where to write the run manifest for commands that print to stdout
    /// (default: stderr).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the pump-only steady state.
    SteadyState {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "lowest")]
        branch: BranchPolicy,
    },
    /// Probe spectrum over Ω/ω_m, written as CSV.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        omega_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega_max: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "lowest")]
        branch: BranchPolicy,
    },
    /// Run a one- or two-axis parameter sweep.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV (default: the spec path with a .csv extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the datasets behind one figure.
    Figure {
        #[arg(long)]
        id: String,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Compare closed-form sidebands against direct time integration.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Probe detuning in units of ω_m.
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        #[arg(long)]
        probe_ratio: Option<f64>,
        /// Extraction window length in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Closed form vs harmonic balance on random points, plus scaling laws.
    Selftest {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = selftest::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Input => EXIT_INPUT,
            ErrorKind::Physics => EXIT_PHYSICS,
            ErrorKind::Io => EXIT_IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    argv: Vec<String>,
    version: &'static str,
    config_hash: String,
    resolved_config: Value,
    duration_s: f64,
    outputs: Vec<PathBuf>,
}

/// What a subcommand produced, before the manifest is assembled.
struct Outcome {
    config_hash: String,
    resolved_config: Value,
    outputs: Vec<PathBuf>,
    /// Manifest path next to the outputs; `None` means the `--manifest`
    /// flag or stderr.
    manifest_beside: Option<PathBuf>,
    stdout: Option<Value>,
    exit: u8,
}

fn read_config(path: &Path) -> Result<ConfigDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    ConfigDocument::from_json(&text).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(path, e))
}

fn pair(z: C<f64>) -> [f64; 2] {
    [z.re, z.im]
}

fn steady_state(config: &Path, branch: BranchPolicy) -> Result<Outcome, Failure> {
    let doc = read_config(config)?;
    let p = doc.resolve()?;
    let d = derive(&p);
    let s = solve_steady_state(&p, &d, branch)?;
    let st = assess_linear_stability(&p, &d, &s);
    let out = json!({
        "roots": s.all_roots,
        "selected": s.selected,
        "a_s": pair(s.a_s),
        "b_s": pair(s.b_s),
        "c_s": pair(s.c_s),
        "x_s": s.x_s,
        "residual": s.residual,
        "stable": st.stable,
        "eigenvalues": st.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        config_hash: config_hash(&doc),
        resolved_config: serde_json::to_value(p).expect("params serialize"),
        outputs: Vec::new(),
        manifest_beside: None,
        stdout: Some(out),
        exit: 0,
    })
}

fn spectrum_cmd(
    config: &Path,
    omega_min: f64,
    omega_max: f64,
    points: usize,
    out: &Path,
    branch: BranchPolicy,
) -> Result<Outcome, Failure> {
    let doc = read_config(config)?;
    let p = doc.resolve()?;
    if points < 2 || !(omega_min < omega_max) {
        return Err(Error::InvalidInput(format!(
            "need omega-min < omega-max and at least 2 points (got {omega_min}, {omega_max}, {points})"
        ))
        .into());
    }
    let d = derive(&p);
    let s = solve_steady_state(&p, &d, branch)?;
    let grid: Vec<f64> = linspace(omega_min, omega_max, points)
        .into_iter()
        .map(|x| x * p.omega_m)
        .collect();
    let pts = spectrum_on(&p, &d, &s, &grid)?;
    let file = fs::File::create(out).map_err(|e| io_failure(out, e))?;
    let mut w = BufWriter::new(file);
    write_spectrum_csv(&mut w, &pts)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(out, e))?;
    Ok(Outcome {
        config_hash: config_hash(&doc),
        resolved_config: serde_json::to_value(p).expect("params serialize"),
        outputs: vec![out.to_path_buf()],
        manifest_beside: Some(with_suffix(out, ".manifest.json")),
        stdout: None,
        exit: 0,
    })
}

fn sweep_cmd(spec_path: &Path, out: Option<PathBuf>) -> Result<Outcome, Failure> {
    let text = fs::read_to_string(spec_path).map_err(|e| io_failure(spec_path, e))?;
    let spec = SweepSpec::from_json(&text).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", spec_path.display()),
    })?;
    let result = run_sweep(&spec)?;
    let csv = out.unwrap_or_else(|| spec_path.with_extension("csv"));
    let file = fs::File::create(&csv).map_err(|e| io_failure(&csv, e))?;
    let mut w = BufWriter::new(file);
    write_sweep_csv(&mut w, &result)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(&csv, e))?;

    let resolved = spec.base_config.resolve()?;
    let sidecar_path = with_suffix(&csv, ".sidecar.json");
    let multistable: Vec<_> = result.multistable_points().into_iter().cloned().collect();
    let sidecar = json!({
        "spec": result.spec,
        "resolved_base": resolved,
        "shape": result.shape,
        "provenance": result.provenance,
        "max_residual_rel": result.max_residual_rel(),
        "masked_points": result.points.iter().filter(|p| p.masked).count(),
        "multistable": !multistable.is_empty(),
        "multistable_points": multistable,
    });
    write_json(&sidecar_path, &sidecar)?;
    Ok(Outcome {
        config_hash: config_hash(&spec.base_config),
        resolved_config: serde_json::to_value(resolved).expect("params serialize"),
        outputs: vec![csv.clone(), sidecar_path],
        manifest_beside: Some(with_suffix(&csv, ".manifest.json")),
        stdout: None,
        exit: 0,
    })
}

fn figure_cmd(id: &str, outdir: &Path) -> Result<Outcome, Failure> {
    let out = reproduce_figure(id, outdir)?;
    // Each dataset carries its own config; the sidecar lists them all.
    let sidecar_text = fs::read_to_string(&out.sidecar).map_err(|e| io_failure(&out.sidecar, e))?;
    let sidecar: Value = serde_json::from_str(&sidecar_text).map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    let configs: Vec<Value> = sidecar["datasets"]
        .as_array()
        .map(|ds| ds.iter().map(|d| json!({ "file": d["file"], "spectrum": d["spectrum"]["resolved"], "sweep": d["sweep"]["resolved_base"] })).collect())
        .unwrap_or_default();
    let resolved = Value::Array(configs);
    let mut outputs = out.files.clone();
    outputs.push(out.sidecar.clone());
    Ok(Outcome {
        config_hash: value_hash(&resolved),
        resolved_config: resolved,
        outputs,
        manifest_beside: Some(outdir.join(format!("fig{id}.manifest.json"))),
        stdout: None,
        exit: 0,
    })
}

fn validate_cmd(
    config: &Path,
    omega: f64,
    probe_ratio: Option<f64>,
    duration: Option<f64>,
) -> Result<Outcome, Failure> {
    let mut doc = read_config(config)?;
    if let Some(r) = probe_ratio {
        doc.probe_ratio = r;
    }
    let p = doc.resolve()?;
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::InvalidInput("omega must be finite and non-zero".into()).into());
    }
    let omega_rad = omega * p.omega_m;
    let mut settings = OracleSettings::default();
    if let Some(t) = duration {
        let periods = (t * omega_rad.abs() / std::f64::consts::TAU).floor();
        if !(periods >= MIN_WINDOW_PERIODS as f64) {
            return Err(Error::InsufficientWindow(format!(
                "{t} s holds {periods} beat periods, need at least {MIN_WINDOW_PERIODS}"
            ))
            .into());
        }
        settings.window_periods = periods as usize;
    }
    let d = derive(&p);
    let s = solve_steady_state(&p, &d, BranchPolicy::Lowest)?;
    let report = validate_on(&p, &d, &s, omega_rad, &settings)?;
    Ok(Outcome {
        config_hash: config_hash(&doc),
        resolved_config: serde_json::to_value(p).expect("params serialize"),
        outputs: Vec::new(),
        manifest_beside: None,
        stdout: Some(serde_json::to_value(report).expect("report serializes")),
        exit: 0,
    })
}

fn selftest_cmd(points: usize, seed: u64) -> Result<Outcome, Failure> {
    let report = selftest::run(points, seed);
    for c in &report.checks {
        let status = if c.ok() { "PASS" } else { "FAIL" };
        println!(
            "{status} {}: {} passed, {} failed, worst {:.3e} ({})",
            c.name, c.passed, c.failed, c.worst, c.detail
        );
    }
    println!("{} checks passed, {} failed", report.passed, report.failed);
    let settings = json!({ "points": points, "seed": seed });
    Ok(Outcome {
        config_hash: value_hash(&settings),
        resolved_config: settings,
        outputs: Vec::new(),
        manifest_beside: None,
        stdout: None,
        exit: if report.failed == 0 { 0 } else { EXIT_INPUT },
    })
}

fn dispatch(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::SteadyState { config, branch } => steady_state(&config, branch),
        Command::Spectrum {
            config,
            omega_min,
            omega_max,
            points,
            out,
            branch,
        } => spectrum_cmd(&config, omega_min, omega_max, points, &out, branch),
        Command::Sweep { spec, out } => sweep_cmd(&spec, out),
        Command::Figure { id, outdir } => figure_cmd(&id, &outdir),
        Command::Validate {
            config,
            omega,
            probe_ratio,
            duration,
        } => validate_cmd(&config, omega, probe_ratio, duration),
        Command::Selftest { points, seed } => selftest_cmd(points, seed),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::SteadyState { .. } => "steady-state",
        Command::Spectrum { .. } => "spectrum",
        Command::Sweep { .. } => "sweep",
        Command::Figure { .. } => "figure",
        Command::Validate { .. } => "validate",
        Command::Selftest { .. } => "selftest",
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidInput("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure {
                code: EXIT_INPUT,
                message: e.to_string(),
            })?;
    }
    let name = command_name(&cli.command);
    let start = Instant::now();
    let outcome = dispatch(cli.command)?;
    if let Some(v) = &outcome.stdout {
        println!("{}", serde_json::to_string_pretty(v).expect("json"));
    }
    let manifest = RunManifest {
        command: name.to_string(),
        argv: std::env::args().skip(1).collect(),
        version: VERSION,
        config_hash: outcome.config_hash,
        resolved_config: outcome.resolved_config,
        duration_s: start.elapsed().as_secs_f64(),
        outputs: outcome.outputs,
    };
    match outcome.manifest_beside.or(cli.manifest) {
        Some(path) => write_json(&path, &manifest)?,
        None => eprintln!("{}", serde_json::to_string(&manifest).expect("json")),
    }
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
