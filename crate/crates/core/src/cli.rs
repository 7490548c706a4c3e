//! `gpq` command-line front end.
//!
//! Exit codes: 0 success, 1 simulation or I/O failure, 2 usage error,
//! 3 bench-file diagnostics.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    compile, parse, BenchProgram, DetectorSpec, GpElement, Located, MeasureKind, ParseDiagnostic, RunPlan, ScanSpec,
    ScanTarget, SourceSpec,
};
use crate::counting::{BellOptions, DetectorModel, SCurveModel, Sampling};
use crate::experiment::{compensate, execute, ExecOptions, RunOutput};
use crate::measurement::ChshForm;
use crate::polarization::Polarization;
use crate::tomography::{BasisSet, MleOptions, TomographySettings};

pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("CARGO_PKG_NAME"));
pub const PLOT_SCRIPT: &str = "scripts/plot.py";
pub const OUT_ENV: &str = "GPQ_OUT";

#[derive(Debug, Parser)]
#[command(name = "gpq", version = BUILD_ID, about = "Geometric-phase photon-pair simulator")]
pub struct Cli {
    /// Master RNG seed; overrides any `seed` line of a bench file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pump power behind H/V/D/A polarizers versus the stack HWP angle.
    Classical(ClassicalArgs),
    /// Coincidence fringe while rotating the idler analyzer HWP.
    Fringe(FringeArgs),
    /// CHSH parameter versus the stack HWP angle, with the S-curve fit.
    Bell(BellArgs),
    /// State tomography at one or more stack HWP angles.
    Tomo(TomoArgs),
    /// Stack angle that cancels a birefringent phase pair.
    Compensate(CompensateArgs),
    /// Run a `.bench` file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct ClassicalArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 180.0, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// Gaussian power-meter noise, as a fraction of the input power.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// HH weight, 0.5 is balanced.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Werner visibility.
    #[arg(long, default_value_t = 1.0)]
    pub v: f64,
    /// HH/VV coherence.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct DetectorArgs {
    /// Ideal detectors sized for this many mean coincidences per setting.
    #[arg(long)]
    pub counts: Option<f64>,
    #[arg(long)]
    pub eta_s: Option<f64>,
    #[arg(long)]
    pub eta_i: Option<f64>,
    /// Dark counts per second, both arms.
    #[arg(long)]
    pub dark: Option<f64>,
    #[arg(long)]
    pub window_ns: Option<f64>,
    /// Generated pairs per second.
    #[arg(long)]
    pub pairs: Option<f64>,
    /// Seconds per setting.
    #[arg(long)]
    pub acq: Option<f64>,
    /// Use exact expectations instead of Poisson draws.
    #[arg(long)]
    pub noiseless: bool,
}

impl DetectorArgs {
    pub fn model(&self) -> DetectorModel {
        let mut d = self.counts.map_or_else(DetectorModel::default, DetectorModel::ideal);
        if let Some(x) = self.eta_s {
            d.eta_s = x;
        }
        if let Some(x) = self.eta_i {
            d.eta_i = x;
        }
        if let Some(x) = self.dark {
            d.dark_s = x;
            d.dark_i = x;
        }
        if let Some(x) = self.window_ns {
            d.window = x * 1e-9;
        }
        if let Some(x) = self.pairs {
            d.pair_rate = x;
        }
        if let Some(x) = self.acq {
            d.acquisition = x;
        }
        if self.noiseless {
            d.sampling = Sampling::Expected;
        }
        d
    }
}

#[derive(Debug, Args)]
pub struct FringeArgs {
    /// Take the setup from a bench file instead of flags.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// Stack HWP angle, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    /// Signal analyzer basis.
    #[arg(long, default_value = "H")]
    pub basis: Polarization,
    /// Idler HWP sweep, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 180.0, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 5.0)]
    pub step: f64,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Abs,
    Signed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitArg {
    Abs,
    Cos,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// Stack HWP scan, degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 2.5)]
    pub step: f64,
    /// How the four correlations are combined.
    #[arg(long, value_enum, default_value_t = FormArg::Abs)]
    pub form: FormArg,
    /// Headline S-curve model: a + b|cos 4θ| or a + b cos 4θ.
    #[arg(long, value_enum, default_value_t = FitArg::Abs)]
    pub fit: FitArg,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// Stack HWP angles, degrees, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "22.5", allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, default_value = "overcomplete-36")]
    pub basis_set: BasisSet,
    /// Report linear inversion instead of maximum likelihood.
    #[arg(long)]
    pub linear: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Args)]
pub struct CompensateArgs {
    /// Birefringent phase on |HH>, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub phi_h: f64,
    /// Birefringent phase on |VV>, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub phi_v: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Simulation(String),
    Diagnostics(Vec<ParseDiagnostic>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Simulation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Diagnostics(_) => 3,
        }
    }
}

impl From<crate::error::Error> for CliError {
    fn from(e: crate::error::Error) -> Self {
        CliError::Simulation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Simulation(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Simulation(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Simulation(format!("json: {e}"))
    }
}

/// Completion marker written after every data file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub tool_version: &'static str,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    pub plot_script: &'static str,
}

fn check_range(from: f64, to: f64, step: f64) -> Result<(), CliError> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || to < from {
        return Err(CliError::Usage(format!(
            "invalid range: from {from} to {to} step {step} (need from <= to and step > 0)"
        )));
    }
    Ok(())
}

fn gp_stack(theta: f64) -> Vec<Located<GpElement>> {
    [GpElement::Qwp(45.0), GpElement::Hwp(theta), GpElement::Qwp(45.0)]
        .into_iter()
        .map(|e| Located::new(e, 0))
        .collect()
}

fn detector_spec(d: &DetectorModel) -> DetectorSpec {
    DetectorSpec {
        eta_s: d.eta_s,
        eta_i: d.eta_i,
        dark: d.dark_s,
        window_ns: d.window * 1e9,
        pairs: d.pair_rate,
        acq: d.acquisition,
        sampling: d.sampling,
    }
}

/// The bench program equivalent to a set of flags.
fn flag_program(
    measure: MeasureKind,
    theta: f64,
    source: &SourceArgs,
    detector: &DetectorArgs,
    scan: Option<ScanSpec>,
    signal: Option<Polarization>,
) -> BenchProgram {
    BenchProgram {
        pump: Located::new(Polarization::D, 0),
        gp: gp_stack(theta),
        source: Located::new(
            SourceSpec {
                p: source.p,
                v: source.v,
                c: (source.c != 1.0).then_some(source.c),
            },
            0,
        ),
        birefringence: None,
        imbalance: None,
        detector: Located::new(detector_spec(&detector.model()), 0),
        signal_analyzer: signal.map(|s| Located::new(s, 0)),
        scan: scan.map(|s| Located::new(s, 0)),
        measure: Located::new(measure, 0),
        seed: None,
    }
}

fn load_bench(path: &Path) -> Result<(BenchProgram, Vec<ParseDiagnostic>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse(&text).map_err(CliError::Diagnostics)?;
    Ok((parsed.program, parsed.warnings))
}

/// Parses and validates a flag-built program, so bad source or detector
/// values surface as usage errors.
fn checked(program: BenchProgram) -> Result<BenchProgram, CliError> {
    let text = program.to_string();
    match parse(&text) {
        Ok(p) => Ok(p.program),
        Err(d) => Err(CliError::Usage(
            d.iter().map(|x| x.message.clone()).collect::<Vec<_>>().join("; "),
        )),
    }
}

fn plan_of(program: &BenchProgram) -> Result<RunPlan, CliError> {
    compile(program).map_err(CliError::Diagnostics)
}

fn bench_or(
    path: Option<&PathBuf>,
    expect: MeasureKind,
    flags: impl FnOnce() -> Result<BenchProgram, CliError>,
) -> Result<(Vec<BenchProgram>, Vec<ParseDiagnostic>), CliError> {
    match path {
        Some(p) => {
            let (program, warnings) = load_bench(p)?;
            if program.measure.value != expect {
                return Err(CliError::Usage(format!(
                    "{} measures {}, not {}",
                    p.display(),
                    program.measure.value.keyword(),
                    expect.keyword()
                )));
            }
            Ok((vec![program], warnings))
        }
        None => Ok((vec![flags()?], Vec::new())),
    }
}

struct Job {
    name: &'static str,
    programs: Vec<BenchProgram>,
    opts: ExecOptions,
}

fn measure_name(m: MeasureKind) -> &'static str {
    m.keyword()
}

fn build_job(cli: &Cli) -> Result<(Job, Vec<ParseDiagnostic>), CliError> {
    let mut opts = ExecOptions::default();
    let (name, (programs, warnings)) = match &cli.command {
        Command::Classical(a) => {
            check_range(a.from, a.to, a.step)?;
            if !(a.noise >= 0.0 && a.noise.is_finite()) {
                return Err(CliError::Usage(format!("--noise must be non-negative, got {}", a.noise)));
            }
            opts.classical_noise = a.noise;
            let scan = ScanSpec {
                target: ScanTarget::GpHwp,
                from: a.from,
                to: a.to,
                step: a.step,
            };
            let det = DetectorArgs {
                counts: None,
                eta_s: None,
                eta_i: None,
                dark: None,
                window_ns: None,
                pairs: None,
                acq: None,
                noiseless: false,
            };
            let src = SourceArgs { p: 0.5, v: 1.0, c: 1.0 };
            let prog = checked(flag_program(MeasureKind::Classical, 0.0, &src, &det, Some(scan), None))?;
            ("classical", (vec![prog], Vec::new()))
        }
        Command::Fringe(a) => {
            let r = bench_or(a.bench.as_ref(), MeasureKind::Fringe, || {
                check_range(a.from, a.to, a.step)?;
                let scan = ScanSpec {
                    target: ScanTarget::AnalyzerIHwp,
                    from: a.from,
                    to: a.to,
                    step: a.step,
                };
                checked(flag_program(MeasureKind::Fringe, a.theta, &a.source, &a.detector, Some(scan), Some(a.basis)))
            })?;
            ("fringe", r)
        }
        Command::Bell(a) => {
            opts.bell = BellOptions {
                form: match a.form {
                    FormArg::Abs => ChshForm::Absolute,
                    FormArg::Signed => ChshForm::Signed,
                },
                ..Default::default()
            };
            opts.s_curve = match a.fit {
                FitArg::Abs => SCurveModel::Absolute,
                FitArg::Cos => SCurveModel::Cosine,
            };
            let r = bench_or(a.bench.as_ref(), MeasureKind::Bell, || {
                check_range(a.from, a.to, a.step)?;
                let scan = ScanSpec {
                    target: ScanTarget::GpHwp,
                    from: a.from,
                    to: a.to,
                    step: a.step,
                };
                checked(flag_program(MeasureKind::Bell, 0.0, &a.source, &a.detector, Some(scan), None))
            })?;
            ("bell", r)
        }
        Command::Tomo(a) => {
            opts.tomography = TomographySettings {
                basis_set: a.basis_set,
                counts_per_setting: a.detector.counts.unwrap_or(1e4),
                mle: MleOptions {
                    enabled: !a.linear,
                    tolerance: a.tolerance,
                    max_iterations: a.max_iterations,
                },
            };
            opts.tomography
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let r = match &a.bench {
                Some(_) => bench_or(a.bench.as_ref(), MeasureKind::Tomo, || unreachable!())?,
                None => {
                    if a.theta.is_empty() || a.theta.iter().any(|t| !t.is_finite()) {
                        return Err(CliError::Usage("--theta needs finite angles".into()));
                    }
                    let progs = a
                        .theta
                        .iter()
                        .map(|&t| checked(flag_program(MeasureKind::Tomo, t, &a.source, &a.detector, None, None)))
                        .collect::<Result<Vec<_>, _>>()?;
                    (progs, Vec::new())
                }
            };
            ("tomo", r)
        }
        Command::Run(a) => {
            let (program, warnings) = load_bench(&a.file)?;
            let name = measure_name(program.measure.value);
            (name, (vec![program], warnings))
        }
        Command::Compensate(_) => unreachable!("handled separately"),
    };
    opts.seed = cli
        .seed
        .or_else(|| programs.first().and_then(|p| p.seed.as_ref().map(|s| s.value)))
        .unwrap_or(0);
    Ok((Job { name, programs, opts }, warnings))
}

fn execute_job(job: &Job) -> Result<RunOutput, CliError> {
    let mut merged: Option<RunOutput> = None;
    for program in &job.programs {
        let plan = plan_of(program)?;
        let out = execute(&plan, &job.opts)?;
        merged = Some(match (merged, out) {
            (None, out) => out,
            (Some(RunOutput::Tomo { mut points }), RunOutput::Tomo { points: more }) => {
                points.extend(more);
                RunOutput::Tomo { points }
            }
            (Some(_), _) => unreachable!("only tomography merges several programs"),
        });
    }
    merged.ok_or_else(|| CliError::Usage("nothing to run".into()))
}

fn summary(out: &RunOutput) -> String {
    match out {
        RunOutput::Classical { rows } => format!("{} rows", rows.len()),
        RunOutput::Fringe(f) => format!(
            "visibility {:.6}  amplitude {:.3}  offset {:.3}  phase {:.3} deg",
            f.fit.visibility,
            f.fit.amplitude,
            f.fit.offset,
            f.fit.phase.to_degrees()
        ),
        RunOutput::Bell(b) => match &b.fit {
            Some(fit) => {
                let (a, bb, cov) = fit.params();
                format!(
                    "{} points  a = {a:.6} ± {:.6}  b = {bb:.6} ± {:.6}",
                    b.table.len(),
                    cov[0][0].sqrt(),
                    cov[1][1].sqrt()
                )
            }
            None => format!("{} points (too few to fit)", b.table.len()),
        },
        RunOutput::Tomo { points } => points
            .iter()
            .map(|p| {
                format!(
                    "theta_h {}  fidelity {:.6}  entropy {:.6}  iterations {}",
                    p.theta_h_deg.map_or("-".into(), |t| format!("{t}")),
                    p.report.fidelity,
                    p.report.entropy,
                    p.report.iterations
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

fn write_outputs(
    cli: &Cli,
    argv: &[String],
    name: &str,
    seed: u64,
    config: serde_json::Value,
    csv_body: Option<Vec<u8>>,
    json_body: serde_json::Value,
    started: Instant,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(&cli.out)?;
    let stem = format!("{name}_{seed}");
    let mut written = Vec::new();
    if matches!(cli.format, Format::Csv | Format::Both) {
        if let Some(body) = csv_body {
            let path = cli.out.join(format!("{stem}.csv"));
            fs::write(&path, body)?;
            written.push(path);
        }
    }
    if matches!(cli.format, Format::Json | Format::Both) {
        let path = cli.out.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(&json_body)?;
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
    }
    let manifest = RunManifest {
        command: argv.to_vec(),
        config,
        seed,
        tool_version: BUILD_ID,
        outputs: written
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
        wall_time_s: started.elapsed().as_secs_f64(),
        plot_script: PLOT_SCRIPT,
    };
    let path = cli.out.join(format!("{stem}.manifest.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    written.push(path);
    Ok(written)
}

fn run_parsed(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let started = Instant::now();
    if let Command::Compensate(a) = &cli.command {
        if !(a.phi_h.is_finite() && a.phi_v.is_finite()) {
            return Err(CliError::Usage("phases must be finite".into()));
        }
        let c = compensate(a.phi_h, a.phi_v)?;
        println!("theta_h_deg {:.6}", c.theta_h_deg);
        println!("fidelity {:.6}", c.fidelity);
        let seed = cli.seed.unwrap_or(0);
        let body = serde_json::to_value(c)?;
        let mut csv_body = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut csv_body);
            w.serialize(c)?;
            w.flush()?;
        }
        write_outputs(cli, argv, "compensate", seed, body.clone(), Some(csv_body), body, started)?;
        return Ok(());
    }

    let (job, warnings) = build_job(cli)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let out = execute_job(&job)?;
    println!("{}", summary(&out));

    let programs: Vec<String> = job.programs.iter().map(ToString::to_string).collect();
    let config = serde_json::json!({
        "programs": programs,
        "options": job.opts,
    });
    let json_body = serde_json::json!({
        "command": job.name,
        "seed": job.opts.seed,
        "tool_version": BUILD_ID,
        "config": config,
        "result": out,
    });
    let mut csv_body = Vec::new();
    out.write_csv(&mut csv_body)?;
    let files = write_outputs(cli, argv, job.name, job.opts.seed, config, Some(csv_body), json_body, started)?;
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

/// Runs the tool on an argument vector (program name first) and returns the
/// process exit code.
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_parsed(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("usage error: {m}"),
                CliError::Simulation(m) => eprintln!("error: {m}"),
                CliError::Diagnostics(d) => {
                    for x in d {
                        eprintln!("{x}");
                    }
                }
            }
            e.exit_code()
        }
    }
}
