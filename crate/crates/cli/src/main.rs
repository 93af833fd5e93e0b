//! `ekwave`: moment curves, profiles and instability runs from the command line.
//!
//! Exit codes: 0 success, 1 hard error, 2 a requested speed has no solitary
//! wave, 3 an evolution run aborted, 64 invalid configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ekwave::{
    curve_csv, diagnostics_csv, moment_curve, reconstruct_profile, Error, Experiment,
    ExperimentConfig, ModelSpec, MomentOptions, Perturbation, ProfileOptions, RowStatus,
    WaveParameters,
};
use serde_json::{json, Value};

const EXIT_HARD: u8 = 1;
const EXIT_NO_WAVE: u8 = 2;
const EXIT_ABORTED: u8 = 3;
const EXIT_CONFIG: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "ekwave",
    version,
    about = "Solitary waves of the Euler-Korteweg system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moment curve m, m', m'' and stability verdicts over a set of speeds.
    Analyze(AnalyzeArgs),
    /// Reconstruct one solitary-wave profile.
    Profile(ProfileArgs),
    /// Evolve a (perturbed) wave and track its orbital distance.
    Evolve(EvolveArgs),
    /// List the built-in models.
    Models,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Built-in model, e.g. `bona-sachs:q=2` or `gross-pitaevskii:alpha=1,beta=1`.
    #[arg(
        long,
        conflicts_with = "model_file",
        required_unless_present = "model_file"
    )]
    model: Option<String>,
    /// Model file with `p = ...`, `kappa = ...`, `params.<name> = ...`, `domain = lo, hi`.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Base state v*.
    #[arg(long, allow_negative_numbers = true)]
    vstar: f64,
    /// Base velocity u*.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ustar: f64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Quadrature refinement tolerance.
    #[arg(long)]
    tol_quad: Option<f64>,
    /// Turning-point root tolerance.
    #[arg(long)]
    tol_root: Option<f64>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Wave speed; may be repeated.
    #[arg(long = "c", allow_negative_numbers = true)]
    speeds: Vec<f64>,
    /// Speed grid as `start:stop:step` or a comma-separated list.
    #[arg(long = "speeds", allow_hyphen_values = true)]
    grid: Option<String>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Wave speed.
    #[arg(long = "c", default_value_t = 0.0, allow_negative_numbers = true)]
    speed: f64,
    /// Half-width of the output grid (default: 30 decay lengths).
    #[arg(long)]
    half_width: Option<f64>,
    /// Number of output nodes.
    #[arg(long, default_value_t = 4001)]
    points: usize,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Wave speed.
    #[arg(long = "c", default_value_t = 0.0, allow_negative_numbers = true)]
    speed: f64,
    /// Half-length L of the periodic domain [-L, L).
    #[arg(long = "L", default_value_t = 40.0)]
    half_length: f64,
    /// Grid size (power of two).
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Fixed time step (default: automatic stable step).
    #[arg(long)]
    dt: Option<f64>,
    /// Courant factor of the automatic step.
    #[arg(long, default_value_t = 0.5)]
    courant: f64,
    /// Time horizon.
    #[arg(long = "T", default_value_t = 20.0)]
    t_final: f64,
    /// Amplitude of the mean-zero Gaussian perturbation of V.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    delta: f64,
    /// Width of the perturbation (default L/20).
    #[arg(long)]
    width: Option<f64>,
    /// Steps between diagnostics rows.
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Times at which to write field snapshots; may be repeated.
    #[arg(long = "snapshot")]
    snapshots: Vec<f64>,
    /// Growth factor over the initial distance that counts as instability.
    #[arg(long, default_value_t = 10.0)]
    growth_factor: f64,
    /// Stop once the distance reaches this multiple of the wave's own norm.
    #[arg(long, default_value_t = 1.0, conflicts_with = "no_stop")]
    stop_ratio: f64,
    /// Always integrate to the time horizon.
    #[arg(long)]
    no_stop: bool,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn hard(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_HARD,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::NotDifferentiable(_)
            | Error::InvalidModel(_)
            | Error::InvalidConfig(_) => EXIT_CONFIG,
            Error::NoSolitaryWave { .. }
            | Error::NoSubsonicWindow { .. }
            | Error::SonicDegenerate { .. } => EXIT_NO_WAVE,
            Error::DomainEscape { .. } | Error::Diverged { .. } => EXIT_ABORTED,
            _ => EXIT_HARD,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Profile(args) => cmd_profile(&args),
        Command::Evolve(args) => cmd_evolve(&args),
        Command::Models => {
            print!("{}", models_listing());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn positive(name: &str, value: f64) -> Result<f64, Failure> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::config(format!(
            "--{name} must be positive, got {value}"
        )))
    }
}

fn finite(name: &str, value: f64) -> Result<f64, Failure> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::config(format!(
            "--{name} must be finite, got {value}"
        )))
    }
}

impl ModelArgs {
    fn load(&self) -> Result<ModelSpec, Failure> {
        match (&self.model, &self.model_file) {
            (Some(selector), _) => Ok(ModelSpec::from_selector(selector)?),
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Failure::config(format!("cannot read model file {}: {e}", path.display()))
                })?;
                Ok(ModelSpec::parse_file(&text)?)
            }
            (None, None) => Err(Failure::config(
                "one of --model or --model-file is required",
            )),
        }
    }

    fn base(&self) -> Result<WaveParameters, Failure> {
        Ok(WaveParameters::new(finite("vstar", self.vstar)?, 0.0)
            .with_u_star(finite("ustar", self.ustar)?))
    }

    fn moment_options(&self) -> Result<MomentOptions, Failure> {
        let mut options = MomentOptions::default();
        if let Some(tol) = self.tol_quad {
            options.quadrature.tolerance = positive("tol-quad", tol)?;
        }
        if let Some(tol) = self.tol_root {
            options.turning.root_tolerance = positive("tol-root", tol)?;
        }
        Ok(options)
    }

    fn profile_options(&self) -> Result<ProfileOptions, Failure> {
        let mut options = ProfileOptions::default();
        if let Some(tol) = self.tol_root {
            options.turning.root_tolerance = positive("tol-root", tol)?;
        }
        Ok(options)
    }

    fn out_dir(&self) -> Result<&Path, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| {
            Failure::config(format!(
                "cannot create output directory {}: {e}",
                self.out.display()
            ))
        })?;
        Ok(&self.out)
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::hard(format!("cannot write {}: {e}", path.display())))
}

fn to_json(value: &Value) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::hard(e.to_string()))
}

/// `start:stop:step` (inclusive of stop up to rounding) or `a,b,c`.
fn parse_speed_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let number = |s: &str| -> Result<f64, Failure> {
        let x: f64 = s
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("`{s}` is not a number in --speeds")))?;
        finite("speeds", x)
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Failure::config("--speeds grid must be start:stop:step"));
        }
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(Failure::config(
                "--speeds grid needs step > 0 and stop >= start",
            ));
        }
        let intervals = (stop - start) / step;
        if intervals > 1e6 {
            return Err(Failure::config("--speeds grid has too many points"));
        }
        let count = (intervals + 1e-9).floor() as usize + 1;
        let exact = (intervals - intervals.round()).abs() < 1e-9 && count > 1;
        Ok((0..count)
            .map(|i| {
                if exact {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                } else {
                    start + step * i as f64
                }
            })
            .collect())
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(number)
            .collect()
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> CmdResult {
    let model = args.model.load()?;
    let base = args.model.base()?;
    let options = args.model.moment_options()?;
    let mut speeds = Vec::new();
    for &c in &args.speeds {
        speeds.push(finite("c", c)?);
    }
    if let Some(grid) = &args.grid {
        speeds.extend(parse_speed_grid(grid)?);
    }
    if speeds.is_empty() {
        return Err(Failure::config(
            "give at least one speed with --c or --speeds",
        ));
    }
    let out = args.model.out_dir()?;
    let rows = moment_curve(&model, &base, &speeds, &options);
    write(out, "moment_curve.csv", &curve_csv(&rows))?;

    let entries: Vec<Value> = rows
        .iter()
        .map(|row| match &row.report {
            Some(report) => {
                let mut value = serde_json::to_value(report).expect("report serializes");
                value["status"] = json!(row.status.as_str());
                value
            }
            None => json!({
                "model": model.label(),
                "v_star": base.v_star,
                "u_star": base.u_star,
                "c": row.c,
                "status": row.status.as_str(),
                "message": row.message,
            }),
        })
        .collect();
    let report = if entries.len() == 1 {
        entries.into_iter().next().expect("one entry")
    } else {
        Value::Array(entries)
    };
    write(out, "report.json", &to_json(&report)?)?;

    let mut code = 0;
    for row in &rows {
        match (&row.report, row.status) {
            (Some(r), _) => println!(
                "c = {}: m = {}, m' = {}, m'' = {}, verdict {}",
                row.c,
                r.m,
                r.m_prime,
                r.m_second,
                r.verdict.as_str()
            ),
            (None, status) => {
                println!(
                    "c = {}: {} ({})",
                    row.c,
                    status.as_str(),
                    row.message.as_deref().unwrap_or("")
                );
                code = code.max(match status {
                    RowStatus::NoSolitaryWave | RowStatus::SonicDegenerate => EXIT_NO_WAVE,
                    _ => EXIT_HARD,
                });
            }
        }
    }
    if code == EXIT_HARD {
        eprintln!("error: some speeds failed; see report.json");
    }
    Ok(code)
}

fn cmd_profile(args: &ProfileArgs) -> CmdResult {
    let model = args.model.load()?;
    let params = args.model.base()?.with_speed(finite("c", args.speed)?);
    let mut options = args.model.profile_options()?;
    if let Some(w) = args.half_width {
        options.half_width = Some(positive("half-width", w)?);
    }
    if args.points < 3 {
        return Err(Failure::config("--points must be at least 3"));
    }
    options.points = args.points;
    let out = args.model.out_dir()?;
    let profile = reconstruct_profile(&model, &params, &options)?;
    write(out, "profile.csv", &profile.to_csv())?;
    let turning = profile
        .turning
        .expect("reconstructed profiles carry a turning point");
    println!("v_m = {}", turning.v_m);
    println!("direction = {}", turning.direction.as_str());
    println!("decay_rate = {}", profile.decay_rate);
    println!(
        "first_integral_residual = {:e}",
        profile.first_integral_residual
    );
    Ok(0)
}

fn cmd_evolve(args: &EvolveArgs) -> CmdResult {
    let model = args.model.load()?;
    let params = args.model.base()?.with_speed(finite("c", args.speed)?);
    let mut config = ExperimentConfig::new(model, params);
    config.half_length = positive("L", args.half_length)?;
    config.n = args.n;
    config.dt = args.dt.map(|dt| positive("dt", dt)).transpose()?;
    config.courant = positive("courant", args.courant)?;
    config.t_final = positive("T", args.t_final)?;
    config.perturbation = Perturbation {
        amplitude: finite("delta", args.delta)?,
        width: args.width.map(|w| positive("width", w)).transpose()?,
        center: 0.0,
    };
    config.sample_stride = args.stride;
    config.snapshot_times = args.snapshots.clone();
    config.growth_factor = args.growth_factor;
    config.stop_ratio = if args.no_stop {
        None
    } else {
        Some(positive("stop-ratio", args.stop_ratio)?)
    };
    config.profile = args.model.profile_options()?;
    config.validate()?;
    let out = args.model.out_dir()?;

    let mut experiment = Experiment::new(config)?;
    let outcome = experiment.run();
    write(out, "diagnostics.csv", &diagnostics_csv(experiment.rows()))?;
    for snap in experiment.snapshots() {
        write(out, &format!("snapshot_t{}.csv", snap.t), &snap.to_csv())?;
    }
    let summary = experiment.summary();
    write(out, "summary.json", &to_json(&json!(summary))?)?;

    println!("d0 = {:e}", summary.d0);
    println!("d_max = {:e}", summary.d_max);
    match summary.crossing_time {
        Some(t) => println!(
            "growth: distance exceeded {} x d0 at t = {t}",
            experiment.config().growth_factor
        ),
        None => println!("growth: none"),
    }
    if let Some(speed) = summary.fitted_speed {
        println!("fitted_speed = {speed}");
    }
    if summary.stopped_early {
        println!(
            "stopped at t = {} (distance reached the wave's own norm)",
            summary.t_reached
        );
    }
    match outcome {
        Ok(()) => Ok(0),
        Err(err) => Err(Failure {
            code: EXIT_ABORTED,
            message: format!("run aborted: {err}"),
        }),
    }
}

fn models_listing() -> String {
    let rows = [
        [
            "bona-sachs",
            "q",
            "q >= 2 (integer)",
            "p(v) = -v + v^q",
            "kappa(v) = 1",
            "(-inf, inf)",
        ],
        [
            "gross-pitaevskii",
            "alpha,beta",
            "with alpha,beta>0",
            "p(v) = alpha/v^2 - beta/v^3",
            "kappa(v) = 1/(4 v^4)",
            "(0, inf)",
        ],
    ];
    let mut out = String::from("name\tparameters\tconstraints\tpressure\tcapillarity\tdomain\n");
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
