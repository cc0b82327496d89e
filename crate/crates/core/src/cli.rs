//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails or a computation breaks
//! down, 2 on usage and domain errors. Floats in exported files carry 17
//! significant digits.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bellman::{profile_csv, value_iterate, IterationOptions, Objective};
use crate::construction::{
    build_irrational_variant_with_rho, build_rational_variant, embed, Construction, RotationSystem,
    DEFAULT_RHO,
};
use crate::error::{Error, Result};
use crate::fmt17::{format as f17, F17};
use crate::iem::{gap_statistics, IemMap};
use crate::jsr::jsr_bounds;
use crate::probe::{kink_ladder, KinkReport};
use crate::sysfile::SystemDescription;
use crate::threshold::{profile_table, solve_thresholds, DEFAULT_DEPTH, DEFAULT_TOL};
use crate::verify::{full_battery, render_table};

pub const THREADS_ENV: &str = "SWIVAL_THREADS";

#[derive(Parser, Debug)]
#[command(name = "swival", version, about = "Value functions of switched linear systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a system description file for one of the rotation constructions.
    MakeSystem(MakeSystemArgs),
    /// Tabulate ct, J*, J worst and delta J* over [-pi, pi), or export a grid solve.
    Profile(ProfileArgs),
    /// Tabulate the one-step and value differences between the two modes.
    Delta(DeltaArgs),
    /// Solve the switching thresholds nu and omega.
    Thresholds(ThresholdArgs),
    /// Backward (or forward) orbit of the interval exchange map.
    Orbit(OrbitArgs),
    /// One-sided derivatives at the backward orbit of nu.
    Kinks(KinkArgs),
    /// Run a verification suite and print a pass/fail table.
    Verify(VerifyArgs),
    /// Brute-force joint spectral radius bounds.
    Jsr(JsrArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Entries 0.008, 0.006 (alpha = atan(3/4)).
    Rational,
    /// Rotation angle given by --alpha.
    Irrational,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// System description file (overrides the variant flags).
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Construction variant [default: rational, or irrational when --alpha is given].
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    /// Rotation angle of the first mode, in (pi/8, 3pi/8).
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Scaling factor of both modes (irrational variant only).
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MakeSystemArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Zero-pad to this state dimension.
    #[arg(long, visible_alias = "n", default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "system.json")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Min,
    Max,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Min => Objective::Min,
            ObjectiveArg::Max => Objective::Max,
        }
    }
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Number of rows (grid size N with --grid).
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Series evaluation (the default).
    #[arg(long, conflicts_with = "grid")]
    pub exact: bool,
    /// Export the grid value-iteration solution as theta,value,mode.
    #[arg(long)]
    pub grid: bool,
    /// Objective of the grid solve.
    #[arg(long, value_enum, default_value = "min")]
    pub objective: ObjectiveArg,
    /// Sup-norm tolerance of the grid solve.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Series depth K.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DeltaArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Backward,
    Forward,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Use this nu instead of the solved threshold.
    #[arg(long, allow_negative_numbers = true)]
    pub nu: Option<f64>,
    /// Number of orbit points.
    #[arg(long, default_value_t = 15)]
    pub depth: usize,
    #[arg(long, value_enum, default_value = "backward")]
    pub direction: DirectionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KinkArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// The full battery.
    Lemmas,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    #[arg(long, value_enum, default_value = "lemmas")]
    pub suite: Suite,
}

#[derive(Args, Debug)]
pub struct JsrArgs {
    #[command(flatten)]
    pub sys: SystemArgs,
    /// Product length.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A system together with its rotation parameters when it has that form.
struct Loaded {
    desc: SystemDescription,
    rotation: Option<RotationSystem>,
}

impl Loaded {
    fn rotation(&self) -> Result<RotationSystem> {
        self.rotation.ok_or_else(|| {
            Error::Structural("this command needs a scaled-rotation pair with cost x1^2 + 2 x2^2".into())
        })
    }

    fn construction(&self) -> Result<Construction> {
        Ok(Construction {
            rotation: self.rotation()?,
            system: self.desc.system.clone(),
            cost: self.desc.cost.clone(),
        })
    }
}

fn build_variant(args: &SystemArgs) -> Result<Construction> {
    let variant = args.variant.unwrap_or(if args.alpha.is_some() {
        Variant::Irrational
    } else {
        Variant::Rational
    });
    match variant {
        Variant::Rational => {
            if args.alpha.is_some() || args.rho.is_some_and(|r| r != DEFAULT_RHO) {
                return Err(Error::Input(
                    "the rational variant has fixed alpha and rho; use --variant irrational".into(),
                ));
            }
            Ok(build_rational_variant())
        }
        Variant::Irrational => {
            let alpha = args
                .alpha
                .ok_or_else(|| Error::Input("--variant irrational requires --alpha".into()))?;
            build_irrational_variant_with_rho(alpha, args.rho.unwrap_or(DEFAULT_RHO))
        }
    }
}

fn load(args: &SystemArgs) -> Result<Loaded> {
    if let Some(path) = &args.system {
        if args.variant.is_some() || args.alpha.is_some() || args.rho.is_some() {
            return Err(Error::Input("--system cannot be combined with variant flags".into()));
        }
        let desc = SystemDescription::read(path)?;
        let rotation = RotationSystem::from_system(&desc.system, &desc.cost).ok();
        return Ok(Loaded { desc, rotation });
    }
    let c = build_variant(args)?;
    Ok(Loaded {
        desc: SystemDescription::new(c.system, c.cost, Some(c.rotation.rho))?,
        rotation: Some(c.rotation),
    })
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut String) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.push_str(text),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn cmd_make_system(a: &MakeSystemArgs, stdout: &mut String) -> Result<()> {
    if a.sys.system.is_some() {
        return Err(Error::Input("make-system builds a variant; --system is not accepted".into()));
    }
    let c = build_variant(&a.sys)?;
    let (system, cost) = match a.dim {
        2 => (c.system.clone(), c.cost.clone()),
        n => embed(&c.system, &c.cost, n)?,
    };
    let bounds = jsr_bounds(&system, 3)?;
    SystemDescription::new(system, cost, Some(c.rotation.rho))?.write(&a.out)?;
    let r = &c.rotation;
    writeln!(
        stdout,
        "alpha {}\nbeta {}\nrho {}\nmu {}\njsr [{}, {}]\nwrote {}",
        f17(r.alpha),
        f17(r.beta),
        f17(r.rho),
        f17(r.mu),
        f17(bounds.lower),
        f17(bounds.upper),
        a.out.display()
    )
    .expect("write to String");
    Ok(())
}

fn cmd_profile(a: &ProfileArgs, stdout: &mut String) -> Result<()> {
    let loaded = load(&a.sys)?;
    if a.grid {
        let opts = IterationOptions {
            grid: a.points,
            tol: a.tol,
            max_iter: a.max_iter,
            horizon: None,
        };
        let objective = a.objective.into();
        let (sys, cost) = (&loaded.desc.system, &loaded.desc.cost);
        let (profile, _) = value_iterate(sys, cost, objective, &opts)?;
        let policy = crate::bellman::extract_policy(&profile, sys, cost, objective)?;
        return emit(&a.out, &profile_csv(&profile, &policy), stdout);
    }
    let rot = loaded.rotation()?;
    let policy = solve_thresholds(&rot, DEFAULT_TOL, a.depth)?.policy;
    let rows = profile_table(&rot, &policy, a.points, a.depth)?;
    let mut csv = String::from("theta,ctilde,jstar,jworst,delta_jstar\n");
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            f17(r.theta),
            f17(r.ctilde),
            f17(r.jstar),
            f17(r.jworst),
            f17(r.delta_jstar)
        )
        .expect("write to String");
    }
    emit(&a.out, &csv, stdout)
}

fn cmd_delta(a: &DeltaArgs, stdout: &mut String) -> Result<()> {
    let rot = load(&a.sys)?.rotation()?;
    let policy = solve_thresholds(&rot, DEFAULT_TOL, a.depth)?.policy;
    let rows = profile_table(&rot, &policy, a.points, a.depth)?;
    let mut csv = String::from("theta,delta_ctilde,delta_jstar\n");
    for r in rows {
        writeln!(
            csv,
            "{},{},{}",
            f17(r.theta),
            f17(rot.delta_ctilde(r.theta)),
            f17(r.delta_jstar)
        )
        .expect("write to String");
    }
    emit(&a.out, &csv, stdout)
}

#[derive(Serialize)]
struct ThresholdOut {
    nu: F17,
    omega: F17,
    mu: F17,
    delta: F17,
    iterations: usize,
    residual_nu: F17,
    residual_omega: F17,
    tail_bound: F17,
}

fn cmd_thresholds(a: &ThresholdArgs, stdout: &mut String) -> Result<()> {
    let rot = load(&a.sys)?.rotation()?;
    let sol = solve_thresholds(&rot, a.tol, a.depth)?;
    let out = ThresholdOut {
        nu: F17(sol.policy.nu),
        omega: F17(sol.policy.omega),
        mu: F17(rot.mu),
        delta: F17(rot.delta),
        iterations: sol.iterations,
        residual_nu: F17(sol.residual_nu),
        residual_omega: F17(sol.residual_omega),
        tail_bound: F17(sol.tail_bound),
    };
    emit(&a.out, &to_json(&out)?, stdout)
}

fn cmd_orbit(a: &OrbitArgs, stdout: &mut String, stderr: &mut String) -> Result<()> {
    let rot = match (&a.sys.system, a.sys.alpha, a.nu) {
        // a bare angle pair is enough for the exchange map
        (None, Some(alpha), Some(_)) if a.sys.variant != Some(Variant::Rational) => {
            RotationSystem::new(alpha, a.sys.rho.unwrap_or(DEFAULT_RHO))?
        }
        _ => load(&a.sys)?.rotation()?,
    };
    let nu = match a.nu {
        Some(nu) => nu,
        None => solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH)?.policy.nu,
    };
    let iem = IemMap::from_rotation(&rot, nu)?;
    let orbit = match a.direction {
        DirectionArg::Backward => iem.backward_orbit(nu, a.depth)?,
        DirectionArg::Forward => iem.forward_orbit(nu, a.depth)?,
    };
    let stats = gap_statistics(&orbit)?;
    writeln!(
        stderr,
        "max gap {}, {} distinct gaps, min distance to nu {}",
        f17(stats.max_gap),
        stats.distinct_count(),
        f17(orbit.min_distance_to_nu())
    )
    .expect("write to String");
    emit(&a.out, &orbit.to_csv(), stdout)
}

#[derive(Serialize)]
struct KinkOut {
    location: F17,
    depth: Option<usize>,
    left_derivative: F17,
    right_derivative: F17,
    gap: F17,
    predicted_gap: F17,
    method: crate::probe::Method,
    fd_gap: Option<F17>,
    fd_confirmed: Option<bool>,
    below_floating_floor: bool,
}

impl From<&KinkReport> for KinkOut {
    fn from(k: &KinkReport) -> Self {
        Self {
            location: F17(k.location),
            depth: k.depth,
            left_derivative: F17(k.left_derivative),
            right_derivative: F17(k.right_derivative),
            gap: F17(k.gap),
            predicted_gap: F17(k.predicted_gap),
            method: k.method,
            fd_gap: k.fd_gap.map(F17),
            fd_confirmed: k.fd_confirmed,
            below_floating_floor: k.below_floating_floor,
        }
    }
}

fn cmd_kinks(a: &KinkArgs, stdout: &mut String) -> Result<()> {
    let rot = load(&a.sys)?.rotation()?;
    let policy = solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH)?.policy;
    let ladder = kink_ladder(&policy, &rot, a.max_depth)?;
    let out: Vec<KinkOut> = ladder.iter().map(KinkOut::from).collect();
    emit(&a.out, &to_json(&out)?, stdout)
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut String) -> Result<bool> {
    let c = load(&a.sys)?.construction()?;
    let rows = match a.suite {
        Suite::Lemmas => full_battery(&c),
    };
    stdout.push_str(&render_table(&rows));
    let failed = rows.iter().filter(|r| !r.passed).count();
    writeln!(stdout, "{} of {} checks passed", rows.len() - failed, rows.len()).expect("write to String");
    Ok(failed == 0)
}

#[derive(Serialize)]
struct JsrOut {
    lower: F17,
    upper: F17,
    depth: usize,
}

fn cmd_jsr(a: &JsrArgs, stdout: &mut String) -> Result<()> {
    let loaded = load(&a.sys)?;
    let b = jsr_bounds(&loaded.desc.system, a.depth)?;
    let out = JsrOut {
        lower: F17(b.lower),
        upper: F17(b.upper),
        depth: b.depth,
    };
    emit(&a.out, &to_json(&out)?, stdout)
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_)
        | Error::Domain(_)
        | Error::UnsupportedDimension { .. }
        | Error::Structural(_)
        | Error::Json(_) => 2,
        Error::Resource(_)
        | Error::Convergence { .. }
        | Error::Stability { .. }
        | Error::ConstructionViolated(_)
        | Error::Precision(_)
        | Error::Io(_) => 1,
    }
}

/// Outcome of one invocation, with captured output streams.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn execute(cli: &Cli) -> Outcome {
    let mut o = Outcome::default();
    let r = match &cli.command {
        Command::MakeSystem(a) => cmd_make_system(a, &mut o.stdout).map(|_| true),
        Command::Profile(a) => cmd_profile(a, &mut o.stdout).map(|_| true),
        Command::Delta(a) => cmd_delta(a, &mut o.stdout).map(|_| true),
        Command::Thresholds(a) => cmd_thresholds(a, &mut o.stdout).map(|_| true),
        Command::Orbit(a) => cmd_orbit(a, &mut o.stdout, &mut o.stderr).map(|_| true),
        Command::Kinks(a) => cmd_kinks(a, &mut o.stdout).map(|_| true),
        Command::Verify(a) => cmd_verify(a, &mut o.stdout),
        Command::Jsr(a) => cmd_jsr(a, &mut o.stdout).map(|_| true),
    };
    o.code = match r {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            writeln!(o.stderr, "error: {e}").expect("write to String");
            exit_code(&e)
        }
    };
    o
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return 2;
    }
    let o = execute(&cli);
    print!("{}", o.stdout);
    eprint!("{}", o.stderr);
    o.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("swival").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn irrational_without_alpha_is_usage_error() {
        let o = execute(&parse(&["make-system", "--variant", "irrational", "--out", "/nonexistent/x.json"]));
        assert_eq!(o.code, 2);
        assert!(o.stderr.contains("--alpha"));
    }

    #[test]
    fn out_of_range_alpha_is_usage_error() {
        let o = execute(&parse(&["thresholds", "--alpha", "1.5"]));
        assert_eq!(o.code, 2);
    }

    #[test]
    fn thresholds_json_has_seventeen_digits() {
        let o = execute(&parse(&["thresholds"]));
        assert_eq!(o.code, 0, "{}", o.stderr);
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        let nu = v["nu"].as_f64().unwrap();
        assert!((nu - 0.14189705460416392).abs() < 0.01);
        assert!(o.stdout.contains("e-1"));
    }
}
