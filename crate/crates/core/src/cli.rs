//! `latreal` command-line surface.
//!
//! Every command writes delimited text whose `#`-prefixed header echoes the
//! tool version and the resolved configuration, so identical arguments give
//! byte-identical output. Exit codes: 0 success/pass, 1 usage, 2
//! infeasible/fail, 3 I/O or malformed input.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::basic1d::{synthesize, BlockFactorProcess1D, SynthMode, SynthOptions};
use crate::bounds::{
    alpha_grid, figure4_table, reference_constants, yamada_upper_1d, BoundsReport, YamadaLimit,
};
use crate::error::Error;
use crate::format::{fmt12, fmt17};
use crate::lattice::BoxRegion;
use crate::montecarlo::{consistency_test, estimate, thinning_check, ConsistencyReport, Z_MAX};
use crate::product::{realize_with_tolerance, PROFILE_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "latreal",
    version,
    about = "Lattice point processes realizing g^(alpha)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper and lower bounds on the maximal realizable density.
    Bounds(BoundsArgs),
    /// Table of r_C/R_F and r_A/R_F over alpha in [0,1).
    Figure4(Figure4Args),
    /// Search for a 1D block-factor process with the given alpha.
    Synth(SynthArgs),
    /// Build the d-dimensional product process and check it against g^(alpha).
    RealizeVerify(RealizeArgs),
    /// Monte Carlo estimate of density and pair correlations.
    Simulate(SimulateArgs),
    /// Numerical Yamada upper bound in one dimension.
    Yamada(YamadaArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    dim: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct Figure4Args {
    /// Comma list (2,3,4) or inclusive range (2..6).
    #[arg(long, default_value = "2..6")]
    dims: String,
    #[arg(long, default_value_t = 0.01)]
    alpha_step: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    window: usize,
    /// Hit this density instead of maximizing it.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct RealizeArgs {
    /// Process record written by `synth`.
    #[arg(long)]
    proc: PathBuf,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    radius: usize,
    /// Accepted 1D lag residual and maximum pair deviation.
    #[arg(long, default_value_t = PROFILE_TOL)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    proc: PathBuf,
    #[arg(long)]
    dim: usize,
    /// Side lengths, e.g. 64x64.
    #[arg(long = "box")]
    box_sides: String,
    #[arg(long, default_value_t = 200)]
    replicas: usize,
    #[arg(long, default_value_t = 3)]
    radius: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run the thinning check with this retention probability.
    #[arg(long)]
    thin: Option<f64>,
    #[arg(long, default_value_t = Z_MAX)]
    z_max: f64,
    #[arg(long, default_value_t = PROFILE_TOL)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct YamadaArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 256)]
    nmax: usize,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
struct CliError {
    code: i32,
    msg: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }

    fn io(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            msg: msg.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => EXIT_USAGE,
            Error::Parse { .. } => EXIT_IO,
            Error::InfeasibleAtWindow { .. }
            | Error::ProfileNotRadial(_)
            | Error::Degenerate(_)
            | Error::EnumerationTooLarge { .. } => EXIT_FAIL,
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

/// Resolved configuration of one run, echoed as `# key = value` lines.
#[derive(Debug, Default)]
pub struct RunConfig {
    entries: Vec<(&'static str, String)>,
}

impl RunConfig {
    fn new(command: &str) -> Self {
        let mut c = Self::default();
        c.set("command", command);
        c
    }

    fn set(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.entries.push((key, value.to_string()));
        self
    }

    pub fn header(&self) -> String {
        let mut s = format!(
            "# {} {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in &self.entries {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }
}

/// Runs the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Bounds(a) => cmd_bounds(&a),
        Command::Figure4(a) => cmd_figure4(&a, stderr),
        Command::Synth(a) => cmd_synth(&a),
        Command::RealizeVerify(a) => cmd_realize_verify(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Yamada(a) => cmd_yamada(&a),
    };
    match result {
        Ok((target, text, code)) => {
            if let Err(e) = emit(&target, &text, stdout) {
                let _ = writeln!(stderr, "error: {}", e.msg);
                return e.code;
            }
            if code != EXIT_OK {
                let _ = writeln!(stderr, "check failed (exit {code})");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.msg);
            e.code
        }
    }
}

type CmdResult = Result<(Option<PathBuf>, String, i32), CliError>;

fn emit(target: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match target {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("cannot write stdout: {e}"))),
    }
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "--alpha must be >= 0, got {alpha}"
        )))
    }
}

fn read_process(path: &PathBuf) -> Result<BlockFactorProcess1D, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    BlockFactorProcess1D::parse_record(&text)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn cmd_bounds(a: &BoundsArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    if a.dim == 0 {
        return Err(CliError::usage("--dim must be >= 1"));
    }
    let r = BoundsReport::new(a.alpha, a.dim)?;
    let mut cfg = RunConfig::new("bounds");
    cfg.set("alpha", fmt12(a.alpha)).set("dim", a.dim);
    let mut s = cfg.header();
    s.push_str("quantity,value\n");
    let mut row = |k: &str, v: f64| s.push_str(&format!("{k},{}\n", fmt12(v)));
    row("R_F", r.r_f);
    row("r_A", r.r_a);
    if let Some(c) = r.r_c {
        row("r_C", c);
    }
    row("lower_1d", r.lower_1d);
    if let Some(c) = r.ratio_c {
        row("ratio_C", c);
    }
    row("ratio_A", r.ratio_a);
    if a.alpha == 0.0 && a.dim == 1 {
        let c = reference_constants();
        row("reference_lower_alpha0_d1", c.lower_alpha0_d1);
        row("reference_upper_alpha0_d1", c.upper_alpha0_d1);
    }
    Ok((a.output.out.clone(), s, EXIT_OK))
}

fn parse_dims(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::usage(format!("cannot parse --dims {s:?}"));
    let dims: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(CliError::usage("--dims must list dimensions >= 2"));
    }
    Ok(dims)
}

fn cmd_figure4(a: &Figure4Args, stderr: &mut dyn Write) -> CmdResult {
    let dims = parse_dims(&a.dims)?;
    let alphas = alpha_grid(a.alpha_step)?;
    let rows = figure4_table(&dims, &alphas)?;
    let mut cfg = RunConfig::new("figure4");
    let dims_str: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    cfg.set("dims", dims_str.join(","))
        .set("alpha_step", fmt12(a.alpha_step));
    let mut s = cfg.header();
    s.push_str("alpha,d,ratio_C,ratio_A\n");
    for r in &rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt12(r.alpha),
            r.dim,
            fmt12(r.ratio_c),
            fmt12(r.ratio_a)
        ));
    }
    let dotted = 1.0 / std::f64::consts::E;
    let worst = rows
        .iter()
        .map(|r| (r.ratio_a - dotted).abs())
        .fold(0.0, f64::max);
    let _ = writeln!(
        stderr,
        "self-check: ratio_A = 1/e = {} for every row (max deviation {:e})",
        fmt12(dotted),
        worst
    );
    Ok((a.output.out.clone(), s, EXIT_OK))
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let mode = match a.gamma {
        Some(g) => SynthMode::HitDensity(g),
        None => SynthMode::MaximizeDensity,
    };
    let opts = SynthOptions {
        alpha: a.alpha,
        window: a.window,
        mode,
        tol: a.tol,
        seed: a.seed,
        starts: a.starts,
    };
    let (proc, report) = synthesize(&opts)?;
    let mut cfg = RunConfig::new("synth");
    cfg.set("alpha", fmt12(a.alpha))
        .set("window", a.window)
        .set("target", a.gamma.map_or("maximize".to_string(), fmt12))
        .set("tol", fmt12(a.tol))
        .set("seed", a.seed)
        .set("starts", a.starts);
    let prof = proc.profile()?;
    let mut s = cfg.header();
    s.push_str(&format!("# gamma = {}\n", fmt17(report.gamma)));
    s.push_str(&format!(
        "# alpha_hat = {}\n",
        prof.alpha_hat().map_or("undefined".to_string(), fmt17)
    ));
    for k in 1..proc.window() {
        s.push_str(&format!("# lag{k} = {}\n", fmt17(prof.lag(k))));
    }
    for (name, r) in &report.residuals {
        s.push_str(&format!("# residual {name} = {}\n", fmt12(*r)));
    }
    s.push_str(&format!(
        "# best_start = {}, feasible_starts = {}/{}, iterations = {}\n",
        report.best_start,
        report.feasible_starts(),
        report.starts.len(),
        report.total_iterations()
    ));
    s.push_str(&proc.to_record());
    Ok((a.output.out.clone(), s, EXIT_OK))
}

fn cmd_realize_verify(a: &RealizeArgs) -> CmdResult {
    let proc1d = read_process(&a.proc)?;
    let proc = realize_with_tolerance(&proc1d, a.dim, a.tol)?;
    let report = proc.verify_against_target(a.radius)?;
    let mut cfg = RunConfig::new("realize-verify");
    cfg.set("proc", a.proc.display())
        .set("dim", a.dim)
        .set("radius", a.radius)
        .set("tol", fmt12(a.tol));
    let mut s = cfg.header();
    s.push_str(&format!("# gamma = {}\n", fmt12(proc.gamma())));
    s.push_str(&format!("# rho = gamma^d = {}\n", fmt12(report.rho)));
    s.push_str(&format!("# alpha_hat = {}\n", fmt12(report.alpha)));
    s.push_str("class,representative,members,pair_expectation,target,max_deviation\n");
    for c in &report.classes {
        let rep: Vec<String> = c
            .representative
            .coords()
            .iter()
            .map(|v| v.to_string())
            .collect();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.label,
            rep.join(";"),
            c.members,
            fmt12(c.value),
            fmt12(c.target),
            fmt12(c.deviation)
        ));
    }
    let pass = report.max_deviation <= a.tol;
    s.push_str(&format!(
        "# max_deviation = {} at {}\n# verdict = {}\n",
        fmt12(report.max_deviation),
        report.worst,
        if pass { "pass" } else { "fail" }
    ));
    Ok((
        a.output.out.clone(),
        s,
        if pass { EXIT_OK } else { EXIT_FAIL },
    ))
}

fn parse_box(s: &str, dim: usize) -> Result<BoxRegion, CliError> {
    let sides: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("cannot parse --box {s:?}")))?;
    if sides.len() != dim {
        return Err(CliError::usage(format!(
            "--box has {} sides but --dim is {dim}",
            sides.len()
        )));
    }
    Ok(BoxRegion::with_sides(sides)?)
}

fn consistency_block(report: &ConsistencyReport) -> String {
    let mut s = format!(
        "# consistency = {}\n# note: {}\n",
        if report.pass { "pass" } else { "fail" },
        report.note()
    );
    for o in &report.offenders {
        s.push_str(&format!(
            "# offender {}: estimate {} target {} z {}\n",
            o.label,
            fmt12(o.estimate),
            fmt12(o.target),
            o.z.map_or("inf".to_string(), fmt12)
        ));
    }
    s
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    if a.replicas < 2 {
        return Err(CliError::usage("--replicas must be >= 2"));
    }
    if let Some(t) = a.thin {
        if !(0.0..=1.0).contains(&t) {
            return Err(CliError::usage("--thin must lie in [0,1]"));
        }
    }
    let region = parse_box(&a.box_sides, a.dim)?;
    let proc1d = read_process(&a.proc)?;
    let proc = realize_with_tolerance(&proc1d, a.dim, a.tol)?;

    let mut cfg = RunConfig::new("simulate");
    cfg.set("proc", a.proc.display())
        .set("dim", a.dim)
        .set("box", a.box_sides.as_str())
        .set("replicas", a.replicas)
        .set("radius", a.radius)
        .set("seed", a.seed)
        .set("thin", a.thin.map_or("none".to_string(), fmt12))
        .set("z_max", fmt12(a.z_max));
    let mut s = cfg.header();

    let est = estimate(&proc, &region, a.radius, a.replicas, a.seed)?;
    let report = consistency_test(&est, &est.target, a.z_max)?;
    s.push_str(&format!(
        "# target rho = {}, alpha = {}\n",
        fmt12(est.target.rho()),
        fmt12(est.target.alpha())
    ));
    s.push_str(&est.to_text()?);
    s.push_str(&consistency_block(&report));
    let mut pass = report.pass;

    if let Some(t) = a.thin {
        let thin = thinning_check(&proc, t, &region, a.radius, a.replicas, a.seed, a.z_max)?;
        s.push_str(&format!(
            "# thinned t = {}: target rho = {}, alpha = {}\n",
            fmt12(t),
            fmt12(thin.estimate.target.rho()),
            fmt12(thin.estimate.target.alpha())
        ));
        s.push_str(&thin.estimate.to_text()?);
        match &thin.consistency {
            Some(c) => s.push_str(&consistency_block(c)),
            None => s.push_str("# consistency = degenerate (thinned samples carry no variance)\n"),
        }
        pass &= thin.pass();
    }
    s.push_str(&format!(
        "# verdict = {}\n",
        if pass { "pass" } else { "fail" }
    ));
    Ok((
        a.output.out.clone(),
        s,
        if pass { EXIT_OK } else { EXIT_FAIL },
    ))
}

fn cmd_yamada(a: &YamadaArgs) -> CmdResult {
    check_alpha(a.alpha)?;
    let r = yamada_upper_1d(a.alpha, a.nmax, a.step)?;
    let mut cfg = RunConfig::new("yamada");
    cfg.set("alpha", fmt12(a.alpha))
        .set("nmax", a.nmax)
        .set("step", fmt12(a.step));
    let mut s = cfg.header();
    s.push_str("quantity,value\n");
    s.push_str(&format!("R_Y,{}\n", fmt12(r.r_y)));
    s.push_str(&format!("R_F,{}\n", fmt12(r.r_f)));
    s.push_str(&format!("R_F-R_Y,{}\n", fmt12(r.r_f - r.r_y)));
    match r.limit {
        YamadaLimit::StructureFunction => {
            s.push_str("limited_by,structure_function\n");
        }
        YamadaLimit::Interval { n, rho } => {
            s.push_str("limited_by,yamada_interval\n");
            s.push_str(&format!("witness_n,{n}\n"));
            s.push_str(&format!("witness_rho,{}\n", fmt12(rho)));
        }
    }
    Ok((a.output.out.clone(), s, EXIT_OK))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["latreal"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("2..6").unwrap(), vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_dims("2,3,4").unwrap(), vec![2, 3, 4]);
        assert!(parse_dims("1,2").is_err());
        assert!(parse_dims("x").is_err());
    }

    #[test]
    fn box_parsing() {
        assert_eq!(parse_box("64x32", 2).unwrap().side_lengths(), &[64, 32]);
        assert!(parse_box("64x32", 3).is_err());
        assert!(parse_box("64xq", 2).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(
            run_str(&["bounds", "--alpha", "-1", "--dim", "2"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_str(&["bounds", "--dim", "2"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["nope"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn yamada_command() {
        let (code, out, _) = run_str(&["yamada", "--alpha", "1"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("R_Y,1\n"));
        assert!(out.contains("limited_by,structure_function"));
    }
}
