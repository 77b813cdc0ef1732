//! Command-line front end.
//!
//! Every subcommand resolves a [`StudyConfig`] from an optional `--config`
//! file and then applies the flags on top, so the same keys mean the same
//! thing everywhere.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::energy::breakdowns_to_csv;
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::kernel::{EpsilonSchedule, KernelSpec};
use crate::moments::{
    admissibility_series, admissible_verdict, iterated_verdict, moment_report, uniform_verdict,
    AdmissibilitySeries, MomentReport, MomentVerdict,
};
use crate::quadrature::IntegralResult;
use crate::study::{
    energy_study, run_ms_study, verify_equivalence, EnergyStudy, FunctionStudy, StudyConfig,
    StudyReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_EQUIVALENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mslab",
    version,
    about = "Nonlocal energies and kernel moment conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tail masses and short-range moments over an ε schedule, with verdicts.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Moment order; defaults to sp when --s is given, else p.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Energy splits far/near/total for each function.
    Energy {
        #[command(flatten)]
        common: Common,
    },
    /// Full study: verdicts, energy sweeps and their agreement.
    Study {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 unless the verdicts and the energy limits agree.
        #[arg(long)]
        assert_equivalence: bool,
    },
    /// The admissibility integral ∫ρ_ε(1 ∧ |z|^{sp}) over the schedule.
    CheckAdmissible {
        #[command(flatten)]
        common: Common,
    },
    /// Gagliardo seminorm [u]ᵖ_{W^{s,p}}.
    Seminorm {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON config with sections kernel, functions, sweep, quadrature, output.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kernel: Option<String>,
    /// Comma-separated function names.
    #[arg(long = "function", value_delimiter = ',')]
    pub functions: Vec<String>,
    /// Dimension N.
    #[arg(long = "N")]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Geometric schedule `start:ratio:count`.
    #[arg(long = "eps-geom")]
    pub eps_geom: Option<String>,
    /// Explicit schedule; overrides --eps-geom.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    #[arg(long = "split-radii", value_delimiter = ',')]
    pub split_radii: Vec<f64>,
    /// Verdict tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output file; the suffix (.csv or .json) picks the format.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_geometric(text: &str) -> Result<EpsilonSchedule> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || {
        Error::InvalidParameter(format!(
            "--eps-geom expects start:ratio:count, got `{text}`"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let ratio: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    EpsilonSchedule::geometric(start, ratio, count)
}

impl Common {
    /// Config file (if any) with every given flag applied on top.
    ///
    /// Without a kernel (only `seminorm` allows that) the fractional family
    /// stands in; it is never evaluated.
    pub fn resolve(&self, needs_kernel: bool) -> Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(path) => StudyConfig::load(path).map_err(|e| match e {
                Error::Io(io) => {
                    Error::InvalidParameter(format!("cannot read {}: {io}", path.display()))
                }
                other => other.in_cell(format!("config {}", path.display())),
            })?,
            None => {
                let kernel = match self.kernel.as_deref() {
                    Some(name) => KernelSpec::parse_name(name)?,
                    None if !needs_kernel => KernelSpec::Fractional,
                    None => {
                        return Err(Error::InvalidParameter(
                            "either --kernel or --config is required".into(),
                        ))
                    }
                };
                StudyConfig {
                    kernel,
                    functions: Vec::new(),
                    sweep: Default::default(),
                    quadrature: Default::default(),
                    output: Default::default(),
                }
            }
        };
        if let Some(name) = &self.kernel {
            if cfg.kernel.name() != name {
                cfg.kernel = KernelSpec::parse_name(name)?;
            }
        }
        if !self.functions.is_empty() {
            cfg.functions = self
                .functions
                .iter()
                .map(|n| FunctionSpec::parse_name(n.trim()))
                .collect::<Result<_>>()?;
        }
        let sw = &mut cfg.sweep;
        if let Some(n) = self.dimension {
            sw.dimension = n;
        }
        if let Some(p) = self.p {
            sw.p = p;
        }
        if self.s.is_some() {
            sw.s = self.s;
        }
        if !self.eps.is_empty() {
            sw.schedule = EpsilonSchedule::new(self.eps.clone())?;
        } else if let Some(g) = &self.eps_geom {
            sw.schedule = parse_geometric(g)?;
        }
        if !self.radii.is_empty() {
            sw.radii = self.radii.clone();
        }
        if !self.split_radii.is_empty() {
            sw.split_radii = self.split_radii.clone();
        }
        if let Some(t) = self.tol {
            sw.tol = t;
            sw.agreement_tol = t;
        }
        if let Some(out) = &self.out {
            match suffix(out) {
                Some("json") => cfg.output.json = Some(out.clone()),
                Some("csv") => cfg.output.csv = Some(out.clone()),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "--out must end in .csv or .json, got {}",
                        out.display()
                    )))
                }
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter(
                "--threads must be at least 1".into(),
            ));
        }
        cfg.validate_sweep()?;
        Ok(cfg)
    }
}

fn suffix(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() || matches!(e.root(), Error::UndefinedRatio(_)) {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// `dir/stem.tag.csv` next to `path`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

fn verdict_line(out: &mut String, label: &str, v: &MomentVerdict) {
    let _ = write!(
        out,
        "{label:<11} {}",
        if v.holds { "holds" } else { "fails" }
    );
    let mut parts = Vec::new();
    if let Some(m) = v.mass_escape {
        parts.push(format!("mass escape {m}"));
    }
    if let Some(a) = v.attenuation {
        parts.push(format!("attenuation {a}"));
    }
    if !parts.is_empty() {
        let _ = write!(out, " ({})", parts.join(", "));
    }
    out.push('\n');
    for w in &v.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
}

fn moment_table(report: &MomentReport) -> String {
    let mut out = format!(
        "{:>12} {:>8} {:>22} {:>22}\n",
        "epsilon", "R", "tail_mass", "short_range_moment"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:>12.6e} {:>8} {:>22.16} {:>22.16e}",
            r.epsilon, r.radius, r.tail_mass, r.short_range
        );
    }
    out
}

fn function_summary(out: &mut String, f: &FunctionStudy, tol: f64) {
    let _ = writeln!(out, "u = {}", f.spec.name());
    match &f.ms_ratio_limit {
        Some(x) => {
            let _ = writeln!(
                out,
                "  ms_ratio limit  {:.10} ± {:.2e}",
                x.limit, x.uncertainty
            );
        }
        None => out.push_str("  ms_ratio limit  unavailable\n"),
    }
    for n in &f.near_limits {
        let _ = writeln!(
            out,
            "  near limit R={:<5} {:.3e} ± {:.2e}",
            n.radius, n.limit.limit, n.limit.uncertainty
        );
    }
    if let Some(m) = f.monotone_approach {
        let _ = writeln!(out, "  monotone approach {m}");
    }
    if let Some(ms) = f.ms_formula_holds(tol) {
        let _ = writeln!(out, "  MS formula {}", if ms { "holds" } else { "fails" });
    }
}

fn failure_lines(out: &mut String, failures: &[crate::study::CellFailure]) {
    for f in failures {
        let _ = writeln!(out, "failed: {}: {}", f.cell, f.error);
    }
}

fn skipped_lines(out: &mut String, skipped: &[crate::study::Skipped]) {
    for s in skipped {
        let _ = writeln!(out, "skipped {}: {}", s.spec.name(), s.reason);
    }
}

#[derive(Serialize)]
struct MomentsOutput<'a> {
    report: &'a MomentReport,
    uniform: Option<&'a MomentVerdict>,
    iterated: Option<&'a MomentVerdict>,
}

fn run_moments(cfg: &StudyConfig, q: Option<f64>, stdout: &mut String) -> Result<i32> {
    let sw = &cfg.sweep;
    let kernel = cfg.kernel.build(sw.dimension, sw.p, sw.s)?;
    sw.schedule.check_domain(&kernel)?;
    let q = q.unwrap_or_else(|| cfg.moment_order());
    let mut radii = sw.radii.clone();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let report = moment_report(&kernel, &sw.schedule, &radii, q, &cfg.quadrature)?;
    let _ = writeln!(
        stdout,
        "kernel {}, N = {}, q = {q}",
        kernel.name, sw.dimension
    );
    stdout.push_str(&moment_table(&report));
    let uniform = uniform_verdict(&report, sw.tol).ok();
    let iterated = iterated_verdict(&report, sw.tol).ok();
    match &uniform {
        Some(v) => verdict_line(stdout, "uniform", v),
        None => stdout.push_str("uniform     needs ≥ 3 schedule points and ≥ 2 radii\n"),
    }
    match &iterated {
        Some(v) => verdict_line(stdout, "iterated", v),
        None => stdout.push_str("iterated    needs ≥ 3 schedule points and ≥ 3 radii\n"),
    }
    if let Some(path) = &cfg.output.csv {
        write_file(path, &report.to_csv())?;
    }
    if let Some(path) = &cfg.output.json {
        write_file(
            path,
            &to_json(&MomentsOutput {
                report: &report,
                uniform: uniform.as_ref(),
                iterated: iterated.as_ref(),
            })?,
        )?;
    }
    Ok(EXIT_OK)
}

fn energy_csv(study: &EnergyStudy, index: usize) -> String {
    breakdowns_to_csv(&study.functions[index].rows)
}

fn run_energy(cfg: &StudyConfig, stdout: &mut String) -> Result<i32> {
    if cfg.functions.is_empty() {
        return Err(Error::InvalidParameter(
            "energy needs --function or a config with functions".into(),
        ));
    }
    let study = energy_study(cfg)?;
    let _ = writeln!(
        stdout,
        "kernel {}, N = {}, p = {}",
        study.kernel, cfg.sweep.dimension, cfg.sweep.p
    );
    for (i, f) in study.functions.iter().enumerate() {
        function_summary(stdout, f, cfg.sweep.agreement_tol);
        stdout.push_str(&energy_csv(&study, i));
    }
    skipped_lines(stdout, &study.skipped);
    failure_lines(stdout, &study.failures);
    if let Some(path) = &cfg.output.csv {
        match study.functions.len() {
            0 => {}
            1 => write_file(path, &energy_csv(&study, 0))?,
            _ => {
                for (i, f) in study.functions.iter().enumerate() {
                    write_file(
                        &sibling(path, &format!("{i}-{}", f.spec.name())),
                        &energy_csv(&study, i),
                    )?;
                }
            }
        }
    }
    if let Some(path) = &cfg.output.json {
        write_file(path, &to_json(&study)?)?;
    }
    Ok(if study.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    })
}

/// Writes the report as JSON plus one CSV table per section next to it.
pub fn write_study(report: &StudyReport, path: &Path) -> Result<()> {
    write_file(path, &to_json(report)?)?;
    if let Some(m) = &report.moments {
        write_file(&sibling(path, "moments"), &m.to_csv())?;
    }
    for (i, f) in report.functions.iter().enumerate() {
        write_file(
            &sibling(path, &format!("energy.{i}-{}", f.spec.name())),
            &breakdowns_to_csv(&f.rows),
        )?;
    }
    Ok(())
}

fn run_study(cfg: &StudyConfig, assert_equivalence: bool, stdout: &mut String) -> Result<i32> {
    cfg.validate()?;
    let report = run_ms_study(cfg)?;
    let _ = writeln!(
        stdout,
        "kernel {}, N = {}, p = {}, q = {}",
        report.kernel, report.dimension, report.p, report.q
    );
    for (label, v) in [
        ("uniform", &report.uniform),
        ("iterated", &report.iterated),
        ("admissible", &report.admissible),
    ] {
        if let Some(v) = v {
            verdict_line(stdout, label, v);
        }
    }
    for f in &report.functions {
        function_summary(stdout, f, report.equivalence.tolerance);
    }
    skipped_lines(stdout, &report.skipped);
    failure_lines(stdout, &report.failures);
    if let Some(a) = report.equivalence.sub_verdicts_agree {
        let _ = writeln!(stdout, "mass escape and attenuation agree: {a}");
    }
    let _ = writeln!(
        stdout,
        "equivalence: {}",
        if report.equivalence.all_agree {
            "agree"
        } else {
            "disagree"
        }
    );
    if let Some(path) = &cfg.output.json {
        write_study(&report, path)?;
    }
    if let Some(path) = &cfg.output.csv {
        if let Some(m) = &report.moments {
            write_file(path, &m.to_csv())?;
        }
    }
    if assert_equivalence {
        let ok = verify_equivalence(&report, cfg.sweep.agreement_tol).unwrap_or(false);
        if !ok {
            return Ok(EXIT_EQUIVALENCE);
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct AdmissibleOutput<'a> {
    series: &'a AdmissibilitySeries,
    verdict: Option<&'a MomentVerdict>,
}

fn run_admissible(cfg: &StudyConfig, stdout: &mut String) -> Result<i32> {
    let sw = &cfg.sweep;
    let s =
        sw.s.ok_or_else(|| Error::InvalidParameter("check-admissible needs --s".into()))?;
    let kernel = cfg.kernel.build(sw.dimension, sw.p, sw.s)?;
    sw.schedule.check_domain(&kernel)?;
    let series = admissibility_series(&kernel, &sw.schedule, s, sw.p, &cfg.quadrature)?;
    let verdict = admissible_verdict(&series, sw.tol).ok();
    let _ = writeln!(
        stdout,
        "kernel {}, N = {}, s = {s}, p = {}",
        kernel.name, sw.dimension, sw.p
    );
    let mut csv = String::from("epsilon,admissibility\n");
    for (eps, v) in &series.values {
        match v {
            Some(v) => {
                let _ = writeln!(stdout, "{eps:>12.6e} {v:.16}");
                let _ = writeln!(csv, "{eps:.16e},{v:.16e}");
            }
            None => {
                let _ = writeln!(stdout, "{eps:>12.6e} divergent");
                let _ = writeln!(csv, "{eps:.16e},");
            }
        }
    }
    for w in &series.warnings {
        let _ = writeln!(stdout, "warning: {w}");
    }
    if let Some(x) = &series.limit {
        let _ = writeln!(stdout, "limit {:.12} ± {:.2e}", x.limit, x.uncertainty);
    }
    match &verdict {
        Some(v) => verdict_line(stdout, "admissible", v),
        None => stdout.push_str("admissible  undetermined (too few convergent points)\n"),
    }
    if let Some(path) = &cfg.output.csv {
        write_file(path, &csv)?;
    }
    if let Some(path) = &cfg.output.json {
        write_file(
            path,
            &to_json(&AdmissibleOutput {
                series: &series,
                verdict: verdict.as_ref(),
            })?,
        )?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SeminormOutput<'a> {
    function: &'a str,
    dimension: usize,
    s: f64,
    p: f64,
    value: f64,
    error_estimate: f64,
}

fn run_seminorm(cfg: &StudyConfig, stdout: &mut String) -> Result<i32> {
    let sw = &cfg.sweep;
    let s =
        sw.s.ok_or_else(|| Error::InvalidParameter("seminorm needs --s".into()))?;
    let spec = match cfg.functions.as_slice() {
        [one] => one,
        _ => {
            return Err(Error::InvalidParameter(
                "seminorm needs exactly one --function".into(),
            ))
        }
    };
    let u = spec.build(sw.dimension)?;
    let IntegralResult {
        value,
        error_estimate,
        ..
    } = u
        .gagliardo_seminorm_p(s, sw.p, &cfg.quadrature)
        .map_err(|e| e.in_cell(format!("u = `{}`, s = {s}, p = {}", u.name, sw.p)))?;
    let _ = writeln!(
        stdout,
        "[{}]^p_(W^(s,p)) = {value:.12} ± {error_estimate:.2e}",
        u.name
    );
    let row = SeminormOutput {
        function: spec.name(),
        dimension: sw.dimension,
        s,
        p: sw.p,
        value,
        error_estimate,
    };
    if let Some(path) = &cfg.output.csv {
        write_file(
            path,
            &format!("function,N,s,p,seminorm_p,err\n{},{},{s:.16e},{:.16e},{value:.16e},{error_estimate:.16e}\n", row.function, row.dimension, row.p),
        )?;
    }
    if let Some(path) = &cfg.output.json {
        write_file(path, &to_json(&row)?)?;
    }
    Ok(EXIT_OK)
}

fn dispatch(command: &Command, stdout: &mut String) -> Result<i32> {
    let common = match command {
        Command::Moments { common, .. }
        | Command::Energy { common }
        | Command::Study { common, .. }
        | Command::CheckAdmissible { common }
        | Command::Seminorm { common } => common,
    };
    let cfg = common.resolve(!matches!(command, Command::Seminorm { .. }))?;
    let threads = common.threads.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Moments { q, .. } => run_moments(&cfg, *q, stdout),
        Command::Energy { .. } => run_energy(&cfg, stdout),
        Command::Study {
            assert_equivalence, ..
        } => run_study(&cfg, *assert_equivalence, stdout),
        Command::CheckAdmissible { .. } => run_admissible(&cfg, stdout),
        Command::Seminorm { .. } => run_seminorm(&cfg, stdout),
    })
}

/// Parses `args` (program name first), runs, prints, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut stdout = String::new();
    let result = dispatch(&cli.command, &mut stdout);
    print!("{stdout}");
    let _ = std::io::stdout().flush();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
