mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use lambda_levels::ap::{bulk_ap, ApCache, FormSource, FormSpec};
use lambda_levels::carayol::{classify_all, count_levels, write_records_csv, AnalysisContext};
use lambda_levels::census::{
    class_size_check, density_trace_det_linked, density_trace_nonzero, density_trace_zero,
    enumerate_census, ClassSizeReport, Sign, DEFAULT_CENSUS_BOUND,
};
use lambda_levels::densities::{self, DensityReport};
use lambda_levels::local::LambdaProfile;
use lambda_levels::rational::{int, render, to_f64, Rational};
use lambda_levels::stability::{analyze, AnalyzeOptions, Mode};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::json;

use config::{CommonArgs, Format, RunConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "lambda-levels", version)]
#[command(about = "Densities of lambda-stable and lambda-growing levels in congruence families")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate GL_2(F_p) and check the trace/determinant densities
    Census {
        /// Write the cell counts as CSV
        #[arg(long)]
        export: Option<PathBuf>,
        /// Largest p the enumeration accepts
        #[arg(long, default_value_t = DEFAULT_CENSUS_BOUND)]
        bound: u64,
    },
    /// Classify primes below x into the level-raising sets
    Classify,
    /// Certify lambda-stable or lambda-growing levels
    Analyze {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long = "lambda-g", default_value_t = 0)]
        lambda_g: u64,
        #[arg(long = "mu-g", default_value_t = 0)]
        mu_g: u64,
        /// Assert that lambda(g) is minimal in its family (default: when lambda(g) = 0)
        #[arg(long = "hyp-min")]
        hyp_min: Option<bool>,
        /// Number of sample levels to emit
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Stable,
    Growth,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Stable => Mode::Stable,
            ModeArg::Growth => Mode::Growth,
        }
    }
}

/// A run that finished but whose checks did not all pass.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("one or more closed-form checks failed")
    }
}

impl std::error::Error for ChecksFailed {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<ChecksFailed>() {
        return 1;
    }
    match e.chain().find_map(|c| c.downcast_ref::<lambda_levels::Error>()) {
        Some(err) if err.is_validation() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(&cli.common)?;
    if let Some(k) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Census { export, bound } => cmd_census(&cfg, export, bound, &mut out),
        Command::Classify => cmd_classify(&cfg, &mut out),
        Command::Analyze {
            mode,
            lambda_g,
            mu_g,
            hyp_min,
            samples,
        } => {
            let opts = AnalyzeOptions {
                mode: mode.into(),
                profile: LambdaProfile::new(lambda_g, mu_g, "g"),
                min_asserted: hyp_min,
                max_m: parse_max_m(&cfg)?,
                sample_limit: samples,
            };
            cmd_analyze(&cfg, &opts, &mut out)
        }
    }?;
    out.flush()?;
    Ok(())
}

fn parse_max_m(cfg: &RunConfig) -> anyhow::Result<Option<BigUint>> {
    cfg.max_m
        .as_deref()
        .map(|s| s.parse::<BigUint>().with_context(|| format!("--max-m {s:?} is not a positive integer")))
        .transpose()
}

fn write_json<W: Write>(out: &mut W, value: &serde_json::Value) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: String,
    decimal: f64,
    formula: String,
    pass: bool,
}

impl Check {
    fn from_result(name: String, formula: Rational, got: lambda_levels::Result<Rational>) -> anyhow::Result<Self> {
        let value = match got {
            Ok(v) => v,
            Err(lambda_levels::Error::ClosedFormMismatch { counted, .. }) => {
                lambda_levels::rational::parse(&counted).context("unparsable counted value")?
            }
            Err(e) => return Err(e.into()),
        };
        Ok(Check {
            name,
            decimal: to_f64(&value),
            pass: value == formula,
            value: render(&value),
            formula: render(&formula),
        })
    }
}

fn cmd_census<W: Write>(cfg: &RunConfig, export: Option<PathBuf>, bound: u64, out: &mut W) -> anyhow::Result<()> {
    let p = cfg.require_p()?;
    let census = enumerate_census(p, bound)?;
    if let Some(path) = &export {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        census.write_csv(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
    }

    let mut checks = vec![Check::from_result(
        "trace 0".into(),
        densities::trace_zero(p),
        density_trace_zero(&census),
    )?];
    let mut sum = lambda_levels::rational::parse(&checks[0].value).unwrap_or_default();
    for a in 1..p as i64 {
        let c = Check::from_result(
            format!("trace {a}"),
            densities::trace_nonzero(p),
            density_trace_nonzero(&census, a),
        )?;
        sum += lambda_levels::rational::parse(&c.value).unwrap_or_default();
        checks.push(c);
    }
    for (sign, name) in [(Sign::Plus, "trace +(det+1)"), (Sign::Minus, "trace -(det+1)")] {
        checks.push(Check::from_result(
            name.into(),
            densities::trace_det_linked(p),
            density_trace_det_linked(&census, sign),
        )?);
    }
    checks.push(Check {
        name: "sum over traces".into(),
        decimal: to_f64(&sum),
        pass: sum == int(1),
        value: render(&sum),
        formula: "1".into(),
    });
    let corner = census.count(1, 2);
    checks.push(Check {
        name: "#C(1,2)".into(),
        value: corner.to_string(),
        decimal: corner as f64,
        formula: (p * p).to_string(),
        pass: corner == p * p,
    });
    let sizes: ClassSizeReport = class_size_check(p, bound)?;
    let pass = checks.iter().all(|c| c.pass) && sizes.all_pass();

    match cfg.format {
        Format::Json => write_json(
            out,
            &json!({
                "version": VERSION,
                "command": "census",
                "config": cfg,
                "bound": bound,
                "export": export,
                "p": p,
                "group_order": census.group_order(),
                "checks": checks,
                "class_sizes": sizes,
                "pass": pass,
            }),
        )?,
        Format::Csv => census.write_csv(&mut *out)?,
        Format::Text => {
            writeln!(out, "GL_2(F_{p}): {} elements", census.group_order())?;
            for c in &checks {
                writeln!(
                    out,
                    "{:<16} {:>12}  (formula {})  {}",
                    c.name,
                    c.value,
                    c.formula,
                    verdict(c.pass)
                )?;
            }
            for c in &sizes.checks {
                writeln!(
                    out,
                    "{:<22} {} classes of size {}  {}",
                    c.name,
                    c.expected.0,
                    c.expected.1,
                    verdict(c.pass)
                )?;
            }
            writeln!(out, "overall {}", verdict(pass))?;
        }
    }
    if pass {
        Ok(())
    } else {
        out.flush()?;
        Err(ChecksFailed.into())
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Loads the cache (or table), fills it below `x`, and writes counted
/// values back if a cache path is configured.
struct Coefficients {
    form: FormSpec,
    cache: ApCache,
    path: Option<PathBuf>,
}

impl Coefficients {
    fn open(cfg: &RunConfig) -> anyhow::Result<Self> {
        let form = cfg.form()?;
        let path = match form.source {
            FormSource::Curve(_) => cfg.cache_path(&form),
            FormSource::CoefficientTable(_) => None,
        };
        let mut cache = ApCache::for_form(&form)?;
        if let Some(path) = path.as_ref().filter(|p| p.exists()) {
            cache.merge(ApCache::load(path)?);
            if let Err(bad) = cache.validate(&form) {
                anyhow::bail!(
                    "cache {} is inconsistent with {} at l = {:?}",
                    path.display(),
                    form.label,
                    bad
                );
            }
        }
        Ok(Coefficients { form, cache, path })
    }

    fn save(&self) -> anyhow::Result<()> {
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            self.cache.save(path)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ToleranceCheck<'a> {
    #[serde(flatten)]
    report: &'a DensityReport,
    within_tolerance: bool,
}

fn tolerance_checks(reports: &[DensityReport], tol: f64) -> Vec<ToleranceCheck<'_>> {
    reports
        .iter()
        .map(|r| ToleranceCheck {
            report: r,
            within_tolerance: r.within(tol),
        })
        .collect()
}

fn cmd_classify<W: Write>(cfg: &RunConfig, out: &mut W) -> anyhow::Result<()> {
    let p = cfg.require_p()?;
    let mut coeffs = Coefficients::open(cfg)?;
    let ctx = AnalysisContext::new(p, coeffs.form.clone(), cfg.x)?;
    bulk_ap(&coeffs.form, cfg.x, &mut coeffs.cache)?;
    coeffs.save()?;
    let cls = classify_all(&ctx, &coeffs.cache)?;
    let s = &cls.summary;
    let reports = s.reports();

    match cfg.format {
        Format::Json => write_json(
            out,
            &json!({
                "version": VERSION,
                "command": "classify",
                "config": cfg,
                "form": coeffs.form.label,
                "level": ctx.level(),
                "summary": s,
                "tolerance_checks": tolerance_checks(&reports, cfg.tolerance),
            }),
        )?,
        Format::Csv => write_records_csv(&cls.records, &mut *out)?,
        Format::Text => {
            writeln!(out, "{} at p = {p}, primes below {}: {}", coeffs.form.label, cfg.x, s.pi)?;
            let counts = [
                ("set1", s.s1),
                ("set1_prime", s.s1_prime),
                ("set2", s.s2),
                ("set2_prime", s.s2_prime),
                ("set3", s.s3),
                ("divides_n", s.divides_n),
                ("is_p", s.is_p),
            ];
            for (name, n) in counts {
                writeln!(out, "{name:<17} {n}")?;
            }
            for r in reports.iter().filter(|r| r.total > 0) {
                writeln!(
                    out,
                    "{:<17} {} = {:.4}  limit {} = {:.4}  {}",
                    r.set,
                    r.empirical_fraction(),
                    r.empirical(),
                    render(&r.theoretical),
                    to_f64(&r.theoretical),
                    if r.within(cfg.tolerance) { "within tolerance" } else { "outside tolerance" }
                )?;
            }
            writeln!(out, "admissible levels: {}", count_levels(s))?;
        }
    }
    Ok(())
}

fn cmd_analyze<W: Write>(cfg: &RunConfig, opts: &AnalyzeOptions, out: &mut W) -> anyhow::Result<()> {
    let p = cfg.require_p()?;
    let mut coeffs = Coefficients::open(cfg)?;
    let ctx = AnalysisContext::new(p, coeffs.form.clone(), cfg.x)?;
    let verdict = analyze(&ctx, &mut coeffs.cache, opts);
    // counted coefficients are worth keeping even when a hypothesis fails
    coeffs.save()?;
    let verdict = verdict?;

    match cfg.format {
        Format::Json => write_json(
            out,
            &json!({
                "version": VERSION,
                "command": "analyze",
                "config": cfg,
                "analysis": {
                    "mode": opts.mode,
                    "lambda_g": opts.profile.lambda,
                    "mu_g": opts.profile.mu,
                    "hyp_min": opts.min_asserted,
                    "samples": opts.sample_limit,
                },
                "verdict": verdict,
                "within_tolerance": verdict.density.within(cfg.tolerance),
            }),
        )?,
        Format::Csv => {
            writeln!(out, "m,factorization")?;
            for c in &verdict.sample_levels {
                let factors: Vec<String> = c.exponents.iter().map(|(l, e)| format!("{l}^{e}")).collect();
                writeln!(out, "{},{}*{}", c.m, ctx.level(), factors.join("*"))?;
            }
        }
        Format::Text => {
            let d = &verdict.density;
            let mode = if opts.mode == Mode::Stable { "stable" } else { "growth" };
            writeln!(out, "{} at p = {p}, mode {mode}", verdict.form)?;
            writeln!(out, "claim: {}", verdict.claim)?;
            for f in &verdict.bad_primes.factors {
                writeln!(out, "bad prime {}: d = {}, delta = {}", f.ell, f.d, f.delta)?;
            }
            writeln!(
                out,
                "density {} = {:.4}  empirical {} = {:.4}",
                render(&d.theoretical),
                to_f64(&d.theoretical),
                d.empirical_fraction(),
                d.empirical()
            )?;
            let levels: Vec<String> = verdict.sample_levels.iter().map(|c| c.m.to_string()).collect();
            writeln!(out, "levels: {}", levels.join(" "))?;
        }
    }
    Ok(())
}
