//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use lambda_levels::ap::{registry_curve, FormSpec, WeierstrassCurve, REGISTRY};
use serde::{Deserialize, Serialize};

pub const CACHE_DIR_ENV: &str = "LAMBDA_LEVELS_CACHE_DIR";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

/// Flags shared by every subcommand. All optional so a config file can
/// supply them instead.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// TOML file with any of the fields below; flags win over the file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Residue characteristic p (odd prime)
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// Registry label (11a1, 43a1, 53a1) or coefficients "a1,a2,a3,a4,a6"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub curve: Option<String>,
    /// Coefficient table (CSV `ell,ap`) instead of a curve
    #[arg(long, global = true, conflicts_with = "curve")]
    pub table: Option<PathBuf>,
    /// Level N of the form
    #[arg(long = "N", global = true)]
    pub level: Option<u64>,
    /// Primes strictly below x are classified
    #[arg(long, global = true)]
    pub x: Option<u64>,
    /// Upper bound on emitted levels
    #[arg(long = "max-m", global = true)]
    pub max_m: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// a_l cache file; defaults to <$LAMBDA_LEVELS_CACHE_DIR>/<form>.csv
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Absolute tolerance when comparing empirical and limiting densities
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// What a config file may contain.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    p: Option<u64>,
    curve: Option<String>,
    table: Option<PathBuf>,
    #[serde(rename = "N")]
    level: Option<u64>,
    x: Option<u64>,
    max_m: Option<String>,
    format: Option<Format>,
    cache: Option<PathBuf>,
    tolerance: Option<f64>,
    threads: Option<usize>,
}

/// Fully resolved configuration, echoed into every JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub p: Option<u64>,
    pub curve: Option<String>,
    pub table: Option<PathBuf>,
    #[serde(rename = "N")]
    pub level: Option<u64>,
    pub x: u64,
    pub max_m: Option<String>,
    pub format: Format,
    pub cache: Option<PathBuf>,
    pub tolerance: f64,
    pub threads: Option<usize>,
}

pub const DEFAULT_X: u64 = 10_000;
pub const DEFAULT_TOLERANCE: f64 = 0.02;

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            p: args.p.or(file.p),
            curve: args.curve.clone().or(file.curve),
            table: args.table.clone().or(file.table),
            level: args.level.or(file.level),
            x: args.x.or(file.x).unwrap_or(DEFAULT_X),
            max_m: args.max_m.clone().or(file.max_m),
            format: args.format.or(file.format).unwrap_or_default(),
            cache: args.cache.clone().or(file.cache),
            tolerance: args.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
            threads: args.threads.or(file.threads),
        };
        if cfg.curve.is_some() && cfg.table.is_some() {
            bail!("give either a curve or a coefficient table, not both");
        }
        if cfg.level == Some(0) {
            bail!("level N must be positive");
        }
        if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
            bail!("tolerance must be positive");
        }
        if cfg.threads == Some(0) {
            bail!("threads must be positive");
        }
        Ok(cfg)
    }

    pub fn require_p(&self) -> anyhow::Result<u64> {
        self.p.context("--p is required")
    }

    /// The form named by `--curve` or `--table`, with its level.
    pub fn form(&self) -> anyhow::Result<FormSpec> {
        if let Some(path) = &self.table {
            let level = self.level.context("--N is required with --table")?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "table".into());
            return Ok(FormSpec::table(path, level, label));
        }
        let spec = self.curve.as_deref().context("--curve or --table is required")?;
        let (curve, label, known_level) = match registry_curve(spec) {
            Some((curve, level)) => (curve, spec.to_string(), Some(level)),
            None => {
                let curve = WeierstrassCurve::parse(spec).with_context(|| {
                    format!("--curve {spec:?} is neither a registry label nor five integers")
                })?;
                let known = REGISTRY.iter().find(|(_, c, _)| *c == curve);
                let label = known.map_or_else(|| spec.replace(',', "_"), |(l, _, _)| l.to_string());
                (curve, label, known.map(|(_, _, n)| *n))
            }
        };
        let level = self
            .level
            .or(known_level)
            .context("--N is required for curves outside the registry")?;
        Ok(FormSpec::curve(curve, level, label)?)
    }

    /// Where to read and write `a_l` for this form, if anywhere.
    pub fn cache_path(&self, form: &FormSpec) -> Option<PathBuf> {
        self.cache.clone().or_else(|| {
            let dir = std::env::var_os(CACHE_DIR_ENV)?;
            Some(Path::new(&dir).join(format!("{}.csv", form.label)))
        })
    }
}
