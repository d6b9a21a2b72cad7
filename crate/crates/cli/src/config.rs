//! Flag parsing, config-file layering, and run metadata.
//!
//! Every knob can come from three places, in priority order: the command
//! line, a flat `key=value` config file (`--config`), and the built-in
//! default. The seed additionally honors the `THERMODIFF_SEED`
//! environment variable between flag and file. Whatever wins is recorded
//! in the artifact metadata, so an artifact always carries enough to
//! reproduce the run that made it.

use crate::AppError;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;
use thermodiff_core::{PhysicalParams, UnitSystem};

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV_VAR: &str = "THERMODIFF_SEED";

#[derive(Parser)]
#[command(
    name = "thermodiff",
    version,
    about = "Thermal diffusion of a free particle: derived scales, variance schedules, \
             entropy-rate curves, spectral propagation, and Monte Carlo ensembles"
)]
pub struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print the derived scales (dp, dx0, diffusion constant, exact rate) as JSON.
    Scales(ScalesArgs),
    /// Tabulate the variance breakdown over a list of times (CSV).
    Variance(VarianceArgs),
    /// Tabulate a closed-form entropy-rate curve (CSV).
    Rates(RatesArgs),
    /// Spectrally propagate the wavepacket and report grid moments (JSON).
    Evolve(EvolveArgs),
    /// Sample a trajectory ensemble; dump positions and/or per-step statistics (CSV).
    Sample(SampleArgs),
    /// Estimate the entropy-rate curve from a sampled ensemble (CSV).
    Estimate(EstimateArgs),
    /// Evaluate both rate constructions over an (n, dt) grid (CSV with diagnostics).
    Sweep(SweepArgs),
    /// Run the acceptance battery; exit code reflects the overall verdict.
    Accept(AcceptArgs),
}

/// Physical-parameter flags shared by every computing subcommand.
#[derive(Args, Clone, Default)]
pub struct ParamArgs {
    /// Unit system: natural (hbar = kB = 1) or si.
    #[arg(long)]
    pub units: Option<String>,
    /// Temperature (dimensionless in natural units, kelvin in SI).
    #[arg(long, allow_negative_numbers = true)]
    pub temperature: Option<f64>,
    /// Particle mass (dimensionless in natural units, kg in SI).
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    /// Override hbar (SI mode only).
    #[arg(long, allow_negative_numbers = true)]
    pub hbar: Option<f64>,
    /// Override the Boltzmann constant (SI mode only).
    #[arg(long, allow_negative_numbers = true)]
    pub boltzmann: Option<f64>,
}

#[derive(Args)]
pub struct ScalesArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Output format (json).
    #[arg(long)]
    pub format: Option<String>,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated times to tabulate.
    #[arg(long, value_name = "T1,T2,...")]
    pub t_list: Option<String>,
    /// Output format (csv).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Step size.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Number of curve points.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Rate construction: conditional or block.
    #[arg(long)]
    pub method: Option<String>,
    /// Output format (csv).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Target time.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Grid points (power of two).
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Grid span in multiples of the width bound dx0 + dp t / m.
    #[arg(long)]
    pub grid_span_sigmas: Option<f64>,
    /// Also dump (x, Re psi, Im psi, |psi|^2) as CSV to this path.
    #[arg(long, value_name = "PATH")]
    pub dump_psi: Option<PathBuf>,
    /// Output format (json).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full, quantum_only, or classical_only.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Output format (csv).
    #[arg(long)]
    pub format: Option<String>,
    /// Ensemble dump (particle,step,t,x).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Per-step statistics dump (step,t,mean,var,se,var_analytic).
    #[arg(long, value_name = "PATH")]
    pub stats_output: Option<PathBuf>,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full, quantum_only, or classical_only.
    #[arg(long)]
    pub scheme: Option<String>,
    /// plugin_gaussian or nearest_neighbor.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Neighbor order for the nearest-neighbor estimator.
    #[arg(long)]
    pub k: Option<usize>,
    /// Output format (csv).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated list of step sizes.
    #[arg(long, value_name = "DT1,DT2,...")]
    pub dt_list: Option<String>,
    /// Comma-separated list of step indices.
    #[arg(long, value_name = "N1,N2,...")]
    pub n_list: Option<String>,
    /// Output format (csv).
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct AcceptArgs {
    /// Seed for the stochastic criteria.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here (pass/fail lines go to stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Flat `key=value` file with `#` comments.
pub fn load_config_file(path: Option<&PathBuf>) -> Result<BTreeMap<String, String>, AppError> {
    let mut map = BTreeMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(AppError::Usage(format!(
                "config line {} is not key=value: {raw:?}",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Layered lookup: flag, then config file, then default.
pub struct Resolver {
    file: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self { file }
    }

    fn file_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, AppError>
    where
        T::Err: Display,
    {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                AppError::Usage(format!("config value {key}={raw} is invalid: {e}"))
            }),
        }
    }

    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, AppError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.file_value(key)?.unwrap_or(default)),
        }
    }

    pub fn get_optional<T: FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, AppError>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file_value(key),
        }
    }

    /// Seed precedence: flag, THERMODIFF_SEED, config file, default.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, AppError> {
        if let Some(s) = flag {
            return Ok(s);
        }
        if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
            return raw.parse::<u64>().map_err(|e| {
                AppError::Usage(format!("{SEED_ENV_VAR}={raw} is not a valid seed: {e}"))
            });
        }
        self.get(None, "seed", DEFAULT_SEED)
    }
}

/// Ordered run metadata embedded into every artifact. Keys other than
/// `version`, `command`, and `timestep-verdict` are flag names, so the
/// block doubles as a recipe for reproducing the run.
#[derive(Debug, Clone)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

/// Metadata keys that describe the run but are not re-runnable flags.
pub const NON_FLAG_KEYS: &[&str] = &["version", "command", "timestep-verdict"];

impl Metadata {
    pub fn new(command: &str) -> Self {
        Self {
            entries: vec![
                ("version".into(), thermodiff_core::VERSION.into()),
                ("command".into(), command.into()),
            ],
        }
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// `# key = value` comment lines for CSV artifacts.
    pub fn csv_comments(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    /// JSON object with string values (preserves exact float formatting).
    pub fn json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        serde_json::Value::Object(map)
    }

    /// Rebuild the argv that reproduces this run.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = Vec::new();
        let command = self
            .entries
            .iter()
            .find(|(k, _)| k == "command")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();
        args.push(command);
        for (k, v) in &self.entries {
            if NON_FLAG_KEYS.contains(&k.as_str()) {
                continue;
            }
            args.push(format!("--{k}"));
            args.push(v.clone());
        }
        args
    }
}

/// Resolve the shared physical parameters, recording them into `meta`.
pub fn resolve_params(
    args: &ParamArgs,
    resolver: &Resolver,
    meta: &mut Metadata,
) -> Result<PhysicalParams, AppError> {
    let units_raw = resolver.get(args.units.clone(), "units", "natural".to_string())?;
    let unit_system = match units_raw.as_str() {
        "natural" => UnitSystem::Natural,
        "si" => UnitSystem::Si,
        other => {
            return Err(AppError::Usage(format!(
                "--units must be natural or si, got {other}"
            )))
        }
    };
    let temperature = resolver.get(args.temperature, "temperature", 1.0)?;
    let mass = resolver.get(args.mass, "mass", 1.0)?;
    let hbar = resolver.get_optional(args.hbar, "hbar")?;
    let boltzmann = resolver.get_optional(args.boltzmann, "boltzmann")?;

    let params = PhysicalParams::new(unit_system, temperature, mass, hbar, boltzmann)
        .map_err(|e| AppError::Usage(e.to_string()))?;

    meta.push("units", unit_system.label());
    meta.push("temperature", temperature);
    meta.push("mass", mass);
    if let Some(h) = hbar {
        meta.push("hbar", h);
    }
    if let Some(kb) = boltzmann {
        meta.push("boltzmann", kb);
    }
    Ok(params)
}

/// Parse a comma-separated list of floats; empty lists are usage errors.
pub fn parse_float_list(raw: &str, flag: &str) -> Result<Vec<f64>, AppError> {
    let items: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(AppError::Usage(format!("--{flag} must list at least one value")));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| AppError::Usage(format!("--{flag} entry {s:?} is invalid: {e}")))
        })
        .collect()
}

/// Parse a comma-separated list of step indices.
pub fn parse_index_list(raw: &str, flag: &str) -> Result<Vec<u64>, AppError> {
    let items: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(AppError::Usage(format!("--{flag} must list at least one value")));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<u64>()
                .map_err(|e| AppError::Usage(format!("--{flag} entry {s:?} is invalid: {e}")))
        })
        .collect()
}

/// Validate a `--format` value against what a subcommand can emit.
pub fn check_format(
    flag: Option<String>,
    resolver: &Resolver,
    expected: &str,
) -> Result<(), AppError> {
    let format = resolver.get(flag, "format", expected.to_string())?;
    if format == expected {
        Ok(())
    } else {
        Err(AppError::Usage(format!(
            "--format {format} is not available here; this subcommand emits {expected}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn config_file_parses_flat_key_values() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# a comment").unwrap();
        writeln!(f, "temperature = 4").unwrap();
        writeln!(f).unwrap();
        writeln!(f, "units=si").unwrap();
        let map = load_config_file(Some(&f.path().to_path_buf())).unwrap();
        assert_eq!(map.get("temperature").unwrap(), "4");
        assert_eq!(map.get("units").unwrap(), "si");
    }

    #[test]
    fn config_file_rejects_malformed_lines() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "temperature 4").unwrap();
        let err = load_config_file(Some(&f.path().to_path_buf())).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn flags_override_file_values() {
        let mut file = BTreeMap::new();
        file.insert("dt".to_string(), "0.5".to_string());
        let r = Resolver::new(file);
        assert_eq!(r.get(Some(0.25), "dt", 1e-3).unwrap(), 0.25);
        assert_eq!(r.get(None::<f64>, "dt", 1e-3).unwrap(), 0.5);
        assert_eq!(r.get(None::<f64>, "other", 1e-3).unwrap(), 1e-3);
    }

    #[test]
    fn metadata_round_trips_to_args() {
        let mut meta = Metadata::new("sample");
        meta.push("units", "natural");
        meta.push("dt", 0.01);
        meta.push("timestep-verdict", "good");
        let args = meta.to_args();
        assert_eq!(args, vec!["sample", "--units", "natural", "--dt", "0.01"]);
    }

    #[test]
    fn float_lists_reject_empty_and_garbage() {
        assert!(parse_float_list("", "t-list").is_err());
        assert!(parse_float_list("1,abc", "t-list").is_err());
        assert_eq!(parse_float_list("1, 2.5", "t-list").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_index_list("0,3", "n-list").unwrap(), vec![0, 3]);
    }

    #[test]
    fn params_resolution_defaults_to_natural_units() {
        let r = Resolver::new(BTreeMap::new());
        let mut meta = Metadata::new("scales");
        let params = resolve_params(&ParamArgs::default(), &r, &mut meta).unwrap();
        assert_eq!(params.unit_system(), UnitSystem::Natural);
        assert_eq!(params.temperature(), 1.0);
        assert_eq!(params.mass(), 1.0);
    }

    #[test]
    fn params_resolution_rejects_bad_units() {
        let r = Resolver::new(BTreeMap::new());
        let mut meta = Metadata::new("scales");
        let args = ParamArgs {
            units: Some("imperial".to_string()),
            ..Default::default()
        };
        let err = resolve_params(&args, &r, &mut meta).unwrap_err();
        assert!(err.to_string().contains("imperial"));
    }
}
