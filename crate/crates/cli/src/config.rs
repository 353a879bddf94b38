//! Experiment configuration: `aggsim <experiment> [--key value | key=value]...`,
//! optionally seeded from a flat `key=value` file given by `--config`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "aggsim", version, about = "Cooperative TRC data-aggregation experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    /// Monte Carlo statistics of the cooperative decision statistic.
    #[command(name = "mc-x")]
    McX(McXArgs),
    /// Time-reversal optimality against random competitor waveforms.
    Waveform(WaveformArgs),
    /// Aggregation tree and per-node traffic on the square grid.
    Route(RouteArgs),
    /// Per-node rate of the three-area protocol versus network size.
    Scaling(ScalingArgs),
    /// Baseline versus cooperative network lifetime.
    Lifetime(LifetimeArgs),
    /// Spatial-reuse TDMA schedule against its rate bound.
    Tdma(TdmaArgs),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::McX(_) => "mc-x",
            Experiment::Waveform(_) => "waveform",
            Experiment::Route(_) => "route",
            Experiment::Scaling(_) => "scaling",
            Experiment::Lifetime(_) => "lifetime",
            Experiment::Tdma(_) => "tdma",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Experiment::McX(a) => &a.output,
            Experiment::Waveform(a) => &a.output,
            Experiment::Route(a) => &a.output,
            Experiment::Scaling(a) => &a.output,
            Experiment::Lifetime(a) => &a.output,
            Experiment::Tdma(a) => &a.output,
        }
    }

    /// Output path, defaulting to `aggsim-<experiment>.csv`.
    pub fn out_path(&self) -> PathBuf {
        self.output()
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("aggsim-{}.csv", self.name())))
    }

    /// Every resolved parameter as sorted `(key, value)` pairs.
    pub fn echo(&self) -> Vec<(String, String)> {
        let value = serde_json::to_value(self).expect("configs serialize");
        let mut out = Vec::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                out.push((k, render(&v)));
            }
        }
        out
    }
}

fn render(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => "auto".to_string(),
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(items) => items.iter().map(render).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// CSV output path; sibling files share its stem.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Flat `key=value` file read before the command line.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ChannelArgs {
    /// Bandwidth B (Hz).
    #[arg(long, default_value_t = 64.0)]
    pub bandwidth: f64,
    /// Coherence parameter delta (Hz); the coherence bandwidth is delta/2.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Noise spectral density N0.
    #[arg(long, default_value_t = 1.0)]
    pub n0: f64,
    /// Per-node power cap.
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Interference exclusion radius.
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct McXArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub channel: ChannelArgs,
    /// Cluster sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    pub m: Vec<usize>,
    /// Cluster-to-sink distance.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Frequency samples per coherence interval delta/2.
    #[arg(long, default_value_t = 8)]
    pub bins_per_half: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct WaveformArgs {
    /// Random channel sets.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Random competitor waveforms per channel set.
    #[arg(long, default_value_t = 100)]
    pub competitors: usize,
    #[arg(long, default_value_t = 8)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 32)]
    pub max_taps: usize,
    /// Energy budget for the peak-power comparison.
    #[arg(long, default_value_t = 1.0)]
    pub e_max: f64,
    /// Localization budget for the received-energy comparison.
    #[arg(long, default_value_t = 1.0)]
    pub l_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RouteArgs {
    /// Node count; must be the square of an odd integer.
    #[arg(long, default_value_t = 10_201)]
    pub n: usize,
    /// Inner squared radius of the certification annulus.
    #[arg(long, default_value_t = 25)]
    pub rho_min_sq: u64,
    /// Outer squared radius; defaults to n/25.
    #[arg(long)]
    pub rho_max_sq: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Area I exponent: d = n^beta.
    #[arg(long, default_value_t = 0.35)]
    pub beta: f64,
    /// Cluster exponent: R = n^gamma.
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub n0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Inter-cluster interference factor at the sink.
    #[arg(long, default_value_t = 1.0)]
    pub k_prime: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScalingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// Sweep n over 10^n_min_exp ..= 10^n_max_exp.
    #[arg(long, default_value_t = 4)]
    pub n_min_exp: i32,
    #[arg(long, default_value_t = 12)]
    pub n_max_exp: i32,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LifetimeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// Initial energy per node (J).
    #[arg(long, default_value_t = 1.0)]
    pub e0: f64,
    /// Per-node rate lambda(n) = lambda_coeff * n^-lambda_exponent.
    #[arg(long, default_value_t = 1.0)]
    pub lambda_coeff: f64,
    #[arg(long, default_value_t = 1.5)]
    pub lambda_exponent: f64,
    /// Multihop load fraction; measured on a c2_side x c2_side grid when absent.
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub c2_side: usize,
    #[arg(long, default_value_t = 6)]
    pub n_min_exp: i32,
    #[arg(long, default_value_t = 12)]
    pub n_max_exp: i32,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TdmaArgs {
    /// Cell edge in nodes.
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Broadcast radii in cells, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2.5,3,4")]
    pub alpha: Vec<f64>,
    /// P/(B N0).
    #[arg(long, default_value_t = 100.0)]
    pub snr: f64,
    /// Board edge in cells for the exhaustive checks.
    #[arg(long, default_value_t = 32)]
    pub board: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(clap::Error),
    Io(PathBuf, std::io::Error),
}

/// `key=value` becomes `--key=value`; underscores in keys become hyphens.
fn normalize(token: &str) -> String {
    let key_value = |s: &str| match s.split_once('=') {
        Some((k, v)) => format!("--{}={v}", k.replace('_', "-")),
        None => format!("--{}", s.replace('_', "-")),
    };
    if let Some(rest) = token.strip_prefix("--") {
        key_value(rest)
    } else if !token.starts_with('-') && token.contains('=') {
        key_value(token)
    } else {
        token.to_string()
    }
}

/// Reads a flat `key=value` file. The echoed CSV header (minus its `# `
/// prefixes) is a valid config: `experiment=` must name the chosen
/// subcommand and `auto` leaves an optional setting unset.
fn config_file_tokens(path: &Path, subcommand: Option<&str>) -> Result<Vec<String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
    let mut tokens = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
            Some(("experiment", name)) => {
                if subcommand.is_some_and(|s| s != name) {
                    return Err(ConfigError::Parse(clap::Error::raw(
                        clap::error::ErrorKind::ValueValidation,
                        format!("config file {} is for experiment {name:?}\n", path.display()),
                    )));
                }
            }
            Some((_, "auto")) => {}
            _ => tokens.push(normalize(line)),
        }
    }
    Ok(tokens)
}

/// Position of a `--config` value among normalized tokens.
fn find_config(tokens: &[String]) -> Option<(usize, PathBuf)> {
    tokens.iter().enumerate().find_map(|(i, t)| {
        if let Some(p) = t.strip_prefix("--config=") {
            Some((i, PathBuf::from(p)))
        } else if t == "--config" {
            tokens.get(i + 1).map(|p| (i, PathBuf::from(p)))
        } else {
            None
        }
    })
}

pub fn parse<I, T>(args: I) -> Result<Cli, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let raw: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let mut tokens: Vec<String> = Vec::with_capacity(raw.len());
    tokens.extend(raw.first().cloned());
    tokens.extend(raw.iter().skip(1).map(|t| normalize(t)));
    // file settings go first so the command line overrides them
    if let Some((_, path)) = find_config(&tokens) {
        let file = config_file_tokens(&path, tokens.get(1).map(String::as_str))?;
        if tokens.len() >= 2 {
            tokens.splice(2..2, file);
        }
    }
    Cli::try_parse_from(tokens).map_err(ConfigError::Parse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_and_flag_forms_agree() {
        let a = parse(["aggsim", "mc-x", "m=16,64", "trials=200", "--seed", "7"]).unwrap();
        let b = parse(["aggsim", "mc-x", "--m", "16,64", "--trials=200", "seed=7"]).unwrap();
        assert_eq!(a.experiment.echo(), b.experiment.echo());
        let Experiment::McX(args) = a.experiment else { panic!() };
        assert_eq!(args.m, vec![16, 64]);
        assert_eq!(args.trials, 200);
        assert_eq!(args.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse(["aggsim", "route", "bogus=1"]),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(parse(["aggsim", "teleport"]), Err(ConfigError::Parse(_))));
        assert!(matches!(
            parse(["aggsim", "route", "n=abc"]),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn underscores_and_hyphens_are_interchangeable() {
        let a = parse(["aggsim", "route", "rho_min_sq=36"]).unwrap();
        let b = parse(["aggsim", "route", "--rho-min-sq", "36"]).unwrap();
        assert_eq!(a.experiment.echo(), b.experiment.echo());
    }

    #[test]
    fn config_file_is_overridden_by_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# sweep\nbeta=0.36\n\ngamma = 0.3\n".replace(" = ", "=")).unwrap();
        let cli = parse(["aggsim", "scaling", "--config", path.to_str().unwrap(), "beta=0.34"]).unwrap();
        let Experiment::Scaling(args) = cli.experiment else {
            panic!()
        };
        assert_eq!(args.protocol.beta, 0.34);
        assert_eq!(args.protocol.gamma, 0.3);
        let missing = parse(["aggsim", "scaling", "config=/nonexistent/file.cfg"]);
        assert!(matches!(missing, Err(ConfigError::Io(..))));
    }

    #[test]
    fn echo_lists_every_key() {
        let cli = parse(["aggsim", "tdma"]).unwrap();
        let echo = cli.experiment.echo();
        let keys: Vec<&str> = echo.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["alpha", "board", "experiment", "k", "l", "snr"]);
        assert!(echo.contains(&("k".to_string(), "0,1,2".to_string())));
        assert!(echo.contains(&("alpha".to_string(), "2.5,3.0,4.0".to_string())));
    }
}
