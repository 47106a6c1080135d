//! Experiment configuration: CLI flags layered over an optional JSON file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::engine::{derive_constants, Preset};
use crate::error::{Error, Result};
use crate::geometry::{PureState, C64};

/// Half-open seed range `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got `{s}`"))?;
        let start = a.trim().parse::<u64>().map_err(|e| format!("bad range start `{a}`: {e}"))?;
        let end = b.trim().parse::<u64>().map_err(|e| format!("bad range end `{b}`: {e}"))?;
        if end <= start {
            return Err(format!("empty seed range `{s}`"));
        }
        Ok(SeedRange { start, end })
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl Serialize for SeedRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeedRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Parser, Debug, Default, Clone)]
#[command(name = "qudit-bandit", version, about = "Low-regret adaptive tomography of pure qudit states")]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Qudit dimension(s), comma separated or repeated.
    #[arg(long = "dimension", value_delimiter = ',', value_name = "D")]
    pub dimension: Vec<usize>,
    /// Total copy budget per run.
    #[arg(long, value_name = "T")]
    pub horizon: Option<u64>,
    /// Single seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Seed range, end exclusive.
    #[arg(long, value_name = "A..B")]
    pub seeds: Option<SeedRange>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Constant override, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Explicit hidden state, one `re im` amplitude per line.
    #[arg(long, value_name = "PATH")]
    pub state_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Copies between trace rows [default: ceil(T/1000)].
    #[arg(long, value_name = "N")]
    pub checkpoint_every: Option<u64>,
    /// Parallel runs [default: available cores].
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Skip per-run CSV traces.
    #[arg(long)]
    pub no_csv: bool,
    /// Skip the batch JSON summary.
    #[arg(long)]
    pub no_json: bool,
}

/// On-disk form. Every field is optional so a file may hold a partial config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_csv: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_json: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `top` over `self`: set fields in `top` win, overrides merge per key.
    pub fn overlay(mut self, top: ConfigFile) -> ConfigFile {
        if top.seed.is_some() || top.seeds.is_some() {
            self.seed = top.seed;
            self.seeds = top.seeds;
        }
        let overrides = match (self.overrides.take(), top.overrides) {
            (Some(mut base), Some(t)) => {
                base.extend(t);
                Some(base)
            }
            (a, b) => b.or(a),
        };
        ConfigFile {
            dimensions: top.dimensions.or(self.dimensions),
            horizon: top.horizon.or(self.horizon),
            seed: self.seed,
            seeds: self.seeds,
            preset: top.preset.or(self.preset),
            overrides,
            checkpoint_every: top.checkpoint_every.or(self.checkpoint_every),
            out: top.out.or(self.out),
            state_file: top.state_file.or(self.state_file),
            emit_csv: top.emit_csv.or(self.emit_csv),
            emit_json: top.emit_json.or(self.emit_json),
            workers: top.workers.or(self.workers),
        }
    }
}

/// Maps accepted spellings of an override key to its canonical name.
pub fn canonical_override_key(key: &str) -> Option<&'static str> {
    Some(match key {
        "N" | "n" | "n_blocks" => "n_blocks",
        "beta_stat" => "beta_stat",
        "beta_max" => "beta_max",
        "L_r" | "l_r" => "l_r",
        "beta_var" => "beta_var",
        "alpha" => "alpha",
        "mu_0" | "mu0" => "mu_0",
        "delta" => "delta",
        "delta_w" => "delta_w",
        "c_w" => "c_w",
        _ => return None,
    })
}

fn parse_override(raw: &str) -> Result<(String, f64)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{raw}`: expected KEY=VALUE")))?;
    let value = v
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Config(format!("override `{}`: bad value `{v}`: {e}", k.trim())))?;
    Ok((k.trim().to_string(), value))
}

impl TryFrom<&Cli> for ConfigFile {
    type Error = Error;

    fn try_from(cli: &Cli) -> Result<Self> {
        let overrides = if cli.overrides.is_empty() {
            None
        } else {
            Some(cli.overrides.iter().map(|o| parse_override(o)).collect::<Result<BTreeMap<_, _>>>()?)
        };
        Ok(ConfigFile {
            dimensions: (!cli.dimension.is_empty()).then(|| cli.dimension.clone()),
            horizon: cli.horizon,
            seed: cli.seed,
            seeds: cli.seeds,
            preset: cli.preset,
            overrides,
            checkpoint_every: cli.checkpoint_every,
            out: cli.out.clone(),
            state_file: cli.state_file.clone(),
            emit_csv: cli.no_csv.then_some(false),
            emit_json: cli.no_json.then_some(false),
            workers: cli.workers,
        })
    }
}

/// Seed selection of a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Seeds {
    Single(u64),
    Range(SeedRange),
}

impl Seeds {
    pub fn list(&self) -> Vec<u64> {
        match *self {
            Seeds::Single(s) => vec![s],
            Seeds::Range(r) => (r.start..r.end).collect(),
        }
    }
}

/// Validated batch configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dimensions: Vec<usize>,
    pub horizon: u64,
    pub seeds: Seeds,
    pub preset: Preset,
    pub overrides: BTreeMap<String, f64>,
    pub checkpoint_every: Option<u64>,
    pub out: PathBuf,
    pub state_file: Option<PathBuf>,
    pub emit_csv: bool,
    pub emit_json: bool,
    pub workers: usize,
}

impl From<&ExperimentConfig> for ConfigFile {
    fn from(c: &ExperimentConfig) -> Self {
        let (seed, seeds) = match c.seeds {
            Seeds::Single(s) => (Some(s), None),
            Seeds::Range(r) => (None, Some(r)),
        };
        ConfigFile {
            dimensions: Some(c.dimensions.clone()),
            horizon: Some(c.horizon),
            seed,
            seeds,
            preset: Some(c.preset),
            overrides: Some(c.overrides.clone()),
            checkpoint_every: c.checkpoint_every,
            out: Some(c.out.clone()),
            state_file: c.state_file.clone(),
            emit_csv: Some(c.emit_csv),
            emit_json: Some(c.emit_json),
            workers: Some(c.workers),
        }
    }
}

impl Serialize for ExperimentConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigFile::from(self).serialize(s)
    }
}

impl ExperimentConfig {
    /// Resolves and validates a (possibly merged) file config.
    ///
    /// Defaults: seed 0, practical preset, output directory `results`,
    /// both outputs on, one worker per available core.
    pub fn resolve(f: ConfigFile) -> Result<Self> {
        let dimensions = f.dimensions.ok_or_else(|| Error::config("missing required field `dimension`"))?;
        if dimensions.is_empty() {
            return Err(Error::config("`dimension`: at least one dimension is required"));
        }
        let horizon = f.horizon.ok_or_else(|| Error::config("missing required field `horizon`"))?;
        if horizon == 0 {
            return Err(Error::config("`horizon`: must be at least 1"));
        }
        let seeds = match (f.seed, f.seeds) {
            (Some(_), Some(_)) => return Err(Error::config("`seed` and `seeds` are mutually exclusive")),
            (Some(s), None) => Seeds::Single(s),
            (None, Some(r)) => Seeds::Range(r),
            (None, None) => Seeds::Single(0),
        };
        let mut overrides = BTreeMap::new();
        for (k, v) in f.overrides.unwrap_or_default() {
            let key = canonical_override_key(&k).ok_or_else(|| Error::Config(format!("override `{k}`: unknown key")))?;
            overrides.insert(key.to_string(), v);
        }
        if f.checkpoint_every == Some(0) {
            return Err(Error::config("`checkpoint_every`: must be at least 1"));
        }
        let workers = match f.workers {
            Some(0) => return Err(Error::config("`workers`: must be at least 1")),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let preset = f.preset.unwrap_or(Preset::Practical);
        let mut seen = Vec::new();
        for &d in &dimensions {
            if seen.contains(&d) {
                return Err(Error::Config(format!("`dimension`: {d} listed twice")));
            }
            seen.push(d);
            let consts = derive_constants(d, horizon, preset, &overrides).map_err(|e| match e {
                Error::DimensionTooSmall(d) => Error::Config(format!("`dimension`: {d} is below 2")),
                other => other,
            })?;
            let warm = consts.warmup_config().plan(d)?;
            if warm.total_samples > horizon {
                return Err(Error::Config(format!(
                    "`horizon`: {horizon} is below the warm-up cost of {} copies at d = {d}",
                    warm.total_samples
                )));
            }
        }
        let cfg = ExperimentConfig {
            dimensions,
            horizon,
            seeds,
            preset,
            overrides,
            checkpoint_every: f.checkpoint_every,
            out: f.out.unwrap_or_else(|| PathBuf::from("results")),
            state_file: f.state_file,
            emit_csv: f.emit_csv.unwrap_or(true),
            emit_json: f.emit_json.unwrap_or(true),
            workers,
        };
        if let Some(state) = cfg.load_state()? {
            if let Some(&d) = cfg.dimensions.iter().find(|&&d| d != state.dim()) {
                return Err(Error::Config(format!(
                    "`state_file`: state has dimension {} but dimension {d} was requested",
                    state.dim()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        Self::resolve(file.overlay(ConfigFile::try_from(cli)?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load_state(&self) -> Result<Option<PureState>> {
        self.state_file.as_deref().map(load_state_file).transpose()
    }
}

/// Parses argv (program name first) and an optional `--config` file.
pub fn parse_config<I, T>(argv: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    ExperimentConfig::from_cli(&cli)
}

/// Reads `re im` amplitude pairs, one per line. Blank lines and `#` comments
/// are skipped. The vector is normalized, with a warning if its norm was off
/// by more than `1e-6`.
pub fn load_state_file(path: &Path) -> Result<PureState> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("`state_file`: cannot read {}: {e}", path.display())))?;
    parse_state(&text)
}

pub fn parse_state(text: &str) -> Result<PureState> {
    let mut amps = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [re, im] = parts[..] else {
            return Err(Error::Config(format!("`state_file` line {}: expected `re im`", n + 1)));
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Config(format!("`state_file` line {}: bad number `{s}`", n + 1)))
        };
        amps.push(C64::new(parse(re)?, parse(im)?));
    }
    if amps.len() < 2 {
        return Err(Error::config("`state_file`: need at least two amplitudes"));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::config("`state_file`: zero vector"));
    }
    if (norm - 1.0).abs() > 1e-6 {
        log::warn!("state file vector has norm {norm}; normalizing");
    }
    PureState::normalized(amps)
}
