//! Summarizer settings from a key=value file and command-line flags.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use regsum::summarizer::{LoopMode, SummaryConfig};
use regsum::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LoopArg {
    Literal,
    Classic,
}

impl From<LoopArg> for LoopMode {
    fn from(l: LoopArg) -> Self {
        match l {
            LoopArg::Literal => LoopMode::Literal,
            LoopArg::Classic => LoopMode::Classic,
        }
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct SummaryArgs {
    /// File of key=value summarizer settings; flags override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Regularity parameter, in (0, 1)
    #[arg(long)]
    pub eps: Option<f64>,
    /// Minimum compression rate, in (0, 1)
    #[arg(long)]
    pub cmin: Option<f64>,
    /// Pair densities below this become zero weights
    #[arg(long)]
    pub dprime: Option<f64>,
    /// Number of classes in the starting partition
    #[arg(long = "initial-k")]
    pub initial_k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration policy of the summarizer
    #[arg(long = "loop", value_enum)]
    pub loop_mode: Option<LoopArg>,
    /// Fall back to the last checked partition when none qualifies
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fallback: Option<bool>,
}

impl SummaryArgs {
    /// `base`, then the config file, then explicit flags.
    pub fn resolve(&self, base: SummaryConfig) -> Result<SummaryConfig> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            let file = std::fs::File::open(path)?;
            apply_file(&mut cfg, std::io::BufReader::new(file), path)?;
        }
        if let Some(x) = self.eps {
            cfg.epsilon = x;
        }
        if let Some(x) = self.cmin {
            cfg.c_min = x;
        }
        if let Some(x) = self.dprime {
            cfg.d_prime = x;
        }
        if let Some(x) = self.initial_k {
            cfg.initial_k = x;
        }
        if let Some(x) = self.seed {
            cfg.seed = x;
        }
        if let Some(x) = self.loop_mode {
            cfg.loop_mode = x.into();
        }
        if let Some(x) = self.fallback {
            cfg.fallback = x;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn apply_file<R: BufRead>(cfg: &mut SummaryConfig, reader: R, path: &Path) -> Result<()> {
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got {t:?}")))?;
        apply_setting(cfg, key.trim(), value.trim()).map_err(parse_err)?;
    }
    Ok(())
}

fn apply_setting(
    cfg: &mut SummaryConfig,
    key: &str,
    value: &str,
) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("bad value {value:?} for {key}"))
    }
    match key {
        "eps" => cfg.epsilon = num(key, value)?,
        "cmin" => cfg.c_min = num(key, value)?,
        "dprime" => cfg.d_prime = num(key, value)?,
        "initial_k" => cfg.initial_k = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "fallback" => cfg.fallback = num(key, value)?,
        "density_threshold" => cfg.refine.density_threshold = num(key, value)?,
        "random_partner" => cfg.refine.random_partner = num(key, value)?,
        "loop" => {
            cfg.loop_mode = LoopArg::from_str(value, false)
                .map_err(|_| format!("loop must be literal or classic, got {value:?}"))?
                .into()
        }
        _ => return Err(format!("unknown setting {key:?}")),
    }
    Ok(())
}
