//! Run configuration: a flat TOML file, overridable field by field.
//!
//! ```toml
//! s = 3
//! x = [2, 2, 4]
//! eta1 = 1
//! eta2 = 1
//! t_bits = 40          # optional, derived from the strategy when absent
//! seed = 7
//! coeff_seed = 0
//! strategy = "default" # or "all-b"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignError, DesignParams};
use crate::mapper;
use crate::shuffle::{SenderPolicy, ShuffleOptions, Strategy, DEFAULT_COEFF_ATTEMPTS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Map(#[from] mapper::MapError),
}

/// Every setting optional; used both for files and for CLI overrides.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub s: Option<usize>,
    pub x: Option<Vec<usize>>,
    pub eta1: Option<usize>,
    pub eta2: Option<usize>,
    pub t_bits: Option<usize>,
    pub seed: Option<u64>,
    pub coeff_seed: Option<u64>,
    pub strategy: Option<Strategy>,
    pub sender_policy: Option<SenderPolicy>,
    pub coeff_attempts: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Fields set in `over` win.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        ConfigFile {
            s: over.s.or(self.s),
            x: over.x.or(self.x),
            eta1: over.eta1.or(self.eta1),
            eta2: over.eta2.or(self.eta2),
            t_bits: over.t_bits.or(self.t_bits),
            seed: over.seed.or(self.seed),
            coeff_seed: over.coeff_seed.or(self.coeff_seed),
            strategy: over.strategy.or(self.strategy),
            sender_policy: over.sender_policy.or(self.sender_policy),
            coeff_attempts: over.coeff_attempts.or(self.coeff_attempts),
        }
    }

    /// Validates and fills defaults (`eta1 = eta2 = 1`, seeds 0, default
    /// strategy, smallest valid `t_bits`).
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let x = self.x.ok_or(ConfigError::Missing("x"))?;
        let s = self.s.unwrap_or(x.len());
        let params = DesignParams::with_s(s, x, self.eta1.unwrap_or(1), self.eta2.unwrap_or(1))?;
        let shuffle = ShuffleOptions {
            strategy: self.strategy.unwrap_or_default(),
            coeff_seed: self.coeff_seed.unwrap_or(0),
            sender_policy: self.sender_policy.unwrap_or_default(),
            coeff_attempts: self.coeff_attempts.unwrap_or(DEFAULT_COEFF_ATTEMPTS),
        };
        let t_bits = match self.t_bits {
            Some(t) => {
                mapper::check_t_bits(t, params.s(), shuffle.strategy)?;
                t
            }
            None => mapper::auto_t_bits(params.s(), shuffle.strategy),
        };
        Ok(RunConfig {
            params,
            t_bits,
            seed: self.seed.unwrap_or(0),
            shuffle,
        })
    }
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub params: DesignParams,
    pub t_bits: usize,
    pub seed: u64,
    pub shuffle: ShuffleOptions,
}

impl RunConfig {
    pub fn new(params: DesignParams, strategy: Strategy) -> Self {
        Self {
            t_bits: mapper::auto_t_bits(params.s(), strategy),
            params,
            seed: 0,
            shuffle: ShuffleOptions::with_strategy(strategy),
        }
    }
}

/// Parses `"2,2,4"` (spaces allowed, optional brackets).
pub fn parse_int_list(text: &str) -> Result<Vec<usize>, String> {
    let trimmed = text.trim().trim_start_matches('[').trim_end_matches(']');
    if trimmed.trim().is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad integer '{}': {e}", p.trim()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_flags() {
        let file = ConfigFile::parse("s = 3\nx = [2, 2, 4]\nseed = 5\nstrategy = \"all-b\"\n").unwrap();
        let over = ConfigFile {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = file.merge(over).resolve().unwrap();
        assert_eq!(cfg.params.x(), &[2, 2, 4]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.shuffle.strategy, Strategy::AllB);
        assert_eq!(cfg.t_bits, 120);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            ConfigFile::default().resolve(),
            Err(ConfigError::Missing("x"))
        ));
        assert!(matches!(ConfigFile::parse("bogus = 1"), Err(ConfigError::Parse(_))));
        let bad = ConfigFile {
            x: Some(vec![2, 1]),
            ..Default::default()
        };
        let err = bad.resolve().unwrap_err();
        assert!(err.to_string().contains("at least 2 nodes"), "{err}");
        let bad_t = ConfigFile {
            x: Some(vec![2, 2, 2]),
            t_bits: Some(48),
            ..Default::default()
        };
        assert!(matches!(bad_t.resolve(), Err(ConfigError::Map(_))));
    }

    #[test]
    fn int_lists() {
        assert_eq!(parse_int_list("4,6").unwrap(), vec![4, 6]);
        assert_eq!(parse_int_list("[2, 2, 4]").unwrap(), vec![2, 2, 4]);
        assert_eq!(parse_int_list("").unwrap(), Vec::<usize>::new());
        assert!(parse_int_list("2,x").is_err());
    }
}
