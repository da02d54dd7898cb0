use std::fmt::Write as _;
use std::str::FromStr;

use crate::data::{LangTag, Mode};
use crate::model::ModelDims;

use super::ConfigError;

/// Hyperparameters of one training run (and of its replicates).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Auxiliary set size as a multiple of the labeled set; ignored by s2s and xling.
    pub m: usize,
    pub seed: u64,
    pub max_epochs: usize,
    pub eval_every: usize,
    pub batch_size: usize,
    pub replicates: usize,
    pub dims: ModelDims,
    pub rho: f64,
    pub eps: f64,
    /// End a run as soon as the dev set is decoded perfectly.
    pub stop_on_perfect_dev: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::S2s,
            m: 1,
            seed: 1,
            max_epochs: 200,
            eval_every: 5,
            batch_size: 20,
            replicates: 5,
            dims: ModelDims::default(),
            rho: 0.95,
            eps: 1e-6,
            stop_on_perfect_dev: false,
        }
    }
}

pub(crate) const DECODE_RULE: &str = "2*chars+5";

/// Auxiliary multiple tuned per language and mode; `lang = None` picks the
/// value most languages share.
pub fn default_m(mode: Mode, lang: Option<LangTag>) -> usize {
    use LangTag::*;
    match mode {
        Mode::S2s | Mode::Xling => 1,
        Mode::MttU => match lang {
            Some(Yn) => 1,
            _ => 4,
        },
        Mode::MttR => match lang {
            Some(Wx) => 4,
            _ => 8,
        },
        Mode::DaU => match lang {
            Some(Na) => 2,
            _ => 1,
        },
        Mode::DaR => match lang {
            Some(Na) => 8,
            _ => 4,
        },
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl TrainConfig {
    pub const KEYS: [&'static str; 14] = [
        "mode",
        "m",
        "seed",
        "max_epochs",
        "eval_every",
        "batch_size",
        "replicates",
        "embed",
        "hidden",
        "attention",
        "rho",
        "eps",
        "stop_on_perfect_dev",
        "max_decode",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "mode" => {
                self.mode = value.trim().parse().map_err(|_| ConfigError::Value {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            "m" => self.m = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "replicates" => self.replicates = parse(key, value)?,
            "embed" => self.dims.embed = parse(key, value)?,
            "hidden" => self.dims.hidden = parse(key, value)?,
            "attention" => self.dims.attention = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "stop_on_perfect_dev" => self.stop_on_perfect_dev = parse(key, value)?,
            "max_decode" if value.trim() == DECODE_RULE => {}
            "max_decode" => {
                return Err(ConfigError::Value {
                    key: key.into(),
                    value: value.into(),
                })
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = TrainConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("mode", self.mode.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
            ("max_epochs", self.max_epochs.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("replicates", self.replicates.to_string()),
            ("embed", self.dims.embed.to_string()),
            ("hidden", self.dims.hidden.to_string()),
            ("attention", self.dims.attention.to_string()),
            ("rho", self.rho.to_string()),
            ("eps", self.eps.to_string()),
            ("stop_on_perfect_dev", self.stop_on_perfect_dev.to_string()),
            ("max_decode", DECODE_RULE.to_string()),
        ]
    }

    /// All fields as `key=value` lines, readable by [`TrainConfig::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.eval_every == 0 || self.max_epochs == 0 {
            return bad("max_epochs and eval_every must be at least 1");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.mode.is_augmented() && self.m == 0 {
            return bad("m must be at least 1");
        }
        if self.dims.embed == 0 || self.dims.hidden == 0 || self.dims.attention == 0 {
            return bad("model dimensions must be positive");
        }
        if !(0.0..1.0).contains(&self.rho) || self.rho == 0.0 || self.eps.is_nan() || self.eps <= 0.0 {
            return bad("rho must lie in (0, 1) and eps must be positive");
        }
        Ok(())
    }
}
