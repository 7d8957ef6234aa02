//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! run.seed = 7
//! run.strategies = pn,p,n
//! synth.sigma_neg = 0.2
//! clep.margin = 7
//! predictor.epochs = 30
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::clep::ClepConfig;
use crate::data::Strategy;
use crate::predictor::PredictorConfig;
use crate::synth::SynthConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Existing cohort directory; when absent one is generated from `synth`.
    pub cohort: Option<PathBuf>,
    pub synth: SynthConfig,
    pub strategies: Vec<Strategy>,
    pub clep: ClepConfig,
    pub predictor: PredictorConfig,
    pub seed: u64,
    pub parallel: usize,
    /// Write encoder and head checkpoints for every job.
    pub checkpoints: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cohort: None,
            synth: SynthConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            clep: ClepConfig::default(),
            predictor: PredictorConfig::default(),
            seed: 0,
            parallel: 1,
            checkpoints: false,
        }
    }
}

pub fn parse_strategies(s: &str) -> Result<Vec<Strategy>> {
    let mut out: Vec<Strategy> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let st: Strategy = part.parse()?;
        if !out.contains(&st) {
            out.push(st);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("at least one strategy is required".into()));
    }
    Ok(out)
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("`{key}` has invalid value `{raw}`")))
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        match key {
            "run.seed" => self.seed = value(key, raw)?,
            "run.cohort" => self.cohort = Some(PathBuf::from(raw)),
            "run.strategies" => self.strategies = parse_strategies(raw)?,
            "run.parallel" => self.parallel = value(key, raw)?,
            "run.checkpoints" => self.checkpoints = value(key, raw)?,

            "synth.n_users" => self.synth.n_users = value(key, raw)?,
            "synth.n_songs" => self.synth.n_songs = value(key, raw)?,
            "synth.dim" => self.synth.dim = value(key, raw)?,
            "synth.like_fraction" => self.synth.like_fraction = value(key, raw)?,
            "synth.k_pos" => self.synth.k_pos = value(key, raw)?,
            "synth.k_neg" => self.synth.k_neg = value(key, raw)?,
            "synth.sigma_pos" => self.synth.sigma_pos = value(key, raw)?,
            "synth.sigma_neg" => self.synth.sigma_neg = value(key, raw)?,
            "synth.anchor_scale" => self.synth.anchor_scale = value(key, raw)?,
            "synth.seed" => self.synth.seed = value(key, raw)?,

            "clep.margin" => self.clep.margin = value(key, raw)?,
            "clep.epochs" => self.clep.epochs = value(key, raw)?,
            "clep.initial_lr" => self.clep.initial_lr = value(key, raw)?,
            "clep.batch_songs" => self.clep.batch_songs = value(key, raw)?,
            "clep.encoder_depth" => {
                self.clep.encoder_depth = if raw == "auto" {
                    None
                } else {
                    Some(value(key, raw)?)
                }
            }
            "clep.embedding_dim" => self.clep.embedding_dim = value(key, raw)?,
            "clep.validation_fraction" => self.clep.validation_fraction = value(key, raw)?,

            "predictor.epochs" => self.predictor.epochs = value(key, raw)?,
            "predictor.initial_lr" => self.predictor.initial_lr = value(key, raw)?,
            "predictor.depth" => self.predictor.depth = value(key, raw)?,
            "predictor.hidden_width" => self.predictor.hidden_width = value(key, raw)?,
            "predictor.threshold" => self.predictor.threshold = value(key, raw)?,
            "predictor.batch_songs" => self.predictor.batch_songs = value(key, raw)?,

            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.parallel == 0 {
            return Err(Error::Config("run.parallel must be >= 1".into()));
        }
        self.clep.validate()?;
        self.predictor.validate()?;
        if self.cohort.is_none() {
            self.synth.validate()?;
        }
        Ok(())
    }

    /// Every setting that influences results, as `key = value` lines.
    /// `run.parallel` is omitted because it never changes output.
    pub fn to_meta(&self) -> String {
        let c = &self.clep;
        let p = &self.predictor;
        let strategies: Vec<&str> = self.strategies.iter().map(|s| s.name()).collect();
        let mut out = format!(
            "run.seed = {}\nrun.strategies = {}\nrun.checkpoints = {}\n",
            self.seed,
            strategies.join(","),
            self.checkpoints
        );
        if self.cohort.is_none() {
            out.push_str(&self.synth.to_meta());
        }
        out.push_str(&format!(
            "clep.margin = {}\nclep.epochs = {}\nclep.initial_lr = {}\nclep.batch_songs = {}\n\
             clep.encoder_depth = {}\nclep.embedding_dim = {}\nclep.validation_fraction = {}\n",
            c.margin,
            c.epochs,
            c.initial_lr,
            c.batch_songs,
            c.encoder_depth
                .map_or_else(|| "auto".to_owned(), |d| d.to_string()),
            c.embedding_dim,
            c.validation_fraction
        ));
        out.push_str(&format!(
            "predictor.epochs = {}\npredictor.initial_lr = {}\npredictor.depth = {}\n\
             predictor.hidden_width = {}\npredictor.threshold = {}\npredictor.batch_songs = {}\n",
            p.epochs, p.initial_lr, p.depth, p.hidden_width, p.threshold, p.batch_songs
        ));
        out
    }
}
