//! Plain-text model checkpoints.
//!
//! ```text
//! clep-checkpoint<TAB>1
//! kind<TAB>clep
//! config.margin<TAB>7
//! encoder.layers<TAB>4
//! encoder.0.shape<TAB>64 64 relu
//! encoder.0.weight<TAB>1.25e-2 -3.5e-1 ...
//! ```
//!
//! One `key<TAB>value` entry per line, in a fixed order. Reals use Rust's
//! shortest round-trip formatting, so a save/load cycle is bit-exact.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::clep::EpochLog;
use crate::numerics::{Activation, Dense, Matrix, MlpNetwork};
use crate::tsv::{self, fmt_real};
use crate::{Error, Result};

const MAGIC: &str = "clep-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    entries: IndexMap<String, String>,
}

impl Checkpoint {
    pub fn new(kind: &str) -> Self {
        let mut entries = IndexMap::new();
        entries.insert("kind".to_owned(), kind.to_owned());
        Self { entries }
    }

    pub fn kind(&self) -> &str {
        self.entries.get("kind").map_or("", String::as_str)
    }

    pub(crate) fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind() != kind {
            return Err(Error::InvalidInput(format!(
                "expected a `{kind}` checkpoint, found `{}`",
                self.kind()
            )));
        }
        Ok(())
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn put_real(&mut self, key: impl Into<String>, value: f64) {
        self.entries.insert(key.into(), fmt_real(value));
    }

    pub fn put_reals(&mut self, key: impl Into<String>, values: &[f64]) {
        let joined = values
            .iter()
            .map(|v| fmt_real(*v))
            .collect::<Vec<_>>()
            .join(" ");
        self.entries.insert(key.into(), joined);
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidInput(format!("checkpoint is missing `{key}`")))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| {
            Error::InvalidInput(format!("checkpoint entry `{key}` has bad value `{raw}`"))
        })
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(' ')
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("checkpoint entry `{key}` has bad real `{t}`"))
                })
            })
            .collect()
    }

    pub fn put_network(&mut self, prefix: &str, net: &MlpNetwork) {
        self.put(format!("{prefix}.layers"), net.layers().len());
        for (k, l) in net.layers().iter().enumerate() {
            self.put(
                format!("{prefix}.{k}.shape"),
                format!("{} {} {}", l.in_dim(), l.out_dim(), l.activation),
            );
            self.put_reals(format!("{prefix}.{k}.weight"), l.weight.as_slice());
            self.put_reals(format!("{prefix}.{k}.bias"), &l.bias);
        }
    }

    pub fn network(&self, prefix: &str) -> Result<MlpNetwork> {
        let n: usize = self.parse(&format!("{prefix}.layers"))?;
        let mut layers = Vec::with_capacity(n);
        for k in 0..n {
            let key = format!("{prefix}.{k}.shape");
            let shape: Vec<&str> = self.get(&key)?.split(' ').collect();
            let [rows, cols, act] = shape[..] else {
                return Err(Error::InvalidInput(format!(
                    "checkpoint entry `{key}` is malformed"
                )));
            };
            let bad = || Error::InvalidInput(format!("checkpoint entry `{key}` is malformed"));
            let rows: usize = rows.parse().map_err(|_| bad())?;
            let cols: usize = cols.parse().map_err(|_| bad())?;
            let activation: Activation = act.parse()?;
            let weight =
                Matrix::from_vec(rows, cols, self.reals(&format!("{prefix}.{k}.weight"))?)?;
            let bias = self.reals(&format!("{prefix}.{k}.bias"))?;
            layers.push(Dense {
                weight,
                bias,
                activation,
            });
        }
        MlpNetwork::from_layers(layers)
    }

    pub(crate) fn put_log(&mut self, prefix: &str, log: &[EpochLog]) {
        self.put(format!("{prefix}.epochs"), log.len());
        for e in log {
            self.put(
                format!("{prefix}.{}", e.epoch),
                format!(
                    "{} {} {} {} {}",
                    fmt_real(e.train_loss),
                    e.validation_loss.map_or_else(|| "-".to_owned(), fmt_real),
                    fmt_real(e.lr),
                    e.positives,
                    e.examples
                ),
            );
        }
    }

    pub(crate) fn log(&self, prefix: &str) -> Result<Vec<EpochLog>> {
        let n: usize = self.parse(&format!("{prefix}.epochs"))?;
        (0..n)
            .map(|epoch| {
                let key = format!("{prefix}.{epoch}");
                let bad = || Error::InvalidInput(format!("checkpoint entry `{key}` is malformed"));
                let f: Vec<&str> = self.get(&key)?.split(' ').collect();
                if f.len() != 5 {
                    return Err(bad());
                }
                Ok(EpochLog {
                    epoch,
                    train_loss: f[0].parse().map_err(|_| bad())?,
                    validation_loss: if f[1] == "-" {
                        None
                    } else {
                        Some(f[1].parse().map_err(|_| bad())?)
                    },
                    lr: f[2].parse().map_err(|_| bad())?,
                    positives: f[3].parse().map_err(|_| bad())?,
                    examples: f[4].parse().map_err(|_| bad())?,
                })
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\t{VERSION}\n");
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('\t');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != format!("{MAGIC}\t{VERSION}") {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint header `{header}`"
            )));
        }
        let mut entries = IndexMap::new();
        for (i, line) in lines.enumerate() {
            let (k, v) = line.split_once('\t').ok_or_else(|| {
                Error::InvalidInput(format!("checkpoint line {} has no tab", i + 2))
            })?;
            entries.insert(k.to_owned(), v.to_owned());
        }
        let ck = Self { entries };
        ck.get("kind")?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        tsv::write(path.as_ref(), &self.to_text())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
