//! Siamese encoder trained with the margin contrastive loss.
//!
//! Both members of a pair go through the single [`MlpNetwork`] held by the
//! model. Within a batch group every song is encoded once, per-pair distance
//! gradients are accumulated onto the song embeddings, and one backward pass
//! sums the contributions of both branches into the shared weights.

use indexmap::IndexMap;

use crate::checkpoint::Checkpoint;
use crate::data::{
    self, FeatureTable, IndexedPair, PairBatch, Preference, PreferenceSet, SplitSpec, Strategy,
};
use crate::numerics::{
    contrastive_loss, contrastive_loss_grad, mix_seed, Activation, AdamState, Gradients, Matrix,
    MlpNetwork, PlateauScheduler, SeededRng,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClepConfig {
    pub strategy: Strategy,
    pub margin: f64,
    pub epochs: usize,
    pub initial_lr: f64,
    pub batch_songs: usize,
    /// Number of affine layers; `None` picks 4 for inputs up to 1024 dims and 5 above.
    pub encoder_depth: Option<usize>,
    pub embedding_dim: usize,
    /// Share of train songs held out to drive the plateau scheduler.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ClepConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::PN,
            margin: 7.0,
            epochs: 20,
            initial_lr: 0.01,
            batch_songs: 16,
            encoder_depth: None,
            embedding_dim: 64,
            validation_fraction: 0.15,
            seed: 0,
        }
    }
}

impl ClepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.margin > 0.0) {
            return bad(format!("clep.margin must be > 0, got {}", self.margin));
        }
        if self.epochs == 0 {
            return bad("clep.epochs must be >= 1".into());
        }
        if self.embedding_dim < 2 {
            return bad(format!(
                "clep.embedding_dim must be >= 2, got {}",
                self.embedding_dim
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad(format!(
                "clep.validation_fraction must lie in (0, 0.5), got {}",
                self.validation_fraction
            ));
        }
        if !(self.initial_lr > 0.0) {
            return bad(format!(
                "clep.initial_lr must be > 0, got {}",
                self.initial_lr
            ));
        }
        if self.batch_songs < 2 {
            return bad(format!(
                "clep.batch_songs must be >= 2, got {}",
                self.batch_songs
            ));
        }
        if self.encoder_depth == Some(0) {
            return bad("clep.encoder_depth must be >= 1".into());
        }
        Ok(())
    }

    pub fn depth_for(&self, input_dim: usize) -> usize {
        self.encoder_depth
            .unwrap_or(if input_dim <= 1024 { 4 } else { 5 })
    }
}

/// Layer widths tapering geometrically from `input_dim` to `embedding_dim`.
pub fn encoder_widths(input_dim: usize, depth: usize, embedding_dim: usize) -> Vec<usize> {
    let ratio = embedding_dim as f64 / input_dim as f64;
    let mut widths: Vec<usize> = (0..=depth)
        .map(|k| {
            ((input_dim as f64) * ratio.powf(k as f64 / depth as f64))
                .round()
                .max(1.0) as usize
        })
        .collect();
    widths[0] = input_dim;
    widths[depth] = embedding_dim;
    widths
}

/// Per-dimension standardization fitted on the train split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation, replaced by 1 for constant dimensions.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn fit(rows: &Matrix) -> Self {
        let (n, d) = rows.shape();
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(rows.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(rows.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n.max(1) as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, rows: &Matrix) -> Result<Matrix> {
        if rows.cols() != self.mean.len() {
            return Err(Error::shape(
                "standardizer input",
                self.mean.len(),
                rows.cols(),
            ));
        }
        let mut out = rows.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Pair-weighted mean loss over the epoch's batches.
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    /// Learning rate in effect during the epoch.
    pub lr: f64,
    /// Positive pairs for the encoder, liked songs for the head.
    pub positives: usize,
    /// Pairs for the encoder, songs for the head.
    pub examples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClepModel {
    pub encoder: MlpNetwork,
    pub standardizer: Standardizer,
    pub config: ClepConfig,
    pub training_log: Vec<EpochLog>,
}

impl ClepModel {
    /// Standardizes raw feature rows and runs the encoder.
    pub fn embed_matrix(&self, raw: &Matrix) -> Result<Matrix> {
        self.encoder.forward(&self.standardizer.apply(raw)?)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new("clep");
        write_clep_config(&mut ck, "config", &self.config);
        ck.put_reals("standardizer.mean", &self.standardizer.mean);
        ck.put_reals("standardizer.scale", &self.standardizer.scale);
        ck.put_network("encoder", &self.encoder);
        ck.put_log("log", &self.training_log);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("clep")?;
        Ok(Self {
            config: read_clep_config(ck, "config")?,
            standardizer: Standardizer {
                mean: ck.reals("standardizer.mean")?,
                scale: ck.reals("standardizer.scale")?,
            },
            encoder: ck.network("encoder")?,
            training_log: ck.log("log")?,
        })
    }
}

pub(crate) fn write_clep_config(ck: &mut Checkpoint, prefix: &str, c: &ClepConfig) {
    ck.put(format!("{prefix}.strategy"), c.strategy.name());
    ck.put_real(format!("{prefix}.margin"), c.margin);
    ck.put(format!("{prefix}.epochs"), c.epochs);
    ck.put_real(format!("{prefix}.initial_lr"), c.initial_lr);
    ck.put(format!("{prefix}.batch_songs"), c.batch_songs);
    ck.put(
        format!("{prefix}.encoder_depth"),
        c.encoder_depth
            .map_or_else(|| "auto".to_owned(), |d| d.to_string()),
    );
    ck.put(format!("{prefix}.embedding_dim"), c.embedding_dim);
    ck.put_real(
        format!("{prefix}.validation_fraction"),
        c.validation_fraction,
    );
    ck.put(format!("{prefix}.seed"), c.seed);
}

pub(crate) fn read_clep_config(ck: &Checkpoint, prefix: &str) -> Result<ClepConfig> {
    let depth = ck.get(&format!("{prefix}.encoder_depth"))?;
    Ok(ClepConfig {
        strategy: ck.get(&format!("{prefix}.strategy"))?.parse()?,
        margin: ck.parse(&format!("{prefix}.margin"))?,
        epochs: ck.parse(&format!("{prefix}.epochs"))?,
        initial_lr: ck.parse(&format!("{prefix}.initial_lr"))?,
        batch_songs: ck.parse(&format!("{prefix}.batch_songs"))?,
        encoder_depth: if depth == "auto" {
            None
        } else {
            Some(ck.parse(&format!("{prefix}.encoder_depth"))?)
        },
        embedding_dim: ck.parse(&format!("{prefix}.embedding_dim"))?,
        validation_fraction: ck.parse(&format!("{prefix}.validation_fraction"))?,
        seed: ck.parse(&format!("{prefix}.seed"))?,
    })
}

/// Euclidean distance.
pub fn pairwise_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::shape("pairwise_distance", u.len(), v.len()));
    }
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Mean contrastive loss over `pairs`, where pairs index rows of `embeddings`.
pub fn pairs_loss(embeddings: &Matrix, pairs: &[IndexedPair], margin: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs to evaluate".into()));
    }
    let mut total = 0.0;
    for p in pairs {
        let d = pairwise_distance(embeddings.row(p.a), embeddings.row(p.b))?;
        total += contrastive_loss(p.y, d, margin)?;
    }
    Ok(total / pairs.len() as f64)
}

/// Mean contrastive loss over a batch and its gradient with respect to every
/// encoder parameter. `inputs` holds one (already standardized) row per song.
pub fn pair_loss_and_grad(
    encoder: &MlpNetwork,
    inputs: &Matrix,
    pairs: &[IndexedPair],
    margin: f64,
) -> Result<(f64, Gradients)> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no pairs in batch".into()));
    }
    let trace = encoder.forward_trace(inputs)?;
    let emb = trace.last().expect("non-empty trace");
    let scale = 1.0 / pairs.len() as f64;
    let mut emb_grad = Matrix::zeros(emb.rows(), emb.cols());
    let mut total = 0.0;
    for p in pairs {
        let (u, v) = (emb.row(p.a), emb.row(p.b));
        let d = pairwise_distance(u, v)?;
        total += contrastive_loss(p.y, d, margin)?;
        // dD/du is undefined at D = 0; the zero subgradient is used there.
        if d == 0.0 {
            continue;
        }
        let g = contrastive_loss_grad(p.y, d, margin)? * scale / d;
        if g == 0.0 {
            continue;
        }
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        for (x, dx) in emb_grad.row_mut(p.a).iter_mut().zip(&diff) {
            *x += g * dx;
        }
        for (x, dx) in emb_grad.row_mut(p.b).iter_mut().zip(&diff) {
            *x -= g * dx;
        }
    }
    let (grads, _) = encoder.backward_from_trace(&trace, &emb_grad)?;
    Ok((total * scale, grads))
}

/// All within-group pairs of `ids`, labeled by `strategy`.
fn all_pairs(ids: &[String], prefs: &PreferenceSet, strategy: Strategy) -> Result<PairBatch> {
    PairBatch::from_group(ids.to_vec(), prefs, strategy)
}

/// Stratified validation carve-out shared by encoder and head training.
pub fn carve_validation(
    train_ids: &[String],
    prefs: &PreferenceSet,
    cfg: &ClepConfig,
) -> Result<(Vec<String>, Vec<String>)> {
    let (val, fit) = data::stratified_partition(
        train_ids,
        prefs,
        cfg.validation_fraction,
        mix_seed(cfg.seed, 1),
    )?;
    if fit.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "only {} train songs left after the validation carve-out",
            fit.len()
        )));
    }
    Ok((fit, val))
}

fn check_split(features: &FeatureTable, prefs: &PreferenceSet, split: &SplitSpec) -> Result<()> {
    for id in split.train_ids.iter().chain(&split.test_ids) {
        if !features.contains(id) || prefs.get(id).is_none() {
            return Err(Error::UnknownSong(id.clone()));
        }
    }
    Ok(())
}

/// Trains a freshly initialized encoder (Glorot weights seeded by `cfg.seed`).
pub fn train_clep(
    features: &FeatureTable,
    prefs: &PreferenceSet,
    split: &SplitSpec,
    cfg: &ClepConfig,
) -> Result<ClepModel> {
    cfg.validate()?;
    let depth = cfg.depth_for(features.dim());
    let widths = encoder_widths(features.dim(), depth, cfg.embedding_dim);
    let mut rng = SeededRng::new(cfg.seed).split(0);
    let encoder = MlpNetwork::glorot(&widths, Activation::Relu, Activation::Identity, &mut rng)?;
    train_clep_from(encoder, features, prefs, split, cfg)
}

/// Trains the given encoder in place of a fresh one.
pub fn train_clep_from(
    mut encoder: MlpNetwork,
    features: &FeatureTable,
    prefs: &PreferenceSet,
    split: &SplitSpec,
    cfg: &ClepConfig,
) -> Result<ClepModel> {
    cfg.validate()?;
    check_split(features, prefs, split)?;
    if encoder.input_dim() != features.dim() {
        return Err(Error::shape(
            "encoder input",
            features.dim(),
            encoder.input_dim(),
        ));
    }

    let standardizer = Standardizer::fit(&features.matrix_for(&split.train_ids)?);
    let (fit_ids, val_ids) = carve_validation(&split.train_ids, prefs, cfg)?;
    let row_of: std::collections::HashMap<&str, usize> = fit_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let fit_inputs = standardizer.apply(&features.matrix_for(&fit_ids)?)?;
    let val_inputs = standardizer.apply(&features.matrix_for(&val_ids)?)?;
    let val_pairs = all_pairs(&val_ids, prefs, cfg.strategy)?;

    let mut adam = AdamState::new(&encoder.param_lens(), cfg.initial_lr);
    let mut sched = PlateauScheduler::with_defaults(cfg.initial_lr);
    let batch_seed = mix_seed(cfg.seed, 2);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = adam.learning_rate;
        let batches = data::make_pair_batches(
            &fit_ids,
            prefs,
            cfg.strategy,
            cfg.batch_songs,
            batch_seed,
            epoch,
        )?;
        let (mut loss_sum, mut n_pairs, mut n_pos) = (0.0, 0usize, 0usize);
        for (b, batch) in batches.iter().enumerate() {
            let idx: Vec<usize> = batch.songs.iter().map(|s| row_of[s.as_str()]).collect();
            let inputs = fit_inputs.select_rows(&idx);
            let (loss, grads) = pair_loss_and_grad(&encoder, &inputs, &batch.pairs, cfg.margin)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFinite {
                    what: "contrastive loss",
                    epoch,
                    batch: b,
                });
            }
            adam.step(&mut encoder.param_slices_mut(), &grads.slices())?;
            if !encoder.is_finite() {
                return Err(Error::NonFinite {
                    what: "encoder weight",
                    epoch,
                    batch: b,
                });
            }
            loss_sum += loss * batch.pairs.len() as f64;
            n_pairs += batch.pairs.len();
            n_pos += batch.positives();
        }
        let train_loss = loss_sum / n_pairs as f64;
        let validation_loss = if val_pairs.pairs.is_empty() {
            None
        } else {
            Some(pairs_loss(
                &encoder.forward(&val_inputs)?,
                &val_pairs.pairs,
                cfg.margin,
            )?)
        };
        adam.learning_rate = sched.step(validation_loss.unwrap_or(train_loss));
        log.push(EpochLog {
            epoch,
            train_loss,
            validation_loss,
            lr,
            positives: n_pos,
            examples: n_pairs,
        });
        log::debug!(
            "clep {} epoch {epoch}: train {train_loss:.4} val {validation_loss:?} lr {lr}",
            cfg.strategy
        );
    }

    Ok(ClepModel {
        encoder,
        standardizer,
        config: cfg.clone(),
        training_log: log,
    })
}

/// Embeddings for `ids`, in the order given.
pub fn embed_songs<S: AsRef<str>>(
    model: &ClepModel,
    features: &FeatureTable,
    ids: &[S],
) -> Result<IndexMap<String, Vec<f64>>> {
    let emb = model.embed_matrix(&features.matrix_for(ids)?)?;
    Ok(ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_ref().to_owned(), emb.row(i).to_vec()))
        .collect())
}

/// Mean pairwise embedding distances by pair class. Means over fewer than
/// one pair are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub mean_intra_like: Option<f64>,
    pub mean_intra_dislike: Option<f64>,
    pub mean_inter: Option<f64>,
    pub like_pairs: usize,
    pub dislike_pairs: usize,
    pub inter_pairs: usize,
}

pub fn geometry_report(
    embeddings: &IndexMap<String, Vec<f64>>,
    prefs: &PreferenceSet,
) -> Result<GeometryReport> {
    let items: Vec<(&[f64], Preference)> = embeddings
        .iter()
        .map(|(id, e)| Ok((e.as_slice(), prefs.label(id)?)))
        .collect::<Result<_>>()?;
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let d = pairwise_distance(items[i].0, items[j].0)?;
            let k = match (items[i].1, items[j].1) {
                (Preference::Like, Preference::Like) => 0,
                (Preference::Dislike, Preference::Dislike) => 1,
                _ => 2,
            };
            sums[k] += d;
            counts[k] += 1;
        }
    }
    let mean = |k: usize| (counts[k] > 0).then(|| sums[k] / counts[k] as f64);
    Ok(GeometryReport {
        mean_intra_like: mean(0),
        mean_intra_dislike: mean(1),
        mean_inter: mean(2),
        like_pairs: counts[0],
        dislike_pairs: counts[1],
        inter_pairs: counts[2],
    })
}
