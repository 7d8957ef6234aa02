//! Preference head: a sigmoid MLP trained with BCE on frozen embeddings.

use indexmap::IndexMap;

use crate::checkpoint::Checkpoint;
use crate::clep::{self, ClepModel, EpochLog};
use crate::data::{FeatureTable, Preference, PreferenceSet, SplitSpec};
use crate::numerics::{
    bce_loss, bce_loss_grad, mix_seed, Activation, AdamState, Gradients, Matrix, MlpNetwork,
    PlateauScheduler, SeededRng,
};
use crate::{Error, Result};

/// Bounds applied to reported probabilities so they stay strictly inside (0, 1).
const PROBA_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    /// Number of affine layers.
    pub depth: usize,
    /// Width of the first hidden layer; later hidden layers halve it.
    pub hidden_width: usize,
    pub threshold: f64,
    pub batch_songs: usize,
    pub seed: u64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            initial_lr: 0.001,
            depth: 3,
            hidden_width: 64,
            threshold: 0.5,
            batch_songs: 16,
            seed: 0,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return bad("predictor.epochs must be >= 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!(
                "predictor.threshold must lie in (0, 1), got {}",
                self.threshold
            ));
        }
        if self.depth == 0 || self.hidden_width == 0 {
            return bad("predictor.depth and predictor.hidden_width must be >= 1".into());
        }
        if self.batch_songs == 0 {
            return bad("predictor.batch_songs must be >= 1".into());
        }
        if !(self.initial_lr > 0.0) {
            return bad(format!(
                "predictor.initial_lr must be > 0, got {}",
                self.initial_lr
            ));
        }
        Ok(())
    }

    /// `embedding_dim → hidden → hidden/2 → … → 1`.
    pub fn head_widths(&self, embedding_dim: usize) -> Vec<usize> {
        let mut widths = vec![embedding_dim];
        let mut w = self.hidden_width;
        for _ in 1..self.depth {
            widths.push(w.max(1));
            w /= 2;
        }
        widths.push(1);
        widths
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub head: MlpNetwork,
    pub config: PredictorConfig,
    pub training_log: Vec<EpochLog>,
}

impl PredictorModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        let mut ck = Checkpoint::new("predictor");
        ck.put("config.epochs", c.epochs);
        ck.put_real("config.initial_lr", c.initial_lr);
        ck.put("config.depth", c.depth);
        ck.put("config.hidden_width", c.hidden_width);
        ck.put_real("config.threshold", c.threshold);
        ck.put("config.batch_songs", c.batch_songs);
        ck.put("config.seed", c.seed);
        ck.put_network("head", &self.head);
        ck.put_log("log", &self.training_log);
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("predictor")?;
        Ok(Self {
            config: PredictorConfig {
                epochs: ck.parse("config.epochs")?,
                initial_lr: ck.parse("config.initial_lr")?,
                depth: ck.parse("config.depth")?,
                hidden_width: ck.parse("config.hidden_width")?,
                threshold: ck.parse("config.threshold")?,
                batch_songs: ck.parse("config.batch_songs")?,
                seed: ck.parse("config.seed")?,
            },
            head: ck.network("head")?,
            training_log: ck.log("log")?,
        })
    }
}

/// Mean BCE of the head over `inputs` and its parameter gradients.
pub fn head_loss_and_grad(
    head: &MlpNetwork,
    inputs: &Matrix,
    labels: &[u8],
) -> Result<(f64, Gradients)> {
    if inputs.rows() != labels.len() || labels.is_empty() {
        return Err(Error::shape(
            "head batch labels",
            inputs.rows(),
            labels.len(),
        ));
    }
    let trace = head.forward_trace(inputs)?;
    let probs = trace.last().expect("non-empty trace");
    let n = labels.len() as f64;
    let mut out_grad = Matrix::zeros(labels.len(), 1);
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let p = probs.get(i, 0);
        loss += bce_loss(p, y);
        out_grad.set(i, 0, bce_loss_grad(p, y) / n);
    }
    let (grads, _) = head.backward_from_trace(&trace, &out_grad)?;
    Ok((loss / n, grads))
}

fn mean_bce(head: &MlpNetwork, inputs: &Matrix, labels: &[u8]) -> Result<f64> {
    let probs = head.forward(inputs)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| bce_loss(probs.get(i, 0), y))
        .sum::<f64>()
        / labels.len() as f64)
}

fn targets(ids: &[String], prefs: &PreferenceSet) -> Result<Vec<u8>> {
    ids.iter()
        .map(|id| Ok(prefs.label(id)?.as_target()))
        .collect()
}

/// Fresh Glorot-initialized head trained on the encoder's train-split
/// embeddings. The encoder is only read.
pub fn train_predictor(
    clep_model: &ClepModel,
    features: &FeatureTable,
    prefs: &PreferenceSet,
    split: &SplitSpec,
    cfg: &PredictorConfig,
) -> Result<PredictorModel> {
    cfg.validate()?;
    let widths = cfg.head_widths(clep_model.encoder.output_dim());
    let mut rng = SeededRng::new(cfg.seed).split(0);
    let head = MlpNetwork::glorot(&widths, Activation::Relu, Activation::Sigmoid, &mut rng)?;
    train_predictor_from(head, clep_model, features, prefs, split, cfg)
}

pub fn train_predictor_from(
    mut head: MlpNetwork,
    clep_model: &ClepModel,
    features: &FeatureTable,
    prefs: &PreferenceSet,
    split: &SplitSpec,
    cfg: &PredictorConfig,
) -> Result<PredictorModel> {
    cfg.validate()?;
    if head.input_dim() != clep_model.encoder.output_dim() || head.output_dim() != 1 {
        return Err(Error::shape(
            "predictor head",
            format!("{} -> 1", clep_model.encoder.output_dim()),
            format!("{} -> {}", head.input_dim(), head.output_dim()),
        ));
    }
    let (fit_ids, val_ids) = clep::carve_validation(&split.train_ids, prefs, &clep_model.config)?;
    let fit_x = clep_model.embed_matrix(&features.matrix_for(&fit_ids)?)?;
    let fit_y = targets(&fit_ids, prefs)?;
    let val_x = clep_model.embed_matrix(&features.matrix_for(&val_ids)?)?;
    let val_y = targets(&val_ids, prefs)?;

    let mut adam = AdamState::new(&head.param_lens(), cfg.initial_lr);
    let mut sched = PlateauScheduler::with_defaults(cfg.initial_lr);
    let order_rng = SeededRng::new(mix_seed(cfg.seed, 2));
    let likes = fit_y.iter().filter(|&&y| y == 1).count();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = adam.learning_rate;
        let mut order: Vec<usize> = (0..fit_ids.len()).collect();
        order_rng.split(epoch as u64).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_songs).enumerate() {
            let x = fit_x.select_rows(chunk);
            let y: Vec<u8> = chunk.iter().map(|&i| fit_y[i]).collect();
            let (loss, grads) = head_loss_and_grad(&head, &x, &y)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::NonFinite {
                    what: "bce loss",
                    epoch,
                    batch: b,
                });
            }
            adam.step(&mut head.param_slices_mut(), &grads.slices())?;
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / fit_ids.len() as f64;
        let validation_loss = if val_ids.is_empty() {
            None
        } else {
            Some(mean_bce(&head, &val_x, &val_y)?)
        };
        adam.learning_rate = sched.step(validation_loss.unwrap_or(train_loss));
        log.push(EpochLog {
            epoch,
            train_loss,
            validation_loss,
            lr,
            positives: likes,
            examples: fit_ids.len(),
        });
    }

    Ok(PredictorModel {
        head,
        config: cfg.clone(),
        training_log: log,
    })
}

/// Like-probabilities for `ids`, each strictly inside (0, 1).
pub fn predict_proba<S: AsRef<str>>(
    pred: &PredictorModel,
    clep_model: &ClepModel,
    features: &FeatureTable,
    ids: &[S],
) -> Result<IndexMap<String, f64>> {
    let emb = clep_model.embed_matrix(&features.matrix_for(ids)?)?;
    let probs = pred.head.forward(&emb)?;
    Ok(ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let p = probs.get(i, 0).clamp(PROBA_FLOOR, 1.0 - PROBA_FLOOR);
            (id.as_ref().to_owned(), p)
        })
        .collect())
}

/// LIKE iff `p > threshold`.
pub fn classify(
    probabilities: &IndexMap<String, f64>,
    threshold: f64,
) -> IndexMap<String, Preference> {
    probabilities
        .iter()
        .map(|(id, &p)| {
            let label = if p > threshold {
                Preference::Like
            } else {
                Preference::Dislike
            };
            (id.clone(), label)
        })
        .collect()
}

/// Prediction dump: `song_id<TAB>probability<TAB>label`.
pub fn predictions_tsv(
    probabilities: &IndexMap<String, f64>,
    labels: &IndexMap<String, Preference>,
) -> String {
    let mut out = String::from("song_id\tprobability\tlabel\n");
    for (id, p) in probabilities {
        let label = labels.get(id).map_or_else(String::new, |l| l.to_string());
        out.push_str(&format!("{id}\t{}\t{label}\n", crate::tsv::fmt_real(*p)));
    }
    out
}
