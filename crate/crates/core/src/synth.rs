//! Synthetic users with controllable taste geometry.
//!
//! Each user has `k_pos` like-anchors and `k_neg` dislike-anchors drawn
//! uniformly from a hypercube of half-width `anchor_scale`. A song is one
//! anchor plus isotropic Gaussian noise with the class's spread. Making the
//! dislike spread small and the anchor count low produces users whose
//! dislikes are tightly clustered while their likes are scattered.

use std::path::Path;

use crate::data::{FeatureTable, Preference, PreferenceSet};
use crate::numerics::SeededRng;
use crate::tsv;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_songs: usize,
    pub dim: usize,
    pub like_fraction: f64,
    pub k_pos: usize,
    pub k_neg: usize,
    pub sigma_pos: f64,
    pub sigma_neg: f64,
    pub anchor_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 24,
            n_songs: 200,
            dim: 64,
            like_fraction: 0.49,
            k_pos: 6,
            k_neg: 2,
            sigma_pos: 1.0,
            sigma_neg: 0.2,
            anchor_scale: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_users == 0 || self.n_songs == 0 || self.dim == 0 {
            return bad("synth.n_users, synth.n_songs and synth.dim must be >= 1".into());
        }
        if !(self.like_fraction > 0.0 && self.like_fraction < 1.0) {
            return bad(format!(
                "synth.like_fraction must lie in (0, 1), got {}",
                self.like_fraction
            ));
        }
        if self.k_pos == 0 || self.k_neg == 0 {
            return bad("synth.k_pos and synth.k_neg must be >= 1".into());
        }
        if !(self.sigma_pos >= 0.0 && self.sigma_neg >= 0.0) {
            return bad("synth sigmas must be >= 0".into());
        }
        if !(self.anchor_scale >= 0.0) || !self.anchor_scale.is_finite() {
            return bad(format!(
                "synth.anchor_scale must be finite and >= 0, got {}",
                self.anchor_scale
            ));
        }
        Ok(())
    }

    pub fn n_likes(&self) -> usize {
        (self.n_songs as f64 * self.like_fraction).round() as usize
    }

    /// The same generator with the two classes' spreads, anchor counts and
    /// proportions exchanged.
    pub fn labels_exchanged(&self) -> Self {
        Self {
            like_fraction: 1.0 - self.like_fraction,
            k_pos: self.k_neg,
            k_neg: self.k_pos,
            sigma_pos: self.sigma_neg,
            sigma_neg: self.sigma_pos,
            ..self.clone()
        }
    }

    /// `key = value` lines under the `synth.` prefix.
    pub fn to_meta(&self) -> String {
        format!(
            "synth.n_users = {}\nsynth.n_songs = {}\nsynth.dim = {}\nsynth.like_fraction = {}\n\
             synth.k_pos = {}\nsynth.k_neg = {}\nsynth.sigma_pos = {}\nsynth.sigma_neg = {}\n\
             synth.anchor_scale = {}\nsynth.seed = {}\n",
            self.n_users,
            self.n_songs,
            self.dim,
            self.like_fraction,
            self.k_pos,
            self.k_neg,
            self.sigma_pos,
            self.sigma_neg,
            self.anchor_scale,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUser {
    pub user_id: String,
    pub pos_anchors: Vec<Vec<f64>>,
    pub neg_anchors: Vec<Vec<f64>>,
    pub features: FeatureTable,
    pub prefs: PreferenceSet,
}

pub fn user_id(index: usize) -> String {
    format!("user_{index:02}")
}

/// Anchors and `count` noisy members of one taste class, drawn from `rng`.
/// Member `i` is generated from anchor `i mod k`.
pub fn generate_class(
    rng: &mut SeededRng,
    dim: usize,
    k: usize,
    sigma: f64,
    count: usize,
    anchor_scale: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let anchors: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            (0..dim)
                .map(|_| rng.uniform_range(-anchor_scale, anchor_scale))
                .collect()
        })
        .collect();
    let members = (0..count)
        .map(|i| {
            anchors[i % k]
                .iter()
                .map(|a| a + sigma * rng.normal())
                .collect()
        })
        .collect();
    (anchors, members)
}

/// Deterministic per `(cfg.seed, user_index)`.
///
/// Likes and dislikes come from separate sub-streams; song order is a
/// seeded shuffle so ids carry no label information.
pub fn generate_user(cfg: &SynthConfig, user_index: usize) -> Result<SynthUser> {
    cfg.validate()?;
    let user_rng = SeededRng::new(cfg.seed).split(user_index as u64);
    let n_likes = cfg.n_likes();
    let n_dislikes = cfg.n_songs - n_likes;
    let (pos_anchors, likes) = generate_class(
        &mut user_rng.split(0),
        cfg.dim,
        cfg.k_pos,
        cfg.sigma_pos,
        n_likes,
        cfg.anchor_scale,
    );
    let (neg_anchors, dislikes) = generate_class(
        &mut user_rng.split(1),
        cfg.dim,
        cfg.k_neg,
        cfg.sigma_neg,
        n_dislikes,
        cfg.anchor_scale,
    );

    let mut songs: Vec<(Preference, Vec<f64>)> = likes
        .into_iter()
        .map(|v| (Preference::Like, v))
        .chain(dislikes.into_iter().map(|v| (Preference::Dislike, v)))
        .collect();
    user_rng.split(2).shuffle(&mut songs);

    let uid = user_id(user_index);
    let mut features = FeatureTable::new(cfg.dim);
    let mut prefs = PreferenceSet::new(uid.clone());
    for (i, (pref, v)) in songs.into_iter().enumerate() {
        let id = format!("s{i:03}");
        features.insert(id.clone(), v)?;
        prefs.insert(id, pref)?;
    }
    Ok(SynthUser {
        user_id: uid,
        pos_anchors,
        neg_anchors,
        features,
        prefs,
    })
}

pub fn generate_cohort(cfg: &SynthConfig) -> Result<Vec<SynthUser>> {
    (0..cfg.n_users).map(|i| generate_user(cfg, i)).collect()
}

/// Writes `user_XX/features.tsv`, `user_XX/prefs.tsv` and `cohort.meta`.
pub fn write_cohort(cfg: &SynthConfig, users: &[SynthUser], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for u in users {
        let udir = dir.join(&u.user_id);
        u.features.save(udir.join("features.tsv"))?;
        u.prefs.save(udir.join("prefs.tsv"))?;
    }
    tsv::write(&dir.join("cohort.meta"), &cfg.to_meta())
}

/// Mean Euclidean distance over all unordered pairs of `vectors`.
pub fn mean_pairwise_distance(vectors: &[&[f64]]) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            sum += vectors[i]
                .iter()
                .zip(vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

impl SynthUser {
    /// Feature vectors of one class, in song order.
    pub fn class_features(&self, class: Preference) -> Vec<&[f64]> {
        self.prefs
            .iter()
            .filter(|(_, p)| *p == class)
            .map(|(id, _)| self.features.get(id).expect("generated together"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_users: 3,
            n_songs: 40,
            dim: 5,
            ..Default::default()
        }
    }

    #[test]
    fn label_counts_follow_fraction() {
        let u = generate_user(&SynthConfig::default(), 0).unwrap();
        assert_eq!(u.prefs.class_counts(), (98, 102));
        assert_eq!(u.features.len(), 200);
    }

    #[test]
    fn zero_spread_single_anchor_collapses_dislikes() {
        let cfg = SynthConfig {
            sigma_neg: 0.0,
            k_neg: 1,
            ..small()
        };
        let u = generate_user(&cfg, 1).unwrap();
        let d = u.class_features(Preference::Dislike);
        assert!(d.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn deterministic_and_user_specific() {
        let cfg = small();
        assert_eq!(
            generate_user(&cfg, 2).unwrap(),
            generate_user(&cfg, 2).unwrap()
        );
        let cohort = generate_cohort(&cfg).unwrap();
        assert_eq!(cohort.len(), 3);
        assert_ne!(cohort[0].pos_anchors, cohort[1].pos_anchors);
        assert_eq!(cohort, generate_cohort(&cfg).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SynthConfig {
            like_fraction: 1.0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            k_neg: 0,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            sigma_pos: -1.0,
            ..small()
        }
        .validate()
        .is_err());
    }
}
