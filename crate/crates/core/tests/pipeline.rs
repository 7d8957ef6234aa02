use clep::clep::{embed_songs, geometry_report, train_clep, train_clep_from, Standardizer};
use clep::data::split_train_test;
use clep::numerics::{Activation, MlpNetwork, SeededRng};
use clep::predictor::{classify, predict_proba, train_predictor};
use clep::synth::{generate_user, SynthUser};
use clep::{
    ClepConfig, ClepModel, FeatureTable, PredictorConfig, Preference, PreferenceSet, SplitSpec,
    Strategy, SynthConfig,
};

fn small_user(seed: u64, sigma_pos: f64, sigma_neg: f64) -> SynthUser {
    let cfg = SynthConfig {
        n_songs: 64,
        dim: 8,
        sigma_pos,
        sigma_neg,
        anchor_scale: 3.0,
        seed,
        ..SynthConfig::default()
    };
    generate_user(&cfg, 0).unwrap()
}

fn clep_cfg(strategy: Strategy, epochs: usize) -> ClepConfig {
    ClepConfig {
        strategy,
        epochs,
        embedding_dim: 4,
        seed: 5,
        ..ClepConfig::default()
    }
}

#[test]
fn zero_encoder_stays_zero_and_finite() {
    let u = small_user(1, 1.0, 0.2);
    let split = split_train_test(&u.prefs, 1).unwrap();
    let zero = MlpNetwork::zeros(&[8, 6, 5, 4], Activation::Relu, Activation::Identity).unwrap();
    let model = train_clep_from(
        zero.clone(),
        &u.features,
        &u.prefs,
        &split,
        &clep_cfg(Strategy::PN, 2),
    )
    .unwrap();
    assert_eq!(model.encoder, zero);
    let ids: Vec<&str> = u.prefs.ids().collect();
    let emb = embed_songs(&model, &u.features, &ids).unwrap();
    assert!(emb.values().all(|e| e.iter().all(|v| *v == 0.0)));
    let g = geometry_report(&emb, &u.prefs).unwrap();
    assert_eq!(
        (g.mean_intra_like, g.mean_intra_dislike, g.mean_inter),
        (Some(0.0), Some(0.0), Some(0.0))
    );
}

#[test]
fn training_is_bit_reproducible() {
    let u = small_user(2, 1.0, 0.2);
    let split = split_train_test(&u.prefs, 2).unwrap();
    let cfg = clep_cfg(Strategy::N, 3);
    let a = train_clep(&u.features, &u.prefs, &split, &cfg).unwrap();
    let b = train_clep(&u.features, &u.prefs, &split, &cfg).unwrap();
    assert_eq!(a, b);
    let pcfg = PredictorConfig {
        epochs: 3,
        seed: 4,
        ..PredictorConfig::default()
    };
    let ha = train_predictor(&a, &u.features, &u.prefs, &split, &pcfg).unwrap();
    let hb = train_predictor(&a, &u.features, &u.prefs, &split, &pcfg).unwrap();
    assert_eq!(ha, hb);
}

#[test]
fn predictor_leaves_the_encoder_untouched() {
    let u = small_user(3, 1.0, 0.2);
    let split = split_train_test(&u.prefs, 3).unwrap();
    let model = train_clep(&u.features, &u.prefs, &split, &clep_cfg(Strategy::P, 2)).unwrap();
    let before = model.to_checkpoint().to_text();
    let pcfg = PredictorConfig {
        epochs: 4,
        ..PredictorConfig::default()
    };
    train_predictor(&model, &u.features, &u.prefs, &split, &pcfg).unwrap();
    assert_eq!(model.to_checkpoint().to_text(), before);
}

#[test]
fn separated_clusters_end_tighter_within_than_across() {
    let u = small_user(4, 0.3, 0.3);
    let split = split_train_test(&u.prefs, 4).unwrap();
    let model = train_clep(&u.features, &u.prefs, &split, &clep_cfg(Strategy::PN, 10)).unwrap();
    let ids: Vec<&str> = u.prefs.ids().collect();
    let g = geometry_report(&embed_songs(&model, &u.features, &ids).unwrap(), &u.prefs).unwrap();
    let inter = g.mean_inter.unwrap();
    assert!(
        g.mean_intra_like.unwrap() < inter && g.mean_intra_dislike.unwrap() < inter,
        "{g:?}"
    );
    let log = &model.training_log;
    assert!(log.last().unwrap().train_loss <= log[0].train_loss);
}

#[test]
fn strategy_decides_which_class_collapses() {
    let u = small_user(5, 1.0, 0.2);
    let split = split_train_test(&u.prefs, 5).unwrap();
    let ids: Vec<&str> = u.prefs.ids().collect();
    let geometry = |s| {
        let m = train_clep(&u.features, &u.prefs, &split, &clep_cfg(s, 10)).unwrap();
        geometry_report(&embed_songs(&m, &u.features, &ids).unwrap(), &u.prefs).unwrap()
    };
    let n = geometry(Strategy::N);
    assert!(
        n.mean_intra_dislike.unwrap() < n.mean_intra_like.unwrap(),
        "{n:?}"
    );
    let p = geometry(Strategy::P);
    assert!(
        p.mean_intra_like.unwrap() < p.mean_intra_dislike.unwrap(),
        "{p:?}"
    );
}

fn identity_encoder_model(dim: usize, rng: &mut SeededRng) -> ClepModel {
    ClepModel {
        encoder: MlpNetwork::glorot(&[dim, 4], Activation::Relu, Activation::Identity, rng)
            .unwrap(),
        standardizer: Standardizer::identity(dim),
        config: ClepConfig {
            embedding_dim: 4,
            ..ClepConfig::default()
        },
        training_log: Vec::new(),
    }
}

#[test]
fn all_like_training_set_pushes_probabilities_up() {
    let mut rng = SeededRng::new(6);
    let mut features = FeatureTable::new(3);
    let mut prefs = PreferenceSet::new("u");
    let ids: Vec<String> = (0..40).map(|i| format!("s{i:02}")).collect();
    for id in &ids {
        features
            .insert(id.clone(), (0..3).map(|_| rng.normal()).collect())
            .unwrap();
        prefs.insert(id.clone(), Preference::Like).unwrap();
    }
    let split = SplitSpec {
        train_ids: ids.clone(),
        test_ids: Vec::new(),
        seed: 0,
    };
    let model = identity_encoder_model(3, &mut rng);
    let head = train_predictor(
        &model,
        &features,
        &prefs,
        &split,
        &PredictorConfig::default(),
    )
    .unwrap();
    let probs = predict_proba(&head, &model, &features, &ids).unwrap();
    let mean = probs.values().sum::<f64>() / probs.len() as f64;
    assert!(mean > 0.5, "mean probability {mean}");
    assert!(probs.values().all(|p| *p > 0.0 && *p < 1.0));

    let strict = classify(&probs, 0.7);
    let loose = classify(&probs, 0.3);
    assert!(strict
        .iter()
        .all(|(id, l)| *l == Preference::Dislike || loose[id] == Preference::Like));
}
