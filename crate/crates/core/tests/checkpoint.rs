use clep::checkpoint::Checkpoint;
use clep::clep::train_clep;
use clep::data::split_train_test;
use clep::predictor::train_predictor;
use clep::synth::generate_user;
use clep::{ClepConfig, ClepModel, PredictorConfig, PredictorModel, SynthConfig};

#[test]
fn trained_models_survive_a_file_round_trip_bit_exactly() {
    let synth = SynthConfig {
        n_songs: 40,
        dim: 6,
        seed: 3,
        ..SynthConfig::default()
    };
    let u = generate_user(&synth, 0).unwrap();
    let split = split_train_test(&u.prefs, 1).unwrap();
    let model = train_clep(
        &u.features,
        &u.prefs,
        &split,
        &ClepConfig {
            epochs: 2,
            embedding_dim: 4,
            ..ClepConfig::default()
        },
    )
    .unwrap();
    let head = train_predictor(
        &model,
        &u.features,
        &u.prefs,
        &split,
        &PredictorConfig {
            epochs: 2,
            ..PredictorConfig::default()
        },
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let (ep, hp) = (dir.path().join("enc.ckpt"), dir.path().join("head.ckpt"));
    model.to_checkpoint().save(&ep).unwrap();
    head.to_checkpoint().save(&hp).unwrap();
    assert_eq!(
        ClepModel::from_checkpoint(&Checkpoint::load(&ep).unwrap()).unwrap(),
        model
    );
    assert_eq!(
        PredictorModel::from_checkpoint(&Checkpoint::load(&hp).unwrap()).unwrap(),
        head
    );
    assert!(PredictorModel::from_checkpoint(&Checkpoint::load(&ep).unwrap()).is_err());
}
