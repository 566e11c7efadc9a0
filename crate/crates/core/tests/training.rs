mod common;

use prism_core::head::MlpHead;
use prism_core::train::{train_head, TrainConfig, TripletInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_cfg() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        hidden_dim: 32,
        out_dim: 16,
        ..TrainConfig::default()
    }
}

#[test]
fn gradients_match_finite_differences_on_a_wider_head() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let head = MlpHead::init(12, 24, 8, 3).unwrap();
    let rows: Vec<Vec<f64>> = (0..9)
        .map(|_| (0..12).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let batch: Vec<TripletInput<'_>> = rows
        .chunks(3)
        .map(|c| TripletInput {
            anchor: &c[0],
            positive: &c[1],
            negative: &c[2],
            weight: 0.7,
        })
        .collect();
    assert!(common::gradient_check(&head, &batch, 2.5, 1e-6, 1e-6) <= 1e-4);
}

#[test]
fn same_seed_gives_identical_head_bytes() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let task = common::synthetic_task(&mut rng, 30, 1, 16, "d");
    let a = train_head(&task.manifest, &task.features, None, &small_cfg()).unwrap();
    let b = train_head(&task.manifest, &task.features, None, &small_cfg()).unwrap();
    assert_eq!(a.head.encode().unwrap(), b.head.encode().unwrap());
    assert_eq!(a.log, b.log);
}

#[test]
fn zero_epochs_returns_initialisation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let task = common::synthetic_task(&mut rng, 12, 1, 8, "z");
    let cfg = TrainConfig {
        epochs: 0,
        ..small_cfg()
    };
    let out = train_head(&task.manifest, &task.features, None, &cfg).unwrap();
    assert_eq!(out.head, MlpHead::init(8, 32, 16, cfg.seed).unwrap());
    assert!(out.log.is_empty());
}

#[test]
fn explicit_validation_set_is_used() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let train = common::synthetic_task(&mut rng, 20, 1, 8, "t");
    let val = common::synthetic_task(&mut rng, 5, 1, 8, "v");
    let out = train_head(
        &train.manifest,
        &train.features,
        Some((&val.manifest, &val.features)),
        &small_cfg(),
    )
    .unwrap();
    assert!(out.log.epochs.iter().all(|e| e.val_loss.is_some()));
    assert!((1..=3).contains(&out.log.best_epoch));
}

#[test]
fn trained_embeddings_are_unit_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let task = common::synthetic_task(&mut rng, 10, 1, 8, "u");
    let cfg = TrainConfig {
        early_stop_patience: 0,
        ..small_cfg()
    };
    let out = train_head(&task.manifest, &task.features, None, &cfg).unwrap();
    assert!(out.head.embed_set(&task.features).unwrap().rows_are_unit());
}

#[test]
fn head_file_round_trip_preserves_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let head = MlpHead::init(6, 10, 4, 9).unwrap();
    let path = dir.path().join("h.prsh");
    head.save(&path).unwrap();
    let back = MlpHead::load(&path).unwrap();
    let x = [0.1, -0.4, 0.3, 0.9, -0.2, 0.05];
    // parameters are stored as f32, so outputs agree to single precision
    let (a, b) = (head.forward_f64(&x).unwrap(), back.forward_f64(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-5));
}
