mod common;

use std::fs;

use prism_core::format::{
    encode_activations, read_activation_file, read_embedding_file, write_activation_file, write_embedding_file,
};
use prism_core::geometry::{BinaryMask, TriMesh};
use prism_core::manifest::{validate_manifest, Issue, Label, Manifest, Split, TripletRecord};
use prism_core::metrics::{mmd_median, MmdOptions};
use prism_core::{EmbeddingSet, Error, RelativePose, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn activation_file_round_trip_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..5 {
        let stack = common::random_stack(&mut rng, 3, 8, 16);
        let path = dir.path().join(format!("s{k}.prsa"));
        write_activation_file(&stack, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let back = read_activation_file(&path).unwrap();
        assert_eq!(back, stack);
        assert_eq!(encode_activations(&back).unwrap(), bytes);
    }
}

#[test]
fn large_embedding_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data: Vec<f32> = (0..100 * 2048).map(|_| rng.random_range(-10.0..10.0)).collect();
    let set = EmbeddingSet::new(2048, data, Role::Generated).unwrap();
    let path = dir.path().join("big.prsf");
    write_embedding_file(&set, &path).unwrap();
    assert_eq!(fs::metadata(&path).unwrap().len(), 16 + 100 * 2048 * 4);
    let back = read_embedding_file(&path).unwrap();
    assert!(back
        .data()
        .iter()
        .zip(set.data())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn single_row_set_writes_but_mmd_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let set = EmbeddingSet::from_rows(&[[0.6f32, 0.8]], Role::Generated).unwrap();
    let path = dir.path().join("one.prsf");
    write_embedding_file(&set, &path).unwrap();
    let back = read_embedding_file(&path).unwrap();
    let opts = MmdOptions {
        bandwidth: Some(1.0),
        ..MmdOptions::default()
    };
    assert!(mmd_median(&back, &back, &opts).is_err());
}

#[test]
fn missing_file_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nope.prsa");
    match read_activation_file(&path) {
        Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
        other => panic!("{other:?}"),
    }
}

fn record(target: &str, label: Label, path: &str) -> TripletRecord {
    TripletRecord {
        source_id: "obj/src".into(),
        target_id: target.into(),
        pose: RelativePose::new(90.0, 0.0, 0.0),
        label,
        weight: 1.0,
        activation_path: path.into(),
        anchor_id: None,
    }
}

fn write_prsf(dir: &std::path::Path, name: &str, d: usize) {
    let set = EmbeddingSet::new(d, vec![0.5; 2 * d], Role::Generated).unwrap();
    write_embedding_file(&set, dir.join(name)).unwrap();
}

#[test]
fn validation_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_prsf(dir.path(), "a.prsf", 2048);
    write_prsf(dir.path(), "b.prsf", 2048);
    write_prsf(dir.path(), "c.prsf", 1024);
    let clean = Manifest::new(
        vec![
            record("t1", Label::GroundTruth, "a.prsf"),
            record("t2", Label::GroundTruth, "b.prsf"),
        ],
        Split::Train,
        "d",
    )
    .unwrap();
    let report = validate_manifest(&clean, dir.path());
    assert!(report.is_clean(), "{report}");
    assert_eq!(report.weights[&Label::GroundTruth].count, 2);

    let missing = Manifest::new(
        vec![
            record("t1", Label::GroundTruth, "a.prsf"),
            record("t2", Label::GroundTruth, "gone.prsf"),
        ],
        Split::Train,
        "d",
    )
    .unwrap();
    let report = validate_manifest(&missing, dir.path());
    assert_eq!(report.issues.len(), 1);
    assert!(matches!(&report.issues[0], Issue::MissingFile { path, .. } if path.ends_with("gone.prsf")));

    let mixed = Manifest::new(
        vec![
            record("t1", Label::GroundTruth, "a.prsf"),
            record("t2", Label::GroundTruth, "c.prsf"),
        ],
        Split::Train,
        "d",
    )
    .unwrap();
    let report = validate_manifest(&mixed, dir.path());
    assert!(matches!(
        report.issues.as_slice(),
        [Issue::DimensionMismatch {
            expected: 2048,
            found: 1024,
            ..
        }]
    ));
}

#[test]
fn validation_flags_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    write_prsf(dir.path(), "a.prsf", 4);
    fs::write(dir.path().join("bad.prsf"), b"XXXX\x01\x00\x00\x00").unwrap();
    let m = Manifest::new(
        vec![
            record("t1", Label::GroundTruth, "a.prsf"),
            record("t2", Label::GroundTruth, "bad.prsf"),
        ],
        Split::Train,
        "d",
    )
    .unwrap();
    let report = validate_manifest(&m, dir.path());
    assert!(matches!(
        report.issues.as_slice(),
        [Issue::Unreadable { record: 1, .. }]
    ));
}

#[test]
fn manifest_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let task = common::synthetic_task(&mut rng, 5, 2, 4, "m");
    let path = dir.path().join("m.txt");
    task.manifest.save(&path).unwrap();
    assert_eq!(prism_core::load_manifest(&path).unwrap(), task.manifest);
}

#[test]
fn mask_and_mesh_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = BinaryMask::from_fn(37, 11, |x, y| (x + y) % 3 == 0);
    m.save_pbm(dir.path().join("m.pbm")).unwrap();
    assert_eq!(BinaryMask::load_pbm(dir.path().join("m.pbm")).unwrap(), m);

    let cube = TriMesh::cube(0.5);
    fs::write(dir.path().join("c.obj"), cube.to_obj()).unwrap();
    assert_eq!(TriMesh::load_obj(dir.path().join("c.obj")).unwrap(), cube);
}
