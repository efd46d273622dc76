use std::path::{Path, PathBuf};

use constancy::harness::{
    compare, extract_outputs, load_manifest, read_records_csv, run_grid, write_battery,
    write_records_csv, BatteryOptions, BatteryScene, CompareOptions, Environment, Legend,
    ManifestError, PredictorSource, Scope,
};
use constancy::image::{write_image, BitDepth, ColorSpace, ImagePlane, LabelImage};
use constancy::psychophys::{CciRecord, Competitor};
use constancy::scenegen::{IlluminantSpec, MechanismSpec, SceneSpec};

fn small_battery(dir: &Path) -> PathBuf {
    let mut opts = BatteryOptions::standard(3);
    opts.scenes = vec![BatteryScene {
        id: "room".into(),
        environment: Environment::Indoor,
        scene: SceneSpec::standard(3),
    }];
    opts.illuminants = ["blue", "yellow"]
        .iter()
        .filter_map(|n| IlluminantSpec::named(n))
        .collect();
    opts.mechanisms = vec![
        MechanismSpec::Baseline,
        MechanismSpec::LocalSurround { color: None },
    ];
    opts.positions = vec![27];
    write_battery(dir, &opts).unwrap()
}

fn ground_truth(manifest: &Path) -> PredictorSource {
    PredictorSource::External {
        dir: manifest.parent().unwrap().join("gt"),
        space: ColorSpace::Linear,
    }
}

#[test]
fn battery_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_battery(dir.path());
    let m = load_manifest(&path).unwrap();
    assert_eq!(m.cells.len(), 4);
    assert_eq!(m.environments()["room"], Environment::Indoor);

    let perfect = run_grid(&m, &ground_truth(&path), Some(2));
    assert!(perfect.errors.is_empty(), "{:?}", perfect.errors);
    for r in &perfect.records {
        // 16-bit quantization of the stored images costs a little accuracy
        assert!((r.cci - 100.0).abs() < 0.5, "{} {}", r.key, r.cci);
    }
    let identity = run_grid(&m, &PredictorSource::Identity, Some(2));
    for r in &identity.records {
        assert!(r.cci.abs() < 0.5, "{} {}", r.key, r.cci);
        if r.key.condition == "baseline" {
            assert_eq!(r.delta_cci, Some(0.0));
        }
    }
}

#[test]
fn missing_mask_is_reported_at_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_battery(dir.path());
    let mask = dir.path().join("room/baseline/blue/S1_27_mask.png");
    std::fs::remove_file(&mask).unwrap();
    match load_manifest(&path) {
        Err(ManifestError::MissingFile { path, .. }) => assert!(path.ends_with("S1_27_mask.png")),
        other => panic!("expected MissingFile, got {other:?}"),
    }
}

#[test]
fn coincident_r_and_t_is_a_degenerate_axis() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_battery(dir.path());
    let mut json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let comps = &mut json["cells"][0]["competitors"];
    comps["T"] = comps["R"].clone();
    std::fs::write(&path, serde_json::to_vec_pretty(&json).unwrap()).unwrap();
    let err = load_manifest(&path).unwrap_err();
    assert!(err.to_string().contains("DegenerateAxis"), "{err}");
}

#[test]
fn unknown_manifest_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_battery(dir.path());
    let mut json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    json["colour_space"] = "srgb".into();
    std::fs::write(&path, serde_json::to_vec(&json).unwrap()).unwrap();
    assert!(matches!(
        load_manifest(&path),
        Err(ManifestError::Parse { .. })
    ));
}

#[test]
fn a_broken_cell_does_not_disturb_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_battery(dir.path());
    let m = load_manifest(&path).unwrap();
    let clean = run_grid(&m, &ground_truth(&path), Some(1));

    // a prediction of the wrong size in one cell only
    let odd = ImagePlane::filled(3, 3, ColorSpace::Linear, [0.5; 3]);
    write_image(
        &dir.path().join("gt/room/local-surround/yellow/T_27.png"),
        &odd,
        BitDepth::Sixteen,
    )
    .unwrap();
    let run = run_grid(&m, &ground_truth(&path), Some(3));
    assert!(run.is_partial());
    assert_eq!(run.errors.len(), 1);
    assert_eq!(run.errors[0].key.condition, "local-surround");
    assert!(run.errors[0].error.contains("DimensionMismatch"));
    for r in &run.records {
        let before = clean
            .record(&r.key.scene, &r.key.condition, &r.key.illuminant)
            .unwrap();
        assert_eq!(r.cci, before.cci);
    }
}

#[test]
fn extraction_commutes_with_affine_maps() {
    let (w, h) = (6, 5);
    let labels: Vec<u32> = (0..w * h).map(|i| (i % 6) as u32).collect();
    let mask = LabelImage::new(w, h, labels).unwrap();
    let px: Vec<[f64; 3]> = (0..w * h)
        .map(|i| [i as f64, 2.0 * i as f64 - 7.0, (i * i) as f64 / 10.0])
        .collect();
    let img = ImagePlane::new(w, h, ColorSpace::Lab, px.clone()).unwrap();
    let mapped = ImagePlane::new(
        w,
        h,
        ColorSpace::Lab,
        px.iter().map(|p| p.map(|v| 3.0 * v - 2.0)).collect(),
    )
    .unwrap();
    let legend = Legend::default();
    let a = extract_outputs(&[(img, mask.clone())], &legend).unwrap();
    let b = extract_outputs(&[(mapped, mask)], &legend).unwrap();
    for c in Competitor::ALL {
        let (x, n) = a.get(c).unwrap();
        let (y, _) = b.get(c).unwrap();
        assert_eq!(n, 5);
        let want = x.to_array().map(|v| 3.0 * v - 2.0);
        for (g, e) in y.to_array().iter().zip(want) {
            assert!((g - e).abs() < 1e-12);
        }
    }
    // label 0 is background: pixel 0 must not be part of R's mean
    let r = a.get(Competitor::R).unwrap().0.to_array();
    for (g, e) in r.iter().zip([13.0, 19.0, 24.1]) {
        assert!((g - e).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn records_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_battery(dir.path());
    let m = load_manifest(&path).unwrap();
    let run = run_grid(&m, &PredictorSource::Identity, None);
    let csv = dir.path().join("records.csv");
    write_records_csv(&csv, &run.records).unwrap();
    let back = read_records_csv(&csv).unwrap();
    assert_eq!(back.len(), run.records.len());
    for (a, b) in back.iter().zip(&run.records) {
        assert_eq!(a.subject, "identity");
        assert!((a.cci_percent - b.cci).abs() <= 5e-5);
    }
}

fn record(scene: &str, condition: &str, light: &str, subject: &str, cci: f64) -> CciRecord {
    CciRecord {
        scene: scene.into(),
        condition: condition.into(),
        illuminant: light.into(),
        subject: subject.into(),
        cci_percent: cci,
    }
}

#[test]
fn a_model_equal_to_identical_humans_agrees_perfectly() {
    let values = [
        ("in", "baseline", "blue", 95.0),
        ("in", "baseline", "red", 80.0),
        ("in", "cut", "blue", 60.0),
        ("in", "cut", "red", 71.0),
        ("out", "baseline", "blue", 88.0),
        ("out", "baseline", "red", 92.0),
        ("out", "cut", "blue", 40.0),
        ("out", "cut", "red", 35.5),
    ];
    let model: Vec<CciRecord> = values
        .iter()
        .map(|(s, c, l, v)| record(s, c, l, "net", *v))
        .collect();
    let humans: Vec<CciRecord> = ["a", "b", "c"]
        .iter()
        .flat_map(|h| {
            values
                .iter()
                .map(move |(s, c, l, v)| record(s, c, l, h, *v))
        })
        .collect();
    let opts = CompareOptions {
        environments: [
            ("in".to_string(), Environment::Indoor),
            ("out".to_string(), Environment::Outdoor),
        ]
        .into(),
        resamples: 200,
        ..CompareOptions::default()
    };
    let reports = compare(&model, &humans, &opts).unwrap();
    assert_eq!(reports.len(), 1);
    let all = reports[0]
        .scopes
        .iter()
        .find(|s| s.scope == Scope::All)
        .unwrap();
    let m = all.metrics.as_ref().unwrap();
    assert_eq!(m.ccc, Some(1.0));
    assert_eq!(m.ceiling, Some(1.0));
    assert_eq!(m.nccc, Some(1.0));
    assert_eq!(reports[0].scopes.len(), 6);
    let cut = reports[0]
        .condition_deltas
        .iter()
        .find(|d| d.condition == "cut")
        .unwrap();
    assert!((cut.model_mean.unwrap() - (-37.125)).abs() < 1e-12);
}

#[test]
fn compare_without_shared_cells_is_an_error() {
    let model = vec![record("x", "baseline", "blue", "net", 1.0)];
    let humans = vec![record("y", "baseline", "blue", "a", 1.0)];
    let err = compare(&model, &humans, &CompareOptions::default()).unwrap_err();
    assert!(err.to_string().contains("NoOverlap"));
}
