use std::path::Path;
use std::process::{Command, Output};

use constancy::image::{read_image, write_image, BitDepth, ColorSpace, ImagePlane};
use constancy::scenegen::IlluminantSpec;

fn constancy(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_constancy"))
        .args(args)
        .current_dir(dir)
        .env_remove("CONSTANCY_WHITE_POINT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn checker(w: usize, h: usize, a: [f64; 3], b: [f64; 3]) -> ImagePlane {
    let px = (0..w * h)
        .map(|i| if (i % w + i / w).is_multiple_of(2) { a } else { b })
        .collect();
    ImagePlane::new(w, h, ColorSpace::Linear, px).unwrap()
}

#[test]
fn estimate_gray_world_on_a_tinted_image() {
    let dir = tempfile::tempdir().unwrap();
    // mean (0.6, 0.3, 0.3) → direction (2, 1, 1)/√6
    write_image(
        &dir.path().join("in.png"),
        &checker(8, 8, [0.8, 0.4, 0.2], [0.4, 0.2, 0.4]),
        BitDepth::Sixteen,
    )
    .unwrap();
    let o = constancy(
        &[
            "estimate",
            "in.png",
            "--space",
            "linear",
            "--method",
            "gray-world",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Vec<f64> = stdout(&o)
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    let s6 = 6f64.sqrt();
    for (got, want) in v.iter().zip([2.0 / s6, 1.0 / s6, 1.0 / s6]) {
        assert!((got - want).abs() < 1e-4, "{v:?}");
    }

    let o = constancy(
        &[
            "estimate",
            "in.png",
            "--space",
            "linear",
            "--method",
            "shades-of-gray",
            "-p",
            "inf",
            "--format",
            "json",
        ],
        dir.path(),
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let d: Vec<f64> = json["direction"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    // per-channel maxima (0.8, 0.4, 0.4)
    assert!(
        (d[0] / d[1] - 2.0).abs() < 1e-3 && (d[1] - d[2]).abs() < 1e-4,
        "{d:?}"
    );
}

#[test]
fn estimate_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = constancy(&["estimate", "missing.png"], dir.path());
    assert_eq!(code(&o), 2);

    write_image(
        &dir.path().join("flat.png"),
        &ImagePlane::filled(6, 6, ColorSpace::Linear, [0.5; 3]),
        BitDepth::Eight,
    )
    .unwrap();
    let o = constancy(
        &["estimate", "flat.png", "--method", "gray-edge"],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "flat image has no edges");

    write_image(
        &dir.path().join("black.png"),
        &ImagePlane::filled(4, 4, ColorSpace::Linear, [0.0; 3]),
        BitDepth::Eight,
    )
    .unwrap();
    assert_eq!(code(&constancy(&["estimate", "black.png"], dir.path())), 3);
    assert_eq!(
        code(&constancy(
            &[
                "estimate",
                "flat.png",
                "--order",
                "3",
                "--method",
                "gray-edge"
            ],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&constancy(
            &["estimate", "flat.png", "--method", "retinex"],
            dir.path()
        )),
        2
    );
}

#[test]
fn neutral_correction_is_identity_and_keeps_bit_depth() {
    let dir = tempfile::tempdir().unwrap();
    let img = checker(5, 4, [0.1, 0.5, 0.9], [0.7, 0.3, 0.2]);
    write_image(&dir.path().join("in.png"), &img, BitDepth::Sixteen).unwrap();
    let o = constancy(
        &[
            "correct",
            "in.png",
            "-o",
            "out.png",
            "--illuminant",
            "1,1,1",
            "--space",
            "linear",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (a, da) = read_image(&dir.path().join("in.png"), ColorSpace::Linear).unwrap();
    let (b, db) = read_image(&dir.path().join("out.png"), ColorSpace::Linear).unwrap();
    assert_eq!(da, BitDepth::Sixteen);
    assert_eq!(db, BitDepth::Sixteen);
    assert_eq!(a, b);
}

#[test]
fn oracle_correction_of_a_synthetic_scene_recovers_reflectance() {
    let dir = tempfile::tempdir().unwrap();
    let o = constancy(
        &[
            "synth",
            "--illuminant",
            "yellow",
            "--seed",
            "4",
            "--out",
            "scene",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "image.png",
        "reflectance.png",
        "target_mask.png",
        "scene.json",
        "illuminant.json",
        "mechanism.json",
    ] {
        assert!(dir.path().join("scene").join(f).exists(), "{f}");
    }
    let light: IlluminantSpec =
        serde_json::from_slice(&std::fs::read(dir.path().join("scene/illuminant.json")).unwrap())
            .unwrap();
    assert_eq!(light, IlluminantSpec::named("yellow").unwrap());

    let o = constancy(
        &[
            "correct",
            "scene/image.png",
            "-o",
            "fixed.png",
            "--method",
            "oracle",
            "--truth",
            "scene/illuminant.json",
            "--space",
            "linear",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (fixed, _) = read_image(&dir.path().join("fixed.png"), ColorSpace::Linear).unwrap();
    let (truth, _) = read_image(
        &dir.path().join("scene/reflectance.png"),
        ColorSpace::Linear,
    )
    .unwrap();
    let worst = fixed
        .pixels()
        .iter()
        .zip(truth.pixels())
        .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
        .fold(0.0, f64::max);
    // two rounds of 16-bit quantization
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn synth_reports_gamut_failures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("mech.json"),
        r#"{"kind":"maximum-flux","level":0.95}"#,
    )
    .unwrap();
    let o = constancy(
        &[
            "synth",
            "--illuminant",
            "yellow",
            "--mechanism-file",
            "mech.json",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("OutOfGamut"));
}

#[test]
fn empty_manifest_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.json"),
        r#"{"schema":1,"baseline_condition":"baseline","scenes":[],"conditions":[],"illuminants":[],"cells":[]}"#,
    )
    .unwrap();
    let o = constancy(
        &["evaluate", "--manifest", "m.json", "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn white_point_flag_and_environment_agree() {
    let dir = tempfile::tempdir().unwrap();
    write_image(
        &dir.path().join("in.png"),
        &checker(4, 4, [0.2, 0.4, 0.6], [0.6, 0.5, 0.1]),
        BitDepth::Sixteen,
    )
    .unwrap();
    let args = [
        "correct",
        "in.png",
        "-o",
        "flag.png",
        "--illuminant",
        "1,1,1",
        "--space",
        "lab",
        "--white-point",
        "0.9642,1,0.8251",
    ];
    assert_eq!(code(&constancy(&args, dir.path())), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_constancy"))
        .args([
            "correct",
            "in.png",
            "-o",
            "env.png",
            "--illuminant",
            "1,1,1",
            "--space",
            "lab",
        ])
        .env("CONSTANCY_WHITE_POINT", "0.9642,1,0.8251")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(dir.path().join("flag.png")).unwrap(),
        std::fs::read(dir.path().join("env.png")).unwrap()
    );
    let bad = ["estimate", "in.png", "--white-point", "1,0,1"];
    assert_eq!(code(&constancy(&bad, dir.path())), 2);
}

#[test]
fn compare_writes_the_delta_table() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/surface_cci.csv");
    let fixture = fixture.to_str().unwrap();
    let o = constancy(
        &[
            "compare",
            "--records",
            fixture,
            "--humans",
            fixture,
            "--resamples",
            "100",
            "--environment",
            "indoor=indoor,outdoor=outdoor",
            "--format",
            "csv",
            "--delta-out",
            "delta.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("delta.csv")).unwrap();
    assert_eq!(table.lines().count(), 33);
    assert!(table.contains("indoor,suppressed,blue,khaki,104.99,101.89,-3.10"));
    assert!(stdout(&o).starts_with("model,scope,measure"));
}
