//! Writes a small battery to a temporary directory, reloads it through the
//! manifest loader, and scores Gray World and the stored ground truth on it.

use constancy::harness::{
    load_manifest, run_grid, write_battery, write_records_csv, BatteryOptions, PredictorSource,
};
use constancy::image::ColorSpace;
use constancy::scenegen::MechanismSpec;

fn main() {
    let dir = std::env::temp_dir().join(format!("constancy-grid-{}", std::process::id()));
    let mut opts = BatteryOptions::standard(1);
    opts.mechanisms = vec![
        MechanismSpec::Baseline,
        MechanismSpec::LocalSurround { color: None },
    ];
    let path = write_battery(&dir, &opts).expect("battery written");
    let manifest = load_manifest(&path).expect("manifest validates");
    println!("{} cells from {}", manifest.cells.len(), path.display());

    let truth = PredictorSource::External {
        dir: dir.join("gt"),
        space: ColorSpace::Linear,
    };
    let gray_world = PredictorSource::Builtin(constancy::estimators::EstimatorParams::gray_world());
    for (name, p) in [("ground truth", &truth), ("gray world", &gray_world)] {
        let run = run_grid(&manifest, p, None);
        println!("{name}:");
        for r in &run.records {
            println!(
                "  {:<40} cci {:7.2}  delta {:>7}",
                r.key.to_string(),
                r.cci,
                r.delta_cci.map(|d| format!("{d:.2}")).unwrap_or_default()
            );
        }
        if name == "gray world" {
            write_records_csv(&dir.join("records.csv"), &run.records).unwrap();
            println!("records written to {}", dir.join("records.csv").display());
        }
    }
}
