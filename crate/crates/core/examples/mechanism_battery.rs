//! Runs three classical estimators over the in-memory mechanism battery
//! and prints each model's mean ΔCCI per cue manipulation.

use constancy::estimators::{EstimatorParams, Method};
use constancy::harness::{run_cells, BatteryOptions, PredictorSource};

fn main() {
    let cells = BatteryOptions::standard(7)
        .cells()
        .expect("battery renders");
    let models = [
        PredictorSource::Builtin(EstimatorParams::gray_world()),
        PredictorSource::Builtin(EstimatorParams::white_patch()),
        PredictorSource::Builtin(EstimatorParams::default_for(Method::GrayEdge)),
    ];
    let conditions = [
        "local-surround",
        "maximum-flux",
        "spatial-mean-add-objects",
        "spatial-mean-change-reflectances",
    ];

    print!("{:<13}{:>9}", "model", "baseline");
    for c in &conditions {
        print!("{:>34}", c);
    }
    println!();
    for m in &models {
        let run = run_cells(&cells, m, "baseline", None);
        let mean = |f: &dyn Fn(&constancy::harness::CellRecord) -> Option<f64>, cond: &str| {
            let v: Vec<f64> = run
                .records
                .iter()
                .filter(|r| r.key.condition == cond)
                .filter_map(f)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        print!(
            "{:<13}{:>9.1}",
            run.records[0].subject,
            mean(&|r| Some(r.cci), "baseline")
        );
        for c in &conditions {
            print!("{:>34.1}", mean(&|r| r.delta_cci, c));
        }
        println!();
    }
}
