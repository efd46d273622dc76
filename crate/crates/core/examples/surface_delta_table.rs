//! Reads published per-surface CCIs (baseline and cue-suppressed) and
//! prints the ΔCCI table to two decimals.

use std::path::Path;

use constancy::harness::{delta_records, format_delta_table, read_human_csv};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/surface_cci.csv");
    let records = read_human_csv(&path).expect("fixture is readable");
    let deltas = delta_records(&records, "baseline");
    print!("{}", format_delta_table(&deltas));

    let worst = deltas
        .iter()
        .min_by(|a, b| a.delta_cci.total_cmp(&b.delta_cci))
        .unwrap();
    println!(
        "largest drop: {} {} under {}: {:.2}",
        worst.scene, worst.subject, worst.illuminant, worst.delta_cci
    );
}
