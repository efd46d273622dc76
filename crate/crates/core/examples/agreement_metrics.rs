//! Model-versus-observer agreement on a toy CCI table: Pearson, Lin's
//! concordance, the leave-one-out ceiling, the normalized score and a
//! bootstrap interval.

use constancy::agreement::{
    bootstrap_mean_ci, lin_ccc, metrics, observer_variability, pearson, ConditionVector,
    ObserverMatrix,
};

fn main() {
    let conditions = ["blue", "yellow", "red", "green", "blue-cut", "yellow-cut"];
    let observers = [
        ("ann", [88.0, 92.0, 75.0, 70.0, 41.0, 55.0]),
        ("bo", [84.0, 95.0, 80.0, 66.0, 35.0, 60.0]),
        ("cy", [91.0, 89.0, 72.0, 74.0, 47.0, 52.0]),
    ];
    let model = [95.0, 97.0, 90.0, 85.0, 60.0, 71.0];

    let vector = |vals: &[f64]| {
        ConditionVector::from_pairs(
            conditions
                .iter()
                .zip(vals)
                .map(|(k, v)| (k.to_string(), *v)),
        )
        .unwrap()
    };
    let mut humans = ObserverMatrix::new();
    for (name, vals) in &observers {
        humans.insert_subject(*name, vector(vals));
    }
    let m = vector(&model);
    let mean = humans.mean_vector();

    println!("pearson  {:.4}", pearson(&m, &mean).unwrap());
    println!(
        "lin ccc  {:.4}  (offset of the model lowers it)",
        lin_ccc(&m, &mean).unwrap()
    );
    let report = metrics(&m, &humans).unwrap();
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    for v in observer_variability(&humans).unwrap() {
        println!(
            "{:<4} mean pairwise r {:.3}  cv {:.3}",
            v.subject, v.mean_pairwise_pearson, v.coefficient_of_variation
        );
    }

    let drops: Vec<f64> = observers.iter().map(|(_, v)| v[4] - v[0]).collect();
    let ci = bootstrap_mean_ci(&drops, 10_000, 42, 0.95).unwrap();
    println!(
        "blue-cut dCCI {:.2} [{:.2}, {:.2}]",
        ci.mean, ci.lower, ci.upper
    );
}
