//! Renders a Mondrian under a bluish light, runs every estimator on it and
//! white-balances with the Gray World estimate.

use constancy::estimators::{estimate_illuminant, von_kries_correct, EstimatorParams, Method};
use constancy::scenegen::{render, IlluminantSpec, SceneSpec};

fn main() {
    let scene = SceneSpec::standard(11);
    let light = IlluminantSpec::named("blue").expect("built-in light");
    let rendered = render(&scene, &light).expect("standard scene renders");

    println!("true light      {:.4?}", light.direction);
    for m in Method::ALL {
        let e = estimate_illuminant(&rendered.image, &EstimatorParams::default_for(m)).unwrap();
        println!(
            "{:<22} {:.4?}  error {:.3} deg",
            m.name(),
            e.direction.to_array(),
            e.angular_error_deg(constancy::colorspace::LinearRgb::from_array(
                light.direction
            ))
        );
    }

    let gw = estimate_illuminant(&rendered.image, &EstimatorParams::gray_world()).unwrap();
    let corrected = von_kries_correct(&rendered.image, &gw).unwrap();
    let worst = corrected
        .pixels()
        .iter()
        .zip(rendered.reflectance.pixels())
        .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
        .fold(0.0, f64::max);
    println!("max |corrected - reflectance| after Gray World: {worst:.2e}");
}
