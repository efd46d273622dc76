//! Builds the five competitors for a target under a yellow light, feeds a
//! made-up set of model outputs through the match derivation and prints
//! the resulting constancy index.

use constancy::colorspace::{Lab, WhitePoint};
use constancy::psychophys::{cci, derive_match, Competitor, ModelOutputs, ProjectionSpace};
use constancy::scenegen::{competitor_set, IlluminantSpec, SceneSpec};

fn main() {
    let scene = SceneSpec::standard(2);
    let light = IlluminantSpec::named("yellow").unwrap();
    let comps = competitor_set(&scene, &light, WhitePoint::D65).unwrap();
    for (c, lab) in comps.iter() {
        println!("{c:<2} L {:6.2}  a {:6.2}  b {:6.2}", lab.l, lab.a, lab.b);
    }

    // A model with partial constancy: it sees each competitor 40% of the way
    // from its true position toward the tristimulus match, plus a lightness
    // offset that the projection discards.
    let t = comps.get(Competitor::T);
    let outputs = ModelOutputs::from_colors(comps.iter().map(|(c, p)| {
        let k = 0.4;
        (
            c,
            Lab::new(
                p.l + k * (t.l - p.l) + 1.5,
                p.a + k * (t.a - p.a),
                p.b + k * (t.b - p.b),
            ),
        )
    }));
    let m = derive_match(&outputs, &comps, ProjectionSpace::Lab).unwrap();
    println!(
        "match from {} and {} (d = {:.3}, {:.3}), cluster spread {:.2} dE{}",
        m.chosen_pair.0,
        m.chosen_pair.1,
        m.d1,
        m.d2,
        m.cluster_spread,
        if m.cluster_warning { " (warning)" } else { "" }
    );
    println!("CCI = {:.2}%", cci(m.matched, &comps).unwrap());
}
