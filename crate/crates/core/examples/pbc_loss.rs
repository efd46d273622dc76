//! Evaluates the perceptual balanced loss on a small prediction, shows the
//! chroma weighting, and takes a few gradient-descent steps.

use constancy::image::{ColorSpace, ImagePlane};
use constancy::pbcloss::{chroma_weight, pbc_loss, pbc_loss_gradient, PbcParams};

fn main() {
    let p = PbcParams::default();
    for c in [0.0, 32.0, 64.0, 128.0] {
        println!("chroma {c:5.1} -> weight {:.4}", chroma_weight(c, &p));
    }

    let gt = ImagePlane::new(
        2,
        2,
        ColorSpace::Lab,
        vec![
            [50.0, 40.0, 10.0],
            [70.0, -20.0, 30.0],
            [30.0, 5.0, -45.0],
            [90.0, 0.0, 2.0],
        ],
    )
    .unwrap();
    let mut pred = ImagePlane::new(
        2,
        2,
        ColorSpace::Lab,
        vec![
            [55.0, 30.0, 14.0],
            [64.0, -26.0, 22.0],
            [35.0, 0.0, -38.0],
            [85.0, 3.0, -1.0],
        ],
    )
    .unwrap();

    for step in 0..=30 {
        let loss = pbc_loss(&pred, &gt, &p).unwrap();
        if step % 10 == 0 {
            println!("step {step:2}  loss {loss:.5}");
        }
        let g = pbc_loss_gradient(&pred, &gt, &p, 1e-4).unwrap();
        for (px, d) in pred.pixels_mut().iter_mut().zip(&g) {
            for c in 0..3 {
                px[c] -= 0.5 * d[c];
            }
        }
    }
}
