//! A handful of CIEDE2000 reference pairs, including the hue-angle edge
//! cases near the a* axis, alongside the plain Euclidean ΔE*ab.

use constancy::colorspace::{ciede2000, Lab};

fn main() {
    let pairs = [
        ((50.0, 2.6772, -79.7751), (50.0, 0.0, -82.7485), 2.0425),
        ((50.0, -1.0, 2.0), (50.0, 0.0, 0.0), 2.3669),
        ((50.0, 2.49, -0.001), (50.0, -2.49, 0.0009), 7.1792),
        ((50.0, 2.49, -0.001), (50.0, -2.49, 0.0011), 7.2195),
        ((50.0, 2.5, 0.0), (73.0, 25.0, -18.0), 27.1492),
        ((2.0776, 0.0795, -1.135), (0.9033, -0.0636, -0.5514), 0.9082),
    ];
    println!(
        "{:>30} {:>30} {:>9} {:>9} {:>9}",
        "lab 1", "lab 2", "dE00", "ref", "dE76"
    );
    for ((l1, a1, b1), (l2, a2, b2), want) in pairs {
        let (x, y) = (Lab::new(l1, a1, b1), Lab::new(l2, a2, b2));
        println!(
            "{:>30} {:>30} {:>9.4} {:>9.4} {:>9.4}",
            format!("({l1}, {a1}, {b1})"),
            format!("({l2}, {a2}, {b2})"),
            ciede2000(x, y),
            want,
            x.distance(y)
        );
    }
}
