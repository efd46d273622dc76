//! Separable Gaussian smoothing and derivative filters with symmetric
//! (mirror) boundary handling.

/// 1-D correlation kernel centered at index `radius`.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    radius: usize,
    taps: Vec<f64>,
}

impl Kernel {
    /// Sampled Gaussian derivative of `order` (0, 1 or 2), truncated at
    /// `ceil(3σ)`. `σ = 0` gives the discrete identity / central-difference
    /// stencils.
    pub(crate) fn gaussian(sigma: f64, order: u32) -> Kernel {
        if sigma <= 0.0 {
            let taps = match order {
                0 => vec![1.0],
                1 => vec![-0.5, 0.0, 0.5],
                _ => vec![1.0, -2.0, 1.0],
            };
            let radius = taps.len() / 2;
            return Kernel { radius, taps };
        }
        let radius = (3.0 * sigma).ceil() as usize;
        let xs: Vec<f64> = (0..=2 * radius).map(|i| i as f64 - radius as f64).collect();
        let g: Vec<f64> = xs
            .iter()
            .map(|x| (-x * x / (2.0 * sigma * sigma)).exp())
            .collect();
        let taps = match order {
            0 => {
                let s: f64 = g.iter().sum();
                g.iter().map(|v| v / s).collect()
            }
            1 => {
                // unit response to a unit ramp
                let raw: Vec<f64> = xs.iter().zip(&g).map(|(x, g)| x * g).collect();
                let s: f64 = xs.iter().zip(&raw).map(|(x, k)| x * k).sum();
                raw.iter().map(|k| k / s).collect()
            }
            _ => {
                let s2 = sigma * sigma;
                let raw: Vec<f64> = xs
                    .iter()
                    .zip(&g)
                    .map(|(x, g)| (x * x / s2 - 1.0) * g)
                    .collect();
                let m = raw.iter().sum::<f64>() / raw.len() as f64;
                let centered: Vec<f64> = raw.iter().map(|k| k - m).collect();
                // unit response to x²/2
                let s: f64 = xs.iter().zip(&centered).map(|(x, k)| 0.5 * x * x * k).sum();
                centered.iter().map(|k| k / s).collect()
            }
        };
        Kernel { radius, taps }
    }
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - 1 - j;
    }
    j as usize
}

/// Applies `kx` along rows then `ky` along columns to a single channel.
pub(crate) fn separable(
    data: &[f64],
    width: usize,
    height: usize,
    kx: &Kernel,
    ky: &Kernel,
) -> Vec<f64> {
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, k) in kx.taps.iter().enumerate() {
                let xi = mirror(x as isize + t as isize - kx.radius as isize, width);
                acc += k * row[xi];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, k) in ky.taps.iter().enumerate() {
                let yi = mirror(y as isize + t as isize - ky.radius as isize, height);
                acc += k * tmp[yi * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}
