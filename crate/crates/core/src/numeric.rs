//! Small numeric helpers shared across modules.

/// Neumaier compensated accumulator. Adding the same values in the same
/// order always produces the same bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Arithmetic mean. Identical inputs return that value bit for bit, which
/// rounding in `sum / n` would not guarantee.
pub fn mean(values: &[f64]) -> f64 {
    if let Some(&first) = values.first() {
        if values.iter().all(|v| v.to_bits() == first.to_bits()) {
            return first;
        }
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Angle between two 3-vectors in degrees.
pub fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let c = dot3(a, b) / (norm3(a) * norm3(b));
    c.clamp(-1.0, 1.0).acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals), 2.0);
        assert_eq!(vals.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn angle_of_parallel_vectors_is_zero() {
        assert!(angle_deg([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) < 1e-6);
        assert!((angle_deg([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) - 90.0).abs() < 1e-12);
    }
}
