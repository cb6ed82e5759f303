use serde::Serialize;

/// Row-major `height × width` scalar field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), height * width);
        Self {
            height,
            width,
            values,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// `(intensity, semi-axis a, semi-axis b, center x, center y, rotation in degrees)`
/// of the modified Shepp-Logan phantom on `[−1, 1]²`.
const ELLIPSES: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Phantom intensity at a point of `[−1, 1]²` (y pointing up), before clipping.
pub fn shepp_logan_value(x: f64, y: f64) -> f64 {
    ELLIPSES
        .iter()
        .filter(|e| {
            let (s, c) = e[5].to_radians().sin_cos();
            let dx = x - e[3];
            let dy = y - e[4];
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            (u / e[1]).powi(2) + (v / e[2]).powi(2) <= 1.0
        })
        .map(|e| e[0])
        .sum()
}

/// Modified Shepp-Logan phantom sampled at pixel centers and clipped to
/// `[0, 1]`. Pixel `(i, j)` has center `((2j+1)/width − 1, 1 − (2i+1)/height)`.
pub fn shepp_logan(height: usize, width: usize) -> ImageGrid {
    assert!(
        height >= 16 && width >= 16,
        "phantom needs at least 16×16 pixels"
    );
    let mut values = Vec::with_capacity(height * width);
    for i in 0..height {
        let y = 1.0 - (2 * i + 1) as f64 / height as f64;
        for j in 0..width {
            let x = (2 * j + 1) as f64 / width as f64 - 1.0;
            values.push(shepp_logan_value(x, y).clamp(0.0, 1.0));
        }
    }
    ImageGrid::new(height, width, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_are_zero_and_values_clipped() {
        let p = shepp_logan(64, 64);
        for k in [0, 63, 64 * 63, 64 * 64 - 1] {
            assert_eq!(p.values[k], 0.0);
        }
        assert!(p.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(p.values.contains(&1.0));
    }

    #[test]
    fn deterministic_with_interior_mean() {
        let a = shepp_logan(64, 64);
        assert_eq!(a, shepp_logan(64, 64));
        assert!(a.mean() > 0.0 && a.mean() < 1.0);
    }
}
