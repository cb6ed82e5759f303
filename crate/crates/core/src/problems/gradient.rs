use crate::operators::LinearMap;

/// Forward-difference gradient on an `height × width` image with Neumann
/// boundary: differences that would leave the grid are zero.
///
/// Output layout: vertical differences for every pixel (row-major), then
/// horizontal differences. The transpose is `−div`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gradient {
    height: usize,
    width: usize,
}

pub fn gradient_op(height: usize, width: usize) -> Gradient {
    assert!(
        height >= 2 && width >= 2,
        "gradient needs at least a 2×2 grid"
    );
    Gradient { height, width }
}

impl Gradient {
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
}

impl LinearMap for Gradient {
    fn rows(&self) -> usize {
        2 * self.height * self.width
    }
    fn cols(&self) -> usize {
        self.height * self.width
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (m, n) = (self.height, self.width);
        assert_eq!(x.len(), m * n);
        let (gv, gh) = out.split_at_mut(m * n);
        for i in 0..m {
            for j in 0..n {
                let k = i * n + j;
                gv[k] = if i + 1 < m { x[k + n] - x[k] } else { 0.0 };
                gh[k] = if j + 1 < n { x[k + 1] - x[k] } else { 0.0 };
            }
        }
    }
    fn apply_transpose_into(&self, p: &[f64], out: &mut [f64]) {
        let (m, n) = (self.height, self.width);
        assert_eq!(p.len(), 2 * m * n);
        let (pv, ph) = p.split_at(m * n);
        for i in 0..m {
            for j in 0..n {
                let k = i * n + j;
                let mut v = 0.0;
                if i + 1 < m {
                    v -= pv[k];
                }
                if i > 0 {
                    v += pv[k - n];
                }
                if j + 1 < n {
                    v -= ph[k];
                }
                if j > 0 {
                    v += ph[k - 1];
                }
                out[k] = v;
            }
        }
    }
}
