//! Linear maps between finite-dimensional spaces.
//!
//! Every operator implements [`LinearMap`]: a forward application `x ↦ Mx`
//! and a transpose application `y ↦ Mᵀy`. Whether the transpose is the true
//! adjoint of the forward map is a property of the implementation, not of the
//! trait; [`adjointness_defect`] measures it. The mismatched iteration relies
//! on exactly this: the surrogate `V` is only ever used through
//! `apply_transpose`.

mod norm;
mod sparse;

pub use norm::{adjointness_defect, estimate_operator_norm, mismatch_norm, NormEstimate};
pub use sparse::CsrMap;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::vecops;

/// A linear operator `ℝ^cols → ℝ^rows` with a transpose application.
///
/// Implementations must be pure: calling `apply_into` concurrently from
/// several threads is allowed.
pub trait LinearMap: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `out = M x`. `x.len() == cols`, `out.len() == rows`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out = Mᵀ y`. `y.len() == rows`, `out.len() == cols`.
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(y, &mut out);
        out
    }
}

impl<T: LinearMap + ?Sized> LinearMap for Arc<T> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).apply_transpose_into(y, out)
    }
}

impl<T: LinearMap + ?Sized> LinearMap for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).apply_transpose_into(y, out)
    }
}

/// Shared, type-erased operator handle.
pub type SharedMap = Arc<dyn LinearMap>;

/// Materializes any linear map as a dense matrix by applying it to the unit
/// vectors. Intended for small operators and tests.
pub fn to_dense(map: &dyn LinearMap) -> DMatrix<f64> {
    let (rows, cols) = (map.rows(), map.cols());
    let mut m = DMatrix::zeros(rows, cols);
    let mut e = vec![0.0; cols];
    let mut col = vec![0.0; rows];
    for j in 0..cols {
        e[j] = 1.0;
        map.apply_into(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}

/// Materializes the transpose application as a dense `rows × cols` matrix
/// `B` such that `apply_transpose(y) = Bᵀ y`.
pub fn to_dense_transpose(map: &dyn LinearMap) -> DMatrix<f64> {
    let (rows, cols) = (map.rows(), map.cols());
    let mut b = DMatrix::zeros(rows, cols);
    let mut e = vec![0.0; rows];
    let mut row = vec![0.0; cols];
    for i in 0..rows {
        e[i] = 1.0;
        map.apply_transpose_into(&e, &mut row);
        for (j, v) in row.iter().enumerate() {
            b[(i, j)] = *v;
        }
        e[i] = 0.0;
    }
    b
}

/// Dense matrix with its exact transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMap {
    matrix: DMatrix<f64>,
}

impl DenseMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.nrows() > 0 && matrix.ncols() > 0, "empty matrix");
        Self { matrix }
    }

    pub fn from_row_slice(rows: usize, cols: usize, values: &[f64]) -> Self {
        Self::new(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

impl LinearMap for DenseMap {
    fn rows(&self) -> usize {
        self.matrix.nrows()
    }
    fn cols(&self) -> usize {
        self.matrix.ncols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols());
        assert_eq!(out.len(), self.rows());
        let m = &self.matrix;
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate() {
                acc += m[(i, j)] * xj;
            }
            *o = acc;
        }
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows());
        assert_eq!(out.len(), self.cols());
        // Column-major storage: each column of M is contiguous.
        for (j, o) in out.iter_mut().enumerate() {
            *o = vecops::dot(self.matrix.column(j).as_slice(), y);
        }
    }
}

impl From<DMatrix<f64>> for DenseMap {
    fn from(matrix: DMatrix<f64>) -> Self {
        Self::new(matrix)
    }
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Operator defined by a pair of closures.
pub struct FnMap {
    rows: usize,
    cols: usize,
    forward: Box<ApplyFn>,
    transpose: Box<ApplyFn>,
}

impl FnMap {
    pub fn new<F, T>(rows: usize, cols: usize, forward: F, transpose: T) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        T: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            rows,
            cols,
            forward: Box::new(forward),
            transpose: Box::new(transpose),
        }
    }
}

impl fmt::Debug for FnMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMap")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl LinearMap for FnMap {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.forward)(x, out)
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        (self.transpose)(y, out)
    }
}

/// The zero operator of a given shape.
#[derive(Clone, Copy, Debug)]
pub struct ZeroMap {
    pub rows: usize,
    pub cols: usize,
}

impl LinearMap for ZeroMap {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn apply_transpose_into(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `c · M`.
pub struct ScaledMap<M> {
    pub scale: f64,
    pub inner: M,
}

impl<M: LinearMap> LinearMap for ScaledMap<M> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.apply_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.apply_transpose_into(y, out);
        out.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// Pointwise difference `left − right` of two maps with equal shapes.
pub struct DifferenceMap<L, R> {
    left: L,
    right: R,
}

impl<L: LinearMap, R: LinearMap> DifferenceMap<L, R> {
    pub fn new(left: L, right: R) -> Self {
        assert_eq!(left.rows(), right.rows(), "row mismatch");
        assert_eq!(left.cols(), right.cols(), "column mismatch");
        Self { left, right }
    }
}

impl<L: LinearMap, R: LinearMap> LinearMap for DifferenceMap<L, R> {
    fn rows(&self) -> usize {
        self.left.rows()
    }
    fn cols(&self) -> usize {
        self.left.cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.left.apply_into(x, out);
        let r = self.right.apply(x);
        out.iter_mut().zip(r).for_each(|(o, v)| *o -= v);
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        self.left.apply_transpose_into(y, out);
        let r = self.right.apply_transpose(y);
        out.iter_mut().zip(r).for_each(|(o, v)| *o -= v);
    }
}

/// Vertical concatenation `(M₁; M₂; …)` of maps sharing their column count.
///
/// The transpose is the sum of the blockwise transposes, accumulated in block
/// order.
pub struct StackedMap {
    blocks: Vec<SharedMap>,
    offsets: Vec<usize>,
    cols: usize,
}

impl StackedMap {
    pub fn new(blocks: Vec<SharedMap>) -> Self {
        assert!(!blocks.is_empty(), "StackedMap needs at least one block");
        let cols = blocks[0].cols();
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for b in &blocks {
            assert_eq!(b.cols(), cols, "stacked blocks must share cols");
            acc += b.rows();
            offsets.push(acc);
        }
        Self {
            blocks,
            offsets,
            cols,
        }
    }

    pub fn blocks(&self) -> &[SharedMap] {
        &self.blocks
    }

    /// Row range occupied by block `k`.
    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }
}

impl LinearMap for StackedMap {
    fn rows(&self) -> usize {
        *self.offsets.last().unwrap()
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), self.rows());
        for (k, b) in self.blocks.iter().enumerate() {
            b.apply_into(x, &mut out[self.block_range(k)]);
        }
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.rows());
        out.fill(0.0);
        let mut part = vec![0.0; self.cols];
        for (k, b) in self.blocks.iter().enumerate() {
            b.apply_transpose_into(&y[self.block_range(k)], &mut part);
            out.iter_mut().zip(&part).for_each(|(o, p)| *o += p);
        }
    }
}

/// Wrapper counting forward and transpose applications.
pub struct CountingMap<M> {
    inner: M,
    forward_calls: AtomicUsize,
    transpose_calls: AtomicUsize,
}

impl<M: LinearMap> CountingMap<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            forward_calls: AtomicUsize::new(0),
            transpose_calls: AtomicUsize::new(0),
        }
    }

    pub fn forward_calls(&self) -> usize {
        self.forward_calls.load(Ordering::Relaxed)
    }

    pub fn transpose_calls(&self) -> usize {
        self.transpose_calls.load(Ordering::Relaxed)
    }
}

impl<M: LinearMap> LinearMap for CountingMap<M> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.forward_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(x, out)
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        self.transpose_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_transpose_into(y, out)
    }
}

/// Forward operator `A` together with the surrogate `V` whose transpose
/// replaces `Aᵀ`.
pub struct MismatchedPair {
    forward: SharedMap,
    surrogate: SharedMap,
    mismatch: OnceLock<f64>,
}

impl MismatchedPair {
    pub fn new(forward: SharedMap, surrogate: SharedMap) -> Self {
        assert_eq!(
            (forward.rows(), forward.cols()),
            (surrogate.rows(), surrogate.cols()),
            "forward and surrogate must have identical shapes"
        );
        Self {
            forward,
            surrogate,
            mismatch: OnceLock::new(),
        }
    }

    pub fn forward(&self) -> &SharedMap {
        &self.forward
    }

    pub fn surrogate(&self) -> &SharedMap {
        &self.surrogate
    }

    /// Cached `‖A − V‖`, if [`mismatch_norm`] has been evaluated.
    pub fn cached_mismatch_norm(&self) -> Option<f64> {
        self.mismatch.get().copied()
    }
}

/// Column vector helper for nalgebra interop.
#[cfg(test)]
pub(crate) fn dvec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}
