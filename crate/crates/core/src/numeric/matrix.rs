use std::sync::atomic::{AtomicU32, Ordering};

use rand::Rng as _;

use super::{dot, seeded_rng, Real, Rng};
use crate::error::{Error, Result};

/// Dense row-major matrix. Rows are vocabulary entries or hidden units.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T = f32> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Entries drawn i.i.d. from `U(-bound, bound)`. Draws are made in `f64`
    /// so `f32` and `f64` matrices from the same stream agree up to rounding.
    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| T::cast(rng.gen_range(-bound..=bound)))
            .collect();
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        self.map(|v| U::cast(v.to_f64c()))
    }

    /// `out = self · x`
    pub fn matvec(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `out += selfᵀ · y`
    pub fn matvec_t_acc(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (i, &yi) in y.iter().enumerate() {
            if yi != T::zero() {
                super::axpy(yi, self.row(i), out);
            }
        }
    }

    /// `self += alpha · y xᵀ`
    pub fn rank1_acc(&mut self, alpha: T, y: &[T], x: &[T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (i, &yi) in y.iter().enumerate() {
            if yi != T::zero() {
                super::axpy(alpha * yi, x, self.row_mut(i));
            }
        }
    }
}

/// Embedding table with entries uniform in `[-0.5/dim, 0.5/dim]`.
pub fn init_matrix(rows: usize, dim: usize, seed: u64) -> Result<Matrix<f32>> {
    if rows == 0 || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix dimensions must be positive, got {rows}x{dim}"
        )));
    }
    let mut rng = seeded_rng(seed);
    Ok(Matrix::uniform(rows, dim, 0.5 / dim as f64, &mut rng))
}

/// Read access to parameter rows, shared by plain and concurrently-updated
/// matrices so the loss code is written once.
pub trait ParamRows<T: Real>: Sync {
    fn n_rows(&self) -> usize;
    fn dim(&self) -> usize;
    fn dot_row(&self, i: usize, x: &[T]) -> T;
    /// `out += scale * row_i`
    fn add_row_to(&self, i: usize, scale: T, out: &mut [T]);
}

impl<T: Real> ParamRows<T> for Matrix<T> {
    fn n_rows(&self) -> usize {
        self.rows
    }

    fn dim(&self) -> usize {
        self.cols
    }

    #[inline]
    fn dot_row(&self, i: usize, x: &[T]) -> T {
        dot(self.row(i), x)
    }

    #[inline]
    fn add_row_to(&self, i: usize, scale: T, out: &mut [T]) {
        super::axpy(scale, self.row(i), out);
    }
}

/// `f32` matrix whose rows may be updated by several training threads at once.
///
/// Writes are unsynchronised read-modify-write sequences on relaxed atomics:
/// concurrent updates to the same entry can be lost, which SGD tolerates.
/// With a single writer the result is identical to plain sequential updates.
pub struct SharedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<AtomicU32>,
}

impl SharedMatrix {
    pub fn new(m: Matrix<f32>) -> Self {
        SharedMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
        }
    }

    pub fn into_matrix(self) -> Matrix<f32> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .into_iter()
                .map(|a| f32::from_bits(a.into_inner()))
                .collect(),
        }
    }

    #[inline]
    fn get(&self, idx: usize) -> f32 {
        f32::from_bits(self.data[idx].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, idx: usize, v: f32) {
        self.data[idx].store(v.to_bits(), Ordering::Relaxed);
    }

    pub fn read_row(&self, i: usize, out: &mut [f32]) {
        let base = i * self.cols;
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.get(base + k);
        }
    }

    /// `row_i += scale * x`
    #[inline]
    pub fn update_row(&self, i: usize, scale: f32, x: &[f32]) {
        let base = i * self.cols;
        for (k, &xk) in x.iter().enumerate() {
            let idx = base + k;
            self.set(idx, self.get(idx) + scale * xk);
        }
    }
}

impl ParamRows<f32> for SharedMatrix {
    fn n_rows(&self) -> usize {
        self.rows
    }

    fn dim(&self) -> usize {
        self.cols
    }

    #[inline]
    fn dot_row(&self, i: usize, x: &[f32]) -> f32 {
        let base = i * self.cols;
        let mut acc = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            acc += self.get(base + k) * xk;
        }
        acc
    }

    #[inline]
    fn add_row_to(&self, i: usize, scale: f32, out: &mut [f32]) {
        let base = i * self.cols;
        for (k, o) in out.iter_mut().enumerate() {
            *o += scale * self.get(base + k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic() {
        let a = init_matrix(2, 4, 7).unwrap();
        let b = init_matrix(2, 4, 7).unwrap();
        assert_eq!(
            a.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a, init_matrix(2, 4, 8).unwrap());
    }

    #[test]
    fn init_respects_bound() {
        let m = init_matrix(50, 100, 3).unwrap();
        assert!(m.as_slice().iter().all(|v| v.abs() <= 0.005));
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(init_matrix(0, 4, 1).is_err());
        assert!(init_matrix(4, 0, 1).is_err());
    }

    #[test]
    fn init_mean_within_three_sigma() {
        // U(-b, b) has variance b²/3; the mean of n draws has sd b/sqrt(3n).
        let dim = 100;
        let m = init_matrix(10_000, dim, 11).unwrap();
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().map(|&v| v as f64).sum::<f64>() / n;
        let b = 0.5 / dim as f64;
        let sd = b / (3.0 * n).sqrt();
        assert!(mean.abs() < 3.0 * sd, "mean {mean} sd {sd}");
    }

    #[test]
    fn shared_matrix_matches_sequential_updates() {
        let base = init_matrix(3, 4, 5).unwrap();
        let mut plain = base.clone();
        let shared = SharedMatrix::new(base);
        let x = [0.5f32, -1.0, 2.0, 0.25];
        shared.update_row(1, 0.1, &x);
        super::super::axpy(0.1, &x, plain.row_mut(1));
        let mut buf = [0.0f32; 4];
        assert_eq!(shared.dot_row(1, &x), plain.dot_row(1, &x));
        shared.read_row(1, &mut buf);
        assert_eq!(&buf, plain.row(1));
        assert_eq!(shared.into_matrix(), plain);
    }

    #[test]
    fn matvec_and_transpose() {
        let m = Matrix::from_vec(2, 3, vec![1.0f64, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = [0.0; 2];
        m.matvec(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
        let mut back = [0.0; 3];
        m.matvec_t_acc(&[1.0, 1.0], &mut back);
        assert_eq!(back, [5.0, 7.0, 9.0]);
    }
}
