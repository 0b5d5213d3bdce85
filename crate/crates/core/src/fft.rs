//! Thin wrappers over `rustfft` for the 1-D and 2-D transforms used here.
//!
//! Forward transforms are unnormalized, `X[k] = Σ x[n] e^{-2πjkn/N}`; inverse
//! transforms carry the `1/N` factor so `ifft(fft(x)) = x`.

use ndarray::{Array2, Axis};
use rustfft::{FftDirection, FftPlanner};

use crate::Complex64;

fn transform_in_place(data: &mut [Complex64], direction: FftDirection) {
    if data.is_empty() {
        return;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(data.len(), direction);
    fft.process(data);
}

pub fn fft(data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    transform_in_place(&mut out, FftDirection::Forward);
    out
}

pub fn ifft(data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    transform_in_place(&mut out, FftDirection::Inverse);
    let scale = 1.0 / out.len().max(1) as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

fn transform_axis(a: &mut Array2<Complex64>, axis: Axis, direction: FftDirection) {
    let n = a.len_of(axis);
    if n == 0 {
        return;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, direction);
    let mut buf = vec![Complex64::default(); n];
    for mut lane in a.lanes_mut(axis) {
        buf.iter_mut().zip(lane.iter()).for_each(|(b, v)| *b = *v);
        fft.process(&mut buf);
        lane.iter_mut().zip(buf.iter()).for_each(|(v, b)| *v = *b);
    }
}

pub fn fft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = a.clone();
    transform_axis(&mut out, Axis(0), FftDirection::Forward);
    transform_axis(&mut out, Axis(1), FftDirection::Forward);
    out
}

pub fn ifft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = a.clone();
    transform_axis(&mut out, Axis(0), FftDirection::Inverse);
    transform_axis(&mut out, Axis(1), FftDirection::Inverse);
    let scale = 1.0 / out.len().max(1) as f64;
    out.mapv_inplace(|v| v * scale);
    out
}

/// Moves index 0 to the middle: element `i` lands at `(i + n/2) mod n`.
pub fn fftshift<T: Clone>(data: &[T]) -> Vec<T> {
    let n = data.len();
    let mut out = data.to_vec();
    for (i, v) in data.iter().enumerate() {
        out[(i + n / 2) % n] = v.clone();
    }
    out
}

pub fn fftshift2<T: Clone>(a: &Array2<T>) -> Array2<T> {
    let (n0, n1) = a.dim();
    Array2::from_shape_fn((n0, n1), |(i, j)| {
        a[((i + n0 - n0 / 2) % n0, (j + n1 - n1 / 2) % n1)].clone()
    })
}

/// Signed frequency index of DFT bin `k` on an `n`-point grid, in `[-n/2, n/2)`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    let k = k as i64;
    let n = n as i64;
    if k >= (n + 1) / 2 { k - n } else { k }
}
