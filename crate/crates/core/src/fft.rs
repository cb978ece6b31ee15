//! Square two-dimensional FFTs and zero-padded linear convolution.

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::scalar::Real;

pub(crate) struct Fft2<T: Real> {
    m: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    pub(crate) fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    pub(crate) fn forward(&self, data: &mut [Complex<T>]) {
        self.apply(data, &self.fwd);
    }

    /// Inverse transform including the `1/m²` normalization.
    pub(crate) fn inverse(&self, data: &mut [Complex<T>]) {
        self.apply(data, &self.inv);
        let s = T::one() / T::from_usize(self.m * self.m).unwrap();
        data.iter_mut().for_each(|v| *v = *v * s);
    }

    fn apply(&self, data: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        plan.process(data);
        transpose(data, self.m);
        plan.process(data);
        transpose(data, self.m);
    }
}

fn transpose<V: Copy>(data: &mut [V], m: usize) {
    for j in 0..m {
        for i in j + 1..m {
            data.swap(j * m + i, i * m + j);
        }
    }
}

/// Signed wavenumber for FFT bin `k` of an `m`-point transform on period `period`.
pub(crate) fn wavenumber<T: Real>(k: usize, m: usize, period: T) -> T {
    let s = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
    T::lit(2.0 * std::f64::consts::PI * s) / period
}

/// Linear convolution `out(i,j) = Σ K(i−i', j−j') src(i',j')` on an `n×n`
/// grid via a `2n×2n` zero-padded FFT. `kernel(p, q)` is sampled for offsets
/// `|p|, |q| < n`.
pub(crate) fn convolve<T: Real>(
    src: &[Complex<T>],
    n: usize,
    kernel: impl Fn(isize, isize) -> Complex<T>,
) -> Vec<Complex<T>> {
    let m = 2 * n;
    let fft = Fft2::new(m);
    let zero = Complex::new(T::zero(), T::zero());
    let mut a = vec![zero; m * m];
    for j in 0..n {
        a[j * m..j * m + n].copy_from_slice(&src[j * n..(j + 1) * n]);
    }
    let mut k = vec![zero; m * m];
    for q in -(n as isize - 1)..n as isize {
        let row = q.rem_euclid(m as isize) as usize;
        for p in -(n as isize - 1)..n as isize {
            let col = p.rem_euclid(m as isize) as usize;
            k[row * m + col] = kernel(p, q);
        }
    }
    fft.forward(&mut a);
    fft.forward(&mut k);
    a.iter_mut().zip(&k).for_each(|(x, y)| *x = *x * *y);
    fft.inverse(&mut a);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        out.extend_from_slice(&a[j * m..j * m + n]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = 8;
        let orig: Vec<Complex<f64>> = (0..m * m).map(|k| Complex::new(k as f64, (k * k % 7) as f64)).collect();
        let mut d = orig.clone();
        let f = Fft2::new(m);
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let n = 8;
        let src: Vec<Complex<f64>> = (0..n * n).map(|k| Complex::new((k % 5) as f64 - 2.0, (k % 3) as f64)).collect();
        let kern = |p: isize, q: isize| Complex::new(1.0 / (1.0 + (p * p + 2 * q * q) as f64), p as f64 * 0.1);
        let out = convolve(&src, n, kern);
        for j in 0..n as isize {
            for i in 0..n as isize {
                let mut s = Complex::new(0.0, 0.0);
                for jj in 0..n as isize {
                    for ii in 0..n as isize {
                        s += kern(i - ii, j - jj) * src[(jj as usize) * n + ii as usize];
                    }
                }
                assert!((s - out[j as usize * n + i as usize]).norm() < 1e-10);
            }
        }
    }
}
