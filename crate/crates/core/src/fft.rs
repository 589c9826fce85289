//! Minimal 2D FFT plumbing on top of rustfft. Transforms are unnormalized;
//! callers apply their own scaling.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// In-place 2D FFT of an n×n row-major complex buffer.
pub(crate) fn fft2_inplace(buf: &mut [Complex<f64>], n: usize, inverse: bool) {
    assert_eq!(buf.len(), n * n);
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = buf[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            buf[j * n + i] = col[j];
        }
    }
}

/// Forward 2D FFT of real samples, returning the unnormalized complex grid.
pub(crate) fn fft2_forward_real(values: &[f64], n: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_inplace(&mut buf, n, false);
    buf
}
