//! Two-dimensional real FFT on a periodic work grid.
//!
//! Real data is `[ny][nx]` row-major. Spectra are stored transposed as
//! `[mx][ny]` with `mx = nx / 2 + 1`, so each x-wavenumber owns a contiguous
//! column of y-coefficients.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::par;

pub(crate) struct Fft2 {
    pub nx: usize,
    pub ny: usize,
    pub mx: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    rows: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let mx = nx / 2 + 1;
        Fft2 {
            nx,
            ny,
            mx,
            r2c: rp.plan_fft_forward(nx),
            c2r: rp.plan_fft_inverse(nx),
            col_fwd: cp.plan_fft_forward(ny),
            col_inv: cp.plan_fft_inverse(ny),
            rows: vec![Complex64::new(0.0, 0.0); mx * ny],
        }
    }

    pub fn spectrum_len(&self) -> usize {
        self.mx * self.ny
    }

    /// Unnormalised forward transform. `input` is used as scratch.
    pub fn forward(&mut self, input: &mut [f64], out: &mut [Complex64]) {
        let (nx, ny, mx) = (self.nx, self.ny, self.mx);
        debug_assert_eq!(input.len(), nx * ny);
        debug_assert_eq!(out.len(), mx * ny);
        let r2c = &self.r2c;
        let scratch_len = r2c.get_scratch_len();
        {
            // Pair each real row with its complex row.
            let rows = &mut self.rows;
            let mut pairs: Vec<(&mut [f64], &mut [Complex64])> = input
                .chunks_mut(nx)
                .zip(rows.chunks_mut(mx))
                .collect();
            par::for_each_row_init(
                &mut pairs,
                1,
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, _, pair| {
                    let (src, dst) = &mut pair[0];
                    r2c.process_with_scratch(src, dst, scratch)
                        .expect("row transform length");
                },
            );
        }
        transpose(&self.rows, out, ny, mx);
        let col = &self.col_fwd;
        let col_scratch = col.get_inplace_scratch_len();
        par::for_each_row_init(
            out,
            ny,
            || vec![Complex64::new(0.0, 0.0); col_scratch],
            |scratch, _, c| col.process_with_scratch(c, scratch),
        );
    }

    /// Normalised inverse transform. `spec` is used as scratch.
    pub fn inverse(&mut self, spec: &mut [Complex64], out: &mut [f64]) {
        let (nx, ny, mx) = (self.nx, self.ny, self.mx);
        debug_assert_eq!(spec.len(), mx * ny);
        debug_assert_eq!(out.len(), nx * ny);
        let col = &self.col_inv;
        let col_scratch = col.get_inplace_scratch_len();
        par::for_each_row_init(
            spec,
            ny,
            || vec![Complex64::new(0.0, 0.0); col_scratch],
            |scratch, _, c| col.process_with_scratch(c, scratch),
        );
        transpose(spec, &mut self.rows, mx, ny);
        let c2r = &self.c2r;
        let scratch_len = c2r.get_scratch_len();
        let scale = 1.0 / (nx * ny) as f64;
        let even = nx % 2 == 0;
        let rows = &mut self.rows;
        let mut pairs: Vec<(&mut [Complex64], &mut [f64])> =
            rows.chunks_mut(mx).zip(out.chunks_mut(nx)).collect();
        par::for_each_row_init(
            &mut pairs,
            1,
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, _, pair| {
                let (src, dst) = &mut pair[0];
                src[0].im = 0.0;
                if even {
                    src[mx - 1].im = 0.0;
                }
                c2r.process_with_scratch(src, dst, scratch)
                    .expect("row transform length");
                for v in dst.iter_mut() {
                    *v *= scale;
                }
            },
        );
    }
}

/// `dst[c][r] = src[r][c]` for a `rows x cols` source.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 32;
    for rb in (0..rows).step_by(TILE) {
        for cb in (0..cols).step_by(TILE) {
            for r in rb..(rb + TILE).min(rows) {
                for c in cb..(cb + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
