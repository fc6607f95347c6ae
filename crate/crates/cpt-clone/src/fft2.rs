//! Row-column 2D FFT on row-major complex buffers, with a fused
//! apply-separable-spectral-filter operation used by the diffraction step.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            scratch: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    /// data <- IFFT2( filter .* FFT2(data) ) with the separable filter
    /// filter[kx, ky] = fx[kx] * fy[ky] given in DFT bin order, including the
    /// 1/(nx ny) normalization. Exactly power-preserving for |filter| = 1
    /// up to roundoff.
    pub fn apply_separable_spectral(
        &mut self,
        data: &mut [Complex64],
        fx: &[Complex64],
        fy: &[Complex64],
    ) {
        assert_eq!(data.len(), self.nx * self.ny);
        assert_eq!(fx.len(), self.nx);
        assert_eq!(fy.len(), self.ny);
        let (nx, ny) = (self.nx, self.ny);
        let norm = 1.0 / (nx as f64 * ny as f64);

        fft_rows(&*self.fwd_x, data, nx);
        transpose(data, &mut self.scratch, nx, ny);
        // scratch is now column-major: row x holds all ky for fixed kx
        fft_rows(&*self.fwd_y, &mut self.scratch, ny);

        self.scratch
            .par_chunks_mut(ny)
            .enumerate()
            .for_each(|(x, row)| {
                let fxv = fx[x] * norm;
                for (y, v) in row.iter_mut().enumerate() {
                    *v *= fxv * fy[y];
                }
            });

        fft_rows(&*self.inv_y, &mut self.scratch, ny);
        transpose(&self.scratch, data, ny, nx);
        fft_rows(&*self.inv_x, data, nx);
    }

    /// Unnormalized forward 2D FFT (bin order along both axes).
    pub fn forward(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.nx * self.ny);
        fft_rows(&*self.fwd_x, data, self.nx);
        transpose(data, &mut self.scratch, self.nx, self.ny);
        fft_rows(&*self.fwd_y, &mut self.scratch, self.ny);
        transpose(&self.scratch, data, self.ny, self.nx);
    }

    /// Inverse of [`forward`], including 1/(nx ny).
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.nx * self.ny);
        let norm = 1.0 / (self.nx as f64 * self.ny as f64);
        fft_rows(&*self.inv_x, data, self.nx);
        transpose(data, &mut self.scratch, self.nx, self.ny);
        fft_rows(&*self.inv_y, &mut self.scratch, self.ny);
        transpose(&self.scratch, data, self.ny, self.nx);
        data.par_iter_mut().for_each(|v| *v *= norm);
    }
}

fn fft_rows(fft: &dyn Fft<f64>, data: &mut [Complex64], row_len: usize) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(row_len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// dst[x * rows + y] = src[y * cols + x]; tiled for cache locality.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    const TILE: usize = 32;
    dst.par_chunks_mut(TILE * rows)
        .enumerate()
        .for_each(|(chunk_idx, dchunk)| {
            let x0 = chunk_idx * TILE;
            let x1 = (x0 + TILE).min(cols);
            for y0 in (0..rows).step_by(TILE) {
                let y1 = (y0 + TILE).min(rows);
                for x in x0..x1 {
                    let drow = &mut dchunk[(x - x0) * rows..(x - x0) * rows + rows];
                    for y in y0..y1 {
                        drow[y] = src[y * cols + x];
                    }
                }
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn forward_inverse_round_trip() {
        let (nx, ny) = (16, 8);
        let mut data: Vec<Complex64> = (0..nx * ny)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = data.clone();
        let mut fft = Fft2::new(nx, ny);
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_filter_preserves_power() {
        let (nx, ny) = (32, 32);
        let mut data: Vec<Complex64> = (0..nx * ny)
            .map(|i| Complex64::new((i as f64 * 0.29).sin(), (i as f64 * 0.53).cos()))
            .collect();
        let before: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        let ones = vec![Complex64::new(1.0, 0.0); nx];
        let mut fft = Fft2::new(nx, ny);
        fft.apply_separable_spectral(&mut data, &ones, &ones);
        let after: f64 = data.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(before, after, max_relative = 1e-13);
    }

    #[test]
    fn plane_wave_picks_up_dc_filter_value_only() {
        let (nx, ny) = (16, 16);
        let mut data = vec![Complex64::new(2.0, 0.0); nx * ny];
        let mut fx = vec![Complex64::new(0.0, 0.0); nx];
        fx[0] = Complex64::new(0.5, 0.0);
        let mut fy = vec![Complex64::new(0.0, 0.0); ny];
        fy[0] = Complex64::new(3.0, 0.0);
        let mut fft = Fft2::new(nx, ny);
        fft.apply_separable_spectral(&mut data, &fx, &fy);
        for v in &data {
            assert_relative_eq!(v.re, 3.0, epsilon = 1e-12);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-12);
        }
    }
}
