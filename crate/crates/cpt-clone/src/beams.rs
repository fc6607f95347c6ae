//! Synthesis of initial transverse envelopes: Hermite-Gaussian and
//! super-Gaussian modes, plane waves, and raster-image-encoded profiles.

use crate::field::ComplexField;
use crate::grid::TransverseGrid;
use crate::io::{read_pgm, FormatError, GrayImage};
use num_complex::Complex64;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeamError {
    #[error("invalid beam spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Image(#[from] FormatError),
    #[error("zero-maximum image: cannot normalize an all-black image")]
    ZeroMaximumImage,
}

/// Physicists' Hermite polynomial H_k(x) by the standard recurrence
/// H_{k+1} = 2x H_k - 2k H_{k-1}.
pub fn hermite(k: u32, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let mut hm1 = 1.0;
            let mut h = 2.0 * x;
            for j in 1..k {
                let next = 2.0 * x * h - 2.0 * j as f64 * hm1;
                hm1 = h;
                h = next;
            }
            h
        }
    }
}

/// Declarative description of an initial transverse profile.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamSpec {
    /// amp * H_m(sqrt(2) x / w) H_n(sqrt(2) y / w) exp(-(x^2+y^2)/w^2)
    HermiteGaussian {
        m: u32,
        n: u32,
        /// width w (cm)
        width: f64,
        /// peak-coefficient amplitude (gamma)
        amplitude: f64,
    },
    /// amp * exp(-((x^2+y^2)/w^2)^order); order 8 is the flat-top used for
    /// the probe input.
    SuperGaussian {
        width: f64,
        order: u32,
        amplitude: f64,
    },
    PlaneWave { amplitude: f64 },
    /// Bilinear resampling of a grayscale raster onto a centered rectangle,
    /// amplitude proportional to luma, optionally Gaussian-blurred.
    Image {
        path: PathBuf,
        amplitude: f64,
        /// Gaussian blur width (cm); 0 disables the blur.
        blur_sigma: f64,
        /// Physical (width, height) in cm the raster maps onto; `None`
        /// fills the central 50% of the grid.
        extent: Option<(f64, f64)>,
    },
}

impl BeamSpec {
    pub fn validate(&self) -> Result<(), BeamError> {
        let bad = |msg: &str| Err(BeamError::InvalidSpec(msg.to_string()));
        match *self {
            BeamSpec::HermiteGaussian {
                width, amplitude, ..
            } => {
                if !(width > 0.0) {
                    return bad("hermite_gaussian width must be > 0");
                }
                if !(amplitude >= 0.0) {
                    return bad("amplitude must be >= 0");
                }
            }
            BeamSpec::SuperGaussian {
                width,
                order,
                amplitude,
            } => {
                if !(width > 0.0) {
                    return bad("super_gaussian width must be > 0");
                }
                if order < 1 {
                    return bad("super_gaussian order must be >= 1");
                }
                if !(amplitude >= 0.0) {
                    return bad("amplitude must be >= 0");
                }
            }
            BeamSpec::PlaneWave { amplitude } => {
                if !(amplitude >= 0.0) {
                    return bad("amplitude must be >= 0");
                }
            }
            BeamSpec::Image {
                amplitude,
                blur_sigma,
                extent,
                ..
            } => {
                if !(amplitude >= 0.0) {
                    return bad("amplitude must be >= 0");
                }
                if !(blur_sigma >= 0.0) {
                    return bad("blur_sigma must be >= 0");
                }
                if let Some((w, h)) = extent {
                    if !(w > 0.0 && h > 0.0) {
                        return bad("image extent must be > 0");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn synthesize(&self, grid: TransverseGrid) -> Result<ComplexField, BeamError> {
        self.validate()?;
        Ok(match *self {
            BeamSpec::HermiteGaussian {
                m,
                n,
                width,
                amplitude,
            } => synth_hermite_gaussian(grid, m, n, width, amplitude),
            BeamSpec::SuperGaussian {
                width,
                order,
                amplitude,
            } => synth_super_gaussian(grid, width, order, amplitude),
            BeamSpec::PlaneWave { amplitude } => synth_plane_wave(grid, amplitude),
            BeamSpec::Image {
                ref path,
                amplitude,
                blur_sigma,
                extent,
            } => {
                let img = read_pgm(path)?;
                let extent = extent.unwrap_or((
                    0.5 * grid.nx() as f64 * grid.dx(),
                    0.5 * grid.ny() as f64 * grid.dy(),
                ));
                synth_from_image(grid, &img, amplitude, blur_sigma, extent)?
            }
        })
    }
}

pub fn synth_hermite_gaussian(
    grid: TransverseGrid,
    m: u32,
    n: u32,
    width: f64,
    amplitude: f64,
) -> ComplexField {
    let sqrt2_over_w = std::f64::consts::SQRT_2 / width;
    let inv_w2 = 1.0 / (width * width);
    ComplexField::from_fn(grid, |x, y| {
        let val = amplitude
            * hermite(m, x * sqrt2_over_w)
            * hermite(n, y * sqrt2_over_w)
            * (-(x * x + y * y) * inv_w2).exp();
        Complex64::new(val, 0.0)
    })
}

pub fn synth_super_gaussian(
    grid: TransverseGrid,
    width: f64,
    order: u32,
    amplitude: f64,
) -> ComplexField {
    let inv_w2 = 1.0 / (width * width);
    ComplexField::from_fn(grid, |x, y| {
        let r2n = (x * x + y * y) * inv_w2;
        Complex64::new(amplitude * (-r2n.powi(order as i32)).exp(), 0.0)
    })
}

pub fn synth_plane_wave(grid: TransverseGrid, amplitude: f64) -> ComplexField {
    ComplexField::from_fn(grid, |_, _| Complex64::new(amplitude, 0.0))
}

/// Resample a grayscale raster onto the centered rectangle `extent`
/// (width, height in cm), normalize by the image maximum, scale by
/// `amplitude`, then blur with a normalized discrete Gaussian of width
/// `blur_sigma` (cm). Points outside the rectangle are zero. Image row 0
/// maps to the top of the rectangle (+y).
pub fn synth_from_image(
    grid: TransverseGrid,
    img: &GrayImage,
    amplitude: f64,
    blur_sigma: f64,
    extent: (f64, f64),
) -> Result<ComplexField, BeamError> {
    let max = img.luma.iter().cloned().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(BeamError::ZeroMaximumImage);
    }
    let (ew, eh) = extent;
    let (w, h) = (img.width, img.height);

    let sample = |x: f64, y: f64| -> f64 {
        // map x in [-ew/2, ew/2] to column coordinate [0, w-1]
        let u = if w > 1 { (x / ew + 0.5) * (w - 1) as f64 } else { 0.0 };
        let v = if h > 1 { (0.5 - y / eh) * (h - 1) as f64 } else { 0.0 };
        if u < 0.0 || v < 0.0 || u > (w - 1) as f64 || v > (h - 1) as f64 {
            return 0.0;
        }
        let (u0, v0) = (u.floor() as usize, v.floor() as usize);
        let (u1, v1) = ((u0 + 1).min(w - 1), (v0 + 1).min(h - 1));
        let (fu, fv) = (u - u0 as f64, v - v0 as f64);
        let p = |col: usize, row: usize| img.luma[row * w + col];
        (1.0 - fv) * ((1.0 - fu) * p(u0, v0) + fu * p(u1, v0))
            + fv * ((1.0 - fu) * p(u0, v1) + fu * p(u1, v1))
    };

    let half_w = 0.5 * ew;
    let half_h = 0.5 * eh;
    let mut real: Vec<f64> = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny() {
        let y = grid.y(iy);
        for ix in 0..grid.nx() {
            let x = grid.x(ix);
            let val = if x.abs() <= half_w && y.abs() <= half_h {
                amplitude * sample(x, y) / max
            } else {
                0.0
            };
            real.push(val);
        }
    }

    if blur_sigma > 0.0 {
        blur_separable(&mut real, grid, blur_sigma);
    }

    let values = real.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Ok(ComplexField::new(grid, values).expect("finite by construction"))
}

/// Separable convolution with a unit-sum discrete Gaussian kernel
/// (zero-padded boundaries).
fn blur_separable(data: &mut [f64], grid: TransverseGrid, sigma: f64) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let kernel = |d: f64, n: usize| -> Vec<f64> {
        let radius = ((4.0 * sigma / d).ceil() as usize).min(n / 2);
        let mut k: Vec<f64> = (0..=radius)
            .map(|i| (-0.5 * (i as f64 * d / sigma).powi(2)).exp())
            .collect();
        let sum: f64 = k[0] + 2.0 * k[1..].iter().sum::<f64>();
        for v in &mut k {
            *v /= sum;
        }
        k
    };

    let kx = kernel(grid.dx(), nx);
    let mut tmp = vec![0.0; data.len()];
    for iy in 0..ny {
        let row = &data[iy * nx..(iy + 1) * nx];
        let out = &mut tmp[iy * nx..(iy + 1) * nx];
        convolve_sym(row, out, &kx);
    }

    let ky = kernel(grid.dy(), ny);
    let mut col_in = vec![0.0; ny];
    let mut col_out = vec![0.0; ny];
    for ix in 0..nx {
        for iy in 0..ny {
            col_in[iy] = tmp[iy * nx + ix];
        }
        convolve_sym(&col_in, &mut col_out, &ky);
        for iy in 0..ny {
            data[iy * nx + ix] = col_out[iy];
        }
    }
}

fn convolve_sym(input: &[f64], out: &mut [f64], half_kernel: &[f64]) {
    let n = input.len();
    let r = half_kernel.len() - 1;
    for i in 0..n {
        let mut acc = half_kernel[0] * input[i];
        for k in 1..=r {
            if i >= k {
                acc += half_kernel[k] * input[i - k];
            }
            if i + k < n {
                acc += half_kernel[k] * input[i + k];
            }
        }
        out[i] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> TransverseGrid {
        TransverseGrid::with_extent(128, 128, 0.4, 0.4).unwrap()
    }

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite(0, 3.7), 1.0);
        assert_eq!(hermite(1, 2.0), 4.0);
        // H3 = 8x^3 - 12x at x = 2
        assert_eq!(hermite(3, 2.0), 40.0);
    }

    #[test]
    fn hermite_recurrence_matches_explicit_polynomials() {
        let explicit: [fn(f64) -> f64; 7] = [
            |_| 1.0,
            |x| 2.0 * x,
            |x| 4.0 * x * x - 2.0,
            |x| 8.0 * x.powi(3) - 12.0 * x,
            |x| 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
            |x| 32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x,
            |x| 64.0 * x.powi(6) - 480.0 * x.powi(4) + 720.0 * x * x - 120.0,
        ];
        for k in 0..=6u32 {
            for i in 0..=100 {
                let x = -5.0 + 0.1 * i as f64;
                let want = explicit[k as usize](x);
                let got = hermite(k, x);
                let scale = want.abs().max(1.0);
                assert!(
                    (got - want).abs() <= 1e-12 * scale,
                    "H_{k}({x}): {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn gaussian_values_at_center_and_width() {
        let w = 0.04; // 400 um
        let f = synth_hermite_gaussian(grid(), 0, 0, w, 1.0);
        assert_relative_eq!(f.at(64, 64).re, 1.0, epsilon = 1e-15);
        // r = w along the x axis: grid point at x = 0.04 hits exactly
        // (dx = 0.4/128 = 0.003125, 0.04/0.003125 = 12.8 -> not a grid point);
        // evaluate analytically instead on a grid that resolves it.
        let g = TransverseGrid::new(128, 128, 0.0025, 0.0025).unwrap();
        let f = synth_hermite_gaussian(g, 0, 0, w, 1.0);
        let ix = 64 + 16; // x = 0.04
        assert_relative_eq!(f.at(ix, 64).re, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn odd_mode_has_node_and_peaks_at_w_over_sqrt2() {
        let w = 0.04;
        let g = TransverseGrid::new(512, 4, 2.5e-4, 0.0025).unwrap();
        let f = synth_hermite_gaussian(g, 1, 0, w, 1.0);
        assert_eq!(f.at(256, 2).re, 0.0);
        // peak of 2 sqrt(2) (x/w) exp(-x^2/w^2) sits at x = w/sqrt(2)
        let (mut best_ix, mut best) = (0, 0.0);
        for ix in 256..512 {
            let v = f.at(ix, 2).re;
            if v > best {
                best = v;
                best_ix = ix;
            }
        }
        let expected = w / std::f64::consts::SQRT_2;
        assert!(
            (g.x(best_ix) - expected).abs() <= g.dx(),
            "peak at {} vs {}",
            g.x(best_ix),
            expected
        );
    }

    #[test]
    fn super_gaussian_flat_top() {
        let w = 0.015;
        let g = TransverseGrid::new(256, 256, 1.5e-4, 1.5e-4).unwrap();
        let f = synth_super_gaussian(g, w, 8, 2.0);
        assert_relative_eq!(f.at(128, 128).re, 2.0, epsilon = 1e-15);
        // r = w: amp * exp(-1) for any order; x = 0.015 = 100 cells
        assert_relative_eq!(f.at(228, 128).re, 2.0 * (-1.0f64).exp(), max_relative = 1e-12);
        // r = 0.8 w: amp * exp(-0.8^16) ~ 0.9723 amp
        assert_relative_eq!(
            f.at(208, 128).re,
            2.0 * (-(0.8f64.powi(16))).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn plane_wave_is_uniform() {
        let f = synth_plane_wave(grid(), 0.15);
        assert!(f.values().iter().all(|v| *v == Complex64::new(0.15, 0.0)));
        let z = synth_plane_wave(grid(), 0.0);
        assert_relative_eq!(z.power(), 0.0);
    }

    #[test]
    fn image_uniform_white_fills_extent() {
        let img = GrayImage {
            width: 4,
            height: 4,
            luma: vec![0.5; 16], // any uniform level normalizes to 1
        };
        let g = grid();
        let f = synth_from_image(g, &img, 1.5, 0.0, (0.2, 0.2)).unwrap();
        assert_relative_eq!(f.at(64, 64).re, 1.5, epsilon = 1e-15);
        // inside the rectangle
        assert_relative_eq!(f.at(40, 80).re, 1.5, epsilon = 1e-15);
        // outside
        assert_eq!(f.at(2, 64).re, 0.0);
    }

    #[test]
    fn image_all_black_is_rejected() {
        let img = GrayImage {
            width: 2,
            height: 2,
            luma: vec![0.0; 4],
        };
        assert!(matches!(
            synth_from_image(grid(), &img, 1.0, 0.0, (0.1, 0.1)),
            Err(BeamError::ZeroMaximumImage)
        ));
    }

    #[test]
    fn checkerboard_bilinear_and_blur_match_direct_oracle() {
        // 2x2 checkerboard on a tiny grid; compare against hand convolution.
        let img = GrayImage {
            width: 2,
            height: 2,
            luma: vec![1.0, 0.0, 0.0, 1.0],
        };
        let g = TransverseGrid::new(16, 16, 0.01, 0.01).unwrap();
        let extent = (0.08, 0.08);
        let plain = synth_from_image(g, &img, 1.0, 0.0, extent).unwrap();
        // center of the mapped rectangle interpolates all four pixels equally
        assert_relative_eq!(plain.at(8, 8).re, 0.5, epsilon = 1e-12);

        let sigma = 2.0 * g.dx();
        let blurred = synth_from_image(g, &img, 1.0, sigma, extent).unwrap();
        // direct convolution oracle
        let radius = ((4.0 * sigma / g.dx()).ceil() as usize).min(8);
        let mut k: Vec<f64> = (0..=radius)
            .map(|i| (-0.5 * (i as f64 * g.dx() / sigma).powi(2)).exp())
            .collect();
        let sum: f64 = k[0] + 2.0 * k[1..].iter().sum::<f64>();
        for v in &mut k {
            *v /= sum;
        }
        let at = |ix: i64, iy: i64| -> f64 {
            if (0..16).contains(&ix) && (0..16).contains(&iy) {
                plain.at(ix as usize, iy as usize).re
            } else {
                0.0
            }
        };
        for (ix, iy) in [(8usize, 8usize), (5, 9), (12, 4)] {
            let mut acc = 0.0;
            for ddy in -(radius as i64)..=radius as i64 {
                for ddx in -(radius as i64)..=radius as i64 {
                    acc += k[ddx.unsigned_abs() as usize]
                        * k[ddy.unsigned_abs() as usize]
                        * at(ix as i64 + ddx, iy as i64 + ddy);
                }
            }
            assert_relative_eq!(blurred.at(ix, iy).re, acc, max_relative = 1e-12);
        }
    }

    #[test]
    fn blur_preserves_integrated_amplitude() {
        let img = GrayImage {
            width: 8,
            height: 8,
            luma: (0..64).map(|i| (i % 7) as f64 / 6.0).collect(),
        };
        let g = TransverseGrid::new(128, 128, 0.002, 0.002).unwrap();
        // small extent keeps the profile far from the boundary
        let plain = synth_from_image(g, &img, 1.0, 0.0, (0.06, 0.06)).unwrap();
        let blurred = synth_from_image(g, &img, 1.0, 0.004, (0.06, 0.06)).unwrap();
        let sum = |f: &ComplexField| f.values().iter().map(|v| v.re).sum::<f64>();
        assert_relative_eq!(sum(&blurred), sum(&plain), max_relative = 1e-6);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let spec = BeamSpec::SuperGaussian {
            width: 0.015,
            order: 8,
            amplitude: 0.15,
        };
        let a = spec.synthesize(grid()).unwrap();
        let b = spec.synthesize(grid()).unwrap();
        assert_eq!(a.values(), b.values());
    }
}
