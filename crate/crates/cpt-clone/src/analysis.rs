//! Beam metrology: widths, transmissions, Rayleigh lengths, cloning
//! fidelity and feature-size ratios.

use crate::fft2::Fft2;
use crate::field::ComplexField;
use crate::propagator::FieldState;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("zero field: no metrics defined")]
    ZeroField,
    #[error("no localized beam: intensity never falls below half maximum")]
    NoLocalizedBeam,
    #[error("zero input power: transmission undefined")]
    ZeroInputPower,
    #[error("zero-variance intensity: correlation undefined")]
    ZeroVariance,
    #[error("fields live on different grids")]
    GridMismatch,
}

/// One intensity lobe on a scan line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lobe {
    /// Coordinate of the peak sample (cm).
    pub position: f64,
    pub height: f64,
    /// Intensity FWHM of this lobe by linear interpolation (cm).
    pub fwhm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamMetrics {
    /// Intensity FWHM along x through the intensity centroid (cm).
    pub fwhm_x: f64,
    /// Intensity FWHM along y through the intensity centroid (cm).
    pub fwhm_y: f64,
    /// Second-moment width: geometric mean of 2*sigma_x and 2*sigma_y (cm).
    pub w_2m: f64,
    /// Peak intensity (gamma^2).
    pub peak_intensity: f64,
    /// Total power (gamma^2 cm^2).
    pub total_power: f64,
    /// Intensity centroid (cm).
    pub centroid: (f64, f64),
    /// Lobes found on the centroid row (prominence >= 10% of the row peak),
    /// sorted by position. The dominant lobe defines fwhm_x.
    pub lobes_x: Vec<Lobe>,
}

impl BeamMetrics {
    pub fn lobe_count(&self) -> usize {
        self.lobes_x.len()
    }
}

/// Metrics of an intensity distribution. Errors on an identically-zero
/// field and on profiles with no half-max crossing (plane waves).
pub fn beam_metrics(field: &ComplexField) -> Result<BeamMetrics, AnalysisError> {
    let grid = field.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut total = 0.0f64;
    let mut mx = 0.0f64;
    let mut my = 0.0f64;
    let mut mx2 = 0.0f64;
    let mut my2 = 0.0f64;
    let mut peak = 0.0f64;
    for iy in 0..ny {
        let y = grid.y(iy);
        for ix in 0..nx {
            let i = field.at(ix, iy).norm_sqr();
            let x = grid.x(ix);
            total += i;
            mx += x * i;
            my += y * i;
            mx2 += x * x * i;
            my2 += y * y * i;
            peak = peak.max(i);
        }
    }
    if total <= 0.0 {
        return Err(AnalysisError::ZeroField);
    }
    let cx = mx / total;
    let cy = my / total;
    let var_x = (mx2 / total - cx * cx).max(0.0);
    let var_y = (my2 / total - cy * cy).max(0.0);
    let w2m = (2.0 * var_x.sqrt() * 2.0 * var_y.sqrt()).sqrt();

    let iy_c = nearest_index(grid.ys(), cy);
    let ix_c = nearest_index(grid.xs(), cx);

    let row: Vec<f64> = (0..nx).map(|ix| field.at(ix, iy_c).norm_sqr()).collect();
    let col: Vec<f64> = (0..ny).map(|iy| field.at(ix_c, iy).norm_sqr()).collect();
    let lobes_x = scan_lobes(&row, &grid.xs());
    let lobes_y = scan_lobes(&col, &grid.ys());
    let dominant_x = dominant(&lobes_x).ok_or(AnalysisError::NoLocalizedBeam)?;
    let dominant_y = dominant(&lobes_y).ok_or(AnalysisError::NoLocalizedBeam)?;

    Ok(BeamMetrics {
        fwhm_x: dominant_x.fwhm,
        fwhm_y: dominant_y.fwhm,
        w_2m: w2m,
        peak_intensity: peak,
        total_power: total * grid.cell_area(),
        centroid: (cx, cy),
        lobes_x,
    })
}

fn nearest_index(coords: Vec<f64>, target: f64) -> usize {
    coords
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i)
        .unwrap()
}

fn dominant(lobes: &[Lobe]) -> Option<Lobe> {
    lobes
        .iter()
        .cloned()
        .max_by(|a, b| a.height.total_cmp(&b.height))
}

/// Local maxima (plateaus merged to their center) with height at least 10%
/// of the line maximum, each with a half-max-interpolated FWHM. Lobes whose
/// intensity never crosses half maximum inside the line are dropped.
fn scan_lobes(line: &[f64], coords: &[f64]) -> Vec<Lobe> {
    let n = line.len();
    let global = line.iter().cloned().fold(0.0f64, f64::max);
    if global <= 0.0 {
        return Vec::new();
    }
    let threshold = 0.1 * global;
    let mut lobes = Vec::new();
    let mut i = 0;
    while i < n {
        // maximal run of equal values [i, j]
        let mut j = i;
        while j + 1 < n && line[j + 1] == line[i] {
            j += 1;
        }
        let left_lower = i == 0 || line[i - 1] < line[i];
        let right_lower = j + 1 == n || line[j + 1] < line[i];
        let interior = i > 0 && j + 1 < n;
        if line[i] >= threshold && left_lower && right_lower && interior {
            let peak_idx = (i + j) / 2;
            if let Some(fwhm) = lobe_fwhm(line, coords, peak_idx) {
                lobes.push(Lobe {
                    position: coords[peak_idx],
                    height: line[i],
                    fwhm,
                });
            }
        }
        i = j + 1;
    }
    lobes
}

/// Half-max crossings around `peak` by linear interpolation.
fn lobe_fwhm(line: &[f64], coords: &[f64], peak: usize) -> Option<f64> {
    let half = 0.5 * line[peak];
    let n = line.len();

    let mut right = None;
    for i in peak + 1..n {
        if line[i] < half {
            let t = (line[i - 1] - half) / (line[i - 1] - line[i]);
            right = Some(coords[i - 1] + t * (coords[i] - coords[i - 1]));
            break;
        }
    }
    let mut left = None;
    for i in (0..peak).rev() {
        if line[i] < half {
            let t = (line[i + 1] - half) / (line[i + 1] - line[i]);
            left = Some(coords[i + 1] - t * (coords[i + 1] - coords[i]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    }
}

/// Which envelope a state-level metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Probe,
    Control,
}

/// Ratio of total output to input power of the selected field.
pub fn transmission(
    in_state: &FieldState,
    out_state: &FieldState,
    which: Which,
) -> Result<f64, AnalysisError> {
    if in_state.grid() != out_state.grid() {
        return Err(AnalysisError::GridMismatch);
    }
    let (pin, pout) = match which {
        Which::Probe => (in_state.probe.power(), out_state.probe.power()),
        Which::Control => (in_state.control.power(), out_state.control.power()),
    };
    if pin <= 0.0 {
        return Err(AnalysisError::ZeroInputPower);
    }
    Ok(pout / pin)
}

/// zR = pi w0^2 / lambda.
pub fn rayleigh_length(w0_cm: f64, lambda_cm: f64) -> f64 {
    std::f64::consts::PI * w0_cm * w0_cm / lambda_cm
}

/// Maximum shift the fidelity search explores, as a fraction of the domain.
pub const FIDELITY_SHIFT_FRAC: f64 = 0.05;

/// Normalized zero-mean cross-correlation between |probe_out|^2 and
/// |control_in|^2, maximized over integer cyclic shifts within
/// +-[`FIDELITY_SHIFT_FRAC`] of the domain on each axis. 1.0 means the two
/// intensity patterns agree up to scale and a small shift.
pub fn cloning_fidelity(
    probe_out: &ComplexField,
    control_in: &ComplexField,
) -> Result<f64, AnalysisError> {
    if probe_out.grid() != control_in.grid() {
        return Err(AnalysisError::GridMismatch);
    }
    let grid = probe_out.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let n = (nx * ny) as f64;

    let deviations = |f: &ComplexField| -> (Vec<Complex64>, f64) {
        let ints: Vec<f64> = f.values().iter().map(|v| v.norm_sqr()).collect();
        let mean = ints.iter().sum::<f64>() / n;
        let mut ss = 0.0;
        let dev: Vec<Complex64> = ints
            .iter()
            .map(|i| {
                let d = i - mean;
                ss += d * d;
                Complex64::new(d, 0.0)
            })
            .collect();
        (dev, ss)
    };
    let (mut d1, ss1) = deviations(probe_out);
    let (mut d2, ss2) = deviations(control_in);
    if ss1 <= 0.0 || ss2 <= 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }

    // cross-correlation over all cyclic shifts via the convolution theorem
    let mut fft = Fft2::new(nx, ny);
    fft.forward(&mut d1);
    fft.forward(&mut d2);
    for (a, b) in d1.iter_mut().zip(d2.iter()) {
        *a *= b.conj();
    }
    fft.inverse(&mut d1);

    let wx = ((nx as f64 * FIDELITY_SHIFT_FRAC).floor() as isize).max(0);
    let wy = ((ny as f64 * FIDELITY_SHIFT_FRAC).floor() as isize).max(0);
    let mut best = f64::NEG_INFINITY;
    for sy in -wy..=wy {
        let iy = sy.rem_euclid(ny as isize) as usize;
        for sx in -wx..=wx {
            let ix = sx.rem_euclid(nx as isize) as usize;
            best = best.max(d1[iy * nx + ix].re);
        }
    }
    Ok(best / (ss1 * ss2).sqrt())
}

/// Ratio of dominant-lobe FWHMs of `a` relative to `b` (how much smaller
/// b's features are). When both centroid-row profiles carry the same number
/// of lobes (>= 2), the ratio is averaged over position-matched lobes.
pub fn feature_size_ratio(a: &ComplexField, b: &ComplexField) -> Result<f64, AnalysisError> {
    if a.grid() != b.grid() {
        return Err(AnalysisError::GridMismatch);
    }
    let ma = beam_metrics(a)?;
    let mb = beam_metrics(b)?;
    if ma.lobes_x.len() == mb.lobes_x.len() && ma.lobes_x.len() >= 2 {
        let mut acc = 0.0;
        for (la, lb) in ma.lobes_x.iter().zip(&mb.lobes_x) {
            acc += la.fwhm / lb.fwhm;
        }
        Ok(acc / ma.lobes_x.len() as f64)
    } else {
        Ok(ma.fwhm_x / mb.fwhm_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::{synth_hermite_gaussian, synth_plane_wave, synth_super_gaussian};
    use crate::grid::TransverseGrid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid512() -> TransverseGrid {
        TransverseGrid::with_extent(512, 512, 0.4, 0.4).unwrap()
    }

    #[test]
    fn gaussian_fwhm_matches_closed_form() {
        let grid = grid512();
        let w = 0.04;
        let f = synth_hermite_gaussian(grid, 0, 0, w, 1.3);
        let m = beam_metrics(&f).unwrap();
        let expected = w * (2.0 * std::f64::consts::LN_2).sqrt(); // 1.1774 w
        assert!((m.fwhm_x - expected).abs() < grid.dx());
        assert!((m.fwhm_y - expected).abs() < grid.dy());
        assert_relative_eq!(m.w_2m, w, max_relative = 1e-3);
        assert_relative_eq!(m.peak_intensity, 1.3 * 1.3, max_relative = 1e-12);
        assert!(m.centroid.0.abs() < 1e-12 && m.centroid.1.abs() < 1e-12);
        assert_eq!(m.lobe_count(), 1);
    }

    #[test]
    fn plane_wave_has_no_localized_beam() {
        let f = synth_plane_wave(grid512(), 0.5);
        assert!(matches!(
            beam_metrics(&f),
            Err(AnalysisError::NoLocalizedBeam)
        ));
    }

    #[test]
    fn zero_field_errors() {
        let f = synth_plane_wave(grid512(), 0.0);
        assert!(matches!(beam_metrics(&f), Err(AnalysisError::ZeroField)));
    }

    #[test]
    fn two_lobe_profile_is_counted_and_positioned() {
        let grid = grid512();
        let w = 0.04;
        let f = synth_hermite_gaussian(grid, 1, 0, w, 1.5);
        let m = beam_metrics(&f).unwrap();
        assert_eq!(m.lobe_count(), 2);
        let expected = w / std::f64::consts::SQRT_2;
        assert!((m.lobes_x[0].position + expected).abs() <= grid.dx());
        assert!((m.lobes_x[1].position - expected).abs() <= grid.dx());
    }

    #[test]
    fn transmission_identity_and_multiplicativity() {
        let grid = grid512();
        let probe = synth_super_gaussian(grid, 0.015, 8, 0.15);
        let control = synth_hermite_gaussian(grid, 0, 0, 0.04, 1.0);
        let s0 = FieldState::new(probe.clone(), control.clone(), 0.0).unwrap();
        assert_relative_eq!(transmission(&s0, &s0, Which::Probe).unwrap(), 1.0);

        let scale = |f: &ComplexField, c: f64| {
            let mut g = f.clone();
            g.values_mut().iter_mut().for_each(|v| *v *= c);
            g
        };
        let s1 = FieldState::new(scale(&probe, 0.8), control.clone(), 1.0).unwrap();
        let s2 = FieldState::new(scale(&probe, 0.5), control, 2.0).unwrap();
        let t01 = transmission(&s0, &s1, Which::Probe).unwrap();
        let t12 = transmission(&s1, &s2, Which::Probe).unwrap();
        let t02 = transmission(&s0, &s2, Which::Probe).unwrap();
        assert_relative_eq!(t01 * t12, t02, max_relative = 1e-10);
    }

    #[test]
    fn rayleigh_values() {
        assert!((rayleigh_length(60e-4, 795e-7) - 1.42).abs() < 0.01);
        assert_relative_eq!(
            rayleigh_length(2.0 * 60e-4, 795e-7),
            4.0 * rayleigh_length(60e-4, 795e-7),
            max_relative = 1e-14
        );
        assert_relative_eq!(rayleigh_length(150e-4, 795e-7), 8.889, max_relative = 1e-3);
    }

    #[test]
    fn fidelity_self_is_one_and_shift_seeking() {
        let grid = TransverseGrid::with_extent(128, 128, 0.4, 0.4).unwrap();
        let f = synth_hermite_gaussian(grid, 0, 0, 0.04, 1.0);
        assert_relative_eq!(cloning_fidelity(&f, &f).unwrap(), 1.0, epsilon = 1e-12);

        // cyclic shift by 4 pixels stays inside the 5% search window
        let mut shifted = f.clone();
        let nx = grid.nx();
        let vals = f.values().to_vec();
        for iy in 0..grid.ny() {
            for ix in 0..nx {
                shifted.values_mut()[iy * nx + ix] = vals[iy * nx + (ix + 4) % nx];
            }
        }
        assert_relative_eq!(
            cloning_fidelity(&f, &shifted).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fidelity_of_seeded_noise_is_small() {
        let grid = grid512();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut noise = |_: f64, _: f64| {
            Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
        };
        let a = ComplexField::from_fn(grid, &mut noise);
        let b = ComplexField::from_fn(grid, &mut noise);
        let fid = cloning_fidelity(&a, &b).unwrap();
        assert!(fid.abs() < 0.05, "fidelity {fid}");
    }

    #[test]
    fn fidelity_is_symmetric() {
        let grid = TransverseGrid::with_extent(64, 64, 0.4, 0.4).unwrap();
        let a = synth_hermite_gaussian(grid, 0, 0, 0.05, 1.0);
        let b = synth_super_gaussian(grid, 0.03, 8, 0.5);
        let ab = cloning_fidelity(&a, &b).unwrap();
        let ba = cloning_fidelity(&b, &a).unwrap();
        assert_relative_eq!(ab, ba, max_relative = 1e-10);
    }

    #[test]
    fn feature_ratio_of_scaled_gaussians() {
        let grid = grid512();
        let a = synth_hermite_gaussian(grid, 0, 0, 0.04, 1.0);
        let b = synth_hermite_gaussian(grid, 0, 0, 0.02, 1.0);
        let r = feature_size_ratio(&a, &b).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 0.02);
        let identical = feature_size_ratio(&a, &a).unwrap();
        assert_relative_eq!(identical, 1.0, epsilon = 1e-12);
        // reciprocal within interpolation tolerance
        let inv = feature_size_ratio(&b, &a).unwrap();
        assert_relative_eq!(r * inv, 1.0, max_relative = 0.02);
    }
}
