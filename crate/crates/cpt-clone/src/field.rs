//! Complex transverse field envelopes sampled on a [`TransverseGrid`].

use crate::grid::TransverseGrid;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("value count {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("field contains a non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Complex amplitude (units of gamma) per grid point, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: TransverseGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: TransverseGrid, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                got: values.len(),
                want: grid.len(),
            });
        }
        let f = Self { grid, values };
        f.check_finite()?;
        Ok(f)
    }

    pub fn zeros(grid: TransverseGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Pointwise synthesis from a function of the centered coordinates.
    pub fn from_fn(grid: TransverseGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny() {
            let y = grid.y(iy);
            for ix in 0..grid.nx() {
                values.push(f(grid.x(ix), y));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.grid.idx(ix, iy)]
    }

    /// Total power: sum |v|^2 dx dy (gamma^2 cm^2). Sequential sum for
    /// run-to-run determinism.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn peak_intensity(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0f64, f64::max)
    }

    pub fn check_finite(&self) -> Result<(), FieldError> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(FieldError::NonFinite(i));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_of_plane_wave_is_area_times_intensity() {
        let grid = TransverseGrid::new(16, 8, 0.1, 0.2).unwrap();
        let f = ComplexField::from_fn(grid, |_, _| Complex64::new(0.15, 0.0));
        assert_relative_eq!(
            f.power(),
            0.15 * 0.15 * 16.0 * 8.0 * 0.1 * 0.2,
            max_relative = 1e-14
        );
    }

    #[test]
    fn rejects_wrong_length_and_non_finite() {
        let grid = TransverseGrid::new(4, 4, 0.1, 0.1).unwrap();
        assert!(ComplexField::new(grid, vec![Complex64::default(); 15]).is_err());
        let mut vals = vec![Complex64::default(); 16];
        vals[7] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            ComplexField::new(grid, vals),
            Err(FieldError::NonFinite(7))
        ));
    }
}
