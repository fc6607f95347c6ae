//! Uniform sampling of the transverse plane and its spectral companion.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
}

/// Centered uniform 2D grid: x_i = (i - nx/2) dx, y_j = (j - ny/2) dy.
/// Spatial frequencies follow standard DFT ordering with kx_max = pi/dx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl TransverseGrid {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self, GridError> {
        for n in [nx, ny] {
            if n < 2 || !n.is_power_of_two() {
                return Err(GridError::NotPowerOfTwo(n));
            }
        }
        for d in [dx, dy] {
            if !(d > 0.0) || !d.is_finite() {
                return Err(GridError::NonPositiveSpacing(d));
            }
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Grid covering a centered box of the given full extents (cm).
    pub fn with_extent(nx: usize, ny: usize, extent_x: f64, extent_y: f64) -> Result<Self, GridError> {
        Self::new(nx, ny, extent_x / nx as f64, extent_y / ny as f64)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell area dx dy (cm^2).
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.dy
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    /// Spatial frequencies along x in DFT bin order (rad/cm).
    pub fn kxs(&self) -> Vec<f64> {
        dft_frequencies(self.nx, self.dx)
    }

    /// Spatial frequencies along y in DFT bin order (rad/cm).
    pub fn kys(&self) -> Vec<f64> {
        dft_frequencies(self.ny, self.dy)
    }

    /// Row-major flat index of sample (ix, iy).
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
}

fn dft_frequencies(n: usize, d: f64) -> Vec<f64> {
    let dk = std::f64::consts::TAU / (n as f64 * d);
    (0..n)
        .map(|i| {
            let signed = if i < n / 2 {
                i as isize
            } else {
                i as isize - n as isize
            };
            signed as f64 * dk
        })
        .collect()
}
