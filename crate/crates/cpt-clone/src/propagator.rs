//! Coupled paraxial propagation of the probe and control envelopes through
//! the medium by a split-operator spectral method.
//!
//! Per z-step the evolution splits into an exact spectral diffraction flow
//! exp(-i (kx^2+ky^2) dz / 2k) per field and a pointwise medium flow
//! g <- g exp(i c31 dz), G <- G exp(i c32 dz) with the local susceptibilities
//! of [`crate::medium`]. Compositions: second-order Strang, or the standard
//! triple-coefficient fourth-order composition of Strang sub-steps.

use crate::fft2::Fft2;
use crate::field::ComplexField;
use crate::grid::TransverseGrid;
use crate::medium::{MediumParams, MediumResponse};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropagateError {
    #[error("probe and control must share one grid")]
    GridMismatch,
    #[error("z_end {z_end} is behind the current position {z}")]
    BackwardRun { z: f64, z_end: f64 },
    #[error("dz must be > 0, got {0}")]
    BadStep(f64),
    #[error("non-finite {field} value at flat index {index} after step to z = {z} cm")]
    NonFinite {
        field: &'static str,
        index: usize,
        z: f64,
    },
    #[error("absorber spec invalid: {0}")]
    BadAbsorber(String),
}

/// Splitting scheme for one z-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// D(h/2) M(h) D(h/2); global error O(h^2).
    Strang2,
    /// Triple-coefficient composition of Strang sub-steps with
    /// w1 = 1/(2 - 2^(1/3)), w0 = 1 - 2 w1; global error O(h^4).
    Yoshida4,
}

/// How the medium sub-step treats the field dependence of chi over dz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearMode {
    /// chi frozen at the step's initial intensities (exact exponential map).
    Frozen,
    /// chi re-evaluated at the midpoint intensities, iterated to a fixed
    /// point; self-adjoint, restores second-order accuracy of the coupling.
    PredictorCorrector,
}

/// Super-Gaussian edge absorber: amplitude mask exp(-strength * u^4) where u
/// ramps 0 -> 1 across the outer `width_frac` of each transverse axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorberSpec {
    pub width_frac: f64,
    pub strength: f64,
}

impl Default for AbsorberSpec {
    fn default() -> Self {
        Self {
            width_frac: 0.1,
            strength: 46.0, // edge transmission e^-46 ~ 1e-20
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    /// Step length (cm).
    pub dz: f64,
    pub scheme: Scheme,
    pub nonlinear: NonlinearMode,
    /// None disables the boundary absorber (conservation tests).
    pub absorber: Option<AbsorberSpec>,
}

impl StepConfig {
    pub fn new(dz: f64) -> Self {
        Self {
            dz,
            scheme: Scheme::Strang2,
            nonlinear: NonlinearMode::PredictorCorrector,
            absorber: Some(AbsorberSpec::default()),
        }
    }
}

/// Probe and control envelopes on a shared grid at position z.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub probe: ComplexField,
    pub control: ComplexField,
    pub z: f64,
}

impl FieldState {
    pub fn new(probe: ComplexField, control: ComplexField, z: f64) -> Result<Self, PropagateError> {
        if probe.grid() != control.grid() {
            return Err(PropagateError::GridMismatch);
        }
        Ok(Self { probe, control, z })
    }

    pub fn grid(&self) -> &TransverseGrid {
        self.probe.grid()
    }
}

/// Positions (cm) at which state copies are recorded during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotPlan {
    None,
    /// Uniform interval starting at the initial z (interval in cm).
    Every(f64),
    /// Explicit absolute positions.
    At(Vec<f64>),
}

/// A recorded state copy; `requested_z` is the plan position, the state
/// carries the z of the nearest completed step.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested_z: f64,
    pub state: FieldState,
}

/// Split-step integrator bound to one grid and parameter set. Reusable
/// across steps; owns the FFT plans and the absorber mask.
pub struct Propagator {
    grid: TransverseGrid,
    response: MediumResponse,
    medium_active: bool,
    k1: f64,
    k2: f64,
    cfg: StepConfig,
    fft: Fft2,
    mask: Option<Vec<f64>>,
    kx2: Vec<f64>,
    ky2: Vec<f64>,
}

const YOSHIDA_W1: f64 = 1.351207191959657634; // 1 / (2 - 2^(1/3))
const YOSHIDA_W0: f64 = 1.0 - 2.0 * YOSHIDA_W1;

impl Propagator {
    pub fn new(
        grid: TransverseGrid,
        params: &MediumParams,
        cfg: StepConfig,
    ) -> Result<Self, PropagateError> {
        if !(cfg.dz > 0.0) || !cfg.dz.is_finite() {
            return Err(PropagateError::BadStep(cfg.dz));
        }
        let mask = match cfg.absorber {
            None => None,
            Some(a) => Some(absorber_mask(grid, a)?),
        };
        Ok(Self {
            grid,
            response: params.response(),
            medium_active: params.kappa1 > 0.0 || params.kappa2 > 0.0,
            k1: params.k1(),
            k2: params.k2(),
            cfg,
            fft: Fft2::new(grid.nx(), grid.ny()),
            mask,
            kx2: grid.kxs().iter().map(|k| k * k).collect(),
            ky2: grid.kys().iter().map(|k| k * k).collect(),
        })
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    /// One full step of length `h` (normally cfg.dz; the final step of a run
    /// may be shorter). Advances state.z by h and applies the absorber mask.
    pub fn step(&mut self, state: &mut FieldState, h: f64) -> Result<(), PropagateError> {
        match self.cfg.scheme {
            Scheme::Strang2 => self.strang_core(state, h),
            Scheme::Yoshida4 => {
                self.strang_core(state, YOSHIDA_W1 * h);
                self.strang_core(state, YOSHIDA_W0 * h);
                self.strang_core(state, YOSHIDA_W1 * h);
            }
        }
        if let Some(mask) = &self.mask {
            apply_mask(&mut state.probe, mask);
            apply_mask(&mut state.control, mask);
        }
        state.z += h;
        self.check_finite(state)?;
        Ok(())
    }

    fn strang_core(&mut self, state: &mut FieldState, h: f64) {
        self.diffract(&mut state.probe, self.k1, 0.5 * h);
        self.diffract(&mut state.control, self.k2, 0.5 * h);
        if self.medium_active {
            medium_kick(
                &self.response,
                self.cfg.nonlinear,
                h,
                state.probe.values_mut(),
                state.control.values_mut(),
            );
        }
        self.diffract(&mut state.probe, self.k1, 0.5 * h);
        self.diffract(&mut state.control, self.k2, 0.5 * h);
    }

    fn diffract(&mut self, field: &mut ComplexField, k: f64, h: f64) {
        let coef = -h / (2.0 * k);
        let fx: Vec<Complex64> = self
            .kx2
            .iter()
            .map(|k2| Complex64::from_polar(1.0, coef * k2))
            .collect();
        let fy: Vec<Complex64> = self
            .ky2
            .iter()
            .map(|k2| Complex64::from_polar(1.0, coef * k2))
            .collect();
        self.fft
            .apply_separable_spectral(field.values_mut(), &fx, &fy);
    }

    fn check_finite(&self, state: &FieldState) -> Result<(), PropagateError> {
        for (name, field) in [("probe", &state.probe), ("control", &state.control)] {
            if let Err(crate::field::FieldError::NonFinite(index)) = field.check_finite() {
                return Err(PropagateError::NonFinite {
                    field: name,
                    index,
                    z: state.z,
                });
            }
        }
        Ok(())
    }

    /// Integrate to `z_end`, recording snapshots per `plan` (nearest-step
    /// policy; the final step is shortened to land on z_end exactly).
    pub fn propagate(
        &mut self,
        state0: &FieldState,
        z_end: f64,
        plan: &SnapshotPlan,
    ) -> Result<(FieldState, Vec<Snapshot>), PropagateError> {
        let z0 = state0.z;
        if z_end < z0 {
            return Err(PropagateError::BackwardRun { z: z0, z_end });
        }
        let span = z_end - z0;
        let dz = self.cfg.dz;
        // number of steps; the last one lands exactly on z_end
        let n_steps = if span == 0.0 {
            0
        } else {
            let m = (span / dz + 1e-9).floor() as usize;
            if span - m as f64 * dz > 1e-9 * dz {
                m + 1
            } else {
                m.max(1)
            }
        };

        // snapshot plan -> step indices (nearest step)
        let targets: Vec<f64> = match plan {
            SnapshotPlan::None => Vec::new(),
            SnapshotPlan::At(list) => list.clone(),
            SnapshotPlan::Every(interval) => {
                if *interval <= 0.0 {
                    Vec::new()
                } else {
                    let mut v = Vec::new();
                    let mut z = z0;
                    while z <= z_end + 1e-12 * dz {
                        v.push(z.min(z_end));
                        z += interval;
                    }
                    v
                }
            }
        };
        let mut by_step: Vec<(usize, f64)> = targets
            .iter()
            .map(|&zt| {
                let k = ((zt - z0) / dz).round().max(0.0) as usize;
                (k.min(n_steps), zt)
            })
            .collect();
        by_step.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut snapshots = Vec::new();
        let mut record = |k: usize, state: &FieldState, out: &mut Vec<Snapshot>| {
            for (ks, zt) in &by_step {
                if *ks == k {
                    out.push(Snapshot {
                        requested_z: *zt,
                        state: state.clone(),
                    });
                }
            }
        };

        let mut state = state0.clone();
        record(0, &state, &mut snapshots);
        for k in 1..=n_steps {
            let z_next = if k == n_steps { z_end } else { z0 + k as f64 * dz };
            let h = z_next - state.z;
            self.step(&mut state, h)?;
            state.z = z_next; // pin against float drift
            record(k, &state, &mut snapshots);
        }
        Ok((state, snapshots))
    }
}

/// Pointwise medium flow over one sub-step of length h.
fn medium_kick(
    response: &MediumResponse,
    mode: NonlinearMode,
    h: f64,
    probe: &mut [Complex64],
    control: &mut [Complex64],
) {
    let chunk = 4096;
    probe
        .par_chunks_mut(chunk)
        .zip(control.par_chunks_mut(chunk))
        .for_each(|(gs, bigs)| {
            for (g, big_g) in gs.iter_mut().zip(bigs.iter_mut()) {
                let g2 = g.norm_sqr();
                let big_g2 = big_g.norm_sqr();
                if g2 + big_g2 == 0.0 {
                    continue; // vacuum point
                }
                let (mut c31, mut c32) = response.eval(g2, big_g2);
                if mode == NonlinearMode::PredictorCorrector {
                    // fixed point of c = chi(intensities at midpoint under c)
                    for _ in 0..8 {
                        let g2_mid = g2 * (-c31.im * h).exp();
                        let big_g2_mid = big_g2 * (-c32.im * h).exp();
                        let (n31, n32) = response.eval(g2_mid, big_g2_mid);
                        let delta =
                            (n31 - c31).norm_sqr().max((n32 - c32).norm_sqr());
                        let scale = c31.norm_sqr().max(c32.norm_sqr()).max(1e-300);
                        c31 = n31;
                        c32 = n32;
                        if delta <= 1e-26 * scale {
                            break;
                        }
                    }
                }
                *g *= Complex64::from_polar((-c31.im * h).exp(), c31.re * h);
                *big_g *= Complex64::from_polar((-c32.im * h).exp(), c32.re * h);
            }
        });
}

fn apply_mask(field: &mut ComplexField, mask: &[f64]) {
    field
        .values_mut()
        .par_iter_mut()
        .zip(mask.par_iter())
        .for_each(|(v, m)| *v *= *m);
}

fn absorber_mask(grid: TransverseGrid, spec: AbsorberSpec) -> Result<Vec<f64>, PropagateError> {
    if !(0.0..=0.5).contains(&spec.width_frac) || !spec.width_frac.is_finite() {
        return Err(PropagateError::BadAbsorber(format!(
            "width_frac {} outside [0, 0.5]",
            spec.width_frac
        )));
    }
    if !(spec.strength >= 0.0) {
        return Err(PropagateError::BadAbsorber(format!(
            "strength {} must be >= 0",
            spec.strength
        )));
    }
    let edge = |t: f64, half: f64| -> f64 {
        // t: |coordinate|; ramp over the outer width_frac of the half-extent
        let start = half * (1.0 - 2.0 * spec.width_frac);
        if t <= start || spec.width_frac == 0.0 {
            1.0
        } else {
            let u = ((t - start) / (half - start)).min(1.0);
            (-spec.strength * u.powi(4)).exp()
        }
    };
    let half_x = grid.nx() as f64 * grid.dx() / 2.0;
    let half_y = grid.ny() as f64 * grid.dy() / 2.0;
    let mut mask = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny() {
        let my = edge(grid.y(iy).abs(), half_y);
        for ix in 0..grid.nx() {
            mask.push(edge(grid.x(ix).abs(), half_x) * my);
        }
    }
    Ok(mask)
}

/// Pure single-field diffraction over dz (convenience wrapper; the
/// propagator uses the in-place fused path).
pub fn diffraction_step(field: &ComplexField, k: f64, dz: f64) -> ComplexField {
    let grid = *field.grid();
    let mut fft = Fft2::new(grid.nx(), grid.ny());
    let coef = -dz / (2.0 * k);
    let fx: Vec<Complex64> = grid
        .kxs()
        .iter()
        .map(|kx| Complex64::from_polar(1.0, coef * kx * kx))
        .collect();
    let fy: Vec<Complex64> = grid
        .kys()
        .iter()
        .map(|ky| Complex64::from_polar(1.0, coef * ky * ky))
        .collect();
    let mut out = field.clone();
    fft.apply_separable_spectral(out.values_mut(), &fx, &fy);
    out
}

/// Pure medium sub-step over dz (convenience wrapper).
pub fn medium_step(
    state: &FieldState,
    params: &MediumParams,
    dz: f64,
    mode: NonlinearMode,
) -> FieldState {
    let mut out = state.clone();
    medium_kick(
        &params.response(),
        mode,
        dz,
        out.probe.values_mut(),
        out.control.values_mut(),
    );
    out.z += dz;
    out
}
