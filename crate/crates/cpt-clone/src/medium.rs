//! Steady-state response of the three-level Lambda medium.
//!
//! Two co-propagating fields (probe on |1>-|3>, control on |2>-|3>) drive the
//! atoms into a coherent-population-trapping steady state. This module
//! computes the optical coherences sigma_31, sigma_32 and the scaled
//! susceptibilities for arbitrary field strengths, in two independent ways:
//!
//! * closed form: exact rational functions of |g|^2, |G|^2 and the rates,
//!   evaluated through [`MediumResponse`];
//! * [`steady_state_oracle`]: a dense linear solve of the full density-matrix
//!   steady state, used to cross-check the closed form.
//!
//! All rates, detunings and Rabi amplitudes are expressed in units of the
//! common branch decay rate gamma; lengths are in cm.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;
use thiserror::Error;

/// Residual bound enforced on every steady-state rate equation by the oracle.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MediumError {
    #[error("invalid medium parameter: {0}")]
    InvalidParams(String),
    #[error("both fields vanish: no-field point has no atomic response")]
    NoField,
    #[error("non-finite Rabi amplitude")]
    NonFiniteField,
    #[error("steady state is not unique for these parameters (g = G = 0 with Gamma = 0)")]
    NonUniqueSteadyState,
    #[error("steady-state solve left residual {residual:.3e} above {tol:.1e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
}

/// Atomic and medium constants. Rates in units of gamma, lengths in cm,
/// density in atoms/cm^3, couplings kappa_j in 1/cm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Common branch decay rate gamma1 = gamma2 = gamma. Unit rate; kept as a
    /// field so the closed forms stay dimensionally honest.
    pub gamma: f64,
    /// Total ground-state coherence decay Gamma (pure dephasing).
    pub big_gamma: f64,
    /// Probe detuning Delta1 = omega_31 - omega_1.
    pub delta1: f64,
    /// Control detuning Delta2 = omega_32 - omega_2.
    pub delta2: f64,
    /// Atomic number density N.
    pub density: f64,
    /// Probe wavelength (cm).
    pub lambda1: f64,
    /// Control wavelength (cm).
    pub lambda2: f64,
    /// Propagation coupling per length for the probe (1/cm).
    pub kappa1: f64,
    /// Propagation coupling per length for the control (1/cm).
    pub kappa2: f64,
}

/// Default coupling per length: kappa = 3 N lambda^2 / (4 pi).
///
/// Follows from folding the dipole moment and the absolute decay rate into
/// the radiative-branch relation d^2 = 3 hbar gamma / (2 k^3).
pub fn default_kappa(density_per_cm3: f64, lambda_cm: f64) -> f64 {
    3.0 * density_per_cm3 * lambda_cm * lambda_cm / (4.0 * std::f64::consts::PI)
}

impl MediumParams {
    /// Parameters with the default kappa calibration and gamma = 1.
    pub fn new(
        big_gamma: f64,
        delta1: f64,
        delta2: f64,
        density: f64,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self, MediumError> {
        Self {
            gamma: 1.0,
            big_gamma,
            delta1,
            delta2,
            density,
            lambda1,
            lambda2,
            kappa1: default_kappa(density, lambda1),
            kappa2: default_kappa(density, lambda2),
        }
        .validated()
    }

    /// Override the derived couplings (sensitivity studies).
    pub fn with_kappa(mut self, kappa1: f64, kappa2: f64) -> Result<Self, MediumError> {
        self.kappa1 = kappa1;
        self.kappa2 = kappa2;
        self.validated()
    }

    pub fn validated(self) -> Result<Self, MediumError> {
        fn check(ok: bool, msg: &str) -> Result<(), MediumError> {
            if ok {
                Ok(())
            } else {
                Err(MediumError::InvalidParams(msg.to_string()))
            }
        }
        check(self.gamma.is_finite() && self.gamma > 0.0, "gamma must be > 0")?;
        check(
            self.big_gamma.is_finite() && self.big_gamma >= 0.0,
            "big_gamma must be >= 0",
        )?;
        check(self.delta1.is_finite() && self.delta2.is_finite(), "detunings must be finite")?;
        check(self.density.is_finite() && self.density >= 0.0, "density must be >= 0")?;
        check(
            self.lambda1 > 0.0 && self.lambda2 > 0.0,
            "wavelengths must be > 0",
        )?;
        check(
            self.kappa1.is_finite() && self.kappa1 >= 0.0 && self.kappa2.is_finite() && self.kappa2 >= 0.0,
            "kappa must be >= 0",
        )?;
        Ok(self)
    }

    /// Probe wavenumber 2 pi / lambda1 (rad/cm).
    pub fn k1(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda1
    }

    /// Control wavenumber 2 pi / lambda2 (rad/cm).
    pub fn k2(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda2
    }

    /// Precompute the polynomial coefficients of the closed-form response.
    pub fn response(&self) -> MediumResponse {
        MediumResponse::new(self)
    }
}

/// Local Rabi amplitudes of the two fields at one point, in units of gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub probe: Complex64,
    pub control: Complex64,
}

impl FieldPoint {
    pub fn new(probe: Complex64, control: Complex64) -> Self {
        Self { probe, control }
    }

    pub fn is_finite(&self) -> bool {
        self.probe.re.is_finite()
            && self.probe.im.is_finite()
            && self.control.re.is_finite()
            && self.control.im.is_finite()
    }
}

/// Scaled complex susceptibilities c_3j = 2 pi k_j chi_3j (1/cm), ready for
/// the paraxial medium term dg/dz = i c31 g, dG/dz = i c32 G.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityPair {
    pub c31: Complex64,
    pub c32: Complex64,
    /// Both fields were exactly zero; the point is treated as vacuum.
    pub zero_field: bool,
}

/// Field-factored numerators and common denominator of the steady-state
/// coherences: sigma_31 = gamma * n31 * g / d, sigma_32 = gamma * n32 * G / d.
/// n31, n32 and d depend only on |g|^2, |G|^2 and the rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedNumerators {
    pub n31: Complex64,
    pub n32: Complex64,
    pub d: f64,
}

/// Closed-form response with all rate-dependent coefficients precomputed,
/// so per-grid-point evaluation is a short polynomial in (|g|^2, |G|^2).
///
/// The underlying expressions are the exact steady-state solution of the
/// Lambda-system density-matrix equations with gamma1 = gamma2 = gamma
/// (verified against [`steady_state_oracle`]); with delta = Delta2 - Delta1:
///
/// ```text
/// n31 = |G|^2 [ gamma(i gamma + D1)(Gamma^2 + delta^2)
///               + (gamma(i Gamma + delta) + Gamma(D1 + D2)) |g|^2
///               + gamma(i Gamma + delta) |G|^2 ]
/// n32 = |g|^2 [ gamma(i gamma + D2)(Gamma^2 + delta^2)
///               + gamma(i Gamma - delta) |g|^2
///               + (gamma(i Gamma - delta) + Gamma(D1 + D2)) |G|^2 ]
/// d   = gamma(|g|^6 + |G|^6) + 3(gamma + Gamma)(|g|^4 |G|^2 + |g|^2 |G|^4)
///       + 2 gamma (gamma Gamma + D1 delta) |G|^4
///       + 2 gamma (gamma Gamma - D2 delta) |g|^4
///       + ((gamma + Gamma) delta^2 + 4 Gamma D1 D2 + 4 gamma^2 Gamma
///          + 3 gamma Gamma^2) |g|^2 |G|^2
///       + gamma (gamma^2 + D1^2)(Gamma^2 + delta^2) |G|^2
///       + gamma (gamma^2 + D2^2)(Gamma^2 + delta^2) |g|^2
/// ```
#[derive(Debug, Clone, Copy)]
pub struct MediumResponse {
    // n31 = G2 * (a31 + b31 g2 + c31 G2); n32 = g2 * (a32 + b32 g2 + c32 G2)
    a31: Complex64,
    b31: Complex64,
    c31: Complex64,
    a32: Complex64,
    b32: Complex64,
    c32: Complex64,
    // d = cube (g2^3+G2^3) + quad (g2^2 G2 + g2 G2^2) + dg2 g2^2 + dgg g2 G2
    //     + dg_2 G2^2 + lin_g g2 + lin_gg G2
    cube: f64,
    quad: f64,
    sq_g2: f64,
    sq_big_g2: f64,
    cross: f64,
    lin_g2: f64,
    lin_big_g2: f64,
    // c_3j = scale_j * gamma * n3j / d
    scale1: f64,
    scale2: f64,
    gamma: f64,
}

impl MediumResponse {
    pub fn new(p: &MediumParams) -> Self {
        let i = Complex64::i();
        let (gam, big, d1, d2) = (p.gamma, p.big_gamma, p.delta1, p.delta2);
        let delta = d2 - d1;
        let raman = big * big + delta * delta;

        let a31 = gam * (i * gam + d1) * raman;
        let b31 = gam * (i * big + delta) + big * (d1 + d2);
        let c31 = gam * (i * big + delta);
        let a32 = gam * (i * gam + d2) * raman;
        let b32 = gam * (i * big - delta);
        let c32 = gam * (i * big - delta) + big * (d1 + d2);

        Self {
            a31,
            b31,
            c31,
            a32,
            b32,
            c32,
            cube: gam,
            quad: 3.0 * (gam + big),
            sq_big_g2: 2.0 * gam * (gam * big + d1 * delta),
            sq_g2: 2.0 * gam * (gam * big - d2 * delta),
            cross: (gam + big) * delta * delta
                + 4.0 * big * d1 * d2
                + 4.0 * gam * gam * big
                + 3.0 * gam * big * big,
            lin_big_g2: gam * (gam * gam + d1 * d1) * raman,
            lin_g2: gam * (gam * gam + d2 * d2) * raman,
            scale1: p.kappa1 * gam,
            scale2: p.kappa2 * gam,
            gamma: gam,
        }
    }

    /// Reduced numerators and denominator at intensities (|g|^2, |G|^2).
    pub fn reduced(&self, g2: f64, big_g2: f64) -> ReducedNumerators {
        let n31 = big_g2 * (self.a31 + self.b31 * g2 + self.c31 * big_g2);
        let n32 = g2 * (self.a32 + self.b32 * g2 + self.c32 * big_g2);
        let d = self.cube * (g2 * g2 * g2 + big_g2 * big_g2 * big_g2)
            + self.quad * g2 * big_g2 * (g2 + big_g2)
            + self.sq_g2 * g2 * g2
            + self.sq_big_g2 * big_g2 * big_g2
            + self.cross * g2 * big_g2
            + self.lin_g2 * g2
            + self.lin_big_g2 * big_g2;
        ReducedNumerators { n31, n32, d }
    }

    /// Scaled susceptibilities at intensities (|g|^2, |G|^2). Zero-field
    /// points evaluate to (0, 0); callers treating them as vacuum should
    /// consult the flag in [`susceptibility`].
    #[inline]
    pub fn eval(&self, g2: f64, big_g2: f64) -> (Complex64, Complex64) {
        if g2 + big_g2 == 0.0 {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let r = self.reduced(g2, big_g2);
        let inv_d = 1.0 / r.d;
        (
            r.n31 * (self.scale1 * self.gamma * inv_d),
            r.n32 * (self.scale2 * self.gamma * inv_d),
        )
    }
}

/// Field-factored closed-form numerators and denominator.
///
/// Returns an error only on the degenerate no-field input, where d = 0 and
/// the coherences vanish identically.
pub fn reduced_numerators(
    params: &MediumParams,
    g2: f64,
    big_g2: f64,
) -> Result<ReducedNumerators, MediumError> {
    if !(g2 >= 0.0 && big_g2 >= 0.0) || !g2.is_finite() || !big_g2.is_finite() {
        return Err(MediumError::InvalidParams(
            "field intensities must be finite and >= 0".into(),
        ));
    }
    if g2 + big_g2 == 0.0 {
        return Err(MediumError::NoField);
    }
    Ok(params.response().reduced(g2, big_g2))
}

/// Scaled susceptibility pair at one field point.
pub fn susceptibility(
    params: &MediumParams,
    f: &FieldPoint,
) -> Result<SusceptibilityPair, MediumError> {
    if !f.is_finite() {
        return Err(MediumError::NonFiniteField);
    }
    let g2 = f.probe.norm_sqr();
    let big_g2 = f.control.norm_sqr();
    if g2 + big_g2 == 0.0 {
        return Ok(SusceptibilityPair {
            c31: Complex64::new(0.0, 0.0),
            c32: Complex64::new(0.0, 0.0),
            zero_field: true,
        });
    }
    let (c31, c32) = params.response().eval(g2, big_g2);
    Ok(SusceptibilityPair {
        c31,
        c32,
        zero_field: false,
    })
}

/// Weak-probe c31: the closed form evaluated at |g| = 1e-8 gamma.
/// Test helper for comparing against the linear-response limit.
pub fn weak_probe_limit_check(
    params: &MediumParams,
    control: Complex64,
) -> Result<Complex64, MediumError> {
    if control.norm_sqr() == 0.0 {
        return Err(MediumError::NoField);
    }
    let g = 1e-8 * params.gamma;
    let pair = susceptibility(
        params,
        &FieldPoint::new(Complex64::new(g, 0.0), control),
    )?;
    Ok(pair.c31)
}

/// Steady-state density matrix of the Lambda system, states ordered
/// (|1>, |2>, |3>).
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateDM {
    sigma: Matrix3<Complex64>,
}

impl SteadyStateDM {
    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.sigma
    }

    pub fn population(&self, state: usize) -> f64 {
        self.sigma[(state, state)].re
    }

    /// Optical coherence sigma_31 = <3|sigma|1>.
    pub fn sigma31(&self) -> Complex64 {
        self.sigma[(2, 0)]
    }

    /// Optical coherence sigma_32 = <3|sigma|2>.
    pub fn sigma32(&self) -> Complex64 {
        self.sigma[(2, 1)]
    }

    /// Ground-state coherence sigma_21 = <2|sigma|1>.
    pub fn sigma21(&self) -> Complex64 {
        self.sigma[(1, 0)]
    }

    pub fn trace(&self) -> f64 {
        (self.sigma[(0, 0)] + self.sigma[(1, 1)] + self.sigma[(2, 2)]).re
    }

    /// Smallest eigenvalue; physical states satisfy >= -1e-12 numerically.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.sigma.symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Independent steady-state solve of the full density-matrix equations.
///
/// Sets all time derivatives to zero and solves the resulting 9x9 real
/// linear system (populations, Re/Im of the three coherences, trace) by LU
/// decomposition, then verifies every rate equation to [`ORACLE_RESIDUAL_TOL`].
pub fn steady_state_oracle(
    params: &MediumParams,
    f: &FieldPoint,
) -> Result<SteadyStateDM, MediumError> {
    if !f.is_finite() {
        return Err(MediumError::NonFiniteField);
    }
    if f.probe.norm_sqr() + f.control.norm_sqr() == 0.0 && params.big_gamma == 0.0 {
        return Err(MediumError::NonUniqueSteadyState);
    }

    let residuals = |v: &[f64; 9]| -> [f64; 9] {
        let i = Complex64::i();
        let (gam, big, d1, d2) = (params.gamma, params.big_gamma, params.delta1, params.delta2);
        let g = f.probe;
        let big_g = f.control;
        let s11 = Complex64::new(v[0], 0.0);
        let s22 = Complex64::new(v[1], 0.0);
        let s33 = Complex64::new(v[2], 0.0);
        let s31 = Complex64::new(v[3], v[4]);
        let s32 = Complex64::new(v[5], v[6]);
        let s21 = Complex64::new(v[7], v[8]);
        let (s13, s23, s12) = (s31.conj(), s32.conj(), s21.conj());

        let e33 = -4.0 * gam * s33 + i * big_g * s23 + i * g * s13
            - i * big_g.conj() * s32
            - i * g.conj() * s31;
        let e22 = 2.0 * gam * s33 + i * big_g.conj() * s32 - i * big_g * s23;
        let e32 = -(Complex64::new(gam, d2)) * s32 + i * g * s12 + i * big_g * (s22 - s33);
        let e31 = -(Complex64::new(gam, d1)) * s31 + i * big_g * s21 + i * g * (s11 - s33);
        let e21 = -(Complex64::new(big, -(d2 - d1))) * s21 + i * big_g.conj() * s31 - i * g * s23;
        let tr = s11 + s22 + s33 - Complex64::new(1.0, 0.0);

        [
            e33.re, e22.re, e31.re, e31.im, e32.re, e32.im, e21.re, e21.im, tr.re,
        ]
    };

    // Assemble the linear system column by column from the residual map.
    let r0 = residuals(&[0.0; 9]);
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for j in 0..9 {
        let mut e = [0.0; 9];
        e[j] = 1.0;
        let rj = residuals(&e);
        for i in 0..9 {
            a[(i, j)] = rj[i] - r0[i];
        }
    }
    let b = SVector::<f64, 9>::from_iterator(r0.iter().map(|x| -x));
    let lu = a.lu();
    let x = lu.solve(&b).ok_or(MediumError::NonUniqueSteadyState)?;

    let sol: [f64; 9] = std::array::from_fn(|i| x[i]);
    let res = residuals(&sol);
    // e11 follows from e22, e33 and trace conservation; include it anyway.
    let e11 = -res[0] - res[1];
    let worst = res
        .iter()
        .chain(std::iter::once(&e11))
        .fold(0.0f64, |m, r| m.max(r.abs()));
    if !worst.is_finite() || worst > ORACLE_RESIDUAL_TOL {
        if !worst.is_finite() {
            return Err(MediumError::NonUniqueSteadyState);
        }
        return Err(MediumError::ResidualTooLarge {
            residual: worst,
            tol: ORACLE_RESIDUAL_TOL,
        });
    }

    let s31 = Complex64::new(sol[3], sol[4]);
    let s32 = Complex64::new(sol[5], sol[6]);
    let s21 = Complex64::new(sol[7], sol[8]);
    let sigma = Matrix3::new(
        Complex64::new(sol[0], 0.0),
        s21.conj(),
        s31.conj(),
        s21,
        Complex64::new(sol[1], 0.0),
        s32.conj(),
        s31,
        s32,
        Complex64::new(sol[2], 0.0),
    );
    Ok(SteadyStateDM { sigma })
}
