//! Physical constants, unit conversions and validated model parameters.
//!
//! Internal unit system: time in ps, angular frequencies and energies in
//! ps^-1 (hbar = 1 internally). Temperatures are stored in kelvin and
//! converted where needed. External energies quoted in meV/ueV are converted
//! at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Reduced Planck constant in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.6582119569;
/// Boltzmann constant in meV/K.
pub const KB_MEV_PER_K: f64 = 0.0861733;

/// Convert an energy in meV to an angular frequency in ps^-1.
pub fn mev_to_angfreq(e_mev: f64) -> f64 {
    e_mev / HBAR_MEV_PS
}

/// Convert an energy in ueV to an angular frequency in ps^-1.
pub fn uev_to_angfreq(e_uev: f64) -> f64 {
    mev_to_angfreq(1e-3 * e_uev)
}

/// Convert an angular frequency in ps^-1 to an energy in meV.
pub fn angfreq_to_mev(w: f64) -> f64 {
    w * HBAR_MEV_PS
}

/// Thermal frequency k_B T / hbar in ps^-1; appears as k_B T in coth
/// arguments.
pub fn thermal_freq(t_kelvin: f64) -> f64 {
    KB_MEV_PER_K * t_kelvin / HBAR_MEV_PS
}

/// Vibrational environment: super-Ohmic deformation-potential coupling with
/// a Gaussian cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononParams {
    /// Deformation-potential coupling strength, ps^2.
    pub alpha: f64,
    /// Phonon cutoff frequency, ps^-1.
    pub nu_c: f64,
    /// Bath temperature, K.
    pub temperature: f64,
}

impl Default for PhononParams {
    fn default() -> Self {
        PhononParams {
            alpha: 0.0447,
            nu_c: 1.28,
            temperature: 4.2,
        }
    }
}

/// Continuous-wave drive. `delta_lx` is the laser-exciton detuning
/// omega_L - omega_X, referenced to the observed (polaron-shifted)
/// transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Bare Rabi frequency, ps^-1.
    pub omega: f64,
    /// Laser-exciton detuning omega_L - omega_X, ps^-1.
    pub delta_lx: f64,
}

impl Default for DriveParams {
    fn default() -> Self {
        DriveParams {
            omega: uev_to_angfreq(25.6),
            delta_lx: 0.0,
        }
    }
}

/// Low-Q cavity parameters. `delta_xc` is the cavity frequency minus the
/// bare exciton frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Light-matter coupling, ps^-1.
    pub g: f64,
    /// Cavity linewidth, ps^-1.
    pub kappa: f64,
    /// Exciton-cavity detuning omega_C - omega_X, ps^-1.
    pub delta_xc: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            g: uev_to_angfreq(135.0),
            kappa: mev_to_angfreq(2.51),
            delta_xc: 0.0,
        }
    }
}

/// Phenomenological noise and detection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Asymptotic pure-dephasing rate of the detuning-dependent channel,
    /// ps^-1.
    pub gamma_max: f64,
    /// Lorentzian width of gamma(delta_lx), ps^-1. Zero means "resolve to
    /// the emitter natural linewidth" once the Purcell rate is known.
    pub xi: f64,
    /// Gaussian spectral-wandering FWHM, ps^-1.
    pub wandering_fwhm: f64,
    /// Interferometer contrast deficit epsilon (dimensionless).
    pub epsilon: f64,
    /// Laser linewidth mu = 1/tau_L, ps^-1.
    pub laser_mu: f64,
    /// Spectrometer temporal response, ps. Zero disables the instrument
    /// envelope.
    pub instrument_dtau: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            gamma_max: uev_to_angfreq(21.0),
            xi: 0.0,
            wandering_fwhm: uev_to_angfreq(66.0),
            epsilon: 0.02,
            laser_mu: 0.0,
            instrument_dtau: 0.0,
        }
    }
}

/// Discretization controls for quadrature, time grids and transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericsParams {
    /// Frequency-integral cutoff as a multiple of nu_c.
    pub nu_max_factor: f64,
    /// Number of quadrature nodes for frequency integrals.
    pub quad_points: usize,
    /// Extent of the correlation time grid, ps.
    pub tau_max: f64,
    /// Step of the correlation time grid, ps.
    pub dtau: f64,
    /// Zero-padded transform length (power of two).
    pub fft_size: usize,
    /// Tolerance used to identify the steady-state eigenvalue.
    pub ss_tol: f64,
}

impl Default for NumericsParams {
    fn default() -> Self {
        NumericsParams {
            nu_max_factor: 8.0,
            quad_points: 4001,
            tau_max: 600.0,
            dtau: 0.02,
            fft_size: 1 << 17,
            ss_tol: 1e-6,
        }
    }
}

/// Complete parameter bundle for one model configuration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    pub phonon: PhononParams,
    pub drive: DriveParams,
    pub cavity: CavityParams,
    pub noise: NoiseParams,
    pub numerics: NumericsParams,
}

/// A soft-validity diagnostic attached by `validate_params`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

/// Parameter bundle that passed the hard invariants, with any soft-validity
/// warnings attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub params: Params,
    pub warnings: Vec<Diagnostic>,
}

fn require(ok: bool, field: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(ModelError::invalid(field, message))
    }
}

/// Check all hard invariants and attach soft-validity warnings.
///
/// Validation is idempotent: re-validating the contained `params` yields the
/// same bundle.
pub fn validate_params(params: Params) -> Result<Validated> {
    let p = &params.phonon;
    require(p.alpha >= 0.0, "phonon.alpha", "alpha must be non-negative")?;
    require(p.nu_c > 0.0, "phonon.nu_c", "nu_c must be positive")?;
    require(
        p.temperature >= 0.0,
        "phonon.temperature",
        "temperature must be non-negative",
    )?;

    let d = &params.drive;
    require(d.omega >= 0.0, "drive.omega", "omega must be non-negative")?;
    require(d.omega.is_finite(), "drive.omega", "omega must be finite")?;
    require(
        d.delta_lx.is_finite(),
        "drive.delta_lx",
        "delta_lx must be finite",
    )?;

    let c = &params.cavity;
    require(c.g > 0.0, "cavity.g", "g must be positive")?;
    require(c.kappa > 0.0, "cavity.kappa", "kappa must be positive")?;

    let n = &params.noise;
    require(
        n.gamma_max >= 0.0,
        "noise.gamma_max",
        "gamma_max must be non-negative",
    )?;
    require(n.xi >= 0.0, "noise.xi", "xi must be non-negative")?;
    require(
        n.wandering_fwhm >= 0.0,
        "noise.wandering_fwhm",
        "wandering_fwhm must be non-negative",
    )?;
    require(
        n.epsilon >= 0.0 && n.epsilon < 1.0,
        "noise.epsilon",
        "epsilon must lie in [0, 1)",
    )?;
    require(
        n.laser_mu >= 0.0,
        "noise.laser_mu",
        "laser_mu must be non-negative",
    )?;
    require(
        n.instrument_dtau >= 0.0,
        "noise.instrument_dtau",
        "instrument_dtau must be non-negative",
    )?;

    let m = &params.numerics;
    require(
        m.nu_max_factor > 0.0,
        "numerics.nu_max_factor",
        "nu_max_factor must be positive",
    )?;
    require(
        m.quad_points >= 11,
        "numerics.quad_points",
        "quad_points must be at least 11",
    )?;
    require(m.dtau > 0.0, "numerics.dtau", "dtau must be positive")?;
    require(
        m.tau_max > m.dtau,
        "numerics.tau_max",
        "tau_max must exceed dtau",
    )?;
    require(
        m.fft_size.is_power_of_two(),
        "numerics.fft_size",
        "fft_size must be a power of two",
    )?;
    require(m.ss_tol > 0.0, "numerics.ss_tol", "ss_tol must be positive")?;
    let n_tau = (m.tau_max / m.dtau).round() as usize + 1;
    require(
        m.fft_size >= 2 * n_tau,
        "numerics.fft_size",
        "fft_size must be at least twice the number of tau samples",
    )?;

    let mut warnings = Vec::new();
    if c.kappa < 4.0 * c.g {
        warnings.push(Diagnostic {
            field: "cavity.kappa".into(),
            message: format!(
                "kappa = {:.4} ps^-1 is below 4g = {:.4} ps^-1; the adiabatic \
                 low-Q cavity treatment degrades outside kappa >> g",
                c.kappa,
                4.0 * c.g
            ),
        });
    }
    let fastest = params.phonon.nu_c.max(c.kappa);
    if m.dtau > 0.1 / fastest {
        warnings.push(Diagnostic {
            field: "numerics.dtau".into(),
            message: format!(
                "dtau = {:.4} ps does not resolve the fastest scale \
                 ({:.4} ps^-1); expect discretization bias",
                m.dtau, fastest
            ),
        });
    }

    Ok(Validated { params, warnings })
}
