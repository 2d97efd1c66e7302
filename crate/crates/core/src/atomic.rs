//! Atomic (phonon-free) reference model: the closed-form coherent fraction
//! and the pure-dephasing two-level realization used for dashed-line
//! comparisons.
//!
//! The closed form lives here as an independent oracle; the dynamical
//! variant is deliberately a configuration of the full machinery (zero
//! phonon coupling plus an explicit dephasing rate), not a separate code
//! path.

use num_complex::Complex64 as C64;

use crate::correlations::{g1_opt, uniform_grid, CorrelationTrace};
use crate::dynamics::{build_liouvillian, EmRates, GeneratorOptions, Propagator};
use crate::error::{ModelError, Result};
use crate::phonon::PhononTables;
use crate::spectra::{compute_spectrum, SpectrumResult};
use crate::units::{DriveParams, NumericsParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicParams {
    /// Lifetime T1, ps.
    pub t1: f64,
    /// Coherence time T2, ps.
    pub t2: f64,
    /// Bare Rabi frequency, ps^-1.
    pub omega: f64,
    /// Laser-exciton detuning, ps^-1.
    pub delta_lx: f64,
}

impl AtomicParams {
    pub fn new(t1: f64, t2: f64, omega: f64, delta_lx: f64) -> Result<Self> {
        if !(t1 > 0.0) {
            return Err(ModelError::invalid("atomic.t1", "t1 must be positive"));
        }
        if !(t2 > 0.0) {
            return Err(ModelError::invalid("atomic.t2", "t2 must be positive"));
        }
        if t2 > 2.0 * t1 * (1.0 + 1e-12) {
            return Err(ModelError::invalid(
                "atomic.t2",
                "t2 must not exceed 2 t1",
            ));
        }
        Ok(AtomicParams {
            t1,
            t2,
            omega,
            delta_lx,
        })
    }

    /// Pure-dephasing rate 1/t2 - 1/(2 t1) implied by the coherence times.
    pub fn pure_dephasing(&self) -> f64 {
        (1.0 / self.t2 - 0.5 / self.t1).max(0.0)
    }
}

/// Generalized saturation parameter Omega^2 T1 T2 / (1 + Delta^2 T2^2).
pub fn saturation(p: &AtomicParams) -> f64 {
    p.omega * p.omega * p.t1 * p.t2 / (1.0 + p.delta_lx * p.delta_lx * p.t2 * p.t2)
}

/// Closed-form coherent fraction (T2 / 2 T1) / (1 + S).
pub fn coherent_fraction_atomic(p: &AtomicParams) -> f64 {
    0.5 * p.t2 / p.t1 / (1.0 + saturation(p))
}

/// Run the full machinery with zero phonon coupling, an emission rate 1/t1
/// and the explicit dephasing rate implied by t2.
pub fn atomic_g1_and_spectrum(
    p: &AtomicParams,
    numerics: &NumericsParams,
) -> Result<(CorrelationTrace, SpectrumResult)> {
    let tables = PhononTables::trivial();
    let gamma_p = 1.0 / p.t1;
    let em = EmRates {
        gamma_p,
        lamb_shift: 0.0,
        gamma_complex: C64::new(gamma_p, 0.0),
    };
    let drive = DriveParams {
        omega: p.omega,
        delta_lx: p.delta_lx,
    };
    let l = build_liouvillian(
        &tables,
        &drive,
        &em,
        p.pure_dephasing(),
        &GeneratorOptions::default(),
    )?;
    let prop = Propagator::new(&l)?;
    let ss = prop.steady_state(1e-9)?;
    let taus = uniform_grid(numerics.tau_max, numerics.dtau);
    let trace = g1_opt(&prop, &ss, &taus)?;
    let spectrum = compute_spectrum(&trace, &tables, numerics.fft_size)?;
    Ok((trace, spectrum))
}
