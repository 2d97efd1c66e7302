//! End-to-end evaluation of one parameter point: tables, generator, steady
//! state, correlation traces, spectra, powers and fractions. Sweep drivers
//! and the command-line scenarios are thin layers over this.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::correlations::{
    fringe_contrast, g1_opt, polaron_g1, uniform_grid, CorrelationTrace,
};
use crate::dynamics::{
    build_liouvillian, em_rates, EmRates, GeneratorOptions, PhononRates, Propagator,
};
use crate::error::Result;
use crate::filter::{detect_g1, FilterSpec};
use crate::phonon::PhononTables;
use crate::spectra::{compute_spectrum, filtered_powers, fractions, EmissionFractions, SpectrumResult};
use crate::units::{Diagnostic, DriveParams, Params, Validated};

/// Per-point evaluation switches.
#[derive(Debug, Clone, Copy)]
pub struct PointOptions {
    /// Apply the cavity filter to powers and fractions.
    pub filter_enabled: bool,
    /// Center the filter on the drive instead of the cavity's absolute
    /// frequency.
    pub filter_follows_laser: bool,
    /// Drive the coherent part with the bare Rabi frequency.
    pub bare_omega_coherent: bool,
    /// Also compute the time-domain cavity-filtered trace (the expensive
    /// part; only the fringe-contrast outputs need it).
    pub with_detected_trace: bool,
    /// Additional pure-dephasing rate, ps^-1.
    pub gamma_pd: f64,
}

impl Default for PointOptions {
    fn default() -> Self {
        PointOptions {
            filter_enabled: true,
            filter_follows_laser: false,
            bare_omega_coherent: false,
            with_detected_trace: false,
            gamma_pd: 0.0,
        }
    }
}

/// Everything computed at one drive point.
#[derive(Debug, Clone)]
pub struct PointEvaluation {
    pub drive: DriveParams,
    pub eta: f64,
    pub delta_tilde: f64,
    pub omega_r: f64,
    pub em: EmRates,
    pub phonon_rates: PhononRates,
    pub gamma_pd: f64,
    pub rho_xx: f64,
    pub rho_x0: C64,
    pub optical: CorrelationTrace,
    pub polaron: CorrelationTrace,
    pub detected: Option<CorrelationTrace>,
    pub spectrum: SpectrumResult,
    pub fractions: EmissionFractions,
    pub p_coh: f64,
    pub p_inc: f64,
    pub p_psb: f64,
    /// Saturation label of this drive from the closed atomic form.
    pub s_label: f64,
    /// Saturation the steady state actually exhibits,
    /// 2 rho_XX / (1 - 2 rho_XX).
    pub s_effective: f64,
    pub warnings: Vec<Diagnostic>,
}

impl PointEvaluation {
    pub fn p_tot(&self) -> f64 {
        self.p_coh + self.p_inc + self.p_psb
    }

    /// Fringe-contrast visibility of the detected trace.
    pub fn visibility(&self, epsilon: f64) -> Result<Vec<f64>> {
        let trace = self.detected.as_ref().unwrap_or(&self.polaron);
        fringe_contrast(trace, epsilon)
    }
}

/// Scenario-independent state: the phonon tables and cavity rates are
/// drive-independent and shared across sweep points.
pub struct Pipeline {
    pub params: Params,
    pub tables: PhononTables,
    pub em: EmRates,
    pub warnings: Vec<Diagnostic>,
}

impl Pipeline {
    pub fn new(validated: &Validated) -> Result<Self> {
        let params = validated.params;
        let tables = PhononTables::new(&params.phonon, &params.numerics)?;
        let em = em_rates(&tables, &params.cavity);
        let mut warnings = validated.warnings.clone();
        if params.numerics.tau_max < 10.0 / em.gamma_p {
            warnings.push(Diagnostic {
                field: "numerics.tau_max".into(),
                message: format!(
                    "tau_max = {:.0} ps is below ten radiative lifetimes \
                     ({:.0} ps); plateaus may not be resolved",
                    params.numerics.tau_max,
                    10.0 / em.gamma_p
                ),
            });
        }
        Ok(Pipeline {
            params,
            tables,
            em,
            warnings,
        })
    }

    /// Radiative lifetime 1/Gamma_P of this configuration.
    pub fn t1(&self) -> f64 {
        1.0 / self.em.gamma_p
    }

    /// Labeling coherence time, fixed at the transform limit 2 T1.
    pub fn t2(&self) -> f64 {
        2.0 * self.t1()
    }

    /// Dephasing-profile width: the configured value, or the emitter
    /// natural linewidth when left at zero.
    pub fn resolved_xi(&self) -> f64 {
        if self.params.noise.xi > 0.0 {
            self.params.noise.xi
        } else {
            self.em.gamma_p
        }
    }

    /// Saturation label of a drive, Omega^2 T1 T2 / (1 + Delta^2 T2^2).
    pub fn saturation_label(&self, omega: f64, delta_lx: f64) -> f64 {
        let (t1, t2) = (self.t1(), self.t2());
        omega * omega * t1 * t2 / (1.0 + delta_lx * delta_lx * t2 * t2)
    }

    /// Rabi frequency reproducing a requested saturation label.
    pub fn omega_for_saturation(&self, s: f64, delta_lx: f64) -> f64 {
        let (t1, t2) = (self.t1(), self.t2());
        (s * (1.0 + delta_lx * delta_lx * t2 * t2) / (t1 * t2)).sqrt()
    }

    pub fn filter_for(&self, drive: &DriveParams, follows_laser: bool) -> FilterSpec {
        FilterSpec::from_params(&self.params.cavity, drive, follows_laser)
    }

    pub fn evaluate(&self, drive: DriveParams, opts: &PointOptions) -> Result<PointEvaluation> {
        let gen_opts = GeneratorOptions {
            bare_omega_coherent: opts.bare_omega_coherent,
        };
        let l = build_liouvillian(&self.tables, &drive, &self.em, opts.gamma_pd, &gen_opts)?;
        let prop = Propagator::new(&l)?;
        let rho_ss = prop.steady_state(self.params.numerics.ss_tol)?;

        let taus = uniform_grid(self.params.numerics.tau_max, self.params.numerics.dtau);
        let optical = g1_opt(&prop, &rho_ss, &taus)?;
        let polaron = polaron_g1(&optical, &self.tables)?;
        let spectrum = compute_spectrum(&optical, &self.tables, self.params.numerics.fft_size)?;

        let filter = self.filter_for(&drive, opts.filter_follows_laser);
        let active = opts.filter_enabled.then_some(&filter);
        let (p_coh, p_inc, p_psb) = filtered_powers(&spectrum, active);
        let fr = fractions(&spectrum, active)?;

        let detected = if opts.with_detected_trace {
            Some(detect_g1(&polaron, &filter)?)
        } else {
            None
        };

        let mut warnings = Vec::new();
        if spectrum.leakage_warning {
            warnings.push(Diagnostic {
                field: "numerics.fft_size".into(),
                message: "spectral content at the grid edge exceeds 1% of the peak".into(),
            });
        }
        if !prop.eig_ok {
            warnings.push(Diagnostic {
                field: "liouvillian".into(),
                message: "defective eigenbasis; used matrix-exponential propagation".into(),
            });
        }

        let rho_xx = rho_ss.excited_population();
        let s_effective = if rho_xx < 0.5 {
            2.0 * rho_xx / (1.0 - 2.0 * rho_xx)
        } else {
            f64::INFINITY
        };
        let mut spectrum = spectrum;
        spectrum.filter_applied = opts.filter_enabled;

        Ok(PointEvaluation {
            drive,
            eta: l.eta,
            delta_tilde: l.delta_tilde,
            omega_r: l.omega_r,
            em: self.em,
            phonon_rates: l.phonon_rates,
            gamma_pd: opts.gamma_pd,
            rho_xx,
            rho_x0: rho_ss.coherence_x0(),
            optical,
            polaron,
            detected,
            spectrum,
            fractions: fr,
            p_coh,
            p_inc,
            p_psb,
            s_label: self.saturation_label(drive.omega, drive.delta_lx),
            s_effective,
            warnings,
        })
    }
}

/// Scalar diagnostics of one evaluated point, for the verbose JSON dump.
#[derive(Debug, Clone, Serialize)]
pub struct PointDiagnostics {
    pub omega: f64,
    pub delta_lx: f64,
    pub eta: f64,
    pub delta_tilde: f64,
    pub omega_r: f64,
    pub gamma_p: f64,
    pub lamb_shift: f64,
    pub gamma_pd: f64,
    pub b_factor: f64,
    pub polaron_shift: f64,
    pub rho_xx: f64,
    pub s_label: f64,
    pub s_effective: f64,
    pub f_cs: f64,
    pub f_inc: f64,
    pub f_psb: f64,
    pub rates: PhononRates,
}

impl PointDiagnostics {
    pub fn from_point(p: &PointEvaluation, tables: &PhononTables) -> Self {
        PointDiagnostics {
            omega: p.drive.omega,
            delta_lx: p.drive.delta_lx,
            eta: p.eta,
            delta_tilde: p.delta_tilde,
            omega_r: p.omega_r,
            gamma_p: p.em.gamma_p,
            lamb_shift: p.em.lamb_shift,
            gamma_pd: p.gamma_pd,
            b_factor: tables.b_factor,
            polaron_shift: tables.polaron_shift,
            rho_xx: p.rho_xx,
            s_label: p.s_label,
            s_effective: p.s_effective,
            f_cs: p.fractions.f_cs,
            f_inc: p.fractions.f_inc,
            f_psb: p.fractions.f_psb,
            rates: p.phonon_rates,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::validate_params;

    #[test]
    fn saturation_mapping_round_trips() {
        let v = validate_params(Params::default()).unwrap();
        let pipe = Pipeline::new(&v).unwrap();
        for s in [0.01, 0.25, 4.0] {
            for delta in [0.0, 0.3] {
                let omega = pipe.omega_for_saturation(s, delta);
                let back = pipe.saturation_label(omega, delta);
                assert!((back - s).abs() < 1e-12 * s.max(1.0));
            }
        }
    }

    #[test]
    fn point_evaluation_is_self_consistent() {
        let v = validate_params(Params::default()).unwrap();
        let pipe = Pipeline::new(&v).unwrap();
        let omega = pipe.omega_for_saturation(0.25, 0.0);
        let point = pipe
            .evaluate(
                DriveParams {
                    omega,
                    delta_lx: 0.0,
                },
                &PointOptions::default(),
            )
            .unwrap();
        assert!((point.fractions.sum() - 1.0).abs() < 1e-12);
        assert!(point.p_tot() > 0.0);
        // effective saturation reflects the renormalized drive
        assert!(point.s_effective < point.s_label);
        assert!(point.s_effective > 0.8 * point.s_label);
        // eta consistency
        let eta2 = point.delta_tilde.powi(2) + point.omega_r.powi(2);
        assert!((point.eta * point.eta - eta2).abs() < 1e-14);
    }

    #[test]
    fn detected_trace_plateau_matches_coherent_power_share() {
        let v = validate_params(Params::default()).unwrap();
        let pipe = Pipeline::new(&v).unwrap();
        let omega = pipe.omega_for_saturation(0.25, 0.0);
        let mut opts = PointOptions::default();
        opts.with_detected_trace = true;
        let point = pipe
            .evaluate(
                DriveParams {
                    omega,
                    delta_lx: 0.0,
                },
                &opts,
            )
            .unwrap();
        let detected = point.detected.as_ref().unwrap();
        let plateau = detected.abs_at(500.0) / detected.normalization;
        let f_cs = point.fractions.f_cs;
        assert!(
            (plateau - f_cs).abs() < 0.01,
            "plateau {plateau} vs f_cs {f_cs}"
        );
    }
}
