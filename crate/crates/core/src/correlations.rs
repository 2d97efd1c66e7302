//! First-order correlation functions by the quantum regression theorem,
//! the polaron factorization, coherent/incoherent splitting, fringe
//! contrast, and the instrument-response envelope.
//!
//! Traces are stored on a uniform delay grid starting at tau = 0. The
//! sampled `values` always contain the full correlation including any
//! non-decaying plateau; `coherent_weight` carries the plateau value
//! alongside so spectra can place an exact delta line. Negative delays are
//! never stored: every consumer extends by g(-tau) = conj(g(tau)).

use num_complex::Complex64 as C64;

use crate::dynamics::{sigma, DensityMatrix2, Propagator};
use crate::error::{ModelError, Result};
use crate::phonon::PhononTables;
use crate::units::NoiseParams;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrace {
    /// Uniform delay grid starting at zero, ps.
    pub taus: Vec<f64>,
    /// Sampled g(tau), plateau included.
    pub values: Vec<C64>,
    /// tau -> infinity plateau of the sampled values.
    pub coherent_weight: C64,
    /// g(0).
    pub normalization: f64,
}

impl CorrelationTrace {
    pub fn dtau(&self) -> f64 {
        if self.taus.len() > 1 {
            self.taus[1] - self.taus[0]
        } else {
            0.0
        }
    }

    fn check_uniform(&self) -> Result<()> {
        if self.taus.len() < 2 || self.taus[0] != 0.0 {
            return Err(ModelError::GridMismatch(
                "trace grid must start at tau = 0 with at least two samples".into(),
            ));
        }
        let dt = self.dtau();
        for w in self.taus.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
                return Err(ModelError::GridMismatch("trace grid must be uniform".into()));
            }
        }
        Ok(())
    }

    /// Linear interpolation of |g| at an arbitrary delay inside the grid.
    pub fn abs_at(&self, tau: f64) -> f64 {
        let dt = self.dtau();
        let x = (tau - self.taus[0]) / dt;
        let i = (x.floor() as usize).min(self.taus.len() - 2);
        let frac = (x - i as f64).clamp(0.0, 1.0);
        self.values[i].norm() * (1.0 - frac) + self.values[i + 1].norm() * frac
    }
}

/// Build a uniform delay grid covering [0, tau_max] with step dtau.
pub fn uniform_grid(tau_max: f64, dtau: f64) -> Vec<f64> {
    let n = (tau_max / dtau).round() as usize + 1;
    (0..n).map(|j| j as f64 * dtau).collect()
}

/// Optical first-order correlation g(tau) = tr(sigma^dag exp(L tau)[sigma rho_ss]),
/// with the coherent plateau |<sigma>_ss|^2 recorded alongside.
pub fn g1_opt(
    prop: &Propagator,
    rho_ss: &DensityMatrix2,
    taus: &[f64],
) -> Result<CorrelationTrace> {
    if taus.len() < 2 || taus[0] != 0.0 {
        return Err(ModelError::GridMismatch(
            "g1 grid must start at tau = 0".into(),
        ));
    }
    let dtau = taus[1] - taus[0];
    let x0 = sigma().dot(&rho_ss.m);

    // tr(sigma^dag X) = X_{0X}: row-major vec component 1
    let values: Vec<C64> = match prop.mode_amplitudes(&x0, 1) {
        Some(amps) => {
            let step: Vec<C64> = prop.eigvals.iter().map(|l| (l * dtau).exp()).collect();
            let mut phase = [C64::new(1.0, 0.0); 4];
            let mut out = Vec::with_capacity(taus.len());
            for _ in 0..taus.len() {
                let mut g = C64::new(0.0, 0.0);
                for k in 0..4 {
                    g += amps[k] * phase[k];
                }
                out.push(g);
                for k in 0..4 {
                    phase[k] *= step[k];
                }
            }
            out
        }
        None => prop
            .evolve_uniform_expm(&x0, taus.len(), dtau)
            .iter()
            .map(|m| m[[0, 1]])
            .collect(),
    };

    let coherent_weight = C64::new(rho_ss.coherence_x0().norm_sqr(), 0.0);
    let normalization = values[0].re;
    Ok(CorrelationTrace {
        taus: taus.to_vec(),
        values,
        coherent_weight,
        normalization,
    })
}

/// Dress the optical correlation with the phonon correlation function:
/// pointwise multiplication by G(tau); the plateau scales by B^2.
pub fn polaron_g1(trace: &CorrelationTrace, tables: &PhononTables) -> Result<CorrelationTrace> {
    trace.check_uniform()?;
    let values: Vec<C64> = trace
        .taus
        .iter()
        .zip(&trace.values)
        .map(|(&tau, &g)| tables.g_at(tau) * g)
        .collect();
    let coherent_weight = trace.coherent_weight * tables.b2();
    let normalization = values[0].re;
    Ok(CorrelationTrace {
        taus: trace.taus.clone(),
        values,
        coherent_weight,
        normalization,
    })
}

/// Separate the non-decaying plateau: g_inc(tau) = g(tau) - g_coh.
/// Fails when the incoherent remainder has not decayed inside the window.
pub fn split_coherent(trace: &CorrelationTrace) -> Result<(CorrelationTrace, C64)> {
    let w = trace.coherent_weight;
    let values: Vec<C64> = trace.values.iter().map(|&g| g - w).collect();
    let resid = values.last().unwrap().norm();
    let tol = 1e-4 * trace.normalization.abs().max(1e-300);
    if resid > tol {
        return Err(ModelError::WindowNotConverged { resid, tol });
    }
    let normalization = values[0].re;
    Ok((
        CorrelationTrace {
            taus: trace.taus.clone(),
            values,
            coherent_weight: C64::new(0.0, 0.0),
            normalization,
        },
        w,
    ))
}

/// Interferometric visibility v(tau) = (1 - epsilon) |g(tau)| / g(0).
pub fn fringe_contrast(trace: &CorrelationTrace, epsilon: f64) -> Result<Vec<f64>> {
    if trace.normalization <= 0.0 {
        return Err(ModelError::NoEmission);
    }
    Ok(trace
        .values
        .iter()
        .map(|g| (1.0 - epsilon) * g.norm() / trace.normalization)
        .collect())
}

/// Multiply by the spectrometer Gaussian and the laser-coherence
/// exponential. The Gaussian envelope is 2^(-(tau/dtau_i)^2), i.e. dtau_i is
/// its half-width at half maximum, which makes the transformed line carry a
/// Gaussian FWHM of 4 ln2 / dtau_i. Any plateau stops being constant under
/// the envelope, so the coherent weight is folded into the samples.
pub fn apply_instrument_response(trace: &CorrelationTrace, noise: &NoiseParams) -> CorrelationTrace {
    let gauss_on = noise.instrument_dtau > 0.0 && noise.instrument_dtau.is_finite();
    let laser_on = noise.laser_mu > 0.0;
    if !gauss_on && !laser_on {
        return trace.clone();
    }
    let ln2 = std::f64::consts::LN_2;
    let values: Vec<C64> = trace
        .taus
        .iter()
        .zip(&trace.values)
        .map(|(&tau, &g)| {
            let mut env = 1.0;
            if gauss_on {
                let r = tau / noise.instrument_dtau;
                env *= (-ln2 * r * r).exp();
            }
            if laser_on {
                env *= (-noise.laser_mu * tau).exp();
            }
            g * env
        })
        .collect();
    let normalization = values[0].re;
    CorrelationTrace {
        taus: trace.taus.clone(),
        values,
        coherent_weight: C64::new(0.0, 0.0),
        normalization,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_liouvillian, em_rates, EmRates, GeneratorOptions};
    use crate::units::{DriveParams, Params};

    fn paper_stack(omega: f64, delta_lx: f64) -> (PhononTables, Propagator, DensityMatrix2) {
        let p = Params::default();
        let tables = PhononTables::new(&p.phonon, &p.numerics).unwrap();
        let em = em_rates(&tables, &p.cavity);
        let l = build_liouvillian(
            &tables,
            &DriveParams { omega, delta_lx },
            &em,
            0.0,
            &GeneratorOptions::default(),
        )
        .unwrap();
        let prop = Propagator::new(&l).unwrap();
        let ss = prop.steady_state(p.numerics.ss_tol).unwrap();
        (tables, prop, ss)
    }

    fn atomic_stack(omega: f64, gamma_p: f64) -> (Propagator, DensityMatrix2) {
        let tables = PhononTables::trivial();
        let em = EmRates {
            gamma_p,
            lamb_shift: 0.0,
            gamma_complex: C64::new(gamma_p, 0.0),
        };
        let l = build_liouvillian(
            &tables,
            &DriveParams {
                omega,
                delta_lx: 0.0,
            },
            &em,
            0.0,
            &GeneratorOptions::default(),
        )
        .unwrap();
        let prop = Propagator::new(&l).unwrap();
        let ss = prop.steady_state(1e-6).unwrap();
        (prop, ss)
    }

    #[test]
    fn initial_value_is_excited_population() {
        let (_, prop, ss) = paper_stack(0.015, 0.0);
        let taus = uniform_grid(100.0, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        assert!((g.values[0].re - ss.excited_population()).abs() < 1e-12);
        assert!(g.values[0].im.abs() < 1e-12);
    }

    #[test]
    fn undriven_emitter_is_dark() {
        let (prop, ss) = atomic_stack(0.0, 0.05);
        let taus = uniform_grid(50.0, 0.05);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        for v in &g.values {
            assert!(v.norm() < 1e-14);
        }
        assert!(matches!(
            fringe_contrast(&g, 0.02),
            Err(ModelError::NoEmission)
        ));
    }

    #[test]
    fn long_delay_factorizes_into_coherent_weight() {
        // The slowest mode decays at gamma_p/2, so the remainder at
        // 20/gamma_p is a few 1e-6 of g(0) and an order less by 22/gamma_p.
        let (_, prop, ss) = paper_stack(0.015, 0.0);
        let gamma_p = 0.0436;
        let plateau = ss.coherence_x0().norm_sqr();

        let taus = uniform_grid(20.0 / gamma_p, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        assert!((g.values.last().unwrap().re - plateau).abs() < 5e-6);
        assert!((g.coherent_weight.re - plateau).abs() < 1e-15);

        let taus = uniform_grid(24.0 / gamma_p, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        assert!((g.values.last().unwrap().re - plateau).abs() < 1e-6);
    }

    #[test]
    fn cauchy_schwarz_bound_holds() {
        let (_, prop, ss) = paper_stack(0.04, 0.2);
        let taus = uniform_grid(300.0, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        for v in &g.values {
            assert!(v.norm() <= g.normalization * (1.0 + 1e-8));
        }
    }

    #[test]
    fn polaron_dressing_without_phonons_is_identity() {
        let (prop, ss) = atomic_stack(0.02, 0.05);
        let taus = uniform_grid(100.0, 0.05);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        let dressed = polaron_g1(&g, &PhononTables::trivial()).unwrap();
        assert_eq!(g.values, dressed.values);
        assert_eq!(g.coherent_weight, dressed.coherent_weight);
    }

    #[test]
    fn polaron_dressing_keeps_initial_value() {
        let (tables, prop, ss) = paper_stack(0.015, 0.0);
        let taus = uniform_grid(600.0, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        let dressed = polaron_g1(&g, &tables).unwrap();
        assert!((dressed.values[0] - g.values[0]).norm() < 1e-10);
        assert!(
            (dressed.coherent_weight - g.coherent_weight * tables.b2()).norm() < 1e-15
        );
    }

    #[test]
    fn polaron_trace_shows_three_timescales() {
        // fast phonon drop, radiative decay, then a plateau
        let (tables, prop, ss) = paper_stack(0.0152, 0.0);
        let taus = uniform_grid(600.0, 0.02);
        let g = polaron_g1(&g1_opt(&prop, &ss, &taus).unwrap(), &tables).unwrap();
        let norm = |tau: f64| g.abs_at(tau) / g.normalization;

        let after_phonon = norm(15.0);
        assert!(after_phonon < 0.985 && after_phonon > 0.85, "{after_phonon}");
        let mid = norm(60.0);
        assert!(mid < after_phonon);
        let plateau = norm(450.0);
        let plateau2 = norm(580.0);
        assert!((plateau - plateau2).abs() < 1e-3);
        let expected = g.coherent_weight.re / g.normalization;
        assert!((plateau2 - expected).abs() < 1e-3, "{plateau2} vs {expected}");
    }

    #[test]
    fn split_identities() {
        let (_, prop, ss) = paper_stack(0.03, -0.1);
        let taus = uniform_grid(600.0, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        let (inc, w) = split_coherent(&g).unwrap();
        assert_eq!(w, g.coherent_weight);
        for (a, (b, c)) in g.values.iter().zip(inc.values.iter().zip([w].iter().cycle())) {
            assert!((a - (b + c)).norm() < 1e-12);
        }
        let expect0 = ss.excited_population() - ss.coherence_x0().norm_sqr();
        assert!((inc.values[0].re - expect0).abs() < 1e-12);
    }

    #[test]
    fn fringe_contrast_normalizes_to_contrast_limit() {
        let (_, prop, ss) = paper_stack(0.0152, 0.0);
        let taus = uniform_grid(100.0, 0.02);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        let v = fringe_contrast(&g, 0.02).unwrap();
        assert!((v[0] - 0.98).abs() < 1e-12);
        for x in &v {
            assert!(*x <= 0.98 + 1e-12 && *x >= 0.0);
        }
    }

    #[test]
    fn laser_like_trace_has_unit_contrast() {
        let taus = uniform_grid(10.0, 0.1);
        let trace = CorrelationTrace {
            values: vec![C64::new(0.7, 0.0); taus.len()],
            coherent_weight: C64::new(0.7, 0.0),
            normalization: 0.7,
            taus,
        };
        let v = fringe_contrast(&trace, 0.0).unwrap();
        for x in &v {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn instrument_response_off_is_identity() {
        let (_, prop, ss) = paper_stack(0.02, 0.0);
        let taus = uniform_grid(50.0, 0.05);
        let g = g1_opt(&prop, &ss, &taus).unwrap();
        let out = apply_instrument_response(&g, &NoiseParams::default());
        assert_eq!(g, out);
    }

    #[test]
    fn instrument_envelope_folds_plateau_into_samples() {
        let taus = uniform_grid(100.0, 0.5);
        let trace = CorrelationTrace {
            values: vec![C64::new(1.0, 0.0); taus.len()],
            coherent_weight: C64::new(1.0, 0.0),
            normalization: 1.0,
            taus: taus.clone(),
        };
        let mut noise = NoiseParams::default();
        noise.instrument_dtau = 20.0;
        noise.laser_mu = 0.01;
        let out = apply_instrument_response(&trace, &noise);
        assert_eq!(out.coherent_weight, C64::new(0.0, 0.0));
        // half the Gaussian at tau = dtau_i times the laser exponential
        let expect = 0.5 * (-0.01f64 * 20.0).exp();
        assert!((out.abs_at(20.0) - expect).abs() < 1e-12);
        assert!(out.values.last().unwrap().norm() < 1e-7);
    }
}

