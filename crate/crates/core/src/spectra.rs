//! Emission spectra and the coherent/incoherent/sideband emission
//! fractions.
//!
//! The frequency axis is the rotating frame with the laser at zero and
//! detected-minus-laser orientation, so the zero-phonon line of a detuned
//! drive sits at -delta_lx and the Stokes (phonon emission) side is
//! omega < 0. Sampled spectra are the symmetrized transforms
//! S(w) = 2 Re Int_0^inf g(tau) e^{-i w tau} dtau, which makes Parseval
//! read (1/2pi) Int S dw = g(0). The coherent line is never sampled: its
//! delta weight rides along analytically.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::correlations::{split_coherent, CorrelationTrace};
use crate::error::{ModelError, Result};
use crate::filter::FilterSpec;
use crate::phonon::PhononTables;

/// Sampled spectral parts plus the analytically carried coherent weight.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Frequency grid, ascending, ps^-1.
    pub omegas: Vec<f64>,
    /// Optical (zero-phonon-line) part: B^2 times the transform of the
    /// incoherent correlation.
    pub s_opt: Vec<f64>,
    /// Phonon-sideband part: transform of (G(tau) - B^2) g_opt(tau).
    pub s_sb: Vec<f64>,
    /// Delta-line weight B^2 g_coh, pre-filter.
    pub coherent_weight: f64,
    pub filter_applied: bool,
    /// Set when spectral content survives at the grid edge (> 1% of the
    /// peak), indicating an under-resolved transform.
    pub leakage_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmissionFractions {
    pub f_cs: f64,
    pub f_inc: f64,
    pub f_psb: f64,
}

/// S(w_k) = 2 Re[dtau (DFT_k - g_0/2)] on a zero-padded grid, returned
/// fft-shifted (ascending omega).
fn one_sided_spectrum(values: &[C64], dtau: f64, fft_size: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(fft_size >= values.len());
    let mut buf = vec![C64::new(0.0, 0.0); fft_size];
    buf[..values.len()].copy_from_slice(values);
    buf[0] *= 0.5;
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(fft_size).process(&mut buf);

    let dω = 2.0 * std::f64::consts::PI / (fft_size as f64 * dtau);
    let half = fft_size / 2;
    let mut omegas = Vec::with_capacity(fft_size);
    let mut s = Vec::with_capacity(fft_size);
    for i in 0..fft_size {
        let k = (i + half) % fft_size;
        omegas.push((i as isize - half as isize) as f64 * dω);
        s.push(2.0 * dtau * buf[k].re);
    }
    (omegas, s)
}

fn leakage(s: &[f64]) -> bool {
    let peak = s.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    peak > 0.0 && (s[0].abs().max(s[s.len() - 1].abs()) > 0.01 * peak)
}

/// Zero-phonon-line spectrum: B^2 times the transform of the incoherent
/// (plateau-subtracted) optical correlation.
pub fn spectrum_opt(
    incoherent: &CorrelationTrace,
    tables: &PhononTables,
    fft_size: usize,
) -> (Vec<f64>, Vec<f64>, bool) {
    let scaled: Vec<C64> = incoherent.values.iter().map(|g| g * tables.b2()).collect();
    let (omegas, s) = one_sided_spectrum(&scaled, incoherent.dtau(), fft_size);
    let warn = leakage(&s);
    (omegas, s, warn)
}

/// Phonon-sideband spectrum: the transform of (G(tau) - B^2) g_opt(tau),
/// including the plateau term which decays as G approaches B^2.
pub fn spectrum_sb(
    optical_full: &CorrelationTrace,
    tables: &PhononTables,
    fft_size: usize,
) -> (Vec<f64>, Vec<f64>, bool) {
    let b2 = tables.b2();
    let values: Vec<C64> = optical_full
        .taus
        .iter()
        .zip(&optical_full.values)
        .map(|(&tau, &g)| (tables.g_at(tau) - b2) * g)
        .collect();
    let (omegas, s) = one_sided_spectrum(&values, optical_full.dtau(), fft_size);
    let warn = leakage(&s);
    (omegas, s, warn)
}

/// Both sampled parts plus the delta weight from one optical trace.
pub fn compute_spectrum(
    optical_full: &CorrelationTrace,
    tables: &PhononTables,
    fft_size: usize,
) -> Result<SpectrumResult> {
    let (incoherent, g_coh) = split_coherent(optical_full)?;
    let (omegas, s_opt, warn_opt) = spectrum_opt(&incoherent, tables, fft_size);
    let (_, s_sb, warn_sb) = spectrum_sb(optical_full, tables, fft_size);
    Ok(SpectrumResult {
        omegas,
        s_opt,
        s_sb,
        coherent_weight: tables.b2() * g_coh.re,
        filter_applied: false,
        leakage_warning: warn_opt || warn_sb,
    })
}

/// Filtered powers of the three components:
/// P_coh = H(0) B^2 g_coh, P_inc = (1/2pi) Int H S_opt, P_psb likewise.
/// `filter = None` integrates the bare spectrum.
pub fn filtered_powers(
    spectrum: &SpectrumResult,
    filter: Option<&FilterSpec>,
) -> (f64, f64, f64) {
    let n = spectrum.omegas.len();
    let dω = spectrum.omegas[1] - spectrum.omegas[0];
    let norm = dω / (2.0 * std::f64::consts::PI);
    let mut p_inc = 0.0;
    let mut p_psb = 0.0;
    for i in 0..n {
        let h = filter.map_or(1.0, |f| f.response(spectrum.omegas[i]));
        p_inc += h * spectrum.s_opt[i];
        p_psb += h * spectrum.s_sb[i];
    }
    p_inc *= norm;
    p_psb *= norm;
    let h0 = filter.map_or(1.0, |f| f.response(0.0));
    let p_coh = h0 * spectrum.coherent_weight;
    (p_coh, p_inc, p_psb)
}

/// Coherent, incoherent and sideband fractions of the detected power.
pub fn fractions(
    spectrum: &SpectrumResult,
    filter: Option<&FilterSpec>,
) -> Result<EmissionFractions> {
    let (p_coh, p_inc, p_psb) = filtered_powers(spectrum, filter);
    let total = p_coh + p_inc + p_psb;
    if total <= 0.0 {
        return Err(ModelError::ZeroPower);
    }
    Ok(EmissionFractions {
        f_cs: p_coh / total,
        f_inc: p_inc / total,
        f_psb: p_psb / total,
    })
}

impl EmissionFractions {
    pub fn sum(&self) -> f64 {
        self.f_cs + self.f_inc + self.f_psb
    }
}

/// High-energy edge of the sideband on the exciton-centered axis: the
/// highest frequency at which the sideband still holds half of its value at
/// the drive line, where the blue-side band peaks. `delta_lx` re-centers
/// the stored laser-frame grid on the exciton.
pub fn blue_side_edge(spectrum: &SpectrumResult, delta_lx: f64) -> f64 {
    let i_laser = spectrum
        .omegas
        .iter()
        .position(|&w| w >= 0.0)
        .unwrap_or(0);
    let level = 0.5 * spectrum.s_sb[i_laser];
    for i in (1..spectrum.omegas.len()).rev() {
        if spectrum.s_sb[i - 1] >= level && spectrum.s_sb[i] < level {
            let f = (spectrum.s_sb[i - 1] - level) / (spectrum.s_sb[i - 1] - spectrum.s_sb[i]);
            let w = spectrum.omegas[i - 1] + f * (spectrum.omegas[i] - spectrum.omegas[i - 1]);
            return w + delta_lx;
        }
    }
    f64::NAN
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{g1_opt, polaron_g1, uniform_grid};
    use crate::dynamics::{build_liouvillian, em_rates, EmRates, GeneratorOptions, Propagator};
    use crate::units::{DriveParams, Params, PhononParams};

    struct Stack {
        tables: PhononTables,
        optical: CorrelationTrace,
        fft_size: usize,
    }

    fn run_stack(
        phonon: Option<PhononParams>,
        omega: f64,
        delta_lx: f64,
        gamma_p_override: Option<f64>,
        gamma_pd: f64,
    ) -> Stack {
        let p = Params::default();
        let tables = match phonon {
            Some(ph) => PhononTables::new(&ph, &p.numerics).unwrap(),
            None => PhononTables::trivial(),
        };
        let em = match gamma_p_override {
            Some(g) => EmRates {
                gamma_p: g,
                lamb_shift: 0.0,
                gamma_complex: C64::new(g, 0.0),
            },
            None => em_rates(&tables, &p.cavity),
        };
        let l = build_liouvillian(
            &tables,
            &DriveParams { omega, delta_lx },
            &em,
            gamma_pd,
            &GeneratorOptions::default(),
        )
        .unwrap();
        let prop = Propagator::new(&l).unwrap();
        let ss = prop.steady_state(p.numerics.ss_tol).unwrap();
        let taus = uniform_grid(p.numerics.tau_max, p.numerics.dtau);
        let optical = g1_opt(&prop, &ss, &taus).unwrap();
        Stack {
            tables,
            optical,
            fft_size: p.numerics.fft_size,
        }
    }

    fn fwhm_and_center(omegas: &[f64], s: &[f64]) -> (f64, f64) {
        let (imax, peak) = s
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let half = 0.5 * peak;
        let mut lo = omegas[0];
        let mut hi = omegas[omegas.len() - 1];
        for i in (1..=imax).rev() {
            if s[i - 1] <= half && s[i] > half {
                let f = (half - s[i - 1]) / (s[i] - s[i - 1]);
                lo = omegas[i - 1] + f * (omegas[i] - omegas[i - 1]);
                break;
            }
        }
        for i in imax..s.len() - 1 {
            if s[i] > half && s[i + 1] <= half {
                let f = (s[i] - half) / (s[i] - s[i + 1]);
                hi = omegas[i] + f * (omegas[i + 1] - omegas[i]);
                break;
            }
        }
        (hi - lo, omegas[imax])
    }

    #[test]
    fn undriven_spectrum_is_empty() {
        let st = run_stack(None, 0.0, 0.0, Some(0.04), 0.0);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        assert!(spec.s_opt.iter().all(|v| v.abs() < 1e-12));
        assert!(spec.s_sb.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(spec.coherent_weight, 0.0);
        assert!(matches!(fractions(&spec, None), Err(ModelError::ZeroPower)));
    }

    #[test]
    fn weak_drive_line_is_a_t2_lorentzian() {
        let gamma_p = 0.04;
        let gamma_pd = 0.01;
        let st = run_stack(None, 0.004, 0.0, Some(gamma_p), gamma_pd);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        let (fwhm, center) = fwhm_and_center(&spec.omegas, &spec.s_opt);
        let expect = gamma_p + 2.0 * gamma_pd;
        assert!(center.abs() < 0.003, "center = {center}");
        assert!(
            (fwhm - expect).abs() < 0.05 * expect,
            "fwhm = {fwhm}, expected {expect}"
        );
        assert!(!spec.leakage_warning);
    }

    #[test]
    fn strong_drive_develops_mollow_sidebands() {
        let gamma_p = 0.04;
        let omega = 0.5;
        let st = run_stack(None, omega, 0.0, Some(gamma_p), 0.0);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        // local maxima near +-eta = +-omega
        for sign in [-1.0, 1.0] {
            let target = sign * omega;
            let window: Vec<(f64, f64)> = spec
                .omegas
                .iter()
                .zip(&spec.s_opt)
                .filter(|(&w, _)| (w - target).abs() < 0.25)
                .map(|(&w, &v)| (w, v))
                .collect();
            let (wpk, _) = window
                .iter()
                .fold((0.0, f64::MIN), |acc, &(w, v)| if v > acc.1 { (w, v) } else { acc });
            assert!((wpk - target).abs() < 0.02, "peak at {wpk}, expected {target}");
        }
    }

    #[test]
    fn sideband_vanishes_without_phonons() {
        let st = run_stack(None, 0.02, 0.0, Some(0.04), 0.0);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        assert!(spec.s_sb.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sideband_is_stokes_heavy_at_helium_temperature() {
        let p = Params::default();
        let st = run_stack(Some(p.phonon), 0.0152, 0.0, None, 0.0);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        let red: f64 = spec
            .omegas
            .iter()
            .zip(&spec.s_sb)
            .filter(|(&w, _)| w < 0.0)
            .map(|(_, &v)| v)
            .sum();
        let blue: f64 = spec
            .omegas
            .iter()
            .zip(&spec.s_sb)
            .filter(|(&w, _)| w > 0.0)
            .map(|(_, &v)| v)
            .sum();
        assert!(red > blue, "red {red} vs blue {blue}");
        assert!(blue > 0.0);
    }

    #[test]
    fn cold_sideband_has_no_anti_stokes_weight() {
        let ph = PhononParams {
            temperature: 0.0,
            ..Params::default().phonon
        };
        let st = run_stack(Some(ph), 0.003, 0.0, None, 0.0);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        let dω = spec.omegas[1] - spec.omegas[0];
        let blue: f64 = spec
            .omegas
            .iter()
            .zip(&spec.s_sb)
            .filter(|(&w, _)| w > 0.0)
            .map(|(_, &v)| v * dω)
            .sum();
        let total: f64 = spec.s_sb.iter().map(|&v| v * dω).sum();
        assert!(total > 0.0);
        assert!(blue.abs() < 1e-3 * total, "blue {blue} of {total}");
    }

    #[test]
    fn parseval_closure_reproduces_initial_value() {
        let p = Params::default();
        let st = run_stack(Some(p.phonon), 0.0152, 0.0, None, 0.0);
        let dressed = polaron_g1(&st.optical, &st.tables).unwrap();
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        let dω = spec.omegas[1] - spec.omegas[0];
        let integral: f64 = spec
            .s_opt
            .iter()
            .zip(&spec.s_sb)
            .map(|(a, b)| a + b)
            .sum::<f64>()
            * dω
            / (2.0 * std::f64::consts::PI);
        let closure = integral + spec.coherent_weight;
        let expect = dressed.normalization;
        assert!(
            (closure - expect).abs() < 0.005 * expect,
            "{closure} vs {expect}"
        );
    }

    #[test]
    fn filtering_suppresses_the_sideband_fraction() {
        let p = Params::default();
        let st = run_stack(Some(p.phonon), 0.0152, 0.0, None, 0.0);
        let spec = compute_spectrum(&st.optical, &st.tables, st.fft_size).unwrap();
        let raw = fractions(&spec, None).unwrap();
        let filt = fractions(
            &spec,
            Some(&FilterSpec::from_params(
                &p.cavity,
                &DriveParams {
                    omega: 0.0152,
                    delta_lx: 0.0,
                },
                false,
            )),
        )
        .unwrap();
        assert!(filt.f_psb < raw.f_psb);
        assert!(filt.f_cs > raw.f_cs);
        assert!((raw.sum() - 1.0).abs() < 1e-12);
        assert!((filt.sum() - 1.0).abs() < 1e-12);
        // the unfiltered sideband branching is set by 1 - B^2
        let zpl_branch = raw.f_psb;
        assert!((zpl_branch - (1.0 - st.tables.b2())).abs() < 0.005);
    }

    #[test]
    fn detuned_sideband_edge_follows_the_laser() {
        let p = Params::default();
        let omega = crate::units::uev_to_angfreq(5.7);
        let resonant = run_stack(Some(p.phonon), omega, 0.0, None, 0.0);
        let spec_res = compute_spectrum(&resonant.optical, &resonant.tables, resonant.fft_size)
            .unwrap();
        let delta = crate::units::mev_to_angfreq(0.27);
        let detuned = run_stack(Some(p.phonon), omega, delta, None, 0.0);
        let spec_det = compute_spectrum(&detuned.optical, &detuned.tables, detuned.fft_size)
            .unwrap();

        let res_edge = blue_side_edge(&spec_res, 0.0);
        let det_edge = blue_side_edge(&spec_det, delta);
        let shift = det_edge - res_edge;
        assert!(
            (shift - delta).abs() < 0.2 * delta,
            "edge shift {shift} vs {delta}"
        );
    }
}
