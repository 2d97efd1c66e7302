//! The low-Q cavity as a detection filter: a Lorentzian in frequency and a
//! two-sided exponential kernel in the time domain.
//!
//! The unit-peak convention is used throughout: H(center) = 1. Absolute
//! prefactors cancel in every reported ratio, so none are carried.

use num_complex::Complex64 as C64;

use crate::correlations::CorrelationTrace;
use crate::error::{ModelError, Result};
use crate::units::{CavityParams, DriveParams};

/// Frequency-domain filter placement in the rotating frame (laser at zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Filter center relative to the laser, ps^-1.
    pub center_offset: f64,
    /// Full linewidth kappa, ps^-1.
    pub kappa: f64,
}

impl FilterSpec {
    /// Default placement: the filter is pinned to the cavity's absolute
    /// frequency, which sits at delta_xc - delta_lx from the laser. The
    /// alternative reading centers it at delta_xc from the laser so that it
    /// follows the drive.
    pub fn from_params(cavity: &CavityParams, drive: &DriveParams, follow_laser: bool) -> Self {
        let center_offset = if follow_laser {
            cavity.delta_xc
        } else {
            cavity.delta_xc - drive.delta_lx
        };
        FilterSpec {
            center_offset,
            kappa: cavity.kappa,
        }
    }

    /// Unit-peak Lorentzian response.
    pub fn response(&self, omega: f64) -> f64 {
        filter_lorentzian(omega, self)
    }

    /// Exact response of the time-domain kernel to a constant input,
    /// kappa / (center^2 + kappa^2/4); equals (4/kappa) H(0).
    pub fn constant_response(&self) -> f64 {
        let pole = C64::new(0.5 * self.kappa, self.center_offset);
        2.0 * (1.0 / pole).re
    }
}

/// H(omega) = (kappa/2)^2 / ((omega - center)^2 + (kappa/2)^2): one at the
/// center, one half at center +- kappa/2.
pub fn filter_lorentzian(omega: f64, f: &FilterSpec) -> f64 {
    let hw = 0.5 * f.kappa;
    hw * hw / ((omega - f.center_offset).powi(2) + hw * hw)
}

/// Detected correlation function: the trace convolved with the cavity
/// kernel h(x) = exp(-i c x - kappa |x|/2), re-ordered onto non-negative
/// delays,
///
/// ```text
/// g_D(tau) = Int_0^inf h(s - tau) g(s) ds
///          + Int_0^inf conj(h(s + tau)) conj(g(s)) ds.
/// ```
///
/// The sums run over a +-40/kappa window where the kernel is alive; beyond
/// the stored grid the integrand closes analytically with g(s) ~ g_coh. The
/// symbolic plateau weight scales by the exact constant response, which the
/// re-ordered integral reproduces for every delay.
pub fn detect_g1(trace: &CorrelationTrace, f: &FilterSpec) -> Result<CorrelationTrace> {
    let n = trace.values.len();
    let dt = trace.dtau();
    if n < 2 || dt <= 0.0 {
        return Err(ModelError::GridMismatch("detect_g1 needs a uniform grid".into()));
    }
    let resp = f.constant_response();

    // A kernel much narrower than one grid step acts as a transparent
    // pass-through (scaled like every other output of this filter).
    if f.kappa * dt > 20.0 {
        let values: Vec<C64> = trace.values.iter().map(|g| g * resp).collect();
        let normalization = values[0].re;
        return Ok(CorrelationTrace {
            taus: trace.taus.clone(),
            values,
            coherent_weight: trace.coherent_weight * resp,
            normalization,
        });
    }
    if f.kappa * dt > 0.5 {
        return Err(ModelError::FilterGridTooCoarse(f.kappa * dt));
    }

    let window = (40.0 / f.kappa / dt).ceil() as usize;
    let pole = C64::new(0.5 * f.kappa, f.center_offset);
    // kernel[m + window] = h(m dt) for m in [-window, window]
    let kernel: Vec<C64> = (-(window as isize)..=window as isize)
        .map(|m| {
            let x = m as f64 * dt;
            (C64::new(0.0, -f.center_offset * x) - 0.5 * f.kappa * x.abs()).exp()
        })
        .collect();

    let g_coh = trace.coherent_weight;
    let tau_end = trace.taus[n - 1];
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);

        // forward term: s within the kernel window of tau_i
        let j0 = i.saturating_sub(window);
        let j1 = (i + window).min(n - 1);
        for j in j0..=j1 {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            let k = kernel[(j as isize - i as isize + window as isize) as usize];
            acc += k * trace.values[j] * (w * dt);
        }
        // analytic continuation past the stored grid
        acc += g_coh * (-pole * (tau_end - trace.taus[i])).exp() / pole;

        // mirrored term: only alive while s + tau_i is inside the window
        let jmax = window.saturating_sub(i).min(n - 1);
        if i <= window {
            for j in 0..=jmax {
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                let k = kernel[(j + i).min(window) + window].conj();
                acc += k * trace.values[j].conj() * (w * dt);
            }
            if jmax == n - 1 {
                acc += (g_coh * (-pole * (tau_end + trace.taus[i])).exp() / pole).conj();
            }
        }

        values.push(acc);
    }

    let normalization = values[0].re;
    Ok(CorrelationTrace {
        taus: trace.taus.clone(),
        values,
        coherent_weight: trace.coherent_weight * resp,
        normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::uniform_grid;

    fn constant_trace(c: C64, tau_max: f64, dtau: f64) -> CorrelationTrace {
        let taus = uniform_grid(tau_max, dtau);
        CorrelationTrace {
            values: vec![c; taus.len()],
            coherent_weight: c,
            normalization: c.re,
            taus,
        }
    }

    fn damped_cosine_trace(tau_max: f64, dtau: f64) -> CorrelationTrace {
        let taus = uniform_grid(tau_max, dtau);
        let values: Vec<C64> = taus
            .iter()
            .map(|&t| C64::new((-0.05 * t).exp() * (0.8 * t).cos(), 0.0))
            .collect();
        CorrelationTrace {
            values,
            coherent_weight: C64::new(0.0, 0.0),
            normalization: 1.0,
            taus,
        }
    }

    /// Two-sided transform 2 Re Int_0^inf g(t) e^{-i w t} dt by direct
    /// trapezoid, independent of the fft path.
    fn direct_spectrum(trace: &CorrelationTrace, omega: f64) -> f64 {
        let dt = trace.dtau();
        let mut acc = C64::new(0.0, 0.0);
        for (j, (&t, g)) in trace.taus.iter().zip(&trace.values).enumerate() {
            let w = if j == 0 || j == trace.values.len() - 1 {
                0.5
            } else {
                1.0
            };
            acc += g * C64::new(0.0, -omega * t).exp() * (w * dt);
        }
        2.0 * acc.re
    }

    #[test]
    fn lorentzian_reference_points() {
        let f = FilterSpec {
            center_offset: 0.7,
            kappa: 2.0,
        };
        assert_eq!(filter_lorentzian(0.7, &f), 1.0);
        assert!((filter_lorentzian(0.7 + 1.0, &f) - 0.5).abs() < 1e-15);
        assert!((filter_lorentzian(0.7 + 5.0 * 2.0, &f) - 1.0 / 101.0).abs() < 1e-15);
    }

    #[test]
    fn filter_centering_conventions() {
        let cavity = CavityParams {
            g: 0.2,
            kappa: 3.8,
            delta_xc: 0.1,
        };
        let drive = DriveParams {
            omega: 0.01,
            delta_lx: 0.4,
        };
        let pinned = FilterSpec::from_params(&cavity, &drive, false);
        assert!((pinned.center_offset - (-0.3)).abs() < 1e-15);
        let follows = FilterSpec::from_params(&cavity, &drive, true);
        assert!((follows.center_offset - 0.1).abs() < 1e-15);
    }

    #[test]
    fn constant_input_scales_by_constant_response() {
        let f = FilterSpec {
            center_offset: 0.3,
            kappa: 3.8,
        };
        let c = C64::new(0.42, 0.0);
        let trace = constant_trace(c, 80.0, 0.02);
        let out = detect_g1(&trace, &f).unwrap();
        let expect = c * f.constant_response();
        for (tau, v) in out.taus.iter().zip(&out.values) {
            assert!(
                (v - expect).norm() < 1e-3 * expect.norm(),
                "tau = {tau}: {v} vs {expect}"
            );
        }
        assert!((out.coherent_weight - expect).norm() < 1e-12);
    }

    #[test]
    fn very_broad_filter_is_transparent() {
        let f = FilterSpec {
            center_offset: 0.0,
            kappa: 1e6,
        };
        let trace = damped_cosine_trace(50.0, 0.02);
        let out = detect_g1(&trace, &f).unwrap();
        let scale = f.constant_response();
        for (a, b) in out.values.iter().zip(&trace.values) {
            assert!((a - b * scale).norm() <= 1e-3 * scale * trace.normalization);
        }
    }

    #[test]
    fn midrange_coarse_grid_is_rejected() {
        let f = FilterSpec {
            center_offset: 0.0,
            kappa: 40.0,
        };
        let trace = damped_cosine_trace(10.0, 0.05);
        assert!(matches!(
            detect_g1(&trace, &f),
            Err(ModelError::FilterGridTooCoarse(_))
        ));
    }

    #[test]
    fn detection_is_linear() {
        let f = FilterSpec {
            center_offset: -0.2,
            kappa: 3.8,
        };
        let t1 = damped_cosine_trace(60.0, 0.02);
        let mut t2 = constant_trace(C64::new(0.3, 0.0), 60.0, 0.02);
        t2.coherent_weight = C64::new(0.0, 0.0); // sampled-only constant
        let (a, b) = (1.7, -0.4);
        let mixed = CorrelationTrace {
            taus: t1.taus.clone(),
            values: t1
                .values
                .iter()
                .zip(&t2.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            coherent_weight: C64::new(0.0, 0.0),
            normalization: 1.0,
        };
        let out_mixed = detect_g1(&mixed, &f).unwrap();
        let out1 = detect_g1(&t1, &f).unwrap();
        let out2 = detect_g1(&t2, &f).unwrap();
        for i in 0..out_mixed.values.len() {
            let lin = a * out1.values[i] + b * out2.values[i];
            assert!((out_mixed.values[i] - lin).norm() < 1e-12);
        }
    }

    #[test]
    fn output_at_zero_delay_is_real() {
        let f = FilterSpec {
            center_offset: 0.5,
            kappa: 3.0,
        };
        let trace = damped_cosine_trace(60.0, 0.02);
        let out = detect_g1(&trace, &f).unwrap();
        assert!(out.values[0].im.abs() < 1e-10 * out.values[0].re.abs());
    }

    #[test]
    fn frequency_response_matches_convolution_theorem() {
        let f = FilterSpec {
            center_offset: 0.4,
            kappa: 3.0,
        };
        let trace = damped_cosine_trace(120.0, 0.02);
        let out = detect_g1(&trace, &f).unwrap();
        let scale = 4.0 / f.kappa;
        for omega in [-2.0, -0.9, -0.4, 0.0, 0.4, 0.8, 1.6] {
            let lhs = direct_spectrum(&out, omega);
            let rhs = scale * f.response(omega) * direct_spectrum(&trace, omega);
            let tol = 0.01 * direct_spectrum(&trace, 0.8).abs().max(1.0);
            assert!((lhs - rhs).abs() < tol, "omega {omega}: {lhs} vs {rhs}");
        }
    }
}
