//! Phenomenological noise: detuning-dependent pure dephasing and the
//! spectral-wandering convolution of power curves.

use crate::error::{ModelError, Result};
use crate::units::NoiseParams;

/// gamma(delta) = gamma_max (1 - xi^2 / (delta^2 + xi^2)): zero on
/// resonance, saturating at gamma_max. The caller resolves xi = 0 to the
/// emitter natural linewidth before use.
pub fn gamma_of_detuning(delta_lx: f64, n: &NoiseParams) -> f64 {
    if n.xi == 0.0 {
        return if delta_lx == 0.0 { 0.0 } else { n.gamma_max };
    }
    let d2 = delta_lx * delta_lx;
    n.gamma_max * (1.0 - n.xi * n.xi / (d2 + n.xi * n.xi))
}

/// Total and coherent detected powers on a uniform detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurves {
    pub deltas: Vec<f64>,
    pub p_tot: Vec<f64>,
    pub p_coh: Vec<f64>,
}

/// Convolve both power curves with a unit-area Gaussian of the given FWHM
/// and return the pointwise coherent fraction.
pub fn wandering_fraction(curves: &PowerCurves, fwhm: f64) -> Result<Vec<f64>> {
    let n = curves.deltas.len();
    if n < 2 {
        return Err(ModelError::GridMismatch(
            "wandering needs at least two detuning samples".into(),
        ));
    }
    let dx = curves.deltas[1] - curves.deltas[0];
    for w in curves.deltas.windows(2) {
        if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.abs() {
            return Err(ModelError::GridMismatch(
                "wandering needs a uniform detuning grid".into(),
            ));
        }
    }
    let span = curves.deltas[n - 1] - curves.deltas[0];
    if fwhm > span / 4.0 {
        return Err(ModelError::KernelTooWide {
            fwhm,
            max: span / 4.0,
        });
    }

    let tot = gaussian_convolve_uniform(&curves.p_tot, dx, fwhm);
    let coh = gaussian_convolve_uniform(&curves.p_coh, dx, fwhm);
    Ok(tot
        .iter()
        .zip(&coh)
        .map(|(&t, &c)| if t > 0.0 { c / t } else { 0.0 })
        .collect())
}

/// Direct-summation convolution with a Gaussian kernel truncated at five
/// standard deviations. The kernel is renormalized over the in-range
/// samples, so constants are reproduced exactly, including at the edges.
pub fn gaussian_convolve_uniform(y: &[f64], dx: f64, fwhm: f64) -> Vec<f64> {
    if fwhm <= 0.0 {
        return y.to_vec();
    }
    let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    let half = ((5.0 * sigma / dx.abs()).ceil() as usize).max(1);
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let u = (j as isize - half as isize) as f64 * dx;
            (-0.5 * u * u / (sigma * sigma)).exp()
        })
        .collect();
    let n = y.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = 0.0;
        let mut weight = 0.0;
        for (j, k) in kernel.iter().enumerate() {
            let idx = i as isize + j as isize - half as isize;
            if idx >= 0 && (idx as usize) < n {
                acc += k * y[idx as usize];
                weight += k;
            }
        }
        out.push(acc / weight);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::uev_to_angfreq;

    fn noise(xi: f64) -> NoiseParams {
        NoiseParams {
            gamma_max: uev_to_angfreq(21.0),
            xi,
            ..NoiseParams::default()
        }
    }

    #[test]
    fn dephasing_reference_points() {
        let n = noise(0.04);
        assert_eq!(gamma_of_detuning(0.0, &n), 0.0);
        assert!((gamma_of_detuning(0.04, &n) - 0.5 * n.gamma_max).abs() < 1e-15);
        let far = gamma_of_detuning(0.4, &n);
        assert!((far - 0.990 * n.gamma_max).abs() < 1.5e-3 * n.gamma_max);
        assert!(gamma_of_detuning(-0.1, &n) == gamma_of_detuning(0.1, &n));
    }

    #[test]
    fn kernel_reproduces_constants() {
        let y = vec![3.25; 101];
        let out = gaussian_convolve_uniform(&y, 0.01, 0.08);
        for v in out {
            assert!((v - 3.25).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_width_is_identity() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let out = gaussian_convolve_uniform(&y, 0.05, 0.0);
        assert_eq!(y, out);
    }

    #[test]
    fn symmetric_curves_stay_symmetric() {
        let n = 101;
        let deltas: Vec<f64> = (0..n).map(|i| (i as f64 - 50.0) * 0.02).collect();
        let p_tot: Vec<f64> = deltas.iter().map(|d| 1.0 / (1.0 + d * d)).collect();
        let p_coh: Vec<f64> = deltas
            .iter()
            .map(|d| 0.8 / (1.0 + 2.0 * d * d))
            .collect();
        let curves = PowerCurves {
            deltas,
            p_tot,
            p_coh,
        };
        let f = wandering_fraction(&curves, 0.1).unwrap();
        for i in 0..n {
            assert!((f[i] - f[n - 1 - i]).abs() < 1e-12);
            assert!(f[i] >= 0.0 && f[i] <= 1.0);
        }
    }

    #[test]
    fn too_wide_kernel_is_rejected() {
        let deltas: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let curves = PowerCurves {
            p_tot: vec![1.0; 11],
            p_coh: vec![0.5; 11],
            deltas,
        };
        assert!(matches!(
            wandering_fraction(&curves, 0.3),
            Err(ModelError::KernelTooWide { .. })
        ));
    }
}
