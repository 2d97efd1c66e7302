//! Parameter extraction: damped least squares, the short-time fit for the
//! phonon parameters, plateau-based fraction extraction, and area-based
//! fraction extraction from spectra.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::correlations::CorrelationTrace;
use crate::error::{ModelError, Result};
use crate::filter::{detect_g1, FilterSpec};
use crate::phonon::{PhononTables, QuadSpec};
use crate::spectra::EmissionFractions;
use crate::units::{angfreq_to_mev, NoiseParams, NumericsParams, PhononParams};

/// Outcome of a least-squares run.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    /// Named best-fit values, in deterministic order.
    pub params: BTreeMap<String, f64>,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Row-major covariance estimate in the order of `params`, when the
    /// normal matrix is invertible.
    pub covariance_estimate: Option<Vec<Vec<f64>>>,
    /// Boundary or degeneracy annotations.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative cost-decrease convergence threshold.
    pub ftol: f64,
    /// Gradient-norm convergence threshold.
    pub gtol: f64,
    /// Relative finite-difference step for the Jacobian.
    pub step_rel: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 200,
            ftol: 1e-12,
            gtol: 1e-10,
            step_rel: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub covariance: Option<Vec<Vec<f64>>>,
}

fn solve_small(a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in col + 1..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

fn invert_small(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = Vec::with_capacity(n);
    for k in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        inv.push(solve_small(&mut m, &mut e)?);
    }
    // columns were computed; transpose into rows
    let mut out = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            out[r][c] = inv[c][r];
        }
    }
    Some(out)
}

/// Damped least squares with a central-difference Jacobian. The damping
/// factor shrinks on accepted steps and grows on rejected ones, so the
/// accepted cost sequence is monotone.
pub fn levenberg_marquardt<F>(mut f: F, x0: &[f64], opts: &LmOptions) -> LmOutcome
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = f(&x);
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jtj_last: Option<Vec<Vec<f64>>> = None;

    for _ in 0..opts.max_iter {
        iterations += 1;
        // central-difference Jacobian
        let m = r.len();
        let mut jac = vec![vec![0.0; n]; m];
        for p in 0..n {
            let step = opts.step_rel * x[p].abs().max(1e-3);
            let mut xp = x.clone();
            xp[p] += step;
            let rp = f(&xp);
            xp[p] = x[p] - step;
            let rm = f(&xp);
            for i in 0..m {
                jac[i][p] = (rp[i] - rm[i]) / (2.0 * step);
            }
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for p in 0..n {
                jtr[p] += jac[i][p] * r[i];
                for q in 0..n {
                    jtj[p][q] += jac[i][p] * jac[i][q];
                }
            }
        }
        jtj_last = Some(jtj.clone());

        let gnorm = jtr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gnorm < opts.gtol * (1.0 + cost) {
            converged = true;
            break;
        }

        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for p in 0..n {
                a[p][p] += lambda * jtj[p][p].max(1e-300);
            }
            let mut rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_small(&mut a, &mut rhs) else {
                lambda *= 5.0;
                continue;
            };
            let xt: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let rt = f(&xt);
            let ct: f64 = rt.iter().map(|v| v * v).sum();
            if ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                x = xt;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if rel < opts.ftol {
                    converged = true;
                }
                break;
            }
            if lambda >= 1e14 {
                break;
            }
            lambda = (lambda * 5.0).min(1e14);
        }
        if !accepted {
            // no downhill step exists within the damping range: a minimum
            converged = cost.is_finite();
            break;
        }
        if converged {
            break;
        }
    }

    let m = r.len();
    let dof = m.saturating_sub(n).max(1);
    let covariance = jtj_last
        .as_ref()
        .and_then(|jtj| invert_small(jtj))
        .map(|inv| {
            let s2 = cost / dof as f64;
            inv.iter()
                .map(|row| row.iter().map(|v| v * s2).collect())
                .collect()
        });
    LmOutcome {
        rms: (cost / m as f64).sqrt(),
        x,
        iterations,
        converged,
        covariance,
    }
}

// ---------------------------------------------------------------------------
// short-time phonon fit
// ---------------------------------------------------------------------------

/// Normalized cavity-filtered phonon-relaxation model: the zero-phonon
/// dynamics are frozen at their initial value, so the short-delay
/// visibility is the filtered phonon correlation function alone, normalized
/// to one at zero delay. Valid for delays short against the radiative
/// decay.
pub struct G1FitModel {
    trace: CorrelationTrace,
}

impl G1FitModel {
    pub fn new(phonon: &PhononParams, filter: &FilterSpec, tau_max: f64) -> Result<Self> {
        let dtau = (0.4 / filter.kappa).min(0.01);
        let numerics = NumericsParams {
            dtau,
            tau_max: tau_max + 20.0,
            quad_points: 2001,
            ..NumericsParams::default()
        };
        let quad = QuadSpec::from_params(phonon, &numerics);
        let tables = PhononTables::with_quad(phonon, &numerics, &quad)?;
        let taus = crate::correlations::uniform_grid(numerics.tau_max, numerics.dtau);
        let values: Vec<C64> = taus.iter().map(|&t| tables.g_at(t)).collect();
        let raw = CorrelationTrace {
            values,
            coherent_weight: C64::new(tables.b2(), 0.0),
            normalization: 1.0,
            taus,
        };
        let trace = detect_g1(&raw, filter)?;
        Ok(G1FitModel { trace })
    }

    /// |g_F(tau)|, normalized to one at zero delay.
    pub fn eval(&self, tau: f64) -> f64 {
        self.trace.abs_at(tau) / self.trace.values[0].norm()
    }
}

/// One-shot evaluation of the short-time fitting model.
pub fn g1_fit_model(tau: f64, alpha: f64, nu_c: f64, temperature: f64, filter: &FilterSpec) -> Result<f64> {
    let phonon = PhononParams {
        alpha,
        nu_c,
        temperature,
    };
    Ok(G1FitModel::new(&phonon, filter, tau.max(1.0))?.eval(tau))
}

/// Fit (alpha, nu_c) to short-delay visibility data. Data rows are
/// (tau, v, v_err); rows beyond `window` ps are ignored; error-weighted
/// when every retained error is positive. Non-negativity is enforced by a
/// square-root parameter transformation.
pub fn fit_phonon_params(
    data: &[(f64, f64, f64)],
    filter: &FilterSpec,
    temperature: f64,
    init: (f64, f64),
    window: f64,
) -> Result<FitResult> {
    let pts: Vec<(f64, f64, f64)> = data
        .iter()
        .copied()
        .filter(|(t, _, _)| *t <= window && *t >= 0.0)
        .collect();
    if pts.len() < 8 {
        return Err(ModelError::fit(
            "phonon",
            format!("need at least 8 points inside {window} ps, got {}", pts.len()),
        ));
    }
    let weighted = pts.iter().all(|(_, _, e)| *e > 0.0);
    let tau_max = pts.iter().fold(0.0f64, |a, p| a.max(p.0));
    let filter = *filter;

    let residuals = move |x: &[f64]| -> Vec<f64> {
        let phonon = PhononParams {
            alpha: x[0] * x[0],
            nu_c: (x[1] * x[1]).max(1e-4),
            temperature,
        };
        match G1FitModel::new(&phonon, &filter, tau_max) {
            Ok(model) => pts
                .iter()
                .map(|&(t, v, e)| {
                    let r = model.eval(t) - v;
                    if weighted {
                        r / e
                    } else {
                        r
                    }
                })
                .collect(),
            Err(_) => vec![1e6; pts.len()],
        }
    };

    let x0 = [init.0.max(0.0).sqrt(), init.1.max(1e-4).sqrt()];
    let out = levenberg_marquardt(residuals, &x0, &LmOptions::default());

    let alpha = out.x[0] * out.x[0];
    let nu_c = out.x[1] * out.x[1];
    let mut notes = Vec::new();
    if alpha < 1e-6 {
        notes.push("alpha at its non-negativity boundary".to_string());
    }
    let mut params = BTreeMap::new();
    params.insert("alpha".to_string(), alpha);
    params.insert("nu_c".to_string(), nu_c);
    Ok(FitResult {
        params,
        residual_rms: out.rms,
        iterations: out.iterations,
        converged: out.converged,
        covariance_estimate: out.covariance,
        notes,
    })
}

// ---------------------------------------------------------------------------
// plateau-based fractions
// ---------------------------------------------------------------------------

/// Read the emission fractions off a visibility trace: the drop completed
/// by `t_phonon` is the sideband share, the plateau past `t_rad` is the
/// coherent share, the remainder is incoherent. The input visibility is
/// contrast-corrected by (1 - epsilon) first.
pub fn extract_fractions_from_plateaus(
    taus: &[f64],
    v: &[f64],
    markers: (f64, f64),
    epsilon: f64,
) -> Result<EmissionFractions> {
    let (t_phonon, t_rad) = markers;
    let t_end = *taus.last().ok_or_else(|| {
        ModelError::GridMismatch("empty visibility trace".into())
    })?;
    if !(0.0 < t_phonon && t_phonon < t_rad && t_rad < t_end) {
        return Err(ModelError::GridMismatch(format!(
            "markers must satisfy 0 < {t_phonon} < {t_rad} < {t_end}"
        )));
    }
    let corr: Vec<f64> = v.iter().map(|x| x / (1.0 - epsilon)).collect();
    let v0 = corr[0];
    if v0 <= 0.0 {
        return Err(ModelError::NoEmission);
    }

    let interp = |t: f64| -> f64 {
        let i = taus.partition_point(|&x| x < t).min(taus.len() - 1).max(1);
        let (t0, t1) = (taus[i - 1], taus[i]);
        let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        corr[i - 1] * (1.0 - f) + corr[i] * f
    };
    let v_ph = interp(t_phonon);

    // plateau: mean and drift over [t_rad, t_end]
    let window: Vec<(f64, f64)> = taus
        .iter()
        .zip(&corr)
        .filter(|(&t, _)| t >= t_rad)
        .map(|(&t, &x)| (t, x))
        .collect();
    let n = window.len() as f64;
    let mean = window.iter().map(|p| p.1).sum::<f64>() / n;
    let tmean = window.iter().map(|p| p.0).sum::<f64>() / n;
    let num: f64 = window.iter().map(|p| (p.0 - tmean) * (p.1 - mean)).sum();
    let den: f64 = window.iter().map(|p| (p.0 - tmean) * (p.0 - tmean)).sum();
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let drift = (slope * (t_end - t_rad)).abs() / mean.abs().max(1e-300);
    if drift > 0.02 {
        return Err(ModelError::NoPlateau(drift));
    }

    let f_cs = mean / v0;
    let f_psb = 1.0 - v_ph / v0;
    let f_inc = v_ph / v0 - f_cs;
    Ok(EmissionFractions { f_cs, f_inc, f_psb })
}

// ---------------------------------------------------------------------------
// lineshapes and area-based fractions
// ---------------------------------------------------------------------------

/// Unit-area Gaussian density.
pub fn gaussian_pdf(x: f64, sigma: f64) -> f64 {
    let s = sigma.max(1e-12);
    (-0.5 * x * x / (s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

/// Unit-area Lorentzian density with half width gamma.
pub fn lorentzian_pdf(x: f64, gamma: f64) -> f64 {
    let g = gamma.max(1e-12);
    g / (std::f64::consts::PI * (x * x + g * g))
}

/// Unit-area Voigt density by direct Gauss-Lorentz convolution on a fixed
/// Simpson grid over +-6 sigma.
pub fn voigt_pdf(x: f64, sigma: f64, gamma: f64) -> f64 {
    if sigma < 1e-9 {
        return lorentzian_pdf(x, gamma);
    }
    if gamma < 1e-12 {
        return gaussian_pdf(x, sigma);
    }
    let n = 121;
    let du = 12.0 * sigma / (n - 1) as f64;
    let mut acc = 0.0;
    for j in 0..n {
        let u = -6.0 * sigma + j as f64 * du;
        let w = if j == 0 || j == n - 1 {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * gaussian_pdf(u, sigma) * lorentzian_pdf(x - u, gamma);
    }
    acc * du / 3.0
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralAreas {
    pub a_zpl: f64,
    pub a_psb: f64,
    pub a_cs: f64,
    pub a_inc: f64,
}

fn peak_position(data: &[(f64, f64)]) -> (f64, f64) {
    data.iter()
        .fold((0.0, f64::MIN), |acc, &(x, y)| if y > acc.1 { (x, y) } else { acc })
}

/// Composite fit of the low-resolution spectrum: a Voigt zero-phonon line
/// whose Gaussian width is fixed by the spectrometer response, plus a
/// Gaussian sideband. Data rows are (energy_meV, counts).
fn fit_low_res(
    data: &[(f64, f64)],
    sigma_instr_mev: f64,
) -> Result<(f64, f64, FitResult)> {
    if data.len() < 12 {
        return Err(ModelError::fit("zpl", "too few low-resolution samples"));
    }
    let (c0, peak) = peak_position(data);
    if peak <= 0.0 {
        return Err(ModelError::fit("zpl", "no positive counts"));
    }
    let total: f64 = {
        let mut acc = 0.0;
        for w in data.windows(2) {
            acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        }
        acc
    };

    // x = [a_zpl, c_zpl, gamma_l, a_psb, c_psb, w_psb], areas and widths in
    // sqrt-transform to stay positive
    let d = data.to_vec();
    let model = move |x: &[f64], e: f64| -> f64 {
        let (az, cz, gl) = (x[0] * x[0], x[1], x[2] * x[2]);
        let (ap, cp, wp) = (x[3] * x[3], x[4], x[5] * x[5]);
        az * voigt_pdf(e - cz, sigma_instr_mev, gl)
            + ap * gaussian_pdf(e - cp, wp)
    };
    let residuals = {
        let d = d.clone();
        move |x: &[f64]| -> Vec<f64> {
            d.iter().map(|&(e, y)| model(x, e) - y).collect()
        }
    };
    let x0 = [
        (0.7 * total.abs().max(1e-12)).sqrt(),
        c0,
        (0.01f64).sqrt(),
        (0.3 * total.abs().max(1e-12)).sqrt(),
        c0 - 0.5,
        (0.8f64).sqrt(),
    ];
    let out = levenberg_marquardt(residuals, &x0, &LmOptions::default());
    if !out.converged && out.rms > 0.05 * peak {
        return Err(ModelError::fit("zpl", "low-resolution fit did not converge"));
    }
    let a_zpl = out.x[0] * out.x[0];
    let a_psb = out.x[3] * out.x[3];
    let mut params = BTreeMap::new();
    params.insert("a_zpl".into(), a_zpl);
    params.insert("c_zpl_mev".into(), out.x[1]);
    params.insert("gamma_l_mev".into(), out.x[2] * out.x[2]);
    params.insert("a_psb".into(), a_psb);
    params.insert("c_psb_mev".into(), out.x[4]);
    params.insert("w_psb_mev".into(), out.x[5] * out.x[5]);
    let fr = FitResult {
        params,
        residual_rms: out.rms,
        iterations: out.iterations,
        converged: out.converged,
        covariance_estimate: None,
        notes: vec![],
    };
    Ok((a_zpl, a_psb, fr))
}

/// Composite fit of the high-resolution zero-phonon line: a narrow Gaussian
/// (coherent scattering at the interferometer response) plus a Lorentzian
/// (incoherent resonance fluorescence), replicated at +-FSR when a
/// free-spectral-range is supplied.
fn fit_high_res(
    data: &[(f64, f64)],
    fsr_mev: Option<f64>,
) -> Result<(f64, f64, FitResult)> {
    if data.len() < 12 {
        return Err(ModelError::fit("zpl-high-res", "too few samples"));
    }
    let (c0, peak) = peak_position(data);
    if peak <= 0.0 {
        return Err(ModelError::fit("zpl-high-res", "no positive counts"));
    }
    let replicas: Vec<f64> = match fsr_mev {
        Some(f) => vec![-f, 0.0, f],
        None => vec![0.0],
    };
    let d = data.to_vec();
    let reps = replicas.clone();
    let residuals = move |x: &[f64]| -> Vec<f64> {
        let (ac, sg, ai, gl, c) = (x[0] * x[0], x[1] * x[1], x[2] * x[2], x[3] * x[3], x[4]);
        d.iter()
            .map(|&(e, y)| {
                let mut m = 0.0;
                for r in &reps {
                    m += ac * gaussian_pdf(e - c - r, sg) + ai * lorentzian_pdf(e - c - r, gl);
                }
                m - y
            })
            .collect()
    };
    let x0 = [
        (0.5f64).sqrt(),
        (0.0005f64).sqrt(),
        (0.5f64).sqrt(),
        (0.01f64).sqrt(),
        c0,
    ];
    let out = levenberg_marquardt(residuals, &x0, &LmOptions::default());
    if !out.converged && out.rms > 0.05 * peak {
        return Err(ModelError::fit(
            "zpl-high-res",
            "high-resolution fit did not converge",
        ));
    }
    let a_cs = out.x[0] * out.x[0];
    let a_inc = out.x[2] * out.x[2];
    let mut params = BTreeMap::new();
    params.insert("a_cs".into(), a_cs);
    params.insert("sigma_cs_mev".into(), out.x[1] * out.x[1]);
    params.insert("a_inc".into(), a_inc);
    params.insert("gamma_inc_mev".into(), out.x[3] * out.x[3]);
    params.insert("c_mev".into(), out.x[4]);
    let fr = FitResult {
        params,
        residual_rms: out.rms,
        iterations: out.iterations,
        converged: out.converged,
        covariance_estimate: None,
        notes: vec![],
    };
    Ok((a_cs, a_inc, fr))
}

/// Fractions from fitted areas of a low-resolution spectrum (spanning the
/// sideband) and a high-resolution spectrum of the zero-phonon line:
/// F_PSB = A_PSB/(A_PSB + A_ZPL), and the coherent/incoherent split of the
/// line scales the remaining weight.
pub fn area_fractions_from_spectra(
    low_res: &[(f64, f64)],
    high_res: &[(f64, f64)],
    instrument: &NoiseParams,
    fsr_mev: Option<f64>,
) -> Result<(EmissionFractions, SpectralAreas, Vec<FitResult>)> {
    let sigma_instr_mev = if instrument.instrument_dtau > 0.0 {
        let fwhm = 4.0 * std::f64::consts::LN_2 / instrument.instrument_dtau;
        angfreq_to_mev(fwhm) / (8.0 * std::f64::consts::LN_2).sqrt()
    } else {
        0.0
    };
    let (a_zpl, a_psb, fit_low) = fit_low_res(low_res, sigma_instr_mev)?;
    let (a_cs, a_inc, fit_high) = fit_high_res(high_res, fsr_mev)?;

    let zpl_weight = a_zpl / (a_zpl + a_psb);
    let f_psb = a_psb / (a_zpl + a_psb);
    let f_cs = a_cs / (a_cs + a_inc) * zpl_weight;
    let f_inc = a_inc / (a_cs + a_inc) * zpl_weight;
    Ok((
        EmissionFractions { f_cs, f_inc, f_psb },
        SpectralAreas {
            a_zpl,
            a_psb,
            a_cs,
            a_inc,
        },
        vec![fit_low, fit_high],
    ))
}
