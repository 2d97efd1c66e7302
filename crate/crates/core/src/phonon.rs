//! Super-Ohmic phonon environment: spectral density, propagator, the
//! Franck-Condon factor, the polaron shift, and bath correlation functions.
//!
//! The spectral density is J(nu) = alpha nu^3 exp(-nu^2/nu_c^2). The
//! propagator
//!
//! ```text
//! phi(tau) = alpha Int_0^inf nu e^{-nu^2/nu_c^2}
//!            (cos(nu tau) coth(nu / 2 k_B T) - i sin(nu tau)) dnu
//! ```
//!
//! is evaluated by fixed-node composite Simpson quadrature on a uniform
//! frequency grid so results are bit-reproducible across runs. Negative
//! delays use phi(-tau) = conj(phi(tau)); the integrals are never taken at
//! negative tau.

use num_complex::Complex64 as C64;

use crate::error::{ModelError, Result};
use crate::units::{thermal_freq, NumericsParams, PhononParams};

/// J(nu) = alpha nu^3 exp(-nu^2/nu_c^2), in ps^-1.
pub fn spectral_density(nu: f64, p: &PhononParams) -> f64 {
    p.alpha * nu.powi(3) * (-nu * nu / (p.nu_c * p.nu_c)).exp()
}

/// Continuum polaron shift Int_0^inf J(nu)/nu dnu = alpha sqrt(pi) nu_c^3 / 4.
pub fn polaron_shift(p: &PhononParams) -> f64 {
    0.25 * p.alpha * std::f64::consts::PI.sqrt() * p.nu_c.powi(3)
}

/// Fixed-node quadrature rule for the propagator frequency integrals.
#[derive(Debug, Clone)]
pub struct QuadSpec {
    /// Upper integration limit, ps^-1.
    pub nu_max: f64,
    /// Number of nodes (forced odd for Simpson).
    pub points: usize,
}

impl QuadSpec {
    pub fn from_params(phonon: &PhononParams, numerics: &NumericsParams) -> Self {
        QuadSpec {
            nu_max: numerics.nu_max_factor * phonon.nu_c,
            points: numerics.quad_points,
        }
    }
}

/// Precomputed integrand weights on the quadrature grid. `w_real` carries
/// nu e^{-nu^2/nu_c^2} coth(nu/2k_BT) (with the analytic nu -> 0 limit
/// substituted), `w_imag` carries nu e^{-nu^2/nu_c^2}; both already include
/// the Simpson weights and the overall alpha.
struct PropagatorQuad {
    nodes: Vec<f64>,
    w_real: Vec<f64>,
    w_imag: Vec<f64>,
}

impl PropagatorQuad {
    fn new(p: &PhononParams, quad: &QuadSpec) -> Self {
        let n = if quad.points % 2 == 1 {
            quad.points
        } else {
            quad.points + 1
        };
        let dnu = quad.nu_max / (n - 1) as f64;
        let kt = thermal_freq(p.temperature);
        let nu_floor = 1e-6 * p.nu_c;

        let mut nodes = Vec::with_capacity(n);
        let mut w_real = Vec::with_capacity(n);
        let mut w_imag = Vec::with_capacity(n);
        for j in 0..n {
            let nu = j as f64 * dnu;
            let simpson = if j == 0 || j == n - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            } * dnu
                / 3.0;
            let gauss = (-nu * nu / (p.nu_c * p.nu_c)).exp();
            // nu coth(nu/2kT) -> 2 kT as nu -> 0 (at T = 0, coth == 1).
            let base = if nu < nu_floor {
                if kt > 0.0 {
                    2.0 * kt
                } else {
                    nu
                }
            } else if kt > 0.0 {
                nu / (0.5 * nu / kt).tanh()
            } else {
                nu
            };
            nodes.push(nu);
            w_real.push(p.alpha * simpson * gauss * base);
            w_imag.push(p.alpha * simpson * gauss * nu);
        }
        PropagatorQuad {
            nodes,
            w_real,
            w_imag,
        }
    }

    fn phi(&self, tau: f64) -> C64 {
        let t = tau.abs();
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..self.nodes.len() {
            let arg = self.nodes[j] * t;
            re += self.w_real[j] * arg.cos();
            im -= self.w_imag[j] * arg.sin();
        }
        let phi = C64::new(re, im);
        if tau < 0.0 {
            phi.conj()
        } else {
            phi
        }
    }
}

/// Thermal propagator phi(tau). Re phi is even in tau, Im phi odd.
pub fn phonon_propagator(tau: f64, p: &PhononParams, quad: &QuadSpec) -> C64 {
    if p.alpha == 0.0 {
        return C64::new(0.0, 0.0);
    }
    PropagatorQuad::new(p, quad).phi(tau)
}

/// Franck-Condon factor B = exp(-phi(0)/2), in (0, 1].
pub fn franck_condon(p: &PhononParams, quad: &QuadSpec) -> f64 {
    if p.alpha == 0.0 {
        return 1.0;
    }
    let phi0 = PropagatorQuad::new(p, quad).phi(0.0).re;
    (-0.5 * phi0).exp()
}

/// Cached phonon environment: propagator samples on a uniform tau grid plus
/// the derived scalars every consumer needs. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PhononTables {
    pub params: PhononParams,
    /// Franck-Condon factor B.
    pub b_factor: f64,
    /// Continuum polaron shift, ps^-1.
    pub polaron_shift: f64,
    /// phi(0) (real).
    pub phi0: f64,
    /// Step of the cached tau grid, ps.
    pub phi_dtau: f64,
    /// Cached phi samples on 0, phi_dtau, 2 phi_dtau, ...
    pub phi: Vec<C64>,
    /// End of the cached grid, ps.
    pub tau_cut: f64,
    /// Coefficients (c2, c4, c6) of the real algebraic tail
    /// phi(tau) = -(c2/tau^2 + c4/tau^4 + c6/tau^6) past the cache. The
    /// tail survives only when the bath is effectively cold at `tau_cut`;
    /// for warm baths the propagator is exponentially dead there instead.
    pub tail_coeffs: Option<[f64; 3]>,
}

/// Real algebraic tail of the propagator for a cold bath: the asymptotic
/// expansion of the half-line cosine transform of nu exp(-nu^2/nu_c^2).
pub(crate) fn phi_cold_tail(tau: f64, c: &[f64; 3]) -> f64 {
    let t2 = tau * tau;
    -(c[0] / t2 + c[1] / (t2 * t2) + c[2] / (t2 * t2 * t2))
}

impl PhononTables {
    pub fn new(phonon: &PhononParams, numerics: &NumericsParams) -> Result<Self> {
        let quad = QuadSpec::from_params(phonon, numerics);
        Self::with_quad(phonon, numerics, &quad)
    }

    /// Tables for a phonon-free environment (B = 1, phi = 0).
    pub fn trivial() -> Self {
        PhononTables {
            params: PhononParams {
                alpha: 0.0,
                nu_c: 1.0,
                temperature: 0.0,
            },
            b_factor: 1.0,
            polaron_shift: 0.0,
            phi0: 0.0,
            phi_dtau: 1.0,
            phi: vec![C64::new(0.0, 0.0); 2],
            tau_cut: 0.0,
            tail_coeffs: None,
        }
    }

    pub fn with_quad(
        phonon: &PhononParams,
        numerics: &NumericsParams,
        quad: &QuadSpec,
    ) -> Result<Self> {
        if phonon.alpha == 0.0 {
            return Ok(Self::trivial());
        }
        let pq = PropagatorQuad::new(phonon, quad);
        let phi0 = pq.phi(0.0).re;

        // The Gaussian part of the propagator dies on 12/nu_c. The thermal
        // part decays like exp(-2 pi k_B T tau); once it is dead only the
        // vacuum 1/tau^2 tail survives, which is carried analytically. For
        // an ultra-cold (but nonzero T) bath the thermal remainder past the
        // 400 ps cap is below ~1e-5 of phi(0) and is absorbed into the tail.
        let kt = thermal_freq(phonon.temperature);
        let gauss_cut = (12.0 / phonon.nu_c).max(10.0);
        let (tau_cut, cold) = if kt == 0.0 {
            (gauss_cut, true)
        } else {
            let therm = 33.0 / (2.0 * std::f64::consts::PI * kt);
            if therm > 400.0 {
                (gauss_cut.max(400.0), true)
            } else {
                (gauss_cut.max(therm), false)
            }
        };
        let a = 1.0 / (phonon.nu_c * phonon.nu_c);
        let tail_coeffs = cold.then(|| {
            [
                phonon.alpha,
                6.0 * a * phonon.alpha,
                60.0 * a * a * phonon.alpha,
            ]
        });
        let phi_dtau = numerics.dtau.min(0.005);
        let n = (tau_cut / phi_dtau).ceil() as usize + 1;

        // cos/sin recurrences along tau per frequency node
        let m = pq.nodes.len();
        let mut cos_t = vec![1.0f64; m];
        let mut sin_t = vec![0.0f64; m];
        let (cos_d, sin_d): (Vec<f64>, Vec<f64>) = pq
            .nodes
            .iter()
            .map(|nu| ((nu * phi_dtau).cos(), (nu * phi_dtau).sin()))
            .unzip();
        let mut phi = Vec::with_capacity(n);
        for _ in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for j in 0..m {
                re += pq.w_real[j] * cos_t[j];
                im -= pq.w_imag[j] * sin_t[j];
            }
            phi.push(C64::new(re, im));
            for j in 0..m {
                let c = cos_t[j] * cos_d[j] - sin_t[j] * sin_d[j];
                let s = sin_t[j] * cos_d[j] + cos_t[j] * sin_d[j];
                cos_t[j] = c;
                sin_t[j] = s;
            }
        }

        let t_end = (n - 1) as f64 * phi_dtau;
        let end = *phi.last().unwrap();
        match &tail_coeffs {
            Some(c) => {
                let expect = phi_cold_tail(t_end, c);
                let err = (end - C64::new(expect, 0.0)).norm();
                if err > (2e-3 * expect.abs()).max(2e-7) {
                    return Err(ModelError::Quadrature(format!(
                        "phi({t_end:.1} ps) = {end} disagrees with its cold \
                         tail {expect:.3e}"
                    )));
                }
            }
            None => {
                if end.norm() > 1e-7 * phi0.abs().max(1e-3) {
                    return Err(ModelError::Quadrature(format!(
                        "|phi({t_end:.1} ps)| = {:.3e} has not decayed; \
                         increase the propagator window",
                        end.norm()
                    )));
                }
            }
        }

        Ok(PhononTables {
            params: *phonon,
            b_factor: (-0.5 * phi0).exp(),
            polaron_shift: polaron_shift(phonon),
            phi0,
            phi_dtau,
            phi,
            tau_cut,
            tail_coeffs,
        })
    }

    /// B^2, the elastic branching weight.
    pub fn b2(&self) -> f64 {
        self.b_factor * self.b_factor
    }

    /// Linear interpolation of the cached propagator; phi(-tau) = conj.
    /// Beyond the cache the cold algebraic tail applies, or exact zero for
    /// a warm bath.
    pub fn phi_at(&self, tau: f64) -> C64 {
        let t = tau.abs();
        let last = (self.phi.len() - 1) as f64 * self.phi_dtau;
        if t >= last {
            return match &self.tail_coeffs {
                Some(c) => C64::new(phi_cold_tail(t, c), 0.0),
                None => C64::new(0.0, 0.0),
            };
        }
        let x = t / self.phi_dtau;
        let i = x.floor() as usize;
        let frac = x - i as f64;
        let v = self.phi[i] * (1.0 - frac) + self.phi[i + 1] * frac;
        if tau < 0.0 {
            v.conj()
        } else {
            v
        }
    }

    /// Phonon-environment correlation function G(tau) = B^2 exp(phi(tau)).
    pub fn g_at(&self, tau: f64) -> C64 {
        self.phi_at(tau).exp() * self.b2()
    }
}

/// All three bath correlation functions from a single propagator evaluation:
/// G = B^2 e^phi, Lambda_xx = B^2 (e^phi + e^-phi - 2),
/// Lambda_yy = B^2 (e^phi - e^-phi).
pub fn bath_correlations(tau: f64, tables: &PhononTables) -> (C64, C64, C64) {
    let b2 = tables.b2();
    let phi = tables.phi_at(tau);
    let ep = phi.exp();
    let em = (-phi).exp();
    let g = b2 * ep;
    let lxx = b2 * (ep + em - 2.0);
    let lyy = b2 * (ep - em);
    (g, lxx, lyy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::Params;

    fn paper() -> (PhononParams, NumericsParams) {
        let p = Params::default();
        (p.phonon, p.numerics)
    }

    fn quad(p: &PhononParams, n: &NumericsParams) -> QuadSpec {
        QuadSpec::from_params(p, n)
    }

    /// Independent trapezoid oracle at much higher resolution.
    fn phi_trapezoid_oracle(tau: f64, p: &PhononParams, nu_max: f64, n: usize) -> C64 {
        let dnu = nu_max / (n - 1) as f64;
        let kt = thermal_freq(p.temperature);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let nu = j as f64 * dnu;
            let gauss = (-nu * nu / (p.nu_c * p.nu_c)).exp();
            let base = if nu < 1e-9 {
                if kt > 0.0 {
                    2.0 * kt
                } else {
                    0.0
                }
            } else if kt > 0.0 {
                nu / (0.5 * nu / kt).tanh()
            } else {
                nu
            };
            let f = C64::new(
                p.alpha * gauss * base * (nu * tau).cos(),
                -p.alpha * gauss * nu * (nu * tau).sin(),
            );
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += f * w * dnu;
        }
        acc
    }

    #[test]
    fn spectral_density_origin_and_zero_coupling() {
        let (p, _) = paper();
        assert_eq!(spectral_density(0.0, &p), 0.0);
        let off = PhononParams { alpha: 0.0, ..p };
        assert_eq!(spectral_density(1.3, &off), 0.0);
    }

    #[test]
    fn spectral_density_peaks_at_nu_c_sqrt_three_halves() {
        let (p, _) = paper();
        let expected = p.nu_c * (1.5f64).sqrt();
        let mut best = (0.0, 0.0);
        let mut nu = 0.0;
        while nu < 6.0 * p.nu_c {
            let j = spectral_density(nu, &p);
            if j > best.1 {
                best = (nu, j);
            }
            nu += 1e-4;
        }
        assert!((best.0 - expected).abs() < 1e-3, "argmax = {}", best.0);
    }

    #[test]
    fn propagator_zero_coupling_vanishes() {
        let (mut p, n) = paper();
        p.alpha = 0.0;
        let q = quad(&p, &n);
        for tau in [0.0, 1.0, 7.3] {
            assert_eq!(phonon_propagator(tau, &p, &q), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn propagator_at_zero_and_zero_temperature_is_closed_form() {
        let (mut p, n) = paper();
        p.temperature = 0.0;
        let q = quad(&p, &n);
        let phi0 = phonon_propagator(0.0, &p, &q);
        let exact = 0.5 * p.alpha * p.nu_c * p.nu_c;
        assert!((phi0.re - exact).abs() < 1e-10, "phi(0) = {}", phi0.re);
        assert_eq!(phi0.im, 0.0);
    }

    #[test]
    fn propagator_decays_within_fifteen_picoseconds() {
        let (p, n) = paper();
        let q = quad(&p, &n);
        let phi = phonon_propagator(15.0, &p, &q);
        assert!(phi.norm() < 1e-3, "|phi(15)| = {}", phi.norm());
        let oracle = phi_trapezoid_oracle(15.0, &p, 10.0 * p.nu_c, 20001);
        assert!(oracle.norm() < 1e-3);
    }

    #[test]
    fn propagator_matches_independent_trapezoid_oracle() {
        let (p, n) = paper();
        let q = quad(&p, &n);
        for tau in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let a = phonon_propagator(tau, &p, &q);
            let b = phi_trapezoid_oracle(tau, &p, q.nu_max, 40001);
            assert!((a - b).norm() < 1e-6, "tau = {tau}: {a} vs {b}");
        }
    }

    #[test]
    fn propagator_hermiticity() {
        let (p, n) = paper();
        let tables = PhononTables::new(&p, &n).unwrap();
        for tau in [0.3, 1.7, 4.4, 9.0] {
            let plus = tables.phi_at(tau);
            let minus = tables.phi_at(-tau);
            assert!((plus - minus.conj()).norm() < 1e-14);
            let g_plus = tables.g_at(tau);
            let g_minus = tables.g_at(-tau);
            assert!((g_plus - g_minus.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn franck_condon_limits() {
        let (mut p, n) = paper();
        p.alpha = 0.0;
        assert_eq!(franck_condon(&p, &quad(&p, &n)), 1.0);

        let (mut p, n) = paper();
        p.temperature = 0.0;
        let b = franck_condon(&p, &quad(&p, &n));
        let exact = (-0.25 * p.alpha * p.nu_c * p.nu_c).exp();
        assert!((b - exact).abs() < 1e-8, "B = {b}, closed form {exact}");
        assert!((exact - 0.98186).abs() < 1e-5);
    }

    #[test]
    fn franck_condon_decreases_with_temperature() {
        let (p, n) = paper();
        let cold = franck_condon(
            &PhononParams {
                temperature: 2.0,
                ..p
            },
            &quad(&p, &n),
        );
        let warm = franck_condon(
            &PhononParams {
                temperature: 6.0,
                ..p
            },
            &quad(&p, &n),
        );
        assert!(cold > warm);
        assert!(warm > 0.0 && cold <= 1.0);
    }

    #[test]
    fn polaron_shift_closed_form_and_linearity() {
        let (p, _) = paper();
        let shift = polaron_shift(&p);
        assert!((shift - 0.0415).abs() < 2e-4, "shift = {shift}");
        let doubled = polaron_shift(&PhononParams {
            alpha: 2.0 * p.alpha,
            ..p
        });
        assert!((doubled - 2.0 * shift).abs() < 1e-15);
        assert_eq!(
            polaron_shift(&PhononParams { alpha: 0.0, ..p }),
            0.0
        );

        // quadrature cross-check of Int J(nu)/nu dnu
        let n = 200_001;
        let dnu = 10.0 * p.nu_c / (n - 1) as f64;
        let mut acc = 0.0;
        for j in 1..n {
            let nu = j as f64 * dnu;
            let w = if j == n - 1 { 0.5 } else { 1.0 };
            acc += w * spectral_density(nu, &p) / nu * dnu;
        }
        assert!((acc - shift).abs() < 1e-8, "quadrature {acc} vs {shift}");
    }

    #[test]
    fn bath_correlations_identities() {
        let (p, n) = paper();
        let tables = PhononTables::new(&p, &n).unwrap();

        let (g0, _, _) = bath_correlations(0.0, &tables);
        assert!((g0.re - 1.0).abs() < 1e-6, "G(0) = {g0}");
        assert!(g0.im.abs() < 1e-12);

        let (g_inf, lxx, lyy) = bath_correlations(50.0, &tables);
        assert!((g_inf.re - tables.b2()).abs() < 1e-4);
        assert!(lxx.norm() < 1e-6);
        assert!(lyy.norm() < 1e-6);

        let trivial = PhononTables::trivial();
        let (g, lxx, lyy) = bath_correlations(1.0, &trivial);
        assert_eq!(g, C64::new(1.0, 0.0));
        assert_eq!(lxx, C64::new(0.0, 0.0));
        assert_eq!(lyy, C64::new(0.0, 0.0));
    }

    #[test]
    fn quadrature_converges_on_node_doubling() {
        let (p, mut n) = paper();
        let coarse = phonon_propagator(0.0, &p, &quad(&p, &n)).re;
        n.quad_points *= 2;
        let fine = phonon_propagator(0.0, &p, &quad(&p, &n)).re;
        assert!((coarse - fine).abs() < 1e-8, "{coarse} vs {fine}");
    }

    #[test]
    fn cached_tables_match_direct_evaluation() {
        let (p, n) = paper();
        let tables = PhononTables::new(&p, &n).unwrap();
        let q = quad(&p, &n);
        for tau in [0.0, 0.123, 1.7771, 6.5] {
            let direct = phonon_propagator(tau, &p, &q);
            let interp = tables.phi_at(tau);
            assert!(
                (direct - interp).norm() < 1e-6,
                "tau = {tau}: {direct} vs {interp}"
            );
        }
    }
}
