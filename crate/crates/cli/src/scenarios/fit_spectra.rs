//! Fraction extraction from spectrum areas, with an optional forward-model
//! synthesis round trip: a low-resolution spectrum spanning the sideband
//! and a high-resolution scan of the zero-phonon line.

use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

use pscatter_core::error::{ModelError, Result};
use pscatter_core::fitting::{area_fractions_from_spectra, gaussian_pdf, FitResult, SpectralAreas};
use pscatter_core::io::{read_spectrum_csv, write_csv};
use pscatter_core::noise::gaussian_convolve_uniform;
use pscatter_core::pipeline::PointOptions;
use pscatter_core::spectra::EmissionFractions;
use pscatter_core::units::{angfreq_to_mev, uev_to_angfreq};

use crate::context::RunContext;

use super::Scenario;

pub struct FitSpectra;

#[derive(Serialize)]
struct AreasOut {
    fractions: EmissionFractions,
    areas: SpectralAreas,
    model_fractions: Option<EmissionFractions>,
    fits: Vec<FitResult>,
}

impl Scenario for FitSpectra {
    fn name(&self) -> &'static str {
        "fit-spectra"
    }

    fn summary(&self) -> &'static str {
        "area-based fraction extraction from low/high-resolution spectra"
    }

    fn run(&self, ctx: &RunContext) -> Result<()> {
        use pscatter_core::config::Kind;
        let synthesize = ctx.scenario_bool("fit", "synthesize", false)?;
        let fsr_mev = match ctx.config.section("fit").and_then(|t| t.get("fsr_mev")) {
            Some(v) => Some(pscatter_core::config::quantity(v, Kind::Dimensionless, "fit.fsr_mev")?),
            None => None,
        };
        let mut noise = ctx.validated.params.noise;
        if noise.instrument_dtau <= 0.0 {
            // the low-resolution fit needs a finite spectrometer response
            noise.instrument_dtau = 60.0;
        }

        let (low_path, high_path, model_fractions) = if synthesize {
            let drive = ctx.base_drive();
            let point = ctx.pipeline.evaluate(drive, &PointOptions::default())?;
            let spec = &point.spectrum;
            let filter = ctx.pipeline.filter_for(&drive, false);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
            let noise_frac =
                ctx.scenario_f64("fit", "noise_frac", Kind::Dimensionless, 0.005)?;

            // low resolution: filtered total, instrument-convolved, with the
            // coherent line entering as an instrument-width Gaussian
            let dω = spec.omegas[1] - spec.omegas[0];
            let keep: Vec<usize> = (0..spec.omegas.len())
                .filter(|&i| spec.omegas[i].abs() <= 6.0)
                .collect();
            let filtered: Vec<f64> = keep
                .iter()
                .map(|&i| filter.response(spec.omegas[i]) * (spec.s_opt[i] + spec.s_sb[i]))
                .collect();
            let fwhm_instr = 4.0 * std::f64::consts::LN_2 / noise.instrument_dtau;
            let smeared = gaussian_convolve_uniform(&filtered, dω, fwhm_instr);
            let sigma_instr = fwhm_instr / (8.0 * std::f64::consts::LN_2).sqrt();
            let coh_area = filter.response(0.0) * spec.coherent_weight * 2.0 * std::f64::consts::PI;
            let stride = (keep.len() / 1500).max(1);
            let rows_low: Vec<Vec<f64>> = keep
                .iter()
                .enumerate()
                .step_by(stride)
                .map(|(j, &i)| {
                    let w = spec.omegas[i];
                    let y = smeared[j] + coh_area * gaussian_pdf(w, sigma_instr);
                    let noisy = y * (1.0 + noise_frac * rng.gen_range(-1.0..1.0));
                    vec![angfreq_to_mev(w), noisy]
                })
                .collect();
            write_csv(
                &ctx.out_path("spectrum_low_res.csv"),
                &ctx.header(),
                &["energy_mev", "counts"],
                rows_low,
            )?;

            // high resolution: the filtered optical line plus the coherent
            // peak at the interferometer response width
            let irf_fwhm = uev_to_angfreq(
                ctx.scenario_f64("fit", "irf_fwhm_uev", Kind::Dimensionless, 0.5)?,
            );
            let sigma_irf = irf_fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
            let span_hi = uev_to_angfreq(80.0);
            let keep_hi: Vec<usize> = (0..spec.omegas.len())
                .filter(|&i| spec.omegas[i].abs() <= span_hi)
                .collect();
            let rows_high: Vec<Vec<f64>> = keep_hi
                .iter()
                .map(|&i| {
                    let w = spec.omegas[i];
                    let y = filter.response(w) * spec.s_opt[i]
                        + coh_area * gaussian_pdf(w, sigma_irf);
                    let noisy = y * (1.0 + noise_frac * rng.gen_range(-1.0..1.0));
                    vec![angfreq_to_mev(w), noisy]
                })
                .collect();
            write_csv(
                &ctx.out_path("spectrum_high_res.csv"),
                &ctx.header(),
                &["energy_mev", "counts"],
                rows_high,
            )?;
            (
                ctx.out_path("spectrum_low_res.csv"),
                ctx.out_path("spectrum_high_res.csv"),
                Some(point.fractions),
            )
        } else {
            let low = ctx.scenario_str("fit", "low_res")?.ok_or_else(|| {
                ModelError::Config("fit.low_res is required unless fit.synthesize".into())
            })?;
            let high = ctx.scenario_str("fit", "high_res")?.ok_or_else(|| {
                ModelError::Config("fit.high_res is required unless fit.synthesize".into())
            })?;
            (low.into(), high.into(), None)
        };

        let low = read_spectrum_csv(&low_path)?;
        let high = read_spectrum_csv(&high_path)?;
        let (fractions, areas, fits) =
            area_fractions_from_spectra(&low, &high, &noise, fsr_mev)?;
        let out = AreasOut {
            fractions,
            areas,
            model_fractions,
            fits,
        };
        ctx.write_json("fractions.json", &out)?;
        super::common_outputs(ctx, None)
    }
}
