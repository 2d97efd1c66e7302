//! Phonon-parameter extraction from short-delay visibility data, with an
//! optional forward-model synthesis round trip.

use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

use pscatter_core::error::{ModelError, Result};
use pscatter_core::fitting::{fit_phonon_params, FitResult, G1FitModel};
use pscatter_core::io::{read_g1_csv, write_csv};
use pscatter_core::pipeline::PointOptions;
use pscatter_core::units::PhononParams;

use crate::context::RunContext;

use super::Scenario;

pub struct FitPhonon;

#[derive(Serialize)]
struct FitOut {
    fit: FitResult,
    init_alpha: f64,
    init_nu_c: f64,
    window_ps: f64,
    n_points: usize,
}

impl Scenario for FitPhonon {
    fn name(&self) -> &'static str {
        "fit-phonon"
    }

    fn summary(&self) -> &'static str {
        "least-squares extraction of (alpha, nu_c) from visibility data"
    }

    fn run(&self, ctx: &RunContext) -> Result<()> {
        use pscatter_core::config::Kind;
        let window = ctx.scenario_f64("fit", "window", Kind::Time, 15.0)?;
        let init_alpha = ctx.scenario_f64("fit", "init_alpha", Kind::TimeSquared, 0.04)?;
        let init_nu_c = ctx.scenario_f64("fit", "init_nu_c", Kind::Freq, 1.0)?;
        let synthesize = ctx.scenario_bool("fit", "synthesize", false)?;
        let noise = ctx.validated.params.noise;

        let data_path = match ctx.scenario_str("fit", "data")? {
            Some(p) => std::path::PathBuf::from(p),
            None if synthesize => ctx.out_path("g1_data.csv"),
            None => {
                return Err(ModelError::Config(
                    "fit.data is required unless fit.synthesize = true".into(),
                ))
            }
        };

        if synthesize {
            // forward model through the full detection chain, 1% noise
            let drive = ctx.base_drive();
            let point = ctx.pipeline.evaluate(
                drive,
                &PointOptions {
                    with_detected_trace: true,
                    ..PointOptions::default()
                },
            )?;
            let detected = point.detected.as_ref().unwrap();
            let noise_frac =
                ctx.scenario_f64("fit", "noise_frac", Kind::Dimensionless, 0.01)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut rows = Vec::new();
            let mut tau = 0.0;
            while tau <= window {
                let v = detected.abs_at(tau) / detected.normalization;
                let noisy = v * (1.0 + noise_frac * rng.gen_range(-1.0..1.0));
                rows.push(vec![tau, (1.0 - noise.epsilon) * noisy, noise_frac]);
                tau += 0.1;
            }
            write_csv(
                &ctx.out_path("g1_data.csv"),
                &ctx.header(),
                &["tau_ps", "v", "v_err"],
                rows,
            )?;
        }

        let raw = read_g1_csv(&data_path)?;
        // contrast correction before fitting the normalized model
        let data: Vec<(f64, f64, f64)> = raw
            .iter()
            .map(|&(t, v, e)| {
                (
                    t,
                    v / (1.0 - noise.epsilon),
                    e / (1.0 - noise.epsilon),
                )
            })
            .collect();

        let filter = ctx.pipeline.filter_for(&ctx.base_drive(), false);
        let fit = fit_phonon_params(
            &data,
            &filter,
            ctx.validated.params.phonon.temperature,
            (init_alpha, init_nu_c),
            window,
        )?;

        // model-vs-data overlay at the fitted parameters
        let fitted = PhononParams {
            alpha: fit.params["alpha"],
            nu_c: fit.params["nu_c"],
            temperature: ctx.validated.params.phonon.temperature,
        };
        let model = G1FitModel::new(&fitted, &filter, window)?;
        write_csv(
            &ctx.out_path("fit_overlay.csv"),
            &ctx.header(),
            &["tau_ps", "v_data", "v_err", "v_model"],
            data.iter()
                .filter(|(t, _, _)| *t <= window)
                .map(|&(t, v, e)| vec![t, v, e, model.eval(t)]),
        )?;

        let out = FitOut {
            n_points: data.iter().filter(|(t, _, _)| *t <= window).count(),
            fit,
            init_alpha,
            init_nu_c,
            window_ps: window,
        };
        ctx.write_json("fit.json", &out)?;
        super::common_outputs(ctx, None)
    }
}
