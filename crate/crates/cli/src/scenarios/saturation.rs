//! Resonant saturation sweep: emission fractions against drive strength,
//! with atomic-model baseline columns.

use pscatter_core::atomic::{coherent_fraction_atomic, saturation, AtomicParams};
use pscatter_core::error::Result;
use pscatter_core::io::write_csv;
use pscatter_core::pipeline::PointOptions;
use pscatter_core::units::DriveParams;

use crate::context::{par_map, RunContext};

use super::Scenario;

pub struct SaturationSweep;

impl Scenario for SaturationSweep {
    fn name(&self) -> &'static str {
        "saturation-sweep"
    }

    fn summary(&self) -> &'static str {
        "fractions vs drive strength at fixed detuning"
    }

    fn run(&self, ctx: &RunContext) -> Result<()> {
        let delta_lx = ctx.validated.params.drive.delta_lx;
        let s_values = match (
            ctx.scenario_list("sweep", "s_values", pscatter_core::config::Kind::Dimensionless)?,
            ctx.scenario_list("sweep", "omega_values", pscatter_core::config::Kind::Freq)?,
        ) {
            (Some(_), Some(_)) => {
                return Err(pscatter_core::ModelError::Config(
                    "sweep.s_values and sweep.omega_values are mutually exclusive".into(),
                ))
            }
            (Some(s), None) => s,
            (None, Some(omegas)) => omegas
                .iter()
                .map(|&w| ctx.pipeline.saturation_label(w, delta_lx))
                .collect(),
            (None, None) => {
                let points =
                    ctx.scenario_f64("sweep", "points", pscatter_core::config::Kind::Count, 25.0)?
                        as usize;
                let (lo, hi) = (0.01f64, 10.0f64);
                (0..points)
                    .map(|i| {
                        let t = i as f64 / (points - 1).max(1) as f64;
                        lo * (hi / lo).powf(t)
                    })
                    .collect()
            }
        };

        let t1 = ctx.pipeline.t1();
        let rows: Vec<Result<Vec<f64>>> = par_map(&s_values, ctx.workers, |&s| {
            let omega = ctx.pipeline.omega_for_saturation(s, delta_lx);
            let point = ctx
                .pipeline
                .evaluate(DriveParams { omega, delta_lx }, &PointOptions::default())?;
            let atomic = AtomicParams::new(t1, 2.0 * t1, omega, delta_lx)?;
            let f_cs_atomic = coherent_fraction_atomic(&atomic);
            let s_atomic = saturation(&atomic);
            Ok(vec![
                s,
                point.s_effective,
                omega,
                point.fractions.f_cs,
                point.fractions.f_inc,
                point.fractions.f_psb,
                f_cs_atomic,
                1.0 - f_cs_atomic,
                0.0,
                point.fractions.f_cs * (1.0 + point.s_effective),
                s_atomic,
            ])
        });

        let mut data = Vec::with_capacity(rows.len());
        for r in rows {
            data.push(r?);
        }
        write_csv(
            &ctx.out_path("saturation_sweep.csv"),
            &ctx.header(),
            &[
                "s",
                "s_eff",
                "omega",
                "f_cs",
                "f_inc",
                "f_psb",
                "f_cs_atomic",
                "f_inc_atomic",
                "f_psb_atomic",
                "f_cs_times_1ps_eff",
                "s_atomic_check",
            ],
            data,
        )?;
        super::common_outputs(ctx, None)
    }
}
