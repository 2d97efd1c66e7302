//! Emission spectrum at one drive point: optical and sideband parts plus
//! the cavity-filtered total.

use pscatter_core::error::Result;
use pscatter_core::io::write_csv;
use pscatter_core::pipeline::PointOptions;
use pscatter_core::units::angfreq_to_mev;

use crate::context::RunContext;

use super::Scenario;

pub struct Spectrum;

impl Scenario for Spectrum {
    fn name(&self) -> &'static str {
        "spectrum"
    }

    fn summary(&self) -> &'static str {
        "sampled emission spectrum and fractions at one drive point"
    }

    fn run(&self, ctx: &RunContext) -> Result<()> {
        let drive = ctx.base_drive();
        let point = ctx.pipeline.evaluate(drive, &PointOptions::default())?;
        let span = ctx.scenario_f64(
            "spectrum",
            "span",
            pscatter_core::config::Kind::Freq,
            12.0,
        )?;
        // re-center on the bare exciton when requested (laser frame default)
        let exciton_frame = ctx.scenario_bool("spectrum", "exciton_frame", false)?;
        let offset = if exciton_frame { drive.delta_lx } else { 0.0 };

        let spec = &point.spectrum;
        let filter = ctx.pipeline.filter_for(&drive, false);
        let n = spec.omegas.len();
        let keep: Vec<usize> = (0..n)
            .filter(|&i| spec.omegas[i].abs() <= span)
            .collect();
        let stride = (keep.len() / 6000).max(1);

        write_csv(
            &ctx.out_path("spectrum.csv"),
            &ctx.header(),
            &[
                "omega_ps_inv",
                "omega_mev",
                "s_opt",
                "s_sb",
                "s_total_filtered",
            ],
            keep.iter().step_by(stride).map(|&i| {
                let w = spec.omegas[i] + offset;
                let h = filter.response(spec.omegas[i]);
                vec![
                    w,
                    angfreq_to_mev(w),
                    spec.s_opt[i],
                    spec.s_sb[i],
                    h * (spec.s_opt[i] + spec.s_sb[i]),
                ]
            }),
        )?;
        ctx.write_json("fractions.json", &point.fractions)?;
        super::common_outputs(ctx, Some(&point))
    }
}
