//! First-order correlation trace: polaron model with the atomic dashed
//! baseline, fringe contrast, and the emission fractions.

use serde::Serialize;

use pscatter_core::atomic::{atomic_g1_and_spectrum, AtomicParams};
use pscatter_core::correlations::fringe_contrast;
use pscatter_core::error::Result;
use pscatter_core::filter::detect_g1;
use pscatter_core::io::write_csv;
use pscatter_core::noise::gamma_of_detuning;
use pscatter_core::pipeline::PointOptions;
use pscatter_core::spectra::fractions;
use pscatter_core::units::NoiseParams;

use crate::context::RunContext;

use super::Scenario;

pub struct G1Trace;

#[derive(Serialize)]
struct FractionsOut {
    f_psb: f64,
    f_inc: f64,
    f_cs: f64,
    f_psb_atomic: f64,
    f_inc_atomic: f64,
    f_cs_atomic: f64,
    s_label: f64,
    s_effective: f64,
    omega: f64,
    delta_lx: f64,
    gamma_p: f64,
    plateau_visibility: f64,
}

impl Scenario for G1Trace {
    fn name(&self) -> &'static str {
        "g1-trace"
    }

    fn summary(&self) -> &'static str {
        "correlation trace, fringe contrast and fractions at one drive point"
    }

    fn run(&self, ctx: &RunContext) -> Result<()> {
        let drive = ctx.base_drive();
        let dephasing = ctx.scenario_bool("g1", "dephasing", false)?;
        let noise = ctx.validated.params.noise;
        let gamma_pd = if dephasing {
            let resolved = NoiseParams {
                xi: ctx.pipeline.resolved_xi(),
                ..noise
            };
            gamma_of_detuning(drive.delta_lx, &resolved)
        } else {
            0.0
        };

        let opts = PointOptions {
            with_detected_trace: true,
            gamma_pd,
            ..PointOptions::default()
        };
        let point = ctx.pipeline.evaluate(drive, &opts)?;
        let detected = point.detected.as_ref().expect("detected trace requested");

        // atomic baseline with the same lifetime and detection chain
        let t1 = ctx.pipeline.t1();
        let t2 = 1.0 / (0.5 / t1 + gamma_pd);
        let atomic = AtomicParams::new(t1, t2, drive.omega, drive.delta_lx)?;
        let (atomic_trace, atomic_spectrum) =
            atomic_g1_and_spectrum(&atomic, &ctx.validated.params.numerics)?;
        let filter = ctx.pipeline.filter_for(&drive, false);
        let atomic_detected = detect_g1(
            &pscatter_core::correlations::polaron_g1(
                &atomic_trace,
                &pscatter_core::phonon::PhononTables::trivial(),
            )?,
            &filter,
        )?;
        let atomic_fr = fractions(&atomic_spectrum, Some(&filter))?;

        let v = fringe_contrast(detected, noise.epsilon)?;
        let v_atomic = fringe_contrast(&atomic_detected, noise.epsilon)?;

        let header = ctx.header();
        let g = &point.polaron;
        write_csv(
            &ctx.out_path("g1.csv"),
            &header,
            &[
                "tau_ps",
                "re_g1",
                "im_g1",
                "abs_g1_norm",
                "re_g1_atomic",
                "im_g1_atomic",
                "abs_g1_norm_atomic",
            ],
            g.taus.iter().enumerate().map(|(i, &tau)| {
                vec![
                    tau,
                    g.values[i].re,
                    g.values[i].im,
                    g.values[i].norm() / g.normalization,
                    atomic_trace.values[i].re,
                    atomic_trace.values[i].im,
                    atomic_trace.values[i].norm() / atomic_trace.normalization,
                ]
            }),
        )?;
        write_csv(
            &ctx.out_path("fringe.csv"),
            &header,
            &["tau_ps", "v", "v_atomic"],
            g.taus
                .iter()
                .enumerate()
                .map(|(i, &tau)| vec![tau, v[i], v_atomic[i]]),
        )?;

        let plateau_tau = 0.85 * ctx.validated.params.numerics.tau_max;
        let out = FractionsOut {
            f_psb: point.fractions.f_psb,
            f_inc: point.fractions.f_inc,
            f_cs: point.fractions.f_cs,
            f_psb_atomic: atomic_fr.f_psb,
            f_inc_atomic: atomic_fr.f_inc,
            f_cs_atomic: atomic_fr.f_cs,
            s_label: point.s_label,
            s_effective: point.s_effective,
            omega: drive.omega,
            delta_lx: drive.delta_lx,
            gamma_p: point.em.gamma_p,
            plateau_visibility: (1.0 - noise.epsilon) * detected.abs_at(plateau_tau)
                / detected.normalization,
        };
        ctx.write_json("fractions.json", &out)?;
        super::common_outputs(ctx, Some(&point))
    }
}
