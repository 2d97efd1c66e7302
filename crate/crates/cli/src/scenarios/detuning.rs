//! Detuning sweep: raw, dephased and wandering-convolved coherent fractions
//! against laser detuning, plus spectra at selected detunings.

use pscatter_core::atomic::{coherent_fraction_atomic, AtomicParams};
use pscatter_core::error::Result;
use pscatter_core::io::write_csv;
use pscatter_core::noise::{gamma_of_detuning, wandering_fraction, PowerCurves};
use pscatter_core::pipeline::PointOptions;
use pscatter_core::units::{angfreq_to_mev, mev_to_angfreq, DriveParams, NoiseParams};

use crate::context::{par_map, RunContext};

use super::Scenario;

pub struct DetuningSweep;

struct PointRow {
    p_tot: f64,
    p_coh: f64,
    f_raw: f64,
    f_dephased: f64,
    f_atomic_raw: f64,
    f_atomic_dephased: f64,
    p_tot_atomic: f64,
    p_coh_atomic: f64,
}

impl Scenario for DetuningSweep {
    fn name(&self) -> &'static str {
        "detuning-sweep"
    }

    fn summary(&self) -> &'static str {
        "coherent fraction vs laser detuning with noise toggles"
    }

    fn run(&self, ctx: &RunContext) -> Result<()> {
        use pscatter_core::config::Kind;
        let omega = ctx.base_drive().omega;
        let lo = ctx.scenario_f64("detuning", "delta_min", Kind::Freq, mev_to_angfreq(-0.8))?;
        let hi = ctx.scenario_f64("detuning", "delta_max", Kind::Freq, mev_to_angfreq(0.8))?;
        let points =
            ctx.scenario_f64("detuning", "points", Kind::Count, 161.0)? as usize;
        let dephasing = ctx.scenario_bool("detuning", "dephasing", true)?;
        let wandering = ctx.scenario_bool("detuning", "wandering", true)?;
        let spectra_at = ctx
            .scenario_list("detuning", "spectra_at", Kind::Freq)?
            .unwrap_or_default();

        if points < 2 || hi <= lo {
            return Err(pscatter_core::ModelError::Config(
                "detuning grid needs at least two ascending points".into(),
            ));
        }
        let deltas: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();

        let noise = NoiseParams {
            xi: ctx.pipeline.resolved_xi(),
            ..ctx.validated.params.noise
        };
        let t1 = ctx.pipeline.t1();

        let rows: Vec<Result<PointRow>> = par_map(&deltas, ctx.workers, |&delta_lx| {
            let drive = DriveParams { omega, delta_lx };
            let raw = ctx.pipeline.evaluate(drive, &PointOptions::default())?;
            let gamma_pd = gamma_of_detuning(delta_lx, &noise);
            let dephased = if dephasing && gamma_pd > 0.0 {
                ctx.pipeline.evaluate(
                    drive,
                    &PointOptions {
                        gamma_pd,
                        ..PointOptions::default()
                    },
                )?
            } else {
                raw.clone()
            };

            // atomic counterparts with matching lifetimes
            let atomic_raw = AtomicParams::new(t1, 2.0 * t1, omega, delta_lx)?;
            let t2_deph = 1.0 / (0.5 / t1 + gamma_pd);
            let atomic_deph = AtomicParams::new(t1, t2_deph, omega, delta_lx)?;
            let f_atomic_raw = coherent_fraction_atomic(&atomic_raw);
            let f_atomic_dephased = if dephasing {
                coherent_fraction_atomic(&atomic_deph)
            } else {
                f_atomic_raw
            };
            // atomic powers for the wandering convolution: total emission
            // scales with the excited population, the coherent part with
            // the closed-form fraction
            let s_deph = pscatter_core::atomic::saturation(&atomic_deph);
            let p_tot_atomic = 0.5 * s_deph / (1.0 + s_deph);
            let p_coh_atomic = p_tot_atomic * f_atomic_dephased;

            Ok(PointRow {
                p_tot: dephased.p_tot(),
                p_coh: dephased.p_coh,
                f_raw: raw.fractions.f_cs,
                f_dephased: dephased.fractions.f_cs,
                f_atomic_raw,
                f_atomic_dephased,
                p_tot_atomic,
                p_coh_atomic,
            })
        });
        let mut pts = Vec::with_capacity(rows.len());
        for r in rows {
            pts.push(r?);
        }

        let f_wandered = if wandering && noise.wandering_fwhm > 0.0 {
            let curves = PowerCurves {
                deltas: deltas.clone(),
                p_tot: pts.iter().map(|p| p.p_tot).collect(),
                p_coh: pts.iter().map(|p| p.p_coh).collect(),
            };
            wandering_fraction(&curves, noise.wandering_fwhm)?
        } else {
            pts.iter().map(|p| p.f_dephased).collect()
        };
        let f_atomic_wandered = if wandering && noise.wandering_fwhm > 0.0 {
            let curves = PowerCurves {
                deltas: deltas.clone(),
                p_tot: pts.iter().map(|p| p.p_tot_atomic).collect(),
                p_coh: pts.iter().map(|p| p.p_coh_atomic).collect(),
            };
            wandering_fraction(&curves, noise.wandering_fwhm)?
        } else {
            pts.iter().map(|p| p.f_atomic_dephased).collect()
        };

        write_csv(
            &ctx.out_path("detuning_sweep.csv"),
            &ctx.header(),
            &[
                "delta_mev",
                "p_tot",
                "p_coh",
                "f_cs_raw",
                "f_cs_dephased",
                "f_cs_wandered",
                "f_cs_atomic_raw",
                "f_cs_atomic_dephased",
                "f_cs_atomic_wandered",
            ],
            deltas.iter().enumerate().map(|(i, &d)| {
                vec![
                    angfreq_to_mev(d),
                    pts[i].p_tot,
                    pts[i].p_coh,
                    pts[i].f_raw,
                    pts[i].f_dephased,
                    f_wandered[i],
                    pts[i].f_atomic_raw,
                    pts[i].f_atomic_dephased,
                    f_atomic_wandered[i],
                ]
            }),
        )?;

        // spectra at selected detunings, exciton-centered axis
        for &delta_lx in &spectra_at {
            let drive = DriveParams { omega, delta_lx };
            let point = ctx.pipeline.evaluate(drive, &PointOptions::default())?;
            let spec = &point.spectrum;
            let filter = ctx.pipeline.filter_for(&drive, false);
            let keep: Vec<usize> = (0..spec.omegas.len())
                .filter(|&i| (spec.omegas[i] + delta_lx).abs() <= 6.0)
                .collect();
            let stride = (keep.len() / 4000).max(1);
            let mev = angfreq_to_mev(delta_lx);
            let name = format!("spectrum_dlx_{mev:+.3}mev.csv");
            write_csv(
                &ctx.out_path(&name),
                &ctx.header(),
                &[
                    "omega_ps_inv",
                    "omega_mev",
                    "s_opt",
                    "s_sb",
                    "s_total_filtered",
                ],
                keep.iter().step_by(stride).map(|&i| {
                    let w = spec.omegas[i] + delta_lx;
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
        }
        super::common_outputs(ctx, None)
    }
}
