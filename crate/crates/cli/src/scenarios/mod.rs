//! Scenario registry: each runnable figure/analysis pipeline sits behind a
//! common trait, registered by name and selected at runtime.

mod detuning;
mod fit_phonon;
mod fit_spectra;
mod g1_trace;
mod saturation;
mod spectrum;

use pscatter_core::error::Result;

use crate::context::RunContext;

pub trait Scenario: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<()>;
}

pub fn registry() -> Vec<Box<dyn Scenario>> {
    vec![
        Box::new(g1_trace::G1Trace),
        Box::new(spectrum::Spectrum),
        Box::new(saturation::SaturationSweep),
        Box::new(detuning::DetuningSweep),
        Box::new(fit_phonon::FitPhonon),
        Box::new(fit_spectra::FitSpectra),
    ]
}

pub fn find(name: &str) -> Option<Box<dyn Scenario>> {
    registry().into_iter().find(|s| s.name() == name)
}

/// Shared helper: optionally dump the phonon tables and write the verbose
/// diagnostics of an evaluated point.
pub(crate) fn common_outputs(
    ctx: &RunContext,
    point: Option<&pscatter_core::pipeline::PointEvaluation>,
) -> Result<()> {
    if ctx.dump_phonon {
        let tables = &ctx.pipeline.tables;
        let mut rows = Vec::new();
        let n = ((tables.tau_cut / tables.phi_dtau) as usize).min(tables.phi.len() - 1);
        let stride = (n / 4000).max(1);
        for j in (0..=n).step_by(stride) {
            let tau = j as f64 * tables.phi_dtau;
            let phi = tables.phi_at(tau);
            let g = tables.g_at(tau);
            rows.push(vec![tau, phi.re, phi.im, g.re, g.im]);
        }
        pscatter_core::io::write_csv(
            &ctx.out_path("phonon.csv"),
            &ctx.header(),
            &["tau_ps", "re_phi", "im_phi", "re_g", "im_g"],
            rows,
        )?;
    }
    if ctx.verbose {
        if let Some(p) = point {
            let diag =
                pscatter_core::pipeline::PointDiagnostics::from_point(p, &ctx.pipeline.tables);
            ctx.write_json("diagnostics.json", &diag)?;
        }
    }
    Ok(())
}
