//! Structured text configuration: sections [phonon], [drive], [cavity],
//! [noise], [numerics] with keys matching the parameter records. Energies
//! accept explicit unit suffixes ("meV", "ueV", "ps^-1"); bare numbers are
//! taken in the native internal units.

use std::path::Path;

use crate::error::{ModelError, Result};
use crate::units::{
    mev_to_angfreq, uev_to_angfreq, validate_params, NumericsParams, Params, Validated,
};

/// Dimension expected for a config value, deciding which suffixes apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Angular frequency or energy; native ps^-1, accepts meV/ueV.
    Freq,
    /// Time; native ps, accepts ns.
    Time,
    /// Coupling strength alpha; native ps^2.
    TimeSquared,
    /// Temperature in kelvin.
    Temperature,
    Dimensionless,
    Count,
}

/// Interpret a TOML value of the given kind, honoring unit suffixes on
/// strings like "2.51 meV" or "0.02 ps".
pub fn quantity(value: &toml::Value, kind: Kind, field: &str) -> Result<f64> {
    let bad = |msg: String| ModelError::Config(format!("{field}: {msg}"));
    match value {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => {
            let t = s.trim();
            let split = t
                .find(|c: char| !(c.is_ascii_digit() || "+-.eE".contains(c)))
                .unwrap_or(t.len());
            let (num, unit) = t.split_at(split);
            let x: f64 = num
                .trim()
                .parse()
                .map_err(|_| bad(format!("cannot parse number from {t:?}")))?;
            let unit = unit.trim();
            match (kind, unit) {
                (_, "") => Ok(x),
                (Kind::Freq, "meV") => Ok(mev_to_angfreq(x)),
                (Kind::Freq, "ueV") | (Kind::Freq, "µeV") => Ok(uev_to_angfreq(x)),
                (Kind::Freq, "ps^-1") | (Kind::Freq, "1/ps") | (Kind::Freq, "ps-1") => Ok(x),
                (Kind::Time, "ps") => Ok(x),
                (Kind::Time, "ns") => Ok(1e3 * x),
                (Kind::TimeSquared, "ps^2") | (Kind::TimeSquared, "ps2") => Ok(x),
                (Kind::Temperature, "K") => Ok(x),
                _ => Err(bad(format!(
                    "unit {unit:?} is not valid here (expected {kind:?})"
                ))),
            }
        }
        other => Err(bad(format!("expected a number, got {other}"))),
    }
}

/// Drive strength as configured: an explicit Rabi frequency, or a
/// saturation label resolved against the pipeline's lifetimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveSpec {
    Omega(f64),
    Saturation(f64),
}

/// Parsed configuration file plus override handling.
#[derive(Debug, Clone)]
pub struct FileConfig {
    pub raw: toml::value::Table,
}

impl FileConfig {
    pub fn empty() -> Self {
        FileConfig {
            raw: toml::value::Table::new(),
        }
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let raw: toml::value::Table = toml::from_str(text)
            .map_err(|e| ModelError::Config(format!("config parse error: {e}")))?;
        Ok(FileConfig { raw })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ModelError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }

    /// Apply a `section.key=value` override; the value is parsed as TOML
    /// (falling back to a string, so `drive.omega=25.6 ueV` works).
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment.split_once('=').ok_or_else(|| {
            ModelError::Config(format!("override {assignment:?} is not KEY=VALUE"))
        })?;
        // parse through a one-line document so booleans, numbers, arrays and
        // quoted strings all work; bare words fall back to strings
        let parsed: toml::Value = toml::from_str::<toml::value::Table>(&format!(
            "v = {}",
            value.trim()
        ))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.trim().to_string()));
        let mut parts = path.trim().split('.').collect::<Vec<_>>();
        if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
            return Err(ModelError::Config(format!("bad override key {path:?}")));
        }
        let last = parts.pop().unwrap();
        let mut table = &mut self.raw;
        for p in parts {
            let entry = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::value::Table::new()));
            table = entry.as_table_mut().ok_or_else(|| {
                ModelError::Config(format!("override {path:?}: {p} is not a table"))
            })?;
        }
        table.insert(last.to_string(), parsed);
        Ok(())
    }

    pub fn section(&self, name: &str) -> Option<&toml::value::Table> {
        self.raw.get(name).and_then(|v| v.as_table())
    }

    fn field(
        &self,
        section: &str,
        key: &str,
        kind: Kind,
        default: f64,
    ) -> Result<f64> {
        match self.section(section).and_then(|t| t.get(key)) {
            Some(v) => quantity(v, kind, &format!("{section}.{key}")),
            None => Ok(default),
        }
    }

    fn reject_unknown(&self, section: &str, known: &[&str]) -> Result<()> {
        if let Some(t) = self.section(section) {
            for k in t.keys() {
                if !known.contains(&k.as_str()) {
                    return Err(ModelError::Config(format!(
                        "unknown key {section}.{k}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolve the physics sections against the defaults and validate.
    pub fn resolve(&self) -> Result<(Validated, DriveSpec)> {
        self.reject_unknown("phonon", &["alpha", "nu_c", "temperature"])?;
        self.reject_unknown("drive", &["omega", "s", "delta_lx"])?;
        self.reject_unknown("cavity", &["g", "kappa", "delta_xc"])?;
        self.reject_unknown(
            "noise",
            &[
                "gamma_max",
                "xi",
                "wandering_fwhm",
                "epsilon",
                "laser_mu",
                "instrument_dtau",
            ],
        )?;
        self.reject_unknown(
            "numerics",
            &[
                "nu_max_factor",
                "quad_points",
                "tau_max",
                "dtau",
                "fft_size",
                "ss_tol",
            ],
        )?;

        let mut p = Params::default();
        p.phonon.alpha = self.field("phonon", "alpha", Kind::TimeSquared, p.phonon.alpha)?;
        p.phonon.nu_c = self.field("phonon", "nu_c", Kind::Freq, p.phonon.nu_c)?;
        p.phonon.temperature =
            self.field("phonon", "temperature", Kind::Temperature, p.phonon.temperature)?;

        let drive_table = self.section("drive");
        let has_omega = drive_table.is_some_and(|t| t.contains_key("omega"));
        let has_s = drive_table.is_some_and(|t| t.contains_key("s"));
        if has_omega && has_s {
            return Err(ModelError::Config(
                "drive.omega and drive.s are mutually exclusive".into(),
            ));
        }
        p.drive.delta_lx = self.field("drive", "delta_lx", Kind::Freq, 0.0)?;
        let spec = if has_s {
            let s = self.field("drive", "s", Kind::Dimensionless, 0.0)?;
            if s < 0.0 {
                return Err(ModelError::Config("drive.s must be non-negative".into()));
            }
            p.drive.omega = 0.0;
            DriveSpec::Saturation(s)
        } else {
            p.drive.omega = self.field("drive", "omega", Kind::Freq, p.drive.omega)?;
            DriveSpec::Omega(p.drive.omega)
        };

        p.cavity.g = self.field("cavity", "g", Kind::Freq, p.cavity.g)?;
        p.cavity.kappa = self.field("cavity", "kappa", Kind::Freq, p.cavity.kappa)?;
        p.cavity.delta_xc = self.field("cavity", "delta_xc", Kind::Freq, 0.0)?;

        p.noise.gamma_max = self.field("noise", "gamma_max", Kind::Freq, p.noise.gamma_max)?;
        p.noise.xi = self.field("noise", "xi", Kind::Freq, p.noise.xi)?;
        p.noise.wandering_fwhm = self.field(
            "noise",
            "wandering_fwhm",
            Kind::Freq,
            p.noise.wandering_fwhm,
        )?;
        p.noise.epsilon = self.field("noise", "epsilon", Kind::Dimensionless, p.noise.epsilon)?;
        p.noise.laser_mu = self.field("noise", "laser_mu", Kind::Freq, p.noise.laser_mu)?;
        p.noise.instrument_dtau = self.field(
            "noise",
            "instrument_dtau",
            Kind::Time,
            p.noise.instrument_dtau,
        )?;

        let d = NumericsParams::default();
        p.numerics.nu_max_factor =
            self.field("numerics", "nu_max_factor", Kind::Dimensionless, d.nu_max_factor)?;
        p.numerics.quad_points =
            self.field("numerics", "quad_points", Kind::Count, d.quad_points as f64)? as usize;
        p.numerics.tau_max = self.field("numerics", "tau_max", Kind::Time, d.tau_max)?;
        p.numerics.dtau = self.field("numerics", "dtau", Kind::Time, d.dtau)?;
        p.numerics.fft_size =
            self.field("numerics", "fft_size", Kind::Count, d.fft_size as f64)? as usize;
        p.numerics.ss_tol = self.field("numerics", "ss_tol", Kind::Dimensionless, d.ss_tol)?;

        let validated = validate_params(p)?;
        Ok((validated, spec))
    }

    /// Deterministic text of the fully resolved physics parameters plus any
    /// extra sections, for output-file headers.
    pub fn echo(&self, resolved: &Params) -> String {
        let mut out = toml::to_string_pretty(resolved).unwrap_or_default();
        let core = ["phonon", "drive", "cavity", "noise", "numerics"];
        let mut extra: Vec<(&String, &toml::Value)> = self
            .raw
            .iter()
            .filter(|(k, _)| !core.contains(&k.as_str()))
            .collect();
        extra.sort_by(|a, b| a.0.cmp(b.0));
        for (k, v) in extra {
            out.push_str(&format!("\n[{k}]\n"));
            if let Some(t) = v.as_table() {
                let mut keys: Vec<_> = t.iter().collect();
                keys.sort_by(|a, b| a.0.cmp(b.0));
                for (kk, vv) in keys {
                    out.push_str(&format!("{kk} = {vv}\n"));
                }
            }
        }
        out
    }
}
