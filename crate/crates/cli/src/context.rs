//! Shared run state: resolved configuration, the pipeline, output paths and
//! common output helpers.

use std::path::{Path, PathBuf};

use pscatter_core::config::{quantity, DriveSpec, FileConfig, Kind};
use pscatter_core::error::{ModelError, Result};
use pscatter_core::pipeline::Pipeline;
use pscatter_core::units::{DriveParams, Validated};

pub struct RunContext {
    pub config: FileConfig,
    pub validated: Validated,
    pub drive_spec: DriveSpec,
    pub pipeline: Pipeline,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
    pub verbose: bool,
    pub dump_phonon: bool,
}

impl RunContext {
    pub fn build(
        config_path: Option<&Path>,
        overrides: &[String],
        out_dir: &Path,
        workers: usize,
        seed: u64,
        verbose: bool,
        dump_phonon: bool,
    ) -> Result<Self> {
        let mut config = match config_path {
            Some(p) => FileConfig::load(&resolve_config_path(p)?)?,
            None => FileConfig::empty(),
        };
        for ov in overrides {
            config.apply_override(ov)?;
        }
        let (validated, drive_spec) = config.resolve()?;
        let pipeline = Pipeline::new(&validated)?;
        std::fs::create_dir_all(out_dir)?;
        Ok(RunContext {
            config,
            validated,
            drive_spec,
            pipeline,
            out_dir: out_dir.to_path_buf(),
            workers,
            seed,
            verbose,
            dump_phonon,
        })
    }

    /// Resolve the configured drive against the pipeline's lifetimes.
    pub fn base_drive(&self) -> DriveParams {
        let delta_lx = self.validated.params.drive.delta_lx;
        let omega = match self.drive_spec {
            DriveSpec::Omega(w) => w,
            DriveSpec::Saturation(s) => self.pipeline.omega_for_saturation(s, delta_lx),
        };
        DriveParams { omega, delta_lx }
    }

    /// Header block embedded in every output file.
    pub fn header(&self) -> String {
        let mut h = format!(
            "pscatter {} scenario output\nresolved configuration:\n",
            env!("CARGO_PKG_VERSION")
        );
        h.push_str(&self.config.echo(&self.validated.params));
        for w in &self.pipeline.warnings {
            h.push_str(&format!("warning [{}]: {}\n", w.field, w.message));
        }
        h
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Scenario-table lookup with a default, honoring unit suffixes.
    pub fn scenario_f64(&self, section: &str, key: &str, kind: Kind, default: f64) -> Result<f64> {
        match self.config.section(section).and_then(|t| t.get(key)) {
            Some(v) => quantity(v, kind, &format!("{section}.{key}")),
            None => Ok(default),
        }
    }

    pub fn scenario_bool(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.config.section(section).and_then(|t| t.get(key)) {
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(ModelError::Config(format!(
                "{section}.{key}: expected a boolean, got {other}"
            ))),
            None => Ok(default),
        }
    }

    pub fn scenario_str(&self, section: &str, key: &str) -> Result<Option<String>> {
        match self.config.section(section).and_then(|t| t.get(key)) {
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(ModelError::Config(format!(
                "{section}.{key}: expected a string, got {other}"
            ))),
            None => Ok(None),
        }
    }

    pub fn scenario_list(&self, section: &str, key: &str, kind: Kind) -> Result<Option<Vec<f64>>> {
        match self.config.section(section).and_then(|t| t.get(key)) {
            Some(toml::Value::Array(a)) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    out.push(quantity(v, kind, &format!("{section}.{key}[{i}]"))?);
                }
                Ok(Some(out))
            }
            Some(other) => Err(ModelError::Config(format!(
                "{section}.{key}: expected an array, got {other}"
            ))),
            None => Ok(None),
        }
    }

    /// Write pretty JSON; map keys in `serde_json` objects stay in struct
    /// order, so identical runs produce identical bytes.
    pub fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| ModelError::Config(format!("json serialization: {e}")))?;
        std::fs::write(self.out_path(name), text + "\n")?;
        Ok(())
    }
}

fn resolve_config_path(p: &Path) -> Result<PathBuf> {
    if p.exists() {
        return Ok(p.to_path_buf());
    }
    if p.is_relative() {
        if let Ok(dir) = std::env::var("PSCATTER_CONFIG_DIR") {
            let candidate = Path::new(&dir).join(p);
            if candidate.exists() {
                return Ok(candidate);
            }
        }
    }
    Err(ModelError::Config(format!(
        "config file not found: {}",
        p.display()
    )))
}

/// Index-ordered parallel map over sweep points: results come back in input
/// order regardless of completion order.
pub fn par_map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let n = items.len();
    let mut out: Vec<Option<U>> = (0..n).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Option<U>>> =
        out.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let value = f(&items[i]);
                **slots[i].lock().unwrap() = Some(value);
            });
        }
    });
    out.into_iter().map(|v| v.unwrap()).collect()
}
