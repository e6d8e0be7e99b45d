//! Run configuration: one TOML file with sections, overridden by flags.

use std::path::{Path, PathBuf};

use ghostimg_core::simulate::{bright_square, synthetic_scene, SyntheticKind, DSNR_ALL_TIERS_LANDMARK_DB, DSNR_FAILURE_LANDMARK_DB};
use ghostimg_core::{AcquisitionPlan, IlluminationMode, Scene, ThresholdPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::{pgm, tables};

pub const OUT_DIR_ENV: &str = "GHOSTIMG_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "ghostimg-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub acquisition: AcquisitionConfig,
    pub noise: NoiseConfig,
    pub roi: RoiConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

/// Either `path` (PGM or grid CSV) or `synthetic` (a generator name).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub path: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub top_tier: Option<u32>,
    pub seed: u64,
    /// `[row, col, size]` of the block for `bright-square`.
    pub target: Option<[usize; 3]>,
}

/// At most one of `measurements` and `tier`; neither means the full basis.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub measurements: Option<usize>,
    pub tier: Option<u32>,
    pub mode: Option<String>,
}

/// At most one of `dsnr_db`, `preset` and `sigma`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub dsnr_db: Option<f64>,
    /// `failure-landmark` or `all-tiers-landmark`.
    pub preset: Option<String>,
    pub sigma: Option<f64>,
    pub mean_offset: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiConfig {
    pub lock_tier: Option<u32>,
    /// Highest tier tried when nothing is found at `lock_tier`.
    pub lock_cap: Option<u32>,
    pub alpha: Option<f64>,
    /// Refinement tier inside the region; defaults to its full resolution.
    pub target_tier: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub dsnr_db: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// Values given on the command line; each one replaces its config entry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scene: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub top_tier: Option<u32>,
    pub measurements: Option<usize>,
    pub tier: Option<u32>,
    pub mode: Option<String>,
    pub dsnr_db: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub lock_tier: Option<u32>,
    pub target_tier: Option<u32>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.scene {
            self.scene.path = Some(p.clone());
            self.scene.synthetic = None;
        }
        if let Some(s) = &o.synthetic {
            self.scene.synthetic = Some(s.clone());
            self.scene.path = None;
        }
        set(&mut self.scene.top_tier, o.top_tier);
        if o.measurements.is_some() {
            self.acquisition.measurements = o.measurements;
            self.acquisition.tier = None;
        }
        if o.tier.is_some() {
            self.acquisition.tier = o.tier;
            self.acquisition.measurements = None;
        }
        set(&mut self.acquisition.mode, o.mode.clone());
        if o.dsnr_db.is_some() {
            self.noise.dsnr_db = o.dsnr_db;
            self.noise.sigma = None;
            self.noise.preset = None;
        }
        if o.sigma.is_some() {
            self.noise.sigma = o.sigma;
            self.noise.dsnr_db = None;
            self.noise.preset = None;
        }
        set(&mut self.noise.seed, o.seed);
        set(&mut self.roi.lock_tier, o.lock_tier);
        set(&mut self.roi.target_tier, o.target_tier);
    }

    /// Flag, then `[output] dir`, then the environment, then a fixed default.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    /// Makes the scene path absolute so a manifest replays from any
    /// working directory.
    pub fn canonicalize_paths(&mut self) -> Result<()> {
        if let Some(p) = &self.scene.path {
            self.scene.path = Some(std::fs::canonicalize(p).map_err(|e| CliError::io(p, e))?);
        }
        Ok(())
    }

    pub fn mode(&self) -> Result<IlluminationMode> {
        parse_mode(self.acquisition.mode.as_deref())
    }

    pub fn scene(&self) -> Result<Scene> {
        let s = &self.scene;
        let scene = match (&s.path, &s.synthetic) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either scene.path or scene.synthetic, not both".into())),
            (None, None) => return Err(CliError::Config("no scene: set scene.path or scene.synthetic".into())),
            (Some(path), None) => {
                if s.target.is_some() {
                    return Err(CliError::Config("scene.target only applies to the bright-square generator".into()));
                }
                load_scene(path)?
            }
            (None, Some(name)) => {
                let kind = SyntheticKind::from_name(name).ok_or_else(|| {
                    let names: Vec<_> = SyntheticKind::ALL.iter().map(|k| k.name()).collect();
                    CliError::Config(format!("unknown synthetic scene {name:?}; expected one of {names:?}"))
                })?;
                let top = s.top_tier.unwrap_or(7);
                match (kind, s.target) {
                    (SyntheticKind::BrightSquare, Some([r, c, size])) => {
                        bright_square(top, (r, c), size, format!("synthetic:{name}:{r},{c},{size}")).map_err(config)?
                    }
                    (_, Some(_)) => {
                        return Err(CliError::Config("scene.target only applies to the bright-square generator".into()))
                    }
                    (_, None) => synthetic_scene(kind, top, s.seed).map_err(config)?,
                }
            }
        };
        if let Some(top) = s.top_tier {
            if top != scene.top_tier() {
                return Err(CliError::Config(format!(
                    "scene.top_tier = {top} but the scene is {0}x{0}",
                    scene.side()
                )));
            }
        }
        Ok(scene)
    }

    pub fn plan(&self, top_tier: u32) -> Result<AcquisitionPlan> {
        let a = &self.acquisition;
        let plan = match (a.measurements, a.tier) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either acquisition.measurements or acquisition.tier".into()))
            }
            (Some(m), None) => AcquisitionPlan::new(top_tier, m),
            (None, Some(t)) => AcquisitionPlan::complete(top_tier, t),
            (None, None) => AcquisitionPlan::complete(top_tier, top_tier),
        };
        plan.map_err(config)
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        let n = &self.noise;
        let target = match (n.dsnr_db, n.preset.as_deref(), n.sigma) {
            (None, None, None) => NoiseTarget::None,
            (Some(d), None, None) => NoiseTarget::Dsnr(d),
            (None, Some(p), None) => NoiseTarget::Dsnr(match p {
                "failure-landmark" => DSNR_FAILURE_LANDMARK_DB,
                "all-tiers-landmark" => DSNR_ALL_TIERS_LANDMARK_DB,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown noise preset {other:?}; expected failure-landmark or all-tiers-landmark"
                    )))
                }
            }),
            (None, None, Some(s)) => NoiseTarget::Sigma(s),
            _ => return Err(CliError::Config("give at most one of noise.dsnr_db, noise.preset, noise.sigma".into())),
        };
        match target {
            NoiseTarget::Dsnr(d) if d.is_nan() => return Err(CliError::Config("noise.dsnr_db is NaN".into())),
            NoiseTarget::Sigma(s) if !(s.is_finite() && s >= 0.0) => {
                return Err(CliError::Config(format!("noise.sigma must be finite and >= 0, got {s}")))
            }
            _ => {}
        }
        if !n.mean_offset.is_finite() {
            return Err(CliError::Config("noise.mean_offset must be finite".into()));
        }
        let noisy = !matches!(target, NoiseTarget::None | NoiseTarget::Dsnr(f64::INFINITY));
        let seed = match n.seed {
            Some(s) => s,
            None if noisy => return Err(CliError::Config("--seed is required for noisy runs".into())),
            None => 0,
        };
        Ok(NoiseSpec {
            target,
            mean_offset: n.mean_offset,
            seed,
        })
    }

    pub fn threshold(&self) -> Result<ThresholdPolicy> {
        let alpha = self.roi.alpha.unwrap_or(ThresholdPolicy::default().alpha);
        if !alpha.is_finite() {
            return Err(CliError::Config("roi.alpha must be finite".into()));
        }
        Ok(ThresholdPolicy { alpha })
    }

    pub fn sweep_points(&self) -> Result<(Vec<f64>, Vec<u64>)> {
        let dsnr = self.sweep.dsnr_db.clone().unwrap_or_else(|| vec![10.0, 20.0, 40.0]);
        let seeds = self.sweep.seeds.clone().unwrap_or_else(|| (0..20).collect());
        if dsnr.is_empty() || dsnr.iter().any(|d| d.is_nan()) {
            return Err(CliError::Config("sweep.dsnr_db must be a non-empty list of numbers".into()));
        }
        if seeds.len() < 2 {
            return Err(CliError::Config("sweep.seeds needs at least two seeds".into()));
        }
        Ok((dsnr, seeds))
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn config(e: ghostimg_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

pub fn parse_mode(name: Option<&str>) -> Result<IlluminationMode> {
    let name = name.unwrap_or("differential");
    IlluminationMode::from_name(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown illumination mode {name:?}; expected signed, differential or binary_offset"
        ))
    })
}

/// Reads a PGM (zero-padded onto a power-of-two square) or a square grid CSV.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let provenance = format!("file:{}", path.display());
    let scene = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        Scene::new(tables::parse_grid(&bytes, path)?, provenance)
    } else {
        let img = pgm::decode(&bytes, path)?;
        Scene::from_rect(img.height, img.width, &img.pixels, provenance)
    };
    scene.map_err(|e| CliError::format(path, e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseTarget {
    None,
    /// Calibrated against the noiseless record's mean reading.
    Dsnr(f64),
    Sigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub target: NoiseTarget,
    pub mean_offset: f64,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_overrides() {
        let mut cfg = RunConfig::from_toml(
            "[scene]\nsynthetic = \"aircraft\"\ntop_tier = 3\n[acquisition]\nmeasurements = 4\nmode = \"signed\"\n",
        )
        .unwrap();
        assert_eq!(cfg.plan(3).unwrap().measurements(), 4);
        cfg.apply(&Overrides {
            tier: Some(2),
            mode: Some("binary_offset".into()),
            ..Overrides::default()
        });
        assert_eq!(cfg.plan(3).unwrap().measurements(), 16);
        assert_eq!(cfg.mode().unwrap(), IlluminationMode::BinaryOffset);
        assert_eq!(cfg.scene().unwrap().side(), 8);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("[scene]\nbogus = 1\n").is_err());
        let cfg = RunConfig::from_toml("[acquisition]\nmode = \"pulsed\"\n").unwrap();
        assert!(matches!(cfg.mode(), Err(CliError::Config(_))));
        let cfg = RunConfig::from_toml("[noise]\ndsnr_db = 20.0\n").unwrap();
        assert!(matches!(cfg.noise(), Err(CliError::Config(m)) if m.contains("--seed")));
        let cfg = RunConfig::from_toml("[noise]\ndsnr_db = 20.0\nsigma = 1.0\nseed = 1\n").unwrap();
        assert!(cfg.noise().is_err());
        let cfg = RunConfig::from_toml("[scene]\nsynthetic = \"aircraft\"\ntop_tier = 3\n[acquisition]\ntier = 4\n").unwrap();
        assert!(cfg.plan(3).is_err());
    }

    #[test]
    fn presets() {
        let cfg = RunConfig::from_toml("[noise]\npreset = \"failure-landmark\"\nseed = 1\n").unwrap();
        assert_eq!(cfg.noise().unwrap().target, NoiseTarget::Dsnr(DSNR_FAILURE_LANDMARK_DB));
    }
}
