//! Pipeline configuration: one JSON document carrying the synthesis
//! parameters, loss parameters, metric constants, watershed depth,
//! output directory, and seed. Unknown keys are rejected and the whole
//! document is validated before any command does work.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nucleoforge_core::loss::LossParams;
use nucleoforge_core::quality::constants;
use nucleoforge_core::synth::SynthConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub synth: SynthConfig,
    pub loss: LossSection,
    pub quality: QualityConstants,
    pub watershed_h: f64,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub lambda: f64,
    pub beta: f64,
}

/// Record of the metric parameterization. The values are fixed by the
/// metrics' reference implementations; a config that changes them is
/// rejected rather than silently producing incomparable scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConstants {
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub ssim_c1: f64,
    pub ssim_c2: f64,
    pub gmsd_c: f64,
    pub fsim_t1: f64,
    pub fsim_t2: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            loss: LossSection::default(),
            quality: QualityConstants::default(),
            watershed_h: nucleoforge_core::seg::watershed::DEFAULT_H,
            out_dir: None,
            seed: None,
        }
    }
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            beta: 1.0,
        }
    }
}

impl Default for QualityConstants {
    fn default() -> Self {
        Self {
            ssim_window: constants::SSIM_WINDOW,
            ssim_sigma: constants::SSIM_SIGMA,
            ssim_c1: constants::SSIM_C1,
            ssim_c2: constants::SSIM_C2,
            gmsd_c: constants::GMSD_C,
            fsim_t1: constants::FSIM_T1,
            fsim_t2: constants::FSIM_T2,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.synth
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        LossParams::new(self.loss.lambda, self.loss.beta)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !self.watershed_h.is_finite() || self.watershed_h <= 0.0 {
            return Err(CliError::Config(format!(
                "watershed_h {} must be a positive real",
                self.watershed_h
            )));
        }
        let q = &self.quality;
        let pinned = QualityConstants::default();
        if q.ssim_window != pinned.ssim_window
            || q.ssim_sigma != pinned.ssim_sigma
            || q.ssim_c1 != pinned.ssim_c1
            || q.ssim_c2 != pinned.ssim_c2
            || q.gmsd_c != pinned.gmsd_c
            || q.fsim_t1 != pinned.fsim_t1
            || q.fsim_t2 != pinned.fsim_t2
        {
            return Err(CliError::Config(
                "metric constants are fixed by the reference implementations; \
                 remove the overrides from the quality section"
                    .into(),
            ));
        }
        Ok(())
    }
}
