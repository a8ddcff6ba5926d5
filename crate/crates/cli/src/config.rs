//! Pipeline configuration document and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use regiofit::identify::IdentifyOptions;
use regiofit::lagfit::LagSearchSpec;
use regiofit::prep::SmoothingSpec;
use regiofit::{FitWindow, RegionCode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One raw file and the adapter describing its layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceEntry {
    /// Relative to `data_dir`.
    pub file: PathBuf,
    /// Adapter JSON, relative to the configuration file.
    pub adapter: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    /// `q = 1 / max(f)^2` per region.
    #[default]
    AutoInverseMaxSq,
    Explicit(BTreeMap<RegionCode, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
    pub smoothing: SmoothingSpec,
    pub window: FitWindow,
    /// Days at the end of the window used to fit the linear correction.
    pub tail_days: usize,
    pub lag_spec: LagSearchSpec,
    pub solver: IdentifyOptions,
    pub weights_mode: WeightsMode,
    /// Regions to process; empty means every mainland region with data.
    pub regions: Vec<RegionCode>,
    pub sources: Vec<SourceEntry>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("."),
            output_dir: PathBuf::from("out"),
            smoothing: SmoothingSpec::default(),
            window: FitWindow::default(),
            tail_days: 14,
            lag_spec: LagSearchSpec::default(),
            solver: IdentifyOptions::default(),
            weights_mode: WeightsMode::default(),
            regions: Vec::new(),
            sources: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Reads a configuration file. Relative paths inside it are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data_dir = base.join(&cfg.data_dir);
        cfg.output_dir = base.join(&cfg.output_dir);
        for src in &mut cfg.sources {
            src.adapter = base.join(&src.adapter);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Input(msg));
        if self.tail_days == 0 || self.tail_days > self.window.len() {
            return bad(format!(
                "tail_days {} must be between 1 and the window length {}",
                self.tail_days,
                self.window.len()
            ));
        }
        if self.lag_spec.eta_min > self.lag_spec.eta_max {
            return bad(format!(
                "lag_spec.eta_min {} exceeds eta_max {}",
                self.lag_spec.eta_min, self.lag_spec.eta_max
            ));
        }
        self.solver
            .solver
            .validate()
            .map_err(|e| CliError::Input(format!("solver: {e}")))?;
        if !(self.solver.f_floor > 0.0 && self.solver.restart_step > 0.0) {
            return bad("solver.f_floor and solver.restart_step must be positive".into());
        }
        if let WeightsMode::Explicit(map) = &self.weights_mode {
            if let Some((r, q)) = map.iter().find(|(_, q)| !(q.is_finite() && **q > 0.0)) {
                return bad(format!("weight for region {r} must be positive, got {q}"));
            }
        }
        Ok(())
    }

    pub fn wants(&self, region: RegionCode) -> bool {
        self.regions.is_empty() || self.regions.contains(&region)
    }
}

/// Parses `<start>:<end>` with ISO dates.
pub fn parse_window(text: &str) -> Result<FitWindow, String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("expected <start>:<end>, got {text:?}"))?;
    let date = |s: &str| {
        chrono::NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
    };
    FitWindow::new(date(a)?, date(b)?).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_document() {
        let cfg: PipelineConfig = serde_json::from_str(
            r#"{"smoothing":{"window":7,"alignment":"trailing"},"weights_mode":{"explicit":{"84":0.5}},"regions":[84,11]}"#,
        )
        .unwrap();
        assert_eq!(cfg.smoothing, SmoothingSpec::trailing(7));
        assert_eq!(cfg.regions.len(), 2);
        assert!(matches!(cfg.weights_mode, WeightsMode::Explicit(ref m) if m.len() == 1));
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus":1}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"regions":[6]}"#).is_err());
    }

    #[test]
    fn window_flag() {
        let w = parse_window("2020-03-17:2020-04-28").unwrap();
        assert_eq!(w, FitWindow::default());
        assert!(parse_window("2020-04-28:2020-03-17").is_err());
        assert!(parse_window("2020-03-17").is_err());
    }
}
