//! Experiment file: one TOML document with a section per domain type plus one
//! section per command. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sqclock_core::atom::{RamseyGeometry, SqueezedReservoir, TwoLevelAtom};
use sqclock_core::clock::{ClockConfig, DetectionMode, ProjectionSampler};
use sqclock_core::detection::{AtomicResponse, DetectionConfig, PhotonBudget};
use sqclock_core::lo::LocalOscillatorModel;
use sqclock_core::stability::ClockLine;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub atom: Option<TwoLevelAtom>,
    pub reservoir: Option<SqueezedReservoir>,
    pub ramsey: Option<RamseyGeometry>,
    pub detection: Option<DetectionConfig>,
    pub response: Option<AtomicResponse>,
    pub budget: Option<PhotonBudget>,
    pub lo: Option<LocalOscillatorModel>,
    pub line: Option<ClockLine>,
    pub clock: Option<ClockSection>,
    pub fringe: Option<FringeSection>,
    pub spectrum: Option<SpectrumSection>,
    pub snr: Option<SnrSection>,
    pub allan: Option<AllanSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms_per_cycle: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_flux: Option<f64>,
    pub cycle_time: f64,
    #[serde(default)]
    pub detection_mode: DetectionMode,
    #[serde(default)]
    pub sampler: ProjectionSampler,
    pub servo_gain: f64,
    /// Defaults to the half-maximum point `π / (2T)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation_depth: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub n_cycles: usize,
    /// Run coherent and squeezed arms under common random numbers.
    #[serde(default)]
    pub compare: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeSection {
    pub delta_min: f64,
    pub delta_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_points: usize,
    /// Overrides the flux implied by `[clock]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_flux: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    PhiMinus,
    Xi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSection {
    pub sweep: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_flux: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AllanSection {
    /// Existing record CSV; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<PathBuf>,
    /// Averaging times in seconds; octave spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_max: Option<f64>,
    /// Per-cycle S/N for the predicted overlay when no `[clock]` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
}

pub fn grid(min: f64, max: f64, points: usize, name: &str) -> Result<Vec<f64>, CliError> {
    if !(min.is_finite() && max.is_finite()) || points == 0 || (points > 1 && max < min) {
        return Err(CliError::config(format!(
            "{name}: grid needs finite min <= max and points >= 1 (got {min}, {max}, {points})"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| (min * (last - i as f64) + max * i as f64) / last).collect())
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_string()))
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("experiment file serializes")
    }

    pub fn section<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::config(format!("missing section [{name}]")))
    }

    pub fn reservoir(&self) -> SqueezedReservoir {
        self.reservoir.unwrap_or_default()
    }

    /// Assembles and validates the clock configuration.
    pub fn clock_config(&self) -> Result<ClockConfig, CliError> {
        let clock = Self::section(&self.clock, "clock")?;
        let ramsey = *Self::section(&self.ramsey, "ramsey")?;
        let config = ClockConfig {
            atom: *Self::section(&self.atom, "atom")?,
            reservoir: self.reservoir(),
            ramsey,
            atoms_per_cycle: clock.atoms_per_cycle,
            atom_flux: clock.atom_flux,
            cycle_time: clock.cycle_time,
            detection_mode: clock.detection_mode,
            sampler: clock.sampler,
            detection: *Self::section(&self.detection, "detection")?,
            response: *Self::section(&self.response, "response")?,
            budget: *Self::section(&self.budget, "budget")?,
            servo_gain: clock.servo_gain,
            modulation_depth: clock
                .modulation_depth
                .unwrap_or(std::f64::consts::PI / (2.0 * ramsey.free_time)),
            lo: self.lo.unwrap_or_default(),
            line: self.line.unwrap_or_else(|| ClockLine::cs_ramsey(ramsey.free_time)),
            seed: clock.seed,
        };
        config.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }

    /// Flux used by detection-only commands: an explicit override, else the
    /// one implied by `[clock]`.
    pub fn detection_flux(&self, explicit: Option<f64>) -> Result<f64, CliError> {
        if let Some(f) = explicit {
            return Ok(f);
        }
        match &self.clock {
            Some(c) => match (c.atom_flux, c.atoms_per_cycle) {
                (Some(f), _) => Ok(f),
                (None, Some(n)) => Ok(n as f64 / c.cycle_time),
                _ => Err(CliError::config("[clock] defines neither atom_flux nor atoms_per_cycle")),
            },
            None => Err(CliError::config("atom_flux not given and no [clock] section")),
        }
    }

    pub fn override_seed(&mut self, seed: Option<u64>) {
        if let (Some(seed), Some(clock)) = (seed, self.clock.as_mut()) {
            clock.seed = seed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentFile::parse("[atom]\ngamma = 1.0\ngama = 2.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gama") && msg.contains("line 3"), "{msg}");
        assert!(ExperimentFile::parse("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = grid(-1.0, 1.0, 5, "g").unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(grid(1.0, -1.0, 3, "g").is_err());
        assert!(grid(0.0, 1.0, 0, "g").is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let text = "[atom]\ngamma = 2.0\n\n[fringe]\ndelta_min = -1.0\ndelta_max = 1.0\npoints = 3\n";
        let file = ExperimentFile::parse(text).unwrap();
        let again = ExperimentFile::parse(&file.snapshot()).unwrap();
        assert_eq!(file, again);
        assert_eq!(file.snapshot(), again.snapshot());
    }
}
