//! Closed-loop Monte Carlo clock: a noisy local oscillator is interrogated
//! with Ramsey fringes, the detected atom numbers feed a square-wave
//! modulation servo and the steered frequency is recorded.
//!
//! One record sample per cycle pair:
//!
//! 1. The oscillator advances by `2·cycle_time` and has free-running detuning
//!    `δ_free` (rad/s); the steered detuning is `δ = δ_free + c`.
//! 2. The two cycles interrogate at `δ + m` and `δ − m` (`m` the modulation
//!    depth) and count `c₊`, `c₋` atoms.
//! 3. The error `e = (c₊ − c₋)/(c₊ + c₋)` is divided by the discriminant slope
//!    `D = de/dδ` at lock, and the correction becomes `c ← c − g·e/D`.
//! 4. The recorded sample is the post-correction fractional frequency
//!    `(δ_free + c) / (2π ν)`.
//!
//! Random draws come from [`crate::rng::stream`] keyed by the pair index, so a
//! run is a pure function of its configuration.

use crate::atom::{ramsey_probability, AtomError, GeometryMode, RamseyGeometry, SqueezedReservoir, TwoLevelAtom};
use crate::detection::{
    effective_noise_scale, AtomicResponse, DetectionConfig, DetectionError, PhotonBudget,
};
use crate::lo::{lo_step, LoState, LocalOscillatorModel};
use crate::record::{FrequencyRecord, RecordMetadata};
use crate::rng::{stream, Purpose};
use crate::stability::{ClockLine, StabilityError};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid clock configuration: {0}")]
    Config(String),
    #[error("servo gain {0} outside (0, 2): the loop would diverge")]
    UnstableGain(f64),
    #[error("lock lost at pair {pair}: |δ|·T = {phase:.3} rad exceeds π")]
    LockLost { pair: usize, phase: f64 },
    #[error("need at least 2 cycles, got {0}")]
    TooFewCycles(usize),
    #[error("invalid sampler input: {0}")]
    Sampler(String),
    #[error(transparent)]
    Atom(#[from] AtomError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    #[default]
    Coherent,
    Squeezed,
}

/// How projection noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionSampler {
    /// Exact binomial draws in coherent mode, the scaled Gaussian in squeezed
    /// mode.
    #[default]
    Exact,
    /// Scaled Gaussian in both modes. With `noise_scale = 1` the two modes
    /// then consume identical random numbers.
    Gaussian,
    /// No projection noise: the count is `n·p`.
    Noiseless,
}

/// Concrete per-draw sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountSampler {
    Binomial,
    Gaussian,
    Noiseless,
}

/// Draws the number of atoms detected in the upper state.
///
/// * `Binomial`: exact `Binomial(n_atoms, p)`; `noise_scale` is ignored.
/// * `Gaussian`: `n·p + noise_scale·sqrt(n·p(1−p))·z` clamped to `[0, n]`,
///   consuming exactly one standard normal.
/// * `Noiseless`: `n·p`.
pub fn sample_detected_atoms<R: Rng + ?Sized>(
    p: f64,
    n_atoms: u64,
    sampler: CountSampler,
    noise_scale: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::Sampler(format!("probability {p} outside [0, 1]")));
    }
    if n_atoms == 0 {
        return Err(SimError::Sampler("n_atoms must be >= 1".into()));
    }
    if !(noise_scale > 0.0 && noise_scale.is_finite()) {
        return Err(SimError::Sampler(format!("noise_scale must be > 0, got {noise_scale}")));
    }
    let n = n_atoms as f64;
    Ok(match sampler {
        CountSampler::Binomial => {
            let dist = Binomial::new(n_atoms, p).map_err(|e| SimError::Sampler(e.to_string()))?;
            dist.sample(rng) as f64
        }
        CountSampler::Gaussian => {
            let z: f64 = rng.sample(StandardNormal);
            let mean = n * p;
            (mean + noise_scale * (mean * (1.0 - p)).sqrt() * z).clamp(0.0, n)
        }
        CountSampler::Noiseless => n * p,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    pub atom: TwoLevelAtom,
    /// Reservoir acting during the Ramsey sequence; vacuum is lossless.
    #[serde(default)]
    pub reservoir: SqueezedReservoir,
    pub ramsey: RamseyGeometry,
    /// Atoms per cycle (fountain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms_per_cycle: Option<u64>,
    /// Atom flux, atoms/s (beam).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_flux: Option<f64>,
    /// Duration of one interrogation cycle, s.
    pub cycle_time: f64,
    #[serde(default)]
    pub detection_mode: DetectionMode,
    #[serde(default)]
    pub sampler: ProjectionSampler,
    pub detection: DetectionConfig,
    pub response: AtomicResponse,
    pub budget: PhotonBudget,
    pub servo_gain: f64,
    /// Square-wave modulation half-depth, rad/s.
    pub modulation_depth: f64,
    #[serde(default)]
    pub lo: LocalOscillatorModel,
    pub line: ClockLine,
    #[serde(default)]
    pub seed: u64,
}

impl ClockConfig {
    pub fn is_fountain(&self) -> bool {
        matches!(self.ramsey.mode, GeometryMode::Fountain)
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.reservoir.validate()?;
        self.ramsey.validate()?;
        self.detection.validate()?;
        self.response.validate()?;
        self.budget.validate()?;
        self.line.validate()?;
        self.lo.validate().map_err(SimError::Config)?;
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.is_fountain() {
            match self.atoms_per_cycle {
                Some(n) if n >= 1 => {}
                _ => return bad("fountain geometry needs atoms_per_cycle >= 1".into()),
            }
            if self.atom_flux.is_some() {
                return bad("atom_flux applies to beam geometry only".into());
            }
        } else {
            match self.atom_flux {
                Some(f) if f.is_finite() && f > 0.0 => {}
                _ => return bad("beam geometry needs atom_flux > 0".into()),
            }
            if self.atoms_per_cycle.is_some() {
                return bad("atoms_per_cycle applies to fountain geometry only".into());
            }
        }
        if !(self.cycle_time.is_finite() && self.cycle_time >= self.ramsey.free_time) {
            return bad(format!(
                "cycle_time {} must be >= free_time {}",
                self.cycle_time, self.ramsey.free_time
            ));
        }
        if self.atoms_per_cycle_count() < 1 {
            return bad("fewer than one atom per cycle".into());
        }
        if !(self.servo_gain > 0.0 && self.servo_gain < 2.0) {
            return Err(SimError::UnstableGain(self.servo_gain));
        }
        let depth_phase = self.modulation_depth * self.ramsey.free_time;
        if !(depth_phase > 0.0 && depth_phase < PI) {
            return bad(format!(
                "modulation_depth·T = {depth_phase} must lie in (0, π)"
            ));
        }
        self.noise_scale()?;
        Ok(())
    }

    /// Atoms interrogated per cycle.
    pub fn atoms_per_cycle_count(&self) -> u64 {
        match (self.atoms_per_cycle, self.atom_flux) {
            (Some(n), _) => n,
            (None, Some(flux)) => (flux * self.cycle_time).round() as u64,
            (None, None) => 0,
        }
    }

    /// Flux through the detection region, atoms/s.
    pub fn atom_flux_rate(&self) -> f64 {
        match self.atom_flux {
            Some(f) => f,
            None => self.atoms_per_cycle.unwrap_or(0) as f64 / self.cycle_time,
        }
    }

    /// Projection-noise scale: `sqrt(1 + ξS)` when squeezed, one otherwise.
    pub fn noise_scale(&self) -> Result<f64> {
        match self.detection_mode {
            DetectionMode::Coherent => Ok(1.0),
            DetectionMode::Squeezed => Ok(effective_noise_scale(&self.detection, self.atom_flux_rate())?),
        }
    }

    pub fn count_sampler(&self) -> CountSampler {
        match (self.sampler, self.detection_mode) {
            (ProjectionSampler::Noiseless, _) => CountSampler::Noiseless,
            (ProjectionSampler::Gaussian, _) | (ProjectionSampler::Exact, DetectionMode::Squeezed) => {
                CountSampler::Gaussian
            }
            (ProjectionSampler::Exact, DetectionMode::Coherent) => CountSampler::Binomial,
        }
    }

    /// Two-point samples are spaced by two cycles.
    pub fn tau0(&self) -> f64 {
        2.0 * self.cycle_time
    }

    /// Ensemble-averaged transition probability at LO detuning `delta`.
    pub fn fringe(&self, delta: f64) -> Result<f64> {
        Ok(ramsey_probability(&self.ramsey, &self.atom, delta, &self.reservoir)?)
    }

    /// Slope of the normalized error signal at lock, `p'(m) / p(m)` (1/(rad/s)).
    pub fn discriminant_slope(&self) -> Result<f64> {
        let m = self.modulation_depth;
        let h = 1e-4 / self.ramsey.free_time;
        let dp = (self.fringe(m + h)? - self.fringe(m - h)?) / (2.0 * h);
        let p = self.fringe(m)?;
        if p <= 0.0 || dp == 0.0 {
            return Err(SimError::Config("modulation depth sits on a flat or empty part of the fringe".into()));
        }
        Ok(dp / p)
    }

    /// Per-cycle atomic S/N at the working point,
    /// `n·p / (scale·sqrt(n·p(1−p)))`.
    pub fn projection_snr(&self) -> Result<f64> {
        if self.count_sampler() == CountSampler::Noiseless {
            return Ok(f64::INFINITY);
        }
        let p = self.fringe(self.modulation_depth)?;
        let n = self.atoms_per_cycle_count() as f64;
        let scale = match self.count_sampler() {
            CountSampler::Binomial => 1.0,
            _ => self.noise_scale()?,
        };
        Ok(n * p / (scale * (n * p * (1.0 - p)).sqrt()))
    }

    /// FNV-1a hash of the configuration's debug form.
    pub fn config_hash(&self) -> u64 {
        let text = format!("{self:?}");
        text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }

    pub fn with_mode(&self, mode: DetectionMode) -> Self {
        Self { detection_mode: mode, ..self.clone() }
    }
}

/// Runs `n_cycles` interrogation cycles (`n_cycles / 2` servo corrections).
pub fn run_clock(config: &ClockConfig, n_cycles: usize) -> Result<FrequencyRecord> {
    config.validate()?;
    if n_cycles < 2 {
        return Err(SimError::TooFewCycles(n_cycles));
    }
    let pairs = n_cycles / 2;
    let seed = config.seed;
    let n_atoms = config.atoms_per_cycle_count();
    let sampler = config.count_sampler();
    let scale = config.noise_scale()?;
    let slope = config.discriminant_slope()?;
    let nu = config.line.nu;
    let to_fractional = 1.0 / (TAU * nu);
    let depth = config.modulation_depth;
    let dt = config.tau0();

    let mut lo_state = LoState::stationary(&config.lo, seed);
    let mut correction = 0.0;
    let mut skipped = 0u64;
    let mut samples = Vec::with_capacity(pairs);
    for k in 0..pairs {
        let index = k as u64;
        let (next, y_free) = lo_step(&config.lo, lo_state, dt, nu, &mut stream(seed, index, Purpose::LocalOscillator));
        lo_state = next;
        let free = y_free * TAU * nu;
        let delta = free + correction;
        let phase = delta.abs() * config.ramsey.free_time;
        if phase.is_nan() || phase > PI {
            return Err(SimError::LockLost { pair: k, phase });
        }
        let p_plus = config.fringe(delta + depth)?;
        let p_minus = config.fringe(delta - depth)?;
        let c_plus = sample_detected_atoms(p_plus, n_atoms, sampler, scale, &mut stream(seed, index, Purpose::DetectPlus))?;
        let c_minus = sample_detected_atoms(p_minus, n_atoms, sampler, scale, &mut stream(seed, index, Purpose::DetectMinus))?;
        let total = c_plus + c_minus;
        if total > 0.0 {
            let error = (c_plus - c_minus) / total;
            correction -= config.servo_gain * error / slope;
        } else {
            skipped += 1;
        }
        samples.push((free + correction) * to_fractional);
    }
    Ok(FrequencyRecord {
        tau0: dt,
        samples,
        metadata: RecordMetadata { config_hash: config.config_hash(), seed, skipped_pairs: skipped },
    })
}

/// Coherent and squeezed runs sharing seed and oscillator noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub coherent: FrequencyRecord,
    pub squeezed: FrequencyRecord,
}

/// Runs the coherent and squeezed arms concurrently under common random
/// numbers: same seed, so the same oscillator and detection streams.
pub fn run_comparison(config: &ClockConfig, n_cycles: usize) -> Result<Comparison> {
    let coherent_cfg = config.with_mode(DetectionMode::Coherent);
    let squeezed_cfg = config.with_mode(DetectionMode::Squeezed);
    let (coherent, squeezed) = std::thread::scope(|s| {
        let handle = s.spawn(|| run_clock(&squeezed_cfg, n_cycles));
        let coherent = run_clock(&coherent_cfg, n_cycles);
        (coherent, handle.join().expect("squeezed arm panicked"))
    });
    Ok(Comparison { coherent: coherent?, squeezed: squeezed? })
}

/// Test and example configuration: a projection-noise-limited Cs fountain
/// with `T = 0.5 s`, 1 s cycles, 10⁶ atoms per cycle, π/2 pulses, modulation
/// at the half-maximum points and a deadbeat servo. The detection constants
/// give `ξS = −0.75` at `φ₋ = 0`.
pub fn reference_fountain() -> ClockConfig {
    let free_time = 0.5;
    let atoms = 1_000_000u64;
    let flux = atoms as f64 / 1.0;
    ClockConfig {
        atom: TwoLevelAtom { gamma: TAU * 5.2e6, detuning: 0.0 },
        reservoir: SqueezedReservoir::vacuum(),
        ramsey: RamseyGeometry::fountain(PI / 2.0, free_time),
        atoms_per_cycle: Some(atoms),
        atom_flux: None,
        cycle_time: 1.0,
        detection_mode: DetectionMode::Coherent,
        sampler: ProjectionSampler::Exact,
        detection: DetectionConfig {
            eta_s: 1.0,
            eta_0: 1.0,
            p_lo: 1.0,
            p_x: 1.0,
            phi_minus: 0.0,
            omega_0: 0.0,
            xi: 0.75,
            f_width: 1.0,
            c_scale: 1.0 / flux,
            coupling: Default::default(),
            shape: Default::default(),
            projection: Default::default(),
        },
        response: AtomicResponse::symmetric(1.0),
        budget: PhotonBudget { alpha: 1.0, t_meas: 1.0, beta: 1.0, a_amp: 100.0, bandwidth: 1.0 },
        servo_gain: 1.0,
        modulation_depth: PI / (2.0 * free_time),
        lo: LocalOscillatorModel::default(),
        line: ClockLine::cs_ramsey(free_time),
        seed: 1,
    }
}
