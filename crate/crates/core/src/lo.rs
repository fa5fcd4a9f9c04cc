//! Free-running local-oscillator frequency noise.
//!
//! White FM with one-sided level `h0` (`S_y(f) = h0`) is drawn per step as an
//! independent normal of variance `h0 / (2·dt)`, the variance of `y` averaged
//! over `dt`.
//!
//! Flicker FM (`S_y(f) = h₋₁ / f`) is the sum of [`FLICKER_STAGES`] first-order
//! (Ornstein–Uhlenbeck) sources with correlation times `dt·10^k`,
//! `k = 0..5`, each of stationary variance `h₋₁·ln 10`. Equal variance per
//! decade of correlation time sums to a `1/f` spectrum between the stage
//! corners, so the Allan deviation is flat near `sqrt(2 ln 2 · h₋₁)` for
//! averaging times between roughly `2·dt` and `10⁴·dt`.

use crate::rng::{stream, Purpose};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_10, TAU};

pub const FLICKER_STAGES: usize = 5;

/// Decade spacing of the flicker stage correlation times.
pub const FLICKER_DECADE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LocalOscillatorModel {
    /// White FM level `h0`, 1/Hz.
    #[serde(default)]
    pub white_fm: f64,
    /// Flicker FM level `h₋₁`.
    #[serde(default)]
    pub flicker_fm: f64,
    /// Constant detuning of the free-running oscillator, rad/s.
    #[serde(default)]
    pub initial_offset: f64,
}

impl LocalOscillatorModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.white_fm.is_finite() && self.white_fm >= 0.0) {
            return Err(format!("white_fm must be >= 0, got {}", self.white_fm));
        }
        if !(self.flicker_fm.is_finite() && self.flicker_fm >= 0.0) {
            return Err(format!("flicker_fm must be >= 0, got {}", self.flicker_fm));
        }
        if !self.initial_offset.is_finite() {
            return Err("initial_offset must be finite".into());
        }
        Ok(())
    }

    fn stage_sigma(&self) -> f64 {
        (self.flicker_fm * LN_10).sqrt()
    }
}

/// Flicker filter bank state (fractional frequency per stage).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LoState {
    pub stages: [f64; FLICKER_STAGES],
}

impl LoState {
    /// Draws every stage from its stationary distribution, using the stream
    /// reserved for initialisation.
    pub fn stationary(model: &LocalOscillatorModel, seed: u64) -> Self {
        let sigma = model.stage_sigma();
        if sigma == 0.0 {
            return Self::default();
        }
        let mut rng = stream(seed, 0, Purpose::LocalOscillatorInit);
        Self {
            stages: std::array::from_fn(|_| sigma * rng.sample::<f64, _>(StandardNormal)),
        }
    }

    pub fn flicker(&self) -> f64 {
        self.stages.iter().sum()
    }
}

/// Advances the oscillator by `dt` and returns the new state together with the
/// fractional frequency offset `y` of the free-running oscillator over the
/// step, including the constant `initial_offset / (2π ν)`.
pub fn lo_step<R: Rng + ?Sized>(
    model: &LocalOscillatorModel,
    prev: LoState,
    dt: f64,
    nu_hz: f64,
    rng: &mut R,
) -> (LoState, f64) {
    assert!(dt > 0.0, "lo_step requires dt > 0");
    let white = if model.white_fm > 0.0 {
        (model.white_fm / (2.0 * dt)).sqrt() * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    };
    let mut next = prev;
    let sigma = model.stage_sigma();
    if sigma > 0.0 {
        let mut tau_c = dt;
        for stage in next.stages.iter_mut() {
            let a = (-dt / tau_c).exp();
            let z: f64 = rng.sample(StandardNormal);
            *stage = a * *stage + sigma * (1.0 - a * a).sqrt() * z;
            tau_c *= FLICKER_DECADE;
        }
    }
    let y = model.initial_offset / (TAU * nu_hz) + white + next.flicker();
    (next, y)
}
