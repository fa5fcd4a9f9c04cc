//! Simulation and analysis of Ramsey-interrogated atomic frequency standards
//! read out with coherent or squeezed light.
//!
//! * [`atom`]: two-level Bloch dynamics in a squeezed reservoir and Ramsey fringes.
//! * [`detection`]: photon budget, squeezing spectrum and detection S/N.
//! * [`clock`]: closed-loop Monte Carlo of the servoed clock.
//! * [`stability`]: overlapping Allan deviation and the S/N stability law.
//! * [`lo`], [`rng`], [`record`]: oscillator noise, counter-based random
//!   streams and the frequency record format.

pub mod atom;
pub mod clock;
pub mod detection;
pub mod lo;
pub mod record;
pub mod rng;
pub mod stability;

pub use atom::{
    evolve_bloch, quadrature_decay_rates, rabi_pulse, ramsey_probability, BlochVector, RamseyGeometry,
    SqueezedReservoir, TwoLevelAtom,
};
pub use clock::{run_clock, run_comparison, ClockConfig, DetectionMode};
pub use detection::{snr_coherent, snr_squeezed, squeezing_spectrum, DetectionConfig};
pub use record::FrequencyRecord;
pub use stability::{allan_deviation, fit_slope, predicted_sigma, ClockLine, StabilityCurve};
