//! Two-level Bloch dynamics: instantaneous Rabi rotations, damped and driven
//! free evolution in a broadband squeezed reservoir, and Ramsey fringes.
//!
//! Conventions used throughout:
//!
//! * `w = -1` is the ground state, `w = +1` the excited state.
//! * The equation of motion is `dr/dt = Ω × r − damping`, with the drive vector
//!   `Ω = (rabi·cos φ, rabi·sin φ, detuning)`. A positive rotation is
//!   right-handed about the axis, so a π/2 pulse with phase 0 takes the ground
//!   state `(0, 0, −1)` to `(0, 1, 0)`.
//! * Transverse damping acts on two principal axes in the u–v plane. The slow
//!   axis sits at angle `m_phase / 2` from `u` (the quadrature angle is half the
//!   phase of the correlation `M`), the fast axis is perpendicular to it. With
//!   `m_phase = 0` the slow axis is `u`.
//! * Longitudinal relaxation is `dw/dt = −γ_z (w − w_ss)` with
//!   `w_ss = −1 / (2N + 1)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Slack allowed on the Bloch-ball radius and on norm preservation.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Largest allowed product of step size and fastest rate in [`evolve_bloch`].
pub const MAX_STEP_RATE: f64 = 0.1;

/// Step-rate product used when a duration is split into integrator steps.
const INTERNAL_STEP_RATE: f64 = 0.01;

/// Half-width of the truncated-normal free-time distribution, in standard
/// deviations.
const SPREAD_TRUNCATION: f64 = 3.0;

/// Nodes used for the free-time quadrature in beam mode.
const SPREAD_NODES: usize = 121;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomError {
    #[error("reservoir violates |M| <= sqrt(N(N+1)): N = {n}, |M| = {m}")]
    ReservoirConstraint { n: f64, m: f64 },
    #[error("invalid reservoir parameter: {0}")]
    InvalidReservoir(String),
    #[error("decay rate must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("integration step too large: dt * max rate = {product} (limit {MAX_STEP_RATE})")]
    StepTooLarge { product: f64 },
    #[error("time step must be non-negative and finite, got {0}")]
    InvalidStep(f64),
    #[error("pulse area {0} outside [0, 2π]")]
    PulseArea(f64),
    #[error("invalid Ramsey geometry: {0}")]
    InvalidGeometry(String),
    #[error("Bloch vector norm {0} exceeds 1")]
    OutsideBall(f64),
}

pub type Result<T> = std::result::Result<T, AtomError>;

/// Pseudo-spin state of the two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochVector {
    pub fn new(u: f64, v: f64, w: f64) -> Result<Self> {
        let state = Self { u, v, w };
        let norm = state.norm();
        if !norm.is_finite() || norm > 1.0 + NORM_TOLERANCE {
            return Err(AtomError::OutsideBall(norm));
        }
        Ok(state)
    }

    pub const fn ground() -> Self {
        Self { u: 0.0, v: 0.0, w: -1.0 }
    }

    pub const fn excited() -> Self {
        Self { u: 0.0, v: 0.0, w: 1.0 }
    }

    pub fn norm(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    /// Population of the upper state, `(1 + w) / 2`, clamped to `[0, 1]`.
    pub fn excitation_probability(&self) -> f64 {
        (0.5 * (1.0 + self.w)).clamp(0.0, 1.0)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let (du, dv, dw) = (self.u - other.u, self.v - other.v, self.w - other.w);
        (du * du + dv * dv + dw * dw).sqrt()
    }

    fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.w]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self { u: a[0], v: a[1], w: a[2] }
    }
}

/// Broadband squeezed vacuum characterised by the mean photon number `N` and
/// the two-photon correlation `M = |M| e^{i m_phase}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezedReservoir {
    pub n_photon: f64,
    pub m_mag: f64,
    #[serde(default)]
    pub m_phase: f64,
}

impl Default for SqueezedReservoir {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl SqueezedReservoir {
    pub fn new(n_photon: f64, m_mag: f64, m_phase: f64) -> Result<Self> {
        let res = Self { n_photon, m_mag, m_phase };
        res.validate()?;
        Ok(res)
    }

    pub const fn vacuum() -> Self {
        Self { n_photon: 0.0, m_mag: 0.0, m_phase: 0.0 }
    }

    /// Minimum-uncertainty squeezing, `|M| = sqrt(N(N+1))`.
    pub fn ideal(n_photon: f64, m_phase: f64) -> Result<Self> {
        Self::new(n_photon, (n_photon * (n_photon + 1.0)).sqrt(), m_phase)
    }

    pub fn is_vacuum(&self) -> bool {
        self.n_photon == 0.0 && self.m_mag == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_photon.is_finite() && self.n_photon >= 0.0) {
            return Err(AtomError::InvalidReservoir(format!(
                "N must be finite and >= 0, got {}",
                self.n_photon
            )));
        }
        if !(self.m_mag.is_finite() && self.m_mag >= 0.0) {
            return Err(AtomError::InvalidReservoir(format!(
                "|M| must be finite and >= 0, got {}",
                self.m_mag
            )));
        }
        if !self.m_phase.is_finite() {
            return Err(AtomError::InvalidReservoir("m_phase must be finite".into()));
        }
        // Relative slack so that `ideal()` round-trips through sqrt.
        let bound = (self.n_photon * (self.n_photon + 1.0)).sqrt();
        if self.m_mag > bound * (1.0 + 1e-12) {
            return Err(AtomError::ReservoirConstraint { n: self.n_photon, m: self.m_mag });
        }
        Ok(())
    }

    /// Steady-state inversion `−1 / (2N + 1)`.
    pub fn steady_state_inversion(&self) -> f64 {
        -1.0 / (2.0 * self.n_photon + 1.0)
    }

    /// Angle of the slow transverse axis measured from `u`.
    pub fn slow_axis_angle(&self) -> f64 {
        0.5 * self.m_phase
    }
}

/// Effective two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelAtom {
    /// Natural decay rate, rad/s.
    pub gamma: f64,
    /// Static detuning of the atom from the drive, rad/s.
    #[serde(default)]
    pub detuning: f64,
}

impl TwoLevelAtom {
    pub fn new(gamma: f64, detuning: f64) -> Result<Self> {
        let atom = Self { gamma, detuning };
        atom.validate()?;
        Ok(atom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(AtomError::NonPositiveGamma(self.gamma));
        }
        if !self.detuning.is_finite() {
            return Err(AtomError::InvalidGeometry("atom detuning must be finite".into()));
        }
        Ok(())
    }
}

/// Distribution of the Ramsey free time across the atomic ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySpread {
    /// Every atom sees the nominal free time.
    #[default]
    Delta,
    /// Free time `T·(1 + rel_width·x)` with `x` standard normal truncated to ±3.
    TruncatedNormal { rel_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryMode {
    Beam {
        #[serde(default)]
        spread: VelocitySpread,
    },
    #[default]
    Fountain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyGeometry {
    /// Rotation angle per interaction zone, rad.
    pub pulse_area: f64,
    /// Free evolution time between the zones, s.
    pub free_time: f64,
    /// Duration of each pulse, s. Zero means instantaneous rotations.
    #[serde(default)]
    pub pulse_duration: f64,
    #[serde(default)]
    pub mode: GeometryMode,
}

impl RamseyGeometry {
    pub fn fountain(pulse_area: f64, free_time: f64) -> Self {
        Self { pulse_area, free_time, pulse_duration: 0.0, mode: GeometryMode::Fountain }
    }

    pub fn beam(pulse_area: f64, free_time: f64, spread: VelocitySpread) -> Self {
        Self { pulse_area, free_time, pulse_duration: 0.0, mode: GeometryMode::Beam { spread } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.free_time.is_finite() && self.free_time > 0.0) {
            return Err(AtomError::InvalidGeometry(format!(
                "free_time must be > 0, got {}",
                self.free_time
            )));
        }
        if !(self.pulse_duration.is_finite() && self.pulse_duration >= 0.0) {
            return Err(AtomError::InvalidGeometry(format!(
                "pulse_duration must be >= 0, got {}",
                self.pulse_duration
            )));
        }
        check_area(self.pulse_area)?;
        if let GeometryMode::Beam { spread: VelocitySpread::TruncatedNormal { rel_width } } =
            self.mode
        {
            // Keeps every quadrature node at a positive free time.
            if !(rel_width.is_finite() && (0.0..1.0 / SPREAD_TRUNCATION).contains(&rel_width)) {
                return Err(AtomError::InvalidGeometry(format!(
                    "rel_width must lie in [0, 1/3), got {rel_width}"
                )));
            }
        }
        Ok(())
    }

    /// Free-time quadrature nodes and weights (weights sum to one).
    pub fn free_time_nodes(&self) -> Vec<(f64, f64)> {
        match self.mode {
            GeometryMode::Beam { spread: VelocitySpread::TruncatedNormal { rel_width } }
                if rel_width > 0.0 =>
            {
                let h = 2.0 * SPREAD_TRUNCATION / SPREAD_NODES as f64;
                let raw: Vec<(f64, f64)> = (0..SPREAD_NODES)
                    .map(|i| {
                        let x = -SPREAD_TRUNCATION + (i as f64 + 0.5) * h;
                        (self.free_time * (1.0 + rel_width * x), (-0.5 * x * x).exp())
                    })
                    .collect();
                let total: f64 = raw.iter().map(|(_, w)| w).sum();
                raw.into_iter().map(|(t, w)| (t, w / total)).collect()
            }
            _ => vec![(self.free_time, 1.0)],
        }
    }
}

/// Principal relaxation rates in a squeezed reservoir, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    pub slow: f64,
    pub fast: f64,
    pub longitudinal: f64,
}

impl DecayRates {
    fn max(&self) -> f64 {
        self.slow.max(self.fast).max(self.longitudinal)
    }
}

/// Slow, fast and longitudinal decay rates for a two-level atom of natural
/// linewidth `gamma` coupled to `res`:
/// `γ(N + ½ − |M|)`, `γ(N + ½ + |M|)` and `γ(2N + 1)`.
pub fn quadrature_decay_rates(res: &SqueezedReservoir, gamma: f64) -> Result<DecayRates> {
    res.validate()?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(AtomError::NonPositiveGamma(gamma));
    }
    let n = res.n_photon;
    Ok(DecayRates {
        // Ideal squeezing can round a hair below zero.
        slow: (gamma * (n + 0.5 - res.m_mag)).max(0.0),
        fast: gamma * (n + 0.5 + res.m_mag),
        longitudinal: gamma * (2.0 * n + 1.0),
    })
}

/// Whether the slow-quadrature lifetime `1/γ_slow` exceeds `interaction_time`.
pub fn slow_quadrature_outlasts(
    res: &SqueezedReservoir,
    gamma: f64,
    interaction_time: f64,
) -> Result<bool> {
    let rates = quadrature_decay_rates(res, gamma)?;
    Ok(rates.slow == 0.0 || 1.0 / rates.slow > interaction_time)
}

/// Linear generator `dr/dt = A r + b` of the damped, driven Bloch equations.
#[derive(Debug, Clone, Copy)]
struct Generator {
    a: [[f64; 3]; 3],
    b: [f64; 3],
    max_rate: f64,
}

impl Generator {
    fn new(
        rates: Option<(DecayRates, f64, f64)>,
        rabi: f64,
        drive_phase: f64,
        detuning: f64,
    ) -> Self {
        let (ox, oy, oz) = (rabi * drive_phase.cos(), rabi * drive_phase.sin(), detuning);
        // Ω × r
        let mut a = [[0.0, -oz, oy], [oz, 0.0, -ox], [-oy, ox, 0.0]];
        let mut b = [0.0; 3];
        let mut max_rate = rabi.abs().max(detuning.abs());
        if let Some((r, angle, w_ss)) = rates {
            let (s, c) = angle.sin_cos();
            a[0][0] -= r.slow * c * c + r.fast * s * s;
            a[1][1] -= r.slow * s * s + r.fast * c * c;
            let off = (r.slow - r.fast) * s * c;
            a[0][1] -= off;
            a[1][0] -= off;
            a[2][2] -= r.longitudinal;
            b[2] = r.longitudinal * w_ss;
            max_rate = max_rate.max(r.max());
        }
        Self { a, b, max_rate }
    }

    fn derivative(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = self.b;
        for (i, row) in self.a.iter().enumerate() {
            out[i] += row[0] * x[0] + row[1] * x[1] + row[2] * x[2];
        }
        out
    }

    fn rk4_step(&self, x: [f64; 3], dt: f64) -> [f64; 3] {
        let add = |x: [f64; 3], k: [f64; 3], h: f64| [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]];
        let k1 = self.derivative(x);
        let k2 = self.derivative(add(x, k1, 0.5 * dt));
        let k3 = self.derivative(add(x, k2, 0.5 * dt));
        let k4 = self.derivative(add(x, k3, dt));
        std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }

    /// Integrates over `duration` in equal steps of at most
    /// `INTERNAL_STEP_RATE / max_rate`.
    fn integrate(&self, state: BlochVector, duration: f64) -> BlochVector {
        if duration == 0.0 {
            return state;
        }
        let steps = if self.max_rate > 0.0 {
            ((duration * self.max_rate / INTERNAL_STEP_RATE).ceil() as usize).max(1)
        } else {
            1
        };
        let dt = duration / steps as f64;
        let mut x = state.to_array();
        for _ in 0..steps {
            x = self.rk4_step(x, dt);
        }
        BlochVector::from_array(x)
    }
}

fn damping_for(res: &SqueezedReservoir, gamma: f64) -> Result<Option<(DecayRates, f64, f64)>> {
    let rates = quadrature_decay_rates(res, gamma)?;
    Ok(Some((rates, res.slow_axis_angle(), res.steady_state_inversion())))
}

/// Advances `state` by one fourth-order Runge–Kutta step of length `dt` under
/// a drive of Rabi frequency `rabi` along `u`, the atom's detuning and the
/// reservoir damping.
pub fn evolve_bloch(
    state: BlochVector,
    atom: &TwoLevelAtom,
    res: &SqueezedReservoir,
    rabi: f64,
    dt: f64,
) -> Result<BlochVector> {
    atom.validate()?;
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(AtomError::InvalidStep(dt));
    }
    if dt == 0.0 {
        return Ok(state);
    }
    let gen = Generator::new(damping_for(res, atom.gamma)?, rabi, 0.0, atom.detuning);
    let product = dt * gen.max_rate;
    if product >= MAX_STEP_RATE {
        return Err(AtomError::StepTooLarge { product });
    }
    Ok(BlochVector::from_array(gen.rk4_step(state.to_array(), dt)))
}

/// Evolves for an arbitrary `duration`, splitting it into steps well inside
/// the step-size bound.
pub fn evolve_for(
    state: BlochVector,
    atom: &TwoLevelAtom,
    res: &SqueezedReservoir,
    rabi: f64,
    duration: f64,
) -> Result<BlochVector> {
    atom.validate()?;
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(AtomError::InvalidStep(duration));
    }
    let gen = Generator::new(damping_for(res, atom.gamma)?, rabi, 0.0, atom.detuning);
    Ok(gen.integrate(state, duration))
}

fn check_area(area: f64) -> Result<()> {
    if !(area.is_finite() && (0.0..=TAU).contains(&area)) {
        return Err(AtomError::PulseArea(area));
    }
    Ok(())
}

/// Instantaneous rotation by `area` about the equatorial axis
/// `(cos phase, sin phase, 0)`.
pub fn rabi_pulse(state: BlochVector, area: f64, phase: f64) -> Result<BlochVector> {
    check_area(area)?;
    Ok(rotate(state, [phase.cos(), phase.sin(), 0.0], area))
}

/// Rodrigues rotation of `state` about the unit vector `axis`.
fn rotate(state: BlochVector, axis: [f64; 3], angle: f64) -> BlochVector {
    let r = state.to_array();
    let (s, c) = angle.sin_cos();
    let k = axis;
    let cross = [k[1] * r[2] - k[2] * r[1], k[2] * r[0] - k[0] * r[2], k[0] * r[1] - k[1] * r[0]];
    let dot = k[0] * r[0] + k[1] * r[1] + k[2] * r[2];
    BlochVector::from_array(std::array::from_fn(|i| {
        r[i] * c + cross[i] * s + k[i] * dot * (1.0 - c)
    }))
}

/// One Ramsey sequence with a fixed free time.
fn ramsey_single(
    geom: &RamseyGeometry,
    free_time: f64,
    atom: &TwoLevelAtom,
    detuning: f64,
    res: &SqueezedReservoir,
) -> Result<f64> {
    let damping = if res.is_vacuum() { None } else { damping_for(res, atom.gamma)? };
    let pulse = |state: BlochVector| -> BlochVector {
        if geom.pulse_duration > 0.0 {
            let rabi = geom.pulse_area / geom.pulse_duration;
            Generator::new(damping, rabi, 0.0, detuning).integrate(state, geom.pulse_duration)
        } else {
            rotate(state, [1.0, 0.0, 0.0], geom.pulse_area)
        }
    };
    let mut state = pulse(BlochVector::ground());
    state = match damping {
        None => rotate(state, [0.0, 0.0, 1.0], detuning * free_time),
        Some(_) => Generator::new(damping, 0.0, 0.0, detuning).integrate(state, free_time),
    };
    state = pulse(state);
    Ok(state.excitation_probability())
}

/// Transition probability after a pulse–free evolution–pulse sequence starting
/// from the ground state.
///
/// The free-precession detuning is `atom.detuning + lo_detuning`. A vacuum
/// reservoir is the lossless idealization: no damping is applied. Any other
/// reservoir damps the free evolution (and finite pulses) with the rates of
/// [`quadrature_decay_rates`]. In beam mode with a velocity spread the result
/// is the ensemble average over the free-time distribution.
pub fn ramsey_probability(
    geom: &RamseyGeometry,
    atom: &TwoLevelAtom,
    lo_detuning: f64,
    res: &SqueezedReservoir,
) -> Result<f64> {
    geom.validate()?;
    atom.validate()?;
    res.validate()?;
    let detuning = atom.detuning + lo_detuning;
    let mut p = 0.0;
    for (t, weight) in geom.free_time_nodes() {
        p += weight * ramsey_single(geom, t, atom, detuning, res)?;
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Central fringe contrast, `p(0) − p(π/T)`.
pub fn fringe_contrast(
    geom: &RamseyGeometry,
    atom: &TwoLevelAtom,
    res: &SqueezedReservoir,
) -> Result<f64> {
    let top = ramsey_probability(geom, atom, 0.0, res)?;
    let bottom = ramsey_probability(geom, atom, PI / geom.free_time, res)?;
    Ok(top - bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn vacuum_rates() {
        let r = quadrature_decay_rates(&SqueezedReservoir::vacuum(), 1.0).unwrap();
        assert_eq!((r.slow, r.fast, r.longitudinal), (0.5, 0.5, 1.0));
    }

    #[test]
    fn ideal_squeezing_rates() {
        let res = SqueezedReservoir::new(1.0, SQRT_2, 0.0).unwrap();
        let r = quadrature_decay_rates(&res, 1.0).unwrap();
        assert!(close(r.slow, 0.08578644, 1e-8));
        assert!(close(r.fast, 2.91421356, 1e-8));
        assert_eq!(r.longitudinal, 3.0);
    }

    #[test]
    fn over_squeezed_reservoir_rejected() {
        assert!(matches!(
            SqueezedReservoir::new(1.0, 1.5, 0.0),
            Err(AtomError::ReservoirConstraint { .. })
        ));
        let bad = SqueezedReservoir { n_photon: 1.0, m_mag: 1.5, m_phase: 0.0 };
        assert!(quadrature_decay_rates(&bad, 1.0).is_err());
        assert!(quadrature_decay_rates(&SqueezedReservoir::vacuum(), 0.0).is_err());
    }

    #[test]
    fn pulse_examples() {
        let s = rabi_pulse(BlochVector::ground(), FRAC_PI_2, 0.0).unwrap();
        assert!(close(s.u, 0.0, 1e-12) && close(s.v, 1.0, 1e-12) && close(s.w, 0.0, 1e-12));
        let s = rabi_pulse(BlochVector::ground(), PI, 0.0).unwrap();
        assert!(close(s.w, 1.0, 1e-12));
        let start = BlochVector::new(0.3, -0.4, 0.5).unwrap();
        let s = rabi_pulse(start, TAU, 1.1).unwrap();
        assert!(s.distance(&start) < NORM_TOLERANCE);
        assert!(rabi_pulse(start, 7.0, 0.0).is_err());
        assert!(rabi_pulse(start, -0.1, 0.0).is_err());
    }

    #[test]
    fn pulse_phase_selects_axis() {
        // About v, the ground state tips towards -u.
        let s = rabi_pulse(BlochVector::ground(), FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(close(s.u, -1.0, 1e-12) && close(s.v, 0.0, 1e-12));
    }

    #[test]
    fn zero_step_is_identity() {
        let atom = TwoLevelAtom::new(1.0, 0.3).unwrap();
        let s = BlochVector::new(0.1, 0.2, 0.3).unwrap();
        assert_eq!(evolve_bloch(s, &atom, &SqueezedReservoir::vacuum(), 2.0, 0.0).unwrap(), s);
    }

    #[test]
    fn step_bound_enforced() {
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let err = evolve_bloch(BlochVector::ground(), &atom, &SqueezedReservoir::vacuum(), 0.0, 0.2);
        assert!(matches!(err, Err(AtomError::StepTooLarge { .. })));
        let err = evolve_bloch(BlochVector::ground(), &atom, &SqueezedReservoir::vacuum(), 5.0, 0.05);
        assert!(matches!(err, Err(AtomError::StepTooLarge { .. })));
        assert!(evolve_bloch(BlochVector::ground(), &atom, &SqueezedReservoir::vacuum(), 0.0, -1.0).is_err());
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let res = SqueezedReservoir::vacuum();
        let mut s = BlochVector::excited();
        for _ in 0..1000 {
            s = evolve_bloch(s, &atom, &res, 0.0, 1e-3).unwrap();
        }
        let expected = 2.0 * (-1.0f64).exp() - 1.0;
        assert!((s.w - expected).abs() < 1e-6, "w = {}", s.w);
    }

    #[test]
    fn slow_quadrature_decay_matches_closed_form() {
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let res = SqueezedReservoir::ideal(1.0, 0.0).unwrap();
        let s = evolve_for(BlochVector::new(1.0, 0.0, 0.0).unwrap(), &atom, &res, 0.0, 1.0).unwrap();
        let expected = (-(1.5 - SQRT_2)).exp();
        assert!((s.u - expected).abs() / expected < 1e-5);
        assert!(close(s.u, 0.91779, 1e-5));
        assert!(s.v.abs() < 1e-15);
    }

    #[test]
    fn rotated_slow_axis_follows_half_phase() {
        // m_phase = π puts the slow axis along v.
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let res = SqueezedReservoir::ideal(1.0, PI).unwrap();
        let s = evolve_for(BlochVector::new(0.0, 1.0, 0.0).unwrap(), &atom, &res, 0.0, 1.0).unwrap();
        assert!((s.v - (-(1.5 - SQRT_2)).exp()).abs() < 1e-6);
        assert!(s.u.abs() < 1e-9);
    }

    #[test]
    fn ideal_ramsey_points() {
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let vac = SqueezedReservoir::vacuum();
        let g = RamseyGeometry::fountain(FRAC_PI_2, 0.5);
        let p = |d: f64| ramsey_probability(&g, &atom, d, &vac).unwrap();
        assert!(close(p(0.0), 1.0, 1e-9));
        assert!(close(p(PI / 0.5), 0.0, 1e-9));
        assert!(close(p(FRAC_PI_2 / 0.5), 0.5, 1e-9));
    }

    #[test]
    fn finite_pulses_match_instantaneous_on_resonance() {
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let mut g = RamseyGeometry::fountain(FRAC_PI_2, 1.0);
        g.pulse_duration = 1e-3;
        let p = ramsey_probability(&g, &atom, 0.0, &SqueezedReservoir::vacuum()).unwrap();
        assert!(close(p, 1.0, 1e-9));
    }

    #[test]
    fn squeezed_free_evolution_against_closed_form() {
        // After the first pulse the coherence lies on v, the fast axis for
        // m_phase = 0; the second pulse maps v onto w.
        let atom = TwoLevelAtom::new(1.0, 0.0).unwrap();
        let res = SqueezedReservoir::ideal(1.0, 0.0).unwrap();
        let g = RamseyGeometry::fountain(FRAC_PI_2, 1.0);
        let p = ramsey_probability(&g, &atom, 0.0, &res).unwrap();
        let expected = 0.5 * (1.0 + (-(1.5 + SQRT_2)).exp());
        assert!((p - expected).abs() < 1e-9, "{p} vs {expected}");
    }

    #[test]
    fn geometry_validation() {
        assert!(RamseyGeometry::fountain(FRAC_PI_2, 0.0).validate().is_err());
        assert!(RamseyGeometry::fountain(7.0, 1.0).validate().is_err());
        let g = RamseyGeometry::beam(FRAC_PI_2, 1.0, VelocitySpread::TruncatedNormal { rel_width: 0.4 });
        assert!(g.validate().is_err());
        let g = RamseyGeometry::beam(FRAC_PI_2, 1.0, VelocitySpread::TruncatedNormal { rel_width: 0.1 });
        let total: f64 = g.free_time_nodes().iter().map(|(_, w)| w).sum();
        assert!(close(total, 1.0, 1e-12));
        assert!(g.free_time_nodes().iter().all(|(t, _)| *t > 0.0));
    }

    #[test]
    fn slow_quadrature_lifetime_check() {
        let res = SqueezedReservoir::ideal(1.0, 0.0).unwrap();
        // 1/γ_slow ≈ 11.66 s
        assert!(slow_quadrature_outlasts(&res, 1.0, 10.0).unwrap());
        assert!(!slow_quadrature_outlasts(&res, 1.0, 12.0).unwrap());
        assert!(!slow_quadrature_outlasts(&SqueezedReservoir::vacuum(), 1.0, 3.0).unwrap());
    }
}
