//! Overlapping Allan deviation, the S/N-limited stability law and log–log
//! slope fitting.
//!
//! The overlapping estimator at `τ = m·τ₀` over `M` samples is
//!
//! ```text
//! σ²(mτ₀) = 1 / (2(M − 2m + 1)) · Σ_k (ȳ_{k+m} − ȳ_k)²,   k = 0 ..= M − 2m
//! ```
//!
//! where `ȳ_k` is the mean of `y_k .. y_{k+m−1}`. Block means come from
//! compensated (double-double) prefix sums, so a constant offset in the data
//! cancels to rounding of the inputs themselves.

use crate::record::FrequencyRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal Cs clock transition frequency, Hz.
pub const CS_CLOCK_HZ: f64 = 9.192_631_770e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("S/N must be positive, got {0}")]
    NonPositiveSnr(f64),
    #[error("averaging time must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("invalid clock line: {0}")]
    InvalidLine(String),
    #[error("slope fit needs at least 3 positive points in range, found {0}")]
    DegenerateFit(usize),
}

/// Clock transition frequency and linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockLine {
    /// Transition frequency, Hz.
    pub nu: f64,
    /// Linewidth, Hz.
    pub delta_nu: f64,
}

impl ClockLine {
    /// Ramsey linewidth `1 / (2T)` on the Cs transition.
    pub fn cs_ramsey(free_time: f64) -> Self {
        Self { nu: CS_CLOCK_HZ, delta_nu: 0.5 / free_time }
    }

    pub fn validate(&self) -> Result<(), StabilityError> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(StabilityError::InvalidLine(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.delta_nu.is_finite() && self.delta_nu > 0.0 && self.delta_nu < self.nu) {
            return Err(StabilityError::InvalidLine(format!(
                "delta_nu must lie in (0, nu), got {}",
                self.delta_nu
            )));
        }
        Ok(())
    }
}

/// Why a requested averaging time produced no point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Omission {
    /// τ is not a positive integer multiple of τ₀.
    NotMultiple { tau: f64 },
    /// Fewer than `3m` samples.
    TooShort { tau: f64, needed: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct StabilityCurve {
    pub taus: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub n_pairs: Vec<usize>,
    #[serde(default)]
    pub omitted: Vec<Omission>,
}

impl StabilityCurve {
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    /// Looks up the point at `tau` (relative match 1e-9).
    pub fn sigma_at(&self, tau: f64) -> Option<f64> {
        self.taus
            .iter()
            .position(|t| (t - tau).abs() <= 1e-9 * tau.abs())
            .map(|i| self.sigmas[i])
    }
}

/// Error-free sum of two floats (Knuth TwoSum).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Double-double prefix sums: `S_k = hi[k] + lo[k] = Σ_{i<k} y_i`.
struct PrefixSums {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PrefixSums {
    fn new(y: &[f64]) -> Self {
        let mut hi = Vec::with_capacity(y.len() + 1);
        let mut lo = Vec::with_capacity(y.len() + 1);
        let (mut h, mut l) = (0.0, 0.0);
        hi.push(h);
        lo.push(l);
        for &v in y {
            let (s, e) = two_sum(h, v);
            let (s2, e2) = two_sum(s, l + e);
            h = s2;
            l = e2;
            hi.push(h);
            lo.push(l);
        }
        Self { hi, lo }
    }

    /// `S_c − 2 S_b + S_a`, evaluated in double-double arithmetic.
    fn second_difference(&self, a: usize, b: usize, c: usize) -> f64 {
        let (s1, e1) = two_sum(self.hi[c], -2.0 * self.hi[b]);
        let (s2, e2) = two_sum(s1, self.hi[a]);
        s2 + (e1 + e2 + self.lo[c] - 2.0 * self.lo[b] + self.lo[a])
    }
}

/// Overlapping Allan deviation of raw samples spaced `tau0` apart.
pub fn allan_deviation_samples(samples: &[f64], tau0: f64, taus: &[f64]) -> StabilityCurve {
    let prefix = PrefixSums::new(samples);
    let len = samples.len();
    let mut curve = StabilityCurve::default();
    for &tau in taus {
        let ratio = tau / tau0;
        let m = ratio.round();
        if !(tau.is_finite() && m >= 1.0 && (ratio - m).abs() <= 1e-9 * m) {
            curve.omitted.push(Omission::NotMultiple { tau });
            continue;
        }
        let m = m as usize;
        if len < 3 * m || m > len / 3 {
            curve.omitted.push(Omission::TooShort { tau, needed: 3 * m, available: len });
            continue;
        }
        let pairs = len - 2 * m + 1;
        let mut acc = 0.0;
        for k in 0..pairs {
            let d = prefix.second_difference(k, k + m, k + 2 * m) / m as f64;
            acc += d * d;
        }
        curve.taus.push(m as f64 * tau0);
        curve.sigmas.push((acc / (2.0 * pairs as f64)).sqrt());
        curve.n_pairs.push(pairs);
    }
    curve
}

/// Overlapping Allan deviation of `record` at each requested `tau` (seconds).
/// Requests that are not multiples of τ₀ or need more than a third of the
/// record are listed in [`StabilityCurve::omitted`].
pub fn allan_deviation(record: &FrequencyRecord, taus: &[f64]) -> StabilityCurve {
    allan_deviation_samples(&record.samples, record.tau0, taus)
}

/// Octave-spaced averaging times `τ₀·2^k` up to a third of the record.
pub fn octave_taus(tau0: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while 3 * m <= len {
        out.push(m as f64 * tau0);
        m *= 2;
    }
    out
}

/// `σ(τ) = δν τ^(−1/2) / (ν · S/N)`.
pub fn predicted_sigma(line: &ClockLine, snr: f64, tau: f64) -> Result<f64, StabilityError> {
    line.validate()?;
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(StabilityError::NonPositiveSnr(snr));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(StabilityError::NonPositiveTau(tau));
    }
    Ok(line.delta_nu / (tau.sqrt() * line.nu * snr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Power-law exponent of σ(τ).
    pub exponent: f64,
    /// Fitted σ at τ = 1 s.
    pub level: f64,
    pub points: usize,
}

/// Least-squares line through `(ln τ, ln σ)` for the points with
/// `lo ≤ τ ≤ hi`.
pub fn fit_slope(curve: &StabilityCurve, tau_range: (f64, f64)) -> Result<SlopeFit, StabilityError> {
    let (lo, hi) = tau_range;
    let pts: Vec<(f64, f64)> = curve
        .taus
        .iter()
        .zip(&curve.sigmas)
        .filter(|(t, s)| **t >= lo && **t <= hi && **s > 0.0 && s.is_finite())
        .map(|(t, s)| (t.ln(), s.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(StabilityError::DegenerateFit(n));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(StabilityError::DegenerateFit(n));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Ok(SlopeFit { exponent, level: (my - exponent * mx).exp(), points: n })
}
