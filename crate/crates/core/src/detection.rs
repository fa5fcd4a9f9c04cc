//! Detection-stage budget: photon number, projection-noise term, squeezing
//! spectrum and the coherent/squeezed signal-to-noise ratios.
//!
//! Sign convention: the squeezing spectrum `S` is negative in the
//! reduced-noise quadrature (`φ₋ = 0` with the default forms), and squeezed
//! detection beats coherent detection exactly when `ξS < 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("bandwidth must be positive, got {0}")]
    ZeroBandwidth(f64),
    #[error("invalid detection parameter: {0}")]
    InvalidParameter(String),
    #[error("unphysical noise denominator 1 + ξS = {0} (must be > 0)")]
    UnphysicalDenominator(f64),
}

pub type Result<T> = std::result::Result<T, DetectionError>;

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(DetectionError::InvalidParameter(what()))
    }
}

/// Inputs of the photon number `N = α·T·(β|A|)² / B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonBudget {
    /// Detector scale.
    pub alpha: f64,
    /// Measurement time, s.
    pub t_meas: f64,
    /// Field coupling.
    pub beta: f64,
    /// Driving-field amplitude |A|.
    pub a_amp: f64,
    /// Detection bandwidth, Hz.
    pub bandwidth: f64,
}

impl PhotonBudget {
    pub fn validate(&self) -> Result<()> {
        if self.bandwidth == 0.0 {
            return Err(DetectionError::ZeroBandwidth(self.bandwidth));
        }
        for (name, value) in [
            ("alpha", self.alpha),
            ("t_meas", self.t_meas),
            ("beta", self.beta),
            ("a_amp", self.a_amp),
            ("bandwidth", self.bandwidth),
        ] {
            require(value.is_finite() && value >= 0.0, || {
                format!("{name} must be finite and >= 0, got {value}")
            })?;
        }
        require(self.t_meas > 0.0, || "t_meas must be > 0".into())
    }
}

pub fn photon_number(b: &PhotonBudget) -> Result<f64> {
    b.validate()?;
    let field = b.beta * b.a_amp;
    Ok(b.alpha * b.t_meas * field * field / b.bandwidth)
}

/// Form of the prefactor `C(η_S, η_0, Ṅ_AT, P_LO, P_x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// `c_scale · η_S · η_0 · sqrt(P_LO · P_x) · Ṅ_AT`
    #[default]
    Separable,
    /// `c_scale · η_S · η_0 · sqrt(P_LO · P_x)`, independent of the flux.
    FluxIndependent,
}

/// Form of the field-impact factor `F(Ω₀)`; all forms equal −1 at Ω₀ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumShape {
    /// `−w² / (w² + Ω₀²)`
    #[default]
    Lorentzian,
    /// `−exp(−Ω₀² / (2w²))`
    Gaussian,
}

/// How the projection-noise term enters the squeezing spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectionWiring {
    /// Already contained in `C·F`.
    #[default]
    Folded,
    /// Added as `c_scale · projection_noise_term(Ṅ_AT, theta, φ₋)`.
    Additive { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub eta_s: f64,
    pub eta_0: f64,
    /// Local-oscillator power, W.
    pub p_lo: f64,
    /// Squeezed driving-field power, W.
    pub p_x: f64,
    /// Relative phase between local oscillator and driving field, rad.
    pub phi_minus: f64,
    /// Analysis frequency, rad/s.
    pub omega_0: f64,
    pub xi: f64,
    /// Width of `F(Ω₀)`, rad/s.
    pub f_width: f64,
    pub c_scale: f64,
    #[serde(default)]
    pub coupling: CouplingForm,
    #[serde(default)]
    pub shape: SpectrumShape,
    #[serde(default)]
    pub projection: ProjectionWiring,
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("eta_s", self.eta_s), ("eta_0", self.eta_0)] {
            require((0.0..=1.0).contains(&value), || {
                format!("{name} must lie in [0, 1], got {value}")
            })?;
        }
        for (name, value) in [("p_lo", self.p_lo), ("p_x", self.p_x), ("xi", self.xi)] {
            require(value.is_finite() && value >= 0.0, || {
                format!("{name} must be finite and >= 0, got {value}")
            })?;
        }
        require(self.f_width.is_finite() && self.f_width > 0.0, || {
            format!("f_width must be > 0, got {}", self.f_width)
        })?;
        require(self.c_scale.is_finite(), || "c_scale must be finite".into())?;
        require(self.phi_minus.is_finite() && self.omega_0.is_finite(), || {
            "phi_minus and omega_0 must be finite".into()
        })?;
        if let ProjectionWiring::Additive { theta } = self.projection {
            require(theta.is_finite(), || "projection theta must be finite".into())?;
        }
        Ok(())
    }

    pub fn prefactor(&self, atom_flux: f64) -> f64 {
        let base = self.c_scale * self.eta_s * self.eta_0 * (self.p_lo * self.p_x).sqrt();
        match self.coupling {
            CouplingForm::Separable => base * atom_flux,
            CouplingForm::FluxIndependent => base,
        }
    }

    pub fn field_factor(&self) -> f64 {
        let w2 = self.f_width * self.f_width;
        let o2 = self.omega_0 * self.omega_0;
        match self.shape {
            SpectrumShape::Lorentzian => -w2 / (w2 + o2),
            SpectrumShape::Gaussian => -(-0.5 * o2 / w2).exp(),
        }
    }
}

/// Signal response of the atoms to the coherent (`delta_vac`) and squeezed
/// (`delta_sq`) fields. `delta_sq` carries no phase dependence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicResponse {
    pub delta_vac: f64,
    pub delta_sq: f64,
}

impl AtomicResponse {
    /// Equal response for both fields.
    pub fn symmetric(delta: f64) -> Self {
        Self { delta_vac: delta, delta_sq: delta }
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.delta_vac.is_finite() && self.delta_vac >= 0.0 && self.delta_sq.is_finite() && self.delta_sq >= 0.0,
            || format!("atomic responses must be >= 0, got {:?}", self),
        )
    }
}

/// Projection-noise contribution `Ṅ_AT (cos²θ − 1) cos 2φ`, in units of the
/// atom flux.
pub fn projection_noise_term(atom_flux: f64, theta: f64, phi: f64) -> f64 {
    let c = theta.cos();
    atom_flux * (c * c - 1.0) * (2.0 * phi).cos()
}

/// Squeezing spectrum `S(Ω₀, φ₋) = C · F(Ω₀) · cos 2φ₋`, plus the projection
/// term when the wiring is additive.
pub fn squeezing_spectrum(cfg: &DetectionConfig, atom_flux: f64) -> Result<f64> {
    cfg.validate()?;
    require(atom_flux.is_finite() && atom_flux >= 0.0, || {
        format!("atom flux must be >= 0, got {atom_flux}")
    })?;
    let phase = (2.0 * cfg.phi_minus).cos();
    let mut s = cfg.prefactor(atom_flux) * cfg.field_factor() * phase;
    if let ProjectionWiring::Additive { theta } = cfg.projection {
        s += cfg.c_scale * projection_noise_term(atom_flux, theta, cfg.phi_minus);
    }
    Ok(s)
}

/// `1 + ξS`, rejected unless strictly positive.
pub fn noise_denominator(cfg: &DetectionConfig, atom_flux: f64) -> Result<f64> {
    let d = 1.0 + cfg.xi * squeezing_spectrum(cfg, atom_flux)?;
    if d.is_nan() || d <= 0.0 {
        return Err(DetectionError::UnphysicalDenominator(d));
    }
    Ok(d)
}

/// Coherent-light S/N, `N Δ² / 2`.
pub fn snr_coherent(b: &PhotonBudget, resp: &AtomicResponse) -> Result<f64> {
    resp.validate()?;
    Ok(photon_number(b)? * resp.delta_vac * resp.delta_vac / 2.0)
}

/// S/N from an explicit `ξS`, `N Δ_SQ² / [2(1 + ξS)]`.
pub fn snr_squeezed_from(photons: f64, delta_sq: f64, xi_s: f64) -> Result<f64> {
    let d = 1.0 + xi_s;
    if d.is_nan() || d <= 0.0 {
        return Err(DetectionError::UnphysicalDenominator(d));
    }
    Ok(photons * delta_sq * delta_sq / (2.0 * d))
}

/// Squeezed-light S/N with `S` taken from [`squeezing_spectrum`].
pub fn snr_squeezed(
    b: &PhotonBudget,
    resp: &AtomicResponse,
    cfg: &DetectionConfig,
    atom_flux: f64,
) -> Result<f64> {
    resp.validate()?;
    let xi_s = cfg.xi * squeezing_spectrum(cfg, atom_flux)?;
    snr_squeezed_from(photon_number(b)?, resp.delta_sq, xi_s)
}

/// `sqrt(1 + ξS)`: the factor by which squeezed detection scales the
/// projection-noise standard deviation.
pub fn effective_noise_scale(cfg: &DetectionConfig, atom_flux: f64) -> Result<f64> {
    Ok(noise_denominator(cfg, atom_flux)?.sqrt())
}
