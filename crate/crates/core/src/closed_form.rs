//! Closed-form CRLB evaluators for the four waveform families.
//!
//! All bounds share the two base expressions
//!     C_τ  = 3 / (2π² N_R γ B²),
//!     C_fD = 3 / (2π² N_R γ T_F²),
//! dressed with a waveform-specific factor: the FMCW finite-chirp-count
//! correction 1/(1−1/K²), the PMCW pulse-shape factor B²/(12·B²_rms), or the
//! OFDM discrete-grid factors L²/(L²−1) and K²/(K²−1). The AoA bound is
//! waveform-independent.

use std::f64::consts::PI;

use crate::fisher::{Bound, CrlbResult};
use crate::spectral;
use crate::units::EsnrLinear;
use crate::waveform::PulseShape;
use crate::{Error, Result};

/// Scalar summary of a waveform for closed-form evaluation.
///
/// `pulse` is only consulted by the PMCW evaluator; `l` and `k` are only
/// consulted by the FMCW (chirp count `k`) and discrete-OFDM evaluators.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormRequest {
    /// Two-sided bandwidth, Hz.
    pub b: f64,
    /// Frame duration, s.
    pub t_f: f64,
    /// Chirps / PRIs / time-domain symbols.
    pub k: usize,
    /// Code length / subcarrier count.
    pub l: usize,
    /// Chip pulse shape (PMCW only).
    pub pulse: Option<PulseShape>,
    pub n_r: usize,
    pub gamma: EsnrLinear,
    /// Target angle, rad.
    pub theta_r: f64,
    /// Use the K≫1 / continuous approximation where one exists.
    pub approx_large_k: bool,
}

impl ClosedFormRequest {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Config(format!("bandwidth must be positive, got {}", self.b)));
        }
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::Config(format!(
                "frame duration must be positive, got {}",
                self.t_f
            )));
        }
        if self.k < 1 || self.l < 1 {
            return Err(Error::Config(format!(
                "symbol counts must be at least 1, got K={}, L={}",
                self.k, self.l
            )));
        }
        if self.n_r < 1 {
            return Err(Error::Config("need at least one receive element".into()));
        }
        if !self.theta_r.is_finite() {
            return Err(Error::Config(format!("angle must be finite, got {}", self.theta_r)));
        }
        if let Some(p) = self.pulse {
            p.validate()?;
        }
        Ok(())
    }
}

/// C_τ base = 3/(2π² N_R γ B²), s².
fn base_delay(n_r: usize, gamma: EsnrLinear, b: f64) -> f64 {
    3.0 / (2.0 * PI * PI * n_r as f64 * gamma.value() * b * b)
}

/// C_fD base = 3/(2π² N_R γ T_F²), Hz².
fn base_doppler(n_r: usize, gamma: EsnrLinear, t_f: f64) -> f64 {
    3.0 / (2.0 * PI * PI * n_r as f64 * gamma.value() * t_f * t_f)
}

/// PMCW delay-bound multiplier relative to the Sinc base: B²/(12·B²_rms).
///
/// Sinc → 1; Rect → 2π·Si(2π)/3; RRC/RC → the rational-in-α factors implied
/// by their RMS bandwidths. RC with α = 0 is rejected (use Sinc).
pub fn pulse_delay_factor(pulse: PulseShape) -> Result<f64> {
    let b = pulse.bandwidth(1.0);
    let brms = spectral::pulse_rms_bandwidth_sq(pulse, 1.0)?;
    Ok(b * b / (12.0 * brms))
}

/// The Rect-pulse delay constant c_τ·N_RγB² = Si(2π)/π at full precision.
///
/// Published as 0.4507 (via the rounded B²_rms ≈ 0.0281B²); the unrounded
/// value is ≈ 0.45137.
pub fn rect_delay_constant() -> f64 {
    spectral::si(2.0 * PI) / PI
}

/// FMCW delay/Doppler bounds. Both carry the finite-chirp-count factor
/// 1/(1−1/K²); K = 1 makes the exact bounds unbounded.
pub fn crlb_fmcw(req: &ClosedFormRequest) -> Result<CrlbResult> {
    req.validate()?;
    let c_tau = base_delay(req.n_r, req.gamma, req.b);
    let c_fd = base_doppler(req.n_r, req.gamma, req.t_f);
    let (c_tau, c_fd) = if req.approx_large_k {
        (Bound::Finite(c_tau), Bound::Finite(c_fd))
    } else if req.k == 1 {
        (Bound::Unbounded, Bound::Unbounded)
    } else {
        let kk = (req.k * req.k) as f64;
        let corr = 1.0 - 1.0 / kk;
        (Bound::Finite(c_tau / corr), Bound::Finite(c_fd / corr))
    };
    Ok(CrlbResult {
        c_tau,
        c_fd,
        c_theta: crlb_aoa(req.n_r, req.gamma, req.theta_r),
        coupling: None,
    })
}

/// PMCW bounds: delay = Sinc base × pulse factor, Doppler pulse-independent.
pub fn crlb_pmcw(req: &ClosedFormRequest) -> Result<CrlbResult> {
    req.validate()?;
    let pulse = req.pulse.ok_or_else(|| {
        Error::Config("PMCW closed form needs a chip pulse shape".into())
    })?;
    let factor = pulse_delay_factor(pulse)?;
    Ok(CrlbResult {
        c_tau: Bound::Finite(base_delay(req.n_r, req.gamma, req.b) * factor),
        c_fd: Bound::Finite(base_doppler(req.n_r, req.gamma, req.t_f)),
        c_theta: crlb_aoa(req.n_r, req.gamma, req.theta_r),
        coupling: None,
    })
}

/// OFDM bounds in the continuous-observation model.
pub fn crlb_ofdm_continuous(req: &ClosedFormRequest) -> Result<CrlbResult> {
    req.validate()?;
    Ok(CrlbResult {
        c_tau: Bound::Finite(base_delay(req.n_r, req.gamma, req.b)),
        c_fd: Bound::Finite(base_doppler(req.n_r, req.gamma, req.t_f)),
        c_theta: crlb_aoa(req.n_r, req.gamma, req.theta_r),
        coupling: None,
    })
}

/// Continuous/discrete bound ratios ((L²−1)/L², (K²−1)/K²); needs K, L ≥ 2.
pub fn discrete_grid_ratios(k: usize, l: usize) -> Result<(f64, f64)> {
    if k < 2 || l < 2 {
        return Err(Error::Config(format!(
            "discrete-grid factor needs K, L >= 2, got K={k}, L={l}"
        )));
    }
    let ll = (l * l) as f64;
    let kk = (k * k) as f64;
    Ok(((ll - 1.0) / ll, (kk - 1.0) / kk))
}

/// OFDM bounds on the discrete L×K grid: the continuous bounds inflated by
/// L²/(L²−1) (delay) and K²/(K²−1) (Doppler).
pub fn crlb_ofdm_discrete(req: &ClosedFormRequest) -> Result<CrlbResult> {
    req.validate()?;
    let (r_tau, r_fd) = discrete_grid_ratios(req.k, req.l)?;
    let cont = crlb_ofdm_continuous(req)?;
    Ok(CrlbResult {
        c_tau: cont.c_tau.map(|v| v / r_tau),
        c_fd: cont.c_fd.map(|v| v / r_fd),
        c_theta: cont.c_theta,
        coupling: None,
    })
}

/// OTFS continuous-model bounds: identical to OFDM by construction.
pub fn crlb_otfs(req: &ClosedFormRequest) -> Result<CrlbResult> {
    crlb_ofdm_continuous(req)
}

/// OTFS discrete-grid bounds: identical to OFDM by construction.
pub fn crlb_otfs_discrete(req: &ClosedFormRequest) -> Result<CrlbResult> {
    crlb_ofdm_discrete(req)
}

/// AoA bound C_θ = 6/(π² cos²θ N_R (N_R²−1) γ), rad².
///
/// Unbounded at the structural singularities N_R < 2 and θ = ±π/2.
pub fn crlb_aoa(n_r: usize, gamma: EsnrLinear, theta_r: f64) -> Bound {
    if n_r < 2 {
        return Bound::Unbounded;
    }
    let mut c = theta_r.cos();
    if c.abs() < 1e-12 {
        c = 0.0;
    }
    if c == 0.0 {
        return Bound::Unbounded;
    }
    let n = n_r as f64;
    Bound::Finite(6.0 / (PI * PI * c * c * n * (n * n - 1.0) * gamma.value()))
}
