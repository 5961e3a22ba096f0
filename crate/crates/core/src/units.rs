//! Scalar semantic types and unit conversions shared by all modules.
//!
//! Everything internal is linear (Hz, s, rad, linear power ratios); dB
//! conversion helpers exist for the CLI boundary only.

use crate::waveform::WaveformSpec;
use crate::{Error, Result};

/// Propagation speed in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;

/// Energy SNR γ = A²E_s/σ², as a linear (not dB) ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsnrLinear(f64);

impl EsnrLinear {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("ESNR must be positive, got {value}")))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(db_to_linear(db))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_db(self) -> f64 {
        linear_to_db(self.0)
    }
}

/// Carrier frequency and propagation speed for scalar range/velocity
/// conversions of the delay and Doppler bounds.
#[derive(Debug, Clone, Copy)]
pub struct CarrierConfig {
    /// Carrier frequency, Hz.
    pub f_c: f64,
}

impl CarrierConfig {
    pub fn new(f_c: f64) -> Result<Self> {
        if f_c > 0.0 && f_c.is_finite() {
            Ok(Self { f_c })
        } else {
            Err(Error::Domain(format!(
                "carrier frequency must be positive, got {f_c}"
            )))
        }
    }
}

/// dB → linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio → dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// ESNR from per-sample SNR: γ = N_s · SNR.
///
/// The sample count N_s is derived from the waveform (PMCW: B·T_F/(1+α),
/// OFDM/OTFS: B·T_F). FMCW has no bandwidth-determined sampling rate, so an
/// explicit `n_s_override` is required there.
pub fn esnr_from_snr(
    snr: f64,
    spec: &WaveformSpec,
    n_s_override: Option<f64>,
) -> Result<EsnrLinear> {
    if snr <= 0.0 {
        return Err(Error::Domain(format!("SNR must be positive, got {snr}")));
    }
    let n_s = match n_s_override {
        Some(n) if n > 0.0 => n,
        Some(n) => return Err(Error::Config(format!("sample count must be positive, got {n}"))),
        None => spec.sample_count().ok_or_else(|| {
            Error::Config(
                "FMCW has no bandwidth-determined sample count; supply n_s explicitly".into(),
            )
        })?,
    };
    EsnrLinear::new(n_s * snr)
}

/// Delay CRLB (s²) → monostatic range CRLB (m²): C_r = (c₀/2)² C_τ.
pub fn crlb_delay_to_range(c_tau: f64) -> f64 {
    (C0 / 2.0).powi(2) * c_tau
}

/// Doppler CRLB (Hz²) → monostatic radial-velocity CRLB ((m/s)²):
/// C_v = (c₀/(2 f_c))² C_{f_D}.
pub fn crlb_doppler_to_velocity(c_fd: f64, cfg: CarrierConfig) -> f64 {
    (C0 / (2.0 * cfg.f_c)).powi(2) * c_fd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{PulseShape, WaveformSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ofdm_spec(b: f64, l: usize, k: usize) -> WaveformSpec {
        let df = b / l as f64;
        WaveformSpec::Ofdm {
            delta_f: df,
            l,
            k,
            l_cp: 0,
            symbols: vec![vec![num_complex::Complex64::new(1.0, 0.0); l]; k],
        }
    }

    #[test]
    fn esnr_from_snr_ofdm() {
        // B = 400 MHz, T_F = 10 ms, snr = 1 → γ = B·T_F = 4e6.
        // With L_cp = 0, T_F = K/Δf; pick K so that K/Δf = 10 ms.
        let l = 100;
        let b = 400e6;
        let k = 40_000; // K·T = K·L/B = 10 ms
        let spec = ofdm_spec(b, l, k);
        assert_relative_eq!(spec.frame_duration(), 10e-3, max_relative = 1e-12);
        let gamma = esnr_from_snr(1.0, &spec, None).unwrap();
        assert_relative_eq!(gamma.value(), 4e6, max_relative = 1e-12);
    }

    #[test]
    fn esnr_from_snr_pmcw_alpha() {
        // α = 1, B = 400 MHz, T_F = 10 ms, snr = 0.5 → γ = B·T_F/(1+α)·0.5 = 1e6.
        let alpha = 1.0;
        let t_c = (1.0 + alpha) / 400e6;
        let l = 1000;
        let t = l as f64 * t_c;
        let k = (10e-3 / t).round() as usize;
        let spec = WaveformSpec::Pmcw {
            pulse: PulseShape::Rrc { alpha },
            t_c,
            l,
            k,
            code: vec![1.0; l],
            data: vec![1.0; k],
        };
        let gamma = esnr_from_snr(0.5, &spec, None).unwrap();
        let t_f = spec.frame_duration();
        assert_relative_eq!(gamma.value(), 400e6 * t_f / 2.0 * 0.5, max_relative = 1e-12);

        // α = 0 limit: same N_s as OFDM with equal B·T_F.
        let spec0 = WaveformSpec::Pmcw {
            pulse: PulseShape::Rrc { alpha: 0.0 },
            t_c: 1.0 / 400e6,
            l,
            k,
            code: vec![1.0; l],
            data: vec![1.0; k],
        };
        let g0 = esnr_from_snr(1.0, &spec0, None).unwrap();
        assert_relative_eq!(
            g0.value(),
            400e6 * spec0.frame_duration(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn fmcw_requires_explicit_ns() {
        let spec = WaveformSpec::Fmcw {
            b: 1e6,
            t: 1e-4,
            k: 4,
            data: vec![num_complex::Complex64::new(1.0, 0.0); 4],
        };
        assert!(esnr_from_snr(1.0, &spec, None).is_err());
        let g = esnr_from_snr(2.0, &spec, Some(100.0)).unwrap();
        assert_relative_eq!(g.value(), 200.0, max_relative = 1e-12);
    }

    #[test]
    fn range_conversion() {
        assert_eq!(crlb_delay_to_range(0.0), 0.0);
        assert_relative_eq!(crlb_delay_to_range(1e-18), 2.2469e-2, max_relative = 1e-4);
        assert_relative_eq!(crlb_delay_to_range(4.0 / (C0 * C0)), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn velocity_conversion() {
        let cfg = CarrierConfig::new(28e9).unwrap();
        assert_eq!(crlb_doppler_to_velocity(0.0, cfg), 0.0);
        assert_relative_eq!(
            crlb_doppler_to_velocity(1.0, cfg),
            2.8661e-5,
            max_relative = 1e-4
        );
        let inv = CarrierConfig::new(C0 / 2.0).unwrap();
        assert_relative_eq!(crlb_doppler_to_velocity(1.0, inv), 1.0, max_relative = 1e-12);
        assert!(CarrierConfig::new(0.0).is_err());
    }

    proptest! {
        #[test]
        fn db_roundtrip(db in -120.0..120.0f64) {
            let lin = db_to_linear(db);
            let back = linear_to_db(lin);
            prop_assert!(((back - db) / db.abs().max(1.0)).abs() < 1e-12);
        }

        #[test]
        fn conversions_are_linear(x in 1e-24..1e-12f64, a in 0.1..10.0f64) {
            let cfg = CarrierConfig::new(28e9).unwrap();
            prop_assert!((crlb_delay_to_range(a * x) - a * crlb_delay_to_range(x)).abs()
                <= 1e-12 * crlb_delay_to_range(a * x).abs());
            prop_assert!((crlb_doppler_to_velocity(a * x, cfg) - a * crlb_doppler_to_velocity(x, cfg)).abs()
                <= 1e-12 * crlb_doppler_to_velocity(a * x, cfg).abs());
        }
    }
}
