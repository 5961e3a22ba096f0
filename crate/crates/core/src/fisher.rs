//! Numerical Fisher-information engine: every FIM entry over
//! Θ = (A, φ, τ, f_D, θ_R) integrated from a sampled scene, EFIM by Schur
//! complement over the nuisance phase φ, CRLB extraction, and the C₀ /
//! Im{C₁} coupling diagnostics.
//!
//! None of the entries depends on φ or f_D themselves — the Doppler and
//! phase factors cancel inside every integrand — so the engine needs only
//! the synthesized, delayed signal, the amplitude/noise scaling, and the
//! array geometry.

use nalgebra::{Matrix3, Matrix5};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::waveform::{
    brick_wall_filter, default_guard, delay_signal, synthesize_with_guard, PulseShape,
    SampledSignal, WaveformSpec,
};
use crate::{Error, Result};

/// Parameter ordering of the 5×5 FIM.
pub const PARAMS: [&str; 5] = ["A", "phi", "tau", "f_d", "theta_r"];

/// Array geometry. Spacings are in wavelengths (0.5 = the λ/2 default).
#[derive(Debug, Clone, Copy)]
pub struct ArrayConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub d_t: f64,
    pub d_r: f64,
    /// Carrier wavelength, m (bookkeeping only; the bounds are expressed in
    /// electrical angle and never need it).
    pub lambda: f64,
}

impl ArrayConfig {
    /// λ/2-spaced arrays at 28 GHz.
    pub fn half_wavelength(n_t: usize, n_r: usize) -> Self {
        Self { n_t, n_r, d_t: 0.5, d_r: 0.5, lambda: crate::units::C0 / 28e9 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_r == 0 {
            return Err(Error::Config("array requires N_T, N_R ≥ 1".into()));
        }
        if self.d_t <= 0.0 || self.d_r <= 0.0 {
            return Err(Error::Config("element spacings must be positive".into()));
        }
        Ok(())
    }

    /// Receive-element positions in units of λ/2.
    pub fn rx_offsets(&self) -> Vec<f64> {
        (0..self.n_r).map(|n| 2.0 * self.d_r * n as f64).collect()
    }
}

/// True scene parameters plus noise power and geometry.
#[derive(Debug, Clone)]
pub struct SceneParams {
    /// Linear amplitude; with transmit beamforming A = N_T·a.
    pub amplitude: f64,
    pub phase: f64,
    pub tau: f64,
    pub f_d: f64,
    pub theta_r: f64,
    /// Noise power per receive element.
    pub sigma2: f64,
    pub array: ArrayConfig,
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.sigma2 <= 0.0 || !self.sigma2.is_finite() {
            return Err(Error::Config(format!(
                "noise power must be positive, got {}",
                self.sigma2
            )));
        }
        if self.amplitude <= 0.0 {
            return Err(Error::Config("amplitude must be positive".into()));
        }
        if self.theta_r.abs() > PI / 2.0 {
            return Err(Error::Config(format!(
                "|θ_R| must be ≤ π/2, got {}",
                self.theta_r
            )));
        }
        Ok(())
    }

    /// ESNR γ = A²E_s/σ² for a signal of energy `e_s`.
    pub fn esnr(&self, e_s: f64) -> f64 {
        self.amplitude * self.amplitude * e_s / self.sigma2
    }
}

/// Symmetric 5×5 FIM over (A, φ, τ, f_D, θ_R).
#[derive(Debug, Clone)]
pub struct FisherMatrix {
    m: Matrix5<f64>,
}

impl FisherMatrix {
    /// Wrap a matrix, enforcing symmetry (1e-12) and positive
    /// semidefiniteness (min eigenvalue ≥ −1e-9·trace).
    pub fn new(m: Matrix5<f64>) -> Result<Self> {
        let scale = m.norm().max(f64::MIN_POSITIVE);
        for i in 0..5 {
            for j in (i + 1)..5 {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Numerical(format!(
                        "FIM asymmetric at ({},{}): {} vs {}",
                        PARAMS[i],
                        PARAMS[j],
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        let sym = (m + m.transpose()) / 2.0;
        let eig = sym.symmetric_eigenvalues();
        let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let trace = sym.trace();
        if min_eig < -1e-9 * trace.abs() {
            return Err(Error::Numerical(format!(
                "FIM not PSD: min eigenvalue {min_eig} vs trace {trace}"
            )));
        }
        Ok(Self { m: sym })
    }

    pub fn matrix(&self) -> &Matrix5<f64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// CSV rows `param_i,param_j,value` for the full matrix.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param_i,param_j,value\n");
        for i in 0..5 {
            for j in 0..5 {
                out.push_str(&format!("{},{},{:.17e}\n", PARAMS[i], PARAMS[j], self.m[(i, j)]));
            }
        }
        out
    }
}

/// A CRLB value that distinguishes a structural singularity (θ_R = ±π/2,
/// N_R = 1, K = 1, …) from a finite bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Bound::Unbounded)
    }

    /// Value for computations that have already checked finiteness.
    pub fn expect_finite(self, what: &str) -> Result<f64> {
        self.finite()
            .ok_or_else(|| Error::Domain(format!("{what} is unbounded")))
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Bound {
        match self {
            Bound::Finite(v) => Bound::Finite(f(v)),
            Bound::Unbounded => Bound::Unbounded,
        }
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v:.17e}"),
            Bound::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// C₀ / Im{C₁} diagnostics of one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CouplingReport {
    pub c0: Complex64,
    pub im_c1: f64,
    /// |Re{C₀}| — analytically zero for time-limited signals.
    pub re_c0_defect: f64,
}

/// Delay/Doppler/angle bounds plus the coupling diagnostics.
#[derive(Debug, Clone)]
pub struct CrlbResult {
    /// s²
    pub c_tau: Bound,
    /// Hz²
    pub c_fd: Bound,
    /// rad²
    pub c_theta: Bound,
    pub coupling: Option<CouplingReport>,
}

impl CrlbResult {
    /// Appends the `crlb` summary block used by the CSV export.
    pub fn to_csv_block(&self) -> String {
        let mut out = String::from("crlb,,\n");
        out.push_str(&format!("tau,tau,{}\n", self.c_tau));
        out.push_str(&format!("f_d,f_d,{}\n", self.c_fd));
        out.push_str(&format!("theta_r,theta_r,{}\n", self.c_theta));
        if let Some(c) = &self.coupling {
            out.push_str(&format!("c0_re,c0_im,{:.17e},{:.17e}\n", c.c0.re, c.c0.im));
            out.push_str(&format!("im_c1,,{:.17e}\n", c.im_c1));
            out.push_str(&format!("re_c0_defect,,{:.17e}\n", c.re_c0_defect));
        }
        out
    }
}

/// Spectral derivative: samples of ṡ via multiplication by j2πf in the
/// frequency domain (exact for band-limited content; finite differences
/// would bias the second spectral moment).
pub fn spectral_derivative(sig: &SampledSignal) -> Vec<Complex64> {
    let n = sig.len();
    let mut buf: Vec<Complex64> = sig.samples().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = sig.fs() / n as f64;
    for (m, v) in buf.iter_mut().enumerate() {
        let f = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 } * df;
        *v *= Complex64::new(0.0, 2.0 * PI * f);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    buf
}

/// All scalar integrals the FIM entries are assembled from. Computed once
/// per (signal, τ) pair; `fim_from_moments` then builds the matrix for any
/// amplitude/noise/array combination.
#[derive(Debug, Clone, Copy)]
pub struct SignalMoments {
    /// Full signal energy E_s (never band-limited).
    pub e_s: f64,
    /// C₀ = ∫ s*ṡ dt — pure imaginary for time-limited signals.
    pub c0: Complex64,
    /// Im{C₁} = Im ∫ u ṡ*s du on the delay-compensated axis.
    pub im_c1: f64,
    /// ∫ (t+T₀)|s|² dt — equals (T₀+τ)E_s up to the centroid defect.
    pub m1: f64,
    /// ∫ (t+T₀)²|s|² dt.
    pub m2: f64,
    /// ∫ |ṡ|² dt = 4π²B²_rms·E_s.
    pub ds_energy: f64,
    /// Im ∫ (t+T₀) ṡ*s dt = Im{C₁} − (T₀+τ)Im{C₀}.
    pub cross_im: f64,
}

/// Compute the moment set of a (possibly delayed) signal.
///
/// `band_limit`: if `Some(half_bw)`, the spectral-derivative quantities
/// (C₀, Im{C₁}, ∫|ṡ|², the f_D cross term) are taken from the brick-wall
/// filtered signal and rescaled to the full energy. This realizes the
/// main-lobe B²_rms convention of the rectangular pulse, whose raw edge
/// derivative diverges with the sampling rate, while keeping the ESNR
/// defined on the full frame energy. Temporal moments always use the
/// unfiltered signal.
pub fn signal_moments(
    sig: &SampledSignal,
    tau: f64,
    band_limit: Option<f64>,
) -> Result<SignalMoments> {
    let dt = sig.dt();
    let t0 = sig.t0();
    let e_s = sig.energy();

    // temporal moments from the unfiltered signal
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (n, s) in sig.samples().iter().enumerate() {
        let w = sig.time_at(n) + t0;
        let p = s.norm_sqr();
        m1 += w * p;
        m2 += w * w * p;
    }
    m1 *= dt;
    m2 *= dt;

    // spectral-derivative moments, optionally band-limited
    let filtered;
    let work: &SampledSignal = match band_limit {
        Some(half_bw) => {
            filtered = brick_wall_filter(sig, half_bw)?;
            &filtered
        }
        None => sig,
    };
    let ratio = e_s / work.energy();
    let ds = spectral_derivative(work);
    let mut c0 = Complex64::new(0.0, 0.0);
    let mut im_c1 = 0.0;
    let mut cross_im = 0.0;
    let mut ds_energy = 0.0;
    for (n, (s, d)) in work.samples().iter().zip(&ds).enumerate() {
        let t = work.time_at(n);
        c0 += s.conj() * d;
        let x = d.conj() * s;
        im_c1 += (t - tau) * x.im;
        cross_im += (t + t0) * x.im;
        ds_energy += d.norm_sqr();
    }
    Ok(SignalMoments {
        e_s,
        c0: c0 * dt * ratio,
        im_c1: im_c1 * dt * ratio,
        m1,
        m2,
        ds_energy: ds_energy * dt * ratio,
        cross_im: cross_im * dt * ratio,
    })
}

/// C₀ = ∫ s*(t−τ) ṡ(t−τ) dt. Shift-invariant, so the result is the C₀ of
/// the underlying waveform whatever τ the signal carries.
pub fn compute_c0(sig: &SampledSignal, tau: f64) -> Result<Complex64> {
    if tau.abs() > sig.guard() {
        return Err(Error::Truncation(format!(
            "delay {tau} s exceeds the guard interval {} s",
            sig.guard()
        )));
    }
    Ok(signal_moments(sig, tau, None)?.c0)
}

/// Im{C₁} = Im ∫ u ṡ*(u) s(u) du on the delay-compensated, centroid-shifted
/// axis u = t − τ.
pub fn compute_im_c1(sig: &SampledSignal, tau: f64) -> Result<f64> {
    if tau.abs() > sig.guard() {
        return Err(Error::Truncation(format!(
            "delay {tau} s exceeds the guard interval {} s",
            sig.guard()
        )));
    }
    Ok(signal_moments(sig, tau, None)?.im_c1)
}

/// Assemble the 5×5 FIM from precomputed moments for receive elements at
/// `offsets` (positions in units of λ/2; `0,1,…,N_R−1` for the plain λ/2
/// array, virtual positions for the VA case).
pub fn fim_from_moments(
    mo: &SignalMoments,
    amplitude: f64,
    sigma2: f64,
    theta_r: f64,
    offsets: &[f64],
) -> Result<FisherMatrix> {
    if offsets.is_empty() {
        return Err(Error::Config("at least one receive element required".into()));
    }
    let ne = offsets.len() as f64;
    let s1: f64 = offsets.iter().sum();
    let s2: f64 = offsets.iter().map(|d| d * d).sum();
    // snap cos to an exact zero at endfire so the structural singularity
    // shows up as exact zeros instead of 1e-17-scale residue
    let mut c = theta_r.cos();
    if c.abs() < 1e-12 {
        c = 0.0;
    }
    let a = amplitude;
    let q = 2.0 * a * a / sigma2;

    let mut m = Matrix5::zeros();
    // A row: only F_AA and the Re{C₀} defect entry survive analytically
    m[(0, 0)] = 2.0 * ne * mo.e_s / sigma2;
    m[(0, 2)] = -2.0 * ne * a * mo.c0.re / sigma2;
    m[(1, 1)] = q * ne * mo.e_s;
    m[(1, 2)] = -q * ne * mo.c0.im;
    m[(1, 3)] = q * 2.0 * PI * ne * mo.m1;
    m[(1, 4)] = -q * PI * c * s1 * mo.e_s;
    m[(2, 2)] = q * ne * mo.ds_energy;
    m[(2, 3)] = q * 2.0 * PI * ne * mo.cross_im;
    m[(2, 4)] = q * PI * c * s1 * mo.c0.im;
    m[(3, 3)] = q * 4.0 * PI * PI * ne * mo.m2;
    m[(3, 4)] = -q * 2.0 * PI * PI * c * s1 * mo.m1;
    m[(4, 4)] = q * PI * PI * c * c * s2 * mo.e_s;
    for i in 0..5 {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    FisherMatrix::new(m)
}

/// Band-limit convention per waveform: the rectangular pulse keeps only its
/// spectral main lobe |f| ≤ 1/T_c (= B/2 with B = 2/T_c).
pub fn band_limit_for(spec: &WaveformSpec) -> Option<f64> {
    match spec {
        WaveformSpec::Pmcw { pulse: PulseShape::Rect, t_c, .. } => Some(1.0 / t_c),
        // rect symbol windows leak sinc tails past the subcarrier grid; the
        // receiver band-limits to the nominal band (half a spacing beyond
        // the outermost subcarrier), as the grid-model bounds assume
        WaveformSpec::Ofdm { delta_f, l, .. } | WaveformSpec::Otfs { delta_f, l, .. } => {
            Some((*l as f64 + 1.0) * delta_f / 2.0)
        }
        _ => None,
    }
}

/// Synthesize the waveform, apply the scene delay, and integrate every
/// Appendix-level FIM entry numerically.
pub fn fim_numeric(spec: &WaveformSpec, scene: &SceneParams, fs: f64) -> Result<FisherMatrix> {
    let (f, _) = fim_numeric_with_moments(spec, scene, fs)?;
    Ok(f)
}

/// As [`fim_numeric`], additionally returning the moments for diagnostics.
pub fn fim_numeric_with_moments(
    spec: &WaveformSpec,
    scene: &SceneParams,
    fs: f64,
) -> Result<(FisherMatrix, SignalMoments)> {
    scene.validate()?;
    let guard = default_guard(spec.bandwidth()).max(2.0 * scene.tau.abs());
    let sig = synthesize_with_guard(spec, fs, guard)?;
    let delayed = delay_signal(&sig, scene.tau)?;
    let mo = signal_moments(&delayed, scene.tau, band_limit_for(spec))?;
    let f = fim_from_moments(
        &mo,
        scene.amplitude,
        scene.sigma2,
        scene.theta_r,
        &scene.array.rx_offsets(),
    )?;
    Ok((f, mo))
}

/// EFIM over (τ, f_D, θ_R): Schur complement of the nuisance phase φ.
pub fn efim(f: &FisherMatrix) -> Result<Matrix3<f64>> {
    let m = f.matrix();
    let f_pp = m[(1, 1)];
    if f_pp <= 0.0 {
        return Err(Error::Domain(
            "degenerate scene: no phase information (F_φφ ≤ 0)".into(),
        ));
    }
    // amplitude must already be decoupled
    let scale = f.norm().max(f64::MIN_POSITIVE);
    for j in 1..5 {
        if m[(0, j)].abs() > 1e-6 * scale {
            return Err(Error::Numerical(format!(
                "amplitude row not decoupled: F(A,{}) = {}",
                PARAMS[j],
                m[(0, j)]
            )));
        }
    }
    let mut e = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            e[(i, j)] = m[(i + 2, j + 2)] - m[(1, i + 2)] * m[(1, j + 2)] / f_pp;
        }
    }
    Ok(e)
}

/// Invert the EFIM. Structurally singular coordinates (zero row/column, as
/// at θ_R = ±π/2 or N_R = 1) are reported unbounded and excluded from the
/// inversion rather than erroring.
pub fn crlb_from_efim(e: &Matrix3<f64>) -> Result<(Bound, Bound, Bound)> {
    let scale = e.norm().max(f64::MIN_POSITIVE);
    let eig = e.symmetric_eigenvalues();
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 * scale {
        return Err(Error::Numerical(format!(
            "EFIM indefinite: min eigenvalue {min_eig}"
        )));
    }
    // a coordinate is structurally dead only when its information is an
    // exact zero (endfire cos = 0, N_R = 1, ...); the entries carry
    // different physical units, so cross-coordinate magnitude comparisons
    // would be meaningless
    let live: Vec<usize> = (0..3).filter(|&i| e[(i, i)] > 0.0).collect();
    let k = live.len();
    let mut bounds = [Bound::Unbounded; 3];
    if k > 0 {
        // invert in correlation form e = D R D to decouple the unit scales
        let d: Vec<f64> = live.iter().map(|&i| e[(i, i)].sqrt()).collect();
        let mut r = nalgebra::DMatrix::zeros(k, k);
        for (a, &i) in live.iter().enumerate() {
            for (b, &j) in live.iter().enumerate() {
                r[(a, b)] = e[(i, j)] / (d[a] * d[b]);
            }
        }
        let inv = r
            .try_inverse()
            .ok_or_else(|| Error::Numerical("EFIM singular beyond structural zeros".into()))?;
        for (a, &i) in live.iter().enumerate() {
            bounds[i] = Bound::Finite(inv[(a, a)] / e[(i, i)]);
        }
    }
    for (i, b) in bounds.iter().enumerate() {
        if let Bound::Finite(v) = b {
            if *v < 0.0 {
                return Err(Error::Numerical(format!(
                    "negative variance bound {} for {}",
                    v,
                    PARAMS[i + 2]
                )));
            }
        }
    }
    Ok((bounds[0], bounds[1], bounds[2]))
}

/// End-to-end numeric CRLB of a scene, with coupling diagnostics.
pub fn crlb_numeric(spec: &WaveformSpec, scene: &SceneParams, fs: f64) -> Result<CrlbResult> {
    let (f, mo) = fim_numeric_with_moments(spec, scene, fs)?;
    let e = efim(&f)?;
    let (c_tau, c_fd, c_theta) = crlb_from_efim(&e)?;
    Ok(CrlbResult {
        c_tau,
        c_fd,
        c_theta,
        coupling: Some(CouplingReport {
            c0: mo.c0,
            im_c1: mo.im_c1,
            re_c0_defect: mo.c0.re.abs(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{power_spectrum, rms_bandwidth_sq, rms_time_sq};
    use crate::waveform::{m_sequence, synthesize};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn fmcw(k: usize) -> WaveformSpec {
        WaveformSpec::Fmcw {
            b: 1e6,
            t: 1e-4,
            k,
            data: vec![Complex64::new(1.0, 0.0); k],
        }
    }

    fn pmcw_rect(l: usize, k: usize, seed: u64) -> WaveformSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t_c = 1e-6;
        let code: Vec<f64> = (0..l).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let data: Vec<f64> = (0..k).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        WaveformSpec::Pmcw { pulse: PulseShape::Rect, t_c, l, k, code, data }
    }

    /// Scene with a chosen ESNR for a given signal energy.
    fn scene_with_esnr(gamma: f64, e_s: f64, n_r: usize, theta_r: f64) -> SceneParams {
        let sigma2 = 1.0;
        SceneParams {
            amplitude: (gamma * sigma2 / e_s).sqrt(),
            phase: 0.3,
            tau: 0.0,
            f_d: 0.0,
            theta_r,
            sigma2,
            array: ArrayConfig::half_wavelength(1, n_r),
        }
    }

    #[test]
    fn c0_real_signal_vanishes() {
        let spec = pmcw_rect(31, 4, 1);
        let sig = synthesize(&spec, 16e6).unwrap();
        let c0 = compute_c0(&sig, 0.0).unwrap();
        let t_c = 1e-6;
        let tol = 1e-9 * sig.energy() / t_c;
        assert!(c0.re.abs() < tol, "Re C0 = {}", c0.re);
        assert!(c0.im.abs() < tol, "Im C0 = {}", c0.im);
    }

    #[test]
    fn c0_single_tone() {
        // tone at +1 kHz for 8 ms → C0 = j2πf₁E_s
        let row = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let spec = WaveformSpec::Ofdm { delta_f: 1e3, l: 3, k: 8, l_cp: 0, symbols: vec![row; 8] };
        let sig = crate::waveform::synthesize_with_guard(&spec, 24e3, 2e-3).unwrap();
        let c0 = compute_c0(&sig, 0.0).unwrap();
        let expect = 2.0 * PI * 1e3 * sig.energy();
        assert!(c0.re.abs() < 1e-6 * expect);
        assert_relative_eq!(c0.im, expect, max_relative = 5e-3);
    }

    #[test]
    fn c0_fmcw_frame_vanishes() {
        let spec = fmcw(64);
        let sig = synthesize(&spec, 4e6).unwrap();
        let c0 = compute_c0(&sig, 0.0).unwrap();
        assert!(
            c0.norm() <= 1e-3 * 2.0 * PI * 1e6 * sig.energy(),
            "C0 = {c0}"
        );
    }

    #[test]
    fn im_c1_single_chirp() {
        // K=1 chirp: Im{C1} = −πμT²E_s/6
        let spec = fmcw(1);
        let sig = synthesize(&spec, 8e6).unwrap();
        let mu = 1e6 / 1e-4;
        let expect = -PI * mu * 1e-4 * 1e-4 * sig.energy() / 6.0;
        let got = compute_im_c1(&sig, 0.0).unwrap();
        assert_relative_eq!(got, expect, max_relative = 0.01);
    }

    #[test]
    fn im_c1_real_signal_vanishes() {
        let spec = pmcw_rect(31, 4, 2);
        let sig = synthesize(&spec, 16e6).unwrap();
        let got = compute_im_c1(&sig, 0.0).unwrap();
        assert!(got.abs() < 1e-9 * sig.energy(), "Im C1 = {got}");
    }

    #[test]
    fn im_c1_survives_delay() {
        // computing from the delayed signal with the matching τ recovers
        // the waveform-intrinsic value
        let spec = fmcw(1);
        let sig = synthesize(&spec, 8e6).unwrap();
        let base = compute_im_c1(&sig, 0.0).unwrap();
        let tau = 3.7e-7;
        let delayed = delay_signal(&sig, tau).unwrap();
        let got = compute_im_c1(&delayed, tau).unwrap();
        assert_relative_eq!(got, base, max_relative = 1e-3);
    }

    #[test]
    fn f_aa_exact_and_amplitude_decoupled() {
        let spec = fmcw(8);
        let fs = 4e6;
        let sig = synthesize(&spec, fs).unwrap();
        let scene = scene_with_esnr(10.0, sig.energy(), 8, 0.2);
        let f = fim_numeric(&spec, &scene, fs).unwrap();
        assert_relative_eq!(
            f.entry(0, 0),
            2.0 * 8.0 * sig.energy() / scene.sigma2,
            max_relative = 1e-12
        );
        let norm = f.norm();
        for j in 1..5 {
            assert!(
                f.entry(0, j).abs() <= 1e-9 * norm,
                "F(A,{}) = {}",
                PARAMS[j],
                f.entry(0, j)
            );
        }
    }

    #[test]
    fn f_phiphi_f_thetatheta_closed_forms() {
        // N_R=8, γ=10, θ_R=0: F_φφ = 2·8·10 = 160, F_θθ = 2800π²
        let spec = fmcw(8);
        let fs = 4e6;
        let sig = synthesize(&spec, fs).unwrap();
        let scene = scene_with_esnr(10.0, sig.energy(), 8, 0.0);
        let f = fim_numeric(&spec, &scene, fs).unwrap();
        assert_relative_eq!(f.entry(1, 1), 160.0, max_relative = 1e-9);
        assert_relative_eq!(f.entry(4, 4), 2800.0 * PI * PI, max_relative = 0.005);
    }

    #[test]
    fn f_phifd_uses_t0_plus_tau() {
        let spec = fmcw(8);
        let fs = 4e6;
        let sig = synthesize(&spec, fs).unwrap();
        let gamma = 10.0;
        let tau = 5e-6;
        let mut scene = scene_with_esnr(gamma, sig.energy(), 4, 0.0);
        scene.tau = tau;
        let f = fim_numeric(&spec, &scene, fs).unwrap();
        let expect = 4.0 * PI * 4.0 * (sig.t0() + tau) * gamma;
        assert_relative_eq!(f.entry(1, 3), expect, max_relative = 1e-3);
    }

    #[test]
    fn f_tautau_matches_spectral_moment() {
        // F_ττ = 8π²N_Rγ B²_rms against the independent periodogram moment
        let spec = fmcw(16);
        let fs = 8e6;
        let sig = synthesize(&spec, fs).unwrap();
        let scene = scene_with_esnr(10.0, sig.energy(), 2, 0.0);
        let f = fim_numeric(&spec, &scene, fs).unwrap();
        let ps = power_spectrum(&sig).unwrap();
        let b2 = rms_bandwidth_sq(&ps).unwrap();
        let expect = 8.0 * PI * PI * 2.0 * 10.0 * b2;
        // the periodogram pads to odd length, so allow a grid-level defect
        assert_relative_eq!(f.entry(2, 2), expect, max_relative = 1e-6);
    }

    #[test]
    fn efim_identity_when_no_phase_coupling() {
        let mut m = Matrix5::zeros();
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 5.0;
        m[(2, 2)] = 2.0;
        m[(3, 3)] = 3.0;
        m[(4, 4)] = 4.0;
        m[(2, 3)] = 0.5;
        m[(3, 2)] = 0.5;
        let f = FisherMatrix::new(m).unwrap();
        let e = efim(&f).unwrap();
        assert_eq!(e[(0, 0)], 2.0);
        assert_eq!(e[(1, 1)], 3.0);
        assert_eq!(e[(2, 2)], 4.0);
        assert_eq!(e[(0, 1)], 0.5);
    }

    #[test]
    fn efim_schur_cancellation_and_e33() {
        // real PMCW: C0 = Im{C1} = 0, so E₂₂ = 8π²N_Rγ T²_rms and
        // E₃₃ = π²cos²θ N_R(N_R²−1)γ/6
        let spec = pmcw_rect(64, 16, 3);
        let fs = 8e6;
        let sig = synthesize(&spec, fs).unwrap();
        let gamma = 10.0;
        let n_r = 8;
        let scene = scene_with_esnr(gamma, sig.energy(), n_r, 0.0);
        let f = fim_numeric(&spec, &scene, fs).unwrap();
        let e = efim(&f).unwrap();
        let t2 = rms_time_sq(&sig).unwrap();
        assert_relative_eq!(
            e[(1, 1)],
            8.0 * PI * PI * n_r as f64 * gamma * t2,
            max_relative = 0.01
        );
        assert_relative_eq!(e[(2, 2)], 840.0 * PI * PI, max_relative = 1e-9);
        // Schur monotonicity: diag(E) ≤ diag(F_ss)
        for i in 0..3 {
            assert!(e[(i, i)] <= f.entry(i + 2, i + 2) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn crlb_diagonal_trivial() {
        let e = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 4.0, 8.0));
        let (a, b, c) = crlb_from_efim(&e).unwrap();
        assert_relative_eq!(a.finite().unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(b.finite().unwrap(), 0.25, max_relative = 1e-14);
        assert_relative_eq!(c.finite().unwrap(), 0.125, max_relative = 1e-14);
    }

    #[test]
    fn crlb_coupling_inflation() {
        // 2×2 analytic inverse: c_tau = 1/(a(1−ρ²)) with ρ = b/√(ac)
        let a = 3.0;
        let c = 5.0;
        let b = 2.0;
        let mut e = Matrix3::zeros();
        e[(0, 0)] = a;
        e[(1, 1)] = c;
        e[(0, 1)] = b;
        e[(1, 0)] = b;
        e[(2, 2)] = 7.0;
        let (c_tau, c_fd, c_theta) = crlb_from_efim(&e).unwrap();
        let rho2 = b * b / (a * c);
        assert_relative_eq!(
            c_tau.finite().unwrap(),
            1.0 / (a * (1.0 - rho2)),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            c_fd.finite().unwrap(),
            1.0 / (c * (1.0 - rho2)),
            max_relative = 1e-12
        );
        assert_eq!(c_theta, Bound::Finite(1.0 / 7.0));
    }

    #[test]
    fn crlb_structural_singularity_reported_unbounded() {
        // θ_R = π/2 (cos = 0): θ block vanishes, delay/Doppler stay finite
        let spec = fmcw(8);
        let fs = 4e6;
        let sig = synthesize(&spec, fs).unwrap();
        let scene = scene_with_esnr(10.0, sig.energy(), 4, PI / 2.0);
        let r = crlb_numeric(&spec, &scene, fs).unwrap();
        assert!(r.c_theta.is_unbounded());
        assert!(r.c_tau.finite().unwrap() > 0.0);
        assert!(r.c_fd.finite().unwrap() > 0.0);
        // N_R = 1 likewise kills the angle bound only
        let scene1 = scene_with_esnr(10.0, sig.energy(), 1, 0.0);
        let r1 = crlb_numeric(&spec, &scene1, fs).unwrap();
        assert!(r1.c_theta.is_unbounded());
        assert!(r1.c_tau.finite().unwrap() > 0.0);
    }

    #[test]
    fn aoa_bound_value() {
        // N_R=8, γ=10, θ=0 → 6/(π²·8·63·10)
        let spec = fmcw(8);
        let fs = 4e6;
        let sig = synthesize(&spec, fs).unwrap();
        let scene = scene_with_esnr(10.0, sig.energy(), 8, 0.0);
        let r = crlb_numeric(&spec, &scene, fs).unwrap();
        let expect = 6.0 / (PI * PI * 8.0 * 63.0 * 10.0);
        assert_relative_eq!(r.c_theta.finite().unwrap(), expect, max_relative = 1e-6);
        assert!((expect - 1.2062e-4).abs() < 1e-8);
    }

    #[test]
    fn sigma2_scaling_law() {
        let spec = pmcw_rect(32, 8, 5);
        let fs = 8e6;
        let sig = synthesize(&spec, fs).unwrap();
        let mut scene = scene_with_esnr(10.0, sig.energy(), 4, 0.1);
        let f1 = fim_numeric(&spec, &scene, fs).unwrap();
        scene.sigma2 *= 2.0;
        let f2 = fim_numeric(&spec, &scene, fs).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(
                    f1.entry(i, j),
                    2.0 * f2.entry(i, j),
                    max_relative = 1e-12,
                    epsilon = 1e-12 * f1.norm()
                );
            }
        }
        let r1 = crlb_from_efim(&efim(&f1).unwrap()).unwrap();
        let r2 = crlb_from_efim(&efim(&f2).unwrap()).unwrap();
        assert_relative_eq!(
            2.0 * r1.0.finite().unwrap(),
            r2.0.finite().unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn n_r_law() {
        // c_theta·N_R(N_R²−1) constant across N_R at fixed γ, θ_R
        let spec = fmcw(8);
        let fs = 4e6;
        let sig = synthesize(&spec, fs).unwrap();
        let mut anchor = None;
        for n_r in [2usize, 4, 8, 16] {
            let scene = scene_with_esnr(10.0, sig.energy(), n_r, 0.25);
            let r = crlb_numeric(&spec, &scene, fs).unwrap();
            let n = n_r as f64;
            let inv = r.c_theta.finite().unwrap() * n * (n * n - 1.0);
            match anchor {
                None => anchor = Some(inv),
                Some(a) => assert_relative_eq!(inv, a, max_relative = 1e-9),
            }
        }
    }

    #[test]
    fn fim_rejects_asymmetry_and_non_psd() {
        let mut m = Matrix5::zeros();
        m[(0, 1)] = 1.0;
        assert!(FisherMatrix::new(m).is_err());
        let neg = Matrix5::from_diagonal(&nalgebra::Vector5::new(1.0, 1.0, 1.0, 1.0, -1.0));
        assert!(FisherMatrix::new(neg).is_err());
    }

    #[test]
    fn pmcw_with_m_sequence_runs_clean() {
        let code = m_sequence(&[6, 1], 6).unwrap();
        let spec = WaveformSpec::Pmcw {
            pulse: PulseShape::Rrc { alpha: 0.5 },
            t_c: 1.5e-6,
            l: 63,
            k: 4,
            code,
            data: vec![1.0; 4],
        };
        let fs = 4.0 * spec.bandwidth();
        let sig = synthesize(&spec, fs).unwrap();
        let scene = scene_with_esnr(10.0, sig.energy(), 8, 0.0);
        let r = crlb_numeric(&spec, &scene, fs).unwrap();
        assert!(r.c_tau.finite().unwrap() > 0.0);
        let coupling = r.coupling.unwrap();
        assert!(coupling.re_c0_defect <= 1e-9 * sig.energy() * spec.bandwidth());
    }

    #[test]
    fn csv_export_shape() {
        let mut m = Matrix5::zeros();
        for i in 0..5 {
            m[(i, i)] = (i + 1) as f64;
        }
        let f = FisherMatrix::new(m).unwrap();
        let csv = f.to_csv();
        assert_eq!(csv.lines().count(), 26);
        assert!(csv.starts_with("param_i,param_j,value\n"));
        assert!(csv.contains("tau,tau,"));
    }
}
