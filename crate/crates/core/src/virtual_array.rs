//! MIMO virtual-array multiplexing and its effect on the CRLBs.
//!
//! A virtual array extends the receive spacing to d_R = N_T·λ/2 and requires
//! the N_T transmitters to radiate mutually orthogonal signals. Five schemes
//! are modeled: interleaved and block TDM (per-PRI / contiguous-block time
//! gating), block and comb FDM (spectral masking with √N_T power restoration),
//! and Hadamard-coded CDM. The global FIM is the sum of the per-transmitter
//! FIMs, each built on the virtual element positions n_v = n_T + n_R·N_T, with
//! the unbeamformed amplitude a = A/N_T.
//!
//! CDM's repetition factor β (ISI avoidance by discarding the first of each β
//! PRIs at the receiver) is modeled by scaling the branch moments by (β−1)/β;
//! the CRLB only sees retained energy. Literal discard is available in
//! [`multiplex_with_guard`] for the orthogonality checks.

use nalgebra::Matrix5;
use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::fisher::{
    band_limit_for, crlb_from_efim, efim, fim_from_moments, signal_moments, CrlbResult,
    FisherMatrix, SceneParams, SignalMoments,
};
use crate::waveform::{default_guard, delay_signal, synthesize_with_guard, SampledSignal, WaveformSpec};
use crate::{Error, Result};

/// Multiplexing scheme for orthogonal multi-transmitter operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VaScheme {
    /// Interleaved TDM: transmitter n owns PRIs {n, n+N_T, …}.
    Itdm,
    /// Block TDM: transmitter n owns a contiguous block of K/N_T PRIs.
    Btdm,
    /// Block FDM: transmitter n owns the n-th of N_T contiguous sub-bands.
    Bfdm,
    /// Comb FDM: the band is split into L·N_T slices of width B/(L·N_T);
    /// transmitter n owns slices {n, n+N_T, …}.
    Cfdm,
    /// Code-division with a Sylvester–Hadamard outer code over blocks of β
    /// PRIs; requires N_T a power of two and β ≥ 2.
    Cdm { beta: usize },
}

impl VaScheme {
    pub fn name(self) -> &'static str {
        match self {
            VaScheme::Itdm => "itdm",
            VaScheme::Btdm => "btdm",
            VaScheme::Bfdm => "bfdm",
            VaScheme::Cfdm => "cfdm",
            VaScheme::Cdm { .. } => "cdm",
        }
    }

    pub fn validate(self, n_t: usize) -> Result<()> {
        if n_t == 0 {
            return Err(Error::Config("need at least one transmitter".into()));
        }
        if let VaScheme::Cdm { beta } = self {
            if beta < 2 {
                return Err(Error::Config(format!(
                    "CDM repetition factor must be at least 2, got {beta}"
                )));
            }
            if !n_t.is_power_of_two() {
                return Err(Error::Config(format!(
                    "CDM needs a power-of-two transmitter count for the Hadamard code, got {n_t}"
                )));
            }
        }
        Ok(())
    }

    /// Scheme/waveform compatibility: band FDM needs a single-carrier
    /// waveform, comb FDM a multi-carrier one, CDM is PMCW-only.
    pub fn check_compatible(self, spec: &WaveformSpec) -> Result<()> {
        let ok = match self {
            VaScheme::Itdm | VaScheme::Btdm => true,
            VaScheme::Bfdm => {
                matches!(spec, WaveformSpec::Fmcw { .. } | WaveformSpec::Pmcw { .. })
            }
            VaScheme::Cfdm => {
                matches!(spec, WaveformSpec::Ofdm { .. } | WaveformSpec::Otfs { .. })
            }
            VaScheme::Cdm { .. } => matches!(spec, WaveformSpec::Pmcw { .. }),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "scheme {} is not applicable to this waveform family",
                self.name()
            )))
        }
    }
}

/// Sylvester–Hadamard matrix of order `n` (power of two), entries ±1.
pub fn hadamard(n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "Hadamard order must be a power of two, got {n}"
        )));
    }
    let mut h = vec![vec![1.0f64]];
    while h.len() < n {
        let m = h.len();
        let mut next = vec![vec![0.0; 2 * m]; 2 * m];
        for i in 0..m {
            for j in 0..m {
                next[i][j] = h[i][j];
                next[i][j + m] = h[i][j];
                next[i + m][j] = h[i][j];
                next[i + m][j + m] = -h[i][j];
            }
        }
        h = next;
    }
    Ok(h)
}

/// |⟨a, b⟩| = |Δt Σ a·b*| between two signals on the same grid.
pub fn cross_energy(a: &SampledSignal, b: &SampledSignal) -> Result<f64> {
    if a.len() != b.len() || a.fs() != b.fs() {
        return Err(Error::Config("cross energy needs signals on the same grid".into()));
    }
    let acc: Complex64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| x * y.conj())
        .sum();
    Ok((acc * a.dt()).norm())
}

fn time_gate(
    base: &SampledSignal,
    pri: f64,
    k_tot: usize,
    n_t: usize,
    owner: impl Fn(usize) -> usize,
) -> Result<Vec<SampledSignal>> {
    let mut out = Vec::with_capacity(n_t);
    for n in 0..n_t {
        out.push(base.map_samples(|idx, s| {
            // guard samples go with the adjacent edge PRI
            let p = (base.natural_time_at(idx) / pri).floor().max(0.0) as usize;
            if owner(p.min(k_tot - 1)) == n {
                s
            } else {
                Complex64::new(0.0, 0.0)
            }
        })?);
    }
    Ok(out)
}

fn freq_mask(
    base: &SampledSignal,
    b: f64,
    n_t: usize,
    slices: usize,
    owner: impl Fn(usize) -> usize,
) -> Result<Vec<SampledSignal>> {
    let n = base.len();
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex64> = base.samples().to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let df = base.fs() / n as f64;
    let width = b / slices as f64;
    let scale = (n_t as f64).sqrt() / n as f64;
    let inverse = planner.plan_fft_inverse(n);
    let mut out = Vec::with_capacity(n_t);
    for tx in 0..n_t {
        let mut buf: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(m, &v)| {
                let f = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 } * df;
                // out-of-band tails are clamped to the edge slices so the
                // branches partition the whole spectrum
                let idx = (((f + b / 2.0) / width).floor().max(0.0) as usize).min(slices - 1);
                if owner(idx) == tx {
                    v * scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        inverse.process(&mut buf);
        out.push(SampledSignal::from_parts(
            buf,
            base.fs(),
            base.t0_offset(),
            base.t0(),
            base.guard(),
        )?);
    }
    Ok(out)
}

fn cdm_gate(
    base: &SampledSignal,
    pri: f64,
    k_tot: usize,
    n_t: usize,
    beta: usize,
    literal_discard: bool,
) -> Result<Vec<SampledSignal>> {
    let h = hadamard(n_t)?;
    let mut out = Vec::with_capacity(n_t);
    for n in 0..n_t {
        let row = &h[n];
        out.push(base.map_samples(|idx, s| {
            let p = ((base.natural_time_at(idx) / pri).floor().max(0.0) as usize).min(k_tot - 1);
            if literal_discard && p % beta == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let chip = (p / beta) % n_t;
            s * row[chip]
        })?);
    }
    Ok(out)
}

/// Split a waveform into N_T mutually orthogonal per-transmitter signals.
pub fn multiplex(
    spec: &WaveformSpec,
    scheme: VaScheme,
    n_t: usize,
    fs: f64,
) -> Result<Vec<SampledSignal>> {
    multiplex_with_guard(spec, scheme, n_t, fs, default_guard(spec.bandwidth()), false)
}

/// As [`multiplex`] with an explicit guard interval; `literal_discard`
/// additionally zeroes the first of each β PRIs of the CDM branches (the
/// receiver-side ISI discard, normally modeled as an energy factor).
pub fn multiplex_with_guard(
    spec: &WaveformSpec,
    scheme: VaScheme,
    n_t: usize,
    fs: f64,
    guard: f64,
    literal_discard: bool,
) -> Result<Vec<SampledSignal>> {
    spec.validate()?;
    scheme.validate(n_t)?;
    scheme.check_compatible(spec)?;
    let base = synthesize_with_guard(spec, fs, guard)?;
    if n_t == 1 && !matches!(scheme, VaScheme::Cdm { .. }) {
        return Ok(vec![base]);
    }
    let pri = spec.pri();
    let k_tot = spec.pri_count();
    match scheme {
        VaScheme::Itdm | VaScheme::Btdm => {
            if k_tot % n_t != 0 {
                return Err(Error::Config(format!(
                    "TDM needs the PRI count ({k_tot}) divisible by N_T ({n_t})"
                )));
            }
            let per = k_tot / n_t;
            match scheme {
                VaScheme::Itdm => time_gate(&base, pri, k_tot, n_t, |p| p % n_t),
                _ => time_gate(&base, pri, k_tot, n_t, move |p| p / per),
            }
        }
        VaScheme::Bfdm => freq_mask(&base, spec.bandwidth(), n_t, n_t, |i| i),
        VaScheme::Cfdm => {
            let l = match spec {
                WaveformSpec::Ofdm { l, .. } | WaveformSpec::Otfs { l, .. } => *l,
                _ => unreachable!("compatibility checked above"),
            };
            freq_mask(&base, spec.bandwidth(), n_t, l * n_t, move |i| i % n_t)
        }
        VaScheme::Cdm { beta } => {
            if k_tot % (n_t * beta) != 0 {
                return Err(Error::Config(format!(
                    "CDM needs the PRI count ({k_tot}) divisible by N_T·β ({})",
                    n_t * beta
                )));
            }
            cdm_gate(&base, pri, k_tot, n_t, beta, literal_discard)
        }
    }
}

fn scale_moments(mo: &SignalMoments, f: f64) -> SignalMoments {
    SignalMoments {
        e_s: mo.e_s * f,
        c0: mo.c0 * f,
        im_c1: mo.im_c1 * f,
        m1: mo.m1 * f,
        m2: mo.m2 * f,
        ds_energy: mo.ds_energy * f,
        cross_im: mo.cross_im * f,
    }
}

/// Virtual-element positions (units of λ/2 when d_t = 0.5λ) seen by the
/// n_T-th transmitter: n_T + n_R·N_T for each receive element.
pub fn virtual_offsets(n_tx: usize, n_t: usize, n_r: usize, d_t: f64) -> Vec<f64> {
    (0..n_r).map(|r| (n_tx + r * n_t) as f64 * 2.0 * d_t).collect()
}

/// Global FIM of a virtual-array scene: the sum of per-transmitter FIMs,
/// each evaluated on its virtual element positions with the unbeamformed
/// amplitude a = A/N_T (`scene.amplitude` is the beamformed A).
pub fn va_fim(
    spec: &WaveformSpec,
    scheme: VaScheme,
    scene: &SceneParams,
    fs: f64,
) -> Result<FisherMatrix> {
    scene.validate()?;
    let n_t = scene.array.n_t;
    let guard = default_guard(spec.bandwidth()).max(2.0 * scene.tau.abs());
    let branches = multiplex_with_guard(spec, scheme, n_t, fs, guard, false)?;
    let a = scene.amplitude / n_t as f64;
    let retained = match scheme {
        VaScheme::Cdm { beta } => (beta as f64 - 1.0) / beta as f64,
        _ => 1.0,
    };
    let mut sum = Matrix5::zeros();
    for (n, branch) in branches.iter().enumerate() {
        let delayed = delay_signal(branch, scene.tau)?;
        let mo = signal_moments(&delayed, scene.tau, band_limit_for(spec))?;
        let mo = scale_moments(&mo, retained);
        let offsets = virtual_offsets(n, n_t, scene.array.n_r, scene.array.d_t);
        let f = fim_from_moments(&mo, a, scene.sigma2, scene.theta_r, &offsets)?;
        sum += f.matrix();
    }
    FisherMatrix::new(sum)
}

/// End-to-end virtual-array CRLB (EFIM over the nuisance phase, inverted).
pub fn va_crlb(
    spec: &WaveformSpec,
    scheme: VaScheme,
    scene: &SceneParams,
    fs: f64,
) -> Result<CrlbResult> {
    let f = va_fim(spec, scheme, scene, fs)?;
    let e = efim(&f)?;
    let (c_tau, c_fd, c_theta) = crlb_from_efim(&e)?;
    Ok(CrlbResult { c_tau, c_fd, c_theta, coupling: None })
}

/// CRLB ratios of a VA scheme against the non-multiplexed baseline.
#[derive(Debug, Clone, Copy)]
pub struct VaCrlbRatios {
    pub r_tau: f64,
    pub r_fd: f64,
    /// Exact ratio from the N_v form 6/(π²cos²θ N_v(N_v²−1)γ_v).
    pub r_theta_exact: f64,
    /// Large-N_v approximation (1, 1/N_T, β/((β−1)N_T)).
    pub r_theta_approx: f64,
}

/// Closed-form CRLB ratio triple of §IV: TDM (N_T², N_T², ≈1),
/// FDM (N_T, N_T, ≈1/N_T), CDM (βN_T/(β−1), ·, ≈β/((β−1)N_T)).
pub fn va_crlb_ratios(scheme: VaScheme, n_t: usize, n_r: usize) -> Result<VaCrlbRatios> {
    scheme.validate(n_t)?;
    if n_r < 2 {
        return Err(Error::Config(
            "AoA ratio needs at least two receive elements".into(),
        ));
    }
    let n = n_t as f64;
    // (delay/Doppler ratio, ESNR loss γ/γ_v, approximate AoA ratio)
    let (r, esnr_loss, approx) = match scheme {
        VaScheme::Itdm | VaScheme::Btdm => (n * n, n * n * n, 1.0),
        VaScheme::Bfdm | VaScheme::Cfdm => (n, n * n, 1.0 / n),
        VaScheme::Cdm { beta } => {
            let b = beta as f64;
            (b * n / (b - 1.0), b * n * n / (b - 1.0), b / ((b - 1.0) * n))
        }
    };
    let nr = n_r as f64;
    let nv = (n_t * n_r) as f64;
    let r_theta_exact = esnr_loss * nr * (nr * nr - 1.0) / (nv * (nv * nv - 1.0));
    Ok(VaCrlbRatios { r_tau: r, r_fd: r, r_theta_exact, r_theta_approx: approx })
}

/// CSV table of ratio triples, schema
/// `scheme,n_t,beta,r_tau,r_fd,r_theta_exact,r_theta_approx`.
pub fn ratios_csv(rows: &[(VaScheme, usize)], n_r: usize) -> Result<String> {
    let mut out = String::from("scheme,n_t,beta,r_tau,r_fd,r_theta_exact,r_theta_approx\n");
    for &(scheme, n_t) in rows {
        let r = va_crlb_ratios(scheme, n_t, n_r)?;
        let beta = match scheme {
            VaScheme::Cdm { beta } => beta.to_string(),
            _ => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            scheme.name(),
            n_t,
            beta,
            r.r_tau,
            r.r_fd,
            r.r_theta_exact,
            r.r_theta_approx
        ));
    }
    Ok(out)
}

/// Monte-Carlo estimate of the decoded-noise cross-covariance after CDM
/// outer decoding.
#[derive(Debug, Clone, Copy)]
pub struct NoiseDecodeReport {
    /// max over trials and stream pairs of |cov(i,j)|/σ², i ≠ j.
    pub max_cross: f64,
    /// max over streams of |trial-averaged variance − σ²|/σ².
    pub max_var_err: f64,
}

fn standard_complex(rng: &mut impl Rng) -> Complex64 {
    // Box–Muller; unit total variance split across re/im
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-u.ln()).sqrt();
    Complex64::new(r * v.cos(), r * v.sin())
}

/// Draw white complex Gaussian noise, outer-decode with Hadamard rows, and
/// estimate the cross-covariances between the decoded streams (analytically
/// σ²I δ[n−n']).
pub fn cdm_decode_noise_check(
    n_t: usize,
    n_samples: usize,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<NoiseDecodeReport> {
    if n_samples == 0 || trials == 0 {
        return Err(Error::Config("need at least one sample and one trial".into()));
    }
    let h = hadamard(n_t)?;
    if n_t == 1 {
        return Ok(NoiseDecodeReport { max_cross: 0.0, max_var_err: 0.0 });
    }
    let norm = 1.0 / (n_t as f64).sqrt();
    let mut max_cross = 0.0f64;
    let mut var_acc = vec![0.0f64; n_t];
    for _ in 0..trials {
        let mut cov = vec![vec![Complex64::new(0.0, 0.0); n_t]; n_t];
        for _ in 0..n_samples {
            let w: Vec<Complex64> = (0..n_t).map(|_| standard_complex(rng)).collect();
            let d: Vec<Complex64> = (0..n_t)
                .map(|n| {
                    w.iter()
                        .zip(&h[n])
                        .map(|(x, c)| x * c)
                        .sum::<Complex64>()
                        * norm
                })
                .collect();
            for i in 0..n_t {
                for j in 0..n_t {
                    cov[i][j] += d[i] * d[j].conj();
                }
            }
        }
        for i in 0..n_t {
            for j in 0..n_t {
                let c = cov[i][j] / n_samples as f64;
                if i == j {
                    var_acc[i] += c.re;
                } else {
                    max_cross = max_cross.max(c.norm());
                }
            }
        }
    }
    let max_var_err = var_acc
        .iter()
        .map(|v| (v / trials as f64 - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(NoiseDecodeReport { max_cross, max_var_err })
}
