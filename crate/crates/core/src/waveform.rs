//! Sampled complex-baseband realizations of the four waveform families,
//! with the energy-centroid time convention used by the Fisher engine.
//!
//! The time axis of a [`SampledSignal`] is centroid-shifted: sample `n`
//! sits at `t0_offset + n/fs`, and the discrete energy centroid of that
//! axis is zero. The pre-shift centroid `T0` (measured from the natural
//! frame origin) is kept alongside, because the Doppler rows of the FIM
//! weight time by `t + T0`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Pulse shape for PMCW chips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    Rect,
    Sinc,
    Rrc { alpha: f64 },
    Rc { alpha: f64 },
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PulseShape::Rect | PulseShape::Sinc => Ok(()),
            PulseShape::Rrc { alpha } => {
                if (0.0..=1.0).contains(&alpha) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("RRC roll-off must be in [0,1], got {alpha}")))
                }
            }
            PulseShape::Rc { alpha } => {
                if alpha > 0.0 && alpha <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "RC roll-off must be in (0,1] (the α→0 limit is the sinc pulse), got {alpha}"
                    )))
                }
            }
        }
    }

    /// Roll-off factor; zero for rect and sinc.
    pub fn rolloff(&self) -> f64 {
        match *self {
            PulseShape::Rrc { alpha } | PulseShape::Rc { alpha } => alpha,
            _ => 0.0,
        }
    }

    /// Occupied bandwidth for chip period `t_c`: 2/T_c for rect (main lobe),
    /// 1/T_c for sinc, (1+α)/T_c for RRC/RC.
    pub fn bandwidth(&self, t_c: f64) -> f64 {
        match *self {
            PulseShape::Rect => 2.0 / t_c,
            PulseShape::Sinc => 1.0 / t_c,
            PulseShape::Rrc { alpha } | PulseShape::Rc { alpha } => (1.0 + alpha) / t_c,
        }
    }

    /// Half-width of the synthesized support. RRC/RC are truncated to ±8
    /// chip periods (tail energy < 1e-4 for α ≥ 0.1). The sinc tail decays
    /// only as 1/t², so it gets ±64 chip periods to keep the truncation
    /// bias of B²_rms below the 1% cross-validation tolerance.
    pub fn half_support(&self, t_c: f64) -> f64 {
        match *self {
            PulseShape::Rect => t_c / 2.0,
            PulseShape::Sinc => 64.0 * t_c,
            _ => 8.0 * t_c,
        }
    }

    /// Pulse amplitude at time `t` (chip period `t_c`), peak-normalized as
    /// in the analytic definitions; scale-invariant quantities downstream
    /// do not depend on this normalization.
    pub fn eval(&self, t: f64, t_c: f64) -> f64 {
        let x = t / t_c;
        match *self {
            // half-open support so adjacent chips tile without overlap;
            // the epsilon assigns a boundary sample hit with float error to
            // exactly one chip
            PulseShape::Rect => {
                const EPS: f64 = 1e-9;
                if x >= -0.5 - EPS && x < 0.5 - EPS {
                    1.0
                } else {
                    0.0
                }
            }
            PulseShape::Sinc => sinc(x),
            PulseShape::Rrc { alpha } => rrc_impulse(x, alpha),
            PulseShape::Rc { alpha } => rc_impulse(x, alpha),
        }
    }
}

/// Normalized sinc: sin(πx)/(πx).
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Root-raised-cosine impulse response in chip units, peak 1−α+4α/π at x=0.
fn rrc_impulse(x: f64, alpha: f64) -> f64 {
    use std::f64::consts::PI;
    if alpha == 0.0 {
        return sinc(x);
    }
    let x4a = 4.0 * alpha * x;
    if x.abs() < 1e-9 {
        return 1.0 - alpha + 4.0 * alpha / PI;
    }
    if (x4a.abs() - 1.0).abs() < 1e-7 {
        // removable singularity at x = ±1/(4α)
        let a = alpha;
        return a / 2f64.sqrt()
            * ((1.0 + 2.0 / PI) * (PI / (4.0 * a)).sin()
                + (1.0 - 2.0 / PI) * (PI / (4.0 * a)).cos());
    }
    let num = (PI * x * (1.0 - alpha)).sin() + x4a * (PI * x * (1.0 + alpha)).cos();
    num / (PI * x * (1.0 - x4a * x4a))
}

/// Raised-cosine impulse response in chip units, peak 1 at x=0.
fn rc_impulse(x: f64, alpha: f64) -> f64 {
    use std::f64::consts::PI;
    let x2a = 2.0 * alpha * x;
    if (x2a.abs() - 1.0).abs() < 1e-7 {
        return PI / 4.0 * sinc(1.0 / (2.0 * alpha));
    }
    sinc(x) * (PI * alpha * x).cos() / (1.0 - x2a * x2a)
}

/// Binary m-sequence of length 2^r − 1 from an LFSR with the given feedback
/// taps (tap positions are 1-based exponents of the generator polynomial;
/// e.g. `[3, 1]` for x³ + x + 1). Output chips are ±1.
pub fn m_sequence(taps: &[usize], degree: usize) -> Result<Vec<f64>> {
    if degree == 0 || degree > 24 {
        return Err(Error::Config(format!("LFSR degree out of range: {degree}")));
    }
    if taps.iter().any(|&t| t == 0 || t > degree) {
        return Err(Error::Config("LFSR tap positions must lie in 1..=degree".into()));
    }
    let n = (1usize << degree) - 1;
    let mut state = vec![true; degree];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let bit = state[degree - 1];
        out.push(if bit { 1.0 } else { -1.0 });
        let fb = taps.iter().fold(false, |acc, &t| acc ^ state[t - 1]);
        state.rotate_right(1);
        state[0] = fb;
    }
    // a maximal-length register never revisits the all-zero state; a
    // non-primitive tap set shows up as a short cycle with unbalanced chips
    let ones = out.iter().filter(|&&c| c > 0.0).count();
    if ones != (n + 1) / 2 {
        return Err(Error::Config(
            "tap set does not generate a maximal-length sequence".into(),
        ));
    }
    Ok(out)
}

/// Tagged description of one of the four waveforms with data symbols and
/// frame geometry.
#[derive(Debug, Clone)]
pub enum WaveformSpec {
    /// Chirp train: chirp rate μ = B/T, K PRIs of length T, unit-modulus
    /// data x_k per chirp.
    Fmcw {
        b: f64,
        t: f64,
        k: usize,
        data: Vec<Complex64>,
    },
    /// Phase-coded: L chips of period T_c per PRI, BPSK code and data.
    Pmcw {
        pulse: PulseShape,
        t_c: f64,
        l: usize,
        k: usize,
        code: Vec<f64>,
        data: Vec<f64>,
    },
    /// Multicarrier grid: L subcarriers spaced Δf, K symbols, CP of L_cp
    /// subcarrier-samples, symbol grid X (K rows of L).
    Ofdm {
        delta_f: f64,
        l: usize,
        k: usize,
        l_cp: usize,
        symbols: Vec<Vec<Complex64>>,
    },
    /// Delay–Doppler grid (L rows of K), mapped to the time–frequency grid
    /// by the ISFFT and then OFDM-modulated.
    Otfs {
        delta_f: f64,
        l: usize,
        k: usize,
        l_cp: usize,
        dd_symbols: Vec<Vec<Complex64>>,
    },
}

impl WaveformSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WaveformSpec::Fmcw { b, t, k, data } => {
                if *t <= 0.0 || !(*b / *t).is_finite() {
                    return Err(Error::Config("FMCW requires T > 0 and finite μ = B/T".into()));
                }
                if *k == 0 || data.is_empty() {
                    return Err(Error::Config("FMCW requires K ≥ 1 with data".into()));
                }
                if data.len() != *k {
                    return Err(Error::Config(format!(
                        "FMCW data length {} != K = {k}",
                        data.len()
                    )));
                }
                if data.iter().any(|x| (x.norm() - 1.0).abs() > 1e-9) {
                    return Err(Error::Config("FMCW data must be unit-modulus".into()));
                }
                Ok(())
            }
            WaveformSpec::Pmcw { pulse, t_c, l, k, code, data } => {
                pulse.validate()?;
                if *t_c <= 0.0 {
                    return Err(Error::Config("PMCW requires T_c > 0".into()));
                }
                if *l == 0 || *k == 0 || code.len() != *l || data.len() != *k {
                    return Err(Error::Config(
                        "PMCW requires L, K ≥ 1 with matching code/data lengths".into(),
                    ));
                }
                if code.iter().chain(data.iter()).any(|&c| (c.abs() - 1.0).abs() > 1e-12) {
                    return Err(Error::Config("PMCW chips and data must be ±1".into()));
                }
                Ok(())
            }
            WaveformSpec::Ofdm { delta_f, l, k, l_cp, symbols } => {
                validate_grid(*delta_f, *l, *k, *l_cp, symbols, *k, *l, "OFDM symbol grid")
            }
            WaveformSpec::Otfs { delta_f, l, k, l_cp, dd_symbols } => {
                validate_grid(*delta_f, *l, *k, *l_cp, dd_symbols, *l, *k, "OTFS DD grid")
            }
        }
    }

    /// Occupied bandwidth B.
    pub fn bandwidth(&self) -> f64 {
        match self {
            WaveformSpec::Fmcw { b, .. } => *b,
            WaveformSpec::Pmcw { pulse, t_c, .. } => pulse.bandwidth(*t_c),
            WaveformSpec::Ofdm { delta_f, l, .. } | WaveformSpec::Otfs { delta_f, l, .. } => {
                delta_f * *l as f64
            }
        }
    }

    /// PRI / symbol duration (including CP for OFDM/OTFS).
    pub fn pri(&self) -> f64 {
        match self {
            WaveformSpec::Fmcw { t, .. } => *t,
            WaveformSpec::Pmcw { t_c, l, .. } => *t_c * *l as f64,
            WaveformSpec::Ofdm { delta_f, l, l_cp, .. }
            | WaveformSpec::Otfs { delta_f, l, l_cp, .. } => {
                let t = 1.0 / delta_f;
                t + t * *l_cp as f64 / *l as f64
            }
        }
    }

    /// Number of PRIs / symbols K.
    pub fn pri_count(&self) -> usize {
        match self {
            WaveformSpec::Fmcw { k, .. }
            | WaveformSpec::Pmcw { k, .. }
            | WaveformSpec::Ofdm { k, .. }
            | WaveformSpec::Otfs { k, .. } => *k,
        }
    }

    /// Frame length T_F = K · PRI.
    pub fn frame_duration(&self) -> f64 {
        self.pri() * self.pri_count() as f64
    }

    /// Bandwidth-determined sample count N_s, when the sampling rate follows
    /// from B (PMCW: B·T_F/(1+α); OFDM/OTFS: B·T_F). FMCW has none.
    pub fn sample_count(&self) -> Option<f64> {
        match self {
            WaveformSpec::Fmcw { .. } => None,
            WaveformSpec::Pmcw { pulse, .. } => {
                Some(self.bandwidth() * self.frame_duration() / (1.0 + pulse.rolloff()))
            }
            WaveformSpec::Ofdm { .. } | WaveformSpec::Otfs { .. } => {
                Some(self.bandwidth() * self.frame_duration())
            }
        }
    }
}

fn validate_grid(
    delta_f: f64,
    l: usize,
    k: usize,
    l_cp: usize,
    grid: &[Vec<Complex64>],
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<()> {
    if delta_f <= 0.0 {
        return Err(Error::Config("subcarrier spacing must be positive".into()));
    }
    if l == 0 || k == 0 {
        return Err(Error::Config("L and K must be ≥ 1".into()));
    }
    if l_cp >= l {
        return Err(Error::Config(format!("L_cp = {l_cp} must be < L = {l}")));
    }
    if grid.len() != rows || grid.iter().any(|r| r.len() != cols) {
        return Err(Error::Config(format!("{what} must be {rows}×{cols}")));
    }
    Ok(())
}

/// Complex baseband samples on a centroid-shifted time axis.
#[derive(Debug, Clone)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    fs: f64,
    /// Shifted-axis time of sample 0.
    t0_offset: f64,
    /// Pre-shift energy centroid T0, measured from the natural frame origin.
    t0: f64,
    /// Zero-padded guard on each side of the frame, s.
    guard: f64,
    /// Cached E_s = Δt·Σ|s[n]|².
    energy: f64,
}

impl SampledSignal {
    /// Wrap raw samples whose natural axis starts at `-guard` relative to
    /// the frame origin; computes the centroid and folds it into the axis.
    pub fn from_natural(samples: Vec<Complex64>, fs: f64, guard: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("empty sample vector".into()));
        }
        if fs <= 0.0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let dt = 1.0 / fs;
        let mut energy = 0.0;
        let mut moment = 0.0;
        for (n, s) in samples.iter().enumerate() {
            let p = s.norm_sqr();
            energy += p;
            moment += (n as f64 * dt - guard) * p;
        }
        energy *= dt;
        moment *= dt;
        if energy <= 0.0 {
            return Err(Error::Domain("signal has zero energy".into()));
        }
        let t0 = moment / energy;
        Ok(Self {
            samples,
            fs,
            t0_offset: -guard - t0,
            t0,
            guard,
            energy,
        })
    }

    /// Reconstruct from stored fields (file import).
    pub fn from_parts(
        samples: Vec<Complex64>,
        fs: f64,
        t0_offset: f64,
        t0: f64,
        guard: f64,
    ) -> Result<Self> {
        if samples.is_empty() || fs <= 0.0 {
            return Err(Error::Parse("signal must be nonempty with fs > 0".into()));
        }
        let dt = 1.0 / fs;
        let energy = dt * samples.iter().map(|s| s.norm_sqr()).sum::<f64>();
        if energy <= 0.0 {
            return Err(Error::Domain("signal has zero energy".into()));
        }
        Ok(Self { samples, fs, t0_offset, t0, guard, energy })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    /// Shifted-axis time of sample 0.
    pub fn t0_offset(&self) -> f64 {
        self.t0_offset
    }

    /// Pre-shift energy centroid T0 relative to the natural frame origin
    /// (≈ T_F/2 for constant-envelope frames).
    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Cached signal energy E_s.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Shifted-axis time of sample `n`.
    pub fn time_at(&self, n: usize) -> f64 {
        self.t0_offset + n as f64 / self.fs
    }

    /// Natural-axis time of sample `n` (0 = frame origin).
    pub fn natural_time_at(&self, n: usize) -> f64 {
        self.time_at(n) + self.t0
    }

    /// |Δt·Σ t_n|s[n]|²| on the shifted axis; the centroid invariant
    /// requires this to be ≤ 1e-6·E_s·T_F.
    pub fn centroid_defect(&self) -> f64 {
        let dt = self.dt();
        let m: f64 = self
            .samples
            .iter()
            .enumerate()
            .map(|(n, s)| self.time_at(n) * s.norm_sqr())
            .sum();
        (m * dt).abs()
    }

    /// Map samples pointwise, keeping the axis; re-caches energy.
    pub fn map_samples(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Result<Self> {
        let samples: Vec<Complex64> =
            self.samples.iter().enumerate().map(|(n, &s)| f(n, s)).collect();
        let dt = self.dt();
        let energy = dt * samples.iter().map(|s| s.norm_sqr()).sum::<f64>();
        if energy <= 0.0 {
            return Err(Error::Domain("mapped signal has zero energy".into()));
        }
        Ok(Self {
            samples,
            fs: self.fs,
            t0_offset: self.t0_offset,
            t0: self.t0,
            guard: self.guard,
            energy,
        })
    }
}

/// True signal-level parameters plus noise power and receive-array geometry,
/// used when constructing noiseless receive branches.
#[derive(Debug, Clone)]
pub struct ScenePoint {
    pub amplitude: f64,
    pub phase: f64,
    pub tau: f64,
    pub f_d: f64,
    pub theta_r: f64,
    pub n_r: usize,
}

/// Default oversampling factor: fs = 4B keeps the spectral-derivative
/// aliasing of the t²- and f²-weighted FIM integrals below the oracle
/// tolerances.
pub const DEFAULT_OVERSAMPLE: f64 = 4.0;

/// Default guard width for bandwidth B: 8/B of zero padding each side so
/// delayed copies never wrap.
pub fn default_guard(b: f64) -> f64 {
    8.0 / b
}

/// Synthesize `spec` at sample rate `fs` with the default guard interval.
pub fn synthesize(spec: &WaveformSpec, fs: f64) -> Result<SampledSignal> {
    synthesize_with_guard(spec, fs, default_guard(spec.bandwidth()))
}

/// Synthesize `spec` at sample rate `fs` with `guard` seconds of zero
/// padding on each side of the frame.
pub fn synthesize_with_guard(spec: &WaveformSpec, fs: f64, guard: f64) -> Result<SampledSignal> {
    spec.validate()?;
    let b = spec.bandwidth();
    if fs < b {
        return Err(Error::Sampling(format!(
            "fs = {fs} Hz is below the Nyquist rate of B = {b} Hz"
        )));
    }
    let t_f = spec.frame_duration();
    let n = ((t_f + 2.0 * guard) * fs).round() as usize;
    let dt = 1.0 / fs;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];

    match spec {
        WaveformSpec::Fmcw { b, t, k, data } => {
            let mu = b / t;
            for (i, s) in samples.iter_mut().enumerate() {
                let tn = i as f64 * dt - guard;
                if tn < 0.0 || tn >= t_f {
                    continue;
                }
                let ki = ((tn / t) as usize).min(k - 1);
                let u = tn - ki as f64 * t - t / 2.0;
                let ph = std::f64::consts::PI * mu * u * u;
                *s = data[ki] * Complex64::new(ph.cos(), ph.sin());
            }
        }
        WaveformSpec::Pmcw { pulse, t_c, l, k, code, data } => {
            let t = spec.pri();
            let half = pulse.half_support(*t_c);
            for ki in 0..*k {
                for li in 0..*l {
                    let amp = data[ki] * code[li];
                    let center = ki as f64 * t + (li as f64 + 0.5) * t_c;
                    let i_lo = (((center - half + guard) * fs).floor().max(0.0)) as usize;
                    let i_hi = ((((center + half + guard) * fs).ceil()) as usize).min(n);
                    for i in i_lo..i_hi {
                        let tn = i as f64 * dt - guard;
                        samples[i].re += amp * pulse.eval(tn - center, *t_c);
                    }
                }
            }
        }
        WaveformSpec::Ofdm { .. } | WaveformSpec::Otfs { .. } => {
            let (delta_f, l, k, l_cp, grid) = match spec {
                WaveformSpec::Ofdm { delta_f, l, k, l_cp, symbols } => {
                    (*delta_f, *l, *k, *l_cp, symbols.clone())
                }
                WaveformSpec::Otfs { delta_f, l, k, l_cp, dd_symbols } => {
                    (*delta_f, *l, *k, *l_cp, otfs_to_tf(dd_symbols)?)
                }
                _ => unreachable!(),
            };
            let t = 1.0 / delta_f;
            let t_cp = t * l_cp as f64 / l as f64;
            let t_s = t + t_cp;
            let f0 = delta_f * (l as f64 - 1.0) / 2.0;
            for (i, s) in samples.iter_mut().enumerate() {
                let tn = i as f64 * dt - guard;
                if tn < 0.0 || tn >= t_f {
                    continue;
                }
                let ki = ((tn / t_s) as usize).min(k - 1);
                // CP region copies the tail of the symbol body
                let mut u = tn - ki as f64 * t_s - t_cp;
                if u < 0.0 {
                    u += t;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (li, x) in grid[ki].iter().enumerate() {
                    let ph = 2.0 * std::f64::consts::PI * (li as f64 * delta_f - f0) * u;
                    acc += x * Complex64::new(ph.cos(), ph.sin());
                }
                *s = acc;
            }
        }
    }

    SampledSignal::from_natural(samples, fs, guard)
}

/// Inverse symplectic finite Fourier transform: maps an L×K delay–Doppler
/// grid to the K×L time–frequency grid,
/// X[l][k] = (1/√(KL)) Σ_{μ,ν} x[μ][ν] e^{j2π(kν/K − lμ/L)}. Unitary.
pub fn otfs_to_tf(dd_symbols: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let l = dd_symbols.len();
    if l == 0 {
        return Err(Error::Config("empty DD grid".into()));
    }
    let k = dd_symbols[0].len();
    if k == 0 || dd_symbols.iter().any(|r| r.len() != k) {
        return Err(Error::Config("ragged DD grid".into()));
    }
    let mut planner = FftPlanner::new();
    let fft_k_inv = planner.plan_fft_inverse(k);
    let fft_l_fwd = planner.plan_fft_forward(l);

    // inverse DFT over ν→k for each delay row
    let mut rows: Vec<Vec<Complex64>> = dd_symbols.to_vec();
    for row in rows.iter_mut() {
        fft_k_inv.process(row);
    }
    // forward DFT over μ→l for each Doppler column, assembling X as K rows of L
    let scale = 1.0 / ((k * l) as f64).sqrt();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); l]; k];
    let mut col = vec![Complex64::new(0.0, 0.0); l];
    for ki in 0..k {
        for (mu, row) in rows.iter().enumerate() {
            col[mu] = row[ki];
        }
        fft_l_fwd.process(&mut col);
        for li in 0..l {
            out[ki][li] = col[li] * scale;
        }
    }
    Ok(out)
}

/// Apply a noiseless scene to a signal: delay by τ (spectral phase ramp),
/// Doppler-shift by e^{j2πf_D(t+T0)}, scale by A·e^{jφ}, and steer across
/// the λ/2 receive array. Returns one branch per receive element.
pub fn apply_scene(sig: &SampledSignal, scene: &ScenePoint) -> Result<Vec<SampledSignal>> {
    if scene.n_r == 0 {
        return Err(Error::Config("scene requires N_R ≥ 1".into()));
    }
    if scene.tau.abs() > sig.guard() {
        return Err(Error::Truncation(format!(
            "delay {} s exceeds the guard interval {} s",
            scene.tau,
            sig.guard()
        )));
    }
    let delayed = delay_signal(sig, scene.tau)?;
    let gain = scene.amplitude * Complex64::new(scene.phase.cos(), scene.phase.sin());
    let sin_t = scene.theta_r.sin();
    let mut out = Vec::with_capacity(scene.n_r);
    for elem in 0..scene.n_r {
        let steer_ph = -std::f64::consts::PI * elem as f64 * sin_t;
        let steer = Complex64::new(steer_ph.cos(), steer_ph.sin());
        let branch = delayed.map_samples(|n, s| {
            let t = delayed.time_at(n) + delayed.t0();
            let ph = 2.0 * std::f64::consts::PI * scene.f_d * t;
            gain * steer * s * Complex64::new(ph.cos(), ph.sin())
        })?;
        out.push(branch);
    }
    Ok(out)
}

/// Delay a signal by τ via a frequency-domain phase ramp. The axis metadata
/// is unchanged; the waveform content moves by τ within the guard.
pub fn delay_signal(sig: &SampledSignal, tau: f64) -> Result<SampledSignal> {
    if tau == 0.0 {
        return Ok(sig.clone());
    }
    if tau.abs() > sig.guard() {
        return Err(Error::Truncation(format!(
            "delay {tau} s exceeds the guard interval {} s",
            sig.guard()
        )));
    }
    let n = sig.len();
    let mut buf: Vec<Complex64> = sig.samples().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = sig.fs() / n as f64;
    for (m, v) in buf.iter_mut().enumerate() {
        // signed FFT bin frequency
        let f = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 } * df;
        let ph = -2.0 * std::f64::consts::PI * f * tau;
        *v *= Complex64::new(ph.cos(), ph.sin());
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    SampledSignal::from_parts(buf, sig.fs(), sig.t0_offset(), sig.t0(), sig.guard())
}

/// Brick-wall low-pass: zero all spectral content with |f| > `half_bw`.
/// Used to realize the main-lobe bandwidth convention of the rectangular
/// pulse before computing spectral moments.
pub fn brick_wall_filter(sig: &SampledSignal, half_bw: f64) -> Result<SampledSignal> {
    let n = sig.len();
    let mut buf: Vec<Complex64> = sig.samples().to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = sig.fs() / n as f64;
    for (m, v) in buf.iter_mut().enumerate() {
        let f = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 } * df;
        if f.abs() > half_bw {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    SampledSignal::from_parts(buf, sig.fs(), sig.t0_offset(), sig.t0(), sig.guard())
}
