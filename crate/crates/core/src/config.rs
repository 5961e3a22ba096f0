//! Experiment configuration: a flat, sectioned key–value text format.
//!
//! ```ini
//! [scenario]
//! name = demo
//! seed = 42
//! oversample = 4
//!
//! [waveform]
//! family = ofdm        ; fmcw | pmcw | ofdm | otfs
//! b = 4e6              ; two-sided bandwidth, Hz
//! t_f = 1e-3           ; frame duration, s (authoritative for FMCW;
//!                      ; PMCW/OFDM/OTFS frames follow K, L, B)
//! k = 64
//! l = 64
//! l_cp = 0             ; OFDM/OTFS cyclic prefix, samples
//! pulse = rrc          ; rect | sinc | rrc | rc (PMCW)
//! alpha = 0.25
//!
//! [scene]
//! gamma_db = 10        ; or: snr_db (+ optional n_s override)
//! sigma2 = 1.0
//! tau = 0.0
//! f_d = 0.0
//! theta_r = 0.0        ; rad
//! f_c = 28e9
//!
//! [array]
//! n_t = 8
//! n_r = 8
//!
//! [va]                 ; optional
//! scheme = itdm        ; itdm | btdm | bfdm | cfdm | cdm
//! beta = 2             ; CDM only
//!
//! [sweep]              ; optional; exactly one variable
//! variable = gamma_db
//! start = 0
//! stop = 20
//! steps = 11
//!
//! [output]
//! dir = out
//! format = csv         ; csv | csv+plot
//! ```
//!
//! Decibel quantities are accepted through `_db`-suffixed keys only; every
//! other value is linear. Omitted scene/array keys fall back to the defaults
//! γ = 10 dB, B = 400 MHz, T_F = 10 ms, f_c = 28 GHz, N_T = N_R = 8.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::fisher::{ArrayConfig, SceneParams};
use crate::units::{db_to_linear, esnr_from_snr, EsnrLinear};
use crate::virtual_array::VaScheme;
use crate::waveform::{PulseShape, WaveformSpec};
use crate::{Error, Result};

pub type IniSections = BTreeMap<String, BTreeMap<String, String>>;

/// Parse the INI-style text into sections. Untrusted input: every malformed
/// shape is a [`Error::Parse`], never a panic.
pub fn parse_ini(text: &str) -> Result<IniSections> {
    let mut sections: IniSections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", lineno + 1)))?
                .trim();
            if name.is_empty() {
                return Err(Error::Parse(format!("line {}: empty section name", lineno + 1)));
            }
            let name = name.to_ascii_lowercase();
            if sections.contains_key(&name) {
                return Err(Error::Parse(format!("line {}: duplicate section [{name}]", lineno + 1)));
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        // strip a trailing `; comment`
        let value = value.split(';').next().unwrap_or("").trim().to_string();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        let section = current
            .as_ref()
            .ok_or_else(|| Error::Parse(format!("line {}: key before any [section]", lineno + 1)))?;
        let map = sections.get_mut(section).expect("section inserted above");
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(sections)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveformFamily {
    Fmcw,
    Pmcw,
    Ofdm,
    Otfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    CsvPlot,
}

#[derive(Debug, Clone)]
pub struct WaveformConfig {
    pub family: WaveformFamily,
    pub b: f64,
    pub t_f: f64,
    pub k: usize,
    pub l: usize,
    pub l_cp: usize,
    pub pulse: PulseShape,
}

#[derive(Debug, Clone, Copy)]
pub struct SceneConfig {
    pub gamma_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub n_s: Option<f64>,
    pub sigma2: f64,
    pub tau: f64,
    pub f_d: f64,
    pub theta_r: f64,
    pub f_c: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepConfig {
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Everything a CLI run needs, with §V defaults filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub oversample: f64,
    pub waveform: WaveformConfig,
    pub scene: SceneConfig,
    pub n_t: usize,
    pub n_r: usize,
    pub va: Option<VaScheme>,
    pub sweep: Option<SweepConfig>,
    pub out_dir: String,
    pub format: OutputFormat,
}

const SWEEPABLE: &[&str] = &[
    "gamma_db", "theta_r", "tau", "f_d", "b", "t_f", "k", "l", "alpha", "n_t", "n_r",
];

struct SectionReader {
    name: &'static str,
    map: BTreeMap<String, String>,
}

impl SectionReader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| bad(self.name, key, &v, "a finite number")),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| bad(self.name, key, &v, "a non-negative integer")),
        }
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| bad(self.name, key, &v, "a 64-bit unsigned integer")),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(Error::Config(format!(
                "unknown key `{key}` in section [{}]",
                self.name
            )));
        }
        Ok(())
    }
}

fn bad(section: &str, key: &str, value: &str, want: &str) -> Error {
    Error::Config(format!("[{section}] {key} = {value}: expected {want}"))
}

fn reader(sections: &mut IniSections, name: &'static str) -> SectionReader {
    SectionReader {
        name,
        map: sections.remove(name).unwrap_or_default(),
    }
}

impl ExperimentConfig {
    pub fn from_ini(text: &str) -> Result<Self> {
        let mut sections = parse_ini(text)?;

        let mut sc = reader(&mut sections, "scenario");
        let name = sc.take("name").unwrap_or_else(|| "experiment".into());
        let seed = sc.u64("seed")?.unwrap_or(0);
        let oversample = sc.f64("oversample")?.unwrap_or(4.0);
        sc.finish()?;
        if oversample < 2.0 {
            return Err(Error::Config(format!(
                "oversample factor must be at least 2 (Nyquist), got {oversample}"
            )));
        }

        let mut wf = reader(&mut sections, "waveform");
        let family = match wf.take("family").as_deref() {
            Some("fmcw") => WaveformFamily::Fmcw,
            Some("pmcw") => WaveformFamily::Pmcw,
            Some("ofdm") => WaveformFamily::Ofdm,
            Some("otfs") => WaveformFamily::Otfs,
            Some(other) => return Err(bad("waveform", "family", other, "fmcw|pmcw|ofdm|otfs")),
            None => return Err(Error::Config("[waveform] family is required".into())),
        };
        let b = wf.f64("b")?.unwrap_or(400e6);
        let t_f = wf.f64("t_f")?.unwrap_or(10e-3);
        let k = wf.usize("k")?.unwrap_or(64);
        let l = wf.usize("l")?.unwrap_or(64);
        let l_cp = wf.usize("l_cp")?.unwrap_or(0);
        let alpha = wf.f64("alpha")?.unwrap_or(0.25);
        let pulse = match wf.take("pulse").as_deref() {
            None | Some("rrc") => PulseShape::Rrc { alpha },
            Some("rect") => PulseShape::Rect,
            Some("sinc") => PulseShape::Sinc,
            Some("rc") => PulseShape::Rc { alpha },
            Some(other) => return Err(bad("waveform", "pulse", other, "rect|sinc|rrc|rc")),
        };
        wf.finish()?;
        if !(b > 0.0 && t_f > 0.0) || k == 0 || l == 0 {
            return Err(Error::Config(
                "[waveform] needs b > 0, t_f > 0, k ≥ 1, l ≥ 1".into(),
            ));
        }
        pulse.validate()?;

        let mut sn = reader(&mut sections, "scene");
        let gamma_db = sn.f64("gamma_db")?;
        let snr_db = sn.f64("snr_db")?;
        let n_s = sn.f64("n_s")?;
        if gamma_db.is_some() && snr_db.is_some() {
            return Err(Error::Config(
                "[scene] gamma_db and snr_db are mutually exclusive".into(),
            ));
        }
        let scene = SceneConfig {
            gamma_db: if gamma_db.is_none() && snr_db.is_none() {
                Some(10.0)
            } else {
                gamma_db
            },
            snr_db,
            n_s,
            sigma2: sn.f64("sigma2")?.unwrap_or(1.0),
            tau: sn.f64("tau")?.unwrap_or(0.0),
            f_d: sn.f64("f_d")?.unwrap_or(0.0),
            theta_r: sn.f64("theta_r")?.unwrap_or(0.0),
            f_c: sn.f64("f_c")?.unwrap_or(28e9),
        };
        sn.finish()?;
        if scene.sigma2 <= 0.0 {
            return Err(Error::Config("[scene] sigma2 must be positive".into()));
        }

        let mut ar = reader(&mut sections, "array");
        let n_t = ar.usize("n_t")?.unwrap_or(8);
        let n_r = ar.usize("n_r")?.unwrap_or(8);
        ar.finish()?;
        if n_t == 0 || n_r == 0 {
            return Err(Error::Config("[array] n_t and n_r must be at least 1".into()));
        }

        let va = if sections.contains_key("va") {
            let mut v = reader(&mut sections, "va");
            let beta = v.usize("beta")?;
            let scheme = match v.take("scheme").as_deref() {
                Some("itdm") => VaScheme::Itdm,
                Some("btdm") => VaScheme::Btdm,
                Some("bfdm") => VaScheme::Bfdm,
                Some("cfdm") => VaScheme::Cfdm,
                Some("cdm") => VaScheme::Cdm {
                    beta: beta.ok_or_else(|| Error::Config("[va] cdm requires beta".into()))?,
                },
                Some(other) => return Err(bad("va", "scheme", other, "itdm|btdm|bfdm|cfdm|cdm")),
                None => return Err(Error::Config("[va] scheme is required".into())),
            };
            if beta.is_some() && !matches!(scheme, VaScheme::Cdm { .. }) {
                return Err(Error::Config("[va] beta only applies to cdm".into()));
            }
            v.finish()?;
            scheme.validate(n_t)?;
            Some(scheme)
        } else {
            None
        };

        let sweep = if sections.contains_key("sweep") {
            let mut sw = reader(&mut sections, "sweep");
            let variable = sw
                .take("variable")
                .ok_or_else(|| Error::Config("[sweep] variable is required".into()))?;
            if !SWEEPABLE.contains(&variable.as_str()) {
                return Err(bad("sweep", "variable", &variable, &SWEEPABLE.join("|")));
            }
            let start = sw
                .f64("start")?
                .ok_or_else(|| Error::Config("[sweep] start is required".into()))?;
            let stop = sw
                .f64("stop")?
                .ok_or_else(|| Error::Config("[sweep] stop is required".into()))?;
            let steps = sw.usize("steps")?.unwrap_or(11);
            sw.finish()?;
            if steps == 0 {
                return Err(Error::Config("[sweep] steps must be at least 1".into()));
            }
            Some(SweepConfig { variable, start, stop, steps })
        } else {
            None
        };

        let mut out = reader(&mut sections, "output");
        let out_dir = out.take("dir").unwrap_or_else(|| "out".into());
        let format = match out.take("format").as_deref() {
            None | Some("csv") => OutputFormat::Csv,
            Some("csv+plot") => OutputFormat::CsvPlot,
            Some(other) => return Err(bad("output", "format", other, "csv|csv+plot")),
        };
        out.finish()?;

        if let Some(section) = sections.keys().next() {
            return Err(Error::Config(format!("unknown section [{section}]")));
        }

        Ok(Self {
            name,
            seed,
            oversample,
            waveform: WaveformConfig { family, b, t_f, k, l, l_cp, pulse },
            scene,
            n_t,
            n_r,
            va,
            sweep,
            out_dir,
            format,
        })
    }

    /// Instantiate the waveform, drawing codes/symbols from `rng`.
    ///
    /// `t_f` is authoritative for FMCW (T = T_F/K); the other families build
    /// their frame from K, L, and B, and their synthesized frame duration is
    /// what the closed forms should be evaluated with.
    pub fn build_waveform(&self, rng: &mut impl Rng) -> Result<WaveformSpec> {
        let w = &self.waveform;
        let spec = match w.family {
            WaveformFamily::Fmcw => WaveformSpec::Fmcw {
                b: w.b,
                t: w.t_f / w.k as f64,
                k: w.k,
                data: vec![Complex64::new(1.0, 0.0); w.k],
            },
            WaveformFamily::Pmcw => WaveformSpec::Pmcw {
                pulse: w.pulse,
                t_c: (1.0 + w.pulse.rolloff()) / w.b,
                l: w.l,
                k: w.k,
                code: (0..w.l).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect(),
                data: vec![1.0; w.k],
            },
            WaveformFamily::Ofdm => WaveformSpec::Ofdm {
                delta_f: w.b / w.l as f64,
                l: w.l,
                k: w.k,
                l_cp: w.l_cp,
                symbols: (0..w.k).map(|_| qpsk_row(w.l, rng)).collect(),
            },
            WaveformFamily::Otfs => WaveformSpec::Otfs {
                delta_f: w.b / w.l as f64,
                l: w.l,
                k: w.k,
                l_cp: w.l_cp,
                dd_symbols: (0..w.l).map(|_| qpsk_row(w.k, rng)).collect(),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Resolve the ESNR, either directly or from the per-sample SNR.
    pub fn gamma(&self, spec: &WaveformSpec) -> Result<EsnrLinear> {
        match (self.scene.gamma_db, self.scene.snr_db) {
            (Some(db), _) => EsnrLinear::from_db(db),
            (None, Some(snr_db)) => esnr_from_snr(db_to_linear(snr_db), spec, self.scene.n_s),
            (None, None) => unreachable!("defaulted in from_ini"),
        }
    }

    /// Scene parameters for a synthesized signal of energy `e_s`: the
    /// amplitude realizes the requested ESNR at the configured noise power.
    pub fn build_scene(&self, e_s: f64, gamma: EsnrLinear) -> Result<SceneParams> {
        if !(e_s > 0.0 && e_s.is_finite()) {
            return Err(Error::Domain(format!("signal energy must be positive, got {e_s}")));
        }
        let s = &self.scene;
        let scene = SceneParams {
            amplitude: (gamma.value() * s.sigma2 / e_s).sqrt(),
            phase: 0.0,
            tau: s.tau,
            f_d: s.f_d,
            theta_r: s.theta_r,
            sigma2: s.sigma2,
            array: ArrayConfig::half_wavelength(self.n_t, self.n_r),
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Sampling rate fs = oversample · B.
    pub fn sample_rate(&self) -> f64 {
        self.oversample * self.waveform.b
    }
}

fn qpsk_row(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    (0..n)
        .map(|_| Complex64::from_polar(1.0, FRAC_PI_4 + FRAC_PI_2 * rng.gen_range(0..4) as f64))
        .collect()
}
