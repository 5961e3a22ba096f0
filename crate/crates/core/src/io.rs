//! Binary signal files and CSV emission.
//!
//! Signal file layout (little-endian): header `{fs: f64, n: u64,
//! t0_offset: f64}` followed by `n` interleaved (re, im) f64 pairs. The
//! format carries only the stored time axis; the pre-shift centroid and
//! guard are not persisted, so an imported signal reports `t0() = 0`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::spectral::PowerSpectrum;
use crate::waveform::SampledSignal;
use crate::{Error, Result};

const HEADER_LEN: usize = 24;
const SAMPLE_LEN: usize = 16;

/// Serialize a signal to the binary interchange layout.
pub fn encode_signal(sig: &SampledSignal) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + SAMPLE_LEN * sig.len());
    out.extend_from_slice(&sig.fs().to_le_bytes());
    out.extend_from_slice(&(sig.len() as u64).to_le_bytes());
    out.extend_from_slice(&sig.t0_offset().to_le_bytes());
    for s in sig.samples() {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("length checked"))
}

/// Parse the binary signal layout. Rejects malformed headers, length
/// mismatches, and non-finite values without panicking (untrusted input).
pub fn decode_signal(bytes: &[u8]) -> Result<SampledSignal> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Parse(format!(
            "signal file truncated: {} bytes, need at least {HEADER_LEN}",
            bytes.len()
        )));
    }
    let fs = f64_at(bytes, 0);
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("length checked"));
    let t0_offset = f64_at(bytes, 16);
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::Parse(format!("invalid sample rate {fs}")));
    }
    if !t0_offset.is_finite() {
        return Err(Error::Parse(format!("invalid time offset {t0_offset}")));
    }
    let body = bytes.len() - HEADER_LEN;
    let expect = (n as u128) * SAMPLE_LEN as u128;
    if expect != body as u128 {
        return Err(Error::Parse(format!(
            "sample count {n} disagrees with payload of {body} bytes"
        )));
    }
    if n == 0 {
        return Err(Error::Parse("signal file holds no samples".into()));
    }
    let mut samples = Vec::with_capacity(n as usize);
    for i in 0..n as usize {
        let at = HEADER_LEN + i * SAMPLE_LEN;
        let re = f64_at(bytes, at);
        let im = f64_at(bytes, at + 8);
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Parse(format!("non-finite sample at index {i}")));
        }
        samples.push(Complex64::new(re, im));
    }
    SampledSignal::from_parts(samples, fs, t0_offset, 0.0, 0.0)
}

pub fn write_signal(path: &Path, sig: &SampledSignal) -> Result<()> {
    fs::write(path, encode_signal(sig))?;
    Ok(())
}

pub fn read_signal(path: &Path) -> Result<SampledSignal> {
    decode_signal(&fs::read(path)?)
}

/// CSV rendering of a power spectrum, schema `f_hz,psd`.
pub fn spectrum_csv(ps: &PowerSpectrum) -> String {
    let mut out = String::from("f_hz,psd\n");
    for (m, v) in ps.bins.iter().enumerate() {
        out.push_str(&format!("{:.12e},{:.12e}\n", ps.freq_at(m), v));
    }
    out
}

/// Write a CSV document, prefixing `# seed = …` style header comments.
pub fn write_csv(path: &Path, comments: &[String], body: &str) -> Result<()> {
    let mut doc = String::new();
    for c in comments {
        doc.push_str(&format!("# {c}\n"));
    }
    doc.push_str(body);
    fs::write(path, doc)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{synthesize, WaveformSpec};
    use approx::assert_relative_eq;

    fn sig() -> SampledSignal {
        let spec = WaveformSpec::Fmcw {
            b: 1e6,
            t: 20e-6,
            k: 2,
            data: vec![Complex64::new(1.0, 0.0); 2],
        };
        synthesize(&spec, 4e6).unwrap()
    }

    #[test]
    fn roundtrip_preserves_samples_and_axis() {
        let s = sig();
        let back = decode_signal(&encode_signal(&s)).unwrap();
        assert_eq!(back.len(), s.len());
        assert_eq!(back.fs(), s.fs());
        assert_eq!(back.t0_offset(), s.t0_offset());
        assert_eq!(back.samples(), s.samples());
        assert_relative_eq!(back.energy(), s.energy(), max_relative = 1e-12);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.bin");
        let s = sig();
        write_signal(&path, &s).unwrap();
        let back = read_signal(&path).unwrap();
        assert_eq!(back.samples(), s.samples());
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(decode_signal(&[]).is_err());
        assert!(decode_signal(&[0u8; 23]).is_err());
        // header only, zero samples
        let mut buf = Vec::new();
        buf.extend_from_slice(&1e6f64.to_le_bytes());
        buf.extend_from_slice(&0u64.to_le_bytes());
        buf.extend_from_slice(&0f64.to_le_bytes());
        assert!(decode_signal(&buf).is_err());
        // count/payload mismatch (huge n must not allocate)
        let mut buf = Vec::new();
        buf.extend_from_slice(&1e6f64.to_le_bytes());
        buf.extend_from_slice(&u64::MAX.to_le_bytes());
        buf.extend_from_slice(&0f64.to_le_bytes());
        buf.extend_from_slice(&[0u8; 32]);
        assert!(decode_signal(&buf).is_err());
        // bad fs
        let mut good = encode_signal(&sig());
        good[0..8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_signal(&good).is_err());
        // non-finite sample
        let mut good = encode_signal(&sig());
        let at = good.len() - 8;
        good[at..].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(decode_signal(&good).is_err());
    }

    #[test]
    fn spectrum_csv_schema() {
        let ps = crate::spectral::power_spectrum(&sig()).unwrap();
        let csv = spectrum_csv(&ps);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "f_hz,psd");
        assert_eq!(csv.lines().count(), ps.bins.len() + 1);
    }

    #[test]
    fn csv_comment_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["seed = 7".into()], "a,b\n1,2\n").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# seed = 7\na,b\n"));
    }
}
