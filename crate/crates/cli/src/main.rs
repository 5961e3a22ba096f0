//! `crlb`: delay/Doppler/angle CRLB tables for radar waveforms.
//!
//! Subcommands: `figure <fig1..fig4>` reproduces the reference sweeps from
//! built-in defaults; `verify <config>` cross-checks the numeric Fisher
//! engine against the closed forms; `sweep <config>` tabulates bounds over
//! one variable; `crlb <config>` evaluates a single point.
//!
//! Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 tolerance
//! failure.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isac_crlb::closed_form::{
    crlb_fmcw, crlb_ofdm_discrete, crlb_otfs_discrete, crlb_pmcw, discrete_grid_ratios,
    ClosedFormRequest,
};
use isac_crlb::config::{ExperimentConfig, OutputFormat, WaveformFamily};
use isac_crlb::fisher::{crlb_numeric, Bound};
use isac_crlb::io::write_csv;
use isac_crlb::units::{crlb_delay_to_range, crlb_doppler_to_velocity};
use isac_crlb::virtual_array::{ratios_csv, va_crlb, va_crlb_ratios, VaScheme};
use isac_crlb::waveform::synthesize;
use isac_crlb::{CarrierConfig, Error, PulseShape, Result};

use plot::{line_plot, Series};

/// Numeric-oracle runs above this sample count are refused with advice to
/// scale B or T_F down; the bounds' B/T_F dependence is exact anyway.
const MAX_ORACLE_SAMPLES: f64 = (1u64 << 24) as f64;

#[derive(Parser)]
#[command(name = "crlb", version, about = "CRLB tables for FMCW/PMCW/OFDM/OTFS radar waveforms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides [scenario] seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format (overrides [output] format)
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Sampling oversample factor fs/B (overrides [scenario] oversample)
    #[arg(long, global = true)]
    oversample: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    #[value(name = "csv+plot")]
    CsvPlot,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reproduce a reference figure (fig1..fig4) from built-in defaults
    Figure { id: String },
    /// Check the numeric Fisher oracle against the closed forms
    Verify { config: PathBuf },
    /// Tabulate closed-form bounds over the configured sweep variable
    Sweep { config: PathBuf },
    /// Evaluate the closed-form bounds at a single configured point
    Crlb { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Parse(_) | Error::Io(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Figure { id } => {
            let seed = cli.seed.unwrap_or(0);
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let with_plot = matches!(cli.format, Some(FormatArg::CsvPlot));
            fs::create_dir_all(&out)?;
            run_figure(id, &out, seed, with_plot)?;
            Ok(0)
        }
        Cmd::Verify { config } => {
            let cfg = load_config(config, &cli)?;
            run_verify(&cfg)
        }
        Cmd::Sweep { config } => {
            let cfg = load_config(config, &cli)?;
            run_sweep(&cfg)?;
            Ok(0)
        }
        Cmd::Crlb { config } => {
            let cfg = load_config(config, &cli)?;
            run_single(&cfg)?;
            Ok(0)
        }
    }
}

fn load_config(path: &Path, cli: &Cli) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = ExperimentConfig::from_ini(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(os) = cli.oversample {
        if os < 2 {
            return Err(Error::Config("oversample factor must be at least 2".into()));
        }
        cfg.oversample = os as f64;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    match cli.format {
        Some(FormatArg::Csv) => cfg.format = OutputFormat::Csv,
        Some(FormatArg::CsvPlot) => cfg.format = OutputFormat::CsvPlot,
        None => {}
    }
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(cfg)
}

// ---------------------------------------------------------------- figures

/// Reference-sweep defaults: γ = 10 dB, B = 400 MHz, T_F = 10 ms,
/// f_c = 28 GHz, N_T = N_R = 8.
fn default_request() -> Result<ClosedFormRequest> {
    Ok(ClosedFormRequest {
        b: 400e6,
        t_f: 10e-3,
        k: 64,
        l: 64,
        pulse: None,
        n_r: 8,
        gamma: isac_crlb::EsnrLinear::from_db(10.0)?,
        theta_r: 0.0,
        approx_large_k: false,
    })
}

fn run_figure(id: &str, out: &Path, seed: u64, with_plot: bool) -> Result<()> {
    let (body, svg) = match id {
        "fig1" => figure1()?,
        "fig2" => figure2()?,
        "fig3" => figure3()?,
        "fig4" => figure4()?,
        other => {
            return Err(Error::Config(format!(
                "unknown figure `{other}` (expected fig1..fig4)"
            )))
        }
    };
    let csv_path = out.join(format!("{id}.csv"));
    write_csv(&csv_path, &[format!("seed = {seed}")], &body)?;
    println!("wrote {}", csv_path.display());
    if with_plot {
        let svg_path = out.join(format!("{id}.svg"));
        fs::write(&svg_path, svg)?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

/// FMCW exact vs. large-K bounds over the chirp count.
fn figure1() -> Result<(String, String)> {
    let mut body =
        String::from("k,c_tau_exact_s2,c_fd_exact_hz2,c_tau_approx_s2,c_fd_approx_hz2,exact_over_approx\n");
    let mut ratio = Vec::new();
    for k in 2..=200usize {
        let mut req = default_request()?;
        req.k = k;
        let exact = crlb_fmcw(&req)?;
        req.approx_large_k = true;
        let approx = crlb_fmcw(&req)?;
        let (et, ef) = (exact.c_tau.expect_finite("c_tau")?, exact.c_fd.expect_finite("c_fd")?);
        let (at, af) = (approx.c_tau.expect_finite("c_tau")?, approx.c_fd.expect_finite("c_fd")?);
        let r = et / at;
        body.push_str(&format!(
            "{k},{et:.12e},{ef:.12e},{at:.12e},{af:.12e},{r:.12e}\n"
        ));
        ratio.push((k as f64, r));
    }
    let svg = line_plot(
        "FMCW exact / approximate CRLB",
        "chirp count K",
        "bound ratio",
        false,
        &[Series { label: "exact/approx".into(), points: ratio }],
    );
    Ok((body, svg))
}

/// PMCW delay bound across chip pulse shapes and roll-off.
fn figure2() -> Result<(String, String)> {
    let mut body = String::from("alpha,c_tau_rrc_s2,c_tau_rc_s2,c_tau_rect_s2,c_tau_sinc_s2\n");
    let pmcw = |pulse: PulseShape| -> Result<f64> {
        let mut req = default_request()?;
        req.pulse = Some(pulse);
        crlb_pmcw(&req)?.c_tau.expect_finite("c_tau")
    };
    let rect = pmcw(PulseShape::Rect)?;
    let sinc = pmcw(PulseShape::Sinc)?;
    let mut series: Vec<Series> = ["RRC", "RC", "Rect", "Sinc"]
        .iter()
        .map(|l| Series { label: (*l).into(), points: Vec::new() })
        .collect();
    for i in 0..100 {
        let alpha = 0.01 + 0.99 * i as f64 / 99.0;
        let rrc = pmcw(PulseShape::Rrc { alpha })?;
        let rc = pmcw(PulseShape::Rc { alpha })?;
        body.push_str(&format!(
            "{alpha:.12e},{rrc:.12e},{rc:.12e},{rect:.12e},{sinc:.12e}\n"
        ));
        for (s, v) in series.iter_mut().zip([rrc, rc, rect, sinc]) {
            s.points.push((alpha, v));
        }
    }
    let svg = line_plot(
        "PMCW delay CRLB by chip pulse",
        "roll-off α",
        "C_tau (s², log)",
        true,
        &series,
    );
    Ok((body, svg))
}

/// OFDM continuous/discrete bound ratios over the grid size.
fn figure3() -> Result<(String, String)> {
    let mut body = String::from("n,delay_ratio_l_eq_n,doppler_ratio_k_eq_n\n");
    let mut s_tau = Vec::new();
    let mut s_fd = Vec::new();
    for n in 2..=300usize {
        let (r_tau, r_fd) = discrete_grid_ratios(n, n)?;
        body.push_str(&format!("{n},{r_tau:.12e},{r_fd:.12e}\n"));
        s_tau.push((n as f64, r_tau));
        s_fd.push((n as f64, r_fd));
    }
    let svg = line_plot(
        "OFDM continuous/discrete bound ratios",
        "grid size (L or K)",
        "bound ratio",
        false,
        &[
            Series { label: "C_tau / C_tau' (L = n)".into(), points: s_tau },
            Series { label: "C_fd / C_fd' (K = n)".into(), points: s_fd },
        ],
    );
    Ok((body, svg))
}

/// Virtual-array CRLB ratios by scheme, transmit count, and CDM block size.
fn figure4() -> Result<(String, String)> {
    let n_ts = [2usize, 4, 8, 16];
    let mut rows: Vec<(VaScheme, usize)> = Vec::new();
    for scheme in [VaScheme::Itdm, VaScheme::Btdm, VaScheme::Bfdm, VaScheme::Cfdm] {
        for n_t in n_ts {
            rows.push((scheme, n_t));
        }
    }
    for beta in [2usize, 4, 8] {
        for n_t in n_ts {
            rows.push((VaScheme::Cdm { beta }, n_t));
        }
    }
    let body = ratios_csv(&rows, 8)?;
    let mut series = Vec::new();
    for scheme in [
        VaScheme::Itdm,
        VaScheme::Bfdm,
        VaScheme::Cdm { beta: 2 },
        VaScheme::Cdm { beta: 8 },
    ] {
        let label = match scheme {
            VaScheme::Cdm { beta } => format!("{} beta={beta}", scheme.name()),
            _ => scheme.name().into(),
        };
        let points = n_ts
            .iter()
            .map(|&n_t| Ok((n_t as f64, va_crlb_ratios(scheme, n_t, 8)?.r_tau)))
            .collect::<Result<Vec<_>>>()?;
        series.push(Series { label, points });
    }
    let svg = line_plot(
        "VA delay-CRLB ratio vs. non-VA",
        "transmit elements N_T",
        "r_tau (log)",
        true,
        &series,
    );
    Ok((body, svg))
}

// ----------------------------------------------------------------- verify

struct Check {
    name: String,
    value: f64,
    tol: f64,
}

/// Closed-form bounds for the configured point. `t_f` in the request is the
/// synthesized frame duration, so numeric and closed evaluations describe
/// the same signal.
fn closed_point(cfg: &ExperimentConfig) -> Result<isac_crlb::CrlbResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spec = cfg.build_waveform(&mut rng)?;
    let req = ClosedFormRequest {
        b: cfg.waveform.b,
        t_f: spec.frame_duration(),
        k: cfg.waveform.k,
        l: cfg.waveform.l,
        pulse: Some(cfg.waveform.pulse),
        n_r: cfg.n_r,
        gamma: cfg.gamma(&spec)?,
        theta_r: cfg.scene.theta_r,
        approx_large_k: false,
    };
    match cfg.waveform.family {
        WaveformFamily::Fmcw => crlb_fmcw(&req),
        WaveformFamily::Pmcw => crlb_pmcw(&req),
        WaveformFamily::Ofdm => crlb_ofdm_discrete(&req),
        WaveformFamily::Otfs => crlb_otfs_discrete(&req),
    }
}

fn rel_err(numeric: Bound, closed: Bound) -> Result<f64> {
    match (numeric, closed) {
        (Bound::Unbounded, Bound::Unbounded) => Ok(0.0),
        (Bound::Finite(n), Bound::Finite(c)) => Ok((n - c).abs() / c),
        _ => Err(Error::Numerical(
            "numeric and closed-form bounds disagree on finiteness".into(),
        )),
    }
}

fn run_verify(cfg: &ExperimentConfig) -> Result<u8> {
    let fs = cfg.sample_rate();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spec = cfg.build_waveform(&mut rng)?;
    let n_samples = fs * spec.frame_duration();
    if n_samples > MAX_ORACLE_SAMPLES {
        return Err(Error::Config(format!(
            "oracle run needs {n_samples:.2e} samples; scale b or t_f down \
             (the bounds' B/T_F dependence is exact)"
        )));
    }
    let base = synthesize(&spec, fs)?;
    let gamma = cfg.gamma(&spec)?;
    let scene = cfg.build_scene(base.energy(), gamma)?;
    let numeric = crlb_numeric(&spec, &scene, fs)?;
    let closed = closed_point(cfg)?;

    let tol = match cfg.waveform.family {
        WaveformFamily::Fmcw => 0.02,
        _ => 0.05,
    };
    let mut checks = vec![
        Check { name: "c_tau rel err".into(), value: rel_err(numeric.c_tau, closed.c_tau)?, tol },
        Check { name: "c_fd rel err".into(), value: rel_err(numeric.c_fd, closed.c_fd)?, tol },
        Check {
            name: "c_theta rel err".into(),
            value: rel_err(numeric.c_theta, closed.c_theta)?,
            tol,
        },
    ];
    if let Some(c) = &numeric.coupling {
        checks.push(Check {
            name: "Re{C0} defect / (E_s B)".into(),
            value: c.re_c0_defect / (base.energy() * cfg.waveform.b),
            tol: 1e-9,
        });
        if cfg.waveform.family == WaveformFamily::Pmcw {
            checks.push(Check {
                name: "PMCW |Im{C1}| / E_s".into(),
                value: c.im_c1.abs() / base.energy(),
                tol: 1e-9,
            });
        }
    }
    if let Some(scheme) = cfg.va {
        let va = va_crlb(&spec, scheme, &scene, fs)?;
        let ratios = va_crlb_ratios(scheme, cfg.n_t, cfg.n_r)?;
        let pair = |name: &str, v: Bound, b: Bound, want: f64| -> Result<Check> {
            let r = v.expect_finite(name)? / b.expect_finite(name)?;
            Ok(Check { name: format!("va {name} ratio rel err"), value: (r - want).abs() / want, tol: 0.05 })
        };
        checks.push(pair("r_tau", va.c_tau, numeric.c_tau, ratios.r_tau)?);
        checks.push(pair("r_fd", va.c_fd, numeric.c_fd, ratios.r_fd)?);
        checks.push(pair("r_theta", va.c_theta, numeric.c_theta, ratios.r_theta_exact)?);
    }

    println!(
        "verify `{}` ({}, K={}, L={}, B={:.3e} Hz, fs={:.3e} Hz, seed={})",
        cfg.name,
        family_name(cfg.waveform.family),
        cfg.waveform.k,
        cfg.waveform.l,
        cfg.waveform.b,
        fs,
        cfg.seed
    );
    println!("  c_tau   numeric {}  closed {}", numeric.c_tau, closed.c_tau);
    println!("  c_fd    numeric {}  closed {}", numeric.c_fd, closed.c_fd);
    println!("  c_theta numeric {}  closed {}", numeric.c_theta, closed.c_theta);
    let mut worst: Option<&Check> = None;
    let mut failed = false;
    for c in &checks {
        let ok = c.value <= c.tol;
        println!(
            "  {:<28} {:>12.4e}  (tol {:.1e})  {}",
            c.name,
            c.value,
            c.tol,
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            failed = true;
            if worst.map_or(true, |w| c.value / c.tol > w.value / w.tol) {
                worst = Some(c);
            }
        }
    }
    if failed {
        let w = worst.expect("failed implies a worst offender");
        eprintln!("tolerance failure: worst offender `{}` = {:.4e} > {:.1e}", w.name, w.value, w.tol);
        return Ok(3);
    }
    println!("verification passed");
    Ok(0)
}

fn family_name(f: WaveformFamily) -> &'static str {
    match f {
        WaveformFamily::Fmcw => "fmcw",
        WaveformFamily::Pmcw => "pmcw",
        WaveformFamily::Ofdm => "ofdm",
        WaveformFamily::Otfs => "otfs",
    }
}

// ------------------------------------------------------------ sweep/point

fn fmt_bound(b: Bound) -> String {
    match b {
        Bound::Finite(v) => format!("{v:.12e}"),
        Bound::Unbounded => "inf".into(),
    }
}

fn bound_row(cfg: &ExperimentConfig, r: &isac_crlb::CrlbResult) -> Result<String> {
    let carrier = CarrierConfig::new(cfg.scene.f_c)?;
    let c_range = r.c_tau.map(crlb_delay_to_range);
    let c_vel = r.c_fd.map(|v| crlb_doppler_to_velocity(v, carrier));
    Ok(format!(
        "{},{},{},{},{}",
        fmt_bound(r.c_tau),
        fmt_bound(r.c_fd),
        fmt_bound(r.c_theta),
        fmt_bound(c_range),
        fmt_bound(c_vel)
    ))
}

const BOUND_COLS: &str = "c_tau_s2,c_fd_hz2,c_theta_rad2,c_range_m2,c_velocity_mps2";

fn apply_sweep_value(cfg: &mut ExperimentConfig, var: &str, v: f64) -> Result<()> {
    let as_count = |v: f64, what: &str| -> Result<usize> {
        let n = v.round();
        if n < 1.0 || (n - v).abs() > 1e-9 {
            return Err(Error::Config(format!("sweep value {v} is not a valid {what}")));
        }
        Ok(n as usize)
    };
    match var {
        "gamma_db" => {
            cfg.scene.gamma_db = Some(v);
            cfg.scene.snr_db = None;
        }
        "theta_r" => cfg.scene.theta_r = v,
        "tau" => cfg.scene.tau = v,
        "f_d" => cfg.scene.f_d = v,
        "b" => cfg.waveform.b = v,
        "t_f" => cfg.waveform.t_f = v,
        "k" => cfg.waveform.k = as_count(v, "symbol count")?,
        "l" => cfg.waveform.l = as_count(v, "subcarrier/code count")?,
        "n_t" => cfg.n_t = as_count(v, "element count")?,
        "n_r" => cfg.n_r = as_count(v, "element count")?,
        "alpha" => {
            cfg.waveform.pulse = match cfg.waveform.pulse {
                PulseShape::Rrc { .. } => PulseShape::Rrc { alpha: v },
                PulseShape::Rc { .. } => PulseShape::Rc { alpha: v },
                other => {
                    return Err(Error::Config(format!(
                        "pulse {other:?} has no roll-off to sweep"
                    )))
                }
            };
            cfg.waveform.pulse.validate()?;
        }
        other => return Err(Error::Config(format!("unknown sweep variable `{other}`"))),
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep subcommand needs a [sweep] section".into()))?;
    let points = sweep.points();
    // work pool over sweep points; rows gathered back in sweep order
    let rows: Vec<Result<(f64, String)>> = std::thread::scope(|scope| {
        let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(points.len().max(1));
        let mut handles = Vec::new();
        for w in 0..workers {
            let points = &points;
            handles.push(scope.spawn(move || {
                let mut chunk = Vec::new();
                let mut i = w;
                while i < points.len() {
                    let v = points[i];
                    let row = (|| {
                        let mut point_cfg = cfg.clone();
                        apply_sweep_value(&mut point_cfg, &sweep.variable, v)?;
                        let r = closed_point(&point_cfg)?;
                        bound_row(&point_cfg, &r)
                    })();
                    chunk.push((i, row.map(|row| (v, row))));
                    i += workers;
                }
                chunk
            }));
        }
        let mut rows: Vec<Option<Result<(f64, String)>>> = (0..points.len()).map(|_| None).collect();
        for h in handles {
            for (i, row) in h.join().expect("sweep worker panicked") {
                rows[i] = Some(row);
            }
        }
        rows.into_iter().map(|r| r.expect("every index filled")).collect()
    });

    let mut body = format!("{},{}\n", sweep.variable, BOUND_COLS);
    let mut series: Vec<Series> = ["c_tau_s2", "c_fd_hz2", "c_theta_rad2"]
        .iter()
        .map(|l| Series { label: (*l).into(), points: Vec::new() })
        .collect();
    for row in rows {
        let (v, cols) = row?;
        body.push_str(&format!("{v:.12e},{cols}\n"));
        for (s, val) in series.iter_mut().zip(cols.split(',')) {
            if let Ok(y) = val.parse::<f64>() {
                s.points.push((v, y));
            }
        }
    }
    let path = Path::new(&cfg.out_dir).join(format!("sweep_{}.csv", sweep.variable));
    write_csv(&path, &[format!("seed = {}", cfg.seed)], &body)?;
    println!("wrote {}", path.display());
    if cfg.format == OutputFormat::CsvPlot {
        let svg = line_plot(
            &format!("CRLB sweep over {}", sweep.variable),
            &sweep.variable,
            "bound (log)",
            true,
            &series,
        );
        let svg_path = Path::new(&cfg.out_dir).join(format!("sweep_{}.svg", sweep.variable));
        fs::write(&svg_path, svg)?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn run_single(cfg: &ExperimentConfig) -> Result<()> {
    let r = closed_point(cfg)?;
    let row = bound_row(cfg, &r)?;
    let body = format!("{BOUND_COLS}\n{row}\n");
    let path = Path::new(&cfg.out_dir).join("crlb.csv");
    write_csv(&path, &[format!("seed = {}", cfg.seed)], &body)?;
    println!("{BOUND_COLS}");
    println!("{row}");
    println!("wrote {}", path.display());
    Ok(())
}
