//! Modes × load cases × seeds on a worker pool, merged in cell order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::CampaignConfig;
use crate::metrics::{campaign_aggregate, summarize, weighted_combine, Metric, MetricsError, PerformanceReport, RunMetrics};
use crate::sim::{run, write_record, Mode, SimError, SimulationContext, SimulationRecord, CH_ROTOR_SPEED};

/// Welch segment length in samples.
pub const SPECTRUM_SEGMENT: usize = 4096;
/// Spectra are written up to this frequency (Hz).
pub const SPECTRUM_MAX_HZ: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One simulation of the campaign grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub mode: Mode,
    /// Index into the load-case table.
    pub case: usize,
    pub seed: u64,
}

impl Cell {
    /// File stem of the run's record, e.g. `bl_ff_v13.9_s2`.
    pub fn stem(&self, wind_speed: f64) -> String {
        format!("{}_v{}_s{}", self.mode.slug(), wind_speed, self.seed)
    }
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<RunMetrics, String>,
    /// One-sided rotor-speed PSD on [`CampaignOutcome::frequencies`].
    pub spectrum: Option<Vec<f64>>,
}

/// Averaged rotor-speed spectra of one load case, keyed by mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseSpectrum {
    pub case: usize,
    pub psd: BTreeMap<Mode, Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub cells: Vec<CellResult>,
    /// Seed-combined metrics per mode and case; `None` where any seed failed.
    pub per_case: BTreeMap<Mode, Vec<Option<RunMetrics>>>,
    /// Aggregate over the modes that completed every case.
    pub report: Option<PerformanceReport>,
    /// Hz
    pub frequencies: Vec<f64>,
    pub spectra: Vec<CaseSpectrum>,
}

impl CampaignOutcome {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    /// Modes left out of the aggregate because a case failed.
    pub fn incomplete_modes(&self) -> Vec<Mode> {
        self.per_case.iter().filter(|(_, v)| v.iter().any(Option::is_none)).map(|(m, _)| *m).collect()
    }
}

/// Grid in mode, case, seed order.
pub fn cells(cfg: &CampaignConfig) -> Vec<Cell> {
    let mut modes = cfg.modes.clone();
    modes.sort();
    modes.dedup();
    let mut out = Vec::new();
    for &mode in &modes {
        for case in 0..cfg.load_cases.len() {
            for &seed in &cfg.seeds {
                out.push(Cell { mode, case, seed });
            }
        }
    }
    out
}

/// Welch estimate of the one-sided PSD with a Hann window and half overlap.
/// Returns `(frequencies in Hz, density per Hz)`; the series is split into
/// segments of `segment` samples (fewer if the series is shorter).
pub fn welch_psd(x: &[f64], dt: f64, segment: usize) -> (Vec<f64>, Vec<f64>) {
    let n = segment.min(x.len());
    if n < 2 {
        return (Vec::new(), Vec::new());
    }
    let window: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / n as f64).cos()).collect();
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut segments = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut start = 0;
    while start + n <= x.len() {
        let seg = &x[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for (b, (v, w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, z) in psd.iter_mut().zip(&buf) {
            *p += z.norm_sqr();
        }
        segments += 1;
        start += n / 2;
    }
    let scale = dt / (wpow * segments as f64);
    for (k, p) in psd.iter_mut().enumerate() {
        *p *= scale;
        // fold negative frequencies, except DC and Nyquist
        if k != 0 && !(n % 2 == 0 && k == n / 2) {
            *p *= 2.0;
        }
    }
    let freq = (0..bins).map(|k| k as f64 / (n as f64 * dt)).collect();
    (freq, psd)
}

fn truncated_spectrum(rec: &SimulationRecord) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    let (f, p) = welch_psd(rec.steady(CH_ROTOR_SPEED)?, rec.dt, SPECTRUM_SEGMENT);
    let keep = f.iter().take_while(|&&v| v <= SPECTRUM_MAX_HZ).count();
    Ok((f[..keep].to_vec(), p[..keep].to_vec()))
}

/// Runs every cell. With `records` set, each run's CSV and metadata go to
/// that directory. A failed run is kept as an error message in its cell.
pub fn run_campaign(
    cfg: &CampaignConfig,
    ctx: &SimulationContext,
    records: Option<&Path>,
) -> Result<CampaignOutcome, CampaignError> {
    let grid = cells(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CampaignError::Pool(e.to_string()))?;
    let frequencies = std::sync::OnceLock::new();
    let results: Vec<CellResult> = pool.install(|| {
        grid.par_iter()
            .map(|&cell| {
                let case = &cfg.load_cases[cell.case];
                let attempt = || -> Result<(RunMetrics, Vec<f64>), String> {
                    let (rec, meta) = run(&cfg.scenario(cell.mode, case, cell.seed), ctx).map_err(|e| e.to_string())?;
                    if let Some(dir) = records {
                        write_record(dir, &cell.stem(case.wind_speed), &rec, &meta).map_err(|e| e.to_string())?;
                    }
                    let metrics = summarize(&rec, &cfg.woehler).map_err(|e| e.to_string())?;
                    let (f, p) = truncated_spectrum(&rec).map_err(|e| e.to_string())?;
                    let _ = frequencies.set(f);
                    Ok((metrics, p))
                };
                match attempt() {
                    Ok((m, p)) => CellResult { cell, outcome: Ok(m), spectrum: Some(p) },
                    Err(e) => CellResult { cell, outcome: Err(e), spectrum: None },
                }
            })
            .collect()
    });
    let frequencies = frequencies.into_inner().unwrap_or_default();

    // seeds of one (mode, case) are combined like load cases with equal weight
    let mut per_case: BTreeMap<Mode, Vec<Option<RunMetrics>>> = BTreeMap::new();
    let mut spectra: Vec<CaseSpectrum> =
        (0..cfg.load_cases.len()).map(|case| CaseSpectrum { case, psd: BTreeMap::new() }).collect();
    for mode in results.iter().map(|r| r.cell.mode).collect::<std::collections::BTreeSet<_>>() {
        let mut rows = Vec::with_capacity(cfg.load_cases.len());
        for case in 0..cfg.load_cases.len() {
            let group: Vec<&CellResult> =
                results.iter().filter(|r| r.cell.mode == mode && r.cell.case == case).collect();
            let ok: Vec<(f64, RunMetrics)> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).map(|m| (1.0, *m)).collect();
            rows.push(match ok.len() == group.len() {
                true => Some(weighted_combine(&ok, &cfg.woehler)?),
                false => None,
            });
            let specs: Vec<&Vec<f64>> = group.iter().filter_map(|r| r.spectrum.as_ref()).collect();
            if !specs.is_empty() && specs.iter().all(|s| s.len() == frequencies.len()) {
                let avg = (0..frequencies.len())
                    .map(|k| specs.iter().map(|s| s[k]).sum::<f64>() / specs.len() as f64)
                    .collect();
                spectra[case].psd.insert(mode, avg);
            }
        }
        per_case.insert(mode, rows);
    }
    let complete: BTreeMap<Mode, Vec<Option<RunMetrics>>> =
        per_case.iter().filter(|(_, v)| v.iter().all(Option::is_some)).map(|(m, v)| (*m, v.clone())).collect();
    let report = match complete.is_empty() {
        true => None,
        false => Some(campaign_aggregate(&complete, &cfg.load_cases, &cfg.woehler)?),
    };
    Ok(CampaignOutcome { cells: results, per_case, report, frequencies, spectra })
}

/// Every run with its status and metrics; failed cells carry the error.
pub fn cells_csv(cfg: &CampaignConfig, outcome: &CampaignOutcome) -> String {
    let mut s = String::from("mode,wind_speed,seed,status");
    for m in Metric::ALL {
        let _ = write!(s, ",{}", m.key());
    }
    s.push_str(",error\n");
    for r in &outcome.cells {
        let wind = cfg.load_cases[r.cell.case].wind_speed;
        let _ = write!(s, "{},{},{}", r.cell.mode.label(), wind, r.cell.seed);
        match &r.outcome {
            Ok(m) => {
                s.push_str(",ok");
                for metric in Metric::ALL {
                    let _ = write!(s, ",{:e}", m.get(metric));
                }
                s.push_str(",\n");
            }
            Err(e) => {
                s.push_str(",FAILED");
                s.push_str(&",".repeat(Metric::ALL.len()));
                let _ = writeln!(s, ",\"{}\"", e.replace('"', "'"));
            }
        }
    }
    s
}

/// Rotor-speed PSD of one case, one column per mode.
pub fn spectrum_csv(frequencies: &[f64], spec: &CaseSpectrum) -> String {
    let mut s = String::from("frequency_hz");
    for m in spec.psd.keys() {
        let _ = write!(s, ",psd_{}", m.slug());
    }
    s.push('\n');
    for (k, f) in frequencies.iter().enumerate() {
        let _ = write!(s, "{f}");
        for p in spec.psd.values() {
            let _ = write!(s, ",{:e}", p[k]);
        }
        s.push('\n');
    }
    s
}

/// Writes tables, spectra and the configuration echo into `dir`.
pub fn write_outputs(cfg: &CampaignConfig, outcome: &CampaignOutcome, dir: &Path) -> Result<(), CampaignError> {
    std::fs::create_dir_all(dir.join("spectra"))?;
    std::fs::write(dir.join("campaign.toml"), cfg.to_toml())?;
    std::fs::write(dir.join("cells.csv"), cells_csv(cfg, outcome))?;
    if let Some(report) = &outcome.report {
        std::fs::write(dir.join("per_case.csv"), report.per_case_csv())?;
        std::fs::write(dir.join("aggregate.csv"), report.aggregate_csv())?;
        std::fs::write(dir.join("aggregate.txt"), report.text_table())?;
        let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("report.json"), json)?;
    }
    for spec in &outcome.spectra {
        if spec.psd.is_empty() {
            continue;
        }
        let wind = cfg.load_cases[spec.case].wind_speed;
        std::fs::write(dir.join("spectra").join(format!("omega_psd_v{wind}.csv")), spectrum_csv(&outcome.frequencies, spec))?;
    }
    Ok(())
}

/// Reads `report.json` written by [`write_outputs`].
pub fn read_report(dir: &Path) -> Result<PerformanceReport, CampaignError> {
    let text = std::fs::read_to_string(dir.join("report.json"))?;
    serde_json::from_str(&text).map_err(|e| CampaignError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}
