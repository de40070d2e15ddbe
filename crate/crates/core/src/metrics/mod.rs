//! Load-case table, rainflow counting, damage equivalent loads and campaign
//! aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{
    Mode, SimError, SimulationRecord, CH_BLADE_ROOT_MOMENT, CH_PITCH_RATE, CH_POWER, CH_ROTOR_SPEED,
    CH_SHAFT_MOMENT, CH_TOWER_BASE_MOMENT,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("missing results for {mode} at load cases {missing:?} (wind speeds, m/s)")]
    MissingCases { mode: String, missing: Vec<f64> },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Record(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    /// Mean hub-height wind speed (m/s).
    pub wind_speed: f64,
    /// Significant wave height (m).
    pub hs: f64,
    /// Peak wave period (s).
    pub ts: f64,
    /// Occurrence probability (fraction).
    pub probability: f64,
}

impl LoadCase {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.probability >= 0.0 && self.probability <= 1.0) {
            return Err(format!("probability {} outside [0, 1]", self.probability));
        }
        if !(self.wind_speed > 0.0 && self.hs >= 0.0 && self.ts > 0.0) {
            return Err("load case needs wind speed > 0, Hs ≥ 0 and Ts > 0".into());
        }
        Ok(())
    }
}

/// The seven-case occurrence table (wind speed, Hs, Ts, probability).
pub fn default_load_cases() -> Vec<LoadCase> {
    [
        (5.0, 1.4, 7.0, 0.14),
        (7.1, 1.7, 8.0, 0.24),
        (10.3, 2.2, 8.0, 0.26),
        (13.9, 3.0, 9.5, 0.20),
        (17.9, 4.3, 10.0, 0.11),
        (22.1, 6.2, 12.5, 0.038),
        (25.0, 8.3, 12.0, 0.0074),
    ]
    .into_iter()
    .map(|(wind_speed, hs, ts, probability)| LoadCase { wind_speed, hs, ts, probability })
    .collect()
}

/// A counted load cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub range: f64,
    pub mean: f64,
    /// 0.5 or 1.0
    pub count: f64,
}

impl Cycle {
    fn between(a: f64, b: f64, count: f64) -> Self {
        Cycle { range: (a - b).abs(), mean: 0.5 * (a + b), count }
    }
}

/// Local extrema of `series`, endpoints included; plateaus collapse to one
/// point.
pub fn turning_points(series: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = Vec::new();
    for &x in series {
        if pts.last() == Some(&x) {
            continue;
        }
        if pts.len() >= 2 {
            let (a, b) = (pts[pts.len() - 2], pts[pts.len() - 1]);
            // b is not an extremum if the series keeps moving the same way
            if (b - a) * (x - b) > 0.0 {
                pts.pop();
            }
        }
        pts.push(x);
    }
    pts
}

/// Four-point rainflow count; the residue contributes half cycles.
pub fn rainflow_count(series: &[f64]) -> Result<Vec<Cycle>, MetricsError> {
    if series.len() < 3 {
        return Err(MetricsError::Invalid("rainflow needs at least 3 samples".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::Invalid("series contains non-finite values".into()));
    }
    let mut cycles = Vec::new();
    let mut stack: Vec<f64> = Vec::new();
    for p in turning_points(series) {
        stack.push(p);
        while stack.len() >= 4 {
            let n = stack.len();
            let (a, b, c, d) = (stack[n - 4], stack[n - 3], stack[n - 2], stack[n - 1]);
            let inner = (b - c).abs();
            if inner <= (a - b).abs() && inner <= (c - d).abs() {
                cycles.push(Cycle::between(b, c, 1.0));
                stack.drain(n - 3..n - 1);
            } else {
                break;
            }
        }
    }
    for w in stack.windows(2) {
        cycles.push(Cycle::between(w[0], w[1], 0.5));
    }
    cycles.retain(|c| c.range > 0.0);
    Ok(cycles)
}

/// Damage equivalent load at a reference rate of 1 Hz:
/// `(Σ n·S^m / duration)^(1/m)`.
pub fn del_1hz(cycles: &[Cycle], duration: f64, m: f64) -> Result<f64, MetricsError> {
    if !(duration > 0.0) {
        return Err(MetricsError::Invalid("duration must be positive".into()));
    }
    if !(m >= 1.0) {
        return Err(MetricsError::Invalid("Wöhler exponent must be at least 1".into()));
    }
    if cycles.is_empty() {
        return Ok(0.0);
    }
    // factor out the largest range so S^m cannot overflow for m = 10
    let smax = cycles.iter().fold(0.0f64, |a, c| a.max(c.range));
    if smax == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = cycles.iter().map(|c| c.count * (c.range / smax).powf(m)).sum();
    Ok(smax * (sum / duration).powf(1.0 / m))
}

/// Wöhler exponents per load channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WoehlerExponents {
    pub tower: f64,
    pub blade: f64,
    pub shaft: f64,
}

impl Default for WoehlerExponents {
    fn default() -> Self {
        WoehlerExponents { tower: 4.0, blade: 10.0, shaft: 4.0 }
    }
}

/// Per-run performance values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub std_rotor_speed_rpm: f64,
    pub mean_power_w: f64,
    pub mean_pitch_rate_deg_s: f64,
    pub del_tower_base: f64,
    pub del_blade_root: f64,
    pub del_shaft: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    StdRotorSpeed,
    MeanPower,
    MeanPitchRate,
    DelTowerBase,
    DelBladeRoot,
    DelShaft,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::StdRotorSpeed,
        Metric::MeanPower,
        Metric::MeanPitchRate,
        Metric::DelTowerBase,
        Metric::DelBladeRoot,
        Metric::DelShaft,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::StdRotorSpeed => "STD rotor speed [rpm]",
            Metric::MeanPower => "mean power [MW]",
            Metric::MeanPitchRate => "mean |pitch rate| [deg/s]",
            Metric::DelTowerBase => "DEL tower base [MN*m]",
            Metric::DelBladeRoot => "DEL blade root [MN*m]",
            Metric::DelShaft => "DEL shaft [MN*m]",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::StdRotorSpeed => "std_rotor_speed_rpm",
            Metric::MeanPower => "mean_power_w",
            Metric::MeanPitchRate => "mean_pitch_rate_deg_s",
            Metric::DelTowerBase => "del_tower_base",
            Metric::DelBladeRoot => "del_blade_root",
            Metric::DelShaft => "del_shaft",
        }
    }

    /// Display scale from SI.
    pub fn display_scale(self) -> f64 {
        match self {
            Metric::MeanPower | Metric::DelTowerBase | Metric::DelBladeRoot | Metric::DelShaft => 1e-6,
            _ => 1.0,
        }
    }

    /// Averaging exponent: DELs combine on the m-th power, the rest linearly.
    pub fn exponent(self, w: &WoehlerExponents) -> f64 {
        match self {
            Metric::DelTowerBase => w.tower,
            Metric::DelBladeRoot => w.blade,
            Metric::DelShaft => w.shaft,
            _ => 1.0,
        }
    }
}

impl RunMetrics {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::StdRotorSpeed => self.std_rotor_speed_rpm,
            Metric::MeanPower => self.mean_power_w,
            Metric::MeanPitchRate => self.mean_pitch_rate_deg_s,
            Metric::DelTowerBase => self.del_tower_base,
            Metric::DelBladeRoot => self.del_blade_root,
            Metric::DelShaft => self.del_shaft,
        }
    }

    fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::StdRotorSpeed => self.std_rotor_speed_rpm = v,
            Metric::MeanPower => self.mean_power_w = v,
            Metric::MeanPitchRate => self.mean_pitch_rate_deg_s = v,
            Metric::DelTowerBase => self.del_tower_base = v,
            Metric::DelBladeRoot => self.del_blade_root = v,
            Metric::DelShaft => self.del_shaft = v,
        }
    }
}

/// Mean with one correction pass, so constant series average exactly.
fn mean(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m0 = x.iter().sum::<f64>() / n;
    m0 + x.iter().map(|v| v - m0).sum::<f64>() / n
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Performance values of one record after its transient window.
pub fn summarize(record: &SimulationRecord, w: &WoehlerExponents) -> Result<RunMetrics, MetricsError> {
    let omega = record.steady(CH_ROTOR_SPEED)?;
    let duration = omega.len() as f64 * record.dt;
    let del = |name: &str, m: f64| -> Result<f64, MetricsError> {
        del_1hz(&rainflow_count(record.steady(name)?)?, duration, m)
    };
    let rate = record.steady(CH_PITCH_RATE)?;
    Ok(RunMetrics {
        std_rotor_speed_rpm: std_dev(omega) * 60.0 / std::f64::consts::TAU,
        mean_power_w: mean(record.steady(CH_POWER)?),
        mean_pitch_rate_deg_s: rate.iter().map(|r| r.abs().to_degrees()).sum::<f64>() / rate.len() as f64,
        del_tower_base: del(CH_TOWER_BASE_MOMENT, w.tower)?,
        del_blade_root: del(CH_BLADE_ROOT_MOMENT, w.blade)?,
        del_shaft: del(CH_SHAFT_MOMENT, w.shaft)?,
    })
}

/// Weighted combination: linear for ordinary metrics, m-th power mean for
/// DELs. Weights need not be normalized.
pub fn weighted_combine(items: &[(f64, RunMetrics)], w: &WoehlerExponents) -> Result<RunMetrics, MetricsError> {
    let total: f64 = items.iter().map(|(p, _)| p).sum();
    if items.is_empty() || !(total > 0.0) {
        return Err(MetricsError::Invalid("weights must have a positive sum".into()));
    }
    let mut out = items[0].1;
    for m in Metric::ALL {
        let e = m.exponent(w);
        let v = if e == 1.0 {
            items.iter().map(|(p, r)| p * r.get(m)).sum::<f64>() / total
        } else {
            let scale = items.iter().fold(0.0f64, |a, (_, r)| a.max(r.get(m).abs()));
            if scale == 0.0 {
                0.0
            } else {
                let s = items.iter().map(|(p, r)| p * (r.get(m) / scale).powf(e)).sum::<f64>() / total;
                scale * s.powf(1.0 / e)
            }
        };
        out.set(m, v);
    }
    Ok(out)
}

/// Per-mode, per-case metrics and their occurrence-weighted aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub cases: Vec<LoadCase>,
    pub exponents: WoehlerExponents,
    pub per_case: BTreeMap<Mode, Vec<RunMetrics>>,
    pub aggregate: BTreeMap<Mode, RunMetrics>,
}

/// Aggregates per-case metrics over the load-case table. `per_case[mode][k]`
/// belongs to `table[k]`; `None` marks a failed or missing case.
pub fn campaign_aggregate(
    per_case: &BTreeMap<Mode, Vec<Option<RunMetrics>>>,
    table: &[LoadCase],
    w: &WoehlerExponents,
) -> Result<PerformanceReport, MetricsError> {
    if per_case.is_empty() {
        return Err(MetricsError::Invalid("no modes to aggregate".into()));
    }
    let mut report = PerformanceReport {
        cases: table.to_vec(),
        exponents: *w,
        per_case: BTreeMap::new(),
        aggregate: BTreeMap::new(),
    };
    for (&mode, rows) in per_case {
        let missing: Vec<f64> = table
            .iter()
            .enumerate()
            .filter(|(k, _)| rows.get(*k).is_none_or(|r| r.is_none()))
            .map(|(_, c)| c.wind_speed)
            .collect();
        if !missing.is_empty() {
            return Err(MetricsError::MissingCases { mode: mode.to_string(), missing });
        }
        let values: Vec<RunMetrics> = rows.iter().take(table.len()).map(|r| r.expect("checked")).collect();
        let weighted: Vec<(f64, RunMetrics)> = table.iter().map(|c| c.probability).zip(values.iter().copied()).collect();
        report.aggregate.insert(mode, weighted_combine(&weighted, w)?);
        report.per_case.insert(mode, values);
    }
    Ok(report)
}

impl PerformanceReport {
    /// `aggregate(BL+FF) / aggregate(BL)` when both modes are present.
    pub fn ratio(&self, m: Metric) -> Option<f64> {
        let ff = self.aggregate.get(&Mode::Feedforward)?;
        let bl = self.aggregate.get(&Mode::Baseline)?;
        Some(ff.get(m) / bl.get(m))
    }

    /// Aggregate table: one row per metric, one column per mode, ratio last.
    pub fn aggregate_csv(&self) -> String {
        let modes: Vec<&Mode> = self.aggregate.keys().collect();
        let mut s = String::from("metric");
        for m in &modes {
            let _ = write!(s, ",{}", m.label());
        }
        s.push_str(",BL+FF/BL\n");
        for metric in Metric::ALL {
            s.push_str(metric.key());
            for m in &modes {
                let _ = write!(s, ",{:e}", self.aggregate[m].get(metric));
            }
            match self.ratio(metric) {
                Some(r) => {
                    let _ = writeln!(s, ",{r:e}");
                }
                None => s.push_str(",\n"),
            }
        }
        s
    }

    /// Per-case values, one row per (mode, case).
    pub fn per_case_csv(&self) -> String {
        let mut s = String::from("mode,wind_speed,hs,ts,probability");
        for metric in Metric::ALL {
            let _ = write!(s, ",{}", metric.key());
        }
        s.push('\n');
        for (mode, rows) in &self.per_case {
            for (case, r) in self.cases.iter().zip(rows) {
                let _ = write!(s, "{},{},{},{},{}", mode.label(), case.wind_speed, case.hs, case.ts, case.probability);
                for metric in Metric::ALL {
                    let _ = write!(s, ",{:e}", r.get(metric));
                }
                s.push('\n');
            }
        }
        s
    }

    /// Aligned plain-text version of the aggregate table.
    pub fn text_table(&self) -> String {
        let modes: Vec<&Mode> = self.aggregate.keys().collect();
        let width = Metric::ALL.iter().map(|m| m.label().len()).max().unwrap_or(10);
        let mut s = format!("{:<width$}", "");
        for m in &modes {
            let _ = write!(s, " {:>12}", m.label());
        }
        let _ = writeln!(s, " {:>9}", "BL+FF/BL");
        for metric in Metric::ALL {
            let _ = write!(s, "{:<width$}", metric.label());
            for m in &modes {
                let _ = write!(s, " {:>12.4}", self.aggregate[m].get(metric) * metric.display_scale());
            }
            match self.ratio(metric) {
                Some(r) => {
                    let _ = writeln!(s, " {:>8.1}%", 100.0 * r);
                }
                None => s.push('\n'),
            }
        }
        s
    }
}
