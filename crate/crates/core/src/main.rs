use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wavefeed::campaign::{read_report, run_campaign, write_outputs};
use wavefeed::config::{CampaignConfig, ConfigError, OUT_ENV, WAVE_BAND};
use wavefeed::control::{design_feedforward, resolve_channel, ChannelMode, ControlError, Shaping, DEFAULT_REDUCED_ORDER};
use wavefeed::forces::{fit_metrics, select_causalization_delay, FitReport, ForceError, PwemModel};
use wavefeed::lti::{log_grid, read_model, write_model};
use wavefeed::metrics::{summarize, LoadCase, Metric};
use wavefeed::plant::linearize;
use wavefeed::sim::{run, write_record, Mode};

/// Exit codes.
const OK: u8 = 0;
const PARTIAL: u8 = 1;
const GATE: u8 = 2;
const PARSE: u8 = 3;
const IDENTIFY: u8 = 4;
const SYNTHESIS: u8 = 5;
const USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "wavefeed", version, about = "Wave feedforward control design and simulation for floating wind turbines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify the parametric wave-excitation model from force coefficients.
    Identify(IdentifyArgs),
    /// Synthesize the feedforward controller at one operating point.
    Synthesize(SynthesizeArgs),
    /// Simulate one scenario.
    Simulate(SimulateArgs),
    /// Run all modes, load cases and seeds and write the comparison tables.
    Campaign(CampaignArgs),
    /// Print the aggregate table of a finished campaign.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// Campaign configuration (TOML); shipped defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Force coefficient CSV; the shipped set when omitted.
    #[arg(long)]
    coefficients: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    order: usize,
    /// Causalization delay in seconds, or `auto`.
    #[arg(long, default_value = "auto")]
    t_p: String,
    /// Pre-zero impulse energy fraction allowed by `--t-p auto`.
    #[arg(long, default_value_t = 0.01)]
    energy_tolerance: f64,
    /// Required fit per output (surge force, pitch moment), percent.
    #[arg(long, num_args = 2, value_delimiter = ',', default_values_t = [85.0, 90.0])]
    min_fit: Vec<f64>,
    #[arg(long, env = OUT_ENV, default_value = "wavefeed-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    common: Common,
    /// Mean wind speed of the operating point (m/s).
    #[arg(long, default_value_t = 8.0)]
    wind: f64,
    /// PWEM model file from `identify`; identified from the configuration
    /// when omitted. Its delay is read from `pwem_report.json` beside it.
    #[arg(long)]
    pwem: Option<PathBuf>,
    #[arg(long)]
    k_ff: Option<f64>,
    #[arg(long)]
    channel_mode: Option<ChannelMode>,
    /// Skip order reduction and high-pass shaping.
    #[arg(long)]
    no_shaping: bool,
    #[arg(long)]
    ff_order: Option<usize>,
    /// rad/s
    #[arg(long)]
    hp_corner: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Mean wind speed; must match a configured load case unless `--hs` and `--ts` are given.
    #[arg(long)]
    wind: f64,
    #[arg(long)]
    hs: Option<f64>,
    #[arg(long)]
    ts: Option<f64>,
    #[arg(long, default_value = "BL")]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    k_ff: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct CampaignArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<Mode>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    k_ff: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Do not write per-run records.
    #[arg(long)]
    no_records: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Campaign output directory.
    #[arg(long, env = OUT_ENV, default_value = "wavefeed-out")]
    dir: PathBuf,
    /// Print CSV instead of the aligned table.
    #[arg(long)]
    csv: bool,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    Failure { code, msg: msg.to_string() }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            e if e.is_parse() => PARSE,
            ConfigError::Invalid(_) => USAGE,
            ConfigError::Forces(_) => IDENTIFY,
            ConfigError::Control(_) => SYNTHESIS,
            _ => PARSE,
        };
        fail(code, e)
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| fail(PARSE, format!("{}: {e}", path.display()))
}

fn load_config(common: &Common) -> Result<CampaignConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct IdentifyReport<'a> {
    t_p: f64,
    t_p_selected: bool,
    order: usize,
    outputs: [&'a str; 2],
    fit: &'a FitReport<f64>,
    min_fit: &'a [f64],
    passed: bool,
}

fn identify(a: IdentifyArgs) -> Result<u8, Failure> {
    if a.order == 0 {
        return Err(fail(USAGE, "--order must be at least 1"));
    }
    let cfg = CampaignConfig { coefficients: a.coefficients.clone(), ..Default::default() };
    let coeffs = cfg.load_coefficients()?;
    let (t_p, auto) = match a.t_p.as_str() {
        "auto" => (select_causalization_delay(&coeffs, a.energy_tolerance).map_err(|e| fail(IDENTIFY, e))?, true),
        s => match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => (v, false),
            _ => return Err(fail(USAGE, format!("--t-p must be `auto` or a non-negative number of seconds, got {s:?}"))),
        },
    };
    let pwem = CampaignConfig { pwem_order: a.order, prediction_delay: t_p, ..cfg }.identify(&coeffs).map_err(|e| match e {
        ConfigError::Forces(ForceError::InvalidRequest(m)) => fail(USAGE, m),
        e => fail(IDENTIFY, e),
    })?;
    let passed = pwem.fit.fit_percent.iter().zip(&a.min_fit).all(|(f, m)| f >= m);
    std::fs::create_dir_all(&a.out).map_err(io(&a.out))?;
    let model_path = a.out.join("pwem.json");
    write_model(&model_path, &pwem.model).map_err(|e| fail(PARSE, e))?;
    let report = IdentifyReport {
        t_p,
        t_p_selected: auto,
        order: a.order,
        outputs: ["surge_force", "pitch_moment"],
        fit: &pwem.fit,
        min_fit: &a.min_fit,
        passed,
    };
    let report_path = a.out.join("pwem_report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).expect("report serializes")).map_err(io(&report_path))?;
    println!("t_p = {t_p} s{}", if auto { " (selected)" } else { "" });
    for (name, (fit, fpe)) in report.outputs.iter().zip(pwem.fit.fit_percent.iter().zip(&pwem.fit.fpe)) {
        println!("{name:>13}: fit {fit:6.2} %  FPE {fpe:.4e}");
    }
    println!("wrote {} and {}", model_path.display(), report_path.display());
    if passed {
        Ok(OK)
    } else {
        eprintln!("fit below the required {:?} %", a.min_fit);
        Ok(GATE)
    }
}

fn synthesize(a: SynthesizeArgs) -> Result<u8, Failure> {
    let mut cfg = load_config(&a.common)?;
    if let Some(k) = a.k_ff {
        cfg.k_ff = k;
    }
    if let Some(m) = a.channel_mode {
        cfg.channel_mode = m;
    }
    let params = cfg.load_plant()?;
    let coeffs = cfg.load_coefficients()?;
    let pwem = match &a.pwem {
        Some(p) => {
            let model = read_model(p).map_err(|e| fail(PARSE, format!("{}: {e}", p.display())))?;
            // the delay is recorded in the identify report beside the model
            let t_p = std::fs::read_to_string(p.with_file_name("pwem_report.json"))
                .ok()
                .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
                .and_then(|v| v["t_p"].as_f64())
                .unwrap_or(cfg.prediction_delay);
            let mut pwem = PwemModel {
                model,
                t_p,
                fit: FitReport { fit_percent: Vec::new(), fpe: Vec::new(), parameters: 0, samples: 0, band: WAVE_BAND },
            };
            pwem.fit = fit_metrics(&pwem, &coeffs, WAVE_BAND).map_err(|e| fail(PARSE, e))?;
            pwem
        }
        None => cfg.identify(&coeffs)?,
    };
    let shaping = match a.no_shaping {
        true => None,
        false => Some(Shaping {
            order: a.ff_order.unwrap_or(DEFAULT_REDUCED_ORDER),
            hp_corner: a.hp_corner.unwrap_or(cfg.hp_corner),
        }),
    };
    let op = params.operating_point(a.wind).map_err(|e| fail(USAGE, e))?;
    let plant = linearize::<f64>(&params, &op).map_err(|e| fail(SYNTHESIS, e))?;
    let channel = resolve_channel(cfg.channel_mode, &op, params.rated.wind_speed);
    let ff = design_feedforward(&plant, &pwem, channel, cfg.k_ff, shaping).map_err(|e| match e {
        ControlError::InvalidConfig(m) => fail(USAGE, m),
        e => fail(SYNTHESIS, e),
    })?;
    let out = cfg.resolved_output();
    std::fs::create_dir_all(&out).map_err(io(&out))?;
    let ctrl_path = out.join("controller.json");
    write_model(&ctrl_path, &ff.transfer).map_err(|e| fail(PARSE, e))?;
    let bode = ff.bode(&log_grid(2.0 * std::f64::consts::PI / 1000.0, 10.0, 400)).map_err(|e| fail(SYNTHESIS, e))?;
    let mut csv = String::new();
    match shaping {
        Some(_) => {
            csv.push_str("omega_rad_s,full_db,full_deg,reduced_db,reduced_deg,shaped_db,shaped_deg\n");
            for p in &bode {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    p.omega, p.full_db, p.full_deg, p.reduced_db, p.reduced_deg, p.shaped_db, p.shaped_deg
                );
            }
        }
        None => {
            csv.push_str("omega_rad_s,magnitude_db,phase_deg\n");
            for p in &bode {
                let _ = writeln!(csv, "{},{},{}", p.omega, p.full_db, p.full_deg);
            }
        }
    }
    let bode_path = out.join("bode.csv");
    std::fs::write(&bode_path, csv).map_err(io(&bode_path))?;
    println!(
        "{:?} channel at {} m/s: full order {}, emitted order {}",
        ff.channel,
        a.wind,
        ff.full.order(),
        ff.transfer.order()
    );
    println!("wrote {} and {}", ctrl_path.display(), bode_path.display());
    Ok(OK)
}

fn simulate(a: SimulateArgs) -> Result<u8, Failure> {
    let mut cfg = load_config(&a.common)?;
    if let Some(k) = a.k_ff {
        cfg.k_ff = k;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    let case = match (a.hs, a.ts) {
        (Some(hs), Some(ts)) => LoadCase { wind_speed: a.wind, hs, ts, probability: 1.0 },
        (None, None) => *cfg
            .load_cases
            .iter()
            .find(|c| (c.wind_speed - a.wind).abs() < 1e-9)
            .ok_or_else(|| fail(USAGE, format!("no load case at {} m/s; give --hs and --ts", a.wind)))?,
        _ => return Err(fail(USAGE, "--hs and --ts go together")),
    };
    cfg.validate()?;
    let ctx = cfg.context()?;
    let sc = cfg.scenario(a.mode, &case, a.seed);
    let (rec, meta) = run(&sc, &ctx).map_err(|e| match e {
        wavefeed::sim::SimError::InvalidScenario(m) => fail(USAGE, m),
        wavefeed::sim::SimError::Plant(e) => fail(USAGE, e),
        wavefeed::sim::SimError::Control(e) => fail(SYNTHESIS, e),
        e => fail(PARTIAL, e),
    })?;
    let out = cfg.resolved_output();
    let stem = format!("{}_v{}_s{}", a.mode.slug(), case.wind_speed, a.seed);
    write_record(&out, &stem, &rec, &meta).map_err(|e| fail(PARSE, e))?;
    let m = summarize(&rec, &cfg.woehler).map_err(|e| fail(PARTIAL, e))?;
    for metric in Metric::ALL {
        println!("{:<28} {:>12.4}", metric.label(), m.get(metric) * metric.display_scale());
    }
    println!("wrote {}", out.join(format!("{stem}.csv")).display());
    Ok(OK)
}

fn campaign(a: CampaignArgs) -> Result<u8, Failure> {
    let mut cfg = load_config(&a.common)?;
    if let Some(m) = a.modes {
        cfg.modes = m;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(k) = a.k_ff {
        cfg.k_ff = k;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    if let Some(t) = a.threads {
        cfg.threads = t;
    }
    if a.no_records {
        cfg.write_records = false;
    }
    let ctx = cfg.context()?;
    let out = cfg.resolved_output();
    let runs = out.join("runs");
    let started = std::time::Instant::now();
    let outcome = run_campaign(&cfg, &ctx, cfg.write_records.then_some(runs.as_path())).map_err(|e| fail(PARTIAL, e))?;
    write_outputs(&cfg, &outcome, &out).map_err(|e| fail(PARSE, e))?;
    if let Some(r) = &outcome.report {
        print!("{}", r.text_table());
    }
    println!("{} runs in {:.1} s, results in {}", outcome.cells.len(), started.elapsed().as_secs_f64(), out.display());
    let failed = outcome.failures();
    if failed > 0 {
        eprintln!("{failed} run(s) failed; see cells.csv. Left out of the aggregate: {:?}", outcome.incomplete_modes());
        return Ok(PARTIAL);
    }
    Ok(OK)
}

fn report(a: ReportArgs) -> Result<u8, Failure> {
    let r = read_report(&a.dir).map_err(|e| fail(PARSE, format!("{}: {e}", a.dir.join("report.json").display())))?;
    match a.csv {
        true => print!("{}", r.aggregate_csv()),
        false => print!("{}", r.text_table()),
    }
    Ok(OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let result = match cli.command {
        Command::Identify(a) => identify(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Simulate(a) => simulate(a),
        Command::Campaign(a) => campaign(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
