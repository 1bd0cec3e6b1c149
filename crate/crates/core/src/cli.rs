//! Command-line front end: `run`, `sweep` and `certify`.
//!
//! Exit codes: 0 success, 1 usage, 2 data or configuration error, 3
//! invariant violation or solver failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest;
use crate::model::{Metrics, Scenario, ScenarioConfig, Weather};
use crate::sim::{self, SimOptions, SimOutput};
use crate::snapshot::EpochSnapshot;

pub const WILLINGNESS_LEVELS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];

#[derive(Debug, Parser)]
#[command(name = "greenride", version, about = "Simulate an EV ride-hailing fleet bargaining over charging incentives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario, optionally over several seeds.
    Run(RunArgs),
    /// Run the weather by willingness grid and write a summary table.
    Sweep(SweepArgs),
    /// Evaluate the merit function on a dumped epoch.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML scenario file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// First seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds, starting at `--seed`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, value_enum)]
    pub weather: Option<WeatherArg>,
    #[arg(long)]
    pub willingness: Option<f64>,
    /// Write the first non-empty bargaining epoch at or after this minute to
    /// `epoch_<minute>.json`.
    #[arg(long)]
    pub dump_epoch: Option<u32>,
    /// Write every bargaining iterate to `bargain_trace.csv`.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    /// Every weather, every willingness level, plus case 1 per weather.
    Full,
    /// Willingness levels under the configured weather.
    Willingness,
    /// Every weather at the configured willingness.
    Weather,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "full")]
    pub axis: SweepAxis,
    /// Explicit weather list, overriding the axis.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub weathers: Vec<WeatherArg>,
    /// Explicit willingness list, overriding the axis.
    #[arg(long, value_delimiter = ',')]
    pub willingness: Vec<f64>,
    /// Leave out the case 1 reference rows.
    #[arg(long)]
    pub no_case1: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    pub snapshot: PathBuf,
    /// Tolerance; defaults to the one stored in the snapshot.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Fossil,
    #[value(alias = "bau")]
    BusinessAsUsual,
    Case1,
    Case2,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Fossil => Scenario::Fossil,
            ScenarioArg::BusinessAsUsual => Scenario::BusinessAsUsual,
            ScenarioArg::Case1 => Scenario::Case1,
            ScenarioArg::Case2 => Scenario::Case2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeatherArg {
    Sunny,
    CloudyMorning,
    CloudyAfternoon,
}

impl From<WeatherArg> for Weather {
    fn from(w: WeatherArg) -> Self {
        match w {
            WeatherArg::Sunny => Weather::Sunny,
            WeatherArg::CloudyMorning => Weather::CloudyMorning,
            WeatherArg::CloudyAfternoon => Weather::CloudyAfternoon,
        }
    }
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub weather: Weather,
    pub willingness: f64,
    pub seeds: Vec<u64>,
    /// QoS in percent.
    pub qos: Stat,
    /// Power loss in percent; absent when no run had any PV available.
    pub pl: Option<Stat>,
    pub missed_rides: Stat,
    pub charging_minutes: Stat,
}

impl Summary {
    pub fn of(cfg: &ScenarioConfig, runs: &[Metrics]) -> Summary {
        let col = |f: &dyn Fn(&Metrics) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        let pl: Vec<f64> = runs.iter().filter(|m| m.pl_defined).map(|m| 100.0 * m.pl).collect();
        Summary {
            scenario: cfg.scenario,
            weather: cfg.weather,
            willingness: cfg.willingness,
            seeds: runs.iter().map(|m| m.seed).collect(),
            qos: Stat::of(&col(&|m| 100.0 * m.qos)).unwrap_or(Stat { mean: 0.0, sd: 0.0 }),
            pl: Stat::of(&pl),
            missed_rides: Stat::of(&col(&|m| m.missed_rides as f64)).unwrap_or(Stat { mean: 0.0, sd: 0.0 }),
            charging_minutes: Stat::of(&col(&|m| m.charging_minutes)).unwrap_or(Stat { mean: 0.0, sd: 0.0 }),
        }
    }

    pub fn row(&self) -> String {
        let pl = match self.pl {
            Some(s) => format!("{:.1} ± {:.1}", s.mean, s.sd),
            None => "n/a".into(),
        };
        format!(
            "{:<18} {:<17} w={:<4} seeds={:<3} QoS {:.1} ± {:.1} %  PL {pl} %",
            self.scenario.as_str(),
            self.weather.as_str(),
            self.willingness,
            self.seeds.len(),
            self.qos.mean,
            self.qos.sd,
        )
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub summary: Summary,
    pub runs: Vec<Metrics>,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(&a).map(|s| println!("{}", s.row())),
        Command::Sweep(a) => cmd_sweep(&a).map(|rows| {
            for r in rows {
                println!("{}", r.row());
            }
        }),
        Command::Certify(a) => cmd_certify(&a).map(|c| {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let note = if c.coupling_active { " (a facility sum bound is active)" } else { "" };
            println!("merit {:.3e} epsilon {:.1e} {verdict}{note}", c.merit, c.epsilon);
        }),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn base_config(common: &CommonArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ingest::load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn seed_list(cfg: &ScenarioConfig, count: u64) -> Vec<u64> {
    (0..count).map(|k| cfg.seed + k).collect()
}

pub fn cmd_run(args: &RunArgs) -> Result<Summary> {
    let mut cfg = base_config(&args.common)?;
    if let Some(s) = args.scenario {
        cfg.scenario = s.into();
    }
    if let Some(w) = args.weather {
        cfg.weather = w.into();
    }
    if let Some(w) = args.willingness {
        cfg.willingness = w;
    }
    cfg.validate()?;
    let options = SimOptions { trace: args.trace, dump_epoch: args.dump_epoch };
    let seeds = seed_list(&cfg, args.common.seeds);
    let outputs = sim::run_seeds(&cfg, &seeds, &options)?;

    let out = &args.common.out_dir;
    fs::create_dir_all(out)?;
    let runs: Vec<Metrics> = outputs.iter().map(|o| o.metrics.clone()).collect();
    let summary = Summary::of(&cfg, &runs);
    let report = MetricsReport { summary: summary.clone(), runs };
    write_atomic(&out.join("metrics.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    write_atomic(&out.join("timeseries.csv"), &timeseries_csv(&seeds, &outputs)?)?;
    if args.trace {
        write_atomic(&out.join("bargain_trace.csv"), &trace_csv(&seeds, &outputs)?)?;
    }
    if let Some(minute) = args.dump_epoch {
        match outputs.first().and_then(|o| o.snapshot.as_ref()) {
            Some(snap) => write_atomic(&out.join(format!("epoch_{}.json", snap.minute)), snap.to_json().as_bytes())?,
            None => log::warn!("no bargaining epoch from minute {minute} on; nothing dumped"),
        }
    }
    Ok(summary)
}

/// One case 2 row per weather and willingness level, and one case 1 row per
/// weather unless `no_case1`. Also writes `sweep.csv`.
pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<Summary>> {
    let cfg = base_config(&args.common)?;
    let weathers: Vec<Weather> = if !args.weathers.is_empty() {
        args.weathers.iter().map(|&w| w.into()).collect()
    } else if args.axis == SweepAxis::Willingness {
        vec![cfg.weather]
    } else {
        Weather::ALL.to_vec()
    };
    let levels: Vec<f64> = if !args.willingness.is_empty() {
        args.willingness.clone()
    } else if args.axis == SweepAxis::Weather {
        vec![cfg.willingness]
    } else {
        WILLINGNESS_LEVELS.to_vec()
    };
    let mut cells = Vec::new();
    for &weather in &weathers {
        for &willingness in &levels {
            cells.push(ScenarioConfig { scenario: Scenario::Case2, weather, willingness, ..cfg.clone() });
        }
    }
    if !args.no_case1 {
        for &weather in &weathers {
            cells.push(ScenarioConfig { scenario: Scenario::Case1, weather, ..cfg.clone() });
        }
    }
    let seeds = seed_list(&cfg, args.common.seeds);
    let mut rows = Vec::with_capacity(cells.len());
    for cell in &cells {
        cell.validate()?;
        let outputs = sim::run_seeds(cell, &seeds, &SimOptions::default())?;
        let runs: Vec<Metrics> = outputs.into_iter().map(|o| o.metrics).collect();
        rows.push(Summary::of(cell, &runs));
    }
    fs::create_dir_all(&args.common.out_dir)?;
    write_atomic(&args.common.out_dir.join("sweep.csv"), &sweep_csv(&rows)?)?;
    Ok(rows)
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<crate::equilibrium::Certificate> {
    let mut snap = EpochSnapshot::load(&args.snapshot)?;
    if let Some(eps) = args.epsilon {
        snap.epsilon = eps;
    }
    snap.certify()
}

/// Writes through a temporary file in the same directory and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn csv_bytes(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn timeseries_csv(seeds: &[u64], outputs: &[SimOutput]) -> Result<Vec<u8>> {
    let n_facilities = outputs.first().and_then(|o| o.series.first()).map_or(0, |r| r.pv_kw.len());
    let facilities: Vec<usize> = (0..n_facilities).collect();
    csv_bytes(|w| {
        let mut header: Vec<String> = ["seed", "minute", "idle", "to_pickup", "riding", "to_charger", "charging"]
            .iter()
            .chain(&["soc_low", "soc_mid", "soc_high"])
            .map(|s| s.to_string())
            .collect();
        header.extend(facilities.iter().map(|f| format!("pv_kw_{f}")));
        header.extend(facilities.iter().map(|f| format!("charging_kw_{f}")));
        header.extend(
            ["ride_incentives", "charge_incentives", "cumulative_missed", "pending_rides", "charge_requests"]
                .map(String::from),
        );
        w.write_record(&header)?;
        for (seed, out) in seeds.iter().zip(outputs) {
            for r in &out.series {
                let mut rec: Vec<String> = vec![seed.to_string(), r.minute.to_string()];
                rec.extend(
                    [r.idle, r.to_pickup, r.riding, r.to_charger, r.charging, r.soc_low, r.soc_mid, r.soc_high]
                        .map(|v| v.to_string()),
                );
                rec.extend(r.pv_kw.iter().chain(&r.charging_kw).map(|v| format!("{v:.4}")));
                rec.push(format!("{:.6}", r.ride_incentives));
                rec.push(format!("{:.6}", r.charge_incentives));
                rec.extend([r.cumulative_missed, r.pending_rides, r.charge_requests].map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        Ok(())
    })
}

pub fn trace_csv(seeds: &[u64], outputs: &[SimOutput]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["seed", "minute", "k", "rsp_objective", "puc_objective", "ev_objective", "converged"])?;
        for (&seed, out) in seeds.iter().zip(outputs) {
            for row in &out.trace {
                w.write_record([
                    seed.to_string(),
                    row.minute.to_string(),
                    row.k.to_string(),
                    row.rsp_objective.to_string(),
                    row.puc_objective.to_string(),
                    row.ev_objective.to_string(),
                    row.converged.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn sweep_csv(rows: &[Summary]) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        w.write_record(["scenario", "weather", "willingness", "seeds", "qos_mean", "qos_sd", "pl_mean", "pl_sd"])?;
        for r in rows {
            let (pl_mean, pl_sd) = match r.pl {
                Some(s) => (format!("{:.3}", s.mean), format!("{:.3}", s.sd)),
                None => (String::new(), String::new()),
            };
            let willingness = if r.scenario.pooling() { r.willingness.to_string() } else { String::new() };
            w.write_record([
                r.scenario.as_str().to_string(),
                r.weather.as_str().to_string(),
                willingness,
                r.seeds.len().to_string(),
                format!("{:.3}", r.qos.mean),
                format!("{:.3}", r.qos.sd),
                pl_mean,
                pl_sd,
            ])?;
        }
        Ok(())
    })
}
