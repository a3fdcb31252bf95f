//! Command-line front end.
//!
//! Subcommands cover the full workflow: `gen-pool` simulates and stores
//! a steady-state pool, `calibrate` finds control limits, `arl0`
//! re-checks a limit with fresh replications, `arl1` tabulates
//! detection delays over a scenario grid, and `monitor` replays a CSV
//! panel and alarms when the global statistic crosses the limit.
//!
//! Exit codes: 0 on success (including a clean alarm), 1 on runtime
//! failures, 2 on usage or configuration errors.

use crate::calibrate::{
    arl1_table, arl_at, calibrate, simulate_ic_traces, CalibrationSettings, MonitorScheme,
};
use crate::config::{parse_config, ConfigIssue, MonitorConfig};
use crate::error::{Error, Result};
use crate::local::{AdaptiveCusumState, CusumState, LocalFamily, LocalState};
use crate::nonparametric::NpState;
use crate::pool::{PoolConfig, SteadyStatePool};
use crate::report::{render, ReportRow};
use crate::rng::salted_seed;
use crate::stream::{OcKind, ScenarioConfig};
use clap::{Args, Parser, Subcommand};
use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "qqchart",
    version,
    about = "Streaming change detection over panels of data streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Publication-scale sizes: pool 100000, 2500 replications, target 1000.
    #[arg(long)]
    full_scale: bool,
    /// Worker thread count; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Output path override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a steady-state pool and write it to disk.
    GenPool(Common),
    /// Calibrate control limits for every configured scheme.
    Calibrate(Common),
    /// Re-estimate the in-control average run length at the configured
    /// limit, on fresh randomness.
    Arl0(Common),
    /// Calibrate, then tabulate post-change run lengths over the
    /// configured scenario grid.
    Arl1(Common),
    /// Replay a CSV panel and alarm when the global statistic crosses
    /// the limit.
    Monitor {
        #[command(flatten)]
        common: Common,
        /// CSV input path; stdin when omitted.
        input: Option<PathBuf>,
    },
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::GenPool(c)
            | Cmd::Calibrate(c)
            | Cmd::Arl0(c)
            | Cmd::Arl1(c)
            | Cmd::Monitor { common: c, .. } => c,
        }
    }
}

/// Runs the CLI on explicit arguments (the first is the binary name)
/// and returns the process exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let common = cli.command.common();

    let text = match std::fs::read_to_string(&common.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", common.config.display());
            return 2;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(config) => config,
        Err(issues) => {
            eprintln!("config {} has {} problem(s):", common.config.display(), issues.len());
            for issue in issues {
                eprintln!("  {issue}");
            }
            return 2;
        }
    };
    if common.full_scale {
        config.apply_full_scale();
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }

    let issues = command_issues(&config, &cli.command);
    if !issues.is_empty() {
        eprintln!("config {} is incomplete for this command:", common.config.display());
        for issue in issues {
            eprintln!("  {issue}");
        }
        return 2;
    }

    let body = || match dispatch(&cli.command, &config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("cannot build a {n}-thread worker pool: {e}");
                1
            }
        },
        None => body(),
    }
}

/// Requirements individual commands add on top of config validity.
fn command_issues(config: &MonitorConfig, cmd: &Cmd) -> Vec<ConfigIssue> {
    let mut issues = Vec::new();
    let issue = |section: &str, key: &str, message: &str| ConfigIssue {
        line: None,
        section: section.into(),
        key: Some(key.into()),
        message: message.into(),
    };
    match cmd {
        Cmd::GenPool(_) => {
            if config.out.is_none() && config.pool_path.is_none() {
                issues.push(issue("pool", "path", "required for gen-pool (or pass --out)"));
            }
        }
        Cmd::Arl0(_) | Cmd::Monitor { .. } => {
            if config.globals.len() != 1 {
                issues.push(issue(
                    "global",
                    "kinds",
                    "this command needs exactly one global statistic",
                ));
            }
            if config.h.is_none() {
                issues.push(issue("monitor", "h", "required for this command"));
            }
        }
        Cmd::Calibrate(_) | Cmd::Arl1(_) => {}
    }
    issues
}

fn dispatch(cmd: &Cmd, config: &MonitorConfig) -> Result<i32> {
    match cmd {
        Cmd::GenPool(_) => cmd_gen_pool(config),
        Cmd::Calibrate(_) => cmd_calibrate(config),
        Cmd::Arl0(_) => cmd_arl0(config),
        Cmd::Arl1(_) => cmd_arl1(config),
        Cmd::Monitor { input, .. } => cmd_monitor(config, input.as_deref()),
    }
}

fn pool_config(config: &MonitorConfig) -> PoolConfig {
    PoolConfig {
        family: config.family.clone(),
        size: config.pool_size,
        burn_in: config.burn_in,
        seed: config.seed,
    }
}

/// Loads the configured pool file when it exists, otherwise generates
/// the pool (and stores it when a path is configured).
fn obtain_pool(config: &MonitorConfig) -> Result<Arc<SteadyStatePool>> {
    if let Some(path) = &config.pool_path {
        if path.exists() {
            return Ok(Arc::new(SteadyStatePool::load_for_family(path, &config.family)?));
        }
        let pool = SteadyStatePool::generate(pool_config(config))?;
        pool.save(path)?;
        eprintln!("pool written to {}", path.display());
        return Ok(Arc::new(pool));
    }
    Ok(Arc::new(SteadyStatePool::generate(pool_config(config))?))
}

fn build_schemes(
    config: &MonitorConfig,
    pool: &Arc<SteadyStatePool>,
) -> Result<Vec<MonitorScheme>> {
    config
        .globals
        .iter()
        .map(|&g| MonitorScheme::new(g.label(), pool.clone(), g, config.m))
        .collect()
}

fn calibration_settings(config: &MonitorConfig) -> CalibrationSettings {
    CalibrationSettings {
        target_arl0: config.target_arl0,
        traces: config.calibration_traces,
        t_max: config.effective_t_max(),
        rel_tol: config.rel_tol,
        seed: config.seed,
    }
}

fn scenario_label(oc: OcKind) -> &'static str {
    match oc {
        OcKind::MeanShift { .. } => "mean_shift",
        OcKind::RandomSignShift { .. } => "random_sign_shift",
        OcKind::MixedLocationScale { .. } => "mixed_location_scale",
    }
}

fn cmd_gen_pool(config: &MonitorConfig) -> Result<i32> {
    let path = config
        .out
        .clone()
        .or_else(|| config.pool_path.clone())
        .expect("validated by command_issues");
    let pool = SteadyStatePool::generate(pool_config(config))?;
    pool.save(&path)?;
    println!(
        "pool kind={} size={} burn_in={} seed={} written to {}",
        pool.family().kind_name(),
        pool.size(),
        config.burn_in,
        config.seed,
        path.display()
    );
    Ok(0)
}

fn cmd_calibrate(config: &MonitorConfig) -> Result<i32> {
    let pool = obtain_pool(config)?;
    let settings = calibration_settings(config);
    let mut csv = String::from("scheme_id,global_kind,h,achieved_arl0,censored_fraction\n");
    for scheme in build_schemes(config, &pool)?.iter_mut() {
        let out = calibrate(scheme, &settings)?;
        println!(
            "scheme={} h={:.6} arl0={:.2} censored={:.4}",
            scheme.id(),
            out.h,
            out.achieved_arl0,
            out.censored_fraction
        );
        csv.push_str(&format!(
            "{},{},{:.6},{:.4},{:.4}\n",
            scheme.id(),
            scheme.global().label(),
            out.h,
            out.achieved_arl0,
            out.censored_fraction
        ));
    }
    if let Some(path) = &config.out {
        std::fs::write(path, csv).map_err(|e| Error::Runtime(format!(
            "cannot write {}: {e}",
            path.display()
        )))?;
    }
    Ok(0)
}

fn cmd_arl0(config: &MonitorConfig) -> Result<i32> {
    let pool = obtain_pool(config)?;
    let kind = config.globals[0];
    let scheme = MonitorScheme::new(kind.label(), pool, kind, config.m)?;
    let h = config.h.expect("validated by command_issues");
    // A salted seed keeps these traces disjoint from the ones that
    // calibrated the limit under the same master seed.
    let seed = salted_seed(config.seed, u64::from_le_bytes(*b"arl0 chk"));
    let traces =
        simulate_ic_traces(&scheme, config.calibration_traces, config.effective_t_max(), seed)?;
    let est = arl_at(h, &traces)?;
    println!(
        "arl0={:.2} censored={:.4} at h={:.6} over {} traces",
        est.arl,
        est.censored_fraction,
        h,
        traces.len()
    );
    Ok(0)
}

fn cmd_arl1(config: &MonitorConfig) -> Result<i32> {
    let pool = obtain_pool(config)?;
    let settings = calibration_settings(config);
    let mut schemes = build_schemes(config, &pool)?;
    for scheme in &mut schemes {
        let out = calibrate(scheme, &settings)?;
        eprintln!(
            "scheme={} h={:.6} arl0={:.2} censored={:.4}",
            scheme.id(),
            out.h,
            out.achieved_arl0,
            out.censored_fraction
        );
    }
    let scenarios: Vec<(String, ScenarioConfig)> = config
        .m1_list
        .iter()
        .map(|&m1| {
            (
                scenario_label(config.scenario).to_string(),
                ScenarioConfig {
                    m: config.m,
                    m1,
                    change_point: config.change_point,
                    oc: config.scenario,
                    ic_mixture: config.ic_mixture,
                    seed: config.seed,
                },
            )
        })
        .collect();
    let cells = arl1_table(
        &schemes,
        &scenarios,
        config.target_arl0,
        config.replications,
        config.effective_t_max(),
        config.seed,
    )?;
    let mut rows = Vec::new();
    for cell in &cells {
        match &cell.outcome {
            Ok(_) => rows.extend(ReportRow::from_cell(cell)),
            Err(e) => eprintln!(
                "cell scheme={} scenario={} m1={} failed: {e}",
                cell.scheme_id, cell.scenario_id, cell.m1
            ),
        }
    }
    let text = render(&rows, config.format);
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            Error::Runtime(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_monitor(config: &MonitorConfig, input: Option<&std::path::Path>) -> Result<i32> {
    let pool = obtain_pool(config)?;
    let kind = config.globals[0];
    let mut scheme = MonitorScheme::new(kind.label(), pool, kind, config.m)?;
    let h = config.h.expect("validated by command_issues");
    scheme.set_control_limit(h);

    let reader: Box<dyn BufRead> = match input {
        Some(path) => Box::new(BufReader::new(std::fs::File::open(path).map_err(|e| {
            Error::Runtime(format!("cannot read {}: {e}", path.display()))
        })?)),
        None => Box::new(BufReader::new(std::io::stdin())),
    };

    let family = scheme.family().clone();
    let m = scheme.m();
    let ref_len = family.reference_len();
    // The self-starting family reads its reference sample off the first
    // rows of the input; the parametric families start cold.
    let mut reference: Vec<Vec<f64>> = vec![Vec::with_capacity(ref_len); m];
    let mut ref_rows_seen = 0usize;
    let mut states: Option<Vec<LocalState>> = if ref_len == 0 {
        Some(cold_states(&family, m))
    } else {
        None
    };

    let mut t = 0u32;
    let mut w = vec![0.0; m];
    let mut data_rows = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MonitorInput {
            line: line_no,
            message: format!("read failed: {e}"),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = trimmed
            .split(|c| c == ',' || c == '\t')
            .map(|f| f.trim().parse::<f64>())
            .collect();
        let values = match parsed {
            Ok(values) => values,
            // A single leading unparsable row is a header.
            Err(_) if data_rows == 0 => continue,
            Err(e) => {
                return Err(Error::MonitorInput {
                    line: line_no,
                    message: format!("bad value: {e}"),
                })
            }
        };
        if values.len() != m {
            return Err(Error::MonitorInput {
                line: line_no,
                message: format!("expected {m} columns, got {}", values.len()),
            });
        }
        data_rows += 1;

        if states.is_none() {
            for (i, &v) in values.iter().enumerate() {
                reference[i].push(v);
            }
            ref_rows_seen += 1;
            if ref_rows_seen == ref_len {
                let np_params = match &family {
                    LocalFamily::Nonparametric(p) => p,
                    _ => unreachable!("only the self-starting family needs a reference"),
                };
                let built: Result<Vec<LocalState>> = reference
                    .iter()
                    .map(|r| {
                        Ok(LocalState::Nonparametric(NpState::from_reference(r, np_params)?))
                    })
                    .collect();
                states = Some(built?);
            }
            continue;
        }

        let states = states.as_mut().expect("initialized above");
        t += 1;
        for (i, &x) in values.iter().enumerate() {
            family.step(&mut states[i], x);
            w[i] = family.value(&states[i]);
        }
        let g = scheme.global_value(&w)?;
        eprintln!("t={t} G={g:.6}");
        if g > h {
            println!("ALARM t={t}");
            return Ok(0);
        }
    }
    if states.is_none() && ref_len > 0 {
        return Err(Error::MonitorInput {
            line: 0,
            message: format!(
                "input ended during the reference sample: needs {ref_len} rows, got {ref_rows_seen}"
            ),
        });
    }
    eprintln!("no alarm in {t} ticks");
    Ok(0)
}

fn cold_states(family: &LocalFamily, m: usize) -> Vec<LocalState> {
    (0..m)
        .map(|_| match family {
            LocalFamily::Cusum(_) => LocalState::Cusum(CusumState::default()),
            LocalFamily::Adaptive(_) => LocalState::Adaptive(AdaptiveCusumState::default()),
            LocalFamily::Nonparametric(_) => {
                unreachable!("reference rows build the self-starting states")
            }
        })
        .collect()
}
