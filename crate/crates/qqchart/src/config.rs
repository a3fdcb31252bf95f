//! Run configuration: a flat INI-style text format.
//!
//! Sections group related keys; `#` starts a comment; keys are
//! `name = value`. Parsing collects every problem instead of stopping
//! at the first, so one pass over the diagnostics fixes a file.
//! [`MonitorConfig::to_text`] emits a canonical form that parses back
//! to the same configuration.
//!
//! ```text
//! [statistic]
//! kind = cusum            # cusum | adaptive | nonparametric
//! mu = 0.5
//!
//! [global]
//! kinds = quantile, soft:0.5
//!
//! [experiment]
//! m = 100
//! m1 = 0, 1, 100
//! ```

use crate::global::GlobalKind;
use crate::local::{AdaptiveParams, CusumParams, LocalFamily};
use crate::nonparametric::NpParams;
use crate::report::ReportFormat;
use crate::stream::{IcMixture, OcKind};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

/// One problem found while parsing or validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// 1-based line, when the problem maps to one.
    pub line: Option<usize>,
    pub section: String,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: ")?,
            None => {}
        }
        write!(f, "[{}]", self.section)?;
        if let Some(key) = &self.key {
            write!(f, " {key}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub family: LocalFamily,
    /// One scheme per global statistic.
    pub globals: Vec<GlobalKind>,
    pub pool_path: Option<PathBuf>,
    pub pool_size: usize,
    pub burn_in: usize,
    pub m: usize,
    pub m1_list: Vec<usize>,
    pub scenario: OcKind,
    pub change_point: u64,
    pub ic_mixture: IcMixture,
    pub target_arl0: f64,
    pub replications: usize,
    pub calibration_traces: usize,
    /// Simulation horizon; defaults to 20x the target when absent.
    pub t_max: Option<u32>,
    pub rel_tol: f64,
    pub seed: u64,
    /// Control limit for the monitor and arl0 commands.
    pub h: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
}

impl MonitorConfig {
    pub fn effective_t_max(&self) -> u32 {
        self.t_max.unwrap_or((20.0 * self.target_arl0).ceil() as u32)
    }

    /// Swaps the desk-scale defaults for publication-scale sizes.
    pub fn apply_full_scale(&mut self) {
        self.target_arl0 = 1000.0;
        self.replications = 2500;
        self.pool_size = 100_000;
        self.calibration_traces = 2000;
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[statistic]\n");
        match &self.family {
            LocalFamily::Cusum(p) => {
                out.push_str("kind = cusum\n");
                out.push_str(&format!("mu = {}\n", p.mu()));
            }
            LocalFamily::Adaptive(p) => {
                out.push_str("kind = adaptive\n");
                out.push_str(&format!("rho = {}\n", p.rho()));
                out.push_str(&format!("s0 = {}\n", p.s0()));
                out.push_str(&format!("t0 = {}\n", p.t0()));
            }
            LocalFamily::Nonparametric(p) => {
                out.push_str("kind = nonparametric\n");
                out.push_str(&format!("d = {}\n", p.d()));
                out.push_str(&format!("n = {}\n", p.n()));
            }
        }
        out.push_str("\n[global]\n");
        let kinds: Vec<String> = self.globals.iter().map(GlobalKind::label).collect();
        out.push_str(&format!("kinds = {}\n", kinds.join(", ")));

        out.push_str("\n[pool]\n");
        if let Some(path) = &self.pool_path {
            out.push_str(&format!("path = {}\n", path.display()));
        }
        out.push_str(&format!("size = {}\n", self.pool_size));
        out.push_str(&format!("burn_in = {}\n", self.burn_in));

        out.push_str("\n[experiment]\n");
        out.push_str(&format!("m = {}\n", self.m));
        let m1: Vec<String> = self.m1_list.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("m1 = {}\n", m1.join(", ")));
        match self.scenario {
            OcKind::MeanShift { delta } => {
                out.push_str("scenario = mean_shift\n");
                out.push_str(&format!("delta = {delta}\n"));
            }
            OcKind::RandomSignShift { delta } => {
                out.push_str("scenario = random_sign_shift\n");
                out.push_str(&format!("delta = {delta}\n"));
            }
            OcKind::MixedLocationScale { delta, gamma } => {
                out.push_str("scenario = mixed_location_scale\n");
                out.push_str(&format!("delta = {delta}\n"));
                out.push_str(&format!("gamma = {gamma}\n"));
            }
        }
        out.push_str(&format!("change_point = {}\n", self.change_point));
        out.push_str(&format!(
            "ic_mixture = {}\n",
            match self.ic_mixture {
                IcMixture::AllNormal => "normal",
                IcMixture::Mixed => "mixed",
            }
        ));
        out.push_str(&format!("target_arl0 = {}\n", self.target_arl0));
        out.push_str(&format!("replications = {}\n", self.replications));
        out.push_str(&format!("calibration_traces = {}\n", self.calibration_traces));
        if let Some(t_max) = self.t_max {
            out.push_str(&format!("t_max = {t_max}\n"));
        }
        out.push_str(&format!("rel_tol = {}\n", self.rel_tol));
        out.push_str(&format!("seed = {}\n", self.seed));

        out.push_str("\n[monitor]\n");
        if let Some(h) = self.h {
            out.push_str(&format!("h = {h}\n"));
        }

        out.push_str("\n[io]\n");
        if let Some(path) = &self.out {
            out.push_str(&format!("out = {}\n", path.display()));
        }
        out.push_str(&format!(
            "format = {}\n",
            match self.format {
                ReportFormat::Csv => "csv",
                ReportFormat::Markdown => "markdown",
            }
        ));
        out
    }
}

/// Raw key with its line number, before typing.
struct RawValue {
    line: usize,
    text: String,
}

struct Section {
    values: BTreeMap<String, RawValue>,
}

/// Collects issues and typed lookups over the raw section map.
struct Checker {
    sections: BTreeMap<String, Section>,
    issues: Vec<ConfigIssue>,
}

impl Checker {
    fn issue(&mut self, line: Option<usize>, section: &str, key: Option<&str>, message: String) {
        self.issues.push(ConfigIssue {
            line,
            section: section.to_string(),
            key: key.map(str::to_string),
            message,
        });
    }

    fn raw(&self, section: &str, key: &str) -> Option<&RawValue> {
        self.sections.get(section).and_then(|s| s.values.get(key))
    }

    fn parse_with<T>(
        &mut self,
        section: &str,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Option<T> {
        let raw = self.raw(section, key)?;
        let (line, text) = (raw.line, raw.text.clone());
        match parse(&text) {
            Some(v) => Some(v),
            None => {
                self.issue(
                    Some(line),
                    section,
                    Some(key),
                    format!("expected {what}, got {text:?}"),
                );
                None
            }
        }
    }

    fn f64(&mut self, section: &str, key: &str) -> Option<f64> {
        self.parse_with(section, key, "a number", |t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
    }

    fn usize(&mut self, section: &str, key: &str) -> Option<usize> {
        self.parse_with(section, key, "a nonnegative integer", |t| t.parse().ok())
    }

    fn u64(&mut self, section: &str, key: &str) -> Option<u64> {
        self.parse_with(section, key, "a nonnegative integer", |t| t.parse().ok())
    }

    fn u32(&mut self, section: &str, key: &str) -> Option<u32> {
        self.parse_with(section, key, "a nonnegative integer", |t| t.parse().ok())
    }

    fn string(&self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|r| r.text.clone())
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.raw(section, key).map(|r| r.line)
    }
}

/// Keys each section accepts; anything else is flagged.
const SCHEMA: &[(&str, &[&str])] = &[
    ("statistic", &["kind", "mu", "rho", "s0", "t0", "d", "n"]),
    ("global", &["kinds"]),
    ("pool", &["path", "size", "burn_in"]),
    (
        "experiment",
        &[
            "m",
            "m1",
            "scenario",
            "delta",
            "gamma",
            "change_point",
            "ic_mixture",
            "target_arl0",
            "replications",
            "calibration_traces",
            "t_max",
            "rel_tol",
            "seed",
        ],
    ),
    ("monitor", &["h"]),
    ("io", &["out", "format"]),
];

/// Parses and validates a configuration, reporting every issue found.
pub fn parse_config(text: &str) -> Result<MonitorConfig, Vec<ConfigIssue>> {
    let mut checker = Checker { sections: BTreeMap::new(), issues: Vec::new() };
    let mut current: Option<String> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                checker.issue(Some(line_no), &name, None, "unknown section".into());
            }
            checker
                .sections
                .entry(name.clone())
                .or_insert_with(|| Section { values: BTreeMap::new() });
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            let section = current.clone().unwrap_or_default();
            checker.issue(
                Some(line_no),
                &section,
                None,
                format!("expected `key = value`, got {line:?}"),
            );
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let Some(section_name) = current.clone() else {
            checker.issue(Some(line_no), "", Some(&key), "key before any [section]".into());
            continue;
        };
        let known_section = SCHEMA.iter().find(|(s, _)| *s == section_name);
        if let Some((_, keys)) = known_section {
            if !keys.contains(&key.as_str()) {
                checker.issue(Some(line_no), &section_name, Some(&key), "unknown key".into());
                continue;
            }
        }
        let section = checker
            .sections
            .get_mut(&section_name)
            .expect("section inserted when its header was read");
        if section.values.contains_key(&key) {
            checker.issue(
                Some(line_no),
                &section_name,
                Some(&key),
                "duplicate key; first occurrence wins".into(),
            );
            continue;
        }
        section.values.insert(key, RawValue { line: line_no, text: value });
    }

    // --- [statistic] ---
    let family = match checker.string("statistic", "kind") {
        None => {
            checker.issue(None, "statistic", Some("kind"), "required".into());
            None
        }
        Some(kind) => match kind.as_str() {
            "cusum" => {
                let mu = checker.f64("statistic", "mu");
                if mu.is_none() && checker.raw("statistic", "mu").is_none() {
                    checker.issue(None, "statistic", Some("mu"), "required for kind = cusum".into());
                }
                mu.and_then(|mu| match CusumParams::new(mu) {
                    Ok(p) => Some(LocalFamily::Cusum(p)),
                    Err(e) => {
                        let line = checker.line_of("statistic", "mu");
                        checker.issue(line, "statistic", Some("mu"), e.to_string());
                        None
                    }
                })
            }
            "adaptive" => {
                let rho = checker.f64("statistic", "rho").unwrap_or(0.25);
                let s0 = checker.f64("statistic", "s0").unwrap_or(1.0);
                let t0 = checker.f64("statistic", "t0").unwrap_or(4.0);
                match AdaptiveParams::new(rho, s0, t0) {
                    Ok(p) => Some(LocalFamily::Adaptive(p)),
                    Err(e) => {
                        checker.issue(None, "statistic", None, e.to_string());
                        None
                    }
                }
            }
            "nonparametric" => {
                let d = checker.usize("statistic", "d").unwrap_or(20);
                let n = checker.usize("statistic", "n").unwrap_or(40);
                match NpParams::new(d, n) {
                    Ok(p) => Some(LocalFamily::Nonparametric(p)),
                    Err(e) => {
                        checker.issue(None, "statistic", None, e.to_string());
                        None
                    }
                }
            }
            other => {
                let line = checker.line_of("statistic", "kind");
                checker.issue(
                    line,
                    "statistic",
                    Some("kind"),
                    format!("unknown kind {other:?}; expected cusum, adaptive, or nonparametric"),
                );
                None
            }
        },
    };

    // --- [global] ---
    let globals = match checker.string("global", "kinds") {
        None => {
            checker.issue(None, "global", Some("kinds"), "required".into());
            Vec::new()
        }
        Some(list) => {
            let line = checker.line_of("global", "kinds");
            let mut kinds = Vec::new();
            for item in list.split(',') {
                match GlobalKind::parse(item) {
                    Ok(kind) => kinds.push(kind),
                    Err(e) => checker.issue(line, "global", Some("kinds"), e.to_string()),
                }
            }
            if kinds.is_empty() {
                checker.issue(line, "global", Some("kinds"), "needs at least one statistic".into());
            }
            kinds
        }
    };

    // --- [pool] ---
    let pool_path = checker.string("pool", "path").map(PathBuf::from);
    let pool_size = checker.usize("pool", "size").unwrap_or(20_000);
    let burn_in = checker.usize("pool", "burn_in").unwrap_or(2_000);
    if pool_size == 0 {
        let line = checker.line_of("pool", "size");
        checker.issue(line, "pool", Some("size"), "must be positive".into());
    }

    // --- [experiment] ---
    let m = match checker.usize("experiment", "m") {
        Some(m) if m >= 1 => Some(m),
        Some(_) => {
            let line = checker.line_of("experiment", "m");
            checker.issue(line, "experiment", Some("m"), "must be at least 1".into());
            None
        }
        None => {
            if checker.raw("experiment", "m").is_none() {
                checker.issue(None, "experiment", Some("m"), "required".into());
            }
            None
        }
    };
    let m1_list: Vec<usize> = match checker.string("experiment", "m1") {
        None => vec![0],
        Some(list) => {
            let line = checker.line_of("experiment", "m1");
            let mut out = Vec::new();
            for item in list.split(',') {
                match item.trim().parse::<usize>() {
                    Ok(v) => out.push(v),
                    Err(_) => checker.issue(
                        line,
                        "experiment",
                        Some("m1"),
                        format!("expected a nonnegative integer, got {:?}", item.trim()),
                    ),
                }
            }
            out
        }
    };
    if let Some(m) = m {
        for &m1 in &m1_list {
            if m1 > m {
                let line = checker.line_of("experiment", "m1");
                checker.issue(
                    line,
                    "experiment",
                    Some("m1"),
                    format!("m1 = {m1} exceeds m = {m}"),
                );
            }
        }
    }

    let delta = checker.f64("experiment", "delta").unwrap_or(0.5);
    let gamma = checker.f64("experiment", "gamma").unwrap_or(2.0);
    let scenario = match checker
        .string("experiment", "scenario")
        .unwrap_or_else(|| "mean_shift".into())
        .as_str()
    {
        "mean_shift" => Some(OcKind::MeanShift { delta }),
        "random_sign_shift" => Some(OcKind::RandomSignShift { delta }),
        "mixed_location_scale" => Some(OcKind::MixedLocationScale { delta, gamma }),
        other => {
            let line = checker.line_of("experiment", "scenario");
            checker.issue(
                line,
                "experiment",
                Some("scenario"),
                format!(
                    "unknown scenario {other:?}; expected mean_shift, random_sign_shift, \
                     or mixed_location_scale"
                ),
            );
            None
        }
    };
    let change_point = checker.u64("experiment", "change_point").unwrap_or(0);
    let ic_mixture = match checker
        .string("experiment", "ic_mixture")
        .unwrap_or_else(|| "normal".into())
        .as_str()
    {
        "normal" => Some(IcMixture::AllNormal),
        "mixed" => Some(IcMixture::Mixed),
        other => {
            let line = checker.line_of("experiment", "ic_mixture");
            checker.issue(
                line,
                "experiment",
                Some("ic_mixture"),
                format!("unknown mixture {other:?}; expected normal or mixed"),
            );
            None
        }
    };
    let target_arl0 = checker.f64("experiment", "target_arl0").unwrap_or(200.0);
    if !(target_arl0 >= 1.0) {
        let line = checker.line_of("experiment", "target_arl0");
        checker.issue(line, "experiment", Some("target_arl0"), "must be at least 1".into());
    }
    let replications = checker.usize("experiment", "replications").unwrap_or(500);
    if replications == 0 {
        let line = checker.line_of("experiment", "replications");
        checker.issue(line, "experiment", Some("replications"), "must be positive".into());
    }
    let calibration_traces = checker.usize("experiment", "calibration_traces").unwrap_or(1000);
    if calibration_traces == 0 {
        let line = checker.line_of("experiment", "calibration_traces");
        checker.issue(
            line,
            "experiment",
            Some("calibration_traces"),
            "must be positive".into(),
        );
    }
    let t_max = checker.u32("experiment", "t_max");
    if let Some(0) = t_max {
        let line = checker.line_of("experiment", "t_max");
        checker.issue(line, "experiment", Some("t_max"), "must be positive".into());
    }
    let rel_tol = checker.f64("experiment", "rel_tol").unwrap_or(0.02);
    if !(rel_tol > 0.0) {
        let line = checker.line_of("experiment", "rel_tol");
        checker.issue(line, "experiment", Some("rel_tol"), "must be positive".into());
    }
    let seed = checker.u64("experiment", "seed").unwrap_or(20_260_815);

    // --- [monitor] ---
    let h = checker.f64("monitor", "h");
    if let Some(h) = h {
        if !(h > 0.0) {
            let line = checker.line_of("monitor", "h");
            checker.issue(line, "monitor", Some("h"), "control limit must be positive".into());
        }
    }

    // --- [io] ---
    let out = checker.string("io", "out").map(PathBuf::from);
    let format = match checker.string("io", "format").unwrap_or_else(|| "csv".into()).as_str() {
        "csv" => Some(ReportFormat::Csv),
        "markdown" => Some(ReportFormat::Markdown),
        other => {
            let line = checker.line_of("io", "format");
            checker.issue(
                line,
                "io",
                Some("format"),
                format!("unknown format {other:?}; expected csv or markdown"),
            );
            None
        }
    };

    if !checker.issues.is_empty() {
        return Err(checker.issues);
    }
    Ok(MonitorConfig {
        family: family.expect("validated above"),
        globals,
        pool_path,
        pool_size,
        burn_in,
        m: m.expect("validated above"),
        m1_list,
        scenario: scenario.expect("validated above"),
        change_point,
        ic_mixture: ic_mixture.expect("validated above"),
        target_arl0,
        replications,
        calibration_traces,
        t_max,
        rel_tol,
        seed,
        h,
        out,
        format: format.expect("validated above"),
    })
}
