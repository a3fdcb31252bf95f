//! Acceptance gate: one test per criterion, each printing one
//! `criterion N: PASS/FAIL` line with its measured numbers (visible
//! under `--nocapture`; the per-test ok/FAILED lines mirror them).
//!
//! Criteria 4, 5, and 6 run as self-contained pipelines that emit CSV
//! artifacts; criterion 8 reruns those pipelines under a different
//! worker count and compares the artifacts byte for byte. Criterion 7
//! is the full-scale reproduction and stays `#[ignore]`d: it needs far
//! more compute than the desk-scale gate.

use qqchart::calibrate::{
    arl1_table, arl_at, calibrate, simulate_ic_traces, CalibrationSettings, MonitorScheme,
};
use qqchart::reference::{cusum_direct, np_direct_trajectory};
use qqchart::report::{csv_report, ReportRow};
use qqchart::rng::{salted_seed, substream, Lane};
use qqchart::{
    logistic_quantile, quantile_exceedance, CusumParams, CusumState, DistributionSpec, GlobalKind,
    IcMixture, LocalFamily, NpParams, NpState, OcKind, PoolConfig, QuantileTable, ScenarioConfig,
    SteadyStatePool,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const SEED: u64 = 20_260_815;

fn verdict(criterion: u32, ok: bool, detail: &str) {
    println!("criterion {criterion}: {} - {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}

// --- criterion 1: the logistic-scale statistic equals the generic ---
// --- quantile statistic routed through a logistic reference table ---

#[test]
fn c1_logistic_route_equivalence() {
    const TOL: f64 = 1e-10;
    let mut worst: f64 = 0.0;
    for m in [1usize, 2, 10, 100, 1000] {
        let table = QuantileTable::logistic(m).unwrap();
        let mut rng = substream(SEED, Lane::Run, [1, m as u64, 0]);
        for _ in 0..10_000 {
            let u: Vec<f64> =
                (0..m).map(|_| rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12)).collect();
            let direct = qqchart::logistic_exceedance(&u).unwrap();
            let w: Vec<f64> = u.iter().map(|&v| logistic_quantile(v).unwrap()).collect();
            let routed = quantile_exceedance(&w, &table).unwrap();
            worst = worst.max((direct - routed).abs());
        }
    }
    verdict(
        1,
        worst <= TOL,
        &format!("largest gap between the two routes {worst:.3e} (allowed {TOL:.0e})"),
    );
}

// --- criterion 2: the one-sided CUSUM recursion equals the direct ---
// --- maximum over change points ---

#[test]
fn c2_cusum_recursion_matches_direct_maximum() {
    const TOL: f64 = 1e-12;
    let mut rng = substream(SEED, Lane::Run, [2, 0, 0]);
    let mut worst: f64 = 0.0;
    for case in 0..10_000u64 {
        let mu = [0.25, -0.25, 0.5, -0.5, 1.0][(case % 5) as usize];
        let params = CusumParams::new(mu).unwrap();
        let len = rng.random_range(1..=50);
        let xs: Vec<f64> = (0..len)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + if case % 3 == 0 { 0.4 } else { 0.0 }
            })
            .collect();
        let mut state = CusumState::default();
        for &x in &xs {
            state.update(x, &params);
        }
        worst = worst.max((state.value() - cusum_direct(&xs, &params)).abs());
    }
    verdict(2, worst <= TOL, &format!("largest recursion gap {worst:.3e} (allowed {TOL:.0e})"));
}

// --- criterion 3: the self-starting statistic matches a from-scratch ---
// --- recomputation, and ranks are all it sees ---

#[test]
fn c3_self_starting_matches_direct_and_rank_invariance() {
    const TOL_DIRECT: f64 = 1e-10;
    let params = NpParams::new(4, 8).unwrap();
    let mut rng = substream(SEED, Lane::Run, [3, 0, 0]);
    let mut worst: f64 = 0.0;
    let mut bit_identical = true;
    for run in 0..100u64 {
        let reference: Vec<f64> =
            (0..params.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let observations: Vec<f64> = (0..30u64)
            .map(|t| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + if run % 2 == 0 && t >= 15 { 1.0 } else { 0.0 }
            })
            .collect();

        let direct = np_direct_trajectory(&reference, &observations, &params);
        let mut state = NpState::from_reference(&reference, &params).unwrap();
        let mut incremental = Vec::new();
        for &x in &observations {
            state.update(x, &params);
            incremental.push(state.shat());
        }
        for (a, b) in incremental.iter().zip(&direct) {
            for j in 0..4 {
                worst = worst.max((a[j] - b[j]).abs());
            }
        }

        // Strictly increasing warp: identical ranks, so identical bits.
        let warp = |x: f64| x.powi(3) + x;
        let reference_w: Vec<f64> = reference.iter().map(|&x| warp(x)).collect();
        let mut state_w = NpState::from_reference(&reference_w, &params).unwrap();
        for (&x, plain) in observations.iter().zip(&incremental) {
            state_w.update(warp(x), &params);
            bit_identical &= state_w.shat() == *plain;
        }
    }
    verdict(
        3,
        worst <= TOL_DIRECT && bit_identical,
        &format!(
            "largest incremental-vs-direct gap {worst:.3e} (allowed {TOL_DIRECT:.0e}); \
             warped trajectories bit-identical: {bit_identical}"
        ),
    );
}

// --- shared pipeline machinery for criteria 4, 5, 6, and 8 ---

type PipelineFn = fn() -> String;

/// Runs `f` inside a dedicated worker pool of the given size, once per
/// (key, threads); repeated calls return the cached artifact.
fn cached_pipeline(key: &'static str, threads: usize, f: PipelineFn) -> Arc<String> {
    type Cache = Mutex<HashMap<(&'static str, usize), Arc<OnceLock<Arc<String>>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let slot = cache.lock().unwrap().entry((key, threads)).or_default().clone();
    slot.get_or_init(|| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        Arc::new(pool.install(f))
    })
    .clone()
}

fn kv_lookup(csv: &str, key: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("artifact lacks {key}: {csv}"))
        .parse()
        .unwrap()
}

fn cusum_pool(size: usize) -> Arc<SteadyStatePool> {
    Arc::new(
        SteadyStatePool::generate(PoolConfig {
            family: LocalFamily::Cusum(CusumParams::new(0.5).unwrap()),
            size,
            burn_in: 2_000,
            seed: SEED,
        })
        .unwrap(),
    )
}

// --- criterion 4: a calibrated limit reproduces its in-control ARL ---
// --- target on fresh randomness ---

const C4_TARGET: f64 = 200.0;
const C4_TOL: f64 = 0.07 * C4_TARGET;

fn pipeline_c4() -> String {
    let pool = cusum_pool(20_000);
    let mut scheme = MonitorScheme::new("quantile", pool, GlobalKind::Quantile, 50).unwrap();
    let settings = CalibrationSettings {
        target_arl0: C4_TARGET,
        traces: 1_000,
        t_max: 2_500,
        rel_tol: 0.02,
        seed: SEED,
    };
    let out = calibrate(&mut scheme, &settings).unwrap();
    let check_seed = salted_seed(SEED, u64::from_le_bytes(*b"c4 check"));
    let traces = simulate_ic_traces(&scheme, 1_000, settings.t_max, check_seed).unwrap();
    let est = arl_at(out.h, &traces).unwrap();
    format!(
        "quantity,value\nh,{:.6}\nachieved_arl0,{:.4}\ncalibration_censored,{:.4}\n\
         verified_arl0,{:.4}\nverified_censored,{:.4}\n",
        out.h, out.achieved_arl0, out.censored_fraction, est.arl, est.censored_fraction,
    )
}

#[test]
fn c4_in_control_arl_self_consistency() {
    let csv = cached_pipeline("c4", 1, pipeline_c4);
    let h = kv_lookup(&csv, "h");
    let verified = kv_lookup(&csv, "verified_arl0");
    let gap = (verified - C4_TARGET).abs();
    verdict(
        4,
        gap <= C4_TOL,
        &format!(
            "h={h:.4} calibrated to target {C4_TARGET}; fresh 1000-replication ARL {verified:.2} \
             (off by {gap:.2}, allowed {C4_TOL:.0})"
        ),
    );
}

// --- criterion 5: detection-delay ordering between the quantile ---
// --- statistic and the soft-threshold baselines ---

const C5_M: usize = 100;
const C5_REPS: usize = 500;

fn pipeline_c5() -> String {
    let pool = cusum_pool(20_000);
    let settings = CalibrationSettings {
        target_arl0: 200.0,
        traces: 1_000,
        t_max: 2_000,
        rel_tol: 0.02,
        seed: SEED,
    };
    let soft_log_m = (C5_M as f64).ln();
    let mut schemes = vec![
        MonitorScheme::new("quantile", pool.clone(), GlobalKind::Quantile, C5_M).unwrap(),
        MonitorScheme::new("soft_half", pool.clone(), GlobalKind::SoftThreshold { b: 0.5 }, C5_M)
            .unwrap(),
        MonitorScheme::new(
            "soft_log_m",
            pool.clone(),
            GlobalKind::SoftThreshold { b: soft_log_m },
            C5_M,
        )
        .unwrap(),
    ];
    for scheme in &mut schemes {
        calibrate(scheme, &settings).unwrap();
    }
    let scenarios: Vec<(String, ScenarioConfig)> = [1usize, 100]
        .iter()
        .map(|&m1| {
            (
                "mean_shift".to_string(),
                ScenarioConfig {
                    m: C5_M,
                    m1,
                    change_point: 0,
                    oc: OcKind::MeanShift { delta: 0.5 },
                    ic_mixture: IcMixture::AllNormal,
                    seed: SEED,
                },
            )
        })
        .collect();
    let cells =
        arl1_table(&schemes, &scenarios, settings.target_arl0, C5_REPS, settings.t_max, SEED)
            .unwrap();
    let rows: Vec<ReportRow> = cells.iter().filter_map(ReportRow::from_cell).collect();
    csv_report(&rows)
}

/// Returns (mean, standard error) for one scheme at one panel overlap.
fn c5_cell(csv: &str, scheme: &str, m1: usize) -> (f64, f64) {
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == scheme && fields[3] == m1.to_string() {
            let mean: f64 = fields[8].parse().unwrap();
            let sd: f64 = fields[9].parse().unwrap();
            let reps: f64 = fields[7].parse().unwrap();
            return (mean, sd / reps.sqrt());
        }
    }
    panic!("artifact lacks ({scheme}, m1={m1}): {csv}");
}

#[test]
fn c5_detection_delay_ordering() {
    let csv = cached_pipeline("c5", 1, pipeline_c5);
    let (q1, q1_se) = c5_cell(&csv, "quantile", 1);
    let (s1, s1_se) = c5_cell(&csv, "soft_half", 1);
    let (s100, s100_se) = c5_cell(&csv, "soft_half", 100);
    let (l100, l100_se) = c5_cell(&csv, "soft_log_m", 100);

    let margin_sparse = (s1 - q1) / (q1_se.powi(2) + s1_se.powi(2)).sqrt();
    let margin_dense = (l100 - s100) / (s100_se.powi(2) + l100_se.powi(2)).sqrt();
    verdict(
        5,
        margin_sparse > 2.0 && margin_dense > 2.0,
        &format!(
            "one shifted stream: quantile {q1:.2} vs soft(0.5) {s1:.2} ({margin_sparse:.1} se); \
             all shifted: soft(0.5) {s100:.2} vs soft(log m) {l100:.2} ({margin_dense:.1} se); \
             both must exceed 2 se"
        ),
    );
}

// --- criterion 6: the self-starting statistic's in-control run ---
// --- lengths do not depend on the sampling distribution ---

const C6_D: usize = 20;
const C6_N: usize = 40;
const C6_H: f64 = 12.0;
const C6_REPS: u64 = 2_000;
const C6_T_MAX: u32 = 3_000;

fn np_run_lengths(dist: DistributionSpec, seed: u64) -> Vec<u32> {
    let params = NpParams::new(C6_D, C6_N).unwrap();
    let sampler = dist.sampler().unwrap();
    (0..C6_REPS)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(seed, Lane::Run, [rep, 0, 0]);
            let reference: Vec<f64> =
                (0..params.n()).map(|_| sampler.sample(&mut rng)).collect();
            let mut state = NpState::from_reference(&reference, &params).unwrap();
            for t in 1..=C6_T_MAX {
                state.update(sampler.sample(&mut rng), &params);
                if state.value() > C6_H {
                    return t;
                }
            }
            C6_T_MAX
        })
        .collect()
}

fn mean_sd(values: &[u32]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let ss = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn pipeline_c6() -> String {
    let mut csv = String::from("distribution,replications,mean_rl,sd_rl,censored_fraction\n");
    for (name, dist, salt) in [
        ("normal", DistributionSpec::Normal, *b"c6 norml"),
        (
            "lognormal",
            DistributionSpec::LogNormal { log_mean: 1.0, log_sd: 0.5, standardized: true },
            *b"c6 lognr",
        ),
    ] {
        // Distinct salts make the two samples independent; shared draws
        // would reduce this to the rank invariance criterion 3 covers.
        let rls = np_run_lengths(dist, salted_seed(SEED, u64::from_le_bytes(salt)));
        let (mean, sd) = mean_sd(&rls);
        let censored = rls.iter().filter(|&&t| t == C6_T_MAX).count() as f64 / rls.len() as f64;
        csv.push_str(&format!(
            "{name},{},{mean:.4},{sd:.4},{censored:.4}\n",
            rls.len(),
        ));
    }
    csv
}

fn c6_row(csv: &str, name: &str) -> (f64, f64) {
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == name {
            let reps: f64 = fields[1].parse().unwrap();
            let mean: f64 = fields[2].parse().unwrap();
            let sd: f64 = fields[3].parse().unwrap();
            return (mean, sd / reps.sqrt());
        }
    }
    panic!("artifact lacks {name}: {csv}");
}

#[test]
fn c6_distribution_free_run_lengths() {
    let csv = cached_pipeline("c6", 1, pipeline_c6);
    let (normal, normal_se) = c6_row(&csv, "normal");
    let (lognormal, lognormal_se) = c6_row(&csv, "lognormal");
    let combined_se = (normal_se.powi(2) + lognormal_se.powi(2)).sqrt();
    let gap = (normal - lognormal).abs();
    verdict(
        6,
        gap < 3.0 * combined_se,
        &format!(
            "in-control mean run length at h={C6_H}: normal {normal:.1} vs standardized \
             lognormal {lognormal:.1}; gap {gap:.1} must stay under {:.1} (3 combined se)",
            3.0 * combined_se,
        ),
    );
}

/// One-off helper to pick `C6_H`; not part of the gate.
#[test]
#[ignore]
fn c6_threshold_scan() {
    for h in [6.0, 8.0, 10.0, 12.0, 15.0] {
        let params = NpParams::new(C6_D, C6_N).unwrap();
        let rls: Vec<u32> = (0..300u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(SEED, Lane::Run, [rep, 0, 0]);
                let reference: Vec<f64> =
                    (0..params.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let mut state = NpState::from_reference(&reference, &params).unwrap();
                for t in 1..=C6_T_MAX {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    state.update(x, &params);
                    if state.value() > h {
                        return t;
                    }
                }
                C6_T_MAX
            })
            .collect();
        let (mean, _) = mean_sd(&rls);
        let censored = rls.iter().filter(|&&t| t == C6_T_MAX).count();
        println!("h={h}: mean RL {mean:.1}, censored {censored}/300");
    }
}

// --- criterion 7: full-scale control limits (optional, heavy) ---

#[test]
#[ignore]
fn c7_full_scale_control_limits() {
    const REFERENCE_H: f64 = 20.674;
    const LOGISTIC_REFERENCE_H: f64 = 28.570;
    let pool = cusum_pool(100_000);
    let settings = CalibrationSettings {
        target_arl0: 1_000.0,
        traces: 2_000,
        t_max: 10_000,
        rel_tol: 0.02,
        seed: SEED,
    };
    let mut scheme = MonitorScheme::new("quantile", pool.clone(), GlobalKind::Quantile, 100).unwrap();
    let out = calibrate(&mut scheme, &settings).unwrap();
    let rel = (out.h - REFERENCE_H).abs() / REFERENCE_H;

    let mut logistic =
        MonitorScheme::new("logistic", pool, GlobalKind::Logistic, 100).unwrap();
    let logistic_out = calibrate(&mut logistic, &settings).unwrap();
    println!(
        "logistic-scale h={:.3} (reference {LOGISTIC_REFERENCE_H}; approximate only, the \
         empirical pool CDF stands in for the closed-form probability transform)",
        logistic_out.h,
    );
    verdict(
        7,
        rel <= 0.02,
        &format!("quantile h={:.3} vs reference {REFERENCE_H} ({:.2}% off, allowed 2%)", out.h, 100.0 * rel),
    );
}

// --- criterion 8: worker count never changes the numbers ---

fn mask_wall_seconds(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            match line.rsplit_once(',') {
                Some((head, _)) => format!("{head},*"),
                None => line.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn c8_determinism_across_worker_counts() {
    let pipelines: [(&'static str, PipelineFn, bool); 3] =
        [("c4", pipeline_c4, false), ("c5", pipeline_c5, true), ("c6", pipeline_c6, false)];
    let mut all_equal = true;
    let mut notes = Vec::new();
    for (key, f, has_wall_column) in pipelines {
        let serial = cached_pipeline(key, 1, f);
        let pooled = cached_pipeline(key, 4, f);
        let equal = if has_wall_column {
            mask_wall_seconds(&serial) == mask_wall_seconds(&pooled)
        } else {
            *serial == *pooled
        };
        all_equal &= equal;
        notes.push(format!(
            "{key} {}{}",
            if equal { "identical" } else { "DIFFERS" },
            if has_wall_column { " (wall_seconds column masked)" } else { "" },
        ));
    }
    verdict(8, all_equal, &format!("1 vs 4 workers: {}", notes.join("; ")));
}
