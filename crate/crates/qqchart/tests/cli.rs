//! End-to-end tests of the command-line binary: real process spawns,
//! real exit codes, real files.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_qqchart")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn qqchart")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("write config");
    path
}

/// Small panel, small pool: everything here must run in seconds.
fn base_config(pool_path: &Path) -> String {
    format!(
        "[statistic]\n\
         kind = cusum\n\
         mu = 0.5\n\n\
         [global]\n\
         kinds = quantile\n\n\
         [pool]\n\
         path = {}\n\
         size = 2000\n\
         burn_in = 300\n\n\
         [experiment]\n\
         m = 6\n\
         m1 = 1,6\n\
         scenario = mean_shift\n\
         delta = 2.0\n\
         target_arl0 = 50\n\
         replications = 50\n\
         calibration_traces = 150\n\
         seed = 11\n",
        pool_path.display()
    )
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let missing = run(&["calibrate", "--config", "/nonexistent/x.ini"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("cannot read config"));
}

#[test]
fn config_problems_are_listed_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "broken.ini",
        "[statistic]\nkind = cusum\nmu = oops\nbogus = 1\n\n\
         [global]\nkinds = quantile\n\n\
         [experiment]\nm = 5\nm1 = 9\n",
    );
    let out = run(&["calibrate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("problem(s)"), "stderr: {err}");
    assert!(err.contains("mu"), "stderr: {err}");
    assert!(err.contains("bogus"), "stderr: {err}");
    assert!(err.contains("m1"), "stderr: {err}");
}

#[test]
fn gen_pool_calibrate_arl0_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = dir.path().join("pool.bin");
    let config = write_config(dir.path(), "run.ini", &base_config(&pool_path));
    let config = config.to_str().unwrap();

    let gen = run(&["gen-pool", "--config", config]);
    assert_eq!(gen.status.code(), Some(0), "stderr: {}", stderr(&gen));
    assert!(pool_path.exists());
    assert!(stdout(&gen).contains("kind=cusum"));

    let cal = run(&["calibrate", "--config", config]);
    assert_eq!(cal.status.code(), Some(0), "stderr: {}", stderr(&cal));
    let line = stdout(&cal);
    assert!(line.contains("scheme=quantile"), "stdout: {line}");
    let h: f64 = line
        .split_whitespace()
        .find_map(|f| f.strip_prefix("h="))
        .expect("h= field")
        .parse()
        .unwrap();
    assert!(h > 0.0);

    // Feed the calibrated limit back in and re-check it on fresh draws.
    let with_h =
        write_config(dir.path(), "check.ini", &format!("{}[monitor]\nh = {h}\n", base_config(&pool_path)));
    let arl0 = run(&["arl0", "--config", with_h.to_str().unwrap()]);
    assert_eq!(arl0.status.code(), Some(0), "stderr: {}", stderr(&arl0));
    let report = stdout(&arl0);
    let arl: f64 = report
        .split_whitespace()
        .find_map(|f| f.strip_prefix("arl0="))
        .expect("arl0= field")
        .parse()
        .unwrap();
    // Desk-size run: just require the right order of magnitude.
    assert!(arl > 20.0 && arl < 120.0, "fresh ARL {arl} far from target 50");
}

#[test]
fn arl1_writes_the_delay_table() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = dir.path().join("pool.bin");
    let out_path = dir.path().join("table.csv");
    let config = write_config(dir.path(), "run.ini", &base_config(&pool_path));

    let out = run(&[
        "arl1",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let table = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme_id,global_kind,m,m1,scenario_id,target_arl0,h,replications,mean_rl,sd_rl,\
         censored_fraction,discard_rate,wall_seconds",
    );
    // One scheme, two panel overlaps.
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.all(|l| l.starts_with("quantile,quantile,6,")));
}

#[test]
fn arl1_output_is_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = dir.path().join("pool.bin");
    let config = write_config(dir.path(), "run.ini", &base_config(&pool_path));
    let config = config.to_str().unwrap();

    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let out_path = dir.path().join(format!("table{threads}.csv"));
        let out = run(&[
            "arl1",
            "--config",
            config,
            "--threads",
            threads,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        // Strip the wall-clock column; it is the one timing field.
        let masked: String = std::fs::read_to_string(&out_path)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
            .join("\n");
        tables.push(masked);
    }
    assert_eq!(tables[0], tables[1]);
}

fn monitor_config(dir: &Path, h: f64) -> PathBuf {
    let pool_path = dir.join("pool.bin");
    write_config(
        dir,
        "monitor.ini",
        &format!(
            "[statistic]\nkind = cusum\nmu = 0.5\n\n\
             [global]\nkinds = quantile\n\n\
             [pool]\npath = {}\nsize = 2000\nburn_in = 300\n\n\
             [experiment]\nm = 3\nseed = 11\n\n\
             [monitor]\nh = {h}\n",
            pool_path.display()
        ),
    )
}

/// Five quiet rows, then a strong level change on every stream.
fn panel_csv() -> String {
    let mut csv = String::from("a,b,c\n");
    for _ in 0..5 {
        csv.push_str("0.0,0.0,0.0\n");
    }
    for _ in 0..10 {
        csv.push_str("2.0,2.0,2.0\n");
    }
    csv
}

#[test]
fn monitor_alarms_with_tick_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = monitor_config(dir.path(), 2.0);
    let csv_path = dir.path().join("panel.csv");
    std::fs::write(&csv_path, panel_csv()).unwrap();

    let out = run(&[
        "monitor",
        "--config",
        config.to_str().unwrap(),
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let alarm = stdout(&out);
    assert!(alarm.starts_with("ALARM t="), "stdout: {alarm}");
    let tick: u32 = alarm.trim().strip_prefix("ALARM t=").unwrap().parse().unwrap();
    assert!((6..=15).contains(&tick), "alarm tick {tick} outside the shifted range");
    // The per-tick trace goes to the log stream, one line per tick.
    let log = stderr(&out);
    assert!(log.lines().filter(|l| l.starts_with("t=") && l.contains("G=")).count() >= 6);
}

#[test]
fn monitor_reads_stdin_and_tabs_and_stays_quiet_without_alarm() {
    let dir = tempfile::tempdir().unwrap();
    let config = monitor_config(dir.path(), 1e6);
    let mut child = Command::new(bin())
        .args(["monitor", "--config", config.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn qqchart");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"0.1\t0.2\t0.3\n0.4\t0.0\t0.1\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out), "", "no alarm line expected");
    assert!(stderr(&out).contains("no alarm in 2 ticks"));
}

#[test]
fn monitor_rejects_malformed_rows_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = monitor_config(dir.path(), 2.0);

    let short_row = dir.path().join("short.csv");
    std::fs::write(&short_row, "0.0,0.0,0.0\n1.0,2.0\n").unwrap();
    let out =
        run(&["monitor", "--config", config.to_str().unwrap(), short_row.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("expected 3 columns"), "stderr: {}", stderr(&out));

    let bad_value = dir.path().join("bad.csv");
    std::fs::write(&bad_value, "0.0,0.0,0.0\n1.0,huh,2.0\n").unwrap();
    let out =
        run(&["monitor", "--config", config.to_str().unwrap(), bad_value.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "stderr: {}", stderr(&out));
}

#[test]
fn arl0_demands_one_global_and_a_limit() {
    let dir = tempfile::tempdir().unwrap();
    let pool_path = dir.path().join("pool.bin");
    let config = write_config(
        dir.path(),
        "two_globals.ini",
        &format!(
            "[statistic]\nkind = cusum\nmu = 0.5\n\n\
             [global]\nkinds = quantile,max\n\n\
             [pool]\npath = {}\n\n\
             [experiment]\nm = 4\n",
            pool_path.display()
        ),
    );
    let out = run(&["arl0", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("exactly one global"), "stderr: {err}");
    assert!(err.contains("[monitor] h"), "stderr: {err}");
}
