//! Drives the command-line interface end to end: writes a config and a
//! CSV panel whose last ticks drift, then replays the panel through the
//! `monitor` subcommand, which prints `ALARM t=<tick>` when the global
//! statistic crosses the configured limit.

use qqchart::cli::run_command;
use qqchart::rng::{substream, Lane};
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;

fn main() {
    let dir = std::env::temp_dir().join("qqchart_alarm_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let config_path = dir.join("monitor.ini");
    let csv_path = dir.join("panel.csv");

    // A deliberately loose limit keeps this demonstration quick.
    std::fs::write(
        &config_path,
        "[statistic]\n\
         kind = cusum\n\
         mu = 0.5\n\n\
         [global]\n\
         kinds = quantile\n\n\
         [pool]\n\
         size = 3000\n\
         burn_in = 500\n\n\
         [experiment]\n\
         m = 8\n\
         seed = 5\n\n\
         [monitor]\n\
         h = 4.0\n",
    )
    .expect("write config");

    // 40 in-control ticks, then 3 of 8 streams shift upward by 1.5.
    let mut rng = substream(5, Lane::Run, [99, 0, 0]);
    let mut csv = String::from("s1,s2,s3,s4,s5,s6,s7,s8\n");
    for t in 1..=80u64 {
        let row: Vec<String> = (0..8)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let x = if t > 40 && i < 3 { z + 1.5 } else { z };
                format!("{x:.6}")
            })
            .collect();
        writeln!(csv, "{}", row.join(",")).expect("format row");
    }
    std::fs::write(&csv_path, csv).expect("write panel");

    println!("replaying {} through the monitor subcommand:", csv_path.display());
    let code = run_command([
        "qqchart".to_string(),
        "monitor".to_string(),
        "--config".to_string(),
        config_path.display().to_string(),
        csv_path.display().to_string(),
    ]);
    println!("exit code: {code}");

    std::fs::remove_file(&config_path).ok();
    std::fs::remove_file(&csv_path).ok();
}
