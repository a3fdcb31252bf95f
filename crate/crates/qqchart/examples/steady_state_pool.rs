//! Builds a steady-state pool for each local statistic family, shows the
//! summaries a pool provides (empirical CDF, expected quantiles), and
//! round-trips one pool through its binary file format.

use qqchart::{
    AdaptiveParams, CusumParams, LocalFamily, NpParams, PoolConfig, SteadyStatePool,
};

fn main() -> qqchart::Result<()> {
    let families = [
        LocalFamily::Cusum(CusumParams::new(0.5)?),
        LocalFamily::Adaptive(AdaptiveParams::new(0.25, 1.0, 4.0)?),
        LocalFamily::Nonparametric(NpParams::new(5, 10)?),
    ];

    for family in families {
        let config = PoolConfig { family, size: 4000, burn_in: 500, seed: 7 };
        let pool = SteadyStatePool::generate(config)?;
        let values = pool.sorted_values();
        println!(
            "{:<14} pool of {}: min={:.4} median={:.4} max={:.4}",
            pool.family().kind_name(),
            pool.size(),
            values[0],
            values[values.len() / 2],
            values[values.len() - 1],
        );
        println!(
            "  empirical CDF at 0.0 -> {:.4}, at max -> {:.4} (clamped inside (0,1))",
            pool.empirical_cdf(0.0),
            pool.empirical_cdf(values[values.len() - 1]),
        );
        let table = pool.expected_quantiles(5)?;
        let formatted: Vec<String> =
            table.expected().iter().map(|q| format!("{q:.4}")).collect();
        println!("  expected order statistics for a panel of 5: {}", formatted.join(", "));
    }

    // The binary format preserves the pool bit for bit.
    let dir = std::env::temp_dir().join("qqchart_pool_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("cusum_pool.bin");
    let pool = SteadyStatePool::generate(PoolConfig {
        family: LocalFamily::Cusum(CusumParams::new(0.5)?),
        size: 4000,
        burn_in: 500,
        seed: 7,
    })?;
    pool.save(&path)?;
    let loaded = SteadyStatePool::load(&path)?;
    println!(
        "saved and reloaded {} ({} bytes): identical = {}",
        path.display(),
        std::fs::metadata(&path).expect("metadata").len(),
        pool == loaded,
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
