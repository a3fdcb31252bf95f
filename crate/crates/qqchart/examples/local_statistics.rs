//! Runs the two parametric local statistics on one stream that drifts
//! upward halfway through: the known-shift CUSUM tuned to the true
//! shift, and the adaptive CUSUM that estimates the shift on line.

use qqchart::rng::{substream, Lane};
use qqchart::{AdaptiveCusumState, AdaptiveParams, CusumParams, CusumState};
use rand_distr::{Distribution, StandardNormal};

fn main() -> qqchart::Result<()> {
    let change_point = 30u64;
    let delta = 0.8;
    let horizon = 60u64;

    let cusum_params = CusumParams::new(delta)?;
    let adaptive_params = AdaptiveParams::default();
    let mut cusum = CusumState::default();
    let mut adaptive = AdaptiveCusumState::default();

    let mut rng = substream(42, Lane::Run, [0, 0, 0]);
    println!("{:>4} {:>8} {:>10} {:>10} {:>18}", "t", "x", "cusum", "adaptive", "estimated shift");
    for t in 1..=horizon {
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = if t > change_point { z + delta } else { z };
        cusum.update(x, &cusum_params);
        adaptive.update(x, &adaptive_params);
        let (up, _down) = adaptive.mu_hats(&adaptive_params);
        if t % 5 == 0 || t == change_point + 1 {
            let marker = if t == change_point + 1 { "  <- change" } else { "" };
            println!(
                "{:>4} {:>8.3} {:>10.4} {:>10.4} {:>18.4}{marker}",
                t,
                x,
                cusum.value(),
                adaptive.value(),
                up,
            );
        }
    }
    println!();
    println!(
        "final statistics: known-shift={:.4}, adaptive={:.4} (shift estimate {:.4} vs true {delta})",
        cusum.value(),
        adaptive.value(),
        adaptive.mu_hats(&adaptive_params).0,
    );
    Ok(())
}
