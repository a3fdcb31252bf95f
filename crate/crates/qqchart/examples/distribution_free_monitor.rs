//! Demonstrates the self-starting rank-based local statistic: it needs
//! no parametric model, and its whole trajectory is invariant under any
//! strictly increasing transform of the data.

use qqchart::rng::{substream, Lane};
use qqchart::{NpParams, NpState};
use rand_distr::{Distribution, StandardNormal};

fn main() -> qqchart::Result<()> {
    let params = NpParams::new(4, 8)?;
    let mut rng = substream(9, Lane::Run, [0, 0, 0]);

    // Reference sample plus a run with a level change at tick 25.
    let reference: Vec<f64> = (0..params.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let observations: Vec<f64> = (1..=50u64)
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            if t > 25 {
                z + 1.5
            } else {
                z
            }
        })
        .collect();

    // Same data pushed through a strictly increasing transform.
    let warp = |x: f64| x.powi(3) + 2.0 * x;
    let reference_w: Vec<f64> = reference.iter().map(|&x| warp(x)).collect();
    let observations_w: Vec<f64> = observations.iter().map(|&x| warp(x)).collect();

    let mut plain = NpState::from_reference(&reference, &params)?;
    let mut warped = NpState::from_reference(&reference_w, &params)?;

    println!("{:>4} {:>10} {:>10} {:>10}", "t", "raw data", "warped", "equal");
    let mut exact = true;
    for (t, (&x, &xw)) in observations.iter().zip(&observations_w).enumerate() {
        plain.update(x, &params);
        warped.update(xw, &params);
        let same = plain.value() == warped.value();
        exact &= same;
        if (t + 1) % 10 == 0 || t + 1 == 26 {
            println!("{:>4} {:>10.4} {:>10.4} {:>10}", t + 1, plain.value(), warped.value(), same);
        }
    }
    println!();
    println!("trajectories identical bit for bit: {exact}");
    println!("final statistic: {:.4} (four layout/prior combinations: {:?})", plain.value(), {
        let s = plain.shat();
        [format!("{:.3}", s[0]), format!("{:.3}", s[1]), format!("{:.3}", s[2]), format!("{:.3}", s[3])]
    });
    Ok(())
}
