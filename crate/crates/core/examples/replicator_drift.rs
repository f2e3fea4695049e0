//! Mean one-step change of a cross-learning policy against the replicator
//! vector field.

use stigmergy::{estimate_drift, replicator_rhs, Policy, RngStream};

fn main() -> stigmergy::Result<()> {
    let policy = Policy::new(vec![0.3, 0.7])?;
    let payoffs = [1.0, 0.4];
    let gain = 0.05;

    println!("replicator field: {:?}", replicator_rhs(&policy, &payoffs)?);
    let mut rng = RngStream::from_seed(3);
    for samples in [1_000, 10_000, 100_000] {
        let d = estimate_drift(&policy, &payoffs, gain, samples, &mut rng)?;
        println!(
            "{samples:>7} samples  analytic {:.6?}  empirical {:.6?}  max |z| {:.2}",
            d.analytic,
            d.empirical,
            d.max_z()
        );
    }
    Ok(())
}
