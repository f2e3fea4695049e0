//! Reward moves from the middle arm to the last one at epoch 100; compare a
//! homogeneous swarm with one that has 10% explorers.

use stigmergy::metrics::{mta, CONSENSUS_THRESHOLD};
use stigmergy::{run_ensemble, DynamicAdaptation};

fn main() -> stigmergy::Result<()> {
    for epsilon in [0.0, 0.1] {
        let scenario = DynamicAdaptation {
            epsilon,
            ..Default::default()
        };
        let traces = run_ensemble(&scenario.sim_config(11)?, 40)?;
        let s = mta(
            &traces,
            scenario.delta,
            DynamicAdaptation::TARGET_ARM,
            CONSENSUS_THRESHOLD,
            scenario.epochs,
        )?;
        let last = traces[0].final_policy();
        println!(
            "epsilon {epsilon:>4}: mta {:>6.1}  success {:>4.2}  run 0 ends at {last:.3?}",
            s.mta, s.success_rate
        );
    }
    Ok(())
}
