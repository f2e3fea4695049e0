//! Four patches of decreasing density plus the outside, with bootstrap
//! bands on the mean occupancy.

use stigmergy::metrics::bootstrap_ci;
use stigmergy::{run_ensemble, RngStream, StaticValidation, Trajectory};

fn main() -> stigmergy::Result<()> {
    let scenario = StaticValidation::default();
    let traces = run_ensemble(&scenario.sim_config(5)?, 20)?;
    let mean = Trajectory::mean_of(traces.iter().map(|t| &t.policy_history))?;

    let best = 0;
    let samples: Vec<Vec<f64>> = traces.iter().map(|t| t.policy_history.column(best)).collect();
    let band = bootstrap_ci(&samples, 0.95, 1000, &RngStream::from_seed(9))?;
    for epoch in (0..mean.rows()).step_by(20) {
        println!(
            "epoch {epoch:>3}  occupancy {:.3?}  densest patch 95% [{:.3}, {:.3}]",
            mean.row(epoch),
            band.lower[epoch],
            band.upper[epoch]
        );
    }
    println!("reference {:.3?}", scenario.ifd_reference()?.probs());
    Ok(())
}
