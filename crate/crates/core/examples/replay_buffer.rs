//! A bounded replay buffer standing in for pheromone evaporation.

use stigmergy::{buffered_tau, ReplayBuffer};

fn main() -> stigmergy::Result<()> {
    let q = 0.02;
    let mut buffer = ReplayBuffer::new(5, 3)?;
    for (arm, a) in [(0, 1.0), (1, 2.7), (1, 2.5), (2, 0.0), (1, 2.8), (0, 0.9), (2, 0.1)] {
        let evicted = buffer.push(arm, a)?;
        println!(
            "push arm {arm} ({a:.1})  counts {:?}  tau {:.2?}  evicted {:?}",
            buffer.counts(),
            buffered_tau(&buffer, 3, q)?,
            evicted.map(|d| d.arm)
        );
    }
    Ok(())
}
