//! Small grid over memory size, switch epoch and exploration rate, using the
//! same harness as the `sweep` command.

use stigmergy::harness::commands::sweep_cells;
use stigmergy::harness::{ExperimentConfig, ExperimentKind};

fn main() -> stigmergy::Result<()> {
    let mut config = ExperimentConfig {
        kind: ExperimentKind::Sweep,
        ..Default::default()
    };
    config.sweep.memories = vec![100, 800];
    config.sweep.deltas = vec![50, 300];
    config.sweep.epsilons = vec![0.001, 0.05, 0.2];
    config.sweep.epochs = 600;
    config.sweep.runs = 3;

    println!("{:>6} {:>5} {:>7} {:>7} {:>7}", "memory", "delta", "eps", "mta", "success");
    for c in sweep_cells(&config)? {
        println!(
            "{:>6} {:>5} {:>7} {:>7.1} {:>7.2}",
            c.memory, c.delta, c.epsilon, c.summary.mta, c.summary.success_rate
        );
    }
    Ok(())
}
