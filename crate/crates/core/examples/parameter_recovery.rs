//! Generate occupancy from known parameters and recover them by
//! differential evolution.

use stigmergy::fitting::{fit_de, simulate_occupancy, DeParams, FitBounds, FitParams, FitSpec};
use stigmergy::StaticValidation;

fn main() -> stigmergy::Result<()> {
    let template = StaticValidation {
        epochs: 30,
        noise_std: 0.0,
        ..Default::default()
    };
    let truth = FitParams::PUBLISHED;
    let (runs, seed) = (4, 7);
    let target = simulate_occupancy(&template, &truth, runs, seed)?;

    let spec = FitSpec {
        bounds: FitBounds::default(),
        target,
        template,
        runs_per_eval: runs,
        sim_seed: seed,
        de: DeParams {
            max_generations: 200,
            seed: 1,
            ..Default::default()
        },
        convergence_tol: 1e-12,
    };
    let fit = fit_de(&spec)?;
    println!("truth     {:?}", truth.as_array());
    println!("recovered {:?}", fit.params.as_array());
    println!(
        "fitness {:e} after {} generations, max relative error {:.3}",
        fit.fitness,
        fit.generations,
        fit.params.max_relative_error(&truth)
    );
    Ok(())
}
