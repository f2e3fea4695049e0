//! An evaporating pheromone field and a cross-learning policy driven by the
//! same choices stay identical to machine precision.

use stigmergy::{stigmergic_gain, PheromoneField, RngStream};

fn main() -> stigmergy::Result<()> {
    let attr = [2.0, 1.0, 0.5];
    let (rho, q) = (0.95, 0.05);
    let mut field = PheromoneField::new(attr.len(), rho, q)?;
    let mut policy = field.choice_distribution(&attr)?;
    let mut rng = RngStream::from_seed(42);

    let mut worst: f64 = 0.0;
    for step in 0..50 {
        let explicit = field.choice_distribution(&attr)?;
        let chosen = rng.categorical(explicit.probs());
        let gain = stigmergic_gain(&attr, field.tau(), rho, q, chosen)?;
        policy.reinforce(chosen, gain)?;
        field.step_mut(chosen)?;
        let next = field.choice_distribution(&attr)?;
        let dev = next
            .probs()
            .iter()
            .zip(policy.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        if step % 10 == 9 {
            println!("step {:>3}  field {:.6?}  policy {:.6?}", step + 1, next.probs(), policy.probs());
        }
    }
    println!("largest deviation: {worst:e}");

    let report = stigmergy::equivalence_suite(200, 200, 7, stigmergy::Fault::None)?;
    println!(
        "{} random configurations x {} steps: max deviation {:e}",
        report.configurations, report.steps, report.max_deviation
    );
    Ok(())
}
