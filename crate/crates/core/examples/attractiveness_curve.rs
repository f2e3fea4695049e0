//! Attractiveness of a bacterial patch as a function of food density, and
//! the pheromone-free distribution it induces over a few patches.

use stigmergy::{attractiveness, ifd_distribution, SigmoidParams};

fn main() -> stigmergy::Result<()> {
    let params = SigmoidParams::OP50;
    println!("{:>10}  {:>10}", "density", "A(D)");
    for i in 0..=12 {
        let d = 1e-4 * 2f64.powi(i);
        println!("{d:>10.4}  {:>10.4}", attractiveness(&params, d)?);
    }

    let densities = [0.2, 0.1, 0.05, 0.025];
    let a: Vec<f64> = densities
        .iter()
        .map(|&d| attractiveness(&params, d))
        .collect::<Result<_, _>>()?;
    let p = ifd_distribution(&a)?;
    println!("\nideal free distribution over densities {densities:?}:");
    for (d, share) in densities.iter().zip(p.probs()) {
        println!("  {d:>6}: {share:.4}");
    }
    Ok(())
}
