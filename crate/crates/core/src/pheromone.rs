//! Explicit per-patch pheromone state.
//!
//! Each commitment evaporates every patch by the retention factor `rho` and
//! deposits `Q` on the chosen one. The pheromone attractiveness of a patch is
//! its raw quantity; all patches start at the baseline quantity 1. The
//! baseline is not enforced afterwards, so with `rho < 1` a patch that is
//! not revisited decays below 1.

use serde::{Deserialize, Serialize};

use crate::cross_learning::Policy;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PheromoneField {
    tau: Vec<f64>,
    rho: f64,
    q_deposit: f64,
}

fn check_rates(rho: f64, q_deposit: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("retention rho must lie in [0, 1], got {rho}")));
    }
    if !(q_deposit >= 0.0 && q_deposit.is_finite()) {
        return Err(Error::domain(format!("deposit Q must be >= 0, got {q_deposit}")));
    }
    Ok(())
}

impl PheromoneField {
    /// Field over `num_patches` patches at the baseline quantity 1.
    pub fn new(num_patches: usize, rho: f64, q_deposit: f64) -> Result<Self> {
        if num_patches == 0 {
            return Err(Error::domain("pheromone field needs at least one patch"));
        }
        check_rates(rho, q_deposit)?;
        Ok(Self {
            tau: vec![1.0; num_patches],
            rho,
            q_deposit,
        })
    }

    /// Field with explicit quantities.
    pub fn with_tau(tau: Vec<f64>, rho: f64, q_deposit: f64) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::domain("pheromone field needs at least one patch"));
        }
        if let Some(t) = tau.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::domain(format!("pheromone quantity must be >= 0, got {t}")));
        }
        check_rates(rho, q_deposit)?;
        Ok(Self {
            tau,
            rho,
            q_deposit,
        })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn q_deposit(&self) -> f64 {
        self.q_deposit
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Pheromone attractiveness of patch `i` (linear in quantity).
    pub fn pheromone_attractiveness(&self, i: usize) -> f64 {
        self.tau[i]
    }

    /// One commitment to `chosen`: evaporate everywhere, deposit once.
    pub fn step(&self, chosen: usize) -> Result<Self> {
        let mut next = self.clone();
        next.step_mut(chosen)?;
        Ok(next)
    }

    pub fn step_mut(&mut self, chosen: usize) -> Result<()> {
        if chosen >= self.tau.len() {
            return Err(Error::domain(format!(
                "patch index {chosen} out of range for {} patches",
                self.tau.len()
            )));
        }
        for t in &mut self.tau {
            *t *= self.rho;
        }
        self.tau[chosen] += self.q_deposit;
        Ok(())
    }

    /// Occupancy weighted by pheromone and intrinsic attractiveness.
    pub fn choice_distribution(&self, attractivenesses: &[f64]) -> Result<Policy> {
        choice_distribution(&self.tau, attractivenesses)
    }
}

/// `P_i = tau_i A_i / sum_j tau_j A_j`.
pub fn choice_distribution(tau: &[f64], attractivenesses: &[f64]) -> Result<Policy> {
    if tau.len() != attractivenesses.len() {
        return Err(Error::Shape {
            expected: format!("{} attractiveness values", tau.len()),
            actual: attractivenesses.len().to_string(),
        });
    }
    if let Some(a) = attractivenesses.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::domain(format!("attractiveness must be >= 0, got {a}")));
    }
    let weights: Vec<f64> = tau.iter().zip(attractivenesses).map(|(t, a)| t * a).collect();
    Policy::from_weights(weights)
}
