//! Ready-made configurations for the static and dynamic foraging setups.

use serde::{Deserialize, Serialize};

use crate::cross_learning::Policy;
use crate::environment::{BanditSpec, DEFAULT_NOISE_STD, DYNAMIC_REWARD};
use crate::error::{Error, Result};
use crate::foraging::{attractiveness_vector, ifd_distribution, SigmoidParams};
use crate::sim::{PopulationConfig, SimConfig};

/// OD of the four validation patches.
pub const VALIDATION_DENSITIES: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Four patches plus an "outside" pseudo-patch of zero density, with the
/// swarm released outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticValidation {
    pub sigmoid: SigmoidParams,
    pub densities: Vec<f64>,
    pub q_deposit: f64,
    pub memory_capacity: usize,
    pub epochs: usize,
    pub population: PopulationConfig,
    pub noise_std: f64,
    /// Initial probability of being outside; the rest is spread evenly.
    pub outside_share: f64,
}

impl Default for StaticValidation {
    fn default() -> Self {
        Self {
            sigmoid: SigmoidParams::OP50,
            densities: VALIDATION_DENSITIES.to_vec(),
            q_deposit: 0.02,
            memory_capacity: 350,
            epochs: 120,
            population: PopulationConfig::default(),
            noise_std: DEFAULT_NOISE_STD,
            outside_share: 0.96,
        }
    }
}

impl StaticValidation {
    /// Densities with the outside pseudo-patch appended last.
    pub fn arm_densities(&self) -> Vec<f64> {
        let mut d = self.densities.clone();
        d.push(0.0);
        d
    }

    pub fn attractivenesses(&self) -> Result<Vec<f64>> {
        attractiveness_vector(&self.sigmoid, &self.arm_densities())
    }

    /// Pheromone-free reference distribution over patches and outside.
    pub fn ifd_reference(&self) -> Result<Policy> {
        ifd_distribution(&self.attractivenesses()?)
    }

    pub fn start_policy(&self) -> Result<Policy> {
        if self.densities.is_empty() {
            return Err(Error::domain("validation needs at least one patch"));
        }
        if !(0.0..=1.0).contains(&self.outside_share) {
            return Err(Error::domain("outside share must lie in [0, 1]"));
        }
        let each = (1.0 - self.outside_share) / self.densities.len() as f64;
        let mut p = vec![each; self.densities.len()];
        p.push(self.outside_share);
        Policy::new(p)
    }

    pub fn sim_config(&self, master_seed: u64) -> Result<SimConfig> {
        let env = BanditSpec::stateless(self.attractivenesses()?, self.noise_std)?;
        let config = SimConfig {
            env,
            population: self.population,
            memory_capacity: self.memory_capacity,
            q_deposit: self.q_deposit,
            epochs: self.epochs,
            master_seed,
            initial_policy: Some(self.start_policy()?),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Three arms, reward moving from the middle arm to the last at `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicAdaptation {
    pub delta: usize,
    pub epochs: usize,
    pub memory_capacity: usize,
    pub epsilon: f64,
    pub q_deposit: f64,
    pub reward: f64,
    pub noise_std: f64,
    pub batch_size: usize,
}

impl Default for DynamicAdaptation {
    fn default() -> Self {
        Self {
            delta: 100,
            epochs: 500,
            memory_capacity: 350,
            epsilon: 0.0,
            q_deposit: 0.02,
            reward: DYNAMIC_REWARD,
            noise_std: DEFAULT_NOISE_STD,
            batch_size: 100,
        }
    }
}

impl DynamicAdaptation {
    /// Arm that becomes rewarding after the switch.
    pub const TARGET_ARM: usize = 2;

    pub fn sim_config(&self, master_seed: u64) -> Result<SimConfig> {
        if self.delta >= self.epochs {
            return Err(Error::config(format!(
                "switch epoch {} must precede the horizon {}",
                self.delta, self.epochs
            )));
        }
        let env = BanditSpec::dynamic_three_arm(self.delta, self.reward, self.noise_std)?;
        let config = SimConfig {
            env,
            population: PopulationConfig::new(self.epsilon, self.batch_size)?,
            memory_capacity: self.memory_capacity,
            q_deposit: self.q_deposit,
            epochs: self.epochs,
            master_seed,
            initial_policy: None,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_layout() {
        let v = StaticValidation::default();
        assert_eq!(v.arm_densities(), vec![0.2, 0.1, 0.05, 0.025, 0.0]);
        let p = v.start_policy().unwrap();
        for (g, e) in p.probs().iter().zip([0.01, 0.01, 0.01, 0.01, 0.96]) {
            assert!((g - e).abs() < 1e-15);
        }
        let c = v.sim_config(1).unwrap();
        assert_eq!(c.env.num_arms(), 5);
    }

    #[test]
    fn ifd_reference_five_arms() {
        let r = StaticValidation::default().ifd_reference().unwrap();
        let expected = [
            0.300_171_402_658_762_3,
            0.259_085_684_433_053_4,
            0.222_997_400_950_100_45,
            0.191_646_127_805_338_63,
            0.026_099_384_152_745_176,
        ];
        for (g, e) in r.probs().iter().zip(expected) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn delta_must_precede_horizon() {
        let d = DynamicAdaptation {
            delta: 500,
            ..Default::default()
        };
        assert!(matches!(d.sim_config(0), Err(Error::Config(_))));
    }
}
