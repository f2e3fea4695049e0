//! Bandit environments: stateless, and two-state with a single switch.

use serde::{Deserialize, Serialize};

use crate::cross_learning::Policy;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Standard deviation of the additive reward noise.
pub const DEFAULT_NOISE_STD: f64 = 0.1;

/// Attractiveness of the rewarding arm in the dynamic setup.
pub const DYNAMIC_REWARD: f64 = 2.73;

/// Reward table that replaces the base table from `epoch` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSwitch {
    pub rewards: Vec<f64>,
    pub epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBandit", into = "RawBandit")]
pub struct BanditSpec {
    base_rewards: Vec<f64>,
    switch: Option<EnvironmentSwitch>,
    noise_std: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBandit {
    base_rewards: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    switch: Option<EnvironmentSwitch>,
    noise_std: f64,
}

impl TryFrom<RawBandit> for BanditSpec {
    type Error = Error;
    fn try_from(r: RawBandit) -> Result<Self> {
        let spec = BanditSpec::stateless(r.base_rewards, r.noise_std)?;
        match r.switch {
            Some(s) => spec.with_switch(s.rewards, s.epoch),
            None => Ok(spec),
        }
    }
}

impl From<BanditSpec> for RawBandit {
    fn from(b: BanditSpec) -> Self {
        RawBandit {
            base_rewards: b.base_rewards,
            switch: b.switch,
            noise_std: b.noise_std,
        }
    }
}

fn is_permutation(a: &[f64], b: &[f64]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a == b
}

impl BanditSpec {
    /// Rewards must be finite and non-negative with at least one positive
    /// entry, so the swarm always has somewhere to go.
    pub fn stateless(base_rewards: Vec<f64>, noise_std: f64) -> Result<Self> {
        if base_rewards.len() < 2 {
            return Err(Error::domain("a bandit needs at least two arms"));
        }
        if let Some(r) = base_rewards.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::domain(format!("reward must be finite and >= 0, got {r}")));
        }
        if !base_rewards.iter().any(|r| *r > 0.0) {
            return Err(Error::domain("at least one arm must have positive reward"));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::domain(format!("noise std must be >= 0, got {noise_std}")));
        }
        Ok(Self {
            base_rewards,
            switch: None,
            noise_std,
        })
    }

    /// Add a switch to `switched_rewards`, a permutation of the base table.
    pub fn with_switch(mut self, switched_rewards: Vec<f64>, epoch: usize) -> Result<Self> {
        if !is_permutation(&self.base_rewards, &switched_rewards) {
            return Err(Error::domain(
                "switched rewards must be a permutation of the base rewards",
            ));
        }
        self.switch = Some(EnvironmentSwitch {
            rewards: switched_rewards,
            epoch,
        });
        Ok(self)
    }

    /// Three arms; the rewarding arm moves from arm 1 to arm 2 at `delta`.
    pub fn dynamic_three_arm(delta: usize, reward: f64, noise_std: f64) -> Result<Self> {
        Self::stateless(vec![0.0, reward, 0.0], noise_std)?.with_switch(vec![0.0, 0.0, reward], delta)
    }

    pub fn num_arms(&self) -> usize {
        self.base_rewards.len()
    }

    pub fn base_rewards(&self) -> &[f64] {
        &self.base_rewards
    }

    pub fn switch(&self) -> Option<&EnvironmentSwitch> {
        self.switch.as_ref()
    }

    pub fn switch_epoch(&self) -> Option<usize> {
        self.switch.as_ref().map(|s| s.epoch)
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn with_noise(mut self, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::domain(format!("noise std must be >= 0, got {noise_std}")));
        }
        self.noise_std = noise_std;
        Ok(self)
    }

    /// Noiseless reward table in force during `epoch` (switch inclusive).
    pub fn rewards_at(&self, epoch: usize) -> &[f64] {
        match &self.switch {
            Some(s) if epoch >= s.epoch => &s.rewards,
            _ => &self.base_rewards,
        }
    }

    /// Noisy attractiveness of `arm`, clipped at zero.
    pub fn sample_attractiveness(&self, arm: usize, epoch: usize, rng: &mut RngStream) -> Result<f64> {
        let table = self.rewards_at(epoch);
        let mean = *table.get(arm).ok_or_else(|| {
            Error::domain(format!("arm {arm} out of range for {} arms", table.len()))
        })?;
        Ok(rng.normal(mean, self.noise_std).max(0.0))
    }
}

/// Starting distribution: 0.9 on the first arm, the rest shared equally.
pub fn initial_policy(num_arms: usize) -> Result<Policy> {
    if num_arms < 2 {
        return Err(Error::domain("initial policy needs at least two arms"));
    }
    let rest = 0.1 / (num_arms - 1) as f64;
    let mut probs = vec![rest; num_arms];
    probs[0] = 0.9;
    Policy::new(probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stateless_ignores_epoch() {
        let env = BanditSpec::stateless(vec![0.0, 1.0], 0.1).unwrap();
        assert_eq!(env.rewards_at(0), &[0.0, 1.0]);
        assert_eq!(env.rewards_at(10_000), &[0.0, 1.0]);
    }

    #[test]
    fn switch_is_inclusive() {
        let env = BanditSpec::dynamic_three_arm(100, DYNAMIC_REWARD, 0.1).unwrap();
        assert_eq!(env.rewards_at(99), &[0.0, 2.73, 0.0]);
        assert_eq!(env.rewards_at(100), &[0.0, 0.0, 2.73]);
        assert_eq!(env.rewards_at(499), &[0.0, 0.0, 2.73]);
    }

    #[test]
    fn switch_must_permute() {
        let env = BanditSpec::stateless(vec![0.0, 1.0, 0.0], 0.1).unwrap();
        assert!(env.clone().with_switch(vec![0.0, 0.0, 2.0], 5).is_err());
        assert!(env.with_switch(vec![1.0, 0.0, 0.0], 5).is_ok());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(BanditSpec::stateless(vec![1.0], 0.1).is_err());
        assert!(BanditSpec::stateless(vec![0.0, 0.0], 0.1).is_err());
        assert!(BanditSpec::stateless(vec![-1.0, 2.0], 0.1).is_err());
        assert!(BanditSpec::stateless(vec![1.0, 2.0], -0.1).is_err());
    }

    #[test]
    fn noiseless_samples_are_exact() {
        let env = BanditSpec::dynamic_three_arm(100, DYNAMIC_REWARD, 0.0).unwrap();
        let mut rng = RngStream::from_seed(0);
        assert_eq!(env.sample_attractiveness(1, 0, &mut rng).unwrap(), 2.73);
        assert_eq!(env.sample_attractiveness(0, 0, &mut rng).unwrap(), 0.0);
        assert_eq!(env.sample_attractiveness(2, 100, &mut rng).unwrap(), 2.73);
        assert!(env.sample_attractiveness(3, 0, &mut rng).is_err());
    }

    #[test]
    fn clipped_noise_mean_matches_half_gaussian() {
        let env = BanditSpec::stateless(vec![0.0, 1.0], 0.1).unwrap();
        let mut rng = RngStream::derive(77, &[0]);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = env.sample_attractiveness(0, 0, &mut rng).unwrap();
            assert!(x >= 0.0);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        // sigma / sqrt(2 pi)
        let expected = 0.039_894_228_040_143_27;
        assert!((mean - expected).abs() <= 4.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn initial_policy_examples() {
        assert_eq!(initial_policy(3).unwrap().probs(), &[0.9, 0.05, 0.05]);
        let p = initial_policy(2).unwrap();
        assert!((p.get(0) - 0.9).abs() < 1e-15 && (p.get(1) - 0.1).abs() < 1e-15);
        assert!(initial_policy(7).unwrap().simplex_error() <= 1e-12);
        assert!(initial_policy(1).is_err());
    }

    #[test]
    fn serde_enforces_permutation() {
        let bad = r#"{"base_rewards":[0.0,1.0],"switch":{"rewards":[0.0,2.0],"epoch":3},"noise_std":0.1}"#;
        assert!(serde_json::from_str::<BanditSpec>(bad).is_err());
    }
}
