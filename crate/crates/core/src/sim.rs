//! Batched sequential-decision swarm runs and ensembles of runs.
//!
//! Within an epoch, `batch_size` individuals decide one after another.
//! Each decision draws an arm, samples that arm's noisy attractiveness,
//! turns it into a stigmergic gain against the buffered pheromone, applies
//! the cross-learning step and then records the deposit. Explorers ignore
//! pheromone and pick by the current (noiseless) reward table, but their
//! deposits and policy updates count like everyone else's.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross_learning::{Policy, ReplayBuffer, SIMPLEX_TOLERANCE};
use crate::environment::{initial_policy, BanditSpec};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RngStream};
use crate::trajectory::Trajectory;

/// Decisions per epoch.
pub const DEFAULT_BATCH_SIZE: usize = 100;

/// How explorers are assigned within a batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorerMode {
    /// Each decision is an explorer with probability epsilon.
    #[default]
    PerDecision,
    /// A fixed, evenly interleaved subset of `floor(epsilon * batch)`
    /// individuals explores every epoch.
    FixedIdentity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    /// Fraction of pheromone-blind individuals.
    pub epsilon: f64,
    pub batch_size: usize,
    #[serde(default)]
    pub explorer_mode: ExplorerMode,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            batch_size: DEFAULT_BATCH_SIZE,
            explorer_mode: ExplorerMode::PerDecision,
        }
    }
}

impl PopulationConfig {
    pub fn new(epsilon: f64, batch_size: usize) -> Result<Self> {
        let p = Self {
            epsilon,
            batch_size,
            explorer_mode: ExplorerMode::PerDecision,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::domain(format!(
                "explorer fraction must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch size must be positive"));
        }
        Ok(())
    }

    fn is_fixed_explorer(&self, individual: usize) -> bool {
        let e = self.epsilon;
        ((individual + 1) as f64 * e).floor() > (individual as f64 * e).floor()
    }
}

/// Everything that determines a run apart from its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub env: BanditSpec,
    pub population: PopulationConfig,
    /// Replay-buffer capacity.
    pub memory_capacity: usize,
    pub q_deposit: f64,
    pub epochs: usize,
    pub master_seed: u64,
    /// Starting distribution; `None` means [`initial_policy`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_policy: Option<Policy>,
}

impl SimConfig {
    pub fn new(env: BanditSpec, population: PopulationConfig, memory_capacity: usize) -> Self {
        Self {
            env,
            population,
            memory_capacity,
            q_deposit: 0.02,
            epochs: 500,
            master_seed: 0,
            initial_policy: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        if self.memory_capacity == 0 {
            return Err(Error::domain("memory size must be positive"));
        }
        if !(self.q_deposit >= 0.0 && self.q_deposit.is_finite()) {
            return Err(Error::domain(format!("deposit Q must be >= 0, got {}", self.q_deposit)));
        }
        if let Some(p) = &self.initial_policy {
            if p.len() != self.env.num_arms() {
                return Err(Error::Shape {
                    expected: format!("initial policy over {} arms", self.env.num_arms()),
                    actual: p.len().to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn start_policy(&self) -> Result<Policy> {
        match &self.initial_policy {
            Some(p) => Ok(p.clone()),
            None => initial_policy(self.env.num_arms()),
        }
    }
}

/// Policy after every epoch of one run; row 0 is the starting policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub policy_history: Trajectory,
    pub run_seed: u64,
}

impl RunTrace {
    pub fn epochs(&self) -> usize {
        self.policy_history.rows().saturating_sub(1)
    }

    pub fn num_arms(&self) -> usize {
        self.policy_history.cols()
    }

    /// Probability of `arm` after `epoch` epochs.
    pub fn probability(&self, epoch: usize, arm: usize) -> f64 {
        self.policy_history.get(epoch, arm)
    }

    pub fn final_policy(&self) -> &[f64] {
        self.policy_history
            .last_row()
            .expect("trace always holds the starting row")
    }

    /// Worst `|sum - 1|` and smallest entry over all rows.
    pub fn simplex_extremes(&self) -> (f64, f64) {
        self.policy_history
            .iter_rows()
            .fold((0.0f64, f64::INFINITY), |(err, min), row| {
                let s: f64 = row.iter().sum();
                let m = row.iter().copied().fold(f64::INFINITY, f64::min);
                (err.max((s - 1.0).abs()), min.min(m))
            })
    }

    pub fn is_valid_simplex(&self) -> bool {
        let (err, min) = self.simplex_extremes();
        err <= SIMPLEX_TOLERANCE && min >= 0.0
    }
}

/// Reward-proportional choice for pheromone-blind explorers; zeros allowed.
pub fn explorer_distribution(rewards: &[f64]) -> Result<Policy> {
    Policy::from_weights(rewards.to_vec())
        .map_err(|_| Error::degenerate("explorers have no rewarding arm to head for"))
}

/// One batch of sequential decisions during `epoch`.
pub fn run_epoch(
    mut policy: Policy,
    mut buffer: ReplayBuffer,
    config: &SimConfig,
    epoch: usize,
    rng: &mut RngStream,
) -> Result<(Policy, ReplayBuffer)> {
    let k = config.env.num_arms();
    if policy.len() != k || buffer.num_arms() != k {
        return Err(Error::Shape {
            expected: format!("{k} arms"),
            actual: format!("policy {} / buffer {}", policy.len(), buffer.num_arms()),
        });
    }
    let rewards = config.env.rewards_at(epoch);
    let population = &config.population;
    let explorers = if population.epsilon > 0.0 {
        Some(explorer_distribution(rewards)?)
    } else {
        None
    };
    let q = config.q_deposit;

    for individual in 0..population.batch_size {
        let explorer = match (&explorers, population.explorer_mode) {
            (None, _) => None,
            (Some(e), ExplorerMode::PerDecision) => {
                (rng.uniform() < population.epsilon).then_some(e)
            }
            (Some(e), ExplorerMode::FixedIdentity) => {
                population.is_fixed_explorer(individual).then_some(e)
            }
        };
        let arm = match explorer {
            Some(e) => rng.categorical(e.probs()),
            None => rng.categorical(policy.probs()),
        };
        let sampled = config.env.sample_attractiveness(arm, epoch, rng)?;
        let deposit = q * sampled;
        let denominator = buffer.weighted_total(q, rewards) + deposit;
        let gain = if denominator > 0.0 {
            deposit / denominator
        } else {
            0.0
        };
        policy.reinforce_unchecked(arm, gain);
        buffer.push_unchecked(arm, sampled);
    }
    Ok((policy, buffer))
}

/// Full run of `config.epochs` epochs from the starting policy.
pub fn run_experiment(config: &SimConfig, run_seed: u64) -> Result<RunTrace> {
    config.validate()?;
    let k = config.env.num_arms();
    let mut rng = RngStream::from_seed(run_seed);
    let mut policy = config.start_policy()?;
    let mut buffer = ReplayBuffer::new(config.memory_capacity, k)?;
    let mut history = Trajectory::with_capacity(k, config.epochs + 1);
    history.push_row(policy.probs())?;
    for epoch in 0..config.epochs {
        (policy, buffer) = run_epoch(policy, buffer, config, epoch, &mut rng)?;
        if !policy.is_valid() {
            return Err(Error::degenerate(format!(
                "policy left the simplex after epoch {epoch}: sum error {:e}, min {:e}",
                policy.simplex_error(),
                policy.min()
            )));
        }
        history.push_row(policy.probs())?;
    }
    Ok(RunTrace {
        policy_history: history,
        run_seed,
    })
}

/// Seed of run `index` under `master_seed`.
pub fn run_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, &[index as u64])
}

/// `num_runs` independent runs, ordered by index whatever the thread count.
pub fn run_ensemble(config: &SimConfig, num_runs: usize) -> Result<Vec<RunTrace>> {
    if num_runs == 0 {
        return Err(Error::domain("an ensemble needs at least one run"));
    }
    config.validate()?;
    (0..num_runs)
        .into_par_iter()
        .map(|i| run_experiment(config, run_seed(config.master_seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::DYNAMIC_REWARD;

    fn dynamic(epsilon: f64, noise: f64, epochs: usize) -> SimConfig {
        let env = BanditSpec::dynamic_three_arm(100, DYNAMIC_REWARD, noise).unwrap();
        let mut c = SimConfig::new(env, PopulationConfig::new(epsilon, 100).unwrap(), 350);
        c.epochs = epochs;
        c
    }

    #[test]
    fn zero_deposit_freezes_policy() {
        let mut c = dynamic(0.0, 0.1, 20);
        c.q_deposit = 0.0;
        let t = run_experiment(&c, 5).unwrap();
        for row in t.policy_history.iter_rows() {
            assert_eq!(row, &[0.9, 0.05, 0.05]);
        }
    }

    #[test]
    fn all_explorers_head_for_rewarding_arm() {
        let c = dynamic(1.0, 0.0, 50);
        let t = run_experiment(&c, 9).unwrap();
        for e in 1..=50 {
            assert!(t.probability(e, 1) > t.probability(e - 1, 1));
        }
    }

    #[test]
    fn zero_epochs_is_initial_row() {
        let t = run_experiment(&dynamic(0.0, 0.1, 0), 1).unwrap();
        assert_eq!(t.policy_history.rows(), 1);
        assert_eq!(t.final_policy(), &[0.9, 0.05, 0.05]);
    }

    #[test]
    fn same_seed_same_trace() {
        let c = dynamic(0.1, 0.1, 30);
        assert_eq!(run_experiment(&c, 3).unwrap(), run_experiment(&c, 3).unwrap());
        assert_ne!(run_experiment(&c, 3).unwrap(), run_experiment(&c, 4).unwrap());
    }

    #[test]
    fn singleton_ensemble_uses_derived_seed() {
        let c = dynamic(0.1, 0.1, 10);
        let e = run_ensemble(&c, 1).unwrap();
        assert_eq!(e, vec![run_experiment(&c, run_seed(c.master_seed, 0)).unwrap()]);
    }

    #[test]
    fn ensemble_independent_of_thread_count() {
        let c = dynamic(0.05, 0.1, 20);
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        let a = pool(1).install(|| run_ensemble(&c, 12).unwrap());
        let b = pool(4).install(|| run_ensemble(&c, 12).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn single_good_arm_is_monotone() {
        let env = BanditSpec::stateless(vec![0.0, 1.5, 0.0], 0.0).unwrap();
        let mut c = SimConfig::new(env, PopulationConfig::default(), 350);
        c.epochs = 100;
        let t = run_experiment(&c, 21).unwrap();
        for e in 1..=100 {
            assert!(t.probability(e, 1) >= t.probability(e - 1, 1));
        }
        assert!(t.is_valid_simplex());
    }

    #[test]
    fn fixed_identity_explorer_count() {
        let p = PopulationConfig {
            epsilon: 0.1,
            batch_size: 100,
            explorer_mode: ExplorerMode::FixedIdentity,
        };
        assert_eq!((0..100).filter(|&i| p.is_fixed_explorer(i)).count(), 10);
        let mut c = dynamic(0.1, 0.1, 200);
        c.population = p;
        let t = run_experiment(&c, 2).unwrap();
        assert!(t.probability(200, 2) > 0.9);
    }

    #[test]
    fn explorer_distribution_degenerate() {
        assert!(matches!(
            explorer_distribution(&[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = dynamic(0.0, 0.1, 10);
        c.memory_capacity = 0;
        assert!(run_experiment(&c, 0).is_err());
        let mut c = dynamic(0.0, 0.1, 10);
        c.initial_policy = Some(Policy::uniform(2).unwrap());
        assert!(run_experiment(&c, 0).is_err());
        assert!(PopulationConfig::new(1.5, 100).is_err());
        assert!(PopulationConfig::new(0.1, 0).is_err());
        assert!(run_ensemble(&dynamic(0.0, 0.1, 1), 0).is_err());
    }
}
