//! Cross-learning on the probability simplex and its stigmergic reading.
//!
//! A swarm distribution over patches is treated as the policy of a single
//! learner. A commitment to patch `i` that deposits pheromone moves the
//! distribution exactly like a cross-learning step whose effective reward
//! is the stigmergic gain
//!
//! ```text
//! Q A_i / (rho * sum_j tau_j A_j + Q A_i)
//! ```
//!
//! computed from the pheromone state *before* the deposit.
//! [`verify_equivalence`] checks this numerically by running the explicit
//! pheromone field and the policy update side by side.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pheromone::PheromoneField;
use crate::rng::RngStream;

/// Maximum tolerated `|sum(p) - 1|` for a policy.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Drift above which an update renormalises.
const RENORMALISE_ABOVE: f64 = 1e-15;

/// Probability vector over arms (or patches).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Policy {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Policy {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Policy::new(v)
    }
}

impl From<Policy> for Vec<f64> {
    fn from(p: Policy) -> Self {
        p.probs
    }
}

impl Policy {
    /// Accepts entries in `[0, 1]` summing to one within `1e-9`, then
    /// renormalises away the residual.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("policy over zero arms"));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("probability outside [0, 1]: {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("probabilities sum to {sum}, not 1")));
        }
        let mut p = Self { probs };
        p.guard();
        Ok(p)
    }

    /// Normalise non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("policy over zero arms"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain(format!("weight must be finite and >= 0, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::degenerate(format!("weights sum to {total}")));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(num_arms: usize) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::domain("policy over zero arms"));
        }
        Ok(Self {
            probs: vec![1.0 / num_arms as f64; num_arms],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, arm: usize) -> f64 {
        self.probs[arm]
    }

    /// `|sum - 1|`.
    pub fn simplex_error(&self) -> f64 {
        (self.probs.iter().sum::<f64>() - 1.0).abs()
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_valid(&self) -> bool {
        self.simplex_error() <= SIMPLEX_TOLERANCE && self.min() >= 0.0
    }

    /// In-place cross-learning step; see [`cl_update`].
    pub fn reinforce(&mut self, chosen: usize, effective_reward: f64) -> Result<()> {
        if chosen >= self.probs.len() {
            return Err(Error::domain(format!(
                "arm {chosen} out of range for {} arms",
                self.probs.len()
            )));
        }
        if !(0.0..=1.0).contains(&effective_reward) {
            return Err(Error::domain(format!(
                "effective reward must lie in [0, 1], got {effective_reward}"
            )));
        }
        self.reinforce_unchecked(chosen, effective_reward);
        Ok(())
    }

    #[inline]
    pub(crate) fn reinforce_unchecked(&mut self, chosen: usize, r: f64) {
        for (a, p) in self.probs.iter_mut().enumerate() {
            if a == chosen {
                *p += r * (1.0 - *p);
            } else {
                *p -= r * *p;
            }
        }
        self.guard();
    }

    fn guard(&mut self) {
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > RENORMALISE_ABOVE {
            for p in &mut self.probs {
                *p /= sum;
            }
        }
    }
}

/// Cross-learning update after choosing `chosen` with reward already scaled
/// by the learning rate.
///
/// The chosen arm gains `r (1 - p)`; every other arm loses `r p`. Rewards
/// outside `[0, 1]` are rejected because they can leave the simplex.
pub fn cl_update(policy: &Policy, chosen: usize, effective_reward: f64) -> Result<Policy> {
    let mut next = policy.clone();
    next.reinforce(chosen, effective_reward)?;
    Ok(next)
}

/// Effective reward of a deposit on `chosen` given pre-deposit pheromone.
pub fn stigmergic_gain(
    attractivenesses: &[f64],
    tau: &[f64],
    rho: f64,
    q_deposit: f64,
    chosen: usize,
) -> Result<f64> {
    if attractivenesses.len() != tau.len() {
        return Err(Error::Shape {
            expected: format!("{} attractiveness values", tau.len()),
            actual: attractivenesses.len().to_string(),
        });
    }
    if chosen >= tau.len() {
        return Err(Error::domain(format!("patch index {chosen} out of range")));
    }
    let environment: f64 = tau.iter().zip(attractivenesses).map(|(t, a)| t * a).sum();
    let deposit = q_deposit * attractivenesses[chosen];
    let denominator = rho * environment + deposit;
    if !(denominator > 0.0) {
        return Err(Error::degenerate(
            "no pheromone-weighted attractiveness and no deposit",
        ));
    }
    Ok(deposit / denominator)
}

/// One remembered deposit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deposit {
    pub arm: usize,
    /// Attractiveness sampled when the deposit was made.
    pub attractiveness: f64,
}

/// Bounded FIFO of deposits standing in for environmental pheromone.
///
/// Eviction plays the role of evaporation: a deposit counts fully while in
/// the window and not at all once it falls out.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Deposit>,
    counts: Vec<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, num_arms: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::domain("memory size must be positive"));
        }
        if num_arms == 0 {
            return Err(Error::domain("replay buffer over zero arms"));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            counts: vec![0; num_arms],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Deposit> {
        self.entries.iter()
    }

    /// Deposits per arm currently in the window.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Append a deposit, returning the evicted oldest one if full.
    pub fn push(&mut self, arm: usize, attractiveness: f64) -> Result<Option<Deposit>> {
        if arm >= self.counts.len() {
            return Err(Error::domain(format!(
                "arm {arm} out of range for {} arms",
                self.counts.len()
            )));
        }
        Ok(self.push_unchecked(arm, attractiveness))
    }

    #[inline]
    pub(crate) fn push_unchecked(&mut self, arm: usize, attractiveness: f64) -> Option<Deposit> {
        let evicted = if self.entries.len() == self.capacity {
            let old = self.entries.pop_front();
            if let Some(d) = old {
                self.counts[d.arm] -= 1;
            }
            old
        } else {
            None
        };
        self.entries.push_back(Deposit {
            arm,
            attractiveness,
        });
        self.counts[arm] += 1;
        evicted
    }

    /// `sum_j (1 + Q c_j) A_j` without allocating the pheromone vector.
    #[inline]
    pub(crate) fn weighted_total(&self, q_deposit: f64, attractivenesses: &[f64]) -> f64 {
        self.counts
            .iter()
            .zip(attractivenesses)
            .map(|(&c, a)| (1.0 + q_deposit * c as f64) * a)
            .sum()
    }
}

/// Pheromone estimate from the buffer: `1 + Q * count_j` per arm.
///
/// The constant 1 is a baseline that is never evicted.
pub fn buffered_tau(buffer: &ReplayBuffer, num_arms: usize, q_deposit: f64) -> Result<Vec<f64>> {
    if num_arms != buffer.num_arms() {
        return Err(Error::Shape {
            expected: format!("{} arms", buffer.num_arms()),
            actual: num_arms.to_string(),
        });
    }
    Ok(buffer
        .counts
        .iter()
        .map(|&c| 1.0 + q_deposit * c as f64)
        .collect())
}

/// Replicator drift `p_a (q_a - sum_b p_b q_b)`.
pub fn replicator_rhs(policy: &Policy, expected_payoffs: &[f64]) -> Result<Vec<f64>> {
    if policy.len() != expected_payoffs.len() {
        return Err(Error::Shape {
            expected: format!("{} payoffs", policy.len()),
            actual: expected_payoffs.len().to_string(),
        });
    }
    let mean: f64 = policy
        .probs()
        .iter()
        .zip(expected_payoffs)
        .map(|(p, q)| p * q)
        .sum();
    Ok(policy
        .probs()
        .iter()
        .zip(expected_payoffs)
        .map(|(p, q)| p * (q - mean))
        .collect())
}

/// Monte-Carlo estimate of the one-step expected policy change.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftEstimate {
    /// `gain * replicator_rhs(policy, payoffs)`.
    pub analytic: Vec<f64>,
    pub empirical: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: usize,
}

impl DriftEstimate {
    /// Largest `|empirical - analytic| / std_error` over components.
    ///
    /// A component with zero standard error must match exactly.
    pub fn max_z(&self) -> f64 {
        self.empirical
            .iter()
            .zip(&self.analytic)
            .zip(&self.std_error)
            .map(|((e, a), s)| {
                let d = (e - a).abs();
                if *s > 0.0 {
                    d / s
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Sample `samples` independent single cross-learning steps from `policy`
/// with deterministic payoffs scaled by a constant `gain`, and compare the
/// mean change to the replicator drift.
pub fn estimate_drift(
    policy: &Policy,
    payoffs: &[f64],
    gain: f64,
    samples: usize,
    rng: &mut RngStream,
) -> Result<DriftEstimate> {
    if samples < 2 {
        return Err(Error::domain("drift estimate needs at least two samples"));
    }
    if let Some(q) = payoffs.iter().find(|q| !(0.0..=1.0).contains(&(**q * gain))) {
        return Err(Error::domain(format!(
            "gain * payoff must lie in [0, 1], payoff {q} with gain {gain}"
        )));
    }
    let rhs = replicator_rhs(policy, payoffs)?;
    let k = policy.len();
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    for _ in 0..samples {
        let arm = rng.categorical(policy.probs());
        let next = cl_update(policy, arm, gain * payoffs[arm])?;
        for a in 0..k {
            let d = next.get(a) - policy.get(a);
            sum[a] += d;
            sum_sq[a] += d * d;
        }
    }
    let n = samples as f64;
    let empirical: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error = sum_sq
        .iter()
        .zip(&empirical)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt())
        .collect();
    Ok(DriftEstimate {
        analytic: rhs.iter().map(|d| gain * d).collect(),
        empirical,
        std_error,
        samples,
    })
}

/// Deliberate defects for negative-control runs of the verifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    /// Policy path computes its gain from already-evaporated pheromone,
    /// applying `rho` one time too many.
    OffByOneRho,
}

/// Largest `|P_pheromone - P_policy|` over `steps` co-simulated commitments.
///
/// Path (a) steps an explicit [`PheromoneField`] from baseline and recomputes
/// the choice distribution; path (b) applies [`cl_update`] with the
/// [`stigmergic_gain`] of the same pre-step field. Both follow the choice
/// sequence drawn from path (a).
pub fn verify_equivalence(
    attractivenesses: &[f64],
    rho: f64,
    q_deposit: f64,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    verify_equivalence_with_fault(attractivenesses, rho, q_deposit, steps, seed, Fault::None)
}

pub fn verify_equivalence_with_fault(
    attractivenesses: &[f64],
    rho: f64,
    q_deposit: f64,
    steps: usize,
    seed: u64,
    fault: Fault,
) -> Result<f64> {
    if attractivenesses.len() < 2 {
        return Err(Error::domain("equivalence check needs at least two patches"));
    }
    if steps == 0 {
        return Err(Error::domain("equivalence check needs at least one step"));
    }
    let mut rng = RngStream::from_seed(seed);
    let mut field = PheromoneField::new(attractivenesses.len(), rho, q_deposit)?;
    let mut explicit = field.choice_distribution(attractivenesses)?;
    let mut learned = explicit.clone();
    let mut deviation: f64 = 0.0;

    for _ in 0..steps {
        let chosen = rng.categorical(explicit.probs());
        let gain = match fault {
            Fault::None => stigmergic_gain(attractivenesses, field.tau(), rho, q_deposit, chosen)?,
            Fault::OffByOneRho => {
                let evaporated: Vec<f64> = field.tau().iter().map(|t| rho * t).collect();
                stigmergic_gain(attractivenesses, &evaporated, rho, q_deposit, chosen)?
            }
        };
        learned.reinforce(chosen, gain)?;
        field.step_mut(chosen)?;
        explicit = field.choice_distribution(attractivenesses)?;
        for (a, b) in explicit.probs().iter().zip(learned.probs()) {
            deviation = deviation.max((a - b).abs());
        }
    }
    Ok(deviation)
}

/// Parameters of one randomly drawn equivalence configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceCase {
    pub attractivenesses: Vec<f64>,
    pub rho: f64,
    pub q_deposit: f64,
    pub seed: u64,
}

impl EquivalenceCase {
    /// Draw `M` in 2..=5, `A` in (0, 10], `rho` in [0, 1], `Q` in (0, 0.1].
    pub fn sample(rng: &mut RngStream) -> Self {
        let m = 2 + rng.index(4);
        let attractivenesses = (0..m).map(|_| 10.0 * (1.0 - rng.uniform())).collect();
        let rho = rng.uniform();
        let q_deposit = 0.1 * (1.0 - rng.uniform());
        Self {
            attractivenesses,
            rho,
            q_deposit,
            seed: rng.next_u64(),
        }
    }
}

/// Outcome of a batch of equivalence checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub configurations: usize,
    pub steps: usize,
    pub max_deviation: f64,
    pub worst_case: Option<EquivalenceCase>,
}

/// Run `configurations` random cases, each derived from `(seed, [index])`.
pub fn equivalence_suite(
    configurations: usize,
    steps: usize,
    seed: u64,
    fault: Fault,
) -> Result<EquivalenceReport> {
    use rayon::prelude::*;

    if configurations == 0 {
        return Err(Error::config("zero equivalence configurations requested"));
    }
    let results: Vec<(f64, EquivalenceCase)> = (0..configurations as u64)
        .into_par_iter()
        .map(|i| {
            let case = EquivalenceCase::sample(&mut RngStream::derive(seed, &[i]));
            let dev = verify_equivalence_with_fault(
                &case.attractivenesses,
                case.rho,
                case.q_deposit,
                steps,
                case.seed,
                fault,
            )?;
            Ok((dev, case))
        })
        .collect::<Result<_>>()?;
    let mut max_deviation = 0.0;
    let mut worst_case = None;
    for (dev, case) in results {
        if worst_case.is_none() || dev > max_deviation {
            max_deviation = dev;
            worst_case = Some(case);
        }
    }
    Ok(EquivalenceReport {
        configurations,
        steps,
        max_deviation,
        worst_case,
    })
}
