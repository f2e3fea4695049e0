//! Differential evolution (DE/rand/1/bin) and the occupancy-trajectory fit
//! of the attractiveness sigmoid and deposit quantum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foraging::SigmoidParams;
use crate::metrics::mse;
use crate::rng::RngStream;
use crate::scenarios::StaticValidation;
use crate::sim::run_ensemble;
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower <= self.upper) {
            return Err(Error::domain(format!(
                "invalid bounds [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }

    /// Fold `x` back into the interval by mirror reflection at the bounds.
    pub fn reflect(&self, x: f64) -> f64 {
        let (lo, hi) = (self.lower, self.upper);
        let width = hi - lo;
        if width == 0.0 {
            return lo;
        }
        if (lo..=hi).contains(&x) {
            return x;
        }
        let mut y = (x - lo).rem_euclid(2.0 * width);
        if y > width {
            y = 2.0 * width - y;
        }
        (lo + y).clamp(lo, hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    /// Population size; `None` means 15 per dimension.
    pub population: Option<usize>,
    /// Differential weight F.
    pub differential_weight: f64,
    /// Crossover rate CR.
    pub crossover_rate: f64,
    pub max_generations: usize,
    pub seed: u64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self {
            population: None,
            differential_weight: 0.8,
            crossover_rate: 0.9,
            max_generations: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after initialisation and after every generation.
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
}

fn evaluate<F>(candidates: &[Vec<f64>], objective: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    candidates
        .par_iter()
        .map(|c| {
            let f = objective(c);
            if f.is_finite() {
                f
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

fn best_index(fitness: &[f64]) -> usize {
    fitness
        .iter()
        .enumerate()
        .fold(0, |best, (i, f)| if *f < fitness[best] { i } else { best })
}

/// Minimise `objective` over the box `bounds`.
///
/// Non-finite objective values count as `+inf`. Trials for a generation are
/// built sequentially from the seeded stream, evaluated in parallel, and
/// then selected greedily (ties go to the trial), so the result depends only
/// on the inputs. Stops early once the population's fitness spread is at
/// most `convergence_tol`.
pub fn differential_evolution<F>(
    bounds: &[Bounds],
    params: &DeParams,
    convergence_tol: f64,
    objective: F,
) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if bounds.is_empty() {
        return Err(Error::domain("nothing to optimise"));
    }
    for b in bounds {
        b.validate()?;
    }
    let dim = bounds.len();
    let np = params.population.unwrap_or(15 * dim);
    if np < 4 {
        return Err(Error::domain(format!("DE population must be >= 4, got {np}")));
    }
    if !(params.differential_weight > 0.0 && params.differential_weight <= 2.0) {
        return Err(Error::domain("differential weight must lie in (0, 2]"));
    }
    if !(0.0..=1.0).contains(&params.crossover_rate) {
        return Err(Error::domain("crossover rate must lie in [0, 1]"));
    }

    let mut rng = RngStream::derive(params.seed, &[0xDE]);
    let mut population: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|b| b.reflect(b.lower + rng.uniform() * (b.upper - b.lower)))
                .collect()
        })
        .collect();
    let mut fitness = evaluate(&population, &objective);
    let mut evaluations = np;
    let mut history = vec![fitness[best_index(&fitness)]];
    let mut generations = 0;

    let spread = |f: &[f64]| {
        let (lo, hi) = f
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
        hi - lo
    };

    while generations < params.max_generations && !(spread(&fitness) <= convergence_tol) {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = |exclude: &[usize]| loop {
                    let j = rng.index(np);
                    if !exclude.contains(&j) {
                        return j;
                    }
                };
                let a = pick(&[i]);
                let b = pick(&[i, a]);
                let c = pick(&[i, a, b]);
                let forced = rng.index(dim);
                (0..dim)
                    .map(|d| {
                        if d == forced || rng.uniform() < params.crossover_rate {
                            let v = population[a][d]
                                + params.differential_weight
                                    * (population[b][d] - population[c][d]);
                            bounds[d].reflect(v)
                        } else {
                            population[i][d]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fitness = evaluate(&trials, &objective);
        evaluations += np;
        for (i, (trial, f)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if f <= fitness[i] {
                population[i] = trial;
                fitness[i] = f;
            }
        }
        generations += 1;
        history.push(fitness[best_index(&fitness)]);
    }

    let best = best_index(&fitness);
    Ok(DeResult {
        best: population[best].clone(),
        best_fitness: fitness[best],
        history,
        generations,
        evaluations,
    })
}

/// Model parameters recovered by the occupancy fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub h: f64,
    pub k: f64,
    pub d_attract: f64,
    pub q_deposit: f64,
}

impl FitParams {
    pub const PUBLISHED: FitParams = FitParams {
        h: 51.5,
        k: 0.29,
        d_attract: 0.003,
        q_deposit: 0.02,
    };

    fn from_slice(x: &[f64]) -> Self {
        Self {
            h: x[0],
            k: x[1],
            d_attract: x[2],
            q_deposit: x[3],
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.h, self.k, self.d_attract, self.q_deposit]
    }

    /// Largest `|self - truth| / |truth|` over the four parameters.
    pub fn max_relative_error(&self, truth: &FitParams) -> f64 {
        self.as_array()
            .iter()
            .zip(truth.as_array())
            .map(|(x, t)| ((x - t) / t).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub h: Bounds,
    pub k: Bounds,
    pub d_attract: Bounds,
    pub q_deposit: Bounds,
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            h: Bounds::new(30.0, 80.0),
            k: Bounds::new(0.15, 0.45),
            d_attract: Bounds::new(0.001, 0.01),
            q_deposit: Bounds::new(0.001, 0.1),
        }
    }
}

impl FitBounds {
    pub fn as_array(&self) -> [Bounds; 4] {
        [self.h, self.k, self.d_attract, self.q_deposit]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub bounds: FitBounds,
    /// Mean occupancy, one row per epoch (row 0 is the release).
    pub target: Trajectory,
    /// Patch layout, memory, population and horizon; its sigmoid and deposit
    /// are the quantities being fitted.
    pub template: StaticValidation,
    /// Runs averaged per fitness evaluation.
    pub runs_per_eval: usize,
    /// Master seed of the simulated ensembles (shared by every candidate).
    pub sim_seed: u64,
    pub de: DeParams,
    pub convergence_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub params: FitParams,
    pub fitness: f64,
    pub history: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
}

/// Mean occupancy of `runs` runs of `template` under `params`.
pub fn simulate_occupancy(
    template: &StaticValidation,
    params: &FitParams,
    runs: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut scenario = template.clone();
    scenario.sigmoid = SigmoidParams::new(params.h, params.k, params.d_attract)?;
    scenario.q_deposit = params.q_deposit;
    let traces = run_ensemble(&scenario.sim_config(seed)?, runs)?;
    Trajectory::mean_of(traces.iter().map(|t| &t.policy_history))
}

/// Fit sigmoid parameters and deposit quantum to `spec.target`.
///
/// Simulation noise is switched off so each candidate's fitness is a fixed
/// function of its parameters.
pub fn fit_de(spec: &FitSpec) -> Result<FitResult> {
    if spec.runs_per_eval == 0 {
        return Err(Error::domain("runs per evaluation must be positive"));
    }
    let mut template = spec.template.clone();
    template.noise_std = 0.0;
    let expected = (template.epochs + 1, template.densities.len() + 1);
    if spec.target.shape() != expected {
        return Err(Error::Shape {
            expected: format!("{expected:?} target"),
            actual: format!("{:?}", spec.target.shape()),
        });
    }
    let objective = |x: &[f64]| {
        simulate_occupancy(&template, &FitParams::from_slice(x), spec.runs_per_eval, spec.sim_seed)
            .and_then(|sim| mse(&sim, &spec.target))
            .unwrap_or(f64::INFINITY)
    };
    let result = differential_evolution(
        &spec.bounds.as_array(),
        &spec.de,
        spec.convergence_tol,
        objective,
    )?;
    Ok(FitResult {
        params: FitParams::from_slice(&result.best),
        fitness: result.best_fitness,
        history: result.history,
        generations: result.generations,
        evaluations: result.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 1.0).powi(2)).sum()
    }

    #[test]
    fn reflection_stays_inside() {
        let b = Bounds::new(0.0, 1.0);
        assert_eq!(b.reflect(0.5), 0.5);
        assert!((b.reflect(1.25) - 0.75).abs() < 1e-15);
        assert!((b.reflect(-0.25) - 0.25).abs() < 1e-15);
        assert!((b.reflect(2.5) - 0.5).abs() < 1e-15);
        assert_eq!(Bounds::new(3.0, 3.0).reflect(17.0), 3.0);
    }

    #[test]
    fn minimises_sphere() {
        let bounds = [Bounds::new(-5.0, 5.0); 3];
        let r = differential_evolution(&bounds, &DeParams::default(), 0.0, sphere).unwrap();
        assert!(r.best_fitness < 1e-8, "{r:?}");
    }

    #[test]
    fn history_never_increases() {
        let bounds = [Bounds::new(-5.0, 5.0); 2];
        let params = DeParams {
            max_generations: 50,
            ..Default::default()
        };
        let r = differential_evolution(&bounds, &params, 0.0, |x| {
            x[0].sin() * 3.0 + (x[1] * 2.0).cos() + 0.1 * x[0] * x[0]
        })
        .unwrap();
        assert_eq!(r.history.len(), 51);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn collapsed_box_returns_the_point() {
        let bounds = [Bounds::new(2.0, 2.0), Bounds::new(-1.0, -1.0)];
        let r = differential_evolution(&bounds, &DeParams::default(), 0.0, sphere).unwrap();
        assert_eq!(r.best, vec![2.0, -1.0]);
        assert_eq!(r.best_fitness, sphere(&[2.0, -1.0]));
        assert_eq!(r.generations, 0);
    }

    #[test]
    fn non_finite_fitness_is_infinite_not_fatal() {
        let bounds = [Bounds::new(-1.0, 1.0)];
        let r = differential_evolution(&bounds, &DeParams::default(), 0.0, |x| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                x[0]
            }
        })
        .unwrap();
        assert!(r.best[0] >= 0.0 && r.best_fitness < 1e-6);
    }

    #[test]
    fn deterministic() {
        let bounds = [Bounds::new(-5.0, 5.0); 2];
        let p = DeParams {
            max_generations: 30,
            seed: 9,
            ..Default::default()
        };
        let a = differential_evolution(&bounds, &p, 0.0, sphere).unwrap();
        let b = differential_evolution(&bounds, &p, 0.0, sphere).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_setup() {
        let p = DeParams::default();
        assert!(differential_evolution(&[Bounds::new(1.0, 0.0)], &p, 0.0, sphere).is_err());
        assert!(differential_evolution(&[], &p, 0.0, sphere).is_err());
        let small = DeParams {
            population: Some(3),
            ..p
        };
        assert!(differential_evolution(&[Bounds::new(0.0, 1.0)], &small, 0.0, sphere).is_err());
    }

    #[test]
    fn fit_rejects_wrong_target_shape() {
        let spec = FitSpec {
            bounds: FitBounds::default(),
            target: Trajectory::from_rows(&[vec![0.2; 5]]).unwrap(),
            template: StaticValidation {
                epochs: 3,
                ..Default::default()
            },
            runs_per_eval: 1,
            sim_seed: 0,
            de: DeParams::default(),
            convergence_tol: 0.0,
        };
        assert!(matches!(fit_de(&spec), Err(Error::Shape { .. })));
    }

    #[test]
    fn collapsed_fit_echoes_point() {
        let template = StaticValidation {
            epochs: 5,
            noise_std: 0.0,
            ..Default::default()
        };
        let truth = FitParams::PUBLISHED;
        let target = simulate_occupancy(&template, &truth, 2, 3).unwrap();
        let pin = |v: f64| Bounds::new(v, v);
        let spec = FitSpec {
            bounds: FitBounds {
                h: pin(truth.h),
                k: pin(truth.k),
                d_attract: pin(truth.d_attract),
                q_deposit: pin(truth.q_deposit),
            },
            target,
            template,
            runs_per_eval: 2,
            sim_seed: 3,
            de: DeParams::default(),
            convergence_tol: 0.0,
        };
        let r = fit_de(&spec).unwrap();
        assert_eq!(r.params, truth);
        assert_eq!(r.fitness, 0.0);
    }
}
