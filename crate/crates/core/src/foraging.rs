//! Intrinsic patch attractiveness and the pheromone-free distribution of
//! foragers over patches.

use serde::{Deserialize, Serialize};

use crate::cross_learning::Policy;
use crate::error::{Error, Result};

/// Parameters of the sigmoid that maps bacterial density to attractiveness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSigmoid", into = "RawSigmoid")]
pub struct SigmoidParams {
    h: f64,
    k: f64,
    d_attract: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSigmoid {
    h: f64,
    k: f64,
    d_attract: f64,
}

impl TryFrom<RawSigmoid> for SigmoidParams {
    type Error = Error;
    fn try_from(r: RawSigmoid) -> Result<Self> {
        SigmoidParams::new(r.h, r.k, r.d_attract)
    }
}

impl From<SigmoidParams> for RawSigmoid {
    fn from(p: SigmoidParams) -> Self {
        RawSigmoid {
            h: p.h,
            k: p.k,
            d_attract: p.d_attract,
        }
    }
}

impl SigmoidParams {
    /// Fitted values for *E. coli* OP50.
    pub const OP50: SigmoidParams = SigmoidParams {
        h: 51.5,
        k: 0.29,
        d_attract: 0.003,
    };

    /// `h` is the max/min dynamic range (> 1), `k` the steepness (> 0) and
    /// `d_attract` the reference density in OD units (> 0).
    pub fn new(h: f64, k: f64, d_attract: f64) -> Result<Self> {
        if !(h.is_finite() && h > 1.0) {
            return Err(Error::domain(format!("dynamic range H must be > 1, got {h}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::domain(format!("steepness k must be > 0, got {k}")));
        }
        if !(d_attract.is_finite() && d_attract > 0.0) {
            return Err(Error::domain(format!(
                "reference density must be > 0, got {d_attract}"
            )));
        }
        Ok(Self { h, k, d_attract })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn d_attract(&self) -> f64 {
        self.d_attract
    }
}

impl Default for SigmoidParams {
    fn default() -> Self {
        Self::OP50
    }
}

/// Attractiveness of a patch of bacterial density `density` (OD units).
///
/// `sqrt(H) * (1 + 4 x) / (H + 4 x)` with `x = (D / D_attract)^k`; ranges
/// from `1/sqrt(H)` at zero density up to `sqrt(H)` asymptotically.
pub fn attractiveness(params: &SigmoidParams, density: f64) -> Result<f64> {
    if !(density >= 0.0) || density.is_infinite() {
        return Err(Error::domain(format!(
            "density must be finite and >= 0, got {density}"
        )));
    }
    let x = if density == 0.0 {
        0.0
    } else {
        4.0 * (params.k * (density / params.d_attract).ln()).exp()
    };
    Ok(params.h.sqrt() * (1.0 + x) / (params.h + x))
}

/// A food patch together with its cached attractiveness.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchSpec {
    density: f64,
    attractiveness: f64,
}

impl PatchSpec {
    pub fn new(params: &SigmoidParams, density: f64) -> Result<Self> {
        Ok(Self {
            density,
            attractiveness: attractiveness(params, density)?,
        })
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn attractiveness(&self) -> f64 {
        self.attractiveness
    }

    /// Recompute the cached value under new sigmoid parameters.
    pub fn reparameterise(&mut self, params: &SigmoidParams) {
        self.attractiveness =
            attractiveness(params, self.density).expect("density validated at construction");
    }
}

/// Attractiveness of every density under one parameter set.
pub fn attractiveness_vector(params: &SigmoidParams, densities: &[f64]) -> Result<Vec<f64>> {
    densities
        .iter()
        .map(|&d| attractiveness(params, d))
        .collect()
}

/// Ideal free distribution: occupancy proportional to attractiveness.
pub fn ifd_distribution(attractivenesses: &[f64]) -> Result<Policy> {
    if attractivenesses.is_empty() {
        return Err(Error::domain("ideal free distribution over zero patches"));
    }
    if let Some(bad) = attractivenesses.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::domain(format!(
            "attractiveness must be finite and > 0, got {bad}"
        )));
    }
    let total: f64 = attractivenesses.iter().sum();
    Policy::from_weights(attractivenesses.iter().map(|a| a / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op50() -> SigmoidParams {
        SigmoidParams::OP50
    }

    // Direct evaluation through powf; the implementation goes through exp/ln.
    fn oracle(h: f64, k: f64, da: f64, d: f64) -> f64 {
        let x = 4.0 * (d / da).powf(k);
        h.sqrt() * (1.0 + x) / (h + x)
    }

    #[test]
    fn zero_density_is_floor() {
        let a = attractiveness(&op50(), 0.0).unwrap();
        assert!((a - 0.139_346_602_858_323_53).abs() < 1e-15);
        assert!((a - 1.0 / 51.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reference_density() {
        let a = attractiveness(&op50(), 0.003).unwrap();
        assert!((a - 0.646_518_022_270_600_2).abs() < 1e-14);
        assert!((a - oracle(51.5, 0.29, 0.003, 0.003)).abs() < 1e-14);
    }

    #[test]
    fn approaches_sqrt_h() {
        let a = attractiveness(&op50(), 1e12).unwrap();
        let top = 51.5f64.sqrt();
        assert!(a < top);
        assert!(top - a < 0.01, "{a}");
    }

    #[test]
    fn dynamic_range_is_h() {
        let p = SigmoidParams::new(12.0, 0.5, 0.01).unwrap();
        let lo = attractiveness(&p, 0.0).unwrap();
        assert!((p.h().sqrt() / lo - p.h()).abs() < 1e-12);
    }

    #[test]
    fn matches_oracle_on_grid() {
        for &d in &[1e-6, 0.001, 0.025, 0.05, 0.1, 0.2, 1.0, 10.0] {
            let a = attractiveness(&op50(), d).unwrap();
            assert!((a - oracle(51.5, 0.29, 0.003, d)).abs() < 1e-13, "{d}");
        }
    }

    #[test]
    fn od_one_differs_from_environment_constant() {
        // The dynamic setup uses 2.73 as a given reward; the sigmoid gives ~2.216.
        let a = attractiveness(&op50(), 1.0).unwrap();
        assert!((a - 2.216_121_028_932_947).abs() < 1e-13);
    }

    #[test]
    fn negative_density_rejected() {
        assert!(matches!(attractiveness(&op50(), -0.1), Err(Error::Domain(_))));
        assert!(attractiveness(&op50(), f64::NAN).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SigmoidParams::new(1.0, 0.29, 0.003).is_err());
        assert!(SigmoidParams::new(51.5, 0.0, 0.003).is_err());
        assert!(SigmoidParams::new(51.5, 0.29, 0.0).is_err());
    }

    #[test]
    fn patch_cache_follows_params() {
        let mut p = PatchSpec::new(&op50(), 0.1).unwrap();
        let other = SigmoidParams::new(20.0, 0.4, 0.01).unwrap();
        p.reparameterise(&other);
        assert_eq!(p.attractiveness(), attractiveness(&other, 0.1).unwrap());
    }

    #[test]
    fn ifd_examples() {
        let u = ifd_distribution(&[1.0; 4]).unwrap();
        assert_eq!(u.probs(), &[0.25; 4]);
        let p = ifd_distribution(&[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn ifd_of_validation_densities() {
        let a = attractiveness_vector(&op50(), &[0.2, 0.1, 0.05, 0.025]).unwrap();
        let p = ifd_distribution(&a).unwrap();
        let expected = [
            0.308_215_641_077_118_65,
            0.266_028_874_216_964_3,
            0.228_973_467_437_538_86,
            0.196_782_017_268_378_17,
        ];
        for (got, want) in p.probs().iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn ifd_rejects_bad_input() {
        assert!(ifd_distribution(&[]).is_err());
        assert!(ifd_distribution(&[1.0, 0.0]).is_err());
        assert!(ifd_distribution(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn single_patch_gets_everything() {
        assert_eq!(ifd_distribution(&[3.0]).unwrap().probs(), &[1.0]);
    }
}
