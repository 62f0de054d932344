//! Controllable synthetic environment: each action's reward probability is a
//! sum of isotropic Gaussian bumps over `[0,1]^d`, clipped to `[0,1]`.
//! Complexity is tuned via the state dimension, the factor count, and the
//! factor widths.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ActionId, Context, Reward};

/// One isotropic Gaussian bump contributing to an action's reward surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFactor {
    pub mu: Vec<f64>,
    pub sigma: f64,
    pub weight: f64,
}

/// Full description of a synthetic environment. Immutable after creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEnvSpec {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub base_prob: f64,
    pub noise_std: f64,
    pub seed: u64,
    /// `factors[action]` lists that action's Gaussian factors.
    pub factors: Vec<Vec<GaussianFactor>>,
}

impl SyntheticEnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.k < 1 {
            return Err(Error::Config("d and K must be >= 1".into()));
        }
        if self.factors.len() != self.k {
            return Err(Error::Config(format!(
                "{} factor lists for K={} actions",
                self.factors.len(),
                self.k
            )));
        }
        for (a, fs) in self.factors.iter().enumerate() {
            for f in fs {
                if f.mu.len() != self.d {
                    return Err(Error::Config(format!(
                        "factor mean of length {} for d={} (action {a})",
                        f.mu.len(),
                        self.d
                    )));
                }
                if f.sigma <= 0.0 {
                    return Err(Error::Config(format!("sigma must be > 0, got {}", f.sigma)));
                }
                if !(0.0..=1.0).contains(&f.weight) {
                    return Err(Error::Config(format!("weight {} outside [0,1]", f.weight)));
                }
            }
        }
        Ok(())
    }
}

/// Draws a random environment spec. Factor means are uniform on `[0,1]^d`,
/// sigmas uniform on `[sigma_lo, sigma_hi]`, weights uniform on `[0,1]`.
/// Deterministic given the seed: draw order is per action, per factor,
/// mu components then sigma then weight.
pub fn generate_spec(
    d: usize,
    k: usize,
    factors_per_action: usize,
    sigma_range: (f64, f64),
    noise_std: f64,
    seed: u64,
) -> Result<SyntheticEnvSpec> {
    let (lo, hi) = sigma_range;
    if d < 1 || k < 1 || factors_per_action < 1 {
        return Err(Error::Config("d, K, and F must all be >= 1".into()));
    }
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::Config(format!(
            "sigma range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    if noise_std < 0.0 {
        return Err(Error::Config("noise_std must be >= 0".into()));
    }
    let mut rng = crate::seeded_rng(seed);
    let factors = (0..k)
        .map(|_| {
            (0..factors_per_action)
                .map(|_| {
                    let mu = (0..d).map(|_| rng.random::<f64>()).collect();
                    let sigma = lo + rng.random::<f64>() * (hi - lo);
                    let weight = rng.random::<f64>();
                    GaussianFactor { mu, sigma, weight }
                })
                .collect()
        })
        .collect();
    Ok(SyntheticEnvSpec {
        d,
        k,
        base_prob: 0.0,
        noise_std,
        seed,
        factors,
    })
}

/// Samples a context uniformly on `[0,1]^d`. Contexts at different steps are
/// independent.
pub fn sample_context(spec: &SyntheticEnvSpec, rng: &mut ChaCha8Rng) -> Context {
    Context::numeric((0..spec.d).map(|_| rng.random::<f64>()).collect())
}

/// True reward probability of action `a` in context `s`:
/// `clip(base_prob + sum_f weight_f * exp(-||s - mu_f||^2 / (2 sigma_f^2)), 0, 1)`.
pub fn reward_probability(spec: &SyntheticEnvSpec, s: &Context, a: ActionId) -> Result<f64> {
    a.check(spec.k)?;
    let x = s.numeric_values()?;
    if x.len() != spec.d {
        return Err(Error::Schema(format!(
            "context of length {} for d={}",
            x.len(),
            spec.d
        )));
    }
    let mut p = spec.base_prob;
    for factor in &spec.factors[a.0] {
        let sq_dist: f64 = x
            .iter()
            .zip(&factor.mu)
            .map(|(xi, mi)| (xi - mi) * (xi - mi))
            .sum();
        p += factor.weight * (-sq_dist / (2.0 * factor.sigma * factor.sigma)).exp();
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Draws a Bernoulli reward. The success probability is the true probability
/// perturbed by Gaussian parameter noise and re-clipped. Consumes exactly two
/// rng values: the normal perturbation, then the Bernoulli uniform.
pub fn pull(
    spec: &SyntheticEnvSpec,
    s: &Context,
    a: ActionId,
    rng: &mut ChaCha8Rng,
) -> Result<Reward> {
    let p = reward_probability(spec, s, a)?;
    let g: f64 = rng.sample(StandardNormal);
    let p_noisy = (p + spec.noise_std * g).clamp(0.0, 1.0);
    let u = rng.random::<f64>();
    Ok(Reward(if u < p_noisy { 1.0 } else { 0.0 }))
}

/// Best action and its reward probability; ties break to the lowest index.
pub fn optimal_action(spec: &SyntheticEnvSpec, s: &Context) -> Result<(ActionId, f64)> {
    let mut best = (ActionId(0), reward_probability(spec, s, ActionId(0))?);
    for a in 1..spec.k {
        let p = reward_probability(spec, s, ActionId(a))?;
        if p > best.1 {
            best = (ActionId(a), p);
        }
    }
    Ok(best)
}

/// Evaluates the action-averaged reward probability on a square grid over two
/// context dimensions, holding all other dimensions at `fixed_values`.
/// Cell `(r, c)` places dimension `dims.0` at the r-th cell center and
/// `dims.1` at the c-th; centers are `(idx + 0.5) / resolution`.
pub fn grid_heatmap(
    spec: &SyntheticEnvSpec,
    dims: (usize, usize),
    resolution: usize,
    fixed_values: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let (i, j) = dims;
    if i == j || i >= spec.d || j >= spec.d {
        return Err(Error::Config(format!(
            "heatmap dims ({i}, {j}) invalid for d={}",
            spec.d
        )));
    }
    if resolution < 1 {
        return Err(Error::Config("resolution must be >= 1".into()));
    }
    if fixed_values.len() != spec.d {
        return Err(Error::Config(format!(
            "{} fixed values for d={}",
            fixed_values.len(),
            spec.d
        )));
    }
    let mut matrix = Vec::with_capacity(resolution);
    for r in 0..resolution {
        let mut row = Vec::with_capacity(resolution);
        for c in 0..resolution {
            let mut coords = fixed_values.to_vec();
            coords[i] = (r as f64 + 0.5) / resolution as f64;
            coords[j] = (c as f64 + 0.5) / resolution as f64;
            let s = Context::numeric(coords);
            let mut sum = 0.0;
            for a in 0..spec.k {
                sum += reward_probability(spec, &s, ActionId(a))?;
            }
            row.push(sum / spec.k as f64);
        }
        matrix.push(row);
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn one_factor_spec(mu: Vec<f64>, sigma: f64, weight: f64) -> SyntheticEnvSpec {
        let d = mu.len();
        SyntheticEnvSpec {
            d,
            k: 1,
            base_prob: 0.0,
            noise_std: 0.0,
            seed: 0,
            factors: vec![vec![GaussianFactor { mu, sigma, weight }]],
        }
    }

    fn constant_spec(d: usize, probs: &[f64]) -> SyntheticEnvSpec {
        SyntheticEnvSpec {
            d,
            k: probs.len(),
            base_prob: 0.0,
            noise_std: 0.0,
            seed: 0,
            factors: probs
                .iter()
                .map(|&p| {
                    vec![GaussianFactor {
                        mu: vec![0.0; d],
                        sigma: 1e6, // effectively flat: exp term ~ 1 everywhere
                        weight: p,
                    }]
                })
                .collect(),
        }
    }

    #[test]
    fn generate_spec_shapes() {
        let spec = generate_spec(2, 2, 2, (0.05, 0.3), 0.0, 7).unwrap();
        assert_eq!(spec.factors.len(), 2);
        for fs in &spec.factors {
            assert_eq!(fs.len(), 2);
            for f in fs {
                assert_eq!(f.mu.len(), 2);
                assert!(f.mu.iter().all(|&m| (0.0..=1.0).contains(&m)));
                assert!((0.05..=0.3).contains(&f.sigma));
            }
        }
        let five = generate_spec(5, 2, 5, (0.05, 0.3), 0.0, 7).unwrap();
        assert!(five.factors[1][4].mu.len() == 5);
    }

    #[test]
    fn generate_spec_is_deterministic() {
        let a = generate_spec(3, 2, 4, (0.1, 0.2), 0.05, 99).unwrap();
        let b = generate_spec(3, 2, 4, (0.1, 0.2), 0.05, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_spec_rejects_bad_ranges() {
        assert!(generate_spec(2, 2, 2, (0.0, 0.3), 0.0, 0).is_err());
        assert!(generate_spec(2, 2, 2, (0.5, 0.3), 0.0, 0).is_err());
        assert!(generate_spec(0, 2, 2, (0.1, 0.3), 0.0, 0).is_err());
    }

    #[test]
    fn context_dimensions_and_range() {
        let mut rng = seeded_rng(1);
        let s1 = sample_context(&constant_spec(1, &[0.5]), &mut rng);
        assert_eq!(s1.values.len(), 1);
        let v = s1.numeric_values().unwrap()[0];
        assert!((0.0..1.0).contains(&v));
        let s5 = sample_context(&constant_spec(5, &[0.5]), &mut rng);
        assert_eq!(s5.values.len(), 5);
    }

    #[test]
    fn context_mean_matches_uniform() {
        // Monte Carlo oracle: mean of uniform(0,1) over 10^4 draws.
        let spec = constant_spec(1, &[0.5]);
        let mut rng = seeded_rng(2);
        let n = 10_000;
        let sum: f64 = (0..n)
            .map(|_| sample_context(&spec, &mut rng).numeric_values().unwrap()[0])
            .sum();
        assert_abs_diff_eq!(sum / n as f64, 0.5, epsilon = 0.02);
    }

    #[test]
    fn kernel_peak_is_one() {
        let spec = one_factor_spec(vec![0.4, 0.6], 0.1, 1.0);
        let p = reward_probability(&spec, &Context::numeric(vec![0.4, 0.6]), ActionId(0)).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kernel_analytic_value() {
        // ||s - mu||^2 = 0.01, sigma = 0.1 -> exp(-0.01 / 0.02) = exp(-0.5)
        let spec = one_factor_spec(vec![0.5], 0.1, 1.0);
        let p = reward_probability(&spec, &Context::numeric(vec![0.6]), ActionId(0)).unwrap();
        assert_abs_diff_eq!(p, (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn empty_factor_sum_is_base_prob() {
        let spec = SyntheticEnvSpec {
            d: 1,
            k: 1,
            base_prob: 0.2,
            noise_std: 0.0,
            seed: 0,
            factors: vec![vec![]],
        };
        let p = reward_probability(&spec, &Context::numeric(vec![0.3]), ActionId(0)).unwrap();
        assert_abs_diff_eq!(p, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_bernoulli() {
        let mut rng = seeded_rng(3);
        let hi = one_factor_spec(vec![0.5], 0.1, 1.0);
        let r = pull(&hi, &Context::numeric(vec![0.5]), ActionId(0), &mut rng).unwrap();
        assert_eq!(r.0, 1.0);
        let lo = SyntheticEnvSpec {
            base_prob: 0.0,
            factors: vec![vec![]],
            ..hi
        };
        let r = pull(&lo, &Context::numeric(vec![0.5]), ActionId(0), &mut rng).unwrap();
        assert_eq!(r.0, 0.0);
    }

    #[test]
    fn pull_mean_converges_to_probability() {
        // Monte Carlo oracle: 10^5 Bernoulli(0.6) draws.
        let spec = constant_spec(1, &[0.6]);
        let s = Context::numeric(vec![0.5]);
        let mut rng = seeded_rng(4);
        let n = 100_000;
        let sum: f64 = (0..n)
            .map(|_| pull(&spec, &s, ActionId(0), &mut rng).unwrap().0)
            .sum();
        assert_abs_diff_eq!(sum / n as f64, 0.6, epsilon = 0.005);
    }

    #[test]
    fn argmax_and_tie_break() {
        let s = Context::numeric(vec![0.5]);
        let (a, best) = optimal_action(&constant_spec(1, &[0.3, 0.7]), &s).unwrap();
        assert_eq!(a, ActionId(1));
        assert_abs_diff_eq!(best, 0.7, epsilon = 1e-9);
        let (a, best) = optimal_action(&constant_spec(1, &[0.5, 0.5]), &s).unwrap();
        assert_eq!(a, ActionId(0));
        assert_abs_diff_eq!(best, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn optimal_matches_exhaustive_evaluation() {
        let spec = generate_spec(2, 4, 3, (0.05, 0.3), 0.0, 11).unwrap();
        let mut rng = seeded_rng(5);
        for _ in 0..100 {
            let s = sample_context(&spec, &mut rng);
            let (a, best) = optimal_action(&spec, &s).unwrap();
            // independent oracle: evaluate every action and scan
            let probs: Vec<f64> = (0..spec.k)
                .map(|i| reward_probability(&spec, &s, ActionId(i)).unwrap())
                .collect();
            let oracle = probs
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |acc, (i, &p)| {
                    if p > acc.1 {
                        (i, p)
                    } else {
                        acc
                    }
                });
            assert_eq!(a.0, oracle.0);
            assert_abs_diff_eq!(best, oracle.1, epsilon = 0.0);
        }
    }

    #[test]
    fn heatmap_constant_field() {
        let spec = SyntheticEnvSpec {
            d: 2,
            k: 1,
            base_prob: 0.5,
            noise_std: 0.0,
            seed: 0,
            factors: vec![vec![]],
        };
        let m = grid_heatmap(&spec, (0, 1), 3, &[0.0, 0.0]).unwrap();
        assert_eq!(m.len(), 3);
        for row in &m {
            for &cell in row {
                assert_abs_diff_eq!(cell, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn heatmap_centered_factor_peaks_in_center() {
        let spec = one_factor_spec(vec![0.5, 0.5], 0.1, 1.0);
        let m = grid_heatmap(&spec, (0, 1), 5, &[0.5, 0.5]).unwrap();
        let max = m
            .iter()
            .flatten()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(m[2][2], max, epsilon = 0.0);
    }

    #[test]
    fn heatmap_matches_direct_evaluation() {
        let spec = generate_spec(5, 3, 5, (0.05, 0.3), 0.0, 13).unwrap();
        let fixed = vec![0.3; 5];
        let m = grid_heatmap(&spec, (0, 1), 4, &fixed).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let mut coords = fixed.clone();
                coords[0] = (r as f64 + 0.5) / 4.0;
                coords[1] = (c as f64 + 0.5) / 4.0;
                let s = Context::numeric(coords);
                let expect: f64 = (0..3)
                    .map(|a| reward_probability(&spec, &s, ActionId(a)).unwrap())
                    .sum::<f64>()
                    / 3.0;
                assert_abs_diff_eq!(m[r][c], expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn heatmap_rejects_bad_dims() {
        let spec = one_factor_spec(vec![0.5, 0.5], 0.1, 1.0);
        assert!(grid_heatmap(&spec, (0, 0), 3, &[0.5, 0.5]).is_err());
        assert!(grid_heatmap(&spec, (0, 2), 3, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = generate_spec(2, 2, 2, (0.05, 0.3), 0.1, 21).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"K\":2"));
        let back: SyntheticEnvSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }

    proptest! {
        #[test]
        fn probability_always_in_unit_interval(
            x in 0.0f64..1.0,
            y in 0.0f64..1.0,
            seed in 0u64..50
        ) {
            let spec = generate_spec(2, 3, 4, (0.01, 0.5), 0.0, seed).unwrap();
            let s = Context::numeric(vec![x, y]);
            for a in 0..3 {
                let p = reward_probability(&spec, &s, ActionId(a)).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }

        #[test]
        fn best_value_dominates_all_actions(seed in 0u64..30, ctx_seed in 0u64..30) {
            let spec = generate_spec(3, 4, 2, (0.05, 0.3), 0.0, seed).unwrap();
            let mut rng = seeded_rng(ctx_seed);
            let s = sample_context(&spec, &mut rng);
            let (_, best) = optimal_action(&spec, &s).unwrap();
            for a in 0..4 {
                prop_assert!(best >= reward_probability(&spec, &s, ActionId(a)).unwrap());
            }
        }
    }
}
