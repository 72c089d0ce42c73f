//! Wild-bootstrap test of a linear specification against the kernel
//! alternative.
//!
//! The statistic is `T = Σ (m̂_H(X_i) - m̃_θ(X_i))²`, where `m̃_θ` is the
//! parametric fit smoothed with the same kernel and bandwidth as the kernel
//! fit. Both smoothers are linear in the response, so the gap equals the
//! smoothed OLS residual, which is what gets computed.
//!
//! Bootstrap responses are `Y_i^b = m_θ(X_i) + ε̂_i v_i^b` with OLS residuals
//! `ε̂` and i.i.d. multipliers `v`; the bandwidth is held fixed across
//! replications. Multipliers for replication `b` come from a ChaCha stream
//! keyed by `(seed, b)` and consumed in observation order, so replications
//! can run in any order on any number of threads.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::exec;
use crate::kernel::{BandwidthMatrix, SmootherMatrix};
use crate::regression::{LinearFit, OlsProjector};

/// Default number of bootstrap replications.
pub const DEFAULT_REPLICATIONS: usize = 250;

/// Largest tolerated share of invalid replications.
const MAX_INVALID_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapWeights {
    /// Two-point golden-section distribution with `E v = 0, E v² = 1, E v³ = 1`.
    #[default]
    Mammen,
    /// `±1` with equal probability.
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PValueRule {
    /// `#{T_b >= T} / B`.
    #[default]
    Plain,
    /// `(1 + #{T_b >= T}) / (B + 1)`.
    PlusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityTestConfig {
    pub replications: usize,
    pub seed: u64,
    pub weights: BootstrapWeights,
    pub p_value: PValueRule,
}

impl Default for LinearityTestConfig {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            seed: 0,
            weights: BootstrapWeights::Mammen,
            p_value: PValueRule::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearityTestResult {
    pub t_observed: f64,
    /// Statistics of the valid replications, in replication order.
    pub bootstrap_t: Vec<f64>,
    pub p_value: f64,
    pub replications: usize,
    pub invalid_replications: usize,
    pub seed: u64,
    pub weights: BootstrapWeights,
}

const SQRT5: f64 = 2.236_067_977_499_79;

/// Maps a uniform draw on `[0, 1)` to a Mammen multiplier.
pub fn mammen_weight(u: f64) -> f64 {
    let p_low = (5.0 + SQRT5) / 10.0;
    if u < p_low {
        (1.0 - SQRT5) / 2.0
    } else {
        (1.0 + SQRT5) / 2.0
    }
}

/// The multipliers of replication `replication`, one per observation.
pub fn multipliers(seed: u64, replication: u64, n: usize, weights: BootstrapWeights) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            match weights {
                BootstrapWeights::Mammen => mammen_weight(u),
                BootstrapWeights::Rademacher => {
                    if u < 0.5 {
                        -1.0
                    } else {
                        1.0
                    }
                }
            }
        })
        .collect()
}

/// Kernel smoothing of the parametric fitted values.
pub fn smoothed_parametric_fit(
    xs: ArrayView2<f64>,
    h: &BandwidthMatrix,
    theta_fit: &LinearFit,
) -> Result<Vec<f64>> {
    ensure_same_len(xs.nrows(), theta_fit.fitted.len())?;
    let smoother = SmootherMatrix::new(xs, h)?;
    Ok(smoother.apply(&theta_fit.fitted))
}

fn smoothed_norm2(smoother: &SmootherMatrix, residuals: &[f64]) -> f64 {
    (0..smoother.len())
        .map(|i| {
            let g: f64 = smoother
                .row(i)
                .iter()
                .zip(residuals)
                .map(|(s, e)| s * e)
                .sum();
            g * g
        })
        .sum()
}

/// The statistic `T` for the linear null with intercept.
pub fn t_statistic(xs: ArrayView2<f64>, ys: &[f64], h: &BandwidthMatrix) -> Result<f64> {
    let theta = OlsProjector::new(xs)?.fit(ys)?;
    let smoother = SmootherMatrix::new(xs, h)?;
    Ok(smoothed_norm2(&smoother, &theta.residuals))
}

/// Bootstrap p-value of the linear null. Deterministic given the seed.
pub fn wild_bootstrap_test(
    xs: ArrayView2<f64>,
    ys: &[f64],
    h: &BandwidthMatrix,
    config: &LinearityTestConfig,
) -> Result<LinearityTestResult> {
    if config.replications == 0 {
        return Err(Error::Config(
            "bootstrap needs at least one replication".into(),
        ));
    }
    ensure_same_len(xs.nrows(), ys.len())?;
    let projector = OlsProjector::new(xs)?;
    let theta = projector.fit(ys)?;
    let smoother = SmootherMatrix::new(xs, h)?;
    let t_observed = smoothed_norm2(&smoother, &theta.residuals);
    let n = ys.len();

    let stats = exec::map_indexed(config.replications, |b| {
        let v = multipliers(config.seed, b as u64, n, config.weights);
        let yb: Vec<f64> = theta
            .fitted
            .iter()
            .zip(&theta.residuals)
            .zip(&v)
            .map(|((f, e), v)| f + e * v)
            .collect();
        match projector.fit(&yb) {
            Ok(fit) => {
                let t = smoothed_norm2(&smoother, &fit.residuals);
                t.is_finite().then_some(t)
            }
            Err(_) => None,
        }
    });

    let invalid = stats.iter().filter(|t| t.is_none()).count();
    if invalid as f64 > MAX_INVALID_SHARE * config.replications as f64 {
        return Err(Error::Bootstrap {
            invalid,
            total: config.replications,
        });
    }
    let bootstrap_t: Vec<f64> = stats.into_iter().flatten().collect();
    let exceed = bootstrap_t.iter().filter(|t| **t >= t_observed).count() as f64;
    let valid = bootstrap_t.len() as f64;
    let p_value = match config.p_value {
        PValueRule::Plain => exceed / valid,
        PValueRule::PlusOne => (exceed + 1.0) / (valid + 1.0),
    };
    Ok(LinearityTestResult {
        t_observed,
        bootstrap_t,
        p_value,
        replications: config.replications,
        invalid_replications: invalid,
        seed: config.seed,
        weights: config.weights,
    })
}
