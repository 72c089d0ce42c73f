//! Bandwidth selection: Silverman's rule of thumb as a starting value,
//! refined by minimizing the GCV-penalized cross-validation score with a
//! Nelder-Mead search over `log h`.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_same_len, Error, Result};
use crate::exec;
use crate::kernel::BandwidthMatrix;
use crate::simplex::{self, SimplexOptions};
use crate::stats;

/// Offset (in `log h`) of the second vertex of the initial simplex.
const INITIAL_LOG_STEP: f64 = 0.25;

/// Hat values this close to one make the GCV penalty blow up.
const PENALTY_SINGULARITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub h: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSearchConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the simplex extent, relative to `h`.
    pub x_tolerance: f64,
    /// Convergence threshold on the score spread, relative to the best score.
    pub f_tolerance: f64,
    /// Search over `log h` (unconstrained) instead of `h`.
    pub log_domain: bool,
}

impl Default for BandwidthSearchConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            x_tolerance: 1e-7,
            f_tolerance: 1e-10,
            log_domain: true,
        }
    }
}

impl BandwidthSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.x_tolerance > 0.0) || !(self.f_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth search needs max_iterations >= 1 and positive tolerances, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Outcome of a univariate bandwidth search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub h: f64,
    pub score: f64,
    pub initial_h: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out; `h` is then the best value seen.
    pub converged: bool,
}

/// `1.06 min{s, IQR/1.34} n^(-1/5)` with the (n-1) standard deviation and
/// type-7 quartiles. When exactly one of the two spread measures is zero
/// the other one is used.
pub fn silverman_rot(xs: &[f64]) -> Result<f64> {
    if xs.len() < 5 {
        return Err(Error::InsufficientData {
            required: 5,
            actual: xs.len(),
        });
    }
    ensure_finite(xs, "x")?;
    let sd = stats::sample_variance(xs).sqrt();
    let sorted = stats::sorted_copy(xs);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => {
            return Err(Error::DegenerateSample(
                "regressor has zero variance and zero interquartile range".into(),
            ))
        }
    };
    Ok(1.06 * spread * (xs.len() as f64).powf(-0.2))
}

fn check_xy(xs: &[f64], ys: &[f64]) -> Result<()> {
    ensure_same_len(xs.len(), ys.len())?;
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: xs.len(),
        });
    }
    ensure_finite(xs, "x")?;
    ensure_finite(ys, "y")
}

fn cv_unchecked(h: f64, xs: &[f64], ys: &[f64]) -> f64 {
    // the fit reproduces a constant response at every h, penalty or not
    if ys.iter().all(|y| *y == ys[0]) {
        return 0.0;
    }
    let inv_h = 1.0 / h;
    let terms = exec::map_indexed(xs.len(), |i| {
        let xi = xs[i];
        let mut total = 0.0;
        let mut weighted = 0.0;
        for (xj, yj) in xs.iter().zip(ys) {
            let u = (xi - xj) * inv_h;
            // own exponent is zero and is the row maximum
            let k = (-0.5 * u * u).exp();
            total += k;
            weighted += k * yj;
        }
        let hat = 1.0 / total;
        if 1.0 - hat <= PENALTY_SINGULARITY {
            return f64::INFINITY;
        }
        let r = ys[i] - weighted / total;
        r * r / ((1.0 - hat) * (1.0 - hat))
    });
    if terms.iter().any(|t| t.is_infinite()) {
        f64::INFINITY
    } else {
        stats::mean(&terms)
    }
}

/// GCV-penalized cross-validation score of the full-sample Nadaraya-Watson
/// fit. Returns an infinite score when some observation carries all of its
/// own weight (the bandwidth is too small to smooth).
pub fn cv_score(h: f64, xs: &[f64], ys: &[f64]) -> Result<CvScore> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidBandwidth(format!("{h}")));
    }
    check_xy(xs, ys)?;
    Ok(CvScore {
        h,
        score: cv_unchecked(h, xs, ys),
    })
}

/// Minimizes [`cv_score`] starting from [`silverman_rot`].
///
/// A flat objective over the initial simplex returns the Silverman value
/// unchanged.
pub fn optimize_bandwidth(
    xs: &[f64],
    ys: &[f64],
    config: &BandwidthSearchConfig,
) -> Result<BandwidthSelection> {
    config.validate()?;
    check_xy(xs, ys)?;
    let h0 = silverman_rot(xs)?;

    let to_h = |t: f64| if config.log_domain { t.exp() } else { t };
    let objective = |t: &[f64]| {
        let h = to_h(t[0]);
        if h.is_finite() && h > 0.0 {
            cv_unchecked(h, xs, ys)
        } else {
            f64::INFINITY
        }
    };
    let (t0, step) = if config.log_domain {
        (h0.ln(), INITIAL_LOG_STEP)
    } else {
        (h0, h0 * (INITIAL_LOG_STEP.exp() - 1.0))
    };

    let f0 = objective(&[t0]);
    let f1 = objective(&[t0 + step]);
    if (f1 - f0).abs() <= config.f_tolerance * f0.abs().max(f1.abs()) {
        return Ok(BandwidthSelection {
            h: h0,
            score: f0,
            initial_h: h0,
            iterations: 0,
            converged: true,
        });
    }

    let x_tolerance = if config.log_domain {
        config.x_tolerance
    } else {
        config.x_tolerance * h0
    };
    let result = simplex::minimize(
        objective,
        &[t0],
        &[step],
        &SimplexOptions {
            max_iterations: config.max_iterations,
            x_tolerance,
            f_tolerance: config.f_tolerance,
            ..Default::default()
        },
    );
    let (h, score) = if result.f <= f0 {
        (to_h(result.x[0]), result.f)
    } else {
        (h0, f0)
    };
    Ok(BandwidthSelection {
        h,
        score,
        initial_h: h0,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// Per-column selections for a multivariate regressor matrix. Each column
/// is optimized as if it were the only regressor.
pub fn optimize_bandwidth_columns(
    xs: ArrayView2<f64>,
    ys: &[f64],
    config: &BandwidthSearchConfig,
) -> Result<Vec<BandwidthSelection>> {
    if xs.ncols() == 0 {
        return Err(Error::Domain("regressor matrix has no columns".into()));
    }
    ensure_same_len(xs.nrows(), ys.len())?;
    (0..xs.ncols())
        .map(|d| {
            let column = xs.column(d).to_vec();
            optimize_bandwidth(&column, ys, config).map_err(|e| Error::Column {
                column: d,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Diagonal bandwidth matrix whose entries are the univariate optima.
pub fn optimize_bandwidth_matrix(
    xs: ArrayView2<f64>,
    ys: &[f64],
    config: &BandwidthSearchConfig,
) -> Result<BandwidthMatrix> {
    let selections = optimize_bandwidth_columns(xs, ys, config)?;
    BandwidthMatrix::new(selections.iter().map(|s| s.h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::column_view;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn silverman_one_to_five() {
        // 1.06 * (2 / 1.34) * 5^(-1/5), evaluated with mpmath
        let h = silverman_rot(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((h - 1.146_666_333_579_637_7).abs() < 1e-12, "{h}");
    }

    #[test]
    fn silverman_scale_and_shift() {
        let xs = [0.3, -1.2, 2.2, 0.9, 4.1, -0.4, 1.7];
        let h = silverman_rot(&xs).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let shifted: Vec<f64> = xs.iter().map(|x| x + 100.0).collect();
        assert!((silverman_rot(&scaled).unwrap() - 2.5 * h).abs() < 1e-12);
        assert!((silverman_rot(&shifted).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn silverman_errors() {
        assert!(matches!(
            silverman_rot(&[1.0; 6]),
            Err(Error::DegenerateSample(_))
        ));
        assert!(matches!(
            silverman_rot(&[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
        // zero IQR but positive variance falls back to the standard deviation
        let h = silverman_rot(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0]).unwrap();
        assert!(h > 0.0);
    }

    #[test]
    fn cv_constant_response_is_zero() {
        let xs = [0.1, 0.5, 0.9, 1.3, 2.0];
        let ys = [4.2; 5];
        for h in [0.05, 0.5, 5.0] {
            assert_eq!(cv_score(h, &xs, &ys).unwrap().score, 0.0);
        }
    }

    #[test]
    fn cv_two_points_by_hand() {
        // X = {0, 1}, Y = {0, 1}, h = 1: k = exp(-1/2), fit_0 = k/(1+k),
        // fit_1 = 1/(1+k), hat = 1/(1+k), residual = ∓k/(1+k);
        // score = mean(r²/(1-hat)²) = 1 (worked through in a Python script).
        let s = cv_score(1.0, &[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!((s.score - 1.0).abs() < 1e-14, "{}", s.score);
    }

    #[test]
    fn cv_large_bandwidth_limit() {
        let xs = [0.0, 0.4, 1.1, 1.5, 3.0];
        let ys = [1.0, -2.0, 0.5, 3.0, 1.5];
        let n = 5.0;
        let ybar = ys.iter().sum::<f64>() / n;
        let ss = ys.iter().map(|y| (y - ybar).powi(2)).sum::<f64>() / n;
        let limit = ss / (1.0 - 1.0 / n).powi(2);
        let s = cv_score(1e7, &xs, &ys).unwrap().score;
        assert!((s - limit).abs() < 1e-9 * limit);
    }

    #[test]
    fn cv_penalty_singularity_is_infinite() {
        let s = cv_score(1e-6, &[0.0, 1.0, 2.0], &[1.0, 2.0, 0.0]).unwrap();
        assert!(s.score.is_infinite());
        assert!(cv_score(0.0, &[0.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(cv_score(1.0, &[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn constant_response_keeps_silverman() {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let ys = vec![2.0; 30];
        let sel = optimize_bandwidth(&xs, &ys, &BandwidthSearchConfig::default()).unwrap();
        assert_eq!(sel.h, silverman_rot(&xs).unwrap());
        assert_eq!(sel.iterations, 0);
    }

    #[test]
    fn scaling_regressor_scales_bandwidth() {
        let xs: Vec<f64> = (0..80).map(|i| i as f64 / 80.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| (6.0 * x).sin() + 0.2 * ((i * 37 % 17) as f64 / 17.0 - 0.5))
            .collect();
        let cfg = BandwidthSearchConfig::default();
        let h = optimize_bandwidth(&xs, &ys, &cfg).unwrap().h;
        let scaled: Vec<f64> = xs.iter().map(|x| 4.0 * x).collect();
        let h4 = optimize_bandwidth(&scaled, &ys, &cfg).unwrap().h;
        assert!((h4 / h - 4.0).abs() < 1e-5, "{h} {h4}");
    }

    #[test]
    fn duplicated_column_same_bandwidth() {
        let n = 60;
        let xs = Array2::from_shape_fn((n, 2), |(i, _)| ((i * 13) % 29) as f64 / 10.0);
        let ys: Vec<f64> = (0..n)
            .map(|i| xs[[i, 0]].powi(2) + ((i % 5) as f64) * 0.1)
            .collect();
        let h =
            optimize_bandwidth_matrix(xs.view(), &ys, &BandwidthSearchConfig::default()).unwrap();
        assert_eq!(h.diag()[0], h.diag()[1]);
    }

    #[test]
    fn column_errors_are_annotated() {
        let mut xs = Array2::from_shape_fn((20, 3), |(i, j)| (i * (j + 1)) as f64);
        xs.column_mut(1).fill(0.0);
        let ys = vec![1.0; 20];
        let err = optimize_bandwidth_matrix(xs.view(), &ys, &BandwidthSearchConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Column { column: 1, .. }), "{err}");
    }

    #[test]
    fn cv_minimum_nearly_minimizes_ase() {
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| ((i * 73) % n) as f64 / n as f64).collect();
        let truth: Vec<f64> = xs
            .iter()
            .map(|x| (2.0 * std::f64::consts::PI * x).sin())
            .collect();
        let ys: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, m)| m + 0.3 * (((i * 7919) % 101) as f64 / 101.0 - 0.5) * 3.4)
            .collect();
        let ase_at = |h: f64| {
            let fit = crate::regression::nw_fit(
                column_view(&xs),
                &ys,
                &BandwidthMatrix::scalar(h).unwrap(),
            )
            .unwrap();
            crate::regression::ase(&fit.fitted, &truth).unwrap()
        };
        let h = optimize_bandwidth(&xs, &ys, &BandwidthSearchConfig::default())
            .unwrap()
            .h;
        let best = (1..=100)
            .map(|k| ase_at(0.005 * k as f64))
            .fold(f64::INFINITY, f64::min);
        assert!(ase_at(h) <= 1.25 * best, "{} vs {best}", ase_at(h));
    }

    fn sin_noise(seed: u64) -> (Vec<f64>, Vec<f64>) {
        use rand::{Rng, SeedableRng};
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ys = xs
            .iter()
            .map(|x| (4.0 * std::f64::consts::PI * x).sin() + noise.sample(&mut rng))
            .collect();
        (xs, ys)
    }

    fn linear_grid_min(xs: &[f64], ys: &[f64]) -> f64 {
        (1..=100)
            .map(|k| cv_score(0.005 * k as f64, xs, ys).unwrap().score)
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn optimizer_beats_linear_grid() {
        for seed in 0..5 {
            let (xs, ys) = sin_noise(seed);
            let sel = optimize_bandwidth(&xs, &ys, &BandwidthSearchConfig::default()).unwrap();
            assert!(
                sel.score <= linear_grid_min(&xs, &ys) + 1e-9,
                "seed {seed}: {sel:?}"
            );
        }
    }

    #[test]
    fn matrix_entries_beat_column_grids() {
        let (a, ys) = sin_noise(7);
        let (b, _) = sin_noise(8);
        let (c, _) = sin_noise(9);
        let xs = Array2::from_shape_fn((200, 3), |(i, j)| [&a, &b, &c][j][i]);
        let h =
            optimize_bandwidth_matrix(xs.view(), &ys, &BandwidthSearchConfig::default()).unwrap();
        for d in 0..3 {
            let col = xs.column(d).to_vec();
            let score = cv_score(h.diag()[d], &col, &ys).unwrap().score;
            assert!(score <= linear_grid_min(&col, &ys) + 1e-9, "column {d}");
        }
    }

    fn spread() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (8usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cv_is_never_nan((xs, ys) in spread()) {
            for k in 0..30 {
                let h = 10f64.powf(-3.0 + 6.0 * k as f64 / 29.0);
                let s = cv_score(h, &xs, &ys).unwrap().score;
                prop_assert!(!s.is_nan() && s >= 0.0, "h {} score {}", h, s);
            }
        }

        #[test]
        fn optimizer_beats_its_start((xs, ys) in spread()) {
            let h0 = silverman_rot(&xs).unwrap();
            let sel = optimize_bandwidth(&xs, &ys, &BandwidthSearchConfig::default()).unwrap();
            prop_assert!(sel.h > 0.0);
            prop_assert!(sel.score <= cv_score(h0, &xs, &ys).unwrap().score);
        }

        #[test]
        fn grid_argmin_ignores_response_shift((xs, ys) in spread(), c in -50.0f64..50.0) {
            let shifted: Vec<f64> = ys.iter().map(|y| y + c).collect();
            let grid: Vec<f64> = (0..40).map(|k| 0.02 * 1.15f64.powi(k)).collect();
            let a: Vec<f64> = grid.iter().map(|h| cv_score(*h, &xs, &ys).unwrap().score).collect();
            let b: Vec<f64> = grid.iter().map(|h| cv_score(*h, &xs, &shifted).unwrap().score).collect();
            let argmin = |v: &[f64]| (0..v.len()).min_by(|i, j| v[*i].total_cmp(&v[*j])).unwrap();
            let (i, j) = (argmin(&a), argmin(&b));
            // A different argmin is only acceptable for a rounding-level tie.
            prop_assert!(i == j || (a[i] - a[j]).abs() <= 1e-9 * a[i].max(1e-300), "{} {}", i, j);
        }
    }
}
