//! Characteristic lines, security market lines and three-factor rows.
//!
//! Every row is computed from its own series only, so removing an asset
//! never changes another row. Batch functions run assets in parallel and
//! return results in input order.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{optimize_bandwidth, optimize_bandwidth_matrix, BandwidthSearchConfig};
use crate::data_io::{excess_returns, factor_series, ReturnPanel, FACTOR_NAMES};
use crate::error::{ensure_same_len, Error, Result};
use crate::exec;
use crate::kernel::{column_view, BandwidthMatrix};
use crate::linearity::{wild_bootstrap_test, LinearityTestConfig, LinearityTestResult};
use crate::regression::{confidence_band, nw_fit, ols_fit};
use crate::reporting::{CurveKind, CurveMeta, CurveSeries};
use crate::semiparam::{
    alpha_curve, beta_curve, curve_grid, ff3_semi_params, semi_alpha, semi_beta,
};
use crate::stats;

pub const DEFAULT_MIN_OBS: usize = 30;
pub const DEFAULT_MIN_SML_ASSETS: usize = 10;
pub const ALL_COMPANIES: &str = "All companies";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    pub min_obs: usize,
    pub min_sml_assets: usize,
    pub bandwidth: BandwidthSearchConfig,
    pub test: LinearityTestConfig,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            min_obs: DEFAULT_MIN_OBS,
            min_sml_assets: DEFAULT_MIN_SML_ASSETS,
            bandwidth: BandwidthSearchConfig::default(),
            test: LinearityTestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicLineRow {
    pub ticker: String,
    pub n_obs: usize,
    pub mean_return: f64,
    pub p_value: f64,
    pub h: f64,
    pub r2_kr: f64,
    pub alpha_kr: f64,
    pub beta_kr: f64,
    pub r2_lr: f64,
    pub alpha_lr: f64,
    pub beta_lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmlRow {
    pub segment: String,
    pub n_assets: usize,
    pub mean_return: f64,
    pub p_value: f64,
    pub h: f64,
    pub r2_kr: f64,
    pub alpha_kr: f64,
    pub slope_kr: f64,
    pub r2_lr: f64,
    pub alpha_lr: f64,
    pub slope_lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ff3Row {
    pub ticker: String,
    pub p_value: f64,
    pub r2_kr: f64,
    pub alpha_kr: f64,
    pub beta_kr: f64,
    pub s_kr: f64,
    pub h_kr: f64,
    pub r2_lr: f64,
    pub alpha_lr: f64,
    pub beta_lr: f64,
    pub s_lr: f64,
    pub h_lr: f64,
}

/// Per-asset bootstrap seed: the configured seed mixed with an FNV-1a hash
/// of the asset id, so rows do not depend on their position in the batch.
pub fn asset_seed(seed: u64, asset: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in asset.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

fn test_config(config: &PricingConfig, asset: &str) -> LinearityTestConfig {
    LinearityTestConfig {
        seed: asset_seed(config.test.seed, asset),
        ..config.test
    }
}

fn check_regressor(values: &[f64], name: &str) -> Result<()> {
    let spread = stats::sample_variance(values);
    if !(spread > 0.0) {
        return Err(Error::DegenerateRegressor {
            name: name.to_string(),
            reason: "zero variance".into(),
        });
    }
    Ok(())
}

fn check_min_obs(n: usize, required: usize) -> Result<()> {
    if n < required {
        return Err(Error::InsufficientData {
            required,
            actual: n,
        });
    }
    Ok(())
}

/// Kernel and linear statistics of a univariate regression.
struct UnivariateFit {
    h: f64,
    r2_kr: f64,
    alpha_kr: f64,
    beta_kr: f64,
    r2_lr: f64,
    alpha_lr: f64,
    beta_lr: f64,
    p_value: f64,
}

fn univariate(
    xs: &[f64],
    ys: &[f64],
    name: &str,
    config: &PricingConfig,
    test: &LinearityTestConfig,
) -> Result<UnivariateFit> {
    ensure_same_len(xs.len(), ys.len())?;
    check_regressor(xs, name)?;
    let selection = optimize_bandwidth(xs, ys, &config.bandwidth)?;
    let h = selection.h;
    let bw = BandwidthMatrix::scalar(h)?;
    let view = column_view(xs);
    let kernel = nw_fit(view, ys, &bw)?;
    let beta = semi_beta(xs, ys, h)?;
    let alpha = semi_alpha(xs, ys, beta.beta_star)?;
    let linear = ols_fit(view, ys)?;
    let test = wild_bootstrap_test(view, ys, &bw, test)?;
    Ok(UnivariateFit {
        h,
        r2_kr: kernel.r_squared,
        alpha_kr: alpha.alpha_star,
        beta_kr: beta.beta_star,
        r2_lr: linear.r_squared,
        alpha_lr: linear.alpha,
        beta_lr: linear.betas[0],
        p_value: test.p_value,
    })
}

/// Kernel and linear characteristic line of one asset. `mean_return` is
/// reported as given (the mean raw return in the table layout).
pub fn characteristic_line(
    ticker: &str,
    asset_excess: &[f64],
    market_excess: &[f64],
    mean_return: f64,
    config: &PricingConfig,
) -> Result<CharacteristicLineRow> {
    ensure_same_len(market_excess.len(), asset_excess.len())?;
    check_min_obs(asset_excess.len(), config.min_obs)?;
    let fit = univariate(
        market_excess,
        asset_excess,
        FACTOR_NAMES[0],
        config,
        &test_config(config, ticker),
    )?;
    Ok(CharacteristicLineRow {
        ticker: ticker.to_string(),
        n_obs: asset_excess.len(),
        mean_return,
        p_value: fit.p_value,
        h: fit.h,
        r2_kr: fit.r2_kr,
        alpha_kr: fit.alpha_kr,
        beta_kr: fit.beta_kr,
        r2_lr: fit.r2_lr,
        alpha_lr: fit.alpha_lr,
        beta_lr: fit.beta_lr,
    })
}

/// Characteristic line of `asset_id` from a panel.
pub fn characteristic_line_for(
    panel: &ReturnPanel,
    asset_id: &str,
    config: &PricingConfig,
) -> Result<CharacteristicLineRow> {
    let series = excess_returns(panel, asset_id)?;
    characteristic_line(
        asset_id,
        &series.asset,
        &series.market,
        stats::mean(&series.raw_asset),
        config,
    )
}

/// Characteristic lines of every asset in panel order.
pub fn characteristic_lines(
    panel: &ReturnPanel,
    config: &PricingConfig,
) -> Vec<(String, Result<CharacteristicLineRow>)> {
    let ids: Vec<&str> = panel.asset_ids().collect();
    let rows = exec::map_indexed(ids.len(), |i| {
        characteristic_line_for(panel, ids[i], config)
    });
    ids.into_iter().map(String::from).zip(rows).collect()
}

/// Cross-sectional regression of mean returns on betas. Inputs are sorted
/// by `(beta, mean return)` first, so the row does not depend on asset
/// order.
pub fn security_market_line(
    segment: &str,
    betas: &[f64],
    mean_returns: &[f64],
    config: &PricingConfig,
) -> Result<SmlRow> {
    ensure_same_len(betas.len(), mean_returns.len())?;
    check_min_obs(betas.len(), config.min_sml_assets)?;
    let mut pairs: Vec<(f64, f64)> = betas
        .iter()
        .copied()
        .zip(mean_returns.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let fit = univariate(&xs, &ys, "beta", config, &test_config(config, segment))?;
    Ok(SmlRow {
        segment: segment.to_string(),
        n_assets: xs.len(),
        mean_return: stats::mean(&ys),
        p_value: fit.p_value,
        h: fit.h,
        r2_kr: fit.r2_kr,
        alpha_kr: fit.alpha_kr,
        slope_kr: fit.beta_kr,
        r2_lr: fit.r2_lr,
        alpha_lr: fit.alpha_lr,
        slope_lr: fit.beta_lr,
    })
}

/// Three-factor kernel and linear row. `factors` columns are MKT-RF, SMB
/// and HML.
pub fn ff3_line(
    ticker: &str,
    asset_excess: &[f64],
    factors: ArrayView2<f64>,
    config: &PricingConfig,
) -> Result<Ff3Row> {
    if factors.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: factors.ncols(),
        });
    }
    ensure_same_len(factors.nrows(), asset_excess.len())?;
    check_min_obs(asset_excess.len(), config.min_obs)?;
    for (d, name) in FACTOR_NAMES.iter().enumerate() {
        check_regressor(&factors.column(d).to_vec(), name)?;
    }
    let bw = optimize_bandwidth_matrix(factors, asset_excess, &config.bandwidth)?;
    let kernel = nw_fit(factors, asset_excess, &bw)?;
    let semi = ff3_semi_params(factors, asset_excess, &bw)?;
    let linear = ols_fit(factors, asset_excess)?;
    let test = wild_bootstrap_test(factors, asset_excess, &bw, &test_config(config, ticker))?;
    Ok(Ff3Row {
        ticker: ticker.to_string(),
        p_value: test.p_value,
        r2_kr: kernel.r_squared,
        alpha_kr: semi.alpha_star,
        beta_kr: semi.loadings[0],
        s_kr: semi.loadings[1],
        h_kr: semi.loadings[2],
        r2_lr: linear.r_squared,
        alpha_lr: linear.alpha,
        beta_lr: linear.betas[0],
        s_lr: linear.betas[1],
        h_lr: linear.betas[2],
    })
}

/// Three-factor rows of every asset in panel order.
pub fn ff3_lines(panel: &ReturnPanel, config: &PricingConfig) -> Vec<(String, Result<Ff3Row>)> {
    let ids: Vec<&str> = panel.asset_ids().collect();
    let rows = exec::map_indexed(ids.len(), |i| {
        let s = factor_series(panel, ids[i])?;
        ff3_line(ids[i], &s.asset, s.factors.view(), config)
    });
    ids.into_iter().map(String::from).zip(rows).collect()
}

/// Linearity test for one asset against the market (`factors` = `None`) or
/// the three factors, with cross-validated bandwidths.
pub fn linearity_for(
    panel: &ReturnPanel,
    asset_id: &str,
    three_factor: bool,
    config: &PricingConfig,
) -> Result<(BandwidthMatrix, LinearityTestResult)> {
    let test = test_config(config, asset_id);
    if three_factor {
        let s = factor_series(panel, asset_id)?;
        check_min_obs(s.asset.len(), config.min_obs)?;
        let bw = optimize_bandwidth_matrix(s.factors.view(), &s.asset, &config.bandwidth)?;
        let result = wild_bootstrap_test(s.factors.view(), &s.asset, &bw, &test)?;
        Ok((bw, result))
    } else {
        let s = excess_returns(panel, asset_id)?;
        check_min_obs(s.asset.len(), config.min_obs)?;
        check_regressor(&s.market, FACTOR_NAMES[0])?;
        let h = optimize_bandwidth(&s.market, &s.asset, &config.bandwidth)?.h;
        let bw = BandwidthMatrix::scalar(h)?;
        let result = wild_bootstrap_test(column_view(&s.market), &s.asset, &bw, &test)?;
        Ok((bw, result))
    }
}

/// `(1/N) Σ |1 - β_LR / β_KR|` over `(β_LR, β_KR)` pairs.
pub fn mean_abs_relative_beta_gap(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    let terms = pairs
        .iter()
        .map(|&(lr, kr)| {
            if kr == 0.0 || !kr.is_finite() || !lr.is_finite() {
                Err(Error::Domain(format!(
                    "beta gap undefined for ({lr}, {kr})"
                )))
            } else {
                Ok((1.0 - lr / kr).abs())
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats::mean(&terms))
}

/// Beta gap over characteristic-line rows.
pub fn beta_gap(rows: &[CharacteristicLineRow]) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta_lr, r.beta_kr)).collect();
    mean_abs_relative_beta_gap(&pairs)
}

fn keep_defined(grid: &[f64], values: Vec<Option<f64>>) -> (Vec<f64>, Vec<f64>) {
    grid.iter()
        .zip(values)
        .filter_map(|(x, y)| y.map(|y| (*x, y)))
        .unzip()
}

fn dedup_grid(mut grid: Vec<f64>) -> Vec<f64> {
    grid.dedup();
    grid
}

/// Plot data for a univariate fit: kernel fit with its confidence band, the
/// linear baseline, the local slope and the pointwise alpha over
/// `grid_points` abscissae between the 0.5th and 99.5th percentiles.
pub fn regression_curves(
    asset: &str,
    xs: &[f64],
    ys: &[f64],
    h: f64,
    level: f64,
    grid_points: usize,
) -> Result<Vec<CurveSeries>> {
    ensure_same_len(xs.len(), ys.len())?;
    let grid = dedup_grid(curve_grid(xs, grid_points));
    let meta = |level: Option<f64>| CurveMeta {
        asset: asset.to_string(),
        bandwidth: h,
        level,
    };
    let band = confidence_band(&grid, xs, ys, h, level)?;
    let fit: Vec<f64> = band.iter().map(|b| b.fit).collect();
    let lower: Vec<f64> = band.iter().map(|b| b.lower).collect();
    let upper: Vec<f64> = band.iter().map(|b| b.upper).collect();
    let linear = ols_fit(column_view(xs), ys)?;
    let baseline: Vec<f64> = grid.iter().map(|x| linear.predict(&[*x])).collect();
    let beta = semi_beta(xs, ys, h)?;
    let (dx, dy) = keep_defined(&grid, beta_curve(xs, ys, h, &grid)?);
    let (ax, ay) = keep_defined(&grid, alpha_curve(xs, ys, h, beta.beta_star, &grid)?);

    Ok(vec![
        CurveSeries::new(CurveKind::Fit, grid.clone(), fit, meta(None))?,
        CurveSeries::new(CurveKind::BandLower, grid.clone(), lower, meta(Some(level)))?,
        CurveSeries::new(CurveKind::BandUpper, grid.clone(), upper, meta(Some(level)))?,
        CurveSeries::new(CurveKind::LinearBaseline, grid, baseline, meta(None))?,
        CurveSeries::new(CurveKind::Derivative, dx, dy, meta(None))?,
        CurveSeries::new(CurveKind::Alpha, ax, ay, meta(None))?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{generate_synthetic, Dgp, SyntheticSpec};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quick() -> PricingConfig {
        PricingConfig {
            test: LinearityTestConfig {
                replications: 49,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn market(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    #[test]
    fn identity_asset() {
        let x = market(60, 1);
        let row = characteristic_line("ID", &x, &x, 0.0, &quick()).unwrap();
        assert!((row.beta_lr - 1.0).abs() < 1e-12);
        assert!((row.beta_kr - 1.0).abs() < 1e-9, "{}", row.beta_kr);
        assert!(row.alpha_kr.abs() < 1e-9 && row.alpha_lr.abs() < 1e-12);
        assert!((row.r2_lr - 1.0).abs() < 1e-12);
        assert!(row.r2_kr > 0.99);
        assert!(row.p_value >= 0.05);
    }

    #[test]
    fn exact_affine_asset() {
        let x = market(60, 2);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.01).collect();
        let row = characteristic_line("AFF", &y, &x, 0.0, &quick()).unwrap();
        assert!((row.beta_lr - 2.0).abs() < 1e-12);
        assert!((row.beta_kr - 2.0).abs() < 1e-9);
        assert!((row.alpha_kr - 0.01).abs() < 1e-9);
        assert!((row.alpha_lr - 0.01).abs() < 1e-12);
        assert!((row.r2_lr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_observations_and_flat_market() {
        let x = market(20, 3);
        assert!(matches!(
            characteristic_line("S", &x, &x, 0.0, &quick()),
            Err(Error::InsufficientData {
                required: 30,
                actual: 20
            })
        ));
        let flat = vec![0.5; 40];
        let y = market(40, 4);
        assert!(matches!(
            characteristic_line("S", &y, &flat, 0.0, &quick()),
            Err(Error::DegenerateRegressor { .. })
        ));
    }

    #[test]
    fn threshold_asset_has_beta_between_regimes() {
        let mut spec = SyntheticSpec::new(Dgp::Threshold, 500, 11);
        spec.noise_sigma = 0.2;
        let (panel, _) = generate_synthetic(&spec).unwrap();
        let row = characteristic_line_for(&panel, "A001", &quick()).unwrap();
        assert!(row.beta_kr > 1.0 && row.beta_kr < 2.0, "{}", row.beta_kr);
        assert!(row.p_value < 0.05);
    }

    fn cross_section(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let betas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.4..1.6)).collect();
        let means = betas
            .iter()
            .map(|b| 0.08 - 0.0344 * b + rng.gen_range(-0.002..0.002))
            .collect();
        (betas, means)
    }

    #[test]
    fn sml_affine_cross_section() {
        let (betas, _) = cross_section(30, 5);
        let means: Vec<f64> = betas.iter().map(|b| 0.02 + 0.05 * b).collect();
        let row = security_market_line("S", &betas, &means, &quick()).unwrap();
        assert!((row.slope_lr - 0.05).abs() < 1e-12);
        assert!((row.r2_lr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sml_is_permutation_invariant() {
        let (betas, means) = cross_section(50, 6);
        let a = security_market_line(ALL_COMPANIES, &betas, &means, &quick()).unwrap();
        let mut idx: Vec<usize> = (0..50).collect();
        idx.reverse();
        idx.swap(3, 17);
        let pb: Vec<f64> = idx.iter().map(|&i| betas[i]).collect();
        let pm: Vec<f64> = idx.iter().map(|&i| means[i]).collect();
        let b = security_market_line(ALL_COMPANIES, &pb, &pm, &quick()).unwrap();
        assert_eq!(a, b);
        assert!(a.slope_lr < 0.0);
    }

    #[test]
    fn sml_errors() {
        let (betas, means) = cross_section(9, 7);
        assert!(security_market_line("S", &betas, &means, &quick()).is_err());
        let flat = vec![1.0; 12];
        let (_, means) = cross_section(12, 8);
        assert!(matches!(
            security_market_line("S", &flat, &means, &quick()),
            Err(Error::DegenerateRegressor { .. })
        ));
    }

    #[test]
    fn ff3_exact_linearity() {
        let mut spec = SyntheticSpec::new(Dgp::Ff3Linear, 120, 12);
        spec.true_params.alpha = 0.02;
        let (panel, truth) = generate_synthetic(&spec).unwrap();
        let s = factor_series(&panel, "A001").unwrap();
        let row = ff3_line("A001", &s.asset, s.factors.view(), &quick()).unwrap();
        let loadings = &truth.assets[0].loadings;
        for (kr, lr, t) in [
            (row.beta_kr, row.beta_lr, loadings[0]),
            (row.s_kr, row.s_lr, loadings[1]),
            (row.h_kr, row.h_lr, loadings[2]),
        ] {
            assert!(
                (kr - lr).abs() < 1e-6 && (lr - t).abs() < 1e-9,
                "{kr} {lr} {t}"
            );
        }
        assert!((row.alpha_kr - 0.02).abs() < 1e-6);
        assert!(row.p_value >= 0.05);
    }

    #[test]
    fn ff3_zero_smb_is_named() {
        let x = market(40, 9);
        let mut f = Array2::zeros((40, 3));
        for i in 0..40 {
            f[[i, 0]] = x[i];
            f[[i, 2]] = x[(i + 7) % 40];
        }
        match ff3_line("Z", &x, f.view(), &quick()) {
            Err(Error::DegenerateRegressor { name, .. }) => assert_eq!(name, "SMB"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rows_are_independent_of_other_assets() {
        let mut spec = SyntheticSpec::new(Dgp::Quadratic, 60, 13);
        spec.noise_sigma = 0.3;
        spec.n_assets = 3;
        let (mut panel, _) = generate_synthetic(&spec).unwrap();
        let all = characteristic_lines(&panel, &quick());
        panel.assets.shift_remove("A002");
        let fewer = characteristic_lines(&panel, &quick());
        assert_eq!(all[0].1.as_ref().unwrap(), fewer[0].1.as_ref().unwrap());
        assert_eq!(all[2].1.as_ref().unwrap(), fewer[1].1.as_ref().unwrap());
    }

    #[test]
    fn beta_gap_hand_computed() {
        let pairs = [(1.0, 0.8), (1.2, 1.5), (0.9, 0.9)];
        // |1 - 1.25| + |1 - 0.8| + 0 = 0.45, divided by 3
        let g = mean_abs_relative_beta_gap(&pairs).unwrap();
        assert!((g - 0.15).abs() < 1e-12);
        assert!(mean_abs_relative_beta_gap(&[(1.0, 0.0)]).is_err());
        assert!(mean_abs_relative_beta_gap(&[]).is_err());
    }

    #[test]
    fn curves_for_linear_data() {
        let x = market(80, 14);
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 0.1).collect();
        let curves = regression_curves("LIN", &x, &y, 0.6, 0.95, 21).unwrap();
        assert_eq!(curves.len(), 6);
        let deriv = curves
            .iter()
            .find(|c| c.kind == CurveKind::Derivative)
            .unwrap();
        assert_eq!(deriv.x.len(), 21);
        assert!(deriv.y.iter().all(|d| (d - 0.5).abs() < 1e-9));
        let lo = &curves[1].y;
        let hi = &curves[2].y;
        assert!(lo
            .iter()
            .zip(&curves[0].y)
            .zip(hi)
            .all(|((l, f), u)| l <= f && f <= u));
    }
}
