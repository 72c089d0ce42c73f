//! Nadaraya-Watson and local polynomial regression, the OLS baseline, and
//! goodness-of-fit measures shared by both.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure_finite, ensure_same_len, Error, Result};
use crate::exec;
use crate::kernel::{self, column_view, BandwidthMatrix, GAUSSIAN_NORM};
use crate::stats;

/// Condition estimate above which a (local or global) design is singular.
pub const MAX_CONDITION: f64 = 1e12;

/// `1 - SSE/SST`, identical for kernel and linear fits.
///
/// With a constant response (SST = 0) this is 1 for a perfect fit and
/// `-inf` otherwise. The value is not clamped below.
pub fn r_squared(ys: &[f64], fitted: &[f64]) -> f64 {
    let ybar = stats::mean(ys);
    let sse: Vec<f64> = ys
        .iter()
        .zip(fitted)
        .map(|(y, f)| (y - f).powi(2))
        .collect();
    let sst: Vec<f64> = ys.iter().map(|y| (y - ybar).powi(2)).collect();
    let (sse, sst) = (stats::pairwise_sum(&sse), stats::pairwise_sum(&sst));
    if sst == 0.0 {
        return if sse == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - sse / sst
}

/// Average squared error of a fit against known truth.
pub fn ase(fitted: &[f64], truth: &[f64]) -> Result<f64> {
    ensure_same_len(truth.len(), fitted.len())?;
    if fitted.is_empty() {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    let sq: Vec<f64> = fitted
        .iter()
        .zip(truth)
        .map(|(f, t)| (f - t).powi(2))
        .collect();
    Ok(stats::mean(&sq))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFit {
    pub bandwidth: BandwidthMatrix,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

fn check_sample(xs: ArrayView2<f64>, ys: &[f64]) -> Result<()> {
    ensure_same_len(xs.nrows(), ys.len())?;
    ensure_finite(ys, "y")
}

/// Kernel regression estimate `m̂_H(x)`.
pub fn nw_predict(x: &[f64], xs: ArrayView2<f64>, ys: &[f64], h: &BandwidthMatrix) -> Result<f64> {
    check_sample(xs, ys)?;
    let w = kernel::nw_weights(x, xs, h)?;
    Ok(w.average(ys))
}

/// Kernel regression evaluated at every sample point.
pub fn nw_fit(xs: ArrayView2<f64>, ys: &[f64], h: &BandwidthMatrix) -> Result<KernelFit> {
    check_sample(xs, ys)?;
    if ys.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: ys.len(),
        });
    }
    kernel::check_regressors(xs, h)?;
    let fitted = exec::map_indexed(ys.len(), |i| {
        let anchor = xs.row(i).to_vec();
        kernel::nw_weights(&anchor, xs, h).map(|w| w.average(ys))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let residuals: Vec<f64> = ys.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let r_squared = r_squared(ys, &fitted);
    Ok(KernelFit {
        bandwidth: h.clone(),
        fitted,
        residuals,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub r_squared: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.alpha + self.betas.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Least squares projector for a fixed design `[1 | X]`, reusable across
/// many responses.
#[derive(Debug, Clone)]
pub struct OlsProjector {
    /// Pseudo-inverse, `(D+1) × n`.
    pinv: DMatrix<f64>,
    design: DMatrix<f64>,
}

impl OlsProjector {
    pub fn new(xs: ArrayView2<f64>) -> Result<Self> {
        let (n, d) = xs.dim();
        if n <= d + 1 {
            return Err(Error::InsufficientData {
                required: d + 2,
                actual: n,
            });
        }
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("regressors contain non-finite values".into()));
        }
        let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { xs[[i, j - 1]] });
        let svd = design.clone().svd(true, true);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::SingularDesign { condition });
        }
        let pinv = svd
            .pseudo_inverse(0.0)
            .map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self { pinv, design })
    }

    pub fn fit(&self, ys: &[f64]) -> Result<LinearFit> {
        ensure_same_len(self.design.nrows(), ys.len())?;
        ensure_finite(ys, "y")?;
        let y = DVector::from_column_slice(ys);
        let coef = &self.pinv * &y;
        let fitted_v = &self.design * &coef;
        let fitted: Vec<f64> = fitted_v.iter().copied().collect();
        let residuals: Vec<f64> = ys.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        Ok(LinearFit {
            alpha: coef[0],
            betas: coef.iter().skip(1).copied().collect(),
            r_squared: r_squared(ys, &fitted),
            fitted,
            residuals,
        })
    }
}

/// Ordinary least squares with intercept.
pub fn ols_fit(xs: ArrayView2<f64>, ys: &[f64]) -> Result<LinearFit> {
    ensure_same_len(xs.nrows(), ys.len())?;
    OlsProjector::new(xs)?.fit(ys)
}

/// Local polynomial coefficients at an anchor: the level followed by the
/// slope terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPolyEstimate {
    pub anchor: Vec<f64>,
    pub degree: usize,
    pub coefficients: Vec<f64>,
}

impl LocalPolyEstimate {
    pub fn level(&self) -> f64 {
        self.coefficients[0]
    }

    /// First-order coefficient(s).
    pub fn slopes(&self) -> &[f64] {
        if self.degree == 0 {
            &[]
        } else if self.anchor.len() == 1 {
            &self.coefficients[1..2]
        } else {
            &self.coefficients[1..]
        }
    }
}

/// Weighted least squares design in standardized coordinates. The first
/// column of every row is the constant 1.
///
/// The slope columns and the response are centered at their weighted means
/// before weighting, so both sides of the least squares problem carry the
/// same `sqrt(w)` scale and anchors whose neighbors have tiny weights keep
/// full relative accuracy. The centered design is solved by SVD after
/// scaling its columns to unit norm.
struct WeightedDesign {
    k: usize,
    rows: Vec<f64>,
    weights: Vec<f64>,
    ys: Vec<f64>,
}

impl WeightedDesign {
    fn new(k: usize) -> Self {
        Self {
            k,
            rows: Vec::new(),
            weights: Vec::new(),
            ys: Vec::new(),
        }
    }

    fn add(&mut self, row: &[f64], w: f64, y: f64) {
        self.rows.extend_from_slice(row);
        self.weights.push(w);
        self.ys.push(y);
    }

    /// `None` with fewer rows than coefficients, when a centered column
    /// vanishes, or when the condition estimate of the equilibrated normal
    /// equations (squared singular value ratio) exceeds [`MAX_CONDITION`].
    fn solve(self) -> Option<Vec<f64>> {
        let k = self.k;
        let m = self.ys.len();
        if m < k {
            return None;
        }
        let total: f64 = self.weights.iter().sum();
        let wmean =
            |f: &dyn Fn(usize) -> f64| (0..m).map(|i| self.weights[i] * f(i)).sum::<f64>() / total;
        let y_bar = wmean(&|i| self.ys[i]);
        if k == 1 {
            return Some(vec![y_bar]);
        }
        let means: Vec<f64> = (1..k).map(|c| wmean(&|i| self.rows[i * k + c])).collect();

        let mut z = DMatrix::zeros(m, k - 1);
        let mut rhs = DVector::zeros(m);
        for i in 0..m {
            let s = self.weights[i].sqrt();
            for c in 1..k {
                z[(i, c - 1)] = s * (self.rows[i * k + c] - means[c - 1]);
            }
            rhs[i] = s * (self.ys[i] - y_bar);
        }
        let scale: Vec<f64> = (0..k - 1).map(|c| z.column(c).norm()).collect();
        if scale.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return None;
        }
        for (c, d) in scale.iter().enumerate() {
            z.column_mut(c).unscale_mut(*d);
        }
        let svd = z.svd(true, true);
        let max = svd.singular_values.max();
        let min = svd.singular_values.min();
        if !(min > 0.0 && (max / min).powi(2) <= MAX_CONDITION) {
            return None;
        }
        let gamma = svd.solve(&rhs, 0.0).ok()?;
        let slopes: Vec<f64> = gamma.iter().zip(&scale).map(|(g, d)| g / d).collect();
        let level = y_bar - slopes.iter().zip(&means).map(|(g, c)| g * c).sum::<f64>();
        let mut out = Vec::with_capacity(k);
        out.push(level);
        out.extend(slopes);
        Some(out)
    }
}

fn singular_at(anchor: &[f64]) -> Error {
    Error::LocalSingularity {
        anchors: vec![anchor.to_vec()],
    }
}

/// Univariate local polynomial regression of degree `degree` at `x`.
///
/// Coefficient `k` estimates `m^(k)(x) / k!`; in particular the degree-1
/// slope estimates the derivative.
pub fn local_poly_fit(
    x: f64,
    xs: &[f64],
    ys: &[f64],
    h: f64,
    degree: usize,
) -> Result<LocalPolyEstimate> {
    let bw = BandwidthMatrix::scalar(h)?;
    let view = column_view(xs);
    check_sample(view, ys)?;
    kernel::check_regressors(view, &bw)?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("anchor {x} is not finite")));
    }
    let inv_h = 1.0 / h;
    let weights = kernel::relative_kernel_values(&[x], view, &[inv_h])?;
    let mut ne = WeightedDesign::new(degree + 1);
    let mut row = vec![0.0; degree + 1];
    for ((xi, yi), w) in xs.iter().zip(ys).zip(&weights) {
        if *w == 0.0 {
            continue;
        }
        let z = (xi - x) * inv_h;
        let mut p = 1.0;
        for r in row.iter_mut() {
            *r = p;
            p *= z;
        }
        ne.add(&row, *w, *yi);
    }
    let gamma = ne.solve().ok_or_else(|| singular_at(&[x]))?;
    let coefficients = gamma
        .iter()
        .enumerate()
        .map(|(k, g)| g * inv_h.powi(k as i32))
        .collect();
    Ok(LocalPolyEstimate {
        anchor: vec![x],
        degree,
        coefficients,
    })
}

/// Multivariate local linear regression with product-kernel weights.
/// Returns the level and one slope per regressor.
pub fn local_linear_fit(
    x: &[f64],
    xs: ArrayView2<f64>,
    ys: &[f64],
    h: &BandwidthMatrix,
) -> Result<LocalPolyEstimate> {
    check_sample(xs, ys)?;
    kernel::check_regressors(xs, h)?;
    ensure_same_len(h.dim(), x.len())?;
    ensure_finite(x, "anchor")?;
    let inv_h: Vec<f64> = h.diag().iter().map(|v| 1.0 / v).collect();
    let weights = kernel::relative_kernel_values(x, xs, &inv_h)?;
    let dim = x.len();
    let mut ne = WeightedDesign::new(dim + 1);
    let mut row = vec![1.0; dim + 1];
    for (i, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for d in 0..dim {
            row[d + 1] = (xs[[i, d]] - x[d]) * inv_h[d];
        }
        ne.add(&row, *w, ys[i]);
    }
    let gamma = ne.solve().ok_or_else(|| singular_at(x))?;
    let mut coefficients = Vec::with_capacity(dim + 1);
    coefficients.push(gamma[0]);
    coefficients.extend(gamma[1..].iter().zip(&inv_h).map(|(g, ih)| g * ih));
    Ok(LocalPolyEstimate {
        anchor: x.to_vec(),
        degree: 1,
        coefficients,
    })
}

/// One point of a pointwise confidence band. Where the density estimate is
/// below `1e-12` the bounds are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub fit: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BandPoint {
    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Pointwise asymptotic normal band for the univariate kernel fit:
/// `m̂(x) ± z σ̂(x) sqrt(‖K‖² / (n h f̂(x)))`, with `σ̂²(x)` the kernel-weighted
/// average of squared in-sample residuals and `f̂` the kernel density
/// estimate. No bias correction.
pub fn confidence_band(
    grid: &[f64],
    xs: &[f64],
    ys: &[f64],
    h: f64,
    level: f64,
) -> Result<Vec<BandPoint>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("band level {level} outside (0, 1)")));
    }
    let bw = BandwidthMatrix::scalar(h)?;
    let view = column_view(xs);
    ensure_finite(grid, "grid")?;
    let fit = nw_fit(view, ys, &bw)?;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(g) = grid.iter().find(|g| **g < lo || **g > hi) {
        return Err(Error::Domain(format!(
            "grid point {g} outside the data range [{lo}, {hi}]"
        )));
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 * (1.0 + level));
    let n = xs.len() as f64;
    let sq_resid: Vec<f64> = fit.residuals.iter().map(|r| r * r).collect();
    let roughness = kernel::gaussian_roughness();

    let points = exec::map_indexed(grid.len(), |g| {
        let x = grid[g];
        let mut max_exp = f64::NEG_INFINITY;
        for xi in xs {
            let u = (x - xi) / h;
            max_exp = max_exp.max(-0.5 * u * u);
        }
        let mut total = 0.0;
        let mut fit_sum = 0.0;
        let mut var_sum = 0.0;
        for ((xi, yi), e2) in xs.iter().zip(ys).zip(&sq_resid) {
            let u = (x - xi) / h;
            let k = (-0.5 * u * u - max_exp).exp();
            total += k;
            fit_sum += k * yi;
            var_sum += k * e2;
        }
        let fit_x = fit_sum / total;
        let density = GAUSSIAN_NORM * max_exp.exp() * total / (n * h);
        if !(density >= 1e-12) {
            return BandPoint {
                x,
                fit: fit_x,
                lower: f64::NEG_INFINITY,
                upper: f64::INFINITY,
            };
        }
        let sigma2 = var_sum / total;
        let half = z * (sigma2 * roughness / (n * h * density)).sqrt();
        BandPoint {
            x,
            fit: fit_x,
            lower: fit_x - half,
            upper: fit_x + half,
        }
    });
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn col(xs: &[f64]) -> ArrayView2<'_, f64> {
        column_view(xs)
    }

    #[test]
    fn predict_constant_and_limits() {
        let xs = [0.0, 0.3, 1.1, 2.0];
        let h = BandwidthMatrix::scalar(0.4).unwrap();
        assert!((nw_predict(&[0.7], col(&xs), &[5.0; 4], &h).unwrap() - 5.0).abs() < 1e-14);

        let ys = [1.0, 4.0, -2.0, 3.5];
        let wide = BandwidthMatrix::scalar(1e9).unwrap();
        let m = nw_predict(&[0.7], col(&xs), &ys, &wide).unwrap();
        assert!((m - 1.625).abs() < 1e-6 * 1.625);

        let one = BandwidthMatrix::scalar(1.0).unwrap();
        let mid = nw_predict(&[0.5], col(&[0.0, 1.0]), &[0.0, 1.0], &one).unwrap();
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fit_limits() {
        let xs: Vec<f64> = (0..25).map(|i| (i as f64 * 0.73).sin() * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x - x + 0.3).collect();
        let tight = nw_fit(col(&xs), &ys, &BandwidthMatrix::scalar(1e-6).unwrap()).unwrap();
        assert!((tight.r_squared - 1.0).abs() < 1e-12);
        let wide = nw_fit(col(&xs), &ys, &BandwidthMatrix::scalar(1e9).unwrap()).unwrap();
        assert!(wide.r_squared.abs() < 1e-4);
        for ((f, r), y) in wide.fitted.iter().zip(&wide.residuals).zip(&ys) {
            assert!((f + r - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn ols_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.5, -1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 2.0 * x).collect();
        let fit = ols_fit(col(&xs), &ys).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-12);
        assert!((fit.betas[0] - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_orthogonal_noise() {
        // Σx = 0, Σy = 0 and Σxy = 0 by construction
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let ys = [1.0, -1.0, 0.0, -1.0, 1.0];
        let fit = ols_fit(col(&xs), &ys).unwrap();
        assert!(fit.betas[0].abs() < 1e-14);
        assert!(fit.alpha.abs() < 1e-14);
    }

    #[test]
    fn ols_singular_and_short() {
        let xs = Array2::from_shape_fn((10, 2), |(i, _)| i as f64);
        let ys: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            ols_fit(xs.view(), &ys),
            Err(Error::SingularDesign { .. })
        ));
        assert!(matches!(
            ols_fit(col(&[1.0, 2.0]), &[1.0, 2.0]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn ols_residuals_orthogonal() {
        let xs = Array2::from_shape_fn((40, 3), |(i, j)| ((i * (j + 3) * 7) % 13) as f64 - 6.0);
        let ys: Vec<f64> = (0..40).map(|i| ((i * 11) % 17) as f64 * 0.3).collect();
        let fit = ols_fit(xs.view(), &ys).unwrap();
        let scale: f64 = ys.iter().map(|y| y.abs()).sum();
        assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-8 * scale);
        for d in 0..3 {
            let dot: f64 = fit
                .residuals
                .iter()
                .zip(xs.column(d))
                .map(|(r, x)| r * x)
                .sum();
            assert!(dot.abs() < 1e-8 * scale * 6.0, "{dot}");
        }
    }

    #[test]
    fn ols_r2_equals_squared_correlation() {
        let xs: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos()).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 0.5 * x + ((i % 7) as f64) * 0.1)
            .collect();
        let fit = ols_fit(col(&xs), &ys).unwrap();
        let (mf, my) = (stats::mean(&fit.fitted), stats::mean(&ys));
        let sxy: f64 = fit
            .fitted
            .iter()
            .zip(&ys)
            .map(|(f, y)| (f - mf) * (y - my))
            .sum();
        let sxx: f64 = fit.fitted.iter().map(|f| (f - mf).powi(2)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let corr2 = sxy * sxy / (sxx * syy);
        assert!((fit.r_squared - corr2).abs() < 1e-10);
    }

    #[test]
    fn local_linear_reproduces_lines() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.61).sin() * 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -1.5 + 0.8 * x).collect();
        for &x in &[-1.9, -0.3, 0.0, 1.2, 1.99] {
            for h in [0.1, 0.5, 3.0] {
                let est = local_poly_fit(x, &xs, &ys, h, 1).unwrap();
                assert!((est.coefficients[1] - 0.8).abs() < 1e-9 * 0.8, "{est:?}");
                assert!((est.coefficients[0] - (-1.5 + 0.8 * x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn local_constant_is_nadaraya_watson() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).cos()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3) - x).collect();
        let h = 0.2;
        for &x in &[-0.8, 0.1, 0.6] {
            let lp = local_poly_fit(x, &xs, &ys, h, 0).unwrap().coefficients[0];
            let nw = nw_predict(&[x], col(&xs), &ys, &BandwidthMatrix::scalar(h).unwrap()).unwrap();
            assert!((lp - nw).abs() <= 1e-10 * nw.abs().max(1e-300), "{lp} {nw}");
        }
    }

    #[test]
    fn symmetric_quadratic_has_zero_slope_at_origin() {
        let half: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        let xs: Vec<f64> = half.iter().flat_map(|x| [*x, -*x]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        for h in [0.05, 0.3, 2.0] {
            let est = local_poly_fit(0.0, &xs, &ys, h, 1).unwrap();
            assert!(est.coefficients[1].abs() < 1e-12, "{est:?}");
        }
    }

    #[test]
    fn local_singularity_detected() {
        let xs = [1.0, 1.0, 1.0, 5.0];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let err = local_poly_fit(1.0, &xs, &ys, 0.01, 1).unwrap_err();
        assert!(matches!(err, Error::LocalSingularity { .. }));
    }

    #[test]
    fn multivariate_local_linear_reproduces_planes() {
        let n = 80;
        let xs =
            Array2::from_shape_fn((n, 3), |(i, j)| ((i * (2 * j + 3)) % 19) as f64 * 0.1 - 0.9);
        let ys: Vec<f64> = (0..n)
            .map(|i| 0.01 + 1.1 * xs[[i, 0]] + 0.3 * xs[[i, 1]] - 0.2 * xs[[i, 2]])
            .collect();
        let h = BandwidthMatrix::new(vec![0.3, 0.4, 0.5]).unwrap();
        let est = local_linear_fit(&[0.0, 0.1, -0.2], xs.view(), &ys, &h).unwrap();
        for (got, want) in est.slopes().iter().zip([1.1, 0.3, -0.2]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn ase_examples() {
        assert_eq!(ase(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ase(&[2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(ase(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert!(ase(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn band_constant_and_nested() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
        let grid = [0.1, 0.5, 0.9];
        let flat = confidence_band(&grid, &xs, &[2.0; 60], 0.1, 0.95).unwrap();
        assert!(flat.iter().all(|p| p.half_width() < 1e-12));

        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x + ((i * 7 % 5) as f64 - 2.0) * 0.1)
            .collect();
        let b95 = confidence_band(&grid, &xs, &ys, 0.1, 0.95).unwrap();
        let b99 = confidence_band(&grid, &xs, &ys, 0.1, 0.99).unwrap();
        for (a, b) in b95.iter().zip(&b99) {
            assert!(b.lower <= a.lower && b.upper >= a.upper);
        }
        assert!(confidence_band(&[2.0], &xs, &ys, 0.1, 0.95).is_err());
        assert!(confidence_band(&grid, &xs, &ys, 0.1, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nw_is_equivariant(
            xs in prop::collection::vec(-3.0f64..3.0, 3..30),
            seed in 0u64..1000,
            h in 0.1f64..3.0,
            c in -20.0f64..20.0,
        ) {
            let ys: Vec<f64> = (0..xs.len()).map(|i| ((i as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
            let bw = BandwidthMatrix::scalar(h).unwrap();
            let base = nw_fit(col(&xs), &ys, &bw).unwrap();
            let shifted: Vec<f64> = ys.iter().map(|y| y + c).collect();
            let scaled: Vec<f64> = ys.iter().map(|y| y * c).collect();
            let plus = nw_fit(col(&xs), &shifted, &bw).unwrap();
            let times = nw_fit(col(&xs), &scaled, &bw).unwrap();
            for (i, y) in ys.iter().enumerate() {
                let m = base.fitted[i];
                prop_assert!((plus.fitted[i] - (m + c)).abs() <= 1e-12 * (m.abs() + c.abs()).max(1.0));
                prop_assert!((times.fitted[i] - c * m).abs() <= 1e-12 * (c * m).abs().max(1.0));
                prop_assert!((base.fitted[i] + base.residuals[i] - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }

        #[test]
        fn local_linear_recovers_slope_everywhere(
            xs in prop::collection::vec(-3.0f64..3.0, 3..30),
            a in -2.0f64..2.0,
            b in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
            h in 0.3f64..3.0,
        ) {
            prop_assume!(stats::sample_variance(&xs) > 0.05);
            let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
            for x in &xs {
                let est = local_poly_fit(*x, &xs, &ys, h, 1).unwrap();
                prop_assert!((est.slopes()[0] - b).abs() <= 1e-9 * b.abs());
            }
        }
    }
}
