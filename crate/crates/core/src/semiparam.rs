//! Semi-parametric risk and performance measures.
//!
//! The semi-parametric beta is the sample mean of local linear slopes
//! anchored at every observation; the semi-parametric alpha is the mean
//! abnormal return left after removing `beta* · X`. Pointwise curves evaluate
//! the same local fits on a grid.

use ndarray::{Array2, ArrayView2};

use crate::error::{ensure_finite, ensure_same_len, Error, Result};
use crate::exec;
use crate::kernel::{column_view, BandwidthMatrix};
use crate::regression::{local_linear_fit, nw_predict};
use crate::stats;

/// Default number of grid points for pointwise curves.
pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct SemiBeta {
    pub beta_star: f64,
    pub per_point_slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiAlpha {
    pub alpha_star: f64,
    pub per_point_alphas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiParamMeasures {
    pub alpha_star: f64,
    /// One loading per regressor (beta, or beta/SMB/HML for three factors).
    pub loadings: Vec<f64>,
    /// `n × D` local slopes anchored at each observation.
    pub per_point_slopes: Array2<f64>,
    pub per_point_alphas: Vec<f64>,
}

/// Local linear slopes at every sample point, `n × D`.
fn slopes_at_samples(xs: ArrayView2<f64>, ys: &[f64], h: &BandwidthMatrix) -> Result<Array2<f64>> {
    let (n, dim) = xs.dim();
    let fits = exec::map_indexed(n, |i| {
        let anchor = xs.row(i).to_vec();
        local_linear_fit(&anchor, xs, ys, h)
    });
    let mut slopes = Array2::zeros((n, dim));
    let mut singular = Vec::new();
    for (i, fit) in fits.into_iter().enumerate() {
        match fit {
            Ok(est) => {
                for (d, s) in est.slopes().iter().enumerate() {
                    slopes[[i, d]] = *s;
                }
            }
            Err(Error::LocalSingularity { anchors }) => singular.extend(anchors),
            Err(e) => return Err(e),
        }
    }
    if singular.is_empty() {
        Ok(slopes)
    } else {
        Err(Error::LocalSingularity { anchors: singular })
    }
}

fn column_means(m: &Array2<f64>) -> Vec<f64> {
    m.columns()
        .into_iter()
        .map(|c| stats::mean(&c.to_vec()))
        .collect()
}

/// Semi-parametric beta: mean local linear slope over the sample.
pub fn semi_beta(xs: &[f64], ys: &[f64], h: f64) -> Result<SemiBeta> {
    ensure_same_len(xs.len(), ys.len())?;
    let bw = BandwidthMatrix::scalar(h)?;
    let slopes = slopes_at_samples(column_view(xs), ys, &bw)?;
    let per_point_slopes = slopes.column(0).to_vec();
    Ok(SemiBeta {
        beta_star: stats::mean(&per_point_slopes),
        per_point_slopes,
    })
}

/// Semi-parametric alpha: mean of `Y_i - beta* X_i`.
pub fn semi_alpha(xs: &[f64], ys: &[f64], beta_star: f64) -> Result<SemiAlpha> {
    ensure_same_len(xs.len(), ys.len())?;
    if !beta_star.is_finite() {
        return Err(Error::Domain(format!("beta* = {beta_star} is not finite")));
    }
    ensure_finite(xs, "x")?;
    ensure_finite(ys, "y")?;
    let per_point_alphas: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - beta_star * x).collect();
    Ok(SemiAlpha {
        alpha_star: stats::mean(&per_point_alphas),
        per_point_alphas,
    })
}

/// Semi-parametric loadings and alpha for any number of regressors (the
/// three-factor case uses market, SMB and HML columns).
pub fn ff3_semi_params(
    xs: ArrayView2<f64>,
    ys: &[f64],
    h: &BandwidthMatrix,
) -> Result<SemiParamMeasures> {
    ensure_same_len(xs.nrows(), ys.len())?;
    let per_point_slopes = slopes_at_samples(xs, ys, h)?;
    let loadings = column_means(&per_point_slopes);
    let per_point_alphas: Vec<f64> = xs
        .rows()
        .into_iter()
        .zip(ys)
        .map(|(row, y)| y - row.iter().zip(&loadings).map(|(x, l)| l * x).sum::<f64>())
        .collect();
    Ok(SemiParamMeasures {
        alpha_star: stats::mean(&per_point_alphas),
        loadings,
        per_point_slopes,
        per_point_alphas,
    })
}

/// Local linear slope at each grid point. Points where the local design is
/// singular (or empty) are `None`.
pub fn beta_curve(xs: &[f64], ys: &[f64], h: f64, grid: &[f64]) -> Result<Vec<Option<f64>>> {
    ensure_same_len(xs.len(), ys.len())?;
    let bw = BandwidthMatrix::scalar(h)?;
    let view = column_view(xs);
    let points = exec::map_indexed(grid.len(), |g| {
        match local_linear_fit(&[grid[g]], view, ys, &bw) {
            Ok(est) => Ok(Some(est.slopes()[0])),
            Err(Error::LocalSingularity { .. } | Error::EmptyNeighborhood { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    points.into_iter().collect()
}

/// Pointwise abnormal return `m̂_h(x) - beta* x` on the grid.
pub fn alpha_curve(
    xs: &[f64],
    ys: &[f64],
    h: f64,
    beta_star: f64,
    grid: &[f64],
) -> Result<Vec<Option<f64>>> {
    ensure_same_len(xs.len(), ys.len())?;
    let bw = BandwidthMatrix::scalar(h)?;
    let view = column_view(xs);
    let points = exec::map_indexed(grid.len(), |g| {
        let x = grid[g];
        match nw_predict(&[x], view, ys, &bw) {
            Ok(m) => Ok(Some(m - beta_star * x)),
            Err(Error::EmptyNeighborhood { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    points.into_iter().collect()
}

/// `points` equally spaced abscissae between the 0.5th and 99.5th
/// percentiles of the sample.
pub fn curve_grid(xs: &[f64], points: usize) -> Vec<f64> {
    if points == 0 || xs.is_empty() {
        return Vec::new();
    }
    let sorted = stats::sorted_copy(xs);
    let lo = stats::quantile_sorted(&sorted, 0.005);
    let hi = stats::quantile_sorted(&sorted, 0.995);
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|k| {
            if k + 1 == points {
                hi
            } else {
                lo + step * k as f64
            }
        })
        .collect()
}
