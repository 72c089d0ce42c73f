//! Gaussian kernels and Nadaraya-Watson weights.
//!
//! Kernels are evaluated at the standardized distance `(x_d - X_id) / h_d`
//! without a `1/h` prefactor: the weights are a ratio, so any constant factor
//! cancels from every downstream quantity.
//!
//! Raw weights are computed from the kernel exponent `-½ Σ u_d²` shifted by
//! its maximum over the sample, which keeps the ratio exact even when every
//! unshifted value would underflow. An anchor is only rejected (empty
//! neighborhood) when every exponent lies below the double-precision
//! underflow limit.

use std::f64::consts::PI;

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{ensure_finite, ensure_same_len, Error, Result};
use crate::exec;

/// Exponent below which `exp` underflows to zero in double precision.
pub const UNDERFLOW_EXPONENT: f64 = -745.0;

/// `1 / sqrt(2π)`.
pub const GAUSSIAN_NORM: f64 = 0.398_942_280_401_432_7;

/// Squared L2 norm of the standard Gaussian kernel, `1 / (2 sqrt(π))`.
pub fn gaussian_roughness() -> f64 {
    1.0 / (2.0 * PI.sqrt())
}

/// Standard normal density `K(u) = (2π)^(-1/2) exp(-u²/2)`.
pub fn gaussian_kernel(u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("kernel argument {u} is not finite")));
    }
    Ok(GAUSSIAN_NORM * (-0.5 * u * u).exp())
}

/// Product of univariate Gaussian kernels over the components of `u`.
pub fn product_kernel(u: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::Domain("product kernel of an empty vector".into()));
    }
    u.iter()
        .try_fold(1.0, |acc, &ui| Ok(acc * gaussian_kernel(ui)?))
}

/// Diagonal bandwidth matrix, one strictly positive bandwidth per regressor.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BandwidthMatrix {
    diag: Vec<f64>,
}

impl BandwidthMatrix {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidBandwidth("empty bandwidth matrix".into()));
        }
        if let Some(h) = diag.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidBandwidth(format!(
                "bandwidth {h} must be positive and finite"
            )));
        }
        Ok(Self { diag })
    }

    pub fn scalar(h: f64) -> Result<Self> {
        Self::new(vec![h])
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Bandwidth of the first (or only) regressor.
    pub fn first(&self) -> f64 {
        self.diag[0]
    }

    fn inverse(&self) -> Vec<f64> {
        self.diag.iter().map(|h| 1.0 / h).collect()
    }
}

/// Normalized Nadaraya-Watson weights at one anchor: `(1/n) Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub anchor: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weighted average of `values`, `(1/n) Σ w_i v_i`.
    pub fn average(&self, values: &[f64]) -> f64 {
        let n = self.weights.len() as f64;
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            / n
    }
}

/// Views a univariate sample as an `n × 1` regressor matrix.
pub fn column_view(xs: &[f64]) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((xs.len(), 1), xs).expect("contiguous slice")
}

pub(crate) fn check_regressors(xs: ArrayView2<f64>, h: &BandwidthMatrix) -> Result<()> {
    if xs.nrows() == 0 {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    if xs.ncols() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: xs.ncols(),
        });
    }
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("regressors contain non-finite values".into()));
    }
    Ok(())
}

#[inline]
fn exponent(x: &[f64], row: ArrayView1<f64>, inv_h: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((xd, xid), ih) in x.iter().zip(row.iter()).zip(inv_h) {
        let u = (xd - xid) * ih;
        s += u * u;
    }
    -0.5 * s
}

/// Kernel values `K_H(x - X_i)` up to a common positive factor, scaled so the
/// largest equals one.
pub(crate) fn relative_kernel_values(
    x: &[f64],
    xs: ArrayView2<f64>,
    inv_h: &[f64],
) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = xs
        .rows()
        .into_iter()
        .map(|r| exponent(x, r, inv_h))
        .collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max >= UNDERFLOW_EXPONENT) {
        return Err(Error::EmptyNeighborhood { anchor: x.to_vec() });
    }
    for v in &mut values {
        *v = (*v - max).exp();
    }
    Ok(values)
}

/// Nadaraya-Watson weights `W_Hi(x)` of every observation at anchor `x`.
///
/// A single observation always gets weight one, since the ratio `K/K` does
/// not depend on the anchor.
pub fn nw_weights(x: &[f64], xs: ArrayView2<f64>, h: &BandwidthMatrix) -> Result<WeightVector> {
    check_regressors(xs, h)?;
    ensure_same_len(h.dim(), x.len())?;
    ensure_finite(x, "anchor")?;
    if xs.nrows() == 1 {
        return Ok(WeightVector {
            anchor: x.to_vec(),
            weights: vec![1.0],
        });
    }
    let raw = relative_kernel_values(x, xs, &h.inverse())?;
    let total: f64 = raw.iter().sum();
    let n = raw.len() as f64;
    Ok(WeightVector {
        anchor: x.to_vec(),
        weights: raw.into_iter().map(|k| n * k / total).collect(),
    })
}

/// Row-stochastic smoother for a fixed sample and bandwidth: row `i` holds
/// the weights `W_Hj(X_i) / n`, so `S y` is the Nadaraya-Watson fit at the
/// sample points.
#[derive(Debug, Clone)]
pub struct SmootherMatrix {
    n: usize,
    rows: Vec<f64>,
}

impl SmootherMatrix {
    pub fn new(xs: ArrayView2<f64>, h: &BandwidthMatrix) -> Result<Self> {
        check_regressors(xs, h)?;
        let inv_h = h.inverse();
        let n = xs.nrows();
        let rows = exec::map_indexed(n, |i| {
            let anchor = xs.row(i).to_vec();
            relative_kernel_values(&anchor, xs, &inv_h).map(|mut k| {
                let total: f64 = k.iter().sum();
                k.iter_mut().for_each(|v| *v /= total);
                k
            })
        });
        let mut flat = Vec::with_capacity(n * n);
        for row in rows {
            flat.extend(row?);
        }
        Ok(Self { n, rows: flat })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    /// Own-weight (hat diagonal) of observation `i`.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.rows[i * self.n + i]
    }

    /// `S v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            v.len(),
            self.n,
            "smoother applied to vector of wrong length"
        );
        exec::map_indexed(self.n, |i| {
            self.row(i).iter().zip(v).map(|(s, x)| s * x).sum()
        })
    }
}
