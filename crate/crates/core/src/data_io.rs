//! Return panels: CSV ingestion, excess-return alignment and synthetic
//! panels with known ground truth.
//!
//! Input schemas (ISO-8601 dates, `.` decimal point, optional `.gz`):
//!
//! ```text
//! returns:  date,ticker,ret
//! factors:  date,mkt_rf,smb,hml,rf
//! ```
//!
//! Values are percent per period unless the decimal unit is selected, in
//! which case they are multiplied by 100 on load. An empty `ret` (or `NA`,
//! `NaN`) is a gap for that asset on that date.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use indexmap::IndexMap;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const RETURNS_HEADER: [&str; 3] = ["date", "ticker", "ret"];
pub const FACTORS_HEADER: [&str; 5] = ["date", "mkt_rf", "smb", "hml", "rf"];
pub const FACTOR_NAMES: [&str; 3] = ["MKT-RF", "SMB", "HML"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Percent,
    Decimal,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::Percent => 1.0,
            Units::Decimal => 100.0,
        }
    }
}

impl FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "percent" => Ok(Units::Percent),
            "decimal" => Ok(Units::Decimal),
            other => Err(Error::Config(format!("unknown units `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub units: Units,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorColumns {
    pub mkt_rf: Vec<Option<f64>>,
    pub smb: Vec<Option<f64>>,
    pub hml: Vec<Option<f64>>,
}

/// Date-indexed returns in percent per period. Every series has one entry
/// per panel date; `None` marks a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    pub assets: IndexMap<String, Vec<Option<f64>>>,
    pub market: Vec<Option<f64>>,
    pub risk_free: Vec<Option<f64>>,
    pub factors: Option<FactorColumns>,
}

impl ReturnPanel {
    /// Non-missing observations per asset.
    pub fn observation_counts(&self) -> IndexMap<String, usize> {
        self.assets
            .iter()
            .map(|(id, s)| (id.clone(), s.iter().flatten().count()))
            .collect()
    }

    pub fn asset_ids(&self) -> impl Iterator<Item = &str> {
        self.assets.keys().map(String::as_str)
    }

    fn market_excess_at(&self, t: usize) -> Option<f64> {
        match &self.factors {
            Some(f) => f.mkt_rf[t],
            None => Some(self.market[t]? - self.risk_free[t]?),
        }
    }
}

/// Aligned single-factor series for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessSeries {
    pub dates: Vec<NaiveDate>,
    /// `r_j - r_f`.
    pub asset: Vec<f64>,
    /// `r_m - r_f`.
    pub market: Vec<f64>,
    /// `r_j`.
    pub raw_asset: Vec<f64>,
}

/// Aligned three-factor series for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries {
    pub dates: Vec<NaiveDate>,
    pub asset: Vec<f64>,
    /// `n × 3`: MKT-RF, SMB, HML.
    pub factors: Array2<f64>,
    pub raw_asset: Vec<f64>,
}

/// Excess returns of `asset_id` and of the market on the dates where the
/// asset, the market and the risk-free rate are all present.
pub fn excess_returns(panel: &ReturnPanel, asset_id: &str) -> Result<ExcessSeries> {
    let series = panel
        .assets
        .get(asset_id)
        .ok_or_else(|| Error::UnknownAsset(asset_id.to_string()))?;
    let mut out = ExcessSeries {
        dates: Vec::new(),
        asset: Vec::new(),
        market: Vec::new(),
        raw_asset: Vec::new(),
    };
    for (t, r) in series.iter().enumerate() {
        let (Some(r), Some(rf), Some(m)) = (*r, panel.risk_free[t], panel.market_excess_at(t))
        else {
            continue;
        };
        out.dates.push(panel.dates[t]);
        out.asset.push(r - rf);
        out.market.push(m);
        out.raw_asset.push(r);
    }
    if out.dates.is_empty() {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    Ok(out)
}

/// Asset excess returns with the three factors on the asset's valid dates.
pub fn factor_series(panel: &ReturnPanel, asset_id: &str) -> Result<FactorSeries> {
    let series = panel
        .assets
        .get(asset_id)
        .ok_or_else(|| Error::UnknownAsset(asset_id.to_string()))?;
    let f = panel
        .factors
        .as_ref()
        .ok_or_else(|| Error::Config("panel has no SMB/HML factors".into()))?;
    let mut dates = Vec::new();
    let mut asset = Vec::new();
    let mut raw = Vec::new();
    let mut flat = Vec::new();
    for (t, r) in series.iter().enumerate() {
        let (Some(r), Some(rf), Some(m), Some(s), Some(h)) =
            (*r, panel.risk_free[t], f.mkt_rf[t], f.smb[t], f.hml[t])
        else {
            continue;
        };
        dates.push(panel.dates[t]);
        asset.push(r - rf);
        raw.push(r);
        flat.extend([m, s, h]);
    }
    if dates.is_empty() {
        return Err(Error::InsufficientData {
            required: 1,
            actual: 0,
        });
    }
    let factors = Array2::from_shape_vec((dates.len(), 3), flat).expect("three columns per row");
    Ok(FactorSeries {
        dates,
        asset,
        factors,
        raw_asset: raw,
    })
}

fn open_maybe_gz(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(flate2::read::GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

struct CsvTable {
    path: PathBuf,
    reader: csv::Reader<Box<dyn Read>>,
    columns: Vec<usize>,
}

impl CsvTable {
    fn open(path: &Path, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(open_maybe_gz(path)?);
        let headers = reader.headers()?.clone();
        let columns = required
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == *name)
                    .ok_or_else(|| Error::MissingColumn {
                        path: path.to_path_buf(),
                        column: name.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            path: path.to_path_buf(),
            reader,
            columns,
        })
    }

    /// Visits each record as `(line, fields in `required` order)`.
    fn for_each(mut self, mut f: impl FnMut(&Path, u64, Vec<&str>) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::Parse {
                    path: self.path.clone(),
                    line,
                    message: e.to_string(),
                }
            })?;
            if !more {
                return Ok(());
            }
            let line = record.position().map_or(0, |p| p.line());
            let fields = self
                .columns
                .iter()
                .map(|&c| record.get(c).unwrap_or(""))
                .collect();
            f(&self.path, line, fields)?;
        }
    }
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad date `{s}`: {e}"),
    })
}

fn parse_value(path: &Path, line: u64, s: &str, allow_gap: bool) -> Result<Option<f64>> {
    if allow_gap && (s.is_empty() || s == "NA" || s.eq_ignore_ascii_case("nan")) {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad number `{s}`"),
        }),
    }
}

/// Reads a returns file and a factors file into one panel indexed by the
/// union of their dates.
pub fn load_panel(
    returns_path: &Path,
    factors_path: &Path,
    options: &LoadOptions,
) -> Result<ReturnPanel> {
    let scale = options.units.scale();

    let mut factor_rows: IndexMap<NaiveDate, [f64; 4]> = IndexMap::new();
    CsvTable::open(factors_path, &FACTORS_HEADER)?.for_each(|path, line, f| {
        let date = parse_date(path, line, f[0])?;
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parse_value(path, line, f[k + 1], false)?.expect("gaps rejected") * scale;
        }
        if factor_rows.insert(date, vals).is_some() {
            return Err(Error::DuplicateDate {
                path: path.to_path_buf(),
                date: date.to_string(),
            });
        }
        Ok(())
    })?;

    let mut returns: IndexMap<String, IndexMap<NaiveDate, Option<f64>>> = IndexMap::new();
    CsvTable::open(returns_path, &RETURNS_HEADER)?.for_each(|path, line, f| {
        let date = parse_date(path, line, f[0])?;
        let ticker = f[1];
        if ticker.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "empty ticker".into(),
            });
        }
        let value = parse_value(path, line, f[2], true)?.map(|v| v * scale);
        let series = returns.entry(ticker.to_string()).or_default();
        if series.insert(date, value).is_some() {
            return Err(Error::DuplicateDate {
                path: path.to_path_buf(),
                date: format!("{date} (ticker {ticker})"),
            });
        }
        Ok(())
    })?;

    let mut all_dates: BTreeSet<NaiveDate> = factor_rows.keys().copied().collect();
    for s in returns.values() {
        all_dates.extend(s.keys().copied());
    }
    let dates: Vec<NaiveDate> = all_dates.into_iter().collect();
    let column = |k: usize| -> Vec<Option<f64>> {
        dates
            .iter()
            .map(|d| factor_rows.get(d).map(|v| v[k]))
            .collect()
    };
    let (mkt_rf, smb, hml, risk_free) = (column(0), column(1), column(2), column(3));
    let market = mkt_rf
        .iter()
        .zip(&risk_free)
        .map(|(m, rf)| Some((*m)? + (*rf)?))
        .collect();
    let assets = returns
        .into_iter()
        .map(|(id, s)| {
            let series = dates.iter().map(|d| s.get(d).copied().flatten()).collect();
            (id, series)
        })
        .collect();
    Ok(ReturnPanel {
        dates,
        assets,
        market,
        risk_free,
        factors: Some(FactorColumns { mkt_rf, smb, hml }),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Writes a panel in the input schemas (percent units).
pub fn write_panel(panel: &ReturnPanel, returns_path: &Path, factors_path: &Path) -> Result<()> {
    let mut w = create(returns_path)?;
    writeln!(w, "{}", RETURNS_HEADER.join(",")).map_err(io(returns_path))?;
    for (t, date) in panel.dates.iter().enumerate() {
        for (id, series) in &panel.assets {
            if series[t].is_some() {
                writeln!(w, "{date},{id},{}", fmt_opt(series[t])).map_err(io(returns_path))?;
            }
        }
    }
    w.flush().map_err(io(returns_path))?;

    let mut w = create(factors_path)?;
    writeln!(w, "{}", FACTORS_HEADER.join(",")).map_err(io(factors_path))?;
    for (t, date) in panel.dates.iter().enumerate() {
        let mkt = panel.market_excess_at(t);
        let (smb, hml) = match &panel.factors {
            Some(f) => (f.smb[t], f.hml[t]),
            None => (Some(0.0), Some(0.0)),
        };
        if let (Some(m), Some(s), Some(h), Some(rf)) = (mkt, smb, hml, panel.risk_free[t]) {
            writeln!(w, "{date},{m},{s},{h},{rf}").map_err(io(factors_path))?;
        }
    }
    w.flush().map_err(io(factors_path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dgp {
    /// `α + b x`
    Linear,
    /// `α + b x + c x²`
    Quadratic,
    /// `α + b x + c x² + d x³`
    Cubic,
    /// `α + b₁ x + (b₂ - b₁) max(x - τ, 0)`, τ defaulting to the sample median.
    Threshold,
    /// `α + b MKT + s SMB + h HML`
    Ff3Linear,
    /// `α + Σ_k c_k x^k` with user coefficients.
    CustomCoefficients,
}

impl Dgp {
    pub fn name(self) -> &'static str {
        match self {
            Dgp::Linear => "linear",
            Dgp::Quadratic => "quadratic",
            Dgp::Cubic => "cubic",
            Dgp::Threshold => "threshold",
            Dgp::Ff3Linear => "ff3-linear",
            Dgp::CustomCoefficients => "custom-coefficients",
        }
    }

    pub fn default_params(self) -> TrueParams {
        let coefficients = match self {
            Dgp::Linear => vec![1.0],
            Dgp::Quadratic => vec![0.0, 1.0],
            Dgp::Cubic => vec![0.0, 0.0, 1.0],
            Dgp::Threshold => vec![1.0, 2.0],
            Dgp::Ff3Linear => vec![1.0, 0.3, 0.2],
            Dgp::CustomCoefficients => vec![1.0],
        };
        TrueParams {
            alpha: 0.0,
            coefficients,
            threshold: None,
        }
    }

    fn coefficient_count_ok(self, k: usize) -> bool {
        match self {
            Dgp::Linear => k == 1,
            Dgp::Quadratic | Dgp::Threshold => k == 2,
            Dgp::Cubic | Dgp::Ff3Linear => k == 3,
            Dgp::CustomCoefficients => k >= 1,
        }
    }
}

impl FromStr for Dgp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => Dgp::Linear,
            "quadratic" => Dgp::Quadratic,
            "cubic" => Dgp::Cubic,
            "threshold" => Dgp::Threshold,
            "ff3-linear" => Dgp::Ff3Linear,
            "custom-coefficients" | "custom" => Dgp::CustomCoefficients,
            other => return Err(Error::UnknownDgp(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParams {
    pub alpha: f64,
    pub coefficients: Vec<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dgp: Dgp,
    pub n: usize,
    pub n_assets: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub true_params: TrueParams,
    /// Standard deviation of the market excess return.
    pub market_sigma: f64,
    /// Standard deviation of SMB and HML.
    pub factor_sigma: f64,
    /// Constant risk-free rate per period.
    pub risk_free: f64,
}

impl SyntheticSpec {
    pub fn new(dgp: Dgp, n: usize, seed: u64) -> Self {
        Self {
            dgp,
            n,
            n_assets: 1,
            noise_sigma: 0.0,
            seed,
            true_params: dgp.default_params(),
            market_sigma: 1.0,
            factor_sigma: 0.5,
            risk_free: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::Config(format!("synthetic n = {} < 10", self.n)));
        }
        if self.n_assets == 0 {
            return Err(Error::Config(
                "synthetic panel needs at least one asset".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise sigma {}", self.noise_sigma)));
        }
        if !(self.market_sigma > 0.0 && self.factor_sigma > 0.0) {
            return Err(Error::Config("factor volatilities must be positive".into()));
        }
        if !self
            .dgp
            .coefficient_count_ok(self.true_params.coefficients.len())
        {
            return Err(Error::Config(format!(
                "{} coefficients do not fit the `{}` process",
                self.true_params.coefficients.len(),
                self.dgp.name()
            )));
        }
        Ok(())
    }
}

/// Known truth behind a synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dgp: Dgp,
    pub params: TrueParams,
    /// Resolved threshold for the threshold process.
    pub threshold: Option<f64>,
    pub assets: Vec<AssetTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetTruth {
    pub id: String,
    /// `m(X_i)` in panel date order.
    pub m_values: Vec<f64>,
    /// Gradient of `m` at each observation.
    pub derivatives: Vec<Vec<f64>>,
    /// Sample-average derivative (the loadings the semi-parametric
    /// estimators target).
    pub loadings: Vec<f64>,
    /// `mean(m(X_i) - loadings · X_i)`.
    pub alpha: f64,
}

impl GroundTruth {
    /// Observations below / at-or-above the threshold.
    pub fn regime_counts(&self, market_excess: &[f64]) -> Option<(usize, usize)> {
        let tau = self.threshold?;
        let below = market_excess.iter().filter(|x| **x < tau).count();
        Some((below, market_excess.len() - below))
    }

    /// The regression function at a regressor row.
    pub fn mean_function(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        let c = &p.coefficients;
        match self.dgp {
            Dgp::Threshold => {
                let tau = self.threshold.unwrap_or(0.0);
                p.alpha + c[0] * x[0] + (c[1] - c[0]) * (x[0] - tau).max(0.0)
            }
            Dgp::Ff3Linear => p.alpha + c.iter().zip(x).map(|(b, v)| b * v).sum::<f64>(),
            _ => {
                p.alpha
                    + c.iter()
                        .enumerate()
                        .map(|(k, ck)| ck * x[0].powi(k as i32 + 1))
                        .sum::<f64>()
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let c = &self.params.coefficients;
        match self.dgp {
            Dgp::Threshold => {
                let tau = self.threshold.unwrap_or(0.0);
                vec![if x[0] < tau { c[0] } else { c[1] }]
            }
            Dgp::Ff3Linear => c.clone(),
            _ => vec![c
                .iter()
                .enumerate()
                .map(|(k, ck)| (k as f64 + 1.0) * ck * x[0].powi(k as i32))
                .sum()],
        }
    }
}

const START_DATE: (i32, u32, u32) = (2000, 1, 3);

fn business_days(n: usize) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(START_DATE.0, START_DATE.1, START_DATE.2).expect("valid");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Generates a panel from `spec`. Factors come from ChaCha stream 0 and the
/// noise of asset `k` from stream `k + 1`, so adding assets leaves earlier
/// assets unchanged.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(ReturnPanel, GroundTruth)> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    let market_dist = Normal::new(0.0, spec.market_sigma).expect("positive sigma");
    let factor_dist = Normal::new(0.0, spec.factor_sigma).expect("positive sigma");
    let mut mkt = Vec::with_capacity(n);
    let mut smb = Vec::with_capacity(n);
    let mut hml = Vec::with_capacity(n);
    for _ in 0..n {
        mkt.push(market_dist.sample(&mut rng));
        smb.push(factor_dist.sample(&mut rng));
        hml.push(factor_dist.sample(&mut rng));
    }

    let threshold = match spec.dgp {
        Dgp::Threshold => Some(
            spec.true_params
                .threshold
                .unwrap_or_else(|| stats::quantile_sorted(&stats::sorted_copy(&mkt), 0.5)),
        ),
        _ => None,
    };
    let mut truth = GroundTruth {
        dgp: spec.dgp,
        params: spec.true_params.clone(),
        threshold,
        assets: Vec::with_capacity(spec.n_assets),
    };

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| match spec.dgp {
            Dgp::Ff3Linear => vec![mkt[i], smb[i], hml[i]],
            _ => vec![mkt[i]],
        })
        .collect();
    let m_values: Vec<f64> = rows.iter().map(|x| truth.mean_function(x)).collect();
    let derivatives: Vec<Vec<f64>> = rows.iter().map(|x| truth.gradient(x)).collect();
    let dim = rows[0].len();
    let loadings: Vec<f64> = match spec.dgp {
        Dgp::Linear | Dgp::Ff3Linear => spec.true_params.coefficients.clone(),
        _ => (0..dim)
            .map(|d| stats::mean(&derivatives.iter().map(|g| g[d]).collect::<Vec<_>>()))
            .collect(),
    };
    let abnormal: Vec<f64> = rows
        .iter()
        .zip(&m_values)
        .map(|(x, m)| m - x.iter().zip(&loadings).map(|(v, l)| v * l).sum::<f64>())
        .collect();
    let alpha = stats::mean(&abnormal);

    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("sigma");
    let width = spec.n_assets.to_string().len().max(3);
    let mut assets = IndexMap::new();
    for k in 0..spec.n_assets {
        let id = format!("A{:0width$}", k + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64 + 1);
        let series: Vec<Option<f64>> = m_values
            .iter()
            .map(|m| {
                let e = if spec.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                Some(m + e + spec.risk_free)
            })
            .collect();
        assets.insert(id.clone(), series);
        truth.assets.push(AssetTruth {
            id,
            m_values: m_values.clone(),
            derivatives: derivatives.clone(),
            loadings: loadings.clone(),
            alpha,
        });
    }

    let rf = vec![Some(spec.risk_free); n];
    let panel = ReturnPanel {
        dates: business_days(n),
        assets,
        market: mkt.iter().map(|m| Some(m + spec.risk_free)).collect(),
        risk_free: rf,
        factors: Some(FactorColumns {
            mkt_rf: mkt.into_iter().map(Some).collect(),
            smb: smb.into_iter().map(Some).collect(),
            hml: hml.into_iter().map(Some).collect(),
        }),
    };
    Ok((panel, truth))
}
