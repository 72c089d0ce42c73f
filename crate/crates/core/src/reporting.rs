//! Table and curve serialization.
//!
//! CSV tables use fixed column orders and rounding; JSON tables carry every
//! field at full double precision. P-values in CSV carry significance stars
//! as a prefix: `*` below 0.10, `**` below 0.05, `***` below 0.01.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::{CharacteristicLineRow, Ff3Row, SmlRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableFormat {
    /// Decimals for every statistic except p-values.
    pub decimals: usize,
    pub p_decimals: usize,
}

impl TableFormat {
    pub const CHARACTERISTIC_LINE: TableFormat = TableFormat {
        decimals: 2,
        p_decimals: 2,
    };
    pub const SECURITY_MARKET_LINE: TableFormat = TableFormat {
        decimals: 4,
        p_decimals: 2,
    };
    pub const THREE_FACTOR: TableFormat = TableFormat {
        decimals: 3,
        p_decimals: 2,
    };

    pub fn number(&self, v: f64) -> String {
        fixed(v, self.decimals)
    }

    pub fn p_value(&self, p: f64) -> String {
        starred_p_value(p, self.p_decimals)
    }
}

fn fixed(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return "NA".to_string();
    }
    let s = format!("{v:.decimals$}");
    // "-0.00" and friends print as zero
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Rounded p-value with its significance prefix, e.g. `**0.02`.
pub fn starred_p_value(p: f64, decimals: usize) -> String {
    let stars = if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    };
    format!("{stars}{}", fixed(p, decimals))
}

/// A row of one of the report tables.
pub trait TableRow: Serialize {
    fn headers() -> &'static [&'static str];
    fn csv_fields(&self, format: &TableFormat) -> Vec<String>;
}

impl TableRow for CharacteristicLineRow {
    fn headers() -> &'static [&'static str] {
        &[
            "ticker",
            "n_obs",
            "mean_return",
            "p_value",
            "h",
            "r2_kr",
            "alpha_kr",
            "beta_kr",
            "r2_lr",
            "alpha_lr",
            "beta_lr",
        ]
    }

    fn csv_fields(&self, f: &TableFormat) -> Vec<String> {
        vec![
            self.ticker.clone(),
            self.n_obs.to_string(),
            f.number(self.mean_return),
            f.p_value(self.p_value),
            f.number(self.h),
            f.number(self.r2_kr),
            f.number(self.alpha_kr),
            f.number(self.beta_kr),
            f.number(self.r2_lr),
            f.number(self.alpha_lr),
            f.number(self.beta_lr),
        ]
    }
}

impl TableRow for SmlRow {
    fn headers() -> &'static [&'static str] {
        &[
            "segment",
            "n_assets",
            "mean_return",
            "p_value",
            "h",
            "r2_kr",
            "alpha_kr",
            "slope_kr",
            "r2_lr",
            "alpha_lr",
            "slope_lr",
        ]
    }

    fn csv_fields(&self, f: &TableFormat) -> Vec<String> {
        vec![
            self.segment.clone(),
            self.n_assets.to_string(),
            f.number(self.mean_return),
            f.p_value(self.p_value),
            f.number(self.h),
            f.number(self.r2_kr),
            f.number(self.alpha_kr),
            f.number(self.slope_kr),
            f.number(self.r2_lr),
            f.number(self.alpha_lr),
            f.number(self.slope_lr),
        ]
    }
}

impl TableRow for Ff3Row {
    fn headers() -> &'static [&'static str] {
        &[
            "ticker", "p_value", "r2_kr", "alpha_kr", "beta_kr", "s_kr", "h_kr", "r2_lr",
            "alpha_lr", "beta_lr", "s_lr", "h_lr",
        ]
    }

    fn csv_fields(&self, f: &TableFormat) -> Vec<String> {
        vec![
            self.ticker.clone(),
            f.p_value(self.p_value),
            f.number(self.r2_kr),
            f.number(self.alpha_kr),
            f.number(self.beta_kr),
            f.number(self.s_kr),
            f.number(self.h_kr),
            f.number(self.r2_lr),
            f.number(self.alpha_lr),
            f.number(self.beta_lr),
            f.number(self.s_lr),
            f.number(self.h_lr),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

struct Counting<W> {
    inner: W,
    bytes: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Writes `rows` to any writer and returns the byte count.
pub fn write_table<R: TableRow, W: Write>(
    rows: &[R],
    output: OutputFormat,
    format: &TableFormat,
    writer: W,
) -> Result<u64> {
    let mut out = Counting {
        inner: writer,
        bytes: 0,
    };
    match output {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(R::headers())?;
            for row in rows {
                w.write_record(row.csv_fields(format))?;
            }
            w.flush().map_err(|e| Error::Csv(e.into()))?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(serde_json::Error::io)?;
        }
    }
    Ok(out.bytes)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `rows` to `dest`. An empty slice produces a header-only CSV (or
/// an empty JSON array).
pub fn emit_table<R: TableRow>(
    rows: &[R],
    output: OutputFormat,
    format: &TableFormat,
    dest: &Path,
) -> Result<u64> {
    let mut buf = Vec::new();
    let n = write_table(rows, output, format, &mut buf)?;
    let mut file = create(dest)?;
    file.write_all(&buf)
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(dest, e))?;
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Fit,
    BandLower,
    BandUpper,
    Derivative,
    Alpha,
    LinearBaseline,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Fit => "fit",
            CurveKind::BandLower => "band_lower",
            CurveKind::BandUpper => "band_upper",
            CurveKind::Derivative => "derivative",
            CurveKind::Alpha => "alpha",
            CurveKind::LinearBaseline => "linear_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub asset: String,
    pub bandwidth: f64,
    /// Confidence level, for band curves.
    pub level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub kind: CurveKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub meta: CurveMeta,
}

impl CurveSeries {
    pub fn new(kind: CurveKind, x: Vec<f64>, y: Vec<f64>, meta: CurveMeta) -> Result<Self> {
        let curve = Self { kind, x, y, meta };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::Domain(format!(
                "{} curve for {} has an empty grid",
                self.kind.name(),
                self.meta.asset
            )));
        }
        if self.x.len() != self.y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                actual: self.y.len(),
            });
        }
        if self.x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(format!(
                "{} curve for {} has a non-increasing grid",
                self.kind.name(),
                self.meta.asset
            )));
        }
        Ok(())
    }

    pub fn file_name(&self) -> String {
        let asset: String = self
            .meta
            .asset
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        format!("{asset}_{}.csv", self.kind.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub kind: CurveKind,
    pub points: usize,
    #[serde(flatten)]
    pub meta: CurveMeta,
}

pub const CURVE_MANIFEST: &str = "manifest.json";

/// Writes one `x,y` CSV per curve into `dir` plus a manifest listing them.
/// Returns the curve file paths in input order.
pub fn emit_curves(curves: &[CurveSeries], dir: &Path) -> Result<Vec<PathBuf>> {
    for c in curves {
        c.validate()?;
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(curves.len());
    let mut manifest = Vec::with_capacity(curves.len());
    for c in curves {
        let name = c.file_name();
        let path = dir.join(&name);
        let mut w = create(&path)?;
        let io = |e| Error::io(&path, e);
        writeln!(w, "x,y").map_err(io)?;
        for (x, y) in c.x.iter().zip(&c.y) {
            writeln!(w, "{x},{y}").map_err(io)?;
        }
        w.flush().map_err(io)?;
        manifest.push(ManifestEntry {
            file: name,
            kind: c.kind,
            points: c.x.len(),
            meta: c.meta.clone(),
        });
        paths.push(path);
    }
    let mpath = dir.join(CURVE_MANIFEST);
    let mut w = create(&mpath)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&mpath, e))?;
    Ok(paths)
}
