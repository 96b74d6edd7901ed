//! Sample autocovariances, autocorrelations, portmanteau tests and the
//! spectral machinery shared by the estimation stages.

pub mod eigen;
pub mod linalg;
pub mod special;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
pub use eigen::{sym_eigen, EigenDecomposition};
pub use special::chi2_sf;

/// An `n×p` panel: row `t` holds the observation at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    data: Array2<f64>,
}

impl TimeSeriesPanel {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (n, p) = data.dim();
        if n < 2 {
            return Err(Error::arg(format!("panel needs at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::arg("panel needs at least one column"));
        }
        if let Some(((t, i), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite value {v} at row {t}, column {i}"
            )));
        }
        Ok(TimeSeriesPanel { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::arg("ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data =
            Array2::from_shape_vec((rows.len(), p), flat).map_err(|e| Error::arg(e.to_string()))?;
        Self::new(data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }

    /// First `rows` observations as a new panel.
    pub fn head(&self, rows: usize) -> Result<Self> {
        if rows > self.n() {
            return Err(Error::arg(format!(
                "cannot take {rows} rows from a panel of {}",
                self.n()
            )));
        }
        Self::new(self.data.slice(s![..rows, ..]).to_owned())
    }
}

/// Lag-`k` sample autocovariance matrix.
#[derive(Debug, Clone, Serialize)]
pub struct AutocovMatrix {
    pub lag: usize,
    pub matrix: Array2<f64>,
}

/// Subtracts the column means.
pub fn center(data: ArrayView2<'_, f64>) -> Array2<f64> {
    let means = linalg::column_means(data);
    &data - &means
}

/// `Σ(k) = n⁻¹ Σ_{t>k} x_t x_{t−k}ᵀ` for an already-centered matrix.
pub fn autocov_centered(xc: ArrayView2<'_, f64>, k: usize) -> Array2<f64> {
    let n = xc.nrows();
    let lead = xc.slice(s![k.., ..]);
    let lagged = xc.slice(s![..n - k, ..]);
    lead.t().dot(&lagged) / n as f64
}

fn check_lag(n: usize, k: usize) -> Result<()> {
    if n < 2 || k > n - 2 {
        return Err(Error::arg(format!(
            "lag {k} out of range for n = {n} (max n-2)"
        )));
    }
    Ok(())
}

/// Lag-`k` sample autocovariance of an arbitrary `n×d` matrix, divisor `n`.
/// Any lag `k < n` is accepted.
pub fn autocov(data: ArrayView2<'_, f64>, k: usize) -> Result<Array2<f64>> {
    if k >= data.nrows() {
        return Err(Error::arg(format!(
            "lag {k} out of range for n = {}",
            data.nrows()
        )));
    }
    Ok(autocov_centered(center(data).view(), k))
}

/// Lag-`k` sample autocovariance `Σ̂_y(k)` of a panel.
pub fn sample_autocov(panel: &TimeSeriesPanel, k: usize) -> Result<AutocovMatrix> {
    Ok(AutocovMatrix {
        lag: k,
        matrix: autocov(panel.view(), k)?,
    })
}

fn degenerate(series: ArrayView1<'_, f64>, gamma0: f64) -> bool {
    let scale = series.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = (f64::EPSILON * scale).powi(2) * 16.0;
    !(gamma0 > floor)
}

/// Sample autocorrelations `ρ̂(0..=max_lag)` of a univariate series.
pub fn acf_upto(series: ArrayView1<'_, f64>, max_lag: usize) -> Result<Array1<f64>> {
    let n = series.len();
    check_lag(n, max_lag)?;
    let mean = series.sum() / n as f64;
    let xc: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let gamma0 = xc.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if degenerate(series, gamma0) {
        return Err(Error::DegenerateSeries("series has zero variance".into()));
    }
    let mut out = Array1::zeros(max_lag + 1);
    out[0] = 1.0;
    for k in 1..=max_lag {
        let g: f64 = xc[k..]
            .iter()
            .zip(&xc[..n - k])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64;
        out[k] = g / gamma0;
    }
    Ok(out)
}

/// Lag-`k` sample autocorrelation `γ̂(k)/γ̂(0)`.
pub fn sample_acf(series: ArrayView1<'_, f64>, k: usize) -> Result<f64> {
    Ok(acf_upto(series, k)?[k])
}

/// Ljung-Box portmanteau statistic and its chi-square(m) p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LjungBox {
    pub q: f64,
    pub pvalue: f64,
}

pub fn ljung_box(series: ArrayView1<'_, f64>, m: usize) -> Result<LjungBox> {
    let n = series.len();
    if m < 1 || n < 3 || m > n - 2 {
        return Err(Error::arg(format!(
            "Ljung-Box lag m = {m} out of range for n = {n}"
        )));
    }
    let rho = acf_upto(series, m)?;
    let nf = n as f64;
    let q = nf
        * (nf + 2.0)
        * (1..=m)
            .map(|k| rho[k] * rho[k] / (nf - k as f64))
            .sum::<f64>();
    Ok(LjungBox {
        q,
        pvalue: chi2_sf(q, m)?,
    })
}
