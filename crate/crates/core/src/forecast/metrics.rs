use ndarray::{ArrayView1, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tsstats::special::norm_cdf;

/// `p^{−1/2} ‖ŷ − y‖₂` for a single origin.
pub fn origin_error(forecast: ArrayView1<'_, f64>, actual: ArrayView1<'_, f64>) -> f64 {
    let p = forecast.len() as f64;
    let sq: f64 = forecast
        .iter()
        .zip(actual.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    (sq / p).sqrt()
}

/// Average of [`origin_error`] over the rows (origins) of `forecasts`.
pub fn fe_h(forecasts: ArrayView2<'_, f64>, actuals: ArrayView2<'_, f64>) -> Result<f64> {
    if forecasts.dim() != actuals.dim() {
        return Err(Error::arg("forecasts and actuals differ in shape"));
    }
    if forecasts.nrows() == 0 || forecasts.ncols() == 0 {
        return Err(Error::arg("forecast window is empty"));
    }
    let total: f64 = forecasts
        .rows()
        .into_iter()
        .zip(actuals.rows())
        .map(|(f, a)| origin_error(f, a))
        .sum();
    Ok(total / forecasts.nrows() as f64)
}

/// Root mean squared forecast error of one series across origins.
pub fn rmsfe(forecasts: ArrayView1<'_, f64>, actuals: ArrayView1<'_, f64>) -> Result<f64> {
    if forecasts.len() != actuals.len() {
        return Err(Error::arg("forecasts and actuals differ in length"));
    }
    if forecasts.is_empty() {
        return Err(Error::arg("forecast window is empty"));
    }
    let sq: f64 = forecasts
        .iter()
        .zip(actuals.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok((sq / forecasts.len() as f64).sqrt())
}

/// Diebold-Mariano comparison of two loss series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmTest {
    pub statistic: f64,
    /// Bartlett HAC long-run variance of the loss differential.
    pub lrv: f64,
    /// One-sided p-value against "a has smaller expected loss".
    pub pvalue: f64,
    pub bandwidth: usize,
    /// Long-run variance vanished while the mean differential did not.
    pub degenerate: bool,
}

/// Equal-predictive-ability test on `loss_a − loss_b`.
pub fn dm_test(
    loss_a: ArrayView1<'_, f64>,
    loss_b: ArrayView1<'_, f64>,
    bandwidth: Option<usize>,
) -> Result<DmTest> {
    let n = loss_a.len();
    if n != loss_b.len() {
        return Err(Error::arg("loss series differ in length"));
    }
    if n < 8 {
        return Err(Error::arg(format!(
            "DM test needs at least 8 losses, got {n}"
        )));
    }
    let d: Vec<f64> = loss_a
        .iter()
        .zip(loss_b.iter())
        .map(|(a, b)| a - b)
        .collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let dc: Vec<f64> = d.iter().map(|v| v - mean).collect();
    let bw = bandwidth
        .unwrap_or((1.2 * nf.cbrt()).floor() as usize)
        .min(n - 1);
    let gamma = |k: usize| {
        dc[k..]
            .iter()
            .zip(&dc[..n - k])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / nf
    };
    let mut lrv = gamma(0);
    for k in 1..=bw {
        lrv += 2.0 * (1.0 - k as f64 / (bw as f64 + 1.0)) * gamma(k);
    }
    let scale = d.iter().map(|v| v * v).sum::<f64>() / nf;
    if !(lrv > f64::EPSILON * scale) {
        if mean == 0.0 {
            return Ok(DmTest {
                statistic: 0.0,
                lrv: 0.0,
                pvalue: 0.5,
                bandwidth: bw,
                degenerate: false,
            });
        }
        let statistic = if mean > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return Ok(DmTest {
            statistic,
            lrv: lrv.max(0.0),
            pvalue: norm_cdf(statistic),
            bandwidth: bw,
            degenerate: true,
        });
    }
    let statistic = mean / (lrv / nf).sqrt();
    Ok(DmTest {
        statistic,
        lrv,
        pvalue: norm_cdf(statistic),
        bandwidth: bw,
        degenerate: false,
    })
}
