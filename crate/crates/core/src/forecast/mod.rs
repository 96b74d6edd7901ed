//! Factor dynamics, h-step forecasts of `y_t`, forecast-error metrics,
//! Diebold-Mariano tests, baseline forecasters and expanding-window evaluation.

mod baseline;
mod evaluate;
mod metrics;

pub use baseline::{baseline_dfar, baseline_pca, pca_fit, PcaFit, PcaMode};
pub use evaluate::{evaluate, DmEntry, ForecastOptions, ForecastReport, Method, MethodForecasts};
pub use metrics::{dm_test, fe_h, origin_error, rmsfe, DmTest};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pipeline::Decomposition;
use crate::tsstats::linalg::pinv_sym;

/// Scalar AR(1) with intercept, `x_t = c + φ x_{t−1} + u_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ar1Fit {
    pub phi: f64,
    pub intercept: f64,
    /// `|φ̂| ≥ 1`.
    pub explosive: bool,
}

impl Ar1Fit {
    pub fn step(&self, x: f64) -> f64 {
        self.intercept + self.phi * x
    }

    fn mean_only(intercept: f64) -> Self {
        Ar1Fit {
            phi: 0.0,
            intercept,
            explosive: false,
        }
    }
}

/// OLS regression of `x_t` on `(1, x_{t−1})`.
pub fn fit_ar1(series: ArrayView1<'_, f64>) -> Result<Ar1Fit> {
    let n = series.len();
    if n < 3 {
        return Err(Error::arg(format!("AR(1) fit needs n >= 3, got {n}")));
    }
    let x = series.slice(s![..n - 1]);
    let y = series.slice(s![1..]);
    let m = (n - 1) as f64;
    let mx = x.sum() / m;
    let my = y.sum() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| (a - mx) * (b - my))
        .sum();
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    if !(sxx > m * (f64::EPSILON * scale).powi(2) * 16.0) {
        return Err(Error::DegenerateSeries(
            "AR(1) regressor has zero variance".into(),
        ));
    }
    let phi = sxy / sxx;
    Ok(Ar1Fit {
        phi,
        intercept: my - phi * mx,
        explosive: phi.abs() >= 1.0,
    })
}

/// AR(1) fit that falls back to a mean-only model when the regressor is constant.
pub(crate) fn fit_ar1_or_mean(series: ArrayView1<'_, f64>) -> Result<Ar1Fit> {
    match fit_ar1(series) {
        Err(Error::DegenerateSeries(_)) => {
            let n = series.len();
            Ok(Ar1Fit::mean_only(
                series.slice(s![1..]).sum() / (n - 1) as f64,
            ))
        }
        other => other,
    }
}

/// VAR(1) with intercept, `x_t = c + B x_{t−1} + u_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Var1Fit {
    /// `B`, `r×r`.
    pub coef: Array2<f64>,
    pub intercept: Array1<f64>,
    /// Condition number of the regressor Gram matrix.
    pub condition: f64,
    /// Regressor Gram matrix was rank deficient and a pseudo-inverse was used.
    pub rank_deficient: bool,
}

impl Var1Fit {
    pub fn step(&self, x: &Array1<f64>) -> Array1<f64> {
        &self.intercept + &self.coef.dot(x)
    }

    pub fn dim(&self) -> usize {
        self.intercept.len()
    }
}

/// Least-squares VAR(1) with intercept on the rows of `data`. With
/// `threshold`, slope coefficients whose |t| is below 1.96 are set to zero
/// (single pass, no refit).
pub fn fit_var1(data: ArrayView2<'_, f64>, threshold: bool) -> Result<Var1Fit> {
    let (n, r) = data.dim();
    if n < r + 2 || n < 3 {
        return Err(Error::arg(format!(
            "VAR(1) on {r} series needs at least {} rows, got {n}",
            (r + 2).max(3)
        )));
    }
    if r == 0 {
        return Ok(Var1Fit {
            coef: Array2::zeros((0, 0)),
            intercept: Array1::zeros(0),
            condition: 1.0,
            rank_deficient: false,
        });
    }
    let rows = n - 1;
    let mut x = Array2::<f64>::ones((rows, r + 1));
    x.slice_mut(s![.., 1..])
        .assign(&data.slice(s![..n - 1, ..]));
    let y = data.slice(s![1.., ..]);
    let gram = x.t().dot(&x);
    let pinv = pinv_sym(&gram)?;
    let beta = pinv.inverse.dot(&x.t().dot(&y)); // (r+1)×r
    let mut coef = beta.slice(s![1.., ..]).t().to_owned();
    let intercept = beta.row(0).to_owned();

    if threshold && rows > r + 1 {
        let resid = &y - &x.dot(&beta);
        let dof = (rows - r - 1) as f64;
        for eq in 0..r {
            let sigma2 = resid.column(eq).iter().map(|v| v * v).sum::<f64>() / dof;
            for j in 0..r {
                let se = (sigma2 * pinv.inverse[[j + 1, j + 1]]).sqrt();
                let t = if se > 0.0 {
                    coef[[eq, j]] / se
                } else {
                    f64::INFINITY
                };
                if t.abs() < 1.96 {
                    coef[[eq, j]] = 0.0;
                }
            }
        }
    }
    Ok(Var1Fit {
        coef,
        intercept,
        condition: pinv.condition,
        rank_deficient: pinv.rank < r + 1,
    })
}

/// VAR(1) with intercept on the first differences of `data`.
pub fn fit_var1_diff(data: ArrayView2<'_, f64>) -> Result<Var1Fit> {
    let (n, r) = data.dim();
    if n < r + 3 {
        return Err(Error::arg(format!(
            "VAR(1) in differences on {r} series needs n >= {}, got {n}",
            r + 3
        )));
    }
    fit_var1(difference(data).view(), false)
}

pub(crate) fn difference(data: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = data.nrows();
    &data.slice(s![1.., ..]) - &data.slice(s![..n - 1, ..])
}

/// Iterates a differenced VAR(1) `h` steps and re-integrates onto `level`.
/// Row `s` of the result is the level forecast `s+1` steps ahead.
pub(crate) fn integrate_var1(
    fit: &Var1Fit,
    level: &Array1<f64>,
    last_diff: &Array1<f64>,
    h: usize,
) -> Array2<f64> {
    let mut out = Array2::zeros((h, level.len()));
    let mut lvl = level.clone();
    let mut diff = last_diff.clone();
    for mut row in out.rows_mut() {
        diff = fit.step(&diff);
        lvl = &lvl + &diff;
        row.assign(&lvl);
    }
    out
}

/// Fitted dynamics of the extracted factors.
#[derive(Debug, Clone, Serialize)]
pub struct FactorModelFit {
    /// VAR(1) on the differences of `x̂1`.
    pub nonstat: Var1Fit,
    /// AR(1) per stationary factor `ẑ2`.
    pub stat: Vec<Ar1Fit>,
    /// In-sample mean of the white-noise part `Â2 (x̂2 − Û1 ẑ2)`.
    pub noise_mean: Array1<f64>,
}

impl FactorModelFit {
    pub fn explosive_factors(&self) -> usize {
        self.stat.iter().filter(|f| f.explosive).count()
    }
}

/// Fits VAR(1)-in-differences to `x̂1` and scalar AR(1) to each `ẑ2`.
pub fn fit_factor_model(dec: &Decomposition) -> Result<FactorModelFit> {
    let nonstat = fit_var1_diff(dec.x1.view())?;
    let stat = dec
        .z2
        .columns()
        .into_iter()
        .map(fit_ar1_or_mean)
        .collect::<Result<Vec<_>>>()?;
    let noise = (&dec.x2 - &dec.z2.dot(&dec.u1.t())).dot(&dec.a2.t());
    let noise_mean = noise
        .mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(dec.p));
    Ok(FactorModelFit {
        nonstat,
        stat,
        noise_mean,
    })
}

/// Forecasts `ŷ_{n+1}, …, ŷ_{n+h}` (rows) as `Â1 x̂1 + Â2 Û1 ẑ2` plus the
/// in-sample noise mean.
pub fn forecast_path(dec: &Decomposition, fit: &FactorModelFit, h: usize) -> Result<Array2<f64>> {
    if h == 0 {
        return Err(Error::arg("forecast horizon must be >= 1"));
    }
    let n = dec.n;
    let r1 = dec.r1_hat;
    if fit.nonstat.dim() != r1 || fit.stat.len() != dec.r2_hat {
        return Err(Error::arg("factor model does not match the decomposition"));
    }
    let x1_path = if r1 > 0 {
        let level = dec.x1.row(n - 1).to_owned();
        let last_diff = &dec.x1.row(n - 1) - &dec.x1.row(n - 2);
        integrate_var1(&fit.nonstat, &level, &last_diff, h)
    } else {
        Array2::zeros((h, 0))
    };
    let mut z_path = Array2::zeros((h, dec.r2_hat));
    for (j, ar) in fit.stat.iter().enumerate() {
        let mut z = dec.z2[[n - 1, j]];
        for step in 0..h {
            z = ar.step(z);
            z_path[[step, j]] = z;
        }
    }
    let y = x1_path.dot(&dec.a1.t()) + z_path.dot(&dec.factor_loadings().t()) + &fit.noise_mean;
    Ok(y)
}

/// The `h`-step-ahead forecast `ŷ_{n+h}`.
pub fn forecast_y(dec: &Decomposition, fit: &FactorModelFit, h: usize) -> Result<Array1<f64>> {
    Ok(forecast_path(dec, fit, h)?.row(h - 1).to_owned())
}
