use std::fmt;

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    baseline_dfar, baseline_pca, dm_test, fe_h, fit_factor_model, forecast_path, origin_error,
    rmsfe, PcaMode,
};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pipeline::decompose;
use crate::tsstats::TimeSeriesPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    /// The two-stage factor pipeline.
    #[serde(rename = "GT")]
    Gt,
    #[serde(rename = "DFAR")]
    Dfar,
    #[serde(rename = "PCA-levels")]
    PcaLevels,
    #[serde(rename = "PCA-diff")]
    PcaDiff,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gt, Method::Dfar, Method::PcaLevels, Method::PcaDiff];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gt => "GT",
            Method::Dfar => "DFAR",
            Method::PcaLevels => "PCA-levels",
            Method::PcaDiff => "PCA-diff",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOptions {
    pub methods: Vec<Method>,
    /// Factors in the levels PCA baseline; defaults to `r̂1`.
    pub pca_levels_nfac: Option<usize>,
    /// Factors in the differenced PCA baseline; defaults to `r̂1 + r̂2`.
    pub pca_diff_nfac: Option<usize>,
    pub hac_bandwidth: Option<usize>,
}

impl Default for ForecastOptions {
    fn default() -> Self {
        ForecastOptions {
            methods: Method::ALL.to_vec(),
            pca_levels_nfac: None,
            pca_diff_nfac: None,
            hac_bandwidth: None,
        }
    }
}

/// Per-method results, indexed by position in `ForecastReport::horizons`.
#[derive(Debug, Clone, Serialize)]
pub struct MethodForecasts {
    pub method: Method,
    /// Out-of-sample forecasts `ŷ_{n+h}` from the full panel.
    pub forecasts: Vec<Vec<f64>>,
    pub fe: Vec<f64>,
    /// `rmsfe[h][i]` for series `i`.
    pub rmsfe: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DmEntry {
    pub h: usize,
    pub method_a: Method,
    pub method_b: Method,
    pub statistic: f64,
    pub lrv: f64,
    pub pvalue: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastReport {
    pub n: usize,
    pub p: usize,
    pub horizons: Vec<usize>,
    pub window_start: usize,
    /// Number of origins for each horizon.
    pub origins: Vec<usize>,
    pub r1_hat: usize,
    pub r2_hat: usize,
    pub k_hat: usize,
    pub pca_levels_nfac: usize,
    pub pca_diff_nfac: usize,
    pub methods: Vec<MethodForecasts>,
    pub dm: Vec<DmEntry>,
    pub warnings: Vec<String>,
}

impl ForecastReport {
    pub fn method(&self, m: Method) -> Option<&MethodForecasts> {
        self.methods.iter().find(|r| r.method == m)
    }

    /// FE for method `m` at horizon `h`.
    pub fn fe(&self, m: Method, h: usize) -> Option<f64> {
        let idx = self.horizons.iter().position(|&x| x == h)?;
        self.method(m).map(|r| r.fe[idx])
    }
}

/// Default first estimation window: two thirds of the sample.
pub fn default_window(n: usize) -> usize {
    (2 * n) / 3
}

struct Counts {
    cfg: PipelineConfig,
    levels_nfac: usize,
    diff_nfac: usize,
}

fn method_path(
    method: Method,
    data: ArrayView2<'_, f64>,
    counts: &Counts,
    h: usize,
) -> Result<Array2<f64>> {
    match method {
        Method::Gt => {
            let panel = TimeSeriesPanel::new(data.to_owned())?;
            let dec = decompose(&panel, &counts.cfg)?;
            let fit = fit_factor_model(&dec)?;
            forecast_path(&dec, &fit, h)
        }
        Method::Dfar => baseline_dfar(data, h),
        Method::PcaLevels => baseline_pca(data, counts.levels_nfac, PcaMode::Levels, h),
        Method::PcaDiff => baseline_pca(data, counts.diff_nfac, PcaMode::Differences, h),
    }
}

/// Expanding-window evaluation: the counts `r̂1`, `r̂2`, `K̂` are estimated on
/// the first window and held fixed, while loadings and factor models are
/// refitted at every origin `τ = window_start, …, n − h`.
pub fn evaluate(
    panel: &TimeSeriesPanel,
    cfg: &PipelineConfig,
    opts: &ForecastOptions,
) -> Result<ForecastReport> {
    cfg.validate()?;
    let (n, p) = (panel.n(), panel.p());
    if cfg.horizons.is_empty() {
        return Err(Error::arg("no forecast horizons"));
    }
    if opts.methods.is_empty() {
        return Err(Error::arg("no forecast methods"));
    }
    let hmax = *cfg.horizons.iter().max().unwrap_or(&1);
    let hmin = *cfg.horizons.iter().min().unwrap_or(&1);
    let w = cfg.window_start.unwrap_or_else(|| default_window(n));
    if w >= n {
        return Err(Error::arg(format!("window start {w} must be < n = {n}")));
    }
    if hmax > n - w {
        return Err(Error::arg(format!(
            "horizon {hmax} runs past the end of the data (n - window start = {})",
            n - w
        )));
    }
    let base = PipelineConfig {
        window_start: None,
        ..cfg.clone()
    };
    base.validate_for(w)
        .map_err(|e| Error::arg(format!("estimation window of {w} rows is too short: {e}")))?;

    let first = decompose(&panel.head(w)?, &base)?;
    let frozen = PipelineConfig {
        r1_override: Some(first.r1_hat),
        r2_override: Some(first.r2_hat),
        k_override: Some(first.k_hat),
        ..base
    };
    let counts = Counts {
        levels_nfac: opts.pca_levels_nfac.unwrap_or(first.r1_hat),
        diff_nfac: opts.pca_diff_nfac.unwrap_or(first.r1_hat + first.r2_hat),
        cfg: frozen,
    };
    if counts.levels_nfac > p || counts.diff_nfac > p {
        return Err(Error::arg(format!("PCA factor counts exceed p = {p}")));
    }
    let mut warnings = first.warnings.clone();

    let data = panel.view();
    let origins: Vec<usize> = (w..=n - hmin).collect();
    let paths: Vec<Vec<Array2<f64>>> = origins
        .par_iter()
        .map(|&tau| {
            let steps = hmax.min(n - tau);
            let window = data.slice(ndarray::s![..tau, ..]);
            opts.methods
                .iter()
                .map(|&m| method_path(m, window, &counts, steps))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut methods = Vec::with_capacity(opts.methods.len());
    let mut losses: Vec<Vec<Array1<f64>>> = Vec::new();
    let mut origin_counts = Vec::new();
    for (mi, &method) in opts.methods.iter().enumerate() {
        let full = method_path(method, data, &counts, hmax)?;
        let mut fe = Vec::new();
        let mut rm = Vec::new();
        let mut method_losses = Vec::new();
        for &h in &cfg.horizons {
            let rows: Vec<usize> = (0..origins.len())
                .filter(|&o| origins[o] + h <= n)
                .collect();
            let mut f = Array2::zeros((rows.len(), p));
            let mut a = Array2::zeros((rows.len(), p));
            for (r, &o) in rows.iter().enumerate() {
                f.row_mut(r).assign(&paths[o][mi].row(h - 1));
                a.row_mut(r).assign(&data.row(origins[o] + h - 1));
            }
            fe.push(fe_h(f.view(), a.view())?);
            rm.push(
                (0..p)
                    .map(|i| rmsfe(f.column(i), a.column(i)))
                    .collect::<Result<Vec<_>>>()?,
            );
            method_losses.push(
                f.rows()
                    .into_iter()
                    .zip(a.rows())
                    .map(|(x, y)| origin_error(x, y).powi(2))
                    .collect::<Array1<f64>>(),
            );
            if mi == 0 {
                origin_counts.push(rows.len());
            }
        }
        methods.push(MethodForecasts {
            method,
            forecasts: cfg
                .horizons
                .iter()
                .map(|&h| full.row(h - 1).to_vec())
                .collect(),
            fe,
            rmsfe: rm,
        });
        losses.push(method_losses);
    }

    let mut dm = Vec::new();
    let reference = opts
        .methods
        .iter()
        .position(|&m| m == Method::Gt)
        .unwrap_or(0);
    for (hi, &h) in cfg.horizons.iter().enumerate() {
        if origin_counts[hi] < 8 {
            warnings.push(format!(
                "h = {h}: {} origins, DM test skipped",
                origin_counts[hi]
            ));
            continue;
        }
        for (mi, &method) in opts.methods.iter().enumerate() {
            if mi == reference {
                continue;
            }
            let t = dm_test(
                losses[reference][hi].view(),
                losses[mi][hi].view(),
                opts.hac_bandwidth,
            )?;
            dm.push(DmEntry {
                h,
                method_a: opts.methods[reference],
                method_b: method,
                statistic: t.statistic,
                lrv: t.lrv,
                pvalue: t.pvalue,
                degenerate: t.degenerate,
            });
        }
    }

    Ok(ForecastReport {
        n,
        p,
        horizons: cfg.horizons.clone(),
        window_start: w,
        origins: origin_counts,
        r1_hat: first.r1_hat,
        r2_hat: first.r2_hat,
        k_hat: first.k_hat,
        pca_levels_nfac: counts.levels_nfac,
        pca_diff_nfac: counts.diff_nfac,
        methods,
        dm,
        warnings,
    })
}
