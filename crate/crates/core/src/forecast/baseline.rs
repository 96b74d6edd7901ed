use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{difference, fit_ar1_or_mean, fit_var1};
use crate::error::{Error, Result};
use crate::tsstats::{autocov_centered, linalg::column_means, sym_eigen};

/// Per-series AR(1) on first differences, re-integrated. Row `s` is the
/// forecast `s+1` steps ahead.
pub fn baseline_dfar(data: ArrayView2<'_, f64>, h: usize) -> Result<Array2<f64>> {
    let (n, p) = data.dim();
    if h == 0 {
        return Err(Error::arg("forecast horizon must be >= 1"));
    }
    if n < 4 {
        return Err(Error::arg(format!("DFAR needs n >= 4, got {n}")));
    }
    let diffs = difference(data);
    let mut out = Array2::zeros((h, p));
    for i in 0..p {
        let fit = fit_ar1_or_mean(diffs.column(i))?;
        let mut level = data[[n - 1, i]];
        let mut d = diffs[[n - 2, i]];
        for step in 0..h {
            d = fit.step(d);
            level += d;
            out[[step, i]] = level;
        }
    }
    Ok(out)
}

/// Representation on which the principal components are extracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaMode {
    Levels,
    /// First differences, standardized series by series.
    Differences,
}

/// Principal-component factors of a panel.
#[derive(Debug, Clone)]
pub struct PcaFit {
    pub mean: Array1<f64>,
    /// Per-series scale applied before the rotation (ones in levels mode).
    pub scale: Array1<f64>,
    /// `p×nfac` orthonormal loadings.
    pub loadings: Array2<f64>,
    /// `n×nfac` factor scores.
    pub scores: Array2<f64>,
}

impl PcaFit {
    /// In-sample fit `mean + scale ⊙ (scores · loadingsᵀ)`.
    pub fn fitted(&self) -> Array2<f64> {
        let common = self.scores.dot(&self.loadings.t()) * &self.scale;
        common + &self.mean
    }

    fn map_back(&self, scores: &Array2<f64>) -> Array2<f64> {
        scores.dot(&self.loadings.t()) * &self.scale + &self.mean
    }
}

/// Top-`nfac` principal components of `data` (centered, optionally standardized).
pub fn pca_fit(data: ArrayView2<'_, f64>, nfac: usize, standardize: bool) -> Result<PcaFit> {
    let (n, p) = data.dim();
    if nfac > p {
        return Err(Error::arg(format!("nfac = {nfac} exceeds p = {p}")));
    }
    let mean = column_means(data);
    let mut z = &data - &mean;
    let mut scale = Array1::ones(p);
    if standardize {
        for (i, mut col) in z.columns_mut().into_iter().enumerate() {
            let sd = (col.dot(&col) / n as f64).sqrt();
            if sd > 0.0 {
                col.mapv_inplace(|v| v / sd);
                scale[i] = sd;
            }
        }
    }
    let eig = sym_eigen(&autocov_centered(z.view(), 0))?;
    let loadings = eig.leading(nfac);
    let scores = z.dot(&loadings);
    Ok(PcaFit {
        mean,
        scale,
        loadings,
        scores,
    })
}

fn forecast_scores(scores: &Array2<f64>, h: usize) -> Result<Array2<f64>> {
    let k = scores.ncols();
    let mut out = Array2::zeros((h, k));
    if k == 0 {
        return Ok(out);
    }
    let fit = fit_var1(scores.view(), true)?;
    let mut f = scores.row(scores.nrows() - 1).to_owned();
    for mut row in out.rows_mut() {
        f = fit.step(&f);
        row.assign(&f);
    }
    Ok(out)
}

/// PCA factor forecasts: a thresholded VAR(1) on the top-`nfac` component
/// scores, mapped back through the loadings (and re-integrated in
/// differences mode). With `nfac = 0` the forecast is the sample mean
/// (levels) or the mean drift path (differences).
pub fn baseline_pca(
    data: ArrayView2<'_, f64>,
    nfac: usize,
    mode: PcaMode,
    h: usize,
) -> Result<Array2<f64>> {
    let (n, p) = data.dim();
    if h == 0 {
        return Err(Error::arg("forecast horizon must be >= 1"));
    }
    if nfac > p {
        return Err(Error::arg(format!("nfac = {nfac} exceeds p = {p}")));
    }
    match mode {
        PcaMode::Levels => {
            let pca = pca_fit(data, nfac, false)?;
            Ok(pca.map_back(&forecast_scores(&pca.scores, h)?))
        }
        PcaMode::Differences => {
            if n < 4 {
                return Err(Error::arg(format!("differenced PCA needs n >= 4, got {n}")));
            }
            let diffs = difference(data);
            let pca = pca_fit(diffs.view(), nfac, true)?;
            let steps = pca.map_back(&forecast_scores(&pca.scores, h)?);
            let mut level = data.row(n - 1).to_owned();
            let mut out = Array2::zeros((h, p));
            for (step, d) in steps.axis_iter(Axis(0)).enumerate() {
                level = &level + &d;
                out.slice_mut(s![step, ..]).assign(&level);
            }
            Ok(out)
        }
    }
}
