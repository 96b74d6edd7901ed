//! Counting white-noise components: per-series Ljung-Box p-values, the
//! p-value reordering, a max-cross-correlation test for many series at once,
//! and the bottom-up / drop-and-retest counting procedures.

use ndarray::{s, Array2, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tsstats::{center, ljung_box, special::norm_ppf};

/// Components of `ξ̂_t` in testing order.
#[derive(Debug, Clone, Serialize)]
pub struct OrderedComponents {
    /// `series.column(i)` is original component `order[i]`.
    #[serde(skip)]
    pub series: Array2<f64>,
    pub order: Vec<usize>,
    /// Ljung-Box p-values aligned with `order`.
    pub pvalues: Vec<f64>,
    /// Original indices of constant components (p-value forced to 1).
    pub degenerate: Vec<usize>,
}

/// Ljung-Box p-value of every column and the testing order: ascending
/// p-value (most serially dependent first) when `reorder`, identity otherwise.
pub fn lb_order(xi: ArrayView2<'_, f64>, m: usize, reorder: bool) -> Result<OrderedComponents> {
    let d = xi.ncols();
    let mut raw = Vec::with_capacity(d);
    let mut degenerate = Vec::new();
    for (i, col) in xi.columns().into_iter().enumerate() {
        match ljung_box(col, m) {
            Ok(lb) => raw.push(lb.pvalue),
            Err(Error::DegenerateSeries(_)) => {
                degenerate.push(i);
                raw.push(1.0);
            }
            Err(e) => return Err(e),
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    if reorder {
        order.sort_by(|&a, &b| {
            let da = degenerate.contains(&a);
            let db = degenerate.contains(&b);
            da.cmp(&db).then(raw[a].total_cmp(&raw[b]))
        });
    }
    let mut series = Array2::zeros((xi.nrows(), d));
    for (pos, &src) in order.iter().enumerate() {
        series.column_mut(pos).assign(&xi.column(src));
    }
    let pvalues = order.iter().map(|&i| raw[i]).collect();
    Ok(OrderedComponents {
        series,
        order,
        pvalues,
        degenerate,
    })
}

/// Outcome of the high-dimensional white-noise test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdWhiteNoiseTest {
    pub reject: bool,
    pub statistic: f64,
    pub threshold: f64,
    /// Number of non-degenerate components that entered the statistic.
    pub dim: usize,
    /// Indices of constant components left out of the maximum.
    pub excluded: Vec<usize>,
}

/// Bonferroni-Gaussian critical value `Φ⁻¹(1 − α/(2 d² m))`.
pub fn hd_threshold(d: usize, m: usize, alpha: f64) -> Result<f64> {
    let tests = 2.0 * (d as f64) * (d as f64) * m as f64;
    norm_ppf(1.0 - alpha / tests)
}

/// `max_{1≤k≤m} |ρ̂_ij(k)|` for every pair of columns. Constant columns get
/// zero rows and columns and are flagged in the returned mask.
fn pairwise_max_corr(xi: ArrayView2<'_, f64>, m: usize) -> (Array2<f64>, Vec<bool>) {
    let (n, d) = xi.dim();
    let mut z = center(xi);
    let mut constant = vec![false; d];
    for (i, mut col) in z.columns_mut().into_iter().enumerate() {
        let var = col.dot(&col) / n as f64;
        let scale = xi.column(i).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if !(var > (f64::EPSILON * scale).powi(2) * 16.0) {
            constant[i] = true;
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| v / var.sqrt());
        }
    }
    let mut best = Array2::<f64>::zeros((d, d));
    for k in 1..=m {
        let lead = z.slice(s![k.., ..]);
        let lagged = z.slice(s![..n - k, ..]);
        let c = lead.t().dot(&lagged) / n as f64;
        best.zip_mut_with(&c, |b, v| *b = b.max(v.abs()));
    }
    (best, constant)
}

/// `T = √n · max_{k ≤ m, i, j} |ρ̂_ij(k)|`, rejecting white noise when `T`
/// exceeds the Bonferroni-Gaussian threshold.
pub fn hd_wn_test(xi: ArrayView2<'_, f64>, m: usize, alpha: f64) -> Result<HdWhiteNoiseTest> {
    let (n, d) = xi.dim();
    if d == 0 {
        return Err(Error::arg("white-noise test needs at least one component"));
    }
    if m < 1 || n < 3 || m > n - 2 {
        return Err(Error::arg(format!(
            "white-noise lag m = {m} out of range for n = {n}"
        )));
    }
    let (best, constant) = pairwise_max_corr(xi, m);
    let excluded: Vec<usize> = (0..d).filter(|&i| constant[i]).collect();
    let dim = d - excluded.len();
    let max_corr = best.iter().fold(0.0_f64, |a, v| a.max(*v));
    let statistic = (n as f64).sqrt() * max_corr;
    let threshold = if dim == 0 {
        f64::INFINITY
    } else {
        hd_threshold(dim, m, alpha)?
    };
    Ok(HdWhiteNoiseTest {
        reject: statistic > threshold,
        statistic,
        threshold,
        dim,
        excluded,
    })
}

/// Result of a white-noise count: `r2 + v = d`.
#[derive(Debug, Clone, Serialize)]
pub struct WhiteNoiseCount {
    pub r2_hat: usize,
    pub v_hat: usize,
    /// Testing order of the components (see [`lb_order`]).
    pub order: Vec<usize>,
    pub pvalues: Vec<f64>,
    /// Components that took part in testing (may be fewer than `d` after truncation).
    pub kept: usize,
    /// `(set size, statistic, threshold)` for each high-dimensional test run.
    pub tests: Vec<(usize, f64, f64)>,
}

fn bottom_up(pvalues: &[f64], alpha: f64) -> usize {
    // the last non-white component from the end fixes r2
    pvalues
        .iter()
        .rposition(|&p| p < alpha)
        .map_or(0, |i| i + 1)
}

/// Bottom-up Ljung-Box count for small dimensions: components are tested from
/// the last to the first, and the first non-white one at position `i*` gives
/// `r2 = i*`. Returns `(r2, v)`.
pub fn estimate_r2_small(xi: ArrayView2<'_, f64>, m: usize, alpha: f64) -> Result<(usize, usize)> {
    let ordered = lb_order(xi, m, false)?;
    let r2 = bottom_up(&ordered.pvalues, alpha);
    Ok((r2, xi.ncols() - r2))
}

/// Bottom-up count after optional p-value reordering, with diagnostics.
pub fn count_small(
    xi: ArrayView2<'_, f64>,
    m: usize,
    alpha: f64,
    reorder: bool,
) -> Result<WhiteNoiseCount> {
    let ordered = lb_order(xi, m, reorder)?;
    let r2 = bottom_up(&ordered.pvalues, alpha);
    Ok(WhiteNoiseCount {
        r2_hat: r2,
        v_hat: xi.ncols() - r2,
        kept: xi.ncols(),
        order: ordered.order,
        pvalues: ordered.pvalues,
        tests: Vec::new(),
    })
}

/// Drop-and-retest count for large dimensions.
///
/// Components are (optionally) reordered by Ljung-Box p-value. When `d ≥ n`
/// only the leading `⌊εn⌋` components are tested and the rest are counted as
/// white noise. Starting from the full tested set, the leading component is
/// dropped after every rejection; `v` is the size of the first accepted set.
pub fn estimate_r2_large(
    xi: ArrayView2<'_, f64>,
    m: usize,
    alpha: f64,
    reorder: bool,
    epsilon: f64,
) -> Result<WhiteNoiseCount> {
    let (n, d) = xi.dim();
    if d == 0 {
        return Err(Error::arg("white-noise count needs at least one component"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::arg(format!(
            "epsilon must lie in (0,1], got {epsilon}"
        )));
    }
    if m < 1 || n < 3 || m > n - 2 {
        return Err(Error::arg(format!(
            "white-noise lag m = {m} out of range for n = {n}"
        )));
    }
    let ordered = lb_order(xi, m, reorder)?;
    let kept = if d >= n {
        ((epsilon * n as f64).floor() as usize).clamp(1, d)
    } else {
        d
    };
    let (best, constant) = pairwise_max_corr(ordered.series.slice(s![.., ..kept]), m);

    // suffix maxima over the blocks [s.., s..]
    let mut suffix_max = vec![0.0_f64; kept + 1];
    let mut suffix_dim = vec![0_usize; kept + 1];
    for s in (0..kept).rev() {
        let mut cur = suffix_max[s + 1];
        for j in s..kept {
            cur = cur.max(best[[s, j]]).max(best[[j, s]]);
        }
        suffix_max[s] = cur;
        suffix_dim[s] = suffix_dim[s + 1] + usize::from(!constant[s]);
    }

    let sqrt_n = (n as f64).sqrt();
    let mut tests = Vec::new();
    let mut v_kept = 0;
    for s in 0..kept {
        let dim = suffix_dim[s];
        if dim == 0 {
            v_kept = kept - s;
            break;
        }
        let statistic = sqrt_n * suffix_max[s];
        let threshold = hd_threshold(dim, m, alpha)?;
        tests.push((kept - s, statistic, threshold));
        if statistic <= threshold {
            v_kept = kept - s;
            break;
        }
    }
    let v = v_kept + (d - kept);
    Ok(WhiteNoiseCount {
        r2_hat: d - v,
        v_hat: v,
        order: ordered.order,
        pvalues: ordered.pvalues,
        kept,
        tests,
    })
}
