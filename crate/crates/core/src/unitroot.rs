//! First-stage eigenanalysis: separate the unit-root common trends from the
//! stationary part of the panel and count the trends.

use ndarray::{s, Array2, ArrayView1};
use serde::Serialize;

use crate::config::R1Params;
use crate::error::{Error, Result};
use crate::tsstats::{
    acf_upto, autocov_centered, center, linalg::symmetrize, sym_eigen, EigenDecomposition,
    TimeSeriesPanel,
};

/// Orthonormal split of the sample space into the unit-root block `A1` and the
/// stationary block `A2`, with the rotated paths `x1 = Y·A1`, `x2 = Y·A2`.
#[derive(Debug, Clone, Serialize)]
pub struct UnitRootSplit {
    pub r1_hat: usize,
    pub a1: Array2<f64>,
    pub a2: Array2<f64>,
    pub x1: Array2<f64>,
    pub x2: Array2<f64>,
    /// Descending spectrum of `M̂1`.
    pub eigenvalues: Vec<f64>,
    /// Averaged autocorrelation `S_i/m` of every rotated component, in
    /// eigenvalue order. Empty when the split was made with a fixed `r1`.
    pub s_stats: Vec<f64>,
}

/// `M̂1 = Σ_{k=0}^{k0} Σ̂_y(k) Σ̂_y(k)ᵀ`.
pub fn build_m1(panel: &TimeSeriesPanel, k0: usize) -> Result<Array2<f64>> {
    let n = panel.n();
    if k0 > n - 2 {
        return Err(Error::arg(format!("k0 = {k0} exceeds n-2 = {}", n - 2)));
    }
    let yc = center(panel.view());
    let p = panel.p();
    let mut m1 = Array2::zeros((p, p));
    for k in 0..=k0 {
        let sigma = autocov_centered(yc.view(), k);
        m1 += &sigma.dot(&sigma.t());
    }
    Ok(symmetrize(&m1))
}

/// Splits the eigenvectors of `M̂1` after the first `r1` columns.
pub fn split_spaces(
    panel: &TimeSeriesPanel,
    m1_eig: &EigenDecomposition,
    r1: usize,
) -> Result<UnitRootSplit> {
    let p = panel.p();
    if m1_eig.dim() != p {
        return Err(Error::arg(format!(
            "eigendecomposition has dimension {}, panel has {p}",
            m1_eig.dim()
        )));
    }
    if r1 > p {
        return Err(Error::arg(format!("r1 = {r1} exceeds p = {p}")));
    }
    let a1 = m1_eig.vectors.slice(s![.., ..r1]).to_owned();
    let a2 = m1_eig.vectors.slice(s![.., r1..]).to_owned();
    let y = panel.data();
    Ok(UnitRootSplit {
        r1_hat: r1,
        x1: y.dot(&a1),
        x2: y.dot(&a2),
        a1,
        a2,
        eigenvalues: m1_eig.values.to_vec(),
        s_stats: Vec::new(),
    })
}

/// `S_i(l, m)/m`: the average (absolute, unless `params.absolute` is false)
/// autocorrelation over the lags `1, 1+l, …, 1+(m−1)l`.
pub fn s_statistic(series: ArrayView1<'_, f64>, params: &R1Params) -> Result<f64> {
    params.validate(series.len())?;
    let rho = acf_upto(series, params.max_lag())?;
    let total: f64 = params
        .lags()
        .map(|k| {
            if params.absolute {
                rho[k].abs()
            } else {
                rho[k]
            }
        })
        .sum();
    Ok(total / params.m as f64)
}

/// Estimates `r1` by scanning the rotated components in descending-eigenvalue
/// order and stopping at the first one whose averaged autocorrelation drops
/// below `c0`.
pub fn estimate_r1(panel: &TimeSeriesPanel, k0: usize, params: &R1Params) -> Result<UnitRootSplit> {
    params.validate(panel.n())?;
    let m1 = build_m1(panel, k0)?;
    let eig = sym_eigen(&m1)?;
    let rotated = panel.data().dot(&eig.vectors);

    let mut s_stats = Vec::with_capacity(panel.p());
    for col in rotated.columns() {
        let s = match s_statistic(col, params) {
            Ok(s) => s,
            // a constant direction carries no dynamics
            Err(Error::DegenerateSeries(_)) => 0.0,
            Err(e) => return Err(e),
        };
        s_stats.push(s);
    }
    let r1 = s_stats
        .iter()
        .position(|&s| s < params.c0)
        .unwrap_or(panel.p());

    let mut split = split_spaces(panel, &eig, r1)?;
    split.s_stats = s_stats;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsstats::linalg::orthonormality_defect;
    use ndarray::{array, Array1, Axis};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn walk_plus_noise(seed: u64, n: usize) -> TimeSeriesPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = normals(&mut rng, n);
        let noise = normals(&mut rng, n);
        let mut data = Array2::zeros((n, 2));
        let mut level = 0.0;
        for t in 0..n {
            level += steps[t];
            data[[t, 0]] = level;
            data[[t, 1]] = noise[t];
        }
        TimeSeriesPanel::new(data).unwrap()
    }

    #[test]
    fn m1_single_term() {
        let panel =
            TimeSeriesPanel::new(array![[1.0, 0.0], [2.0, 1.0], [0.0, 3.0], [4.0, 1.0]]).unwrap();
        let sigma = crate::tsstats::sample_autocov(&panel, 0).unwrap().matrix;
        let m1 = build_m1(&panel, 0).unwrap();
        let expect = sigma.dot(&sigma.t());
        for (a, b) in m1.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(build_m1(&panel, 3).is_err());
    }

    #[test]
    fn m1_constant_panel_is_zero() {
        let panel = TimeSeriesPanel::new(Array2::from_elem((10, 3), -1.5)).unwrap();
        assert!(build_m1(&panel, 2).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degenerate_splits_reconstruct() {
        let panel = walk_plus_noise(3, 200);
        let eig = sym_eigen(&build_m1(&panel, 2).unwrap()).unwrap();
        for r1 in 0..=2 {
            let split = split_spaces(&panel, &eig, r1).unwrap();
            assert_eq!(split.a1.ncols(), r1);
            assert_eq!(split.a2.ncols(), 2 - r1);
            let recon = split.x1.dot(&split.a1.t()) + split.x2.dot(&split.a2.t());
            let err = (&recon - panel.data())
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-10);
        }
        assert!(split_spaces(&panel, &eig, 3).is_err());
    }

    #[test]
    fn walk_dominates_first_direction() {
        let panel = walk_plus_noise(11, 2000);
        let eig = sym_eigen(&build_m1(&panel, 2).unwrap()).unwrap();
        let split = split_spaces(&panel, &eig, 1).unwrap();
        assert!(split.a1[[0, 0]].abs() >= 0.99);
        assert!(orthonormality_defect(eig.vectors.view()) < 1e-10);
    }

    #[test]
    fn s_statistic_extremes() {
        // a linear trend has autocorrelations close to one at every short lag
        let trend: Array1<f64> = (0..5000).map(|t| t as f64).collect();
        let params = R1Params::default();
        assert!(s_statistic(trend.view(), &params).unwrap() > 0.97);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let iid: Array1<f64> = normals(&mut rng, 20_000).into();
        assert!(s_statistic(iid.view(), &params).unwrap() < 0.02);
    }

    #[test]
    fn signed_average_cancels() {
        // x_t = (-1)^t has ρ(k) = (-1)^k (1 - k/n); with l = 1, m = 2 the
        // probed lags are 1 and 2
        let n = 4000;
        let x: Array1<f64> = (0..n)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let abs = R1Params {
            c0: 0.3,
            l: 1,
            m: 2,
            absolute: true,
        };
        let signed = R1Params {
            absolute: false,
            ..abs
        };
        let a = s_statistic(x.view(), &abs).unwrap();
        let s = s_statistic(x.view(), &signed).unwrap();
        assert!((a - 1.0).abs() < 1e-3);
        assert!(s.abs() < 1e-3);
    }

    #[test]
    fn r1_walk_and_noise() {
        let panel = walk_plus_noise(21, 3000);
        let split = estimate_r1(&panel, 2, &R1Params::default()).unwrap();
        assert_eq!(split.r1_hat, 1);
        assert_eq!(split.s_stats.len(), 2);
        let recon = split.x1.dot(&split.a1.t()) + split.x2.dot(&split.a2.t());
        assert!((&recon - panel.data())
            .map(|v| v.abs())
            .mean_axis(Axis(0))
            .unwrap()
            .iter()
            .all(|v| *v < 1e-10));
    }

    #[test]
    fn r1_iid_panel_is_zero() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let data = Array2::from_shape_vec((2000, 4), normals(&mut rng, 8000)).unwrap();
            let panel = TimeSeriesPanel::new(data).unwrap();
            if estimate_r1(&panel, 2, &R1Params::default()).unwrap().r1_hat == 0 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "r1 = 0 in only {hits}/100 reps");
    }
}
