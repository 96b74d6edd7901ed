//! Second-stage eigenanalysis on the stationary block: factor/noise split of
//! `M̂2`, projected PCA with the prominent-noise rotation, and recovery of the
//! stationary common factors.

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tsstats::{
    autocov, autocov_centered, center,
    linalg::{min_singular_value, solve, symmetrize},
    sym_eigen, EigenDecomposition,
};

/// Smallest admissible singular value of `V2ᵀU1`.
pub const MIN_RECOVERY_SINGULAR: f64 = 1e-10;

/// Loadings and factor paths of the stationary block `x2 = U1 z2 + U2 e`.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryFactorFit {
    pub r2_hat: usize,
    pub v_hat: usize,
    pub k_hat: usize,
    pub u1: Array2<f64>,
    pub v1: Array2<f64>,
    pub v2: Array2<f64>,
    /// `n×r2` recovered factor paths.
    pub z2: Array2<f64>,
    /// Descending spectrum of `Ŝ`.
    pub s_eigenvalues: Vec<f64>,
}

/// `M̂2 = Σ_{j=1}^{j0} Σ̃2(j) Σ̃2(j)ᵀ` over the lagged autocovariances of `x2`.
pub fn build_m2(x2: ArrayView2<'_, f64>, j0: usize) -> Result<Array2<f64>> {
    let (n, d) = x2.dim();
    if j0 == 0 {
        return Err(Error::arg("j0 must be >= 1"));
    }
    if n < 2 || j0 > n - 2 {
        return Err(Error::arg(format!("j0 = {j0} exceeds n-2 for n = {n}")));
    }
    let xc = center(x2);
    let mut m2 = Array2::zeros((d, d));
    for j in 1..=j0 {
        let sigma = autocov_centered(xc.view(), j);
        m2 += &sigma.dot(&sigma.t());
    }
    Ok(symmetrize(&m2))
}

/// `U1` = eigenvectors of the `r2` largest eigenvalues, `V1` = the rest.
pub fn split_u1_v1(m2_eig: &EigenDecomposition, r2: usize) -> Result<(Array2<f64>, Array2<f64>)> {
    let identity: Vec<usize> = (0..m2_eig.dim()).collect();
    split_ordered(&m2_eig.vectors, &identity, r2)
}

/// Same split after permuting the eigenvector columns by `order`.
pub fn split_ordered(
    vectors: &Array2<f64>,
    order: &[usize],
    r2: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let d = vectors.ncols();
    if order.len() != d {
        return Err(Error::arg(
            "order length does not match the number of eigenvectors",
        ));
    }
    if r2 > d {
        return Err(Error::arg(format!("r2 = {r2} exceeds dimension {d}")));
    }
    let rows = vectors.nrows();
    let mut u1 = Array2::zeros((rows, r2));
    let mut v1 = Array2::zeros((rows, d - r2));
    for (pos, &col) in order.iter().enumerate() {
        if pos < r2 {
            u1.column_mut(pos).assign(&vectors.column(col));
        } else {
            v1.column_mut(pos - r2).assign(&vectors.column(col));
        }
    }
    Ok((u1, v1))
}

/// Projected PCA matrix `Ŝ = Σ̃2 V1 V1ᵀ Σ̃2`, `Σ̃2` the lag-0 covariance of `x2`.
pub fn projected_s(x2: ArrayView2<'_, f64>, v1: &Array2<f64>) -> Result<Array2<f64>> {
    let d = x2.ncols();
    if v1.nrows() != d {
        return Err(Error::arg(format!(
            "V1 has {} rows, x2 has {d} columns",
            v1.nrows()
        )));
    }
    let sigma = autocov(x2, 0)?;
    Ok(projected_s_from_cov(&sigma, v1))
}

pub fn projected_s_from_cov(sigma: &Array2<f64>, v1: &Array2<f64>) -> Array2<f64> {
    let sv = sigma.dot(v1);
    symmetrize(&sv.dot(&sv.t()))
}

/// Number of prominent eigenvalues of `Ŝ`: the position of the largest
/// consecutive ratio `λ_j/λ_{j+1}`, `j ≤ max_k`, if it exceeds `tau`.
pub fn estimate_k(s_eigenvalues: &[f64], max_k: usize, tau: f64) -> Result<usize> {
    if s_eigenvalues.len() < max_k + 1 {
        return Err(Error::arg(format!(
            "estimate_k needs {} eigenvalues, got {}",
            max_k + 1,
            s_eigenvalues.len()
        )));
    }
    let top = s_eigenvalues.first().copied().unwrap_or(0.0);
    if max_k == 0 || !(top > 0.0) {
        return Ok(0);
    }
    let floor = f64::EPSILON * top;
    let mut best = (0, 0.0);
    for j in 1..=max_k {
        let ratio = s_eigenvalues[j - 1].max(floor) / s_eigenvalues[j].max(floor);
        if ratio > best.1 {
            best = (j, ratio);
        }
    }
    Ok(if best.1 > tau { best.0 } else { 0 })
}

/// `V2` from the eigenvectors of `Ŝ`.
///
/// With `k = 0` these are the eigenvectors of the `r2` smallest eigenvalues.
/// With `k > 0` the `dim − k` smallest ones form `V2*`, and `V2 = V2* R̂` where
/// `R̂` holds the top-`r2` eigenvectors of `V2*ᵀ U1 U1ᵀ V2*`.
pub fn estimate_v2_from_eigen(
    s_eig: &EigenDecomposition,
    u1: &Array2<f64>,
    r2: usize,
    k: usize,
) -> Result<Array2<f64>> {
    let dim = s_eig.dim();
    if k + r2 > dim {
        return Err(Error::arg(format!(
            "K + r2 = {} exceeds dimension {dim}",
            k + r2
        )));
    }
    if u1.nrows() != dim || u1.ncols() != r2 {
        return Err(Error::arg("U1 shape does not match (dim, r2)"));
    }
    let v2 = if k == 0 {
        s_eig.trailing(r2)
    } else {
        let v2_star = s_eig.trailing(dim - k);
        let proj = v2_star.t().dot(u1);
        let rot = sym_eigen(&proj.dot(&proj.t()))?;
        v2_star.dot(&rot.leading(r2))
    };
    if r2 > 0 {
        let min_sv = min_singular_value(v2.t().dot(u1).view())?;
        if !(min_sv > MIN_RECOVERY_SINGULAR) {
            return Err(Error::IllConditioned {
                min_singular: min_sv,
            });
        }
    }
    Ok(v2)
}

pub fn estimate_v2(s: &Array2<f64>, u1: &Array2<f64>, r2: usize, k: usize) -> Result<Array2<f64>> {
    estimate_v2_from_eigen(&sym_eigen(s)?, u1, r2, k)
}

/// `ẑ2_t = (V2ᵀU1)⁻¹ V2ᵀ x2_t` for every row of `x2`.
pub fn recover_z2(
    v2: &Array2<f64>,
    u1: &Array2<f64>,
    x2: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let r2 = u1.ncols();
    if v2.ncols() != r2 || v2.nrows() != u1.nrows() || x2.ncols() != u1.nrows() {
        return Err(Error::arg("recover_z2: dimension mismatch"));
    }
    if r2 == 0 {
        return Ok(Array2::zeros((x2.nrows(), 0)));
    }
    let mixing = v2.t().dot(u1);
    let min_sv = min_singular_value(mixing.view())?;
    if !(min_sv > MIN_RECOVERY_SINGULAR) {
        return Err(Error::IllConditioned {
            min_singular: min_sv,
        });
    }
    let projected = x2.dot(v2); // n×r2
    let z_t = solve(&mixing, &projected.t().to_owned())?;
    Ok(z_t.t().to_owned())
}

/// Eigenvalue-ratio count `argmin_{1≤j≤R} λ_{j+1}/λ_j` (smallest index wins ties).
pub fn lam_yao_ratio(eigenvalues: &[f64], max_r: usize) -> Result<usize> {
    if max_r < 1 || eigenvalues.len() < max_r + 1 {
        return Err(Error::arg(format!(
            "ratio estimator needs R >= 1 and R+1 eigenvalues (R = {max_r}, have {})",
            eigenvalues.len()
        )));
    }
    let mut best = (1, f64::INFINITY);
    for j in 1..=max_r {
        let num = eigenvalues[j].max(0.0);
        let den = eigenvalues[j - 1].max(f64::EPSILON);
        let ratio = num / den;
        if ratio < best.1 {
            best = (j, ratio);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsstats::linalg::{orthonormality_defect, orthonormalize_columns};
    use ndarray::{array, s, Array1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn columns(m: &Array2<f64>, from: usize, to: usize) -> Array2<f64> {
        m.slice(s![.., from..to]).to_owned()
    }

    fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(rng))
    }

    #[test]
    fn m2_single_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian(&mut rng, 50, 3);
        let m2 = build_m2(x.view(), 1).unwrap();
        let s1 = autocov(x.view(), 1).unwrap();
        let expect = s1.dot(&s1.t());
        assert!((&m2 - &expect).iter().all(|v| v.abs() < 1e-12));
        assert!(build_m2(x.view(), 0).is_err());
        assert!(build_m2(x.view(), 49).is_err());
    }

    #[test]
    fn m2_vanishes_for_iid() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = gaussian(&mut rng, 5000, 4);
        let m2 = build_m2(x.view(), 2).unwrap();
        let sigma0 = autocov(x.view(), 0).unwrap();
        let norm_m2 = crate::tsstats::linalg::spectral_norm_sym(&m2).unwrap();
        let norm_s0 = crate::tsstats::linalg::spectral_norm_sym(&sigma0).unwrap();
        assert!(norm_m2 <= 0.05 * norm_s0 * norm_s0);
    }

    #[test]
    fn split_degenerate_cases() {
        let eig = sym_eigen(&array![[3.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let (u1, v1) = split_u1_v1(&eig, 0).unwrap();
        assert_eq!((u1.ncols(), v1.ncols()), (0, 3));
        let (u1, v1) = split_u1_v1(&eig, 3).unwrap();
        assert_eq!((u1.ncols(), v1.ncols()), (3, 0));
        assert!(split_u1_v1(&eig, 4).is_err());
    }

    #[test]
    fn projected_s_whitened_input_is_projector() {
        // rows ±e_i give an identity lag-0 covariance exactly
        let d = 4;
        let mut rows = Vec::new();
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; d];
                r[i] = sign * (2.0 * d as f64 / 2.0).sqrt();
                rows.push(r);
            }
        }
        let x = Array2::from_shape_vec((2 * d, d), rows.concat()).unwrap();
        let sigma = autocov(x.view(), 0).unwrap();
        assert!((&sigma - &Array2::<f64>::eye(d))
            .iter()
            .all(|v| v.abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v1 = orthonormalize_columns(&gaussian(&mut rng, d, 3)).unwrap();
        let s = projected_s(x.view(), &v1).unwrap();
        let eig = sym_eigen(&s).unwrap();
        let expect = [1.0, 1.0, 1.0, 0.0];
        for (a, b) in eig.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        let empty = Array2::zeros((d, 0));
        assert!(projected_s(x.view(), &empty)
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
        assert!(projected_s(x.view(), &Array2::zeros((3, 1))).is_err());
    }

    #[test]
    fn projected_s_is_psd_and_sign_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = gaussian(&mut rng, 300, 5);
        let v1 = orthonormalize_columns(&gaussian(&mut rng, 5, 2)).unwrap();
        let s = projected_s(x.view(), &v1).unwrap();
        let eig = sym_eigen(&s).unwrap();
        let trace: f64 = s.diag().sum();
        assert!(eig.values.iter().all(|v| *v >= -1e-10 * trace));
        let mut flipped = v1.clone();
        flipped.column_mut(1).mapv_inplace(|v| -v);
        let s2 = projected_s(x.view(), &flipped).unwrap();
        assert!((&s - &s2).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn estimate_k_examples() {
        assert_eq!(estimate_k(&[100.0, 2.0, 1.9, 1.8], 2, 10.0).unwrap(), 1);
        assert_eq!(estimate_k(&[3.0, 2.9, 2.8, 2.7], 3, 10.0).unwrap(), 0);
        assert_eq!(estimate_k(&[3.0, 2.9, 2.8, 2.7], 1, 10.0).unwrap(), 0);
        assert!(estimate_k(&[3.0, 2.0], 2, 10.0).is_err());
        assert_eq!(estimate_k(&[50.0, 40.0, 0.0, 0.0], 2, 10.0).unwrap(), 2);
    }

    #[test]
    fn v2_diagonal_small_regime() {
        let s = Array2::from_diag(&Array1::from(vec![5.0, 4.0, 0.0, 0.0]));
        let u1 = array![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let v2 = estimate_v2(&s, &u1, 2, 0).unwrap();
        for i in 0..2 {
            assert!(v2.row(i).iter().all(|v| v.abs() < 1e-12));
        }
        assert!(orthonormality_defect(v2.view()) < 1e-12);
    }

    #[test]
    fn v2_orthogonal_factor_construction() {
        // S has null space span(V2); U1 is a tilted copy of that null space
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let q = orthonormalize_columns(&gaussian(&mut rng, 6, 6)).unwrap();
        let noise_dirs = columns(&q, 0, 4);
        let lam = Array2::from_diag(&Array1::from(vec![4.0, 3.0, 2.0, 1.0]));
        let s = noise_dirs.dot(&lam).dot(&noise_dirs.t());
        let null = columns(&q, 4, 6);
        let tilt = &null + &(noise_dirs.slice(s![.., ..2]).to_owned() * 0.3);
        let u1 = orthonormalize_columns(&tilt).unwrap();
        let v2 = estimate_v2(&s, &u1, 2, 0).unwrap();
        let sv = min_singular_value(v2.t().dot(&u1).view()).unwrap();
        assert!(sv > 0.1, "min singular value {sv}");
    }

    #[test]
    fn v2_rotation_recovers_u1_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dim = 8;
        let q = orthonormalize_columns(&gaussian(&mut rng, dim, dim)).unwrap();
        // one prominent direction, then a spread spectrum
        let lam: Vec<f64> = (0..dim)
            .map(|i| if i == 0 { 1000.0 } else { (dim - i) as f64 })
            .collect();
        let s = q.dot(&Array2::from_diag(&Array1::from(lam))).dot(&q.t());
        // U1 inside the span of the dim-1 smallest eigenvectors
        let coeffs = gaussian(&mut rng, dim - 1, 2);
        let u1 = orthonormalize_columns(&columns(&q, 1, dim).dot(&coeffs)).unwrap();
        let v2 = estimate_v2(&s, &u1, 2, 1).unwrap();
        assert!(orthonormality_defect(v2.view()) < 1e-10);
        let sv = min_singular_value(v2.t().dot(&u1).view()).unwrap();
        assert!(sv >= 0.9, "min singular value {sv}");
        assert!(estimate_v2(&s, &u1, 2, 7).is_err());
    }

    #[test]
    fn singular_recovery_is_rejected() {
        let s = Array2::from_diag(&Array1::from(vec![5.0, 4.0, 0.0, 0.0]));
        let u1 = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]];
        assert!(matches!(
            estimate_v2(&s, &u1, 2, 0),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn z2_exact_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u1 = orthonormalize_columns(&gaussian(&mut rng, 5, 2)).unwrap();
        let z = gaussian(&mut rng, 40, 2);
        let x2 = z.dot(&u1.t());
        let zhat = recover_z2(&u1, &u1, x2.view()).unwrap();
        assert!((&zhat - &z).iter().all(|v| v.abs() < 1e-10));
        let zero = recover_z2(&u1, &u1, Array2::zeros((10, 5)).view()).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn z2_round_trip_under_any_mixing() {
        // x2 = U1 z with V2 any basis not orthogonal to U1
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let u1 = orthonormalize_columns(&gaussian(&mut rng, 6, 3)).unwrap();
        let v2 = orthonormalize_columns(&(&u1 + &(gaussian(&mut rng, 6, 3) * 0.2))).unwrap();
        let z = gaussian(&mut rng, 25, 3);
        let zhat = recover_z2(&v2, &u1, z.dot(&u1.t()).view()).unwrap();
        assert!((&zhat - &z).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn lam_yao_examples() {
        assert_eq!(lam_yao_ratio(&[10.0, 5.0, 0.1, 0.09, 0.08], 2).unwrap(), 2);
        let geometric: Vec<f64> = (1..=12).map(|j| 2f64.powi(-j)).collect();
        for r in 1..=10 {
            assert_eq!(lam_yao_ratio(&geometric, r).unwrap(), 1);
        }
        assert_eq!(lam_yao_ratio(&[4.0, 2.0, 0.0, 0.0], 3).unwrap(), 2);
        assert!(lam_yao_ratio(&[1.0], 1).is_err());
    }
}
