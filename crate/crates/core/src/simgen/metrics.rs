use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsstats::linalg::{orthonormality_defect, projector};

/// `√(1 − tr(H1H1ᵀH2H2ᵀ)/r)` for half-orthonormal `H1`, `H2` with `r` columns.
pub fn metric_d(h1: &Array2<f64>, h2: &Array2<f64>) -> Result<f64> {
    if h1.dim() != h2.dim() {
        return Err(Error::arg("D needs matrices of equal shape"));
    }
    let r = h1.ncols();
    if r == 0 {
        return Err(Error::arg("D needs at least one column"));
    }
    for h in [h1, h2] {
        if orthonormality_defect(h.view()) > 1e-8 {
            return Err(Error::arg("D needs half-orthonormal arguments"));
        }
    }
    let cross = h1.t().dot(h2);
    let tr = cross.iter().map(|v| v * v).sum::<f64>();
    Ok((1.0 - tr / r as f64).max(0.0).sqrt())
}

/// `√(1 − tr(P1P2)/max(d1,d2))` with `Pi` the orthogonal projector onto the
/// column space of `Hi`. An empty argument against a non-empty one gives 1,
/// two empty arguments give 0.
pub fn metric_dbar(h1: &Array2<f64>, h2: &Array2<f64>) -> Result<f64> {
    if h1.nrows() != h2.nrows() {
        return Err(Error::arg("D-bar needs matrices with equal row counts"));
    }
    let (d1, d2) = (h1.ncols(), h2.ncols());
    match (d1, d2) {
        (0, 0) => return Ok(0.0),
        (0, _) | (_, 0) => return Ok(1.0),
        _ => {}
    }
    let p1 = projector(h1)?;
    let p2 = projector(h2)?;
    let tr: f64 = p1.iter().zip(p2.iter()).map(|(a, b)| a * b).sum();
    Ok((1.0 - tr / d1.max(d2) as f64).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Divide the summed squared error by `n`.
    Small,
    /// Divide by `np`.
    Large,
}

/// Root mean squared error between estimated and true `n×p` component paths.
pub fn rmse_factors(
    estimate: &Array2<f64>,
    truth: &Array2<f64>,
    normalization: Normalization,
) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::arg("estimate and truth differ in shape"));
    }
    let (n, p) = estimate.dim();
    if n == 0 {
        return Err(Error::arg("empty paths"));
    }
    let sq: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let denom = match normalization {
        Normalization::Small => n as f64,
        Normalization::Large => (n * p) as f64,
    };
    Ok((sq / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn d_hand_values() {
        let e1 = array![[1.0], [0.0]];
        let e2 = array![[0.0], [1.0]];
        let mid = array![[1.0], [1.0]] / 2.0_f64.sqrt();
        assert_eq!(metric_d(&e1, &e1).unwrap(), 0.0);
        assert_abs_diff_eq!(metric_d(&e1, &e2).unwrap(), 1.0);
        assert_abs_diff_eq!(
            metric_d(&e1, &mid).unwrap(),
            0.5_f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            metric_dbar(&e1, &mid).unwrap(),
            0.5_f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn dbar_nested_and_scale_invariant() {
        let h1 = array![[1.0], [0.0], [0.0]];
        let h2 = array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        assert_abs_diff_eq!(
            metric_dbar(&h1, &h2).unwrap(),
            0.5_f64.sqrt(),
            epsilon = 1e-12
        );
        let a = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.2]];
        let b = array![[0.3, 1.0], [1.0, 0.0], [-2.0, 1.0]];
        let base = metric_dbar(&a, &b).unwrap();
        assert_abs_diff_eq!(
            metric_dbar(&(&a * -7.5), &b).unwrap(),
            base,
            epsilon = 1e-12
        );
        let mix = array![[2.0, 1.0], [0.5, 3.0]];
        assert_abs_diff_eq!(
            metric_dbar(&a, &b.dot(&mix)).unwrap(),
            base,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rmse_modes() {
        let truth = Array2::<f64>::zeros((5, 4));
        let est = Array2::from_shape_fn((5, 4), |(_, j)| [1.0, 2.0, 2.0, 4.0][j]);
        let small = rmse_factors(&est, &truth, Normalization::Small).unwrap();
        assert_abs_diff_eq!(small, 5.0, epsilon = 1e-12);
        let large = rmse_factors(&est, &truth, Normalization::Large).unwrap();
        assert_abs_diff_eq!(large, small / 2.0, epsilon = 1e-12);
        assert_eq!(
            rmse_factors(&truth, &truth, Normalization::Small).unwrap(),
            0.0
        );
    }
}
