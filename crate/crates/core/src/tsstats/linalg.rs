//! Small dense linear-algebra helpers built on the symmetric eigensolver.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::eigen::sym_eigen;
use crate::error::{Error, Result};

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    let t = m.t();
    (m + &t) * 0.5
}

/// Orthonormal basis of the column space of `m` by modified Gram-Schmidt with
/// one reorthogonalization pass. The implied `R` factor has a positive diagonal.
pub fn orthonormalize_columns(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = m.dim();
    let mut q = m.clone();
    for j in 0..cols {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        let scale = m.column(j).dot(&m.column(j)).sqrt().max(f64::MIN_POSITIVE);
        if norm <= 1e-12 * scale || rows == 0 {
            return Err(Error::Numerical(format!(
                "column {j} is linearly dependent on earlier columns"
            )));
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}

/// Solves `A X = B` for square `A` by LU with partial pivoting.
pub fn solve(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::arg("solve: dimension mismatch"));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, lu[[r, col]].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= 1e-14 * scale {
            return Err(Error::Numerical("solve: matrix is singular".into()));
        }
        if piv != col {
            for j in 0..n {
                lu.swap([piv, j], [col, j]);
            }
            for j in 0..x.ncols() {
                x.swap([piv, j], [col, j]);
            }
        }
        for r in (col + 1)..n {
            let factor = lu[[r, col]] / lu[[col, col]];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                lu[[r, j]] -= factor * lu[[col, j]];
            }
            for j in 0..x.ncols() {
                x[[r, j]] -= factor * x[[col, j]];
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..x.ncols() {
            let mut acc = x[[col, j]];
            for k in (col + 1)..n {
                acc -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = acc / lu[[col, col]];
        }
    }
    Ok(x)
}

/// Singular values of `a`, descending, computed from the spectrum of `aᵀa`.
pub fn singular_values(a: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    let gram = a.t().dot(&a);
    let eig = sym_eigen(&gram)?;
    Ok(eig.values.mapv(|v| v.max(0.0).sqrt()))
}

/// Smallest singular value of `a` (0 for an empty matrix).
pub fn min_singular_value(a: ArrayView2<'_, f64>) -> Result<f64> {
    let sv = singular_values(a)?;
    Ok(sv.last().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
pub struct SymPinv {
    pub inverse: Array2<f64>,
    pub rank: usize,
    /// Ratio of largest to smallest retained eigenvalue.
    pub condition: f64,
}

pub fn pinv_sym(m: &Array2<f64>) -> Result<SymPinv> {
    let eig = sym_eigen(m)?;
    let q = eig.dim();
    let top = eig
        .values
        .iter()
        .cloned()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    let cutoff = top * (q.max(1) as f64) * f64::EPSILON * 10.0;
    let mut inverse = Array2::zeros((q, q));
    let mut rank = 0;
    let mut smallest = f64::INFINITY;
    for (i, &lambda) in eig.values.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            rank += 1;
            smallest = smallest.min(lambda);
            let v = eig.vectors.column(i);
            for r in 0..q {
                for c in 0..q {
                    inverse[[r, c]] += v[r] * v[c] / lambda;
                }
            }
        }
    }
    let condition = if rank == 0 {
        f64::INFINITY
    } else {
        top / smallest
    };
    Ok(SymPinv {
        inverse,
        rank,
        condition,
    })
}

/// Orthogonal projector onto the column space of `h`.
pub fn projector(h: &Array2<f64>) -> Result<Array2<f64>> {
    let gram = h.t().dot(h);
    let pinv = pinv_sym(&gram)?;
    Ok(h.dot(&pinv.inverse).dot(&h.t()))
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm_sym(m: &Array2<f64>) -> Result<f64> {
    let eig = sym_eigen(m)?;
    Ok(eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
}

/// Largest absolute entry of `aᵀa − I`.
pub fn orthonormality_defect(a: ArrayView2<'_, f64>) -> f64 {
    let g = a.t().dot(&a);
    let mut worst = 0.0_f64;
    for ((i, j), v) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}

/// Column means of an `n×p` matrix.
pub fn column_means(data: ArrayView2<'_, f64>) -> Array1<f64> {
    data.mean_axis(Axis(0))
        .unwrap_or_else(|| Array1::zeros(data.ncols()))
}
