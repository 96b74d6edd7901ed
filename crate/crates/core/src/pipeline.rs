//! The full two-stage decomposition `y_t = A1 x1_t + A2 (U1 z2_t + U2 e_t)`.

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::stationary::{
    build_m2, estimate_k, estimate_v2_from_eigen, lam_yao_ratio, projected_s, recover_z2,
    split_ordered,
};
use crate::tsstats::{sym_eigen, TimeSeriesPanel};
use crate::unitroot::{build_m1, estimate_r1, split_spaces, UnitRootSplit};
use crate::whitenoise::{count_small, estimate_r2_large, WhiteNoiseCount};

/// Which white-noise counting procedure was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Bottom-up Ljung-Box count.
    Small,
    /// Drop-and-retest high-dimensional count.
    Large,
    /// `r2` supplied by the caller.
    Fixed,
}

/// Per-stage spectra and test results.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub m1_eigenvalues: Vec<f64>,
    pub s_statistics: Vec<f64>,
    pub m2_eigenvalues: Vec<f64>,
    pub s_hat_eigenvalues: Vec<f64>,
    /// Testing order of the columns of `ξ̂ = x̂2 Ŵ` and their Ljung-Box p-values.
    pub wn_order: Vec<usize>,
    pub wn_pvalues: Vec<f64>,
    /// Components that entered white-noise testing.
    pub wn_kept: usize,
    /// `(set size, statistic, threshold)` for every high-dimensional test.
    pub hd_tests: Vec<(usize, f64, f64)>,
    /// Eigenvalue-ratio count on `M̂2` with `R = ⌊(p − r̂1)/2⌋`, for comparison.
    pub lam_yao_r2: Option<usize>,
    pub regime: Regime,
}

/// Estimated counts, loadings and factor paths.
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub n: usize,
    pub p: usize,
    pub r1_hat: usize,
    pub r2_hat: usize,
    pub v_hat: usize,
    pub k_hat: usize,
    /// `p×r̂1` unit-root loadings.
    pub a1: Array2<f64>,
    /// `p×(p−r̂1)` stationary loadings.
    pub a2: Array2<f64>,
    /// `(p−r̂1)×r̂2`, in the coordinates of `x̂2`.
    pub u1: Array2<f64>,
    pub v1: Array2<f64>,
    pub v2: Array2<f64>,
    pub x1: Array2<f64>,
    pub x2: Array2<f64>,
    pub z2: Array2<f64>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

impl Decomposition {
    /// `Â1 x̂1_t + Â2 x̂2_t` for every `t`; equals the input panel.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.x1.dot(&self.a1.t()) + self.x2.dot(&self.a2.t())
    }

    /// Loadings of the stationary factors in the original coordinates, `Â2 Û1`.
    pub fn factor_loadings(&self) -> Array2<f64> {
        self.a2.dot(&self.u1)
    }

    /// Common component `Â1 x̂1_t + Â2 Û1 ẑ2_t`.
    pub fn common_component(&self) -> Array2<f64> {
        self.x1.dot(&self.a1.t()) + self.z2.dot(&self.factor_loadings().t())
    }
}

fn first_stage(panel: &TimeSeriesPanel, cfg: &PipelineConfig) -> Result<UnitRootSplit> {
    match cfg.r1_override {
        Some(r1) => {
            let eig = sym_eigen(&build_m1(panel, cfg.k0)?)?;
            split_spaces(panel, &eig, r1)
        }
        None => estimate_r1(panel, cfg.k0, &cfg.r1),
    }
}

fn count_white(xi: ArrayView2<'_, f64>, cfg: &PipelineConfig) -> Result<(WhiteNoiseCount, Regime)> {
    let d = xi.ncols();
    if let Some(r2) = cfg.r2_override {
        if r2 > d {
            return Err(Error::arg(format!("r2 = {r2} exceeds p - r1 = {d}")));
        }
        let count = WhiteNoiseCount {
            r2_hat: r2,
            v_hat: d - r2,
            order: (0..d).collect(),
            pvalues: Vec::new(),
            kept: d,
            tests: Vec::new(),
        };
        return Ok((count, Regime::Fixed));
    }
    if d <= cfg.small_dim_max {
        Ok((
            count_small(xi, cfg.lb_lag, cfg.alpha, cfg.reorder)?,
            Regime::Small,
        ))
    } else {
        Ok((
            estimate_r2_large(xi, cfg.lb_lag, cfg.alpha, cfg.reorder, cfg.epsilon)?,
            Regime::Large,
        ))
    }
}

/// Runs both estimation stages on `panel`.
pub fn decompose(panel: &TimeSeriesPanel, cfg: &PipelineConfig) -> Result<Decomposition> {
    let (n, p) = (panel.n(), panel.p());
    cfg.validate_for(n)?;
    if let Some(r1) = cfg.r1_override {
        if r1 > p {
            return Err(Error::arg(format!("r1 = {r1} exceeds p = {p}")));
        }
    }
    let mut warnings = Vec::new();
    let split = first_stage(panel, cfg)?;
    let d = p - split.r1_hat;

    let mut diagnostics = Diagnostics {
        m1_eigenvalues: split.eigenvalues.clone(),
        s_statistics: split.s_stats.clone(),
        m2_eigenvalues: Vec::new(),
        s_hat_eigenvalues: Vec::new(),
        wn_order: Vec::new(),
        wn_pvalues: Vec::new(),
        wn_kept: 0,
        hd_tests: Vec::new(),
        lam_yao_r2: None,
        regime: Regime::Small,
    };

    if d == 0 {
        if cfg.r2_override.is_some_and(|r2| r2 > 0) {
            return Err(Error::arg("r2 must be 0 when r1 = p"));
        }
        return Ok(Decomposition {
            n,
            p,
            r1_hat: split.r1_hat,
            r2_hat: 0,
            v_hat: 0,
            k_hat: 0,
            u1: Array2::zeros((0, 0)),
            v1: Array2::zeros((0, 0)),
            v2: Array2::zeros((0, 0)),
            z2: Array2::zeros((n, 0)),
            a1: split.a1,
            a2: split.a2,
            x1: split.x1,
            x2: split.x2,
            diagnostics,
            warnings,
        });
    }

    let m2_eig = sym_eigen(&build_m2(split.x2.view(), cfg.j0)?)?;
    let xi = split.x2.dot(&m2_eig.vectors);
    let (count, regime) = count_white(xi.view(), cfg)?;
    if d >= n && regime == Regime::Large {
        warnings.push(format!(
            "n = {n} <= p - r1 = {d}: white-noise testing kept the first {} components",
            count.kept
        ));
    }
    let degenerate = xi
        .columns()
        .into_iter()
        .filter(|c| {
            let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let mean = c.sum() / n as f64;
            c.iter()
                .all(|v| (v - mean).abs() <= 4.0 * f64::EPSILON * scale)
        })
        .count();
    if degenerate > 0 {
        warnings.push(format!(
            "{degenerate} constant component(s) treated as white noise"
        ));
    }

    let r2 = count.r2_hat;
    let v = count.v_hat;
    let (u1, v1) = split_ordered(&m2_eig.vectors, &count.order, r2)?;
    let s_eig = sym_eigen(&projected_s(split.x2.view(), &v1)?)?;

    let mut k = match cfg.k_override {
        Some(k) => {
            if k + r2 > d {
                return Err(Error::arg(format!(
                    "K = {k} leaves fewer than r2 = {r2} directions"
                )));
            }
            k
        }
        None if regime == Regime::Large && v >= 2 => {
            estimate_k(&s_eig.values.to_vec(), cfg.k_max.min(v - 1), cfg.k_tau)?
        }
        None => 0,
    };

    let v2 = match estimate_v2_from_eigen(&s_eig, &u1, r2, k) {
        Ok(v2) => v2,
        Err(Error::IllConditioned { min_singular }) if k > 0 && cfg.k_override.is_none() => {
            warnings.push(format!(
                "V2'U1 ill-conditioned with K = {k} (smallest singular value {min_singular:.3e}); refit with K = 0"
            ));
            k = 0;
            estimate_v2_from_eigen(&s_eig, &u1, r2, 0)?
        }
        Err(e) => return Err(e),
    };
    let z2 = recover_z2(&v2, &u1, split.x2.view())?;

    diagnostics.lam_yao_r2 = if d >= 2 {
        let r = (d / 2).clamp(1, d - 1);
        Some(lam_yao_ratio(&m2_eig.values.to_vec(), r)?)
    } else {
        None
    };
    diagnostics.m2_eigenvalues = m2_eig.values.to_vec();
    diagnostics.s_hat_eigenvalues = s_eig.values.to_vec();
    diagnostics.wn_order = count.order;
    diagnostics.wn_pvalues = count.pvalues;
    diagnostics.wn_kept = count.kept;
    diagnostics.hd_tests = count.tests;
    diagnostics.regime = regime;

    Ok(Decomposition {
        n,
        p,
        r1_hat: split.r1_hat,
        r2_hat: r2,
        v_hat: v,
        k_hat: k,
        a1: split.a1,
        a2: split.a2,
        u1,
        v1,
        v2,
        x1: split.x1,
        x2: split.x2,
        z2,
        diagnostics,
        warnings,
    })
}
