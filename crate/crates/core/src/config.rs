use serde::Serialize;

use crate::error::{Error, Result};

/// Tuning of the ACF thresholding rule that counts unit roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R1Params {
    /// Threshold on the averaged autocorrelation, in (0, 1).
    pub c0: f64,
    /// Gap between probed lags.
    pub l: usize,
    /// Number of probed lags.
    pub m: usize,
    /// Average absolute autocorrelations (`a*`) instead of signed ones (`a`).
    pub absolute: bool,
}

impl Default for R1Params {
    fn default() -> Self {
        R1Params {
            c0: 0.3,
            l: 3,
            m: 10,
            absolute: true,
        }
    }
}

impl R1Params {
    /// Lags `k_j = 1 + (j-1)·l`, `j = 1..=m`.
    pub fn lags(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.m).map(move |j| 1 + j * self.l)
    }

    pub fn max_lag(&self) -> usize {
        1 + (self.m.saturating_sub(1)) * self.l
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return Err(Error::arg(format!("c0 must lie in (0,1), got {}", self.c0)));
        }
        if self.l == 0 || self.m == 0 {
            return Err(Error::arg("l and m must be >= 1"));
        }
        if n < 2 || self.max_lag() > n - 2 {
            return Err(Error::arg(format!(
                "largest probed lag {} exceeds n-2 = {}",
                self.max_lag(),
                n.saturating_sub(2)
            )));
        }
        Ok(())
    }
}

/// Every tuning constant of the two-stage decomposition and its forecasting
/// evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Largest lag in `M̂1` (lags `0..=k0`).
    pub k0: usize,
    /// Largest lag in `M̂2` (lags `1..=j0`).
    pub j0: usize,
    pub r1: R1Params,
    /// Portmanteau lag for the white-noise tests.
    pub lb_lag: usize,
    pub alpha: f64,
    /// Fraction of `n` kept in high-dimensional white-noise testing when `d ≥ n`.
    pub epsilon: f64,
    /// Reorder components by Ljung-Box p-value before testing (`w*`).
    pub reorder: bool,
    /// Largest stationary dimension handled by the bottom-up Ljung-Box count.
    pub small_dim_max: usize,
    /// Manual number of prominent noise eigenvalues.
    pub k_override: Option<usize>,
    pub k_max: usize,
    /// Prominence multiplier for the eigenvalue-ratio rule that picks `K`.
    pub k_tau: f64,
    /// Fixed counts, bypassing estimation.
    pub r1_override: Option<usize>,
    pub r2_override: Option<usize>,
    pub horizons: Vec<usize>,
    /// Size of the first estimation window in forecast evaluation.
    pub window_start: Option<usize>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k0: 2,
            j0: 2,
            r1: R1Params::default(),
            lb_lag: 10,
            alpha: 0.05,
            epsilon: 0.75,
            reorder: true,
            small_dim_max: 10,
            k_override: None,
            k_max: 10,
            k_tau: 10.0,
            r1_override: None,
            r2_override: None,
            horizons: vec![1, 2, 3, 4],
            window_start: None,
            seed: 1234,
        }
    }
}

impl PipelineConfig {
    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.j0 == 0 {
            return Err(Error::arg("j0 must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::arg(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::arg(format!(
                "epsilon must lie in (0,1], got {}",
                self.epsilon
            )));
        }
        if self.lb_lag == 0 {
            return Err(Error::arg("white-noise lag m must be >= 1"));
        }
        if !(self.k_tau > 1.0) {
            return Err(Error::arg("K prominence multiplier must exceed 1"));
        }
        if self.horizons.contains(&0) {
            return Err(Error::arg("horizons must be positive"));
        }
        if !(self.r1.c0 > 0.0 && self.r1.c0 < 1.0) || self.r1.l == 0 || self.r1.m == 0 {
            return Err(Error::arg("invalid c0/l/m"));
        }
        Ok(())
    }

    /// Checks the constraints that involve the sample size.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        self.r1.validate(n)?;
        if n < 2 || self.k0 > n - 2 || self.j0 > n - 2 {
            return Err(Error::arg(format!("k0/j0 exceed n-2 for n = {n}")));
        }
        if self.lb_lag > n.saturating_sub(2) {
            return Err(Error::arg(format!(
                "white-noise lag {} exceeds n-2",
                self.lb_lag
            )));
        }
        if let Some(w) = self.window_start {
            if w >= n {
                return Err(Error::arg(format!("window start {w} must be < n = {n}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lags() {
        let p = R1Params::default();
        assert_eq!(
            p.lags().collect::<Vec<_>>(),
            vec![1, 4, 7, 10, 13, 16, 19, 22, 25, 28]
        );
        assert_eq!(p.max_lag(), 28);
        assert!(p.validate(30).is_ok());
        assert!(p.validate(29).is_err());
    }

    #[test]
    fn rejects_bad_threshold() {
        let p = R1Params {
            c0: 1.0,
            ..R1Params::default()
        };
        assert!(p.validate(1000).is_err());
        let cfg = PipelineConfig {
            alpha: 0.0,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
