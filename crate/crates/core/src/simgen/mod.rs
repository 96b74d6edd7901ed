//! Simulation designs with unit-root trends, stationary AR factors and white
//! noise, subspace discrepancy metrics, and a Monte Carlo driver.

mod metrics;
mod montecarlo;

pub use metrics::{metric_d, metric_dbar, rmse_factors, Normalization};
pub use montecarlo::{
    cell_design_seed, format_table, quartiles, run_montecarlo, to_csv, CellSummary, McConfig,
    MonteCarloResult, Quartiles, RepOutcome, SeedScheme, Variant, VariantSummary,
};

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsstats::{linalg::orthonormalize_columns, TimeSeriesPanel};

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit seed for `(base, a, b)`.
pub fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    splitmix(splitmix(splitmix(base) ^ a) ^ b.rotate_left(32))
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    let dist = Uniform::new(lo, hi).expect("valid uniform bounds");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

/// A `p×p` orthonormal matrix: Gram-Schmidt (positive diagonal) of a
/// `U(−2,2)` matrix drawn from `rng`.
fn random_orthonormal_from(rng: &mut ChaCha8Rng, p: usize) -> Result<Array2<f64>> {
    orthonormalize_columns(&uniform_matrix(rng, p, p, -2.0, 2.0))
}

/// A seeded random `p×p` orthonormal matrix.
pub fn random_orthonormal(p: usize, seed: u64) -> Result<Array2<f64>> {
    if p == 0 {
        return Err(Error::arg("p must be >= 1"));
    }
    random_orthonormal_from(&mut ChaCha8Rng::seed_from_u64(seed), p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example {
    /// Orthonormal loadings, noise loadings scaled by `1/√p`.
    One,
    /// Loadings of strength `p^{(1−δ)/2}` with `K` prominent noise directions.
    Two,
}

impl Example {
    pub fn number(self) -> u64 {
        match self {
            Example::One => 1,
            Example::Two => 2,
        }
    }
}

/// One simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub example: Example,
    pub p: usize,
    pub n: usize,
    pub r1: usize,
    pub r2: usize,
    pub k: usize,
    pub delta: f64,
    /// Seed of the innovations.
    pub seed: u64,
    /// Seed of the structural draws (loadings, AR coefficients); the
    /// innovation seed is used when absent.
    pub design_seed: Option<u64>,
}

impl DgpSpec {
    pub fn example1(p: usize, n: usize, seed: u64) -> Self {
        DgpSpec {
            example: Example::One,
            p,
            n,
            r1: 2,
            r2: 2,
            k: 0,
            delta: 0.0,
            seed,
            design_seed: None,
        }
    }

    pub fn example2(p: usize, n: usize, delta: f64, seed: u64) -> Self {
        DgpSpec {
            example: Example::Two,
            p,
            n,
            r1: 4,
            r2: 6,
            k: 2,
            delta,
            seed,
            design_seed: None,
        }
    }

    pub fn v(&self) -> usize {
        self.p - self.r1 - self.r2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::arg(format!("n must be >= 2, got {}", self.n)));
        }
        if self.r1 + self.r2 > self.p {
            return Err(Error::arg(format!(
                "r1 + r2 = {} exceeds p = {}",
                self.r1 + self.r2,
                self.p
            )));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::arg(format!(
                "delta must lie in [0,1), got {}",
                self.delta
            )));
        }
        let v = self.v();
        match self.example {
            Example::One => {
                if self.delta != 0.0 || self.k != 0 {
                    return Err(Error::arg("example 1 requires delta = 0 and K = 0"));
                }
            }
            Example::Two => {
                if self.k > 0 && self.k >= v {
                    return Err(Error::arg(format!("K = {} must be < v = {v}", self.k)));
                }
            }
        }
        Ok(())
    }
}

/// Structural draws and latent paths behind a simulated panel.
#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    /// `p×r1`.
    pub a1: Array2<f64>,
    /// `p×(p−r1)`.
    pub a2: Array2<f64>,
    /// `(p−r1)×r2` stationary factor loadings inside `x2`.
    pub u22_1: Array2<f64>,
    /// `(p−r1)×v` noise loadings inside `x2`.
    pub u22_2: Array2<f64>,
    pub phi: Vec<f64>,
    /// `n×r1` random walks.
    pub x1: Array2<f64>,
    /// `n×r2` AR(1) factors.
    pub f2: Array2<f64>,
    /// `n×v` noise.
    pub eps: Array2<f64>,
}

impl GroundTruth {
    /// `x2_t = U22,1 f2_t + U22,2 ε_t`.
    pub fn x2(&self) -> Array2<f64> {
        self.f2.dot(&self.u22_1.t()) + self.eps.dot(&self.u22_2.t())
    }

    pub fn panel(&self) -> Array2<f64> {
        self.x1.dot(&self.a1.t()) + self.x2().dot(&self.a2.t())
    }

    /// `A2 U22,1`, the loadings of the stationary factors.
    pub fn stationary_loadings(&self) -> Array2<f64> {
        self.a2.dot(&self.u22_1)
    }

    /// `A1 x1_t` for every `t`.
    pub fn unit_root_component(&self) -> Array2<f64> {
        self.x1.dot(&self.a1.t())
    }

    /// `A2 U22,1 f2_t` for every `t`.
    pub fn stationary_component(&self) -> Array2<f64> {
        self.f2.dot(&self.stationary_loadings().t())
    }
}

struct Design {
    a: Array2<f64>,
    u22_1: Array2<f64>,
    u22_2: Array2<f64>,
    phi: Vec<f64>,
}

fn draw_design(spec: &DgpSpec) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.design_seed.unwrap_or(spec.seed));
    let d = spec.p - spec.r1;
    let v = spec.v();
    let mut a = random_orthonormal_from(&mut rng, spec.p)?;
    let mut u22_1 = uniform_matrix(&mut rng, d, spec.r2, -1.0, 1.0);
    let mut u22_2 = uniform_matrix(&mut rng, d, v, -1.0, 1.0);
    let phi_dist = Uniform::new(0.5, 0.9).expect("valid uniform bounds");
    let phi: Vec<f64> = (0..spec.r2).map(|_| phi_dist.sample(&mut rng)).collect();

    let p = spec.p as f64;
    match spec.example {
        Example::One => u22_2 /= p.sqrt(),
        Example::Two => {
            let strength = p.powf((1.0 - spec.delta) / 2.0);
            a.slice_mut(s![.., ..spec.r1])
                .mapv_inplace(|x| x * strength);
            let weak = p.powf(spec.delta / 2.0);
            u22_1 /= weak;
            u22_2.slice_mut(s![.., ..spec.k]).mapv_inplace(|x| x / weak);
            u22_2.slice_mut(s![.., spec.k..]).mapv_inplace(|x| x / p);
        }
    }
    Ok(Design {
        a,
        u22_1,
        u22_2,
        phi,
    })
}

fn generate(spec: &DgpSpec) -> Result<(TimeSeriesPanel, GroundTruth)> {
    spec.validate()?;
    let design = draw_design(spec)?;
    let (n, r1, r2, v) = (spec.n, spec.r1, spec.r2, spec.v());

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut x1 = Array2::zeros((n, r1));
    let mut f2 = Array2::zeros((n, r2));
    let mut eps = Array2::zeros((n, v));
    let mut level = Array1::<f64>::zeros(r1);
    let mut ar: Array1<f64> = design
        .phi
        .iter()
        .map(|&phi| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z / (1.0 - phi * phi).sqrt()
        })
        .collect();
    // time-major draws, so a shorter panel from the same seed is a prefix
    for t in 0..n {
        for i in 0..r1 {
            level[i] += rng.sample::<f64, _>(StandardNormal);
        }
        for j in 0..r2 {
            ar[j] = design.phi[j] * ar[j] + rng.sample::<f64, _>(StandardNormal);
        }
        for k in 0..v {
            eps[[t, k]] = rng.sample(StandardNormal);
        }
        x1.row_mut(t).assign(&level);
        f2.row_mut(t).assign(&ar);
    }

    let truth = GroundTruth {
        a1: design.a.slice(s![.., ..r1]).to_owned(),
        a2: design.a.slice(s![.., r1..]).to_owned(),
        u22_1: design.u22_1,
        u22_2: design.u22_2,
        phi: design.phi,
        x1,
        f2,
        eps,
    };
    let panel = TimeSeriesPanel::new(truth.panel())?;
    Ok((panel, truth))
}

/// Random walks, diagonal AR(1) factors with `φ ~ U(0.5, 0.9)` and Gaussian
/// noise behind orthonormal loadings.
pub fn gen_example1(spec: &DgpSpec) -> Result<(TimeSeriesPanel, GroundTruth)> {
    if spec.example != Example::One {
        return Err(Error::arg("spec is not an example-1 design"));
    }
    generate(spec)
}

/// As [`gen_example1`] with loading strength `p^{(1−δ)/2}` and `K`
/// prominent noise directions.
pub fn gen_example2(spec: &DgpSpec) -> Result<(TimeSeriesPanel, GroundTruth)> {
    if spec.example != Example::Two {
        return Err(Error::arg("spec is not an example-2 design"));
    }
    generate(spec)
}

/// Dispatches on `spec.example`.
pub fn simulate(spec: &DgpSpec) -> Result<(TimeSeriesPanel, GroundTruth)> {
    generate(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsstats::{
        linalg::{orthonormality_defect, singular_values},
        ljung_box,
    };
    use approx::assert_abs_diff_eq;

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn orthonormal_draws() {
        let q = random_orthonormal(7, 3).unwrap();
        assert!(orthonormality_defect(q.view()) < 1e-10);
        let sv = singular_values(q.view()).unwrap();
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-8));
        let q2 = random_orthonormal(7, 4).unwrap();
        assert!(singular_values((&q - &q2).view()).unwrap()[0] > 0.1);
        assert_eq!(q, random_orthonormal(7, 3).unwrap());
    }

    #[test]
    fn example1_shapes_and_identity() {
        let spec = DgpSpec::example1(6, 300, 11);
        let (panel, truth) = gen_example1(&spec).unwrap();
        assert_eq!(panel.data().dim(), (300, 6));
        assert!(max_abs(&(&truth.panel() - panel.data())) < 1e-10);
        assert!(truth.phi.iter().all(|&f| (0.5..0.9).contains(&f)));
        let a = ndarray::concatenate![ndarray::Axis(1), truth.a1, truth.a2];
        assert!(orthonormality_defect(a.view()) < 1e-10);
        let (again, _) = gen_example1(&spec).unwrap();
        assert_eq!(panel, again);
    }

    #[test]
    fn prefix_property() {
        let long = gen_example1(&DgpSpec::example1(6, 500, 5)).unwrap().0;
        let short = gen_example1(&DgpSpec::example1(6, 200, 5)).unwrap().0;
        assert_eq!(long.head(200).unwrap(), short);
    }

    #[test]
    fn walk_increments_are_white() {
        let mut pass = 0;
        let mut total = 0;
        for seed in 0..50 {
            let (_, truth) = gen_example1(&DgpSpec::example1(6, 500, 100 + seed)).unwrap();
            for col in truth.x1.columns() {
                let n = col.len();
                let d: Array1<f64> = (1..n).map(|t| col[t] - col[t - 1]).collect();
                total += 1;
                if ljung_box(d.view(), 10).unwrap().pvalue > 0.01 {
                    pass += 1;
                }
            }
        }
        assert!(pass as f64 >= 0.95 * total as f64);
    }

    #[test]
    fn example2_scalings() {
        let p = 100;
        let spec = DgpSpec::example2(p, 50, 0.5, 9);
        let (_, truth) = gen_example2(&spec).unwrap();
        let pf = p as f64;
        let norm = truth.a1.column(0).dot(&truth.a1.column(0)).sqrt();
        assert_abs_diff_eq!(norm, pf.powf(0.25), epsilon = 1e-10);
        assert!(orthonormality_defect(truth.a2.view()) < 1e-10);
        // weak noise columns are bounded by 1/p, prominent ones by p^{-δ/2}
        assert!(truth
            .u22_2
            .slice(s![.., 2..])
            .iter()
            .all(|v| v.abs() <= 1.0 / pf));
        assert!(truth
            .u22_2
            .slice(s![.., ..2])
            .iter()
            .any(|v| v.abs() > 1.0 / pf));
        assert!(truth.u22_1.iter().all(|v| v.abs() <= pf.powf(-0.25)));
    }

    #[test]
    fn example2_loading_singular_values() {
        for (p, seed) in [(50, 1), (100, 2), (300, 3)] {
            let spec = DgpSpec::example2(p, 10, 0.0, seed);
            let (_, truth) = gen_example2(&spec).unwrap();
            let rows = (p - spec.r1) as f64;
            let sigma1 = singular_values(truth.u22_1.view()).unwrap()[0];
            let frob = truth.u22_1.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bulk = (rows / 3.0).sqrt() * (1.0 + (spec.r2 as f64 / rows).sqrt());
            assert!(
                (0.5 * bulk..1.5 * bulk).contains(&sigma1),
                "p = {p}: sigma1 = {sigma1}"
            );
            let expect = (rows * spec.r2 as f64 / 3.0).sqrt();
            assert!((0.5 * expect..1.5 * expect).contains(&frob));
        }
    }

    #[test]
    fn invalid_specs() {
        let mut spec = DgpSpec::example1(6, 100, 1);
        spec.r2 = 5;
        assert!(gen_example1(&spec).unwrap_err().is_argument());
        let mut spec = DgpSpec::example2(12, 100, 0.0, 1);
        spec.k = 2;
        assert!(gen_example2(&spec).unwrap_err().is_argument());
        assert!(gen_example1(&DgpSpec::example2(50, 100, 0.0, 1)).is_err());
    }

    #[test]
    fn seeds_are_mixed() {
        assert_ne!(mix_seed(1, 0, 1), mix_seed(1, 1, 0));
        assert_ne!(mix_seed(1, 2, 3), mix_seed(2, 2, 3));
    }
}
