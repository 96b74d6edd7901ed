use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metric_dbar, mix_seed, rmse_factors, simulate, DgpSpec, Example, Normalization};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pipeline::decompose;

/// ACF averaging (`a*` absolute, `a` signed) crossed with white-noise
/// ordering (`w*` reordered, `w` eigenvalue order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub absolute: bool,
    pub reorder: bool,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant {
            absolute: true,
            reorder: true,
        },
        Variant {
            absolute: false,
            reorder: true,
        },
        Variant {
            absolute: true,
            reorder: false,
        },
        Variant {
            absolute: false,
            reorder: false,
        },
    ];

    pub fn label(&self) -> String {
        format!(
            "{}{}",
            if self.absolute { "a*" } else { "a" },
            if self.reorder { "w*" } else { "w" }
        )
    }
}

/// How innovation seeds are assigned to replications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedScheme {
    /// Every `(cell, rep)` gets its own stream.
    Independent,
    /// Replication `rep` uses the same stream in every cell, so cells that
    /// differ only in `n` see nested panels.
    Paired,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub base_seed: u64,
    pub reps: usize,
    pub pipeline: PipelineConfig,
    /// The first variant also drives the accuracy metrics.
    pub variants: Vec<Variant>,
    pub seeds: SeedScheme,
    /// Compute D-bar and RMSE summaries.
    pub metrics: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            base_seed: 1234,
            reps: 100,
            pipeline: PipelineConfig::default(),
            variants: Variant::ALL.to_vec(),
            seeds: SeedScheme::Independent,
            metrics: true,
        }
    }
}

/// Seed of the structural draws shared by every replication of a design with
/// the given example and dimension.
pub fn cell_design_seed(base: u64, example: Example, p: usize) -> u64 {
    mix_seed(base, 0xD5E1_0000 + example.number(), p as u64)
}

#[derive(Debug, Clone, Serialize)]
pub struct RepOutcome {
    pub rep: usize,
    /// `(r̂1, r̂2)` per variant.
    pub counts: Vec<(usize, usize)>,
    pub k_hat: usize,
    pub lam_yao: Option<usize>,
    pub dbar_a1: Option<f64>,
    pub dbar_a2: Option<f64>,
    pub dbar_a2u1: Option<f64>,
    pub rmse_unit: Option<f64>,
    pub rmse_stationary: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Sample quartiles with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    Some(Quartiles {
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantSummary {
    pub variant: String,
    pub p_r1: f64,
    pub p_r2: f64,
    pub p_r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub spec: DgpSpec,
    pub reps: usize,
    pub failures: Vec<(usize, String)>,
    pub variants: Vec<VariantSummary>,
    pub dbar_a1: Option<Quartiles>,
    pub dbar_a2: Option<Quartiles>,
    pub dbar_a2u1: Option<Quartiles>,
    pub rmse_unit: Option<Quartiles>,
    pub rmse_stationary: Option<Quartiles>,
    pub k_hat_counts: BTreeMap<usize, usize>,
    pub lam_yao_counts: BTreeMap<usize, usize>,
    pub lam_yao_mode: Option<usize>,
    #[serde(skip)]
    pub outcomes: Vec<RepOutcome>,
}

impl CellSummary {
    pub fn variant(&self, label: &str) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.variant == label)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloResult {
    pub base_seed: u64,
    pub reps: usize,
    pub cells: Vec<CellSummary>,
}

fn run_rep(cell: usize, template: &DgpSpec, cfg: &McConfig, rep: usize) -> Result<RepOutcome> {
    let mut spec = *template;
    spec.design_seed = Some(
        template
            .design_seed
            .unwrap_or_else(|| cell_design_seed(cfg.base_seed, template.example, template.p)),
    );
    spec.seed = match cfg.seeds {
        SeedScheme::Independent => mix_seed(cfg.base_seed, cell as u64 + 1, rep as u64),
        SeedScheme::Paired => mix_seed(cfg.base_seed, 0, rep as u64),
    };
    let (panel, truth) = simulate(&spec)?;
    let mut out = RepOutcome {
        rep,
        counts: Vec::with_capacity(cfg.variants.len()),
        k_hat: 0,
        lam_yao: None,
        dbar_a1: None,
        dbar_a2: None,
        dbar_a2u1: None,
        rmse_unit: None,
        rmse_stationary: None,
    };
    for (i, v) in cfg.variants.iter().enumerate() {
        let mut pc = cfg.pipeline.clone();
        pc.r1.absolute = v.absolute;
        pc.reorder = v.reorder;
        let dec = decompose(&panel, &pc)?;
        out.counts.push((dec.r1_hat, dec.r2_hat));
        if i > 0 {
            continue;
        }
        out.k_hat = dec.k_hat;
        out.lam_yao = dec.diagnostics.lam_yao_r2;
        if cfg.metrics {
            let norm = match spec.example {
                Example::One => Normalization::Small,
                Example::Two => Normalization::Large,
            };
            out.dbar_a1 = Some(metric_dbar(&dec.a1, &truth.a1)?);
            out.dbar_a2 = Some(metric_dbar(&dec.a2, &truth.a2)?);
            out.dbar_a2u1 = Some(metric_dbar(
                &dec.factor_loadings(),
                &truth.stationary_loadings(),
            )?);
            let unit = dec.x1.dot(&dec.a1.t());
            out.rmse_unit = Some(rmse_factors(&unit, &truth.unit_root_component(), norm)?);
            let stat = dec.z2.dot(&dec.factor_loadings().t());
            out.rmse_stationary = Some(rmse_factors(&stat, &truth.stationary_component(), norm)?);
        }
    }
    Ok(out)
}

fn summarize(spec: &DgpSpec, cfg: &McConfig, results: Vec<Result<RepOutcome>>) -> CellSummary {
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    let reps = cfg.reps as f64;
    let variants = cfg
        .variants
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let hit = |f: &dyn Fn(usize, usize) -> bool| {
                outcomes
                    .iter()
                    .filter(|o| f(o.counts[i].0, o.counts[i].1))
                    .count() as f64
                    / reps
            };
            VariantSummary {
                variant: v.label(),
                p_r1: hit(&|r1, _| r1 == spec.r1),
                p_r2: hit(&|_, r2| r2 == spec.r2),
                p_r: hit(&|r1, r2| r1 + r2 == spec.r1 + spec.r2),
            }
        })
        .collect();
    let collect = |f: fn(&RepOutcome) -> Option<f64>| {
        quartiles(&outcomes.iter().filter_map(f).collect::<Vec<_>>())
    };
    let mut k_hat_counts = BTreeMap::new();
    let mut lam_yao_counts = BTreeMap::new();
    for o in &outcomes {
        *k_hat_counts.entry(o.k_hat).or_insert(0) += 1;
        if let Some(l) = o.lam_yao {
            *lam_yao_counts.entry(l).or_insert(0) += 1;
        }
    }
    // smallest value among the most frequent
    let lam_yao_mode = lam_yao_counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&k, _)| k);
    CellSummary {
        spec: *spec,
        reps: cfg.reps,
        failures,
        variants,
        dbar_a1: collect(|o| o.dbar_a1),
        dbar_a2: collect(|o| o.dbar_a2),
        dbar_a2u1: collect(|o| o.dbar_a2u1),
        rmse_unit: collect(|o| o.rmse_unit),
        rmse_stationary: collect(|o| o.rmse_stationary),
        k_hat_counts,
        lam_yao_counts,
        lam_yao_mode,
        outcomes,
    }
}

/// Runs `cfg.reps` replications of every design in `cells`. Replications run
/// in parallel; a failed replication is recorded and counts as a miss.
pub fn run_montecarlo(cells: &[DgpSpec], cfg: &McConfig) -> Result<MonteCarloResult> {
    if cfg.reps == 0 {
        return Err(Error::arg("reps must be >= 1"));
    }
    if cfg.variants.is_empty() {
        return Err(Error::arg("no method variants"));
    }
    cfg.pipeline.validate()?;
    let mut summaries = Vec::with_capacity(cells.len());
    for (ci, spec) in cells.iter().enumerate() {
        spec.validate()?;
        let results: Vec<Result<RepOutcome>> = (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(ci, spec, cfg, rep))
            .collect();
        summaries.push(summarize(spec, cfg, results));
    }
    Ok(MonteCarloResult {
        base_seed: cfg.base_seed,
        reps: cfg.reps,
        cells: summaries,
    })
}

fn pair(cell: &CellSummary, main: &str, alt: &str, pick: fn(&VariantSummary) -> f64) -> String {
    match (cell.variant(main), cell.variant(alt)) {
        (Some(m), Some(a)) => format!("{:.3}({:.3})", pick(m), pick(a)),
        (Some(m), None) => format!("{:.3}", pick(m)),
        _ => "-".to_string(),
    }
}

fn median(q: &Option<Quartiles>) -> String {
    q.map_or_else(|| "-".to_string(), |q| format!("{:.4}", q.median))
}

/// Aligned text table: `P(r̂1=r1)` as `a*(a)`, `P(r̂2=r2)` as `w*(w)` and
/// `P(r̂1+r̂2=r)` as `a*w*(aw)`, followed by median accuracies.
pub fn format_table(result: &MonteCarloResult) -> String {
    let header = [
        "ex",
        "p",
        "n",
        "delta",
        "P(r1) a*(a)",
        "P(r2) w*(w)",
        "P(r) a*w*(aw)",
        "D(A1)",
        "D(A2)",
        "D(A2U1)",
        "K-hat",
        "LY",
        "fail",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for c in &result.cells {
        let mode_k = c
            .k_hat_counts
            .iter()
            .max_by_key(|(_, &n)| n)
            .map_or("-".into(), |(k, _)| k.to_string());
        rows.push(vec![
            c.spec.example.number().to_string(),
            c.spec.p.to_string(),
            c.spec.n.to_string(),
            format!("{:.2}", c.spec.delta),
            pair(c, "a*w*", "aw*", |v| v.p_r1),
            pair(c, "a*w*", "a*w", |v| v.p_r2),
            pair(c, "a*w*", "aw", |v| v.p_r),
            median(&c.dbar_a1),
            median(&c.dbar_a2),
            median(&c.dbar_a2u1),
            mode_k,
            c.lam_yao_mode.map_or("-".into(), |m| m.to_string()),
            c.failures.len().to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &rows {
        let line: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// One CSV row per cell × method × statistic.
pub fn to_csv(result: &MonteCarloResult) -> String {
    let mut out = String::from("example,p,n,delta,method,statistic,value\n");
    for c in &result.cells {
        let key = format!(
            "{},{},{},{}",
            c.spec.example.number(),
            c.spec.p,
            c.spec.n,
            c.spec.delta
        );
        for v in &c.variants {
            for (name, value) in [("p_r1", v.p_r1), ("p_r2", v.p_r2), ("p_r", v.p_r)] {
                let _ = writeln!(out, "{key},{},{name},{value}", v.variant);
            }
        }
        let primary = c.variants.first().map_or("", |v| v.variant.as_str());
        for (name, q) in [
            ("dbar_a1", c.dbar_a1),
            ("dbar_a2", c.dbar_a2),
            ("dbar_a2u1", c.dbar_a2u1),
            ("rmse_unit", c.rmse_unit),
            ("rmse_stationary", c.rmse_stationary),
        ] {
            if let Some(q) = q {
                for (stat, value) in [("q1", q.q1), ("median", q.median), ("q3", q.q3)] {
                    let _ = writeln!(out, "{key},{primary},{name}_{stat},{value}");
                }
            }
        }
        if let Some(m) = c.lam_yao_mode {
            let _ = writeln!(out, "{key},lam-yao,r2_mode,{m}");
        }
        let _ = writeln!(out, "{key},{primary},failures,{}", c.failures.len());
    }
    out
}
