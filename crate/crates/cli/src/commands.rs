use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use serde_json::json;
use tsfactor::forecast::{evaluate, ForecastOptions, ForecastReport};
use tsfactor::pipeline::Diagnostics;
use tsfactor::simgen::{
    format_table, run_montecarlo, simulate, to_csv, DgpSpec, McConfig, SeedScheme, Variant,
};
use tsfactor::{decompose, Decomposition, PipelineConfig};

use crate::args::{BenchmarkArgs, DecomposeArgs, ExampleArg, ForecastArgs, SimulateArgs};
use crate::csvio::{read_panel_from, write_matrix, write_matrix_file};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn envelope<T: Serialize>(command: &str, config: &PipelineConfig, result: T) -> serde_json::Value {
    json!({ "schema_version": SCHEMA_VERSION, "command": command, "config": config, "result": result })
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn say(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}

#[derive(Serialize)]
struct DecompositionSummary<'a> {
    n: usize,
    p: usize,
    r1_hat: usize,
    r2_hat: usize,
    v_hat: usize,
    k_hat: usize,
    unit_root_loadings: Vec<Vec<f64>>,
    stationary_factor_loadings: Vec<Vec<f64>>,
    diagnostics: &'a Diagnostics,
    warnings: &'a [String],
    files: Vec<String>,
}

fn summarize(dec: &Decomposition, files: Vec<String>) -> DecompositionSummary<'_> {
    DecompositionSummary {
        n: dec.n,
        p: dec.p,
        r1_hat: dec.r1_hat,
        r2_hat: dec.r2_hat,
        v_hat: dec.v_hat,
        k_hat: dec.k_hat,
        unit_root_loadings: rows(&dec.a1),
        stationary_factor_loadings: rows(&dec.factor_loadings()),
        diagnostics: &dec.diagnostics,
        warnings: &dec.warnings,
        files,
    }
}

fn named(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

pub fn cmd_decompose(args: &DecomposeArgs, out: &mut dyn Write) -> CliResult<Decomposition> {
    let cfg = args.pipeline.config();
    let input = read_panel_from(&args.input)?;
    let dec = decompose(&input.panel, &cfg)?;
    for w in &dec.warnings {
        eprintln!("warning: {w}");
    }
    let Some(dir) = &args.out_dir else {
        print_json(
            out,
            &envelope("decompose", &cfg, summarize(&dec, Vec::new())),
        )?;
        return Ok(dec);
    };
    ensure_dir(dir)?;
    let mut files = Vec::new();
    let artifacts = [
        ("unit_root_loadings.csv", dec.a1.clone(), "a"),
        ("stationary_loadings.csv", dec.a2.clone(), "b"),
        ("factor_loadings.csv", dec.factor_loadings(), "f"),
        ("unit_root_factors.csv", dec.x1.clone(), "x"),
        ("stationary_factors.csv", dec.z2.clone(), "z"),
        ("common_component.csv", dec.common_component(), "y"),
    ];
    for (name, m, prefix) in artifacts {
        if m.ncols() == 0 {
            continue;
        }
        write_matrix_file(&dir.join(name), m.view(), Some(&named(prefix, m.ncols())))?;
        files.push(name.to_string());
    }
    write_json(
        &dir.join("decomposition.json"),
        &envelope("decompose", &cfg, summarize(&dec, files)),
    )?;
    say(
        out,
        &format!(
            "r1_hat = {}  r2_hat = {}  v_hat = {}  K_hat = {}  (n = {}, p = {})\nwrote {}\n",
            dec.r1_hat,
            dec.r2_hat,
            dec.v_hat,
            dec.k_hat,
            dec.n,
            dec.p,
            dir.display()
        ),
    )?;
    Ok(dec)
}

/// Forecast errors by method and horizon, followed by the Diebold-Mariano comparisons.
pub fn forecast_table(report: &ForecastReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<12}", "FE_h");
    for h in &report.horizons {
        let _ = write!(s, "{:>12}", format!("h={h}"));
    }
    s.push('\n');
    for m in &report.methods {
        let _ = write!(s, "{:<12}", m.method.name());
        for fe in &m.fe {
            let _ = write!(s, "{fe:>12.4}");
        }
        s.push('\n');
    }
    if !report.dm.is_empty() {
        let _ = writeln!(
            s,
            "\n{:<4}{:<20}{:>12}{:>12}",
            "h", "comparison", "DM", "p-value"
        );
        for d in &report.dm {
            let _ = writeln!(
                s,
                "{:<4}{:<20}{:>12.4}{:>12.4}",
                d.h,
                format!("{} vs {}", d.method_a, d.method_b),
                d.statistic,
                d.pvalue
            );
        }
    }
    s
}

fn forecast_csv(report: &ForecastReport) -> String {
    let mut s = String::from("method,h,origins,fe\n");
    for m in &report.methods {
        for (i, h) in report.horizons.iter().enumerate() {
            let _ = writeln!(s, "{},{h},{},{:.16e}", m.method, report.origins[i], m.fe[i]);
        }
    }
    s
}

fn dm_csv(report: &ForecastReport) -> String {
    let mut s = String::from("h,method_a,method_b,statistic,lrv,pvalue,degenerate\n");
    for d in &report.dm {
        let _ = writeln!(
            s,
            "{},{},{},{:.16e},{:.16e},{:.16e},{}",
            d.h, d.method_a, d.method_b, d.statistic, d.lrv, d.pvalue, d.degenerate
        );
    }
    s
}

pub fn cmd_forecast(args: &ForecastArgs, out: &mut dyn Write) -> CliResult<ForecastReport> {
    let mut cfg = args.pipeline.config();
    cfg.horizons = args.horizons.clone();
    cfg.window_start = args.window_start;
    let input = read_panel_from(&args.input)?;
    let mut opts = ForecastOptions {
        pca_levels_nfac: args.pca_levels_factors,
        pca_diff_nfac: args.pca_diff_factors,
        hac_bandwidth: args.bandwidth,
        ..ForecastOptions::default()
    };
    if let Some(ms) = &args.methods {
        opts.methods = ms.iter().map(|&m| m.into()).collect();
        opts.methods.dedup();
    }
    let report = evaluate(&input.panel, &cfg, &opts)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let Some(dir) = &args.out_dir else {
        print_json(out, &envelope("forecast", &cfg, &report))?;
        return Ok(report);
    };
    ensure_dir(dir)?;
    write_json(
        &dir.join("forecast.json"),
        &envelope("forecast", &cfg, &report),
    )?;
    write_text(&dir.join("forecast_errors.csv"), &forecast_csv(&report))?;
    write_text(&dir.join("dm_tests.csv"), &dm_csv(&report))?;
    let table = forecast_table(&report);
    write_text(&dir.join("forecast_table.txt"), &table)?;
    say(out, &table)?;
    Ok(report)
}

fn dgp(example: ExampleArg, p: usize, n: usize, delta: f64, seed: u64) -> DgpSpec {
    match example {
        ExampleArg::One => DgpSpec::example1(p, n, seed),
        ExampleArg::Two => DgpSpec::example2(p, n, delta, seed),
    }
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult<DgpSpec> {
    let mut spec = dgp(args.example, args.p, args.n, args.delta, args.seed);
    if args.example == ExampleArg::One && args.delta != 0.0 {
        return Err(tsfactor::Error::Argument("--delta applies to example 2 only".into()).into());
    }
    spec.r1 = args.r1.unwrap_or(spec.r1);
    spec.r2 = args.r2.unwrap_or(spec.r2);
    spec.k = args.k.unwrap_or(spec.k);
    spec.design_seed = args.design_seed;
    let (panel, truth) = simulate(&spec)?;
    let header = named("y", spec.p);
    let Some(dir) = &args.out_dir else {
        write_matrix(&mut *out, panel.view(), Some(&header))
            .map_err(|e| CliError::io("<stdout>", e))?;
        return Ok(spec);
    };
    ensure_dir(dir)?;
    write_matrix_file(&dir.join("panel.csv"), panel.view(), Some(&header))?;
    if spec.r1 > 0 {
        write_matrix_file(
            &dir.join("truth_x1.csv"),
            truth.x1.view(),
            Some(&named("x", spec.r1)),
        )?;
    }
    if spec.r2 > 0 {
        write_matrix_file(
            &dir.join("truth_f2.csv"),
            truth.f2.view(),
            Some(&named("f", spec.r2)),
        )?;
    }
    let sidecar = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "spec": spec,
        "phi": truth.phi,
        "unit_root_loadings": rows(&truth.a1),
        "stationary_loadings": rows(&truth.a2),
        "stationary_factor_loadings": rows(&truth.stationary_loadings()),
        "u22_1": rows(&truth.u22_1),
        "u22_2": rows(&truth.u22_2),
    });
    write_json(&dir.join("truth.json"), &sidecar)?;
    say(
        out,
        &format!(
            "wrote {} ({} x {})\n",
            dir.join("panel.csv").display(),
            spec.n,
            spec.p
        ),
    )?;
    Ok(spec)
}

pub fn cmd_benchmark(args: &BenchmarkArgs, out: &mut dyn Write) -> CliResult<String> {
    let mut cells = Vec::new();
    for &delta in &args.delta {
        for &p in &args.p {
            for &n in &args.n {
                let spec = dgp(args.example, p, n, delta, 0);
                spec.validate()?;
                cells.push(spec);
            }
        }
    }
    if args.reps == 0 {
        return Err(tsfactor::Error::Argument("--reps must be >= 1".into()).into());
    }
    let pipeline = args.pipeline.config();
    // the variant picked by the flags drives the accuracy summaries
    let lead = Variant {
        absolute: pipeline.r1.absolute,
        reorder: pipeline.reorder,
    };
    let mut variants = vec![lead];
    variants.extend(Variant::ALL.iter().copied().filter(|v| *v != lead));
    let cfg = McConfig {
        base_seed: args.pipeline.seed,
        reps: args.reps,
        pipeline: pipeline.clone(),
        variants,
        seeds: if args.paired {
            SeedScheme::Paired
        } else {
            SeedScheme::Independent
        },
        metrics: true,
    };
    let result = run_montecarlo(&cells, &cfg)?;
    let table = format_table(&result);
    if let Some(dir) = &args.out_dir {
        ensure_dir(dir)?;
        write_text(&dir.join("benchmark.txt"), &table)?;
        write_text(&dir.join("benchmark.csv"), &to_csv(&result))?;
        write_json(
            &dir.join("benchmark.json"),
            &envelope("benchmark", &pipeline, &result),
        )?;
    }
    say(out, &table)?;
    Ok(table)
}
