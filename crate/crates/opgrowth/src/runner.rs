//! Experiment orchestration: dispatch a parsed configuration to the right
//! pipeline, write CSV/JSON/SVG outputs, and assemble the run manifest.
//!
//! Determinism contract: all randomness is derived from the master seed via
//! keyed streams and reductions run in fixed order, so identical configs
//! yield byte-identical outputs regardless of worker count.

use crate::analysis::{
    fit_exponential_rate, fit_logistic_rate, fit_powerlaw_exponent, front_velocity, FitResult,
    FrontMethod,
    WindowPolicy,
};
use crate::circuit::{Geometry, GateRule};
use crate::config::{ExperimentConfig, ExperimentKind, FrontKind};
use crate::error::{Error, Result};
use crate::lattice::{ChargeSector, FillingConvention};
use crate::manifest::RunManifest;
use crate::observables::{autocorr_curve, curve_csv, otoc_curve, otoc_profile, profile_csv};
use crate::opsize::{
    block_bound_report, build_syk_hamiltonian, otoc_exact_and_sumrule, SizeBasis,
};
use crate::plot::{emit_plot, PlotSpec};
use crate::stream::{Role, RngStream, StreamKey};
use crate::syk::{butterfly, lyapunov, SykParams};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Run one experiment, writing all outputs under `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<RunManifest> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = RunManifest::new(cfg.to_text(), cfg.seed);
    manifest.seed_registry.insert("master".into(), cfg.seed);

    let mut body = || -> Result<()> {
        match cfg.kind {
            ExperimentKind::Otoc => run_curves(cfg, out_dir, &mut manifest, true),
            ExperimentKind::Autocorr => run_curves(cfg, out_dir, &mut manifest, false),
            ExperimentKind::Butterfly => run_butterfly(cfg, out_dir, &mut manifest),
            ExperimentKind::ExactBound => run_exact_bound(cfg, out_dir, &mut manifest),
            ExperimentKind::SykTheory => run_syk_theory(cfg, out_dir, &mut manifest),
        }
    };
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(body)?;
        }
        None => body()?,
    }

    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn sector_for(cfg: &ExperimentConfig, n_sites: usize, nbar: f64) -> Result<ChargeSector> {
    let occupied = (nbar * n_sites as f64).round() as usize;
    let n_up = match cfg.filling {
        FillingConvention::UpFraction => occupied,
        FillingConvention::DownFraction => n_sites - occupied,
    };
    ChargeSector::new(n_sites, n_up, cfg.filling)
}

fn write_text(
    dir: &Path,
    name: &str,
    content: &str,
    manifest: &mut RunManifest,
) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    manifest.record(&path)?;
    Ok(path)
}

fn fit_json(f: &FitResult) -> serde_json::Value {
    json!({
        "rate": f.rate,
        "uncertainty": f.uncertainty,
        "window": [f.window.0, f.window.1],
        "n_points": f.n_points,
        "quality": f.quality,
        "method": f.method,
    })
}

/// Shared pipeline for the two all-to-all curve experiments. `growth` selects
/// the OTOC (exponential growth rate λ) over the autocorrelator (decay rate
/// κ toward the saturation plateau).
fn run_curves(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    growth: bool,
) -> Result<()> {
    let rule = GateRule::new(cfg.k)?;
    let geometry = Geometry::AllToAll { n_sites: cfg.n_sites };
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut fits = Vec::new();
    for (di, &nbar) in cfg.nbar.iter().enumerate() {
        let sector = sector_for(cfg, cfg.n_sites, nbar)?;
        let stream = RngStream::new(cfg.seed, StreamKey::new(Role::Generic, di as u64, 0, 0));
        manifest
            .seed_registry
            .insert(format!("curves:nbar={nbar}"), cfg.seed);
        let curve = if growth {
            otoc_curve(&sector, geometry, rule, cfg.f, cfg.t_max, cfg.samples, &stream)?
        } else {
            autocorr_curve(&sector, geometry, rule, cfg.f, cfg.t_max, cfg.samples, &stream)?
        };
        let name = format!("curve_nbar{nbar:.4}.csv");
        let csv_path = write_text(dir, &name, &curve_csv(&curve), manifest)?;

        let fit = if growth {
            // Saturation of the damage correlator at filling n: 8 n (1 - n).
            let n = sector.density();
            fit_logistic_rate(&curve, 0.0, 8.0 * n * (1.0 - n))
        } else {
            let n = sector.density();
            let plateau = (1.0 - 2.0 * n) * (1.0 - 2.0 * n);
            fit_exponential_rate(&curve, plateau, WindowPolicy::All)
        };
        match fit {
            Ok(f) => {
                points.push((nbar, f.rate.abs()));
                fits.push(json!({"nbar": nbar, "fit": fit_json(&f)}));
            }
            Err(e) => {
                fits.push(json!({"nbar": nbar, "error": e.to_string()}));
            }
        }

        let spec = if growth {
            PlotSpec::semilog_y(&format!("C_XZ(t), nbar = {nbar}"), "t (steps)", "C_XZ")
        } else {
            PlotSpec::linear(&format!("C_Z(t), nbar = {nbar}"), "t (steps)", "C_Z")
        };
        let svg = dir.join(name.replace(".csv", ".svg"));
        match emit_plot(&csv_path, &spec, &svg) {
            Ok(()) => manifest.record(&svg)?,
            // a curve that never rises above zero cannot be drawn on a log
            // axis; skip the figure but keep the data
            Err(Error::Schema(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let exponent = if points.len() >= 3 {
        match fit_powerlaw_exponent(&points) {
            Ok(f) => {
                let rates_csv = {
                    let mut s = String::from("t,value,stderr,n_samples\n");
                    for &(n, r) in &points {
                        s.push_str(&format!("{n:e},{r:e},0,{}\n", cfg.samples));
                    }
                    s
                };
                let csv_path = write_text(dir, "rates.csv", &rates_csv, manifest)?;
                let svg = dir.join("rates.svg");
                let label = if growth { "lambda" } else { "kappa" };
                emit_plot(&csv_path, &PlotSpec::loglog("rate vs density", "nbar", label), &svg)?;
                manifest.record(&svg)?;
                Some(fit_json(&f))
            }
            Err(e) => Some(json!({"error": e.to_string()})),
        }
    } else {
        None
    };

    let report = json!({
        "kind": cfg.kind.as_str(),
        "k": cfg.k,
        "f": cfg.f,
        "n": cfg.n_sites,
        "samples": cfg.samples,
        "rate_kind": if growth { "lambda" } else { "kappa" },
        "per_density": fits,
        "density_exponent": exponent,
    });
    write_text(dir, "fits.json", &(serde_json::to_string_pretty(&report).unwrap() + "\n"), manifest)?;
    Ok(())
}

fn run_butterfly(cfg: &ExperimentConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let rule = GateRule::new(cfg.k)?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut fits = Vec::new();
    for (di, &nbar) in cfg.nbar.iter().enumerate() {
        let sector = sector_for(cfg, cfg.l_sites, nbar)?;
        let stream = RngStream::new(cfg.seed, StreamKey::new(Role::Generic, di as u64, 1, 0));
        manifest
            .seed_registry
            .insert(format!("butterfly:nbar={nbar}"), cfg.seed);
        let profile = otoc_profile(
            &sector,
            cfg.l_sites / 2,
            rule,
            cfg.f,
            &cfg.profile_times,
            cfg.samples,
            &stream,
        )?;
        let name = format!("profile_nbar{nbar:.4}.csv");
        let csv_path = write_text(dir, &name, &profile_csv(&profile), manifest)?;

        let method = match cfg.front {
            FrontKind::Threshold => FrontMethod::Threshold { theta: cfg.theta },
            FrontKind::Collapse => FrontMethod::Collapse,
        };
        match front_velocity(&profile, method) {
            Ok(f) => {
                let mut spec = PlotSpec::linear(
                    &format!("front collapse, nbar = {nbar}, v_B = {:.4}", f.rate),
                    "r - v_B t",
                    "C(r, t)",
                );
                spec.collapse_v = Some(f.rate);
                let svg = dir.join(name.replace(".csv", "_collapse.svg"));
                emit_plot(&csv_path, &spec, &svg)?;
                manifest.record(&svg)?;
                points.push((nbar, f.rate));
                fits.push(json!({"nbar": nbar, "fit": fit_json(&f)}));
            }
            Err(e) => fits.push(json!({"nbar": nbar, "error": e.to_string()})),
        }
    }

    let exponent = if points.len() >= 3 {
        Some(match fit_powerlaw_exponent(&points) {
            Ok(f) => fit_json(&f),
            Err(e) => json!({"error": e.to_string()}),
        })
    } else {
        None
    };
    let report = json!({
        "kind": cfg.kind.as_str(),
        "k": cfg.k,
        "f": cfg.f,
        "l": cfg.l_sites,
        "samples": cfg.samples,
        "times": cfg.profile_times,
        "per_density": fits,
        "density_exponent": exponent,
    });
    write_text(dir, "fits.json", &(serde_json::to_string_pretty(&report).unwrap() + "\n"), manifest)?;
    Ok(())
}

fn run_exact_bound(cfg: &ExperimentConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let n = cfg.exact_n;
    // trip the resource cap before doing any work
    SizeBasis::with_cap(n, 0.0, cfg.exact_cap)?;

    let mut block_reports = Vec::new();
    let mut worst_violation = 0.0f64;
    for h_idx in 0..cfg.n_hamiltonians {
        let stream = RngStream::new(cfg.seed, StreamKey::new(Role::Coupling, h_idx as u64, 0, 0));
        let real = build_syk_hamiltonian(n, cfg.q, cfg.j, &stream)?;
        let points = block_bound_report(&real.hamiltonian, cfg.s_row, cfg.s_col, &cfg.mu)?;
        for p in &points {
            worst_violation = worst_violation.max(p.violation);
        }
        block_reports.push(json!({
            "hamiltonian": h_idx,
            "points": points.iter().map(|p| json!({
                "mu": p.mu_bar,
                "norm": p.norm,
                "norm_mu0": p.norm_mu0,
                "bound": p.bound,
                "violation": p.violation,
            })).collect::<Vec<_>>(),
        }));
    }

    // sum rule along the configured times, first Hamiltonian and first mu
    let mu0 = cfg.mu.first().copied().unwrap_or(0.0);
    let basis = SizeBasis::with_cap(n, mu0, cfg.exact_cap)?;
    let stream = RngStream::new(cfg.seed, StreamKey::new(Role::Coupling, 0, 0, 0));
    let h = build_syk_hamiltonian(n, cfg.q, cfg.j, &stream)?.hamiltonian;
    let mut sum_rule = Vec::new();
    for &t in &cfg.exact_times {
        let rep = otoc_exact_and_sumrule(&h, 0, t, &basis)?;
        sum_rule.push(json!({
            "t": t,
            "c_sum": rep.c_sum,
            "size_expectation": rep.size_expectation,
            "slack": rep.slack,
        }));
    }

    let report = json!({
        "kind": cfg.kind.as_str(),
        "n": n,
        "q": cfg.q,
        "j": cfg.j,
        "s_row": cfg.s_row,
        "s_col": cfg.s_col,
        "mu": cfg.mu,
        "n_hamiltonians": cfg.n_hamiltonians,
        "worst_violation": worst_violation,
        "blocks": block_reports,
        "sum_rule": {"mu": mu0, "points": sum_rule},
    });
    write_text(dir, "exact_bound.json", &(serde_json::to_string_pretty(&report).unwrap() + "\n"), manifest)?;
    Ok(())
}

fn run_syk_theory(cfg: &ExperimentConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let mut entries = Vec::new();
    for &mu in &cfg.mu {
        let p = SykParams::new(cfg.variant, cfg.q, cfg.j, mu, cfg.b)?;
        let ly = lyapunov(&p)?;
        let (v_b, v_flag) = match butterfly(&p) {
            Ok(r) => (json!(r.v_b), json!(null)),
            Err(e) => (json!(null), json!(e.to_string())),
        };
        entries.push(json!({
            "variant": match cfg.variant {
                crate::syk::Variant::Regular => "regular",
                crate::syk::Variant::Brownian => "brownian",
            },
            "q": cfg.q,
            "J": cfg.j,
            "mu": mu,
            "n_bar": p.n_bar(),
            "b": cfg.b,
            "Gamma": ly.gamma,
            "R0": ly.rung_zero,
            "lambda": ly.lambda,
            "v_B": v_b,
            "flags": {
                "prefactor_trusted": ly.prefactor_trusted,
                "negative_lambda": ly.negative_warning,
                "v_B_error": v_flag,
            },
        }));
    }
    let report = json!({"kind": cfg.kind.as_str(), "entries": entries});
    write_text(dir, "syk_theory.json", &(serde_json::to_string_pretty(&report).unwrap() + "\n"), manifest)?;
    Ok(())
}

/// Desk-scale end-to-end reproduction: one small run of every experiment
/// kind, each into its own subdirectory.
pub fn reproduce_paper(
    out_dir: &Path,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<(String, RunManifest)>> {
    let mut results = Vec::new();
    let runs: Vec<(&str, ExperimentConfig)> = vec![
        ("otoc", {
            let mut c = ExperimentConfig::defaults(ExperimentKind::Otoc);
            c.n_sites = 1000;
            c.nbar = vec![0.05, 0.1, 0.2];
            c.samples = 300;
            c.t_max = 80;
            c.seed = seed;
            c
        }),
        ("autocorr", {
            let mut c = ExperimentConfig::defaults(ExperimentKind::Autocorr);
            c.n_sites = 1000;
            c.nbar = vec![0.05, 0.1, 0.2];
            c.samples = 200;
            c.t_max = 200;
            c.seed = seed;
            c
        }),
        ("butterfly", {
            let mut c = ExperimentConfig::defaults(ExperimentKind::Butterfly);
            c.l_sites = 300;
            c.nbar = vec![0.1, 0.2, 0.4];
            c.samples = 200;
            c.profile_times = vec![50, 100, 150, 200, 250];
            c.t_max = 250;
            c.seed = seed;
            c
        }),
        ("exact-bound", {
            let mut c = ExperimentConfig::defaults(ExperimentKind::ExactBound);
            c.exact_n = 4;
            c.n_hamiltonians = 3;
            c.seed = seed;
            c
        }),
        ("syk-theory", {
            let mut c = ExperimentConfig::defaults(ExperimentKind::SykTheory);
            c.mu = vec![0.0, 1.0, 2.0, 4.0];
            c.seed = seed;
            c
        }),
    ];
    for (name, cfg) in runs {
        cfg.validate()?;
        let dir = out_dir.join(name);
        let manifest = run_experiment(&cfg, &dir, workers)?;
        results.push((name.to_string(), manifest));
    }
    Ok(results)
}
