//! Subcommand bodies. Each writes its artifacts under the output directory
//! (distinct file names per subcommand) and reports pass/fail.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use nplap::counterexample::blowup_report;
use nplap::grid::{build_grid, norm_inf, norm_q};
use nplap::harness::{
    check_holder, reports_to_csv, summarize, sweep, HolderScope, SweepConfig, SweepTuple,
};
use nplap::params::{classify, ProblemParams};
use nplap::pointcalc::suites;
use nplap::registry::{source_field, zero_boundary_field, SourceFn};
use nplap::solver::{barrier_constant, continuation_solve, residual, SolveConfig};

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub ok: bool,
    pub artifacts: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn from_failures(artifacts: Vec<String>, failures: Vec<String>) -> Outcome {
        Outcome {
            ok: failures.is_empty(),
            artifacts,
            failures,
        }
    }
}

fn write_artifact(out: &Path, name: &str, contents: &str) -> Result<String> {
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(name.to_string())
}

/// Randomized pointwise inequality suites; worst observed gaps go to CSV.
pub fn check_point(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let reports = suites::run_all(cfg.check_point.samples, cfg.seed, &cfg.check_point.dims);
    let mut csv = String::from("suite,samples,worst_rel,worst_abs,at_n,at_p,at_gamma,at_eps,pass\n");
    let mut failures = Vec::new();
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.suite.name(),
            r.samples,
            r.worst_rel,
            r.worst_abs,
            r.at_n,
            r.at_p,
            r.at_gamma,
            r.at_eps,
            r.pass
        ));
        if !r.pass {
            failures.push(format!(
                "{}: worst relative gap {} at (n, p, gamma, eps) = ({}, {}, {}, {})",
                r.suite.name(),
                r.worst_rel,
                r.at_n,
                r.at_p,
                r.at_gamma,
                r.at_eps
            ));
        }
    }
    let artifact = write_artifact(out, "point_checks.csv", &csv)?;
    Ok(Outcome::from_failures(vec![artifact], failures))
}

#[derive(Serialize)]
struct StageDiag {
    eps: f64,
    iterations: usize,
    converged: bool,
    residual_history: Vec<f64>,
}

#[derive(Serialize)]
struct SolveDiagnostics {
    p: f64,
    gamma: f64,
    lambda: f64,
    h: f64,
    domain: String,
    function: String,
    f_scale: f64,
    stages: Vec<StageDiag>,
    d_weighted_grad: Vec<f64>,
    d_grad: Vec<f64>,
    final_residual_l2: f64,
    barrier_constant: f64,
    barrier_bound: f64,
    sup_u: f64,
    barrier_ok: bool,
}

/// Continuation solve of the configured problem; dumps the final solution
/// field and a JSON diagnostics record.
pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (p, gamma, f_name, f_scale) = match cfg.solve.preset.as_deref() {
        Some("poisson") => (2.0, 0.0, "sinsin".to_string(), 2.0 * PI * PI),
        _ => {
            let name = match &cfg.solve.f_file {
                Some(path) => format!("file:{path}"),
                None => cfg.solve.f.clone(),
            };
            (cfg.solve.p, cfg.solve.gamma, name, cfg.solve.f_scale)
        }
    };
    let spec = cfg.domain_specs()[0];
    let grid = build_grid(spec, cfg.h).map_err(|e| anyhow::anyhow!(e.to_string()))?;
    let eps0 = cfg.params.eps[0];
    let mut params =
        ProblemParams::new(2, p, gamma, eps0).map_err(|e| anyhow::anyhow!(e.to_string()))?;
    params = params
        .with_lambda(cfg.params.lambda)
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    if let Some(fb) = cfg.params.two_star_fallback {
        params = params
            .with_fallback(fb)
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    }
    let mut solve_cfg = SolveConfig::new(params);
    solve_cfg.max_picard = cfg.solve.max_picard;
    solve_cfg.picard_tol = cfg.solve.picard_tol;
    solve_cfg.damping = cfg.solve.damping;
    solve_cfg.linear_tol = cfg.solve.linear_tol;
    solve_cfg.eps_schedule = cfg.params.eps.clone();

    let f = match &cfg.solve.f_file {
        Some(path) if cfg.solve.preset.is_none() => {
            let text = fs::read_to_string(path).with_context(|| format!("reading f dump {path}"))?;
            grid.load_field(&text).map_err(|e| anyhow::anyhow!(e.to_string()))?
        }
        _ => {
            let f_fn = SourceFn::parse(&f_name).expect("validated");
            source_field(&grid, f_fn, f_scale)
        }
    };
    let (results, diag) =
        continuation_solve(&grid, &solve_cfg, &f).map_err(|e| anyhow::anyhow!(e.to_string()))?;

    let last = results.last().expect("schedule nonempty");
    let final_res = norm_q(
        &grid,
        &residual(&grid, &last.u, &solve_cfg, &f, last.eps_used),
        2.0,
    );
    let k = barrier_constant(&params, norm_inf(&grid, &f), grid.spec.diameter());
    let sup_u = norm_inf(&grid, &last.u);
    let barrier_ok = params.lambda > 0.0 || sup_u <= k * grid.spec.diameter();

    let diagnostics = SolveDiagnostics {
        p,
        gamma,
        lambda: cfg.params.lambda,
        h: grid.h,
        domain: grid.spec.name(),
        function: f_name.clone(),
        f_scale,
        stages: results
            .iter()
            .map(|r| StageDiag {
                eps: r.eps_used,
                iterations: r.iterations,
                converged: r.converged,
                residual_history: r.residual_history.clone(),
            })
            .collect(),
        d_weighted_grad: diag.d_weighted_grad.clone(),
        d_grad: diag.d_grad.clone(),
        final_residual_l2: final_res,
        barrier_constant: k,
        barrier_bound: k * grid.spec.diameter(),
        sup_u,
        barrier_ok,
    };

    let artifacts = vec![
        write_artifact(out, "solution.txt", &grid.dump_field(&last.u))?,
        write_artifact(
            out,
            "solve_diagnostics.json",
            &serde_json::to_string_pretty(&diagnostics)?,
        )?,
    ];

    let mut failures = Vec::new();
    for (i, r) in results.iter().enumerate() {
        if !r.converged {
            failures.push(format!(
                "stage {i} (eps = {}) did not converge in {} iterations",
                r.eps_used, r.iterations
            ));
        }
    }
    if !barrier_ok {
        failures.push(format!("barrier bound violated: sup|u| = {sup_u} > {}", k * grid.spec.diameter()));
    }
    Ok(Outcome::from_failures(artifacts, failures))
}

/// Full estimate sweep over the configured cartesian grid.
pub fn sweep_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut tuples = Vec::new();
    for &p in &cfg.params.p {
        for &gamma in &cfg.params.gamma {
            for &eps in &cfg.params.eps {
                for &beta in &cfg.params.beta {
                    tuples.push(SweepTuple { p, gamma, eps, beta });
                }
            }
        }
    }
    let sweep_cfg = SweepConfig {
        estimates: cfg.estimate_list(),
        domains: cfg.domain_specs(),
        functions: cfg.function_list(),
        tuples,
        h: cfg.h,
        pair_budget: cfg.holder.pair_budget,
        holder_radius: cfg.holder.radius,
    };
    let reports = sweep(&sweep_cfg).map_err(|e| anyhow::anyhow!(e.to_string()))?;
    let mut artifacts = Vec::new();
    artifacts.push(write_artifact(out, "sweep.csv", &reports_to_csv(&reports))?);
    let summary = summarize(&reports);
    artifacts.push(write_artifact(
        out,
        "sweep_summary.json",
        &serde_json::to_string_pretty(&summary)?,
    )?);
    let failures: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| {
            format!(
                "{} on {} / {} at (p, gamma, eps, beta) = ({}, {}, {}, {}): ratio {}",
                r.estimate_id, r.domain, r.function, r.p, r.gamma, r.eps, r.beta, r.ratio
            )
        })
        .collect();
    Ok(Outcome::from_failures(artifacts, failures))
}

/// Radial blow-up table.
pub fn counterexample_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let section = &cfg.counterexample;
    let table = blowup_report(section.n, section.p, section.gamma, &section.eps)
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;
    let mut csv = String::from("eps,l2_g,sup_v,sup_u_scaled,fit_exponent\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            row.eps, row.l2_g, row.sup_v, row.sup_u_scaled, table.fit_exponent
        ));
    }
    let artifact = write_artifact(out, "counterexample.csv", &csv)?;
    let mut failures = Vec::new();
    if !table.sup_increasing {
        failures.push("sup-norm is not strictly increasing down the schedule".into());
    }
    if table.fit_within_tolerance == Some(false) {
        failures.push(format!(
            "fitted exponent {} outside +-20% of {}",
            table.fit_exponent,
            (section.n as f64 - 3.0) / (section.n as f64 - 2.0)
        ));
    }
    Ok(Outcome::from_failures(vec![artifact], failures))
}

/// Hölder-norm diagnostics (global and local) on manufactured fields.
pub fn holder_cmd(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for spec in cfg.domain_specs() {
        let grid = build_grid(spec, cfg.h).map_err(|e| anyhow::anyhow!(e.to_string()))?;
        for f in cfg.function_list() {
            let field = zero_boundary_field(&grid, f);
            for &p in &cfg.params.p {
                for &gamma in &cfg.params.gamma {
                    for &eps in &cfg.params.eps {
                        let params = match ProblemParams::new(2, p, gamma, eps) {
                            Ok(p) => p,
                            Err(e) => {
                                failures.push(format!("(p, gamma, eps) = ({p}, {gamma}, {eps}): {e}"));
                                continue;
                            }
                        };
                        let table = classify(&params, 0);
                        for scope in [
                            HolderScope::Global,
                            HolderScope::Local {
                                radius: cfg.holder.radius,
                            },
                        ] {
                            match check_holder(
                                &grid,
                                &field,
                                &params,
                                &table,
                                scope,
                                cfg.holder.pair_budget,
                            ) {
                                Ok(mut report) => {
                                    report.function = f.name().to_string();
                                    if !report.pass {
                                        failures.push(format!(
                                            "{} failed at (p, gamma, eps) = ({p}, {gamma}, {eps})",
                                            report.estimate_id
                                        ));
                                    }
                                    reports.push(report);
                                }
                                Err(e) => failures.push(format!(
                                    "holder at (p, gamma, eps) = ({p}, {gamma}, {eps}): {e}"
                                )),
                            }
                        }
                    }
                }
            }
        }
    }
    let artifact = write_artifact(out, "holder.csv", &reports_to_csv(&reports))?;
    Ok(Outcome::from_failures(vec![artifact], failures))
}
