//! Both sides of every in-scope integral estimate, evaluated on manufactured
//! fields and solver outputs, with deterministic CSV sweeps.
//!
//! The underlying theorems assert existence of constants, not their values,
//! so a single report carries the named left/right norm components and their
//! ratio; boundedness is assessed across an ε schedule by the max/median
//! factor ([`stability`], threshold 2).

use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::grid::{
    build_grid, differentiate, holder_norm, holder_norm_in_ball, nonlinear_gradient_norms,
    norm_inf, norm_q, point_state, DomainSpec, Grid2D, ScalarField,
};
use crate::params::{classify, ExponentTable, ProblemParams};
use crate::pointcalc::operator_values;
use crate::registry::{source_field, zero_boundary_field, SourceFn};
use crate::solver::{
    barrier_constant, continuation_solve, ConvergenceDiagnostics, SolveConfig, SolveError,
    SolveResult,
};

/// Tolerated growth of ratios across an ε sweep: max/median ≤ 2.
pub const STABILITY_FACTOR: f64 = 2.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("denominator norm is zero; ratio undefined")]
    ZeroDenominator,
    #[error("triplet (n, p, gamma) = ({0}, {1}, {2}) is not admissible")]
    Inadmissible(usize, f64, f64),
    #[error("global Holder check requires a supercritical triplet (q0 > n)")]
    NotSupercritical,
    #[error("solution estimate requires a converged result with lambda = 0")]
    Unconverged,
    #[error("Holder ball (radius {0}) must sit strictly inside the domain")]
    BallTooLarge(f64),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Left/right norm decomposition of one estimate at one parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimate_id: String,
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub eps: f64,
    pub beta: f64,
    pub h: f64,
    pub domain: String,
    pub function: String,
    pub lhs: Vec<(String, f64)>,
    pub rhs: Vec<(String, f64)>,
    pub ratio: f64,
    pub pass: bool,
}

impl EstimateReport {
    pub fn lhs_total(&self) -> f64 {
        self.lhs.iter().map(|c| c.1).sum()
    }

    pub fn rhs_total(&self) -> f64 {
        self.rhs.iter().map(|c| c.1).sum()
    }

    fn finite(&self) -> bool {
        self.lhs.iter().all(|c| c.1.is_finite() && c.1 >= 0.0)
            && self.rhs.iter().all(|c| c.1.is_finite() && c.1 >= 0.0)
    }
}

fn ratio_of(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// max/median of a ratio collection; the operational meaning of "bounded
/// uniformly in ε".
pub fn stability(ratios: &[f64]) -> f64 {
    assert!(!ratios.is_empty());
    let mut sorted: Vec<f64> = ratios.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    sorted[sorted.len() - 1] / median
}

/// Hessian-to-Laplacian L² ratio for a zero-boundary field on a convex
/// domain; at most 1 up to discretization (tolerance 10h).
pub fn check_miranda_talenti(grid: &Grid2D, u: &ScalarField) -> Result<EstimateReport, HarnessError> {
    let (_, hess) = differentiate(grid, u);
    let mut lap = ScalarField::zeros(grid);
    for &k in grid.in_domain_nodes() {
        lap.set(k, hess.get(k).trace());
    }
    let hess_l2 = norm_q(grid, &hess, 2.0);
    let lap_l2 = norm_q(grid, &lap, 2.0);
    if lap_l2 == 0.0 {
        return Err(HarnessError::ZeroDenominator);
    }
    let ratio = hess_l2 / lap_l2;
    Ok(EstimateReport {
        estimate_id: "miranda-talenti".into(),
        n: 2,
        p: 2.0,
        gamma: 0.0,
        eps: 0.0,
        beta: 0.0,
        h: grid.h,
        domain: grid.spec.name(),
        function: String::new(),
        lhs: vec![("hessian_l2".into(), hess_l2)],
        rhs: vec![("laplacian_l2".into(), lap_l2)],
        ratio,
        pass: ratio <= 1.0 + 10.0 * grid.h,
    })
}

fn require_admissible(params: &ProblemParams) -> Result<ExponentTable, HarnessError> {
    let table = classify(params, 0);
    if !table.admissible {
        return Err(HarnessError::Inadmissible(params.n, params.p, params.gamma));
    }
    Ok(table)
}

/// Two sides of the a priori gradient estimate. β = 0 is the full estimate
/// (q₀ gradient norm plus weighted-gradient Sobolev norm against the
/// weighted operator plus the ε offset); β > 0 compares the squared weighted
/// Hessian with (1+β²) times the squared weighted operator, weight exponent
/// γ+β.
pub fn check_apriori(
    grid: &Grid2D,
    v: &ScalarField,
    params: &ProblemParams,
    beta: f64,
) -> Result<EstimateReport, HarnessError> {
    require_admissible(params)?;
    let (p, gamma, eps) = (params.p, params.gamma, params.eps);
    let (lhs, rhs) = if beta == 0.0 {
        let norms = nonlinear_gradient_norms(grid, v, params);
        (
            vec![
                ("grad_q0".to_string(), norms.grad_q0_term),
                ("sobolev".to_string(), norms.sobolev_term),
            ],
            vec![
                ("weighted_op".to_string(), norms.rhs_op_term),
                ("eps_pow".to_string(), norms.eps_term),
            ],
        )
    } else {
        let (grad, hess) = differentiate(grid, v);
        let mut weighted_hess = ScalarField::zeros(grid);
        let mut weighted_op = ScalarField::zeros(grid);
        for &k in grid.in_domain_nodes() {
            let [gx, gy] = grad.get(k);
            let w = (gx * gx + gy * gy + eps).powf(0.5 * (gamma + beta));
            weighted_hess.set(k, w * hess.get(k).frob_sq().sqrt());
            let s = point_state(grad.get(k), hess.get(k), eps);
            weighted_op.set(k, w * operator_values(&s, p, gamma).normalized_p_eps);
        }
        let lhs_sq = norm_q(grid, &weighted_hess, 2.0).powi(2);
        let rhs_sq = (1.0 + beta * beta) * norm_q(grid, &weighted_op, 2.0).powi(2);
        (
            vec![("weighted_hessian_sq".to_string(), lhs_sq)],
            vec![("weighted_op_sq_scaled".to_string(), rhs_sq)],
        )
    };
    let (lt, rt) = (lhs.iter().map(|c| c.1).sum(), rhs.iter().map(|c| c.1).sum());
    let mut report = EstimateReport {
        estimate_id: "apriori".into(),
        n: params.n,
        p,
        gamma,
        eps,
        beta,
        h: grid.h,
        domain: grid.spec.name(),
        function: String::new(),
        lhs,
        rhs,
        ratio: ratio_of(lt, rt),
        pass: false,
    };
    report.pass = report.finite() && report.ratio.is_finite();
    Ok(report)
}

/// Gradient integrability: ‖Dv‖_{q0} against the (γ+1)-th root of the
/// weighted operator norm plus √ε.
pub fn check_gradient_lq(
    grid: &Grid2D,
    v: &ScalarField,
    params: &ProblemParams,
) -> Result<EstimateReport, HarnessError> {
    let table = require_admissible(params)?;
    let (p, gamma, eps) = (params.p, params.gamma, params.eps);
    let (grad, hess) = differentiate(grid, v);
    let mut weighted_op = ScalarField::zeros(grid);
    for &k in grid.in_domain_nodes() {
        let s = point_state(grad.get(k), hess.get(k), eps);
        weighted_op.set(k, operator_values(&s, p, gamma).weighted_operator);
    }
    let lhs_v = norm_q(grid, &grad, table.q0);
    let rhs_op = norm_q(grid, &weighted_op, 2.0).powf(1.0 / (gamma + 1.0));
    let rhs_eps = eps.sqrt();
    let ratio = ratio_of(lhs_v, rhs_op + rhs_eps);
    let mut report = EstimateReport {
        estimate_id: "gradient-lq".into(),
        n: params.n,
        p,
        gamma,
        eps,
        beta: 0.0,
        h: grid.h,
        domain: grid.spec.name(),
        function: String::new(),
        lhs: vec![("grad_q0_norm".into(), lhs_v)],
        rhs: vec![("weighted_op_root".into(), rhs_op), ("sqrt_eps".into(), rhs_eps)],
        ratio,
        pass: false,
    };
    report.pass = report.finite() && ratio.is_finite();
    Ok(report)
}

/// L¹ bound: ∫(|Dv|²+ε)^{(p−2)/2}|Dv| against ∫|(|Dv|²+ε)^{(p−2)/2}Δ^N_{p,ε}v|,
/// the modulus of the divergence written through the operator identity.
pub fn check_l1(grid: &Grid2D, v: &ScalarField, p: f64, eps: f64) -> EstimateReport {
    let (grad, hess) = differentiate(grid, v);
    let mut lhs_field = ScalarField::zeros(grid);
    let mut rhs_field = ScalarField::zeros(grid);
    for &k in grid.in_domain_nodes() {
        let [gx, gy] = grad.get(k);
        let gsq = gx * gx + gy * gy;
        let w = (gsq + eps).powf(0.5 * (p - 2.0));
        lhs_field.set(k, w * gsq.sqrt());
        let s = point_state(grad.get(k), hess.get(k), eps);
        rhs_field.set(k, (w * operator_values(&s, p, 0.0).normalized_p_eps).abs());
    }
    let lhs_v = norm_q(grid, &lhs_field, 1.0);
    let rhs_v = norm_q(grid, &rhs_field, 1.0);
    let ratio = ratio_of(lhs_v, rhs_v);
    let mut report = EstimateReport {
        estimate_id: "l1".into(),
        n: 2,
        p,
        gamma: 0.0,
        eps,
        beta: 0.0,
        h: grid.h,
        domain: grid.spec.name(),
        function: String::new(),
        lhs: vec![("weighted_grad_l1".into(), lhs_v)],
        rhs: vec![("weighted_op_l1".into(), rhs_v)],
        ratio,
        pass: false,
    };
    report.pass = report.finite() && ratio.is_finite();
    report
}

/// Solution estimate for a converged undamped solve: gradient q₀ norm plus
/// weighted-gradient Sobolev norm at the final ε against ‖f‖₂; the barrier
/// sup bound is re-checked as part of the pass flag.
pub fn check_solution_estimate(
    grid: &Grid2D,
    result: &SolveResult,
    f: &ScalarField,
    params: &ProblemParams,
) -> Result<EstimateReport, HarnessError> {
    if !result.converged || params.lambda != 0.0 {
        return Err(HarnessError::Unconverged);
    }
    require_admissible(params)?;
    let mut at_eps = *params;
    at_eps.eps = result.eps_used;
    let norms = nonlinear_gradient_norms(grid, &result.u, &at_eps);
    let f_l2 = norm_q(grid, f, 2.0);
    let lhs_total = norms.grad_q0_term + norms.sobolev_term;
    let ratio = ratio_of(lhs_total, f_l2);
    let k = barrier_constant(params, norm_inf(grid, f), grid.spec.diameter());
    let barrier_ok = norm_inf(grid, &result.u) <= k * grid.spec.diameter();
    Ok(EstimateReport {
        estimate_id: "solution".into(),
        n: params.n,
        p: params.p,
        gamma: params.gamma,
        eps: result.eps_used,
        beta: 0.0,
        h: grid.h,
        domain: grid.spec.name(),
        function: String::new(),
        lhs: vec![
            ("grad_q0".into(), norms.grad_q0_term),
            ("sobolev".into(), norms.sobolev_term),
        ],
        rhs: vec![("f_l2".into(), f_l2)],
        ratio,
        pass: ratio.is_finite() && barrier_ok,
    })
}

/// Scope of the Hölder check.
#[derive(Debug, Clone, Copy)]
pub enum HolderScope {
    Global,
    /// Ball of this radius centered at the domain center; the norm is taken
    /// over the half-radius ball and the sup of the weighted operator over
    /// the full one.
    Local { radius: f64 },
}

/// Hölder norm against the weighted operator. Global form needs a
/// supercritical triplet (α = 1 − n/q₀); the local form uses the Moser
/// exponent from the table and adds the local sup term.
pub fn check_holder(
    grid: &Grid2D,
    v: &ScalarField,
    params: &ProblemParams,
    table: &ExponentTable,
    scope: HolderScope,
    pair_budget: usize,
) -> Result<EstimateReport, HarnessError> {
    if !table.admissible {
        return Err(HarnessError::Inadmissible(params.n, params.p, params.gamma));
    }
    let (p, gamma, eps) = (params.p, params.gamma, params.eps);
    let (grad, hess) = differentiate(grid, v);
    let mut weighted_op = ScalarField::zeros(grid);
    for &k in grid.in_domain_nodes() {
        let s = point_state(grad.get(k), hess.get(k), eps);
        weighted_op.set(k, operator_values(&s, p, gamma).weighted_operator);
    }
    let op_l2_root = norm_q(grid, &weighted_op, 2.0).powf(1.0 / (gamma + 1.0));
    let sqrt_eps = eps.sqrt();

    let (estimate_id, alpha, lhs_v, rhs) = match scope {
        HolderScope::Global => {
            if !table.supercritical {
                return Err(HarnessError::NotSupercritical);
            }
            let alpha = 1.0 - params.n as f64 / table.q0;
            let lhs_v = holder_norm(grid, v, alpha, pair_budget);
            (
                "holder-global",
                alpha,
                lhs_v,
                vec![
                    ("weighted_op_root".to_string(), op_l2_root),
                    ("sqrt_eps".to_string(), sqrt_eps),
                ],
            )
        }
        HolderScope::Local { radius } => {
            let center = grid.spec.center();
            if radius <= 0.0
                || grid.spec.boundary_distance(center.0, center.1) <= radius
            {
                return Err(HarnessError::BallTooLarge(radius));
            }
            let alpha = table.holder_alpha.expect("admissible table has alpha");
            let lhs_v =
                holder_norm_in_ball(grid, v, alpha, pair_budget, center, 0.5 * radius);
            let mut sup_ball = 0.0f64;
            for &k in grid.in_domain_nodes() {
                let (x, y) = grid.coords(k);
                let (dx, dy) = (x - center.0, y - center.1);
                if dx * dx + dy * dy <= radius * radius {
                    sup_ball = sup_ball.max(weighted_op.get(k).abs());
                }
            }
            (
                "holder-local",
                alpha,
                lhs_v,
                vec![
                    ("weighted_op_ball_sup_root".to_string(), sup_ball.powf(1.0 / (gamma + 1.0))),
                    ("weighted_op_root".to_string(), op_l2_root),
                    ("sqrt_eps".to_string(), sqrt_eps),
                ],
            )
        }
    };
    let rhs_total: f64 = rhs.iter().map(|c| c.1).sum();
    let ratio = ratio_of(lhs_v, rhs_total);
    let mut report = EstimateReport {
        estimate_id: estimate_id.into(),
        n: params.n,
        p,
        gamma,
        eps,
        beta: alpha,
        h: grid.h,
        domain: grid.spec.name(),
        function: String::new(),
        lhs: vec![("holder_norm".into(), lhs_v)],
        rhs,
        ratio,
        pass: false,
    };
    report.pass = report.finite() && ratio.is_finite();
    Ok(report)
}

/// Verdict on a continuation run's Cauchy increments.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub d: Vec<f64>,
    pub pass: bool,
}

const STUDY_ABS_FLOOR: f64 = 1e-12;

/// The weighted-gradient increments must not grow (factor 1.2 slack) and the
/// last must not exceed the first. Single-stage runs pass vacuously.
pub fn convergence_study(diag: &ConvergenceDiagnostics) -> ConvergenceStudy {
    let d = diag.d_weighted_grad.clone();
    let mut pass = true;
    for w in d.windows(2) {
        if w[1] > 1.2 * w[0] + STUDY_ABS_FLOOR {
            pass = false;
        }
    }
    if let (Some(first), Some(last)) = (d.first(), d.last()) {
        if *last > *first + STUDY_ABS_FLOOR {
            pass = false;
        }
    }
    ConvergenceStudy { d, pass }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateKind {
    MirandaTalenti,
    Apriori,
    GradientLq,
    L1,
    HolderGlobal,
    HolderLocal,
    Solution,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 7] = [
        EstimateKind::MirandaTalenti,
        EstimateKind::Apriori,
        EstimateKind::GradientLq,
        EstimateKind::L1,
        EstimateKind::HolderGlobal,
        EstimateKind::HolderLocal,
        EstimateKind::Solution,
    ];

    pub fn parse(name: &str) -> Option<EstimateKind> {
        match name {
            "miranda-talenti" => Some(EstimateKind::MirandaTalenti),
            "apriori" => Some(EstimateKind::Apriori),
            "gradient-lq" => Some(EstimateKind::GradientLq),
            "l1" => Some(EstimateKind::L1),
            "holder-global" => Some(EstimateKind::HolderGlobal),
            "holder-local" => Some(EstimateKind::HolderLocal),
            "solution" => Some(EstimateKind::Solution),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimateKind::MirandaTalenti => "miranda-talenti",
            EstimateKind::Apriori => "apriori",
            EstimateKind::GradientLq => "gradient-lq",
            EstimateKind::L1 => "l1",
            EstimateKind::HolderGlobal => "holder-global",
            EstimateKind::HolderLocal => "holder-local",
            EstimateKind::Solution => "solution",
        }
    }
}

/// One point of the sweep's parameter grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepTuple {
    pub p: f64,
    pub gamma: f64,
    pub eps: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub estimates: Vec<EstimateKind>,
    pub domains: Vec<DomainSpec>,
    pub functions: Vec<SourceFn>,
    pub tuples: Vec<SweepTuple>,
    pub h: f64,
    pub pair_budget: usize,
    pub holder_radius: f64,
}

/// Cartesian-product sweep over (estimate, tuple, function, domain) in
/// deterministic order; failures become rows with pass = false.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<EstimateReport>, HarnessError> {
    let mut grids = Vec::new();
    for &spec in &cfg.domains {
        grids.push(build_grid(spec, cfg.h).map_err(|e| SolveError::Config(e.to_string()))?);
    }

    struct Job {
        kind: EstimateKind,
        tuple: SweepTuple,
        function: SourceFn,
        domain_idx: usize,
    }
    let mut jobs = Vec::new();
    for &kind in &cfg.estimates {
        for &tuple in &cfg.tuples {
            for &function in &cfg.functions {
                for domain_idx in 0..cfg.domains.len() {
                    jobs.push(Job {
                        kind,
                        tuple,
                        function,
                        domain_idx,
                    });
                }
            }
        }
    }

    let reports = crate::par::map_slice(&jobs, |job| {
        let grid = &grids[job.domain_idx];
        let run = || -> Result<EstimateReport, HarnessError> {
            let params = ProblemParams::new(2, job.tuple.p, job.tuple.gamma, job.tuple.eps)
                .map_err(|e| SolveError::Config(e.to_string()))?;
            let field = zero_boundary_field(grid, job.function);
            match job.kind {
                EstimateKind::MirandaTalenti => check_miranda_talenti(grid, &field),
                EstimateKind::Apriori => check_apriori(grid, &field, &params, job.tuple.beta),
                EstimateKind::GradientLq => check_gradient_lq(grid, &field, &params),
                EstimateKind::L1 => Ok(check_l1(grid, &field, job.tuple.p, job.tuple.eps)),
                EstimateKind::HolderGlobal => {
                    let table = classify(&params, 0);
                    check_holder(
                        grid,
                        &field,
                        &params,
                        &table,
                        HolderScope::Global,
                        cfg.pair_budget,
                    )
                }
                EstimateKind::HolderLocal => {
                    let table = classify(&params, 0);
                    check_holder(
                        grid,
                        &field,
                        &params,
                        &table,
                        HolderScope::Local {
                            radius: cfg.holder_radius,
                        },
                        cfg.pair_budget,
                    )
                }
                EstimateKind::Solution => {
                    let mut solve_cfg = SolveConfig::new(params);
                    solve_cfg.eps_schedule = vec![job.tuple.eps];
                    let f = source_field(grid, job.function, 1.0);
                    let (results, _) = continuation_solve(grid, &solve_cfg, &f)?;
                    check_solution_estimate(grid, &results[0], &f, &params)
                }
            }
        };
        match run() {
            Ok(mut report) => {
                report.function = job.function.name().to_string();
                // Stamp the sweep coordinates so every row is traceable even
                // for estimates that ignore some of them.
                report.p = job.tuple.p;
                report.gamma = job.tuple.gamma;
                report.eps = job.tuple.eps;
                if report.estimate_id != "holder-global" && report.estimate_id != "holder-local" {
                    report.beta = job.tuple.beta;
                }
                report
            }
            Err(err) => EstimateReport {
                estimate_id: job.kind.name().into(),
                n: 2,
                p: job.tuple.p,
                gamma: job.tuple.gamma,
                eps: job.tuple.eps,
                beta: job.tuple.beta,
                h: cfg.h,
                domain: cfg.domains[job.domain_idx].name(),
                function: format!("{} [{err}]", job.function.name()),
                lhs: vec![],
                rhs: vec![],
                ratio: f64::NAN,
                pass: false,
            },
        }
    });
    Ok(reports)
}

const CSV_COMPONENTS: usize = 3;

/// Render reports as CSV: comma-separated, '.' decimals, LF line ends,
/// fixed component count (padded with zeros).
pub fn reports_to_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::new();
    out.push_str("estimate_id,n,p,gamma,eps,beta,h,domain,function");
    for i in 1..=CSV_COMPONENTS {
        out.push_str(&format!(",lhs_{i}"));
    }
    for i in 1..=CSV_COMPONENTS {
        out.push_str(&format!(",rhs_{i}"));
    }
    out.push_str(",ratio,pass\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            r.estimate_id, r.n, r.p, r.gamma, r.eps, r.beta, r.h, r.domain, r.function
        ));
        for i in 0..CSV_COMPONENTS {
            out.push_str(&format!(",{}", r.lhs.get(i).map_or(0.0, |c| c.1)));
        }
        for i in 0..CSV_COMPONENTS {
            out.push_str(&format!(",{}", r.rhs.get(i).map_or(0.0, |c| c.1)));
        }
        out.push_str(&format!(",{},{}\n", r.ratio, r.pass));
    }
    out
}

/// Per-estimate rollup for the JSON summary: worst ratio, worst ε-stability
/// factor over groups sharing everything but ε, and the overall pass flag.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateSummary {
    pub rows: usize,
    pub worst_ratio: f64,
    pub worst_stability: f64,
    pub all_pass: bool,
}

pub fn summarize(reports: &[EstimateReport]) -> BTreeMap<String, EstimateSummary> {
    let mut by_estimate: BTreeMap<String, Vec<&EstimateReport>> = BTreeMap::new();
    for r in reports {
        by_estimate.entry(r.estimate_id.clone()).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (id, rows) in by_estimate {
        let worst_ratio = rows
            .iter()
            .map(|r| r.ratio)
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.ratio.is_finite()) {
            let key = format!(
                "{}|{}|{}|{}|{}|{}",
                r.domain, r.function, r.p, r.gamma, r.beta, r.h
            );
            groups.entry(key).or_default().push(r.ratio);
        }
        let worst_stability = groups
            .values()
            .filter(|v| v.len() > 1 && v.iter().all(|x| *x > 0.0))
            .map(|v| stability(v))
            .fold(1.0, f64::max);
        out.insert(
            id,
            EstimateSummary {
                rows: rows.len(),
                worst_ratio,
                worst_stability,
                all_pass: rows.iter().all(|r| r.pass),
            },
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::classify;
    use crate::registry::sinsin_exact;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn square(h: f64) -> Grid2D {
        build_grid(DomainSpec::unit_square(), h).unwrap()
    }

    #[test]
    fn miranda_talenti_equality_case() {
        let g = square(1.0 / 128.0);
        let u = ScalarField::from_fn(&g, sinsin_exact::value);
        let report = check_miranda_talenti(&g, &u).unwrap();
        assert!((report.ratio - 1.0).abs() < 0.02, "ratio {}", report.ratio);
        assert!(report.pass);
    }

    #[test]
    fn miranda_talenti_polynomial_and_scaling() {
        let g = square(1.0 / 64.0);
        let u = ScalarField::from_fn(&g, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let report = check_miranda_talenti(&g, &u).unwrap();
        assert!(report.ratio <= 1.0 + 10.0 * g.h, "ratio {}", report.ratio);

        let tu = ScalarField::from_values(&g, u.values().iter().map(|a| 7.0 * a).collect());
        let scaled = check_miranda_talenti(&g, &tu).unwrap();
        assert_relative_eq!(scaled.ratio, report.ratio, max_relative = 1e-12);
    }

    #[test]
    fn miranda_talenti_rejects_zero_laplacian() {
        let g = square(1.0 / 16.0);
        let u = ScalarField::zeros(&g);
        assert!(matches!(
            check_miranda_talenti(&g, &u),
            Err(HarnessError::ZeroDenominator)
        ));
    }

    #[test]
    fn apriori_zero_field_and_eps_stability() {
        let g = square(1.0 / 64.0);
        let params = ProblemParams::new(2, 2.0, 0.0, 1e-2).unwrap();
        let zero = ScalarField::zeros(&g);
        let report = check_apriori(&g, &zero, &params, 0.0).unwrap();
        assert_eq!(report.ratio, 0.0);
        assert_eq!(report.lhs_total(), 0.0);

        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        let mut ratios = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let params = ProblemParams::new(2, 2.0, 0.0, eps).unwrap();
            ratios.push(check_apriori(&g, &v, &params, 0.0).unwrap().ratio);
        }
        assert!(stability(&ratios) <= STABILITY_FACTOR, "ratios {ratios:?}");
    }

    #[test]
    fn apriori_rejects_inadmissible() {
        let g = square(1.0 / 32.0);
        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        // (n, p, gamma) = (2, anything, gamma) is admissible for gamma > -1,
        // so force a higher-dimensional pretend triplet through params.
        let bad = ProblemParams::new(4, 6.0, 0.0, 1e-2).unwrap();
        assert!(matches!(
            check_apriori(&g, &v, &bad, 0.0),
            Err(HarnessError::Inadmissible(..))
        ));
    }

    #[test]
    fn gradient_lq_homogeneity_at_tiny_eps() {
        let g = square(1.0 / 64.0);
        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        let tv = ScalarField::from_values(&g, v.values().iter().map(|a| 10.0 * a).collect());
        let params = ProblemParams::new(2, 2.0, 0.0, 1e-8).unwrap();
        let a = check_gradient_lq(&g, &v, &params).unwrap();
        assert!(a.pass);
        let b = check_gradient_lq(&g, &tv, &params).unwrap();
        // gamma = 0: both sides scale linearly, ratio invariant up to the
        // sqrt(eps) offset.
        assert_relative_eq!(a.ratio, b.ratio, max_relative = 1e-4);

        let zero = check_gradient_lq(&g, &ScalarField::zeros(&g), &params).unwrap();
        assert_eq!(zero.lhs_total(), 0.0);
    }

    #[test]
    fn solution_estimate_zero_rhs_reports_zero() {
        let g = square(1.0 / 32.0);
        let params = ProblemParams::new(2, 2.0, 0.0, 1e-2).unwrap();
        let mut cfg = SolveConfig::new(params);
        cfg.eps_schedule = vec![1e-2];
        let f = ScalarField::zeros(&g);
        let (results, _) = continuation_solve(&g, &cfg, &f).unwrap();
        let report = check_solution_estimate(&g, &results[0], &f, &params).unwrap();
        assert_eq!(report.lhs_total(), 0.0);
        assert_eq!(report.ratio, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn l1_poisson_form_stable_under_refinement() {
        let mut ratios = Vec::new();
        for h in [1.0 / 64.0, 1.0 / 128.0] {
            let g = square(h);
            let v = ScalarField::from_fn(&g, sinsin_exact::value);
            let report = check_l1(&g, &v, 2.0, 1e-8);
            assert!(report.pass);
            ratios.push(report.ratio);
        }
        assert!(
            (ratios[0] - ratios[1]).abs() / ratios[1] < 0.1,
            "ratios {ratios:?}"
        );
        // Scaling invariance at p = 2.
        let g = square(1.0 / 64.0);
        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        let tv = ScalarField::from_values(&g, v.values().iter().map(|a| 5.0 * a).collect());
        let a = check_l1(&g, &v, 2.0, 1e-10);
        let b = check_l1(&g, &tv, 2.0, 1e-10);
        assert_relative_eq!(a.ratio, b.ratio, max_relative = 1e-3);

        let zero = check_l1(&g, &ScalarField::zeros(&g), 2.0, 1e-2);
        assert_eq!(zero.lhs_total(), 0.0);
    }

    #[test]
    fn holder_global_on_sinsin() {
        let g = square(1.0 / 64.0);
        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        let mut ratios = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let params = ProblemParams::new(2, 3.0, 0.5, eps).unwrap();
            let table = classify(&params, 0);
            assert!(table.supercritical);
            let report = check_holder(&g, &v, &params, &table, HolderScope::Global, 20_000)
                .unwrap();
            assert!(report.pass);
            ratios.push(report.ratio);
        }
        assert!(stability(&ratios) <= STABILITY_FACTOR, "ratios {ratios:?}");

        let zero = ScalarField::zeros(&g);
        let params = ProblemParams::new(2, 3.0, 0.5, 1e-2).unwrap();
        let table = classify(&params, 0);
        let report = check_holder(&g, &zero, &params, &table, HolderScope::Global, 1000).unwrap();
        assert_eq!(report.lhs_total(), 0.0);
    }

    #[test]
    fn holder_local_ball_validation() {
        let g = square(1.0 / 32.0);
        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        let params = ProblemParams::new(2, 2.0, 0.25, 1e-2).unwrap();
        let table = classify(&params, 0);
        assert!(check_holder(
            &g,
            &v,
            &params,
            &table,
            HolderScope::Local { radius: 0.9 },
            1000
        )
        .is_err());
        let ok = check_holder(
            &g,
            &v,
            &params,
            &table,
            HolderScope::Local { radius: 0.25 },
            10_000,
        )
        .unwrap();
        assert!(ok.pass);
    }

    #[test]
    fn solution_estimate_poisson_analytic_value() {
        // Poisson with f = 2 pi^2 sinsin has u = sinsin: the Sobolev part is
        // pi^2, ||f||_2 = pi^2, and ||Du||_{q0} comes from an independent
        // high-resolution quadrature of the closed-form gradient below.
        let h = 1.0 / 128.0;
        let g = square(h);
        let params = ProblemParams::new(2, 2.0, 0.0, 1e-6).unwrap();
        let mut cfg = SolveConfig::new(params);
        cfg.eps_schedule = vec![1e-6];
        let f = ScalarField::from_fn(&g, |x, y| 2.0 * PI * PI * sinsin_exact::value(x, y));
        let (results, _) = continuation_solve(&g, &cfg, &f).unwrap();
        let report = check_solution_estimate(&g, &results[0], &f, &params).unwrap();
        assert!(report.pass);

        // Oracle: composite Simpson on the closed-form |Du|^12 integrand,
        // independent of the grid code.
        let q0 = 12.0;
        let m = 640usize;
        let w1 = |i: usize| -> f64 {
            if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut acc = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let (x, y) = (i as f64 / m as f64, j as f64 / m as f64);
                let d = sinsin_exact::gradient(x, y);
                let mag = d[0].hypot(d[1]);
                acc += w1(i) * w1(j) * mag.powf(q0);
            }
        }
        acc *= (1.0 / m as f64) * (1.0 / m as f64) / 9.0;
        let grad_q0 = acc.powf(1.0 / q0);
        let expected_ratio = (grad_q0 + PI * PI) / (PI * PI);
        assert!(
            (report.ratio - expected_ratio).abs() / expected_ratio < 0.05,
            "ratio {} vs oracle {expected_ratio}",
            report.ratio
        );
    }

    #[test]
    fn solution_estimate_rejects_unconverged() {
        let g = square(1.0 / 32.0);
        let params = ProblemParams::new(2, 2.0, 0.0, 1e-2).unwrap();
        let f = ScalarField::from_fn(&g, sinsin_exact::value);
        let fake = SolveResult {
            u: ScalarField::zeros(&g),
            iterations: 0,
            residual_history: vec![],
            converged: false,
            eps_used: 1e-2,
        };
        assert!(matches!(
            check_solution_estimate(&g, &fake, &f, &params),
            Err(HarnessError::Unconverged)
        ));
    }

    #[test]
    fn convergence_study_rules() {
        let mk = |d: Vec<f64>| ConvergenceDiagnostics {
            eps: vec![0.1; d.len() + 1],
            d_weighted_grad: d,
            d_grad: vec![],
            stage_iterations: vec![],
            stage_converged: vec![],
        };
        assert!(convergence_study(&mk(vec![1.0, 0.5, 0.2])).pass);
        assert!(convergence_study(&mk(vec![1.0, 1.1, 0.9])).pass);
        assert!(!convergence_study(&mk(vec![1.0, 1.5])).pass);
        assert!(!convergence_study(&mk(vec![0.1, 0.11, 0.12, 0.11])).pass);
        assert!(convergence_study(&mk(vec![])).pass);
        assert!(convergence_study(&mk(vec![1e-15, 3e-15])).pass);
    }

    #[test]
    fn sweep_row_counting_and_determinism() {
        let cfg = SweepConfig {
            estimates: vec![
                EstimateKind::MirandaTalenti,
                EstimateKind::GradientLq,
                EstimateKind::L1,
            ],
            domains: vec![DomainSpec::unit_square()],
            functions: vec![SourceFn::SinSin, SourceFn::GaussianBump],
            tuples: vec![
                SweepTuple { p: 2.0, gamma: 0.0, eps: 1e-2, beta: 0.0 },
                SweepTuple { p: 3.0, gamma: 0.5, eps: 1e-2, beta: 0.0 },
            ],
            h: 1.0 / 32.0,
            pair_budget: 1000,
            holder_radius: 0.25,
        };
        let a = sweep(&cfg).unwrap();
        assert_eq!(a.len(), 3 * 2 * 2);
        let b = sweep(&cfg).unwrap();
        assert_eq!(reports_to_csv(&a), reports_to_csv(&b));

        let empty = SweepConfig {
            estimates: vec![],
            ..cfg
        };
        let rows = sweep(&empty).unwrap();
        assert!(rows.is_empty());
        let csv = reports_to_csv(&rows);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("estimate_id,"));
    }

    #[test]
    fn sweep_records_failures_and_continues() {
        let cfg = SweepConfig {
            estimates: vec![EstimateKind::HolderGlobal],
            domains: vec![DomainSpec::unit_square()],
            functions: vec![SourceFn::SinSin],
            // eps = 2.0 is invalid, so the row must fail without aborting.
            tuples: vec![
                SweepTuple { p: 2.0, gamma: 0.0, eps: 2.0, beta: 0.0 },
                SweepTuple { p: 2.0, gamma: 0.0, eps: 1e-2, beta: 0.0 },
            ],
            h: 1.0 / 32.0,
            pair_budget: 1000,
            holder_radius: 0.25,
        };
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(!rows[0].pass && rows[0].ratio.is_nan());
        assert!(rows[1].pass);
        let summary = summarize(&rows);
        assert!(!summary["holder-global"].all_pass);
    }

    #[test]
    fn report_reproducible_from_dumped_field() {
        let g = square(1.0 / 32.0);
        let v = ScalarField::from_fn(&g, sinsin_exact::value);
        let params = ProblemParams::new(2, 2.5, 0.25, 1e-2).unwrap();
        let before = check_gradient_lq(&g, &v, &params).unwrap();
        let reloaded = g.load_field(&g.dump_field(&v)).unwrap();
        let after = check_gradient_lq(&g, &reloaded, &params).unwrap();
        for (a, b) in before.lhs.iter().zip(after.lhs.iter()) {
            assert_relative_eq!(a.1, b.1, max_relative = 1e-12);
        }
        for (a, b) in before.rhs.iter().zip(after.rhs.iter()) {
            assert_relative_eq!(a.1, b.1, max_relative = 1e-12);
        }
        // Quadrature is order-independent to rounding: summing the weighted
        // integrand in reverse matches to 1e-12 relative.
        let (grad, _) = differentiate(&g, &v);
        let fwd: f64 = g
            .in_domain_nodes()
            .iter()
            .map(|&k| {
                let [gx, gy] = grad.get(k);
                g.weight(k) * (gx * gx + gy * gy)
            })
            .sum();
        let rev: f64 = g
            .in_domain_nodes()
            .iter()
            .rev()
            .map(|&k| {
                let [gx, gy] = grad.get(k);
                g.weight(k) * (gx * gx + gy * gy)
            })
            .sum();
        assert_relative_eq!(fwd, rev, max_relative = 1e-12);
    }

    #[test]
    fn stability_of_constant_ratios_is_one() {
        assert_relative_eq!(stability(&[2.0, 2.0, 2.0, 2.0]), 1.0);
        assert_relative_eq!(stability(&[1.0, 2.0, 3.0, 4.0]), 4.0 / 2.5);
    }
}
