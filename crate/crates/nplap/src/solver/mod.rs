//! Frozen-coefficient Picard solver for the damped regularized Dirichlet
//! problem
//!
//! ```text
//!   -(|Du|²+ε)^{γ/2} Δ^N_{p,ε} u + λu = λg + f   in Ω,    u = 0   on ∂Ω,
//! ```
//!
//! with ε-continuation down a schedule. Each Picard step freezes the
//! coefficient matrix A(Du_k) and solves the linear nondivergence problem
//! −tr(A D²u) + λu = rhs; damping halves the step on residual growth. Full
//! Newton is deliberately out: the coefficient map is nonsmooth near Du = 0
//! for γ < 0, and ε plus damping keeps Picard robust there.

pub mod linalg;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{
    differentiate, mollify, norm_q, point_state, Grid2D, Mask, ScalarField, VectorField,
};
use crate::params::ProblemParams;
use crate::pointcalc::{coefficient_matrix, operator_values};
use linalg::{bicgstab, Csr, LinearError};

/// Below this gradient magnitude the frozen coefficient uses the exact
/// zero-gradient limit A = ε^{γ/2} I.
const GRADIENT_FLOOR: f64 = 1e-14;

const DAMPING_FLOOR: f64 = 1.0 / 16.0;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinearError),
    #[error("invalid solve configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub params: ProblemParams,
    pub max_picard: usize,
    /// Tolerance on ‖u_{k+1}−u_k‖_∞ / (1 + ‖u_k‖_∞).
    pub picard_tol: f64,
    /// Initial step fraction in (0, 1].
    pub damping: f64,
    /// Relative residual target of each linear solve.
    pub linear_tol: f64,
    /// Strictly decreasing ε values in (0, 1].
    pub eps_schedule: Vec<f64>,
}

impl SolveConfig {
    pub fn new(params: ProblemParams) -> Self {
        SolveConfig {
            params,
            max_picard: 200,
            picard_tol: 1e-9,
            damping: 1.0,
            linear_tol: 1e-10,
            eps_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        self.params
            .validate()
            .map_err(|e| SolveError::Config(e.to_string()))?;
        if self.eps_schedule.is_empty() {
            return Err(SolveError::Config("eps schedule is empty".into()));
        }
        for w in self.eps_schedule.windows(2) {
            if w[1] >= w[0] {
                return Err(SolveError::Config("eps schedule must strictly decrease".into()));
            }
        }
        if self
            .eps_schedule
            .iter()
            .any(|&e| !(e > 0.0 && e <= 1.0))
        {
            return Err(SolveError::Config("eps schedule values must lie in (0, 1]".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolveError::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: ScalarField,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub eps_used: f64,
}

/// Stage-to-stage Cauchy increments of the continuation run.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceDiagnostics {
    pub eps: Vec<f64>,
    /// ‖V_{ε_j} − V_{ε_{j+1}}‖_{L²} with V_ε = (|Du^ε|²+ε)^{γ/2} Du^ε.
    pub d_weighted_grad: Vec<f64>,
    /// ‖Du^{ε_j} − Du^{ε_{j+1}}‖_{L^{γ+2}}.
    pub d_grad: Vec<f64>,
    pub stage_iterations: Vec<usize>,
    pub stage_converged: Vec<bool>,
}

/// Assemble the frozen-coefficient linear system −tr(A(Dw) D²u) + λu = rhs
/// over in-domain nodes. Boundary nodes get Dirichlet-zero identity rows.
pub fn assemble_frozen(
    grid: &Grid2D,
    w: &ScalarField,
    cfg: &SolveConfig,
    rhs: &ScalarField,
    eps: f64,
) -> (Csr, Vec<f64>) {
    w.assert_compatible(grid);
    rhs.assert_compatible(grid);
    let (grad, _) = differentiate(grid, w);
    let (p, gamma, lambda) = (cfg.params.p, cfg.params.gamma, cfg.params.lambda);
    let inv_h2 = 1.0 / (grid.h * grid.h);

    let rows: Vec<Vec<(usize, f64)>> = crate::par::map_slice(grid.in_domain_nodes(), |&k| {
        let me = grid.dense_index(k);
        if grid.mask(k) == Mask::Boundary {
            return vec![(me, 1.0)];
        }
        let mut g = grad.get(k);
        if g[0].hypot(g[1]) < GRADIENT_FLOOR {
            g = [0.0, 0.0];
        }
        let s = point_state(g, Default::default(), eps);
        let a = coefficient_matrix(&s, p, gamma);
        let (a11, a12, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);

        let nb = |di: i64, dj: i64| -> usize {
            grid.dense_index(grid.neighbor(k, di, dj).expect("interior node has 8 neighbors"))
        };
        vec![
            (me, 2.0 * (a11 + a22) * inv_h2 + lambda),
            (nb(1, 0), -a11 * inv_h2),
            (nb(-1, 0), -a11 * inv_h2),
            (nb(0, 1), -a22 * inv_h2),
            (nb(0, -1), -a22 * inv_h2),
            (nb(1, 1), -0.5 * a12 * inv_h2),
            (nb(-1, -1), -0.5 * a12 * inv_h2),
            (nb(1, -1), 0.5 * a12 * inv_h2),
            (nb(-1, 1), 0.5 * a12 * inv_h2),
        ]
    });

    let b: Vec<f64> = grid
        .in_domain_nodes()
        .iter()
        .map(|&k| {
            if grid.mask(k) == Mask::Boundary {
                0.0
            } else {
                rhs.get(k)
            }
        })
        .collect();

    (Csr::from_rows(rows), b)
}

fn to_dense(grid: &Grid2D, u: &ScalarField) -> Vec<f64> {
    grid.in_domain_nodes().iter().map(|&k| u.get(k)).collect()
}

fn from_dense(grid: &Grid2D, x: &[f64]) -> ScalarField {
    let mut u = ScalarField::zeros(grid);
    for (idx, &k) in grid.in_domain_nodes().iter().enumerate() {
        u.set(k, x[idx]);
    }
    u
}

/// Nodewise defect −(|Du|²+ε)^{γ/2} Δ^N_{p,ε}u + λu − rhs via finite
/// differences; zero at boundary rows. `rhs` is the full right-hand side
/// (λg + f for damped solves).
pub fn residual(
    grid: &Grid2D,
    u: &ScalarField,
    cfg: &SolveConfig,
    rhs: &ScalarField,
    eps: f64,
) -> ScalarField {
    u.assert_compatible(grid);
    let (grad, hess) = differentiate(grid, u);
    let (p, gamma, lambda) = (cfg.params.p, cfg.params.gamma, cfg.params.lambda);
    let values = crate::par::map_slice(grid.in_domain_nodes(), |&k| {
        if grid.mask(k) == Mask::Boundary {
            return 0.0;
        }
        let s = point_state(grad.get(k), hess.get(k), eps);
        let op = operator_values(&s, p, gamma).weighted_operator;
        -op + lambda * u.get(k) - rhs.get(k)
    });
    let mut out = ScalarField::zeros(grid);
    for (idx, &k) in grid.in_domain_nodes().iter().enumerate() {
        out.set(k, values[idx]);
    }
    out
}

/// One Picard solve at fixed ε. `g_eps` is the damping anchor (zero when
/// absent); `warm` seeds the iteration.
pub fn picard_solve(
    grid: &Grid2D,
    cfg: &SolveConfig,
    f: &ScalarField,
    eps: f64,
    g_eps: Option<&ScalarField>,
    warm: Option<&ScalarField>,
) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    let lambda = cfg.params.lambda;
    let mut rhs = f.clone();
    if let Some(g) = g_eps {
        g.assert_compatible(grid);
        for &k in grid.in_domain_nodes() {
            rhs.set(k, f.get(k) + lambda * g.get(k));
        }
    }

    let mut u = warm.cloned().unwrap_or_else(|| ScalarField::zeros(grid));
    u.zero_boundary(grid);
    let mut theta = cfg.damping;
    let mut res_prev = norm_q(grid, &residual(grid, &u, cfg, &rhs, eps), 2.0);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let max_linear = grid.in_domain_count() * 10;

    for _ in 0..cfg.max_picard {
        iterations += 1;
        let (a, b) = assemble_frozen(grid, &u, cfg, &rhs, eps);
        let x0 = to_dense(grid, &u);
        let (x, _, _) = bicgstab(&a, &b, &x0, cfg.linear_tol, max_linear)?;
        let proposal = from_dense(grid, &x);

        let mut candidate = ScalarField::zeros(grid);
        let mut max_update = 0.0f64;
        let mut max_u = 0.0f64;
        for &k in grid.in_domain_nodes() {
            let step = proposal.get(k) - u.get(k);
            candidate.set(k, u.get(k) + theta * step);
            max_update = max_update.max((theta * step).abs());
            max_u = max_u.max(u.get(k).abs());
        }
        let res = norm_q(grid, &residual(grid, &candidate, cfg, &rhs, eps), 2.0);
        if res > res_prev {
            theta = (0.5 * theta).max(DAMPING_FLOOR);
        }
        u = candidate;
        res_prev = res;
        history.push(res);

        if max_update / (1.0 + max_u) <= cfg.picard_tol {
            converged = true;
            break;
        }
    }
    debug_assert!(u.all_finite(grid), "Picard iterate left the finite range");

    Ok(SolveResult {
        u,
        iterations,
        residual_history: history,
        converged,
        eps_used: eps,
    })
}

/// Mollification radius tied to the stage ε.
pub fn stage_moll_radius(h: f64, eps: f64) -> f64 {
    (2.0 * h).max(eps.sqrt())
}

/// Solve down the ε schedule with warm starts and per-stage mollified data.
/// Later stages run from the best iterate even if a stage fails to converge.
/// For λ > 0 the damping anchor is the mollified previous-stage solution.
pub fn continuation_solve(
    grid: &Grid2D,
    cfg: &SolveConfig,
    f: &ScalarField,
) -> Result<(Vec<SolveResult>, ConvergenceDiagnostics), SolveError> {
    cfg.validate()?;
    let gamma = cfg.params.gamma;
    let mut results: Vec<SolveResult> = Vec::new();
    for (j, &eps) in cfg.eps_schedule.iter().enumerate() {
        let radius = stage_moll_radius(grid.h, eps);
        let f_stage = mollify(grid, f, radius);
        let g_stage = if cfg.params.lambda > 0.0 && j > 0 {
            Some(mollify(grid, &results[j - 1].u, radius))
        } else {
            None
        };
        let warm = results.last().map(|r| &r.u);
        let result = picard_solve(grid, cfg, &f_stage, eps, g_stage.as_ref(), warm)?;
        results.push(result);
    }

    let weighted = |r: &SolveResult| -> VectorField {
        let (grad, _) = differentiate(grid, &r.u);
        let mut v = VectorField::zeros(grid);
        for &k in grid.in_domain_nodes() {
            let [gx, gy] = grad.get(k);
            let w = (gx * gx + gy * gy + r.eps_used).powf(0.5 * gamma);
            v.set(k, [w * gx, w * gy]);
        }
        v
    };
    let grads: Vec<VectorField> = results
        .iter()
        .map(|r| differentiate(grid, &r.u).0)
        .collect();
    let weighted_grads: Vec<VectorField> = results.iter().map(weighted).collect();

    let mut d_weighted = Vec::new();
    let mut d_grad = Vec::new();
    for j in 0..results.len().saturating_sub(1) {
        let mut dv = VectorField::zeros(grid);
        let mut dg = VectorField::zeros(grid);
        for &k in grid.in_domain_nodes() {
            let a = weighted_grads[j].get(k);
            let b = weighted_grads[j + 1].get(k);
            dv.set(k, [a[0] - b[0], a[1] - b[1]]);
            let ga = grads[j].get(k);
            let gb = grads[j + 1].get(k);
            dg.set(k, [ga[0] - gb[0], ga[1] - gb[1]]);
        }
        d_weighted.push(norm_q(grid, &dv, 2.0));
        d_grad.push(norm_q(grid, &dg, (gamma + 2.0).max(1.0)));
    }

    let diagnostics = ConvergenceDiagnostics {
        eps: cfg.eps_schedule.clone(),
        d_weighted_grad: d_weighted,
        d_grad,
        stage_iterations: results.iter().map(|r| r.iterations).collect(),
        stage_converged: results.iter().map(|r| r.converged).collect(),
    };
    Ok((results, diagnostics))
}

/// Barrier constant K = 1 + (2 d_Ω ‖f‖_∞ / (n−1))^{1/(γ+1)}; every solution
/// of the undamped problem obeys ‖u‖_∞ ≤ K · d_Ω.
pub fn barrier_constant(params: &ProblemParams, f_sup: f64, diameter: f64) -> f64 {
    1.0 + (2.0 * diameter / (params.n as f64 - 1.0) * f_sup).powf(1.0 / (params.gamma + 1.0))
}
