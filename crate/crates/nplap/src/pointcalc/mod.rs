//! Pointwise operator calculus on a (gradient, Hessian, ε) state.
//!
//! All regularized operators derive from two scalars: the Laplacian tr(H)
//! and the ∞-Laplacian ⟨Hg, g⟩. The ε-regularized normalized forms divide by
//! |g|² + ε, so every quantity below is finite for ε > 0.
//!
//! The `*_gap` functions return (left side − right side) of an algebraic
//! inequality; each is provably nonnegative on its stated domain, and the
//! randomized suites in [`suites`] exercise exactly that.

pub mod suites;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::params::gamma_threshold;

/// Gradients below this magnitude are treated as degenerate: the pointwise
/// inequalities are stated off the critical set {Dv = 0}.
pub const DEGENERATE_GRADIENT: f64 = 1e-10;

const SYMMETRY_RTOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PointError {
    #[error("Hessian is asymmetric beyond 1e-12 relative tolerance")]
    Asymmetric,
    #[error("regularization eps must be positive, got {0}")]
    BadEps(f64),
    #[error("gradient and Hessian dimensions disagree: {0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("gradient magnitude {0} is below the degenerate threshold")]
    DegenerateGradient(f64),
    #[error("variant requires gamma in {0}, got {1}")]
    VariantGamma(&'static str, f64),
    #[error("variant requires eps in {0}, got {1}")]
    VariantEps(&'static str, f64),
    #[error("triplet (n, p, gamma) = ({0}, {1}, {2}) is not admissible")]
    Inadmissible(usize, f64, f64),
}

/// Gradient vector, symmetric Hessian, and regularization ε at one point.
#[derive(Debug, Clone)]
pub struct PointState {
    g: DVector<f64>,
    hess: DMatrix<f64>,
    eps: f64,
}

impl PointState {
    /// The Hessian is symmetrized on construction; inputs asymmetric beyond
    /// 1e-12 relative are rejected.
    pub fn new(g: DVector<f64>, hess: DMatrix<f64>, eps: f64) -> Result<Self, PointError> {
        if !(eps > 0.0) {
            return Err(PointError::BadEps(eps));
        }
        if hess.nrows() != hess.ncols() || g.len() != hess.nrows() {
            return Err(PointError::DimensionMismatch(g.len(), hess.nrows()));
        }
        let scale = hess.amax().max(1e-300);
        let mut sym = hess;
        for i in 0..sym.nrows() {
            for j in (i + 1)..sym.ncols() {
                let a = sym[(i, j)];
                let b = sym[(j, i)];
                if (a - b).abs() > SYMMETRY_RTOL * scale {
                    return Err(PointError::Asymmetric);
                }
                let m = 0.5 * (a + b);
                sym[(i, j)] = m;
                sym[(j, i)] = m;
            }
        }
        Ok(PointState { g, hess: sym, eps })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn gradient(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hess
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn grad_norm_sq(&self) -> f64 {
        self.g.norm_squared()
    }

    fn require_nondegenerate(&self) -> Result<(), PointError> {
        let norm = self.g.norm();
        if norm <= DEGENERATE_GRADIENT {
            Err(PointError::DegenerateGradient(norm))
        } else {
            Ok(())
        }
    }
}

/// The operator family evaluated at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorValues {
    /// tr(H)
    pub laplacian: f64,
    /// ⟨Hg, g⟩
    pub inf_laplacian: f64,
    /// ⟨Hg, g⟩ / (|g|² + ε)
    pub normalized_inf_eps: f64,
    /// tr(H) + (p−2)·⟨Hg, g⟩/(|g|² + ε)
    pub normalized_p_eps: f64,
    /// (|g|² + ε)^{γ/2} · normalized_p_eps
    pub weighted_operator: f64,
}

pub fn operator_values(s: &PointState, p: f64, gamma: f64) -> OperatorValues {
    let laplacian = s.hess.trace();
    let hg = &s.hess * &s.g;
    let inf_laplacian = hg.dot(&s.g);
    let denom = s.grad_norm_sq() + s.eps;
    let normalized_inf_eps = inf_laplacian / denom;
    let normalized_p_eps = laplacian + (p - 2.0) * normalized_inf_eps;
    OperatorValues {
        laplacian,
        inf_laplacian,
        normalized_inf_eps,
        normalized_p_eps,
        weighted_operator: denom.powf(0.5 * gamma) * normalized_p_eps,
    }
}

/// Frozen-coefficient matrix A = (|g|²+ε)^{γ/2}(I + (p−2)·g⊗g/(|g|²+ε)),
/// chosen so that tr(A·H) equals the weighted operator for every H.
pub fn coefficient_matrix(s: &PointState, p: f64, gamma: f64) -> DMatrix<f64> {
    let n = s.dim();
    let denom = s.grad_norm_sq() + s.eps;
    let weight = denom.powf(0.5 * gamma);
    let mut a = DMatrix::identity(n, n);
    let scale = (p - 2.0) / denom;
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += scale * s.g[i] * s.g[j];
            a[(i, j)] *= weight;
        }
    }
    a
}

/// Slack in the unregularized Hessian decomposition
///
/// ```text
///   |H|² − 2|Hĝ|² + ⟨Hĝ, ĝ⟩²  ≥  (tr H − ⟨Hĝ, ĝ⟩)² / (n−1),
/// ```
///
/// with ĝ = g/|g|. Identically zero in dimension 2, where the inner
/// Cauchy-Schwarz step is vacuous.
pub fn fundamental_gap(s: &PointState) -> Result<f64, PointError> {
    s.require_nondegenerate()?;
    let n = s.dim() as f64;
    let ghat = s.g.normalize();
    let h_ghat = &s.hess * &ghat;
    let d_grad_sq = h_ghat.norm_squared();
    let inf_n = h_ghat.dot(&ghat);
    let frob_sq = s.hess.norm_squared();
    let lhs = frob_sq - 2.0 * d_grad_sq + inf_n * inf_n;
    let rhs = (s.hess.trace() - inf_n).powi(2) / (n - 1.0);
    Ok(lhs - rhs)
}

/// The ε-error bookkeeping term T that makes the structural inequality
/// self-improving. Each bracket compares an unregularized quantity with its
/// ε-regularized counterpart; their weighted sum is nonnegative.
pub fn t_gap(s: &PointState, p: f64, gamma: f64) -> Result<f64, PointError> {
    s.require_nondegenerate()?;
    let n = s.dim();
    if gamma <= gamma_threshold(n, p).map_err(|_| PointError::Inadmissible(n, p, gamma))? {
        return Err(PointError::Inadmissible(n, p, gamma));
    }
    Ok(t_terms(s, p, gamma).iter().sum())
}

/// The four summands of the T quantity, in order.
pub(crate) fn t_terms(s: &PointState, p: f64, gamma: f64) -> [f64; 4] {
    let nf = s.dim() as f64;
    let g_sq = s.grad_norm_sq();
    let denom = g_sq + s.eps;
    let hg = &s.hess * &s.g;
    let hg_sq = hg.norm_squared();
    let inf = hg.dot(&s.g);
    let inf_n = inf / g_sq;
    let inf_n_eps = inf / denom;
    [
        nf / (nf - 1.0) * (inf_n * inf_n - inf_n_eps * inf_n_eps),
        2.0 * gamma * (hg_sq / denom - inf_n_eps * inf_n_eps),
        2.0 * (hg_sq / g_sq - inf_n * inf_n),
        2.0 * (p - 2.0) / (nf - 1.0) * inf_n_eps * inf_n_eps * s.eps / g_sq,
    ]
}

/// Slack in the weighted Hessian lower bound
///
/// ```text
///   |H|² + 2γ|Hg|²/(|g|²+ε) + γ²(Δ^N_{∞,ε})²  ≥  min{1, (γ+1)²} |H|².
/// ```
pub fn hessian_bound_gap(s: &PointState, gamma: f64) -> f64 {
    let denom = s.grad_norm_sq() + s.eps;
    let hg = &s.hess * &s.g;
    let inf_n_eps = hg.dot(&s.g) / denom;
    let frob_sq = s.hess.norm_squared();
    let lhs = frob_sq + 2.0 * gamma * hg.norm_squared() / denom + gamma * gamma * inf_n_eps * inf_n_eps;
    lhs - 1.0f64.min((gamma + 1.0).powi(2)) * frob_sq
}

/// Which of the four vector monotonicity inequalities to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotonicityVariant {
    /// −1 < γ < 0, ε ∈ (0,1]: regularized maps, offset |a|²+|b|²+ε.
    RegNeg,
    /// −1 < γ < 0, ε = 0: raw maps, offset |a|²+|b|²+1.
    UnregNeg,
    /// γ ≥ 0, ε ∈ (0,1]: regularized maps, constant 2^{−2−γ}.
    RegPos,
    /// γ ≥ 0, ε = 0: raw maps, constant 2^{−2−γ}.
    UnregPos,
}

/// Slack in the strong monotonicity of the map x ↦ (|x|²+ε)^{γ/2} x.
pub fn monotonicity_gap(
    a: &DVector<f64>,
    b: &DVector<f64>,
    gamma: f64,
    eps: f64,
    variant: MonotonicityVariant,
) -> Result<f64, PointError> {
    use MonotonicityVariant::*;
    match variant {
        RegNeg | UnregNeg => {
            if !(gamma > -1.0 && gamma < 0.0) {
                return Err(PointError::VariantGamma("(-1, 0)", gamma));
            }
        }
        RegPos | UnregPos => {
            if gamma < 0.0 {
                return Err(PointError::VariantGamma("[0, inf)", gamma));
            }
        }
    }
    match variant {
        RegNeg | RegPos => {
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(PointError::VariantEps("(0, 1]", eps));
            }
        }
        UnregNeg | UnregPos => {
            if eps != 0.0 {
                return Err(PointError::VariantEps("{0}", eps));
            }
        }
    }

    let diff = a - b;
    let diff_sq = diff.norm_squared();
    let map = |x: &DVector<f64>| -> DVector<f64> {
        let w = (x.norm_squared() + eps).powf(0.5 * gamma);
        // |x|^gamma x extends continuously by zero at the origin for gamma > -1.
        if eps == 0.0 && x.norm_squared() == 0.0 {
            DVector::zeros(x.len())
        } else {
            x * w
        }
    };
    let lhs = (map(a) - map(b)).dot(&diff);
    let sum_sq = a.norm_squared() + b.norm_squared();
    let rhs = match variant {
        RegNeg => (gamma + 1.0) * 6f64.powf(0.5 * gamma) * (sum_sq + eps).powf(0.5 * gamma) * diff_sq,
        UnregNeg => {
            (gamma + 1.0) * 6f64.powf(0.5 * gamma) * (sum_sq + 1.0).powf(0.5 * gamma) * diff_sq
        }
        RegPos => 2f64.powf(-2.0 - gamma) * (sum_sq + eps).powf(0.5 * gamma) * diff_sq,
        UnregPos => {
            if sum_sq == 0.0 {
                0.0
            } else {
                2f64.powf(-2.0 - gamma) * sum_sq.powf(0.5 * gamma) * diff_sq
            }
        }
    };
    Ok(lhs - rhs)
}

/// Default constant C(p) for [`structural_gap`]: the Young-step bound
/// (1+|p−2|)² with an (n−1) safety factor. Violations under this default are
/// a bug; smaller user-supplied constants are exploratory.
pub fn default_c_p(n: usize, p: f64) -> f64 {
    (1.0 + (p - 2.0).abs()).powi(2) * (n as f64 - 1.0) + 1.0
}

/// Slack in the structural inequality that converts Hessian control into
/// control of the normalized ∞-Laplacian:
///
/// ```text
///   |H|² + 2γ|Hg|²/(|g|²+ε) + [γ² − (γ−p+2)²](Δ^N_{∞,ε})²
///     ≥ 2(p−1)[γ + 1 − (p−1)(n−2)/(2(n−1))](Δ^N_{∞,ε})²
///       − (C(p)/η)(Δ^N_{p,ε})² − η|H|².
/// ```
pub fn structural_gap(
    s: &PointState,
    p: f64,
    gamma: f64,
    eta: f64,
    c_p: Option<f64>,
) -> Result<f64, PointError> {
    s.require_nondegenerate()?;
    let n = s.dim();
    let nf = n as f64;
    let c_p = c_p.unwrap_or_else(|| default_c_p(n, p));
    let denom = s.grad_norm_sq() + s.eps;
    let hg = &s.hess * &s.g;
    let inf_n_eps = hg.dot(&s.g) / denom;
    let frob_sq = s.hess.norm_squared();
    let ops = operator_values(s, p, gamma);

    let lhs = frob_sq
        + 2.0 * gamma * hg.norm_squared() / denom
        + (gamma * gamma - (gamma - p + 2.0).powi(2)) * inf_n_eps * inf_n_eps;
    let coeff = 2.0 * (p - 1.0) * (gamma + 1.0 - (p - 1.0) * (nf - 2.0) / (2.0 * (nf - 1.0)));
    let rhs = coeff * inf_n_eps * inf_n_eps
        - c_p / eta * ops.normalized_p_eps * ops.normalized_p_eps
        - eta * frob_sq;
    Ok(lhs - rhs)
}

/// Magnitude scale for relative tolerance checks: the sum of the absolute
/// values of the terms entering each gap.
pub fn gap_scale(s: &PointState, p: f64, gamma: f64) -> f64 {
    let denom = s.grad_norm_sq() + s.eps;
    let hg = &s.hess * &s.g;
    let inf_n_eps = hg.dot(&s.g) / denom;
    let frob_sq = s.hess.norm_squared();
    let ops = operator_values(s, p, gamma);
    (1.0 + gamma.abs() + p) * (frob_sq + hg.norm_squared() / denom)
        + inf_n_eps * inf_n_eps
        + ops.normalized_p_eps * ops.normalized_p_eps
}
