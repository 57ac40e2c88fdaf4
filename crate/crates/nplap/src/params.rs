//! Exponent arithmetic for the triplet (n, p, γ).
//!
//! The whole theory is driven by a handful of derived exponents: the
//! admissibility threshold γ_{n,p}, the Sobolev conjugate 2⋆, the gradient
//! integrability exponent q₀ = (1+γ)2⋆, the Hölder exponents, and the Moser
//! iteration schedule q_k = (1+γ)(2⋆)^k. [`classify`] computes all of them at
//! once; everything here is a pure value computation.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("dimension must satisfy n >= 2, got {0}")]
    Dimension(usize),
    #[error("exponent p must exceed 1, got {0}")]
    Exponent(f64),
    #[error("gamma must exceed -1, got {0}")]
    Gamma(f64),
    #[error("eps must lie in (0, 1], got {0}")]
    Eps(f64),
    #[error("lambda must lie in [0, 1), got {0}")]
    Lambda(f64),
    #[error("two_star fallback must exceed 2, got {0}")]
    Fallback(f64),
}

/// Problem data: triplet (n, p, γ) plus regularization ε, damping λ, and the
/// finite stand-in for 2⋆ used when n = 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub eps: f64,
    pub lambda: f64,
    pub two_star_fallback: f64,
}

impl ProblemParams {
    /// Build with λ = 0 and the default n = 2 fallback for 2⋆.
    pub fn new(n: usize, p: f64, gamma: f64, eps: f64) -> Result<Self, ParamError> {
        let params = ProblemParams {
            n,
            p,
            gamma,
            eps,
            lambda: 0.0,
            two_star_fallback: default_fallback(p, gamma),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, ParamError> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fallback(mut self, fallback: f64) -> Result<Self, ParamError> {
        self.two_star_fallback = fallback;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n < 2 {
            return Err(ParamError::Dimension(self.n));
        }
        if !(self.p > 1.0) {
            return Err(ParamError::Exponent(self.p));
        }
        if !(self.gamma > -1.0) {
            return Err(ParamError::Gamma(self.gamma));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(ParamError::Eps(self.eps));
        }
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            return Err(ParamError::Lambda(self.lambda));
        }
        if !(self.two_star_fallback > 2.0) {
            return Err(ParamError::Fallback(self.two_star_fallback));
        }
        Ok(())
    }

    pub fn two_star(&self) -> f64 {
        two_star(self.n, self.two_star_fallback).expect("validated dimension")
    }

    pub fn admissible(&self) -> bool {
        self.gamma > gamma_threshold(self.n, self.p).expect("validated n, p")
    }
}

/// Default finite 2⋆ for n = 2: large enough that 2(p−2−γ) ≤ (γ+1)2⋆ and
/// (γ+1)2⋆ > 2 hold automatically, so the gradient-integrability chain never
/// degenerates for any valid (p, γ).
pub fn default_fallback(p: f64, gamma: f64) -> f64 {
    let lq_need = 2.0 * (p - 2.0 - gamma) / (1.0 + gamma) + 1.0;
    let q0_need = 2.0 / (1.0 + gamma) + 1.0;
    12.0f64.max(lq_need).max(q0_need)
}

/// Admissibility threshold γ_{n,p} = −1 + (p−1)(n−2)/(2(n−1)).
pub fn gamma_threshold(n: usize, p: f64) -> Result<f64, ParamError> {
    if n < 2 {
        return Err(ParamError::Dimension(n));
    }
    if !(p > 1.0) {
        return Err(ParamError::Exponent(p));
    }
    let n = n as f64;
    Ok(-1.0 + (p - 1.0) * (n - 2.0) / (2.0 * (n - 1.0)))
}

/// Sobolev conjugate: 2n/(n−2) for n ≥ 3, the caller's finite stand-in for
/// n = 2 (any sufficiently large value is conforming).
pub fn two_star(n: usize, fallback: f64) -> Result<f64, ParamError> {
    if n < 2 {
        return Err(ParamError::Dimension(n));
    }
    if n == 2 {
        if !(fallback > 2.0) {
            return Err(ParamError::Fallback(fallback));
        }
        Ok(fallback)
    } else {
        let n = n as f64;
        Ok(2.0 * n / (n - 2.0))
    }
}

/// Every derived exponent the estimates use, computed once per triplet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentTable {
    /// Admissibility threshold γ_{n,p}.
    pub gamma_np: f64,
    pub two_star: f64,
    /// q₀ = (1+γ)·2⋆, the gradient integrability exponent.
    pub q0: f64,
    /// γ > γ_{n,p}.
    pub admissible: bool,
    /// γ > −4/(n+2), the extra restriction for the L²-data theory.
    pub gamma_gt_minus4over: bool,
    /// γ ≤ p − 2 (divergence-form-comparable regime).
    pub gamma_le_pminus2: bool,
    /// q₀ > n, so the global Hölder estimate applies.
    pub supercritical: bool,
    /// 1 − n/q₀ when supercritical, else 1 − n/q_{k₀+1}; absent when the
    /// triplet is inadmissible.
    pub holder_alpha: Option<f64>,
    /// Moser schedule q_k = (1+γ)(2⋆)^k for k = 0..=k₀+1.
    pub moser_q: Vec<f64>,
    /// Smallest iteration depth with q_{k₀+1} > n (≥ the requested start).
    pub k0: usize,
}

const K0_CAP: usize = 64;

/// Populate the full exponent table. `k0` is a lower bound on the Moser
/// iteration depth; it is raised to the smallest value with
/// (2⋆)^(k0+1)·(γ+1) > n, capped at 64.
pub fn classify(params: &ProblemParams, k0: usize) -> ExponentTable {
    let n = params.n as f64;
    let gamma = params.gamma;
    let gamma_np = gamma_threshold(params.n, params.p).expect("validated n, p");
    let two_star = params.two_star();
    let q0 = (1.0 + gamma) * two_star;

    let mut k0 = k0;
    while k0 < K0_CAP && (1.0 + gamma) * two_star.powi(k0 as i32 + 1) <= n {
        k0 += 1;
    }

    let admissible = gamma > gamma_np;
    let supercritical = q0 > n;
    let holder_alpha = if admissible {
        let q = if supercritical {
            q0
        } else {
            (1.0 + gamma) * two_star.powi(k0 as i32 + 1)
        };
        Some(1.0 - n / q)
    } else {
        None
    };

    let moser_q = (0..=k0 + 1)
        .map(|k| (1.0 + gamma) * two_star.powi(k as i32))
        .collect();

    ExponentTable {
        gamma_np,
        two_star,
        q0,
        admissible,
        gamma_gt_minus4over: gamma > -4.0 / (n + 2.0),
        gamma_le_pminus2: gamma <= params.p - 2.0,
        supercritical,
        holder_alpha,
        moser_q,
        k0,
    }
}
