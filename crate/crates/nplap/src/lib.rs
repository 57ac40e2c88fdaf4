//! Numerical laboratory for the Dirichlet problem of the ε-regularized,
//! γ-weighted normalized p-Laplacian on convex 2D domains,
//!
//! ```text
//!   -(|Du|² + ε)^{γ/2} Δ^N_{p,ε} u + λu = λg + f   in Ω,    u = 0   on ∂Ω,
//! ```
//!
//! together with property-based verification of the pointwise matrix
//! inequalities and integral estimates that control it.
//!
//! The crate is organized along the pipeline:
//!
//! * [`params`] — admissibility of the triplet (n, p, γ) and every derived
//!   exponent (Sobolev conjugate, q₀ = (1+γ)2⋆, Hölder exponents, Moser
//!   schedule).
//! * [`pointcalc`] — exact pointwise operator calculus on a (gradient,
//!   Hessian, ε) state and the algebraic inequality gaps; [`pointcalc::suites`]
//!   runs the randomized property suites.
//! * [`grid`] — masked uniform grids on rectangles and disks, second-order
//!   finite differences, quadrature norms, Hölder seminorms, mollification.
//! * [`registry`] — named closed-form source terms and manufactured
//!   zero-boundary fields.
//! * [`solver`] — frozen-coefficient Picard iteration with damping, a
//!   Jacobi-preconditioned BiCGSTAB backend, and ε-continuation.
//! * [`harness`] — left/right norm decompositions of every in-scope estimate,
//!   stability assessment across ε, and deterministic CSV sweeps.
//! * [`counterexample`] — exact radial cutoff family showing the L²-bound /
//!   sup-norm blow-up dichotomy via 1D adaptive quadrature.
//!
//! Data-parallel inner loops (sample sharding, nodewise field maps, sweep
//! fan-out) run on rayon when the default `parallel` feature is enabled and
//! fall back to sequential iteration without it; `benches/kernels.rs`
//! compares the two.

// Validation sites use `!(x > 0.0)` style comparisons on purpose: they must
// reject NaN, which the un-negated form would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod grid;
pub mod harness;
pub mod params;
pub(crate) mod par;
pub mod pointcalc;
pub mod registry;
pub mod solver;
