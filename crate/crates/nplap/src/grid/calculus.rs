//! Second-order finite differences and the nonlinear gradient norms.

use nalgebra::{DMatrix, DVector};

use super::field::{MatrixField, ScalarField, Sym2, VectorField};
use super::Grid2D;
use crate::par;
use crate::params::ProblemParams;
use crate::pointcalc::{operator_values, PointState};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axis {
    X,
    Y,
}

/// Up to four (offset, coefficient) taps; coefficients are in units of 1/h
/// resp. 1/h².
type Taps = ([(i64, f64); 4], usize);

const NO_TAPS: Taps = ([(0, 0.0); 4], 0);

fn taps(entries: &[(i64, f64)]) -> Taps {
    let mut out = [(0i64, 0.0f64); 4];
    out[..entries.len()].copy_from_slice(entries);
    (out, entries.len())
}

/// 1D stencils at one node: central where both neighbors exist, one-sided
/// second-order otherwise, first-order two-point as a last resort on ragged
/// disk rows.
fn taps_d1(grid: &Grid2D, k: usize, axis: Axis) -> Taps {
    let at = |d: i64| -> bool {
        match axis {
            Axis::X => grid.neighbor(k, d, 0).is_some(),
            Axis::Y => grid.neighbor(k, 0, d).is_some(),
        }
    };
    if at(-1) && at(1) {
        taps(&[(-1, -0.5), (1, 0.5)])
    } else if at(1) && at(2) {
        taps(&[(0, -1.5), (1, 2.0), (2, -0.5)])
    } else if at(-1) && at(-2) {
        taps(&[(0, 1.5), (-1, -2.0), (-2, 0.5)])
    } else if at(1) {
        taps(&[(0, -1.0), (1, 1.0)])
    } else if at(-1) {
        taps(&[(-1, -1.0), (0, 1.0)])
    } else {
        NO_TAPS
    }
}

fn taps_d2(grid: &Grid2D, k: usize, axis: Axis) -> Taps {
    let at = |d: i64| -> bool {
        match axis {
            Axis::X => grid.neighbor(k, d, 0).is_some(),
            Axis::Y => grid.neighbor(k, 0, d).is_some(),
        }
    };
    if at(-1) && at(1) {
        taps(&[(-1, 1.0), (0, -2.0), (1, 1.0)])
    } else if at(1) && at(2) && at(3) {
        taps(&[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)])
    } else if at(-1) && at(-2) && at(-3) {
        taps(&[(0, 2.0), (-1, -5.0), (-2, 4.0), (-3, -1.0)])
    } else {
        NO_TAPS
    }
}

fn apply_x(grid: &Grid2D, u: &ScalarField, k: usize, (taps, len): &Taps) -> f64 {
    taps[..*len]
        .iter()
        .map(|&(d, c)| c * u.get(grid.neighbor(k, d, 0).unwrap_or(k)))
        .sum()
}

fn apply_y(grid: &Grid2D, u: &ScalarField, k: usize, (taps, len): &Taps) -> f64 {
    taps[..*len]
        .iter()
        .map(|&(d, c)| c * u.get(grid.neighbor(k, 0, d).unwrap_or(k)))
        .sum()
}

fn cross_derivative(grid: &Grid2D, u: &ScalarField, k: usize) -> f64 {
    let (tx, nx) = taps_d1(grid, k, Axis::X);
    let (ty, ny) = taps_d1(grid, k, Axis::Y);
    let mut acc = 0.0;
    for &(dx, cx) in &tx[..nx] {
        for &(dy, cy) in &ty[..ny] {
            match grid.neighbor(k, dx, dy) {
                Some(nk) => acc += cx * cy * u.get(nk),
                None => {
                    // Tensor taps leave the domain on ragged disk rows; fall
                    // back to the plain 4-point cross if it fits, else give up.
                    let diag = [(1, 1), (-1, -1), (1, -1), (-1, 1)]
                        .map(|(a, b)| grid.neighbor(k, a, b));
                    if diag.iter().all(Option::is_some) {
                        return 0.25
                            * (u.get(diag[0].unwrap()) + u.get(diag[1].unwrap())
                                - u.get(diag[2].unwrap())
                                - u.get(diag[3].unwrap()));
                    }
                    return 0.0;
                }
            }
        }
    }
    acc
}

/// Gradient and Hessian of a field at every in-domain node.
pub fn differentiate(grid: &Grid2D, u: &ScalarField) -> (VectorField, MatrixField) {
    u.assert_compatible(grid);
    let inv_h = 1.0 / grid.h;
    let inv_h2 = inv_h * inv_h;
    let per_node = par::map_slice(grid.in_domain_nodes(), |&k| {
        let gx = apply_x(grid, u, k, &taps_d1(grid, k, Axis::X)) * inv_h;
        let gy = apply_y(grid, u, k, &taps_d1(grid, k, Axis::Y)) * inv_h;
        let hxx = apply_x(grid, u, k, &taps_d2(grid, k, Axis::X)) * inv_h2;
        let hyy = apply_y(grid, u, k, &taps_d2(grid, k, Axis::Y)) * inv_h2;
        let hxy = cross_derivative(grid, u, k) * inv_h2;
        ([gx, gy], Sym2 { xx: hxx, xy: hxy, yy: hyy })
    });
    let mut grad = VectorField::zeros(grid);
    let mut hess = MatrixField::zeros(grid);
    for (idx, &k) in grid.in_domain_nodes().iter().enumerate() {
        grad.set(k, per_node[idx].0);
        hess.set(k, per_node[idx].1);
    }
    (grad, hess)
}

/// Build a [`PointState`] from nodal derivative values.
pub fn point_state(g: [f64; 2], h: Sym2, eps: f64) -> PointState {
    PointState::new(
        DVector::from_row_slice(&g),
        DMatrix::from_row_slice(2, 2, &[h.xx, h.xy, h.xy, h.yy]),
        eps,
    )
    .expect("nodal Hessian is symmetric by construction")
}

/// The four norm quantities of the a priori gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientNorms {
    /// ‖Du‖_{L^{q0}}^{γ+1}
    pub grad_q0_term: f64,
    /// ‖D[(|Du|²+ε)^{γ/2} Du]‖_{L²}
    pub sobolev_term: f64,
    /// ‖(|Du|²+ε)^{γ/2} Δ^N_{p,ε}u‖_{L²}
    pub rhs_op_term: f64,
    /// ε^{(γ+1)/2}
    pub eps_term: f64,
}

/// Evaluate the two sides of the nonlinear gradient estimate for a
/// zero-boundary field. The Sobolev term differentiates the weighted
/// gradient V = (|Du|²+ε)^{γ/2}Du componentwise; the operator term goes
/// through the pointwise calculus at every node.
pub fn nonlinear_gradient_norms(
    grid: &Grid2D,
    u: &ScalarField,
    params: &ProblemParams,
) -> GradientNorms {
    u.assert_compatible(grid);
    let (grad, hess) = differentiate(grid, u);
    let (p, gamma, eps) = (params.p, params.gamma, params.eps);
    let q0 = (1.0 + gamma) * params.two_star();

    let mut v1 = ScalarField::zeros(grid);
    let mut v2 = ScalarField::zeros(grid);
    for &k in grid.in_domain_nodes() {
        let [gx, gy] = grad.get(k);
        let w = (gx * gx + gy * gy + eps).powf(0.5 * gamma);
        v1.set(k, w * gx);
        v2.set(k, w * gy);
    }
    let (dv1, _) = differentiate(grid, &v1);
    let (dv2, _) = differentiate(grid, &v2);
    let mut jac = ScalarField::zeros(grid);
    for &k in grid.in_domain_nodes() {
        let a = dv1.get(k);
        let b = dv2.get(k);
        jac.set(k, (a[0] * a[0] + a[1] * a[1] + b[0] * b[0] + b[1] * b[1]).sqrt());
    }

    let weighted_op = par::map_slice(grid.in_domain_nodes(), |&k| {
        let s = point_state(grad.get(k), hess.get(k), eps);
        operator_values(&s, p, gamma).weighted_operator
    });
    let mut op_field = ScalarField::zeros(grid);
    for (idx, &k) in grid.in_domain_nodes().iter().enumerate() {
        op_field.set(k, weighted_op[idx]);
    }

    GradientNorms {
        grad_q0_term: super::norm_q(grid, &grad, q0).powf(gamma + 1.0),
        sobolev_term: super::norm_q(grid, &jac, 2.0),
        rhs_op_term: super::norm_q(grid, &op_field, 2.0),
        eps_term: eps.powf(0.5 * (gamma + 1.0)),
    }
}
