//! Named closed-form fields.
//!
//! Two access modes: [`source_field`] evaluates the raw expression (used as
//! right-hand sides f), and [`zero_boundary_field`] produces a manufactured
//! field vanishing on the domain boundary (the object the estimates are
//! stated for). On rectangles the sine-based expressions already vanish on
//! the boundary and are kept pure — `sinsin` on the unit square is the
//! eigenfunction that makes the Hessian/Laplacian L² ratio exactly one. All
//! other combinations are multiplied by a smooth bubble.

use crate::grid::{DomainSpec, Grid2D, ScalarField};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFn {
    Constant,
    SinSin,
    GaussianBump,
    CheckerSign,
}

impl SourceFn {
    pub const ALL: [SourceFn; 4] = [
        SourceFn::Constant,
        SourceFn::SinSin,
        SourceFn::GaussianBump,
        SourceFn::CheckerSign,
    ];

    pub fn parse(name: &str) -> Option<SourceFn> {
        match name {
            "constant" => Some(SourceFn::Constant),
            "sinsin" => Some(SourceFn::SinSin),
            "gaussian-bump" => Some(SourceFn::GaussianBump),
            "checker-sign" => Some(SourceFn::CheckerSign),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceFn::Constant => "constant",
            SourceFn::SinSin => "sinsin",
            SourceFn::GaussianBump => "gaussian-bump",
            SourceFn::CheckerSign => "checker-sign",
        }
    }

    /// Raw expression value. Coordinates are mapped to the domain's bounding
    /// box, so the sine expressions complete full half-periods across it.
    pub fn eval(&self, spec: &DomainSpec, x: f64, y: f64) -> f64 {
        let (sx, sy) = box_coords(spec, x, y);
        match self {
            SourceFn::Constant => 1.0,
            SourceFn::SinSin => (PI * sx).sin() * (PI * sy).sin(),
            SourceFn::GaussianBump => {
                let (cx, cy) = spec.center();
                let sigma = spec.diameter() / 6.0;
                (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
            }
            SourceFn::CheckerSign => (2.0 * PI * sx).sin() * (2.0 * PI * sy).sin(),
        }
    }
}

/// Map to [0,1]² coordinates over the bounding box.
fn box_coords(spec: &DomainSpec, x: f64, y: f64) -> (f64, f64) {
    match *spec {
        DomainSpec::Rectangle { a, b } => (x / a, y / b),
        DomainSpec::Disk { r } => ((x + r) / (2.0 * r), (y + r) / (2.0 * r)),
    }
}

/// Smooth bubble: positive inside, zero on the boundary, max 1 at the center.
pub fn bubble(spec: &DomainSpec, x: f64, y: f64) -> f64 {
    match *spec {
        DomainSpec::Rectangle { a, b } => 16.0 * x * (a - x) * y * (b - y) / (a * a * b * b),
        DomainSpec::Disk { r } => (r * r - x * x - y * y) / (r * r),
    }
}

/// The raw expression sampled on the grid, scaled.
pub fn source_field(grid: &Grid2D, f: SourceFn, scale: f64) -> ScalarField {
    let spec = grid.spec;
    ScalarField::from_fn(grid, |x, y| scale * f.eval(&spec, x, y))
}

/// Manufactured zero-boundary field for the estimates.
pub fn zero_boundary_field(grid: &Grid2D, f: SourceFn) -> ScalarField {
    let spec = grid.spec;
    let pure_sine = matches!(spec, DomainSpec::Rectangle { .. })
        && matches!(f, SourceFn::SinSin | SourceFn::CheckerSign);
    ScalarField::from_fn(grid, |x, y| {
        let v = f.eval(&spec, x, y);
        if pure_sine {
            v
        } else {
            v * bubble(&spec, x, y)
        }
    })
}

/// u*(x, y) = sin(πx) sin(πy) with exact derivatives, the manufactured
/// solution for solver verification on the unit square.
pub mod sinsin_exact {
    use std::f64::consts::PI;

    pub fn value(x: f64, y: f64) -> f64 {
        (PI * x).sin() * (PI * y).sin()
    }

    pub fn gradient(x: f64, y: f64) -> [f64; 2] {
        [
            PI * (PI * x).cos() * (PI * y).sin(),
            PI * (PI * x).sin() * (PI * y).cos(),
        ]
    }

    /// (u_xx, u_xy, u_yy)
    pub fn hessian(x: f64, y: f64) -> [f64; 3] {
        let s = value(x, y);
        [
            -PI * PI * s,
            PI * PI * (PI * x).cos() * (PI * y).cos(),
            -PI * PI * s,
        ]
    }
}
