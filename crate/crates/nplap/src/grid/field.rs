//! Node-indexed fields and the discrete norms used by every estimate.
//!
//! Fields are plain values (no grid borrow): they carry a shape stamp and
//! every operation checks it against the grid it is given. That keeps solver
//! results transferable across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Grid2D, Mask};
use crate::par;

/// Pointwise magnitude used by the L^q norms: absolute value for scalars,
/// Euclidean length for vectors, Frobenius norm for matrices.
pub trait Magnitude: Copy + Default + Send + Sync {
    fn magnitude(&self) -> f64;
}

impl Magnitude for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Magnitude for [f64; 2] {
    fn magnitude(&self) -> f64 {
        self[0].hypot(self[1])
    }
}

/// Symmetric 2x2 matrix value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn frob_sq(&self) -> f64 {
        self.xx * self.xx + self.yy * self.yy + 2.0 * self.xy * self.xy
    }
}

impl Magnitude for Sym2 {
    fn magnitude(&self) -> f64 {
        self.frob_sq().sqrt()
    }
}

/// One value per lattice node; exterior entries stay at the default and are
/// never read through the public API.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    nx: usize,
    ny: usize,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<[f64; 2]>;
pub type MatrixField = Field<Sym2>;

impl<T: Magnitude> Field<T> {
    pub fn zeros(grid: &Grid2D) -> Self {
        Field {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![T::default(); grid.node_count()],
        }
    }

    pub fn from_values(grid: &Grid2D, values: Vec<T>) -> Self {
        assert_eq!(values.len(), grid.node_count());
        Field {
            nx: grid.nx,
            ny: grid.ny,
            values,
        }
    }

    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }

    pub fn set(&mut self, k: usize, v: T) {
        self.values[k] = v;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub(crate) fn assert_compatible(&self, grid: &Grid2D) {
        assert!(
            self.nx == grid.nx && self.ny == grid.ny,
            "field shape {}x{} does not match grid {}x{}",
            self.nx,
            self.ny,
            grid.nx,
            grid.ny
        );
    }

    pub fn all_finite(&self, grid: &Grid2D) -> bool {
        grid.in_domain_nodes()
            .iter()
            .all(|&k| self.values[k].magnitude().is_finite())
    }
}

impl ScalarField {
    /// Evaluate a closure at every in-domain node.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = ScalarField::zeros(grid);
        for &k in grid.in_domain_nodes() {
            let (x, y) = grid.coords(k);
            field.values[k] = f(x, y);
        }
        field
    }

    /// Zero out the Dirichlet collocation nodes.
    pub fn zero_boundary(&mut self, grid: &Grid2D) {
        self.assert_compatible(grid);
        for &k in grid.in_domain_nodes() {
            if grid.mask(k) == Mask::Boundary {
                self.values[k] = 0.0;
            }
        }
    }
}

/// Quadrature L^q norm, q >= 1. Pass `f64::INFINITY` for the max norm.
pub fn norm_q<T: Magnitude>(grid: &Grid2D, field: &Field<T>, q: f64) -> f64 {
    field.assert_compatible(grid);
    assert!(q >= 1.0, "norms require q >= 1, got {q}");
    if q.is_infinite() {
        return norm_inf(grid, field);
    }
    let total: f64 = grid
        .in_domain_nodes()
        .iter()
        .map(|&k| grid.weight(k) * field.values[k].magnitude().powf(q))
        .sum();
    total.powf(1.0 / q)
}

pub fn norm_inf<T: Magnitude>(grid: &Grid2D, field: &Field<T>) -> f64 {
    field.assert_compatible(grid);
    grid.in_domain_nodes()
        .iter()
        .map(|&k| field.values[k].magnitude())
        .fold(0.0, f64::max)
}

const HOLDER_SEED: u64 = 0x9D2C_5680_A5B3_71E5;
const HOLDER_LOCAL_RANGE: i64 = 4;

/// Discrete C^{0,α} norm: max|u| plus the difference quotient sup over all
/// node pairs at Chebyshev distance <= 4 and `pair_budget` seeded random
/// long-range pairs. A reproducible lower bound of the true norm.
pub fn holder_norm(grid: &Grid2D, u: &ScalarField, alpha: f64, pair_budget: usize) -> f64 {
    holder_norm_filtered(grid, u, alpha, pair_budget, |_, _| true)
}

/// Same restricted to nodes inside the ball of the given center and radius.
pub fn holder_norm_in_ball(
    grid: &Grid2D,
    u: &ScalarField,
    alpha: f64,
    pair_budget: usize,
    center: (f64, f64),
    radius: f64,
) -> f64 {
    holder_norm_filtered(grid, u, alpha, pair_budget, |x, y| {
        let (dx, dy) = (x - center.0, y - center.1);
        dx * dx + dy * dy <= radius * radius
    })
}

fn holder_norm_filtered(
    grid: &Grid2D,
    u: &ScalarField,
    alpha: f64,
    pair_budget: usize,
    keep: impl Fn(f64, f64) -> bool,
) -> f64 {
    u.assert_compatible(grid);
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let nodes: Vec<usize> = grid
        .in_domain_nodes()
        .iter()
        .copied()
        .filter(|&k| {
            let (x, y) = grid.coords(k);
            keep(x, y)
        })
        .collect();
    if nodes.is_empty() {
        return 0.0;
    }
    let in_set: Vec<bool> = {
        let mut v = vec![false; grid.node_count()];
        for &k in &nodes {
            v[k] = true;
        }
        v
    };

    let max_abs = nodes
        .iter()
        .map(|&k| u.get(k).abs())
        .fold(0.0, f64::max);

    let quotient = |a: usize, b: usize| -> f64 {
        let (xa, ya) = grid.coords(a);
        let (xb, yb) = grid.coords(b);
        let dist = (xa - xb).hypot(ya - yb);
        (u.get(a) - u.get(b)).abs() / dist.powf(alpha)
    };

    let local = par::map_slice(&nodes, |&k| {
        let mut best = 0.0f64;
        for dj in 0..=HOLDER_LOCAL_RANGE {
            for di in -HOLDER_LOCAL_RANGE..=HOLDER_LOCAL_RANGE {
                if dj == 0 && di <= 0 {
                    continue;
                }
                if let Some(nk) = grid.neighbor(k, di, dj) {
                    if in_set[nk] {
                        best = best.max(quotient(k, nk));
                    }
                }
            }
        }
        best
    });
    let mut seminorm = local.into_iter().fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SEED);
    for _ in 0..pair_budget {
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        if a != b {
            seminorm = seminorm.max(quotient(a, b));
        }
    }

    max_abs + seminorm
}

/// Discrete mollification: convolution with a normalized compactly supported
/// radial bump of the given radius, with the field extended by zero outside
/// the domain. Radii below 2h return the field unchanged.
pub fn mollify(grid: &Grid2D, f: &ScalarField, eps_moll: f64) -> ScalarField {
    f.assert_compatible(grid);
    if eps_moll < 2.0 * grid.h {
        return f.clone();
    }
    let reach = (eps_moll / grid.h).ceil() as i64;
    let mut taps: Vec<(i64, i64, f64)> = Vec::new();
    let mut mass = 0.0;
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let r = grid.h * ((di * di + dj * dj) as f64).sqrt();
            let t = r / eps_moll;
            if t < 1.0 {
                let w = (-1.0 / (1.0 - t * t)).exp();
                taps.push((di, dj, w));
                mass += w;
            }
        }
    }
    for tap in &mut taps {
        tap.2 /= mass;
    }

    let smoothed = par::map_slice(grid.in_domain_nodes(), |&k| {
        let mut acc = 0.0;
        for &(di, dj, w) in &taps {
            if let Some(nk) = grid.neighbor(k, di, dj) {
                acc += w * f.get(nk);
            }
        }
        acc
    });
    let mut out = ScalarField::zeros(grid);
    for (idx, &k) in grid.in_domain_nodes().iter().enumerate() {
        out.set(k, smoothed[idx]);
    }
    out
}
