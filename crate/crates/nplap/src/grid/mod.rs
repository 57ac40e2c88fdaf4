//! Masked uniform grids on convex 2D domains.
//!
//! A grid covers the bounding box of the domain with a square lattice of
//! spacing `h`. Nodes carry one of three masks: `Exterior` (outside the
//! domain and never touched), `Boundary` (in-domain nodes that collocate the
//! Dirichlet condition), and `Interior` (in-domain nodes whose full 8-point
//! neighborhood is in-domain, so every centered stencil fits). Quadrature
//! weights follow the trapezoid pattern on rectangles (h² inside, h²/2 on the
//! boundary band, h²/4 at corners) and a plain h² per in-domain node on
//! disks.

mod calculus;
mod field;

pub use calculus::{differentiate, nonlinear_gradient_norms, point_state, GradientNorms};
pub use field::{holder_norm, holder_norm_in_ball, mollify, norm_inf, norm_q, MatrixField, ScalarField, Sym2, VectorField};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("spacing {h} too coarse for domain (min side {min_side})")]
    SpacingTooCoarse { h: f64, min_side: f64 },
    #[error("spacing {0} does not evenly fit the rectangle sides")]
    SpacingMisfit(f64),
    #[error("malformed grid dump: {0}")]
    Dump(String),
    #[error("dump is incompatible with this grid: {0}")]
    DumpMismatch(String),
}

/// Convex 2D domain: an axis-aligned rectangle [0,a]x[0,b] or a disk of
/// radius `r` centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DomainSpec {
    Rectangle { a: f64, b: f64 },
    Disk { r: f64 },
}

impl DomainSpec {
    pub fn unit_square() -> Self {
        DomainSpec::Rectangle { a: 1.0, b: 1.0 }
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { r: 1.0 }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        match *self {
            DomainSpec::Rectangle { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(GridError::DegenerateDomain(format!(
                        "rectangle sides must be positive, got {a} x {b}"
                    )));
                }
            }
            DomainSpec::Disk { r } => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(GridError::DegenerateDomain(format!(
                        "disk radius must be positive, got {r}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Diameter d_Ω.
    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { a, b } => (a * a + b * b).sqrt(),
            DomainSpec::Disk { r } => 2.0 * r,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { a, b } => a * b,
            DomainSpec::Disk { r } => std::f64::consts::PI * r * r,
        }
    }

    pub fn min_side(&self) -> f64 {
        match *self {
            DomainSpec::Rectangle { a, b } => a.min(b),
            DomainSpec::Disk { r } => 2.0 * r,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        match *self {
            DomainSpec::Rectangle { a, b } => (0.5 * a, 0.5 * b),
            DomainSpec::Disk { .. } => (0.0, 0.0),
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            DomainSpec::Rectangle { a, b } => {
                let t = 1e-12;
                x >= -t && x <= a + t && y >= -t && y <= b + t
            }
            DomainSpec::Disk { r } => x * x + y * y <= r * r + 1e-12,
        }
    }

    /// Signed distance to the boundary is overkill here; this is the plain
    /// distance from an inside point.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            DomainSpec::Rectangle { a, b } => x.min(a - x).min(y).min(b - y),
            DomainSpec::Disk { r } => r - (x * x + y * y).sqrt(),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            DomainSpec::Rectangle { a, b } => format!("rectangle({a}x{b})"),
            DomainSpec::Disk { r } => format!("disk(r={r})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mask {
    Exterior,
    Boundary,
    Interior,
}

/// Uniform lattice over the domain's bounding box with per-node masks and
/// quadrature weights. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub spec: DomainSpec,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    origin: (f64, f64),
    mask: Vec<Mask>,
    weight: Vec<f64>,
    /// Lattice index -> dense in-domain index, usize::MAX for exterior.
    in_domain_index: Vec<usize>,
    /// Dense in-domain index -> lattice index.
    in_domain_nodes: Vec<usize>,
}

/// Build a grid. For rectangles `h` is adjusted downward so that it divides
/// both sides; every side must span at least 4 intervals.
pub fn build_grid(spec: DomainSpec, h: f64) -> Result<Grid2D, GridError> {
    spec.validate()?;
    if !(h > 0.0) || h > spec.min_side() / 4.0 + 1e-12 {
        return Err(GridError::SpacingTooCoarse {
            h,
            min_side: spec.min_side(),
        });
    }
    let (origin, h, nx, ny) = match spec {
        DomainSpec::Rectangle { a, b } => {
            let h = fit_spacing(a, b, h)?;
            let nx = (a / h).round() as usize + 1;
            let ny = (b / h).round() as usize + 1;
            ((0.0, 0.0), h, nx, ny)
        }
        DomainSpec::Disk { r } => {
            let m = (r / h).ceil() as usize;
            let half = m as f64 * h;
            ((-half, -half), h, 2 * m + 1, 2 * m + 1)
        }
    };

    let total = nx * ny;
    let mut inside = vec![false; total];
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (origin.0 + i as f64 * h, origin.1 + j as f64 * h);
            inside[j * nx + i] = spec.contains(x, y);
        }
    }

    let mut mask = vec![Mask::Exterior; total];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !inside[k] {
                continue;
            }
            let mut all_neighbors = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    let off_lattice = ni < 0 || nj < 0 || ni >= nx as i64 || nj >= ny as i64;
                    if off_lattice || !inside[nj as usize * nx + ni as usize] {
                        all_neighbors = false;
                    }
                }
            }
            mask[k] = if all_neighbors { Mask::Interior } else { Mask::Boundary };
        }
    }

    let mut weight = vec![0.0; total];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if mask[k] == Mask::Exterior {
                continue;
            }
            weight[k] = match spec {
                DomainSpec::Rectangle { .. } => {
                    let ex = usize::from(i == 0 || i == nx - 1);
                    let ey = usize::from(j == 0 || j == ny - 1);
                    h * h / (1 << (ex + ey)) as f64
                }
                DomainSpec::Disk { .. } => h * h,
            };
        }
    }

    let mut in_domain_index = vec![usize::MAX; total];
    let mut in_domain_nodes = Vec::new();
    for k in 0..total {
        if mask[k] != Mask::Exterior {
            in_domain_index[k] = in_domain_nodes.len();
            in_domain_nodes.push(k);
        }
    }

    Ok(Grid2D {
        spec,
        h,
        nx,
        ny,
        origin,
        mask,
        weight,
        in_domain_index,
        in_domain_nodes,
    })
}

fn fit_spacing(a: f64, b: f64, h: f64) -> Result<f64, GridError> {
    let start = (a / h).ceil() as u64;
    for ma in start..start + 4096 {
        let cand = a / ma as f64;
        let mb = b / cand;
        if (mb - mb.round()).abs() < 1e-9 && mb.round() >= 1.0 {
            return Ok(cand);
        }
    }
    Err(GridError::SpacingMisfit(h))
}

impl Grid2D {
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn in_domain_count(&self) -> usize {
        self.in_domain_nodes.len()
    }

    pub fn interior_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m == Mask::Interior).count()
    }

    pub fn mask(&self, k: usize) -> Mask {
        self.mask[k]
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weight[k]
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.nx, k / self.nx);
        (
            self.origin.0 + i as f64 * self.h,
            self.origin.1 + j as f64 * self.h,
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn in_domain(&self, k: usize) -> bool {
        self.mask[k] != Mask::Exterior
    }

    /// Lattice index of the in-domain node at offset (di, dj), if in-domain.
    pub fn neighbor(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.ij(k);
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            return None;
        }
        let nk = nj as usize * self.nx + ni as usize;
        self.in_domain(nk).then_some(nk)
    }

    pub fn in_domain_nodes(&self) -> &[usize] {
        &self.in_domain_nodes
    }

    /// Dense equation index of an in-domain lattice node.
    pub fn dense_index(&self, k: usize) -> usize {
        self.in_domain_index[k]
    }

    pub fn quadrature_total(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Plain-text dump: header `nx ny h`, one line `i j x y mask value` per
    /// lattice node. Exterior nodes carry value 0.
    pub fn dump_field(&self, u: &ScalarField) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {} {:.17e}\n", self.nx, self.ny, self.h));
        for k in 0..self.node_count() {
            let (i, j) = self.ij(k);
            let (x, y) = self.coords(k);
            let m = match self.mask[k] {
                Mask::Exterior => 0,
                Mask::Boundary => 1,
                Mask::Interior => 2,
            };
            let v = if self.in_domain(k) { u.get(k) } else { 0.0 };
            out.push_str(&format!("{i} {j} {x:.17e} {y:.17e} {m} {v:.17e}\n"));
        }
        out
    }

    /// Parse a dump produced by [`Grid2D::dump_field`] against this grid.
    pub fn load_field(&self, text: &str) -> Result<ScalarField, GridError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| GridError::Dump("empty".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(GridError::Dump("header must be `nx ny h`".into()));
        }
        let nx: usize = parts[0].parse().map_err(|_| GridError::Dump("bad nx".into()))?;
        let ny: usize = parts[1].parse().map_err(|_| GridError::Dump("bad ny".into()))?;
        let h: f64 = parts[2].parse().map_err(|_| GridError::Dump("bad h".into()))?;
        if nx != self.nx || ny != self.ny || (h - self.h).abs() > 1e-12 * self.h {
            return Err(GridError::DumpMismatch(format!(
                "dump is {nx}x{ny} at h = {h}, grid is {}x{} at h = {}",
                self.nx, self.ny, self.h
            )));
        }
        let mut values = vec![0.0; self.node_count()];
        let mut seen = 0usize;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let p: Vec<&str> = line.split_whitespace().collect();
            if p.len() != 6 {
                return Err(GridError::Dump(format!("bad node line: {line}")));
            }
            let i: usize = p[0].parse().map_err(|_| GridError::Dump("bad i".into()))?;
            let j: usize = p[1].parse().map_err(|_| GridError::Dump("bad j".into()))?;
            let v: f64 = p[5].parse().map_err(|_| GridError::Dump("bad value".into()))?;
            if i >= nx || j >= ny {
                return Err(GridError::Dump(format!("node ({i}, {j}) out of range")));
            }
            values[self.index(i, j)] = v;
            seen += 1;
        }
        if seen != self.node_count() {
            return Err(GridError::Dump(format!(
                "expected {} node lines, got {seen}",
                self.node_count()
            )));
        }
        Ok(ScalarField::from_values(self, values))
    }
}
