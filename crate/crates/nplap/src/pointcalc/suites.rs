//! Randomized property suites for the pointwise inequalities.
//!
//! Samples are sharded; each shard owns a counter-seeded ChaCha stream, so a
//! run is reproducible for a given (seed, samples, dims) regardless of the
//! thread count, and shards merge in fixed order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    fundamental_gap, hessian_bound_gap, monotonicity_gap, operator_values, structural_gap,
    t_gap, t_terms, MonotonicityVariant, PointState,
};
use crate::par;
use crate::params::gamma_threshold;

/// Relative slack allowed before a gap counts as a violation.
pub const REL_TOL: f64 = 1e-9;

const SHARD: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SuiteKind {
    Fundamental,
    TGap,
    HessianBound,
    Structural,
    MonoRegNeg,
    MonoUnregNeg,
    MonoRegPos,
    MonoUnregPos,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 8] = [
        SuiteKind::Fundamental,
        SuiteKind::TGap,
        SuiteKind::HessianBound,
        SuiteKind::Structural,
        SuiteKind::MonoRegNeg,
        SuiteKind::MonoUnregNeg,
        SuiteKind::MonoRegPos,
        SuiteKind::MonoUnregPos,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Fundamental => "fundamental_gap",
            SuiteKind::TGap => "t_gap",
            SuiteKind::HessianBound => "hessian_bound_gap",
            SuiteKind::Structural => "structural_gap",
            SuiteKind::MonoRegNeg => "monotonicity_reg_neg",
            SuiteKind::MonoUnregNeg => "monotonicity_unreg_neg",
            SuiteKind::MonoRegPos => "monotonicity_reg_pos",
            SuiteKind::MonoUnregPos => "monotonicity_unreg_pos",
        }
    }

    fn id(&self) -> u64 {
        SuiteKind::ALL.iter().position(|k| k == self).unwrap() as u64
    }
}

/// Worst observation of one suite run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteKind,
    pub samples: u64,
    /// Minimum of gap/scale over all samples.
    pub worst_rel: f64,
    /// Minimum raw gap over all samples.
    pub worst_abs: f64,
    /// Parameters at the worst sample.
    pub at_n: usize,
    pub at_p: f64,
    pub at_gamma: f64,
    pub at_eps: f64,
    pub pass: bool,
}

#[derive(Clone, Copy)]
struct Worst {
    rel: f64,
    abs: f64,
    n: usize,
    p: f64,
    gamma: f64,
    eps: f64,
}

impl Worst {
    fn none() -> Self {
        Worst {
            rel: f64::INFINITY,
            abs: f64::INFINITY,
            n: 0,
            p: f64::NAN,
            gamma: f64::NAN,
            eps: f64::NAN,
        }
    }

    fn update(&mut self, rel: f64, abs: f64, n: usize, p: f64, gamma: f64, eps: f64) {
        if rel < self.rel {
            self.rel = rel;
            self.n = n;
            self.p = p;
            self.gamma = gamma;
            self.eps = eps;
        }
        self.abs = self.abs.min(abs);
    }

    fn merge(self, other: Worst) -> Worst {
        let mut out = if other.rel < self.rel { other } else { self };
        out.abs = self.abs.min(other.abs);
        out
    }
}

fn shard_rng(seed: u64, suite: SuiteKind, shard: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(suite.id() << 32)
            .wrapping_add(shard),
    )
}

fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-2.0..2.0);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn random_gradient(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        if g.norm() > 1e-6 {
            return g;
        }
    }
}

fn log_uniform_eps(rng: &mut impl Rng) -> f64 {
    10f64.powf(rng.gen_range(-9.0..=0.0))
}

fn admissible_gamma(rng: &mut impl Rng, n: usize, p: f64) -> f64 {
    let lo = gamma_threshold(n, p).unwrap().max(-1.0) + 1e-6;
    rng.gen_range(lo..=4.0)
}

fn run_shard(kind: SuiteKind, seed: u64, shard: u64, count: u64, dims: &[usize]) -> Worst {
    let mut rng = shard_rng(seed, kind, shard);
    let mut worst = Worst::none();
    for _ in 0..count {
        let n = dims[rng.gen_range(0..dims.len())];
        let p = rng.gen_range(1.1..=10.0);
        let eps = log_uniform_eps(&mut rng);
        match kind {
            SuiteKind::Fundamental => {
                let s = PointState::new(
                    random_gradient(&mut rng, n),
                    random_symmetric(&mut rng, n),
                    eps,
                )
                .unwrap();
                let gap = fundamental_gap(&s).unwrap();
                let scale = s.hessian().norm_squared().max(1e-30);
                worst.update(gap / scale, gap, n, p, 0.0, eps);
            }
            SuiteKind::TGap => {
                let gamma = admissible_gamma(&mut rng, n, p);
                let s = PointState::new(
                    random_gradient(&mut rng, n),
                    random_symmetric(&mut rng, n),
                    eps,
                )
                .unwrap();
                let gap = t_gap(&s, p, gamma).unwrap();
                let scale: f64 = t_terms(&s, p, gamma).iter().map(|t| t.abs()).sum();
                worst.update(gap / scale.max(1e-30), gap, n, p, gamma, eps);
            }
            SuiteKind::HessianBound => {
                let gamma = rng.gen_range(-0.999..=4.0);
                let s = PointState::new(
                    random_gradient(&mut rng, n),
                    random_symmetric(&mut rng, n),
                    eps,
                )
                .unwrap();
                let gap = hessian_bound_gap(&s, gamma);
                let scale = s.hessian().norm_squared().max(1e-30);
                worst.update(gap / scale, gap, n, p, gamma, eps);
            }
            SuiteKind::Structural => {
                let gamma = admissible_gamma(&mut rng, n, p);
                let s = PointState::new(
                    random_gradient(&mut rng, n),
                    random_symmetric(&mut rng, n),
                    eps,
                )
                .unwrap();
                let eta = 1.0;
                let gap = structural_gap(&s, p, gamma, eta, None).unwrap();
                let scale = structural_scale(&s, p, gamma, eta);
                worst.update(gap / scale.max(1e-30), gap, n, p, gamma, eps);
            }
            SuiteKind::MonoRegNeg
            | SuiteKind::MonoUnregNeg
            | SuiteKind::MonoRegPos
            | SuiteKind::MonoUnregPos => {
                let (variant, gamma, eps) = match kind {
                    SuiteKind::MonoRegNeg => {
                        (MonotonicityVariant::RegNeg, rng.gen_range(-0.999..-1e-3), eps.max(1e-9))
                    }
                    SuiteKind::MonoUnregNeg => {
                        (MonotonicityVariant::UnregNeg, rng.gen_range(-0.999..-1e-3), 0.0)
                    }
                    SuiteKind::MonoRegPos => {
                        (MonotonicityVariant::RegPos, rng.gen_range(0.0..=4.0), eps.max(1e-9))
                    }
                    _ => (MonotonicityVariant::UnregPos, rng.gen_range(0.0..=4.0), 0.0),
                };
                let a = DVector::from_fn(n, |_, _| rng.gen_range(-10.0..10.0));
                let b = DVector::from_fn(n, |_, _| rng.gen_range(-10.0..10.0));
                let gap = monotonicity_gap(&a, &b, gamma, eps, variant).unwrap();
                let scale = (a.norm_squared() + b.norm_squared() + (&a - &b).norm_squared())
                    .max(1e-30);
                worst.update(gap / scale, gap, n, p, gamma, eps);
            }
        }
    }
    worst
}

fn structural_scale(s: &PointState, p: f64, gamma: f64, eta: f64) -> f64 {
    let nf = s.dim() as f64;
    let denom = s.gradient().norm_squared() + s.eps();
    let hg = s.hessian() * s.gradient();
    let inf_n_eps = hg.dot(s.gradient()) / denom;
    let frob_sq = s.hessian().norm_squared();
    let ops = operator_values(s, p, gamma);
    let c_p = super::default_c_p(s.dim(), p);
    let coeff = 2.0 * (p - 1.0) * (gamma + 1.0 - (p - 1.0) * (nf - 2.0) / (2.0 * (nf - 1.0)));
    frob_sq * (1.0 + eta)
        + 2.0 * gamma.abs() * hg.norm_squared() / denom
        + ((gamma * gamma - (gamma - p + 2.0).powi(2)).abs() + coeff.abs())
            * inf_n_eps
            * inf_n_eps
        + c_p / eta * ops.normalized_p_eps * ops.normalized_p_eps
}

/// Run one suite with `samples` draws over the given dimensions.
pub fn run_suite(kind: SuiteKind, samples: u64, seed: u64, dims: &[usize]) -> SuiteReport {
    assert!(!dims.is_empty());
    let shards = samples.div_ceil(SHARD);
    let worsts = par::map_indexed(shards as usize, |i| {
        let i = i as u64;
        let count = SHARD.min(samples - i * SHARD);
        run_shard(kind, seed, i, count, dims)
    });
    let worst = worsts.into_iter().fold(Worst::none(), Worst::merge);
    SuiteReport {
        suite: kind,
        samples,
        worst_rel: worst.rel,
        worst_abs: worst.abs,
        at_n: worst.n,
        at_p: worst.p,
        at_gamma: worst.gamma,
        at_eps: worst.eps,
        pass: worst.rel >= -REL_TOL,
    }
}

/// All eight suites in declaration order.
pub fn run_all(samples: u64, seed: u64, dims: &[usize]) -> Vec<SuiteReport> {
    SuiteKind::ALL
        .iter()
        .map(|&k| run_suite(k, samples, seed, dims))
        .collect()
}
