//! Radial cutoff family separating L² control of the weighted operator from
//! sup-norm control of the solution.
//!
//! The profile v_ε(r) = ∫_r^1 s⁻¹ φ(s/ε) ds is constant on [0, ε] and equals
//! ln(1/r) outside [0, 2ε]; its weighted operator g_ε has an L² norm that
//! stays bounded (γ < (n−4)/2) or grows only like √ln(1/ε) (γ = (n−4)/2),
//! while v_ε(0) ≥ ln(1/(2ε)) diverges. Everything is one-dimensional: the
//! volume integrals reduce to ∫ g² r^{n−1} dr times the unit-sphere area.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CounterexampleError {
    #[error("hypotheses require -1 < gamma < (n-4)/2 with n >= 3, or gamma = (n-4)/2 with n >= 4; got n = {n}, gamma = {gamma}")]
    Hypothesis { n: usize, gamma: f64 },
    #[error("eps schedule must be strictly decreasing inside (0, 1/2)")]
    Schedule,
    #[error("exponent p must exceed 1, got {0}")]
    Exponent(f64),
}

/// Quintic smoothstep cutoff: 0 on [0,1], 1 on [2,∞), C² across the joints,
/// slope bounded by 15/8 < 2.
pub fn phi(s: f64) -> f64 {
    assert!(s >= 0.0, "cutoff argument must be nonnegative, got {s}");
    if s <= 1.0 {
        0.0
    } else if s >= 2.0 {
        1.0
    } else {
        let t = s - 1.0;
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

pub fn phi_prime(s: f64) -> f64 {
    assert!(s >= 0.0, "cutoff argument must be nonnegative, got {s}");
    if !(1.0..2.0).contains(&s) {
        0.0
    } else {
        let t = s - 1.0;
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// φ^e with the convention 0^e = 0 — the continuous extension of the
/// products φ^γ φ' and φ^{γ+1} for γ > -1.
fn phi_pow(base: f64, e: f64) -> f64 {
    if base <= 0.0 {
        0.0
    } else {
        base.powf(e)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// v_ε(r) = ∫_r^1 s⁻¹ φ(s/ε) ds, constant on [0, ε], ln(1/r) on [2ε, 1].
pub fn v_eps(r: f64, eps: f64) -> f64 {
    assert!((0.0..=1.0).contains(&r), "radius must lie in [0, 1], got {r}");
    assert!(eps > 0.0 && eps < 0.5, "eps must lie in (0, 1/2), got {eps}");
    let r_eff = r.max(eps);
    if r_eff >= 2.0 * eps {
        return -r_eff.ln();
    }
    let band = adaptive_simpson(&|s: f64| phi(s / eps) / s, r_eff, 2.0 * eps, 1e-12);
    band - (2.0 * eps).ln()
}

/// The weighted operator of the profile, −|Dv_ε|^γ Δ^N_p v_ε, evaluated in
/// closed form on ε < r ≤ 1 and zero on the constant core r ≤ ε.
pub fn g_eps(r: f64, eps: f64, n: usize, p: f64, gamma: f64) -> f64 {
    assert!(r > 0.0 && r <= 1.0, "radius must lie in (0, 1], got {r}");
    assert!(eps > 0.0 && eps < 0.5);
    assert!(n >= 2 && p > 1.0 && gamma > -1.0);
    if r <= eps {
        return 0.0;
    }
    let t = r / eps;
    let ph = phi(t);
    let slope_part = (p - 1.0) / (eps * r.powf(gamma + 1.0)) * phi_pow(ph, gamma) * phi_prime(t);
    let tail_part = (n as f64 - 2.0) / r.powf(gamma + 2.0) * phi_pow(ph, gamma + 1.0);
    slope_part + tail_part
}

/// Γ(n/2) for integer n ≥ 1 by the half-integer recurrence.
fn gamma_half_integer(n: usize) -> f64 {
    let even = n.is_multiple_of(2);
    let mut value = if even { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut k = if even { 2 } else { 1 };
    while k < n {
        value *= k as f64 / 2.0;
        k += 2;
    }
    value
}

/// Area of the unit sphere in ℝⁿ: 2π^{n/2} / Γ(n/2).
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half_integer(n)
}

/// ‖g_ε‖_{L²(B₁)} = (c_n ∫_ε^1 g² r^{n−1} dr)^{1/2}, adaptive quadrature
/// split at 2ε where the integrand switches branch. The tail is integrated
/// in log radius, where the power-law integrand loses its huge dynamic
/// range.
pub fn l2_norm_g(eps: f64, n: usize, p: f64, gamma: f64) -> f64 {
    let f = |r: f64| {
        let g = g_eps(r, eps, n, p, gamma);
        g * g * r.powi(n as i32 - 1)
    };
    let band = adaptive_simpson(&f, eps, 2.0 * eps, 1e-12);
    let log_f = |t: f64| {
        let r = t.exp();
        f(r) * r
    };
    let tail = adaptive_simpson(&log_f, (2.0 * eps).ln(), 0.0, 1e-12);
    (unit_sphere_area(n) * (band + tail)).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupRow {
    pub eps: f64,
    pub l2_g: f64,
    /// v_ε(0), the sup of the profile.
    pub sup_v: f64,
    /// (ln 1/ε)^{−1/(2(1+γ))} · v_ε(0).
    pub sup_u_scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupTable {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    /// γ = (n−4)/2, the borderline where ‖g‖² grows like ln(1/ε).
    pub equality_case: bool,
    pub rows: Vec<BlowupRow>,
    /// Least-squares slope of ln(sup_u_scaled) against ln(ln(1/ε)).
    pub fit_exponent: f64,
    pub sup_increasing: bool,
    /// Equality case: fitted exponent within ±20% of (n−3)/(n−2).
    pub fit_within_tolerance: Option<bool>,
    pub pass: bool,
}

/// Evaluate the family down an ε schedule and report the growth/boundedness
/// dichotomy.
pub fn blowup_report(
    n: usize,
    p: f64,
    gamma: f64,
    eps_list: &[f64],
) -> Result<BlowupTable, CounterexampleError> {
    if !(p > 1.0) {
        return Err(CounterexampleError::Exponent(p));
    }
    let borderline = (n as f64 - 4.0) / 2.0;
    let equality_case = (gamma - borderline).abs() < 1e-12;
    let strict_case = gamma > -1.0 && gamma < borderline && n >= 3;
    if !(strict_case || (equality_case && n >= 4)) {
        return Err(CounterexampleError::Hypothesis { n, gamma });
    }
    if eps_list.len() < 2
        || eps_list.iter().any(|&e| !(e > 0.0 && e < 0.5))
        || eps_list.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(CounterexampleError::Schedule);
    }

    let rows: Vec<BlowupRow> = eps_list
        .iter()
        .map(|&eps| {
            let sup_v = v_eps(0.0, eps);
            let scale = (1.0 / eps).ln().powf(-1.0 / (2.0 * (1.0 + gamma)));
            BlowupRow {
                eps,
                l2_g: l2_norm_g(eps, n, p, gamma),
                sup_v,
                sup_u_scaled: scale * sup_v,
            }
        })
        .collect();

    let sup_increasing = rows.windows(2).all(|w| w[1].sup_v > w[0].sup_v);

    // ln(scaled sup) against ln(ln 1/eps).
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln().ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup_u_scaled.ln()).collect();
    let fit_exponent = least_squares_slope(&xs, &ys);

    let fit_within_tolerance = if equality_case {
        let target = (n as f64 - 3.0) / (n as f64 - 2.0);
        Some((fit_exponent - target).abs() <= 0.2 * target)
    } else {
        None
    };

    let pass = sup_increasing && fit_within_tolerance.unwrap_or(true);
    Ok(BlowupTable {
        n,
        p,
        gamma,
        equality_case,
        rows,
        fit_exponent,
        sup_increasing,
        fit_within_tolerance,
        pass,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_values() {
        assert_eq!(phi(0.5), 0.0);
        assert_eq!(phi(3.0), 1.0);
        assert_relative_eq!(phi(1.5), 0.5, max_relative = 1e-14);
        assert!(phi(1.2) > 0.0 && phi(1.2) < phi(1.8));
    }

    #[test]
    #[should_panic(expected = "nonnegative")]
    fn cutoff_rejects_negative() {
        phi(-0.1);
    }

    #[test]
    fn cutoff_slope_bound_and_consistency() {
        let mut max_slope = 0.0f64;
        for k in 0..=400_000 {
            let s = k as f64 * 1e-5;
            max_slope = max_slope.max(phi_prime(s).abs());
        }
        assert_relative_eq!(max_slope, 15.0 / 8.0, max_relative = 1e-6);
        assert!(max_slope <= 2.0);
        // Finite-difference cross-check of the derivative.
        let d = 1e-6;
        for s in [1.1, 1.3, 1.5, 1.7, 1.9] {
            let fd = (phi(s + d) - phi(s - d)) / (2.0 * d);
            assert_relative_eq!(fd, phi_prime(s), max_relative = 1e-6);
        }
    }

    #[test]
    fn profile_closed_forms() {
        let eps = 1e-2;
        for r in [0.02, 0.1, 0.5, 1.0] {
            assert_relative_eq!(v_eps(r, eps), -r.ln(), max_relative = 1e-12);
        }
        // Constant core.
        assert_eq!(v_eps(0.0, eps), v_eps(eps, eps));
        assert_eq!(v_eps(0.5 * eps, eps), v_eps(eps, eps));
        // Lower bound by the tail integral.
        for eps in [1e-2, 1e-4] {
            assert!(v_eps(0.0, eps) >= -(2.0 * eps).ln() - 1e-10);
        }
    }

    #[test]
    fn profile_nonincreasing() {
        let eps = 3e-2;
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let r = k as f64 / 1000.0;
            let v = v_eps(r, eps);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn g_closed_form_on_tail() {
        let (eps, n, p, gamma) = (1e-2, 4usize, 2.0, 0.5);
        for r in [0.05f64, 0.3, 1.0] {
            let want = (n as f64 - 2.0) * r.powf(-(gamma + 2.0));
            assert_relative_eq!(g_eps(r, eps, n, p, gamma), want, max_relative = 1e-12);
        }
        // n = 2 kills the tail entirely.
        assert_eq!(g_eps(0.5, eps, 2, 3.0, 0.5), 0.0);
        // Constant core.
        assert_eq!(g_eps(0.5 * eps, eps, 4, 2.0, 0.5), 0.0);
    }

    #[test]
    fn g_finite_on_inner_band_for_negative_gamma() {
        let eps = 1e-3;
        for gamma in [-0.5, -0.9] {
            for k in 0..=10_000 {
                let r = eps + (k as f64 / 10_000.0) * eps;
                let g = g_eps(r.min(1.0), eps, 5, 2.5, gamma);
                assert!(g.is_finite(), "g blew up at r = {r}, gamma = {gamma}");
            }
        }
    }

    #[test]
    fn g_continuous_at_band_joints_for_nonneg_gamma() {
        let (eps, n, p, gamma) = (1e-2, 4usize, 2.0, 0.0);
        let d = 1e-9;
        for at in [eps, 2.0 * eps] {
            let below = g_eps(at - d, eps, n, p, gamma);
            let above = g_eps(at + d, eps, n, p, gamma);
            assert!(
                (below - above).abs() < 1e-6 * (1.0 + above.abs()),
                "jump at r = {at}: {below} vs {above}"
            );
        }
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(5), 8.0 * PI * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn l2_tail_matches_closed_form() {
        let (eps, n, p, gamma) = (1e-3, 5usize, 2.0, 0.0f64);
        let f = |r: f64| {
            let g = g_eps(r, eps, n, p, gamma);
            g * g * r.powi(n as i32 - 1)
        };
        let tail = adaptive_simpson(&f, 2.0 * eps, 1.0, 1e-13);
        // Tail integrand is (n-2)^2 r^{n-5-2 gamma}; closed form of the
        // integral over [2 eps, 1].
        let expo = n as f64 - 4.0 - 2.0 * gamma;
        let want = (n as f64 - 2.0).powi(2) * (1.0 - (2.0 * eps).powf(expo)) / expo;
        assert_relative_eq!(tail, want, max_relative = 1e-8);
    }

    #[test]
    fn l2_growth_borderline_and_bounded_cases() {
        let schedule = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        // gamma = (n-4)/2 at n = 4: squared norm grows like ln(1/eps).
        let ratios: Vec<f64> = schedule
            .iter()
            .map(|&e| l2_norm_g(e, 4, 2.0, 0.0).powi(2) / (1.0 / e).ln())
            .collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 3.0, "ratios {ratios:?}");

        // gamma < (n-4)/2 at n = 5: norm stays bounded.
        let norms: Vec<f64> = schedule.iter().map(|&e| l2_norm_g(e, 5, 2.0, 0.0)).collect();
        let max = norms.iter().cloned().fold(f64::MIN, f64::max);
        let min = norms.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 1.5, "norms {norms:?}");
    }

    #[test]
    fn quadrature_matches_fixed_order_simpson() {
        // Independent fixed-order composite Simpson over both pieces.
        let (eps, n, p, gamma) = (1e-4, 5usize, 2.0, 0.0);
        let f = |r: f64| {
            let g = g_eps(r, eps, n, p, gamma);
            g * g * r.powi(n as i32 - 1)
        };
        let composite = |a: f64, b: f64, panels: usize| -> f64 {
            let h = (b - a) / panels as f64;
            let mut acc = f(a) + f(b);
            for i in 1..panels {
                let x = a + i as f64 * h;
                acc += if i % 2 == 0 { 2.0 } else { 4.0 } * f(x);
            }
            acc * h / 3.0
        };
        let reference =
            unit_sphere_area(n) * (composite(eps, 2.0 * eps, 20_000) + composite(2.0 * eps, 1.0, 200_000));
        let got = l2_norm_g(eps, n, p, gamma).powi(2);
        assert_relative_eq!(got, reference, max_relative = 1e-6);
    }

    #[test]
    fn blowup_table_borderline() {
        let table = blowup_report(4, 2.0, 0.0, &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6]).unwrap();
        assert!(table.equality_case);
        assert!(table.sup_increasing);
        assert!(
            (0.4..=0.6).contains(&table.fit_exponent),
            "fit exponent {}",
            table.fit_exponent
        );
        assert_eq!(table.fit_within_tolerance, Some(true));
        assert!(table.pass);
    }

    #[test]
    fn blowup_table_bounded_case() {
        let table = blowup_report(5, 2.0, 0.0, &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6]).unwrap();
        assert!(!table.equality_case);
        assert!(table.sup_increasing);
        let l2_max = table.rows.iter().map(|r| r.l2_g).fold(f64::MIN, f64::max);
        let l2_min = table.rows.iter().map(|r| r.l2_g).fold(f64::MAX, f64::min);
        assert!(l2_max / l2_min <= 1.5);
        for row in &table.rows {
            assert!(row.sup_v >= -(2.0 * row.eps).ln() - 1e-10);
        }
    }

    #[test]
    fn blowup_rejects_out_of_scope_cases() {
        // The n = 3 borderline is the open case.
        assert!(matches!(
            blowup_report(3, 2.0, -0.5, &[1e-2, 1e-3]),
            Err(CounterexampleError::Hypothesis { .. })
        ));
        // gamma above the borderline.
        assert!(blowup_report(4, 2.0, 0.5, &[1e-2, 1e-3]).is_err());
        // Bad schedule.
        assert!(matches!(
            blowup_report(4, 2.0, 0.0, &[1e-3, 1e-2]),
            Err(CounterexampleError::Schedule)
        ));
    }
}
