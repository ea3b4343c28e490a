//! Numerical maximizer used to check the closed form.
//!
//! Projected gradient ascent on `gᵀx` over `‖x‖_p ≤ r` with a geometrically
//! growing step. The projection is the Euclidean one onto the p-norm ball:
//! each coordinate solves `t + ν·p·t^(p−1) = |z_i|`, and `ν` is bisected
//! until the projected point lies on the ball to within `1e-10` relative.
//!
//! Nothing here reuses the closed-form code path.

use crate::{Error, Logits, Result};

/// Relative accuracy of the ball radius reached by the projection.
const RADIUS_BISECTION_TOL: f64 = 1e-10;
const MAX_BISECTION_STEPS: usize = 400;
const MAX_SCALAR_STEPS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub max_iters: usize,
    /// Converged once the objective improves by less than
    /// `tol · max(1, |objective|)` in one iteration.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-15,
        }
    }
}

/// Maximize `gradᵀμ` subject to `‖μ − mu_beta‖_p ≤ r`.
pub fn oracle_maximize(mu_beta: &[f64], grad: &[f64], p: f64, r: f64, opts: OracleOptions) -> Result<Logits> {
    if mu_beta.len() != grad.len() {
        return Err(Error::DimensionMismatch {
            expected: mu_beta.len(),
            actual: grad.len(),
        });
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Config(format!("norm order p must be > 1, got {p}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if grad.iter().chain(mu_beta).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input to oracle".into()));
    }

    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if grad_norm == 0.0 {
        return Logits::new(mu_beta.to_vec());
    }

    let mut x = vec![0.0; grad.len()];
    let mut objective = 0.0;
    let mut step = r / grad_norm;
    let mut improvement = f64::INFINITY;

    for iter in 0..opts.max_iters {
        let z: Vec<f64> = x.iter().zip(grad).map(|(xi, g)| xi + step * g).collect();
        x = project_onto_ball(&z, p, r);
        let next = dot(grad, &x);
        improvement = next - objective;
        objective = next;
        if iter > 0 && improvement.abs() <= opts.tol * objective.abs().max(1.0) {
            return Logits::new(mu_beta.iter().zip(&x).map(|(m, xi)| m + xi).collect());
        }
        if step < f64::MAX / 4.0 {
            step *= 2.0;
        }
    }

    Err(Error::NoConvergence {
        iters: opts.max_iters,
        last_improvement: improvement,
        last: mu_beta.iter().zip(&x).map(|(m, xi)| m + xi).collect(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_p(v: &[f64], p: f64) -> f64 {
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Euclidean projection of `z` onto `{y : ‖y‖_p ≤ r}`.
fn project_onto_ball(z: &[f64], p: f64, r: f64) -> Vec<f64> {
    if norm_p(z, p) <= r {
        return z.to_vec();
    }
    let at = |nu: f64| -> Vec<f64> { z.iter().map(|&zi| zi.signum() * shrink(zi.abs(), nu * p, p)).collect() };

    // ‖y(ν)‖_p decreases monotonically from ‖z‖_p at ν = 0 towards 0.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while norm_p(&at(hi), p) > r {
        lo = hi;
        hi *= 2.0;
    }
    let mut y = at(hi);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        y = at(mid);
        let n = norm_p(&y, p);
        if (n - r).abs() <= RADIUS_BISECTION_TOL * r {
            break;
        }
        if n > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    y
}

/// Root `t ∈ [0, a]` of `t + c·t^(p−1) = a` by safeguarded Newton.
fn shrink(a: f64, c: f64, p: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if c == 0.0 {
        return a;
    }
    let f = |t: f64| t + c * t.powf(p - 1.0) - a;
    let mut lo = 0.0;
    let mut hi = a;
    let mut t = 0.5 * a;
    for _ in 0..MAX_SCALAR_STEPS {
        let ft = f(t);
        if ft == 0.0 {
            return t;
        }
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let slope = 1.0 + c * (p - 1.0) * t.powf(p - 2.0);
        let newton = t - ft / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= f64::EPSILON * t.max(f64::MIN_POSITIVE) {
            return next;
        }
        t = next;
    }
    t
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn axis_aligned_objective() {
        let out = oracle_maximize(&[0.0, 0.0], &[1.0, 0.0], 2.0, 2.0, OracleOptions::default()).unwrap();
        assert_abs_diff_eq!(out[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn projection_lands_on_ball() {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let y = project_onto_ball(&[3.0, -1.0, 0.5], p, 1.0);
            assert_abs_diff_eq!(norm_p(&y, p), 1.0, epsilon = 1e-9);
        }
        // Inside the ball: identity.
        assert_eq!(project_onto_ball(&[0.1, 0.2], 2.0, 1.0), vec![0.1, 0.2]);
    }

    #[test]
    fn shrink_solves_scalar_equation() {
        for (a, c, p) in [(3.0, 0.5, 1.5), (1e6, 1e5, 3.0), (0.01, 20.0, 4.0), (2.0, 1.0, 2.0)] {
            let t = shrink(a, c, p);
            let lhs: f64 = t + c * t.powf(p - 1.0);
            assert!((lhs - a).abs() <= 1e-12 * a, "a={a} c={c} p={p} t={t}");
        }
    }

    #[test]
    fn p4_matches_dual_direction() {
        // Independent of the library's signed power: compute sign(g)|g|^(1/3) inline.
        let g = [0.7, -1.3, 0.2];
        let out = oracle_maximize(&[0.0; 3], &g, 4.0, 1.0, OracleOptions::default()).unwrap();
        let d: Vec<f64> = g.iter().map(|x: &f64| x.signum() * x.abs().cbrt()).collect();
        let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let on = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos: f64 = d.iter().zip(out.iter()).map(|(a, b)| a * b).sum::<f64>() / (dn * on);
        assert!(cos >= 0.999, "cosine {cos}");
    }

    #[test]
    fn reports_non_convergence_with_last_iterate() {
        let opts = OracleOptions {
            max_iters: 1,
            tol: 1e-15,
        };
        match oracle_maximize(&[0.0, 0.0], &[1.0, 1.0], 3.0, 1.0, opts) {
            Err(Error::NoConvergence { iters, last, .. }) => {
                assert_eq!(iters, 1);
                assert_eq!(last.len(), 2);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_gradient_returns_center() {
        let out = oracle_maximize(&[1.0, 2.0], &[0.0, 0.0], 2.0, 1.0, OracleOptions::default()).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 2.0]);
    }
}
