//! Unconstrained smooth minimisation over matrices by nonlinear conjugate
//! gradients.
//!
//! The method is Polak-Ribiere with the non-negativity safeguard (beta
//! clamped at zero, which restarts along steepest descent) and a strong-Wolfe
//! line search, the standard bracketing/zoom construction. Iterates live in
//! the space of `M x N` matrices with the Frobenius inner product; the
//! objective callback returns the value and the full gradient matrix at a
//! point.
//!
//! This is the inner engine of the preconditioner design, where each
//! evaluation costs a handful of dense matrix products, so the line search
//! is tuned to accept steps with few trial evaluations (loose curvature
//! constant 0.1, as is customary for conjugate-gradient methods).

use ndarray::Array2;

/// Stopping rules and line-search constants.
#[derive(Clone, Copy, Debug)]
pub struct NcgConfig {
    /// Stop when the Frobenius norm of the gradient drops below this.
    pub gradient_tolerance: f64,
    /// Hard cap on conjugate-gradient iterations.
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the Wolfe conditions.
    pub armijo_c1: f64,
    /// Curvature constant of the strong Wolfe conditions.
    pub curvature_c2: f64,
}

impl Default for NcgConfig {
    fn default() -> Self {
        NcgConfig {
            gradient_tolerance: 1e-5,
            max_iterations: 200,
            armijo_c1: 1e-4,
            curvature_c2: 0.1,
        }
    }
}

/// What the minimiser did, alongside the returned point.
#[derive(Clone, Copy, Debug)]
pub struct NcgReport {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    /// True when the gradient tolerance was reached (rather than the
    /// iteration cap or a stalled line search).
    pub converged: bool,
    /// Number of line searches that found no acceptable step.
    pub line_search_failures: usize,
}

fn frob_dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn frob_norm(a: &Array2<f64>) -> f64 {
    frob_dot(a, a).sqrt()
}

/// Minimise `objective` starting from `x0`. The callback returns the value
/// and gradient at a point. The returned iterate never has a larger
/// objective than `x0`.
pub fn minimize<F>(mut objective: F, x0: Array2<f64>, config: &NcgConfig) -> (Array2<f64>, NcgReport)
where
    F: FnMut(&Array2<f64>) -> (f64, Array2<f64>),
{
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    let mut direction = -&g;
    let mut line_search_failures = 0;
    let mut previous_slope: Option<(f64, f64)> = None; // (alpha, dphi0) of last accepted step

    for iteration in 0..config.max_iterations {
        let g_norm = frob_norm(&g);
        if g_norm <= config.gradient_tolerance {
            return (
                x,
                NcgReport {
                    iterations: iteration,
                    objective: f,
                    gradient_norm: g_norm,
                    converged: true,
                    line_search_failures,
                },
            );
        }

        let mut dphi0 = frob_dot(&g, &direction);
        if dphi0 >= 0.0 {
            // Conjugacy has degraded into a non-descent direction; restart.
            direction = -&g;
            dphi0 = -g_norm * g_norm;
        }

        // First-trial step: keep the predicted decrease comparable to the
        // previous accepted step (Nocedal-Wright eq. 3.60), unit step first.
        let alpha_init = match previous_slope {
            Some((alpha_prev, dphi0_prev)) => {
                (alpha_prev * dphi0_prev / dphi0).clamp(1e-12, 1e6)
            }
            None => (1.0 / (1.0 + g_norm)).min(1.0),
        };

        let search = strong_wolfe(
            |alpha| {
                let trial = &x + &(alpha * &direction);
                let (ft, gt) = objective(&trial);
                let slope = frob_dot(&gt, &direction);
                (ft, slope, trial, gt)
            },
            f,
            dphi0,
            alpha_init,
            config.armijo_c1,
            config.curvature_c2,
        );

        match search {
            Some(step) => {
                previous_slope = Some((step.alpha, dphi0));
                let g_new = step.gradient;
                // Polak-Ribiere beta, clamped at zero so the method restarts
                // rather than follow a stale direction.
                let beta =
                    (frob_dot(&g_new, &(&g_new - &g)) / (g_norm * g_norm)).max(0.0);
                direction = -&g_new + &(beta * &direction);
                x = step.point;
                f = step.value;
                g = g_new;
            }
            None => {
                line_search_failures += 1;
                let was_steepest = frob_dot(&direction, &(-&g)) / (frob_norm(&direction) * g_norm)
                    > 1.0 - 1e-12;
                if was_steepest {
                    // Even steepest descent finds no acceptable step: we are
                    // at numerical stagnation. Return the best point so far.
                    return (
                        x,
                        NcgReport {
                            iterations: iteration,
                            objective: f,
                            gradient_norm: g_norm,
                            converged: false,
                            line_search_failures,
                        },
                    );
                }
                direction = -&g;
            }
        }
    }

    let gradient_norm = frob_norm(&g);
    let converged = gradient_norm <= config.gradient_tolerance;
    (
        x,
        NcgReport {
            iterations: config.max_iterations,
            objective: f,
            gradient_norm,
            converged,
            line_search_failures,
        },
    )
}

struct AcceptedStep {
    alpha: f64,
    value: f64,
    point: Array2<f64>,
    gradient: Array2<f64>,
}

/// Strong-Wolfe line search: bracket a suitable interval by forward steps,
/// then shrink it by bisection ("zoom"). `phi` evaluates the objective along
/// the ray and returns (value, slope, point, gradient).
fn strong_wolfe<F>(
    mut phi: F,
    phi0: f64,
    dphi0: f64,
    alpha_init: f64,
    c1: f64,
    c2: f64,
) -> Option<AcceptedStep>
where
    F: FnMut(f64) -> (f64, f64, Array2<f64>, Array2<f64>),
{
    debug_assert!(dphi0 < 0.0, "line search needs a descent direction");
    const MAX_BRACKET: usize = 20;
    const MAX_ZOOM: usize = 30;
    const ALPHA_MAX: f64 = 1e8;

    let mut alpha_prev = 0.0f64;
    let mut f_prev = phi0;
    let mut alpha = alpha_init.min(ALPHA_MAX);

    let mut bracket: Option<(f64, f64, f64)> = None; // (lo, f_lo, hi)
    for i in 0..MAX_BRACKET {
        let (f_a, slope_a, point, gradient) = phi(alpha);
        if f_a > phi0 + c1 * alpha * dphi0 || (i > 0 && f_a >= f_prev) {
            bracket = Some((alpha_prev, f_prev, alpha));
            break;
        }
        if slope_a.abs() <= -c2 * dphi0 {
            return Some(AcceptedStep {
                alpha,
                value: f_a,
                point,
                gradient,
            });
        }
        if slope_a >= 0.0 {
            bracket = Some((alpha, f_a, alpha_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = f_a;
        alpha = (2.0 * alpha).min(ALPHA_MAX);
        if alpha >= ALPHA_MAX && alpha_prev >= ALPHA_MAX {
            return None;
        }
    }

    let (mut lo, mut f_lo, mut hi) = bracket?;
    for _ in 0..MAX_ZOOM {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-16 * lo.abs().max(1.0) {
            break;
        }
        let (f_m, slope_m, point, gradient) = phi(mid);
        if f_m > phi0 + c1 * mid * dphi0 || f_m >= f_lo {
            hi = mid;
        } else {
            if slope_m.abs() <= -c2 * dphi0 {
                return Some(AcceptedStep {
                    alpha: mid,
                    value: f_m,
                    point,
                    gradient,
                });
            }
            if slope_m * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = mid;
            f_lo = f_m;
        }
    }
    None
}
