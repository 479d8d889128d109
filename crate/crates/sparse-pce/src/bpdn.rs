//! Basis pursuit and basis pursuit denoising for underdetermined systems.
//!
//! [`bpdn_solve`] finds an approximate minimiser of `||c||_1` subject to
//! `||A c - y||_2 <= epsilon`; with `epsilon = 0` this is plain basis
//! pursuit. The constrained problem is solved through its Pareto curve:
//! `phi(tau) = min ||A c - y||_2 over ||c||_1 <= tau` is convex and
//! differentiable, so the root of `phi(tau) = epsilon` is found by Newton's
//! method, with each `tau`-constrained least-squares subproblem solved by a
//! spectral projected gradient iteration (Barzilai-Borwein steps, a
//! nonmonotone line search, and a sort-based projection onto the l1 ball).
//! The subproblem duality gap drives both the inner stopping rule and the
//! outer optimality test.
//!
//! Callers are expected to pass a column-normalised matrix (see
//! [`crate::measure::column_normalize`]); the solver itself is agnostic, but
//! coherence-based recovery guarantees and the meaning of `epsilon` both
//! assume unit columns.

use crate::error::{Error, Result};
use ndarray::{Array1, ArrayView1, ArrayView2};
use std::collections::VecDeque;

/// Solver tolerances and iteration budget.
#[derive(Clone, Copy, Debug)]
pub struct BpdnConfig {
    /// Cap on total projected-gradient iterations across all `tau`
    /// subproblems. `None` means `50 * rows`, matching the budget the
    /// experiments were tuned with.
    pub max_iterations: Option<usize>,
    /// Feasibility tolerance: the residual constraint is considered met when
    /// `| ||r|| - epsilon | <= bp_tolerance * (1 + ||y||)`.
    pub bp_tolerance: f64,
    /// Relative duality-gap tolerance for declaring a subproblem (and the
    /// final iterate) optimal.
    pub opt_tolerance: f64,
    /// Print one line per Newton update on the Pareto curve.
    pub verbose: bool,
}

impl Default for BpdnConfig {
    fn default() -> Self {
        BpdnConfig {
            max_iterations: None,
            bp_tolerance: 1e-8,
            opt_tolerance: 1e-6,
            verbose: false,
        }
    }
}

/// Outcome of an l1 recovery.
#[derive(Clone, Debug)]
pub struct RecoveryResult {
    /// Recovered coefficients. When the caller solved a column-normalised
    /// system, these are in the normalised scaling until rescaled back.
    pub coefficients: Array1<f64>,
    /// `||A c - y||_2` at the returned iterate.
    pub residual_norm: f64,
    /// The epsilon the solve targeted.
    pub epsilon_used: f64,
    /// Projected-gradient iterations consumed.
    pub iterations: usize,
    /// False when the iteration budget ran out before the residual reached
    /// its target; the best iterate is still returned.
    pub converged: bool,
}

fn l2(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Euclidean projection of `v` onto the l1 ball of radius `tau` (sort-based).
pub fn project_l1_ball(v: ArrayView1<f64>, tau: f64) -> Array1<f64> {
    if tau <= 0.0 {
        return Array1::zeros(v.len());
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= tau {
        return v.to_owned();
    }
    let mut magnitudes: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    magnitudes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Largest prefix whose soft-threshold level keeps every kept entry
    // positive: theta = (sum of the rho largest magnitudes - tau) / rho.
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in magnitudes.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - tau) / (i + 1) as f64;
        if candidate >= u {
            break;
        }
        theta = candidate;
    }
    v.mapv(|x| x.signum() * (x.abs() - theta).max(0.0))
}

struct SpgState {
    x: Array1<f64>,
    /// Residual `y - A x`.
    r: Array1<f64>,
    /// Gradient of `0.5 ||y - A x||^2`, i.e. `-A^T r`.
    g: Array1<f64>,
}

impl SpgState {
    fn refresh(&mut self, a: ArrayView2<f64>, y: ArrayView1<f64>) {
        self.r = &y.to_owned() - &a.dot(&self.x);
        self.g = -a.t().dot(&self.r);
    }

    fn objective(&self) -> f64 {
        0.5 * self.r.dot(&self.r)
    }
}

/// Approximately solve `min 0.5 ||y - A x||^2 over ||x||_1 <= tau` from the
/// current state, returning the projected-gradient iterations consumed.
///
/// Away from the residual target the stop is loose: the duality gap only has
/// to certify the residual estimate to a fraction of its distance from the
/// target. Since `f - f* <= gap` implies `r - r* <= gap / r`, the threshold
/// `0.1 * |r - epsilon| * r` keeps the estimate error well below the
/// feasibility error, so the outer Newton updates on tau approach the Pareto
/// root from the left. That one-sidedness matters: when epsilon is zero, an
/// overshot tau silently trades l1 quality for a residual the feasibility
/// test cannot distinguish from the root. Once the residual is within the
/// feasibility band, the stop demands the full first-order certificate
/// `gap <= opt_tolerance * max(f, 1)` instead. Stalls and the iteration
/// budget end the solve unconditionally.
#[allow(clippy::too_many_arguments)]
fn spg_subproblem(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    epsilon: f64,
    feasibility_tol: f64,
    opt_tolerance: f64,
    tau: f64,
    state: &mut SpgState,
    budget: usize,
) -> usize {
    const MEMORY: usize = 10;
    const SUFFICIENT_DECREASE: f64 = 1e-4;
    const STEP_MIN: f64 = 1e-16;
    const STEP_MAX: f64 = 1e16;

    let mut f = state.objective();
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(MEMORY);
    recent.push_back(f);

    let g_inf = inf_norm(&state.g);
    let mut bb_step = if g_inf > 0.0 {
        (1.0 / g_inf).clamp(STEP_MIN, STEP_MAX)
    } else {
        1.0
    };

    let mut iterations = 0;
    loop {
        let rr = state.r.dot(&state.r);
        let r_norm = rr.sqrt();
        // Duality gap of the tau subproblem at the current iterate:
        // r'(r - y) + tau * ||A' r||_inf, non-negative by weak duality.
        let g_dual = inf_norm(&state.g);
        let gap = (rr - state.r.dot(&y) + tau * g_dual).abs();
        let distance = (r_norm - epsilon).abs();
        let done = if distance <= feasibility_tol {
            gap <= opt_tolerance * f.max(1.0)
        } else {
            gap <= 0.1 * distance * r_norm
        };
        if done || iterations >= budget {
            return iterations;
        }

        // Nonmonotone Armijo search along the projected-gradient arc.
        let f_reference = recent.iter().cloned().fold(f64::MIN, f64::max);
        let mut step = bb_step;
        let mut accepted = None;
        for _ in 0..32 {
            let x_trial = project_l1_ball((&state.x - &(step * &state.g)).view(), tau);
            let r_trial = &y.to_owned() - &a.dot(&x_trial);
            let f_trial = 0.5 * r_trial.dot(&r_trial);
            let directional = state.g.dot(&(&x_trial - &state.x));
            if f_trial <= f_reference + SUFFICIENT_DECREASE * directional {
                accepted = Some((x_trial, r_trial, f_trial));
                break;
            }
            step *= 0.5;
        }
        // A failed line search means the objective is at numerical precision
        // for this tau; the outer loop decides what that implies.
        let Some((x_new, r_new, f_new)) = accepted else {
            return iterations;
        };

        let g_new = -a.t().dot(&r_new);
        let s = &x_new - &state.x;
        let dg = &g_new - &state.g;
        let sdg = s.dot(&dg);
        bb_step = if sdg > STEP_MIN {
            (s.dot(&s) / sdg).clamp(STEP_MIN, STEP_MAX)
        } else {
            STEP_MAX
        };

        state.x = x_new;
        state.r = r_new;
        state.g = g_new;
        f = f_new;
        if recent.len() == MEMORY {
            recent.pop_front();
        }
        recent.push_back(f);
        iterations += 1;
    }
}

/// Minimise `||c||_1` subject to `||A c - y||_2 <= epsilon`.
///
/// Non-convergence within the iteration budget is not an error: the best
/// iterate is returned with `converged = false` so that large experiment
/// sweeps always complete. Shape mismatches and a negative `epsilon` are
/// errors.
pub fn bpdn_solve(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    epsilon: f64,
    config: &BpdnConfig,
) -> Result<RecoveryResult> {
    let (m, k) = a.dim();
    if y.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {m} rows but the data vector has {} entries",
            y.len()
        )));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be a finite non-negative number, got {epsilon}"
        )));
    }
    if !(config.bp_tolerance > 0.0) || !(config.opt_tolerance > 0.0) {
        return Err(Error::InvalidArgument(
            "solver tolerances must be positive".into(),
        ));
    }

    let y_norm = l2(y);
    let feasibility_tol = config.bp_tolerance * (1.0 + y_norm);

    // The zero vector is already feasible (and has minimal l1 norm).
    if y_norm <= epsilon + feasibility_tol {
        return Ok(RecoveryResult {
            coefficients: Array1::zeros(k),
            residual_norm: y_norm,
            epsilon_used: epsilon,
            iterations: 0,
            converged: true,
        });
    }

    let budget = config.max_iterations.unwrap_or(50 * m).max(1);
    let mut state = SpgState {
        x: Array1::zeros(k),
        r: y.to_owned(),
        g: -a.t().dot(&y),
    };
    let mut tau = 0.0f64;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < budget {
        let spent = spg_subproblem(
            a,
            y,
            epsilon,
            feasibility_tol,
            config.opt_tolerance,
            tau,
            &mut state,
            budget - iterations,
        );
        // Every pass pays at least one iteration so the loop cannot revisit
        // the same state for free while Newton inches tau along.
        iterations += spent.max(1);

        let r_norm = l2(state.r.view());
        let feasibility_error = r_norm - epsilon;
        if config.verbose {
            eprintln!("bpdn: iter {iterations:6}  tau {tau:.6e}  residual {r_norm:.6e}");
        }

        let g_dual = inf_norm(&state.g);
        if feasibility_error.abs() <= feasibility_tol {
            let f = 0.5 * r_norm * r_norm;
            let gap = (r_norm * r_norm - state.r.dot(&y) + tau * g_dual).abs();
            if gap <= config.opt_tolerance * f.max(1.0) {
                converged = true;
                break;
            }
            // Feasible but the certificate has not caught up; a pass that
            // made no progress will never produce it.
            if spent == 0 {
                break;
            }
            continue;
        }
        if feasibility_error > 0.0 && g_dual <= 1e-14 * r_norm.max(1.0) {
            // Least-squares floor: the residual cannot be reduced further,
            // so an infeasible epsilon stays infeasible.
            break;
        }

        // Newton step on phi(tau) = epsilon, using phi'(tau) = -||A'r||/||r||.
        let tau_next = (tau + feasibility_error * r_norm / g_dual).max(0.0);
        if (tau_next - tau).abs() <= f64::EPSILON * tau.max(1.0) {
            break;
        }
        tau = tau_next;
        state.x = project_l1_ball(state.x.view(), tau);
        state.refresh(a, y);
    }

    Ok(RecoveryResult {
        residual_norm: l2(state.r.view()),
        coefficients: state.x,
        epsilon_used: epsilon,
        iterations,
        converged,
    })
}

/// How [`cross_validate_epsilon`] partitions the rows.
#[derive(Clone, Copy, Debug)]
pub enum ValidationSplit {
    /// One random split with three quarters of the rows for training.
    Holdout,
    /// K-fold cross-validation over a random permutation of the rows.
    KFold(usize),
}

/// The relative levels behind [`default_epsilon_grid`], as fractions of the
/// data norm: exact fit plus half decades from `1e-4` up to `1e-1`.
/// Half-decade spacing keeps the best candidate within a factor of about 1.8
/// of any residual level in that range; whole decades leave mid-decade noise
/// levels a factor of three from the nearest candidate, which is enough slack
/// to visibly degrade the fit.
pub fn default_epsilon_levels() -> Vec<f64> {
    let mut levels = vec![0.0];
    for half_decades in 0..7 {
        levels.push(1e-4 * 10f64.powf(0.5 * half_decades as f64));
    }
    levels
}

/// The default candidate list for the residual budget:
/// [`default_epsilon_levels`] scaled by `||y||`.
pub fn default_epsilon_grid(y: ArrayView1<f64>) -> Vec<f64> {
    let n = l2(y);
    default_epsilon_levels()
        .into_iter()
        .map(|level| level * n)
        .collect()
}

/// Pick the `epsilon` from `grid` whose training-rows-only fit predicts the
/// held-out rows best (mean `||A_val c - y_val||_2` across folds). Ties go to
/// the smaller `epsilon`.
///
/// Training submatrices are column-normalised internally and the coefficients
/// rescaled back before validation, so `a` itself need not be normalised.
pub fn cross_validate_epsilon(
    a: ArrayView2<f64>,
    y: ArrayView1<f64>,
    split: ValidationSplit,
    grid: &[f64],
    config: &BpdnConfig,
    seed: u64,
) -> Result<f64> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if grid.is_empty() {
        return Err(Error::InvalidArgument(
            "epsilon candidate grid is empty".into(),
        ));
    }
    let m = a.nrows();
    if y.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {m} rows but the data vector has {} entries",
            y.len()
        )));
    }
    // Nothing to select between: skip the fitting work entirely.
    if grid.len() == 1 {
        return Ok(grid[0]);
    }

    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    // (training rows, validation rows) per fold.
    let folds: Vec<(Vec<usize>, Vec<usize>)> = match split {
        ValidationSplit::Holdout => {
            let train_len = (3 * m).div_ceil(4);
            if train_len == m {
                return Err(Error::InvalidArgument(format!(
                    "{m} rows are too few for a 3:1 holdout split"
                )));
            }
            vec![(
                order[..train_len].to_vec(),
                order[train_len..].to_vec(),
            )]
        }
        ValidationSplit::KFold(count) => {
            if count < 2 || count > m {
                return Err(Error::InvalidArgument(format!(
                    "fold count must be between 2 and the number of rows, got {count}"
                )));
            }
            (0..count)
                .map(|f| {
                    let validation: Vec<usize> = order
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i % count == f)
                        .map(|(_, &row)| row)
                        .collect();
                    let training: Vec<usize> = order
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| i % count != f)
                        .map(|(_, &row)| row)
                        .collect();
                    (training, validation)
                })
                .collect()
        }
    };

    let mut candidates: Vec<f64> = grid.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut best: Option<(f64, f64)> = None;
    for &eps in &candidates {
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon candidates must be non-negative, got {eps}"
            )));
        }
        let mut total = 0.0;
        for (train, validation) in &folds {
            let a_train = a.select(ndarray::Axis(0), train);
            let y_train = y.select(ndarray::Axis(0), train);
            let (a_train_scaled, norms) = crate::measure::normalize_columns(a_train.view())?;
            let fit = bpdn_solve(a_train_scaled.view(), y_train.view(), eps, config)?;
            let coeffs = &fit.coefficients / &norms;

            let a_val = a.select(ndarray::Axis(0), validation);
            let y_val = y.select(ndarray::Axis(0), validation);
            total += l2((&a_val.dot(&coeffs) - &y_val).view());
        }
        let mean = total / folds.len() as f64;
        // Strict improvement required, so the smallest epsilon wins ties.
        if best.map_or(true, |(_, e)| mean < e) {
            best = Some((eps, mean));
        }
    }
    Ok(best.expect("non-empty grid").0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2, Axis};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_config() -> BpdnConfig {
        BpdnConfig::default()
    }

    fn random_gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        use rand_distr::{Distribution, StandardNormal};
        Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
    }

    /// Exhaustive minimum-support least squares for tiny systems: try every
    /// support of size 0..=max_support, fit by normal equations, return the
    /// sparsest fit that is (near-)exact.
    fn l0_oracle(a: &Array2<f64>, y: &Array1<f64>, max_support: usize) -> Option<Array1<f64>> {
        let k = a.ncols();
        let supports = |size: usize| -> Vec<Vec<usize>> {
            // All index subsets of the given size.
            let mut all = vec![vec![]];
            for _ in 0..size {
                let mut next = Vec::new();
                for s in &all {
                    let start = s.last().map_or(0, |&l| l + 1);
                    for j in start..k {
                        let mut t = s.clone();
                        t.push(j);
                        next.push(t);
                    }
                }
                all = next;
            }
            all
        };
        for size in 0..=max_support {
            for support in supports(size) {
                if let Some(c) = least_squares_on(a, y, &support) {
                    let residual = y - &a.dot(&c);
                    if residual.dot(&residual).sqrt() < 1e-9 * (1.0 + y.dot(y).sqrt()) {
                        return Some(c);
                    }
                }
            }
        }
        None
    }

    /// Least squares restricted to a support, by normal equations with
    /// Gaussian elimination (supports here are tiny).
    fn least_squares_on(a: &Array2<f64>, y: &Array1<f64>, support: &[usize]) -> Option<Array1<f64>> {
        let n = support.len();
        if n == 0 {
            return Some(Array1::zeros(a.ncols()));
        }
        let sub = a.select(Axis(1), support);
        let mut lhs = sub.t().dot(&sub);
        let mut rhs = sub.t().dot(y);
        // Partial-pivot elimination.
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| lhs[[i, col]].abs().partial_cmp(&lhs[[j, col]].abs()).unwrap())?;
            if lhs[[pivot, col]].abs() < 1e-12 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = lhs[[col, j]];
                    lhs[[col, j]] = lhs[[pivot, j]];
                    lhs[[pivot, j]] = tmp;
                }
                rhs.swap(col, pivot);
            }
            for row in (col + 1)..n {
                let factor = lhs[[row, col]] / lhs[[col, col]];
                for j in col..n {
                    lhs[[row, j]] -= factor * lhs[[col, j]];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
        let mut solution = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = rhs[row];
            for j in (row + 1)..n {
                acc -= lhs[[row, j]] * solution[j];
            }
            solution[row] = acc / lhs[[row, row]];
        }
        let mut full = Array1::zeros(a.ncols());
        for (&j, &v) in support.iter().zip(&solution) {
            full[j] = v;
        }
        Some(full)
    }

    #[test]
    fn identity_system_recovers_the_data() {
        let a = Array2::eye(3);
        let y = array![1.0, 0.0, 0.0];
        let r = bpdn_solve(a.view(), y.view(), 0.0, &default_config()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.coefficients[0], 1.0, epsilon = 1e-7);
        assert!(r.coefficients[1].abs() < 1e-7 && r.coefficients[2].abs() < 1e-7);
    }

    #[test]
    fn l1_prefers_the_cheap_route() {
        // Columns e1, e2, (e1+e2)/sqrt(2); expressing y = e1 through the
        // third column would cost ||c||_1 = sqrt(2) > 1.
        let s = 1.0 / 2f64.sqrt();
        let a = array![[1.0, 0.0, s], [0.0, 1.0, s]];
        let y = array![1.0, 0.0];
        let r = bpdn_solve(a.view(), y.view(), 0.0, &default_config()).unwrap();
        assert!(r.converged, "converged flag");
        assert_relative_eq!(r.coefficients[0], 1.0, epsilon = 1e-6);
        assert!(r.coefficients[1].abs() < 1e-6);
        assert!(r.coefficients[2].abs() < 1e-6);
    }

    #[test]
    fn fully_determined_sparse_system_is_recovered_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let k = 12;
        let a = {
            let raw = random_gaussian(k, k, &mut rng);
            crate::measure::normalize_columns(raw.view()).unwrap().0
        };
        let mut truth = Array1::zeros(k);
        truth[2] = 1.3;
        truth[7] = -0.4;
        truth[9] = 2.2;
        let y = a.dot(&truth);
        let r = bpdn_solve(a.view(), y.view(), 0.0, &default_config()).unwrap();
        let err = (&r.coefficients - &truth).dot(&(&r.coefficients - &truth)).sqrt()
            / truth.dot(&truth).sqrt();
        assert!(err < 1e-6, "relative error {err}");
    }

    /// The regular simplex frame (`m+1` unit columns in `m` dimensions with
    /// pairwise inner products `-1/m`), lightly perturbed for variety. A
    /// random Gaussian frame this small essentially never reaches the
    /// coherence the uniqueness theorem asks for.
    fn perturbed_simplex(m: usize, noise: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let k = m + 1;
        // Columns e_i of R^{m+1}, projected onto the hyperplane orthogonal
        // to the all-ones vector; the projection lives in an m-dimensional
        // subspace, so its Gram is what matters, not the embedding.
        let mut a = Array2::zeros((k, k));
        for j in 0..k {
            for i in 0..k {
                a[[i, j]] = if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64;
            }
        }
        let raw = a + noise * random_gaussian(k, k, rng);
        crate::measure::normalize_columns(raw.view()).unwrap().0
    }

    #[test]
    fn matches_the_minimum_support_oracle_on_incoherent_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let s = 2;
            let a = perturbed_simplex(10, 0.02, &mut rng);
            let k = a.ncols();
            let mu = crate::measure::mutual_coherence(a.view()).unwrap();
            assert!(
                mu < 1.0 / (2 * s - 1) as f64,
                "uniqueness regime violated: mu = {mu}"
            );
            let mut truth = Array1::zeros(k);
            let first = rng.gen_range(0..k);
            let second = (first + rng.gen_range(1..k)) % k;
            truth[first] = rng.gen::<f64>() + 0.5;
            truth[second] = -(rng.gen::<f64>() + 0.5);
            let y = a.dot(&truth);
            let oracle = l0_oracle(&a, &y, s).expect("oracle must find the planted support");
            let r = bpdn_solve(a.view(), y.view(), 0.0, &default_config()).unwrap();
            let diff = (&r.coefficients - &oracle).dot(&(&r.coefficients - &oracle)).sqrt();
            let scale = oracle.dot(&oracle).sqrt();
            assert!(diff / scale < 1e-5, "oracle mismatch {}", diff / scale);
        }
    }

    #[test]
    fn zero_is_returned_when_the_data_norm_is_within_epsilon() {
        let a = Array2::eye(4);
        let y = array![0.1, 0.0, 0.0, 0.0];
        let r = bpdn_solve(a.view(), y.view(), 0.5, &default_config()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert!(r.coefficients.iter().all(|&c| c == 0.0));
        assert_relative_eq!(r.residual_norm, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn converged_results_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..8 {
            let (m, k) = (15, 40);
            let a = {
                let raw = random_gaussian(m, k, &mut rng);
                crate::measure::normalize_columns(raw.view()).unwrap().0
            };
            let mut truth = Array1::zeros(k);
            for j in [3usize, 17, 31] {
                truth[j] = rng.gen::<f64>() * 2.0 - 1.0;
            }
            let y = a.dot(&truth);
            let y_norm = y.dot(&y).sqrt();
            let eps = 0.05 * y_norm * trial as f64 / 8.0;
            let cfg = default_config();
            let r = bpdn_solve(a.view(), y.view(), eps, &cfg).unwrap();
            if r.converged {
                assert!(
                    r.residual_norm <= eps + cfg.bp_tolerance * (1.0 + y_norm),
                    "residual {} vs epsilon {eps}",
                    r.residual_norm
                );
            }
        }
    }

    #[test]
    fn l1_norm_shrinks_as_epsilon_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (m, k) = (20, 50);
        let a = {
            let raw = random_gaussian(m, k, &mut rng);
            crate::measure::normalize_columns(raw.view()).unwrap().0
        };
        let mut truth = Array1::zeros(k);
        for j in [4usize, 23, 44] {
            truth[j] = rng.gen::<f64>() * 2.0 - 1.0;
        }
        let y = a.dot(&truth);
        let y_norm = y.dot(&y).sqrt();
        let mut previous = f64::INFINITY;
        for eps_frac in [0.0, 0.01, 0.05, 0.2] {
            let r = bpdn_solve(a.view(), y.view(), eps_frac * y_norm, &default_config()).unwrap();
            let l1: f64 = r.coefficients.iter().map(|c| c.abs()).sum();
            assert!(
                l1 <= previous + 1e-6,
                "l1 norm {l1} grew when epsilon rose to {eps_frac}*||y||"
            );
            previous = l1;
        }
    }

    #[test]
    fn solution_scales_with_the_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (m, k) = (12, 30);
        let a = {
            let raw = random_gaussian(m, k, &mut rng);
            crate::measure::normalize_columns(raw.view()).unwrap().0
        };
        let mut truth = Array1::zeros(k);
        truth[5] = 1.0;
        truth[20] = -2.0;
        let y = a.dot(&truth);
        let y_norm = y.dot(&y).sqrt();
        let eps = 0.01 * y_norm;
        let base = bpdn_solve(a.view(), y.view(), eps, &default_config()).unwrap();
        let t = 3.5;
        let scaled = bpdn_solve(a.view(), (&y * t).view(), eps * t, &default_config()).unwrap();
        for j in 0..k {
            assert!(
                (scaled.coefficients[j] - t * base.coefficients[j]).abs() < 1e-4 * t,
                "coefficient {j} broke homogeneity"
            );
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Array2::<f64>::eye(3);
        let y = array![1.0, 2.0];
        assert!(matches!(
            bpdn_solve(a.view(), y.view(), 0.0, &default_config()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn single_candidate_grid_is_returned_unchanged() {
        let a = Array2::eye(4);
        let y = array![1.0, 2.0, 3.0, 4.0];
        let eps = cross_validate_epsilon(
            a.view(),
            y.view(),
            ValidationSplit::Holdout,
            &[0.25],
            &default_config(),
            1,
        )
        .unwrap();
        assert_eq!(eps, 0.25);
    }

    #[test]
    fn noiseless_sparse_data_selects_epsilon_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (m, k) = (24, 12);
        let a = random_gaussian(m, k, &mut rng);
        let mut truth = Array1::zeros(k);
        truth[3] = 1.0;
        truth[8] = -0.7;
        let y = a.dot(&truth);
        let y_norm = y.dot(&y).sqrt();
        let eps = cross_validate_epsilon(
            a.view(),
            y.view(),
            ValidationSplit::Holdout,
            &[0.0, 0.1 * y_norm, 0.5 * y_norm],
            &default_config(),
            3,
        )
        .unwrap();
        assert_eq!(eps, 0.0);
    }

    #[test]
    fn pure_noise_prefers_a_loose_fit() {
        // Interpolating noise on an underdetermined training block must lose
        // to a relaxed residual budget in most runs.
        let mut wins = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let (m, k) = (40, 60);
            let a = random_gaussian(m, k, &mut rng);
            let y: Array1<f64> = {
                use rand_distr::{Distribution, StandardNormal};
                Array1::from_shape_fn(m, |_| StandardNormal.sample(&mut rng))
            };
            let y_norm = y.dot(&y).sqrt();
            let eps = cross_validate_epsilon(
                a.view(),
                y.view(),
                ValidationSplit::Holdout,
                &[0.0, 0.5 * y_norm],
                &default_config(),
                seed,
            )
            .unwrap();
            if eps > 0.0 {
                wins += 1;
            }
        }
        assert!(wins > 10, "loose epsilon won only {wins}/20 runs");
    }

    #[test]
    fn projection_onto_the_l1_ball_is_correct() {
        // Inside the ball: unchanged.
        let v = array![0.3, -0.2];
        assert_eq!(project_l1_ball(v.view(), 1.0), v);
        // Outside: soft-thresholded to the boundary.
        let w = array![3.0, -1.0];
        let p = project_l1_ball(w.view(), 2.0);
        let l1: f64 = p.iter().map(|x| x.abs()).sum();
        assert_relative_eq!(l1, 2.0, epsilon = 1e-12);
        assert_relative_eq!(p[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.0, epsilon = 1e-12);
        // Radius zero: the origin.
        assert!(project_l1_ball(w.view(), 0.0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn projection_matches_a_reference_bisection() {
        // Independent oracle: find the soft-threshold level by bisection on
        // theta such that sum(max(|v|-theta,0)) = tau.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let v: Array1<f64> = Array1::from_shape_fn(12, |_| rng.gen::<f64>() * 4.0 - 2.0);
            let tau = rng.gen::<f64>() * 3.0 + 0.01;
            let fast = project_l1_ball(v.view(), tau);
            let l1: f64 = v.iter().map(|x| x.abs()).sum();
            let expected = if l1 <= tau {
                v.clone()
            } else {
                let (mut lo, mut hi) = (0.0f64, v.iter().fold(0.0f64, |a, &x| a.max(x.abs())));
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let mass: f64 = v.iter().map(|x| (x.abs() - mid).max(0.0)).sum();
                    if mass > tau {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let theta = 0.5 * (lo + hi);
                v.mapv(|x| x.signum() * (x.abs() - theta).max(0.0))
            };
            for j in 0..12 {
                assert!(
                    (fast[j] - expected[j]).abs() < 1e-9,
                    "entry {j}: {} vs {}",
                    fast[j],
                    expected[j]
                );
            }
        }
    }
}
