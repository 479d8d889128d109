//! Design of row-preconditioning matrices that push the Gram matrix of the
//! normalised measurement matrix toward an equiangular tight frame.
//!
//! Given a measurement matrix `Psi` (`M x K`, column-normalised), the design
//! seeks `P` (`M x M`) minimising
//!
//! ```text
//! f(G, P) = || G - Psi' P' P Psi ||_F^2  +  lambda * || I - P ||_F^2
//! ```
//!
//! jointly over `P` and over Gram targets `G` in the ETF-like set (unit
//! diagonal, symmetric, off-diagonal magnitudes at most the Welch bound).
//! Both Frobenius norms are squared; the closed-form gradient implemented in
//! [`gradient_p`] is exact for the squared objective. The identity penalty
//! keeps `P` from amplifying measurement noise: as `lambda` grows the design
//! degenerates to the identity and preconditioning becomes a no-op.
//!
//! The solve alternates a cheap exact update of `G` (clip the Gram of the
//! normalised equivalent matrix onto the ETF set) with a nonlinear
//! conjugate-gradient descent in `P`, stopping when the relative objective
//! change falls below a threshold. `lambda` itself is chosen by the
//! cross-validation scheme in [`cross_validate_lambda`]: designs are built
//! on all rows, coefficients are fit on a training subset of the
//! preconditioned rows, and candidates are scored by how well those
//! coefficients predict the *unpreconditioned* held-out rows — which is what
//! lets a noise-amplifying design lose to the identity.

use crate::bpdn::{
    bpdn_solve, cross_validate_epsilon, default_epsilon_grid, BpdnConfig, RecoveryResult,
    ValidationSplit,
};
use crate::error::{Error, Result};
use crate::measure::{etf_project, normalize_columns, welch_bound};
use crate::optim::{minimize, NcgConfig, NcgReport};
use crate::rng::derive_seed;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Sentinel for "no usable design; use the identity preconditioner".
pub const IDENTITY_FALLBACK: f64 = f64::INFINITY;

/// Settings for one alternating design run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DesignConfig {
    /// Stop when the relative objective change per outer iteration drops
    /// below this.
    pub delta_threshold: f64,
    /// Cap on outer (alternation) iterations.
    pub max_outer_iterations: usize,
    /// Settings of the inner conjugate-gradient minimisation over `P`.
    #[serde(skip, default)]
    pub inner: NcgConfig,
    /// Fresh random initialisations to try when a design produces a zero
    /// column in the equivalent matrix.
    pub restarts: usize,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            delta_threshold: 1e-2,
            max_outer_iterations: 50,
            inner: NcgConfig::default(),
            restarts: 3,
        }
    }
}

/// A designed preconditioner with its construction trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreconditionerDesign {
    /// The `M x M` preconditioning matrix.
    pub matrix: Array2<f64>,
    /// The identity-penalty weight the design was built with.
    pub lambda: f64,
    /// Objective value before the first outer iteration and after each one.
    pub objective_history: Vec<f64>,
    /// Outer iterations actually run.
    pub outer_iterations: usize,
    /// True when the relative-change test fired (rather than the cap).
    pub converged: bool,
}

impl PreconditionerDesign {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Write just the matrix in the shared `rows,cols`-headed CSV layout.
    pub fn save_matrix_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::measure::write_matrix_csv_path(self.matrix.view(), path)
    }
}

fn check_shapes(
    g_target: ArrayView2<f64>,
    p: ArrayView2<f64>,
    psi: ArrayView2<f64>,
) -> Result<()> {
    let (m, k) = psi.dim();
    if p.dim() != (m, m) {
        return Err(Error::ShapeMismatch(format!(
            "preconditioner is {:?}, needs ({m}, {m})",
            p.dim()
        )));
    }
    if g_target.dim() != (k, k) {
        return Err(Error::ShapeMismatch(format!(
            "Gram target is {:?}, needs ({k}, {k})",
            g_target.dim()
        )));
    }
    Ok(())
}

/// `|| G - Psi' P' P Psi ||_F^2 + lambda || I - P ||_F^2`.
pub fn objective(
    g_target: ArrayView2<f64>,
    p: ArrayView2<f64>,
    psi: ArrayView2<f64>,
    lambda: f64,
) -> Result<f64> {
    check_shapes(g_target, p, psi)?;
    let d = p.dot(&psi);
    let e = &d.t().dot(&d) - &g_target;
    let coherence_term: f64 = e.iter().map(|v| v * v).sum();
    Ok(coherence_term + lambda * identity_distance_squared(p))
}

fn identity_distance_squared(p: ArrayView2<f64>) -> f64 {
    let mut total = 0.0;
    for ((i, j), &v) in p.indexed_iter() {
        let d = if i == j { v - 1.0 } else { v };
        total += d * d;
    }
    total
}

/// Gradient of [`objective`] with respect to `P`:
/// `4 P Psi (Psi' P' P Psi - G) Psi' + 2 lambda (P - I)`.
pub fn gradient_p(
    g_target: ArrayView2<f64>,
    p: ArrayView2<f64>,
    psi: ArrayView2<f64>,
    lambda: f64,
) -> Result<Array2<f64>> {
    check_shapes(g_target, p, psi)?;
    Ok(objective_and_gradient(&g_target, &p.to_owned(), &psi, lambda).1)
}

/// Shared evaluation: the matrix products `D = P Psi` and `D' D` dominate
/// the cost and serve both the value and the gradient.
fn objective_and_gradient(
    g_target: &ArrayView2<f64>,
    p: &Array2<f64>,
    psi: &ArrayView2<f64>,
    lambda: f64,
) -> (f64, Array2<f64>) {
    let d = p.dot(psi); // M x K
    let e = &d.t().dot(&d) - g_target; // K x K
    let coherence_term: f64 = e.iter().map(|v| v * v).sum();

    let mut gradient = d.dot(&e).dot(&psi.t()); // M x M
    gradient.mapv_inplace(|v| 4.0 * v);
    let mut identity_term = 0.0;
    for ((i, j), slot) in gradient.indexed_iter_mut() {
        let deviation = if i == j { p[[i, j]] - 1.0 } else { p[[i, j]] };
        identity_term += deviation * deviation;
        *slot += 2.0 * lambda * deviation;
    }
    (coherence_term + lambda * identity_term, gradient)
}

/// Minimise the objective over `P` for a fixed Gram target, starting from
/// `p_init`. Returns the iterate and the optimiser's report; the objective
/// at the output never exceeds the objective at `p_init`.
pub fn minimize_p(
    g_target: ArrayView2<f64>,
    psi: ArrayView2<f64>,
    lambda: f64,
    p_init: Array2<f64>,
    inner: &NcgConfig,
) -> Result<(Array2<f64>, NcgReport)> {
    check_shapes(g_target, p_init.view(), psi)?;
    let (p, report) = minimize(
        |p| objective_and_gradient(&g_target, p, &psi, lambda),
        p_init,
        inner,
    );
    Ok((p, report))
}

/// Random initial preconditioner: i.i.d. standard normal entries scaled by
/// `1/sqrt(M)` so the rows of `P Psi` start at the same scale as `Psi`'s.
fn random_init(m: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (m as f64).sqrt();
    Array2::from_shape_fn((m, m), |_| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * scale
    })
}

/// Alternating design for a fixed `lambda` (random init, Gram clip, inner
/// descent, relative-change stopping). A zero column in the equivalent
/// matrix triggers a restart from a fresh random initialisation, up to
/// `config.restarts` times, then an error.
///
/// The design works on the column-normalized form of `psi`: the target Gram
/// set has a unit diagonal, so the objective is only meaningful against a
/// unit-column matrix, and the coherence of the preconditioned system does
/// not depend on column scaling anyway. Feeding the raw matrix instead would
/// make every design waste its identity budget on a uniform `1/sqrt(M)`
/// shrinkage that cancels out of the solve.
pub fn design_preconditioner(
    psi: ArrayView2<f64>,
    lambda: f64,
    config: &DesignConfig,
    seed: u64,
) -> Result<PreconditionerDesign> {
    let (m, k) = psi.dim();
    if m == 0 || k == 0 {
        return Err(Error::InvalidArgument(
            "measurement matrix must be non-empty".into(),
        ));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let (psi_scaled, _norms) = normalize_columns(psi)?;

    let mut last_error = None;
    for attempt in 0..=config.restarts {
        let p0 = random_init(m, derive_seed(seed, &[attempt as u64]));
        match alternate(psi_scaled.view(), lambda, config, p0) {
            Ok(design) => return Ok(design),
            Err(e @ Error::ZeroColumn { .. }) => last_error = Some(e),
            Err(other) => return Err(other),
        }
    }
    Err(Error::DesignFailed(format!(
        "zero column persisted through {} random restarts: {}",
        config.restarts,
        last_error.expect("restart loop ran")
    )))
}

fn alternate(
    psi: ArrayView2<f64>,
    lambda: f64,
    config: &DesignConfig,
    p0: Array2<f64>,
) -> Result<PreconditionerDesign> {
    let (m, k) = psi.dim();
    let mu_e = welch_bound(m, k);

    let mut p = p0;
    let mut g_target = Array2::eye(k);
    let mut f_prev = objective(g_target.view(), p.view(), psi, lambda)?;
    let mut history = vec![f_prev];
    let mut converged = false;
    let mut outer_iterations = 0;

    for _ in 0..config.max_outer_iterations {
        outer_iterations += 1;

        // Gram update: clip the normalised equivalent matrix's Gram onto the
        // ETF set.
        let d = p.dot(&psi);
        let (d_scaled, _norms) = normalize_columns(d.view())?;
        g_target = etf_project(d_scaled.t().dot(&d_scaled).view(), mu_e)?;

        // Descent in P from the previous iterate.
        let (p_next, _report) = minimize_p(g_target.view(), psi, lambda, p, &config.inner)?;
        p = p_next;

        let f_current = objective(g_target.view(), p.view(), psi, lambda)?;
        history.push(f_current);
        let delta = if f_prev == 0.0 {
            0.0
        } else {
            (f_current - f_prev) / f_prev
        };
        f_prev = f_current;
        if delta.abs() < config.delta_threshold {
            converged = true;
            break;
        }
    }

    Ok(PreconditionerDesign {
        matrix: p,
        lambda,
        objective_history: history,
        outer_iterations,
        converged,
    })
}

/// Candidate weights tried by default: five decades around 1, plus a large
/// value whose design is indistinguishable from the identity, giving the
/// selection an explicit "do not precondition" option.
pub fn default_lambda_grid() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e6]
}

/// Settings for [`cross_validate_lambda`].
#[derive(Clone, Debug, Default)]
pub struct LambdaCvConfig {
    pub design: DesignConfig,
    pub solver: BpdnConfig,
    /// Residual-budget candidates for the inner epsilon selection; `None`
    /// derives the default grid from the training data norm.
    pub epsilon_grid: Option<Vec<f64>>,
}

/// Per-candidate outcome of the lambda cross-validation.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaCandidate {
    pub lambda: f64,
    /// `||Psi_val c - u_val||_2`; `None` when the design errored out.
    pub validation_error: Option<f64>,
    /// Epsilon chosen for this candidate's training solve.
    pub epsilon: Option<f64>,
    pub design_converged: Option<bool>,
    pub outer_iterations: Option<usize>,
}

/// Result of [`cross_validate_lambda`].
#[derive(Clone, Debug)]
pub struct LambdaSelection {
    /// Winning weight; [`IDENTITY_FALLBACK`] (infinity) when every candidate
    /// failed and the identity preconditioner is the answer.
    pub lambda: f64,
    pub preconditioner: Array2<f64>,
    /// Validation error of the winning candidate.
    pub validation_error: f64,
    /// Epsilon used in the winning candidate's training solve.
    pub epsilon: f64,
    pub candidates: Vec<LambdaCandidate>,
    pub training_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
}

/// Pick the identity-penalty weight by cross-validation.
///
/// One random 3:1 row split is shared by every candidate. For each weight,
/// a preconditioner is designed on *all* rows, coefficients are fit by BPDN
/// on the training rows of the preconditioned system (with its epsilon
/// chosen by a nested cross-validation on those same training rows), and the
/// candidate is scored by the prediction error on the raw, unpreconditioned
/// validation rows. Ties go to the earlier grid entry. Candidates whose
/// design fails are recorded and skipped; if all fail, the identity
/// preconditioner is returned with the [`IDENTITY_FALLBACK`] sentinel.
pub fn cross_validate_lambda(
    psi: ArrayView2<f64>,
    u: ArrayView1<f64>,
    lambda_grid: &[f64],
    seed: u64,
    config: &LambdaCvConfig,
) -> Result<LambdaSelection> {
    use rand::seq::SliceRandom;

    if lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    let m = psi.nrows();
    if u.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {m} rows but the data vector has {} entries",
            u.len()
        )));
    }
    if m < 4 {
        return Err(Error::InvalidArgument(format!(
            "{m} rows are too few for a 3:1 training/validation split"
        )));
    }

    // One shared split keeps the candidates' validation errors comparable.
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    order.shuffle(&mut rng);
    let train_len = (3 * m).div_ceil(4);
    let mut training_rows = order[..train_len].to_vec();
    let mut validation_rows = order[train_len..].to_vec();
    training_rows.sort_unstable();
    validation_rows.sort_unstable();

    let psi_val = psi.select(Axis(0), &validation_rows);
    let u_val = u.select(Axis(0), &validation_rows);
    let epsilon_cv_seed = derive_seed(seed, &[1]);

    let mut candidates = Vec::with_capacity(lambda_grid.len());
    let mut best: Option<(usize, f64, f64, Array2<f64>)> = None; // (index, error, epsilon, P)

    for (i, &lambda) in lambda_grid.iter().enumerate() {
        let design_seed = derive_seed(seed, &[2, i as u64]);
        let evaluated = design_preconditioner(psi, lambda, &config.design, design_seed)
            .and_then(|design| {
                let scored = score_candidate(
                    psi,
                    u,
                    &design.matrix,
                    &training_rows,
                    &psi_val,
                    &u_val,
                    config,
                    epsilon_cv_seed,
                )?;
                Ok((design, scored))
            });

        match evaluated {
            Ok((design, (error, epsilon))) => {
                candidates.push(LambdaCandidate {
                    lambda,
                    validation_error: Some(error),
                    epsilon: Some(epsilon),
                    design_converged: Some(design.converged),
                    outer_iterations: Some(design.outer_iterations),
                });
                if best.as_ref().map_or(true, |(_, e, _, _)| error < *e) {
                    best = Some((i, error, epsilon, design.matrix));
                }
            }
            Err(_) => candidates.push(LambdaCandidate {
                lambda,
                validation_error: None,
                epsilon: None,
                design_converged: None,
                outer_iterations: None,
            }),
        }
    }

    match best {
        Some((i, error, epsilon, p)) => Ok(LambdaSelection {
            lambda: lambda_grid[i],
            preconditioner: p,
            validation_error: error,
            epsilon,
            candidates,
            training_rows,
            validation_rows,
        }),
        None => {
            // Every design failed: fall back to no preconditioning, scored
            // the same way so the caller still gets a comparable number.
            let identity = Array2::eye(m);
            let (error, epsilon) = score_candidate(
                psi,
                u,
                &identity,
                &training_rows,
                &psi_val,
                &u_val,
                config,
                epsilon_cv_seed,
            )?;
            Ok(LambdaSelection {
                lambda: IDENTITY_FALLBACK,
                preconditioner: identity,
                validation_error: error,
                epsilon,
                candidates,
                training_rows,
                validation_rows,
            })
        }
    }
}

/// Fit on the training rows of the preconditioned system, score on the raw
/// validation rows. Returns (validation error, epsilon used).
#[allow(clippy::too_many_arguments)]
fn score_candidate(
    psi: ArrayView2<f64>,
    u: ArrayView1<f64>,
    p: &Array2<f64>,
    training_rows: &[usize],
    psi_val: &Array2<f64>,
    u_val: &Array1<f64>,
    config: &LambdaCvConfig,
    epsilon_cv_seed: u64,
) -> Result<(f64, f64)> {
    let d = p.dot(&psi);
    let u_p = p.dot(&u);
    let d_train = d.select(Axis(0), training_rows);
    let u_train = u_p.select(Axis(0), training_rows);

    let grid = match &config.epsilon_grid {
        Some(grid) => grid.clone(),
        None => default_epsilon_grid(u_train.view()),
    };
    // The candidates only see the training block, so a single holdout inside
    // it leaves few rows per fit and the budget choice gets erratic right
    // where candidate ranking needs it to be stable; averaging four folds
    // keeps one bad subsample from handing a candidate a nonsense epsilon.
    let epsilon = cross_validate_epsilon(
        d_train.view(),
        u_train.view(),
        ValidationSplit::KFold(4),
        &grid,
        &config.solver,
        epsilon_cv_seed,
    )?;

    let (d_scaled, norms) = normalize_columns(d_train.view())?;
    let fit = bpdn_solve(d_scaled.view(), u_train.view(), epsilon, &config.solver)?;
    let coefficients = &fit.coefficients / &norms;

    let misfit = &psi_val.dot(&coefficients) - u_val;
    Ok((misfit.dot(&misfit).sqrt(), epsilon))
}

/// Solve the preconditioned recovery problem
/// `min ||c||_1 s.t. ||P Psi c - P u||_2 <= epsilon` over the
/// column-normalised preconditioned matrix, and rescale the coefficients
/// back to the original column scaling. The reported residual norm is in
/// the preconditioned metric.
pub fn precondition_and_solve(
    psi: ArrayView2<f64>,
    u: ArrayView1<f64>,
    p: ArrayView2<f64>,
    epsilon: f64,
    config: &BpdnConfig,
) -> Result<RecoveryResult> {
    if p.ncols() != psi.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "preconditioner has {} columns but the matrix has {} rows",
            p.ncols(),
            psi.nrows()
        )));
    }
    let d = p.dot(&psi);
    let u_p = p.dot(&u);
    let (d_scaled, norms) = normalize_columns(d.view())?;
    let mut result = bpdn_solve(d_scaled.view(), u_p.view(), epsilon, config)?;
    result.coefficients = &result.coefficients / &norms;
    Ok(result)
}
