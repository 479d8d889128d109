//! End-to-end recovery experiments.
//!
//! A *trial* is the full pipeline for one realisation: draw sample points,
//! evaluate the target there (optionally adding noise), assemble and weight
//! the measurement matrix, optionally design a preconditioner by
//! cross-validation, solve the l1 problem, and score the result against the
//! exact coefficients and/or held-out evaluations.
//!
//! The drivers built on top of trials — sparsity/sample phase diagrams,
//! multi-arm studies, noise sweeps — run their trials in parallel. Every
//! random decision inside a trial draws from a stream derived from the trial
//! seed and a fixed purpose tag, so results are byte-identical regardless of
//! thread scheduling.

use crate::basis::{BasisSet, PolynomialFamily};
use crate::bpdn::{
    bpdn_solve, cross_validate_epsilon, default_epsilon_grid, BpdnConfig, ValidationSplit,
};
use crate::error::{Error, Result};
use crate::measure::{assemble, mutual_coherence, normalize_columns};
use crate::precond::{
    cross_validate_lambda, default_lambda_grid, precondition_and_solve, DesignConfig,
    LambdaCvConfig,
};
use crate::rng::{derive_seed, stream};
use crate::sampling::{coherence_optimal_samples, standard_samples, ChainConfig, SamplingScheme};
use crate::targets::{relative_error, TargetFunction, TargetInstance};
use ndarray::Array1;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

// Purpose tags for per-trial seed derivation. Each randomised stage of a
// trial owns one tag, so adding noise to a run does not shift the sample
// points, and so on.
const SUB_TARGET: u64 = 0;
const SUB_SAMPLES: u64 = 1;
const SUB_NOISE: u64 = 2;
const SUB_DESIGN: u64 = 3;
const SUB_EPSILON: u64 = 4;
const SUB_VALIDATION: u64 = 5;

/// Fold count for the budget search under [`EpsilonMode::CrossValidated`].
/// One 3:1 holdout leaves the choice hostage to a single subsample; averaging
/// four folds keeps one unlucky split from handing a trial a nonsense budget.
pub const EPSILON_FOLDS: usize = 4;

/// How the residual budget for the final solve is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonMode {
    /// Exact-fit basis pursuit, for noiseless data.
    Zero,
    /// A caller-supplied budget.
    Fixed(f64),
    /// Pick the budget by four-fold cross-validation on the system being
    /// solved.
    CrossValidated,
}

/// Everything a trial needs besides the target: how to sample, whether and
/// how to precondition, and how to solve.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub scheme: SamplingScheme,
    pub chain: ChainConfig,
    pub preconditioned: bool,
    /// Identity-penalty candidates for the preconditioner cross-validation;
    /// ignored when `preconditioned` is false.
    pub lambda_grid: Vec<f64>,
    pub epsilon: EpsilonMode,
    pub solver: BpdnConfig,
    pub design: DesignConfig,
}

impl Pipeline {
    /// Plain recovery (no preconditioning) with an exact-fit solve.
    pub fn plain(scheme: SamplingScheme) -> Self {
        Pipeline {
            scheme,
            chain: ChainConfig::default(),
            preconditioned: false,
            lambda_grid: default_lambda_grid(),
            epsilon: EpsilonMode::Zero,
            solver: BpdnConfig::default(),
            design: DesignConfig::default(),
        }
    }

    /// The same pipeline with cross-validated preconditioning switched on.
    pub fn preconditioned(scheme: SamplingScheme) -> Self {
        Pipeline {
            preconditioned: true,
            ..Pipeline::plain(scheme)
        }
    }

    pub fn with_epsilon(mut self, epsilon: EpsilonMode) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// One trial's inputs. The `seed` fully determines the trial.
pub struct TrialSetup<'a> {
    pub target: &'a TargetInstance,
    pub pipeline: &'a Pipeline,
    pub samples: usize,
    /// Standard deviation of additive Gaussian observation noise; zero for
    /// clean data.
    pub noise_sigma: f64,
    /// Held-out points (from the standard measure) for the prediction-error
    /// score; zero skips that score.
    pub validation_points: usize,
    pub seed: u64,
}

/// Scores and diagnostics from one trial.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub coefficients: Array1<f64>,
    /// Relative l2 error against the exact coefficients, when the target has
    /// them.
    pub coefficient_error: Option<f64>,
    /// Relative root-mean-square prediction error on held-out points, when
    /// requested.
    pub validation_error: Option<f64>,
    /// Residual budget the final solve used.
    pub epsilon: f64,
    /// Identity-penalty weight the preconditioner cross-validation picked;
    /// `None` for unpreconditioned trials.
    pub lambda: Option<f64>,
    /// Mutual coherence of the (weighted, column-normalised) measurement
    /// matrix before preconditioning.
    pub coherence_base: f64,
    /// Mutual coherence after preconditioning, for preconditioned trials.
    pub coherence_preconditioned: Option<f64>,
    pub residual_norm: f64,
    pub solver_iterations: usize,
    pub solver_converged: bool,
}

/// Everything in a [`TrialOutcome`] except the coefficient vector — what the
/// experiment drivers keep per trial for reporting.
#[derive(Clone, Debug, Serialize)]
pub struct TrialSummary {
    pub coefficient_error: Option<f64>,
    pub validation_error: Option<f64>,
    pub epsilon: f64,
    pub lambda: Option<f64>,
    pub coherence_base: f64,
    pub coherence_preconditioned: Option<f64>,
    pub residual_norm: f64,
    pub solver_iterations: usize,
    pub solver_converged: bool,
}

impl TrialOutcome {
    pub fn summary(&self) -> TrialSummary {
        TrialSummary {
            coefficient_error: self.coefficient_error,
            validation_error: self.validation_error,
            epsilon: self.epsilon,
            lambda: self.lambda,
            coherence_base: self.coherence_base,
            coherence_preconditioned: self.coherence_preconditioned,
            residual_norm: self.residual_norm,
            solver_iterations: self.solver_iterations,
            solver_converged: self.solver_converged,
        }
    }
}

/// Run one full trial.
pub fn run_trial(setup: &TrialSetup) -> Result<TrialOutcome> {
    let basis = &setup.target.basis;
    let m = setup.samples;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "a trial needs at least one sample".into(),
        ));
    }
    if !(setup.noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be non-negative, got {}",
            setup.noise_sigma
        )));
    }
    let pipeline = setup.pipeline;

    let sample_seed = derive_seed(setup.seed, &[SUB_SAMPLES]);
    let set = match pipeline.scheme {
        SamplingScheme::Standard => standard_samples(basis, m, sample_seed)?,
        SamplingScheme::CoherenceOptimal => {
            coherence_optimal_samples(basis, m, sample_seed, &pipeline.chain)?
        }
    };

    let mut y = Array1::zeros(m);
    for (i, row) in set.points.outer_iter().enumerate() {
        y[i] = setup.target.evaluate(row.to_vec().as_slice())?;
    }
    if setup.noise_sigma > 0.0 {
        let mut rng = stream(setup.seed, &[SUB_NOISE]);
        for v in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += setup.noise_sigma * z;
        }
    }

    // Weighted system: scale each equation by its sampling weight (a no-op
    // for the standard scheme, whose weights are all one).
    let mut a = assemble(basis, &set)?.entries;
    for (i, mut row) in a.outer_iter_mut().enumerate() {
        let w = set.weights[i];
        if w != 1.0 {
            row.map_inplace(|v| *v *= w);
            y[i] *= w;
        }
    }
    let coherence_base = mutual_coherence(a.view())?;

    let (result, epsilon, lambda, coherence_preconditioned) = if pipeline.preconditioned {
        let cv = LambdaCvConfig {
            design: pipeline.design,
            solver: pipeline.solver,
            epsilon_grid: None,
        };
        let selection = cross_validate_lambda(
            a.view(),
            y.view(),
            &pipeline.lambda_grid,
            derive_seed(setup.seed, &[SUB_DESIGN]),
            &cv,
        )?;
        let d = selection.preconditioner.dot(&a);
        let u_p = selection.preconditioner.dot(&y);
        let epsilon = match pipeline.epsilon {
            EpsilonMode::Zero => 0.0,
            EpsilonMode::Fixed(e) => e,
            EpsilonMode::CrossValidated => cross_validate_epsilon(
                d.view(),
                u_p.view(),
                ValidationSplit::KFold(EPSILON_FOLDS),
                &default_epsilon_grid(u_p.view()),
                &pipeline.solver,
                derive_seed(setup.seed, &[SUB_EPSILON]),
            )?,
        };
        let result = precondition_and_solve(
            a.view(),
            y.view(),
            selection.preconditioner.view(),
            epsilon,
            &pipeline.solver,
        )?;
        let coherence = mutual_coherence(d.view())?;
        (result, epsilon, Some(selection.lambda), Some(coherence))
    } else {
        let epsilon = match pipeline.epsilon {
            EpsilonMode::Zero => 0.0,
            EpsilonMode::Fixed(e) => e,
            EpsilonMode::CrossValidated => cross_validate_epsilon(
                a.view(),
                y.view(),
                ValidationSplit::KFold(EPSILON_FOLDS),
                &default_epsilon_grid(y.view()),
                &pipeline.solver,
                derive_seed(setup.seed, &[SUB_EPSILON]),
            )?,
        };
        let (a_scaled, norms) = normalize_columns(a.view())?;
        let mut result = bpdn_solve(a_scaled.view(), y.view(), epsilon, &pipeline.solver)?;
        result.coefficients = &result.coefficients / &norms;
        (result, epsilon, None, None)
    };

    let coefficient_error = match &setup.target.exact_coefficients {
        Some(c_ref) => Some(relative_error(result.coefficients.view(), c_ref.view())?),
        None => None,
    };
    let validation_error = if setup.validation_points > 0 {
        let held_out = standard_samples(
            basis,
            setup.validation_points,
            derive_seed(setup.seed, &[SUB_VALIDATION]),
        )?;
        let mut squared_miss = 0.0;
        let mut squared_truth = 0.0;
        for row in held_out.points.outer_iter() {
            let x = row.to_vec();
            let truth = setup.target.evaluate(&x)?;
            let predicted = basis.eval(&x)?.dot(&result.coefficients);
            squared_miss += (predicted - truth) * (predicted - truth);
            squared_truth += truth * truth;
        }
        if squared_truth > 0.0 {
            Some((squared_miss / squared_truth).sqrt())
        } else {
            None
        }
    } else {
        None
    };

    Ok(TrialOutcome {
        coefficients: result.coefficients,
        coefficient_error,
        validation_error,
        epsilon,
        lambda,
        coherence_base,
        coherence_preconditioned,
        residual_norm: result.residual_norm,
        solver_iterations: result.iterations,
        solver_converged: result.converged,
    })
}

/// Grid sweep over undersampling ratio `M/K` and relative sparsity `s/M`,
/// estimating the probability of exact recovery in each cell.
#[derive(Clone, Debug)]
pub struct PhaseDiagramConfig {
    pub family: PolynomialFamily,
    pub dimension: usize,
    pub order: usize,
    /// Cells per axis; the grid point `i` (zero-based) is at ratio
    /// `(i+1)/resolution`.
    pub grid_resolution: usize,
    /// Random targets drawn per cell.
    pub trials: usize,
    /// A trial counts as a success when the relative coefficient error is
    /// below this.
    pub success_threshold: f64,
    pub pipeline: Pipeline,
    pub seed: u64,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        PhaseDiagramConfig {
            family: PolynomialFamily::Legendre,
            dimension: 2,
            order: 20,
            grid_resolution: 10,
            trials: 25,
            success_threshold: 1e-3,
            pipeline: Pipeline::plain(SamplingScheme::Standard),
            seed: 0,
        }
    }
}

/// One grid cell's estimate.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseCell {
    /// Requested undersampling ratio `M/K`.
    pub m_ratio: f64,
    /// Requested relative sparsity `s/M`.
    pub s_ratio: f64,
    /// Sample count the ratio rounded to.
    pub samples: usize,
    /// Sparsity the ratio rounded to.
    pub sparsity: usize,
    pub trials: usize,
    pub successes: usize,
    /// Trials that ended in a pipeline error (counted as misses).
    pub errors: usize,
    pub success_probability: f64,
    /// False for cells whose rounded sizes cannot run the configured
    /// pipeline (for example, too few rows to split for cross-validation);
    /// such cells are skipped and report probability zero.
    pub feasible: bool,
}

/// Where the estimated success probability crosses one half along a column
/// of fixed `M/K`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContourPoint {
    pub m_ratio: f64,
    pub s_ratio: f64,
}

/// One phase-diagram trial's retained result.
#[derive(Clone, Debug)]
pub struct PhaseTrial {
    /// Linear cell index (`m` outer, `s` inner).
    pub cell: usize,
    pub trial: usize,
    /// The summary, or the pipeline error rendered as text.
    pub outcome: std::result::Result<TrialSummary, String>,
    pub success: bool,
}

#[derive(Clone, Debug)]
pub struct PhaseDiagram {
    pub cardinality: usize,
    pub grid_resolution: usize,
    /// Row-major over (`m_ratio` outer, `s_ratio` inner).
    pub cells: Vec<PhaseCell>,
    /// One crossing per `m_ratio` column.
    pub contour: Vec<ContourPoint>,
    /// Every trial that ran, ordered by (cell, trial).
    pub trials: Vec<PhaseTrial>,
}

pub fn run_phase_diagram(config: &PhaseDiagramConfig) -> Result<PhaseDiagram> {
    let r = config.grid_resolution;
    if r < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least 2, got {r}"
        )));
    }
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trial count must be positive".into()));
    }
    if !(config.success_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "success threshold must be positive, got {}",
            config.success_threshold
        )));
    }
    let basis = BasisSet::total_degree(config.family, config.dimension, config.order)?;
    let k = basis.cardinality();
    let ratios: Vec<f64> = (1..=r).map(|i| i as f64 / r as f64).collect();

    // Rounded sizes per cell, plus whether the pipeline can run them at all.
    let needs_split = config.pipeline.preconditioned
        || config.pipeline.epsilon == EpsilonMode::CrossValidated;
    let mut plan = Vec::with_capacity(r * r);
    for &m_ratio in &ratios {
        let m = ((m_ratio * k as f64).round() as usize).max(1);
        for &s_ratio in &ratios {
            let s = ((s_ratio * m as f64).round() as usize).max(1);
            let feasible = s <= m && m <= k && (!needs_split || m >= 4);
            plan.push((m, s, feasible));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..r * r)
        .flat_map(|cell| (0..config.trials).map(move |t| (cell, t)))
        .filter(|&(cell, _)| plan[cell].2)
        .collect();

    let mut trials: Vec<PhaseTrial> = jobs
        .into_par_iter()
        .map(|(cell, trial)| {
            let (m, s, _) = plan[cell];
            let trial_seed = derive_seed(config.seed, &[cell as u64, trial as u64]);
            let target = TargetFunction::Manufactured {
                family: config.family,
                dimension: config.dimension,
                order: config.order,
                sparsity: s,
                seed: derive_seed(trial_seed, &[SUB_TARGET]),
            };
            let run = target.instantiate().and_then(|instance| {
                run_trial(&TrialSetup {
                    target: &instance,
                    pipeline: &config.pipeline,
                    samples: m,
                    noise_sigma: 0.0,
                    validation_points: 0,
                    seed: trial_seed,
                })
            });
            let (outcome, success) = match run {
                Ok(full) => {
                    let success = full
                        .coefficient_error
                        .map(|e| e < config.success_threshold)
                        .unwrap_or(false);
                    (Ok(full.summary()), success)
                }
                Err(e) => (Err(e.to_string()), false),
            };
            PhaseTrial {
                cell,
                trial,
                outcome,
                success,
            }
        })
        .collect();
    trials.sort_by_key(|t| (t.cell, t.trial));

    let mut successes = vec![0usize; r * r];
    let mut errors = vec![0usize; r * r];
    for t in &trials {
        if t.success {
            successes[t.cell] += 1;
        } else if t.outcome.is_err() {
            errors[t.cell] += 1;
        }
    }

    let mut cells = Vec::with_capacity(r * r);
    for (mi, &m_ratio) in ratios.iter().enumerate() {
        for (si, &s_ratio) in ratios.iter().enumerate() {
            let cell = mi * r + si;
            let (m, s, feasible) = plan[cell];
            cells.push(PhaseCell {
                m_ratio,
                s_ratio,
                samples: m,
                sparsity: s,
                trials: if feasible { config.trials } else { 0 },
                successes: successes[cell],
                errors: errors[cell],
                success_probability: if feasible {
                    successes[cell] as f64 / config.trials as f64
                } else {
                    0.0
                },
                feasible,
            });
        }
    }

    let contour = ratios
        .iter()
        .enumerate()
        .map(|(mi, &m_ratio)| {
            let probabilities: Vec<f64> = (0..r)
                .map(|si| cells[mi * r + si].success_probability)
                .collect();
            ContourPoint {
                m_ratio,
                s_ratio: contour_crossing(&ratios, &probabilities),
            }
        })
        .collect();

    Ok(PhaseDiagram {
        cardinality: k,
        grid_resolution: r,
        cells,
        contour,
        trials,
    })
}

/// First downward crossing of one half, scanning ratios in ascending order
/// and interpolating linearly between the bracketing grid points. All-above
/// clamps to one, starting below clamps to zero.
fn contour_crossing(ratios: &[f64], probabilities: &[f64]) -> f64 {
    if probabilities[0] < 0.5 {
        return 0.0;
    }
    for i in 0..probabilities.len() - 1 {
        let (hi, lo) = (probabilities[i], probabilities[i + 1]);
        if hi >= 0.5 && lo < 0.5 {
            let t = (hi - 0.5) / (hi - lo);
            return ratios[i] + t * (ratios[i + 1] - ratios[i]);
        }
    }
    1.0
}

/// One named pipeline inside a multi-arm study.
#[derive(Clone, Debug)]
pub struct StudyArm {
    pub name: String,
    pub pipeline: Pipeline,
}

impl StudyArm {
    pub fn new(name: impl Into<String>, pipeline: Pipeline) -> Self {
        StudyArm {
            name: name.into(),
            pipeline,
        }
    }
}

/// A fixed target recovered repeatedly under one or more pipelines. Arms
/// share trial seeds, so arm `i` and arm `j` see identical sample points and
/// noise in trial `t` — the comparison is paired.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub target: TargetFunction,
    pub samples: usize,
    pub noise_sigma: f64,
    pub trials: usize,
    pub validation_points: usize,
    pub arms: Vec<StudyArm>,
    pub seed: u64,
}

/// All trials of one arm, with quartile summaries over the trials that
/// completed.
#[derive(Debug)]
pub struct ArmResult {
    pub name: String,
    pub trials: Vec<Result<TrialOutcome>>,
    /// (lower quartile, median, upper quartile) of the relative coefficient
    /// error, over completed trials that had one.
    pub coefficient_quartiles: Option<[f64; 3]>,
    /// Same summary for the held-out prediction error.
    pub validation_quartiles: Option<[f64; 3]>,
}

impl ArmResult {
    pub fn median_coefficient_error(&self) -> Option<f64> {
        self.coefficient_quartiles.map(|q| q[1])
    }

    pub fn median_validation_error(&self) -> Option<f64> {
        self.validation_quartiles.map(|q| q[1])
    }
}

#[derive(Debug)]
pub struct StudyResult {
    pub cardinality: usize,
    pub arms: Vec<ArmResult>,
}

fn quartiles(values: &[f64]) -> Option<[f64; 3]> {
    Some([
        quantile(values, 0.25)?,
        quantile(values, 0.5)?,
        quantile(values, 0.75)?,
    ])
}

pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    if config.trials == 0 || config.arms.is_empty() {
        return Err(Error::InvalidArgument(
            "a study needs at least one arm and one trial".into(),
        ));
    }
    let instance = config.target.instantiate()?;

    let jobs: Vec<(usize, usize)> = (0..config.arms.len())
        .flat_map(|arm| (0..config.trials).map(move |t| (arm, t)))
        .collect();
    let mut outcomes: Vec<((usize, usize), Result<TrialOutcome>)> = jobs
        .into_par_iter()
        .map(|(arm, trial)| {
            let outcome = run_trial(&TrialSetup {
                target: &instance,
                pipeline: &config.arms[arm].pipeline,
                samples: config.samples,
                noise_sigma: config.noise_sigma,
                validation_points: config.validation_points,
                // Keyed by trial only: every arm sees the same realisation.
                seed: derive_seed(config.seed, &[trial as u64]),
            });
            ((arm, trial), outcome)
        })
        .collect();
    outcomes.sort_by_key(|((arm, trial), _)| (*arm, *trial));

    let mut arms = Vec::with_capacity(config.arms.len());
    let mut iter = outcomes.into_iter();
    for arm in &config.arms {
        let trials: Vec<Result<TrialOutcome>> =
            iter.by_ref().take(config.trials).map(|(_, o)| o).collect();
        let collect = |f: fn(&TrialOutcome) -> Option<f64>| -> Vec<f64> {
            trials
                .iter()
                .filter_map(|t| t.as_ref().ok().and_then(f))
                .collect()
        };
        arms.push(ArmResult {
            name: arm.name.clone(),
            coefficient_quartiles: quartiles(&collect(|t| t.coefficient_error)),
            validation_quartiles: quartiles(&collect(|t| t.validation_error)),
            trials,
        });
    }
    Ok(StudyResult {
        cardinality: instance.basis.cardinality(),
        arms,
    })
}

/// A study repeated across observation-noise levels and sample counts.
#[derive(Clone, Debug)]
pub struct NoiseStudyConfig {
    pub target: TargetFunction,
    /// Sample counts to sweep; one study per (noise level, count) pair.
    pub sample_counts: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    pub validation_points: usize,
    pub arms: Vec<StudyArm>,
    pub seed: u64,
}

#[derive(Debug)]
pub struct NoiseLevelResult {
    pub sigma: f64,
    pub samples: usize,
    pub study: StudyResult,
}

#[derive(Debug)]
pub struct NoiseStudyResult {
    pub levels: Vec<NoiseLevelResult>,
}

pub fn run_noise_study(config: &NoiseStudyConfig) -> Result<NoiseStudyResult> {
    if config.noise_levels.is_empty() || config.sample_counts.is_empty() {
        return Err(Error::InvalidArgument(
            "noise study needs at least one noise level and one sample count".into(),
        ));
    }
    let mut levels = Vec::with_capacity(config.noise_levels.len() * config.sample_counts.len());
    for (i, &sigma) in config.noise_levels.iter().enumerate() {
        for (j, &samples) in config.sample_counts.iter().enumerate() {
            let study = run_study(&StudyConfig {
                target: config.target.clone(),
                samples,
                noise_sigma: sigma,
                trials: config.trials,
                validation_points: config.validation_points,
                arms: config.arms.clone(),
                seed: derive_seed(config.seed, &[i as u64, j as u64]),
            })?;
            levels.push(NoiseLevelResult {
                sigma,
                samples,
                study,
            });
        }
    }
    Ok(NoiseStudyResult { levels })
}

/// Linear-interpolation sample quantile (the "type 7" convention used by
/// most statistics environments). `None` on an empty sample or `q` outside
/// `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Median by [`quantile`].
pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::NcgConfig;

    fn quick_design() -> DesignConfig {
        DesignConfig {
            max_outer_iterations: 5,
            inner: NcgConfig {
                max_iterations: 40,
                ..NcgConfig::default()
            },
            ..DesignConfig::default()
        }
    }

    fn exact_recovery_setup() -> (TargetFunction, usize) {
        // 15 basis functions, 3 active, 12 samples: comfortably recoverable.
        let target = TargetFunction::Manufactured {
            family: PolynomialFamily::Legendre,
            dimension: 2,
            order: 4,
            sparsity: 3,
            seed: 11,
        };
        (target, 12)
    }

    #[test]
    fn clean_trial_recovers_exactly() {
        let (target, samples) = exact_recovery_setup();
        let instance = target.instantiate().unwrap();
        let pipeline = Pipeline::plain(SamplingScheme::Standard);
        let outcome = run_trial(&TrialSetup {
            target: &instance,
            pipeline: &pipeline,
            samples,
            noise_sigma: 0.0,
            validation_points: 50,
            seed: 7,
        })
        .unwrap();
        assert!(outcome.solver_converged);
        assert!(outcome.coefficient_error.unwrap() < 1e-6);
        assert!(outcome.validation_error.unwrap() < 1e-6);
        assert_eq!(outcome.epsilon, 0.0);
        assert!(outcome.lambda.is_none());
        assert!(outcome.coherence_base > 0.0 && outcome.coherence_base <= 1.0);
        assert!(outcome.coherence_preconditioned.is_none());
    }

    #[test]
    fn trials_are_deterministic() {
        let (target, samples) = exact_recovery_setup();
        let instance = target.instantiate().unwrap();
        let pipeline = Pipeline::plain(SamplingScheme::Standard);
        let run = || {
            run_trial(&TrialSetup {
                target: &instance,
                pipeline: &pipeline,
                samples,
                noise_sigma: 0.3,
                validation_points: 20,
                seed: 42,
            })
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.coefficients, b.coefficients);
        assert_eq!(a.coefficient_error, b.coefficient_error);
        assert_eq!(a.validation_error, b.validation_error);
        assert_eq!(a.coherence_base, b.coherence_base);
    }

    #[test]
    fn preconditioned_trial_reports_diagnostics() {
        let (target, _) = exact_recovery_setup();
        let instance = target.instantiate().unwrap();
        let mut pipeline = Pipeline::preconditioned(SamplingScheme::Standard);
        pipeline.lambda_grid = vec![1e-2];
        pipeline.design = quick_design();
        let outcome = run_trial(&TrialSetup {
            target: &instance,
            pipeline: &pipeline,
            samples: 10,
            noise_sigma: 0.0,
            validation_points: 0,
            seed: 3,
        })
        .unwrap();
        let mu = outcome.coherence_preconditioned.unwrap();
        assert!(mu > 0.0 && mu <= 1.0);
        assert!(outcome.lambda.is_some());
        assert!(outcome.coefficient_error.unwrap().is_finite());
    }

    #[test]
    fn weighted_sampling_lowers_coherence_at_high_order() {
        // At order 10 in two dimensions, plain Monte Carlo draws produce
        // badly correlated high-degree columns; importance sampling should
        // lower the measured coherence for most seeds. Legendre keeps this
        // reliable: its biased measure lives on the same bounded square as
        // the proposals, while the Hermite one concentrates in Gaussian
        // tails that a short independence chain visits too rarely for a
        // stable comparison.
        let basis_target = TargetFunction::Manufactured {
            family: PolynomialFamily::Legendre,
            dimension: 2,
            order: 10,
            sparsity: 4,
            seed: 1,
        };
        let instance = basis_target.instantiate().unwrap();
        let standard = Pipeline::plain(SamplingScheme::Standard);
        let weighted = Pipeline::plain(SamplingScheme::CoherenceOptimal);
        let mut mu_standard = Vec::new();
        let mut mu_weighted = Vec::new();
        for seed in 0..5u64 {
            for (pipeline, out) in [(&standard, &mut mu_standard), (&weighted, &mut mu_weighted)]
            {
                let outcome = run_trial(&TrialSetup {
                    target: &instance,
                    pipeline,
                    samples: 120,
                    noise_sigma: 0.0,
                    validation_points: 0,
                    seed,
                })
                .unwrap();
                out.push(outcome.coherence_base);
            }
        }
        assert!(
            median(&mu_weighted).unwrap() < median(&mu_standard).unwrap(),
            "weighted {mu_weighted:?} vs standard {mu_standard:?}"
        );
    }

    #[test]
    fn contour_crossing_cases() {
        let ratios = [0.25, 0.5, 0.75, 1.0];
        // Clean monotone descent: crossing halfway between 0.6 and 0.4.
        assert!((contour_crossing(&ratios, &[1.0, 0.6, 0.4, 0.0]) - 0.625).abs() < 1e-12);
        // Everything above one half.
        assert_eq!(contour_crossing(&ratios, &[1.0, 0.9, 0.8, 0.6]), 1.0);
        // Starts below.
        assert_eq!(contour_crossing(&ratios, &[0.4, 0.2, 0.1, 0.0]), 0.0);
        // Non-monotone: the first downward crossing wins.
        let wiggly = contour_crossing(&ratios, &[0.8, 0.3, 0.7, 0.1]);
        assert!((wiggly - (0.25 + 0.25 * 0.3 / 0.5)).abs() < 1e-12);
        // Exactly one half counts as above.
        assert_eq!(contour_crossing(&ratios, &[0.5, 0.5, 0.5, 0.5]), 1.0);
    }

    #[test]
    fn small_phase_diagram_has_sane_geometry() {
        let config = PhaseDiagramConfig {
            family: PolynomialFamily::Legendre,
            dimension: 2,
            order: 4,
            grid_resolution: 3,
            trials: 3,
            success_threshold: 1e-3,
            pipeline: Pipeline::plain(SamplingScheme::Standard),
            seed: 5,
        };
        let diagram = run_phase_diagram(&config).unwrap();
        assert_eq!(diagram.cardinality, 15);
        assert_eq!(diagram.cells.len(), 9);
        assert_eq!(diagram.contour.len(), 3);
        assert_eq!(diagram.trials.len(), 27);
        for cell in &diagram.cells {
            assert!(cell.sparsity >= 1 && cell.sparsity <= cell.samples);
            assert!(cell.samples <= diagram.cardinality);
            assert!((0.0..=1.0).contains(&cell.success_probability));
        }
        for point in &diagram.contour {
            assert!((0.0..=1.0).contains(&point.s_ratio));
        }
        // Fully sampled, mildly sparse: recovery is a square-system regime
        // and must succeed every time.
        let easy = diagram
            .cells
            .iter()
            .find(|c| c.m_ratio == 1.0 && c.s_ratio == 1.0 / 3.0)
            .unwrap();
        assert_eq!(easy.success_probability, 1.0);
        // Undersampled with s = M: information-theoretically hopeless.
        let hopeless = diagram
            .cells
            .iter()
            .find(|c| c.m_ratio == 1.0 / 3.0 && c.s_ratio == 1.0)
            .unwrap();
        assert_eq!(hopeless.sparsity, hopeless.samples);
        assert!(hopeless.success_probability <= 1.0 / 3.0);
    }

    #[test]
    fn phase_diagram_is_deterministic_under_parallelism() {
        let config = PhaseDiagramConfig {
            family: PolynomialFamily::Legendre,
            dimension: 2,
            order: 3,
            grid_resolution: 2,
            trials: 4,
            success_threshold: 1e-3,
            pipeline: Pipeline::plain(SamplingScheme::Standard),
            seed: 9,
        };
        let a = run_phase_diagram(&config).unwrap();
        let b = run_phase_diagram(&config).unwrap();
        let probs = |d: &PhaseDiagram| -> Vec<f64> {
            d.cells.iter().map(|c| c.success_probability).collect()
        };
        assert_eq!(probs(&a), probs(&b));
        let contour = |d: &PhaseDiagram| -> Vec<f64> {
            d.contour.iter().map(|c| c.s_ratio).collect()
        };
        assert_eq!(contour(&a), contour(&b));
        let errors = |d: &PhaseDiagram| -> Vec<Option<f64>> {
            d.trials
                .iter()
                .map(|t| t.outcome.as_ref().ok().and_then(|s| s.coefficient_error))
                .collect()
        };
        assert_eq!(errors(&a), errors(&b));
    }

    #[test]
    fn study_pairs_arms_and_reports_quartiles() {
        let (target, samples) = exact_recovery_setup();
        let config = StudyConfig {
            target,
            samples: samples + 8,
            noise_sigma: 0.05,
            trials: 2,
            validation_points: 30,
            arms: vec![
                StudyArm::new(
                    "standard",
                    Pipeline::plain(SamplingScheme::Standard)
                        .with_epsilon(EpsilonMode::CrossValidated),
                ),
                StudyArm::new(
                    "weighted",
                    Pipeline::plain(SamplingScheme::CoherenceOptimal)
                        .with_epsilon(EpsilonMode::CrossValidated),
                ),
            ],
            seed: 21,
        };
        let result = run_study(&config).unwrap();
        assert_eq!(result.cardinality, 15);
        assert_eq!(result.arms.len(), 2);
        for arm in &result.arms {
            assert_eq!(arm.trials.len(), 2);
            let [lo, mid, hi] = arm.coefficient_quartiles.unwrap();
            assert!(lo <= mid && mid <= hi, "{}: {lo} {mid} {hi}", arm.name);
            assert!(lo >= 0.0 && hi.is_finite());
            assert!(arm.median_validation_error().unwrap().is_finite());
        }
    }

    #[test]
    fn noise_study_sweeps_levels_and_sample_counts() {
        let (target, samples) = exact_recovery_setup();
        let config = NoiseStudyConfig {
            target,
            sample_counts: vec![samples, samples + 3],
            noise_levels: vec![0.0, 0.2],
            trials: 1,
            validation_points: 0,
            arms: vec![StudyArm::new(
                "standard",
                Pipeline::plain(SamplingScheme::Standard).with_epsilon(EpsilonMode::CrossValidated),
            )],
            seed: 2,
        };
        let result = run_noise_study(&config).unwrap();
        assert_eq!(result.levels.len(), 4);
        assert_eq!(result.levels[0].sigma, 0.0);
        assert_eq!(result.levels[0].samples, samples);
        assert_eq!(result.levels[1].samples, samples + 3);
        assert_eq!(result.levels[3].sigma, 0.2);
        for level in &result.levels {
            assert!(level.study.arms[0].median_coefficient_error().is_some());
        }
    }

    #[test]
    fn quantile_matches_frozen_values() {
        // Frozen against the standard linear-interpolation definition:
        // h = (n-1) q, value = x[floor h] + frac(h) (x[floor h + 1] - x[floor h]).
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.0), Some(1.0));
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 1.0), Some(3.0));
        assert_eq!(quantile(&[1.0, 10.0], 0.25), Some(3.25));
        assert_eq!(quantile(&[5.0], 0.9), Some(5.0));
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[1.0], 1.5), None);
        assert_eq!(median(&[4.0, 1.0, 9.0]), Some(4.0));
    }
}
