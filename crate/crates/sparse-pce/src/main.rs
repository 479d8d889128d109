//! Command-line front end: each subcommand wires flags into the library's
//! experiment drivers and writes the result files (`errors.csv`, `meta.json`,
//! and for phase diagrams `cells.csv` + `contour.csv`) into `--out`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sparse_pce::basis::{BasisSet, PolynomialFamily};
use sparse_pce::experiments::{
    run_noise_study, run_phase_diagram, run_study, EpsilonMode, NoiseStudyConfig,
    PhaseDiagramConfig, Pipeline, StudyArm, StudyConfig,
};
use sparse_pce::measure::{assemble, mutual_coherence};
use sparse_pce::precond::{
    cross_validate_lambda, design_preconditioner, DesignConfig, LambdaCvConfig,
    PreconditionerDesign, IDENTITY_FALLBACK,
};
use sparse_pce::report;
use sparse_pce::rng::derive_seed;
use sparse_pce::sampling::{coherence_optimal_samples, standard_samples, SamplingScheme};
use sparse_pce::targets::{manufactured_expansion, TargetFunction};
use sparse_pce::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "sparse-pce",
    version,
    about = "Sparse polynomial chaos recovery experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map the probability of exact recovery over the (M/K, s/M) plane.
    PhaseDiagram(PhaseDiagramArgs),
    /// Recover one target repeatedly and report per-trial errors.
    Recover(RecoverArgs),
    /// Fit a surrogate for the forced-oscillator displacement and score it
    /// on held-out points.
    MassSpring(MassSpringArgs),
    /// Noisy Rosenbrock study; always runs a plain arm and a preconditioned
    /// arm so they can be compared.
    RosenbrockNoise(RosenbrockNoiseArgs),
    /// Design a preconditioner for one sampled system and save it.
    DesignPrecond(DesignPrecondArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Write errors.csv (plus cells.csv/contour.csv for phase diagrams) and
    /// meta.json.
    Csv,
    /// Bundle everything into one results.json.
    Json,
}

fn parse_family(s: &str) -> Result<PolynomialFamily> {
    s.parse()
}

fn parse_scheme(s: &str) -> Result<SamplingScheme> {
    s.parse()
}

#[derive(Args)]
struct CommonArgs {
    /// Polynomial family of the basis (ignored by the fixed-basis targets).
    #[arg(long, default_value = "legendre", value_parser = parse_family)]
    family: PolynomialFamily,
    /// Input dimensions (ignored by the fixed-basis targets).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Total-degree order (ignored by the fixed-basis targets).
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// How sample points are drawn.
    #[arg(long, default_value = "standard", value_parser = parse_scheme)]
    sampling: SamplingScheme,
    /// Design a coherence-improving preconditioner before solving.
    #[arg(long, value_enum, default_value_t = OnOff::Off)]
    precondition: OnOff,
    /// Comma-separated identity-penalty candidates for the preconditioner
    /// cross-validation.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Master random seed; every run is a pure function of seed + flags.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl CommonArgs {
    fn pipeline(&self, epsilon: EpsilonMode) -> Pipeline {
        let mut pipeline = if self.precondition == OnOff::On {
            Pipeline::preconditioned(self.sampling)
        } else {
            Pipeline::plain(self.sampling)
        };
        if let Some(grid) = &self.lambda_grid {
            pipeline.lambda_grid = grid.clone();
        }
        pipeline.with_epsilon(epsilon)
    }
}

fn pipeline_name(pipeline: &Pipeline) -> String {
    if pipeline.preconditioned {
        format!("{}+precond", pipeline.scheme.name())
    } else {
        pipeline.scheme.name().to_string()
    }
}

/// `--epsilon` accepts a number, `zero`, or `cv`; unset picks `cv` for noisy
/// data and `zero` for clean data.
fn epsilon_mode(flag: Option<&str>, sigma: f64) -> Result<EpsilonMode> {
    match flag {
        None => Ok(if sigma > 0.0 {
            EpsilonMode::CrossValidated
        } else {
            EpsilonMode::Zero
        }),
        Some("cv") => Ok(EpsilonMode::CrossValidated),
        Some("zero") => Ok(EpsilonMode::Zero),
        Some(text) => text
            .parse::<f64>()
            .map(EpsilonMode::Fixed)
            .map_err(|_| Error::Parse(format!("--epsilon must be a number, 'zero', or 'cv', got '{text}'"))),
    }
}

#[derive(Args)]
struct PhaseDiagramArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Cells per axis.
    #[arg(long = "grid-res", default_value_t = 10)]
    grid_res: usize,
    /// Trials per cell.
    #[arg(long, default_value_t = 25)]
    trials: usize,
    /// Relative coefficient error below which a trial counts as success.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Run the 50x50 grid with 100 trials per cell (slow).
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    /// Random exactly-sparse expansion in the configured basis.
    Manufactured,
    /// Degree-20 polynomial in two Gaussian inputs.
    LowDimHighOrder,
    /// Quadratic in twenty uniform inputs.
    HighDimLowOrder,
    /// Generalised Rosenbrock in six uniform inputs.
    Rosenbrock,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = TargetArg::Manufactured)]
    target: TargetArg,
    /// Sample count.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Nonzero coefficients of the manufactured target.
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Observation-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Residual budget: a number, 'zero', or 'cv' (default: cv when noisy,
    /// zero when clean).
    #[arg(long)]
    epsilon: Option<String>,
    /// Held-out points for the prediction error; 0 skips it.
    #[arg(long, default_value_t = 0)]
    validation: usize,
}

#[derive(Args)]
struct MassSpringArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 150)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Forcing amplitude of the oscillator.
    #[arg(long, default_value_t = 1.0)]
    f_amp: f64,
    /// Observation-noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Residual budget: a number, 'zero', or 'cv'.
    #[arg(long)]
    epsilon: Option<String>,
    /// Held-out points for the prediction error.
    #[arg(long, default_value_t = 1000)]
    validation: usize,
}

#[derive(Args)]
struct RosenbrockNoiseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated sample counts to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [120])]
    samples: Vec<usize>,
    /// Comma-separated noise standard deviations.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 1e-2, 1e-1])]
    sigma_grid: Vec<f64>,
    #[arg(long, default_value_t = 25)]
    trials: usize,
    /// Held-out points for the prediction error; 0 skips it.
    #[arg(long, default_value_t = 0)]
    validation: usize,
}

#[derive(Args)]
struct DesignPrecondArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 80)]
    samples: usize,
    /// Fix the identity-penalty weight; omitting it cross-validates over
    /// the lambda grid using a manufactured sparse target.
    #[arg(long)]
    lambda: Option<f64>,
    /// Sparsity of the manufactured target used for cross-validation.
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::PhaseDiagram(args) => cmd_phase_diagram(args),
        Command::Recover(args) => cmd_recover(args),
        Command::MassSpring(args) => cmd_mass_spring(args),
        Command::RosenbrockNoise(args) => cmd_rosenbrock_noise(args),
        Command::DesignPrecond(args) => cmd_design_precond(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_phase_diagram(args: PhaseDiagramArgs) -> Result<()> {
    let c = &args.common;
    let (grid_res, trials) = if args.paper_scale {
        eprintln!(
            "warning: paper-scale phase diagram (50x50 cells, 100 trials each) \
             can take hours"
        );
        (50, 100)
    } else {
        (args.grid_res, args.trials)
    };
    let pipeline = c.pipeline(EpsilonMode::Zero);
    let config = PhaseDiagramConfig {
        family: c.family,
        dimension: c.dim,
        order: c.order,
        grid_resolution: grid_res,
        trials,
        success_threshold: args.threshold,
        pipeline: pipeline.clone(),
        seed: c.seed,
    };
    let diagram = run_phase_diagram(&config)?;
    let records = report::phase_diagram_records(&diagram);

    let echo = json!({
        "family": c.family.name(),
        "dim": c.dim,
        "order": c.order,
        "grid_resolution": grid_res,
        "trials": trials,
        "success_threshold": args.threshold,
        "seed": c.seed,
        "pipeline": report::pipeline_json(&pipeline)?,
    });
    let meta = report::meta_json("phase-diagram", echo, &records);

    std::fs::create_dir_all(&c.out)?;
    match c.format {
        Format::Csv => {
            report::write_phase_cells_path(&diagram, c.out.join("cells.csv"))?;
            report::write_contour_path(&diagram, c.out.join("contour.csv"))?;
            report::write_error_records_path(&records, c.out.join("errors.csv"))?;
            report::write_json_path(&meta, c.out.join("meta.json"))?;
        }
        Format::Json => {
            let bundle = json!({
                "meta": meta,
                "diagram": report::phase_diagram_json(&diagram),
                "trials": report::records_json(&records),
            });
            report::write_json_path(&bundle, c.out.join("results.json"))?;
        }
    }

    println!(
        "{} basis: K = {}, {}x{} cells, {} trials each",
        c.family.name(),
        diagram.cardinality,
        grid_res,
        grid_res,
        trials
    );
    for point in &diagram.contour {
        println!(
            "M/K = {:.2}: success falls below 1/2 at s/M = {:.3}",
            point.m_ratio, point.s_ratio
        );
    }
    println!("wrote {}", c.out.display());
    Ok(())
}

fn cmd_recover(args: RecoverArgs) -> Result<()> {
    let c = &args.common;
    let epsilon = epsilon_mode(args.epsilon.as_deref(), args.sigma)?;
    let pipeline = c.pipeline(epsilon);
    let target = match args.target {
        TargetArg::Manufactured => TargetFunction::Manufactured {
            family: c.family,
            dimension: c.dim,
            order: c.order,
            sparsity: args.sparsity,
            seed: derive_seed(c.seed, &[7, 7]),
        },
        TargetArg::LowDimHighOrder => TargetFunction::LowDimHighOrder,
        TargetArg::HighDimLowOrder => TargetFunction::HighDimLowOrder,
        TargetArg::Rosenbrock => TargetFunction::Rosenbrock,
    };
    let study = run_study(&StudyConfig {
        target: target.clone(),
        samples: args.samples,
        noise_sigma: args.sigma,
        trials: args.trials,
        validation_points: args.validation,
        arms: vec![StudyArm::new(pipeline_name(&pipeline), pipeline.clone())],
        seed: c.seed,
    })?;
    let sparsity = matches!(args.target, TargetArg::Manufactured).then_some(args.sparsity);
    let records = report::study_records(
        target.name(),
        (args.sigma > 0.0).then_some(args.sigma),
        args.samples,
        sparsity,
        &study,
    );

    let echo = json!({
        "target": target.name(),
        "family": c.family.name(),
        "dim": c.dim,
        "order": c.order,
        "samples": args.samples,
        "sparsity": sparsity,
        "sigma": args.sigma,
        "trials": args.trials,
        "validation": args.validation,
        "seed": c.seed,
        "pipeline": report::pipeline_json(&pipeline)?,
    });
    write_study_outputs(c, "recover", echo, &records)?;
    print_study_summary(&study);
    println!("wrote {}", c.out.display());
    Ok(())
}

fn cmd_mass_spring(args: MassSpringArgs) -> Result<()> {
    let c = &args.common;
    let epsilon = epsilon_mode(args.epsilon.as_deref(), args.sigma)?;
    let pipeline = c.pipeline(epsilon);
    let target = TargetFunction::MassSpring {
        forcing_amplitude: args.f_amp,
    };
    let study = run_study(&StudyConfig {
        target: target.clone(),
        samples: args.samples,
        noise_sigma: args.sigma,
        trials: args.trials,
        validation_points: args.validation,
        arms: vec![StudyArm::new(pipeline_name(&pipeline), pipeline.clone())],
        seed: c.seed,
    })?;
    let records = report::study_records(
        target.name(),
        (args.sigma > 0.0).then_some(args.sigma),
        args.samples,
        None,
        &study,
    );

    let echo = json!({
        "target": target.name(),
        "f_amp": args.f_amp,
        "samples": args.samples,
        "sigma": args.sigma,
        "trials": args.trials,
        "validation": args.validation,
        "seed": c.seed,
        "pipeline": report::pipeline_json(&pipeline)?,
    });
    write_study_outputs(c, "mass-spring", echo, &records)?;
    print_study_summary(&study);
    println!("wrote {}", c.out.display());
    Ok(())
}

fn cmd_rosenbrock_noise(args: RosenbrockNoiseArgs) -> Result<()> {
    let c = &args.common;
    // --precondition is ignored here: the whole point of this study is the
    // paired comparison.
    let mut plain = Pipeline::plain(c.sampling).with_epsilon(EpsilonMode::CrossValidated);
    let mut preconditioned =
        Pipeline::preconditioned(c.sampling).with_epsilon(EpsilonMode::CrossValidated);
    if let Some(grid) = &c.lambda_grid {
        plain.lambda_grid = grid.clone();
        preconditioned.lambda_grid = grid.clone();
    }
    let config = NoiseStudyConfig {
        target: TargetFunction::Rosenbrock,
        sample_counts: args.samples.clone(),
        noise_levels: args.sigma_grid.clone(),
        trials: args.trials,
        validation_points: args.validation,
        arms: vec![
            StudyArm::new(pipeline_name(&plain), plain.clone()),
            StudyArm::new(pipeline_name(&preconditioned), preconditioned.clone()),
        ],
        seed: c.seed,
    };
    let result = run_noise_study(&config)?;
    let records = report::noise_study_records(&result);

    let echo = json!({
        "target": "rosenbrock",
        "samples": args.samples,
        "sigma_grid": args.sigma_grid,
        "trials": args.trials,
        "validation": args.validation,
        "seed": c.seed,
        "plain": report::pipeline_json(&plain)?,
        "preconditioned": report::pipeline_json(&preconditioned)?,
    });
    write_study_outputs(c, "rosenbrock-noise", echo, &records)?;
    for level in &result.levels {
        println!("sigma = {:>8.1e}, M = {}:", level.sigma, level.samples);
        for arm in &level.study.arms {
            match arm.median_coefficient_error() {
                Some(e) => println!("  {:<28} median error {e:.3e}", arm.name),
                None => println!("  {:<28} no completed trials", arm.name),
            }
        }
    }
    println!("wrote {}", c.out.display());
    Ok(())
}

fn cmd_design_precond(args: DesignPrecondArgs) -> Result<()> {
    let c = &args.common;
    let basis = BasisSet::total_degree(c.family, c.dim, c.order)?;
    let sample_seed = derive_seed(c.seed, &[1]);
    let set = match c.sampling {
        SamplingScheme::Standard => standard_samples(&basis, args.samples, sample_seed)?,
        SamplingScheme::CoherenceOptimal => coherence_optimal_samples(
            &basis,
            args.samples,
            sample_seed,
            &Default::default(),
        )?,
    };
    let raw = assemble(&basis, &set)?.entries;
    let mut weighted = raw.clone();
    for (i, mut row) in weighted.outer_iter_mut().enumerate() {
        let w = set.weights[i];
        if w != 1.0 {
            row.map_inplace(|v| *v *= w);
        }
    }

    let grid = c
        .lambda_grid
        .clone()
        .unwrap_or_else(sparse_pce::precond::default_lambda_grid);
    let (design, candidates) = match args.lambda {
        Some(lambda) => (
            design_preconditioner(
                weighted.view(),
                lambda,
                &DesignConfig::default(),
                derive_seed(c.seed, &[3]),
            )?,
            None,
        ),
        None => {
            // Synthetic sparse data so the identity-penalty weight can be
            // scored by prediction error.
            let coefficients =
                manufactured_expansion(&basis, args.sparsity, derive_seed(c.seed, &[7, 7]))?;
            let mut u = raw.dot(&coefficients);
            for (i, v) in u.iter_mut().enumerate() {
                *v *= set.weights[i];
            }
            let selection = cross_validate_lambda(
                weighted.view(),
                u.view(),
                &grid,
                derive_seed(c.seed, &[3]),
                &LambdaCvConfig::default(),
            )?;
            let design = if selection.lambda == IDENTITY_FALLBACK {
                PreconditionerDesign {
                    matrix: ndarray::Array2::eye(args.samples),
                    lambda: IDENTITY_FALLBACK,
                    objective_history: Vec::new(),
                    outer_iterations: 0,
                    converged: true,
                }
            } else {
                design_preconditioner(
                    weighted.view(),
                    selection.lambda,
                    &DesignConfig::default(),
                    derive_seed(c.seed, &[3]),
                )?
            };
            (design, Some(selection.candidates))
        }
    };

    let mu_before = mutual_coherence(weighted.view())?;
    let mu_after = mutual_coherence(design.matrix.dot(&weighted).view())?;

    std::fs::create_dir_all(&c.out)?;
    design.save_json(c.out.join("preconditioner.json"))?;
    design.save_matrix_csv(c.out.join("preconditioner.csv"))?;
    let echo = json!({
        "family": c.family.name(),
        "dim": c.dim,
        "order": c.order,
        "samples": args.samples,
        "sampling": c.sampling.name(),
        "lambda_flag": args.lambda,
        "lambda_grid": grid,
        "sparsity": args.sparsity,
        "seed": c.seed,
        "design": report::design_json(&DesignConfig::default()),
    });
    let mut meta = report::meta_json("design-precond", echo, &[]);
    meta["lambda"] = report::json_f64(design.lambda);
    meta["outer_iterations"] = json!(design.outer_iterations);
    meta["converged"] = json!(design.converged);
    meta["coherence_before"] = json!(mu_before);
    meta["coherence_after"] = json!(mu_after);
    if let Some(candidates) = candidates {
        meta["candidates"] = serde_json::to_value(candidates)?;
    }
    report::write_json_path(&meta, c.out.join("meta.json"))?;

    println!(
        "designed {}x{} preconditioner at lambda = {}",
        args.samples,
        args.samples,
        if design.lambda.is_finite() {
            format!("{}", design.lambda)
        } else {
            "identity fallback".to_string()
        }
    );
    println!("coherence {mu_before:.4} -> {mu_after:.4}");
    println!("wrote {}", c.out.display());
    Ok(())
}

/// Shared tail of the study-style subcommands: errors.csv + meta.json, or a
/// single results.json bundle.
fn write_study_outputs(
    c: &CommonArgs,
    command: &str,
    echo: serde_json::Value,
    records: &[report::TrialRecord],
) -> Result<()> {
    let meta = report::meta_json(command, echo, records);
    std::fs::create_dir_all(&c.out)?;
    match c.format {
        Format::Csv => {
            report::write_error_records_path(records, c.out.join("errors.csv"))?;
            report::write_json_path(&meta, c.out.join("meta.json"))?;
        }
        Format::Json => {
            let bundle = json!({
                "meta": meta,
                "trials": report::records_json(records),
            });
            report::write_json_path(&bundle, c.out.join("results.json"))?;
        }
    }
    Ok(())
}

fn print_study_summary(study: &sparse_pce::experiments::StudyResult) {
    println!("K = {}", study.cardinality);
    for arm in &study.arms {
        let completed = arm.trials.iter().filter(|t| t.is_ok()).count();
        println!("{}: {completed}/{} trials completed", arm.name, arm.trials.len());
        if let Some([lo, mid, hi]) = arm.coefficient_quartiles {
            println!("  coefficient error quartiles {lo:.3e} / {mid:.3e} / {hi:.3e}");
        }
        if let Some([lo, mid, hi]) = arm.validation_quartiles {
            println!("  validation error quartiles  {lo:.3e} / {mid:.3e} / {hi:.3e}");
        }
    }
}
