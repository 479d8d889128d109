//! Scratch probe for the noisy-Rosenbrock study: runs the real study pipeline
//! at reduced trial counts for candidate lambda grids and prints per-trial
//! picks and errors. Delete before shipping.

use sparse_pce::experiments::{
    run_study, EpsilonMode, Pipeline, StudyArm, StudyConfig, StudyResult,
};
use sparse_pce::precond::DesignConfig;
use sparse_pce::sampling::SamplingScheme;
use sparse_pce::targets::TargetFunction;

fn study_design_budget() -> DesignConfig {
    let mut design = DesignConfig::default();
    design.max_outer_iterations = 6;
    design.inner.max_iterations = 60;
    design
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn errors(study: &StudyResult, arm: usize) -> Vec<f64> {
    study.arms[arm]
        .trials
        .iter()
        .map(|t| t.as_ref().unwrap().coefficient_error.unwrap())
        .collect()
}

fn main() {
    let trials = 12;
    for grid in [vec![1e-2, 1e2, 1e6], vec![1e-2, 1.0, 1e6]] {
        println!("=== grid {:?} ===", grid);
        let mut preconditioned = Pipeline::preconditioned(SamplingScheme::Standard)
            .with_epsilon(EpsilonMode::CrossValidated);
        preconditioned.design = study_design_budget();
        preconditioned.lambda_grid = grid.clone();
        let plain =
            Pipeline::plain(SamplingScheme::Standard).with_epsilon(EpsilonMode::CrossValidated);

        for (sigma, seed) in [(1e-3, 81u64), (1e-1, 82u64)] {
            let study = run_study(&StudyConfig {
                target: TargetFunction::Rosenbrock,
                samples: 120,
                noise_sigma: sigma,
                trials,
                validation_points: 0,
                arms: vec![
                    StudyArm::new("plain", plain.clone()),
                    StudyArm::new("preconditioned", preconditioned.clone()),
                ],
                seed,
            })
            .unwrap();

            println!("--- sigma {sigma:.0e} ---");
            let mut at_max = 0;
            for t in 0..trials {
                let p = study.arms[0].trials[t].as_ref().unwrap();
                let q = study.arms[1].trials[t].as_ref().unwrap();
                let lambda = q.lambda.unwrap();
                if lambda == *grid.last().unwrap() {
                    at_max += 1;
                }
                println!(
                    "trial {t:2}: plain {:.3e}  precond {:.3e}  lambda {:>8.0e}  eps {:.3e}",
                    p.coefficient_error.unwrap(),
                    q.coefficient_error.unwrap(),
                    lambda,
                    q.epsilon,
                );
            }
            println!(
                "medians: plain {:.3e}  precond {:.3e}  at_max {at_max}/{trials}",
                median(errors(&study, 0)),
                median(errors(&study, 1)),
            );
        }
    }
}
