// Choose the identity-penalty weight of the preconditioner design by
// cross-validation. With noisy data an aggressive design can overfit the
// noise, while a huge penalty pins the preconditioner to the identity;
// the validation split picks the compromise automatically.
use ndarray::Array1;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparse_pce::basis::{BasisSet, PolynomialFamily};
use sparse_pce::measure::assemble;
use sparse_pce::precond::{cross_validate_lambda, default_lambda_grid, LambdaCvConfig, IDENTITY_FALLBACK};
use sparse_pce::sampling::standard_samples;
use sparse_pce::targets::{expansion_value, manufactured_expansion};

fn main() {
    let dimension = 3;
    let order = 4;
    let sparsity = 6;
    let samples = 32;
    let noise = 1e-2;
    let seed = 42;

    let basis = BasisSet::total_degree(PolynomialFamily::Legendre, dimension, order).unwrap();
    let set = standard_samples(&basis, samples, seed).unwrap();
    let psi = assemble(&basis, &set).unwrap().entries;
    let truth = manufactured_expansion(&basis, sparsity, seed).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let u: Array1<f64> = set
        .points
        .rows()
        .into_iter()
        .map(|row| {
            expansion_value(&basis, truth.view(), row.as_slice().unwrap()).unwrap()
                + noise * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();

    println!(
        "system {}x{}, noise sigma = {noise:.0e}, lambda grid {:?}",
        psi.nrows(),
        psi.ncols(),
        default_lambda_grid()
    );

    let selection =
        cross_validate_lambda(psi.view(), u.view(), &default_lambda_grid(), seed, &LambdaCvConfig::default())
            .unwrap();

    println!();
    println!(
        "{:>10}  {:>16}  {:>10}  {:>6}  {:>9}",
        "lambda", "validation error", "epsilon", "outer", "converged"
    );
    for c in &selection.candidates {
        match (c.validation_error, c.epsilon) {
            (Some(err), Some(eps)) => println!(
                "{:>10.0e}  {err:>16.6e}  {eps:>10.3e}  {:>6}  {:>9}",
                c.lambda,
                c.outer_iterations.unwrap_or(0),
                c.design_converged.unwrap_or(false)
            ),
            _ => println!("{:>10.0e}  {:>16}", c.lambda, "design failed"),
        }
    }

    println!();
    if selection.lambda == IDENTITY_FALLBACK {
        println!("every candidate failed; falling back to the identity preconditioner");
    } else {
        println!(
            "selected lambda = {:.0e} with validation error {:.6e} (epsilon {:.3e})",
            selection.lambda, selection.validation_error, selection.epsilon
        );
    }
    println!(
        "split: {} training rows, {} validation rows",
        selection.training_rows.len(),
        selection.validation_rows.len()
    );
}
