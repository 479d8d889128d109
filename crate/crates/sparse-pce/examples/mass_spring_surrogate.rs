// Build a polynomial chaos surrogate for a forced, undamped oscillator:
// the displacement at t = 20 as a function of three uncertain parameters
// (mass, stiffness, forcing frequency). The closed-form response is
// sampled at 150 random parameter draws and a sparse degree-10 Legendre
// expansion (286 terms) is fit by basis pursuit denoising, with the
// residual budget chosen by cross-validation.
use ndarray::Array1;
use sparse_pce::bpdn::{
    bpdn_solve, cross_validate_epsilon, default_epsilon_grid, BpdnConfig, ValidationSplit,
};
use sparse_pce::measure::{assemble, normalize_columns};
use sparse_pce::sampling::standard_samples;
use sparse_pce::targets::{expansion_value, TargetFunction};

fn main() {
    let samples = 150;
    let validation_points = 1000;
    let seed = 2;

    let instance = TargetFunction::MassSpring { forcing_amplitude: 1.0 }
        .instantiate()
        .unwrap();
    let basis = &instance.basis;
    println!(
        "oscillator displacement at t = 20: {} basis, d = {}, order {}, K = {}",
        basis.family().name(),
        basis.dimension(),
        basis.order(),
        basis.cardinality()
    );

    let set = standard_samples(basis, samples, seed).unwrap();
    let y: Array1<f64> = set
        .points
        .rows()
        .into_iter()
        .map(|row| instance.evaluate(row.as_slice().unwrap()).unwrap())
        .collect();
    let psi = assemble(basis, &set).unwrap().entries;

    // The response is smooth but not polynomial, so the right residual budget
    // is not obvious a priori; held-out prediction error picks it.
    let grid = default_epsilon_grid(y.view());
    let epsilon = cross_validate_epsilon(
        psi.view(),
        y.view(),
        ValidationSplit::Holdout,
        &grid,
        &BpdnConfig::default(),
        seed,
    )
    .unwrap();
    println!("cross-validated epsilon: {epsilon:.4e} (data norm {:.4e})", y.dot(&y).sqrt());

    let (normalized, norms) = normalize_columns(psi.view()).unwrap();
    let result = bpdn_solve(normalized.view(), y.view(), epsilon, &BpdnConfig::default()).unwrap();
    let coefficients = &result.coefficients / &norms;
    let active = coefficients.iter().filter(|v| v.abs() > 1e-8).count();
    println!(
        "fit: {} iterations, residual {:.3e}, {active} active of {} terms",
        result.iterations,
        result.residual_norm,
        basis.cardinality()
    );

    // Out-of-sample check on fresh draws.
    let fresh = standard_samples(basis, validation_points, seed + 1).unwrap();
    let mut err = 0.0;
    let mut norm = 0.0;
    for row in fresh.points.rows() {
        let point = row.as_slice().unwrap();
        let truth = instance.evaluate(point).unwrap();
        let predicted = expansion_value(basis, coefficients.view(), point).unwrap();
        err += (predicted - truth) * (predicted - truth);
        norm += truth * truth;
    }
    println!(
        "validation on {validation_points} fresh draws: relative l2 error {:.3e}",
        (err / norm).sqrt()
    );

    let mut top: Vec<(usize, f64)> = coefficients
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, v))
        .collect();
    top.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    println!("largest coefficients:");
    for (i, v) in top.iter().take(8) {
        println!("  {} {}: {v:+.5e}", i, basis.indices()[*i]);
    }
}
