// Recover a sparse polynomial chaos expansion from far fewer model
// evaluations than basis terms: plant a random 6-term expansion in a
// 45-term Legendre basis, sample it at 25 points, and solve the
// basis-pursuit problem.
use sparse_pce::basis::{BasisSet, PolynomialFamily};
use sparse_pce::bpdn::{bpdn_solve, BpdnConfig};
use sparse_pce::measure::{assemble, mutual_coherence, normalize_columns};
use sparse_pce::sampling::standard_samples;
use sparse_pce::targets::{expansion_value, manufactured_expansion, relative_error};

fn main() {
    let dimension = 2;
    let order = 8;
    let sparsity = 6;
    let samples = 30;
    let seed = 7;

    let basis = BasisSet::total_degree(PolynomialFamily::Legendre, dimension, order).unwrap();
    println!(
        "basis: {} in d = {dimension} up to total degree {order} -> K = {} terms",
        basis.family().name(),
        basis.cardinality()
    );

    let truth = manufactured_expansion(&basis, sparsity, seed).unwrap();
    println!("planted {sparsity} nonzero coefficients, sampling M = {samples} points");

    // Evaluate the unknown model at random inputs; this is the only place
    // the truth is used.
    let set = standard_samples(&basis, samples, seed).unwrap();
    let y = set
        .points
        .rows()
        .into_iter()
        .map(|row| expansion_value(&basis, truth.view(), row.as_slice().unwrap()).unwrap())
        .collect::<ndarray::Array1<f64>>();

    let matrix = assemble(&basis, &set).unwrap();
    println!(
        "measurement matrix {}x{}, mutual coherence {:.3}",
        matrix.nrows(),
        matrix.ncols(),
        mutual_coherence(matrix.entries.view()).unwrap()
    );

    // Exact-fit basis pursuit on the column-normalised system; the
    // coefficients are rescaled back afterwards.
    let (normalized, norms) = normalize_columns(matrix.entries.view()).unwrap();
    let result = bpdn_solve(normalized.view(), y.view(), 0.0, &BpdnConfig::default()).unwrap();
    let recovered = &result.coefficients / &norms;

    println!(
        "solver: {} iterations, converged = {}, residual {:.2e}",
        result.iterations, result.converged, result.residual_norm
    );
    println!(
        "relative coefficient error: {:.2e}",
        relative_error(recovered.view(), truth.view()).unwrap()
    );

    let mut found: Vec<(usize, f64)> = recovered
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > 1e-6)
        .map(|(i, &v)| (i, v))
        .collect();
    found.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    println!("recovered support (index: value vs truth):");
    for (i, v) in found {
        println!("  {:>3} {}: {v:+.6} vs {:+.6}", i, basis.indices()[i], truth[i]);
    }
}
