// Compare sampling straight from the input measure against the
// coherence-optimal scheme that biases draws toward regions where the
// basis is large and compensates with row weights. The weighted matrix
// has lower mutual coherence, which translates into better recovery at
// high polynomial order.
use ndarray::Array1;
use sparse_pce::basis::{BasisSet, PolynomialFamily};
use sparse_pce::bpdn::{bpdn_solve, BpdnConfig};
use sparse_pce::measure::{assemble, mutual_coherence, normalize_columns};
use sparse_pce::sampling::{coherence_optimal_samples, standard_samples, ChainConfig, SampleSet};
use sparse_pce::targets::{expansion_value, manufactured_expansion, relative_error};

fn main() {
    let dimension = 2;
    let order = 10;
    let sparsity = 12;
    let samples = 55;
    let seeds = [11u64, 12, 13, 14, 15];

    let basis = BasisSet::total_degree(PolynomialFamily::Legendre, dimension, order).unwrap();
    println!(
        "legendre basis, d = {dimension}, order {order}, K = {} terms, M = {samples} samples",
        basis.cardinality()
    );
    println!();
    println!("{:>6}  {:>12} {:>12}  {:>12} {:>12}", "seed", "mu standard", "mu weighted", "err standard", "err weighted");

    let mut coherence_wins = 0;
    let mut error_wins = 0;
    for seed in seeds {
        let truth = manufactured_expansion(&basis, sparsity, seed).unwrap();

        let standard = standard_samples(&basis, samples, seed).unwrap();
        let weighted =
            coherence_optimal_samples(&basis, samples, seed, &ChainConfig::default()).unwrap();

        let (mu_standard, err_standard) = recover(&basis, &standard, &truth);
        let (mu_weighted, err_weighted) = recover(&basis, &weighted, &truth);

        if mu_weighted < mu_standard {
            coherence_wins += 1;
        }
        if err_weighted < err_standard {
            error_wins += 1;
        }
        println!("{seed:>6}  {mu_standard:>12.4} {mu_weighted:>12.4}  {err_standard:>12.3e} {err_weighted:>12.3e}");
    }

    println!();
    println!(
        "weighted sampling lowered coherence in {coherence_wins}/{} runs and error in {error_wins}/{}",
        seeds.len(),
        seeds.len()
    );
}

/// Mutual coherence of the (weighted) measurement matrix and the relative
/// coefficient error of an exact-fit recovery from it.
fn recover(basis: &BasisSet, set: &SampleSet, truth: &Array1<f64>) -> (f64, f64) {
    let mut matrix = assemble(basis, set).unwrap().entries;
    let mut y: Array1<f64> = set
        .points
        .rows()
        .into_iter()
        .map(|row| expansion_value(basis, truth.view(), row.as_slice().unwrap()).unwrap())
        .collect();

    // The sampling weights multiply both the matrix rows and the data so the
    // weighted least-squares problem matches the continuous inner product.
    for (i, &w) in set.weights.iter().enumerate() {
        if w != 1.0 {
            matrix.row_mut(i).mapv_inplace(|v| v * w);
            y[i] *= w;
        }
    }

    let mu = mutual_coherence(matrix.view()).unwrap();
    let (normalized, norms) = normalize_columns(matrix.view()).unwrap();
    let result = bpdn_solve(normalized.view(), y.view(), 0.0, &BpdnConfig::default()).unwrap();
    let recovered = &result.coefficients / &norms;
    (mu, relative_error(recovered.view(), truth.view()).unwrap())
}
