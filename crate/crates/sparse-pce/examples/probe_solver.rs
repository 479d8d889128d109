//! Temporary solver-reliability check on subsampled systems (deleted before
//! release).

use ndarray::{Array1, Axis};
use sparse_pce::bpdn::{bpdn_solve, BpdnConfig};
use sparse_pce::measure::{assemble, normalize_columns};
use sparse_pce::rng::derive_seed;
use sparse_pce::sampling::standard_samples;
use sparse_pce::targets::{relative_error, TargetFunction};

fn main() {
    let target = TargetFunction::Rosenbrock.instantiate().unwrap();
    let basis = &target.basis;
    let truth = target.exact_coefficients.as_ref().unwrap();

    let default_cfg = BpdnConfig::default();
    let cranked = BpdnConfig {
        max_iterations: Some(50 * 120 * 10),
        opt_tolerance: 1e-8,
        ..BpdnConfig::default()
    };

    for rows in [90usize, 120] {
        let mut default_fails = 0;
        let mut cranked_fails = 0;
        println!("--- {rows} rows, noiseless, eps = 0 ---");
        for seed in 0..30u64 {
            let set = standard_samples(basis, 120, derive_seed(seed, &[1])).unwrap();
            let a_full = assemble(basis, &set).unwrap().entries;
            let mut y_full = Array1::zeros(120);
            for (i, row) in set.points.outer_iter().enumerate() {
                y_full[i] = target.evaluate(row.to_vec().as_slice()).unwrap();
            }
            let keep: Vec<usize> = (0..rows).collect();
            let a = a_full.select(Axis(0), &keep);
            let y = y_full.select(Axis(0), &keep);

            let (a_scaled, norms) = normalize_columns(a.view()).unwrap();
            let mut errs = [0.0f64; 2];
            for (which, cfg) in [&default_cfg, &cranked].iter().enumerate() {
                let mut fit = bpdn_solve(a_scaled.view(), y.view(), 0.0, cfg).unwrap();
                fit.coefficients = &fit.coefficients / &norms;
                errs[which] =
                    relative_error(fit.coefficients.view(), truth.view()).unwrap();
            }
            if errs[0] > 1e-3 {
                default_fails += 1;
            }
            if errs[1] > 1e-3 {
                cranked_fails += 1;
            }
            if errs[0] > 1e-3 || errs[1] > 1e-3 {
                println!("seed {seed}: default {:.3e}, cranked {:.3e}", errs[0], errs[1]);
            }
        }
        println!("fails out of 30: default {default_fails}, cranked {cranked_fails}");
    }
}
