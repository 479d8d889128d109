// Map the recovery phase transition: for a grid of undersampling ratios
// M/K and sparsity ratios s/M, plant random expansions and count how
// often exact-fit basis pursuit recovers them. Below the transition
// curve recovery is near-certain, above it near-impossible.
//
// This desk-scale run uses a reduced order and grid so it finishes in
// about a minute; the `phase-diagram` subcommand of the CLI runs the
// full-size version and writes cells.csv / contour.csv.
use sparse_pce::basis::PolynomialFamily;
use sparse_pce::experiments::{run_phase_diagram, Pipeline, PhaseDiagramConfig};
use sparse_pce::sampling::SamplingScheme;

fn main() {
    let config = PhaseDiagramConfig {
        family: PolynomialFamily::Legendre,
        dimension: 2,
        order: 10,
        grid_resolution: 6,
        trials: 8,
        success_threshold: 1e-3,
        pipeline: Pipeline::plain(SamplingScheme::Standard),
        seed: 1,
    };

    println!(
        "phase diagram: legendre d = {}, order {}, {}x{} grid, {} trials per cell",
        config.dimension, config.order, config.grid_resolution, config.grid_resolution, config.trials
    );

    let diagram = run_phase_diagram(&config).unwrap();
    println!("basis cardinality K = {}", diagram.cardinality);
    println!();

    // Success probability grid: rows are s/M (sparsest at the bottom),
    // columns are M/K increasing to the right.
    println!("success probability (rows: s/M top-down, columns: M/K left-right)");
    print!("{:>6}", "");
    for i in 0..config.grid_resolution {
        print!("{:>7.2}", (i + 1) as f64 / config.grid_resolution as f64);
    }
    println!();
    for si in (0..config.grid_resolution).rev() {
        let s_ratio = (si + 1) as f64 / config.grid_resolution as f64;
        print!("{s_ratio:>6.2}");
        for mi in 0..config.grid_resolution {
            let cell = &diagram.cells[mi * config.grid_resolution + si];
            if cell.feasible {
                print!("{:>7.2}", cell.success_probability);
            } else {
                print!("{:>7}", "-");
            }
        }
        println!();
    }

    println!();
    println!("50% success contour (one crossing per M/K column):");
    for p in &diagram.contour {
        println!("  M/K = {:.2}: s/M = {:.3}", p.m_ratio, p.s_ratio);
    }
}
