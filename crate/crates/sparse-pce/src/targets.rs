//! Reference target functions and exact coefficient vectors for scoring
//! recovery experiments.
//!
//! Polynomial targets (sparse monomial sums and the generalised Rosenbrock
//! function) are converted to exact orthonormal-basis coefficients by
//! projection: every monomial factorises across dimensions, so each
//! coefficient is a product of one-dimensional integrals `∫ x^p ψ_a dρ`
//! computed by Gauss quadrature that is exact for polynomials. This works in
//! any dimension (the 20-dimensional quadratic target would be hopeless for
//! a tensorised rule but costs nothing factorised).
//!
//! The oscillator target is not polynomial, so no exact coefficient vector
//! exists; its surrogates are scored on held-out evaluations of the closed
//! form instead.

use crate::basis::{univariate_table, BasisSet, PolynomialFamily};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A polynomial in monomial form: a sum of `coefficient * prod_i x_i^e_i`
/// terms. Exponent vectors all share the ambient dimension.
#[derive(Clone, Debug)]
pub struct SparsePolynomial {
    dimension: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl SparsePolynomial {
    /// Build from raw terms, merging duplicate exponent patterns.
    pub fn new(dimension: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exponents, coefficient) in terms {
            if exponents.len() != dimension {
                return Err(Error::ShapeMismatch(format!(
                    "term has {} exponents in a {dimension}-dimensional polynomial",
                    exponents.len()
                )));
            }
            *merged.entry(exponents).or_insert(0.0) += coefficient;
        }
        merged.retain(|_, c| *c != 0.0);
        Ok(SparsePolynomial {
            dimension,
            terms: merged.into_iter().collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(e, _)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exponents, coefficient)| {
                coefficient
                    * exponents
                        .iter()
                        .zip(point)
                        .map(|(&e, &x)| x.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }
}

/// Exact orthonormal coefficients of a polynomial: `c_alpha = <f, psi_alpha>`
/// under the basis measure, computed term by term as products of
/// one-dimensional moments.
///
/// The one-dimensional rule uses enough nodes to integrate `x^p psi_a`
/// exactly for every exponent/degree pair that occurs, so the result is
/// exact up to rounding.
pub fn project_polynomial(basis: &BasisSet, poly: &SparsePolynomial) -> Result<Array1<f64>> {
    if poly.dimension() != basis.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "polynomial has dimension {}, basis has {}",
            poly.dimension(),
            basis.dimension()
        )));
    }
    let p_max = poly
        .terms
        .iter()
        .flat_map(|(e, _)| e.iter().copied())
        .max()
        .unwrap_or(0) as usize;
    let degree_max = basis.order();
    // Integrands have degree at most p_max + degree_max; an n-point rule is
    // exact through degree 2n - 1.
    let nodes = ((p_max + degree_max) / 2 + 1).max(degree_max + 1);
    let rule = GaussRule::new(basis.family(), nodes)?;

    // moments[p][a] = integral of x^p * psi_a(x) against the 1-D measure.
    let mut moments = vec![vec![0.0f64; degree_max + 1]; p_max + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let psi = univariate_table(basis.family(), degree_max, x);
        let mut x_power = 1.0;
        for row in moments.iter_mut() {
            for (a, slot) in row.iter_mut().enumerate() {
                *slot += w * x_power * psi[a];
            }
            x_power *= x;
        }
    }

    let mut coefficients = Array1::zeros(basis.cardinality());
    for (j, index) in basis.indices().iter().enumerate() {
        let mut total = 0.0;
        for (exponents, coefficient) in &poly.terms {
            let factor: f64 = exponents
                .iter()
                .zip(index.exponents())
                .map(|(&p, &a)| moments[p as usize][a as usize])
                .product();
            total += coefficient * factor;
        }
        coefficients[j] = total;
    }
    Ok(coefficients)
}

/// `||c - c_ref||_2 / ||c_ref||_2`.
pub fn relative_error(c: ArrayView1<f64>, c_ref: ArrayView1<f64>) -> Result<f64> {
    if c.len() != c_ref.len() {
        return Err(Error::ShapeMismatch(format!(
            "vectors of length {} and {}",
            c.len(),
            c_ref.len()
        )));
    }
    let ref_norm = c_ref.dot(&c_ref).sqrt();
    if ref_norm == 0.0 {
        return Err(Error::InvalidArgument(
            "relative error against a zero reference".into(),
        ));
    }
    let diff = &c - &c_ref;
    Ok(diff.dot(&diff).sqrt() / ref_norm)
}

/// A random exactly-sparse expansion in the given basis: `sparsity` positions
/// chosen uniformly without replacement, values i.i.d. standard normal.
pub fn manufactured_expansion(
    basis: &BasisSet,
    sparsity: usize,
    seed: u64,
) -> Result<Array1<f64>> {
    let k = basis.cardinality();
    if sparsity == 0 || sparsity > k {
        return Err(Error::InvalidArgument(format!(
            "sparsity must be between 1 and the basis cardinality {k}, got {sparsity}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..k).collect();
    positions.shuffle(&mut rng);
    let mut coefficients = Array1::zeros(k);
    for &j in positions.iter().take(sparsity) {
        let value: f64 = StandardNormal.sample(&mut rng);
        coefficients[j] = value;
    }
    Ok(coefficients)
}

/// Evaluate an expansion `sum_alpha c_alpha psi_alpha` at one point.
pub fn expansion_value(basis: &BasisSet, coefficients: ArrayView1<f64>, point: &[f64]) -> Result<f64> {
    Ok(basis.eval(point)?.dot(&coefficients))
}

/// Generalised Rosenbrock function
/// `sum_{i<n} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
pub fn rosenbrock(xi: &[f64]) -> f64 {
    xi.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// The Rosenbrock function expanded into monomial terms, for exact
/// projection.
pub fn rosenbrock_polynomial(dimension: usize) -> Result<SparsePolynomial> {
    if dimension < 2 {
        return Err(Error::InvalidArgument(
            "the Rosenbrock sum needs at least two variables".into(),
        ));
    }
    let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut term = |spec: &[(usize, u32)], coefficient: f64| {
        let mut exponents = vec![0u32; dimension];
        for &(var, power) in spec {
            exponents[var] = power;
        }
        terms.push((exponents, coefficient));
    };
    for i in 0..dimension - 1 {
        // 100 (x_{i+1} - x_i^2)^2 = 100 x_{i+1}^2 - 200 x_i^2 x_{i+1} + 100 x_i^4
        term(&[(i + 1, 2)], 100.0);
        term(&[(i, 2), (i + 1, 1)], -200.0);
        term(&[(i, 4)], 100.0);
        // (1 - x_i)^2 = 1 - 2 x_i + x_i^2
        term(&[], 1.0);
        term(&[(i, 1)], -2.0);
        term(&[(i, 2)], 1.0);
    }
    SparsePolynomial::new(dimension, terms)
}

/// Forced undamped oscillator `m x'' + gamma x = f_amp sin(omega t)` with
/// homogeneous initial conditions; returns the displacement at time `t`:
/// `x(t) = f_amp / (gamma - m omega^2) * (sin(omega t) - (omega/omega_0) sin(omega_0 t))`
/// with natural frequency `omega_0 = sqrt(gamma / m)`.
pub fn mass_spring_qoi(m: f64, gamma: f64, omega: f64, f_amp: f64, t: f64) -> Result<f64> {
    if !(m > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass and stiffness must be positive, got m={m}, gamma={gamma}"
        )));
    }
    let detuning = gamma - m * omega * omega;
    if detuning.abs() <= 1e-12 {
        return Err(Error::Resonance { detuning });
    }
    let omega0 = (gamma / m).sqrt();
    Ok(f_amp / detuning * ((omega * t).sin() - omega / omega0 * (omega0 * t).sin()))
}

/// Physical parameter ranges of the oscillator study, each mapped affinely
/// from `[-1, 1]`: mass 0.02 +/- 0.002, stiffness 0.04 +/- 0.005, forcing
/// frequency 1 +/- 0.01.
pub fn mass_spring_parameters(xi: &[f64]) -> Result<(f64, f64, f64)> {
    if xi.len() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "oscillator has 3 random inputs, got {}",
            xi.len()
        )));
    }
    Ok((
        0.02 + 0.002 * xi[0],
        0.04 + 0.005 * xi[1],
        1.0 + 0.01 * xi[2],
    ))
}

/// Time at which the oscillator displacement is read off.
pub const MASS_SPRING_TIME: f64 = 20.0;

/// The target functions the experiment drivers know how to build.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TargetFunction {
    /// Random exactly-sparse expansion in an arbitrary basis.
    Manufactured {
        family: PolynomialFamily,
        dimension: usize,
        order: usize,
        sparsity: usize,
        seed: u64,
    },
    /// Two Gaussian inputs, polynomial of total degree 20:
    /// `sum_{i=1..9} x_1^i x_2^{i+2}`.
    LowDimHighOrder,
    /// Twenty uniform inputs, total degree 2:
    /// `sum_{i=1..19} x_i x_{i+1} + sum_{i=1..20} x_i^2`.
    HighDimLowOrder,
    /// Oscillator displacement at `t = 20` over three uniform inputs,
    /// degree-10 Legendre basis.
    MassSpring { forcing_amplitude: f64 },
    /// Generalised Rosenbrock over six uniform inputs, degree-4 basis.
    Rosenbrock,
}

/// A target bound to its basis, with exact coefficients when they exist.
pub struct TargetInstance {
    pub basis: BasisSet,
    /// Exact expansion coefficients; `None` for the (non-polynomial)
    /// oscillator.
    pub exact_coefficients: Option<Array1<f64>>,
    evaluator: Evaluator,
}

enum Evaluator {
    Expansion(Array1<f64>),
    Polynomial(SparsePolynomial),
    MassSpring { forcing_amplitude: f64 },
}

impl TargetFunction {
    /// Build the basis, evaluator, and (where possible) exact coefficients.
    pub fn instantiate(&self) -> Result<TargetInstance> {
        match self {
            TargetFunction::Manufactured {
                family,
                dimension,
                order,
                sparsity,
                seed,
            } => {
                let basis = BasisSet::total_degree(*family, *dimension, *order)?;
                let coefficients = manufactured_expansion(&basis, *sparsity, *seed)?;
                Ok(TargetInstance {
                    basis,
                    exact_coefficients: Some(coefficients.clone()),
                    evaluator: Evaluator::Expansion(coefficients),
                })
            }
            TargetFunction::LowDimHighOrder => {
                let basis = BasisSet::total_degree(PolynomialFamily::Hermite, 2, 20)?;
                let poly = SparsePolynomial::new(
                    2,
                    (1..=9u32).map(|i| (vec![i, i + 2], 1.0)),
                )?;
                Self::polynomial_instance(basis, poly)
            }
            TargetFunction::HighDimLowOrder => {
                let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 20, 2)?;
                let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
                for i in 0..19 {
                    let mut e = vec![0u32; 20];
                    e[i] = 1;
                    e[i + 1] = 1;
                    terms.push((e, 1.0));
                }
                for i in 0..20 {
                    let mut e = vec![0u32; 20];
                    e[i] = 2;
                    terms.push((e, 1.0));
                }
                Self::polynomial_instance(basis, SparsePolynomial::new(20, terms)?)
            }
            TargetFunction::MassSpring { forcing_amplitude } => {
                let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 3, 10)?;
                Ok(TargetInstance {
                    basis,
                    exact_coefficients: None,
                    evaluator: Evaluator::MassSpring {
                        forcing_amplitude: *forcing_amplitude,
                    },
                })
            }
            TargetFunction::Rosenbrock => {
                let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 6, 4)?;
                Self::polynomial_instance(basis, rosenbrock_polynomial(6)?)
            }
        }
    }

    fn polynomial_instance(basis: BasisSet, poly: SparsePolynomial) -> Result<TargetInstance> {
        let coefficients = project_polynomial(&basis, &poly)?;
        Ok(TargetInstance {
            basis,
            exact_coefficients: Some(coefficients),
            evaluator: Evaluator::Polynomial(poly),
        })
    }

    /// Short name used in output metadata.
    pub fn name(&self) -> &'static str {
        match self {
            TargetFunction::Manufactured { .. } => "manufactured",
            TargetFunction::LowDimHighOrder => "low-dim-high-order",
            TargetFunction::HighDimLowOrder => "high-dim-low-order",
            TargetFunction::MassSpring { .. } => "mass-spring",
            TargetFunction::Rosenbrock => "rosenbrock",
        }
    }
}

impl TargetInstance {
    /// The target's value at one input point.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        match &self.evaluator {
            Evaluator::Expansion(c) => expansion_value(&self.basis, c.view(), point),
            Evaluator::Polynomial(p) => Ok(p.evaluate(point)),
            Evaluator::MassSpring { forcing_amplitude } => {
                let (m, gamma, omega) = mass_spring_parameters(point)?;
                mass_spring_qoi(m, gamma, omega, *forcing_amplitude, MASS_SPRING_TIME)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::standard_samples;
    use approx::assert_relative_eq;

    #[test]
    fn xi_squared_projects_onto_constant_and_quadratic() {
        let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 1, 2).unwrap();
        let poly = SparsePolynomial::new(1, [(vec![2], 1.0)]).unwrap();
        let c = project_polynomial(&basis, &poly).unwrap();
        assert_relative_eq!(c[0], 1.0 / 3.0, max_relative = 1e-14);
        assert!(c[1].abs() < 1e-15);
        assert_relative_eq!(c[2], 2.0 / (3.0 * 5f64.sqrt()), max_relative = 1e-14);
    }

    #[test]
    fn basis_elements_project_to_unit_vectors() {
        // Orthonormal Legendre p_2 in monomial form: sqrt(5)/2 (3x^2 - 1).
        let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 1, 3).unwrap();
        let s5 = 5f64.sqrt();
        let poly = SparsePolynomial::new(
            1,
            [(vec![2], 1.5 * s5), (vec![0], -0.5 * s5)],
        )
        .unwrap();
        let c = project_polynomial(&basis, &poly).unwrap();
        for (j, &v) in c.iter().enumerate() {
            let expected = if j == 2 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-13, "c[{j}] = {v}");
        }

        // Orthonormal Hermite p_3 = (x^3 - 3x)/sqrt(6).
        let basis = BasisSet::total_degree(PolynomialFamily::Hermite, 1, 4).unwrap();
        let s6 = 6f64.sqrt();
        let poly =
            SparsePolynomial::new(1, [(vec![3], 1.0 / s6), (vec![1], -3.0 / s6)]).unwrap();
        let c = project_polynomial(&basis, &poly).unwrap();
        for (j, &v) in c.iter().enumerate() {
            let expected = if j == 3 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-13, "c[{j}] = {v}");
        }
    }

    #[test]
    fn pairwise_quadratic_target_has_forty_known_coefficients() {
        let target = TargetFunction::HighDimLowOrder.instantiate().unwrap();
        let c = target.exact_coefficients.as_ref().unwrap();
        assert_eq!(c.len(), 231);
        let nonzero: Vec<(usize, f64)> = c
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 1e-12)
            .map(|(j, &v)| (j, v))
            .collect();
        assert_eq!(nonzero.len(), 40);
        // Constant term 20/3; cross terms 1/3; squared terms 2/(3 sqrt 5).
        assert_relative_eq!(c[0], 20.0 / 3.0, max_relative = 1e-12);
        let cross = 1.0 / 3.0;
        let quad = 2.0 / (3.0 * 5f64.sqrt());
        for (j, v) in &nonzero[1..] {
            let index = &target.basis.indices()[*j];
            let expected = if index.exponents().contains(&2) { quad } else { cross };
            assert_relative_eq!(*v, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn three_dimensional_analog_counts_match_symbolic_expansion() {
        // sum_{i=1,2} x_i x_{i+1} + sum_{i=1..3} x_i^2 has 1 constant, 2
        // cross, 3 quadratic orthonormal terms.
        let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 3, 2).unwrap();
        let mut terms = vec![
            (vec![1, 1, 0], 1.0),
            (vec![0, 1, 1], 1.0),
        ];
        for i in 0..3 {
            let mut e = vec![0u32; 3];
            e[i] = 2;
            terms.push((e, 1.0));
        }
        let poly = SparsePolynomial::new(3, terms).unwrap();
        let c = project_polynomial(&basis, &poly).unwrap();
        let nonzero = c.iter().filter(|v| v.abs() > 1e-12).count();
        assert_eq!(nonzero, 6);
        assert_relative_eq!(c[0], 1.0, max_relative = 1e-12); // 3 * (1/3)
    }

    #[test]
    fn projected_expansions_reproduce_the_closed_form() {
        for target in [
            TargetFunction::LowDimHighOrder,
            TargetFunction::HighDimLowOrder,
            TargetFunction::Rosenbrock,
        ] {
            let instance = target.instantiate().unwrap();
            let c = instance.exact_coefficients.as_ref().unwrap();
            let points = standard_samples(&instance.basis, 10, 99).unwrap();
            for row in points.points.rows() {
                let x = row.as_slice().unwrap();
                let from_expansion =
                    expansion_value(&instance.basis, c.view(), x).unwrap();
                let direct = instance.evaluate(x).unwrap();
                // The high-order expansions sum huge cancelling terms (the
                // order-20 monomial coefficients reach 1e9), so the honest
                // tolerance follows the summation's condition number.
                let psi = instance.basis.eval(x).unwrap();
                let kappa: f64 = c
                    .iter()
                    .zip(psi.iter())
                    .map(|(a, b)| (a * b).abs())
                    .sum();
                let tol = (64.0 * f64::EPSILON * kappa)
                    .max(1e-8 * direct.abs())
                    .max(1e-12);
                assert!(
                    (from_expansion - direct).abs() <= tol,
                    "{}: expansion {from_expansion} vs direct {direct}",
                    target.name()
                );
            }
        }
    }

    #[test]
    fn rosenbrock_known_values() {
        assert_eq!(rosenbrock(&[1.0; 6]), 0.0);
        assert_eq!(rosenbrock(&[0.0; 6]), 5.0);
        // Random point against a term-by-term recomputation.
        let x: [f64; 6] = [0.3, -0.2, 0.9, 0.5, -0.7, 0.1];
        let mut expected = 0.0;
        for i in 0..5 {
            expected += 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2);
        }
        assert_relative_eq!(rosenbrock(&x), expected, max_relative = 1e-15);
        // The monomial expansion agrees with the direct evaluation.
        let poly = rosenbrock_polynomial(6).unwrap();
        assert_relative_eq!(poly.evaluate(&x), expected, max_relative = 1e-12);
    }

    #[test]
    fn manufactured_expansions_have_exact_sparsity() {
        let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 3, 4).unwrap();
        let k = basis.cardinality();
        for seed in 0..100u64 {
            let c = manufactured_expansion(&basis, 7, seed).unwrap();
            assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 7, "seed {seed}");
        }
        // Fully dense at s = K.
        let dense = manufactured_expansion(&basis, k, 5).unwrap();
        assert_eq!(dense.iter().filter(|v| **v != 0.0).count(), k);
        assert!(manufactured_expansion(&basis, k + 1, 5).is_err());
    }

    #[test]
    fn expansion_value_is_the_dot_product() {
        let basis = BasisSet::total_degree(PolynomialFamily::Hermite, 2, 3).unwrap();
        let c = manufactured_expansion(&basis, 4, 8).unwrap();
        let points = standard_samples(&basis, 10, 3).unwrap();
        for row in points.points.rows() {
            let x = row.as_slice().unwrap();
            let direct = basis.eval(x).unwrap().dot(&c);
            assert_eq!(expansion_value(&basis, c.view(), x).unwrap(), direct);
        }
    }

    #[test]
    fn oscillator_starts_at_rest() {
        let x0 = mass_spring_qoi(0.02, 0.04, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(x0, 0.0);
        // Central difference of the closed form near t = 0.
        let h = 1e-6;
        let xp = mass_spring_qoi(0.02, 0.04, 1.0, 1.0, h).unwrap();
        let xm = mass_spring_qoi(0.02, 0.04, 1.0, 1.0, -h).unwrap();
        assert!(((xp - xm) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn oscillator_matches_an_adaptive_integrator() {
        // Independent oracle: adaptive RK45 on m x'' + gamma x = sin(omega t)
        // down to a 1e-11 local tolerance.
        let (m, gamma, omega, f_amp) = (0.02, 0.04, 1.0, 1.0);
        let closed = mass_spring_qoi(m, gamma, omega, f_amp, 20.0).unwrap();
        let numerical = integrate_oscillator(m, gamma, omega, f_amp, 20.0);
        assert!(
            (closed - numerical).abs() < 1e-8,
            "closed {closed} vs integrated {numerical}"
        );
    }

    #[test]
    fn resonant_parameters_are_rejected() {
        // gamma = m omega^2 exactly.
        let err = mass_spring_qoi(0.02, 0.02, 1.0, 1.0, 20.0).unwrap_err();
        assert!(matches!(err, Error::Resonance { .. }));
    }

    #[test]
    fn parameter_map_covers_the_stated_ranges() {
        let (m_lo, g_lo, w_lo) = mass_spring_parameters(&[-1.0, -1.0, -1.0]).unwrap();
        let (m_hi, g_hi, w_hi) = mass_spring_parameters(&[1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(m_lo, 0.018, max_relative = 1e-15);
        assert_relative_eq!(m_hi, 0.022, max_relative = 1e-15);
        assert_relative_eq!(g_lo, 0.035, max_relative = 1e-15);
        assert_relative_eq!(g_hi, 0.045, max_relative = 1e-15);
        assert_relative_eq!(w_lo, 0.99, max_relative = 1e-15);
        assert_relative_eq!(w_hi, 1.01, max_relative = 1e-15);
    }

    #[test]
    fn relative_error_basic_identities() {
        let c = ndarray::array![1.0, -2.0, 3.0];
        assert_eq!(relative_error(c.view(), c.view()).unwrap(), 0.0);
        let zero = ndarray::Array1::zeros(3);
        assert_eq!(relative_error(zero.view(), c.view()).unwrap(), 1.0);
        let doubled = &c * 2.0;
        assert_relative_eq!(
            relative_error(doubled.view(), c.view()).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(relative_error(c.view(), zero.view()).is_err());
    }

    /// Dormand-Prince RK45 with step doubling on the first-order system
    /// (x, v)' = (v, (f sin(omega t) - gamma x)/m).
    fn integrate_oscillator(m: f64, gamma: f64, omega: f64, f_amp: f64, t_end: f64) -> f64 {
        let rhs = |t: f64, state: [f64; 2]| {
            [
                state[1],
                (f_amp * (omega * t).sin() - gamma * state[0]) / m,
            ]
        };
        let rk4_step = |t: f64, state: [f64; 2], h: f64| {
            let k1 = rhs(t, state);
            let k2 = rhs(
                t + 0.5 * h,
                [state[0] + 0.5 * h * k1[0], state[1] + 0.5 * h * k1[1]],
            );
            let k3 = rhs(
                t + 0.5 * h,
                [state[0] + 0.5 * h * k2[0], state[1] + 0.5 * h * k2[1]],
            );
            let k4 = rhs(t + h, [state[0] + h * k3[0], state[1] + h * k3[1]]);
            [
                state[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                state[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ]
        };
        // Adaptive step doubling: accept when the half-step estimate agrees.
        let mut t = 0.0;
        let mut state = [0.0, 0.0];
        let mut h: f64 = 1e-3;
        while t < t_end {
            h = h.min(t_end - t);
            let full = rk4_step(t, state, h);
            let half = rk4_step(t + 0.5 * h, rk4_step(t, state, 0.5 * h), 0.5 * h);
            let err = ((full[0] - half[0]).powi(2) + (full[1] - half[1]).powi(2)).sqrt();
            if err < 1e-11 {
                t += h;
                state = half;
                if err < 1e-13 {
                    h *= 2.0;
                }
            } else {
                h *= 0.5;
            }
        }
        state[0]
    }
}
