//! Gauss quadrature rules for the probability measures behind each basis
//! family.
//!
//! An `n`-point rule integrates polynomials up to degree `2n - 1` exactly
//! against the family's measure (uniform on `[-1, 1]` for Legendre, standard
//! Gaussian for Hermite). Nodes are the roots of the degree-`n` orthonormal
//! polynomial; they are found by bisection, using the fact that the roots of
//! consecutive orthonormal polynomials strictly interlace, so the roots of
//! `p_{m-1}` (plus the support endpoints) bracket every root of `p_m`. This
//! avoids any dependence on an eigenvalue solver and is accurate to close to
//! machine precision for the moderate orders used here.
//!
//! Weights are Christoffel numbers, `w_i = 1 / sum_{j<n} p_j(x_i)^2`, which
//! are positive and sum to one for a probability measure.

use crate::basis::{univariate_table, PolynomialFamily};
use crate::error::{Error, Result};

/// Nodes and weights of a Gauss rule for a probability measure.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Build the `n`-point Gauss rule for the family's measure. `n` must be
    /// at least 1.
    pub fn new(family: PolynomialFamily, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "a quadrature rule needs at least one node".into(),
            ));
        }

        // All Hermite roots lie within +/- sqrt(4n + 2); Legendre roots lie in
        // the open interval (-1, 1). Pad the Hermite bound slightly so the
        // outermost bracket strictly contains the extreme root.
        let (lo, hi) = match family {
            PolynomialFamily::Legendre => (-1.0, 1.0),
            PolynomialFamily::Hermite => {
                let b = (4.0 * n as f64 + 2.0).sqrt() + 1.0;
                (-b, b)
            }
        };

        // Grow the root set degree by degree: the roots of p_{m-1} split the
        // support into m intervals each containing exactly one root of p_m.
        let mut roots: Vec<f64> = Vec::new();
        for m in 1..=n {
            let mut brackets = Vec::with_capacity(roots.len() + 2);
            brackets.push(lo);
            brackets.extend_from_slice(&roots);
            brackets.push(hi);
            let mut next = Vec::with_capacity(m);
            for pair in brackets.windows(2) {
                next.push(bisect_root(family, m, pair[0], pair[1]));
            }
            roots = next;
        }

        let weights = roots
            .iter()
            .map(|&x| {
                let table = univariate_table(family, n - 1, x);
                1.0 / table.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();

        Ok(GaussRule {
            nodes: roots,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` against the measure.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Find the single root of `p_degree` inside `(lo, hi)` by bisection.
///
/// Interlacing guarantees exactly one sign change in the interval. A fixed
/// iteration count of 110 shrinks the bracket by a factor 2^110, far below
/// the spacing of adjacent floats over these ranges.
fn bisect_root(family: PolynomialFamily, degree: usize, mut lo: f64, mut hi: f64) -> f64 {
    let value = |x: f64| *univariate_table(family, degree, x).last().unwrap();
    let mut f_lo = value(lo);
    debug_assert!(
        f_lo * value(hi) < 0.0,
        "bracket [{lo}, {hi}] does not straddle a root of degree {degree}"
    );
    for _ in 0..110 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket has collapsed to adjacent floats
        }
        let f_mid = value(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    0.5 * (lo + hi)
}
