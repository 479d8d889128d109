//! Multivariate orthonormal polynomial bases under total-degree truncation.
//!
//! Two classical families are supported, each orthonormal with respect to a
//! probability measure on its support:
//!
//! * Legendre polynomials, uniform measure on `[-1, 1]` (density 1/2);
//! * (probabilists') Hermite polynomials, standard Gaussian measure on the
//!   real line.
//!
//! Univariate polynomials are evaluated through the orthonormal three-term
//! recurrence `x p_n = b_{n+1} p_{n+1} + b_n p_{n-1}`, which stays
//! well-scaled at high degree where the classical (unnormalised) recurrences
//! overflow or lose accuracy. Multivariate basis functions are tensor
//! products indexed by a multi-index, and a [`BasisSet`] collects every
//! multi-index with total degree at most `k` in graded lexicographic order.

use crate::error::{Error, Result};
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// A univariate orthogonal-polynomial family together with its probability
/// measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolynomialFamily {
    /// Legendre polynomials, orthonormal for the uniform measure on `[-1, 1]`.
    Legendre,
    /// Probabilists' Hermite polynomials, orthonormal for the standard
    /// Gaussian measure.
    Hermite,
}

impl PolynomialFamily {
    /// Lower-case name used in file headers and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            PolynomialFamily::Legendre => "legendre",
            PolynomialFamily::Hermite => "hermite",
        }
    }

    /// Whether `x` lies in the support of the family's measure.
    pub fn supports(self, x: f64) -> bool {
        match self {
            PolynomialFamily::Legendre => (-1.0..=1.0).contains(&x),
            PolynomialFamily::Hermite => x.is_finite(),
        }
    }

    /// Off-diagonal recurrence coefficient `b_n` of the orthonormal
    /// three-term recurrence `x p_n = b_{n+1} p_{n+1} + b_n p_{n-1}`.
    ///
    /// For Legendre `b_n = n / sqrt(4n^2 - 1)`, for Hermite `b_n = sqrt(n)`.
    /// Both families are symmetric, so the diagonal coefficients vanish.
    pub(crate) fn recurrence_offdiag(self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        match self {
            PolynomialFamily::Legendre => n / (4.0 * n * n - 1.0).sqrt(),
            PolynomialFamily::Hermite => n.sqrt(),
        }
    }
}

impl fmt::Display for PolynomialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolynomialFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legendre" | "uniform" => Ok(PolynomialFamily::Legendre),
            "hermite" | "gaussian" | "normal" => Ok(PolynomialFamily::Hermite),
            other => Err(Error::InvalidArgument(format!(
                "unknown polynomial family {other:?} (expected \"legendre\" or \"hermite\")"
            ))),
        }
    }
}

/// Values `p_0(x), ..., p_max_degree(x)` of the orthonormal family at `x`.
///
/// The caller is responsible for the domain check; the recurrence itself is
/// defined for any finite `x`.
pub(crate) fn univariate_table(family: PolynomialFamily, max_degree: usize, x: f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(max_degree + 1);
    values.push(1.0);
    let mut prev = 0.0;
    let mut cur = 1.0;
    for n in 0..max_degree {
        let next =
            (x * cur - family.recurrence_offdiag(n) * prev) / family.recurrence_offdiag(n + 1);
        values.push(next);
        prev = cur;
        cur = next;
    }
    values
}

/// Evaluate the orthonormal polynomial of the given degree at `x`.
///
/// Returns [`Error::OutOfSupport`] when `x` lies outside the support of the
/// family's measure (e.g. `|x| > 1` for Legendre).
pub fn eval_univariate(family: PolynomialFamily, degree: usize, x: f64) -> Result<f64> {
    if !family.supports(x) {
        return Err(Error::OutOfSupport {
            family: family.name(),
            value: x,
        });
    }
    Ok(univariate_table(family, degree, x)[degree])
}

/// A multivariate exponent tuple; entry `i` is the univariate degree in
/// coordinate `i`.
///
/// Ordering is graded lexicographic: indices compare first by total degree,
/// then lexicographically entry by entry. This is the order in which
/// [`BasisSet`] stores its terms, so sorting a basis is a no-op.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    /// Number of coordinates (the ambient dimension).
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of all exponents.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Number of multi-indices in `dimension` variables with total degree at most
/// `order`: the binomial coefficient `C(order + dimension, dimension)`.
///
/// Computed exactly in 128-bit arithmetic; an overflow (or a count exceeding
/// `u64::MAX`) reports [`Error::BasisTooLarge`].
pub fn total_degree_cardinality(dimension: usize, order: usize) -> Result<u64> {
    let too_large = Error::BasisTooLarge { dimension, order };
    // C(n, r) with r = min(dimension, order) keeps the intermediate products
    // small; each partial product is itself a binomial coefficient, so the
    // division is exact.
    let n = (dimension as u128)
        .checked_add(order as u128)
        .ok_or(too_large)?;
    let r = (dimension as u128).min(order as u128);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::BasisTooLarge { dimension, order })?
            / (i + 1);
    }
    u64::try_from(acc).map_err(|_| Error::BasisTooLarge { dimension, order })
}

/// All multi-indices in `dimension` variables with total degree at most
/// `order`, in graded lexicographic order.
pub fn total_degree_indices(dimension: usize, order: usize) -> Result<Vec<MultiIndex>> {
    let count = total_degree_cardinality(dimension, order)?;
    let count = usize::try_from(count).map_err(|_| Error::BasisTooLarge { dimension, order })?;
    // Refuse to materialise lists that could not possibly fit in memory.
    if count.checked_mul(dimension.max(1)).is_none() {
        return Err(Error::BasisTooLarge { dimension, order });
    }

    let mut indices = Vec::with_capacity(count);
    let mut scratch = vec![0u32; dimension];
    for degree in 0..=order as u32 {
        push_compositions(&mut indices, &mut scratch, 0, degree);
    }
    debug_assert_eq!(indices.len(), count);
    Ok(indices)
}

/// Append, in lexicographic order, every way of writing `remaining` as a sum
/// over `scratch[position..]`.
fn push_compositions(out: &mut Vec<MultiIndex>, scratch: &mut [u32], position: usize, remaining: u32) {
    if position + 1 == scratch.len() {
        scratch[position] = remaining;
        out.push(MultiIndex(scratch.to_vec()));
        return;
    }
    for head in 0..=remaining {
        scratch[position] = head;
        push_compositions(out, scratch, position + 1, remaining - head);
    }
}

/// A truncated multivariate basis: every tensor-product polynomial
/// `psi_alpha(x) = prod_i p_{alpha_i}(x_i)` with `|alpha| <= order`.
///
/// The terms are stored in graded lexicographic order, which fixes the column
/// order of every measurement matrix built from the set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisSet {
    family: PolynomialFamily,
    dimension: usize,
    order: usize,
    indices: Vec<MultiIndex>,
}

impl BasisSet {
    /// Build the total-degree basis of the given order.
    pub fn total_degree(family: PolynomialFamily, dimension: usize, order: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument(
                "basis dimension must be at least 1".into(),
            ));
        }
        let indices = total_degree_indices(dimension, order)?;
        Ok(BasisSet {
            family,
            dimension,
            order,
            indices,
        })
    }

    pub fn family(&self) -> PolynomialFamily {
        self.family
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions.
    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Position of a multi-index in the basis, if it is present.
    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        self.indices.binary_search(index).ok()
    }

    /// Evaluate every basis function at one point.
    pub fn eval(&self, point: &[f64]) -> Result<Array1<f64>> {
        let tables = self.univariate_tables(point)?;
        let mut out = Array1::zeros(self.indices.len());
        for (slot, index) in out.iter_mut().zip(&self.indices) {
            *slot = product_from_tables(&tables, index);
        }
        Ok(out)
    }

    /// Largest absolute basis value at a point: `B(x) = max_alpha |psi_alpha(x)|`.
    ///
    /// This is the local coherence of the basis, the quantity that importance
    /// sampling for well-conditioned measurement matrices seeks to flatten.
    pub fn local_coherence(&self, point: &[f64]) -> Result<f64> {
        let tables = self.univariate_tables(point)?;
        let mut best = 0.0f64;
        for index in &self.indices {
            best = best.max(product_from_tables(&tables, index).abs());
        }
        Ok(best)
    }

    fn univariate_tables(&self, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        if point.len() != self.dimension {
            return Err(Error::ShapeMismatch(format!(
                "point has {} coordinates, basis expects {}",
                point.len(),
                self.dimension
            )));
        }
        point
            .iter()
            .map(|&x| {
                if self.family.supports(x) {
                    Ok(univariate_table(self.family, self.order, x))
                } else {
                    Err(Error::OutOfSupport {
                        family: self.family.name(),
                        value: x,
                    })
                }
            })
            .collect()
    }
}

fn product_from_tables(tables: &[Vec<f64>], index: &MultiIndex) -> f64 {
    let mut value = 1.0;
    for (table, &a) in tables.iter().zip(index.exponents()) {
        if a > 0 {
            value *= table[a as usize];
        }
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_low_degrees_match_closed_forms() {
        // Orthonormal Legendre: p_1(x) = sqrt(3) x, p_2(x) = sqrt(5)/2 (3x^2 - 1).
        let x = 0.37;
        assert_relative_eq!(
            eval_univariate(PolynomialFamily::Legendre, 1, x).unwrap(),
            3f64.sqrt() * x,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            eval_univariate(PolynomialFamily::Legendre, 2, x).unwrap(),
            5f64.sqrt() / 2.0 * (3.0 * x * x - 1.0),
            max_relative = 1e-14
        );
        // p_1(1) = sqrt(3) = 1.7320508075688772.
        assert_relative_eq!(
            eval_univariate(PolynomialFamily::Legendre, 1, 1.0).unwrap(),
            1.732_050_807_568_877_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn hermite_low_degrees_match_closed_forms() {
        // Orthonormal Hermite: p_2(x) = (x^2 - 1)/sqrt(2), p_3(x) = (x^3 - 3x)/sqrt(6).
        let x = -1.2;
        assert_relative_eq!(
            eval_univariate(PolynomialFamily::Hermite, 2, x).unwrap(),
            (x * x - 1.0) / 2f64.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            eval_univariate(PolynomialFamily::Hermite, 3, x).unwrap(),
            (x * x * x - 3.0 * x) / 6f64.sqrt(),
            max_relative = 1e-14
        );
        // p_2(0) = -1/sqrt(2).
        assert_relative_eq!(
            eval_univariate(PolynomialFamily::Hermite, 2, 0.0).unwrap(),
            -std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn degree_zero_is_constant_one() {
        assert_eq!(
            eval_univariate(PolynomialFamily::Legendre, 0, 0.37).unwrap(),
            1.0
        );
        assert_eq!(
            eval_univariate(PolynomialFamily::Hermite, 0, 3.7).unwrap(),
            1.0
        );
    }

    #[test]
    fn legendre_rejects_points_outside_the_interval() {
        let err = eval_univariate(PolynomialFamily::Legendre, 3, 1.5).unwrap_err();
        assert!(matches!(err, Error::OutOfSupport { .. }), "got {err:?}");
        // Hermite accepts the same point: its support is the whole line.
        assert!(eval_univariate(PolynomialFamily::Hermite, 3, 1.5).is_ok());
    }

    #[test]
    fn cardinality_matches_enumeration() {
        for (d, k) in [(1, 0), (1, 7), (2, 3), (3, 4), (5, 5), (7, 2)] {
            let listed = total_degree_indices(d, k).unwrap().len() as u64;
            assert_eq!(total_degree_cardinality(d, k).unwrap(), listed, "d={d} k={k}");
        }
    }

    #[test]
    fn cardinalities_of_the_study_bases() {
        assert_eq!(total_degree_cardinality(2, 20).unwrap(), 231);
        assert_eq!(total_degree_cardinality(20, 2).unwrap(), 231);
        assert_eq!(total_degree_cardinality(3, 10).unwrap(), 286);
        assert_eq!(total_degree_cardinality(6, 4).unwrap(), 210);
    }

    #[test]
    fn enormous_bases_are_refused_not_miscounted() {
        let err = total_degree_cardinality(500, 500).unwrap_err();
        assert!(matches!(err, Error::BasisTooLarge { .. }), "got {err:?}");
    }

    #[test]
    fn indices_come_out_in_graded_lexicographic_order() {
        let indices = total_degree_indices(2, 2).unwrap();
        let expected: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0],
        ];
        let got: Vec<Vec<u32>> = indices.iter().map(|i| i.exponents().to_vec()).collect();
        assert_eq!(got, expected);

        // Sorting an already-ordered basis must not move anything.
        let mut sorted = indices.clone();
        sorted.sort();
        assert_eq!(sorted, indices);
    }

    #[test]
    fn multivariate_eval_is_the_product_of_univariate_factors() {
        let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 2, 3).unwrap();
        let point = [0.3, -0.8];
        let values = basis.eval(&point).unwrap();
        for (index, &value) in basis.indices().iter().zip(values.iter()) {
            let expected: f64 = index
                .exponents()
                .iter()
                .zip(point.iter())
                .map(|(&a, &x)| eval_univariate(basis.family(), a as usize, x).unwrap())
                .product();
            assert_relative_eq!(value, expected, max_relative = 1e-13);
        }
    }

    #[test]
    fn local_coherence_of_a_low_order_legendre_basis() {
        // At the corner (1, 1) every Legendre factor attains its maximum. The
        // candidates in the order-2 basis are 1, p_1(1) = sqrt(3),
        // p_2(1) = sqrt(5), and p_1(1)^2 = 3; the largest is 3.
        let basis = BasisSet::total_degree(PolynomialFamily::Legendre, 2, 2).unwrap();
        let b = basis.local_coherence(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(b, 3.0, max_relative = 1e-14);
        // B is at least 1 everywhere because the constant term is present.
        assert!(basis.local_coherence(&[0.12, -0.97]).unwrap() >= 1.0);
    }

    #[test]
    fn position_finds_every_index() {
        let basis = BasisSet::total_degree(PolynomialFamily::Hermite, 3, 4).unwrap();
        for (i, index) in basis.indices().iter().enumerate() {
            assert_eq!(basis.position(index), Some(i));
        }
        assert_eq!(basis.position(&MultiIndex::new(vec![5, 0, 0])), None);
    }

    #[test]
    fn high_degree_evaluation_stays_finite_and_bounded() {
        // Orthonormal Legendre values satisfy |p_n(x)| <= sqrt(2n + 1); the
        // recurrence should not drift anywhere near overflow by degree 60.
        for n in [20usize, 40, 60] {
            let bound = (2.0 * n as f64 + 1.0).sqrt();
            for &x in &[-1.0, -0.513, 0.0, 0.9999, 1.0] {
                let v = eval_univariate(PolynomialFamily::Legendre, n, x).unwrap();
                assert!(v.is_finite() && v.abs() <= bound + 1e-9, "p_{n}({x}) = {v}");
            }
        }
    }
}
