//! Measurement matrices, coherence diagnostics, and the equiangular
//! tight-frame machinery used by the preconditioner.
//!
//! A measurement matrix stacks one basis evaluation per sampled point:
//! entry `(i, j)` is the `j`-th basis function at the `i`-th point. All
//! recovery happens on the column-normalised matrix, so the original column
//! norms travel with the matrix and solutions are rescaled back before any
//! error is measured.
//!
//! Mutual coherence — the largest absolute normalised inner product between
//! two distinct columns — is the diagnostic the preconditioner drives down.
//! Its sharpest achievable value for an `M x K` frame is the Welch bound,
//! attained exactly by equiangular tight frames; the convex set of "ETF-like"
//! Gram matrices (unit diagonal, symmetric, off-diagonal magnitudes at most
//! the Welch bound) admits the cheap entrywise projection implemented by
//! [`etf_project`].

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::sampling::SampleSet;
use ndarray::{Array1, Array2, ArrayView2};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// A basis evaluated on a sample set, with column-norm bookkeeping.
#[derive(Clone, Debug)]
pub struct MeasurementMatrix {
    /// `M x K`: rows are points, columns are basis functions.
    pub entries: Array2<f64>,
    /// Euclidean norm each column had before any normalisation; used to map
    /// coefficients of the normalised system back to the basis scale.
    pub column_norms: Array1<f64>,
    /// Short description of the generating basis, e.g. `legendre-d5-k3`.
    pub basis_ref: String,
    /// Short description of the sample set, e.g. `standard-seed42-m100`.
    pub sample_ref: String,
    normalized: bool,
}

impl MeasurementMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Map coefficients computed against the normalised columns back to the
    /// original basis scale.
    pub fn rescale_coefficients(&self, coeffs: &Array1<f64>) -> Result<Array1<f64>> {
        if coeffs.len() != self.column_norms.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} columns",
                coeffs.len(),
                self.column_norms.len()
            )));
        }
        Ok(coeffs / &self.column_norms)
    }
}

/// Evaluate every basis function at every sample point.
///
/// Row weights from the sample set are *not* applied here; callers weight
/// rows explicitly so the same matrix can serve both the weighted recovery
/// system and unweighted validation.
pub fn assemble(basis: &BasisSet, samples: &SampleSet) -> Result<MeasurementMatrix> {
    if samples.dimension() != basis.dimension() {
        return Err(Error::ShapeMismatch(format!(
            "samples have dimension {}, basis has {}",
            samples.dimension(),
            basis.dimension()
        )));
    }
    let m = samples.len();
    let k = basis.cardinality();
    let mut entries = Array2::zeros((m, k));
    for (i, point) in samples.points.rows().into_iter().enumerate() {
        let row = basis.eval(point.as_slice().expect("contiguous row"))?;
        entries.row_mut(i).assign(&row);
    }
    let column_norms = column_norms(&entries.view());
    Ok(MeasurementMatrix {
        entries,
        column_norms,
        basis_ref: format!(
            "{}-d{}-k{}",
            basis.family().name(),
            basis.dimension(),
            basis.order()
        ),
        sample_ref: format!(
            "{}-seed{}-m{}",
            samples.scheme.name(),
            samples.seed,
            samples.len()
        ),
        normalized: false,
    })
}

fn column_norms(a: &ArrayView2<f64>) -> Array1<f64> {
    let mut norms = Array1::zeros(a.ncols());
    for (j, col) in a.columns().into_iter().enumerate() {
        norms[j] = col.dot(&col).sqrt();
    }
    norms
}

/// Rescale every column to unit Euclidean norm.
///
/// The returned matrix remembers the product of all norms applied so far, so
/// [`MeasurementMatrix::rescale_coefficients`] always maps back to the
/// original basis scale. Normalising an already-normalised matrix is a no-op.
pub fn column_normalize(m: &MeasurementMatrix) -> Result<MeasurementMatrix> {
    if m.normalized {
        return Ok(m.clone());
    }
    let norms = column_norms(&m.entries.view());
    for (j, &n) in norms.iter().enumerate() {
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroColumn { index: j });
        }
    }
    let mut entries = m.entries.clone();
    for (mut col, &n) in entries.columns_mut().into_iter().zip(norms.iter()) {
        col.mapv_inplace(|v| v / n);
    }
    Ok(MeasurementMatrix {
        entries,
        column_norms: norms,
        basis_ref: m.basis_ref.clone(),
        sample_ref: m.sample_ref.clone(),
        normalized: true,
    })
}

/// Normalise the columns of a bare matrix, returning the scaled matrix and
/// the norms that were divided out.
pub fn normalize_columns(a: ArrayView2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let norms = column_norms(&a);
    for (j, &n) in norms.iter().enumerate() {
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroColumn { index: j });
        }
    }
    let mut out = a.to_owned();
    for (mut col, &n) in out.columns_mut().into_iter().zip(norms.iter()) {
        col.mapv_inplace(|v| v / n);
    }
    Ok((out, norms))
}

/// Largest absolute inner product between two distinct normalised columns.
///
/// Computed through the Gram matrix of the column-normalised input, which is
/// a single matrix product instead of a `K^2` double loop.
pub fn mutual_coherence(a: ArrayView2<f64>) -> Result<f64> {
    if a.ncols() < 2 {
        return Err(Error::InvalidArgument(
            "mutual coherence needs at least two columns".into(),
        ));
    }
    let g = gram(a, true)?;
    let mut best = 0.0f64;
    for i in 0..g.nrows() {
        for j in (i + 1)..g.ncols() {
            best = best.max(g[[i, j]].abs());
        }
    }
    Ok(best.min(1.0))
}

/// `A^T A`, optionally of the column-normalised `A` (unit diagonal).
pub fn gram(a: ArrayView2<f64>, normalize: bool) -> Result<Array2<f64>> {
    if normalize {
        let (an, _) = normalize_columns(a)?;
        Ok(an.t().dot(&an))
    } else {
        Ok(a.t().dot(&a))
    }
}

/// Lower bound on the spark (smallest number of linearly dependent columns)
/// implied by mutual coherence: `1 + 1/mu`. Returns infinity for orthogonal
/// columns (`mu = 0`), where the bound is vacuous.
pub fn spark_lower_bound(mu: f64) -> f64 {
    if mu <= 0.0 {
        f64::INFINITY
    } else {
        1.0 + 1.0 / mu
    }
}

/// Smallest mutual coherence any `M x K` matrix can achieve
/// (`sqrt((K - M) / (M (K - 1)))`), attained by equiangular tight frames.
/// Returns 0 when `M >= K`, where the bound degenerates.
pub fn welch_bound(m: usize, k: usize) -> f64 {
    if m == 0 || k < 2 || m >= k {
        return 0.0;
    }
    (((k - m) as f64) / ((m * (k - 1)) as f64)).sqrt()
}

/// Project a symmetric matrix onto the set of ETF-like Gram matrices: unit
/// diagonal, symmetric, off-diagonal magnitudes at most `mu`.
///
/// The projection is entrywise: diagonal forced to one, off-diagonal entries
/// clipped to `[-mu, mu]`. The upper triangle is clipped and mirrored so the
/// output is exactly symmetric even if rounding has perturbed the input.
pub fn etf_project(g: ArrayView2<f64>, mu: f64) -> Result<Array2<f64>> {
    if g.nrows() != g.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "ETF projection needs a square matrix, got {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let k = g.nrows();
    let mut out = Array2::zeros((k, k));
    for i in 0..k {
        out[[i, i]] = 1.0;
        for j in (i + 1)..k {
            let clipped = g[[i, j]].clamp(-mu, mu);
            out[[i, j]] = clipped;
            out[[j, i]] = clipped;
        }
    }
    Ok(out)
}

/// Write a matrix as CSV: a `rows,cols` header line, then one CSV record per
/// row. Values are printed with full round-trip precision.
pub fn write_matrix_csv(a: ArrayView2<f64>, writer: impl Write) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    writeln!(w, "{},{}", a.nrows(), a.ncols())?;
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv_path(a: ArrayView2<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_csv(a, std::fs::File::create(path)?)
}

/// Read a matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(reader: impl Read) -> Result<Array2<f64>> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let dims: Vec<usize> = header
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad matrix header {header:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Parse(format!(
            "matrix header must be \"rows,cols\", got {header:?}"
        )));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for field in line.split(',') {
            data.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {field:?}: {e}")))?,
            );
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "matrix body holds {} values, header promises {}",
            data.len(),
            rows * cols
        )));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_matrix_csv_path(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    read_matrix_csv(std::fs::File::open(path)?)
}
