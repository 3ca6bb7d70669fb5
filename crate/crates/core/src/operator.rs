//! Dense complex operators with a labeled subsystem structure.
//!
//! Every operator carries a [`FactorShape`]: an ordered list of factors, each
//! split into an A side and a B side. The underlying Hilbert space is
//! `A_0 ⊗ B_0 ⊗ A_1 ⊗ B_1 ⊗ ...` in row-major order, and the global A:B cut
//! groups every `A_i` against every `B_i`. A plain, non-bipartite factor of
//! dimension `d` is written `(d, 1)`.
//!
//! All spectral quantities (absolute value, trace norm, PSD tests) go through
//! a single Hermitian eigendecomposition.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Entrywise Hermiticity tolerance (relative to the largest entry) accepted by
/// the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Relative tolerance for positive-semidefiniteness tests.
pub const PSD_TOL: f64 = 1e-10;
/// Trace and Hermiticity tolerance for density operators.
pub const STATE_TOL: f64 = 1e-12;

/// Ordered list of `(dim_a, dim_b)` factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct FactorShape(Vec<(usize, usize)>);

impl FactorShape {
    pub fn new(factors: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(a, b)) = factors.iter().find(|&&(a, b)| a == 0 || b == 0) {
            return invalid(format!("factor dimensions must be positive, got ({a}, {b})"));
        }
        Ok(Self(factors))
    }

    /// A single bipartite factor.
    pub fn bipartite(dim_a: usize, dim_b: usize) -> Result<Self> {
        Self::new(vec![(dim_a, dim_b)])
    }

    /// A single plain factor `(d, 1)`.
    pub fn plain(d: usize) -> Result<Self> {
        Self::new(vec![(d, 1)])
    }

    /// The zero-factor shape, dimension one.
    pub fn scalar() -> Self {
        Self(Vec::new())
    }

    pub fn factors(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0.iter().map(|&(a, b)| a * b).product()
    }

    /// Total dimension of the A side (or B side) of the global cut.
    pub fn side_dims(&self) -> (usize, usize) {
        self.0
            .iter()
            .fold((1, 1), |(da, db), &(a, b)| (da * a, db * b))
    }

    pub fn concat(&self, other: &FactorShape) -> FactorShape {
        let mut factors = self.0.clone();
        factors.extend_from_slice(&other.0);
        FactorShape(factors)
    }

    pub fn repeat(&self, n: usize) -> FactorShape {
        FactorShape(self.0.iter().copied().cycle().take(self.0.len() * n).collect())
    }

    /// Every factor `(a, b)` split into two plain factors `(a, 1), (b, 1)`.
    pub fn split_sides(&self) -> FactorShape {
        FactorShape(self.0.iter().flat_map(|&(a, b)| [(a, 1), (b, 1)]).collect())
    }

    /// Interleaved local dimensions `[a_0, b_0, a_1, b_1, ...]`.
    fn local_dims(&self) -> Vec<usize> {
        self.0.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}

impl TryFrom<Vec<(usize, usize)>> for FactorShape {
    type Error = Error;

    fn try_from(factors: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(factors)
    }
}

impl From<FactorShape> for Vec<(usize, usize)> {
    fn from(shape: FactorShape) -> Self {
        shape.0
    }
}

/// Mixed-radix bookkeeping for a list of local subsystem dimensions.
struct Radix {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Radix {
    fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Self { dims, strides }
    }

    fn total(&self) -> usize {
        self.dims.iter().product()
    }

    fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.dims[k]
    }

    /// For every index, its positional contribution from the subsystems
    /// selected by `mask`.
    fn masked_contribution(&self, mask: &[bool]) -> Vec<usize> {
        (0..self.total())
            .map(|i| {
                (0..self.dims.len())
                    .filter(|&k| mask[k])
                    .map(|k| self.digit(i, k) * self.strides[k])
                    .sum()
            })
            .collect()
    }

    /// For every index, its index in the compressed space of the subsystems
    /// selected by `mask`.
    fn compressed(&self, mask: &[bool]) -> Vec<usize> {
        (0..self.total())
            .map(|i| {
                (0..self.dims.len())
                    .filter(|&k| mask[k])
                    .fold(0, |acc, k| acc * self.dims[k] + self.digit(i, k))
            })
            .collect()
    }
}

/// Precomputed index map for the partial transpose over the global A:B cut.
#[derive(Debug, Clone)]
pub(crate) struct PartialTransposeMap {
    a_part: Vec<usize>,
    b_part: Vec<usize>,
}

impl PartialTransposeMap {
    pub(crate) fn new(shape: &FactorShape) -> Self {
        let radix = Radix::new(shape.local_dims());
        let mask: Vec<bool> = (0..radix.dims.len()).map(|k| k % 2 == 1).collect();
        let b_part = radix.masked_contribution(&mask);
        let a_part = b_part.iter().enumerate().map(|(i, b)| i - b).collect();
        Self { a_part, b_part }
    }

    pub(crate) fn apply(&self, m: &CMatrix) -> CMatrix {
        let n = self.a_part.len();
        CMatrix::from_fn(n, n, |r, c| {
            m[(
                self.a_part[r] + self.b_part[c],
                self.a_part[c] + self.b_part[r],
            )]
        })
    }
}

/// Sorted (descending) real eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.first().copied().unwrap_or(f64::NAN)
    }

    pub fn min(&self) -> f64 {
        self.0.last().copied().unwrap_or(f64::NAN)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// Number of eigenvalues strictly above `tol`.
    pub fn count_above(&self, tol: f64) -> usize {
        self.0.iter().filter(|&&v| v > tol).count()
    }
}

/// One diagonal block of a Hermitian matrix after splitting it into the
/// connected components of its nonzero pattern.
#[derive(Debug, Clone)]
struct EigenBlock {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: CMatrix,
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub spectrum: Spectrum,
    dim: usize,
    blocks: Vec<EigenBlock>,
    /// `(block, column)` of each spectrum entry.
    order: Vec<(usize, usize)>,
}

impl EigenDecomposition {
    /// Columns are eigenvectors, ordered like the spectrum.
    pub fn vectors(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (j, &(b, c)) in self.order.iter().enumerate() {
            let block = &self.blocks[b];
            for (k, &i) in block.indices.iter().enumerate() {
                out[(i, j)] = block.vectors[(k, c)];
            }
        }
        out
    }

    /// `V · diag(f(λ)) · V†`, computed block by block.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for block in &self.blocks {
            let mut scaled = block.vectors.clone();
            for (j, &lam) in block.values.iter().enumerate() {
                scaled.column_mut(j).scale_mut(f(lam));
            }
            let local = &scaled * block.vectors.adjoint();
            for (r, &i) in block.indices.iter().enumerate() {
                for (c, &j) in block.indices.iter().enumerate() {
                    out[(i, j)] = local[(r, c)];
                }
            }
        }
        out
    }
}

/// Outcome of a positive-semidefiniteness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
    /// Scale the tolerance was multiplied by (the trace norm).
    pub scale: f64,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Index sets of the connected components of the nonzero pattern.
fn components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for c in 0..n {
        for r in 0..c {
            if m[(r, c)] != Complex64::new(0.0, 0.0) || m[(c, r)] != Complex64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        groups[root].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Eigendecomposition of the Hermitian part of `m`, already scaled to unit
/// largest entry. Values ascending.
fn dense_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 1 {
        return Ok((vec![m[(0, 0)].re], CMatrix::identity(1, 1)));
    }
    let sym = faer::Mat::from_fn(n, n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    let eig = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let (s, u) = (eig.S().column_vector(), eig.U());
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| u[(r, c)]);
    if values.iter().any(|v| !v.is_finite()) || vectors.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("eigensolver produced non-finite output".into()));
    }
    Ok((values, vectors))
}

/// Hermitian eigendecomposition with the spectrum sorted descending.
/// Matrices whose nonzero pattern splits into independent blocks (partial
/// transposes of structured states typically do) are decomposed block by
/// block.
pub(crate) fn hermitian_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    let n = m.nrows();
    let scale = max_abs(m);
    let mut residual = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            residual = residual.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    if residual > HERMITIAN_TOL * scale.max(1.0) {
        return invalid(format!("operator is not Hermitian (residual {residual:.3e})"));
    }
    let groups = if scale == 0.0 { (0..n).map(|i| vec![i]).collect() } else { components(m) };
    let inv = if scale == 0.0 { 1.0 } else { 1.0 / scale };
    let mut blocks = Vec::with_capacity(groups.len());
    let mut entries = Vec::with_capacity(n);
    for (b, indices) in groups.into_iter().enumerate() {
        let sub = CMatrix::from_fn(indices.len(), indices.len(), |r, c| m[(indices[r], indices[c])] * inv);
        let (values, vectors) = dense_eig(&sub)?;
        let values: Vec<f64> = values.into_iter().map(|v| v * scale).collect();
        entries.extend(values.iter().enumerate().map(|(c, &v)| (v, b, c)));
        blocks.push(EigenBlock { indices, values, vectors });
    }
    entries.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(EigenDecomposition {
        spectrum: Spectrum(entries.iter().map(|e| e.0).collect()),
        dim: n,
        blocks,
        order: entries.iter().map(|e| (e.1, e.2)).collect(),
    })
}

/// Euclidean projection of a Hermitian matrix onto the PSD cone.
pub(crate) fn project_psd(m: &CMatrix) -> Result<CMatrix> {
    Ok(hermitian_eig(m)?.reconstruct_with(|v| v.max(0.0)))
}

/// A complex square matrix together with its factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    shape: FactorShape,
    matrix: CMatrix,
}

impl LabeledOperator {
    pub fn new(shape: FactorShape, matrix: CMatrix) -> Result<Self> {
        let dim = shape.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return invalid(format!(
                "matrix is {}x{} but shape {:?} has dimension {dim}",
                matrix.nrows(),
                matrix.ncols(),
                shape.factors()
            ));
        }
        Ok(Self { shape, matrix })
    }

    /// Builds an operator from row-major entries.
    pub fn from_row_major(shape: FactorShape, entries: &[Complex64]) -> Result<Self> {
        let dim = shape.dim();
        if entries.len() != dim * dim {
            return invalid(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            ));
        }
        Self::new(shape, CMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(shape: FactorShape) -> Self {
        let dim = shape.dim();
        Self {
            shape,
            matrix: CMatrix::identity(dim, dim),
        }
    }

    /// The outer product `|ψ⟩⟨ψ|` of the given amplitudes (not normalized).
    pub fn ket_bra(shape: FactorShape, amplitudes: &[Complex64]) -> Result<Self> {
        if amplitudes.len() != shape.dim() {
            return invalid(format!(
                "expected {} amplitudes, got {}",
                shape.dim(),
                amplitudes.len()
            ));
        }
        let ket = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(shape, &ket * ket.adjoint())
    }

    pub fn shape(&self) -> &FactorShape {
        &self.shape
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Entries in row-major order.
    pub fn row_major_entries(&self) -> Vec<Complex64> {
        self.matrix.transpose().iter().copied().collect()
    }

    /// `max |M − M†|` entrywise.
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// `max |self − other|` entrywise. Shapes must agree.
    pub fn max_abs_diff(&self, other: &LabeledOperator) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(max_abs(&(&self.matrix - &other.matrix)))
    }

    pub fn scale(&self, factor: f64) -> LabeledOperator {
        Self {
            shape: self.shape.clone(),
            matrix: self.matrix.scale(factor),
        }
    }

    /// `Σ_k w_k X_k` over operators of a common shape.
    pub fn linear_combination(terms: &[(f64, &LabeledOperator)]) -> Result<LabeledOperator> {
        let Some(((_, first), rest)) = terms.split_first() else {
            return invalid("empty linear combination");
        };
        let mut matrix = CMatrix::zeros(first.dim(), first.dim());
        for (_, op) in rest {
            first.check_same_shape(op)?;
        }
        for (w, op) in terms {
            matrix += op.matrix.scale(*w);
        }
        Self::new(first.shape.clone(), matrix)
    }

    /// Reinterprets the same matrix under another factor structure of equal
    /// total dimension.
    pub fn relabel(&self, shape: FactorShape) -> Result<LabeledOperator> {
        Self::new(shape, self.matrix.clone())
    }

    fn check_same_shape(&self, other: &LabeledOperator) -> Result<()> {
        if self.shape != other.shape {
            return invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape.factors(),
                other.shape.factors()
            ));
        }
        Ok(())
    }

    /// Kronecker product; the factor list is the concatenation of both.
    pub fn tensor(&self, other: &LabeledOperator) -> LabeledOperator {
        Self {
            shape: self.shape.concat(&other.shape),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Traces out every factor not listed in `keep`. The kept factors retain
    /// their original order regardless of the order in `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<LabeledOperator> {
        if keep.is_empty() {
            return invalid("partial trace needs at least one kept factor");
        }
        let nf = self.shape.len();
        let mut kept_factor = vec![false; nf];
        for &k in keep {
            if k >= nf {
                return invalid(format!("factor index {k} out of range (shape has {nf})"));
            }
            if kept_factor[k] {
                return invalid(format!("factor index {k} repeated"));
            }
            kept_factor[k] = true;
        }
        let radix = Radix::new(self.shape.local_dims());
        let mask: Vec<bool> = (0..2 * nf).map(|k| kept_factor[k / 2]).collect();
        let traced_mask: Vec<bool> = mask.iter().map(|m| !m).collect();
        let kept_idx = radix.compressed(&mask);
        let traced_idx = radix.compressed(&traced_mask);

        let new_shape = FactorShape(
            (0..nf)
                .filter(|&f| kept_factor[f])
                .map(|f| self.shape.0[f])
                .collect(),
        );
        let kd = new_shape.dim();
        let td = radix.total() / kd;
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); td];
        for i in 0..radix.total() {
            groups[traced_idx[i]].push((i, kept_idx[i]));
        }
        let mut out = CMatrix::zeros(kd, kd);
        for group in &groups {
            for &(r, kr) in group {
                for &(c, kc) in group {
                    out[(kr, kc)] += self.matrix[(r, c)];
                }
            }
        }
        Self::new(new_shape, out)
    }

    /// Transposes every B-side index (the global A:B cut).
    pub fn partial_transpose(&self) -> LabeledOperator {
        Self {
            shape: self.shape.clone(),
            matrix: PartialTransposeMap::new(&self.shape).apply(&self.matrix),
        }
    }

    /// Reorders factors: factor `j` of the result is factor `perm[j]` of `self`.
    pub fn permute_factors(&self, perm: &[usize]) -> Result<LabeledOperator> {
        let nf = self.shape.len();
        let mut seen = vec![false; nf];
        if perm.len() != nf || perm.iter().any(|&p| p >= nf || std::mem::replace(&mut seen[p], true)) {
            return invalid(format!("{perm:?} is not a permutation of {nf} factors"));
        }
        let old = Radix::new(self.shape.local_dims());
        let order: Vec<usize> = perm.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
        let new_shape = FactorShape(perm.iter().map(|&p| self.shape.0[p]).collect());
        let new = Radix::new(new_shape.local_dims());
        let map: Vec<usize> = (0..old.total())
            .map(|i| {
                order
                    .iter()
                    .enumerate()
                    .map(|(j, &s)| old.digit(i, s) * new.strides[j])
                    .sum()
            })
            .collect();
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for c in 0..self.dim() {
            for r in 0..self.dim() {
                out[(map[r], map[c])] = self.matrix[(r, c)];
            }
        }
        Self::new(new_shape, out)
    }

    /// Hermitian eigendecomposition, eigenvalues sorted descending.
    pub fn eig_hermitian(&self) -> Result<EigenDecomposition> {
        hermitian_eig(&self.matrix)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Ok(self.eig_hermitian()?.spectrum)
    }

    /// Operator absolute value `|X| = V·diag(|λ|)·V†`.
    pub fn abs(&self) -> Result<LabeledOperator> {
        let matrix = self.eig_hermitian()?.reconstruct_with(f64::abs);
        Ok(Self {
            shape: self.shape.clone(),
            matrix,
        })
    }

    /// Sum of absolute eigenvalues (Hermitian inputs only).
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.spectrum()?.abs_sum())
    }

    /// `½‖self − other‖₁`.
    pub fn trace_distance(&self, other: &LabeledOperator) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(0.5 * hermitian_eig(&(&self.matrix - &other.matrix))?.spectrum.abs_sum())
    }

    /// PSD test: minimum eigenvalue at least `−tol · ‖X‖₁`.
    pub fn is_psd(&self, tol: f64) -> Result<PsdReport> {
        let spectrum = self.spectrum()?;
        let scale = spectrum.abs_sum();
        let min_eigenvalue = spectrum.min();
        Ok(PsdReport {
            psd: min_eigenvalue >= -tol * scale,
            min_eigenvalue,
            scale,
        })
    }
}

/// A unit-trace positive-semidefinite [`LabeledOperator`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(LabeledOperator);

impl DensityOperator {
    pub fn new(op: LabeledOperator) -> Result<Self> {
        Self::with_tolerance(op, STATE_TOL)
    }

    /// Validates with `tol` on trace and Hermiticity, and a minimum eigenvalue
    /// of at least `−max(tol, 1e-10)`.
    pub fn with_tolerance(op: LabeledOperator, tol: f64) -> Result<Self> {
        let herm = op.hermiticity_residual();
        if herm > tol {
            return invalid(format!("state is not Hermitian (residual {herm:.3e})"));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return invalid(format!("state trace is {tr}, expected 1"));
        }
        let min = op.spectrum()?.min();
        if min < -tol.max(PSD_TOL) * tr.re {
            return invalid(format!("state has negative eigenvalue {min:.3e}"));
        }
        Ok(Self(op))
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn trusted(op: LabeledOperator) -> Self {
        Self(op)
    }

    pub fn as_op(&self) -> &LabeledOperator {
        &self.0
    }

    pub fn into_op(self) -> LabeledOperator {
        self.0
    }

    pub fn tensor_state(&self, other: &DensityOperator) -> DensityOperator {
        Self(self.0.tensor(&other.0))
    }

    pub fn tensor_power(&self, n: usize) -> Result<DensityOperator> {
        if n == 0 {
            return invalid("tensor power needs n ≥ 1");
        }
        let mut out = self.0.clone();
        for _ in 1..n {
            out = out.tensor(&self.0);
        }
        Ok(Self(out))
    }

    /// Reduced state on the kept factors.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityOperator> {
        Ok(Self(self.0.partial_trace(keep)?))
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<DensityOperator> {
        Ok(Self(self.0.permute_factors(perm)?))
    }

    /// Convex combination `Σ p_k ρ_k`; weights must be a probability vector.
    pub fn mixture(terms: &[(f64, &DensityOperator)]) -> Result<DensityOperator> {
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if terms.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > STATE_TOL {
            return invalid("mixture weights must be non-negative and sum to one");
        }
        let ops: Vec<(f64, &LabeledOperator)> = terms.iter().map(|(w, s)| (*w, &s.0)).collect();
        Ok(Self(LabeledOperator::linear_combination(&ops)?))
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.0.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl Deref for DensityOperator {
    type Target = LabeledOperator;

    fn deref(&self) -> &LabeledOperator {
        &self.0
    }
}

impl AsRef<LabeledOperator> for DensityOperator {
    fn as_ref(&self) -> &LabeledOperator {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag_op(shape: FactorShape, diag: &[f64]) -> LabeledOperator {
        let n = diag.len();
        LabeledOperator::new(shape, CMatrix::from_fn(n, n, |r, c_| if r == c_ { c(diag[r]) } else { c(0.0) }))
            .unwrap()
    }

    #[test]
    fn shape_rejects_zero_dimension() {
        assert!(FactorShape::new(vec![(2, 0)]).is_err());
        assert_eq!(FactorShape::new(vec![(2, 3), (4, 1)]).unwrap().dim(), 24);
        assert_eq!(FactorShape::scalar().dim(), 1);
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = LabeledOperator::identity(FactorShape::plain(2).unwrap());
        let i4 = i2.tensor(&i2);
        assert_eq!(i4.shape().factors(), &[(2, 1), (2, 1)]);
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn tensor_multiplies_trace() {
        let phi = states::max_entangled(2).unwrap();
        let mixed = states::maximally_mixed(FactorShape::bipartite(2, 2).unwrap());
        let t = phi.tensor(&mixed);
        assert_eq!(t.dim(), 16);
        assert!((t.trace() - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn tensor_of_rank_one_projectors_has_rank_one() {
        let shape = FactorShape::plain(2).unwrap();
        let a = LabeledOperator::ket_bra(shape.clone(), &[c(0.6), c(0.8)]).unwrap();
        let b = LabeledOperator::ket_bra(shape, &[Complex64::new(0.0, 1.0), c(0.0)]).unwrap();
        let spec = a.tensor(&b).spectrum().unwrap();
        assert_eq!(spec.count_above(1e-12), 1);
        assert!((spec.max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_pair_is_maximally_mixed() {
        let phi = states::max_entangled(2).unwrap();
        let split = phi.relabel(phi.shape().split_sides()).unwrap();
        let a = split.partial_trace(&[0]).unwrap();
        let expected = LabeledOperator::identity(FactorShape::plain(2).unwrap()).scale(0.5);
        assert!(a.max_abs_diff(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_returns_factor() {
        let rho = states::isotropic(states::IsotropicParams::new(2, 0.5).unwrap());
        let sigma = states::max_entangled(2).unwrap();
        let t = rho.tensor(&sigma);
        assert!(t.partial_trace(&[0]).unwrap().max_abs_diff(&rho).unwrap() < 1e-15);
        assert!(t.partial_trace(&[1]).unwrap().max_abs_diff(&sigma).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_keep_sets() {
        let x = LabeledOperator::identity(FactorShape::new(vec![(2, 1), (2, 1)]).unwrap());
        assert!(matches!(x.partial_trace(&[]), Err(Error::InvalidArgument(_))));
        assert!(x.partial_trace(&[2]).is_err());
        assert!(x.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn partial_trace_keeps_original_order() {
        let a = diag_op(FactorShape::plain(2).unwrap(), &[0.25, 0.75]);
        let b = diag_op(FactorShape::plain(3).unwrap(), &[0.2, 0.3, 0.5]);
        let t = a.tensor(&b);
        assert_eq!(t.partial_trace(&[1, 0]).unwrap(), t.partial_trace(&[0, 1]).unwrap());
    }

    #[test]
    fn partial_transpose_of_product_transposes_b_factor() {
        let shape = FactorShape::bipartite(2, 2).unwrap();
        let a = LabeledOperator::ket_bra(FactorShape::plain(2).unwrap(), &[c(0.6), c(0.8)]).unwrap();
        let b = LabeledOperator::ket_bra(
            FactorShape::plain(2).unwrap(),
            &[c(0.6), Complex64::new(0.0, 0.8)],
        )
        .unwrap();
        let prod = a.tensor(&b).relabel(shape.clone()).unwrap();
        let bt = LabeledOperator::new(b.shape().clone(), b.matrix().transpose()).unwrap();
        let expected = a.tensor(&bt).relabel(shape).unwrap();
        let pt = prod.partial_transpose();
        assert!(pt.max_abs_diff(&expected).unwrap() < 1e-15);
        assert!(pt.is_psd(PSD_TOL).unwrap().psd);
    }

    #[test]
    fn partial_transpose_spectrum_of_max_entangled() {
        for d in [2usize, 3] {
            let spec = states::max_entangled(d).unwrap().partial_transpose().spectrum().unwrap();
            let inv = 1.0 / d as f64;
            let plus = spec.values().iter().filter(|v| (*v - inv).abs() < 1e-12).count();
            let minus = spec.values().iter().filter(|v| (*v + inv).abs() < 1e-12).count();
            assert_eq!(plus, d * (d + 1) / 2);
            assert_eq!(minus, d * (d - 1) / 2);
        }
    }

    #[test]
    fn eig_of_diagonal_is_sorted_diagonal() {
        let x = diag_op(FactorShape::plain(4).unwrap(), &[0.1, -2.0, 3.0, 0.5]);
        assert_eq!(x.spectrum().unwrap().values(), &[3.0, 0.5, 0.1, -2.0]);
    }

    #[test]
    fn eig_of_bell_pair() {
        let spec = states::max_entangled(2).unwrap().spectrum().unwrap();
        for (v, e) in spec.values().iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_of_isotropic_partial_transpose() {
        let rho = states::isotropic(states::IsotropicParams::new(2, 0.5).unwrap());
        let eig = rho.partial_transpose().eig_hermitian().unwrap();
        for (v, e) in eig.spectrum.values().iter().zip([0.375, 0.375, 0.375, -0.125]) {
            assert!((v - e).abs() < 1e-12);
        }
        let rebuilt = eig.reconstruct_with(|v| v);
        let pt = rho.partial_transpose();
        assert!(max_abs(&(rebuilt - pt.matrix())) <= 1e-9 * max_abs(pt.matrix()));
        let vectors = eig.vectors();
        let gram = vectors.adjoint() * &vectors;
        assert!(max_abs(&(gram - CMatrix::identity(4, 4))) < 1e-9);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let shape = FactorShape::plain(2).unwrap();
        let x = LabeledOperator::from_row_major(shape, &[c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(matches!(x.eig_hermitian(), Err(Error::InvalidArgument(_))));
        assert!(x.abs().is_err());
        assert!(x.trace_norm().is_err());
    }

    #[test]
    fn abs_of_psd_is_itself() {
        let rho = states::isotropic(states::IsotropicParams::new(3, 0.3).unwrap());
        assert!(rho.abs().unwrap().max_abs_diff(&rho).unwrap() < 1e-10);
    }

    #[test]
    fn abs_of_bell_partial_transpose_is_half_identity() {
        let pt = states::max_entangled(2).unwrap().partial_transpose();
        let expected = LabeledOperator::identity(pt.shape().clone()).scale(0.5);
        assert!(pt.abs().unwrap().max_abs_diff(&expected).unwrap() < 1e-12);
        assert!((pt.abs().unwrap().trace().re - pt.trace_norm().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trace_norms() {
        let rho = states::isotropic(states::IsotropicParams::new(2, 0.5).unwrap());
        assert!((rho.trace_norm().unwrap() - 1.0).abs() < 1e-12);
        assert!((rho.partial_transpose().trace_norm().unwrap() - 1.25).abs() < 1e-12);
        for d in 2..=4 {
            let phi = states::max_entangled(d).unwrap();
            assert!((phi.partial_transpose().trace_norm().unwrap() - d as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn permutation_cases() {
        let rho = states::isotropic(states::IsotropicParams::new(2, 0.5).unwrap());
        let sigma = states::max_entangled(2).unwrap();
        let t = rho.tensor(&sigma);
        assert_eq!(t.permute_factors(&[0, 1]).unwrap(), t);
        let swapped = t.permute_factors(&[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&sigma.tensor(&rho)).unwrap() < 1e-15);
        assert_eq!(swapped.permute_factors(&[1, 0]).unwrap(), t);
        assert!(t.permute_factors(&[0, 0]).is_err());
        assert!(t.permute_factors(&[0]).is_err());
    }

    #[test]
    fn permutation_of_unequal_factors() {
        let a = diag_op(FactorShape::plain(2).unwrap(), &[0.25, 0.75]);
        let b = diag_op(FactorShape::bipartite(3, 1).unwrap(), &[0.2, 0.3, 0.5]);
        let swapped = a.tensor(&b).permute_factors(&[1, 0]).unwrap();
        assert_eq!(swapped.shape().factors(), &[(3, 1), (2, 1)]);
        assert!(swapped.max_abs_diff(&b.tensor(&a)).unwrap() < 1e-15);
    }

    #[test]
    fn psd_tests() {
        let mixed = states::maximally_mixed(FactorShape::plain(3).unwrap());
        assert!(mixed.is_psd(PSD_TOL).unwrap().psd);
        let report = states::max_entangled(2).unwrap().partial_transpose().is_psd(PSD_TOL).unwrap();
        assert!(!report.psd);
        assert!((report.min_eigenvalue + 0.5).abs() < 1e-12);
        let rho = states::isotropic(states::IsotropicParams::new(2, 0.5).unwrap());
        assert!(rho.is_psd(PSD_TOL).unwrap().psd);
    }

    #[test]
    fn density_operator_validation() {
        let shape = FactorShape::plain(2).unwrap();
        assert!(DensityOperator::new(diag_op(shape.clone(), &[0.5, 0.5])).is_ok());
        assert!(DensityOperator::new(diag_op(shape.clone(), &[0.5, 0.6])).is_err());
        assert!(DensityOperator::new(diag_op(shape, &[1.5, -0.5])).is_err());
    }
}
