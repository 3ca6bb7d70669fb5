//! Choi operators, the PPT-operation test, and a Dykstra feasibility solver
//! that synthesizes explicit PPT dilution maps `Λ(Φ₂^⊗m) = target`.
//!
//! Choi convention: `J = Σ |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` with the input factors first,
//! so `Λ(X) = Σ_ij X_ij J_ij` where `J_ij` is the `(i, j)` output block.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::operator::{hermitian_eig, project_psd, CMatrix, DensityOperator, FactorShape, LabeledOperator, PartialTransposeMap};
use crate::states;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 20_000;
/// Iterations without a 1% improvement of the best residual before the
/// solver gives up.
pub const STALL_WINDOW: usize = 500;
/// Largest Choi dimension (input times output) the solver accepts.
pub const CHOI_BUDGET: usize = 256;
/// Validation tolerance for states produced by `apply_choi`.
pub const APPLY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    op: LabeledOperator,
    n_in: usize,
}

impl ChoiOperator {
    /// Wraps `op`, whose factors listed in `input_factors` are the channel
    /// input; the remaining factors are the output. Factors are reordered so
    /// inputs come first, each group keeping its relative order.
    pub fn new(op: LabeledOperator, input_factors: &[usize]) -> Result<Self> {
        let nf = op.shape().len();
        let mut is_input = vec![false; nf];
        for &f in input_factors {
            if f >= nf || std::mem::replace(&mut is_input[f], true) {
                return invalid(format!("bad input factor list {input_factors:?} for {nf} factors"));
            }
        }
        let mut sorted = input_factors.to_vec();
        sorted.sort_unstable();
        let perm: Vec<usize> = sorted.iter().copied().chain((0..nf).filter(|&f| !is_input[f])).collect();
        let op = if perm.iter().enumerate().all(|(i, &p)| i == p) {
            op
        } else {
            op.permute_factors(&perm)?
        };
        Ok(Self {
            op,
            n_in: input_factors.len(),
        })
    }

    fn from_blocks(input: &FactorShape, output: &FactorShape, matrix: CMatrix) -> Result<Self> {
        Ok(Self {
            op: LabeledOperator::new(input.concat(output), matrix)?,
            n_in: input.len(),
        })
    }

    /// Choi operator of `X ↦ Σ_ij X_ij image(i, j)` for basis images.
    pub fn from_action(
        input: &FactorShape,
        output: &FactorShape,
        image: impl Fn(usize, usize) -> CMatrix,
    ) -> Result<Self> {
        let (a, b) = (input.dim(), output.dim());
        let mut j = CMatrix::zeros(a * b, a * b);
        for r in 0..a {
            for c in 0..a {
                let block = image(r, c);
                if block.nrows() != b || block.ncols() != b {
                    return invalid(format!("basis image is {}x{}, expected {b}x{b}", block.nrows(), block.ncols()));
                }
                j.view_mut((r * b, c * b), (b, b)).copy_from(&block);
            }
        }
        Self::from_blocks(input, output, j)
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn input_shape(&self) -> FactorShape {
        FactorShape::new(self.op.shape().factors()[..self.n_in].to_vec()).expect("subshape of a valid shape")
    }

    pub fn output_shape(&self) -> FactorShape {
        FactorShape::new(self.op.shape().factors()[self.n_in..].to_vec()).expect("subshape of a valid shape")
    }

    pub fn input_factors(&self) -> Vec<usize> {
        (0..self.n_in).collect()
    }

    fn dims(&self) -> (usize, usize) {
        (self.input_shape().dim(), self.output_shape().dim())
    }
}

/// `Σ_ij x_ij J_ij` without validation.
fn act(j: &CMatrix, x: &CMatrix, b: usize) -> CMatrix {
    let a = x.nrows();
    let mut out = CMatrix::zeros(b, b);
    for r in 0..a {
        for c in 0..a {
            let w = x[(r, c)];
            if w != Complex64::new(0.0, 0.0) {
                out += j.view((r * b, c * b), (b, b)) * w;
            }
        }
    }
    out
}

/// `Tr_out J` as an `a × a` matrix.
fn output_trace(j: &CMatrix, a: usize, b: usize) -> CMatrix {
    CMatrix::from_fn(a, a, |r, c| (0..b).map(|k| j[(r * b + k, c * b + k)]).sum())
}

pub fn apply_choi(j: &ChoiOperator, x: &DensityOperator) -> Result<DensityOperator> {
    let input = j.input_shape();
    if x.shape() != &input {
        return invalid(format!(
            "state shape {:?} does not match channel input {:?}",
            x.shape().factors(),
            input.factors()
        ));
    }
    let out = act(j.op.matrix(), x.matrix(), j.output_shape().dim());
    DensityOperator::with_tolerance(LabeledOperator::new(j.output_shape(), out)?, APPLY_TOL)
}

pub fn identity_choi(shape: &FactorShape) -> ChoiOperator {
    let d = shape.dim();
    ChoiOperator::from_action(shape, shape, |r, c| {
        let mut m = CMatrix::zeros(d, d);
        m[(r, c)] = Complex64::new(1.0, 0.0);
        m
    })
    .expect("square basis images")
}

/// Choi operator of `X ↦ Tr(X) σ`.
pub fn replacer_choi(input: &FactorShape, sigma: &DensityOperator) -> ChoiOperator {
    let zero = CMatrix::zeros(sigma.dim(), sigma.dim());
    ChoiOperator::from_action(input, sigma.shape(), |r, c| if r == c { sigma.matrix().clone() } else { zero.clone() })
        .expect("square basis images")
}

/// Choi operator of the full transpose `X ↦ X^T`, which is positive but not
/// completely positive.
pub fn transpose_map_choi(shape: &FactorShape) -> ChoiOperator {
    let d = shape.dim();
    ChoiOperator::from_action(shape, shape, |r, c| {
        let mut m = CMatrix::zeros(d, d);
        m[(c, r)] = Complex64::new(1.0, 0.0);
        m
    })
    .expect("square basis images")
}

/// `X ↦ ½X + ½Tr(X)𝟙/d²` on a `(d, d)` system.
pub fn analytic_mixer_choi(d: usize) -> Result<ChoiOperator> {
    if d < 2 {
        return invalid(format!("mixer needs d ≥ 2, got {d}"));
    }
    let shape = FactorShape::bipartite(d, d)?;
    let id = identity_choi(&shape);
    let replace = replacer_choi(&shape, &states::maximally_mixed(shape.clone()));
    let j = (id.op.matrix() + replace.op.matrix()) * Complex64::new(0.5, 0.0);
    ChoiOperator::from_blocks(&shape, &shape, j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `max(0, −λ_min(J))`.
    pub cp: f64,
    /// `max(0, −λ_min(J^Γ))`, `Γ` acting on every B side of input and output.
    pub ppt: f64,
    /// Largest eigenvalue magnitude of `Tr_out J − 𝟙`.
    pub tp: f64,
    /// Trace distance of `Λ(input)` from the target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correctness: Option<f64>,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.cp, self.ppt, self.tp, self.correctness.unwrap_or(0.0)]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Residuals,
    #[serde(skip)]
    pub feasible_point: Option<ChoiOperator>,
    /// Best `max` residual after each iteration; non-increasing.
    pub best_history: Vec<f64>,
    /// The solver stopped early because the best residual stopped improving.
    pub stalled: bool,
    /// `−λ_min(target^Γ)` when the input is trivial and the target is NPT: a
    /// positive lower bound on `ppt` + `correctness` over all candidates.
    pub npt_lower_bound: Option<f64>,
    pub tol: f64,
}

fn min_eig(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.spectrum.min())
}

fn spectral_radius(m: &CMatrix) -> Result<f64> {
    let s = hermitian_eig(m)?.spectrum;
    Ok(s.max().abs().max(s.min().abs()))
}

fn positivity_residuals(j: &CMatrix, pt: &PartialTransposeMap, a: usize, b: usize) -> Result<(f64, f64, f64)> {
    let cp = (-min_eig(j)?).max(0.0);
    let ppt = (-min_eig(&pt.apply(j))?).max(0.0);
    let tp = spectral_radius(&(output_trace(j, a, b) - CMatrix::identity(a, a)))?;
    Ok((cp, ppt, tp))
}

/// CP, PPT and TP residuals of `J`; `converged` means all are within `tol`.
pub fn verify_ppt_operation(j: &ChoiOperator, tol: f64) -> Result<SolveReport> {
    let (a, b) = j.dims();
    let pt = PartialTransposeMap::new(j.op.shape());
    let (cp, ppt, tp) = positivity_residuals(j.op.matrix(), &pt, a, b)?;
    let residuals = Residuals {
        cp,
        ppt,
        tp,
        correctness: None,
    };
    let converged = residuals.max() <= tol;
    Ok(SolveReport {
        converged,
        iterations: 0,
        residuals,
        feasible_point: converged.then(|| j.clone()),
        best_history: vec![residuals.max()],
        stalled: false,
        npt_lower_bound: None,
        tol,
    })
}

/// Orthogonal projection onto `{Tr_out J = 𝟙} ∩ {Σ φ_ij J_ij = target}` for a
/// pure input `φ`. The two constraint projectors commute, so the projection
/// is `K + (I − Q_tp)(I − Q_c) J` with `K` the minimum-norm feasible point.
struct AffineProjector {
    phi_t: CMatrix,
    phi: CMatrix,
    offset: CMatrix,
    a: usize,
    b: usize,
}

impl AffineProjector {
    fn new(phi: &CMatrix, target: &CMatrix) -> Self {
        let (a, b) = (phi.nrows(), target.nrows());
        let phi_t = phi.transpose();
        let id_b = CMatrix::identity(b, b);
        let scaled_id = &id_b / Complex64::new(b as f64, 0.0);
        let offset = CMatrix::identity(a, a).kronecker(&scaled_id) + phi_t.kronecker(target)
            - phi_t.kronecker(&scaled_id);
        Self {
            phi_t,
            phi: phi.clone(),
            offset,
            a,
            b,
        }
    }

    fn apply(&self, j: &CMatrix) -> CMatrix {
        let (a, b) = (self.a, self.b);
        let m = act(j, &self.phi, b);
        let tr_m = m.trace();
        let tr_out = output_trace(j, a, b);
        let inv_b = 1.0 / b as f64;
        let mut out = j.clone();
        for r in 0..a {
            for c in 0..a {
                let w = self.phi_t[(r, c)];
                let shift = tr_out[(r, c)] * inv_b - w * tr_m * inv_b;
                let mut block = out.view_mut((r * b, c * b), (b, b));
                if w != Complex64::new(0.0, 0.0) {
                    block -= &m * w;
                }
                for k in 0..b {
                    block[(k, k)] -= shift;
                }
            }
        }
        out + &self.offset
    }
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Searches for a PPT operation `Λ` with `Λ(Φ₂^⊗m) = target` by Dykstra's
/// alternating projections over the CP cone, the PPT cone and the affine
/// TP-plus-correctness set.
pub fn synthesize_ppt_dilution(m: usize, target: &DensityOperator, max_iter: usize, tol: f64) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    let input_shape = FactorShape::bipartite(2, 2)?.repeat(m);
    let (a, b) = (input_shape.dim(), target.dim());
    if a.checked_mul(b).map_or(true, |n| n > CHOI_BUDGET) {
        return Err(Error::ResourceLimit(format!(
            "Choi dimension for m = {m} and target dimension {b} exceeds {CHOI_BUDGET}"
        )));
    }
    let input = if m == 0 {
        LabeledOperator::identity(FactorShape::scalar())
    } else {
        states::max_entangled(2)?.tensor_power(m)?.into_op()
    };
    let choi_shape = input_shape.concat(target.shape());
    let pt = PartialTransposeMap::new(&choi_shape);
    let affine = AffineProjector::new(input.matrix(), target.matrix());

    let npt_lower_bound = if m == 0 {
        let lam = target.partial_transpose().spectrum()?.min();
        (lam < 0.0).then_some(-lam)
    } else {
        None
    };

    let residuals_of = |j: &CMatrix| -> Result<Residuals> {
        let (cp, ppt, tp) = positivity_residuals(j, &pt, a, b)?;
        let out = hermitize(act(j, input.matrix(), b)) - target.matrix();
        let correctness = 0.5 * hermitian_eig(&out)?.spectrum.abs_sum();
        Ok(Residuals {
            cp,
            ppt,
            tp,
            correctness: Some(correctness),
        })
    };

    let n = a * b;
    let mut y = affine.offset.clone();
    let mut inc = [CMatrix::zeros(n, n), CMatrix::zeros(n, n), CMatrix::zeros(n, n)];
    let mut best = (residuals_of(&y)?, y.clone());
    let mut history = vec![best.0.max()];
    let mut last_improvement = (0, best.0.max());
    let mut iterations = 0;
    let mut stalled = false;
    while iterations < max_iter && best.0.max() > tol {
        iterations += 1;
        let shifted = &y + &inc[0];
        let y1 = project_psd(&shifted)?;
        inc[0] = shifted - &y1;
        let shifted = &y1 + &inc[1];
        let y2 = pt.apply(&project_psd(&pt.apply(&shifted))?);
        inc[1] = shifted - &y2;
        let shifted = &y2 + &inc[2];
        let y3 = hermitize(affine.apply(&shifted));
        inc[2] = shifted - &y3;
        y = y3;

        let r = residuals_of(&y)?;
        if r.max() < best.0.max() {
            best = (r, y.clone());
        }
        let current = best.0.max();
        history.push(current);
        if current < 0.99 * last_improvement.1 {
            last_improvement = (iterations, current);
        } else if iterations - last_improvement.0 >= STALL_WINDOW {
            stalled = true;
            break;
        }
    }

    let (residuals, point) = best;
    let converged = residuals.max() <= tol;
    Ok(SolveReport {
        converged,
        iterations,
        residuals,
        feasible_point: if converged {
            Some(ChoiOperator::from_blocks(&input_shape, target.shape(), point)?)
        } else {
            None
        },
        best_history: history,
        stalled,
        npt_lower_bound,
        tol,
    })
}
