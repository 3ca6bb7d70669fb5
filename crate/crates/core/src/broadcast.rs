//! n-copy broadcasts: states on `n` copies whose every single-copy marginal is
//! a given `ρ`.
//!
//! Besides verification, this module projects arbitrary starting points onto
//! the two-copy broadcast set with Dykstra's alternating projections. Every
//! PSD `X` with `Tr_2 X = P` is supported on `supp(P) ⊗ H`, so the iteration
//! runs on the face `supp(ρ) ⊗ supp(ρ)`. Without this restriction a
//! rank-deficient `ρ` leaves the constraint set with empty interior and the
//! projections converge sublinearly; for pure `ρ` the face is one-dimensional.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::measures::{PURITY_TOL, SUPPORT_TOL};
use crate::operator::{project_psd, CMatrix, DensityOperator, LabeledOperator};
use crate::random;

pub const BROADCAST_TOL: f64 = 1e-9;
pub const DEFAULT_STARTS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadcastReport {
    pub n: usize,
    /// Trace distance between each single-copy marginal and the target.
    pub residuals: Vec<f64>,
    pub is_broadcast: bool,
    pub tol: f64,
}

impl BroadcastReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Checks `Tr_{ī} μ = ρ` for every copy `i`. Copy `i` occupies factors
/// `i·k .. (i+1)·k` of `μ`, where `k` is the factor count of `ρ`.
pub fn verify_broadcast(mu: &DensityOperator, rho: &DensityOperator, n: usize, tol: f64) -> Result<BroadcastReport> {
    if n == 0 {
        return invalid("broadcast needs at least one copy");
    }
    if mu.shape() != &rho.shape().repeat(n) {
        return invalid(format!(
            "broadcast shape {:?} is not {n} copies of {:?}",
            mu.shape().factors(),
            rho.shape().factors()
        ));
    }
    let k = rho.shape().len();
    let residuals = (0..n)
        .map(|i| {
            let keep: Vec<usize> = (i * k..(i + 1) * k).collect();
            mu.partial_trace(&keep)?.trace_distance(rho)
        })
        .collect::<Result<Vec<f64>>>()?;
    let is_broadcast = residuals.iter().all(|&r| r <= tol);
    Ok(BroadcastReport {
        n,
        residuals,
        is_broadcast,
        tol,
    })
}

fn require_pure(phi: &DensityOperator) -> Result<()> {
    let top = phi.spectrum()?.max();
    if top < 1.0 - PURITY_TOL {
        return invalid(format!("target is not pure (largest eigenvalue {top:.12})"));
    }
    Ok(())
}

/// For a pure `φ`, the only two-copy broadcast is `φ ⊗ φ`. Returns whether
/// the verified broadcast `μ` lies within trace distance `tol` of it; `false`
/// would be a numerical counterexample to that rigidity.
pub fn pure_broadcast_uniqueness(mu: &DensityOperator, phi: &DensityOperator, tol: f64) -> Result<bool> {
    require_pure(phi)?;
    let report = verify_broadcast(mu, phi, 2, BROADCAST_TOL)?;
    if !report.is_broadcast {
        return invalid(format!(
            "input is not a two-copy broadcast of the target (residual {:.3e})",
            report.max_residual()
        ));
    }
    Ok(mu.trace_distance(&phi.tensor(phi))? <= tol)
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    pub max_iter: usize,
    /// Stop once both marginal constraints hold to this entrywise accuracy.
    pub tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BroadcastProjection {
    pub state: DensityOperator,
    pub iterations: usize,
    pub converged: bool,
    /// Dimension of `supp(ρ)`; the iteration ran on its square.
    pub support_rank: usize,
    pub report: BroadcastReport,
}

/// `(Tr_2 Y, Tr_1 Y)` for `Y` on `C^r ⊗ C^r`.
fn both_marginals(y: &CMatrix, r: usize) -> (CMatrix, CMatrix) {
    let mut first = CMatrix::zeros(r, r);
    let mut second = CMatrix::zeros(r, r);
    for a in 0..r {
        for b in 0..r {
            for k in 0..r {
                first[(a, b)] += y[(a * r + k, b * r + k)];
                second[(a, b)] += y[(k * r + a, k * r + b)];
            }
        }
    }
    (first, second)
}

/// Orthogonal projection onto `{Y : Tr_2 Y = P, Tr_1 Y = P}`.
fn project_marginals(y: &CMatrix, target: &CMatrix, r: usize) -> CMatrix {
    let (first, second) = both_marginals(y, r);
    let dp = target - first;
    let dq = target - second;
    let delta = dp.trace();
    let id = CMatrix::identity(r, r);
    let inv_r = 1.0 / r as f64;
    let mut out = y + dp.kronecker(&id).scale(inv_r) + id.kronecker(&dq).scale(inv_r);
    let shift = delta * inv_r * inv_r;
    for i in 0..r * r {
        out[(i, i)] -= shift;
    }
    out
}

fn marginal_error(y: &CMatrix, target: &CMatrix, r: usize) -> f64 {
    let (first, second) = both_marginals(y, r);
    (first - target)
        .iter()
        .chain((second - target).iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Dykstra projection of `start` onto the two-copy broadcast set of `ρ`.
pub fn project_to_two_copy_broadcast(
    start: &LabeledOperator,
    rho: &DensityOperator,
    opts: ProjectionOptions,
) -> Result<BroadcastProjection> {
    let shape = rho.shape().repeat(2);
    if start.shape() != &shape {
        return invalid(format!(
            "start shape {:?} is not two copies of {:?}",
            start.shape().factors(),
            rho.shape().factors()
        ));
    }
    let eig = rho.eig_hermitian()?;
    let r = eig.spectrum.count_above(SUPPORT_TOL);
    let us = eig.vectors().columns(0, r).into_owned();
    let face = us.kronecker(&us);
    let target = us.adjoint() * rho.matrix() * &us;

    let mut y = face.adjoint() * start.matrix() * &face;
    y = (&y + y.adjoint()).scale(0.5);
    let mut inc_affine = CMatrix::zeros(r * r, r * r);
    let mut inc_cone = CMatrix::zeros(r * r, r * r);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let shifted = &y + &inc_affine;
        let y1 = project_marginals(&shifted, &target, r);
        inc_affine = shifted - &y1;
        let shifted = &y1 + &inc_cone;
        let y2 = project_psd(&shifted)?;
        inc_cone = shifted - &y2;
        y = y2;
        if marginal_error(&y, &target, r) <= opts.tol {
            converged = true;
            break;
        }
    }
    let full = &face * y * face.adjoint();
    let state = DensityOperator::with_tolerance(LabeledOperator::new(shape, full)?, 1e-9)?;
    let report = verify_broadcast(&state, rho, 2, BROADCAST_TOL)?;
    Ok(BroadcastProjection {
        state,
        iterations,
        converged,
        support_rank: r,
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub starts: usize,
    /// Largest trace distance from `φ ⊗ φ` over all projected starts.
    pub max_distance: f64,
    pub max_marginal_residual: f64,
    pub all_within: bool,
    pub tol: f64,
}

/// Projects `starts` random full-rank two-copy states onto the broadcast set
/// of the pure state `φ` and measures how far each lands from `φ ⊗ φ`.
pub fn purity_rigidity(phi: &DensityOperator, starts: usize, seed: u64, tol: f64) -> Result<RigidityReport> {
    require_pure(phi)?;
    let shape = phi.shape().repeat(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let product = phi.tensor(phi);
    let mut max_distance = 0.0f64;
    let mut max_marginal_residual = 0.0f64;
    let mut all_within = true;
    for _ in 0..starts {
        let start = random::random_state(&shape, shape.dim(), &mut rng);
        let proj = project_to_two_copy_broadcast(&start, phi, ProjectionOptions::default())?;
        let distance = proj.state.trace_distance(&product)?;
        max_distance = max_distance.max(distance);
        max_marginal_residual = max_marginal_residual.max(proj.report.max_residual());
        all_within &= proj.report.is_broadcast && pure_broadcast_uniqueness(&proj.state, phi, tol)?;
    }
    Ok(RigidityReport {
        starts,
        max_distance,
        max_marginal_residual,
        all_within,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::FactorShape;
    use crate::states::{
        classical_purification_broadcast, isotropic, max_entangled, maximally_mixed,
        symmetric_two_broadcast, IsotropicParams,
    };

    fn isotropic_pair() -> (DensityOperator, DensityOperator) {
        let rho = isotropic(IsotropicParams::new(2, 0.5).unwrap());
        let phi = max_entangled(2).unwrap();
        let mu = symmetric_two_broadcast(&phi, &maximally_mixed(phi.shape().clone())).unwrap();
        (rho, mu)
    }

    #[test]
    fn tensor_power_is_broadcast() {
        let (rho, _) = isotropic_pair();
        for n in 1..=3 {
            let report = verify_broadcast(&rho.tensor_power(n).unwrap(), &rho, n, BROADCAST_TOL).unwrap();
            assert!(report.is_broadcast);
            assert!(report.max_residual() < 1e-14);
        }
    }

    #[test]
    fn isotropic_broadcast_verifies() {
        let (rho, mu) = isotropic_pair();
        assert!(verify_broadcast(&mu, &rho, 2, BROADCAST_TOL).unwrap().is_broadcast);
    }

    #[test]
    fn purification_is_broadcast_of_classical_state() {
        let (psi, rho) = classical_purification_broadcast(&[0.5, 0.3, 0.2]).unwrap();
        assert!(verify_broadcast(&psi, &rho, 2, BROADCAST_TOL).unwrap().is_broadcast);
    }

    #[test]
    fn non_broadcast_and_shape_errors() {
        let (rho, _) = isotropic_pair();
        let phi = max_entangled(2).unwrap();
        let report = verify_broadcast(&phi.tensor_state(&rho), &rho, 2, BROADCAST_TOL).unwrap();
        assert!(!report.is_broadcast);
        assert!(report.residuals[1] < 1e-14);
        assert!(verify_broadcast(&rho, &rho, 2, BROADCAST_TOL).is_err());
        assert!(verify_broadcast(&rho, &rho, 0, BROADCAST_TOL).is_err());
    }

    #[test]
    fn uniqueness_on_product_and_errors() {
        let phi = max_entangled(2).unwrap();
        assert!(pure_broadcast_uniqueness(&phi.tensor_state(&phi), &phi, 1e-9).unwrap());
        let (rho, mu) = isotropic_pair();
        assert!(pure_broadcast_uniqueness(&mu, &rho, 1e-9).is_err());
        assert!(pure_broadcast_uniqueness(&rho.tensor_state(&rho), &phi, 1e-9).is_err());
    }

    #[test]
    fn projection_lands_on_product_for_pure_target() {
        let report = purity_rigidity(&max_entangled(2).unwrap(), 5, 1, 1e-6).unwrap();
        assert!(report.all_within, "{report:?}");
        assert!(report.max_distance < 1e-10);
    }

    #[test]
    fn projection_onto_mixed_broadcast_set() {
        let (rho, _) = isotropic_pair();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shape = rho.shape().repeat(2);
        for _ in 0..3 {
            let start = random::random_state(&shape, 16, &mut rng);
            let proj = project_to_two_copy_broadcast(&start, &rho, ProjectionOptions::default()).unwrap();
            assert!(proj.converged, "iterations {}", proj.iterations);
            assert_eq!(proj.support_rank, 4);
            assert!(proj.report.is_broadcast);
        }
    }

    #[test]
    fn projection_of_broadcast_is_fixed() {
        let (rho, mu) = isotropic_pair();
        let proj = project_to_two_copy_broadcast(&mu, &rho, ProjectionOptions::default()).unwrap();
        assert!(proj.state.max_abs_diff(&mu).unwrap() < 1e-12);
    }

    #[test]
    fn projection_rejects_wrong_start_shape() {
        let (rho, _) = isotropic_pair();
        let start = maximally_mixed(FactorShape::bipartite(4, 4).unwrap());
        assert!(project_to_two_copy_broadcast(&start, &rho, ProjectionOptions::default()).is_err());
    }
}
