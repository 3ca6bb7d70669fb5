//! Scalar resource measures: logarithmic negativity and the binegativity gate,
//! exact PPT cost, max-relative entropy (fixed reference and against the PPT
//! isotropic segment), Schmidt rank, and the semiclassical work cost.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::operator::{DensityOperator, LabeledOperator, PSD_TOL};
use crate::states;

/// Default tolerance on the minimum eigenvalue of `|ρ^Γ|^Γ`.
pub const BINEGATIVITY_TOL: f64 = 1e-9;
/// Marginal eigenvalues above this count towards the Schmidt rank.
pub const SCHMIDT_TOL: f64 = 1e-9;
/// Eigenvalues of the reference at or below this are outside its support.
pub const SUPPORT_TOL: f64 = 1e-11;
/// A state is pure when its largest eigenvalue is at least `1 − PURITY_TOL`.
pub const PURITY_TOL: f64 = 1e-9;
/// Off-diagonal magnitude allowed for "diagonal in the energy basis".
pub const DIAGONAL_TOL: f64 = 1e-10;
/// Golden-section termination width in the fidelity parameter.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Allowed distance between an input and its twirl for the isotropic D_max.
pub const TWIRL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Applicability {
    ExactFormula,
    UpperBoundOnly,
    Undefined,
}

/// A cost in bits together with the regime that justifies it. Undefined costs
/// carry `NaN` bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostValue {
    pub bits: f64,
    pub applicability: Applicability,
}

impl CostValue {
    pub fn exact(bits: f64) -> Self {
        Self {
            bits,
            applicability: Applicability::ExactFormula,
        }
    }

    pub fn undefined() -> Self {
        Self {
            bits: f64::NAN,
            applicability: Applicability::Undefined,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.applicability == Applicability::ExactFormula
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinegativityReport {
    pub min_eigenvalue: f64,
    pub positive: bool,
    pub tol: f64,
}

fn hermitian_ok<T>(r: Result<T>) -> T {
    r.expect("partial transposes of density operators are Hermitian")
}

/// `log₂‖ρ^Γ‖₁`; exactly zero when `ρ^Γ` passes the PSD test.
pub fn log_negativity(rho: &DensityOperator) -> f64 {
    let spectrum = hermitian_ok(rho.partial_transpose().spectrum());
    let norm = spectrum.abs_sum();
    if spectrum.min() >= -PSD_TOL * norm {
        return 0.0;
    }
    norm.log2().max(0.0)
}

/// Minimum eigenvalue of `|ρ^Γ|^Γ`.
pub fn binegativity(rho: &DensityOperator, tol: f64) -> BinegativityReport {
    let abs_pt = hermitian_ok(rho.partial_transpose().abs());
    let min_eigenvalue = hermitian_ok(abs_pt.partial_transpose().spectrum()).min();
    BinegativityReport {
        min_eigenvalue,
        positive: min_eigenvalue >= -tol,
        tol,
    }
}

/// Exact PPT entanglement cost, available in closed form (as `L_N`) only on
/// states with positive binegativity. Outside that set the cost is reported as
/// undefined rather than extrapolated.
pub fn exact_ppt_cost(rho: &DensityOperator) -> CostValue {
    if binegativity(rho, BINEGATIVITY_TOL).positive {
        CostValue::exact(log_negativity(rho))
    } else {
        CostValue::undefined()
    }
}

/// Max-relative entropy `log₂ min{s : ρ ≤ s·σ}`, `+∞` when the support of
/// `ρ` is not contained in that of `σ`.
pub fn d_max(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            rho.shape().factors(),
            sigma.shape().factors()
        ));
    }
    let eig = sigma.eig_hermitian()?;
    let values = eig.spectrum.values();
    let support = values.iter().take_while(|&&v| v > SUPPORT_TOL).count();
    let vectors = eig.vectors();
    let vs = vectors.columns(0, support);
    let vk = vectors.columns(support, values.len() - support);
    let outside = (vk.adjoint() * rho.matrix() * vk).trace().re;
    if outside > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    if support == 0 {
        return Ok(f64::INFINITY);
    }
    let mut whitened = vs.adjoint() * rho.matrix() * vs;
    for i in 0..support {
        for j in 0..support {
            whitened[(i, j)] /= (values[i] * values[j]).sqrt();
        }
    }
    let top = crate::operator::hermitian_eig(&whitened)?.spectrum.max();
    Ok(top.log2().max(0.0))
}

/// `D_max(ρ‖PPT)` for an isotropic-symmetric `ρ`: twirling reduces the PPT
/// set to the isotropic states with fidelity `g ∈ (0, 1/d]`, over which a
/// golden-section search minimizes `D_max(ρ‖σ_g)`.
pub fn d_max_to_ppt_isotropic(rho: &DensityOperator) -> Result<f64> {
    let twirled = states::isotropic_twirl(rho)?;
    let asym = twirled.max_abs_diff(rho)?;
    if asym > TWIRL_TOL {
        return invalid(format!("input is not isotropic-symmetric (twirl residual {asym:.3e})"));
    }
    let d = match rho.shape().factors() {
        &[(d, _)] => d,
        _ => unreachable!("twirl checked the shape"),
    };
    let f = states::fidelity_with_max_entangled(rho)?;
    let upper = 1.0 / d as f64;
    if f <= upper {
        return Ok(0.0);
    }
    let objective = |g: f64| -> Result<f64> { d_max(rho, &states::isotropic_with_fidelity(d, g)?) };
    let best = golden_section_min(objective, 0.0, upper, GOLDEN_TOL)?;
    // The closed upper endpoint is part of the PPT segment; the bracket
    // interior never evaluates it.
    Ok(best.min(objective(upper)?))
}

/// Minimum value seen by a golden-section search on `[lo, hi]`.
fn golden_section_min(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(fc.min(fd).min(f(0.5 * (a + b))?))
}

fn require_pure(psi: &LabeledOperator) -> Result<()> {
    let top = psi.spectrum()?.max();
    if top < 1.0 - PURITY_TOL {
        return invalid(format!("state is not pure (largest eigenvalue {top:.12})"));
    }
    Ok(())
}

/// Reduced state on the A side of the global cut.
fn a_side_marginal(x: &LabeledOperator) -> Result<LabeledOperator> {
    let split = x.relabel(x.shape().split_sides())?;
    let keep: Vec<usize> = (0..split.shape().len()).step_by(2).collect();
    split.partial_trace(&keep)
}

/// Schmidt rank across the global A:B cut of a pure state.
pub fn schmidt_rank(psi: &DensityOperator, tol: f64) -> Result<usize> {
    require_pure(psi)?;
    Ok(a_side_marginal(psi)?.spectrum()?.count_above(tol))
}

/// Exact LOCC cost of a pure state, `log₂` of its Schmidt rank.
pub fn exact_locc_cost_pure(psi: &DensityOperator) -> Result<f64> {
    Ok((schmidt_rank(psi, SCHMIDT_TOL)? as f64).log2())
}

fn diagonal_of(x: &LabeledOperator) -> Result<Vec<f64>> {
    let m = x.matrix();
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            if r != c && m[(r, c)].norm() > DIAGONAL_TOL {
                return invalid("state is not diagonal in the energy basis");
            }
        }
    }
    Ok((0..n).map(|i| m[(i, i)].re).collect())
}

/// Exact work cost `D_max(ρ‖γ) = log₂ max_i p_i/γ_i` for states diagonal in
/// the energy basis.
pub fn work_cost_semiclassical(rho: &DensityOperator, gamma: &DensityOperator) -> Result<f64> {
    if rho.shape() != gamma.shape() {
        return invalid("state and Gibbs reference differ in shape");
    }
    let p = diagonal_of(rho)?;
    let g = diagonal_of(gamma)?;
    let mut worst = 0.0f64;
    for (pi, gi) in p.iter().zip(&g) {
        if *pi <= 0.0 {
            continue;
        }
        if *gi <= SUPPORT_TOL {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(pi / gi);
    }
    Ok(worst.log2())
}
