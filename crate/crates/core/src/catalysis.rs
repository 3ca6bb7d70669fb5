//! The swap-based catalytic dilution protocol and the certificates built on
//! it.
//!
//! Given a two-copy broadcast `μ` of `ρ`, preparing `μ^⊗n` on registers
//! `S S′` next to a catalyst `ρ^⊗n` on `C` and swapping `S′ ↔ C` returns the
//! catalyst marginal exactly while leaving `ρ^⊗2n` on the system. The
//! catalytic cost of `ρ` is therefore at most half the cost of `μ`, and any
//! failure of midpoint convexity of the cost produces a strict gap.

use serde::Serialize;

use crate::broadcast::{self, verify_broadcast, BROADCAST_TOL};
use crate::error::{invalid, Error, Result};
use crate::measures::{
    binegativity, exact_ppt_cost, schmidt_rank, work_cost_semiclassical, BinegativityReport, CostValue,
    BINEGATIVITY_TOL, SCHMIDT_TOL,
};
use crate::operator::DensityOperator;
use crate::states;

/// Trace-distance tolerance for the protocol's marginal checks.
pub const PROTOCOL_TOL: f64 = 1e-10;
/// Largest global dimension the protocol will materialize (2^16 entries).
pub const DIMENSION_BUDGET: usize = 256;
/// Slack for the non-strict half of the witness chain.
pub const CHAIN_TOL: f64 = 1e-10;

/// `m` ebits consumed for `n` target copies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRecord {
    pub m: u64,
    pub n: u64,
    pub rate: f64,
    /// Rate per catalytically prepared copy, `m / 2n`.
    pub catalytic_rate: f64,
}

impl RateRecord {
    pub fn new(m: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return invalid("target copy count must be at least 1");
        }
        let rate = m as f64 / n as f64;
        Ok(Self {
            m,
            n,
            rate,
            catalytic_rate: rate / 2.0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolStage {
    pub label: String,
    pub state: DensityOperator,
    /// Register name of every factor (`S1`, `S'1`, `C1`, ...).
    pub factor_labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ProtocolTrace {
    pub n: usize,
    pub stages: Vec<ProtocolStage>,
    pub final_catalyst: DensityOperator,
    pub final_system: DensityOperator,
    /// Trace distance of the final catalyst marginal from `ρ^⊗n`.
    pub catalyst_residual: f64,
    /// Trace distance of the final system marginal from `ρ^⊗2n`.
    pub system_residual: f64,
    /// Trace distance of the final `S1 C1` marginal from `ρ ⊗ ρ`; nonzero
    /// when the catalyst leaves correlated with the system.
    pub system_catalyst_correlation: f64,
    pub tol: f64,
}

impl ProtocolTrace {
    pub fn exact(&self) -> bool {
        self.catalyst_residual <= self.tol && self.system_residual <= self.tol
    }
}

/// Runs the swap protocol for `n` blocks with the broadcast `μ` substituted
/// for the dilution output `Λ(Φ^⊗m) = μ^⊗n`.
pub fn run_prop1_protocol(mu: &DensityOperator, rho: &DensityOperator, n: usize) -> Result<ProtocolTrace> {
    let report = verify_broadcast(mu, rho, 2, BROADCAST_TOL)?;
    if !report.is_broadcast {
        return invalid(format!(
            "μ is not a two-copy broadcast of ρ (residual {:.3e})",
            report.max_residual()
        ));
    }
    if n == 0 {
        return invalid("protocol needs n ≥ 1");
    }
    let dim = u32::try_from(n)
        .ok()
        .and_then(|n| mu.dim().checked_pow(n)?.checked_mul(rho.dim().checked_pow(n)?));
    match dim {
        Some(d) if d <= DIMENSION_BUDGET => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "global dimension for n = {n} exceeds the budget of {DIMENSION_BUDGET}"
            )))
        }
    }

    let k = rho.shape().len();
    let system = mu.tensor_power(n)?;
    let catalyst = rho.tensor_power(n)?;
    let global = system.tensor_state(&catalyst);

    let s_start = |j: usize| 2 * k * j;
    let sp_start = |j: usize| 2 * k * j + k;
    let c_start = |j: usize| 2 * k * n + k * j;
    let mut labels = vec![String::new(); 3 * k * n];
    for j in 0..n {
        for t in 0..k {
            labels[s_start(j) + t] = format!("S{}", j + 1);
            labels[sp_start(j) + t] = format!("S'{}", j + 1);
            labels[c_start(j) + t] = format!("C{}", j + 1);
        }
    }

    let mut perm: Vec<usize> = (0..3 * k * n).collect();
    for j in 0..n {
        for t in 0..k {
            perm.swap(sp_start(j) + t, c_start(j) + t);
        }
    }
    let swapped = global.permuted(&perm)?;

    let system_keep: Vec<usize> = (0..2 * k * n).collect();
    let catalyst_keep: Vec<usize> = (2 * k * n..3 * k * n).collect();
    let final_system = swapped.marginal(&system_keep)?;
    let final_catalyst = swapped.marginal(&catalyst_keep)?;
    let catalyst_residual = final_catalyst.trace_distance(&catalyst)?;
    let system_residual = final_system.trace_distance(rho.tensor_power(2 * n)?.as_op())?;

    let pair_keep: Vec<usize> = (0..k).chain(c_start(0)..c_start(0) + k).collect();
    let pair = swapped.marginal(&pair_keep)?;
    let system_catalyst_correlation = pair.trace_distance(&rho.tensor(rho))?;

    Ok(ProtocolTrace {
        n,
        stages: vec![
            ProtocolStage {
                label: "prepare: system μ^⊗n, catalyst ρ^⊗n".into(),
                state: global,
                factor_labels: labels.clone(),
            },
            ProtocolStage {
                label: "swap S' <-> C".into(),
                state: swapped,
                factor_labels: labels,
            },
        ],
        final_catalyst,
        final_system,
        catalyst_residual,
        system_residual,
        system_catalyst_correlation,
        tol: PROTOCOL_TOL,
    })
}

/// A standard cost compared against the catalytic upper bound `½·cost(μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvantageCertificate {
    pub cost_standard: CostValue,
    pub cost_upper_catalytic: f64,
    pub gap: f64,
    /// Binegativity gates of `ρ` and `μ` (PPT entanglement only).
    pub gates: Option<(BinegativityReport, BinegativityReport)>,
    /// Both costs come from exact formulas inside their regime.
    pub valid: bool,
}

impl AdvantageCertificate {
    pub fn certifies_advantage(&self) -> bool {
        self.valid && self.gap > 0.0
    }
}

fn require_broadcast(mu: &DensityOperator, rho: &DensityOperator) -> Result<()> {
    let report = verify_broadcast(mu, rho, 2, BROADCAST_TOL)?;
    if !report.is_broadcast {
        return invalid(format!(
            "μ is not a two-copy broadcast of ρ (residual {:.3e})",
            report.max_residual()
        ));
    }
    Ok(())
}

/// `E_c,c(ρ) ≤ ½ E_c(μ)` for the supplied broadcast, with the exact PPT cost
/// on both sides.
pub fn catalytic_cost_upper_bound(rho: &DensityOperator, mu: &DensityOperator) -> Result<AdvantageCertificate> {
    require_broadcast(mu, rho)?;
    let cost_rho = exact_ppt_cost(rho);
    let cost_mu = exact_ppt_cost(mu);
    let gate_rho = binegativity(rho, BINEGATIVITY_TOL);
    let gate_mu = binegativity(mu, BINEGATIVITY_TOL);
    let upper = 0.5 * cost_mu.bits;
    Ok(AdvantageCertificate {
        cost_standard: cost_rho,
        cost_upper_catalytic: upper,
        gap: cost_rho.bits - upper,
        gates: Some((gate_rho, gate_mu)),
        valid: gate_rho.positive && gate_mu.positive && cost_rho.is_exact() && cost_mu.is_exact(),
    })
}

/// The cost function a witness is evaluated under.
#[derive(Debug, Clone)]
pub enum CostModel {
    /// Exact PPT entanglement cost on positive-binegativity states.
    PptEntanglement,
    /// Exact work cost against the given Gibbs state, diagonal states only.
    WorkCost { gamma: DensityOperator },
}

impl CostModel {
    pub fn cost(&self, x: &DensityOperator) -> Result<f64> {
        match self {
            CostModel::PptEntanglement => {
                let c = exact_ppt_cost(x);
                if !c.is_exact() {
                    return invalid("state lies outside the positive-binegativity regime");
                }
                Ok(c.bits)
            }
            CostModel::WorkCost { gamma } => work_cost_semiclassical(x, gamma),
        }
    }

    fn two_copy(&self) -> CostModel {
        match self {
            CostModel::PptEntanglement => CostModel::PptEntanglement,
            CostModel::WorkCost { gamma } => CostModel::WorkCost {
                gamma: gamma.tensor_state(gamma),
            },
        }
    }
}

/// Evidence that the broadcast `μ = ½(σ₀⊗σ₁ + σ₁⊗σ₀)` beats twice the cost
/// of the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessChain {
    pub cost_mu: f64,
    /// `cost(μ) ≤ cost(σ₀) + cost(σ₁) < 2·cost(ρ)`.
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonconvexityWitness {
    #[serde(skip)]
    pub sigma0: DensityOperator,
    #[serde(skip)]
    pub sigma1: DensityOperator,
    #[serde(skip)]
    pub rho: DensityOperator,
    pub cost_sigma0: f64,
    pub cost_sigma1: f64,
    pub cost_rho: f64,
    /// `cost(ρ) − ½(cost(σ₀) + cost(σ₁))`; positive values violate midpoint
    /// convexity.
    pub violation: f64,
    pub chain: Option<WitnessChain>,
}

pub fn nonconvexity_witness(
    s0: &DensityOperator,
    s1: &DensityOperator,
    model: &CostModel,
) -> Result<NonconvexityWitness> {
    let rho = DensityOperator::mixture(&[(0.5, s0), (0.5, s1)])?;
    let cost_sigma0 = model.cost(s0)?;
    let cost_sigma1 = model.cost(s1)?;
    let cost_rho = model.cost(&rho)?;
    let violation = cost_rho - 0.5 * (cost_sigma0 + cost_sigma1);
    let chain = if violation > 0.0 {
        let mu = states::symmetric_two_broadcast(s0, s1)?;
        require_broadcast(&mu, &rho)?;
        let cost_mu = model.two_copy().cost(&mu)?;
        let sum = cost_sigma0 + cost_sigma1;
        Some(WitnessChain {
            cost_mu,
            holds: cost_mu <= sum + CHAIN_TOL && sum < 2.0 * cost_rho,
        })
    } else {
        None
    };
    Ok(NonconvexityWitness {
        sigma0: s0.clone(),
        sigma1: s1.clone(),
        rho,
        cost_sigma0,
        cost_sigma1,
        cost_rho,
        violation,
        chain,
    })
}

/// `2·E(ρ) − E(μ)` for a broadcast `μ` of `ρ`; positive values show the exact
/// PPT cost is not strongly superadditive.
pub fn superadditivity_violation(rho: &DensityOperator, mu: &DensityOperator) -> Result<f64> {
    require_broadcast(mu, rho)?;
    let model = CostModel::PptEntanglement;
    Ok(2.0 * model.cost(rho)? - model.cost(mu)?)
}

/// The qubit thermodynamics instance: `ρ = ½|0⟩⟨0| + ½γ` against its
/// broadcast `½(|0⟩⟨0|⊗γ + γ⊗|0⟩⟨0|)`.
pub fn thermo_advantage(p: f64) -> Result<AdvantageCertificate> {
    let gamma = states::gibbs_qubit(p)?;
    let ground = states::classical_mix(0.0, p)?;
    let rho = states::classical_mix(0.5, p)?;
    let mu = states::symmetric_two_broadcast(&ground, &gamma)?;
    require_broadcast(&mu, &rho)?;
    let standard = work_cost_semiclassical(&rho, &gamma)?;
    let upper = 0.5 * work_cost_semiclassical(&mu, &gamma.tensor_state(&gamma))?;
    Ok(AdvantageCertificate {
        cost_standard: CostValue::exact(standard),
        cost_upper_catalytic: upper,
        gap: standard - upper,
        gates: None,
        valid: true,
    })
}

/// `|log₂SR(ψ⊗φ) − log₂SR(ψ) − log₂SR(φ)|` for pure states.
pub fn pure_additivity_check(psi: &DensityOperator, phi: &DensityOperator) -> Result<f64> {
    let joint = psi.tensor_state(phi);
    let lg = |x: &DensityOperator| -> Result<f64> { Ok((schmidt_rank(x, SCHMIDT_TOL)? as f64).log2()) };
    Ok((lg(&joint)? - lg(psi)? - lg(phi)?).abs())
}

/// Confirms that the two-copy broadcast set of `Φ_d` collapses to
/// `Φ_d ⊗ Φ_d`, which is why the broadcast construction yields no
/// distillation advantage.
pub fn distillation_no_advantage_check(d: usize) -> Result<bool> {
    let phi = states::max_entangled(d)?;
    let report = broadcast::purity_rigidity(&phi, broadcast::DEFAULT_STARTS, 0, 1e-6)?;
    Ok(report.all_within)
}
