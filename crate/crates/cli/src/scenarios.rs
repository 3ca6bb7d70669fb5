use std::path::Path;

use dilution_core::broadcast::{pure_broadcast_uniqueness, purity_rigidity, verify_broadcast, BROADCAST_TOL};
use dilution_core::catalysis::{
    catalytic_cost_upper_bound, nonconvexity_witness, run_prop1_protocol, superadditivity_violation,
    thermo_advantage, CostModel, PROTOCOL_TOL,
};
use dilution_core::interchange::{read_state, OperatorDocument};
use dilution_core::measures::{
    binegativity, d_max_to_ppt_isotropic, log_negativity, work_cost_semiclassical, BINEGATIVITY_TOL, PURITY_TOL,
};
use dilution_core::states::{self, IsotropicParams};
use dilution_core::synthesis::{apply_choi, synthesize_ppt_dilution, verify_ppt_operation};
use dilution_core::DensityOperator;

use crate::report::{ScenarioReport, Table};
use crate::CliError;

/// Tolerance for closed-form comparisons of logarithmic negativities and costs.
pub const FORMULA_TOL: f64 = 1e-9;
/// Tolerance for the thermodynamic closed forms, which involve no eigensolver.
pub const THERMO_TOL: f64 = 1e-12;
/// Tolerance for the symmetry-reduced `D_max(ρ‖PPT)` search.
pub const DMAX_TOL: f64 = 1e-6;
pub const MAX_D: usize = 8;
/// Random starts for the rigidity check run by `verify-broadcast` on pure states.
pub const RIGIDITY_STARTS: usize = 10;

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn check_d(d: usize) -> Result<(), CliError> {
    if !(2..=MAX_D).contains(&d) {
        return usage(format!("--d must lie in 2..={MAX_D}, got {d}"));
    }
    Ok(())
}

/// `log₂((d²+1)/d) − 1`.
pub fn isotropic_half_closed_form(d: usize) -> f64 {
    let d = d as f64;
    ((d * d + 1.0) / d).log2() - 1.0
}

/// `ρ = ½Φ_d + ½𝟙/d²` and its broadcast `μ = ½(Φ⊗𝟙/d² + 𝟙/d²⊗Φ)`.
pub fn isotropic_pair(d: usize) -> Result<(DensityOperator, DensityOperator), CliError> {
    let rho = states::isotropic(IsotropicParams::new(d, 0.5)?);
    let phi = states::max_entangled(d)?;
    let mixed = states::maximally_mixed(phi.shape().clone());
    let mu = states::symmetric_two_broadcast(&phi, &mixed)?;
    Ok((rho, mu))
}

pub fn cmd_werner_example(d: usize) -> Result<ScenarioReport, CliError> {
    check_d(d)?;
    let (rho, mu) = isotropic_pair(d)?;
    let closed = isotropic_half_closed_form(d);
    let mut r = ScenarioReport::new("werner-example");
    r.param("d", d).param("lam", 0.5);

    let broadcast = verify_broadcast(&mu, &rho, 2, BROADCAST_TOL)?;
    r.quantity("broadcast_residual", broadcast.max_residual(), BROADCAST_TOL, Some(0.0));
    r.quantity("log_negativity_rho", log_negativity(&rho), FORMULA_TOL, Some(closed));
    r.quantity("log_negativity_mu", log_negativity(&mu), FORMULA_TOL, Some(closed));

    let gate_rho = binegativity(&rho, BINEGATIVITY_TOL);
    let gate_mu = binegativity(&mu, BINEGATIVITY_TOL);
    r.quantity("binegativity_min_rho", gate_rho.min_eigenvalue, BINEGATIVITY_TOL, None);
    r.quantity("binegativity_min_mu", gate_mu.min_eigenvalue, BINEGATIVITY_TOL, None);
    r.flag("binegativity_gate_rho", gate_rho.positive);
    r.flag("binegativity_gate_mu", gate_mu.positive);

    let cert = catalytic_cost_upper_bound(&rho, &mu)?;
    r.quantity("cost_standard", cert.cost_standard.bits, FORMULA_TOL, Some(closed));
    r.quantity("cost_upper_catalytic", cert.cost_upper_catalytic, FORMULA_TOL, Some(closed / 2.0));
    r.quantity("gap", cert.gap, FORMULA_TOL, Some(closed / 2.0));
    r.flag("advantage_certified", cert.certifies_advantage());
    r.certificate("advantage", &cert);

    let violation = superadditivity_violation(&rho, &mu)?;
    r.quantity("superadditivity_violation", violation, FORMULA_TOL, Some(closed));
    Ok(r)
}

/// `q_grid` evenly spaced points on `[0, 1]`.
fn grid(q_grid: usize) -> Vec<f64> {
    let last = (q_grid - 1) as f64;
    (0..q_grid).map(|i| i as f64 / last).collect()
}

pub fn cmd_thermo_example(p: f64, q_grid: usize) -> Result<ScenarioReport, CliError> {
    if !(p > 0.0 && p < 0.5) {
        return usage(format!("--p must satisfy 0 < p < 0.5, got {p}"));
    }
    if q_grid < 2 {
        return usage(format!("--q-grid needs at least 2 points, got {q_grid}"));
    }
    let mut r = ScenarioReport::new("thermo-example");
    r.param("p", p).param("q_grid", q_grid);
    let gamma = states::gibbs_qubit(p)?;

    let mut rows = Vec::with_capacity(q_grid);
    let mut worst = 0.0f64;
    for q in grid(q_grid) {
        let w = work_cost_semiclassical(&states::classical_mix(q, p)?, &gamma)?;
        let closed = ((1.0 - p * q) / (1.0 - p)).log2();
        worst = worst.max((w - closed).abs());
        rows.push(vec![q, w, closed]);
    }
    r.quantity("sweep_max_deviation", worst, THERMO_TOL, Some(0.0));
    r.quantity("work_cost_q0", rows[0][1], THERMO_TOL, Some((1.0 / (1.0 - p)).log2()));
    r.quantity("work_cost_q1", rows[q_grid - 1][1], THERMO_TOL, Some(0.0));
    r.table = Some(Table {
        columns: vec!["q".into(), "work_cost".into(), "closed_form".into()],
        rows,
    });

    let ground = states::classical_mix(0.0, p)?;
    let witness = nonconvexity_witness(&ground, &gamma, &CostModel::WorkCost { gamma: gamma.clone() })?;
    let expected_violation = ((1.0 - p / 2.0) / (1.0 - p)).log2() - 0.5 * (1.0 / (1.0 - p)).log2();
    r.quantity("midpoint_violation", witness.violation, THERMO_TOL, Some(expected_violation));
    r.flag("witness_chain", witness.chain.is_some_and(|c| c.holds));
    r.certificate("witness", &witness);

    let cert = thermo_advantage(p)?;
    r.quantity("cost_standard", cert.cost_standard.bits, THERMO_TOL, None);
    r.quantity("cost_upper_catalytic", cert.cost_upper_catalytic, THERMO_TOL, None);
    r.quantity("gap", cert.gap, THERMO_TOL, Some(expected_violation));
    r.flag("advantage_certified", cert.certifies_advantage());
    r.certificate("advantage", &cert);
    Ok(r)
}

pub fn cmd_dmax_ppt(d: usize, lam: f64) -> Result<ScenarioReport, CliError> {
    check_d(d)?;
    if !(0.0..=1.0).contains(&lam) {
        return usage(format!("--lam must lie in [0, 1], got {lam}"));
    }
    let params = IsotropicParams::new(d, lam)?;
    let rho = states::isotropic(params);
    let mut r = ScenarioReport::new("dmax-ppt");
    r.param("d", d).param("lam", lam);
    let f = params.fidelity();
    let closed = if f > 1.0 / d as f64 { (f * d as f64).log2() } else { 0.0 };
    let ln = log_negativity(&rho);
    r.quantity("fidelity", f, FORMULA_TOL, None);
    r.quantity("log_negativity", ln, FORMULA_TOL, Some(closed));
    r.quantity("d_max_ppt", d_max_to_ppt_isotropic(&rho)?, DMAX_TOL, Some(ln));
    Ok(r)
}

/// Resolves `phi-d`, `noisy-phi-d` and `broadcast-d`.
pub fn named_state(name: &str) -> Result<DensityOperator, CliError> {
    let (kind, d) = name
        .rsplit_once('-')
        .and_then(|(k, d)| Some((k, d.parse::<usize>().ok()?)))
        .ok_or_else(|| CliError::Usage(format!("unknown state `{name}`")))?;
    check_d(d)?;
    match kind {
        "phi" => Ok(states::max_entangled(d)?),
        "noisy-phi" => Ok(isotropic_pair(d)?.0),
        "broadcast" => Ok(isotropic_pair(d)?.1),
        _ => usage(format!("unknown state `{name}` (expected phi-d, noisy-phi-d or broadcast-d)")),
    }
}

pub fn read_state_file(path: &Path) -> Result<DensityOperator, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    read_state(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub enum Target<'a> {
    Named(&'a str),
    File(&'a Path),
}

pub struct SynthesisRun {
    pub report: ScenarioReport,
    /// Interchange document of the feasible Choi operator, when one was found.
    pub choi_document: Option<String>,
}

pub fn cmd_synthesize(m: usize, target: Target<'_>, tol: f64, max_iter: usize) -> Result<SynthesisRun, CliError> {
    if !(tol > 0.0) {
        return usage(format!("--tol must be positive, got {tol}"));
    }
    let (label, state) = match target {
        Target::Named(name) => (name.to_string(), named_state(name)?),
        Target::File(path) => (path.display().to_string(), read_state_file(path)?),
    };
    let mut r = ScenarioReport::new("synthesize");
    r.param("m", m).param("target", label).param("tol", tol).param("max_iter", max_iter);

    let solve = synthesize_ppt_dilution(m, &state, max_iter, tol)?;
    r.quantity("iterations", solve.iterations as f64, 0.0, None);
    r.quantity("residual_cp", solve.residuals.cp, tol, None);
    r.quantity("residual_ppt", solve.residuals.ppt, tol, None);
    r.quantity("residual_tp", solve.residuals.tp, tol, None);
    r.quantity("residual_correctness", solve.residuals.correctness.unwrap_or(f64::NAN), tol, None);
    if let Some(bound) = solve.npt_lower_bound {
        r.quantity("npt_witness", -bound, FORMULA_TOL, None);
    }
    r.flag("history_monotone", solve.best_history.windows(2).all(|w| w[1] <= w[0]));
    r.flag("converged", solve.converged);
    r.certificate(
        "solve",
        &serde_json::json!({
            "converged": solve.converged,
            "iterations": solve.iterations,
            "stalled": solve.stalled,
            "residuals": solve.residuals,
            "npt_lower_bound": solve.npt_lower_bound,
        }),
    );

    let mut choi_document = None;
    if let Some(j) = &solve.feasible_point {
        let check = verify_ppt_operation(j, tol)?;
        let input = states::max_entangled(2)?.tensor_power(m)?;
        let out = apply_choi(j, &input)?;
        r.quantity("reproduction_distance", out.trace_distance(&state)?, tol, None);
        r.flag("self_verified", check.converged && out.trace_distance(&state)? <= tol);
        choi_document = Some(OperatorDocument::from_choi(j).to_json());
    } else if solve.npt_lower_bound.is_some() {
        r.flag("infeasibility_flagged", true);
    }
    Ok(SynthesisRun { report: r, choi_document })
}

pub fn cmd_verify_broadcast(mu_path: &Path, rho_path: &Path, n: usize, seed: u64) -> Result<ScenarioReport, CliError> {
    let mu = read_state_file(mu_path)?;
    let rho = read_state_file(rho_path)?;
    let mut r = ScenarioReport::new("verify-broadcast");
    r.param("mu", mu_path.display())
        .param("rho", rho_path.display())
        .param("n", n)
        .param("seed", seed);
    let report = verify_broadcast(&mu, &rho, n, BROADCAST_TOL).map_err(|e| CliError::Input(e.to_string()))?;
    for (i, res) in report.residuals.iter().enumerate() {
        r.quantity(&format!("marginal_residual_{}", i + 1), *res, BROADCAST_TOL, Some(0.0));
    }
    r.flag("is_broadcast", report.is_broadcast);

    let pure = rho.spectrum()?.max() >= 1.0 - PURITY_TOL;
    if pure && n == 2 && report.is_broadcast {
        r.flag("pure_broadcast_unique", pure_broadcast_uniqueness(&mu, &rho, 1e-6)?);
        let rigidity = purity_rigidity(&rho, RIGIDITY_STARTS, seed, 1e-6)?;
        r.quantity("rigidity_max_distance", rigidity.max_distance, 1e-6, Some(0.0));
        r.certificate("rigidity", &rigidity);
    }
    Ok(r)
}

pub fn cmd_protocol(d: usize, n: usize) -> Result<ScenarioReport, CliError> {
    check_d(d)?;
    if n == 0 {
        return usage("--n must be at least 1");
    }
    let (rho, mu) = isotropic_pair(d)?;
    let mut r = ScenarioReport::new("protocol");
    r.param("d", d).param("n", n);
    let trace = run_prop1_protocol(&mu, &rho, n)?;
    r.quantity("catalyst_residual", trace.catalyst_residual, PROTOCOL_TOL, Some(0.0));
    r.quantity("system_residual", trace.system_residual, PROTOCOL_TOL, Some(0.0));
    r.quantity("system_catalyst_correlation", trace.system_catalyst_correlation, PROTOCOL_TOL, None);
    for (i, stage) in trace.stages.iter().enumerate() {
        r.param(&format!("stage_{}", i + 1), &stage.label);
    }
    r.flag("catalyst_returned", trace.catalyst_residual <= trace.tol);
    r.flag("target_produced", trace.system_residual <= trace.tol);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn werner_report_passes() {
        let r = cmd_werner_example(2).unwrap();
        assert!(r.passed, "{:?}", r.failed_flags());
        assert!(matches!(cmd_werner_example(9), Err(CliError::Usage(_))));
    }

    #[test]
    fn named_states() {
        assert_eq!(named_state("broadcast-2").unwrap().dim(), 16);
        assert_eq!(named_state("noisy-phi-3").unwrap().dim(), 9);
        assert!(matches!(named_state("phi"), Err(CliError::Usage(_))));
        assert!(matches!(named_state("ghz-2"), Err(CliError::Usage(_))));
        assert!(matches!(named_state("phi-1"), Err(CliError::Usage(_))));
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(3), vec![0.0, 0.5, 1.0]);
    }
}
