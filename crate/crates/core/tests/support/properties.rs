//! Randomized invariants shared by the core property tests and the
//! acceptance runner. Each check takes its sampled inputs and a seed.

use dilution_core::measures::{d_max, log_negativity, schmidt_rank, SCHMIDT_TOL};
use dilution_core::random::{random_hermitian, random_probabilities, random_state, random_unitary};
use dilution_core::states::{diagonal_state, pure_state};
use dilution_core::{DensityOperator, FactorShape};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASES: u32 = 200;

type Check = std::result::Result<(), TestCaseError>;

pub fn shape_strategy() -> impl Strategy<Value = FactorShape> {
    prop::collection::vec((1usize..=3, 1usize..=3), 1..=2)
        .prop_filter("nontrivial", |f| f.iter().map(|(a, b)| a * b).product::<usize>() >= 2)
        .prop_map(|f| FactorShape::new(f).unwrap())
}

/// `Σ_{i<k} c_i (U|i⟩)(V|i⟩)` on a single `(da, db)` factor: Schmidt rank `k`
/// by construction.
pub fn with_schmidt_rank(da: usize, db: usize, k: usize, rng: &mut ChaCha8Rng) -> DensityOperator {
    let u = random_unitary(da, rng);
    let v = random_unitary(db, rng);
    let coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let amps: Vec<Complex64> = (0..da * db)
        .map(|idx| {
            let (a, b) = (idx / db, idx % db);
            (0..k).map(|i| u[(a, i)] * v[(b, i)] * coeffs[i]).sum()
        })
        .collect();
    pure_state(FactorShape::bipartite(da, db).unwrap(), &amps).unwrap()
}

pub fn partial_transpose_involution(shape: FactorShape, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_hermitian(&shape, &mut rng);
    let back = x.partial_transpose().partial_transpose();
    prop_assert_eq!(back.max_abs_diff(&x).unwrap(), 0.0);
    let rho = random_state(&shape, shape.dim(), &mut rng);
    let pt = rho.partial_transpose();
    prop_assert!((pt.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    prop_assert!(pt.hermiticity_residual() < 1e-12);
    Ok(())
}

pub fn trace_norm_matches_abs(shape: FactorShape, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_hermitian(&shape, &mut rng);
    let abs = x.abs().unwrap();
    let norm = x.trace_norm().unwrap();
    prop_assert!((abs.trace().re - norm).abs() <= 1e-10 * norm.max(1.0));
    prop_assert!(abs.trace().im.abs() <= 1e-12);
    // |X|² = X² and |X| ≥ 0.
    let sq = abs.matrix() * abs.matrix() - x.matrix() * x.matrix();
    prop_assert!(sq.iter().all(|z| z.norm() <= 1e-9 * norm.max(1.0).powi(2)));
    prop_assert!(abs.is_psd(1e-10).unwrap().psd);
    Ok(())
}

pub type AdditivityInput = ((usize, usize), (usize, usize), usize, usize, u64);

pub fn additivity_strategy() -> impl Strategy<Value = AdditivityInput> {
    ((2usize..=3, 2usize..=3), (1usize..=2, 2usize..=3), 1usize..=3, 1usize..=3, any::<u64>())
}

pub fn log_negativity_additive((d1, d2, r1, r2, seed): AdditivityInput) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_state(&FactorShape::bipartite(d1.0, d1.1).unwrap(), r1, &mut rng);
    let sigma = random_state(&FactorShape::bipartite(d2.0, d2.1).unwrap(), r2, &mut rng);
    let joint = log_negativity(&rho.tensor_state(&sigma));
    let sum = log_negativity(&rho) + log_negativity(&sigma);
    prop_assert!((joint - sum).abs() <= 1e-9, "joint {} vs sum {}", joint, sum);
    Ok(())
}

pub type SchmidtInput = ((usize, usize), (usize, usize), u64);

pub fn schmidt_strategy() -> impl Strategy<Value = SchmidtInput> {
    ((2usize..=3, 2usize..=3), (2usize..=3, 1usize..=3), any::<u64>())
}

pub fn schmidt_rank_multiplicative((a, b, seed): SchmidtInput) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k1 = rng.gen_range(1..=a.0.min(a.1));
    let k2 = rng.gen_range(1..=b.0.min(b.1));
    let psi = with_schmidt_rank(a.0, a.1, k1, &mut rng);
    let phi = with_schmidt_rank(b.0, b.1, k2, &mut rng);
    prop_assert_eq!(schmidt_rank(&psi, SCHMIDT_TOL).unwrap(), k1);
    prop_assert_eq!(schmidt_rank(&phi, SCHMIDT_TOL).unwrap(), k2);
    prop_assert_eq!(schmidt_rank(&psi.tensor_state(&phi), SCHMIDT_TOL).unwrap(), k1 * k2);
    Ok(())
}

pub type QuasiConvexInput = (usize, usize, u64);

pub fn quasi_convex_strategy() -> impl Strategy<Value = QuasiConvexInput> {
    (2usize..=6, 2usize..=4, any::<u64>())
}

pub fn d_max_quasi_convex((n, parts, seed): QuasiConvexInput) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = FactorShape::plain(n).unwrap();
    let weights = random_probabilities(parts, &mut rng);
    let mut rho_mix = vec![0.0; n];
    let mut sigma_mix = vec![0.0; n];
    let mut worst = f64::NEG_INFINITY;
    for &w in &weights {
        let p = random_probabilities(n, &mut rng);
        let q = random_probabilities(n, &mut rng);
        // Direct oracle for commuting operators.
        let direct = p.iter().zip(&q).map(|(a, b)| a / b).fold(0.0, f64::max).log2();
        let computed = d_max(
            &diagonal_state(shape.clone(), &p).unwrap(),
            &diagonal_state(shape.clone(), &q).unwrap(),
        )
        .unwrap();
        prop_assert!((computed - direct.max(0.0)).abs() <= 1e-9);
        worst = worst.max(computed);
        for i in 0..n {
            rho_mix[i] += w * p[i];
            sigma_mix[i] += w * q[i];
        }
    }
    let mixed = d_max(&diagonal_state(shape.clone(), &rho_mix).unwrap(), &diagonal_state(shape, &sigma_mix).unwrap()).unwrap();
    prop_assert!(mixed <= worst + 1e-12, "mixed {} > max {}", mixed, worst);
    Ok(())
}

/// Runs every suite for `cases` cases with a deterministic runner; the
/// error string carries proptest's minimal failing input.
pub fn run_all(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    let runner = || TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let seeded = (shape_strategy(), any::<u64>());
    vec![
        (
            "partial transpose involution",
            runner().run(&seeded, |(s, seed)| partial_transpose_involution(s, seed)).map_err(|e| e.to_string()),
        ),
        (
            "trace norm / abs",
            runner().run(&seeded, |(s, seed)| trace_norm_matches_abs(s, seed)).map_err(|e| e.to_string()),
        ),
        (
            "L_N additivity",
            runner().run(&additivity_strategy(), log_negativity_additive).map_err(|e| e.to_string()),
        ),
        (
            "Schmidt-rank multiplicativity",
            runner().run(&schmidt_strategy(), schmidt_rank_multiplicative).map_err(|e| e.to_string()),
        ),
        (
            "D_max quasi-convexity",
            runner().run(&quasi_convex_strategy(), d_max_quasi_convex).map_err(|e| e.to_string()),
        ),
    ]
}
