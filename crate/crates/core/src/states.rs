//! Constructors for the named states: maximally entangled pairs, the isotropic
//! family and its twirl, symmetric two-copy broadcasts, and qubit Gibbs states.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::operator::{CMatrix, DensityOperator, FactorShape, LabeledOperator};

/// Parameters of `λ·Φ_d + (1−λ)·𝟙/d²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicParams {
    d: usize,
    lam: f64,
}

impl IsotropicParams {
    pub fn new(d: usize, lam: f64) -> Result<Self> {
        if d < 2 {
            return invalid(format!("local dimension must be at least 2, got {d}"));
        }
        if !(0.0..=1.0).contains(&lam) {
            return invalid(format!("mixing weight must lie in [0, 1], got {lam}"));
        }
        Ok(Self { d, lam })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lam(&self) -> f64 {
        self.lam
    }

    /// `⟨Φ_d|ρ|Φ_d⟩ = λ + (1−λ)/d²`.
    pub fn fidelity(&self) -> f64 {
        let d2 = (self.d * self.d) as f64;
        self.lam + (1.0 - self.lam) / d2
    }
}

fn max_entangled_op(d: usize) -> LabeledOperator {
    let n = d * d;
    let inv = 1.0 / d as f64;
    let m = CMatrix::from_fn(n, n, |r, c| {
        if r % (d + 1) == 0 && c % (d + 1) == 0 {
            Complex64::new(inv, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    LabeledOperator::new(FactorShape::bipartite(d, d).expect("d ≥ 2"), m).expect("dimension matches")
}

/// `|Φ_d⟩ = Σ_{i<d} |ii⟩/√d` on a single `(d, d)` factor.
pub fn max_entangled(d: usize) -> Result<DensityOperator> {
    if d < 2 {
        return invalid(format!("local dimension must be at least 2, got {d}"));
    }
    Ok(DensityOperator::trusted(max_entangled_op(d)))
}

pub fn maximally_mixed(shape: FactorShape) -> DensityOperator {
    let dim = shape.dim() as f64;
    DensityOperator::trusted(LabeledOperator::identity(shape).scale(1.0 / dim))
}

pub fn isotropic(params: IsotropicParams) -> DensityOperator {
    let d = params.d;
    let phi = max_entangled_op(d);
    let mixed = LabeledOperator::identity(phi.shape().clone()).scale(1.0 / (d * d) as f64);
    let op = LabeledOperator::linear_combination(&[(params.lam, &phi), (1.0 - params.lam, &mixed)])
        .expect("same shape");
    DensityOperator::trusted(op)
}

/// `f·Φ_d + (1−f)·(𝟙−Φ_d)/(d²−1)`, the isotropic state with fidelity `f`.
pub fn isotropic_with_fidelity(d: usize, f: f64) -> Result<DensityOperator> {
    if d < 2 {
        return invalid(format!("local dimension must be at least 2, got {d}"));
    }
    if !(0.0..=1.0).contains(&f) {
        return invalid(format!("fidelity must lie in [0, 1], got {f}"));
    }
    let phi = max_entangled_op(d);
    let id = LabeledOperator::identity(phi.shape().clone());
    let w = (1.0 - f) / (d * d - 1) as f64;
    let op = LabeledOperator::linear_combination(&[(f - w, &phi), (w, &id)]).expect("same shape");
    Ok(DensityOperator::trusted(op))
}

fn square_factor(x: &LabeledOperator) -> Result<usize> {
    match x.shape().factors() {
        &[(a, b)] if a == b && a >= 2 => Ok(a),
        other => invalid(format!("expected a single (d, d) factor with d ≥ 2, got {other:?}")),
    }
}

/// `⟨Φ_d|x|Φ_d⟩` for an operator on a single `(d, d)` factor.
pub fn fidelity_with_max_entangled(x: &LabeledOperator) -> Result<f64> {
    let d = square_factor(x)?;
    let m = x.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += m[(i * (d + 1), j * (d + 1))];
        }
    }
    Ok(acc.re / d as f64)
}

/// Projection onto the isotropic family, preserving the fidelity with `Φ_d`.
/// Equal to the `U ⊗ Ū` group average.
pub fn isotropic_twirl(x: &DensityOperator) -> Result<DensityOperator> {
    let d = square_factor(x)?;
    let f = fidelity_with_max_entangled(x)?.clamp(0.0, 1.0);
    isotropic_with_fidelity(d, f)
}

/// `μ = ½(σ₀⊗σ₁ + σ₁⊗σ₀)`: both single-copy marginals equal `½(σ₀+σ₁)`.
pub fn symmetric_two_broadcast(s0: &DensityOperator, s1: &DensityOperator) -> Result<DensityOperator> {
    if s0.shape() != s1.shape() {
        return invalid(format!(
            "broadcast components differ in shape: {:?} vs {:?}",
            s0.shape().factors(),
            s1.shape().factors()
        ));
    }
    let a = s0.tensor(s1);
    let b = s1.tensor(s0);
    let op = LabeledOperator::linear_combination(&[(0.5, &a), (0.5, &b)])?;
    Ok(DensityOperator::trusted(op))
}

/// Normalized `|ψ⟩⟨ψ|`.
pub fn pure_state(shape: FactorShape, amplitudes: &[Complex64]) -> Result<DensityOperator> {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return invalid("zero state vector");
    }
    let normalized: Vec<Complex64> = amplitudes.iter().map(|z| z / norm).collect();
    Ok(DensityOperator::trusted(LabeledOperator::ket_bra(shape, &normalized)?))
}

/// A state diagonal in the computational basis.
pub fn diagonal_state(shape: FactorShape, probs: &[f64]) -> Result<DensityOperator> {
    let dim = shape.dim();
    if probs.len() != dim {
        return invalid(format!("expected {dim} probabilities, got {}", probs.len()));
    }
    let m = CMatrix::from_fn(dim, dim, |r, c| {
        Complex64::new(if r == c { probs[r] } else { 0.0 }, 0.0)
    });
    DensityOperator::new(LabeledOperator::new(shape, m)?)
}

/// `γ = (1−p)|0⟩⟨0| + p|1⟩⟨1|` with `0 < p < ½`.
pub fn gibbs_qubit(p: f64) -> Result<DensityOperator> {
    if !(p > 0.0 && p < 0.5) {
        return invalid(format!("excited population must satisfy 0 < p < 1/2, got {p}"));
    }
    diagonal_state(FactorShape::plain(2)?, &[1.0 - p, p])
}

/// `(1−q)|0⟩⟨0| + q·γ_p`.
pub fn classical_mix(q: f64, p: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&q) {
        return invalid(format!("mixing weight must lie in [0, 1], got {q}"));
    }
    let gamma = gibbs_qubit(p)?;
    let g0 = gamma.matrix()[(0, 0)].re;
    let g1 = gamma.matrix()[(1, 1)].re;
    diagonal_state(FactorShape::plain(2)?, &[(1.0 - q) + q * g0, q * g1])
}

/// The purification broadcast `|ψ⟩ = Σ √p_i |ii⟩` on two plain factors,
/// together with the classical state `ρ = Σ p_i |i⟩⟨i|` it broadcasts.
pub fn classical_purification_broadcast(probs: &[f64]) -> Result<(DensityOperator, DensityOperator)> {
    let d = probs.len();
    if d == 0 || probs.iter().any(|&p| p < 0.0) {
        return invalid("probabilities must be non-negative and non-empty");
    }
    let rho = diagonal_state(FactorShape::plain(d)?, probs)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for (i, p) in probs.iter().enumerate() {
        amps[i * (d + 1)] = Complex64::new(p.sqrt(), 0.0);
    }
    let psi = pure_state(FactorShape::new(vec![(d, 1), (d, 1)])?, &amps)?;
    Ok((psi, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::STATE_TOL;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_valid(x: &DensityOperator) {
        DensityOperator::new(x.as_op().clone()).expect("valid state");
    }

    #[test]
    fn bell_pair_amplitudes() {
        let phi = max_entangled(2).unwrap();
        let h = 0.5;
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((phi.matrix()[(r, c)].re - h).abs() < 1e-15);
        }
        assert!((phi.purity() - 1.0).abs() < 1e-14);
        assert!(max_entangled(1).is_err());
    }

    #[test]
    fn max_entangled_marginal_is_maximally_mixed() {
        for d in 2..=4 {
            let phi = max_entangled(d).unwrap();
            let split = phi.relabel(phi.shape().split_sides()).unwrap();
            for keep in [0, 1] {
                let m = split.partial_trace(&[keep]).unwrap();
                let expected = maximally_mixed(FactorShape::plain(d).unwrap());
                assert!(m.max_abs_diff(&expected).unwrap() < 1e-15);
            }
        }
    }

    #[test]
    fn isotropic_endpoints_and_fidelity() {
        let zero = isotropic(IsotropicParams::new(3, 0.0).unwrap());
        let mixed = maximally_mixed(FactorShape::bipartite(3, 3).unwrap());
        assert!(zero.max_abs_diff(&mixed).unwrap() < 1e-15);
        let one = isotropic(IsotropicParams::new(3, 1.0).unwrap());
        assert!(one.max_abs_diff(&max_entangled(3).unwrap()).unwrap() < 1e-15);
        let half = isotropic(IsotropicParams::new(2, 0.5).unwrap());
        assert!((fidelity_with_max_entangled(&half).unwrap() - 0.625).abs() < 1e-15);
        assert!(IsotropicParams::new(2, 1.5).is_err());
        assert!(IsotropicParams::new(1, 0.5).is_err());
    }

    #[test]
    fn constructors_produce_valid_states() {
        for d in 2..=4 {
            assert_valid(&max_entangled(d).unwrap());
            for lam in [0.0, 0.3, 0.5, 1.0] {
                assert_valid(&isotropic(IsotropicParams::new(d, lam).unwrap()));
            }
            assert_valid(&isotropic_with_fidelity(d, 0.1).unwrap());
        }
        assert_valid(&gibbs_qubit(0.25).unwrap());
        assert_valid(&classical_mix(0.3, 0.1).unwrap());
        let (psi, rho) = classical_purification_broadcast(&[0.5, 0.3, 0.2]).unwrap();
        assert_valid(&psi);
        assert_valid(&rho);
    }

    #[test]
    fn isotropic_parametrizations_agree() {
        let p = IsotropicParams::new(3, 0.4).unwrap();
        let a = isotropic(p);
        let b = isotropic_with_fidelity(3, p.fidelity()).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-15);
    }

    #[test]
    fn symmetric_broadcast_cases() {
        let rho = isotropic(IsotropicParams::new(2, 0.5).unwrap());
        let same = symmetric_two_broadcast(&rho, &rho).unwrap();
        assert!(same.max_abs_diff(&rho.tensor(&rho)).unwrap() < 1e-15);

        let phi = max_entangled(2).unwrap();
        let mixed = maximally_mixed(phi.shape().clone());
        let mu = symmetric_two_broadcast(&phi, &mixed).unwrap();
        assert_valid(&mu);
        for keep in [0, 1] {
            assert!(mu.partial_trace(&[keep]).unwrap().max_abs_diff(&rho).unwrap() < 1e-15);
        }
        let swapped = mu.permute_factors(&[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&mu).unwrap() <= 1e-12);

        let g = gibbs_qubit(0.25).unwrap();
        assert!(symmetric_two_broadcast(&g, &rho).is_err());
    }

    #[test]
    fn gibbs_and_classical_mix() {
        let g = gibbs_qubit(0.25).unwrap();
        assert!(classical_mix(1.0, 0.25).unwrap().max_abs_diff(&g).unwrap() < 1e-15);
        let ground = classical_mix(0.0, 0.25).unwrap();
        assert_eq!(ground.matrix()[(0, 0)].re, 1.0);
        let m = classical_mix(0.5, 0.25).unwrap();
        assert!((m.matrix()[(0, 0)].re - 7.0 / 8.0).abs() < 1e-15);
        assert!((m.matrix()[(1, 1)].re - 1.0 / 8.0).abs() < 1e-15);
        assert!(gibbs_qubit(0.5).is_err());
        assert!(gibbs_qubit(0.0).is_err());
        assert!(classical_mix(1.1, 0.25).is_err());
    }

    #[test]
    fn twirl_fixes_isotropic_and_is_idempotent() {
        let rho = isotropic(IsotropicParams::new(3, 0.35).unwrap());
        let t = isotropic_twirl(&rho).unwrap();
        assert!(t.max_abs_diff(&rho).unwrap() <= STATE_TOL);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random::random_state(&FactorShape::bipartite(3, 3).unwrap(), 9, &mut rng);
        let once = isotropic_twirl(&x).unwrap();
        let twice = isotropic_twirl(&once).unwrap();
        assert!(once.max_abs_diff(&twice).unwrap() <= STATE_TOL);
        let plain = maximally_mixed(FactorShape::plain(4).unwrap());
        assert!(isotropic_twirl(&plain).is_err());
    }

    #[test]
    fn twirl_of_rotated_bell_pair_preserves_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random::random_unitary(2, &mut rng);
        // U ⊗ Ū leaves Φ invariant; a generic U ⊗ V does not.
        let v = random::random_unitary(2, &mut rng);
        let phi = max_entangled(2).unwrap();
        for w in [u.kronecker(&u.conjugate()), u.kronecker(&v)] {
            let rotated = w.clone() * phi.matrix() * w.adjoint();
            let x = DensityOperator::new(LabeledOperator::new(phi.shape().clone(), rotated).unwrap()).unwrap();
            let f = fidelity_with_max_entangled(&x).unwrap();
            let t = isotropic_twirl(&x).unwrap();
            assert!((fidelity_with_max_entangled(&t).unwrap() - f).abs() < 1e-12);
        }
        let sym = u.kronecker(&u.conjugate());
        let rotated = sym.clone() * phi.matrix() * sym.adjoint();
        let x = LabeledOperator::new(phi.shape().clone(), rotated).unwrap();
        assert!((fidelity_with_max_entangled(&x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn purification_broadcast_shape() {
        let (psi, rho) = classical_purification_broadcast(&[0.7, 0.3]).unwrap();
        assert_eq!(psi.shape().factors(), &[(2, 1), (2, 1)]);
        assert_eq!(rho.shape().factors(), &[(2, 1)]);
        for keep in [0, 1] {
            assert!(psi.partial_trace(&[keep]).unwrap().max_abs_diff(&rho).unwrap() < 1e-15);
        }
    }
}
