//! Seeded random operators: Ginibre states, Hermitian matrices, Haar unitaries.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::operator::{CMatrix, DensityOperator, FactorShape, LabeledOperator};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// `G G† / Tr(G G†)` with `G` a `dim × rank` Ginibre matrix.
pub fn random_state(shape: &FactorShape, rank: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = ginibre(shape.dim(), rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let op = LabeledOperator::new(shape.clone(), m.unscale(tr)).expect("dimension matches");
    DensityOperator::trusted(op)
}

pub fn random_pure(shape: &FactorShape, rng: &mut impl Rng) -> DensityOperator {
    random_state(shape, 1, rng)
}

/// A random Hermitian operator with entries of unit scale.
pub fn random_hermitian(shape: &FactorShape, rng: &mut impl Rng) -> LabeledOperator {
    let g = ginibre(shape.dim(), shape.dim(), rng);
    let h = (&g + g.adjoint()).scale(0.5);
    LabeledOperator::new(shape.clone(), h).expect("dimension matches")
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    let phases = DVector::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    for (j, ph) in phases.iter().enumerate() {
        q.column_mut(j).iter_mut().for_each(|z| *z *= *ph);
    }
    q
}

/// Random probability vector (normalized exponentials).
pub fn random_probabilities(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
