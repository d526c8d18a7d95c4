//! Spectral helpers backed by nalgebra.

use nalgebra::DMatrix;
use ndarray::Array2;

use super::{Ket, Operator, C64};

fn to_nalgebra(op: &Operator) -> DMatrix<C64> {
    let d = op.dim();
    DMatrix::from_fn(d, d, |i, j| op.get(i, j))
}

fn from_nalgebra(m: &DMatrix<C64>) -> Operator {
    let (r, c) = m.shape();
    Operator::from_array_unchecked(Array2::from_shape_fn((r, c), |(i, j)| m[(i, j)]))
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
///
/// Only the Hermitian part of `op` is used.
pub fn eigh(op: &Operator) -> (Vec<f64>, Vec<Ket>) {
    let herm = (&to_nalgebra(op) + to_nalgebra(op).adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| Ket::from_iter(eig.eigenvectors.column(k).iter().copied()))
        .collect();
    (values, vectors)
}

/// Matrix exponential of a general complex operator.
pub fn expm(op: &Operator) -> Operator {
    from_nalgebra(&to_nalgebra(op).exp())
}

/// `exp(z·H)` for Hermitian `H` and complex `z`, through the spectral
/// decomposition of `H`.
pub fn exp_hermitian(h: &Operator, z: C64) -> Operator {
    let (values, vectors) = eigh(h);
    let d = h.dim();
    let mut out = Array2::<C64>::zeros((d, d));
    for (lambda, v) in values.iter().zip(&vectors) {
        let w = (z * lambda).exp();
        for i in 0..d {
            let vi = v[i] * w;
            for j in 0..d {
                out[[i, j]] += vi * v[j].conj();
            }
        }
    }
    Operator::from_array_unchecked(out)
}

/// `½‖ρ − σ‖₁` for Hermitian arguments.
pub fn trace_distance(rho: &Operator, sigma: &Operator) -> f64 {
    let (values, _) = eigh(&(rho - sigma));
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{basis_ket, outer, I};

    #[test]
    fn eigh_of_pauli_z() {
        let (vals, vecs) = eigh(&Operator::pauli_z());
        assert_eq!(vals.len(), 2);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        assert!((vecs[0][1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exp_of_x_rotation() {
        let t = 0.3;
        let u = exp_hermitian(&Operator::pauli_x(), C64::new(0.0, -t));
        let expected = &Operator::identity(2).scale_real(t.cos()) - &Operator::pauli_x().scale(I * t.sin());
        assert!((&u - &expected).max_abs() < 1e-14);
        let general = expm(&Operator::pauli_x().scale(C64::new(0.0, -t)));
        assert!((&general - &expected).max_abs() < 1e-13);
    }

    #[test]
    fn trace_distance_of_orthogonal_states_is_one() {
        let a = outer(&basis_ket(2, 0), &basis_ket(2, 0));
        let b = outer(&basis_ket(2, 1), &basis_ket(2, 1));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
        assert!(trace_distance(&a, &a) < 1e-15);
    }
}
