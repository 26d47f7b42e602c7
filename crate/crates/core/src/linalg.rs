//! Small dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Vectors with norm below this after projection are treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Gram-Schmidt with one reorthogonalization pass. Dependent inputs are
/// dropped.
pub fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > DEPENDENCE_TOL * norm0 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    basis
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ q qᵀ` for an orthonormal set.
pub fn projector_from_basis(dim: usize, basis: &[Vec<f64>]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(dim, dim);
    for q in basis {
        let v = DVector::from_column_slice(q);
        p.ger(1.0, &v, &v, 1.0);
    }
    p
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Orthonormal eigenvectors whose eigenvalue exceeds `threshold`.
pub fn eigenvectors_above(m: &DMatrix<f64>, threshold: f64) -> Vec<DVector<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}
