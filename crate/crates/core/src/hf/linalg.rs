use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
pub fn eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(m.nrows(), n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        // fix the arbitrary sign so results are reproducible
        if let Some(pivot) = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
            if pivot < 0.0 {
                v *= -1.0;
            }
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

/// Orthogonalizer X with Xᵀ S X = 1: symmetric S^{-1/2} when the smallest
/// overlap eigenvalue exceeds `cutoff`, otherwise canonical with the
/// near-dependent directions dropped. Returns None if nothing survives.
pub fn orthogonalizer(s: &DMatrix<f64>, cutoff: f64) -> Option<(DMatrix<f64>, f64)> {
    let (vals, vecs) = eigh(s);
    let min = vals[0];
    let n = s.nrows();
    if min > cutoff {
        let mut d = DMatrix::zeros(n, n);
        for k in 0..n {
            d[(k, k)] = 1.0 / vals[k].sqrt();
        }
        return Some((&vecs * d * vecs.transpose(), min));
    }
    let kept: Vec<usize> = (0..n).filter(|&k| vals[k] > cutoff).collect();
    if kept.is_empty() {
        return None;
    }
    let mut x = DMatrix::zeros(n, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        x.set_column(col, &(vecs.column(k) / vals[k].sqrt()));
    }
    Some((x, min))
}

/// Solves the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting; None if singular.
pub fn solve(mut a: DMatrix<f64>, mut b: DVector<f64>) -> Option<DVector<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
        if a[(piv, col)].abs() < 1e-300 {
            return None;
        }
        a.swap_rows(col, piv);
        b.swap_rows(col, piv);
        for row in (col + 1)..n {
            let f = a[(row, col)] / a[(col, col)];
            for k in col..n {
                a[(row, k)] -= f * a[(col, k)];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = DVector::zeros(n);
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[(row, k)] * x[k];
        }
        x[row] = acc / a[(row, row)];
    }
    Some(x)
}
