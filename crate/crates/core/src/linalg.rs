//! Small dense helpers over nalgebra for desk-scale solves.

use nalgebra::{DMatrix, DVector};

use crate::vector::Vector;

/// Minimum-norm least-squares solution of `a x = b`.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = smax * 1e-13 * (a.nrows().max(a.ncols()) as f64);
    svd.solve(b, eps.max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Numerical rank with a relative singular-value cutoff.
pub(crate) fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > smax * 1e-10).count()
}

/// Unit vector spanning the null space of `rows` when that null space is a line.
pub(crate) fn null_line(rows: &[&Vector], n: usize) -> Option<Vector> {
    if rows.len() + 1 < n {
        return None;
    }
    let mut a = DMatrix::zeros(n.max(rows.len()), n);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = r[j];
        }
    }
    if rank(&a) != n - 1 {
        return None;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    let d: Vec<f64> = (0..n).map(|j| v_t[(imin, j)]).collect();
    let mut d = Vector::from(d);
    // Deterministic sign: first nonzero coordinate positive.
    if let Some(&c) = d.iter().find(|c| c.abs() > 1e-12) {
        if c < 0.0 {
            d = -&d;
        }
    }
    Some(d)
}

/// Orthonormal basis of the null space of `rows` inside `R^n`.
pub(crate) fn null_space(rows: &[&Vector], n: usize) -> Vec<Vector> {
    if rows.is_empty() {
        return (0..n).map(|i| Vector::basis(n, i)).collect();
    }
    let mut a = DMatrix::zeros(n.max(rows.len()), n);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = r[j];
        }
    }
    let r = rank(&a);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order
        .into_iter()
        .skip(r)
        .map(|i| Vector::from((0..n).map(|j| v_t[(i, j)]).collect::<Vec<_>>()))
        .collect()
}

pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}
