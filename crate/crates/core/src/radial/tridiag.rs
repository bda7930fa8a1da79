//! Tridiagonal solvers.

/// Solves a symmetric tridiagonal system by `L D L^T`. Returns `None` when a
/// pivot is not positive, i.e. the matrix is not positive definite.
pub fn solve_spd(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    let mut y = vec![0.0; n];
    d[0] = diag[0];
    if !(d[0] > 0.0) {
        return None;
    }
    y[0] = rhs[0];
    for i in 1..n {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - l[i - 1] * off[i - 1];
        if !(d[i] > 0.0) {
            return None;
        }
        y[i] = rhs[i] - l[i - 1] * y[i - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = y[i] / d[i] - l[i] * x[i + 1];
    }
    Some(x)
}

/// Solves a general tridiagonal system with partial pivoting. `lower[i]` is
/// entry `(i+1, i)`, `upper[i]` is `(i, i+1)`. Returns `None` if singular.
pub fn solve_general(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    // row i holds (diag, upper, second upper) after elimination
    let mut d = diag.to_vec();
    let mut u1 = upper.to_vec();
    u1.push(0.0);
    let mut u2 = vec![0.0; n];
    let mut dl = lower.to_vec();
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if dl[i].abs() > d[i].abs() {
            // swap rows i and i+1
            std::mem::swap(&mut d[i], &mut dl[i]);
            std::mem::swap(&mut u1[i], &mut d[i + 1]);
            u2[i] = u1[i + 1];
            u1[i + 1] = 0.0;
            b.swap(i, i + 1);
        }
        if d[i] == 0.0 {
            return None;
        }
        let f = dl[i] / d[i];
        d[i + 1] -= f * u1[i];
        u1[i + 1] -= f * u2[i];
        b[i + 1] -= f * b[i];
    }
    if d[n - 1] == 0.0 || !d.iter().all(|x| x.is_finite()) {
        return None;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    Some(x)
}
