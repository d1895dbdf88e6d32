//! Symmetric tridiagonal kernels: Sturm counts, bisection for a single
//! eigenvalue of the pencil (A, M), inverse iteration, and the Thomas solve
//! used by the implicit time stepper.

use crate::error::{CdError, Result};

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly below `lambda`, by counting negative pivots of the LDL^T
/// factorization of (T - lambda I).
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let guard = 1e-300;
    let mut count = 0usize;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < guard { if q < 0.0 { -guard } else { guard } } else { q };
        q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th smallest eigenvalue (0-indexed) of a symmetric tridiagonal matrix
/// by Sturm bisection, refined to near machine precision.
pub fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let n = diag.len();
    assert!(k < n);
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let el = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let er = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - el - er);
        hi = hi.max(diag[i] + el + er);
    }
    let width = (hi - lo).max(1.0);
    lo -= 1e-12 * width;
    hi += 1e-12 * width;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 2.0 * f64::EPSILON * mid.abs().max(1e-3) {
            break;
        }
        if sturm_count(diag, off, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve the tridiagonal system with `diag`, lower `sub`, upper `sup`
/// in place via the Thomas algorithm. Returns the solution.
pub fn thomas_solve(diag: &[f64], sub: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Prefactored Thomas solver for a fixed symmetric tridiagonal matrix,
/// reused across time steps.
pub struct TridiagFactor {
    c: Vec<f64>,
    inv_m: Vec<f64>,
    sub: Vec<f64>,
}

impl TridiagFactor {
    pub fn new(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut inv_m = vec![0.0; n];
        inv_m[0] = 1.0 / diag[0];
        c[0] = off[0] * inv_m[0];
        for i in 1..n {
            let m = diag[i] - off[i - 1] * c[i - 1];
            inv_m[i] = 1.0 / m;
            if i < n - 1 {
                c[i] = off[i] * inv_m[i];
            }
        }
        TridiagFactor { c, inv_m, sub: off.to_vec() }
    }

    pub fn solve_into(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] *= self.inv_m[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.sub[i - 1] * rhs[i - 1]) * self.inv_m[i];
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.c[i] * next;
        }
    }
}

/// Inverse iteration for the eigenvector of a symmetric tridiagonal matrix
/// at an eigenvalue approximation `lambda`. `ortho` is an optional vector
/// (in the same coordinates) to deflate against with weights `weights`.
pub fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    ortho: Option<(&[f64], &[f64])>,
    max_steps: usize,
) -> Result<Vec<f64>> {
    let n = diag.len();
    // Small shift off the eigenvalue keeps the factorization well defined.
    let scale = diag.iter().fold(0.0f64, |a, &d| a.max(d.abs())).max(1.0);
    let shifted: Vec<f64> = diag.iter().map(|&d| d - lambda - 1e-11 * scale).collect();
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (2.0 * std::f64::consts::PI * t).sin() + 0.3
        })
        .collect();
    let deflate = |v: &mut Vec<f64>| {
        if let Some((u, w)) = ortho {
            let num: f64 = v.iter().zip(u).zip(w).map(|((&a, &b), &c)| a * b * c).sum();
            let den: f64 = u.iter().zip(w).map(|(&b, &c)| b * b * c).sum();
            let coef = num / den;
            for (a, &b) in v.iter_mut().zip(u) {
                *a -= coef * b;
            }
        }
    };
    deflate(&mut v);
    let mut prev_norm = 0.0;
    // rounding floor on the iterate difference grows with the vector length
    let tol = 1e-12 * (1.0 + (n as f64).sqrt() * 1e-2);
    for step in 0..max_steps {
        let mut w = thomas_solve(&shifted, off, off, &v);
        deflate(&mut w);
        let norm = w.iter().map(|&a| a * a).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(CdError::SolverStall(step));
        }
        for a in w.iter_mut() {
            *a /= norm;
        }
        // Growth of the unnormalized iterate stalls once converged.
        let diff: f64 = w
            .iter()
            .zip(&v)
            .map(|(&a, &b)| (a - b).abs().min((a + b).abs()))
            .fold(0.0, f64::max);
        v = w;
        let settled = diff < tol || (step > 40 && diff < 1e-8);
        if step > 0 && settled && (norm - prev_norm).abs() < 1e-6 * norm {
            return Ok(v);
        }
        prev_norm = norm;
    }
    Err(CdError::SolverStall(max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_count_2x2() {
        // [[1, -1], [-1, 3]] has eigenvalues 2 -+ sqrt(2)
        let d = [1.0, 3.0];
        let e = [-1.0];
        assert_eq!(sturm_count(&d, &e, 0.0), 0);
        assert_eq!(sturm_count(&d, &e, 1.0), 1);
        assert_eq!(sturm_count(&d, &e, 4.0), 2);
    }

    #[test]
    fn bisect_free_laplacian_chain() {
        // Dirichlet chain: eigenvalues 2 - 2 cos(k pi / (n+1))
        let n = 64;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        for k in [0usize, 1, 5] {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            let got = bisect_eigenvalue(&d, &e, k);
            assert!((got - exact).abs() < 1e-12, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn thomas_matches_direct_solve() {
        let diag = [4.0, 5.0, 6.0, 5.0];
        let off = [-1.0, -2.0, -1.5];
        let rhs = [1.0, 0.0, -2.0, 3.0];
        let x = thomas_solve(&diag, &off, &off, &rhs);
        // residual check
        let n = 4;
        for i in 0..n {
            let mut r = diag[i] * x[i] - rhs[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i < n - 1 {
                r += off[i] * x[i + 1];
            }
            assert!(r.abs() < 1e-12, "row {i} residual {r}");
        }
    }

    #[test]
    fn factored_solver_matches_thomas() {
        let diag = vec![3.0, 4.0, 5.0, 4.0, 3.0];
        let off = vec![-1.0, -1.0, -1.0, -1.0];
        let rhs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let a = thomas_solve(&diag, &off, &off, &rhs);
        let f = TridiagFactor::new(&diag, &off);
        let mut b = rhs;
        f.solve_into(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_iteration_recovers_chain_mode() {
        let n = 50;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let lam = bisect_eigenvalue(&d, &e, 0);
        let v = inverse_iteration(&d, &e, lam, None, 200).unwrap();
        // first Dirichlet mode sin((i+1) pi / (n+1)), up to sign
        let mut dot = 0.0;
        let mut nrm = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            let u = ((i + 1) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin();
            dot += u * vi;
            nrm += u * u;
        }
        let cos = dot.abs() / (nrm.sqrt());
        assert!(cos > 1.0 - 1e-10, "alignment {cos}");
    }
}
