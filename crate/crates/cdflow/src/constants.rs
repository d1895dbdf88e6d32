//! Closed-form constants and admissible-parameter ranges.
//!
//! Everything here is a pure rational-arithmetic evaluation in f64 with
//! strict admissibility checks: out-of-range parameters raise errors
//! instead of returning NaN, so nothing silently poisons a certificate
//! downstream.

use crate::error::{CdError, Result};
use serde::Serialize;

const DEGENERACY_EPS: f64 = 1e-12;

/// Entropy condition constant
/// `C_{n,beta} = (8(b-1-n)(2b-1) + 9n) / (8(b-1-n)(b-1))`.
pub fn c_phi(n: f64, beta: f64) -> Result<f64> {
    if (beta - (n + 1.0)).abs() < DEGENERACY_EPS {
        return Err(CdError::Degenerate(format!("beta = n + 1 = {beta} annihilates the denominator")));
    }
    if (beta - 1.0).abs() < DEGENERACY_EPS {
        return Err(CdError::Degenerate("beta = 1 annihilates the denominator".into()));
    }
    if beta < n + 1.0 {
        return Err(CdError::OutOfRange(format!("requires beta > n + 1, got beta = {beta}, n = {n}")));
    }
    let d = beta - 1.0 - n;
    Ok((8.0 * d * (2.0 * beta - 1.0) + 9.0 * n) / (8.0 * d * (beta - 1.0)))
}

/// Threshold exponent for the weighted family:
/// `p* = 1 + (8(b-1-n) + 9n) / (8 b (b-1-n) + 9n)`.
pub fn p_star_weighted(n: f64, beta: f64) -> Result<f64> {
    if n < 0.0 {
        return Err(CdError::OutOfRange(format!("requires n >= 0, got n = {n}")));
    }
    if (beta - (n + 1.0)).abs() < DEGENERACY_EPS {
        return Err(CdError::Degenerate(format!("beta = n + 1 = {beta} is degenerate")));
    }
    if beta < n + 1.0 {
        return Err(CdError::OutOfRange(format!("requires beta > n + 1, got beta = {beta}, n = {n}")));
    }
    let d = beta - 1.0 - n;
    Ok(1.0 + (8.0 * d + 9.0 * n) / (8.0 * beta * d + 9.0 * n))
}

/// Threshold exponent in the negative-dimension regime:
/// `p* = 1 + (1 - 4n) / (2n^2 + 1)` for `n < -2`.
pub fn p_star_negative_dim(n: f64) -> Result<f64> {
    if n >= -2.0 {
        return Err(CdError::OutOfRange(format!("requires n < -2, got n = {n}")));
    }
    Ok(1.0 + (1.0 - 4.0 * n) / (2.0 * n * n + 1.0))
}

/// Dual threshold `q* = 2n(n+2) / (1-4n)` for `n < -2`; related to `p*`
/// through `q = (2-p)/(p-1)`.
pub fn q_star(n: f64) -> Result<f64> {
    if n >= -2.0 {
        return Err(CdError::OutOfRange(format!("requires n < -2, got n = {n}")));
    }
    Ok(2.0 * n * (n + 2.0) / (1.0 - 4.0 * n))
}

/// Concavity constants of the refined inequality:
/// with `q = (2-p)/(p-1)`,
/// `alpha = (q / (2(n+2)^2)) (q(4n-1) + 2n(n+2))` and
/// `theta = alpha p / (p-1)`.
pub fn alpha_theta(p: f64, n: f64) -> Result<(f64, f64)> {
    if (n + 2.0).abs() < DEGENERACY_EPS {
        return Err(CdError::Degenerate("n = -2 is degenerate".into()));
    }
    if (p - 1.0).abs() < DEGENERACY_EPS {
        return Err(CdError::Degenerate("p = 1 is degenerate".into()));
    }
    if p <= 1.0 || p > 2.0 {
        return Err(CdError::OutOfRange(format!("requires p in (1, 2], got p = {p}")));
    }
    let q = (2.0 - p) / (p - 1.0);
    let alpha = q / (2.0 * (n + 2.0) * (n + 2.0)) * (q * (4.0 * n - 1.0) + 2.0 * n * (n + 2.0));
    let theta = alpha * p / (p - 1.0);
    Ok((alpha, theta))
}

/// Sharp constant `(n-1) / (rho n)` of the variance inequality under a
/// certified (rho, n) pair with `rho > 0` and `n` outside `[0, 1]`.
pub fn poincare_constant(rho: f64, n: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(CdError::NonpositiveCurvature { rho });
    }
    if (0.0..=1.0).contains(&n) {
        return Err(CdError::DimensionForbidden { n });
    }
    Ok((n - 1.0) / (rho * n))
}

/// Sharp variance constant for the quadratic weight `1 + x^2`:
/// `C_beta = 2(beta-1)` for `beta >= 3/2`, `(beta - 1/2)^2` for
/// `beta in (1/2, 3/2)`.
pub fn c_beta_quadratic(beta: f64) -> Result<f64> {
    if beta <= 0.5 {
        return Err(CdError::OutOfRange(format!("requires beta > 1/2, got beta = {beta}")));
    }
    Ok(if beta >= 1.5 { 2.0 * (beta - 1.0) } else { (beta - 0.5) * (beta - 0.5) })
}

/// Comparison exponent from the quadratic-weight literature,
/// `p*_cmp = 1 + 1/(beta - d)`; strictly below [`p_star_weighted`].
pub fn p_star_comparison(beta: f64, d: f64) -> Result<f64> {
    if beta <= d {
        return Err(CdError::OutOfRange(format!("requires beta > d, got beta = {beta}, d = {d}")));
    }
    Ok(1.0 + 1.0 / (beta - d))
}

/// Entropy family for the condition check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PhiFamily {
    /// `Phi(x) = x^p`
    Power(f64),
    /// `Phi(x) = x log x`
    XLogX,
}

/// Whether `Phi'''' Phi'' >= C_{n,beta} (Phi''')^2` holds for the family.
///
/// For powers this reduces to `p in [p*, 2]`; for `x log x` the left side
/// equals `2 (Phi''')^2`, so the test is `C_{n,beta} <= 2`.
pub fn phi_condition_check(family: PhiFamily, n: f64, beta: f64) -> Result<bool> {
    match family {
        PhiFamily::Power(p) => {
            if p <= 1.0 || p > 2.0 {
                return Err(CdError::OutOfRange(format!("requires p in (1, 2], got p = {p}")));
            }
            let p_star = p_star_weighted(n, beta)?;
            Ok(p >= p_star - 1e-15 && p <= 2.0)
        }
        PhiFamily::XLogX => Ok(c_phi(n, beta)? <= 2.0),
    }
}
