//! Pointwise certification of curvature-dimension conditions for the
//! weighted operator, and optimization of the variance constant
//! `rho n / (n - 1)` over certified pairs.
//!
//! In one dimension the condition reduces to a sign question for
//!
//! ```text
//! slack(x) = -(b - 1/2) ((b - 1/2)/(n - 1) + 1/2) phi'^2/phi
//!            + (b - 1/2) phi'' - rho
//! ```
//!
//! which is a rational function with polynomial numerator, so the
//! behaviour at infinity is decided exactly by leading coefficients
//! rather than by large-x sampling.

use crate::constants::c_beta_quadratic;
use crate::error::{CdError, Result};
use crate::operator::OperatorSpec;
use crate::weights::WeightFamily;
use rayon::prelude::*;
use serde::Serialize;

/// Certification tolerance: boundary-tight cases sit exactly at zero slack
/// and must certify.
pub const SLACK_TOL: f64 = 1e-9;
/// Guard band around the forbidden dimension interval.
pub const N_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertStatus {
    Certified,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    ClosedForm,
    GridScan,
}

/// Outcome of a CD(rho, n) check: minimal slack over the grid and the
/// asymptotic limit, with the location where the minimum is reached
/// (the truncation radius stands in for the limit at infinity).
#[derive(Debug, Clone, Serialize)]
pub struct CdCertificate {
    pub rho: f64,
    pub n: f64,
    pub status: CertStatus,
    pub min_slack: f64,
    pub argmin_x: f64,
    pub method: CertMethod,
}

impl CdCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertStatus::Certified
    }
}

/// Frontier of the certified region: the pair maximizing `rho n / (n-1)`.
#[derive(Debug, Clone, Serialize)]
pub struct FrontierResult {
    pub best_constant: f64,
    pub rho_star: f64,
    pub n_star: f64,
    pub certificate: CdCertificate,
}

fn check_dimension(n: f64) -> Result<()> {
    if (0.0..=1.0).contains(&n) {
        return Err(CdError::DimensionForbidden { n });
    }
    Ok(())
}

/// Slack of the 1D condition at a point; the condition holds at `x`
/// exactly when the slack is nonnegative.
pub fn cd_slack(op: &OperatorSpec, rho: f64, n: f64, x: f64) -> Result<f64> {
    check_dimension(n)?;
    let w = &op.measure.weight;
    let b = op.beta() - 0.5;
    let p = w.eval(x);
    let p1 = w.d1(x);
    Ok(-b * (b / (n - 1.0) + 0.5) * p1 * p1 / p + b * w.d2(x) - rho)
}

// Polynomial helpers on ascending coefficient vectors.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_axpy(out: &mut Vec<f64>, s: f64, p: &[f64]) {
    if out.len() < p.len() {
        out.resize(p.len(), 0.0);
    }
    for (o, &v) in out.iter_mut().zip(p) {
        *o += s * v;
    }
}

fn poly_deriv(p: &[f64]) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

/// Numerator polynomial of the slack: `slack = N / phi` with
/// `N = -b (b/(n-1) + 1/2) phi'^2 + b phi'' phi - rho phi`.
fn slack_numerator(op: &OperatorSpec, rho: f64, n: f64) -> Vec<f64> {
    let phi = op.measure.weight.coeffs().to_vec();
    let d1 = poly_deriv(&phi);
    let d2 = poly_deriv(&d1);
    let b = op.beta() - 0.5;
    let mut num = vec![0.0];
    poly_axpy(&mut num, -b * (b / (n - 1.0) + 0.5), &poly_mul(&d1, &d1));
    poly_axpy(&mut num, b, &poly_mul(&d2, &phi));
    poly_axpy(&mut num, -rho, &phi);
    num
}

/// Limit of the slack as `x -> +inf`, computed from leading coefficients.
/// Returns a finite value, 0.0, or +-1e300 standing in for a diverging limit.
pub fn asymptotic_slack(op: &OperatorSpec, rho: f64, n: f64) -> Result<f64> {
    check_dimension(n)?;
    let num = slack_numerator(op, rho, n);
    let scale = num.iter().fold(0.0f64, |a, &c| a.max(c.abs())).max(1e-300);
    let deg_num = num.iter().rposition(|&c| c.abs() > 1e-12 * scale);
    let deg_phi = op.measure.weight.degree();
    Ok(match deg_num {
        None => 0.0,
        Some(d) if d < deg_phi => 0.0,
        Some(d) if d == deg_phi => num[d] / op.measure.weight.leading_coeff(),
        Some(d) => {
            if num[d] > 0.0 {
                1e300
            } else {
                -1e300
            }
        }
    })
}

/// Certify CD(rho, n) for the operator. Quadratic weights use the exact
/// closed-form test; everything else scans the grid and the asymptotic
/// limit. `rho = 0` is accepted and reported, `rho < 0` is rejected.
pub fn certify(op: &OperatorSpec, rho: f64, n: f64) -> Result<CdCertificate> {
    if matches!(op.measure.weight.family, WeightFamily::Quadratic) {
        certify_closed_form(op, rho, n)
    } else {
        certify_scan(op, rho, n)
    }
}

fn validate_rho(rho: f64) -> Result<()> {
    if rho < 0.0 {
        return Err(CdError::OutOfRange(format!("requires rho >= 0, got rho = {rho}")));
    }
    Ok(())
}

/// Closed-form certification for the quadratic weight: the slack is
/// monotone between its values at `x = 0` and at infinity, so
/// CD(rho, n) holds iff `rho <= 2b - 1` and `rho (1 - n) <= (2b - 1)^2`.
pub fn certify_closed_form(op: &OperatorSpec, rho: f64, n: f64) -> Result<CdCertificate> {
    check_dimension(n)?;
    validate_rho(rho)?;
    let two_b = 2.0 * op.beta() - 1.0;
    let slack_origin = two_b - rho;
    let slack_infinity = -rho - two_b * two_b / (n - 1.0);
    let (min_slack, argmin_x) = if slack_origin <= slack_infinity {
        (slack_origin, 0.0)
    } else {
        (slack_infinity, op.measure.r)
    };
    let status = if min_slack >= -SLACK_TOL { CertStatus::Certified } else { CertStatus::Violated };
    Ok(CdCertificate { rho, n, status, min_slack, argmin_x, method: CertMethod::ClosedForm })
}

/// Grid-scan certification: minimal slack over the nonnegative half of the
/// grid (the slack is even) together with the exact asymptotic limit.
pub fn certify_scan(op: &OperatorSpec, rho: f64, n: f64) -> Result<CdCertificate> {
    check_dimension(n)?;
    validate_rho(rho)?;
    let m = &op.measure;
    let mid = m.n() / 2;
    let mut min_slack = f64::INFINITY;
    let mut argmin_x = 0.0;
    for &x in &m.nodes[mid..] {
        let s = cd_slack(op, rho, n, x)?;
        if s < min_slack {
            min_slack = s;
            argmin_x = x;
        }
    }
    let limit = asymptotic_slack(op, rho, n)?;
    if limit < min_slack {
        min_slack = limit;
        argmin_x = m.r;
    }
    let status = if min_slack >= -SLACK_TOL { CertStatus::Certified } else { CertStatus::Violated };
    Ok(CdCertificate { rho, n, status, min_slack, argmin_x, method: CertMethod::GridScan })
}

/// Search box for the frontier scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchBox {
    pub rho_max: f64,
    pub n_min: f64,
    pub n_max: f64,
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox { rho_max: 1e4, n_min: -60.0, n_max: 60.0 }
    }
}

/// Largest rho certified at fixed n, by bisection. Zero means no positive
/// curvature is certified at this n.
fn rho_frontier(op: &OperatorSpec, n: f64, rho_cap: f64, scan: bool) -> f64 {
    let cert = |rho: f64| -> bool {
        let c = if scan { certify_scan(op, rho, n) } else { certify(op, rho, n) };
        c.map(|c| c.is_certified()).unwrap_or(false)
    };
    if !cert(0.0) {
        return 0.0;
    }
    if cert(rho_cap) {
        return rho_cap;
    }
    let mut lo = 0.0;
    let mut hi = rho_cap;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cert(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    lo
}

fn frontier_value(op: &OperatorSpec, n: f64, rho_cap: f64, scan: bool) -> (f64, f64) {
    let rho = rho_frontier(op, n, rho_cap, scan);
    if rho <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    (rho * n / (n - 1.0), rho)
}

fn golden_section(
    mut a: f64,
    mut b: f64,
    mut value: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = value(c);
    let mut fd = value(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-8 * (a.abs().max(b.abs()).max(1.0)) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = value(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximize `rho n / (n - 1)` over certified pairs with `rho > 0`.
///
/// Quadratic weights use the closed form
/// `C = 2(b-1)` for `b >= 3/2` and `(b - 1/2)^2` for `b in (1/2, 3/2)`;
/// other weights run a nested scan (bisection in rho inside a pre-scan
/// plus golden-section refinement over n on each side of the forbidden
/// band).
pub fn frontier(op: &OperatorSpec, search: SearchBox) -> Result<FrontierResult> {
    if matches!(op.measure.weight.family, WeightFamily::Quadratic) {
        let beta = op.beta();
        let best = c_beta_quadratic(beta)?;
        let (rho_star, n_star) = if beta >= 1.5 {
            (2.0 * beta - 1.0, 2.0 * (1.0 - beta))
        } else {
            let two_b = 2.0 * beta - 1.0;
            (two_b * two_b / 2.0, -1.0)
        };
        let certificate = certify_closed_form(op, rho_star, n_star)?;
        debug_assert!(certificate.is_certified());
        return Ok(FrontierResult { best_constant: best, rho_star, n_star, certificate });
    }
    frontier_scan(op, search)
}

/// The nested-scan frontier, also usable on quadratic weights to
/// cross-check the closed form.
pub fn frontier_scan(op: &OperatorSpec, search: SearchBox) -> Result<FrontierResult> {
    let rho_cap = search.rho_max;
    let sides = [
        (search.n_min, -N_GUARD),
        (1.0 + N_GUARD, search.n_max),
    ];
    let mut best: Option<(f64, f64, f64)> = None; // (value, rho, n)

    for (lo, hi) in sides {
        if lo >= hi {
            continue;
        }
        // coarse pre-scan brackets the maximum before golden-section
        let samples = 96;
        let coarse: Vec<(f64, f64, f64)> = (0..=samples)
            .into_par_iter()
            .map(|k| {
                let n = lo + (hi - lo) * k as f64 / samples as f64;
                let (v, rho) = frontier_value(op, n, rho_cap, true);
                (v, rho, n)
            })
            .collect();
        let (k_best, &(v_best, ..)) = coarse
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .expect("nonempty scan");
        if !v_best.is_finite() {
            continue;
        }
        let a = if k_best == 0 { lo } else { lo + (hi - lo) * (k_best - 1) as f64 / samples as f64 };
        let b = if k_best == samples { hi } else { lo + (hi - lo) * (k_best + 1) as f64 / samples as f64 };
        let (n_ref, v_ref) = golden_section(a, b, |n| frontier_value(op, n, rho_cap, true).0);
        let (v_final, rho_final) = frontier_value(op, n_ref, rho_cap, true);
        let _ = v_ref;
        if v_final.is_finite() && best.map(|(v, ..)| v_final > v).unwrap_or(true) {
            best = Some((v_final, rho_final, n_ref));
        }
    }

    let (value, rho_star, n_star) = best.ok_or(CdError::NoFeasiblePair)?;
    if !(value.is_finite() && value > 0.0 && rho_star > 0.0) {
        return Err(CdError::NoFeasiblePair);
    }
    let certificate = certify_scan(op, rho_star, n_star)?;
    // bisection returns the certified endpoint
    debug_assert!(certificate.is_certified());
    let best_constant = rho_star * n_star / (n_star - 1.0);
    Ok(FrontierResult { best_constant, rho_star, n_star, certificate })
}

/// Scalar value of the conformal reformulation of the condition at `x`
/// (one-dimensional specialization with flat base curvature). Positive
/// exactly where [`cd_slack`] is positive; the two are related by the
/// conformal factor `1/phi`.
pub fn conformal_criterion_slack(op: &OperatorSpec, rho: f64, n: f64, x: f64) -> Result<f64> {
    check_dimension(n)?;
    let w = &op.measure.weight;
    let beta = op.beta();
    let d = 1.0;
    let p = w.eval(x);
    let p1 = w.d1(x);
    let p2 = w.d2(x);
    let grad_sq = p1 * p1;
    Ok((beta - 1.0) * p2 / p
        + (2.0 - d - (2.0 * beta - 1.0) * (2.0 * beta - 1.0) / (n - d)) * grad_sq / (4.0 * p * p)
        + (p2 / (2.0 * p) - 2.0 * beta * grad_sq / (4.0 * p * p) - rho / p))
}
