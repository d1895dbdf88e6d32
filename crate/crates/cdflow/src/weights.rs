//! Admissible weight functions and the normalized measures they induce.
//!
//! A weight is an even polynomial `phi > 0` with `phi'' >= c > 0`. For an
//! exponent `beta` with `beta * deg(phi) > 1`, the density `phi^{-beta}` is
//! integrable and `mu = Z * phi^{-beta} dx` is a probability measure once
//! `Z` is fixed by quadrature on a truncated interval `[-R, R]`.

use crate::error::{CdError, Result};
use serde::{Deserialize, Serialize};

/// Built-in weight families, plus arbitrary even polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightFamily {
    /// `1 + x^2`
    Quadratic,
    /// `1 + x^2 + x^4`
    Quartic,
    /// Even polynomial `c0 + c2 x^2 + c4 x^4 + ...`; the list holds the
    /// even-degree coefficients in ascending order.
    EvenPoly(Vec<f64>),
}

/// An even polynomial weight with exact derivative evaluators and a
/// certified uniform convexity bound `c <= inf phi''`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightFunction {
    pub family: WeightFamily,
    /// Full coefficient list of phi in ascending powers of x (odd entries zero).
    coeffs: Vec<f64>,
    /// Uniform convexity bound, the probe-grid infimum of phi''.
    pub c: f64,
}

/// Half-width and node count of the probe grid used to certify positivity
/// and convexity at construction time.
const PROBE_HALF_WIDTH: f64 = 100.0;
const PROBE_NODES: usize = 20_001;

impl WeightFunction {
    pub fn quadratic() -> Self {
        Self::from_even_coeffs(WeightFamily::Quadratic, &[1.0, 1.0]).expect("1+x^2 is admissible")
    }

    pub fn quartic() -> Self {
        Self::from_even_coeffs(WeightFamily::Quartic, &[1.0, 1.0, 1.0])
            .expect("1+x^2+x^4 is admissible")
    }

    /// Build from even coefficients `[c0, c2, c4, ...]`.
    pub fn even_poly(even_coeffs: &[f64]) -> Result<Self> {
        Self::from_even_coeffs(WeightFamily::EvenPoly(even_coeffs.to_vec()), even_coeffs)
    }

    /// Parse a family name used in configs: "quadratic", "quartic", or a
    /// comma-separated even coefficient list "poly:c0,c2,c4".
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "quadratic" => Ok(Self::quadratic()),
            "quartic" => Ok(Self::quartic()),
            other => {
                if let Some(list) = other.strip_prefix("poly:") {
                    let coeffs: std::result::Result<Vec<f64>, _> =
                        list.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    match coeffs {
                        Ok(c) if !c.is_empty() => Self::even_poly(&c),
                        _ => Err(CdError::InvalidInput(format!(
                            "cannot parse even coefficient list in {other:?}"
                        ))),
                    }
                } else {
                    Err(CdError::InvalidInput(format!(
                        "unknown weight family {other:?}; use quadratic, quartic, or poly:c0,c2,..."
                    )))
                }
            }
        }
    }

    fn from_even_coeffs(family: WeightFamily, even_coeffs: &[f64]) -> Result<Self> {
        let mut coeffs = vec![0.0; 2 * even_coeffs.len() - 1];
        for (k, &c) in even_coeffs.iter().enumerate() {
            coeffs[2 * k] = c;
        }
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.len() < 3 {
            return Err(CdError::NonConvex { min_d2: 0.0 });
        }
        if *coeffs.last().expect("nonempty") <= 0.0 {
            return Err(CdError::InvalidInput(
                "leading coefficient of phi must be positive".into(),
            ));
        }
        let mut w = WeightFunction { family, coeffs, c: 0.0 };
        let h = 2.0 * PROBE_HALF_WIDTH / (PROBE_NODES - 1) as f64;
        let mut min_d2 = f64::INFINITY;
        for i in 0..PROBE_NODES {
            let x = -PROBE_HALF_WIDTH + i as f64 * h;
            if w.eval(x) <= 0.0 {
                return Err(CdError::InvalidInput(format!("phi({x}) <= 0")));
            }
            min_d2 = min_d2.min(w.d2(x));
        }
        if min_d2 <= 0.0 {
            return Err(CdError::NonConvex { min_d2 });
        }
        w.c = min_d2;
        Ok(w)
    }

    pub fn eval(&self, x: f64) -> f64 {
        // Horner
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn d1(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * x + k as f64 * self.coeffs[k];
        }
        acc
    }

    pub fn d2(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in (2..self.coeffs.len()).rev() {
            acc = acc * x + (k * (k - 1)) as f64 * self.coeffs[k];
        }
        acc
    }

    /// Polynomial degree of phi.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Leading coefficient of phi.
    pub fn leading_coeff(&self) -> f64 {
        *self.coeffs.last().expect("nonempty")
    }

    /// Full coefficient list in ascending powers.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn family_name(&self) -> String {
        match &self.family {
            WeightFamily::Quadratic => "quadratic".into(),
            WeightFamily::Quartic => "quartic".into(),
            WeightFamily::EvenPoly(c) => format!(
                "poly:{}",
                c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}

/// Grid override for measure construction. `r` replaces the tail-bound
/// truncation radius, `n` the node count (must be odd so 0 is a node).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct GridSpec {
    pub r: Option<f64>,
    pub n: Option<usize>,
}

/// Default node count; acceptance-grade runs override per case.
pub const DEFAULT_NODES: usize = 8001;
/// Default analytic tail-mass tolerance used to pick the truncation radius.
pub const DEFAULT_TAIL_TOL: f64 = 5e-10;

/// A truncated, normalized measure `Z * phi^{-beta} dx` on `[-R, R]` with
/// its quadrature rule. The same uniform nodes back every integral, the
/// divergence-form operator assembly and the eigensolver.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    pub weight: WeightFunction,
    pub beta: f64,
    /// Normalization constant: density is `z * phi(x)^{-beta}`.
    pub z: f64,
    pub r: f64,
    pub nodes: Vec<f64>,
    /// Trapezoid quadrature weights (h inside, h/2 at the ends).
    pub quad_weights: Vec<f64>,
    /// Analytic bound on the mass lost to truncation.
    pub tail_estimate: f64,
}

impl MeasureSpec {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Density of the measure at a node.
    pub fn density(&self, x: f64) -> f64 {
        self.z * self.weight.eval(x).powf(-self.beta)
    }

    /// Lumped mass in the quadrature cell around node i.
    pub fn cell_mass(&self, i: usize) -> f64 {
        self.quad_weights[i] * self.density(self.nodes[i])
    }

    /// Integral of an analytic function against the measure.
    pub fn moment_fn(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.quad_weights)
            .map(|(&x, &w)| w * self.density(x) * g(x))
            .sum()
    }

    /// Integral of a grid function against the measure.
    pub fn moment(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.n() {
            return Err(CdError::ShapeMismatch { expected: self.n(), got: values.len() });
        }
        Ok(self
            .nodes
            .iter()
            .zip(&self.quad_weights)
            .zip(values)
            .map(|((&x, &w), &v)| w * self.density(x) * v)
            .sum())
    }

    /// Analytic tail-mass bound `2 R^{1-2 be} / ((2 be - 1) Z a^beta)` where
    /// `phi^{-beta} ~ (a x^{2m})^{-beta}` decays with order `2 be = 2 m beta`.
    pub fn tail_bound(&self, r: f64) -> f64 {
        tail_bound(&self.weight, self.beta, self.z, r)
    }
}

fn decay_order(w: &WeightFunction, beta: f64) -> f64 {
    w.degree() as f64 * beta
}

fn tail_bound(w: &WeightFunction, beta: f64, z: f64, r: f64) -> f64 {
    let two_be = decay_order(w, beta);
    let a = w.leading_coeff().powf(-beta);
    2.0 * a * r.powf(1.0 - two_be) / ((two_be - 1.0) * z)
}

/// Truncation radius at which the analytic tail bound drops below `tol`.
fn radius_for_tol(w: &WeightFunction, beta: f64, z: f64, tol: f64) -> f64 {
    let two_be = decay_order(w, beta);
    let a = w.leading_coeff().powf(-beta);
    (2.0 * a / ((two_be - 1.0) * z * tol)).powf(1.0 / (two_be - 1.0)).max(10.0)
}

/// Build the normalized measure for `phi^{-beta}`, choosing `R` from the
/// analytic tail bound and `Z` by quadrature.
pub fn build_measure(w: &WeightFunction, beta: f64, tail_tol: f64) -> Result<MeasureSpec> {
    build_measure_with_grid(w, beta, tail_tol, GridSpec::default())
}

/// As [`build_measure`] with explicit overrides for `R` and the node count.
pub fn build_measure_with_grid(
    w: &WeightFunction,
    beta: f64,
    tail_tol: f64,
    grid: GridSpec,
) -> Result<MeasureSpec> {
    if tail_tol <= 0.0 {
        return Err(CdError::InvalidInput("tail tolerance must be positive".into()));
    }
    let decay = decay_order(w, beta);
    if decay <= 1.0 {
        return Err(CdError::NonIntegrable { decay });
    }
    // Reject weights that fail convexity against this measure's probe grid.
    if w.c <= 0.0 {
        return Err(CdError::NonConvex { min_d2: w.c });
    }
    let n = grid.n.unwrap_or(DEFAULT_NODES);
    if n < 9 || n % 2 == 0 {
        return Err(CdError::InvalidInput(format!(
            "node count {n} must be odd and at least 9"
        )));
    }

    // Z depends on R only through an exponentially converged quadrature, so
    // one bootstrap pass with Z = 1 followed by a recompute settles both.
    let r = match grid.r {
        Some(r) => r,
        None => {
            let r0 = radius_for_tol(w, beta, 1.0, tail_tol);
            let z0 = 1.0 / unnormalized_mass(w, beta, r0, n);
            radius_for_tol(w, beta, z0, tail_tol)
        }
    };
    if !r.is_finite() || r <= 0.0 {
        return Err(CdError::InvalidInput(format!("truncation radius {r} invalid")));
    }

    let h = 2.0 * r / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| -r + i as f64 * h).collect();
    let mut quad_weights = vec![h; n];
    quad_weights[0] = 0.5 * h;
    quad_weights[n - 1] = 0.5 * h;

    let mass: f64 = nodes
        .iter()
        .zip(&quad_weights)
        .map(|(&x, &qw)| qw * w.eval(x).powf(-beta))
        .sum();
    let z = 1.0 / mass;

    Ok(MeasureSpec {
        weight: w.clone(),
        beta,
        z,
        r,
        nodes,
        quad_weights,
        tail_estimate: tail_bound(w, beta, z, r),
    })
}

fn unnormalized_mass(w: &WeightFunction, beta: f64, r: f64, n: usize) -> f64 {
    let h = 2.0 * r / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = -r + i as f64 * h;
            let qw = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            qw * w.eval(x).powf(-beta)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Z_QUAD_B3: f64 = 8.0 / (3.0 * std::f64::consts::PI);

    #[test]
    fn quadratic_beta3_normalization_matches_antiderivative() {
        // int (1+x^2)^-3 dx = 3*pi/8 exactly
        let w = WeightFunction::quadratic();
        let m = build_measure(&w, 3.0, 1e-10).unwrap();
        assert!(
            (m.z - Z_QUAD_B3).abs() < 1e-9,
            "Z = {} vs 8/(3pi) = {}",
            m.z,
            Z_QUAD_B3
        );
        assert!((m.moment_fn(|_| 1.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadratic_beta3_second_moment() {
        // int x^2 dmu = (pi/8) / (3pi/8) = 1/3 = 1/(2*beta - 3)
        let w = WeightFunction::quadratic();
        let m = build_measure(&w, 3.0, 5e-14).unwrap();
        let m2 = m.moment_fn(|x| x * x);
        assert!((m2 - 1.0 / 3.0).abs() < 1e-8, "m2 = {m2}");
        let m_phi = m.moment_fn(|x| 1.0 + x * x);
        assert!((m_phi - 4.0 / 3.0).abs() < 1e-8, "int phi dmu = {m_phi}");
    }

    #[test]
    fn moment_of_grid_function_matches_analytic_path() {
        let w = WeightFunction::quadratic();
        let m = build_measure(&w, 3.0, 1e-10).unwrap();
        let vals: Vec<f64> = m.nodes.iter().map(|&x| x.sin() + 1.0).collect();
        let a = m.moment(&vals).unwrap();
        let b = m.moment_fn(|x| x.sin() + 1.0);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn moment_rejects_wrong_length() {
        let w = WeightFunction::quadratic();
        let m = build_measure(&w, 3.0, 1e-8).unwrap();
        let err = m.moment(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, CdError::ShapeMismatch { .. }));
    }

    #[test]
    fn non_integrable_beta_rejected() {
        let w = WeightFunction::quadratic();
        let err = build_measure(&w, 0.4, 1e-8).unwrap_err();
        assert!(matches!(err, CdError::NonIntegrable { .. }), "{err}");
    }

    #[test]
    fn concave_weight_rejected() {
        // 1 + x^2 - x^4 has phi'' < 0 away from the origin (and goes negative).
        let err = WeightFunction::even_poly(&[1.0, 1.0, -1.0]).unwrap_err();
        assert!(
            matches!(err, CdError::NonConvex { .. } | CdError::InvalidInput(_)),
            "{err}"
        );
    }

    #[test]
    fn derivatives_match_central_differences() {
        let w = WeightFunction::quartic();
        let h = 1e-4;
        for &x in &[0.0, 0.37, 1.0, 2.5, -1.3] {
            let d1_fd = (w.eval(x + h) - w.eval(x - h)) / (2.0 * h);
            let d2_fd = (w.eval(x + h) - 2.0 * w.eval(x) + w.eval(x - h)) / (h * h);
            assert!((w.d1(x) - d1_fd).abs() < 1e-5 * (1.0 + w.d1(x).abs()));
            assert!((w.d2(x) - d2_fd).abs() < 1e-4 * (1.0 + w.d2(x).abs()));
        }
    }

    #[test]
    fn convexity_bound_is_two_for_builtins() {
        assert!((WeightFunction::quadratic().c - 2.0).abs() < 1e-12);
        assert!((WeightFunction::quartic().c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tail_estimate_below_tolerance() {
        let w = WeightFunction::quadratic();
        for tol in [1e-8, 1e-10, 1e-12] {
            let m = build_measure(&w, 3.0, tol).unwrap();
            assert!(m.tail_estimate <= tol * 1.0001, "tail {} vs tol {tol}", m.tail_estimate);
        }
    }

    #[test]
    fn doubling_resolution_change_within_error_estimate() {
        let w = WeightFunction::quadratic();
        let grid = |n| GridSpec { r: Some(60.0), n: Some(n) };
        let m1 = build_measure_with_grid(&w, 3.0, 1e-9, grid(4001)).unwrap();
        let m2 = build_measure_with_grid(&w, 3.0, 1e-9, grid(8001)).unwrap();
        // Quadrature on these densities converges far faster than O(h^2);
        // the Euler-Maclaurin boundary term plus a rounding floor bounds it.
        let h = m1.h();
        let boundary = (w.d1(m1.r) * m1.beta * w.eval(m1.r).powf(-m1.beta - 1.0)).abs();
        let est = h * h / 12.0 * 2.0 * boundary + 1e-13;
        assert!(
            (m1.z - m2.z).abs() < 4.0 * est,
            "dZ = {:e}, est = {est:e}",
            (m1.z - m2.z).abs()
        );
    }

    proptest! {
        #[test]
        fn mass_one_and_symmetric(beta in 1.2f64..6.0, c2 in 0.5f64..3.0, c4 in 0.0f64..2.0) {
            let w = WeightFunction::even_poly(&[1.0, c2, c4]).unwrap();
            let m = build_measure_with_grid(&w, beta, 1e-8,
                GridSpec { r: None, n: Some(2001) }).unwrap();
            let mass = m.moment_fn(|_| 1.0);
            prop_assert!((mass - 1.0).abs() < 1e-10, "mass = {}", mass);
            let mean = m.moment_fn(|x| x);
            prop_assert!(mean.abs() < 1e-10, "mean = {}", mean);
        }
    }
}
