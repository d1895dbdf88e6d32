//! The weighted diffusion operator `L f = phi f'' - (beta - 1) phi' f'`,
//! its carre du champ forms, and a self-adjoint divergence-form
//! discretization against the measure `Z phi^{-beta} dx`.
//!
//! Pointwise diagnostics (gamma, gamma2) use 4th-order finite differences;
//! the quadratic forms use the 2nd-order divergence assembly, which keeps
//! the discrete integration-by-parts identity exact.

use crate::error::{CdError, Result};
use crate::tridiag;
use crate::weights::MeasureSpec;

/// Values of a function sampled on the measure's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(values: Vec<f64>) -> Self {
        GridFunction { values }
    }

    pub fn from_fn(measure: &MeasureSpec, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { values: measure.nodes.iter().map(|&x| f(x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The pair (phi, beta) acting on a fixed grid.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub measure: MeasureSpec,
}

impl OperatorSpec {
    pub fn new(measure: MeasureSpec) -> Self {
        OperatorSpec { measure }
    }

    pub fn beta(&self) -> f64 {
        self.measure.beta
    }

    fn check_shape(&self, f: &GridFunction) -> Result<()> {
        if f.len() != self.measure.n() {
            return Err(CdError::ShapeMismatch { expected: self.measure.n(), got: f.len() });
        }
        Ok(())
    }
}

// 4th-order first derivative, one-sided at the edges.
fn deriv1(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let f = values;
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    out[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for i in 2..n - 2 {
        out[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    out[n - 2] = -c * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
    out[n - 1] = -c * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4] - 3.0 * f[n - 5]);
    out
}

// 4th-order second derivative inside, 3rd-order one-sided at the edges.
fn deriv2(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let f = values;
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * h * h);
    out[0] = c * (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4]);
    out[1] = c * (11.0 * f[0] - 20.0 * f[1] + 6.0 * f[2] + 4.0 * f[3] - f[4]);
    for i in 2..n - 2 {
        out[i] = c * (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]);
    }
    out[n - 2] = c * (11.0 * f[n - 1] - 20.0 * f[n - 2] + 6.0 * f[n - 3] + 4.0 * f[n - 4] - f[n - 5]);
    out[n - 1] = c * (35.0 * f[n - 1] - 104.0 * f[n - 2] + 114.0 * f[n - 3] - 56.0 * f[n - 4] + 11.0 * f[n - 5]);
    out
}

/// Carre du champ `gamma(f, g) = phi f' g'` evaluated pointwise.
pub fn gamma(op: &OperatorSpec, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    op.check_shape(f)?;
    op.check_shape(g)?;
    let h = op.measure.h();
    let df = deriv1(&f.values, h);
    let dg = deriv1(&g.values, h);
    let values = op
        .measure
        .nodes
        .iter()
        .zip(df.iter().zip(&dg))
        .map(|(&x, (&a, &b))| op.measure.weight.eval(x) * a * b)
        .collect();
    Ok(GridFunction { values })
}

/// Generator action `L f = phi f'' - (beta - 1) phi' f'` evaluated pointwise.
pub fn apply_l(op: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    op.check_shape(f)?;
    let h = op.measure.h();
    let df = deriv1(&f.values, h);
    let d2f = deriv2(&f.values, h);
    let w = &op.measure.weight;
    let bm1 = op.beta() - 1.0;
    let values = op
        .measure
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| w.eval(x) * d2f[i] - bm1 * w.d1(x) * df[i])
        .collect();
    Ok(GridFunction { values })
}

/// Iterated form by its closed expansion:
/// `gamma2(f) = ((2b-1) phi phi'' + (1-b) phi'^2) f'^2 / 2
///             + phi phi' f' f'' + phi^2 f''^2`.
pub fn gamma2(op: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    op.check_shape(f)?;
    let h = op.measure.h();
    let df = deriv1(&f.values, h);
    let d2f = deriv2(&f.values, h);
    let w = &op.measure.weight;
    let b = op.beta();
    let values = op
        .measure
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let (p, p1, p2) = (w.eval(x), w.d1(x), w.d2(x));
            0.5 * ((2.0 * b - 1.0) * p * p2 + (1.0 - b) * p1 * p1) * df[i] * df[i]
                + p * p1 * df[i] * d2f[i]
                + p * p * d2f[i] * d2f[i]
        })
        .collect();
    Ok(GridFunction { values })
}

/// Iterated form straight from the definition
/// `gamma2(f) = L(gamma(f))/2 - gamma(f, Lf)`, composing the pointwise
/// generator and carre du champ. Agrees with [`gamma2`] up to
/// discretization error; the pair is kept as a cross-check on the
/// sign-sensitive (beta - 1) terms.
pub fn gamma2_by_definition(op: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    op.check_shape(f)?;
    let g = gamma(op, f, f)?;
    let lg = apply_l(op, &g)?;
    let lf = apply_l(op, f)?;
    let cross = gamma(op, f, &lf)?;
    let values = lg
        .values
        .iter()
        .zip(&cross.values)
        .map(|(&a, &b)| 0.5 * a - b)
        .collect();
    Ok(GridFunction { values })
}

/// Divergence-form discretization: stiffness `A` with
/// `f^T A f ~ int phi f'^2 dmu` and diagonal mass `M` with
/// `f^T M f ~ int f^2 dmu`. Zero-flux at the ends, so `A 1 = 0` exactly.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    /// Half-node conductivities `Z phi^{1-beta}(x_{i+1/2}) / h`, length n-1.
    pub a_off: Vec<f64>,
    /// Lumped masses `w_i Z phi^{-beta}(x_i)`, length n.
    pub m_diag: Vec<f64>,
    pub nodes: Vec<f64>,
}

impl DiscretizedOperator {
    pub fn n(&self) -> usize {
        self.m_diag.len()
    }

    /// Stiffness action `(A f)_i`.
    pub fn apply_a(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let flux = self.a_off[i] * (f[i] - f[i + 1]);
            out[i] += flux;
            out[i + 1] -= flux;
        }
        out
    }

    /// Dirichlet energy `f^T A f = sum w_{i+1/2} (f_{i+1} - f_i)^2`.
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        self.a_off
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let d = f[i + 1] - f[i];
                w * d * d
            })
            .sum()
    }

    /// Weighted Dirichlet energy with a half-node factor, used for
    /// Phi-entropy production integrals.
    pub fn dirichlet_weighted(&self, f: &[f64], factor: impl Fn(f64) -> f64) -> f64 {
        self.a_off
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let d = f[i + 1] - f[i];
                let mid = 0.5 * (f[i + 1] + f[i]);
                w * d * d * factor(mid)
            })
            .sum()
    }

    /// Discrete generator `(-M^{-1} A f)_i`, consistent with `L f`.
    pub fn generator(&self, f: &[f64]) -> Vec<f64> {
        self.apply_a(f)
            .into_iter()
            .zip(&self.m_diag)
            .map(|(af, &m)| -af / m)
            .collect()
    }

    pub fn mass(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.m_diag).map(|(&v, &m)| v * m).sum()
    }

    pub fn l2_ip(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.m_diag).map(|((&a, &b), &m)| a * b * m).sum()
    }

    pub fn variance(&self, f: &[f64]) -> f64 {
        let mean = self.mass(f);
        self.l2_ip(f, f) - mean * mean
    }

    /// Symmetrized standard-tridiagonal form of the pencil (A, M):
    /// `D^{-1/2} A D^{-1/2}` as (diag, off).
    pub fn symmetrized(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let s: Vec<f64> = self.m_diag.iter().map(|&m| 1.0 / m.sqrt()).collect();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { self.a_off[i - 1] } else { 0.0 };
            let right = if i < n - 1 { self.a_off[i] } else { 0.0 };
            diag[i] = (left + right) * s[i] * s[i];
        }
        let off: Vec<f64> = (0..n - 1).map(|i| -self.a_off[i] * s[i] * s[i + 1]).collect();
        (diag, off)
    }

    /// Smallest eigenvalue of the pencil; should vanish with the constant
    /// eigenvector under the zero-flux assembly.
    pub fn kernel_eigenvalue(&self) -> f64 {
        let (diag, off) = self.symmetrized();
        tridiag::bisect_eigenvalue(&diag, &off, 0)
    }
}

/// Assemble the divergence-form pencil for an operator's measure.
pub fn discretize(op: &OperatorSpec) -> DiscretizedOperator {
    let m = &op.measure;
    let n = m.n();
    let h = m.h();
    let inv_h = 1.0 / h;
    let a_off: Vec<f64> = (0..n - 1)
        .map(|i| {
            let mid = 0.5 * (m.nodes[i] + m.nodes[i + 1]);
            m.z * m.weight.eval(mid).powf(1.0 - m.beta) * inv_h
        })
        .collect();
    let m_diag: Vec<f64> = (0..n).map(|i| m.cell_mass(i)).collect();
    DiscretizedOperator { a_off, m_diag, nodes: m.nodes.clone() }
}

/// Self-test of the flat-space Hessian identity
/// `a'' b'^2 = gamma(b, gamma(a, b)) - gamma(a, gamma(b)) / 2`
/// with `phi = 1`, returning the maximum residual over a uniform grid on
/// `[-half_width, half_width]`.
pub fn hessian_identity_check(
    a: impl Fn(f64) -> f64,
    b: impl Fn(f64) -> f64,
    half_width: f64,
    n: usize,
) -> f64 {
    let h = 2.0 * half_width / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -half_width + i as f64 * h).collect();
    let av: Vec<f64> = xs.iter().map(|&x| a(x)).collect();
    let bv: Vec<f64> = xs.iter().map(|&x| b(x)).collect();
    let da = deriv1(&av, h);
    let db = deriv1(&bv, h);
    let d2a = deriv2(&av, h);

    let gamma_ab: Vec<f64> = da.iter().zip(&db).map(|(&x, &y)| x * y).collect();
    let gamma_bb: Vec<f64> = db.iter().map(|&y| y * y).collect();
    let d_gab = deriv1(&gamma_ab, h);
    let d_gbb = deriv1(&gamma_bb, h);

    let mut max_res = 0.0f64;
    for i in 0..n {
        let lhs = d2a[i] * db[i] * db[i];
        let rhs = db[i] * d_gab[i] - 0.5 * da[i] * d_gbb[i];
        max_res = max_res.max((lhs - rhs).abs());
    }
    max_res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{build_measure_with_grid, GridSpec, WeightFunction};

    fn quad_op(beta: f64, r: f64, n: usize) -> OperatorSpec {
        let w = WeightFunction::quadratic();
        let m = build_measure_with_grid(&w, beta, 1e-9, GridSpec { r: Some(r), n: Some(n) })
            .unwrap();
        OperatorSpec::new(m)
    }

    fn at(op: &OperatorSpec, g: &GridFunction, x: f64) -> f64 {
        let i = op
            .measure
            .nodes
            .iter()
            .position(|&t| (t - x).abs() < 1e-9)
            .expect("x is a node");
        g.values[i]
    }

    #[test]
    fn gamma_of_identity_is_phi() {
        let op = quad_op(3.0, 60.0, 6001);
        let f = GridFunction::from_fn(&op.measure, |x| x);
        let g = gamma(&op, &f, &f).unwrap();
        for (i, &x) in op.measure.nodes.iter().enumerate() {
            let phi = 1.0 + x * x;
            assert!((g.values[i] - phi).abs() < 1e-8 * (1.0 + phi), "x={x}");
        }
    }

    #[test]
    fn gamma_kills_constants() {
        let op = quad_op(2.0, 60.0, 2001);
        let f = GridFunction::from_fn(&op.measure, |_| 7.5);
        let g = gamma(&op, &f, &f).unwrap();
        assert!(g.values.iter().all(|&v| v.abs() < 1e-20));
    }

    #[test]
    fn gamma_squared_function_at_one() {
        let op = quad_op(3.0, 60.0, 6001);
        let f = GridFunction::from_fn(&op.measure, |x| x * x);
        let g = gamma(&op, &f, &f).unwrap();
        // phi (2x)^2 = 2 * 4 = 8 at x = 1
        assert!((at(&op, &g, 1.0) - 8.0).abs() < 1e-8);
    }

    #[test]
    fn apply_l_examples() {
        let op = quad_op(3.0, 60.0, 6001);
        let f = GridFunction::from_fn(&op.measure, |x| x);
        let lf = apply_l(&op, &f).unwrap();
        assert!((at(&op, &lf, 1.0) - (-4.0)).abs() < 1e-9);
        let c = GridFunction::from_fn(&op.measure, |_| 3.0);
        let lc = apply_l(&op, &c).unwrap();
        assert!(lc.values.iter().all(|&v| v.abs() < 1e-9));
        let f2 = GridFunction::from_fn(&op.measure, |x| x * x);
        let lf2 = apply_l(&op, &f2).unwrap();
        assert!((at(&op, &lf2, 0.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gamma2_expansion_examples() {
        for beta in [1.3, 2.0, 3.0] {
            let op = quad_op(beta, 60.0, 6001);
            let f = GridFunction::from_fn(&op.measure, |x| x);
            let g2 = gamma2(&op, &f).unwrap();
            for &x in &[0.0, 0.6, 2.0] {
                let expect = (2.0 * beta - 1.0) + x * x;
                assert!(
                    (at(&op, &g2, x) - expect).abs() < 1e-8,
                    "beta={beta} x={x}: {} vs {expect}",
                    at(&op, &g2, x)
                );
            }
        }
        let op = quad_op(3.0, 60.0, 6001);
        let g2 = gamma2(&op, &GridFunction::from_fn(&op.measure, |x| x)).unwrap();
        assert!((at(&op, &g2, 2.0) - 9.0).abs() < 1e-8);
    }

    #[test]
    fn gamma2_definition_matches_expansion() {
        let w = WeightFunction::quartic();
        let m = build_measure_with_grid(&w, 2.0, 1e-9, GridSpec { r: Some(60.0), n: Some(6001) })
            .unwrap();
        let op = OperatorSpec::new(m);
        let f = GridFunction::from_fn(&op.measure, |x| x);
        let a = gamma2(&op, &f).unwrap();
        let b = gamma2_by_definition(&op, &f).unwrap();
        let i1 = op.measure.nodes.iter().position(|&t| (t - 1.0).abs() < 1e-9).unwrap();
        assert!(
            (a.values[i1] - b.values[i1]).abs() < 1e-6,
            "{} vs {}",
            a.values[i1],
            b.values[i1]
        );

        // smooth non-polynomial data: the composed route differentiates the
        // pointwise carre du champ once more, so agreement is O(h^2) with a
        // phi-weighted constant
        let worst_at = |n: usize| {
            let m =
                build_measure_with_grid(&w, 2.0, 1e-9, GridSpec { r: Some(60.0), n: Some(n) })
                    .unwrap();
            let op = OperatorSpec::new(m);
            let f = GridFunction::from_fn(&op.measure, |x| (-(x * x) / 8.0).exp() * (1.0 + x));
            let a = gamma2(&op, &f).unwrap();
            let b = gamma2_by_definition(&op, &f).unwrap();
            (8..n - 8).map(|i| (a.values[i] - b.values[i]).abs()).fold(0.0f64, f64::max)
        };
        let coarse = worst_at(6001);
        let fine = worst_at(12001);
        assert!(coarse < 5e-3, "worst disagreement {coarse}");
        assert!(coarse / fine > 3.0, "order below 2: {coarse} -> {fine}");
    }

    #[test]
    fn divergence_form_identities() {
        let op = quad_op(3.0, 150.0, 8001);
        let dop = discretize(&op);
        let ones = vec![1.0; dop.n()];
        let a1 = dop.apply_a(&ones);
        assert!(a1.iter().all(|&v| v == 0.0), "A 1 must vanish exactly");

        let x: Vec<f64> = dop.nodes.clone();
        let e = dop.dirichlet(&x);
        assert!((e - 4.0 / 3.0).abs() < 1e-6, "dirichlet(x) = {e}");

        let k = dop.kernel_eigenvalue();
        assert!(k.abs() < 1e-10, "kernel eigenvalue {k}");
    }

    #[test]
    fn integration_by_parts_and_mean_zero() {
        let op = quad_op(2.5, 60.0, 8001);
        let dop = discretize(&op);
        let f = GridFunction::from_fn(&op.measure, |x| (-(x - 0.5) * (x - 0.5)).exp());
        let g = GridFunction::from_fn(&op.measure, |x| (-(x + 1.0) * (x + 1.0) / 2.0).exp());
        let gamma_fg = gamma(&op, &f, &g).unwrap();
        let lg = apply_l(&op, &g).unwrap();
        let lhs = op.measure.moment(&gamma_fg.values).unwrap();
        let rhs: f64 = f
            .values
            .iter()
            .zip(&lg.values)
            .enumerate()
            .map(|(i, (&a, &b))| a * b * dop.m_diag[i])
            .sum();
        assert!((lhs + rhs).abs() < 1e-7, "ibp residual {}", lhs + rhs);

        let lf = apply_l(&op, &f).unwrap();
        let mean_lf = op.measure.moment(&lf.values).unwrap();
        assert!(mean_lf.abs() < 1e-8, "int L f dmu = {mean_lf}");
    }

    #[test]
    fn gamma2_integral_equals_lf_squared() {
        let op = quad_op(3.0, 60.0, 8001);
        let f = GridFunction::from_fn(&op.measure, |x| (-(x * x) / 4.0).exp());
        let g2 = gamma2(&op, &f).unwrap();
        let lf = apply_l(&op, &f).unwrap();
        let lhs = op.measure.moment(&g2.values).unwrap();
        let rhs = op
            .measure
            .moment(&lf.values.iter().map(|&v| v * v).collect::<Vec<_>>())
            .unwrap();
        assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
    }

    #[test]
    fn generator_consistent_with_pointwise_l() {
        let op = quad_op(3.0, 60.0, 8001);
        let dop = discretize(&op);
        let f = GridFunction::from_fn(&op.measure, |x| (x / 10.0).sin());
        let lf = apply_l(&op, &f).unwrap();
        let gen = dop.generator(&f.values);
        let n = op.measure.n();
        let worst = (n / 4..3 * n / 4)
            .map(|i| (gen[i] - lf.values[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-4, "generator mismatch {worst}");
    }

    #[test]
    fn hessian_identity_examples() {
        let r = hessian_identity_check(|x| x * x, |x| x, 5.0, 2001);
        assert!(r < 1e-8, "quadratic residual {r}");
        let r = hessian_identity_check(|_| 2.0, |x| x.sin(), 5.0, 2001);
        assert!(r < 1e-12, "constant residual {r}");
        let r = hessian_identity_check(|x| x * x * x, |x| x * x, 5.0, 2001);
        assert!(r < 1e-6, "cubic residual {r}");
    }

    #[test]
    fn shape_mismatch_detected() {
        let op = quad_op(3.0, 60.0, 6001);
        let bad = GridFunction::from_values(vec![1.0; 7]);
        assert!(matches!(
            gamma(&op, &bad, &bad),
            Err(CdError::ShapeMismatch { .. })
        ));
        assert!(matches!(apply_l(&op, &bad), Err(CdError::ShapeMismatch { .. })));
    }
}
