//! Power-entropy flow with the refined decay certificate: the normalized
//! production bound holds at the concavity parameter theta(p, n), and a
//! tilted initial profile falsifies it once theta is inflated.
//!
//!     cargo run --release --example refined_flow

use cdflow::constants::alpha_theta;
use cdflow::flow::{refined_decay_certificate, run_flow, Entropy, FlowConfig};
use cdflow::{build_measure_with_grid, GridFunction, GridSpec, OperatorSpec, WeightFunction};

fn main() -> cdflow::Result<()> {
    // beta = 3 has the certified pair (rho, n) = (5, -4): K = rho n/(n-1) = 4
    let (alpha, theta) = alpha_theta(1.8, -4.0)?;
    println!("p = 1.8, n = -4: alpha = {alpha}, theta = {theta}");

    let w = WeightFunction::quadratic();
    let grid = GridSpec { r: Some(150.0), n: Some(8001) };
    let k = 4.0;

    let cases: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("gentle bump", Box::new(|x: f64| (0.5 * (-0.5 * x * x).exp()).exp())),
        ("bump + mild tilt", Box::new(|x: f64| (0.4 * (-0.5 * (x - 1.0) * (x - 1.0)).exp() + 0.4 * (x / 3.0_f64).tanh()).exp())),
        ("strong tilt", Box::new(|x: f64| 1.0 + 0.8 * (x / 4.0_f64).tanh())),
    ];

    for (name, f0) in cases {
        let op = OperatorSpec::new(build_measure_with_grid(&w, 3.0, 1e-9, grid)?);
        let initial = GridFunction::from_fn(&op.measure, &f0);
        let mut cfg = FlowConfig::new(op, Entropy::Power(1.8), initial);
        cfg.t_end = 1.5;
        cfg.dt = 1e-4;
        cfg.record_every = 5;
        cfg.scheme_weight = 0.5;
        let trace = run_flow(&cfg, k, theta)?;
        let at_theta = refined_decay_certificate(&trace, k, theta)?;
        let inflated = refined_decay_certificate(&trace, k, 1.5 * theta)?;
        println!(
            "{name:18}: certificate at theta = {at_theta}, at 1.5 theta = {inflated}  (Lambda 0: {:.4e} -> {:.4e})",
            trace.lambda[0],
            trace.lambda.last().unwrap()
        );
    }
    println!("\nthe inflated parameter fails exactly on near-extremal tilts,");
    println!("which is what makes the certificate a usable sharpness probe");
    Ok(())
}
