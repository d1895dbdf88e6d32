//! Certify curvature-dimension conditions CD(rho, n) for weighted
//! operators, including pairs with negative effective dimension.
//!
//!     cargo run --release --example certify_weight

use cdflow::cd;
use cdflow::{build_measure_with_grid, GridSpec, OperatorSpec, WeightFunction};

fn main() -> cdflow::Result<()> {
    let grid = GridSpec { r: Some(60.0), n: Some(4001) };

    println!("quadratic weight 1 + x^2, beta = 2:");
    let w = WeightFunction::quadratic();
    let op = OperatorSpec::new(build_measure_with_grid(&w, 2.0, 1e-9, grid)?);
    for (rho, n) in [(3.0, -2.0), (3.1, -2.0), (1.0, -8.0), (0.5, -1.0)] {
        let cert = cd::certify(&op, rho, n)?;
        println!(
            "  CD({rho}, {n}): {:?}  min slack {:+.3e} at x = {:.1}  [{:?}]",
            cert.status, cert.min_slack, cert.argmin_x, cert.method
        );
    }

    println!("\nquartic weight 1 + x^2 + x^4, beta = 2:");
    let w = WeightFunction::quartic();
    let op = OperatorSpec::new(build_measure_with_grid(&w, 2.0, 1e-9, grid)?);
    for (rho, n) in [(3.0, 7.0), (3.2, 7.0), (3.0, -6.0)] {
        let cert = cd::certify(&op, rho, n)?;
        println!(
            "  CD({rho}, {n}): {:?}  min slack {:+.3e} at x = {:.1}",
            cert.status, cert.min_slack, cert.argmin_x
        );
    }
    println!("  slack profile at CD(3, 7): x = 0 -> {:+.3e}, x = 1 -> {:+.3e}",
        cd::cd_slack(&op, 3.0, 7.0, 0.0)?,
        cd::cd_slack(&op, 3.0, 7.0, 1.0)?,
    );

    // The conformal reformulation gives the same sign everywhere.
    let s = cd::cd_slack(&op, 3.0, 7.0, 1.5)?;
    let t = cd::conformal_criterion_slack(&op, 3.0, 7.0, 1.5)?;
    println!("  conformal check at x = 1.5: slack/phi = {:+.6e}, criterion = {:+.6e}",
        s / op.measure.weight.eval(1.5), t);
    Ok(())
}
