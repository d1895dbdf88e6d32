//! Randomized falsification of interpolation inequalities and direct
//! quotient minimization.
//!
//!     cargo run --release --example beckner_falsifier

use cdflow::constants::p_star_weighted;
use cdflow::lab::{quotient_minimizer, randomized_falsifier, BecknerSource};
use cdflow::{build_measure_with_grid, GridSpec, OperatorSpec, WeightFunction};

fn main() -> cdflow::Result<()> {
    let w = WeightFunction::quadratic();
    let grid = GridSpec { r: Some(200.0), n: Some(4001) };
    let op = OperatorSpec::new(build_measure_with_grid(&w, 3.0, 1e-9, grid)?);

    // sharp constant 1/(c(beta-1)) = 1/4 for the weighted form at beta = 3
    let p_star = p_star_weighted(1.0, 3.0)?;
    println!("weighted inequality at C = 1/4, 500 trials each:");
    for p in [p_star, 1.8, 2.0] {
        let rep = randomized_falsifier(&op, p, 0.25, 500, 42, true, BecknerSource::Weighted)?;
        println!(
            "  p = {p:.4}: {} violations, worst quotient {:.6} (redraws {})",
            rep.violations, rep.worst_quotient, rep.redraws
        );
    }

    println!("\nno positive constant survives without the weight:");
    let rep = randomized_falsifier(&op, 1.8, 1.0, 500, 42, false, BecknerSource::Cd)?;
    println!(
        "  claimed C = 1 unweighted: {} violations, worst quotient {:.4}",
        rep.violations, rep.worst_quotient
    );

    println!("\nprojected-gradient minimization of the weighted quotient:");
    for p in [2.0, 1.8, 1.6] {
        let (q, _witness) = quotient_minimizer(&op, p, true, 60)?;
        println!("  p = {p}: inf quotient found {q:.5} (sharp value 4)");
    }
    Ok(())
}
