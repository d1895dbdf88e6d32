//! Closed-form constants of the interpolation inequalities and their
//! admissible ranges.
//!
//!     cargo run --release --example constants_table

use cdflow::constants::{
    alpha_theta, c_beta_quadratic, c_phi, p_star_negative_dim, p_star_weighted,
    phi_condition_check, poincare_constant, q_star, PhiFamily,
};

fn main() -> cdflow::Result<()> {
    println!("entropy condition constant C(n, beta):");
    for (n, beta) in [(1.0, 3.0), (1.0, 4.0), (0.0, 2.0)] {
        println!("  C({n}, {beta}) = {:.6}", c_phi(n, beta)?);
    }

    println!("\nadmissible exponent thresholds:");
    for beta in [3.0, 4.0, 6.0] {
        println!("  weighted p*(n=1, beta={beta}) = {:.6}", p_star_weighted(1.0, beta)?);
    }
    for n in [-2.5, -3.0, -5.0, -10.0] {
        println!(
            "  negative-dimension p*({n}) = {:.6}, dual q*({n}) = {:.6}",
            p_star_negative_dim(n)?,
            q_star(n)?
        );
    }

    println!("\nconcavity constants at p = 1.8:");
    for n in [-3.0, -4.0, -8.0] {
        let (alpha, theta) = alpha_theta(1.8, n)?;
        println!("  n = {n}: alpha = {alpha:.6}, theta = {theta:.6}");
    }

    println!("\nvariance constants:");
    println!("  (n-1)/(rho n) at (5, -4) = {}", poincare_constant(5.0, -4.0)?);
    for beta in [0.6, 1.0, 1.49, 1.5, 2.0, 3.0, 10.0] {
        println!("  C_beta({beta}) = {}", c_beta_quadratic(beta)?);
    }

    println!("\nentropy-family admissibility at (n, beta) = (1, 3):");
    for p in [1.4, 1.6, 2.0] {
        println!(
            "  power p = {p}: {}",
            phi_condition_check(PhiFamily::Power(p), 1.0, 3.0)?
        );
    }
    println!("  x log x: {}", phi_condition_check(PhiFamily::XLogX, 1.0, 3.0)?);
    Ok(())
}
