//! Numerical toolkit for one-dimensional weighted diffusion operators
//! `L f = phi f'' - (beta - 1) phi' f'` built from an even polynomial
//! weight `phi` and the probability measure `Z phi^{-beta} dx`.
//!
//! The crate certifies pointwise curvature-dimension conditions CD(rho, n)
//! (including negative effective dimension), evaluates the closed-form
//! constants attached to them, simulates entropy flows under the semigroup
//! and monitors their decay inequalities, and estimates sharp variance and
//! interpolation constants by spectral and randomized methods.
//!
//! Start from the runnable examples:
//!
//! ```bash
//! cargo run --release --example certify_weight
//! cargo run --release --example frontier_scan
//! cargo run --release --example constants_table
//! cargo run --release --example variance_flow
//! cargo run --release --example refined_flow
//! cargo run --release --example spectral_gap
//! cargo run --release --example beckner_falsifier
//! ```
//!
//! or from the thin `cdflow` binary, which exposes the same capabilities
//! as subcommands emitting JSON reports and CSV series.

pub mod cd;
pub mod constants;
pub mod error;
pub mod flow;
pub mod lab;
pub mod operator;
pub mod report;
pub mod tridiag;
pub mod weights;

pub use cd::{certify, cd_slack, conformal_criterion_slack, frontier, CdCertificate, FrontierResult};
pub use error::{CdError, Result};
pub use flow::{decay_certificate, refined_decay_certificate, run_flow, Entropy, FlowConfig, FlowTrace};
pub use lab::{beckner_quotient, gap_report, phi_entropy_quotient, quotient_minimizer, randomized_falsifier, spectral_gap};
pub use operator::{apply_l, discretize, gamma, gamma2, gamma2_by_definition, GridFunction, OperatorSpec};
pub use weights::{build_measure, build_measure_with_grid, GridSpec, MeasureSpec, WeightFunction};
