//! Thin command-line front end: every subcommand builds the requested
//! operator, calls into the library, and emits a JSON report (plus
//! optional CSV series). Identical argv and seed replay byte for byte.

use clap::{Args, Parser, Subcommand};
use cdflow::cd::{self, SearchBox};
use cdflow::constants;
use cdflow::error::CdError;
use cdflow::flow::{self, Entropy, FlowConfig};
use cdflow::lab::{self, BecknerSource};
use cdflow::operator::{GridFunction, OperatorSpec};
use cdflow::report::{self, RunConfig};
use cdflow::weights::{build_measure_with_grid, GridSpec, WeightFunction, DEFAULT_TAIL_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cdflow", version, about = "curvature-dimension certification and sharp-constant estimation for 1D weighted diffusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Weight family: quadratic, quartic, or poly:c0,c2,c4,...
    #[arg(long, default_value = "quadratic")]
    family: String,
    /// Exponent beta of the measure phi^{-beta}
    #[arg(long)]
    beta: f64,
    /// Override the truncation half-width R
    #[arg(long)]
    grid_r: Option<f64>,
    /// Override the node count N (odd)
    #[arg(long)]
    grid_n: Option<usize>,
    /// Analytic tail-mass tolerance used to pick R
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    tail_tol: f64,
    /// Master seed for randomized components
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the JSON report here as well as to stdout
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write series output here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a CD(rho, n) condition for the weighted operator
    Certify {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        rho: f64,
        /// Effective dimension, forbidden inside [0, 1]
        #[arg(long, allow_hyphen_values = true)]
        n: f64,
        /// Force the grid scan even when a closed form exists
        #[arg(long, default_value_t = false)]
        scan: bool,
    },
    /// Maximize rho n/(n-1) over certified pairs
    Frontier {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 1e4)]
        rho_max: f64,
        #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
        n_min: f64,
        #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
        n_max: f64,
        /// Force the grid scan even when a closed form exists
        #[arg(long, default_value_t = false)]
        scan: bool,
    },
    /// Evaluate a closed-form constant, or sweep it over a parameter range
    Constants {
        /// One of: c_phi, p_star, p_star_weighted, p_star_negative_dim,
        /// q_star, alpha, theta, poincare, c_beta
        #[arg(long)]
        name: String,
        #[arg(long, allow_hyphen_values = true)]
        n: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<f64>,
        /// Sweep spec var=start:end:step with var one of n, beta, p
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrate the semigroup flow and monitor entropy decay
    Flow {
        #[command(flatten)]
        common: CommonOpts,
        /// variance, power:<p>, or xlogx
        #[arg(long, default_value = "variance")]
        entropy: String,
        /// Initial data: x, bump, tilt, or random
        #[arg(long, default_value = "x")]
        init: String,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Decay rate under test
        #[arg(long)]
        k: f64,
        /// Refined concavity parameter
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        #[arg(long, default_value_t = 0.55)]
        scheme_weight: f64,
    },
    /// Spectral gap of the discretized pencil
    Gap {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Randomized falsification of an interpolation inequality
    Beckner {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Claimed constant; defaults to 1/(c (beta-1))
        #[arg(long)]
        c: Option<f64>,
        /// Test the unweighted form (flat carre du champ)
        #[arg(long, default_value_t = false)]
        unweighted: bool,
        /// Provenance of the claimed constant: weighted or cd
        #[arg(long, default_value = "weighted")]
        source: String,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CDFLOW_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CdError::DimensionForbidden { n } => {
                    eprintln!("hint: --n {n} lies in the forbidden band [0, 1]");
                }
                CdError::OutOfRange(_) | CdError::Degenerate(_) => {
                    eprintln!("hint: check the admissible range in the message above");
                }
                _ => {}
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn build_operator(common: &CommonOpts) -> cdflow::Result<OperatorSpec> {
    let w = WeightFunction::from_name(&common.family)?;
    let grid = GridSpec { r: common.grid_r, n: common.grid_n };
    let m = build_measure_with_grid(&w, common.beta, common.tail_tol, grid)?;
    Ok(OperatorSpec::new(m))
}

fn run_config(command: &str, common: &CommonOpts, op: &OperatorSpec, params: Map<String, Value>) -> RunConfig {
    RunConfig {
        command: command.into(),
        family: common.family.clone(),
        beta: common.beta,
        grid_r: op.measure.r,
        grid_n: op.measure.n(),
        tail_tol: common.tail_tol,
        seed: common.seed,
        parameters: params,
    }
}

fn emit<T: Serialize>(
    config: RunConfig,
    result: T,
    json_path: &Option<PathBuf>,
) -> cdflow::Result<()> {
    let rep = report::make_report(config, result);
    let body = report::to_json(&rep)?;
    println!("{body}");
    if let Some(path) = json_path {
        report::write_json(&rep, path)?;
    }
    Ok(())
}

fn parse_entropy(s: &str) -> cdflow::Result<Entropy> {
    match s {
        "variance" => Ok(Entropy::Variance),
        "xlogx" => Ok(Entropy::XLogX),
        other => {
            if let Some(p) = other.strip_prefix("power:") {
                let p: f64 = p
                    .parse()
                    .map_err(|_| CdError::InvalidInput(format!("bad power exponent in {other:?}")))?;
                if p <= 1.0 || p >= 2.0 {
                    return Err(CdError::OutOfRange(format!(
                        "--entropy power exponent must lie in (1, 2), got {p}"
                    )));
                }
                Ok(Entropy::Power(p))
            } else {
                Err(CdError::InvalidInput(format!(
                    "unknown entropy {other:?}; use variance, power:<p>, or xlogx"
                )))
            }
        }
    }
}

fn initial_data(op: &OperatorSpec, init: &str, entropy: Entropy, seed: u64) -> cdflow::Result<GridFunction> {
    let positive = !matches!(entropy, Entropy::Variance);
    Ok(match init {
        "x" => {
            if positive {
                return Err(CdError::InvalidInput(
                    "--init x is signed; nonlinear entropies need bump, tilt, or random".into(),
                ));
            }
            GridFunction::from_fn(&op.measure, |x| x)
        }
        "bump" => GridFunction::from_fn(&op.measure, |x| (0.6 * (-0.5 * x * x).exp()).exp()),
        "tilt" => GridFunction::from_fn(&op.measure, |x| (0.5 * (x / 3.0).tanh()).exp()),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            GridFunction::from_values(lab::sample_test_function(&op.measure, &mut rng))
        }
        other => {
            return Err(CdError::InvalidInput(format!(
                "unknown init {other:?}; use x, bump, tilt, or random"
            )))
        }
    })
}

#[derive(Serialize)]
struct FlowSummary {
    decay_ok: bool,
    refined_ok: bool,
    min_residual_linear: f64,
    min_residual_refined: f64,
    mass_drift: f64,
    lambda_initial: f64,
    lambda_final: f64,
    diagnostic: bool,
}

fn parse_sweep(spec: &str) -> cdflow::Result<(String, Vec<f64>)> {
    let (var, range) = spec
        .split_once('=')
        .ok_or_else(|| CdError::InvalidInput(format!("--sweep {spec:?} is not var=start:end:step")))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CdError::InvalidInput(format!("--sweep {spec:?} is not var=start:end:step")));
    }
    let nums: std::result::Result<Vec<f64>, _> = parts.iter().map(|s| s.parse::<f64>()).collect();
    let nums = nums.map_err(|_| CdError::InvalidInput(format!("cannot parse numbers in {spec:?}")))?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step == 0.0 || (end - start) * step < 0.0 {
        return Err(CdError::InvalidInput("sweep step must move start toward end".into()));
    }
    let count = ((end - start) / step).floor() as usize + 1;
    Ok((var.to_string(), (0..count).map(|i| start + i as f64 * step).collect()))
}

#[derive(Serialize)]
struct ConstantReport {
    name: String,
    inputs: Map<String, Value>,
    value: Option<f64>,
    validity: bool,
}

fn eval_constant(
    name: &str,
    n: Option<f64>,
    beta: Option<f64>,
    p: Option<f64>,
    rho: Option<f64>,
) -> cdflow::Result<f64> {
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| CdError::InvalidInput(format!("--{flag} is required for this constant")))
    };
    match name {
        "c_phi" => constants::c_phi(need(n, "n")?, need(beta, "beta")?),
        "p_star_weighted" => constants::p_star_weighted(need(n, "n")?, need(beta, "beta")?),
        "p_star_negative_dim" => constants::p_star_negative_dim(need(n, "n")?),
        "p_star" => match beta {
            Some(b) => constants::p_star_weighted(need(n, "n")?, b),
            None => constants::p_star_negative_dim(need(n, "n")?),
        },
        "q_star" => constants::q_star(need(n, "n")?),
        "alpha" => Ok(constants::alpha_theta(need(p, "p")?, need(n, "n")?)?.0),
        "theta" => Ok(constants::alpha_theta(need(p, "p")?, need(n, "n")?)?.1),
        "poincare" => constants::poincare_constant(need(rho, "rho")?, need(n, "n")?),
        "c_beta" => constants::c_beta_quadratic(need(beta, "beta")?),
        other => Err(CdError::InvalidInput(format!(
            "unknown constant {other:?}; see --help for the list"
        ))),
    }
}

fn run(cli: Cli) -> cdflow::Result<()> {
    match cli.command {
        Command::Certify { common, rho, n, scan } => {
            let op = build_operator(&common)?;
            let cert = if scan { cd::certify_scan(&op, rho, n)? } else { cd::certify(&op, rho, n)? };
            let mut params = Map::new();
            params.insert("rho".into(), json!(rho));
            params.insert("n".into(), json!(n));
            params.insert("scan".into(), json!(scan));
            emit(run_config("certify", &common, &op, params), cert, &common.json)
        }
        Command::Frontier { common, rho_max, n_min, n_max, scan } => {
            let op = build_operator(&common)?;
            let search = SearchBox { rho_max, n_min, n_max };
            let res = if scan { cd::frontier_scan(&op, search)? } else { cd::frontier(&op, search)? };
            let mut params = Map::new();
            params.insert("rho_max".into(), json!(rho_max));
            params.insert("n_range".into(), json!([n_min, n_max]));
            params.insert("scan".into(), json!(scan));
            emit(run_config("frontier", &common, &op, params), res, &common.json)
        }
        Command::Constants { name, n, beta, p, rho, sweep, json: json_path, csv } => {
            let mut inputs = Map::new();
            if let Some(v) = n {
                inputs.insert("n".into(), json!(v));
            }
            if let Some(v) = beta {
                inputs.insert("beta".into(), json!(v));
            }
            if let Some(v) = p {
                inputs.insert("p".into(), json!(v));
            }
            if let Some(v) = rho {
                inputs.insert("rho".into(), json!(v));
            }
            let config = RunConfig {
                command: "constants".into(),
                family: String::new(),
                beta: beta.unwrap_or(f64::NAN),
                grid_r: 0.0,
                grid_n: 0,
                tail_tol: 0.0,
                seed: 0,
                parameters: inputs.clone(),
            };
            match sweep {
                None => {
                    let value = eval_constant(&name, n, beta, p, rho)?;
                    let rep = ConstantReport { name, inputs, value: Some(value), validity: true };
                    emit(config, rep, &json_path)
                }
                Some(spec) => {
                    let (var, grid) = parse_sweep(&spec)?;
                    let mut rows = Vec::with_capacity(grid.len());
                    for v in grid {
                        let (nn, bb, pp) = match var.as_str() {
                            "n" => (Some(v), beta, p),
                            "beta" => (n, Some(v), p),
                            "p" => (n, beta, Some(v)),
                            other => {
                                return Err(CdError::InvalidInput(format!(
                                    "sweep variable {other:?} not one of n, beta, p"
                                )))
                            }
                        };
                        match eval_constant(&name, nn, bb, pp, rho) {
                            Ok(val) => rows.push(vec![v, val, 1.0]),
                            Err(CdError::InvalidInput(m)) => return Err(CdError::InvalidInput(m)),
                            Err(_) => rows.push(vec![v, f64::NAN, 0.0]),
                        }
                    }
                    let header = [var.as_str(), "value", "valid"];
                    match csv {
                        Some(path) => report::write_csv(&path, &header, &rows)?,
                        None => report::csv_to_writer(&mut std::io::stdout(), &header, &rows)?,
                    }
                    Ok(())
                }
            }
        }
        Command::Flow { common, entropy, init, t_end, dt, k, theta, record_every, scheme_weight } => {
            let op = build_operator(&common)?;
            let ent = parse_entropy(&entropy)?;
            let initial = initial_data(&op, &init, ent, common.seed)?;
            let mut cfg = FlowConfig::new(op, ent, initial);
            cfg.t_end = t_end;
            cfg.dt = dt;
            cfg.record_every = record_every;
            cfg.scheme_weight = scheme_weight;
            let trace = flow::run_flow(&cfg, k, theta)?;
            let decay_ok = flow::decay_certificate(&trace, k);
            let refined_ok = flow::refined_decay_certificate(&trace, k, theta)?;
            let summary = FlowSummary {
                decay_ok,
                refined_ok,
                min_residual_linear: trace.min_residual_linear(),
                min_residual_refined: trace.min_residual_refined(),
                mass_drift: trace.mass_drift(),
                lambda_initial: trace.lambda[0],
                lambda_final: *trace.lambda.last().expect("nonempty trace"),
                diagnostic: trace.diagnostic,
            };
            if let Some(path) = &common.csv {
                let rows: Vec<Vec<f64>> = (0..trace.times.len())
                    .map(|i| {
                        vec![
                            trace.times[i],
                            trace.lambda[i],
                            trace.lambda1[i],
                            trace.lambda2[i],
                            trace.residual_linear[i],
                            trace.residual_refined[i],
                            trace.mass[i],
                        ]
                    })
                    .collect();
                report::write_csv(
                    path,
                    &["t", "lambda", "lambda1", "lambda2", "residual_linear", "residual_refined", "mass"],
                    &rows,
                )?;
            }
            let mut params = Map::new();
            params.insert("entropy".into(), json!(entropy));
            params.insert("init".into(), json!(init));
            params.insert("t_end".into(), json!(t_end));
            params.insert("dt".into(), json!(dt));
            params.insert("k".into(), json!(k));
            params.insert("theta".into(), json!(theta));
            params.insert("record_every".into(), json!(record_every));
            params.insert("scheme_weight".into(), json!(scheme_weight));
            emit(run_config("flow", &common, &cfg.op, params), summary, &common.json)
        }
        Command::Gap { common } => {
            let op = build_operator(&common)?;
            let rep = lab::gap_report(&op)?;
            if let Some(path) = &common.csv {
                let rows: Vec<Vec<f64>> = op
                    .measure
                    .nodes
                    .iter()
                    .zip(&rep.eigenvector)
                    .map(|(&x, &v)| vec![x, v])
                    .collect();
                report::write_csv(path, &["x", "eigenvector"], &rows)?;
            }
            emit(run_config("gap", &common, &op, Map::new()), rep, &common.json)
        }
        Command::Beckner { common, p, trials, c, unweighted, source } => {
            let op = build_operator(&common)?;
            let source = match source.as_str() {
                "weighted" => BecknerSource::Weighted,
                "cd" => BecknerSource::Cd,
                other => {
                    return Err(CdError::InvalidInput(format!(
                        "unknown source {other:?}; use weighted or cd"
                    )))
                }
            };
            let c_val = match c {
                Some(c) => c,
                None => 1.0 / (op.measure.weight.c * (common.beta - 1.0)),
            };
            let rep = lab::randomized_falsifier(&op, p, c_val, trials, common.seed, !unweighted, source)?;
            if let Some(path) = &common.csv {
                let rows: Vec<Vec<f64>> =
                    rep.quotients.iter().enumerate().map(|(i, &q)| vec![i as f64, q]).collect();
                report::write_csv(path, &["trial", "quotient"], &rows)?;
            }
            let mut params = Map::new();
            params.insert("p".into(), json!(p));
            params.insert("trials".into(), json!(trials));
            params.insert("c".into(), json!(c_val));
            params.insert("weighted".into(), json!(!unweighted));
            emit(run_config("beckner", &common, &op, params), rep, &common.json)
        }
    }
}
