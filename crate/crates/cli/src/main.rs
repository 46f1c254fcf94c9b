//! `qkz`: command-line front end. Every command prints JSON on stdout;
//! `verify`, `limits` and `suite` exit with 1 when a check fails and every
//! command exits with 2 on an error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qkz_core::complexfn::{format_complex, log_gamma, parse_complex};
use qkz_core::homology::{barnes_check, classical_det_check, classical_solution, qdet_check, theta, theta_entry, IntervalCycle};
use qkz_core::master::{log_phi_classical, log_phi_p, singular_lattice, weight_w, LatticeKind, Sign};
use qkz_core::qkz::limits::DEFAULT_S;
use qkz_core::qkz::{flatness_check, gm_limit_check, kz_limit_fit, scalar_limit_check, verify_qkz, verify_qkz_all};
use qkz_core::reduction::{beta_matrix, ExactMatrix, RationalFunction, Reducer};
use qkz_core::report::Report;
use qkz_core::suite::{kz_configs, run_and_write, KZ_FIT_TOL, QDET_TOL, QKZ_TOL};
use qkz_core::{Complex, ExactParams, ParameterSet, RunConfig};

#[derive(Parser)]
#[command(name = "qkz", version, about = "Hypergeometric solutions of the rational qKZ equations: evaluation and identity checks")]
struct Cli {
    /// Key-value configuration file (`n`, `z`, `a_imag`, `p_imag`, `kappa`, quadrature keys, `suite`, `output`, `seed`).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// `log Gamma(w)` and `Gamma(w)`.
    Gamma { w: String },
    /// The master function `Phi_p`.
    PhiP {
        #[command(subcommand)]
        action: EvalAction,
    },
    /// The classical master function on the real line.
    Phi {
        #[command(subcommand)]
        action: EvalAction,
    },
    /// Weight functions `w_j`.
    Weights {
        #[command(subcommand)]
        action: WeightAction,
    },
    /// Pole lattices of `Phi_p` and of the function space.
    Lattice {
        #[command(subcommand)]
        action: LatticeAction,
    },
    /// Single pairings.
    Integrate {
        #[command(subcommand)]
        action: IntegrateAction,
    },
    /// Reduces a rational function (JSON file) to the `w_j` basis.
    Reduce {
        /// Rational-function JSON: `{"poly": [...], "poles": [{"loc": ..., "coeffs": [...]}]}`.
        input: PathBuf,
    },
    /// Exact connection matrix `beta_ell`.
    Beta {
        #[arg(long)]
        ell: usize,
    },
    /// The solution matrix `Theta`.
    Theta,
    /// Identity checks.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Continuum-limit sweeps.
    Limits {
        #[command(subcommand)]
        check: LimitsCommand,
    },
    /// Runs the configured suite and writes the report bundle.
    Suite {
        /// Output directory (overrides the `output` key).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Comma-separated checks (overrides the `suite` key).
        #[arg(long)]
        checks: Option<String>,
    },
}

#[derive(Subcommand)]
enum EvalAction {
    /// Evaluates at `t` (complex literal for `phi-p`, real for `phi`).
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
    },
}

#[derive(Subcommand)]
enum WeightAction {
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        t: String,
        /// Index `j`; all `1..=n` when omitted.
        #[arg(long)]
        j: Option<usize>,
    },
}

#[derive(Subcommand)]
enum LatticeAction {
    List {
        /// The dual lattice carrying the poles of the function space.
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value_t = 2)]
        depth: u32,
    },
}

#[derive(Subcommand)]
enum IntegrateAction {
    /// `<[G_m], w_j>`.
    ThetaEntry {
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long)]
        j: usize,
    },
    /// Classical interval integral `int_{z_m}^{z_{m+1}} Phi dt/(t - z_ell)`.
    Classical {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        ell: usize,
    },
}

#[derive(Args)]
struct BarnesArgs {
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    a: String,
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    b: String,
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    c: String,
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    d: String,
}

#[derive(Subcommand)]
enum VerifyCommand {
    Qdet {
        #[arg(long, default_value_t = QDET_TOL)]
        tol: f64,
    },
    /// Classical determinant at the configured `z`, `a` with exponents `a/kappa`.
    ClassicalDet {
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    Barnes {
        #[command(flatten)]
        args: BarnesArgs,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    Qkz {
        /// Direction; all directions when omitted.
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, default_value_t = QKZ_TOL)]
        tol: f64,
    },
    Flatness,
}

#[derive(Subcommand)]
enum LimitsCommand {
    /// Fit of `S (beta_ell(SZ) - 1)` over three base configurations.
    Kz {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_S.map(|s| s as u32))]
        s: Vec<u32>,
    },
    /// Ratio of real-line pairings against the interval integrals.
    Gm {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long)]
        ell2: Option<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_S)]
        s: Vec<f64>,
    },
    /// Scalar equation `y(t + p) = (t + a)/(t - a) y(t)`.
    Scalar {
        #[arg(long, default_value = "1.3i", allow_hyphen_values = true)]
        a: String,
        #[arg(long, default_value = "i", allow_hyphen_values = true)]
        p: String,
        #[arg(long, default_value_t = 1.3)]
        big_t: f64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_S)]
        s: Vec<f64>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    Ok(cfg)
}

fn exact_params(cfg: &RunConfig) -> Result<ExactParams> {
    cfg.exact_params()?.ok_or_else(|| anyhow!("this command needs `z`, `a_imag` and `p_imag` in the config"))
}

fn float_params(cfg: &RunConfig) -> Result<ParameterSet> {
    Ok(exact_params(cfg)?.to_parameter_set()?)
}

fn complex_json(c: Complex) -> Value {
    json!(format_complex(c))
}

fn matrix_json(m: &ExactMatrix) -> Value {
    json!((0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)].to_string()).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Prints pretty JSON; a closed pipe is not an error.
fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn report_status(reports: &[Report]) -> Result<bool> {
    if reports.len() == 1 {
        print_json(&reports[0])?;
    } else {
        print_json(&reports)?;
    }
    Ok(reports.iter().all(|r| r.pass))
}

/// Returns whether the command's checks passed.
fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.config)?;
    let spec = &cfg.quadrature;
    match cli.command {
        Command::Gamma { w } => {
            let w = parse_complex(&w)?;
            let lg = log_gamma(w)?;
            print_json(&json!({ "w": complex_json(w), "log_gamma": complex_json(lg), "gamma": complex_json(lg.exp()) }))?;
        }
        Command::PhiP { action: EvalAction::Eval { t } } => {
            let params = float_params(&cfg)?;
            let t = parse_complex(&t)?;
            let lp = log_phi_p(t, &params)?;
            print_json(&json!({ "t": complex_json(t), "log_phi_p": complex_json(lp), "phi_p": complex_json(lp.exp()) }))?;
        }
        Command::Phi { action: EvalAction::Eval { t } } => {
            let params = float_params(&cfg)?;
            let t: f64 = t.trim().parse().context("`phi eval` takes a real t")?;
            let lp = log_phi_classical(t, &params)?;
            print_json(&json!({ "t": t, "log_phi": complex_json(lp), "phi": complex_json(lp.exp()) }))?;
        }
        Command::Weights { action: WeightAction::Eval { t, j } } => {
            let params = float_params(&cfg)?;
            let t = parse_complex(&t)?;
            let js: Vec<usize> = match j {
                Some(j) => vec![j],
                None => (1..=params.n()).collect(),
            };
            let values = js
                .iter()
                .map(|&j| Ok(json!({ "j": j, "value": complex_json(weight_w(j, t, &params)?) })))
                .collect::<Result<Vec<_>>>()?;
            print_json(&json!({ "t": complex_json(t), "weights": values }))?;
        }
        Command::Lattice { action: LatticeAction::List { dual, depth } } => {
            let params = float_params(&cfg)?;
            let kind = if dual { LatticeKind::SingDual } else { LatticeKind::Sing };
            let lattice = singular_lattice(&params, kind, depth);
            let points: Vec<Value> = lattice
                .points
                .iter()
                .map(|p| json!({ "point": complex_json(p.point), "ell": p.ell, "sign": if p.sign == Sign::Plus { "+" } else { "-" }, "depth": p.depth }))
                .collect();
            let generic = params.check_genericity(depth as usize).is_ok();
            print_json(&json!({ "kind": if dual { "dual" } else { "sing" }, "depth": depth, "generic": generic, "points": points }))?;
        }
        Command::Integrate { action } => {
            let params = float_params(&cfg)?;
            let r = match action {
                IntegrateAction::ThetaEntry { m, j } => theta_entry(&params, m, j, spec)?,
                IntegrateAction::Classical { m, ell } => {
                    let cp = ParameterSet::new(params.z().to_vec(), params.a().to_vec(), params.p(), params.kappa())?;
                    let all = classical_solution(&cp, IntervalCycle { m }, spec)?;
                    *all.get(ell.wrapping_sub(1)).ok_or_else(|| anyhow!("ell must lie in 1..={}", params.n()))?
                }
            };
            print_json(&json!({
                "value": complex_json(r.scaled_value()),
                "log_value": complex_json(r.log_value()),
                "error_estimate": r.error_estimate * r.log_scale.exp(),
                "panels": r.panels_used,
                "truncation_radius": r.truncation_radius,
            }))?;
        }
        Command::Reduce { input } => {
            let params = exact_params(&cfg)?;
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let f: RationalFunction = serde_json::from_str(&text).context("parsing rational-function JSON")?;
            let class = Reducer::new(&params)?.reduce(&f)?;
            print_json(&class)?;
        }
        Command::Beta { ell } => {
            let params = exact_params(&cfg)?;
            if ell == 0 || ell > params.n() {
                bail!("ell must lie in 1..={}", params.n());
            }
            let b = beta_matrix(&params, ell)?;
            print_json(&json!({ "ell": ell, "entries": matrix_json(&b.entries) }))?;
        }
        Command::Theta => {
            let params = float_params(&cfg)?;
            let th = theta(&params, spec)?;
            let k = th.dim();
            let rows: Vec<Vec<Value>> = (0..k).map(|m| (0..k).map(|j| complex_json(th.value(m, j))).collect()).collect();
            print_json(&json!({
                "entries": rows,
                "log_det": complex_json(th.log_det()),
                "condition_number": th.condition_number(),
                "warnings": th.warnings,
            }))?;
        }
        Command::Verify { check } => {
            let reports = match check {
                VerifyCommand::Qdet { tol } => vec![qdet_check(&float_params(&cfg)?, spec, tol)?],
                VerifyCommand::ClassicalDet { tol } => vec![classical_det_check(&float_params(&cfg)?, spec, tol)?],
                VerifyCommand::Barnes { args, tol } => {
                    let [a, b, c, d] = [&args.a, &args.b, &args.c, &args.d].map(|s| parse_complex(s));
                    vec![barnes_check(a?, b?, c?, d?, spec, tol)?]
                }
                VerifyCommand::Qkz { ell, tol } => {
                    let params = exact_params(&cfg)?;
                    match ell {
                        Some(l) => vec![verify_qkz(&params, l, spec, tol, None)?],
                        None => verify_qkz_all(&params, spec, tol)?,
                    }
                }
                VerifyCommand::Flatness => vec![flatness_check(&exact_params(&cfg)?)?],
            };
            return report_status(&reports);
        }
        Command::Limits { check } => {
            let report = match check {
                LimitsCommand::Kz { s } => {
                    let params = exact_params(&cfg)?;
                    let fit = kz_limit_fit(&kz_configs(params.z()), params.a(), params.p(), &s, KZ_FIT_TOL)?;
                    fit.report(&s, Some(&params.to_parameter_set()?))
                }
                LimitsCommand::Gm { m, ell, ell2, s } => {
                    let params = float_params(&cfg)?;
                    gm_limit_check(&params, m, ell, ell2.unwrap_or(params.n()), &s, spec)?
                }
                LimitsCommand::Scalar { a, p, big_t, s } => {
                    let samples = [Complex::new(0.3, 0.0), Complex::new(-2.1, 0.4), Complex::new(5.5, -0.2)];
                    scalar_limit_check(parse_complex(&a)?, parse_complex(&p)?, &samples, big_t, &s)?
                }
            };
            return report_status(&[report]);
        }
        Command::Suite { output, checks } => {
            let mut cfg = cfg;
            if let Some(dir) = output {
                cfg.output = Some(dir);
            }
            if let Some(list) = checks {
                cfg.set("suite", &list)?;
            }
            let outcome = run_and_write(&cfg)?;
            print_json(&outcome.summary())?;
            return Ok(outcome.pass());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use qkz_core::GaussianRational;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn gaussian_literals_reach_the_core() {
        let g: GaussianRational = "3/2 i".parse().unwrap();
        assert_eq!(g.to_string(), "0+3/2 i");
    }
}
