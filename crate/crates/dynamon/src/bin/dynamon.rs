//! Batch front end: every engine as a subcommand, with reproducible seeds,
//! budgets, and machine-readable reports.
//!
//! Exit codes: 0 PASS, 1 FAIL (a mathematical check failed), 2 budget
//! exhausted, 3 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use dynamon::moves::CyclotomicProjPoint;
use dynamon::padic::{PAdicInt, PAdicMap};
use dynamon::report::{exit_code_for, to_value, Report, RunConfig};
use dynamon::{Error, Result};

#[derive(Parser)]
#[command(name = "dynamon", version, about = "Exact and numerical dynamics toolkit")]
struct Cli {
    /// key=value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report destination (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json or csv (csv applies to survey tables).
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    degree_budget: Option<u64>,
    #[arg(long, global = true)]
    enum_budget: Option<u64>,
    #[arg(long, global = true)]
    order_budget: Option<u64>,
    #[arg(long, global = true)]
    field_budget: Option<u64>,
    /// Parallelism hint; output is identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Squarefreeness of the critical-orbit polynomials P_b, with mod-p
    /// derivative checks for every p | d.
    Gleason {
        #[arg(long)]
        d: u64,
        /// Single period to check.
        #[arg(long, conflicts_with = "b_max")]
        b: Option<u64>,
        /// Check every period 1..=b_max.
        #[arg(long)]
        b_max: Option<u64>,
    },
    /// Move certificates connecting (pre)periodic points of the coordinate
    /// power map on projective space.
    Moves {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        n: usize,
        /// Preperiod (0 = periodic).
        #[arg(long, default_value_t = 0)]
        a: u64,
        #[arg(long)]
        b: u64,
        /// Two point literals "[x0,...,xn]" to connect.
        #[arg(long, num_args = 2, conflicts_with = "survey")]
        pair: Option<Vec<String>>,
        /// Random-pair transitivity survey of this size.
        #[arg(long)]
        survey: Option<usize>,
        /// Route every class point when the class has at most this many.
        #[arg(long, default_value_t = 5000)]
        exhaustive_cap: usize,
    },
    /// Monodromy group of f_c^b(z) - z over random parameter loops, checked
    /// against the exact order formula.
    Monodromy {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        b: u64,
        #[arg(long, default_value_t = 40)]
        loops: usize,
        /// Instead check the local preimage cycle of the perturbed family
        /// z(z-eps)^(d-1) + c at its critical parameter.
        #[arg(long)]
        prep1: bool,
        /// Perturbation size for --prep1.
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
    },
    /// Lift a residue point to a p-adic periodic point by both contraction
    /// and Newton iteration and require agreement.
    Padic {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: u64,
        /// Parameter c as a residue.
        #[arg(long)]
        c: u64,
        /// Starting point as a residue.
        #[arg(long)]
        x: u64,
        /// p-adic working precision (digits).
        #[arg(long, default_value_t = dynamon::padic::DEFAULT_PRECISION)]
        prec: u32,
    },
    /// Finite-field orbit surveys.
    #[command(subcommand)]
    Ffdyn(FfdynCmd),
}

#[derive(Subcommand)]
enum FfdynCmd {
    /// Period growth of z^d + c(t) at x(t) along a curve, over F_{p^k} for
    /// k = 1..=k_max.
    Survey {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: u64,
        /// diag, crit, or xaxis.
        #[arg(long, default_value = "diag")]
        curve: String,
        #[arg(long)]
        k_max: u32,
    },
    /// Multiplicative-order census of the power map z^d on roots of unity
    /// of order up to m_max (orders divisible by p excluded).
    Census {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m_max: u64,
    },
    /// Frobenius orbit structure of the fibers of the fixed-point curve
    /// c = x - x^d over F_{p^k}.
    Fibers {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        k: u32,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load(&std::fs::read_to_string(path)?)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(f) = &cli.format {
        cfg.format = f.parse()?;
    }
    if let Some(v) = cli.degree_budget {
        cfg.degree_budget = v;
    }
    if let Some(v) = cli.enum_budget {
        cfg.enum_budget = v;
    }
    if let Some(v) = cli.order_budget {
        cfg.order_budget = v;
    }
    if let Some(v) = cli.field_budget {
        cfg.field_budget = v;
    }
    if let Some(v) = cli.jobs {
        cfg.jobs = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Command outcome: verdict, JSON payload, optional CSV rendering.
struct Outcome {
    pass: bool,
    data: serde_json::Value,
    csv: Option<String>,
}

fn run(cmd: &Cmd, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Cmd::Gleason { d, b, b_max } => cmd_gleason(*d, *b, *b_max, cfg),
        Cmd::Moves { d, n, a, b, pair, survey, exhaustive_cap } => {
            cmd_moves(*d, *n, *a, *b, pair.as_deref(), *survey, *exhaustive_cap, cfg)
        }
        Cmd::Monodromy { d, b, loops, prep1, eps } => {
            if *prep1 {
                let r = dynamon::monodromy::prep1_cycle_check(
                    *d,
                    *b,
                    Complex64::new(*eps, 0.0),
                    cfg.seed,
                )?;
                Ok(Outcome { pass: r.pass, data: to_value(&r), csv: None })
            } else {
                let r = dynamon::monodromy::verify_morton(*d, *b, *loops, cfg.seed)?;
                Ok(Outcome { pass: r.pass, data: to_value(&r), csv: None })
            }
        }
        Cmd::Padic { p, d, c, x, prec } => {
            let map = PAdicMap::single(*p, *d, PAdicInt::from_u64(*p, *prec, *c));
            let x = PAdicInt::from_u64(*p, *prec, *x);
            let r = dynamon::padic::lift_agreement(&map, 0, &x, *prec)?;
            Ok(Outcome { pass: r.agree, data: to_value(&r), csv: None })
        }
        Cmd::Ffdyn(sub) => cmd_ffdyn(sub, cfg),
    }
}

fn cmd_gleason(d: u64, b: Option<u64>, b_max: Option<u64>, cfg: &RunConfig) -> Result<Outcome> {
    let bs: Vec<u64> = match (b, b_max) {
        (Some(b), _) => vec![b],
        (None, Some(m)) => (1..=m).collect(),
        (None, None) => return Err(Error::Usage("gleason needs --b or --b-max".into())),
    };
    let mut rows = Vec::new();
    let mut all_pass = true;
    for b in bs {
        let poly = dynamon::dynatomic::gleason_with_budget(d, b, cfg.degree_budget)?;
        let sf = dynamon::dynatomic::is_squarefree(&poly)?;
        let mut mod_p = Vec::new();
        let mut p = 2;
        let mut rem = d;
        while rem > 1 {
            if rem % p == 0 {
                let rep = dynamon::dynatomic::gleason_mod_p(d, b, p)?;
                mod_p.push(json!({"p": p, "derivative_is_one": rep.derivative_is_one}));
                all_pass &= rep.derivative_is_one;
                while rem % p == 0 {
                    rem /= p;
                }
            }
            p += 1;
        }
        all_pass &= sf.squarefree;
        rows.push(json!({
            "b": b,
            "degree": poly.degree(),
            "squarefree": sf.squarefree,
            "certificate_prime": sf.certificate_prime,
            "mod_p": mod_p,
        }));
    }
    Ok(Outcome { pass: all_pass, data: json!({"d": d, "rows": rows}), csv: None })
}

#[allow(clippy::too_many_arguments)]
fn cmd_moves(
    d: u64,
    n: usize,
    a: u64,
    b: u64,
    pair: Option<&[String]>,
    survey: Option<usize>,
    exhaustive_cap: usize,
    cfg: &RunConfig,
) -> Result<Outcome> {
    match (pair, survey) {
        (Some(points), _) => {
            let p = CyclotomicProjPoint::parse(&points[0])?;
            let q = CyclotomicProjPoint::parse(&points[1])?;
            let cert = if a == 0 {
                dynamon::moves::connect_periodic(&p, &q, d, b)?
            } else {
                dynamon::moves::connect_preperiodic(&p, &q, d, a, b)?
            };
            let verdict = dynamon::moves::validate(&cert);
            Ok(Outcome {
                pass: verdict.ok,
                data: json!({
                    "certificate": to_value(&cert),
                    "steps": cert.steps.len(),
                    "valid": verdict.ok,
                    "first_illegal": verdict.first_illegal,
                }),
                csv: None,
            })
        }
        (None, Some(sample)) => {
            let r = dynamon::moves::transitivity_survey(d, n, a, b, sample, cfg.seed, exhaustive_cap)?;
            Ok(Outcome { pass: r.success_rate == 1.0, data: to_value(&r), csv: None })
        }
        (None, None) => Err(Error::Usage("moves needs --pair or --survey".into())),
    }
}

fn cmd_ffdyn(sub: &FfdynCmd, cfg: &RunConfig) -> Result<Outcome> {
    match sub {
        FfdynCmd::Survey { p, d, curve, k_max } => {
            let curve = match curve.as_str() {
                "diag" => dynamon::ffdyn::Curve::Diagonal,
                "crit" => dynamon::ffdyn::Curve::Critical,
                "xaxis" => dynamon::ffdyn::Curve::XAxis,
                other => {
                    return Err(Error::Usage(format!(
                        "unknown curve {other:?} (want diag, crit, or xaxis)"
                    )))
                }
            };
            let r = dynamon::ffdyn::curve_period_survey(*p, *d, &curve, *k_max)?;
            let csv = r.to_csv();
            Ok(Outcome { pass: r.pass, data: to_value(&r), csv: Some(csv) })
        }
        FfdynCmd::Census { d, p, m_max } => {
            let r = dynamon::ffdyn::power_census(*d, *p, *m_max);
            Ok(Outcome { pass: r.strictly_increasing, data: to_value(&r), csv: None })
        }
        FfdynCmd::Fibers { p, d, k } => {
            if (*p as u128).pow(*k) > cfg.field_budget as u128 {
                return Err(Error::FieldBudget {
                    size: (*p as u128).pow(*k),
                    budget: cfg.field_budget,
                });
            }
            let r = dynamon::ffdyn::fixed_curve_fibers(*p, *d, *k)?;
            Ok(Outcome { pass: true, data: to_value(&r), csv: None })
        }
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Gleason { .. } => "gleason",
        Cmd::Moves { .. } => "moves",
        Cmd::Monodromy { .. } => "monodromy",
        Cmd::Padic { .. } => "padic",
        Cmd::Ffdyn(FfdynCmd::Survey { .. }) => "ffdyn survey",
        Cmd::Ffdyn(FfdynCmd::Census { .. }) => "ffdyn census",
        Cmd::Ffdyn(FfdynCmd::Fibers { .. }) => "ffdyn fibers",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match run(&cli.cmd, &cfg) {
        Ok(outcome) => {
            let report = Report::new(command_name(&cli.cmd), cfg.seed, outcome.pass, outcome.data);
            if let Err(e) = report.emit(&cfg, outcome.csv.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
