use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mehler_core::constants::{c0, c1, kp, HolderConstants};
use mehler_core::{Order, TimeField};
use mehler_harness::config::Format;
use mehler_harness::{report, run_suites, Config, Context, HarnessError, Result, Suite};
use nalgebra::DVector;
use serde_json::json;

#[derive(Parser)]
#[command(name = "mehler", version, about = "Check Mehler-semigroup estimates on a corpus of test fields")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "configs/demo.toml")]
    config: PathBuf,
    /// Report directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `suite.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every suite.
    Verify,
    /// Run one suite.
    Suite {
        #[arg(value_enum)]
        name: Suite,
    },
    /// Evaluate a resolvent, semigroup or mild solution at one point and print JSON.
    Solve(SolveArgs),
    /// Print the constants used by the estimates.
    Constants {
        /// Hölder exponents for the `C_{k,α}` table (default: `suite.alphas`).
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Corpus entry name.
    #[arg(long)]
    field: String,
    /// Resolvent parameter; selects `R(λ, L)f`.
    #[arg(long, conflicts_with = "t")]
    lambda: Option<f64>,
    /// Time; selects `T(t)f`, or the mild solution with `--source`.
    #[arg(long)]
    t: Option<f64>,
    /// Mild solution with this corpus entry as a time-constant source.
    #[arg(long, requires = "t")]
    source: Option<String>,
    /// Comma-separated point in ambient coordinates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// value, gradient, hessian or third.
    #[arg(long, default_value = "value")]
    order: String,
}

fn parse_order(s: &str) -> Result<Order> {
    match s {
        "value" => Ok(Order::Value),
        "gradient" => Ok(Order::Gradient),
        "hessian" => Ok(Order::Hessian),
        "third" => Ok(Order::Third),
        _ => Err(HarnessError::Config(format!("unknown order `{s}`"))),
    }
}

fn load(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.suite.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

fn verify(cfg: Config, suites: &[Suite]) -> Result<bool> {
    let start = Instant::now();
    let ctx = Context::new(cfg)?;
    let runs = run_suites(&ctx, suites)?;
    let mut all = Vec::new();
    let mut ok = true;
    for run in &runs {
        let failures = run.failures();
        ok &= failures == 0;
        println!("{:<14} {:>6} records {:>5} failed", run.suite.name(), run.reports.len(), failures);
        eprintln!("{:<14} {:.1}s", run.suite.name(), run.seconds);
        for r in run.reports.iter().filter(|r| !r.pass) {
            println!(
                "  FAIL {} [{}] field={} lhs={:.6e} rhs={}",
                r.inequality_id,
                r.anchor,
                r.field,
                r.lhs,
                r.rhs.map_or("-".into(), |v| format!("{v:.6e}"))
            );
        }
        all.extend(run.reports.iter().cloned());
    }
    let out = &ctx.config.output;
    for path in report::emit(&all, &out.dir, out.format, out.curves)? {
        println!("wrote {}", path.display());
    }
    eprintln!("total {:.1}s", start.elapsed().as_secs_f64());
    Ok(ok)
}

fn solve(cfg: Config, args: &SolveArgs) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let entry = ctx.entry(&args.field).ok_or_else(|| HarnessError::Config(format!("no corpus entry `{}`", args.field)))?;
    let x = DVector::from_vec(args.x.clone());
    if x.len() != ctx.model.dim() {
        return Err(HarnessError::Config(format!("--x needs {} coordinates", ctx.model.dim())));
    }
    let order = parse_order(&args.order)?;
    let out = match (args.lambda, args.t, &args.source) {
        (Some(l), None, _) => {
            let r = ctx.solver.resolvent(&entry.field, l, &x, order)?;
            json!({ "map": "resolvent", "lambda": l, "value": r.value, "grad": r.grad.map(|g| g.as_slice().to_vec()),
                    "hess": r.hess.map(|h| h.as_slice().to_vec()), "err": r.err })
        }
        (None, Some(t), Some(src)) => {
            let g = ctx.entry(src).ok_or_else(|| HarnessError::Config(format!("no corpus entry `{src}`")))?;
            let g = TimeField::separable(mehler_core::Modulation::Constant(1.0), g.field.clone())?;
            let r = ctx.solver.mild(&entry.field, &g, t, &x, order)?;
            json!({ "map": "mild", "t": t, "source": src, "value": r.value, "grad": r.grad.map(|g| g.as_slice().to_vec()),
                    "hess": r.hess.map(|h| h.as_slice().to_vec()), "err": r.err })
        }
        (None, Some(t), None) => {
            if order == Order::Value {
                let (v, err) = ctx.mehler().apply(&entry.field, t, &x)?;
                json!({ "map": "semigroup", "t": t, "value": v, "err": [err] })
            } else {
                let r = ctx.mehler().evaluate(&entry.field, t, &x, order)?;
                json!({ "map": "semigroup", "t": t, "value": r.value, "grad": r.grad.map(|g| g.as_slice().to_vec()),
                        "hess": r.hess.as_ref().map(|h| h.as_slice().to_vec()),
                        "third_norm": r.d3.as_ref().map(|d| d.frobenius()), "err": r.err })
            }
        }
        _ => return Err(HarnessError::Config("give exactly one of --lambda or --t".into())),
    };
    println!("{}", serde_json::to_string_pretty(&json!({ "field": args.field, "x": args.x, "order": args.order, "result": out }))?);
    Ok(())
}

fn constants(cfg: Option<Config>, alphas: &[f64]) -> Result<()> {
    let alphas = if alphas.is_empty() { cfg.map(|c| c.suite.alphas).unwrap_or_else(|| vec![0.3, 0.5, 0.7]) } else { alphas.to_vec() };
    println!("c0 = {:.12}", c0());
    println!("c1 = {:.12}", c1());
    for p in [1.0, 2.0, 3.0, 4.0] {
        println!("k_{p} = {:.12}", kp(p)?);
    }
    println!("{:>6} {:>14} {:>14} {:>14} {:>16}", "alpha", "C1", "C2", "C3", "hess_holder");
    for a in alphas {
        let k = HolderConstants::derive(a)?;
        println!("{:>6} {:>14.8} {:>14.8} {:>14.8} {:>16.8}", a, k.c1, k.c2, k.c3, k.hess_holder());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Verify => verify(load(cli)?, &Suite::ALL),
        Command::Suite { name } => verify(load(cli)?, &[*name]),
        Command::Solve(args) => solve(load(cli)?, args).map(|_| true),
        Command::Constants { alpha } => constants(load(cli).ok(), alpha).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
