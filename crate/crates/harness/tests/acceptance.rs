//! Acceptance run on the demo configuration. Prints one line per criterion
//! and exits nonzero if any criterion fails.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the golden report of the smoke config.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mehler_harness::report::to_json;
use mehler_harness::{run_suites, Config, Context, EstimateReport, Suite, SuiteRun};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> Config {
    Config::load(&root().join("configs").join(name)).expect("config loads")
}

struct Criterion {
    pass: bool,
    label: &'static str,
    detail: String,
}

fn suite(runs: &[SuiteRun], s: Suite) -> &SuiteRun {
    runs.iter().find(|r| r.suite == s).expect("every suite ran")
}

fn with_ids<'a>(run: &'a SuiteRun, ids: &[&str]) -> Vec<&'a EstimateReport> {
    run.reports.iter().filter(|r| ids.contains(&r.inequality_id.as_str())).collect()
}

fn failed(reports: &[&EstimateReport]) -> usize {
    reports.iter().filter(|r| !r.pass).count()
}

fn distinct(reports: &[EstimateReport], key: &str) -> usize {
    reports.iter().filter_map(|r| r.params.get(key)).map(|v| v.to_bits()).collect::<BTreeSet<_>>().len()
}

fn smoke_json() -> String {
    let ctx = Context::new(config("smoke.toml")).expect("smoke context");
    let runs = run_suites(&ctx, &Suite::ALL).expect("smoke run");
    let all: Vec<EstimateReport> = runs.into_iter().flat_map(|r| r.reports).collect();
    to_json(&all).expect("serializes")
}

fn main() -> ExitCode {
    let start = Instant::now();
    let ctx = Context::new(config("demo.toml")).expect("demo context");
    let runs = run_suites(&ctx, &Suite::ALL).expect("demo run");
    let demo_secs = start.elapsed().as_secs_f64();
    let mut out = Vec::new();

    let f = suite(&runs, Suite::Formulas);
    out.push(Criterion {
        pass: f.failures() == 0 && f.seconds <= 60.0 && !f.reports.is_empty(),
        label: "derivative formulas agree with finite differences",
        detail: format!("{} records, {} failed, {:.1}s", f.reports.len(), f.failures(), f.seconds),
    });

    let c = suite(&runs, Suite::ClosedForms);
    let worst = c.reports.iter().map(|r| r.lhs).fold(0.0, f64::max);
    out.push(Criterion {
        pass: c.failures() == 0 && c.seconds <= 10.0 && !c.reports.is_empty(),
        label: "closed forms to 1e-8",
        detail: format!("{} records, worst {worst:.2e}, {:.1}s", c.reports.len(), c.seconds),
    });

    let s = suite(&runs, Suite::Smoothing);
    let fields = s.reports.iter().map(|r| r.field.as_str()).collect::<BTreeSet<_>>().len();
    let (alphas, times) = (distinct(&s.reports, "alpha"), distinct(&s.reports, "t"));
    let points = ctx.design.points().len();
    out.push(Criterion {
        pass: s.failures() == 0 && alphas >= 3 && times >= 10 && points >= 64 && fields >= 5,
        label: "smoothing estimates",
        detail: format!(
            "{} records, {} failed, {alphas} alphas x {times} times x {points} points x {fields} fields",
            s.reports.len(),
            s.failures()
        ),
    });

    let sc = suite(&runs, Suite::Schauder);
    let splits = with_ids(sc, &["schauder.split.head", "schauder.split.tail"]);
    out.push(Criterion {
        pass: sc.failures() == 0 && !splits.is_empty() && sc.seconds <= 180.0,
        label: "elliptic Schauder estimates with split diagnostic",
        detail: format!("{} records ({} split), {} failed, {:.1}s", sc.reports.len(), splits.len(), sc.failures(), sc.seconds),
    });

    let z = suite(&runs, Suite::Zygmund);
    let theorem = with_ids(z, &["zygmund.gradient"]);
    let lambdas = distinct(&z.reports, "lambda");
    let pieces = with_ids(z, &["zygmund.split.head", "zygmund.split.tail", "zygmund.split.head.integrated"]);
    out.push(Criterion {
        pass: failed(&theorem) == 0 && !theorem.is_empty() && lambdas >= 3,
        label: "Zygmund bound (2c0 + 2c1)|f|",
        detail: format!(
            "{} records, {} failed; split pieces {} failed of {}",
            theorem.len(),
            failed(&theorem),
            failed(&pieces),
            pieces.len()
        ),
    });

    let d = suite(&runs, Suite::Degeneracy);
    let kernel = with_ids(d, &["degeneracy.kernel_quotient_ratio"]);
    let range = with_ids(d, &["degeneracy.range_gradient"]);
    let ratio = kernel.iter().filter_map(|r| r.rhs).fold(f64::INFINITY, f64::min);
    out.push(Criterion {
        pass: d.failures() == 0 && !kernel.is_empty() && !range.is_empty(),
        label: "kernel-direction cusp and range gradient",
        detail: format!("smallest quotient ratio {ratio:.1}, {} range records", range.len()),
    });

    let i = suite(&runs, Suite::Identities);
    let law = with_ids(i, &["identity.semigroup_law"]);
    let res = with_ids(i, &["identity.resolvent"]);
    out.push(Criterion {
        pass: failed(&law) == 0 && failed(&res) == 0 && !law.is_empty() && !res.is_empty(),
        label: "semigroup law and resolvent identity",
        detail: format!("law {} failed of {}, resolvent {} failed of {}", failed(&law), law.len(), failed(&res), res.len()),
    });

    let ip = suite(&runs, Suite::Interpolation);
    let mult = with_ids(ip, &["interpolation.multiplicative"]);
    let kf = with_ids(ip, &["interpolation.k_functional"]);
    let worst = mult.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    out.push(Criterion {
        pass: failed(&mult) == 0 && failed(&kf) == 0 && !mult.is_empty() && !kf.is_empty(),
        label: "interpolation: multiplicative bound with c0*sqrt(pi), K-functional embedding",
        detail: format!(
            "multiplicative {} failed of {} (worst ratio {worst:.4}), K-functional {} failed of {}",
            failed(&mult),
            mult.len(),
            failed(&kf),
            kf.len()
        ),
    });

    let a = smoke_json();
    let b = smoke_json();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/smoke.json");
    let golden_ok = if std::env::var_os("UPDATE_GOLDEN").is_some() || !golden.exists() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &a).unwrap();
        true
    } else {
        std::fs::read_to_string(&golden).unwrap() == a
    };
    out.push(Criterion {
        pass: a == b && golden_ok && demo_secs < 600.0,
        label: "byte-identical reports and demo runtime",
        detail: format!("repeat identical: {}, golden match: {golden_ok}, demo run {demo_secs:.1}s", a == b),
    });

    for (n, c) in out.iter().enumerate() {
        println!("criterion {}: {} {} ({})", n + 1, if c.pass { "PASS" } else { "FAIL" }, c.label, c.detail);
    }
    if out.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
