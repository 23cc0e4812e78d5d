//! Batch verification of the Mehler-semigroup smoothing, Schauder, Zygmund
//! and interpolation inequalities over a declared corpus of test fields.
//!
//! A run is driven by a TOML [`Config`]; each suite appends
//! [`EstimateReport`] records, which are emitted as JSON and/or CSV.

pub mod anchors;
pub mod config;
pub mod context;
pub mod corpus;
pub mod report;
pub mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use config::Config;
pub use context::Context;
pub use report::{EstimateReport, Recorder};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numeric(#[from] mehler_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, clap::ValueEnum)]
pub enum Suite {
    Formulas,
    ClosedForms,
    Smoothing,
    Schauder,
    Zygmund,
    Parabolic,
    Interpolation,
    Identities,
    Degeneracy,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Formulas,
        Suite::ClosedForms,
        Suite::Smoothing,
        Suite::Schauder,
        Suite::Zygmund,
        Suite::Parabolic,
        Suite::Interpolation,
        Suite::Identities,
        Suite::Degeneracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Formulas => "formulas",
            Suite::ClosedForms => "closed_forms",
            Suite::Smoothing => "smoothing",
            Suite::Schauder => "schauder",
            Suite::Zygmund => "zygmund",
            Suite::Parabolic => "parabolic",
            Suite::Interpolation => "interpolation",
            Suite::Identities => "identities",
            Suite::Degeneracy => "degeneracy",
        }
    }

    fn run(self, ctx: &Context, rec: &mut Recorder) -> Result<()> {
        match self {
            Suite::Formulas => suites::formulas::run(ctx, rec),
            Suite::ClosedForms => suites::closed_forms::run(ctx, rec),
            Suite::Smoothing => suites::smoothing::run(ctx, rec),
            Suite::Schauder => suites::schauder::run(ctx, rec),
            Suite::Zygmund => suites::zygmund::run(ctx, rec),
            Suite::Parabolic => suites::parabolic::run(ctx, rec),
            Suite::Interpolation => suites::interpolation::run(ctx, rec),
            Suite::Identities => suites::identities::run(ctx, rec),
            Suite::Degeneracy => suites::degeneracy::run(ctx, rec),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| HarnessError::Config(format!("unknown suite `{s}`")))
    }
}

/// Output of one suite.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub suite: Suite,
    pub reports: Vec<EstimateReport>,
    pub seconds: f64,
}

impl SuiteRun {
    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.pass).count()
    }
}

/// Runs `suites` in order. Inequality failures are recorded, not raised;
/// configuration and numerical errors abort the run.
pub fn run_suites(ctx: &Context, suites: &[Suite]) -> Result<Vec<SuiteRun>> {
    suites
        .iter()
        .map(|&suite| {
            let start = Instant::now();
            let mut rec = Recorder::new(suite.name(), ctx.config.suite.slack, ctx.config.suite.err_multiple);
            suite.run(ctx, &mut rec)?;
            Ok(SuiteRun { suite, reports: rec.finish(), seconds: start.elapsed().as_secs_f64() })
        })
        .collect()
}
