//! Report records and their JSON/CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mehler_core::seminorms::Witness;
use serde::{Deserialize, Serialize};

use crate::anchors::anchor_of;
use crate::config::Format;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `lhs ≤ rhs·(1 + slack) + err_multiple·err_est`.
    Bound,
    /// A measured discrepancy against a tolerance; slack and error multiple are zero.
    Tolerance,
    /// Reported only; passes when `lhs` is finite.
    Reported,
}

/// Ambient coordinates of the base point and increment of a witness pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub x: Vec<f64>,
    pub h: Option<Vec<f64>>,
}

impl WitnessPoint {
    pub fn point(x: &nalgebra::DVector<f64>) -> Self {
        Self { x: x.as_slice().to_vec(), h: None }
    }
}

impl From<&Witness> for WitnessPoint {
    fn from(w: &Witness) -> Self {
        Self { x: w.x.as_slice().to_vec(), h: Some(w.h.ambient.as_slice().to_vec()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub suite: String,
    pub inequality_id: String,
    pub anchor: String,
    pub field: String,
    pub params: BTreeMap<String, f64>,
    pub check: Check,
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    pub pass: bool,
    pub witness: Option<WitnessPoint>,
    pub err_est: f64,
    pub slack: f64,
    pub err_multiple: f64,
    /// Always null: wall time would make reports run-dependent.
    pub ms: Option<f64>,
}

impl EstimateReport {
    /// Recomputes the verdict from the stored fields.
    pub fn verdict(&self) -> bool {
        verdict(self.check, self.lhs, self.rhs, self.err_est, self.slack, self.err_multiple)
    }
}

pub fn verdict(check: Check, lhs: f64, rhs: Option<f64>, err: f64, slack: f64, err_multiple: f64) -> bool {
    match (check, rhs) {
        (Check::Reported, _) => lhs.is_finite(),
        (_, Some(rhs)) => lhs.is_finite() && lhs <= rhs * (1.0 + slack) + err_multiple * err,
        (_, None) => false,
    }
}

fn ratio(lhs: f64, rhs: Option<f64>) -> Option<f64> {
    let rhs = rhs?;
    if rhs > 0.0 {
        Some(lhs / rhs)
    } else if lhs == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Collects the records of one suite.
#[derive(Debug)]
pub struct Recorder {
    suite: String,
    slack: f64,
    err_multiple: f64,
    out: Vec<EstimateReport>,
}

/// Parameters attached to a record, e.g. `&[("t", 0.5), ("alpha", 0.3)]`.
pub type Params<'a> = &'a [(&'a str, f64)];

impl Recorder {
    pub fn new(suite: &str, slack: f64, err_multiple: f64) -> Self {
        Self { suite: suite.to_string(), slack, err_multiple, out: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        check: Check,
        id: &str,
        field: &str,
        params: Params,
        lhs: f64,
        rhs: Option<f64>,
        err: f64,
        witness: Option<WitnessPoint>,
    ) {
        let anchor = anchor_of(id).unwrap_or_else(|| panic!("inequality id `{id}` has no anchor"));
        let (slack, err_multiple) = match check {
            Check::Bound => (self.slack, self.err_multiple),
            _ => (0.0, 0.0),
        };
        let pass = verdict(check, lhs, rhs, err, slack, err_multiple);
        self.out.push(EstimateReport {
            suite: self.suite.clone(),
            inequality_id: id.to_string(),
            anchor: anchor.to_string(),
            field: field.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            check,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            pass,
            witness,
            err_est: err,
            slack,
            err_multiple,
            ms: None,
        });
    }

    /// `lhs ≤ rhs` with the configured slack and error multiple.
    pub fn bound(&mut self, id: &str, field: &str, params: Params, lhs: f64, rhs: f64, err: f64, witness: Option<WitnessPoint>) {
        self.push(Check::Bound, id, field, params, lhs, Some(rhs), err, witness);
    }

    /// `discrepancy ≤ tol`, exactly.
    pub fn tolerance(&mut self, id: &str, field: &str, params: Params, discrepancy: f64, tol: f64, witness: Option<WitnessPoint>) {
        self.push(Check::Tolerance, id, field, params, discrepancy, Some(tol), 0.0, witness);
    }

    /// A value without an asserted bound; `reference` is recorded for the ratio.
    pub fn reported(&mut self, id: &str, field: &str, params: Params, value: f64, reference: Option<f64>, witness: Option<WitnessPoint>) {
        self.push(Check::Reported, id, field, params, value, reference, 0.0, witness);
    }

    pub fn finish(self) -> Vec<EstimateReport> {
        self.out
    }
}

/// Pretty JSON array, newline-terminated. Identical inputs give identical bytes.
pub fn to_json(reports: &[EstimateReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports)?;
    s.push('\n');
    Ok(s)
}

const CSV_HEADER: [&str; 16] = [
    "suite",
    "inequality_id",
    "anchor",
    "field",
    "params",
    "check",
    "lhs",
    "rhs",
    "ratio",
    "pass",
    "witness_x",
    "witness_h",
    "err_est",
    "slack",
    "err_multiple",
    "ms",
];

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn params_string(p: &BTreeMap<String, f64>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

pub fn to_csv(reports: &[EstimateReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        let check = match r.check {
            Check::Bound => "bound",
            Check::Tolerance => "tolerance",
            Check::Reported => "reported",
        };
        let (wx, wh) = match &r.witness {
            Some(w) => (join(&w.x), w.h.as_deref().map(join).unwrap_or_default()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.suite.clone(),
            r.inequality_id.clone(),
            r.anchor.clone(),
            r.field.clone(),
            params_string(&r.params),
            check.to_string(),
            format!("{:e}", r.lhs),
            opt(r.rhs),
            opt(r.ratio),
            r.pass.to_string(),
            wx,
            wh,
            format!("{:e}", r.err_est),
            format!("{:e}", r.slack),
            format!("{:e}", r.err_multiple),
            opt(r.ms),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `(t, lhs, rhs)` rows of every record that carries a `t` parameter, for plotting.
pub fn to_curves_csv(reports: &[EstimateReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["inequality_id", "field", "params", "t", "lhs", "rhs"])?;
    for r in reports {
        let Some(&t) = r.params.get("t") else { continue };
        let rest: BTreeMap<String, f64> = r.params.iter().filter(|(k, _)| *k != "t").map(|(k, v)| (k.clone(), *v)).collect();
        w.write_record([
            r.inequality_id.clone(),
            r.field.clone(),
            params_string(&rest),
            format!("{t:e}"),
            format!("{:e}", r.lhs),
            opt(r.rhs),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json` and/or `report.csv` (and `curves.csv` when asked)
/// into `dir`; returns the paths written.
pub fn emit(reports: &[EstimateReport], dir: &Path, format: Format, curves: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let p = dir.join("report.json");
        fs::write(&p, to_json(reports)?)?;
        written.push(p);
    }
    if matches!(format, Format::Csv | Format::Both) {
        let p = dir.join("report.csv");
        fs::write(&p, to_csv(reports)?)?;
        written.push(p);
    }
    if curves {
        let p = dir.join("curves.csv");
        fs::write(&p, to_curves_csv(reports)?)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<EstimateReport> {
        let mut rec = Recorder::new("smoothing", 1e-3, 3.0);
        rec.bound("smoothing.sup", "cusp", &[("t", 0.5)], 0.9, 1.0, 1e-12, None);
        rec.bound("smoothing.sup", "cusp", &[("t", 1.0)], 1.0005, 1.0, 0.0, None);
        rec.bound("smoothing.sup", "cusp", &[("t", 2.0)], 1.002, 1.0, 0.0, None);
        rec.tolerance("identity.resolvent", "cusp", &[], 2e-5, 1e-4, None);
        rec.reported("parabolic.constant", "bump", &[("alpha", 0.5)], 1.7, None, None);
        rec.bound("schauder.sup", "one", &[], 0.0, 0.0, 0.0, None);
        rec.finish()
    }

    #[test]
    fn verdicts_follow_the_stored_fields() {
        let r = sample();
        let pass: Vec<bool> = r.iter().map(|x| x.pass).collect();
        assert_eq!(pass, vec![true, true, false, true, true, true]);
        for x in &r {
            assert_eq!(x.pass, x.verdict());
        }
        assert_eq!(r[0].ratio, Some(0.9));
        assert_eq!(r[3].slack, 0.0);
        assert_eq!(r[5].ratio, Some(0.0));
        assert!(!verdict(Check::Bound, f64::NAN, Some(1.0), 0.0, 0.0, 0.0));
        // The error term is added on top of the slack.
        assert!(verdict(Check::Bound, 1.01, Some(1.0), 0.01 / 3.0, 0.0, 3.0));
    }

    #[test]
    fn json_round_trips_with_stable_names() {
        let r = sample();
        let s = to_json(&r).unwrap();
        for key in ["inequality_id", "anchor", "lhs", "rhs", "ratio", "pass", "witness", "err_est", "ms"] {
            assert!(s.contains(&format!("\"{key}\"")), "{key}");
        }
        let back: Vec<EstimateReport> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&[]).unwrap(), "[]\n");
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let r = sample();
        let s = to_csv(&r).unwrap();
        assert_eq!(s.lines().count(), r.len() + 1);
        assert!(s.starts_with("suite,inequality_id,anchor"));
        let curves = to_curves_csv(&r).unwrap();
        assert_eq!(curves.lines().count(), 4);
    }

    #[test]
    #[should_panic(expected = "has no anchor")]
    fn unknown_ids_are_rejected() {
        Recorder::new("x", 0.0, 0.0).bound("no.such.id", "f", &[], 0.0, 1.0, 0.0, None);
    }
}
