//! Experiment configs, report rows and their verdicts, the runner, and
//! refinement studies. The canonical configs live in [`gallery`].

mod builders;
pub mod gallery;
mod ops;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::io::{fmt_f64, DomainDescriptor};
use crate::metric::MetricField;

pub use builders::{build_field, is_randomized, BUILDERS};
pub use ops::OPERATIONS;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DomainSection {
    pub kind: String,
    #[serde(default = "default_stencil")]
    pub stencil_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

fn default_stencil() -> usize {
    3
}

impl DomainSection {
    pub fn descriptor(&self, resolution: usize) -> DomainDescriptor {
        DomainDescriptor {
            kind: self.kind.clone(),
            resolution,
            stencil_order: self.stencil_order,
            mask: self.mask.clone(),
            arm: self.arm,
            width: self.width,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MetricSection {
    pub builder: String,
    #[serde(flatten)]
    pub params: toml::Table,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OperationSection {
    pub name: String,
    #[serde(flatten)]
    pub params: toml::Table,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunSection {
    pub resolutions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Per-quantity tolerance overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSection>,
    pub operation: OperationSection,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Syntax only; callers apply overrides and then [`Self::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn id(&self) -> &str {
        self.id.as_deref().unwrap_or(&self.operation.name)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run.resolutions;
        if r.is_empty() {
            return Err(Error::Parse("run.resolutions is empty".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("run.resolutions must be strictly increasing".into()));
        }
        if !OPERATIONS.contains(&self.operation.name.as_str()) {
            return Err(Error::Parse(format!("unknown operation '{}'", self.operation.name)));
        }
        if let Some(m) = &self.metric {
            if !BUILDERS.contains(&m.builder.as_str()) {
                return Err(Error::Parse(format!("unknown metric builder '{}'", m.builder)));
            }
            if is_randomized(&m.builder) && m.params.get("seed").is_none() && self.run.seed.is_none() {
                return Err(Error::Parse(format!("builder '{}' needs a seed", m.builder)));
            }
            if self.domain.is_none() {
                return Err(Error::Parse("metric section without domain section".into()));
            }
        }
        if ops::needs_field(&self.operation.name) && self.metric.is_none() {
            return Err(Error::Parse(format!("operation '{}' needs [domain] and [metric]", self.operation.name)));
        }
        Ok(())
    }

    pub fn tolerance(&self, quantity: &str, default: f64) -> f64 {
        self.run.tolerances.get(quantity).cloned().unwrap_or(default)
    }

    /// Field at one resolution; `None` for operations without a field.
    pub fn field(&self, resolution: usize) -> Result<Option<MetricField>> {
        match (&self.domain, &self.metric) {
            (Some(d), Some(m)) => Ok(Some(build_field(d, m, resolution, self.run.seed)?)),
            _ => Ok(None),
        }
    }
}

/// How a row's value is judged against its reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    /// |rel_error| ≤ tolerance.
    Close,
    /// rel_error ≥ −tolerance.
    AtLeast,
    /// rel_error ≤ tolerance.
    AtMost,
    /// Reported only.
    Info,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::Close => "close",
            Check::AtLeast => "at-least",
            Check::AtMost => "at-most",
            Check::Info => "info",
        }
    }

    fn parse(s: &str) -> Result<Check> {
        Ok(match s {
            "close" => Check::Close,
            "at-least" => Check::AtLeast,
            "at-most" => Check::AtMost,
            "info" => Check::Info,
            other => return Err(Error::Parse(format!("unknown check '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub resolution: usize,
    pub quantity: String,
    pub value: f64,
    pub reference: Option<f64>,
    /// Where the reference comes from: closed form, theorem bound, oracle.
    pub source: String,
    pub tolerance: f64,
    pub check: Check,
}

impl ReportRow {
    /// (value − ref)/|ref|, or value − ref when ref = 0.
    pub fn rel_error(&self) -> Option<f64> {
        self.reference.map(|r| if r == 0.0 { self.value - r } else { (self.value - r) / r.abs() })
    }

    pub fn verdict(&self) -> Verdict {
        let Some(e) = self.rel_error() else {
            return if self.check == Check::Info || !self.value.is_nan() { Verdict::Info } else { Verdict::Fail };
        };
        let ok = match self.check {
            Check::Info => return Verdict::Info,
            Check::Close => e.abs() <= self.tolerance,
            Check::AtLeast => e >= -self.tolerance,
            Check::AtMost => e <= self.tolerance,
        };
        if ok { Verdict::Pass } else { Verdict::Fail }
    }
}

pub const CSV_HEADER: &str = "experiment,resolution,quantity,value,reference,source,rel_error,tolerance,check,verdict";

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.resolution,
            r.quantity,
            fmt_f64(r.value),
            r.reference.map(fmt_f64).unwrap_or_default(),
            r.source,
            r.rel_error().map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.tolerance),
            r.check.as_str(),
            r.verdict().as_str()
        );
    }
    s
}

/// Parses a report written by [`rows_to_csv`]; the verdict column is
/// recomputed, not trusted.
pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("not a report table".into()));
    }
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 10 {
            return Err(Error::Parse(format!("bad report row '{line}'")));
        }
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { crate::io::parse_f64(s).map(Some) };
        rows.push(ReportRow {
            experiment: c[0].into(),
            resolution: c[1].parse().map_err(|_| Error::Parse(format!("bad resolution '{}'", c[1])))?,
            quantity: c[2].into(),
            value: crate::io::parse_f64(c[3])?,
            reference: opt(c[4])?,
            source: c[5].into(),
            tolerance: crate::io::parse_f64(c[7])?,
            check: Check::parse(c[8])?,
        });
    }
    Ok(rows)
}

/// True iff no row fails.
pub fn all_pass(rows: &[ReportRow]) -> bool {
    rows.iter().all(|r| r.verdict() != Verdict::Fail)
}

/// Cells shaded by a value and polylines, in chart coordinates.
#[derive(Clone, Debug, Default)]
pub struct Figure {
    pub name: String,
    /// (origin, size, value) per cell.
    pub cells: Vec<([f64; 2], [f64; 2], f64)>,
    pub lines: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub figures: Vec<Figure>,
    /// Extra files: (name, contents), e.g. certificates and profiles.
    pub artifacts: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub figures: bool,
    pub exec: Exec,
}

/// Runs the operation at every resolution, in order.
pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = RunOutput::default();
    for &n in &cfg.run.resolutions {
        let field = cfg.field(n)?;
        ops::execute(cfg, n, field.as_ref(), opts, &mut out)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineRow {
    pub resolution: usize,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    /// ln(e_prev/e)/ln(N/N_prev); `None` when not defined.
    pub order: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RefineTable {
    pub quantity: String,
    pub rows: Vec<RefineRow>,
    /// Errors non-increasing in N, up to 1e-12.
    pub non_increasing: bool,
}

impl RefineTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,resolution,value,reference,error,order\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                self.quantity,
                r.resolution,
                fmt_f64(r.value),
                fmt_f64(r.reference),
                fmt_f64(r.error),
                r.order.map(fmt_f64).unwrap_or_else(|| "n/a".into())
            );
        }
        s
    }
}

pub fn refine(cfg: &ExperimentConfig, quantity: &str, opts: RunOptions) -> Result<RefineTable> {
    if cfg.run.resolutions.len() < 3 {
        return Err(Error::InvalidParameter("refinement needs at least 3 resolutions".into()));
    }
    let out = run(cfg, RunOptions { figures: false, ..opts })?;
    refine_rows(&out.rows, quantity)
}

/// Convergence table of one quantity from report rows.
pub fn refine_rows(rows: &[ReportRow], quantity: &str) -> Result<RefineTable> {
    let mut table: Vec<RefineRow> = Vec::new();
    for r in rows.iter().filter(|r| r.quantity == quantity) {
        let reference = r
            .reference
            .ok_or_else(|| Error::InvalidParameter(format!("quantity '{quantity}' has no reference")))?;
        let error = (r.value - reference).abs();
        let order = table.last().and_then(|p| {
            let ratio = p.error / error;
            (error > 0.0 && p.error > 0.0 && ratio > 1.0 && r.resolution > p.resolution)
                .then(|| ratio.ln() / (r.resolution as f64 / p.resolution as f64).ln())
        });
        table.push(RefineRow { resolution: r.resolution, value: r.value, reference, error, order });
    }
    if table.is_empty() {
        return Err(Error::InvalidParameter(format!("no rows for quantity '{quantity}'")));
    }
    let non_increasing = table.windows(2).all(|w| w[1].error <= w[0].error + 1e-12);
    Ok(RefineTable { quantity: quantity.to_string(), rows: table, non_increasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(value: f64, reference: Option<f64>, check: Check, tol: f64) -> ReportRow {
        ReportRow {
            experiment: "t".into(),
            resolution: 8,
            quantity: "q".into(),
            value,
            reference,
            source: "test".into(),
            tolerance: tol,
            check,
        }
    }

    #[test]
    fn verdict_logic() {
        assert_eq!(row(1.01, Some(1.0), Check::Close, 0.02).verdict(), Verdict::Pass);
        assert_eq!(row(1.03, Some(1.0), Check::Close, 0.02).verdict(), Verdict::Fail);
        assert_eq!(row(0.9, Some(1.0), Check::AtLeast, 0.0).verdict(), Verdict::Fail);
        assert_eq!(row(1.9, Some(1.0), Check::AtLeast, 0.0).verdict(), Verdict::Pass);
        assert_eq!(row(0.1, Some(0.2), Check::AtMost, 0.0).verdict(), Verdict::Pass);
        assert_eq!(row(0.0, Some(0.0), Check::Close, 0.0).verdict(), Verdict::Pass);
        assert_eq!(row(5.0, None, Check::Info, 0.0).verdict(), Verdict::Info);
        assert_eq!(row(f64::NAN, Some(1.0), Check::Close, 0.1).verdict(), Verdict::Fail);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(1.0 / 3.0, Some(0.25), Check::AtMost, 0.5), row(2.0, None, Check::Info, 0.0)];
        let text = rows_to_csv(&rows);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(rows_from_csv(&text).unwrap(), rows);
    }

    #[test]
    fn config_validation() {
        let ok = r#"
            [domain]
            kind = "torus2"
            [metric]
            builder = "flat"
            [operation]
            name = "systolic-ratio"
            [run]
            resolutions = [8, 16, 32]
        "#;
        assert!(ExperimentConfig::from_toml(ok).is_ok());
        let bad = ok.replace("[8, 16, 32]", "[16, 8]");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(Error::Parse(_))));
        let random = ok.replace("\"flat\"", "\"random\"");
        assert!(ExperimentConfig::from_toml(&random).is_err());
        let seeded = random.replace("[run]", "[run]\nseed = 4");
        assert!(ExperimentConfig::from_toml(&seeded).is_ok());
        assert!(ExperimentConfig::from_toml("not toml [").is_err());
    }

    #[test]
    fn refine_orders() {
        let mk = |n: usize, v: f64| ReportRow { resolution: n, ..row(v, Some(1.0), Check::Close, 1.0) };
        let t = refine_rows(&[mk(8, 1.16), mk(16, 1.04), mk(32, 1.01)], "q").unwrap();
        assert!(t.non_increasing);
        assert!((t.rows[1].order.unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(t.rows[0].order, None);
        let t = refine_rows(&[mk(8, 1.0), mk(16, 1.0), mk(32, 1.1)], "q").unwrap();
        assert!(!t.non_increasing);
        assert_eq!(t.rows[2].order, None);
    }
}
