//! Report documents: CSV with one row per record and a fixed column order,
//! and JSON with the same content.
//!
//! CSV layout: a first line `# eigenbound-report v1`, then a header row with
//! [`CSV_COLUMNS`], then bound, eigenvalue, check and oracle rows in
//! insertion order. Empty cells mean "not applicable". Floats use the
//! shortest representation that round-trips.

use serde::Serialize;

use crate::bounds::BoundReport;
use crate::eigensolver::{EigenResult, OperatorKind};
use crate::error::{Error, Result};
use crate::geometry::{FractionMode, Resolution};
use crate::lemma::OracleOutcome;

pub const FORMAT_VERSION: &str = "eigenbound-report v1";

pub const CSV_COLUMNS: [&str; 21] = [
    "record",
    "id",
    "d",
    "N",
    "m",
    "sigma",
    "r",
    "h",
    "inradius",
    "volume",
    "fraction",
    "fraction_mode",
    "fraction_error",
    "value",
    "reference",
    "extrapolated",
    "residual",
    "valid",
    "degenerate",
    "pass",
    "notes",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRow {
    pub label: String,
    pub operator: OperatorKind,
    pub result: EigenResult,
}

/// A comparison `bound <= reference · (1 + margin)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub bound: f64,
    pub reference: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn upper(name: impl Into<String>, bound: f64, reference: f64, margin: f64) -> Self {
        let pass = bound <= reference * (1.0 + margin);
        Self { name: name.into(), bound, reference, margin, pass }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub version: String,
    pub domain: String,
    pub seed: u64,
    pub bounds: Vec<BoundReport>,
    pub eigenvalues: Vec<EigenRow>,
    pub checks: Vec<CheckRow>,
    pub oracles: Vec<OracleOutcome>,
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn int(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> String {
    b.to_string()
}

impl Report {
    pub fn new(domain: impl Into<String>, seed: u64) -> Self {
        Self { version: FORMAT_VERSION.into(), domain: domain.into(), seed, ..Default::default() }
    }

    /// True when every check and every oracle passed.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.oracles.iter().all(|o| o.passed())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!("# {FORMAT_VERSION} domain={} seed={}\n", self.domain, self.seed);
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numeric(e.to_string());
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for b in &self.bounds {
            let (frac, mode, ferr) = match &b.fraction {
                Some(f) => (
                    num(Some(f.value)),
                    match f.mode {
                        FractionMode::Estimate => "estimate".to_string(),
                        FractionMode::UpperEnclosure if f.resolution == Resolution::Exact => "exact".to_string(),
                        FractionMode::UpperEnclosure => "upper_enclosure".to_string(),
                    },
                    num(Some(f.error_radius)),
                ),
                None => Default::default(),
            };
            let i = &b.inputs;
            w.write_record([
                "bound".to_string(),
                b.bound_id.to_string(),
                int(i.d),
                int(i.n),
                int(i.m),
                num(i.sigma),
                num(i.r),
                String::new(),
                num(i.inradius),
                num(i.volume),
                frac,
                mode,
                ferr,
                num(Some(b.value)),
                String::new(),
                String::new(),
                String::new(),
                flag(b.valid),
                flag(b.degenerate),
                String::new(),
                b.notes.join("; "),
            ])
            .map_err(io)?;
        }
        for e in &self.eigenvalues {
            let (sigma, n) = match e.operator {
                OperatorKind::RobinLaplace { sigma } => (Some(sigma), None),
                OperatorKind::HeisenbergSublaplace { n } => (None, Some(n)),
                _ => (None, None),
            };
            let r = &e.result;
            w.write_record([
                "eigenvalue".to_string(),
                e.label.clone(),
                String::new(),
                int(n),
                String::new(),
                num(sigma),
                String::new(),
                num(Some(r.h)),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                num(Some(r.value)),
                String::new(),
                num(r.extrapolated),
                num(Some(r.residual)),
                String::new(),
                String::new(),
                String::new(),
                format!("{} unknowns, {} iterations", r.unknowns, r.iterations),
            ])
            .map_err(io)?;
        }
        for c in &self.checks {
            let mut row = vec![String::new(); CSV_COLUMNS.len()];
            row[0] = "check".into();
            row[1] = c.name.clone();
            row[13] = num(Some(c.bound));
            row[14] = num(Some(c.reference));
            row[19] = flag(c.pass);
            row[20] = format!("margin {}", c.margin);
            w.write_record(&row).map_err(io)?;
        }
        for o in &self.oracles {
            let mut row = vec![String::new(); CSV_COLUMNS.len()];
            row[0] = "oracle".into();
            row[1] = o.name.clone();
            row[13] = num(Some(o.worst_margin));
            row[19] = flag(o.passed());
            row[20] = format!("{} trials, {} failures", o.trials, o.failures);
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))?);
        Ok(out)
    }
}
