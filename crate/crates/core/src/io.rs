//! JSON instance and solution files.
//!
//! Instances are written with one heavy row per line so they diff cleanly.

use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::model::{Allocation, Instance, NswKey};
use crate::solver::{Conversion, SolveReport};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    version: u32,
    p: u64,
    n: usize,
    m: usize,
    heavy: Vec<Vec<u8>>,
}

/// Line and column (both 1-based) of byte offset `at`.
fn position(text: &str, at: usize) -> (usize, usize) {
    let before = &text[..at.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
    (line, column)
}

/// Offset of the value of top-level key `key`, or 0.
fn key_offset(text: &str, key: &str) -> usize {
    let pat = format!("\"{key}\"");
    text.find(&pat)
        .map(|k| {
            let after = k + pat.len();
            after + text[after..].find(|c: char| c != ':' && !c.is_whitespace()).unwrap_or(0)
        })
        .unwrap_or(0)
}

/// Offset of the `row`-th inner array of `heavy`.
fn row_offset(text: &str, row: usize) -> usize {
    let start = key_offset(text, "heavy");
    text[start + 1..]
        .match_indices('[')
        .nth(row)
        .map_or(start, |(k, _)| start + 1 + k)
}

fn parse_error(text: &str, at: usize, message: String) -> NswError {
    let (line, column) = position(text, at);
    NswError::Parse { line, column, message }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| NswError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.version != FORMAT_VERSION {
        return Err(parse_error(
            text,
            key_offset(text, "version"),
            format!("unsupported version {} (expected {FORMAT_VERSION})", doc.version),
        ));
    }
    if doc.p < 3 || doc.p % 2 == 0 {
        return Err(parse_error(text, key_offset(text, "p"), format!("p must be odd and at least 3, got {}", doc.p)));
    }
    if doc.n == 0 {
        return Err(parse_error(text, key_offset(text, "n"), "n must be positive".into()));
    }
    if doc.heavy.len() != doc.n {
        return Err(parse_error(
            text,
            key_offset(text, "heavy"),
            format!("heavy has {} rows, expected n = {}", doc.heavy.len(), doc.n),
        ));
    }
    let mut heavy = Vec::with_capacity(doc.n);
    for (i, row) in doc.heavy.iter().enumerate() {
        if row.len() != doc.m {
            return Err(parse_error(
                text,
                row_offset(text, i),
                format!("heavy row {i} has {} entries, expected m = {}", row.len(), doc.m),
            ));
        }
        if let Some(g) = row.iter().position(|&b| b > 1) {
            return Err(parse_error(text, row_offset(text, i), format!("heavy[{i}][{g}] = {} is not 0 or 1", row[g])));
        }
        heavy.push(row.iter().map(|&b| b == 1).collect());
    }
    Instance::new(doc.p, doc.m, heavy)
}

pub fn emit_instance(inst: &Instance) -> String {
    let rows: Vec<String> = inst
        .heavy_matrix()
        .iter()
        .map(|row| {
            let cells: Vec<&str> = row.iter().map(|&h| if h { "1" } else { "0" }).collect();
            format!("    [{}]", cells.join(", "))
        })
        .collect();
    format!(
        "{{\n  \"version\": {FORMAT_VERSION},\n  \"p\": {},\n  \"n\": {},\n  \"m\": {},\n  \"heavy\": [\n{}\n  ]\n}}\n",
        inst.p(),
        inst.n(),
        inst.m(),
        rows.join(",\n")
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionEntry {
    pub good: usize,
    pub from: usize,
    pub to: usize,
}

impl From<&Conversion> for ConversionEntry {
    fn from(c: &Conversion) -> Self {
        ConversionEntry {
            good: c.good,
            from: c.from,
            to: c.to,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationEntry {
    pub id: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub owner: Vec<usize>,
    pub as_heavy: Vec<bool>,
    pub values_x2: Vec<u64>,
    /// `Π values_x2` in decimal.
    pub nsw_product: String,
    /// `log10` of the NSW; `null` when some bundle is empty.
    pub nsw_log10: Option<f64>,
    pub conversions: Vec<ConversionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<ViolationEntry>,
}

impl SolutionFile {
    pub fn from_report(report: &SolveReport, with_trace: bool) -> Self {
        let a = &report.alloc;
        SolutionFile {
            owner: a.owners().to_vec(),
            as_heavy: a.as_heavy_flags().to_vec(),
            values_x2: a.values2().to_vec(),
            nsw_product: report.key.product().to_string(),
            nsw_log10: NswKey::nsw_log10(a.values2()),
            conversions: report.conversions.iter().map(ConversionEntry::from).collect(),
            trace: with_trace.then(|| serde_json::to_value(&report.trace).expect("trace serializes")),
            violations: report
                .violations
                .iter()
                .map(|v| ViolationEntry {
                    id: v.id.to_string(),
                    detail: v.detail.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds the allocation against `inst` and checks that the stored
    /// values and product match it exactly.
    pub fn validate(&self, inst: &Instance) -> Result<Allocation> {
        if self.owner.len() != inst.m() || self.as_heavy.len() != inst.m() {
            return Err(NswError::InvalidAllocation(format!(
                "{} owners / {} flags for {} goods",
                self.owner.len(),
                self.as_heavy.len(),
                inst.m()
            )));
        }
        let alloc = Allocation::new(inst, self.owner.clone(), self.as_heavy.clone())?;
        if alloc.values2() != self.values_x2.as_slice() {
            return Err(NswError::InvalidAllocation(format!(
                "values_x2 {:?} but the allocation gives {:?}",
                self.values_x2,
                alloc.values2()
            )));
        }
        let product = alloc.key().product().to_string();
        if product != self.nsw_product {
            return Err(NswError::InvalidAllocation(format!(
                "nsw_product {} but the allocation gives {product}",
                self.nsw_product
            )));
        }
        Ok(alloc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NswError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}
