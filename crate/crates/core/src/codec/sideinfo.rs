//! Per-group scaling side information and its text format.
//!
//! ```text
//! # wavquant side-info
//! version = 1
//! group_size = 4
//! scaling_budget = 4
//! records = 2
//! 0 0 1.00000000000e0 1.00000000000e0 1.00000000000e0 1.00000000000e0
//! 0 1 8.31571928213e-1 1.14922089471e0 9.64120935268e-1 1.05508624181e0
//! ```
//!
//! Each record line is `segment group a_1 … a_N`, with factors written to 12
//! significant digits. Records are sorted by (segment, group).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quantizer::ScalingVector;

pub const SIDE_INFO_VERSION: u32 = 1;

/// Factor sums are re-checked against the budget with this tolerance, which
/// covers the 12-digit text rounding.
const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    group_size: usize,
    scaling_budget: f64,
    records: BTreeMap<(usize, usize), ScalingVector>,
}

impl SideInfo {
    pub fn new(group_size: usize, scaling_budget: f64) -> Self {
        SideInfo {
            group_size,
            scaling_budget,
            records: BTreeMap::new(),
        }
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn scaling_budget(&self) -> f64 {
        self.scaling_budget
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, segment: usize, group: usize, scaling: ScalingVector) -> Result<()> {
        if scaling.len() != self.group_size {
            return Err(Error::Structure(format!(
                "scaling vector of length {} in side info for group size {}",
                scaling.len(),
                self.group_size
            )));
        }
        self.records.insert((segment, group), scaling);
        Ok(())
    }

    pub fn get(&self, segment: usize, group: usize) -> Option<&ScalingVector> {
        self.records.get(&(segment, group))
    }

    /// Records in (segment, group) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &ScalingVector)> {
        self.records.iter().map(|(&(s, g), v)| (s, g, v))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# wavquant side-info\nversion = {SIDE_INFO_VERSION}\ngroup_size = {}\nscaling_budget = {}\nrecords = {}\n",
            self.group_size,
            self.scaling_budget,
            self.records.len()
        );
        for (&(seg, group), scaling) in &self.records {
            out.push_str(&format!("{seg} {group}"));
            for a in scaling.factors() {
                out.push_str(&format!(" {a:.11e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    header.insert(k.trim(), v.trim());
                }
                None => rows.push((lineno + 1, line)),
            }
        }
        let field = |name: &str| -> Result<&str> {
            header
                .get(name)
                .copied()
                .ok_or_else(|| Error::Format(format!("side info is missing `{name}`")))
        };
        let bad = |what: String| Error::Format(format!("side info: {what}"));
        let version: u32 = field("version")?.parse().map_err(|_| bad("bad version".into()))?;
        if version != SIDE_INFO_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let group_size: usize = field("group_size")?.parse().map_err(|_| bad("bad group_size".into()))?;
        let budget: f64 = field("scaling_budget")?
            .parse()
            .map_err(|_| bad("bad scaling_budget".into()))?;
        let declared: usize = field("records")?.parse().map_err(|_| bad("bad record count".into()))?;
        if declared != rows.len() {
            return Err(bad(format!("header declares {declared} records, found {}", rows.len())));
        }
        let mut info = SideInfo::new(group_size, budget);
        for (lineno, row) in rows {
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != group_size + 2 {
                return Err(bad(format!(
                    "line {lineno}: expected {} fields, found {}",
                    group_size + 2,
                    tokens.len()
                )));
            }
            let idx = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| bad(format!("line {lineno}: bad index `{t}`")))
            };
            let (seg, group) = (idx(tokens[0])?, idx(tokens[1])?);
            let factors = tokens[2..]
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| bad(format!("line {lineno}: bad factor `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let sum: f64 = factors.iter().sum();
            if (sum - budget).abs() > BUDGET_TOLERANCE * budget.max(1.0) {
                return Err(bad(format!("line {lineno}: factors sum to {sum}, budget is {budget}")));
            }
            let scaling = ScalingVector::from_factors(factors).map_err(|e| bad(format!("line {lineno}: {e}")))?;
            if info.records.insert((seg, group), scaling).is_some() {
                return Err(bad(format!(
                    "line {lineno}: duplicate record for segment {seg} group {group}"
                )));
            }
        }
        Ok(info)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
