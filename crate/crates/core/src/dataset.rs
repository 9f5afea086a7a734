//! JSON dataset format.
//!
//! ```json
//! {
//!   "name": "...",
//!   "partners": [{ "id": 1, "kind": "experimental", "founding": true }, ...],
//!   "founding_visits": [[0, 0, 8, 3], ...],
//!   "esrs": [{ "id": 5, "home": 5, "visits": [9, 4] },
//!            { "id": 13, "home": 10, "visits": "unknown" }, ...],
//!   "payoffs": { "delta_ec": 3, "delta_ee": 2, "delta_cc": 1, "cost": 1 }
//! }
//! ```
//!
//! Row `k` of `founding_visits` belongs to the ESR of the `k`-th founding
//! partner (ascending id) and that ESR has id `k + 1`. `esrs` lists the
//! researchers hired by non-founding partners only.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{founding_network_for, Esr, EsrId, Network, Partner, PartnerId, PayoffParams, Roster};

/// The dataset shipped with the crate. ESR13's visit lengths are unknown.
pub const BUNDLED: &str = include_str!("../data/training_network.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum UnknownTag {
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum VisitsField {
    Known([u32; 2]),
    Unknown(UnknownTag),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEsr {
    id: u16,
    home: u16,
    visits: VisitsField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: String,
    partners: Vec<Partner>,
    founding_visits: Vec<Vec<i64>>,
    esrs: Vec<RawEsr>,
    payoffs: PayoffParams<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub roster: Roster,
    pub founding_visits: Vec<Vec<i64>>,
    /// Researchers hired by non-founding partners, in file order.
    pub esrs: Vec<Esr>,
    pub params: PayoffParams<f64>,
    /// SHA-256 of the bytes the dataset was parsed from.
    pub digest: String,
    pub warnings: Vec<String>,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Line (1-based) of the `index`-th element of the top-level array `key`,
/// found by a string-aware scan. Falls back to the line of the key itself.
fn locate_item(text: &str, key: &str, index: usize) -> usize {
    let line_at = |pos: usize| text[..pos].bytes().filter(|&b| b == b'\n').count() + 1;
    let needle = format!("\"{key}\"");
    let Some(start) = text.find(&needle) else {
        return 0;
    };
    let Some(open) = text[start..].find('[').map(|o| start + o) else {
        return line_at(start);
    };
    let bytes = text.as_bytes();
    let (mut depth, mut in_str, mut escaped, mut seen) = (0usize, false, false, 0usize);
    let mut pending = true;
    for (pos, &b) in bytes.iter().enumerate().skip(open + 1) {
        if in_str {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b' ' | b'\n' | b'\r' | b'\t' => continue,
            b',' if depth == 0 => {
                pending = true;
                continue;
            }
            b']' if depth == 0 => break,
            _ => {}
        }
        if depth == 0 && pending {
            if seen == index {
                return line_at(pos);
            }
            seen += 1;
            pending = false;
        }
        match b {
            b'"' => in_str = true,
            b'[' | b'{' => depth += 1,
            b']' | b'}' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    line_at(start)
}

impl Dataset {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawDataset = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Error::Schema {
                field,
                line: inner.line(),
                message: inner.to_string(),
            }
        })?;
        Self::from_raw(raw, text)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled dataset is valid")
    }

    fn from_raw(raw: RawDataset, text: &str) -> Result<Self> {
        let schema = |field: String, key: &str, index: usize, message: String| Error::Schema {
            line: locate_item(text, key, index),
            field,
            message,
        };
        let mut ids = BTreeSet::new();
        for (i, p) in raw.partners.iter().enumerate() {
            if !ids.insert(p.id) {
                return Err(schema(
                    format!("partners[{i}].id"),
                    "partners",
                    i,
                    format!("duplicate partner id {}", p.id.0),
                ));
            }
        }
        let roster = Roster::new(raw.partners.clone()).map_err(|e| {
            schema("partners".into(), "partners", 0, e.to_string())
        })?;
        let founding: Vec<PartnerId> = roster.founding_ids().into_iter().collect();
        let nf = founding.len();
        if raw.founding_visits.len() != nf {
            return Err(schema(
                "founding_visits".into(),
                "founding_visits",
                0,
                format!(
                    "expected {nf} rows (one per founding partner), found {}",
                    raw.founding_visits.len()
                ),
            ));
        }
        for (i, row) in raw.founding_visits.iter().enumerate() {
            if row.len() != nf {
                return Err(schema(
                    format!("founding_visits[{i}]"),
                    "founding_visits",
                    i,
                    format!("expected {nf} columns, found {}", row.len()),
                ));
            }
            if let Some(j) = row.iter().position(|&v| v < 0) {
                return Err(schema(
                    format!("founding_visits[{i}][{j}]"),
                    "founding_visits",
                    i,
                    "visit lengths must be non-negative".into(),
                ));
            }
            if row[i] != 0 {
                return Err(schema(
                    format!("founding_visits[{i}][{i}]"),
                    "founding_visits",
                    i,
                    "a researcher cannot visit its own partner".into(),
                ));
            }
        }

        let mut esr_ids: BTreeSet<u16> = (1..=nf as u16).collect();
        let mut esrs = Vec::with_capacity(raw.esrs.len());
        let mut warnings = Vec::new();
        for (i, r) in raw.esrs.iter().enumerate() {
            let at = |field: &str, message: String| {
                schema(format!("esrs[{i}].{field}"), "esrs", i, message)
            };
            if !esr_ids.insert(r.id) {
                return Err(at("id", format!("duplicate ESR id {}", r.id)));
            }
            let home = PartnerId(r.home);
            match roster.get(home) {
                None => return Err(at("home", format!("unknown partner {}", r.home))),
                Some(p) if p.founding => {
                    return Err(at(
                        "home",
                        format!("{home} is a founding partner; its researcher comes from founding_visits"),
                    ))
                }
                Some(_) => {}
            }
            let esr = match r.visits {
                VisitsField::Known([a, b]) => {
                    Esr::new(EsrId(r.id), home, a, b).map_err(|e| at("visits", e.to_string()))?
                }
                VisitsField::Unknown(_) => {
                    warnings.push(format!("ESR{} has unknown visit lengths", r.id));
                    Esr::unknown(EsrId(r.id), home)
                }
            };
            esrs.push(esr);
        }
        for p in roster.partners().iter().filter(|p| !p.founding) {
            if !esrs.iter().any(|e| e.home == p.id) {
                warnings.push(format!("{} hires no researcher and will not join", p.id));
            }
        }
        raw.payoffs.validate()?;
        Ok(Dataset {
            name: raw.name,
            roster,
            founding_visits: raw.founding_visits,
            esrs,
            params: raw.payoffs,
            digest: digest_bytes(text.as_bytes()),
            warnings,
        })
    }

    pub fn founding_ids(&self) -> Vec<PartnerId> {
        self.roster.founding_ids().into_iter().collect()
    }

    pub fn founding_network(&self) -> Result<Network> {
        founding_network_for(&self.founding_ids(), &self.founding_visits)
    }

    /// Founding researchers, one per founding partner, with their visit
    /// totals. Their detailed visits live in `founding_visits`.
    pub fn founding_esr_count(&self) -> usize {
        self.founding_visits.len()
    }

    pub fn esr_count(&self) -> usize {
        self.founding_esr_count() + self.esrs.len()
    }

    pub fn unknown_esrs(&self) -> Vec<EsrId> {
        self.esrs
            .iter()
            .filter(|e| e.visits.is_none())
            .map(|e| e.id)
            .collect()
    }

    pub fn with_visits(&self, id: EsrId, first: u32, second: u32) -> Result<Dataset> {
        let mut out = self.clone();
        let slot = out
            .esrs
            .iter_mut()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::InvalidInput(format!("no researcher {id} in dataset")))?;
        *slot = Esr::new(id, slot.home, first, second)?;
        Ok(out)
    }

    /// Component-wise lower median of every known new-researcher visit pair.
    pub fn placeholder_visits(&self) -> Option<(u32, u32)> {
        let mut firsts: Vec<u32> = self.esrs.iter().filter_map(|e| e.visits.map(|v| v.0)).collect();
        let mut seconds: Vec<u32> = self.esrs.iter().filter_map(|e| e.visits.map(|v| v.1)).collect();
        if firsts.is_empty() {
            return None;
        }
        firsts.sort_unstable();
        seconds.sort_unstable();
        let mid = (firsts.len() - 1) / 2;
        Some((firsts[mid], seconds[mid]))
    }

    /// Fills every unknown visit pair with [`Self::placeholder_visits`].
    pub fn with_placeholders(&self) -> Result<(Dataset, Option<(u32, u32)>)> {
        let unknown = self.unknown_esrs();
        if unknown.is_empty() {
            return Ok((self.clone(), None));
        }
        let (a, b) = self
            .placeholder_visits()
            .ok_or_else(|| Error::Validation("no known visit lengths to derive a placeholder".into()))?;
        let mut out = self.clone();
        for id in unknown {
            out = out.with_visits(id, a, b)?;
        }
        Ok((out, Some((a, b))))
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawDataset {
            name: self.name.clone(),
            partners: self.roster.partners().to_vec(),
            founding_visits: self.founding_visits.clone(),
            esrs: self
                .esrs
                .iter()
                .map(|e| RawEsr {
                    id: e.id.0,
                    home: e.home.0,
                    visits: match e.visits {
                        Some((a, b)) => VisitsField::Known([a, b]),
                        None => VisitsField::Unknown(UnknownTag::Unknown),
                    },
                })
                .collect(),
            payoffs: self.params.clone(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    Dataset::parse(&text)
}
