//! Partners, researchers and the undirected visit network.
//!
//! Edge weights are stored as exact month totals; distances are derived on
//! demand as `1 / months` in whatever [`Scalar`] the caller works in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartnerId(pub u16);

impl fmt::Display for PartnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EsrId(pub u16);

impl fmt::Display for EsrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ESR{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartnerKind {
    Experimental,
    Computational,
}

impl PartnerKind {
    pub fn short(self) -> char {
        match self {
            PartnerKind::Experimental => 'e',
            PartnerKind::Computational => 'c',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partner {
    pub id: PartnerId,
    pub kind: PartnerKind,
    pub founding: bool,
}

/// The full partner list. Ids are unique and contiguous from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    partners: Vec<Partner>,
}

impl Roster {
    pub fn new(mut partners: Vec<Partner>) -> Result<Self> {
        partners.sort_by_key(|p| p.id);
        for (i, p) in partners.iter().enumerate() {
            let expected = PartnerId(i as u16 + 1);
            if p.id != expected {
                return Err(Error::InvalidInput(format!(
                    "partner ids must be unique and contiguous from 1; expected {expected}, found {}",
                    p.id
                )));
            }
        }
        Ok(Roster { partners })
    }

    pub fn partners(&self) -> &[Partner] {
        &self.partners
    }

    pub fn len(&self) -> usize {
        self.partners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partners.is_empty()
    }

    pub fn get(&self, id: PartnerId) -> Option<&Partner> {
        (id.0 as usize)
            .checked_sub(1)
            .and_then(|i| self.partners.get(i))
    }

    pub fn kind(&self, id: PartnerId) -> Option<PartnerKind> {
        self.get(id).map(|p| p.kind)
    }

    pub fn founding_ids(&self) -> BTreeSet<PartnerId> {
        self.partners
            .iter()
            .filter(|p| p.founding)
            .map(|p| p.id)
            .collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = PartnerId> + '_ {
        self.partners.iter().map(|p| p.id)
    }
}

/// An early stage researcher. `visits` is `None` when the lengths are not
/// known yet; such an ESR cannot be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Esr {
    pub id: EsrId,
    pub home: PartnerId,
    pub visits: Option<(u32, u32)>,
}

impl Esr {
    pub fn new(id: EsrId, home: PartnerId, first: u32, second: u32) -> Result<Self> {
        if first == 0 || second == 0 {
            return Err(Error::InvalidInput(format!(
                "{id}: visit lengths must be at least one month, got ({first}, {second})"
            )));
        }
        Ok(Esr {
            id,
            home,
            visits: Some((first, second)),
        })
    }

    pub fn unknown(id: EsrId, home: PartnerId) -> Self {
        Esr {
            id,
            home,
            visits: None,
        }
    }

    pub fn lengths(&self) -> Result<(u32, u32)> {
        self.visits.ok_or(Error::MissingData(self.id))
    }

    pub fn mobility(&self) -> u32 {
        self.visits.map_or(0, |(a, b)| a + b)
    }
}

/// Placement of one ESR: `host_a` receives the first visit length, `host_b`
/// the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VisitAssignment {
    pub esr: EsrId,
    pub host_a: PartnerId,
    pub host_b: PartnerId,
}

impl VisitAssignment {
    pub fn hosts(&self) -> (PartnerId, PartnerId) {
        (self.host_a, self.host_b)
    }
}

impl fmt::Display for VisitAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> ({}, {})", self.esr, self.host_a, self.host_b)
    }
}

fn edge_key(a: PartnerId, b: PartnerId) -> (PartnerId, PartnerId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undirected simple graph with accumulated visit months on each edge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    partners: BTreeSet<PartnerId>,
    edges: BTreeMap<(PartnerId, PartnerId), u32>,
}

impl Network {
    pub fn with_partners(ids: impl IntoIterator<Item = PartnerId>) -> Self {
        Network {
            partners: ids.into_iter().collect(),
            edges: BTreeMap::new(),
        }
    }

    pub fn add_partner(&mut self, id: PartnerId) {
        self.partners.insert(id);
    }

    /// Adds `months` to the edge `a`–`b`, creating both the edge and any
    /// missing endpoint.
    pub fn add_months(&mut self, a: PartnerId, b: PartnerId, months: u32) -> Result<()> {
        if a == b {
            return Err(Error::InvalidInput(format!("self-edge on {a}")));
        }
        if months == 0 {
            return Err(Error::InvalidInput(format!(
                "edge {a}-{b} must carry at least one month"
            )));
        }
        self.partners.insert(a);
        self.partners.insert(b);
        *self.edges.entry(edge_key(a, b)).or_insert(0) += months;
        Ok(())
    }

    pub fn months(&self, a: PartnerId, b: PartnerId) -> Option<u32> {
        self.edges.get(&edge_key(a, b)).copied()
    }

    pub fn contains(&self, id: PartnerId) -> bool {
        self.partners.contains(&id)
    }

    pub fn partners(&self) -> &BTreeSet<PartnerId> {
        &self.partners
    }

    pub fn len(&self) -> usize {
        self.partners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partners.is_empty()
    }

    /// Edges as `(lo, hi, months)` with `lo < hi`, in ascending key order.
    pub fn edges(&self) -> impl Iterator<Item = (PartnerId, PartnerId, u32)> + '_ {
        self.edges.iter().map(|(&(a, b), &m)| (a, b, m))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_months(&self) -> u64 {
        self.edges.values().map(|&m| m as u64).sum()
    }

    pub fn neighbors(&self, id: PartnerId) -> BTreeSet<PartnerId> {
        self.edges
            .keys()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn degree(&self, id: PartnerId) -> usize {
        self.edges
            .keys()
            .filter(|&&(a, b)| a == id || b == id)
            .count()
    }

    pub fn remove_edge(&mut self, a: PartnerId, b: PartnerId) -> Option<u32> {
        self.edges.remove(&edge_key(a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffParams<T> {
    pub delta_ec: T,
    pub delta_ee: T,
    pub delta_cc: T,
    pub cost: T,
}

impl<T: Scalar> PayoffParams<T> {
    /// Validates `delta_ec > delta_ee > delta_cc > 0` and `cost > 0`.
    pub fn new(delta_ec: T, delta_ee: T, delta_cc: T, cost: T) -> Result<Self> {
        let params = PayoffParams {
            delta_ec,
            delta_ee,
            delta_cc,
            cost,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.delta_cc > zero && self.cost > zero) {
            return Err(Error::Validation(
                "payoff constants and link cost must be positive".into(),
            ));
        }
        if !(self.delta_ec > self.delta_ee && self.delta_ee > self.delta_cc) {
            return Err(Error::Validation(format!(
                "payoffs must satisfy delta_ec > delta_ee > delta_cc, got {:?} / {:?} / {:?}",
                self.delta_ec, self.delta_ee, self.delta_cc
            )));
        }
        Ok(())
    }

    /// Same constants, unchecked. Used by property tests that need degenerate
    /// settings such as equal payoffs or zero cost.
    pub fn unchecked(delta_ec: T, delta_ee: T, delta_cc: T, cost: T) -> Self {
        PayoffParams {
            delta_ec,
            delta_ee,
            delta_cc,
            cost,
        }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PayoffParams<U> {
        PayoffParams {
            delta_ec: f(&self.delta_ec),
            delta_ee: f(&self.delta_ee),
            delta_cc: f(&self.delta_cc),
            cost: f(&self.cost),
        }
    }
}

impl<T: Scalar> Default for PayoffParams<T> {
    /// δ(e–c) = 3, δ(e–e) = 2, δ(c–c) = 1, unit link cost.
    fn default() -> Self {
        PayoffParams {
            delta_ec: T::from_months(3),
            delta_ee: T::from_months(2),
            delta_cc: T::one(),
            cost: T::one(),
        }
    }
}

/// Distance of an edge carrying `months` of visits.
pub fn edge_distance<T: Scalar>(months: i64) -> Result<T> {
    if months < 1 {
        return Err(Error::InvalidInput(format!(
            "edge months must be positive, got {months}"
        )));
    }
    let m = T::from_i64(months)
        .ok_or_else(|| Error::InvalidInput(format!("{months} not representable")))?;
    Ok(T::one() / m)
}

pub fn delta_for<T: Scalar>(a: PartnerKind, b: PartnerKind, params: &PayoffParams<T>) -> T {
    use PartnerKind::*;
    match (a, b) {
        (Experimental, Experimental) => params.delta_ee.clone(),
        (Computational, Computational) => params.delta_cc.clone(),
        _ => params.delta_ec.clone(),
    }
}

/// Builds the founding network for partners `P1..=Pn` from an n×n table
/// where row `i` holds the months the ESR of `P(i+1)` spends at each partner.
pub fn founding_network(table: &[Vec<i64>]) -> Result<Network> {
    let ids: Vec<PartnerId> = (1..=table.len() as u16).map(PartnerId).collect();
    founding_network_for(&ids, table)
}

/// As [`founding_network`], with explicit partner ids for the table rows.
pub fn founding_network_for(ids: &[PartnerId], table: &[Vec<i64>]) -> Result<Network> {
    let n = ids.len();
    if table.len() != n || table.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput(format!(
            "founding visit table must be {n}x{n}"
        )));
    }
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0 {
                return Err(Error::InvalidInput(format!(
                    "negative visit length {v} at row {}, column {}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j && v != 0 {
                return Err(Error::InvalidInput(format!(
                    "diagonal entry for {} must be zero",
                    ids[i]
                )));
            }
        }
    }
    let mut net = Network::with_partners(ids.iter().copied());
    for i in 0..n {
        for j in (i + 1)..n {
            let total = table[i][j] + table[j][i];
            if total > 0 {
                let months = u32::try_from(total)
                    .map_err(|_| Error::InvalidInput(format!("edge total {total} too large")))?;
                net.add_months(ids[i], ids[j], months)?;
            }
        }
    }
    Ok(net)
}

/// Returns a copy of `net` with the assignment's visits added.
pub fn apply_assignment(net: &Network, a: &VisitAssignment, esrs: &[Esr]) -> Result<Network> {
    let esr = esrs
        .iter()
        .find(|e| e.id == a.esr)
        .ok_or_else(|| Error::InvalidInput(format!("unknown {}", a.esr)))?;
    apply_to(net, a, esr)
}

pub(crate) fn apply_to(net: &Network, a: &VisitAssignment, esr: &Esr) -> Result<Network> {
    let invalid = |reason: String| Error::InvalidAssignment {
        esr: esr.id,
        reason,
    };
    if a.host_a == a.host_b {
        return Err(invalid(format!("duplicate host {}", a.host_a)));
    }
    if a.host_a == esr.home || a.host_b == esr.home {
        return Err(invalid(format!("host equals home partner {}", esr.home)));
    }
    for h in [a.host_a, a.host_b] {
        if !net.contains(h) {
            return Err(invalid(format!("host {h} is not in the network")));
        }
    }
    let (first, second) = esr.lengths()?;
    let mut out = net.clone();
    out.add_partner(esr.home);
    out.add_months(esr.home, a.host_a, first)?;
    out.add_months(esr.home, a.host_b, second)?;
    Ok(out)
}

pub fn total_mobility(partner: PartnerId, esrs: &[Esr]) -> u32 {
    esrs.iter()
        .filter(|e| e.home == partner)
        .map(Esr::mobility)
        .sum()
}
