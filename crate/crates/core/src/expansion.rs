//! Greedy expansion of the founding network.
//!
//! New partners are processed by descending total mobility. Each of their
//! ESRs is linked to the ordered pair of current members that minimizes the
//! mean weighted shortest distance of the expanded network. Equal means are
//! resolved towards the lexicographically smallest `(host_a, host_b)`, which
//! makes the choice independent of evaluation order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{apply_to, total_mobility, Esr, Network, PartnerId, PayoffParams, Roster, VisitAssignment};
use crate::paths::{mean_weighted_distance, weighted_shortest};
use crate::scalar::{nearly_equal, Scalar};

/// Relative tolerance under which a losing candidate is logged as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Non-founding ESRs in processing order.
pub fn order_new_esrs(esrs: &[Esr], founding: &BTreeSet<PartnerId>) -> Result<Vec<Esr>> {
    let new: Vec<Esr> = esrs
        .iter()
        .filter(|e| !founding.contains(&e.home))
        .copied()
        .collect();
    if let Some(missing) = new.iter().find(|e| e.visits.is_none()) {
        return Err(Error::MissingData(missing.id));
    }
    let mut homes: Vec<PartnerId> = Vec::new();
    for e in &new {
        if !homes.contains(&e.home) {
            homes.push(e.home);
        }
    }
    homes.sort_by(|&a, &b| {
        total_mobility(b, &new)
            .cmp(&total_mobility(a, &new))
            .then(a.cmp(&b))
    });
    Ok(homes
        .into_iter()
        .flat_map(|h| new.iter().filter(move |e| e.home == h).copied())
        .collect())
}

/// Every ordered pair of distinct current members, excluding the ESR's home.
pub fn candidate_assignments(net: &Network, esr: &Esr) -> Result<Vec<VisitAssignment>> {
    let hosts: Vec<PartnerId> = net
        .partners()
        .iter()
        .copied()
        .filter(|&p| p != esr.home)
        .collect();
    if hosts.len() < 2 {
        return Err(Error::Infeasible {
            esr: esr.id,
            eligible: hosts.len(),
        });
    }
    let mut out = Vec::with_capacity(hosts.len() * (hosts.len() - 1));
    for &a in &hosts {
        for &b in &hosts {
            if a != b {
                out.push(VisitAssignment {
                    esr: esr.id,
                    host_a: a,
                    host_b: b,
                });
            }
        }
    }
    Ok(out)
}

/// Total order used to pick among candidates: smaller objective first, then
/// smaller host pair.
pub fn candidate_order<T: Scalar>(
    x: (&T, &VisitAssignment),
    y: (&T, &VisitAssignment),
) -> Ordering {
    x.0.partial_cmp(y.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| x.1.hosts().cmp(&y.1.hosts()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement<T> {
    pub assignment: VisitAssignment,
    pub network: Network,
    pub mean: T,
    pub candidates: usize,
    /// Losing candidates whose mean matched the winner within
    /// [`TIE_TOLERANCE`].
    pub ties: Vec<VisitAssignment>,
}

pub fn place_esr<T: Scalar>(
    net: &Network,
    esr: &Esr,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<Placement<T>> {
    let candidates = candidate_assignments(net, esr)?;
    place_esr_among(net, esr, roster, params, &candidates)
}

/// Evaluates `candidates` in the given order and keeps the best one.
pub fn place_esr_among<T: Scalar>(
    net: &Network,
    esr: &Esr,
    roster: &Roster,
    params: &PayoffParams<T>,
    candidates: &[VisitAssignment],
) -> Result<Placement<T>> {
    let mut scored: Vec<(T, VisitAssignment, Network)> = Vec::with_capacity(candidates.len());
    for a in candidates {
        let expanded = apply_to(net, a, esr)?;
        let (_, w) = weighted_shortest(&expanded, roster, params)?;
        match mean_weighted_distance(&w) {
            Ok(mean) => scored.push((mean, *a, expanded)),
            Err(Error::Disconnected(..)) => continue,
            Err(e) => return Err(e),
        }
    }
    let best = scored
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| candidate_order((&x.0, &x.1), (&y.0, &y.1)))
        .map(|(i, _)| i);
    let Some(best) = best else {
        let gap = all_gap(net);
        return Err(Error::Disconnected(gap.0, gap.1));
    };
    let (mean, assignment, network) = scored.swap_remove(best);
    let mut ties: Vec<VisitAssignment> = scored
        .iter()
        .filter(|(m, _, _)| nearly_equal(m, &mean, TIE_TOLERANCE))
        .map(|(_, a, _)| *a)
        .collect();
    ties.sort();
    Ok(Placement {
        assignment,
        network,
        mean,
        candidates: candidates.len(),
        ties,
    })
}

fn all_gap(net: &Network) -> (PartnerId, PartnerId) {
    let ids: Vec<_> = net.partners().iter().copied().collect();
    (ids[0], *ids.last().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacementStep<T> {
    pub assignment: VisitAssignment,
    pub mean: T,
    pub candidates: usize,
    pub ties: Vec<VisitAssignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPlan<T> {
    pub steps: Vec<PlacementStep<T>>,
    pub network: Network,
}

impl<T: Scalar> ExpansionPlan<T> {
    pub fn assignments(&self) -> Vec<VisitAssignment> {
        self.steps.iter().map(|s| s.assignment).collect()
    }

    pub fn trace(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.mean.clone()).collect()
    }

    pub fn tie_events(&self) -> impl Iterator<Item = &PlacementStep<T>> {
        self.steps.iter().filter(|s| !s.ties.is_empty())
    }
}

/// Orders the non-founding ESRs and places them one at a time.
pub fn expand<T: Scalar>(
    founding: &Network,
    esrs: &[Esr],
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<ExpansionPlan<T>> {
    let ordered = order_new_esrs(esrs, founding.partners())?;
    expand_sequence(founding, &ordered, roster, params)
}

/// Places ESRs exactly in the order given.
pub fn expand_sequence<T: Scalar>(
    founding: &Network,
    ordered: &[Esr],
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<ExpansionPlan<T>> {
    let mut network = founding.clone();
    let mut steps = Vec::with_capacity(ordered.len());
    for esr in ordered {
        let placed = place_esr(&network, esr, roster, params)?;
        steps.push(PlacementStep {
            assignment: placed.assignment,
            mean: placed.mean,
            candidates: placed.candidates,
            ties: placed.ties,
        });
        network = placed.network;
    }
    Ok(ExpansionPlan { steps, network })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HubReport {
    pub degrees: BTreeMap<PartnerId, usize>,
    /// Descending degree, ties by ascending id.
    pub ranking: Vec<PartnerId>,
    /// Some partner is adjacent to every other non-founding partner.
    pub star: bool,
    /// Highest-ranked partner satisfying the star condition.
    pub center: Option<PartnerId>,
    /// No non-founding partners: the star flag holds vacuously.
    pub degenerate: bool,
}

pub fn hub_report(net: &Network, founding: &BTreeSet<PartnerId>) -> HubReport {
    let degrees: BTreeMap<PartnerId, usize> =
        net.partners().iter().map(|&p| (p, net.degree(p))).collect();
    let mut ranking: Vec<PartnerId> = degrees.keys().copied().collect();
    ranking.sort_by(|a, b| degrees[b].cmp(&degrees[a]).then(a.cmp(b)));
    let new: Vec<PartnerId> = net
        .partners()
        .iter()
        .copied()
        .filter(|p| !founding.contains(p))
        .collect();
    let center = ranking.iter().copied().find(|&c| {
        let adj = net.neighbors(c);
        new.iter().all(|&p| p == c || adj.contains(&p))
    });
    HubReport {
        degrees,
        ranking,
        star: center.is_some(),
        center,
        degenerate: new.is_empty(),
    }
}
