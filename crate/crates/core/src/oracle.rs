//! Exhaustive search over joint ESR placements.
//!
//! ESRs are placed in a fixed order and hosts are limited to partners that
//! are members of the network at each step, exactly as in the greedy
//! expansion. The oracle enumerates the full Cartesian product of per-step
//! candidates, so its optimum bounds what the greedy can reach.

use serde::Serialize;

use crate::efficiency::network_value;
use crate::error::{Error, Result};
use crate::expansion::{candidate_assignments, expand_sequence, place_esr};
use crate::model::{apply_to, delta_for, Esr, Network, PartnerId, PayoffParams, Roster, VisitAssignment};
use crate::paths::{mean_weighted_distance, weighted_shortest};
use crate::scalar::Scalar;

/// Largest joint space the oracle will enumerate.
pub const SPACE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MinMeanWeightedDistance,
    MaxNetworkValue,
}

impl Objective {
    fn better<T: Scalar>(self, candidate: &T, incumbent: &T) -> bool {
        match self {
            Objective::MinMeanWeightedDistance => candidate < incumbent,
            Objective::MaxNetworkValue => candidate > incumbent,
        }
    }

    pub fn evaluate<T: Scalar>(
        self,
        net: &Network,
        roster: &Roster,
        params: &PayoffParams<T>,
    ) -> Result<T> {
        match self {
            Objective::MinMeanWeightedDistance => {
                let (_, w) = weighted_shortest(net, roster, params)?;
                mean_weighted_distance(&w)
            }
            Objective::MaxNetworkValue => network_value(net, roster, params),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    pub objective: Objective,
    pub assignments: Vec<VisitAssignment>,
    pub network: Network,
    pub best: T,
    /// Product of per-step candidate counts.
    pub search_space: u128,
    /// Complete joint placements actually evaluated.
    pub visited: u128,
    pub greedy: T,
    /// `best - greedy`; never positive for minimization, never negative for
    /// maximization.
    pub greedy_gap: T,
}

/// Size of the joint space for placing `esrs` in order onto `founding`.
pub fn search_space_size(founding: &Network, esrs: &[Esr]) -> u128 {
    let mut members = founding.partners().clone();
    let mut size: u128 = 1;
    for e in esrs {
        let eligible = members.iter().filter(|&&p| p != e.home).count() as u128;
        size = size.saturating_mul(eligible * eligible.saturating_sub(1));
        members.insert(e.home);
    }
    size
}

struct Search<'a, T> {
    esrs: &'a [Esr],
    roster: &'a Roster,
    params: &'a PayoffParams<T>,
    objective: Objective,
    path: Vec<VisitAssignment>,
    best: Option<(T, Vec<VisitAssignment>, Network)>,
    visited: u128,
}

impl<T: Scalar> Search<'_, T> {
    fn descend(&mut self, net: &Network, step: usize) -> Result<()> {
        if step == self.esrs.len() {
            self.visited += 1;
            let score = match self.objective.evaluate(net, self.roster, self.params) {
                Ok(s) => s,
                Err(Error::Disconnected(..)) => return Ok(()),
                Err(e) => return Err(e),
            };
            // Candidates arrive in lexicographic order, so keeping only strict
            // improvements retains the smallest sequence among equals.
            let improves = self
                .best
                .as_ref()
                .is_none_or(|(b, _, _)| self.objective.better(&score, b));
            if improves {
                self.best = Some((score, self.path.clone(), net.clone()));
            }
            return Ok(());
        }
        let esr = &self.esrs[step];
        for a in candidate_assignments(net, esr)? {
            let next = apply_to(net, &a, esr)?;
            self.path.push(a);
            self.descend(&next, step + 1)?;
            self.path.pop();
        }
        Ok(())
    }
}

pub fn exhaustive_expand<T: Scalar>(
    founding: &Network,
    esrs: &[Esr],
    roster: &Roster,
    params: &PayoffParams<T>,
    objective: Objective,
) -> Result<OracleResult<T>> {
    let size = search_space_size(founding, esrs);
    if size > SPACE_LIMIT {
        return Err(Error::SpaceTooLarge {
            size,
            limit: SPACE_LIMIT,
        });
    }
    let mut search = Search {
        esrs,
        roster,
        params,
        objective,
        path: Vec::with_capacity(esrs.len()),
        best: None,
        visited: 0,
    };
    search.descend(founding, 0)?;
    let visited = search.visited;
    let Some((best, assignments, network)) = search.best else {
        let ids: Vec<_> = founding.partners().iter().copied().collect();
        return Err(Error::Disconnected(ids[0], *ids.last().unwrap()));
    };
    let plan = expand_sequence(founding, esrs, roster, params)?;
    let greedy = objective.evaluate(&plan.network, roster, params)?;
    Ok(OracleResult {
        objective,
        assignments,
        network,
        greedy_gap: best.clone() - greedy.clone(),
        best,
        search_space: size,
        visited,
        greedy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyGap<T> {
    pub greedy_mean: T,
    pub greedy_value: T,
    pub distance: OracleResult<T>,
    pub value: OracleResult<T>,
}

impl<T: Scalar> GreedyGap<T> {
    pub fn distance_gap(&self) -> &T {
        &self.distance.greedy_gap
    }

    pub fn value_gap(&self) -> &T {
        &self.value.greedy_gap
    }
}

/// Runs both oracles against the greedy plan for the same ordered ESRs.
pub fn greedy_gap<T: Scalar>(
    founding: &Network,
    esrs: &[Esr],
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<GreedyGap<T>> {
    let distance = exhaustive_expand(
        founding,
        esrs,
        roster,
        params,
        Objective::MinMeanWeightedDistance,
    )?;
    let value = exhaustive_expand(founding, esrs, roster, params, Objective::MaxNetworkValue)?;
    Ok(GreedyGap {
        greedy_mean: distance.greedy.clone(),
        greedy_value: value.greedy.clone(),
        distance,
        value,
    })
}

/// True iff the greedy placement agrees with an independent enumeration.
pub fn verify_step<T: Scalar>(
    net: &Network,
    esr: &Esr,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> bool {
    verify_step_with(net, esr, roster, params, |n, e, r, p| {
        place_esr(n, e, r, p).map(|placed| placed.assignment)
    })
}

/// As [`verify_step`], checking an arbitrary chooser.
pub fn verify_step_with<T: Scalar, F>(
    net: &Network,
    esr: &Esr,
    roster: &Roster,
    params: &PayoffParams<T>,
    chooser: F,
) -> bool
where
    F: Fn(&Network, &Esr, &Roster, &PayoffParams<T>) -> Result<VisitAssignment>,
{
    match (
        chooser(net, esr, roster, params),
        independent_choice(net, esr, roster, params),
    ) {
        (Ok(a), Some(b)) => a == b,
        _ => false,
    }
}

/// Brute-force reference: its own candidate loop, Dijkstra distances and
/// pair mean, sharing nothing with the greedy path except the data types.
pub fn independent_choice<T: Scalar>(
    net: &Network,
    esr: &Esr,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Option<VisitAssignment> {
    let (first, second) = esr.visits?;
    let members: Vec<PartnerId> = net.partners().iter().copied().collect();
    let mut best: Option<(T, PartnerId, PartnerId)> = None;
    for &a in &members {
        for &b in &members {
            if a == b || a == esr.home || b == esr.home {
                continue;
            }
            let mut g = net.clone();
            g.add_months(esr.home, a, first).ok()?;
            g.add_months(esr.home, b, second).ok()?;
            let Some(mean) = dijkstra_mean(&g, roster, params) else {
                continue;
            };
            let take = match &best {
                None => true,
                Some((m, ba, bb)) => mean < *m || (mean == *m && (a, b) < (*ba, *bb)),
            };
            if take {
                best = Some((mean, a, b));
            }
        }
    }
    best.map(|(_, a, b)| VisitAssignment {
        esr: esr.id,
        host_a: a,
        host_b: b,
    })
}

fn dijkstra_mean<T: Scalar>(net: &Network, roster: &Roster, params: &PayoffParams<T>) -> Option<T> {
    let nodes: Vec<PartnerId> = net.partners().iter().copied().collect();
    let n = nodes.len();
    if n < 2 {
        return Some(T::zero());
    }
    let mut total = T::zero();
    for s in 0..n {
        let mut dist: Vec<Option<T>> = vec![None; n];
        let mut done = vec![false; n];
        dist[s] = Some(T::zero());
        for _ in 0..n {
            let mut u = None;
            for v in 0..n {
                if done[v] {
                    continue;
                }
                if let Some(dv) = &dist[v] {
                    if u.is_none_or(|x: usize| dist[x].as_ref().is_some_and(|dx| dv < dx)) {
                        u = Some(v);
                    }
                }
            }
            let u = u?;
            done[u] = true;
            let du = dist[u].clone()?;
            for v in 0..n {
                if let Some(m) = net.months(nodes[u], nodes[v]) {
                    let cand = du.clone() + T::one() / T::from_u32(m)?;
                    if dist[v].as_ref().is_none_or(|dv| cand < *dv) {
                        dist[v] = Some(cand);
                    }
                }
            }
        }
        for t in (s + 1)..n {
            let delta = delta_for(roster.kind(nodes[s])?, roster.kind(nodes[t])?, params);
            total = total + dist[t].clone()? / delta;
        }
    }
    Some(total / T::from_usize(n * (n - 1) / 2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{founding_network, EsrId, Partner, PartnerKind};

    fn p(i: u16) -> PartnerId {
        PartnerId(i)
    }

    fn esr(id: u16, home: u16, a: u32, b: u32) -> Esr {
        Esr::new(EsrId(id), p(home), a, b).unwrap()
    }

    fn founding() -> Network {
        founding_network(&[
            vec![0, 0, 8, 3],
            vec![2, 0, 16, 0],
            vec![8, 8, 0, 0],
            vec![15, 0, 3, 0],
        ])
        .unwrap()
    }

    fn roster() -> Roster {
        let experimental = [1, 2, 3, 7, 8, 9, 11, 14];
        Roster::new(
            (1..=14)
                .map(|i| Partner {
                    id: p(i),
                    kind: if experimental.contains(&i) {
                        PartnerKind::Experimental
                    } else {
                        PartnerKind::Computational
                    },
                    founding: i <= 4,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn space_sizes() {
        let f = founding();
        assert_eq!(search_space_size(&f, &[esr(5, 5, 9, 4)]), 12);
        assert_eq!(search_space_size(&f, &[esr(5, 5, 9, 4), esr(6, 5, 8, 6)]), 144);
        assert_eq!(search_space_size(&f, &[esr(5, 5, 9, 4), esr(7, 6, 8, 4)]), 12 * 20);
    }

    #[test]
    fn single_step_oracle_matches_greedy() {
        let params = PayoffParams::<f64>::default();
        let e = esr(5, 5, 9, 4);
        let r = exhaustive_expand(
            &founding(),
            &[e],
            &roster(),
            &params,
            Objective::MinMeanWeightedDistance,
        )
        .unwrap();
        let placed = place_esr(&founding(), &e, &roster(), &params).unwrap();
        assert_eq!(r.assignments, vec![placed.assignment]);
        assert_eq!(r.greedy_gap, 0.0);
        assert_eq!(r.visited, 12);
    }

    #[test]
    fn space_guard() {
        let esrs: Vec<Esr> = (0..6).map(|i| esr(5 + i, 5 + i, 5, 3)).collect();
        let err = exhaustive_expand(
            &founding(),
            &esrs,
            &roster(),
            &PayoffParams::<f64>::default(),
            Objective::MaxNetworkValue,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SpaceTooLarge { size, .. } if size == 12 * 20 * 30 * 42 * 56 * 72));
    }

    #[test]
    fn verify_detects_mutated_chooser() {
        let params = PayoffParams::<f64>::default();
        let e = esr(5, 5, 9, 4);
        assert!(verify_step(&founding(), &e, &roster(), &params));
        let flipped = |n: &Network, e: &Esr, r: &Roster, p: &PayoffParams<f64>| {
            place_esr(n, e, r, p).map(|x| VisitAssignment {
                esr: x.assignment.esr,
                host_a: x.assignment.host_b,
                host_b: x.assignment.host_a,
            })
        };
        assert!(!verify_step_with(&founding(), &e, &roster(), &params, flipped));
    }

    #[test]
    fn tie_heavy_instance_agrees() {
        // all-equal founding visits and symmetric lengths
        let f = founding_network(&[
            vec![0, 5, 5, 5],
            vec![5, 0, 5, 5],
            vec![5, 5, 0, 5],
            vec![5, 5, 5, 0],
        ])
        .unwrap();
        let params = PayoffParams::<f64>::unchecked(1.0, 1.0, 1.0, 1.0);
        assert!(verify_step(&f, &esr(5, 5, 5, 5), &roster(), &params));
    }
}
