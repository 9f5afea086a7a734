//! Individual payoffs and network value.
//!
//! A partner earns `δ(i, j) / d(i, j)` from every other partner, where `d`
//! is the shortest distance, and pays `cost` for each of its direct links.
//! The network value is the sum of all individual payoffs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{delta_for, Network, PartnerId, PayoffParams, Roster};
use crate::paths::{all_pairs_shortest, DistanceMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffReport<T> {
    pub ids: Vec<PartnerId>,
    pub payoffs: Vec<T>,
    pub value: T,
    pub direct_links: Vec<usize>,
    /// Payoffs divided by the largest payoff; all zeros when no payoff is
    /// positive.
    pub normalized: Vec<T>,
}

impl<T: Scalar> PayoffReport<T> {
    pub fn payoff(&self, id: PartnerId) -> Option<&T> {
        self.ids.iter().position(|&p| p == id).map(|i| &self.payoffs[i])
    }

    /// Partner ids by descending payoff, ties by ascending id.
    pub fn ranking(&self) -> Vec<PartnerId> {
        let mut idx: Vec<usize> = (0..self.ids.len()).collect();
        idx.sort_by(|&a, &b| {
            self.payoffs[b]
                .partial_cmp(&self.payoffs[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.ids[a].cmp(&self.ids[b]))
        });
        idx.into_iter().map(|i| self.ids[i]).collect()
    }
}

fn kind_of(roster: &Roster, id: PartnerId) -> Result<crate::model::PartnerKind> {
    roster
        .kind(id)
        .ok_or_else(|| Error::InvalidInput(format!("no partner kind known for {id}")))
}

pub fn individual_payoff<T: Scalar>(
    net: &Network,
    roster: &Roster,
    i: PartnerId,
    d: &DistanceMatrix<T>,
    params: &PayoffParams<T>,
) -> Result<T> {
    let row = d
        .index_of(i)
        .filter(|_| net.contains(i))
        .ok_or_else(|| Error::InvalidInput(format!("{i} is not in the network")))?;
    let own = kind_of(roster, i)?;
    let mut benefit = T::zero();
    for (col, &j) in d.ids().iter().enumerate() {
        if col == row {
            continue;
        }
        let dist = d.at(row, col).ok_or(Error::Disconnected(i, j))?;
        benefit = benefit + delta_for(own, kind_of(roster, j)?, params) / dist.clone();
    }
    let links = T::from_count(net.degree(i));
    Ok(benefit - links * params.cost.clone())
}

pub fn network_value<T: Scalar>(
    net: &Network,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<T> {
    payoff_report(net, roster, params).map(|r| r.value)
}

pub fn payoff_report<T: Scalar>(
    net: &Network,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<PayoffReport<T>> {
    let d = all_pairs_shortest::<T>(net);
    payoff_report_with(net, roster, &d, params)
}

/// As [`payoff_report`], reusing an already computed distance matrix.
pub fn payoff_report_with<T: Scalar>(
    net: &Network,
    roster: &Roster,
    d: &DistanceMatrix<T>,
    params: &PayoffParams<T>,
) -> Result<PayoffReport<T>> {
    let ids: Vec<PartnerId> = d.ids().to_vec();
    let payoffs = ids
        .iter()
        .map(|&i| individual_payoff(net, roster, i, d, params))
        .collect::<Result<Vec<T>>>()?;
    let value = payoffs.iter().cloned().fold(T::zero(), |acc, u| acc + u);
    let direct_links = ids.iter().map(|&i| net.degree(i)).collect();
    let max = payoffs.iter().cloned().fold(T::zero(), T::max_of);
    let normalized = if max > T::zero() {
        payoffs.iter().map(|u| u.clone() / max.clone()).collect()
    } else {
        vec![T::zero(); payoffs.len()]
    };
    Ok(PayoffReport {
        ids,
        payoffs,
        value,
        direct_links,
        normalized,
    })
}
