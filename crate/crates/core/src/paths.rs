//! All-pairs shortest distances and the payoff-weighted distance matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{delta_for, Network, PartnerId, PayoffParams, Roster};
use crate::scalar::Scalar;

/// Square matrix over a sorted set of partners. `None` marks a pair with no
/// connecting path.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix<T> {
    ids: Vec<PartnerId>,
    entries: Vec<Option<T>>,
}

/// Shortest path distances `d(i, j)`.
pub type DistanceMatrix<T> = PairMatrix<T>;

/// Shortest distances divided by the endpoint payoff constant.
pub type WeightedMatrix<T> = PairMatrix<T>;

impl<T: Scalar> PairMatrix<T> {
    fn empty(ids: Vec<PartnerId>) -> Self {
        let n = ids.len();
        let mut entries = vec![None; n * n];
        for i in 0..n {
            entries[i * n + i] = Some(T::zero());
        }
        PairMatrix { ids, entries }
    }

    pub fn ids(&self) -> &[PartnerId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Fewer than two partners: there are no pairs to average over.
    pub fn is_degenerate(&self) -> bool {
        self.ids.len() < 2
    }

    pub fn index_of(&self, id: PartnerId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn at(&self, i: usize, j: usize) -> Option<&T> {
        self.entries[i * self.ids.len() + j].as_ref()
    }

    pub fn get(&self, a: PartnerId, b: PartnerId) -> Option<&T> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        self.at(i, j)
    }

    /// Unordered distinct pairs `(i, j, value)` with `i < j`, row-major.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, Option<&T>)> + '_ {
        let n = self.ids.len();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j, self.at(i, j))))
    }

    pub fn row(&self, i: usize) -> &[Option<T>] {
        let n = self.ids.len();
        &self.entries[i * n..(i + 1) * n]
    }

    /// First disconnected pair, if any.
    pub fn first_gap(&self) -> Option<(PartnerId, PartnerId)> {
        self.upper_pairs()
            .find(|(_, _, v)| v.is_none())
            .map(|(i, j, _)| (self.ids[i], self.ids[j]))
    }

    pub fn is_connected(&self) -> bool {
        self.first_gap().is_none()
    }

    pub fn to_f64(&self) -> PairMatrix<f64> {
        PairMatrix {
            ids: self.ids.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| e.as_ref().map(Scalar::to_f64_lossy))
                .collect(),
        }
    }
}

/// Floyd–Warshall over edge distances `1 / months`.
pub fn all_pairs_shortest<T: Scalar>(net: &Network) -> DistanceMatrix<T> {
    let ids: Vec<PartnerId> = net.partners().iter().copied().collect();
    let n = ids.len();
    let mut m = PairMatrix::empty(ids);
    for (a, b, months) in net.edges() {
        let (i, j) = (m.index_of(a).unwrap(), m.index_of(b).unwrap());
        let d = T::one() / T::from_months(months);
        m.entries[i * n + j] = Some(d.clone());
        m.entries[j * n + i] = Some(d);
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = m.entries[i * n + k].clone() else {
                continue;
            };
            for j in 0..n {
                let Some(kj) = &m.entries[k * n + j] else {
                    continue;
                };
                let via = ik.clone() + kj.clone();
                let cell = &mut m.entries[i * n + j];
                if cell.as_ref().is_none_or(|cur| via < *cur) {
                    *cell = Some(via);
                }
            }
        }
    }
    m
}

pub fn weighted_matrix<T: Scalar>(
    d: &DistanceMatrix<T>,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<WeightedMatrix<T>> {
    let kinds = d
        .ids
        .iter()
        .map(|&id| {
            roster
                .kind(id)
                .ok_or_else(|| Error::InvalidInput(format!("no partner kind known for {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = d.len();
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(if i == j {
                Some(T::zero())
            } else {
                d.at(i, j)
                    .map(|v| v.clone() / delta_for(kinds[i], kinds[j], params))
            });
        }
    }
    Ok(PairMatrix {
        ids: d.ids.clone(),
        entries,
    })
}

/// How the mean over a weighted matrix is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanConvention {
    /// Mean over the `n(n-1)/2` unordered distinct pairs.
    #[default]
    UnorderedPairs,
    /// Mean over all `n²` cells, diagonal included.
    AllCells,
}

pub fn mean_weighted_distance<T: Scalar>(w: &WeightedMatrix<T>) -> Result<T> {
    mean_weighted_distance_with(w, MeanConvention::UnorderedPairs)
}

/// Returns zero for a degenerate (single partner) matrix.
pub fn mean_weighted_distance_with<T: Scalar>(
    w: &WeightedMatrix<T>,
    convention: MeanConvention,
) -> Result<T> {
    if w.is_degenerate() {
        return Ok(T::zero());
    }
    let n = w.len();
    let mut sum = T::zero();
    for (i, j, v) in w.upper_pairs() {
        let v = v.ok_or(Error::Disconnected(w.ids[i], w.ids[j]))?;
        sum = sum + v.clone();
    }
    let count = match convention {
        MeanConvention::UnorderedPairs => n * (n - 1) / 2,
        MeanConvention::AllCells => {
            sum = sum.clone() + sum;
            n * n
        }
    };
    Ok(sum / T::from_count(count))
}

/// Shortest distances and their payoff-weighted version for one network.
pub fn weighted_shortest<T: Scalar>(
    net: &Network,
    roster: &Roster,
    params: &PayoffParams<T>,
) -> Result<(DistanceMatrix<T>, WeightedMatrix<T>)> {
    let d = all_pairs_shortest(net);
    let w = weighted_matrix(&d, roster, params)?;
    Ok((d, w))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkMetrics<T> {
    pub diameter: T,
    pub average_shortest_path: T,
    pub density: T,
}

pub fn metrics<T: Scalar>(net: &Network) -> Result<NetworkMetrics<T>> {
    let n = net.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "metrics need at least two partners, network has {n}"
        )));
    }
    let d = all_pairs_shortest::<T>(net);
    let mut diameter = T::zero();
    let mut sum = T::zero();
    for (i, j, v) in d.upper_pairs() {
        let v = v.ok_or(Error::Disconnected(d.ids[i], d.ids[j]))?;
        diameter = diameter.max_of(v.clone());
        sum = sum + v.clone();
    }
    let pairs = T::from_count(n * (n - 1) / 2);
    Ok(NetworkMetrics {
        diameter,
        average_shortest_path: sum / pairs.clone(),
        density: T::from_count(net.edge_count()) / pairs,
    })
}
