//! PCA and Euclidean single-linkage clustering of partners and ESRs.
//!
//! Feature construction is fixed by [`FEATURE_VERSION`]:
//! partners are described by their weighted-distance row, degree and
//! payoff; ESRs by the months they spend at each partner. Columns are
//! z-scored and constant columns are dropped before PCA.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use nalgebra::{DMatrix, RealField, SymmetricEigen};
use serde::Serialize;

use crate::efficiency::PayoffReport;
use crate::error::{Error, Result};
use crate::model::{Esr, Network, PartnerId, PayoffParams, Roster, VisitAssignment};
use crate::paths::{weighted_matrix, DistanceMatrix};
use crate::scalar::Scalar;

pub const FEATURE_VERSION: &str = "features-v1";

/// Scalars usable for dense linear algebra.
pub trait Real: Scalar + RealField + Copy {}

impl<T: Scalar + RealField + Copy> Real for T {}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T: Real> {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: DMatrix<T>,
    /// Columns removed by standardization because they were constant.
    pub dropped: Vec<String>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(rows: Vec<String>, cols: Vec<String>, values: DMatrix<T>) -> Result<Self> {
        if values.nrows() != rows.len() || values.ncols() != cols.len() {
            return Err(Error::InvalidInput(format!(
                "feature matrix is {}x{} but has {} row and {} column labels",
                values.nrows(),
                values.ncols(),
                rows.len(),
                cols.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature matrix has non-finite entries".into()));
        }
        Ok(FeatureMatrix {
            rows,
            cols,
            values,
            dropped: Vec::new(),
        })
    }

    pub fn row_values(&self, label: &str) -> Option<Vec<T>> {
        let i = self.rows.iter().position(|r| r == label)?;
        Some(self.values.row(i).iter().copied().collect())
    }

    /// Z-scores every column (sample standard deviation) and drops columns
    /// whose spread is zero.
    pub fn standardized(&self) -> FeatureMatrix<T> {
        let n = self.values.nrows();
        let denom = T::from_count(n.saturating_sub(1).max(1));
        let mut keep = Vec::new();
        let mut cols = Vec::new();
        let mut dropped = self.dropped.clone();
        for (j, label) in self.cols.iter().enumerate() {
            let col = self.values.column(j);
            let mean = col.mean();
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).fold(T::zero(), |a, b| a + b)
                / denom;
            let sd = var.sqrt();
            let scale = mean.abs().max(T::one());
            if sd <= scale * T::from_f64(1e-12).unwrap() {
                dropped.push(label.clone());
                continue;
            }
            keep.push(col.map(|v| (v - mean) / sd));
            cols.push(label.clone());
        }
        let values = if keep.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&keep)
        };
        FeatureMatrix {
            rows: self.rows.clone(),
            cols,
            values,
            dropped,
        }
    }
}

/// Raw partner features: weighted-distance row, degree, payoff.
pub fn partner_features_raw<T: Real>(
    net: &Network,
    roster: &Roster,
    d: &DistanceMatrix<T>,
    report: &PayoffReport<T>,
    params: &PayoffParams<T>,
) -> Result<FeatureMatrix<T>> {
    if let Some((a, b)) = d.first_gap() {
        return Err(Error::Disconnected(a, b));
    }
    let w = weighted_matrix(d, roster, params)?;
    let ids = w.ids();
    let n = ids.len();
    let mut values = DMatrix::zeros(n, n + 2);
    for i in 0..n {
        for j in 0..n {
            values[(i, j)] = *w.at(i, j).expect("connected");
        }
        values[(i, n)] = T::from_count(net.degree(ids[i]));
        values[(i, n + 1)] = *report
            .payoff(ids[i])
            .ok_or_else(|| Error::InvalidInput(format!("no payoff for {}", ids[i])))?;
    }
    let mut cols: Vec<String> = ids.iter().map(|p| format!("w_{p}")).collect();
    cols.push("degree".into());
    cols.push("payoff".into());
    FeatureMatrix::new(ids.iter().map(ToString::to_string).collect(), cols, values)
}

pub fn partner_features<T: Real>(
    net: &Network,
    roster: &Roster,
    d: &DistanceMatrix<T>,
    report: &PayoffReport<T>,
    params: &PayoffParams<T>,
) -> Result<FeatureMatrix<T>> {
    Ok(partner_features_raw(net, roster, d, report, params)?.standardized())
}

/// Raw ESR features: months each ESR spends at each of `P1..=P{partner_count}`.
///
/// Founding ESR `k` is the `k`-th row of `founding_table`, homed at
/// `founding_ids[k]`; the rest come from the placed assignments.
pub fn esr_features_raw<T: Real>(
    assignments: &[VisitAssignment],
    esrs: &[Esr],
    founding_table: &[Vec<i64>],
    founding_ids: &[PartnerId],
    partner_count: usize,
) -> Result<FeatureMatrix<T>> {
    let rows_n = founding_table.len() + assignments.len();
    let mut values = DMatrix::zeros(rows_n, partner_count);
    let mut rows = Vec::with_capacity(rows_n);
    let col_of = |p: PartnerId| -> Result<usize> {
        let j = (p.0 as usize).wrapping_sub(1);
        if j < partner_count {
            Ok(j)
        } else {
            Err(Error::InvalidInput(format!("{p} outside partner range")))
        }
    };
    for (k, row) in founding_table.iter().enumerate() {
        rows.push(format!("ESR{}", k + 1));
        for (j, &months) in row.iter().enumerate() {
            values[(k, col_of(founding_ids[j])?)] = T::from_i64(months).unwrap();
        }
    }
    for (r, a) in assignments.iter().enumerate() {
        let esr = esrs
            .iter()
            .find(|e| e.id == a.esr)
            .ok_or_else(|| Error::InvalidInput(format!("unknown {}", a.esr)))?;
        let (first, second) = esr.lengths()?;
        let k = founding_table.len() + r;
        rows.push(a.esr.to_string());
        values[(k, col_of(a.host_a)?)] += T::from_months(first);
        values[(k, col_of(a.host_b)?)] += T::from_months(second);
    }
    let cols = (1..=partner_count).map(|i| format!("P{i}")).collect();
    FeatureMatrix::new(rows, cols, values)
}

pub fn esr_features<T: Real>(
    assignments: &[VisitAssignment],
    esrs: &[Esr],
    founding_table: &[Vec<i64>],
    founding_ids: &[PartnerId],
    partner_count: usize,
) -> Result<FeatureMatrix<T>> {
    Ok(
        esr_features_raw(assignments, esrs, founding_table, founding_ids, partner_count)?
            .standardized(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult<T: Real> {
    /// Top-k eigenvalues, descending.
    pub eigenvalues: Vec<T>,
    /// Every eigenvalue of the covariance matrix, descending.
    pub spectrum: Vec<T>,
    /// `k × cols`, one unit-norm component per row.
    pub components: DMatrix<T>,
    /// `rows × k` projections of the centered data.
    pub scores: DMatrix<T>,
    pub explained_ratio: Vec<T>,
    pub means: Vec<T>,
}

impl<T: Real> PcaResult<T> {
    /// Maps scores back to the original feature space.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut x = &self.scores * &self.components;
        for (j, &m) in self.means.iter().enumerate() {
            x.column_mut(j).add_scalar_mut(m);
        }
        x
    }
}

pub fn covariance<T: Real>(values: &DMatrix<T>) -> (DMatrix<T>, Vec<T>) {
    let n = values.nrows();
    let means: Vec<T> = values.column_iter().map(|c| c.mean()).collect();
    let mut centered = values.clone();
    for (j, &m) in means.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-m);
    }
    let cov = centered.transpose() * &centered / T::from_count(n - 1);
    (cov, means)
}

pub fn pca<T: Real>(features: &FeatureMatrix<T>, k: usize) -> Result<PcaResult<T>> {
    let (rows, cols) = features.values.shape();
    if rows < 2 {
        return Err(Error::InvalidInput(format!("PCA needs at least two rows, got {rows}")));
    }
    let max_k = (rows - 1).min(cols);
    if k == 0 || k > max_k {
        return Err(Error::InvalidInput(format!(
            "k = {k} out of range 1..={max_k}"
        )));
    }
    let (cov, means) = covariance(&features.values);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let spectrum: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut components = DMatrix::zeros(k, cols);
    for (r, &i) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(i);
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| {
                a.1.abs()
                    .partial_cmp(&b.1.abs())
                    .unwrap_or(Ordering::Equal)
                    .then(b.0.cmp(&a.0))
            })
            .map(|(j, _)| j)
            .unwrap_or(0);
        let sign = if v[lead] < T::zero() { -T::one() } else { T::one() };
        for j in 0..cols {
            components[(r, j)] = v[j] * sign;
        }
    }
    let mut centered = features.values.clone();
    for (j, &m) in means.iter().enumerate() {
        centered.column_mut(j).add_scalar_mut(-m);
    }
    let scores = &centered * components.transpose();
    let total = spectrum
        .iter()
        .map(|&l| l.max(T::zero()))
        .fold(T::zero(), |a, b| a + b);
    let eigenvalues: Vec<T> = spectrum[..k].to_vec();
    let explained_ratio = eigenvalues
        .iter()
        .map(|&l| {
            if total > T::zero() {
                l.max(T::zero()) / total
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(PcaResult {
        eigenvalues,
        spectrum,
        components,
        scores,
        explained_ratio,
        means,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub threshold: f64,
    /// Merges performed, as `(row, row, distance)`.
    pub merges: Vec<(usize, usize, f64)>,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.labels.iter().collect::<BTreeSet<_>>().len()
    }

    /// The partition as sorted member lists, independent of label values.
    pub fn partition(&self) -> BTreeSet<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); self.cluster_count()];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups.into_iter().collect()
    }
}

pub fn euclidean<T: Real>(points: &DMatrix<T>, i: usize, j: usize) -> T {
    (points.row(i) - points.row(j)).norm()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Single-linkage agglomeration of the rows of `points`, merging while the
/// closest inter-cluster Euclidean distance is below `threshold`.
///
/// Labels are canonical: clusters are numbered by their smallest row index.
pub fn cluster<T: Real>(points: &DMatrix<T>, threshold: T) -> Result<Clustering> {
    if threshold.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(Error::InvalidInput("cluster threshold must be positive".into()));
    }
    let n = points.nrows();
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((euclidean(points, i, j), i, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut parent: Vec<usize> = (0..n).collect();
    let mut merges = Vec::new();
    for (dist, i, j) in pairs {
        if dist >= threshold {
            break;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
            merges.push((i, j, dist.to_f64_lossy()));
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut root_label = vec![usize::MAX; n];
    for (i, label) in labels.iter_mut().enumerate() {
        let r = find(&mut parent, i);
        if root_label[r] == usize::MAX {
            root_label[r] = next;
            next += 1;
        }
        *label = root_label[r];
    }
    Ok(Clustering {
        labels,
        threshold: threshold.to_f64_lossy(),
        merges,
    })
}

/// Whether the given rows sit closer together than a typical pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohesionFinding {
    pub group_max_distance: f64,
    pub median_distance: f64,
    pub holds: bool,
}

/// Checks that every pairwise distance within `group` is below the median
/// pairwise distance over all rows.
pub fn group_cohesion<T: Real>(points: &DMatrix<T>, group: &[usize]) -> CohesionFinding {
    let n = points.nrows();
    let mut all: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            all.push(euclidean(points, i, j).to_f64_lossy());
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let median = match all.len() {
        0 => 0.0,
        m if m % 2 == 1 => all[m / 2],
        m => 0.5 * (all[m / 2 - 1] + all[m / 2]),
    };
    let mut group_max: f64 = 0.0;
    for (a, &i) in group.iter().enumerate() {
        for &j in &group[a + 1..] {
            group_max = group_max.max(euclidean(points, i, j).to_f64_lossy());
        }
    }
    CohesionFinding {
        group_max_distance: group_max,
        median_distance: median,
        holds: group_max < median,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::payoff_report;
    use crate::model::{founding_network, Partner, PartnerKind};
    use crate::paths::all_pairs_shortest;

    fn p(i: u16) -> PartnerId {
        PartnerId(i)
    }

    fn table1() -> Vec<Vec<i64>> {
        vec![
            vec![0, 0, 8, 3],
            vec![2, 0, 16, 0],
            vec![8, 8, 0, 0],
            vec![15, 0, 3, 0],
        ]
    }

    fn founding_roster() -> Roster {
        use PartnerKind::*;
        Roster::new(
            [Experimental, Experimental, Experimental, Computational]
                .iter()
                .enumerate()
                .map(|(i, &kind)| Partner {
                    id: p(i as u16 + 1),
                    kind,
                    founding: true,
                })
                .collect(),
        )
        .unwrap()
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    #[test]
    fn founding_partner_features_shape() {
        let net = founding_network(&table1()).unwrap();
        let params = PayoffParams::<f64>::default();
        let d = all_pairs_shortest(&net);
        let report = payoff_report(&net, &founding_roster(), &params).unwrap();
        let raw = partner_features_raw(&net, &founding_roster(), &d, &report, &params).unwrap();
        assert_eq!(raw.values.shape(), (4, 6));
        let f = raw.standardized();
        assert_eq!(f.values.shape(), (4, 6));
        assert!(f.dropped.is_empty());
        let r = pca(&f, 3).unwrap();
        let sum: f64 = r.explained_ratio.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let f = FeatureMatrix::new(labels(3), vec!["a".into(), "b".into()], m)
            .unwrap()
            .standardized();
        assert_eq!(f.cols, vec!["a".to_string()]);
        assert_eq!(f.dropped, vec!["b".to_string()]);
    }

    #[test]
    fn identical_rows_give_zero_covariance() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let f = FeatureMatrix::new(labels(3), vec!["a".into(), "b".into()], m).unwrap();
        let (cov, _) = covariance(&f.values);
        assert!(cov.iter().all(|&c| c == 0.0));
        assert_eq!(f.standardized().values.ncols(), 0);
    }

    #[test]
    fn esr_rows_from_founding_table() {
        let f: FeatureMatrix<f64> =
            esr_features_raw(&[], &[], &table1(), &[p(1), p(2), p(3), p(4)], 4).unwrap();
        assert_eq!(f.values.nrows(), 4);
        assert_eq!(f.row_values("ESR4").unwrap(), vec![15.0, 0.0, 3.0, 0.0]);
        assert_eq!(f.row_values("ESR2").unwrap(), vec![2.0, 0.0, 16.0, 0.0]);
    }

    #[test]
    fn line_data_is_rank_one() {
        let xs = [-2.0, -1.0, 0.5, 1.0, 3.0];
        let m = DMatrix::from_fn(5, 2, |i, j| if j == 0 { xs[i] } else { 2.0 * xs[i] });
        let f = FeatureMatrix::new(labels(5), vec!["x".into(), "y".into()], m).unwrap();
        let r = pca(&f, 2).unwrap();
        let s = 5f64.sqrt();
        assert!((r.components[(0, 0)] - 1.0 / s).abs() < 1e-9);
        assert!((r.components[(0, 1)] - 2.0 / s).abs() < 1e-9);
        assert!(r.eigenvalues[1].abs() < 1e-9);
    }

    #[test]
    fn pca_k_range() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 2.0]);
        let f = FeatureMatrix::new(labels(3), vec!["a".into(), "b".into()], m).unwrap();
        assert!(pca(&f, 0).is_err());
        assert!(pca(&f, 3).is_err());
        assert!(pca(&f, 2).is_ok());
    }

    #[test]
    fn clustering_thresholds() {
        let pts = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 10.0, 11.0]);
        assert_eq!(cluster(&pts, 5.0).unwrap().labels, vec![0, 0, 1, 1]);
        assert_eq!(cluster(&pts, 1e-9).unwrap().labels, vec![0, 1, 2, 3]);
        assert_eq!(cluster(&pts, 100.0).unwrap().cluster_count(), 1);
        assert!(cluster(&pts, 0.0).is_err());
    }

    #[test]
    fn cohesion_of_tight_group() {
        let pts = DMatrix::from_row_slice(5, 1, &[0.0, 0.1, 0.2, 5.0, 9.0]);
        assert!(group_cohesion(&pts, &[0, 1, 2]).holds);
        assert!(!group_cohesion(&pts, &[0, 4]).holds);
    }
}
