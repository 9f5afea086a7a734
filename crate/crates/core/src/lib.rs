//! Construction and analysis of efficient collaboration networks.
//!
//! Partners are joined by researcher visits; an edge's distance is the
//! inverse of its total visit months. Starting from a founding network, new
//! partners are linked greedily so that the mean payoff-weighted shortest
//! distance stays as small as possible. Small instances can be certified
//! against an exhaustive search, and finished networks can be scored,
//! summarised and analysed with PCA.
//!
//! The numeric core is generic over [`Scalar`]. The aliases below fix it to
//! `f64` for everyday use and to exact rationals for verification.

pub mod analysis;
pub mod dataset;
pub mod dot;
pub mod efficiency;
pub mod error;
pub mod expansion;
pub mod model;
pub mod oracle;
pub mod paths;
pub mod report;
pub mod run;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{Esr, EsrId, Network, Partner, PartnerId, PartnerKind, Roster, VisitAssignment};
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Exact = num_rational::BigRational;

pub type PayoffParams = model::PayoffParams<f64>;
pub type ExactPayoffParams = model::PayoffParams<Exact>;

pub type DistanceMatrix = paths::DistanceMatrix<f64>;
pub type ExactDistanceMatrix = paths::DistanceMatrix<Exact>;
pub type WeightedMatrix = paths::WeightedMatrix<f64>;
pub type ExactWeightedMatrix = paths::WeightedMatrix<Exact>;
pub type NetworkMetrics = paths::NetworkMetrics<f64>;

pub type PayoffReport = efficiency::PayoffReport<f64>;
pub type ExactPayoffReport = efficiency::PayoffReport<Exact>;

pub type ExpansionPlan = expansion::ExpansionPlan<f64>;
pub type ExactExpansionPlan = expansion::ExpansionPlan<Exact>;
pub type Placement = expansion::Placement<f64>;

pub type OracleResult = oracle::OracleResult<f64>;
pub type GreedyGap = oracle::GreedyGap<f64>;

pub type FeatureMatrix = analysis::FeatureMatrix<f64>;
pub type PcaResult = analysis::PcaResult<f64>;
