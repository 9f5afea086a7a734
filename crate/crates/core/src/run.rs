//! End-to-end run: resolve the dataset, expand, score, analyse, and emit a
//! JSON run-log with CSV and DOT side files.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::analysis::{self, cluster, group_cohesion, pca, CohesionFinding, FeatureMatrix, PcaResult, FEATURE_VERSION};
use crate::dataset::Dataset;
use crate::dot::export_dot;
use crate::efficiency::{payoff_report_with, PayoffReport};
use crate::error::{Error, Result};
use crate::expansion::{expand_sequence, hub_report, order_new_esrs, ExpansionPlan, HubReport};
use crate::model::{EsrId, Network, PartnerId, VisitAssignment};
use crate::oracle::greedy_gap;
use crate::paths::{metrics, weighted_matrix, all_pairs_shortest, DistanceMatrix, NetworkMetrics, WeightedMatrix};
use crate::report::{self, sig9};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFlags {
    /// Visit lengths supplied on the command line, applied before the run.
    pub visit_overrides: Vec<(EsrId, u32, u32)>,
    /// Fill remaining unknown visit lengths with the dataset placeholder.
    pub allow_placeholder: bool,
    /// Certify the greedy on the first `n` processed ESRs.
    pub oracle_esrs: Option<usize>,
    pub cluster_threshold: f64,
    pub pca_components: usize,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags {
            visit_overrides: Vec::new(),
            allow_placeholder: false,
            oracle_esrs: None,
            cluster_threshold: 1.5,
            pca_components: 2,
        }
    }
}

/// Applies overrides and, if allowed, placeholders. Fails on any visit
/// length that is still unknown.
pub fn resolve(dataset: &Dataset, flags: &RunFlags) -> Result<(Dataset, Option<(u32, u32)>)> {
    let mut ds = dataset.clone();
    for &(id, a, b) in &flags.visit_overrides {
        ds = ds.with_visits(id, a, b)?;
    }
    let mut placeholder = None;
    if flags.allow_placeholder {
        let (filled, used) = ds.with_placeholders()?;
        ds = filled;
        placeholder = used;
    }
    if let Some(&id) = ds.unknown_esrs().first() {
        return Err(Error::MissingData(id));
    }
    Ok((ds, placeholder))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub digest: String,
    pub partners: usize,
    pub researchers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedFlags {
    pub visit_overrides: Vec<(EsrId, u32, u32)>,
    pub placeholder_visits: Option<(u32, u32)>,
    pub mean_convention: &'static str,
    pub host_rule: &'static str,
    pub processing_order: &'static str,
    pub tie_rule: &'static str,
    pub feature_version: &'static str,
    pub cluster_threshold: f64,
    pub pca_components: usize,
    pub oracle_esrs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub esr: EsrId,
    pub host_a: PartnerId,
    pub host_b: PartnerId,
    pub mean_weighted_distance: f64,
    pub candidates: usize,
    pub ties: Vec<VisitAssignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeLog {
    pub a: PartnerId,
    pub b: PartnerId,
    pub months: u32,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanLog {
    pub order: Vec<EsrId>,
    pub steps: Vec<StepLog>,
    pub edges: Vec<EdgeLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffLog {
    pub partners: Vec<PartnerId>,
    pub payoffs: Vec<f64>,
    pub normalized: Vec<f64>,
    pub direct_links: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsLog {
    pub diameter: f64,
    pub average_shortest_path: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Findings {
    pub connected: bool,
    pub partners_in_network: usize,
    pub top_hub: Option<PartnerId>,
    pub star: bool,
    pub star_center: Option<PartnerId>,
    pub founding_payoffs_highest: Option<bool>,
    pub min_founding_payoff: Option<f64>,
    pub max_new_payoff: Option<f64>,
    pub tie_events: usize,
    pub deviations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleLog {
    pub esrs: Vec<EsrId>,
    pub search_space: u128,
    pub visited_distance: u128,
    pub visited_value: u128,
    pub greedy_mean: f64,
    pub greedy_value: f64,
    pub oracle_mean: f64,
    pub oracle_value: f64,
    pub distance_gap: f64,
    pub value_gap: f64,
    pub oracle_distance_assignments: Vec<VisitAssignment>,
    pub oracle_value_assignments: Vec<VisitAssignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaLog {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub dropped_columns: Vec<String>,
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub cluster_labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisLog {
    pub partners: PcaLog,
    pub researchers: Option<PcaLog>,
    pub founding_cohesion: CohesionFinding,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub tool: String,
    pub version: String,
    pub created_unix: u64,
    pub dataset: DatasetInfo,
    pub flags: ResolvedFlags,
    pub plan: PlanLog,
    pub payoffs: PayoffLog,
    pub metrics: Option<MetricsLog>,
    pub hubs: HubReport,
    pub findings: Findings,
    pub oracle: Option<OracleLog>,
    pub analysis: Option<AnalysisLog>,
}

impl RunLog {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything a run produced; the CLI writes these out.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dataset: Dataset,
    pub plan: ExpansionPlan<f64>,
    pub distances: DistanceMatrix<f64>,
    pub weighted: WeightedMatrix<f64>,
    pub payoffs: PayoffReport<f64>,
    pub partner_pca: Option<(FeatureMatrix<f64>, PcaResult<f64>, analysis::Clustering)>,
    pub researcher_pca: Option<(FeatureMatrix<f64>, PcaResult<f64>, analysis::Clustering)>,
    pub dot: String,
    pub log: RunLog,
}

fn round_all(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(sig9).collect()
}

fn pca_block(
    features: FeatureMatrix<f64>,
    k: usize,
    threshold: f64,
) -> Option<(FeatureMatrix<f64>, PcaResult<f64>, analysis::Clustering)> {
    let max_k = features.values.nrows().checked_sub(1)?.min(features.values.ncols());
    if max_k == 0 {
        return None;
    }
    let result = pca(&features, k.clamp(1, max_k)).ok()?;
    let labels = cluster(&result.scores, threshold).ok()?;
    Some((features, result, labels))
}

fn pca_log(block: &(FeatureMatrix<f64>, PcaResult<f64>, analysis::Clustering)) -> PcaLog {
    let (f, r, c) = block;
    PcaLog {
        rows: f.rows.clone(),
        columns: f.cols.clone(),
        dropped_columns: f.dropped.clone(),
        eigenvalues: round_all(&r.eigenvalues),
        explained_ratio: round_all(&r.explained_ratio),
        cluster_labels: c.labels.clone(),
    }
}

fn findings(
    net: &Network,
    founding: &BTreeSet<PartnerId>,
    hubs: &HubReport,
    payoffs: &PayoffReport<f64>,
    plan: &ExpansionPlan<f64>,
    connected: bool,
) -> Findings {
    let founding_u: Vec<f64> = payoffs
        .ids
        .iter()
        .zip(&payoffs.payoffs)
        .filter(|(p, _)| founding.contains(p))
        .map(|(_, &u)| u)
        .collect();
    let new_u: Vec<f64> = payoffs
        .ids
        .iter()
        .zip(&payoffs.payoffs)
        .filter(|(p, _)| !founding.contains(p))
        .map(|(_, &u)| u)
        .collect();
    let min_founding = founding_u.iter().copied().reduce(f64::min);
    let max_new = new_u.iter().copied().reduce(f64::max);
    let founding_highest = match (min_founding, max_new) {
        (Some(a), Some(b)) => Some(a > b),
        _ => None,
    };
    let tie_events = plan.tie_events().count();
    let mut deviations = Vec::new();
    if !hubs.star {
        deviations.push(format!(
            "no partner is adjacent to every new partner (top hub {}); {tie_events} placement step(s) had tied candidates",
            hubs.ranking.first().map_or("none".to_string(), ToString::to_string)
        ));
    }
    if founding_highest == Some(false) {
        deviations.push(format!(
            "a new partner out-earns a founding partner ({:.6} > {:.6}); {tie_events} placement step(s) had tied candidates",
            max_new.unwrap_or(f64::NAN),
            min_founding.unwrap_or(f64::NAN)
        ));
    }
    for s in plan.tie_events() {
        let tied: Vec<String> = s
            .ties
            .iter()
            .map(|t| format!("({}, {})", t.host_a, t.host_b))
            .collect();
        deviations.push(format!(
            "{} kept ({}, {}) over tied {}",
            s.assignment.esr,
            s.assignment.host_a,
            s.assignment.host_b,
            tied.join(" ")
        ));
    }
    Findings {
        connected,
        partners_in_network: net.len(),
        top_hub: hubs.ranking.first().copied(),
        star: hubs.star,
        star_center: hubs.center,
        founding_payoffs_highest: founding_highest,
        min_founding_payoff: min_founding.map(sig9),
        max_new_payoff: max_new.map(sig9),
        tie_events,
        deviations,
    }
}

/// Runs the full pipeline on an already resolved dataset.
pub fn run_expand(dataset: &Dataset, flags: &RunFlags) -> Result<RunOutcome> {
    let (ds, placeholder) = resolve(dataset, flags)?;
    let founding_net = ds.founding_network()?;
    let founding: BTreeSet<PartnerId> = ds.roster.founding_ids();
    let ordered = order_new_esrs(&ds.esrs, &founding)?;
    let plan = expand_sequence(&founding_net, &ordered, &ds.roster, &ds.params)?;
    let net = &plan.network;

    let distances = all_pairs_shortest::<f64>(net);
    let weighted = weighted_matrix(&distances, &ds.roster, &ds.params)?;
    let connected = distances.is_connected();
    let payoffs = payoff_report_with(net, &ds.roster, &distances, &ds.params)?;
    let net_metrics: Option<NetworkMetrics<f64>> =
        if net.len() >= 2 { Some(metrics(net)?) } else { None };
    let hubs = hub_report(net, &founding);

    let oracle = match flags.oracle_esrs {
        Some(n) => {
            let subset = &ordered[..n.min(ordered.len())];
            let gap = greedy_gap(&founding_net, subset, &ds.roster, &ds.params)?;
            Some(OracleLog {
                esrs: subset.iter().map(|e| e.id).collect(),
                search_space: gap.distance.search_space,
                visited_distance: gap.distance.visited,
                visited_value: gap.value.visited,
                greedy_mean: sig9(gap.greedy_mean),
                greedy_value: sig9(gap.greedy_value),
                oracle_mean: sig9(gap.distance.best),
                oracle_value: sig9(gap.value.best),
                distance_gap: sig9(*gap.distance_gap()),
                value_gap: sig9(*gap.value_gap()),
                oracle_distance_assignments: gap.distance.assignments.clone(),
                oracle_value_assignments: gap.value.assignments.clone(),
            })
        }
        None => None,
    };

    let partner_pca = analysis::partner_features(net, &ds.roster, &distances, &payoffs, &ds.params)
        .ok()
        .and_then(|f| pca_block(f, flags.pca_components, flags.cluster_threshold));
    let researcher_pca = analysis::esr_features(
        &plan.assignments(),
        &ds.esrs,
        &ds.founding_visits,
        &ds.founding_ids(),
        ds.roster.len(),
    )
    .ok()
    .and_then(|f| pca_block(f, flags.pca_components, flags.cluster_threshold));
    let analysis_log = partner_pca.as_ref().map(|block| {
        let founding_rows: Vec<usize> = payoffs
            .ids
            .iter()
            .enumerate()
            .filter(|(_, p)| founding.contains(p))
            .map(|(i, _)| i)
            .collect();
        AnalysisLog {
            partners: pca_log(block),
            researchers: researcher_pca.as_ref().map(pca_log),
            founding_cohesion: {
                let c = group_cohesion(&block.1.scores, &founding_rows);
                CohesionFinding {
                    group_max_distance: sig9(c.group_max_distance),
                    median_distance: sig9(c.median_distance),
                    holds: c.holds,
                }
            },
        }
    });

    let plan_log = PlanLog {
        order: ordered.iter().map(|e| e.id).collect(),
        steps: plan
            .steps
            .iter()
            .map(|s| StepLog {
                esr: s.assignment.esr,
                host_a: s.assignment.host_a,
                host_b: s.assignment.host_b,
                mean_weighted_distance: sig9(s.mean),
                candidates: s.candidates,
                ties: s.ties.clone(),
            })
            .collect(),
        edges: net
            .edges()
            .map(|(a, b, months)| EdgeLog {
                a,
                b,
                months,
                distance: sig9(1.0 / months as f64),
            })
            .collect(),
    };

    let log = RunLog {
        tool: TOOL.into(),
        version: VERSION.into(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        dataset: DatasetInfo {
            name: ds.name.clone(),
            digest: ds.digest.clone(),
            partners: ds.roster.len(),
            researchers: ds.esr_count(),
        },
        flags: ResolvedFlags {
            visit_overrides: flags.visit_overrides.clone(),
            placeholder_visits: placeholder,
            mean_convention: "unordered-pairs",
            host_rule: "current-members-only",
            processing_order: "descending-mobility-then-ascending-partner-id",
            tie_rule: "smallest-mean-then-lexicographic-hosts",
            feature_version: FEATURE_VERSION,
            cluster_threshold: flags.cluster_threshold,
            pca_components: flags.pca_components,
            oracle_esrs: flags.oracle_esrs,
        },
        plan: plan_log,
        payoffs: PayoffLog {
            partners: payoffs.ids.clone(),
            payoffs: round_all(&payoffs.payoffs),
            normalized: round_all(&payoffs.normalized),
            direct_links: payoffs.direct_links.clone(),
            value: sig9(payoffs.value),
        },
        metrics: net_metrics.map(|m| MetricsLog {
            diameter: sig9(m.diameter),
            average_shortest_path: sig9(m.average_shortest_path),
            density: sig9(m.density),
        }),
        findings: findings(net, &founding, &hubs, &payoffs, &plan, connected),
        hubs,
        oracle,
        analysis: analysis_log,
    };

    Ok(RunOutcome {
        dot: export_dot(net, Some(&payoffs)),
        dataset: ds,
        plan,
        distances,
        weighted,
        payoffs,
        partner_pca,
        researcher_pca,
        log,
    })
}

/// Writes `run-log.json`, `payoffs.csv`, `distances.csv`, `weighted.csv`,
/// `trace.csv`, `network.dot` and, when available, the PCA files.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("run-log.json"), outcome.log.to_json()?)?;
    report::write_payoffs(File::create(dir.join("payoffs.csv"))?, &outcome.payoffs, &outcome.dataset)?;
    report::write_matrix(File::create(dir.join("distances.csv"))?, &outcome.distances)?;
    report::write_matrix(File::create(dir.join("weighted.csv"))?, &outcome.weighted)?;
    report::write_trace(File::create(dir.join("trace.csv"))?, &outcome.plan)?;
    std::fs::write(dir.join("network.dot"), &outcome.dot)?;
    for (prefix, block) in [("partner", &outcome.partner_pca), ("researcher", &outcome.researcher_pca)] {
        if let Some((f, r, c)) = block {
            report::write_scores(File::create(dir.join(format!("{prefix}-scores.csv")))?, &f.rows, r, c)?;
            report::write_eigenvalues(File::create(dir.join(format!("{prefix}-eigenvalues.csv")))?, r)?;
        }
    }
    Ok(())
}
