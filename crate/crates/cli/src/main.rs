use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use collabnet::dataset::{ingest, Dataset};
use collabnet::dot::export_dot;
use collabnet::efficiency::payoff_report;
use collabnet::expansion::order_new_esrs;
use collabnet::oracle::{exhaustive_expand, Objective};
use collabnet::paths::metrics;
use collabnet::report::{self, fmt9};
use collabnet::run::{resolve, run_expand, write_outputs, RunFlags};
use collabnet::{EsrId, Network};

#[derive(Debug, Parser)]
#[command(name = "collabnet", version, about = "Build and analyse efficient collaboration networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Dataset JSON; the bundled dataset is used when omitted.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,

    /// Output directory for run-logs, CSV reports and DOT files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Visit lengths for ESR13, e.g. `18,10`.
    #[arg(long, global = true, value_parser = parse_pair)]
    esr13: Option<(u32, u32)>,

    /// Fill unknown visit lengths with the dataset's median visit pair.
    #[arg(long, global = true)]
    allow_placeholder: bool,

    /// Certify the greedy against exhaustive search on the first N ESRs.
    #[arg(long, global = true, value_name = "N-ESRS")]
    oracle: Option<usize>,

    #[arg(long, global = true, value_enum)]
    objective: Option<ObjectiveArg>,

    #[arg(long, global = true, default_value_t = 1.5)]
    cluster_threshold: f64,

    /// Number of principal components to keep.
    #[arg(long, global = true, default_value_t = 2)]
    components: usize,

    /// Operate on the founding network only (value, metrics, export-dot).
    #[arg(long, global = true)]
    founding_only: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Distance,
    Value,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Distance => Objective::MinMeanWeightedDistance,
            ObjectiveArg::Value => Objective::MaxNetworkValue,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the greedy expansion and write the run-log and reports.
    Expand,
    /// Print individual payoffs and the network value.
    Value,
    /// Print diameter, average shortest path and density.
    Metrics,
    /// Exhaustive search over the first N ESRs (see --oracle).
    Oracle,
    /// PCA and clustering of partners and ESRs in the expanded network.
    Pca,
    /// Emit the network as Graphviz DOT.
    ExportDot,
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `a,b`, got `{s}`"))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|e| format!("invalid month count `{x}`: {e}"))
    };
    Ok((parse(a)?, parse(b)?))
}

impl Common {
    fn load(&self) -> Result<Dataset> {
        let ds = match &self.dataset {
            Some(path) => ingest(path).with_context(|| format!("reading {}", path.display()))?,
            None => Dataset::bundled(),
        };
        for w in &ds.warnings {
            eprintln!("warning: {w}");
        }
        Ok(ds)
    }

    fn flags(&self) -> RunFlags {
        RunFlags {
            visit_overrides: self
                .esr13
                .map(|(a, b)| vec![(EsrId(13), a, b)])
                .unwrap_or_default(),
            allow_placeholder: self.allow_placeholder,
            oracle_esrs: self.oracle,
            cluster_threshold: self.cluster_threshold,
            pca_components: self.components,
        }
    }

    fn network(&self, ds: &Dataset) -> Result<Network> {
        if self.founding_only {
            return Ok(ds.founding_network()?);
        }
        Ok(run_expand(ds, &self.flags())?.plan.network)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    run(cli).map_err(|e| match e.downcast_ref::<collabnet::Error>() {
        Some(collabnet::Error::MissingData(id)) => anyhow::anyhow!(
            "missing visit lengths for {id}; supply them (e.g. --esr13 a,b) or pass --allow-placeholder"
        ),
        _ => e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let ds = common.load()?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    match cli.command {
        Command::Expand => {
            let outcome = run_expand(&ds, &common.flags())?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            write_outputs(&outcome, &dir)?;
            for s in &outcome.plan.steps {
                writeln!(out, "{}  mean={}", s.assignment, fmt9(s.mean))?;
            }
            let f = &outcome.log.findings;
            writeln!(out, "value={}", fmt9(outcome.payoffs.value))?;
            let show = |p: Option<collabnet::PartnerId>| p.map_or("none".to_string(), |p| p.to_string());
            writeln!(out, "star={} center={} top_hub={}", f.star, show(f.star_center), show(f.top_hub))?;
            for d in &f.deviations {
                writeln!(out, "note: {d}")?;
            }
            writeln!(out, "wrote {}", dir.display())?;
        }
        Command::Value => {
            let net = common.network(&ds)?;
            let report = payoff_report(&net, &ds.roster, &ds.params)?;
            report::write_payoffs(&mut out, &report, &ds)?;
            writeln!(out, "value,{}", fmt9(report.value))?;
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                report::write_payoffs(File::create(dir.join("payoffs.csv"))?, &report, &ds)?;
            }
        }
        Command::Metrics => {
            let net = common.network(&ds)?;
            let m = metrics::<f64>(&net)?;
            writeln!(out, "diameter,{}", fmt9(m.diameter))?;
            writeln!(out, "average_shortest_path,{}", fmt9(m.average_shortest_path))?;
            writeln!(out, "density,{}", fmt9(m.density))?;
        }
        Command::Oracle => {
            let n = common.oracle.unwrap_or(2);
            let (resolved, _) = resolve(&ds, &common.flags())?;
            let founding = resolved.founding_network()?;
            let ordered = order_new_esrs(&resolved.esrs, founding.partners())?;
            let subset = &ordered[..n.min(ordered.len())];
            let objectives: Vec<Objective> = match common.objective {
                Some(o) => vec![o.into()],
                None => vec![Objective::MinMeanWeightedDistance, Objective::MaxNetworkValue],
            };
            for objective in objectives {
                let r = exhaustive_expand(&founding, subset, &resolved.roster, &resolved.params, objective)?;
                writeln!(out, "objective: {objective:?}")?;
                writeln!(out, "  search space: {} (visited {})", r.search_space, r.visited)?;
                writeln!(out, "  oracle: {}  greedy: {}  gap: {}", fmt9(r.best), fmt9(r.greedy), fmt9(r.greedy_gap))?;
                for a in &r.assignments {
                    writeln!(out, "  {a}")?;
                }
            }
        }
        Command::Pca => {
            let outcome = run_expand(&ds, &common.flags())?;
            let Some((features, pca, clusters)) = &outcome.partner_pca else {
                bail!("not enough partners for PCA");
            };
            writeln!(out, "partners: explained {:?}", pca.explained_ratio.iter().map(|&r| fmt9(r)).collect::<Vec<_>>())?;
            for (label, c) in features.rows.iter().zip(&clusters.labels) {
                writeln!(out, "  {label}: cluster {c}")?;
            }
            if let Some(a) = &outcome.log.analysis {
                writeln!(
                    out,
                    "founding cohesion: {} (max founding distance {}, median {})",
                    a.founding_cohesion.holds,
                    fmt9(a.founding_cohesion.group_max_distance),
                    fmt9(a.founding_cohesion.median_distance)
                )?;
            }
            if let Some(dir) = &common.out {
                write_outputs(&outcome, dir)?;
            }
        }
        Command::ExportDot => {
            let net = common.network(&ds)?;
            let report = payoff_report(&net, &ds.roster, &ds.params).ok();
            let text = export_dot(&net, report.as_ref());
            match &common.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join("network.dot"), text)?;
                }
                None => out.write_all(text.as_bytes())?,
            }
        }
    }
    Ok(())
}
