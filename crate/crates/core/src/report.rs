//! CSV reports. Every float is written with at most 9 significant digits.

use std::io::Write;

use crate::analysis::{Clustering, PcaResult};
use crate::dataset::Dataset;
use crate::efficiency::PayoffReport;
use crate::error::Result;
use crate::expansion::ExpansionPlan;
use crate::paths::PairMatrix;

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

pub fn fmt9(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    sig9(x).to_string()
}

pub fn write_payoffs<W: Write>(out: W, report: &PayoffReport<f64>, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["partner", "kind", "founding", "direct_links", "payoff", "normalized"])?;
    for (i, id) in report.ids.iter().enumerate() {
        let partner = dataset.roster.get(*id);
        w.write_record([
            id.to_string(),
            partner.map_or("?".into(), |p| format!("{:?}", p.kind).to_lowercase()),
            partner.map_or("?".into(), |p| p.founding.to_string()),
            report.direct_links[i].to_string(),
            fmt9(report.payoffs[i]),
            fmt9(report.normalized[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix<W: Write>(out: W, m: &PairMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["partner".to_string()];
    header.extend(m.ids().iter().map(ToString::to_string));
    w.write_record(&header)?;
    for (i, id) in m.ids().iter().enumerate() {
        let mut rec = vec![id.to_string()];
        rec.extend(
            m.row(i)
                .iter()
                .map(|v| v.map_or_else(|| "inf".to_string(), fmt9)),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, plan: &ExpansionPlan<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "esr", "host_a", "host_b", "mean_weighted_distance", "candidates", "ties"])?;
    for (i, s) in plan.steps.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            s.assignment.esr.to_string(),
            s.assignment.host_a.to_string(),
            s.assignment.host_b.to_string(),
            fmt9(s.mean),
            s.candidates.to_string(),
            s.ties.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scores<W: Write>(
    out: W,
    labels: &[String],
    pca: &PcaResult<f64>,
    clusters: &Clustering,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = pca.scores.ncols();
    let mut header = vec!["label".to_string()];
    header.extend((1..=k).map(|i| format!("pc{i}")));
    header.push("cluster".into());
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend((0..k).map(|j| fmt9(pca.scores[(i, j)])));
        rec.push(clusters.labels[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_eigenvalues<W: Write>(out: W, pca: &PcaResult<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["component", "eigenvalue", "explained_ratio"])?;
    for (i, (l, r)) in pca.eigenvalues.iter().zip(&pca.explained_ratio).enumerate() {
        w.write_record([(i + 1).to_string(), fmt9(*l), fmt9(*r)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(1.0 / 18.0), "0.0555555556");
        assert_eq!(fmt9(384.788754_321), "384.788754");
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(f64::INFINITY), "inf");
    }
}
