//! Ranking JSON, ground-truth CSV and evaluation report JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use esm_select_core::ranking::{evaluate_ranking, normalize_ks};
use esm_select_core::{aggregate_report, EvalReport, EvalRow, GroundTruth, Ranking};
use serde_json::{json, Map, Value};

use crate::pipeline::target_id_from_path;

pub const BASELINE_ID: &str = "__baseline__";

/// Writes `contents` to a temporary sibling of `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn ranking_json(ranking: &Ranking) -> Result<String> {
    Ok(serde_json::to_string_pretty(ranking)? + "\n")
}

pub fn write_ranking(ranking: &Ranking, path: &Path) -> Result<()> {
    write_atomic(path, ranking_json(ranking)?.as_bytes())
}

pub fn read_ranking(path: &Path) -> Result<Ranking> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read ranking {}", path.display()))?;
    let ranking: Ranking = serde_json::from_str(&text).with_context(|| format!("invalid ranking {}", path.display()))?;
    ranking.validate().with_context(|| format!("invalid ranking {}", path.display()))?;
    Ok(ranking)
}

/// Parses `source_id,performance` rows; the target id is the file stem.
pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read ground truth {}", path.display()))?;
    let headers = reader.headers()?.clone();
    ensure!(
        headers.iter().map(str::trim).eq(["source_id", "performance"]),
        "{}: expected header `source_id,performance`, found `{}`",
        path.display(),
        headers.iter().collect::<Vec<_>>().join(",")
    );
    let mut perf = BTreeMap::new();
    let mut baseline = None;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let id = record[0].trim().to_string();
        let value: f64 =
            record[1].trim().parse().with_context(|| format!("{}: row {}: bad performance {:?}", path.display(), line + 2, &record[1]))?;
        if id == BASELINE_ID {
            baseline = Some(value);
        } else if perf.insert(id.clone(), value).is_some() {
            bail!("{}: duplicate source {id:?}", path.display());
        }
    }
    GroundTruth::new(target_id_from_path(path), perf, baseline).with_context(|| format!("invalid ground truth {}", path.display()))
}

pub fn write_ground_truth(gt: &GroundTruth, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source_id", "performance"])?;
    for (id, perf) in &gt.perf {
        w.write_record([id.as_str(), &perf.to_string()])?;
    }
    if let Some(b) = gt.baseline_perf {
        w.write_record([BASELINE_ID, &b.to_string()])?;
    }
    write_atomic(path, &w.into_inner()?)
}

/// Evaluates each ranking against the ground truth with the same target id.
pub fn evaluate(rankings: &[Ranking], truths: &[GroundTruth], ks: &[usize]) -> Result<EvalReport> {
    let ks = normalize_ks(ks)?;
    let by_target: BTreeMap<&str, &GroundTruth> = truths.iter().map(|g| (g.target_id.as_str(), g)).collect();
    ensure!(by_target.len() == truths.len(), "several ground-truth files share a target id");
    let mut rows = Vec::with_capacity(rankings.len());
    for ranking in rankings {
        let gt =
            by_target.get(ranking.target_id.as_str()).with_context(|| format!("no ground truth for target {:?}", ranking.target_id))?;
        rows.push(evaluate_ranking(ranking, gt, &ks).with_context(|| format!("evaluating target {:?}", ranking.target_id))?);
    }
    Ok(aggregate_report(&ks, rows)?)
}

fn row_json(row: &EvalRow, ks: &[usize]) -> Value {
    let mut map = Map::new();
    map.insert("target_id".into(), json!(row.target_id));
    map.insert("ndcg".into(), json!(row.ndcg));
    for (k, r) in ks.iter().zip(&row.regret) {
        map.insert(format!("regret@{k}"), json!(r));
    }
    Value::Object(map)
}

pub fn report_json(report: &EvalReport) -> Value {
    json!({
        "k": report.ks,
        "rows": report.rows.iter().map(|r| row_json(r, &report.ks)).collect::<Vec<_>>(),
        "average": row_json(&report.average, &report.ks),
    })
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    write_atomic(path, (serde_json::to_string_pretty(&report_json(report))? + "\n").as_bytes())
}
