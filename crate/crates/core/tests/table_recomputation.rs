#[path = "common/reference_tables.rs"]
mod tables;

use esm_select_core::ranking::{evaluate_ranking, EvalRow};
use esm_select_core::{aggregate_report, regret_at_k, GroundTruth, Method, Ranking};

fn inputs(table: &tables::TargetTable) -> (Ranking, GroundTruth) {
    let ranking = Ranking::from_order(Method::EsmLogme, table.target, table.ranked_ids()).unwrap();
    let gt = GroundTruth::from_pairs(table.target, table.pool()).unwrap();
    (ranking, gt)
}

#[test]
fn regret_at_1_matches_reference() {
    for table in &tables::TABLES {
        let (ranking, gt) = inputs(table);
        let r1 = regret_at_k(&ranking, &gt, 1).unwrap();
        assert!((r1 - table.regret_at_1).abs() < 0.01, "{}: {r1}", table.target);
    }
}

#[test]
fn imdb_regret_is_flat_up_to_five() {
    let (ranking, gt) = inputs(&tables::IMDB);
    let row = evaluate_ranking(&ranking, &gt, &[1, 3, 5]).unwrap();
    for r in &row.regret {
        assert!((r - 0.74).abs() < 0.01);
    }
    assert!(row.ndcg > 0.0 && row.ndcg < 100.0);
}

#[test]
fn average_regret_at_5_matches_reference_average() {
    let rows = tables::ESM_LOGME_REGRET_AT_5
        .iter()
        .enumerate()
        .map(|(i, &r)| EvalRow { target_id: format!("t{i}"), ndcg: 0.0, regret: vec![r] })
        .collect();
    let report = aggregate_report(&[5], rows).unwrap();
    assert!((report.average.regret[0] - tables::ESM_LOGME_AVG_REGRET_AT_5).abs() < 0.01);
    assert!(report.render_table().contains("2.95"));
}
