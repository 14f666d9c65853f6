//! Exact-match evaluation of predicted spans against gold spans, overall
//! and stratified by argument distance.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{distance, distance_bin, Relation, Span, DISTANCE_BINS};
use crate::error::{Error, Result};

/// One test relation with its predicted and gold spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: u64,
    pub pred_arg1: Span,
    pub pred_arg2: Span,
    pub pred_conn: Span,
    pub gold_arg1: Span,
    pub gold_arg2: Span,
    pub gold_conn: Span,
    pub distance: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Fold connective tokens into Arg2 on both sides before matching
    /// (sensitivity switch; off by default, matching the instance labeling
    /// where connective tokens carry their own class).
    pub conn_into_arg2: bool,
}

/// Exact match: the token-index sets are identical.
pub fn exact_match(pred: &Span, gold: &Span) -> bool {
    pred == gold
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanMetric {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub total: usize,
}

impl SpanMetric {
    fn from_counts(matched: usize, total: usize) -> Self {
        // One prediction per gold relation, so precision = recall here.
        let p = if total == 0 { 0.0 } else { matched as f64 / total as f64 };
        let r = p;
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        SpanMetric {
            precision: p,
            recall: r,
            f1,
            matched,
            total,
        }
    }
}

/// Exact-match precision/recall/F1 for Arg1-only, Arg2-only, and Arg1+Arg2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub arg1: SpanMetric,
    pub arg2: SpanMetric,
    pub both: SpanMetric,
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>10} {:>10} {:>8} {:>8} {:>8}",
            "Span", "Matched", "Total", "P", "R", "F1"
        )?;
        for (name, m) in [("Arg1", self.arg1), ("Arg2", self.arg2), ("Arg1+Arg2", self.both)] {
            writeln!(
                f,
                "{:<10} {:>10} {:>10} {:>8.4} {:>8.4} {:>8.4}",
                name, m.matched, m.total, m.precision, m.recall, m.f1
            )?;
        }
        write!(
            f,
            "note: one prediction per gold relation, so precision = recall;\n\
             F1 here is not a detection metric"
        )
    }
}

fn effective_spans(rec: &PredictionRecord, opts: ScoreOptions) -> (Span, Span, Span, Span) {
    if opts.conn_into_arg2 {
        let fold = |arg2: &Span, conn: &Span| -> Span {
            arg2.iter().chain(conn.iter()).collect()
        };
        (
            rec.pred_arg1.clone(),
            fold(&rec.pred_arg2, &rec.pred_conn),
            rec.gold_arg1.clone(),
            fold(&rec.gold_arg2, &rec.gold_conn),
        )
    } else {
        (
            rec.pred_arg1.clone(),
            rec.pred_arg2.clone(),
            rec.gold_arg1.clone(),
            rec.gold_arg2.clone(),
        )
    }
}

/// Score a record set: Arg1 matches iff its token sets are identical, Arg2
/// likewise, and Arg1+Arg2 iff both match.
pub fn score(records: &[PredictionRecord], opts: ScoreOptions) -> ScoreReport {
    let total = records.len();
    let mut arg1 = 0;
    let mut arg2 = 0;
    let mut both = 0;
    for rec in records {
        let (p1, p2, g1, g2) = effective_spans(rec, opts);
        let m1 = exact_match(&p1, &g1);
        let m2 = exact_match(&p2, &g2);
        arg1 += m1 as usize;
        arg2 += m2 as usize;
        both += (m1 && m2) as usize;
    }
    ScoreReport {
        arg1: SpanMetric::from_counts(arg1, total),
        arg2: SpanMetric::from_counts(arg2, total),
        both: SpanMetric::from_counts(both, total),
    }
}

/// Per-distance and per-bin score reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub by_distance: BTreeMap<usize, ScoreReport>,
    /// Reports for the bins {0, 1, 2-10, >10}, in that order.
    pub by_bin: Vec<(String, ScoreReport)>,
}

impl DistanceReport {
    /// CSV rows `distance,count,f1_arg1,f1_arg2,f1_both`, one per exact
    /// distance.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distance,count,f1_arg1,f1_arg2,f1_both\n");
        for (d, report) in &self.by_distance {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                d, report.arg1.total, report.arg1.f1, report.arg2.f1, report.both.f1
            ));
        }
        out
    }
}

/// Group records by exact distance and by the reporting bins, scoring each
/// group.
pub fn score_by_distance(records: &[PredictionRecord], opts: ScoreOptions) -> DistanceReport {
    let mut by_distance: BTreeMap<usize, Vec<PredictionRecord>> = BTreeMap::new();
    let mut by_bin: [Vec<PredictionRecord>; 4] = Default::default();
    for rec in records {
        by_distance.entry(rec.distance).or_default().push(rec.clone());
        by_bin[distance_bin(rec.distance)].push(rec.clone());
    }
    DistanceReport {
        by_distance: by_distance
            .into_iter()
            .map(|(d, group)| (d, score(&group, opts)))
            .collect(),
        by_bin: DISTANCE_BINS
            .iter()
            .zip(by_bin.iter())
            .map(|(label, group)| (label.to_string(), score(group, opts)))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Prediction files
// ---------------------------------------------------------------------------

/// One line of a prediction file: the relation id plus three predicted
/// token-index lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedSpans {
    #[serde(rename = "ID")]
    pub id: u64,
    #[serde(rename = "Arg1")]
    pub arg1: Span,
    #[serde(rename = "Arg2")]
    pub arg2: Span,
    #[serde(rename = "Connective")]
    pub conn: Span,
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[PredictedSpans]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for pred in predictions {
        let line = serde_json::to_string(pred)
            .map_err(|e| Error::Validation(format!("serializing prediction: {e}")))?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictedSpans>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut predictions = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pred: PredictedSpans = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        predictions.push(pred);
    }
    Ok(predictions)
}

/// Join predictions with gold explicit relations by id. A gold relation
/// with no prediction counts as empty predicted spans (and a warning);
/// predictions without a gold relation are an error.
pub fn join_records(
    predictions: &[PredictedSpans],
    gold: &[Relation],
) -> Result<Vec<PredictionRecord>> {
    let mut by_id: BTreeMap<u64, &PredictedSpans> = BTreeMap::new();
    for pred in predictions {
        if by_id.insert(pred.id, pred).is_some() {
            return Err(Error::Validation(format!(
                "duplicate prediction for relation {}",
                pred.id
            )));
        }
    }
    let mut records = Vec::new();
    for relation in gold.iter().filter(|r| r.is_explicit()) {
        let pred = by_id.remove(&relation.id);
        if pred.is_none() {
            log::warn!("no prediction for relation {}; scoring empty spans", relation.id);
        }
        let (p1, p2, pc) = pred
            .map(|p| (p.arg1.clone(), p.arg2.clone(), p.conn.clone()))
            .unwrap_or_default();
        records.push(PredictionRecord {
            id: relation.id,
            pred_arg1: p1,
            pred_arg2: p2,
            pred_conn: pc,
            gold_arg1: relation.arg1.clone(),
            gold_arg2: relation.arg2.clone(),
            gold_conn: relation.connective.clone(),
            distance: distance(relation)?,
        });
    }
    if let Some((&id, _)) = by_id.iter().next() {
        return Err(Error::Validation(format!(
            "prediction for unknown relation {id}"
        )));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        id: u64,
        pred: (&[usize], &[usize], &[usize]),
        gold: (&[usize], &[usize], &[usize]),
        dist: usize,
    ) -> PredictionRecord {
        PredictionRecord {
            id,
            pred_arg1: pred.0.iter().copied().collect(),
            pred_arg2: pred.1.iter().copied().collect(),
            pred_conn: pred.2.iter().copied().collect(),
            gold_arg1: gold.0.iter().copied().collect(),
            gold_arg2: gold.1.iter().copied().collect(),
            gold_conn: gold.2.iter().copied().collect(),
            distance: dist,
        }
    }

    #[test]
    fn exact_match_requires_identical_sets() {
        let gold: Span = [1, 2, 3].into_iter().collect();
        assert!(exact_match(&gold.clone(), &gold));
        let missing: Span = [1, 2].into_iter().collect();
        assert!(!exact_match(&missing, &gold));
        let extra: Span = [1, 2, 3, 4].into_iter().collect();
        assert!(!exact_match(&extra, &gold));
    }

    #[test]
    fn perfect_predictions_score_one() {
        let records = vec![
            record(1, (&[0, 1], &[3, 4], &[2]), (&[0, 1], &[3, 4], &[2]), 0),
            record(2, (&[5], &[8], &[7]), (&[5], &[8], &[7]), 1),
        ];
        let report = score(&records, ScoreOptions::default());
        assert_eq!(report.arg1.f1, 1.0);
        assert_eq!(report.arg2.f1, 1.0);
        assert_eq!(report.both.f1, 1.0);
        assert_eq!(report.both.matched, 2);
    }

    #[test]
    fn arg1_right_arg2_wrong_zeroes_both() {
        let records = vec![
            record(1, (&[0, 1], &[3], &[2]), (&[0, 1], &[3, 4], &[2]), 0),
            record(2, (&[5], &[9], &[7]), (&[5], &[8], &[7]), 1),
        ];
        let report = score(&records, ScoreOptions::default());
        assert_eq!(report.arg1.f1, 1.0);
        assert_eq!(report.arg2.f1, 0.0);
        assert_eq!(report.both.f1, 0.0);
    }

    #[test]
    fn empty_record_list_is_all_zero() {
        let report = score(&[], ScoreOptions::default());
        assert_eq!(report.arg1.total, 0);
        assert_eq!(report.arg1.f1, 0.0);
        assert_eq!(report.both.precision, 0.0);
    }

    #[test]
    fn both_never_exceeds_either_argument() {
        let records = vec![
            record(1, (&[0], &[3], &[2]), (&[0], &[3], &[2]), 0),
            record(2, (&[5], &[9], &[7]), (&[5], &[8], &[7]), 3),
            record(3, (&[1], &[4], &[2]), (&[0], &[4], &[2]), 12),
        ];
        let report = score(&records, ScoreOptions::default());
        assert!(report.both.f1 <= report.arg1.f1.min(report.arg2.f1));
    }

    #[test]
    fn score_is_permutation_invariant() {
        let mut records = vec![
            record(1, (&[0], &[3], &[2]), (&[0], &[3], &[2]), 0),
            record(2, (&[5], &[9], &[7]), (&[5], &[8], &[7]), 3),
            record(3, (&[1], &[4], &[2]), (&[0], &[4], &[2]), 12),
        ];
        let forward = score(&records, ScoreOptions::default());
        records.reverse();
        assert_eq!(score(&records, ScoreOptions::default()), forward);
    }

    #[test]
    fn conn_fold_flag_rescues_boundary_disagreement() {
        // Prediction treats the connective token as part of Arg2.
        let rec = record(1, (&[0], &[2, 3], &[]), (&[0], &[3], &[2]), 0);
        let strict = score(std::slice::from_ref(&rec), ScoreOptions::default());
        assert_eq!(strict.arg2.f1, 0.0);
        let folded = score(
            std::slice::from_ref(&rec),
            ScoreOptions { conn_into_arg2: true },
        );
        assert_eq!(folded.arg2.f1, 1.0);
    }

    #[test]
    fn distance_groups_partition_records() {
        let records = vec![
            record(1, (&[0], &[3], &[2]), (&[0], &[3], &[2]), 0),
            record(2, (&[5], &[9], &[7]), (&[5], &[8], &[7]), 0),
            record(3, (&[1], &[4], &[2]), (&[1], &[4], &[2]), 5),
            record(4, (&[1], &[4], &[2]), (&[0], &[4], &[2]), 12),
        ];
        let report = score_by_distance(&records, ScoreOptions::default());
        assert_eq!(report.by_distance.len(), 3);
        assert_eq!(report.by_distance[&0].arg1.total, 2);
        let overall = score(&records, ScoreOptions::default());
        let sum_matched: usize = report.by_distance.values().map(|r| r.both.matched).sum();
        let sum_total: usize = report.by_distance.values().map(|r| r.both.total).sum();
        assert_eq!(sum_matched, overall.both.matched);
        assert_eq!(sum_total, overall.both.total);
        // Bin membership: 0 -> "0", 5 -> "2-10", 12 -> ">10".
        assert_eq!(report.by_bin[0].1.arg1.total, 2);
        assert_eq!(report.by_bin[2].1.arg1.total, 1);
        assert_eq!(report.by_bin[3].1.arg1.total, 1);
        let bin_total: usize = report.by_bin.iter().map(|(_, r)| r.both.total).sum();
        assert_eq!(bin_total, overall.both.total);
    }

    #[test]
    fn all_records_at_one_distance_form_one_group() {
        let records: Vec<PredictionRecord> = (0..4)
            .map(|i| record(i, (&[0], &[3], &[2]), (&[0], &[3], &[2]), 0))
            .collect();
        let report = score_by_distance(&records, ScoreOptions::default());
        assert_eq!(report.by_distance.len(), 1);
        assert_eq!(report.by_distance[&0].arg1.total, 4);
    }

    #[test]
    fn prediction_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pred.jsonl");
        let preds = vec![
            PredictedSpans {
                id: 3,
                arg1: [0, 1].into_iter().collect(),
                arg2: [4, 5].into_iter().collect(),
                conn: [2].into_iter().collect(),
            },
            PredictedSpans {
                id: 7,
                arg1: Span::new(),
                arg2: [9].into_iter().collect(),
                conn: Span::new(),
            },
        ];
        write_predictions(&path, &preds).unwrap();
        let loaded = load_predictions(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].arg1, preds[0].arg1);
        assert_eq!(loaded[1].id, 7);
    }
}
