//! Confusion counts, precision/recall sweeps and threshold selection.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub post_id: String,
    pub is_meme: bool,
}

impl LabeledExample {
    pub fn new(post_id: impl Into<String>, is_meme: bool) -> Self {
        Self {
            post_id: post_id.into(),
            is_meme,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }

    /// 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no actual positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted_meme_count: usize,
}

impl SweepPoint {
    pub fn from_confusion(threshold: f64, c: Confusion) -> Self {
        Self {
            threshold,
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            predicted_meme_count: c.predicted_positive(),
        }
    }
}

/// Pair every label with its score. Missing scores are a coverage error.
fn scored(labels: &[LabeledExample], scores: &HashMap<String, f64>) -> Result<Vec<(bool, f64)>> {
    let mut seen = HashSet::with_capacity(labels.len());
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.post_id.as_str()) {
            return Err(Error::Parameter(format!(
                "duplicate label for {:?}",
                label.post_id
            )));
        }
        match scores.get(&label.post_id) {
            Some(s) if s.is_finite() => out.push((label.is_meme, *s)),
            Some(s) => {
                return Err(Error::Parameter(format!(
                    "score {s} for {:?} is not finite",
                    label.post_id
                )))
            }
            None => missing.push(label.post_id.clone()),
        }
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(Error::Coverage { missing });
    }
    Ok(out)
}

fn count(pairs: &[(bool, f64)], t: f64) -> Confusion {
    let mut c = Confusion::default();
    for &(actual, score) in pairs {
        match (actual, score >= t) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

/// Confusion counts with "predicted meme" meaning `score >= t`.
pub fn confusion(
    labels: &[LabeledExample],
    scores: &HashMap<String, f64>,
    t: f64,
) -> Result<Confusion> {
    Ok(count(&scored(labels, scores)?, t))
}

/// One point per threshold. Thresholds must be non-decreasing.
pub fn sweep(
    labels: &[LabeledExample],
    scores: &HashMap<String, f64>,
    thresholds: &[f64],
) -> Result<Vec<SweepPoint>> {
    if let Some(bad) = thresholds.iter().find(|t| !t.is_finite()) {
        return Err(Error::Parameter(format!("threshold {bad} is not finite")));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter(
            "thresholds must be sorted ascending".into(),
        ));
    }
    let pairs = scored(labels, scores)?;
    Ok(thresholds
        .iter()
        .map(|&t| SweepPoint::from_confusion(t, count(&pairs, t)))
        .collect())
}

/// Highest-recall threshold whose precision is at least `min_precision`.
/// Ties prefer higher precision, then the lower threshold.
pub fn select_threshold(sweep: &[SweepPoint], min_precision: f64) -> Result<f64> {
    sweep
        .iter()
        .filter(|p| p.precision >= min_precision)
        .min_by(|a, b| {
            b.recall
                .total_cmp(&a.recall)
                .then(b.precision.total_cmp(&a.precision))
                .then(a.threshold.total_cmp(&b.threshold))
        })
        .map(|p| p.threshold)
        .ok_or(Error::Selection { min_precision })
}

/// Default grid: 0.50 to 0.70 in steps of 0.01.
pub const DEFAULT_GRID: &str = "0.50:0.70:0.01";

/// Parse `start:end:step` into thresholds.
///
/// The arithmetic is done on scaled integers so every grid value is the
/// double nearest its decimal (0.6, not 0.6000000000000001).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts[..] else {
        return Err(Error::Parameter(format!(
            "grid {spec:?} is not start:end:step"
        )));
    };
    let parsed = [start, end, step]
        .map(|s| parse_decimal(s).ok_or_else(|| Error::Parameter(format!("bad grid value {s:?}"))));
    let [start, end, step] = match parsed {
        [Ok(a), Ok(b), Ok(c)] => [a, b, c],
        [Err(e), _, _] | [_, Err(e), _] | [_, _, Err(e)] => return Err(e),
    };
    let scale = start.1.max(end.1).max(step.1);
    let widen = |(m, d): (u64, u32)| m * 10u64.pow(scale - d);
    let (start, end, step) = (widen(start), widen(end), widen(step));
    let unit = 10u64.pow(scale);
    if step == 0 || start > end || end > unit {
        return Err(Error::Parameter(format!(
            "grid {spec:?} needs step > 0 and 0 <= start <= end <= 1"
        )));
    }
    Ok((start..=end)
        .step_by(step as usize)
        .map(|n| n as f64 / unit as f64)
        .collect())
}

/// Non-negative decimal with at most nine fractional digits, as (mantissa, digits).
fn parse_decimal(s: &str) -> Option<(u64, u32)> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if (int.is_empty() && frac.is_empty())
        || frac.len() > 9
        || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int}{frac}");
    Some((digits.parse().ok()?, frac.len() as u32))
}

/// Shortest rendering with at least two decimals that reads back exactly.
pub fn format_threshold(t: f64) -> String {
    (2..=17)
        .map(|d| format!("{t:.d$}"))
        .find(|s| s.parse::<f64>().ok() == Some(t))
        .unwrap_or_else(|| t.to_string())
}

/// `post_id<TAB>0|1` rows; a leading `post_id<TAB>is_meme` header is allowed.
pub fn read_labels(path: &Path) -> Result<Vec<LabeledExample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || (n == 0 && line == "post_id\tis_meme") {
            continue;
        }
        let bad = || {
            Error::Format(format!(
                "{}:{}: expected post_id<TAB>0|1",
                path.display(),
                n + 1
            ))
        };
        let (id, flag) = line.split_once('\t').ok_or_else(bad)?;
        let is_meme = match flag {
            "1" => true,
            "0" => false,
            _ => return Err(bad()),
        };
        if id.is_empty() {
            return Err(bad());
        }
        labels.push(LabeledExample::new(id, is_meme));
    }
    Ok(labels)
}

const SWEEP_COLUMNS: [&str; 9] = [
    "threshold",
    "tp",
    "fp",
    "tn",
    "fn",
    "precision",
    "recall",
    "f1",
    "predicted_meme_count",
];

pub fn sweep_to_tsv(points: &[SweepPoint]) -> String {
    let mut out = SWEEP_COLUMNS.join("\t");
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            format_threshold(p.threshold),
            p.tp,
            p.fp,
            p.tn,
            p.fn_,
            p.precision,
            p.recall,
            p.f1,
            p.predicted_meme_count
        ));
    }
    out
}

pub fn parse_sweep_tsv(text: &str) -> Result<Vec<SweepPoint>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format("sweep TSV is empty".into()))?
        .trim_end_matches('\r')
        .split('\t')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Format(format!("sweep TSV lacks column {name:?}")))
    };
    let cols: Vec<usize> = SWEEP_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    lines
        .enumerate()
        .map(|(n, line)| {
            let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
            let bad = |what: &str| Error::Format(format!("sweep row {}: bad {what}", n + 1));
            if fields.len() != header.len() {
                return Err(bad("column count"));
            }
            let float = |i: usize| -> Result<f64> {
                fields[cols[i]]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(SWEEP_COLUMNS[i]))
            };
            let int = |i: usize| -> Result<usize> {
                fields[cols[i]].parse().map_err(|_| bad(SWEEP_COLUMNS[i]))
            };
            Ok(SweepPoint {
                threshold: float(0)?,
                tp: int(1)?,
                fp: int(2)?,
                tn: int(3)?,
                fn_: int(4)?,
                precision: float(5)?,
                recall: float(6)?,
                f1: float(7)?,
                predicted_meme_count: int(8)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four() -> (Vec<LabeledExample>, HashMap<String, f64>) {
        let labels = vec![
            LabeledExample::new("p1", true),
            LabeledExample::new("p2", false),
            LabeledExample::new("p3", true),
            LabeledExample::new("p4", false),
        ];
        let scores = [("p1", 0.9), ("p2", 0.7), ("p3", 0.5), ("p4", 0.3)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        (labels, scores)
    }

    #[test]
    fn four_example_confusion() {
        let (labels, scores) = four();
        let c = confusion(&labels, &scores, 0.6).unwrap();
        assert_eq!(
            c,
            Confusion {
                tp: 1,
                fp: 1,
                tn: 1,
                fn_: 1
            }
        );
        assert_eq!(c.precision(), 0.5);
        assert_eq!(c.recall(), 0.5);
        assert_eq!(c.f1(), 0.5);
    }

    #[test]
    fn degenerate_cases() {
        let (labels, scores) = four();
        let c = confusion(&labels, &scores, 0.95).unwrap();
        assert_eq!((c.tp, c.fp), (0, 0));
        assert_eq!(c.precision(), 0.0);
        assert_eq!(c.f1(), 0.0);
        assert_eq!(confusion(&[], &scores, 0.6).unwrap(), Confusion::default());
    }

    #[test]
    fn missing_score_is_coverage_error() {
        let (labels, mut scores) = four();
        scores.remove("p3");
        match confusion(&labels, &scores, 0.6) {
            Err(Error::Coverage { missing }) => assert_eq!(missing, ["p3"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_counts() {
        let (labels, scores) = four();
        let points = sweep(&labels, &scores, &[0.5, 0.6, 0.7]).unwrap();
        let counts: Vec<_> = points.iter().map(|p| p.predicted_meme_count).collect();
        assert_eq!(counts, [3, 2, 2]);
        // t = 0.7 still admits p2's 0.7 because the boundary is inclusive
        let points = sweep(&labels, &scores, &[0.7]).unwrap();
        assert_eq!(points.len(), 1);
        let dup = sweep(&labels, &scores, &[0.6, 0.6]).unwrap();
        assert_eq!(dup[0], dup[1]);
        assert!(sweep(&labels, &scores, &[0.7, 0.5]).is_err());
    }

    fn point(threshold: f64, precision: f64, recall: f64) -> SweepPoint {
        SweepPoint {
            threshold,
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0,
            precision,
            recall,
            f1: 0.0,
            predicted_meme_count: 0,
        }
    }

    #[test]
    fn selection_rule() {
        let fig = [
            point(0.5, 0.77, 0.80),
            point(0.6, 0.95, 0.55),
            point(0.7, 1.00, 0.38),
        ];
        assert_eq!(select_threshold(&fig, 0.9).unwrap(), 0.6);

        let low = [point(0.5, 0.5, 0.9), point(0.6, 0.8, 0.5)];
        assert!(matches!(
            select_threshold(&low, 0.9),
            Err(Error::Selection { .. })
        ));
        assert!(select_threshold(&[], 0.9).is_err());

        let tied = [point(0.61, 0.92, 0.5), point(0.65, 0.95, 0.5)];
        assert_eq!(select_threshold(&tied, 0.9).unwrap(), 0.65);
        let fully_tied = [point(0.65, 0.95, 0.5), point(0.61, 0.95, 0.5)];
        assert_eq!(select_threshold(&fully_tied, 0.9).unwrap(), 0.61);
        // precision exactly at the floor qualifies
        assert_eq!(
            select_threshold(&[point(0.55, 0.9, 0.1)], 0.9).unwrap(),
            0.55
        );
    }

    #[test]
    fn grid_parsing() {
        let grid = parse_grid(DEFAULT_GRID).unwrap();
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[0], 0.5);
        assert_eq!(grid[10], 0.6);
        assert_eq!(grid[20], 0.7);
        assert_eq!(parse_grid("0.5:0.7:0.1").unwrap(), [0.5, 0.6, 0.7]);
        assert_eq!(parse_grid("0:1:0.25").unwrap(), [0.0, 0.25, 0.5, 0.75, 1.0]);
        for bad in [
            "0.5:0.7",
            "50%:70%:1%",
            "0.7:0.5:0.01",
            "0.5:0.7:0",
            "0.5:1.5:0.1",
            "a:b:c",
        ] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn threshold_formatting() {
        assert_eq!(format_threshold(0.6), "0.60");
        assert_eq!(format_threshold(0.605), "0.605");
        assert_eq!(format_threshold(1.0), "1.00");
    }

    #[test]
    fn sweep_tsv_roundtrip() {
        let (labels, scores) = four();
        let points = sweep(&labels, &scores, &parse_grid(DEFAULT_GRID).unwrap()).unwrap();
        let text = sweep_to_tsv(&points);
        assert!(text.starts_with("threshold\ttp\tfp\ttn\tfn\tprecision"));
        assert_eq!(parse_sweep_tsv(&text).unwrap(), points);
        assert!(parse_sweep_tsv("threshold\ttp\n0.5\t1\n").is_err());
    }

    #[test]
    fn labels_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.tsv");
        fs::write(&path, "post_id\tis_meme\na\t1\nb\t0\n").unwrap();
        let labels = read_labels(&path).unwrap();
        assert_eq!(
            labels,
            [
                LabeledExample::new("a", true),
                LabeledExample::new("b", false)
            ]
        );
        fs::write(&path, "a\tyes\n").unwrap();
        assert!(read_labels(&path).is_err());
    }

    fn labeled_set() -> impl Strategy<Value = Vec<(bool, f64)>> {
        proptest::collection::vec((any::<bool>(), 0.0f64..1.0), 0..300)
    }

    fn materialize(items: &[(bool, f64)]) -> (Vec<LabeledExample>, HashMap<String, f64>) {
        let labels = items
            .iter()
            .enumerate()
            .map(|(i, (m, _))| LabeledExample::new(format!("p{i}"), *m))
            .collect();
        let scores = items
            .iter()
            .enumerate()
            .map(|(i, (_, s))| (format!("p{i}"), *s))
            .collect();
        (labels, scores)
    }

    proptest! {
        #[test]
        fn recall_and_counts_non_increasing(items in labeled_set()) {
            let (labels, scores) = materialize(&items);
            let grid = parse_grid(DEFAULT_GRID).unwrap();
            let points = sweep(&labels, &scores, &grid).unwrap();
            for w in points.windows(2) {
                prop_assert!(w[1].recall <= w[0].recall);
                prop_assert!(w[1].predicted_meme_count <= w[0].predicted_meme_count);
            }
            for p in &points {
                prop_assert_eq!(p.tp + p.fp + p.tn + p.fn_, items.len());
            }
        }

        #[test]
        fn selection_is_a_qualifying_input(items in labeled_set(), floor in 0.0f64..1.0) {
            let (labels, scores) = materialize(&items);
            let points = sweep(&labels, &scores, &parse_grid(DEFAULT_GRID).unwrap()).unwrap();
            if let Ok(t) = select_threshold(&points, floor) {
                let chosen = points.iter().find(|p| p.threshold == t).unwrap();
                prop_assert!(chosen.precision >= floor);
                for p in points.iter().filter(|p| p.precision >= floor) {
                    prop_assert!(p.recall <= chosen.recall);
                }
            } else {
                prop_assert!(points.iter().all(|p| p.precision < floor));
            }
        }
    }
}
