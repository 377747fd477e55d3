//! Cumulative solved-task curves: solved records sorted by a cost metric,
//! x is the running sum of that metric and y the number solved so far.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub engine: String,
    pub cost_model: String,
    pub rep: usize,
    /// `time` (seconds) or `evaluations`.
    pub metric: String,
    pub x: f64,
    pub y: usize,
}

/// One series per (engine, cost model, repetition) and metric.
pub fn emit_curves(records: &[RunRecord]) -> Vec<CurvePoint> {
    let mut series: Vec<(String, String, usize)> = records
        .iter()
        .map(|r| (r.engine.clone(), r.cost_model.clone(), r.rep))
        .collect();
    series.sort();
    series.dedup();
    let mut out = Vec::new();
    for (engine, cost_model, rep) in series {
        let solved: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.solved() && r.engine == engine && r.cost_model == cost_model && r.rep == rep)
            .collect();
        let metrics: [(&str, fn(&RunRecord) -> f64); 2] =
            [("time", |r| r.elapsed_s), ("evaluations", |r| r.evaluations as f64)];
        for (metric, value) in metrics {
            let mut xs: Vec<f64> = solved.iter().map(|r| value(r)).collect();
            xs.sort_by(f64::total_cmp);
            let mut sum = 0.0;
            for (i, x) in xs.into_iter().enumerate() {
                sum += x;
                out.push(CurvePoint {
                    engine: engine.clone(),
                    cost_model: cost_model.clone(),
                    rep,
                    metric: metric.into(),
                    x: sum,
                    y: i + 1,
                });
            }
        }
    }
    out
}

pub fn write_curves(path: impl AsRef<Path>, points: &[CurvePoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(["engine", "cost_model", "rep", "metric", "x", "y"])?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curves(path: impl AsRef<Path>) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let points = r.deserialize().collect::<std::result::Result<Vec<CurvePoint>, _>>()?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solved(task: &str, secs: f64) -> RunRecord {
        RunRecord {
            task: task.into(),
            engine: "bee".into(),
            cost_model: "probe".into(),
            outcome: "solved".into(),
            evaluations: (secs * 10.0) as u64,
            generations: 0,
            elapsed_s: secs,
            solution: String::new(),
            solution_size: None,
            solution_cost: None,
            rep: 0,
            error: String::new(),
        }
    }

    #[test]
    fn prefix_sums_by_time() {
        let records = vec![solved("c", 4.0), solved("a", 1.0), solved("b", 2.0)];
        let time: Vec<(f64, usize)> = emit_curves(&records)
            .into_iter()
            .filter(|p| p.metric == "time")
            .map(|p| (p.x, p.y))
            .collect();
        assert_eq!(time, vec![(1.0, 1), (3.0, 2), (7.0, 3)]);
    }

    #[test]
    fn header_only_without_solutions() {
        let mut r = solved("a", 1.0);
        r.outcome = "timeout".into();
        let points = emit_curves(&[r]);
        assert!(points.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        write_curves(&path, &points).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "engine,cost_model,rep,metric,x,y\n");
        assert!(read_curves(&path).unwrap().is_empty());
    }
}
