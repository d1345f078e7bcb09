//! Model selection over metric reports: each metric marks its best model(s)
//! and models are ranked by the number of metrics they are best on.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Higher,
    Lower,
}

impl Direction {
    fn arrow(self) -> &'static str {
        match self {
            Direction::Higher => "↑",
            Direction::Lower => "↓",
        }
    }
}

/// A comparable metric value; multi-component values compare lexicographically.
type Value = Vec<f64>;

fn selection_metrics(r: &MetricReport) -> Vec<(&'static str, Direction, Option<Value>)> {
    use Direction::*;
    let s = |v: f64| Some(vec![v]);
    vec![
        ("DisRecall", Higher, s(r.dis_recall)),
        ("AnyDisRefMatch", Higher, s(r.any_dis_ref_match)),
        ("AnyDisInText", Higher, s(r.any_dis_in_text)),
        ("KeyInDis", Lower, s(r.key_in_dis)),
        ("AnySameDis", Lower, s(r.any_same_dis)),
        ("AllSameDis", Lower, s(r.all_same_dis)),
        ("AnyDisRep", Lower, s(r.any_dis_rep)),
        ("AnyDisEmpty", Lower, s(r.any_dis_empty)),
        ("AnyDisFromTrainDis", Lower, r.any_dis_from_train_dis.map(|v| vec![v])),
        ("MeanNCPTK", Higher, r.ncptk.as_ref().map(|n| vec![n.mean])),
        ("MedianNCPTK", Higher, r.ncptk.as_ref().map(|n| vec![n.median])),
        ("ModeNCPTK", Higher, r.ncptk.as_ref().map(|n| vec![n.mode, n.mode_share])),
    ]
}

fn cmp_value(a: &Value, b: &Value) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn render(v: &Value) -> String {
    match v.as_slice() {
        [x] => format!("{x:.2}"),
        [x, share] => format!("{x:.2} ({share:.2}%)"),
        _ => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub metric: String,
    pub direction: Direction,
    pub values: Vec<Value>,
    /// Indices of the models attaining the best value.
    pub best: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTable {
    pub models: Vec<String>,
    pub rows: Vec<SelectionRow>,
    pub wins: Vec<usize>,
    /// Competition ranks by win count (ties share a rank).
    pub ranks: Vec<usize>,
}

impl SelectionTable {
    /// Models holding rank 1.
    pub fn winners(&self) -> Vec<&str> {
        self.models
            .iter()
            .zip(&self.ranks)
            .filter(|(_, &r)| r == 1)
            .map(|(m, _)| m.as_str())
            .collect()
    }
}

/// Compares named reports. Metrics that are NA must be NA in every report.
pub fn model_select(reports: &[(String, MetricReport)]) -> Result<SelectionTable> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("model selection needs at least two reports".into()));
    }
    let per_model: Vec<Vec<(&'static str, Direction, Option<Value>)>> =
        reports.iter().map(|(_, r)| selection_metrics(r)).collect();
    fn keys(m: &[(&'static str, Direction, Option<Value>)]) -> Vec<&'static str> {
        m.iter().filter(|e| e.2.is_some()).map(|e| e.0).collect()
    }
    let reference = keys(&per_model[0]);
    for (i, m) in per_model.iter().enumerate().skip(1) {
        if keys(m) != reference {
            return Err(Error::InvalidArgument(format!(
                "report `{}` has metrics {:?}, expected {:?}",
                reports[i].0,
                keys(m),
                reference
            )));
        }
    }

    let n = reports.len();
    let mut wins = vec![0; n];
    let mut rows = Vec::new();
    for (k, &(name, dir, _)) in per_model[0].iter().enumerate() {
        let values: Vec<Value> = match per_model.iter().map(|m| m[k].2.clone()).collect::<Option<_>>() {
            Some(v) => v,
            None => continue,
        };
        let better = |a: &Value, b: &Value| match dir {
            Direction::Higher => cmp_value(a, b),
            Direction::Lower => cmp_value(b, a),
        };
        let top = values
            .iter()
            .max_by(|a, b| better(a, b))
            .expect("non-empty")
            .clone();
        let best: Vec<usize> = (0..n).filter(|&i| cmp_value(&values[i], &top).is_eq()).collect();
        for &i in &best {
            wins[i] += 1;
        }
        rows.push(SelectionRow {
            metric: name.to_string(),
            direction: dir,
            values,
            best,
        });
    }
    let ranks = wins
        .iter()
        .map(|w| 1 + wins.iter().filter(|o| *o > w).count())
        .collect();
    Ok(SelectionTable {
        models: reports.iter().map(|(n, _)| n.clone()).collect(),
        rows,
        wins,
        ranks,
    })
}

impl fmt::Display for SelectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut grid: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["Metric".to_string()];
        header.extend(self.models.iter().cloned());
        grid.push(header);
        for r in &self.rows {
            let mut line = vec![format!("{} {}", r.metric, r.direction.arrow())];
            for (i, v) in r.values.iter().enumerate() {
                let mark = if r.best.contains(&i) { "*" } else { "" };
                line.push(format!("{}{mark}", render(v)));
            }
            grid.push(line);
        }
        let mut wins = vec!["Wins".to_string()];
        wins.extend(self.wins.iter().map(|w| w.to_string()));
        grid.push(wins);
        let mut ranks = vec!["Rank".to_string()];
        ranks.extend(self.ranks.iter().map(|r| r.to_string()));
        grid.push(ranks);

        let cols = grid[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        for row in &grid {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    let pad = w - cell.chars().count();
                    if c == 0 {
                        format!("{cell}{}", " ".repeat(pad))
                    } else {
                        format!("{}{cell}", " ".repeat(pad))
                    }
                })
                .collect();
            writeln!(f, "{}", cells.join("  "))?;
        }
        Ok(())
    }
}
