//! Confusion-matrix metrics, fold pooling, and the predictions CSV.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const N_CLASSES: usize = 5;
pub const CLASS_NAMES: [&str; N_CLASSES] = ["W", "N1", "N2", "N3", "REM"];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {0} is outside 0..5")]
    LabelOutOfRange(usize),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("predictions file: {0}")]
    Csv(#[from] csv::Error),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for v in [t, p] {
            if v >= N_CLASSES {
                return Err(EvalError::LabelOutOfRange(v));
            }
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

fn nonempty(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    match cm.total() {
        0 => Err(EvalError::EmptyMatrix),
        n => Ok(n as f64),
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    Ok(cm.trace() as f64 / nonempty(cm)?)
}

/// `2TP / (2TP + FP + FN)`, zero when the denominator is zero.
pub fn per_class_f1(cm: &ConfusionMatrix) -> Result<[f64; N_CLASSES], EvalError> {
    nonempty(cm)?;
    let mut out = [0.0; N_CLASSES];
    for (c, f1) in out.iter_mut().enumerate() {
        let tp = cm.counts[c][c];
        let fp = cm.col_sum(c) - tp;
        let fn_ = cm.row_sum(c) - tp;
        let denom = 2 * tp + fp + fn_;
        *f1 = if denom == 0 {
            0.0
        } else {
            (2 * tp) as f64 / denom as f64
        };
    }
    Ok(out)
}

pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    Ok(per_class_f1(cm)?.iter().sum::<f64>() / N_CLASSES as f64)
}

pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let n = nonempty(cm)?;
    let p_o = cm.trace() as f64 / n;
    let p_e = (0..N_CLASSES)
        .map(|c| cm.row_sum(c) as f64 * cm.col_sum(c) as f64)
        .sum::<f64>()
        / (n * n);
    if p_e == 1.0 {
        return Ok(if p_o == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub kappa: f64,
    pub per_class_f1: [f64; N_CLASSES],
    pub n_epochs: u64,
    pub n_folds: usize,
    pub aggregation: String,
    pub confusion: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flops: Option<u64>,
}

impl MetricsReport {
    pub fn from_matrix(cm: &ConfusionMatrix) -> Result<Self, EvalError> {
        Ok(Self {
            accuracy: accuracy(cm)?,
            macro_f1: macro_f1(cm)?,
            kappa: cohen_kappa(cm)?,
            per_class_f1: per_class_f1(cm)?,
            n_epochs: cm.total(),
            n_folds: 1,
            aggregation: "pooled".into(),
            confusion: *cm,
            params: None,
            flops: None,
        })
    }

    /// Two-line table: ACC, MF1, κ, per-stage F1, Params, FLOPs.
    pub fn to_table(&self) -> String {
        let mut head = format!("{:>7} {:>7} {:>6}", "ACC(%)", "MF1(%)", "kappa");
        for name in CLASS_NAMES {
            head.push_str(&format!(" {name:>6}"));
        }
        head.push_str(&format!(" {:>8} {:>8}", "Params", "FLOPs"));
        let mut row = format!(
            "{:>7.1} {:>7.1} {:>6.3}",
            100.0 * self.accuracy,
            100.0 * self.macro_f1,
            self.kappa
        );
        for f in self.per_class_f1 {
            row.push_str(&format!(" {:>6.1}", 100.0 * f));
        }
        let params = self
            .params
            .map_or("-".to_string(), |p| format!("{:.1}K", p as f64 / 1e3));
        let flops = self
            .flops
            .map_or("-".to_string(), |f| format!("{:.2}M", f as f64 / 1e6));
        row.push_str(&format!(" {params:>8} {flops:>8}"));
        format!(
            "{head}\n{row}\n({} epochs, {} fold(s), {} aggregation)\n",
            self.n_epochs, self.n_folds, self.aggregation
        )
    }
}

/// Pools every fold's confusion matrix and computes metrics once.
pub fn aggregate_folds(folds: &[ConfusionMatrix]) -> Result<MetricsReport, EvalError> {
    let mut pooled = ConfusionMatrix::default();
    for cm in folds {
        pooled.add(cm);
    }
    let mut report = MetricsReport::from_matrix(&pooled)?;
    report.n_folds = folds.len();
    Ok(report)
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub index: usize,
    pub subject: String,
    #[serde(rename = "true")]
    pub truth: usize,
    pub predicted: usize,
    pub p0: f32,
    pub p1: f32,
    pub p2: f32,
    pub p3: f32,
    pub p4: f32,
}

impl PredictionRow {
    pub fn new(index: usize, subject: &str, truth: usize, probs: &[f32]) -> Self {
        let predicted = probs
            .iter()
            .enumerate()
            .fold(
                (0, f32::NEG_INFINITY),
                |b, (i, &p)| if p > b.1 { (i, p) } else { b },
            )
            .0;
        let p = |i: usize| probs.get(i).copied().unwrap_or(0.0);
        Self {
            index,
            subject: subject.to_string(),
            truth,
            predicted,
            p0: p(0),
            p1: p(1),
            p2: p(2),
            p3: p(3),
            p4: p(4),
        }
    }

    pub fn probs(&self) -> [f32; N_CLASSES] {
        [self.p0, self.p1, self.p2, self.p3, self.p4]
    }
}

pub fn write_predictions<W: Write>(out: W, rows: &[PredictionRow]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "index",
            "subject",
            "true",
            "predicted",
            "p0",
            "p1",
            "p2",
            "p3",
            "p4",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_predictions<R: Read>(input: R) -> Result<Vec<PredictionRow>, EvalError> {
    let mut r = csv::Reader::from_reader(input);
    let rows = r.deserialize().collect::<Result<Vec<PredictionRow>, _>>()?;
    for row in &rows {
        for v in [row.truth, row.predicted] {
            if v >= N_CLASSES {
                return Err(EvalError::LabelOutOfRange(v));
            }
        }
    }
    Ok(rows)
}

pub fn confusion_of_rows(rows: &[PredictionRow]) -> Result<ConfusionMatrix, EvalError> {
    let t: Vec<usize> = rows.iter().map(|r| r.truth).collect();
    let p: Vec<usize> = rows.iter().map(|r| r.predicted).collect();
    confusion(&t, &p)
}
