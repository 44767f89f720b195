//! Mean-difference estimators: supervised (half-split), pseudo-label
//! semi-supervised, and sparse-projected fits, all producing a
//! [`LinearClassifier`] with decision rule sgn(wᵀ(x − b)).

use ndarray::{Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Dataset;
use crate::util;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("labeled fit requires labels")]
    MissingLabels,
    #[error("labeled fit requires an even row count >= 2, got {0}")]
    SplitError(usize),
    #[error("estimated weight vector is zero")]
    DegenerateEstimator,
    #[error("dimension mismatch: classifier dim {0}, input dim {1}")]
    DimensionError(usize, usize),
    #[error("pseudo-label split is degenerate (n_pos={0}, n_neg={1})")]
    DegeneratePseudoSplit(usize, usize),
    #[error("pseudo-labeling expects an unlabeled dataset")]
    LabeledInput,
    #[error("sparse fit requires a non-empty support")]
    EmptySupport,
    #[error("support index {0} out of range for dim {1}")]
    SupportOutOfRange(usize, usize),
    #[error("classifier JSON: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Supervised,
    SemiSupervised,
    Sparse,
    Explicit,
}

impl Provenance {
    fn as_str(self) -> &'static str {
        match self {
            Provenance::Supervised => "supervised",
            Provenance::SemiSupervised => "semi_supervised",
            Provenance::Sparse => "sparse",
            Provenance::Explicit => "explicit",
        }
    }
}

/// Linear rule sgn(wᵀ(x − b)) with the tie sgn(0) := +1.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearClassifier {
    pub w: Array1<f64>,
    pub b: Array1<f64>,
    pub provenance: Provenance,
}

impl LinearClassifier {
    pub fn new(
        w: Array1<f64>,
        b: Array1<f64>,
        provenance: Provenance,
    ) -> Result<Self, EstimatorError> {
        if w.len() != b.len() {
            return Err(EstimatorError::DimensionError(w.len(), b.len()));
        }
        if w.iter().all(|&v| v == 0.0) {
            return Err(EstimatorError::DegenerateEstimator);
        }
        Ok(LinearClassifier { w, b, provenance })
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// JSON form `{"w": [...], "b": [...], "provenance": "..."}` with
    /// 17-significant-digit floats.
    pub fn to_json_string(&self) -> String {
        let join = |v: &Array1<f64>| {
            v.iter().map(|&x| util::fmt_f64(x)).collect::<Vec<_>>().join(",")
        };
        format!(
            "{{\"w\":[{}],\"b\":[{}],\"provenance\":\"{}\"}}",
            join(&self.w),
            join(&self.b),
            self.provenance.as_str()
        )
    }

    pub fn from_json_str(s: &str) -> Result<Self, EstimatorError> {
        #[derive(Deserialize)]
        struct Raw {
            w: Vec<f64>,
            b: Vec<f64>,
            provenance: Provenance,
        }
        let raw: Raw =
            serde_json::from_str(s).map_err(|e| EstimatorError::Json(e.to_string()))?;
        LinearClassifier::new(Array1::from(raw.w), Array1::from(raw.b), raw.provenance)
    }
}

/// Pseudo-labels assigned to an unlabeled set, with per-class counts.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabelReport {
    pub labels: Vec<i8>,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Half-split supervised fit: w from the mean of yᵢxᵢ over the first half of
/// the rows, b from the plain mean over the second half. The split is the
/// independence device that keeps the two estimates decoupled.
pub fn fit_supervised(data: &Dataset) -> Result<LinearClassifier, EstimatorError> {
    let labels = data.labels.as_ref().ok_or(EstimatorError::MissingLabels)?;
    let rows = data.n_rows();
    if rows < 2 || rows % 2 != 0 {
        return Err(EstimatorError::SplitError(rows));
    }
    let n = rows / 2;
    let d = data.dim();
    let mut w = Array1::<f64>::zeros(d);
    for i in 0..n {
        let y = f64::from(labels[i]);
        w.scaled_add(y, &data.features.row(i));
    }
    w /= n as f64;
    let mut b = Array1::<f64>::zeros(d);
    for i in n..rows {
        b += &data.features.row(i);
    }
    b /= n as f64;
    LinearClassifier::new(w, b, Provenance::Supervised)
}

/// sgn(wᵀ(x − b)) with sgn(0) = +1.
pub fn predict(clf: &LinearClassifier, x: &ArrayView1<f64>) -> Result<i8, EstimatorError> {
    if x.len() != clf.dim() {
        return Err(EstimatorError::DimensionError(clf.dim(), x.len()));
    }
    let margin: f64 = clf
        .w
        .iter()
        .zip(x.iter().zip(clf.b.iter()))
        .map(|(&w, (&xi, &bi))| w * (xi - bi))
        .sum();
    Ok(if margin >= 0.0 { 1 } else { -1 })
}

/// Labels every unlabeled row with the classifier's prediction.
pub fn pseudo_label(
    clf: &LinearClassifier,
    unlabeled: &Dataset,
) -> Result<PseudoLabelReport, EstimatorError> {
    if unlabeled.labels.is_some() {
        return Err(EstimatorError::LabeledInput);
    }
    let mut labels = Vec::with_capacity(unlabeled.n_rows());
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for row in unlabeled.features.rows() {
        let y = predict(clf, &row)?;
        if y == 1 {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
        labels.push(y);
    }
    Ok(PseudoLabelReport { labels, n_pos, n_neg })
}

/// Pseudo-label fit: w̃ = m₊/2 − m₋/2 and b̃ = m₊/2 + m₋/2 where m± are the
/// pseudo-class means (the 1/(2ñ₁), 1/(2ñ₂) normalization).
pub fn fit_semi_supervised(
    report: &PseudoLabelReport,
    unlabeled: &Dataset,
) -> Result<LinearClassifier, EstimatorError> {
    if report.labels.len() != unlabeled.n_rows() {
        return Err(EstimatorError::DimensionError(report.labels.len(), unlabeled.n_rows()));
    }
    if report.n_pos == 0 || report.n_neg == 0 {
        return Err(EstimatorError::DegeneratePseudoSplit(report.n_pos, report.n_neg));
    }
    let d = unlabeled.dim();
    let mut m_pos = Array1::<f64>::zeros(d);
    let mut m_neg = Array1::<f64>::zeros(d);
    for (i, row) in unlabeled.features.rows().into_iter().enumerate() {
        if report.labels[i] == 1 {
            m_pos += &row;
        } else {
            m_neg += &row;
        }
    }
    m_pos /= report.n_pos as f64;
    m_neg /= report.n_neg as f64;
    let w = (&m_pos - &m_neg) / 2.0;
    let b = (&m_pos + &m_neg) / 2.0;
    LinearClassifier::new(w, b, Provenance::SemiSupervised)
}

/// Supervised fit restricted to the columns in `support`, then embedded back
/// into length-d vectors with zeros off-support so downstream evaluation is
/// uniform.
pub fn fit_sparse(
    labeled: &Dataset,
    support: &[usize],
) -> Result<LinearClassifier, EstimatorError> {
    if support.is_empty() {
        return Err(EstimatorError::EmptySupport);
    }
    let d = labeled.dim();
    for &j in support {
        if j >= d {
            return Err(EstimatorError::SupportOutOfRange(j, d));
        }
    }
    let restricted = labeled.features.select(Axis(1), support);
    let sub = Dataset {
        features: restricted,
        labels: labeled.labels.clone(),
        seed: labeled.seed,
        spec_digest: labeled.spec_digest.clone(),
    };
    let clf = fit_supervised(&sub)?;
    let mut w = Array1::<f64>::zeros(d);
    let mut b = Array1::<f64>::zeros(d);
    for (k, &j) in support.iter().enumerate() {
        w[j] = clf.w[k];
        b[j] = clf.b[k];
    }
    LinearClassifier::new(w, b, Provenance::Sparse)
}
