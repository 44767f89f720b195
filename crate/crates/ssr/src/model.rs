//! Two-component mixture domains and seeded dataset generation.
//!
//! A [`DomainSpec`] describes a mixture of two components with means
//! `mean_pos` / `mean_neg`, isotropic noise of scale `sigma` (Gaussian or
//! bounded uniform), mixing weight `mixing_pos`, and a componentwise feature
//! map applied after the noise. The symmetric labeled-domain case is
//! `mean_neg = -mean_pos` with `mixing_pos = 0.5`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::util;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mean vectors have mismatched dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("mixing_pos must lie in (0,1), got {0}")]
    BadMixing(f64),
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("malformed dataset CSV: {0}")]
    CsvParse(String),
}

/// Componentwise feature map kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMapKind {
    /// x ↦ x.
    Identity,
    /// x_j ↦ c·tanh(x_j/c); saturates at ±c, 1-Lipschitz in every ℓp norm.
    ScaledSaturating { c: f64 },
}

/// A componentwise feature map with its recorded Lipschitz constants
/// (composite bounds in ℓ₂ and ℓ∞).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub kind: FeatureMapKind,
    pub lipschitz_l2: f64,
    pub lipschitz_linf: f64,
}

impl FeatureMap {
    pub fn identity() -> Self {
        FeatureMap {
            kind: FeatureMapKind::Identity,
            lipschitz_l2: 1.0,
            lipschitz_linf: 1.0,
        }
    }

    pub fn scaled_saturating(c: f64) -> Result<Self, ModelError> {
        if c <= 0.0 {
            return Err(ModelError::NonPositive("saturation scale c", c));
        }
        Ok(FeatureMap {
            kind: FeatureMapKind::ScaledSaturating { c },
            lipschitz_l2: 1.0,
            lipschitz_linf: 1.0,
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, FeatureMapKind::Identity)
    }

    #[inline]
    pub fn apply_scalar(&self, x: f64) -> f64 {
        match self.kind {
            FeatureMapKind::Identity => x,
            FeatureMapKind::ScaledSaturating { c } => c * (x / c).tanh(),
        }
    }
}

/// Noise families; both are sub-Gaussian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    /// Componentwise i.i.d. N(0, σ²).
    Gaussian,
    /// Componentwise i.i.d. uniform on [−half_width, +half_width]
    /// (σ is ignored for this family).
    BoundedUniform { half_width: f64 },
}

/// A two-component mixture over feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub dim: usize,
    pub mean_pos: Array1<f64>,
    pub mean_neg: Array1<f64>,
    pub sigma: f64,
    pub mixing_pos: f64,
    pub noise_family: NoiseFamily,
    pub feature_map: FeatureMap,
}

impl DomainSpec {
    pub fn new(
        mean_pos: Array1<f64>,
        mean_neg: Array1<f64>,
        sigma: f64,
        mixing_pos: f64,
        noise_family: NoiseFamily,
        feature_map: FeatureMap,
    ) -> Result<Self, ModelError> {
        if mean_pos.len() != mean_neg.len() {
            return Err(ModelError::DimensionMismatch(mean_pos.len(), mean_neg.len()));
        }
        if !(mixing_pos > 0.0 && mixing_pos < 1.0) {
            return Err(ModelError::BadMixing(mixing_pos));
        }
        if sigma < 0.0 {
            return Err(ModelError::NonPositive("sigma", sigma));
        }
        Ok(DomainSpec {
            dim: mean_pos.len(),
            mean_pos,
            mean_neg,
            sigma,
            mixing_pos,
            noise_family,
            feature_map,
        })
    }

    /// The symmetric Gaussian case: means ±μ, uniform mixture, identity map.
    pub fn symmetric_gaussian(mu: Array1<f64>, sigma: f64) -> Self {
        let neg = mu.mapv(|v| -v);
        DomainSpec::new(mu, neg, sigma, 0.5, NoiseFamily::Gaussian, FeatureMap::identity())
            .expect("symmetric spec is always valid")
    }

    /// Content hash of the domain spec (canonical JSON serialization).
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        util::digest_hex(json.as_bytes())
    }
}

/// A generated feature matrix with optional ±1 labels and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Option<Vec<i8>>,
    pub seed: u64,
    pub spec_digest: String,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Serializes to CSV: header `f0,...,f{d-1}[,label]`, UTF-8, LF line
    /// endings, floats with 17 significant digits (round-trip exact).
    pub fn to_csv_string(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        for j in 0..d {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("f{j}"));
        }
        if self.labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for (i, row) in self.features.rows().into_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&util::fmt_f64(*v));
            }
            if let Some(labels) = &self.labels {
                out.push(',');
                out.push_str(&labels[i].to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form produced by [`Dataset::to_csv_string`]. Seed and
    /// spec digest are not part of the CSV contract and reset to defaults.
    pub fn from_csv_str(s: &str) -> Result<Self, ModelError> {
        let mut lines = s.lines();
        let header = lines
            .next()
            .ok_or_else(|| ModelError::CsvParse("empty input".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let labeled = cols.last() == Some(&"label");
        let d = if labeled { cols.len() - 1 } else { cols.len() };
        for (j, c) in cols.iter().take(d).enumerate() {
            if *c != format!("f{j}") {
                return Err(ModelError::CsvParse(format!("bad header column {c:?}")));
            }
        }
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut n = 0usize;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(ModelError::CsvParse(format!(
                    "row has {} fields, expected {}",
                    fields.len(),
                    cols.len()
                )));
            }
            for f in fields.iter().take(d) {
                data.push(
                    f.parse::<f64>()
                        .map_err(|e| ModelError::CsvParse(format!("bad float {f:?}: {e}")))?,
                );
            }
            if labeled {
                let l: i8 = fields[d]
                    .parse()
                    .map_err(|e| ModelError::CsvParse(format!("bad label: {e}")))?;
                if l != 1 && l != -1 {
                    return Err(ModelError::CsvParse(format!("label must be ±1, got {l}")));
                }
                labels.push(l);
            }
            n += 1;
        }
        let features = Array2::from_shape_vec((n, d), data)
            .map_err(|e| ModelError::CsvParse(e.to_string()))?;
        Ok(Dataset {
            features,
            labels: if labeled { Some(labels) } else { None },
            seed: 0,
            spec_digest: String::new(),
        })
    }
}

/// Separation statistics for the feature-space class means.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationReport {
    /// Estimate of ‖E φ(pos) − E φ(neg)‖₂.
    pub separation: f64,
    /// separation / (2√dim), exactly.
    pub alpha: f64,
    pub mc_samples: usize,
}

/// Draws one row: label first, then the component noise, then the map.
fn sample_row<R: Rng>(spec: &DomainSpec, rng: &mut R) -> (i8, Vec<f64>) {
    let y: i8 = if rng.gen::<f64>() < spec.mixing_pos { 1 } else { -1 };
    let mean = if y == 1 { &spec.mean_pos } else { &spec.mean_neg };
    let mut row = Vec::with_capacity(spec.dim);
    match spec.noise_family {
        NoiseFamily::Gaussian => {
            for j in 0..spec.dim {
                let z: f64 = StandardNormal.sample(rng);
                row.push(spec.feature_map.apply_scalar(mean[j] + spec.sigma * z));
            }
        }
        NoiseFamily::BoundedUniform { half_width } => {
            let u = Uniform::new_inclusive(-half_width, half_width);
            for j in 0..spec.dim {
                let z: f64 = u.sample(rng);
                row.push(spec.feature_map.apply_scalar(mean[j] + z));
            }
        }
    }
    (y, row)
}

fn sample_rows(spec: &DomainSpec, n: usize, seed: u64) -> (Vec<i8>, Array2<f64>) {
    let rows: Vec<(i8, Vec<f64>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::row_stream(seed, i);
            sample_row(spec, &mut r)
        })
        .collect();
    let mut labels = Vec::with_capacity(n);
    let mut flat = Vec::with_capacity(n * spec.dim);
    for (y, row) in rows {
        labels.push(y);
        flat.extend_from_slice(&row);
    }
    let features = Array2::from_shape_vec((n, spec.dim), flat).expect("shape matches");
    (labels, features)
}

/// Draws `n` labeled rows i.i.d. from the mixture. Deterministic given
/// `(spec, n, seed)`; row-parallel generation matches sequential bit for bit.
pub fn sample_labeled(spec: &DomainSpec, n: usize, seed: u64) -> Dataset {
    assert!(n >= 1, "n must be >= 1");
    let (labels, features) = sample_rows(spec, n, seed);
    Dataset {
        features,
        labels: Some(labels),
        seed,
        spec_digest: spec.digest(),
    }
}

/// As [`sample_labeled`], but the hidden component assignment is dropped.
pub fn sample_unlabeled(spec: &DomainSpec, n: usize, seed: u64) -> Dataset {
    let mut ds = sample_labeled(spec, n, seed);
    ds.labels = None;
    ds
}

/// Test-support sampler that additionally returns the hidden component
/// assignment of each unlabeled row (for scoring pseudo-label accuracy and
/// support-recovery ground truth).
pub fn sample_with_components(spec: &DomainSpec, n: usize, seed: u64) -> (Dataset, Vec<i8>) {
    let ds = sample_labeled(spec, n, seed);
    let components = ds.labels.clone().expect("labeled sampler sets labels");
    let mut unlabeled = ds;
    unlabeled.labels = None;
    (unlabeled, components)
}

/// Applies the feature map componentwise to a point matrix.
pub fn apply_feature_map(map: &FeatureMap, points: &ArrayView2<f64>) -> Array2<f64> {
    points.mapv(|v| map.apply_scalar(v))
}

/// Estimates ‖E φ(pos-component) − E φ(neg-component)‖ and the separation
/// constant α = separation/(2√d). For the identity map the component means
/// are exact and no Monte Carlo is needed.
pub fn separation_stats(spec: &DomainSpec, mc_samples: usize, seed: u64) -> SeparationReport {
    assert!(mc_samples >= 2, "mc_samples must be >= 2");
    let separation = if spec.feature_map.is_identity() {
        (&spec.mean_pos - &spec.mean_neg).mapv(|v| v * v).sum().sqrt()
    } else {
        // One pure component per sign: force the mixture to each side.
        let mean_of = |mean: &Array1<f64>, sub: u64| -> Array1<f64> {
            let one_comp = DomainSpec {
                mean_pos: mean.clone(),
                mean_neg: mean.clone(),
                ..spec.clone()
            };
            let (_, features) =
                sample_rows(&one_comp, mc_samples, rng::derive_seed(&[seed, sub]));
            features.mean_axis(Axis(0)).expect("mc_samples >= 2")
        };
        let m_pos = mean_of(&spec.mean_pos, 0);
        let m_neg = mean_of(&spec.mean_neg, 1);
        (&m_pos - &m_neg).mapv(|v| v * v).sum().sqrt()
    };
    SeparationReport {
        separation,
        alpha: separation / (2.0 * (spec.dim as f64).sqrt()),
        mc_samples,
    }
}
