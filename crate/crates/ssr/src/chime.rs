//! CHIME: high-dimensional EM for two-component Gaussian mixtures with an
//! ℓ₁-regularized discriminant (soft thresholding) and a geometrically
//! decaying penalty, producing a sparse support estimate.
//!
//! One iteration is: E-step responsibilities γ, M-step (ω̂, μ̂₁, μ̂₂),
//! λ ← κλ + C_λ√(log d/n), β̂ = soft_threshold(μ̂₁ − μ̂₂, λ). The returned
//! support is Supp(β̂) after `t_max` iterations.

use ndarray::{Array1, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Dataset;
use crate::rng;
use crate::util;

#[derive(Debug, Error)]
pub enum ChimeError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("responsibilities collapsed to one component at iteration {iteration}")]
    CollapsedResponsibilities {
        iteration: usize,
        trajectory: Vec<TrajectoryPoint>,
    },
}

/// How the E-step exponent treats the noise scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaScaling {
    /// The printed update, which is the σ = 1 specialization.
    Unscaled,
    /// Divide the exponent by σ² (the exact Gaussian posterior for scale σ).
    VarianceScaled,
}

/// Tuning constants for the EM loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChimeConfig {
    /// Initialization constant C₁ in the λ⁽⁰⁾ rule.
    pub c1: f64,
    /// Penalty constant C_λ.
    pub c_lambda: f64,
    /// Geometric decay κ ∈ (0,1) of the penalty.
    pub kappa: f64,
    /// Iteration count T₀.
    pub t_max: usize,
    /// Top-s norm parameter; `None` resolves to max(1, ⌈d/10⌉).
    pub s: Option<usize>,
    pub sigma_scaling: SigmaScaling,
    /// Optional explicit initial component means (overrides the PCA rule).
    pub init_means: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for ChimeConfig {
    fn default() -> Self {
        ChimeConfig {
            c1: 0.5,
            c_lambda: 3.0,
            kappa: 0.3,
            t_max: 30,
            s: None,
            sigma_scaling: SigmaScaling::VarianceScaled,
            init_means: None,
        }
    }
}

impl ChimeConfig {
    pub fn resolved_s(&self, dim: usize) -> usize {
        self.s.unwrap_or_else(|| ((dim + 9) / 10).max(1))
    }
}

/// EM iterate: mixing weight, component means, discriminant, penalty.
#[derive(Clone, Debug, PartialEq)]
pub struct ChimeState {
    pub omega: f64,
    pub mu1_hat: Array1<f64>,
    pub mu2_hat: Array1<f64>,
    pub beta: Array1<f64>,
    pub lambda: f64,
    pub iteration: usize,
}

/// One `(iteration, lambda, support size)` record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub lambda: f64,
    pub support_size: usize,
}

/// Recovered support with the trajectory that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    pub support: Vec<usize>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_state: ChimeState,
}

impl SupportEstimate {
    /// JSON form `{"support": [...], "trajectory": [[t, lambda, size], ...]}`.
    pub fn to_json_string(&self) -> String {
        let support = self
            .support
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let traj = self
            .trajectory
            .iter()
            .map(|p| format!("[{},{},{}]", p.iteration, util::fmt_f64(p.lambda), p.support_size))
            .collect::<Vec<_>>()
            .join(",");
        format!("{{\"support\":[{support}],\"trajectory\":[{traj}]}}")
    }
}

/// The ℓ₁ prox: componentwise sgn(vⱼ)·max(|vⱼ| − λ, 0); the closed-form
/// minimizer of ½‖β‖² − βᵀv + λ‖β‖₁.
pub fn soft_threshold(v: &Array1<f64>, lambda: f64) -> Array1<f64> {
    assert!(lambda >= 0.0, "lambda must be nonnegative");
    v.mapv(|x| x.signum() * (x.abs() - lambda).max(0.0) * f64::from(x != 0.0))
}

/// E-step responsibilities γᵢ = ω̂/(ω̂ + (1−ω̂)·exp{eᵢ}), where
/// eᵢ = (μ̂₂−μ̂₁)ᵀ(x̃ᵢ − (μ̂₁+μ̂₂)/2), divided by σ² under
/// [`SigmaScaling::VarianceScaled`]. Exponents are clamped to [−700, 700].
pub fn e_step(state: &ChimeState, data: &Dataset, sigma: f64, cfg: &ChimeConfig) -> Array1<f64> {
    assert!(state.omega > 0.0 && state.omega < 1.0, "omega must lie in (0,1)");
    let diff = &state.mu2_hat - &state.mu1_hat;
    let mid = (&state.mu1_hat + &state.mu2_hat) / 2.0;
    let scale = match cfg.sigma_scaling {
        SigmaScaling::Unscaled => 1.0,
        SigmaScaling::VarianceScaled => sigma * sigma,
    };
    let omega = state.omega;
    let gammas: Vec<f64> = data
        .features
        .rows()
        .into_iter()
        .map(|row| {
            let mut e = 0.0;
            for (j, &x) in row.iter().enumerate() {
                e += diff[j] * (x - mid[j]);
            }
            let e = (e / scale).clamp(-700.0, 700.0);
            // Keep γ strictly inside (0, 1): extreme exponents would
            // otherwise round to exactly 0 or 1 in f64.
            (omega / (omega + (1.0 - omega) * e.exp()))
                .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
        })
        .collect();
    Array1::from(gammas)
}

/// M-step: ω̂ = (1/n)Σγ, μ̂₁ = Σ(1−γ)x̃ᵢ/(n−Σγ), μ̂₂ = Σγx̃ᵢ/Σγ (note the
/// convention: μ̂₁ is weighted by 1−γ).
pub fn m_step(
    data: &Dataset,
    gamma: &Array1<f64>,
) -> Result<(f64, Array1<f64>, Array1<f64>), ChimeError> {
    let n = data.n_rows();
    let sum_g: f64 = gamma.sum();
    if sum_g <= 1e-12 || sum_g >= n as f64 - 1e-12 {
        return Err(ChimeError::CollapsedResponsibilities { iteration: 0, trajectory: Vec::new() });
    }
    let d = data.dim();
    let mut s1 = Array1::<f64>::zeros(d);
    let mut s2 = Array1::<f64>::zeros(d);
    for (i, row) in data.features.rows().into_iter().enumerate() {
        let g = gamma[i];
        s1.scaled_add(1.0 - g, &row);
        s2.scaled_add(g, &row);
    }
    Ok((sum_g / n as f64, s1 / (n as f64 - sum_g), s2 / sum_g))
}

/// ℓ₂ norm of the s largest-magnitude entries.
fn top_s_norm(u: &Array1<f64>, s: usize) -> f64 {
    let mut mags: Vec<f64> = u.iter().map(|&v| v * v).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("no NaN"));
    mags.iter().take(s).sum::<f64>().sqrt()
}

fn base_penalty(cfg: &ChimeConfig, d: usize, n: usize) -> f64 {
    cfg.c_lambda * ((d as f64).ln() / n as f64).sqrt()
}

/// Deterministic initialization: ω̂⁽⁰⁾ = 0.5, component means at the sample
/// mean ∓ v̂·σ̂ where v̂ is the top principal direction of the centered data
/// (power iteration) and σ̂ the standard deviation along it. λ⁽⁰⁾ follows
/// C₁·max(|ω̂|, ‖μ̂₁⁽⁰⁾−μ̂₂⁽⁰⁾‖_{2,s})/√s + C_λ√(log d/n).
pub fn init_chime(data: &Dataset, cfg: &ChimeConfig, seed: u64) -> Result<ChimeState, ChimeError> {
    let n = data.n_rows();
    if n < 2 {
        return Err(ChimeError::TooFewRows(n));
    }
    let d = data.dim();
    let mean = data.features.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &data.features - &mean.view().insert_axis(Axis(0));

    let (mu1, mu2) = if let Some((a, b)) = &cfg.init_means {
        (Array1::from(a.clone()), Array1::from(b.clone()))
    } else {
        // Power iteration for the top principal direction, started from a
        // seed-derived unit vector (deterministic given data and seed).
        let mut rng = rng::stream(rng::derive_seed(&[seed, rng::tag_word("chime-init")]));
        let mut v = Array1::from(
            (0..d)
                .map(|_| rng.gen_range(-1.0f64..1.0))
                .collect::<Vec<f64>>(),
        );
        let norm = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
        v /= norm.max(1e-300);
        let mut degenerate = false;
        for _ in 0..50 {
            let proj = centered.dot(&v);
            let next = centered.t().dot(&proj);
            let norm = next.iter().map(|&x| x * x).sum::<f64>().sqrt();
            if norm <= 1e-12 {
                degenerate = true;
                break;
            }
            v = next / norm;
        }
        if degenerate {
            // Rank-deficient fallback: coordinate of maximal variance.
            let vars = centered.mapv(|x| x * x).mean_axis(Axis(0)).expect("n >= 2");
            let jmax = vars
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("no NaN"))
                .map(|(j, _)| j)
                .unwrap_or(0);
            v = Array1::zeros(d);
            v[jmax] = 1.0;
        }
        let proj = centered.dot(&v);
        let sd = (proj.mapv(|x| x * x).sum() / n as f64).sqrt();
        (&mean - &(&v * sd), &mean + &(&v * sd))
    };

    let omega = 0.5f64;
    let s = cfg.resolved_s(d);
    let diff = &mu1 - &mu2;
    let lambda = cfg.c1 * omega.abs().max(top_s_norm(&diff, s)) / (s as f64).sqrt()
        + base_penalty(cfg, d, n);
    let beta = soft_threshold(&diff, lambda);
    Ok(ChimeState { omega, mu1_hat: mu1, mu2_hat: mu2, beta, lambda, iteration: 0 })
}

fn support_of(beta: &Array1<f64>) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Runs initialization plus `t_max` EM iterations and returns the support of
/// the final discriminant with the full (iteration, λ, support size)
/// trajectory.
pub fn run_chime(
    data: &Dataset,
    sigma: f64,
    cfg: &ChimeConfig,
    seed: u64,
) -> Result<SupportEstimate, ChimeError> {
    let mut state = init_chime(data, cfg, seed)?;
    let d = data.dim();
    let n = data.n_rows();
    let base = base_penalty(cfg, d, n);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        lambda: state.lambda,
        support_size: support_of(&state.beta).len(),
    }];
    for t in 1..=cfg.t_max {
        let gamma = e_step(&state, data, sigma, cfg);
        let (omega, mu1, mu2) = m_step(data, &gamma).map_err(|e| match e {
            ChimeError::CollapsedResponsibilities { .. } => {
                ChimeError::CollapsedResponsibilities { iteration: t, trajectory: trajectory.clone() }
            }
            other => other,
        })?;
        state.omega = omega;
        state.mu1_hat = mu1;
        state.mu2_hat = mu2;
        state.lambda = cfg.kappa * state.lambda + base;
        state.beta = soft_threshold(&(&state.mu1_hat - &state.mu2_hat), state.lambda);
        state.iteration = t;
        trajectory.push(TrajectoryPoint {
            iteration: t,
            lambda: state.lambda,
            support_size: support_of(&state.beta).len(),
        });
    }
    Ok(SupportEstimate {
        support: support_of(&state.beta),
        trajectory,
        final_state: state,
    })
}

/// Parallel E-step over row blocks; identical output to [`e_step`] because
/// each responsibility depends only on its own row.
pub fn e_step_parallel(
    state: &ChimeState,
    data: &Dataset,
    sigma: f64,
    cfg: &ChimeConfig,
) -> Array1<f64> {
    let diff = &state.mu2_hat - &state.mu1_hat;
    let mid = (&state.mu1_hat + &state.mu2_hat) / 2.0;
    let scale = match cfg.sigma_scaling {
        SigmaScaling::Unscaled => 1.0,
        SigmaScaling::VarianceScaled => sigma * sigma,
    };
    let omega = state.omega;
    let gammas: Vec<f64> = (0..data.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = data.features.row(i);
            let mut e = 0.0;
            for (j, &x) in row.iter().enumerate() {
                e += diff[j] * (x - mid[j]);
            }
            let e = (e / scale).clamp(-700.0, 700.0);
            // Keep γ strictly inside (0, 1): extreme exponents would
            // otherwise round to exactly 0 or 1 in f64.
            (omega / (omega + (1.0 - omega) * e.exp()))
                .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
        })
        .collect();
    Array1::from(gammas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_unlabeled, DomainSpec};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng;

    fn unlabeled(rows: Vec<Vec<f64>>) -> Dataset {
        let n = rows.len();
        let d = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Dataset {
            features: Array2::from_shape_vec((n, d), flat).unwrap(),
            labels: None,
            seed: 0,
            spec_digest: String::new(),
        }
    }

    /// The sparse mixture used throughout: true support {0..m-1}, component
    /// means ±gap/2 on the support.
    fn sparse_mixture(d: usize, m: usize, gap: f64, sigma: f64) -> DomainSpec {
        let mut mu = Array1::<f64>::zeros(d);
        mu.slice_mut(ndarray::s![..m]).fill(gap / 2.0);
        DomainSpec::symmetric_gaussian(mu, sigma)
    }

    #[test]
    fn soft_threshold_values() {
        assert_eq!(soft_threshold(&array![2.0, -0.5], 1.0), array![1.0, 0.0]);
        let v = array![1.5, -2.0, 0.0];
        assert_eq!(soft_threshold(&v, 0.0), v);
    }

    #[test]
    fn soft_threshold_minimizes_objective() {
        // Random-search oracle at d = 3: no candidate beats the prox on
        // ½‖β‖² − βᵀv + λ‖β‖₁.
        let v = array![1.3, -0.4, 2.7];
        let lambda = 0.8;
        let objective = |b: &Array1<f64>| -> f64 {
            0.5 * b.iter().map(|x| x * x).sum::<f64>()
                - b.iter().zip(v.iter()).map(|(a, c)| a * c).sum::<f64>()
                + lambda * b.iter().map(|x| x.abs()).sum::<f64>()
        };
        let best = soft_threshold(&v, lambda);
        let f_best = objective(&best);
        let mut rng = crate::rng::stream(17);
        for _ in 0..1_000_000 {
            let cand = array![
                rng.gen_range(-4.0f64..4.0),
                rng.gen_range(-4.0f64..4.0),
                rng.gen_range(-4.0f64..4.0)
            ];
            assert!(objective(&cand) >= f_best - 1e-12);
        }
    }

    fn state(omega: f64, mu1: Array1<f64>, mu2: Array1<f64>) -> ChimeState {
        ChimeState {
            omega,
            beta: Array1::zeros(mu1.len()),
            mu1_hat: mu1,
            mu2_hat: mu2,
            lambda: 0.0,
            iteration: 0,
        }
    }

    #[test]
    fn e_step_symmetry_and_limits() {
        let cfg = ChimeConfig::default();
        let st = state(0.5, array![1.0, 0.0], array![-1.0, 0.0]);
        let data = unlabeled(vec![vec![0.0, 0.0]]);
        let g = e_step(&st, &data, 1.0, &cfg);
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-15);

        // Far on the μ̂₂ side: exponent → +∞ side gives γ → 0 (and vice versa).
        let data = unlabeled(vec![vec![-1e6, 0.0], vec![1e6, 0.0]]);
        let g = e_step(&st, &data, 1.0, &cfg);
        assert!(g[0] < 1e-250);
        assert!(g[1] > 1.0 - 1e-12);
        // Clamping keeps responsibilities strictly inside (0,1).
        assert!(g.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn e_step_variance_scaled_matches_literal_at_unit_sigma() {
        let literal = ChimeConfig { sigma_scaling: SigmaScaling::Unscaled, ..Default::default() };
        let scaled = ChimeConfig::default();
        let st = state(0.3, array![0.5, -0.2], array![-0.1, 0.9]);
        let spec = DomainSpec::symmetric_gaussian(array![1.0, -1.0], 1.0);
        let data = sample_unlabeled(&spec, 50, 3);
        let a = e_step(&st, &data, 1.0, &literal);
        let b = e_step(&st, &data, 1.0, &scaled);
        assert_eq!(a, b);
        // And the parallel E-step is bit-identical to the sequential one.
        let c = e_step_parallel(&st, &data, 1.0, &scaled);
        assert_eq!(b, c);
    }

    #[test]
    fn m_step_cases() {
        let data = unlabeled(vec![vec![2.0, 0.0], vec![0.0, 4.0]]);
        // Uniform responsibilities: both means collapse to the sample mean.
        let (omega, m1, m2) = m_step(&data, &array![0.5, 0.5]).unwrap();
        assert_eq!(omega, 0.5);
        assert_eq!(m1, array![1.0, 2.0]);
        assert_eq!(m2, array![1.0, 2.0]);

        // Hard assignment: γ = (1, 0) puts row b in component 1, row a in 2.
        let (omega, m1, m2) = m_step(&data, &array![1.0, 0.0]).unwrap();
        assert_eq!(omega, 0.5);
        assert_eq!(m1, array![0.0, 4.0]);
        assert_eq!(m2, array![2.0, 0.0]);

        assert!(matches!(
            m_step(&data, &array![0.0, 0.0]),
            Err(ChimeError::CollapsedResponsibilities { .. })
        ));
    }

    #[test]
    fn m_step_preserves_sample_mean() {
        let spec = DomainSpec::symmetric_gaussian(array![1.0, -0.5, 2.0], 1.0);
        let data = sample_unlabeled(&spec, 100, 8);
        let mut rng = crate::rng::stream(4);
        let gamma = Array1::from((0..100).map(|_| rng.gen_range(0.01f64..0.99)).collect::<Vec<f64>>());
        let (omega, m1, m2) = m_step(&data, &gamma).unwrap();
        let mean = data.features.mean_axis(ndarray::Axis(0)).unwrap();
        for j in 0..3 {
            let recon = (1.0 - omega) * m1[j] + omega * m2[j];
            assert!((recon - mean[j]).abs() <= 1e-10 * mean[j].abs().max(1.0));
        }
    }

    #[test]
    fn init_two_point_dataset() {
        let a = vec![0.0, 0.0];
        let b = vec![2.0, 2.0];
        let data = unlabeled(vec![a, b]);
        let cfg = ChimeConfig { s: Some(2), ..Default::default() };
        let st = init_chime(&data, &cfg, 0).unwrap();
        assert_eq!(st.omega, 0.5);
        // Means sit at the sample mean ∓ the (b−a) direction times the
        // std along it (= half the separation for two points).
        let diff = &st.mu2_hat - &st.mu1_hat;
        let along = diff[0].abs();
        assert_abs_diff_eq!(diff[0].abs(), diff[1].abs(), epsilon = 1e-9);
        assert_abs_diff_eq!(along, 2.0, epsilon = 1e-9);
        let mid = (&st.mu1_hat + &st.mu2_hat) / 2.0;
        assert_abs_diff_eq!(mid[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mid[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn top_s_norm_full_s_is_l2() {
        let u = array![3.0, -4.0, 1.0];
        assert_abs_diff_eq!(top_s_norm(&u, 3), 26.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(top_s_norm(&u, 1), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn init_discriminant_aligns_with_truth() {
        // d = 100, m = 10, ñ = 2000, gap at the recovery threshold: the init
        // discriminant has cosine ≥ 0.5 with μ̃₁ − μ̃₂ in ≥ 90/100 seeds.
        let d = 100;
        let m = 10;
        let n = 2000usize;
        let sigma = 1.0;
        let gap = 4.0 * sigma * (2.0 * m as f64 * (d as f64).ln() / n as f64).sqrt();
        let spec = sparse_mixture(d, m, gap, sigma);
        let truth = &spec.mean_pos - &spec.mean_neg;
        let tnorm = truth.iter().map(|&x| x * x).sum::<f64>().sqrt();
        let cfg = ChimeConfig::default();
        let mut ok = 0;
        for seed in 0..100u64 {
            let data = sample_unlabeled(&spec, n, seed);
            let st = init_chime(&data, &cfg, seed).unwrap();
            let diff = &st.mu1_hat - &st.mu2_hat;
            let dnorm = diff.iter().map(|&x| x * x).sum::<f64>().sqrt();
            let dot: f64 = diff.iter().zip(truth.iter()).map(|(a, b)| a * b).sum();
            if (dot / (dnorm * tnorm)).abs() >= 0.5 {
                ok += 1;
            }
        }
        assert!(ok >= 90, "aligned in {ok}/100 seeds");
    }

    #[test]
    fn run_chime_recovers_support() {
        let d = 100;
        let m = 10;
        let n = 2000usize;
        let sigma = 1.0;
        let gap = 4.0 * sigma * (2.0 * m as f64 * (d as f64).ln() / n as f64).sqrt();
        let spec = sparse_mixture(d, m, gap, sigma);
        let cfg = ChimeConfig::default();
        let want: Vec<usize> = (0..m).collect();
        let mut hits = 0;
        for seed in 0..20u64 {
            let data = sample_unlabeled(&spec, n, seed);
            let est = run_chime(&data, sigma, &cfg, seed).unwrap();
            if est.support == want {
                hits += 1;
            }
        }
        assert!(hits >= 18, "recovered in {hits}/20 seeds");
    }

    #[test]
    fn lambda_trajectory_is_geometric_and_decreasing() {
        let spec = sparse_mixture(100, 10, 1.0, 1.0);
        let data = sample_unlabeled(&spec, 500, 2);
        let cfg = ChimeConfig::default();
        let est = run_chime(&data, 1.0, &cfg, 2).unwrap();
        let base = cfg.c_lambda * (100.0f64.ln() / 500.0).sqrt();
        let fixed_point = base / (1.0 - cfg.kappa);
        let mut lambda = est.trajectory[0].lambda;
        assert!(lambda > fixed_point);
        for p in &est.trajectory[1..] {
            let expected = cfg.kappa * lambda + base;
            assert_abs_diff_eq!(p.lambda, expected, epsilon = 1e-12);
            assert!(p.lambda < lambda, "trajectory must decrease toward the fixed point");
            assert!(p.lambda > fixed_point);
            lambda = p.lambda;
        }
        assert!((lambda - fixed_point).abs() < 1e-10);
    }

    #[test]
    fn dense_signal_keeps_every_coordinate() {
        // All gaps far above the final penalty: the support is everything.
        let d = 20;
        let spec = sparse_mixture(d, d, 6.0, 1.0);
        let data = sample_unlabeled(&spec, 2000, 5);
        let est = run_chime(&data, 1.0, &ChimeConfig::default(), 5).unwrap();
        assert_eq!(est.support, (0..d).collect::<Vec<_>>());
    }

    #[test]
    fn label_swap_symmetry() {
        // Negating the init direction swaps the component roles but leaves
        // the recovered support unchanged.
        let d = 40;
        let spec = sparse_mixture(d, 4, 2.0, 1.0);
        let data = sample_unlabeled(&spec, 1000, 6);
        let base_init = init_chime(&data, &ChimeConfig::default(), 6).unwrap();
        let cfg_a = ChimeConfig {
            init_means: Some((base_init.mu1_hat.to_vec(), base_init.mu2_hat.to_vec())),
            ..Default::default()
        };
        let cfg_b = ChimeConfig {
            init_means: Some((base_init.mu2_hat.to_vec(), base_init.mu1_hat.to_vec())),
            ..Default::default()
        };
        let a = run_chime(&data, 1.0, &cfg_a, 6).unwrap();
        let b = run_chime(&data, 1.0, &cfg_b, 6).unwrap();
        assert_eq!(a.support, b.support);
        assert_abs_diff_eq!(a.final_state.omega, 1.0 - b.final_state.omega, epsilon = 1e-9);
        for j in 0..d {
            assert_abs_diff_eq!(a.final_state.mu1_hat[j], b.final_state.mu2_hat[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn support_estimate_json() {
        let est = SupportEstimate {
            support: vec![0, 3, 7],
            trajectory: vec![TrajectoryPoint { iteration: 0, lambda: 0.5, support_size: 3 }],
            final_state: state(0.5, array![0.0], array![1.0]),
        };
        let v: serde_json::Value = serde_json::from_str(&est.to_json_string()).unwrap();
        assert_eq!(v["support"], serde_json::json!([0, 3, 7]));
        assert_eq!(v["trajectory"][0][0], 0);
        assert_eq!(v["trajectory"][0][2], 3);
    }

    proptest! {
        #[test]
        fn soft_threshold_is_nonexpansive(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
            lambda in 0.0f64..5.0,
        ) {
            let (a, b) = (Array1::from(a), Array1::from(b));
            let (sa, sb) = (soft_threshold(&a, lambda), soft_threshold(&b, lambda));
            let din = (&a - &b).mapv(|x| x * x).sum().sqrt();
            let dout = (&sa - &sb).mapv(|x| x * x).sum().sqrt();
            prop_assert!(dout <= din + 1e-12);
        }

        #[test]
        fn e_step_outputs_stay_in_unit_interval(
            seed in 0u64..500,
            omega in 0.01f64..0.99,
        ) {
            let spec = DomainSpec::symmetric_gaussian(array![50.0, -50.0], 1.0);
            let data = sample_unlabeled(&spec, 20, seed);
            let st = state(omega, array![50.0, -50.0], array![-50.0, 50.0]);
            let g = e_step(&st, &data, 1.0, &ChimeConfig::default());
            prop_assert!(g.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }
}
