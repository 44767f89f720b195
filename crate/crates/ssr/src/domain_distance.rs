//! The domain-shift measure d_ν and its relation to classical statistical
//! distances.
//!
//! For labeled-domain class means μ₁, μ₂ and shifted-domain class means
//! μ̃₁, μ̃₂:
//!
//! ```text
//! d_ν = max{‖μ̃₁−μ₁‖, ‖μ̃₂−μ₂‖} / ‖μ̃₁−μ̃₂‖
//! ```
//!
//! Three upper bounds on d_ν are provided, parameterized by a Wasserstein
//! radius τ, a maximal-information level τ, or an H-divergence level τ with
//! sub-Gaussian scale ζ.

use ndarray::Array1;
use thiserror::Error;

use crate::util;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("mean vectors have mismatched dimensions")]
    DimensionMismatch,
    #[error("shifted class means coincide: d_nu undefined")]
    DegenerateGap,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Labeled and shifted class means (μ₁, μ₂, μ̃₁, μ̃₂).
#[derive(Clone, Debug, PartialEq)]
pub struct MeanQuadruple {
    pub mu1: Array1<f64>,
    pub mu2: Array1<f64>,
    pub mu1_shift: Array1<f64>,
    pub mu2_shift: Array1<f64>,
}

impl MeanQuadruple {
    pub fn new(
        mu1: Array1<f64>,
        mu2: Array1<f64>,
        mu1_shift: Array1<f64>,
        mu2_shift: Array1<f64>,
    ) -> Result<Self, DistanceError> {
        let d = mu1.len();
        if mu2.len() != d || mu1_shift.len() != d || mu2_shift.len() != d {
            return Err(DistanceError::DimensionMismatch);
        }
        Ok(MeanQuadruple { mu1, mu2, mu1_shift, mu2_shift })
    }

    /// ‖μ̃₁ − μ̃₂‖₂, the shifted-domain class-mean gap.
    pub fn shifted_gap(&self) -> f64 {
        norm2(&(&self.mu1_shift - &self.mu2_shift))
    }

    /// ‖μ₁ − μ₂‖₂, the labeled-domain class-mean gap.
    pub fn labeled_gap(&self) -> f64 {
        norm2(&(&self.mu1 - &self.mu2))
    }
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Wasserstein,
    MaximalInfo,
    HDivergence,
}

impl Measure {
    fn as_str(self) -> &'static str {
        match self {
            Measure::Wasserstein => "wasserstein",
            Measure::MaximalInfo => "maximal_info",
            Measure::HDivergence => "h_divergence",
        }
    }
}

/// An upper bound on d_ν derived from a statistical measure level τ.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub measure: Measure,
    pub tau: f64,
    /// The generally applicable bound (normalized by the shifted gap).
    pub bound: f64,
    /// The refined bound in terms of the labeled gap, when its precondition
    /// holds.
    pub refined: Option<f64>,
    /// For the H-divergence: α = ζ·√(log(4/(1−τ))).
    pub aux: Option<f64>,
}

impl BoundReport {
    /// JSON form `{"measure":, "tau":, "bound":, "refined_bound":?, "alpha":?}`.
    pub fn to_json_string(&self) -> String {
        let mut s = format!(
            "{{\"measure\":\"{}\",\"tau\":{},\"bound\":{}",
            self.measure.as_str(),
            util::fmt_f64(self.tau),
            util::fmt_f64(self.bound)
        );
        if let Some(r) = self.refined {
            s.push_str(&format!(",\"refined_bound\":{}", util::fmt_f64(r)));
        }
        if let Some(a) = self.aux {
            s.push_str(&format!(",\"alpha\":{}", util::fmt_f64(a)));
        }
        s.push('}');
        s
    }
}

/// max{‖μ̃₁−μ₁‖, ‖μ̃₂−μ₂‖} / ‖μ̃₁−μ̃₂‖.
pub fn d_nu(q: &MeanQuadruple) -> Result<f64, DistanceError> {
    let gap = q.shifted_gap();
    if gap == 0.0 {
        return Err(DistanceError::DegenerateGap);
    }
    let d1 = norm2(&(&q.mu1_shift - &q.mu1));
    let d2 = norm2(&(&q.mu2_shift - &q.mu2));
    Ok(d1.max(d2) / gap)
}

/// 2-Wasserstein distance between two Gaussians with equal isotropic
/// covariance: the translate coupling gives exactly the mean distance.
pub fn gaussian_wasserstein(mean_a: &Array1<f64>, mean_b: &Array1<f64>) -> Result<f64, DistanceError> {
    if mean_a.len() != mean_b.len() {
        return Err(DistanceError::DimensionMismatch);
    }
    Ok(norm2(&(mean_a - mean_b)))
}

/// If both class-mean displacements are at most the Wasserstein radius τ,
/// then d_ν ≤ τ/‖μ̃₁−μ̃₂‖, refined to τ/(‖μ₁−μ₂‖−2τ) when τ ≤ ‖μ₁−μ₂‖/2.
pub fn wasserstein_dnu_bound(tau: f64, q: &MeanQuadruple) -> Result<BoundReport, DistanceError> {
    if tau < 0.0 {
        return Err(DistanceError::Precondition(format!("tau must be >= 0, got {tau}")));
    }
    let gap = q.shifted_gap();
    if gap == 0.0 {
        return Err(DistanceError::DegenerateGap);
    }
    let labeled = q.labeled_gap();
    let refined = if tau <= labeled / 2.0 && labeled - 2.0 * tau > 0.0 {
        Some(tau / (labeled - 2.0 * tau))
    } else {
        None
    };
    Ok(BoundReport {
        measure: Measure::Wasserstein,
        tau,
        bound: tau / gap,
        refined,
        aux: None,
    })
}

/// Maximal-information bound: for admissible levels
/// 1 ≤ τ ≤ 1 + ‖μ₁−μ₂‖/(2‖μ₁‖+2‖μ₂‖),
/// d_ν ≤ (τ−1)·max{‖μ₁‖,‖μ₂‖} / (‖μ₁−μ₂‖ − 2(τ−1)(‖μ₁‖+‖μ₂‖)).
pub fn maximal_info_dnu_bound(tau: f64, q: &MeanQuadruple) -> Result<BoundReport, DistanceError> {
    let n1 = norm2(&q.mu1);
    let n2 = norm2(&q.mu2);
    let labeled = q.labeled_gap();
    let upper = 1.0 + labeled / (2.0 * n1 + 2.0 * n2);
    if !(1.0..=upper).contains(&tau) {
        return Err(DistanceError::Precondition(format!(
            "tau must lie in [1, {upper}], got {tau}"
        )));
    }
    let denom = labeled - 2.0 * (tau - 1.0) * (n1 + n2);
    let bound = if denom > 0.0 {
        (tau - 1.0) * n1.max(n2) / denom
    } else {
        f64::INFINITY
    };
    Ok(BoundReport { measure: Measure::MaximalInfo, tau, bound, refined: None, aux: None })
}

/// H-divergence bound: with α = ζ·√(log(4/(1−τ))), d_ν ≤ α/‖μ̃₁−μ̃₂‖, refined
/// to α/(‖μ₁−μ₂‖−2α) when τ ≤ 1 − 4·exp(−‖μ₁−μ₂‖²/(4ζ²)).
pub fn hdiv_dnu_bound(tau: f64, zeta: f64, q: &MeanQuadruple) -> Result<BoundReport, DistanceError> {
    // τ < 1 keeps the level well-defined; the lower limit −3 is where
    // log(4/(1−τ)) crosses zero and α would turn imaginary.
    if !(-3.0..1.0).contains(&tau) {
        return Err(DistanceError::Precondition(format!("tau must lie in [-3,1), got {tau}")));
    }
    if zeta <= 0.0 {
        return Err(DistanceError::Precondition(format!("zeta must be > 0, got {zeta}")));
    }
    let gap = q.shifted_gap();
    if gap == 0.0 {
        return Err(DistanceError::DegenerateGap);
    }
    let alpha = zeta * (4.0 / (1.0 - tau)).ln().sqrt();
    let labeled = q.labeled_gap();
    let refined_ok = tau <= 1.0 - 4.0 * (-labeled * labeled / (4.0 * zeta * zeta)).exp();
    let refined = if refined_ok && labeled - 2.0 * alpha > 0.0 {
        Some(alpha / (labeled - 2.0 * alpha))
    } else {
        None
    };
    Ok(BoundReport {
        measure: Measure::HDivergence,
        tau,
        bound: alpha / gap,
        refined,
        aux: Some(alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn quad(
        mu1: Array1<f64>,
        mu2: Array1<f64>,
        mu1s: Array1<f64>,
        mu2s: Array1<f64>,
    ) -> MeanQuadruple {
        MeanQuadruple::new(mu1, mu2, mu1s, mu2s).unwrap()
    }

    #[test]
    fn d_nu_known_values() {
        let q = quad(array![1.0, 2.0], array![-1.0, 0.5], array![1.0, 2.0], array![-1.0, 0.5]);
        assert_eq!(d_nu(&q).unwrap(), 0.0);

        let q = quad(array![1.0, 0.0], array![-1.0, 0.0], array![1.0, 0.5], array![-1.0, -0.5]);
        assert_abs_diff_eq!(d_nu(&q).unwrap(), 0.5 / 5.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(d_nu(&q).unwrap(), 0.223607, epsilon = 1e-6);

        // Orthogonal construction μ₁ = e₁, μ̃₁ = a⁻¹e₂ at a = 1: d_ν = √2/2.
        let q = quad(
            array![1.0, 0.0],
            array![-1.0, 0.0],
            array![0.0, 1.0],
            array![0.0, -1.0],
        );
        assert_abs_diff_eq!(d_nu(&q).unwrap(), std::f64::consts::SQRT_2 / 2.0, epsilon = 1e-15);
        assert!(d_nu(&q).unwrap() >= 0.5);
    }

    #[test]
    fn d_nu_rejects_zero_gap() {
        let q = quad(array![1.0], array![-1.0], array![2.0], array![2.0]);
        assert!(matches!(d_nu(&q), Err(DistanceError::DegenerateGap)));
    }

    #[test]
    fn wasserstein_gaussian_values() {
        assert_eq!(gaussian_wasserstein(&array![1.0, 2.0], &array![1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            gaussian_wasserstein(&array![0.0, 0.0], &array![3.0, 4.0]).unwrap(),
            5.0,
            epsilon = 1e-15
        );
        // Translate-coupling identity: E‖X − (X+Δ)‖ = ‖Δ‖ for every draw.
        let delta = array![0.5, -1.5];
        let mut rng = crate::rng::stream(9);
        for _ in 0..100 {
            let x = array![rng.gen::<f64>(), rng.gen::<f64>()];
            let y = &x + &delta;
            assert_abs_diff_eq!(norm2(&(&y - &x)), norm2(&delta), epsilon = 1e-12);
        }
    }

    #[test]
    fn wasserstein_bound_values() {
        let q = quad(array![1.0, 0.0], array![-1.0, 0.0], array![1.2, 0.0], array![-1.2, 0.0]);
        let r = wasserstein_dnu_bound(0.0, &q).unwrap();
        assert_eq!(r.bound, 0.0);
        assert_eq!(r.refined, Some(0.0));

        // ‖μ₁−μ₂‖ = 2, τ = 0.5 → refined bound 0.5.
        let r = wasserstein_dnu_bound(0.5, &q).unwrap();
        assert_abs_diff_eq!(r.refined.unwrap(), 0.5, epsilon = 1e-15);

        // τ beyond half the labeled gap: refined form absent.
        let r = wasserstein_dnu_bound(1.5, &q).unwrap();
        assert!(r.refined.is_none());
        assert!(wasserstein_dnu_bound(-0.1, &q).is_err());
    }

    #[test]
    fn wasserstein_bound_dominates_d_nu() {
        // 10⁴ random instances with both shifts at most τ.
        let mut rng = crate::rng::stream(101);
        for _ in 0..10_000 {
            let d = rng.gen_range(1..5);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                Array1::from((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>())
            };
            let mu1 = draw(&mut rng);
            let mut mu2 = draw(&mut rng);
            if norm2(&(&mu1 - &mu2)) < 1e-3 {
                mu2[0] += 1.0;
            }
            let tau = rng.gen_range(0.0..1.0);
            let shift = |rng: &mut rand_chacha::ChaCha8Rng, mu: &Array1<f64>, tau: f64| {
                let dir = draw(rng);
                let n = norm2(&dir).max(1e-12);
                let r = rng.gen_range(0.0..tau);
                mu + &(dir * (r / n))
            };
            let q = MeanQuadruple::new(
                mu1.clone(),
                mu2.clone(),
                shift(&mut rng, &mu1, tau),
                shift(&mut rng, &mu2, tau),
            )
            .unwrap();
            let Ok(dn) = d_nu(&q) else { continue };
            let rep = wasserstein_dnu_bound(tau, &q).unwrap();
            assert!(dn <= rep.bound + 1e-12, "d_nu {dn} > bound {}", rep.bound);
            if let Some(refined) = rep.refined {
                assert!(dn <= refined + 1e-12, "d_nu {dn} > refined {refined}");
            }
        }
    }

    #[test]
    fn maximal_info_bound_values() {
        let q = quad(array![1.0, 0.0], array![-1.0, 0.0], array![1.1, 0.0], array![-1.1, 0.0]);
        let r = maximal_info_dnu_bound(1.0, &q).unwrap();
        assert_eq!(r.bound, 0.0);

        // (τ−1)max/(gap − 2(τ−1)(sum)) = 0.25·1/(2 − 2·0.25·2) = 0.25.
        let r = maximal_info_dnu_bound(1.25, &q).unwrap();
        assert_abs_diff_eq!(r.bound, 0.25, epsilon = 1e-15);

        assert!(maximal_info_dnu_bound(0.9, &q).is_err());
        assert!(maximal_info_dnu_bound(2.0, &q).is_err());
    }

    #[test]
    fn maximal_info_bound_increases_in_tau() {
        let q = quad(array![2.0, 1.0], array![-1.0, 0.5], array![2.0, 1.0], array![-1.0, 0.5]);
        let upper = 1.0 + q.labeled_gap() / (2.0 * norm2(&q.mu1) + 2.0 * norm2(&q.mu2));
        let mut prev = -1.0;
        for k in 0..20 {
            let tau = 1.0 + (upper - 1.0) * 0.999 * k as f64 / 19.0;
            let b = maximal_info_dnu_bound(tau, &q).unwrap().bound;
            assert!(b >= prev, "bound not increasing at tau={tau}");
            assert!(b >= 0.0);
            prev = b;
        }
    }

    #[test]
    fn hdiv_bound_values() {
        let q = quad(array![3.0, 0.0], array![-3.0, 0.0], array![3.0, 0.2], array![-3.0, -0.2]);
        // τ = 1 − 4/e makes log(4/(1−τ)) = 1, so α = ζ.
        let tau = 1.0 - 4.0 / std::f64::consts::E;
        let r = hdiv_dnu_bound(tau, 1.0, &q).unwrap();
        assert_abs_diff_eq!(r.aux.unwrap(), 1.0, epsilon = 1e-12);

        // τ → 0⁺ keeps α = ζ√(log 4) ≈ 1.17741 strictly positive: the level
        // does not vanish with the shift.
        let r0 = hdiv_dnu_bound(1e-15, 1.0, &q).unwrap();
        assert_abs_diff_eq!(r0.aux.unwrap(), 4.0f64.ln().sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(r0.aux.unwrap(), 1.17741, epsilon = 1e-5);

        // α is linear in ζ.
        let r2 = hdiv_dnu_bound(tau, 2.0, &q).unwrap();
        assert_abs_diff_eq!(r2.aux.unwrap(), 2.0 * r.aux.unwrap(), epsilon = 1e-12);

        assert!(hdiv_dnu_bound(1.0, 1.0, &q).is_err());
        assert!(hdiv_dnu_bound(0.5, 0.0, &q).is_err());
    }

    #[test]
    fn hdiv_refined_precondition() {
        // Large labeled gap relative to ζ: refined bound present and finite.
        let q = quad(array![5.0, 0.0], array![-5.0, 0.0], array![5.0, 0.1], array![-5.0, -0.1]);
        let r = hdiv_dnu_bound(0.1, 1.0, &q).unwrap();
        let alpha = r.aux.unwrap();
        assert_abs_diff_eq!(
            r.refined.unwrap(),
            alpha / (q.labeled_gap() - 2.0 * alpha),
            epsilon = 1e-12
        );
        // Tiny gap: precondition fails, refined absent.
        let q = quad(array![0.1, 0.0], array![-0.1, 0.0], array![0.1, 0.05], array![-0.1, -0.05]);
        assert!(hdiv_dnu_bound(0.9, 1.0, &q).unwrap().refined.is_none());
    }

    #[test]
    fn bound_report_json() {
        let q = quad(array![1.0, 0.0], array![-1.0, 0.0], array![1.2, 0.0], array![-1.2, 0.0]);
        let r = wasserstein_dnu_bound(0.5, &q).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert_eq!(v["measure"], "wasserstein");
        assert!(v["refined_bound"].is_number());
        assert!(v.get("alpha").is_none());

        let r = hdiv_dnu_bound(0.5, 1.0, &q).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json_string()).unwrap();
        assert!(v["alpha"].is_number());
    }

    /// Householder reflection H = I − 2uuᵀ applied to v (an orthogonal map).
    fn reflect(u: &Array1<f64>, v: &Array1<f64>) -> Array1<f64> {
        let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        v - &(u * (2.0 * dot))
    }

    proptest! {
        #[test]
        fn d_nu_invariant_under_rigid_motion(
            raw in proptest::collection::vec(-2.0f64..2.0, 12),
            t in proptest::collection::vec(-5.0f64..5.0, 3),
            u_raw in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let v = |i: usize| Array1::from(raw[3*i..3*i+3].to_vec());
            let q = MeanQuadruple::new(v(0), v(1), v(2), v(3)).unwrap();
            prop_assume!(q.shifted_gap() > 1e-6);
            let base = d_nu(&q).unwrap();

            let un = u_raw.iter().map(|x| x*x).sum::<f64>().sqrt();
            prop_assume!(un > 1e-6);
            let u = Array1::from(u_raw.iter().map(|x| x/un).collect::<Vec<f64>>());
            let t = Array1::from(t);
            let m = |x: &Array1<f64>| reflect(&u, x) + &t;
            let moved = MeanQuadruple::new(m(&q.mu1), m(&q.mu2), m(&q.mu1_shift), m(&q.mu2_shift))
                .unwrap();
            prop_assert!((d_nu(&moved).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn d_nu_zero_iff_no_shift(
            raw in proptest::collection::vec(-2.0f64..2.0, 6),
            shift in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let mu1 = Array1::from(raw[0..3].to_vec());
            let mu2 = Array1::from(raw[3..6].to_vec());
            prop_assume!(norm2(&(&mu1 - &mu2)) > 1e-6);
            let q = MeanQuadruple::new(mu1.clone(), mu2.clone(), mu1.clone(), mu2.clone()).unwrap();
            prop_assert_eq!(d_nu(&q).unwrap(), 0.0);

            let s = Array1::from(shift);
            prop_assume!(norm2(&s) > 1e-6);
            let q = MeanQuadruple::new(
                mu1.clone(), mu2.clone(), &mu1 + &s, mu2.clone()).unwrap();
            if q.shifted_gap() > 1e-9 {
                prop_assert!(d_nu(&q).unwrap() > 0.0);
            }
        }
    }
}
