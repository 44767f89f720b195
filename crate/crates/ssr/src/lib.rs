//! Simulation library for semi-supervised adversarially robust linear
//! classification on two-component Gaussian (and bounded-noise) mixtures.
//!
//! The library covers the full synthetic pipeline:
//!
//! - [`model`] — domain specifications and seeded dataset generation;
//! - [`estimators`] — supervised / pseudo-label / sparse mean-difference fits;
//! - [`robust_eval`] — exact closed-form and Monte Carlo standard and
//!   ℓ∞-robust error, worst-case perturbations, optimal robust directions;
//! - [`domain_distance`] — the domain-shift measure `d_ν` and its
//!   Wasserstein / maximal-information / H-divergence upper bounds;
//! - [`chime`] — high-dimensional EM with an ℓ₁-regularized discriminant for
//!   support recovery;
//! - [`harness`] — experiment orchestration, CSV/JSON persistence, SVG plots.
//!
//! All randomness flows through [`rng`], a counter-based splittable scheme:
//! parallel and sequential execution produce bit-identical results.

pub mod chime;
pub mod domain_distance;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod rng;
pub mod robust_eval;
pub mod util;
