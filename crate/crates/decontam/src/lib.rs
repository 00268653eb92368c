//! Decontamination of mutual contamination models.
//!
//! A learner observes samples from several contaminated distributions, each a
//! convex combination of unknown base distributions, and wants the bases
//! back. This crate implements that recovery for three problems — multiclass
//! label noise, demixing of mixed membership models, and partial-label
//! learning — in two regimes:
//!
//! * [`simplex`] and [`population`]: the exact (population) case, where
//!   everything reduces to geometry on the probability simplex and the
//!   kappa operators are computed exactly.
//! * [`empirical`] and [`hat`]: the finite-sample case, where distributions
//!   are only seen through samples, kappa is estimated with VC-class
//!   deviation corrections, and residues become signed mixtures of empirical
//!   distributions.
//!
//! [`synthesis`] generates ground-truth problem instances for experiments.

mod linalg;
mod lp;
mod sampling;

pub mod empirical;
pub mod hat;
pub mod population;
pub mod simplex;
pub mod synthesis;

#[doc(hidden)]
pub mod testutil;
