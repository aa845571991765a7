//! Bayes estimation of a monotone (decreasing) hazard rate
//!
//! The hazard is modelled as `λ(t) = ∫ 1(t < u) μ(du)` with `μ` a completely
//! random measure from the generalized gamma family. Given right-censored
//! data the posterior of `μ` is a finite mixture indexed by S-paths, and the
//! posterior-mean hazard is a finite sum over S-paths.
//!
//! The crate provides:
//!
//! * [`combinat`]: S-paths, set partitions, their correspondence and counts.
//! * [`survdata`]: survival datasets and the total-time-on-test transform.
//! * [`levy`]: the prior family, its tilted moments and integrals, plus an
//!   independent quadrature oracle.
//! * [`posterior`]: path weights, the exact path-sum and partition-sum
//!   estimators, and conditional draws of the latent jumps.
//! * [`samplers`]: the accelerated path sampler, a naive Gibbs path sampler,
//!   a partition Gibbs baseline, chain driving and exact kernels.
//! * [`cox`]: the proportional hazards extension.
//! * [`cli`]: the command implementations behind the `spath-hazard` binary.

pub mod cli;
pub mod combinat;
pub mod cox;
mod error;
pub mod levy;
pub mod numeric;
pub mod posterior;
pub mod quadrature;
pub mod samplers;
pub mod survdata;

pub use error::{Error, Result};

pub use combinat::{Partition, SPath};
pub use cox::{CoxConfig, CoxState};
pub use levy::PriorSpec;
pub use posterior::{LatentDraw, PosteriorModel};
pub use samplers::{ChainConfig, HazardCurve, SamplerKind};
pub use survdata::{PiecewiseLinear, Record, Status, SurvivalDataset};
