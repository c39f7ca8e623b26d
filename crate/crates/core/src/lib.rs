//! Numerical laboratory for the hypersphere geometry of supervised contrastive
//! losses.
//!
//! The crate is organised bottom-up:
//!
//! - [`sphere`]: labeled unit-vector configurations (simplex, collapsed,
//!   two-atom `mu_theta` family, uniform samples) and their text format.
//! - [`loss`]: batch SupCon / class-conditional InfoNCE / spread losses and the
//!   empirical asymptotic loss with its analytic gradient.
//! - [`closed_form`]: analytic losses of the candidate geometries, the optimal
//!   angle, the Wiener constant and the alpha-window bound.
//! - [`opt`]: multi-restart projected gradient descent on the sphere and
//!   alpha sweeps.
//! - [`metrics`]: spread, subclass clustering, mean-classifier transfer,
//!   subclass recovery, Lipschitz estimates and permutation gaps.
//! - [`toy`]: a small end-to-end pipeline (synthetic subclass data, MLP encoder,
//!   class-conditional autoencoders, concatenated embedding).

pub mod closed_form;
pub mod error;
pub mod kmeans;
pub mod loss;
pub mod metrics;
pub mod numeric;
pub mod opt;
pub mod special;
pub mod sphere;
pub mod toy;

pub use error::{Error, Result};
pub use loss::{AugmentationMap, LossWeights};
pub use sphere::{EmbeddingConfig, PointSet, SimplexFrame};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
