//! Toy-scale learning pipeline: synthetic subclass data, an MLP encoder
//! trained on batch contrastive losses, class-conditional autoencoders, the
//! concatenated representation and coarse-to-fine evaluation.

pub mod autoencoder;
pub mod data;
pub mod encoder;
pub mod experiments;
pub mod lipschitz;
pub mod mlp;
pub mod thanos;

pub use autoencoder::{Autoencoder, AutoencoderTraining, ClassAutoencoders};
pub use data::{augment, gen_subclass_data, ToyDataset, ToySpec};
pub use encoder::{train_encoder, Encoder, EncoderTraining, LossMode};
pub use thanos::{coarse_to_fine_eval, Routing, Thanos};
