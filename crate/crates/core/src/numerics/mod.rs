//! Dense linear algebra, the two fixed MLP topologies with hand-written
//! backpropagation, losses, Adam, plateau scheduling and a seeded RNG.
//!
//! Everything here is `f64` and single-threaded. Independent training jobs
//! each own their network, optimizer state and RNG.

mod adam;
mod loss;
mod matrix;
mod mlp;
mod rng;
mod scheduler;

pub use adam::AdamState;
pub use loss::{bce_loss, bce_loss_grad, contrastive_loss, contrastive_loss_grad, BCE_EPSILON};
pub use matrix::Matrix;
pub use mlp::{Activation, Dense, Gradients, LayerGrad, MlpNetwork};
pub use rng::{mix_seed, SeededRng};
pub use scheduler::PlateauScheduler;
