//! Gradient-flow dynamics of a one-layer attention + MLP block.
//!
//! [`coupled`] integrates attention logits and MLP weights together;
//! [`reduced`] and [`nonlinear`] integrate the single-node dynamics that
//! remain once the logits are expressed through the weights.

pub mod attention;
pub mod coupled;
pub mod critical;
pub mod error;
pub mod nonlinear;
pub mod reduced;
pub mod trajectory;

pub use attention::{attention_reweight, AttentionKind};
pub use coupled::{CoupledState, GradStats};
pub use error::DynError;
pub use nonlinear::{MixtureSpec, Psi};
pub use reduced::{Integrator, ReducedState};
pub use trajectory::Trajectory;

pub type Result<T> = std::result::Result<T, DynError>;
