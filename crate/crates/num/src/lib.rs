//! Numerical building blocks shared by the dynamics, tree-model and
//! transformer crates.

pub mod density;
pub mod error;
pub mod fmt;
pub mod matrix;
pub mod metrics;
pub mod par;
pub mod quad;
pub mod rng;
pub mod special;

pub use density::RadialDensity;
pub use error::NumError;
pub use matrix::Matrix;
pub use metrics::{entropy, mean_abs_cossim, softmax, stable_rank};
pub use par::Exec;
pub use quad::{integrate, integrate_pieces, Domain, QuadratureSpec};
pub use rng::RngSeed;
pub use special::{erf, erf_inv, g_func, G_func};

pub type Result<T> = std::result::Result<T, NumError>;
