//! Hierarchical binary latent tree (HBLT) generative model.
//!
//! Binary latents propagate top-down from a class label through layers of
//! binary variables to token leaves. Each parent/child edge uses the
//! conditional `M(ρ)`.

pub mod algebra;
pub mod cooccur;
pub mod corpus;
pub mod error;
pub mod sample;
pub mod tree;

pub use algebra::{m_matrix, p_vec, Mat2};
pub use corpus::{read_corpus, read_latents, write_corpus, write_latents, CorpusLine, CorpusMeta};
pub use cooccur::{
    analytic_cooccur, analytic_cooccur_pair, approx_cooccur, empirical_cooccur, exact_cooccur, CooccurStats,
    ENUMERATION_LIMIT,
};
pub use error::HbltError;
pub use sample::{sample, SequenceSample, MAX_RESAMPLES};
pub use tree::{HbltSpec, LatentTree};

pub type Result<T> = std::result::Result<T, HbltError>;
