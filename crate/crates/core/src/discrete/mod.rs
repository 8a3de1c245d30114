//! Integer-valued distributions: named families, log-concavity, the continuous
//! extension and the tail bounds built on it.

mod lemmas;
mod logconcave;
mod pmf;

pub use lemmas::{
    check_concentration_lemma, check_tail_lemma, check_tail_lemma_with, concentration_thresholds,
    ConcentrationCheck, TailLemmaCheck,
};
pub use logconcave::{
    build_extension, check_log_concave, maxpmf_bounds, ContinuousExtension, LogConcaveProfile,
    LogConcavityCertificate, MaxPmfBounds,
};
pub(crate) use logconcave::{require_log_concave, SIGMA_SLACK};
pub use pmf::{
    binomial, discretized_gaussian, discretized_gaussian_auto, geometric, poisson, self_convolve,
    self_convolve_with, uniform_int, IntegerPmf, PmfFamily, DEFAULT_TAIL,
};
