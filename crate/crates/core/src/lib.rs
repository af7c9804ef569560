//! Certified lower bounds on the secret key rate of binary-modulated
//! continuous-variable QKD with homodyne detection and reverse
//! reconciliation, under collective attacks.
//!
//! The crate is organised bottom-up:
//!
//! * [`entropy`]: binary entropy and the `g` function with their analytic
//!   properties.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration used by every
//!   integral over Bob's outcome `y`.
//! * [`observation`]: the Gaussian conditional model `P(y|x)`, a homodyne
//!   record simulator, sifting, moment estimation and the Alice–Bob
//!   mutual information.
//! * [`eigen_bounds`]: turns observed moments into the mixedness bound and
//!   the overlap intervals constraining the adversary's parameters.
//! * [`keyrate`]: assembles the entropy bounds and runs the worst-case
//!   search over interior parameters.
//! * [`fock`]: truncated Fock-space states used to brute-force check the
//!   moment-based bounds.
//! * [`sweep`]: loss × noise sweeps producing CSV data.

pub mod eigen_bounds;
pub mod entropy;
mod error;
pub mod fock;
pub mod keyrate;
pub mod observation;
pub mod quadrature;
pub mod records;
pub mod sweep;

pub use error::{Error, Result};

pub use eigen_bounds::{
    bob_overlap_interval, eve_overlap_interval, input_overlap, kappa_from_stats, mixedness_bound,
    EpsilonPoint, InteriorPoint, MomentBounds, OverlapInterval,
};
pub use entropy::{binary_entropy, g_function, Overlap, Probability};
pub use keyrate::{
    key_rate, maximize_s, optimize_alpha, BoundBreakdown, SearchConfig, SearchOutcome,
    SearchStrategy,
};
pub use observation::{
    conditional_from_params, discretize_announce, estimate_statistics, mutual_info_xy,
    posterior_p0, sample_record, sift, stats_from_params, Basis, ChannelParams,
    GaussianConditional, HomodyneRecord, ObservedStatistics, RecordEntry,
};
pub use quadrature::QuadratureConfig;
