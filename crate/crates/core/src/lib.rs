//! Upper bounds on the worst-case `L²` error of functions in a kernel unit
//! ball that are small under a linear sampling operator, together with
//! reference oracles on finite truncations.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below fix the usual double-precision instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod psi;
pub mod random;
pub mod sampling;
pub mod scalar;

pub use bound::{
    fourier_exact, l_func, minimax_width, packing_transfer, quad_inequality_check, quad_residual, strong_bound,
    translate_to_lower_t, weak_bound, BoundConfig, BoundEngine, BoundKind, BoundReport, LowerTBound, PackingTransfer,
    QuadCheck, RhoMode,
};
pub use eigen::{trigamma, DecayModel, EigenSequence, EigenSystem, SeriesSum, ZetaSequence};
pub use error::{Error, Result};
pub use oracle::{dual_oracle, grid_oracle, q_set_boundary, two_by_two_f, BoundaryPoint, QcqpInstance};
pub use psi::{
    assemble, default_horizon, sparse_periodic_linf_bound, tail_lambda_max_bound, PsiBlock, PsiWindow,
    SparsePeriodicParams, TailBoundReport, TailMethod,
};
pub use random::{
    c_sigma_estimate, complexity_g, corollary_bound, critical_radius, m_sigma, mc_psi_concentration, mu, nu,
    ConcentrationReport, RandomSamplingReport,
};
pub use sampling::{uniform_points, SamplingOperator};
pub use scalar::Scalar;

pub type EigenSystemF64 = EigenSystem<f64>;
pub type SamplingOperatorF64 = SamplingOperator<f64>;
pub type PsiBlockF64 = PsiBlock<f64>;
pub type BoundConfigF64 = BoundConfig<f64>;
pub type BoundReportF64 = BoundReport<f64>;
pub type QcqpInstanceF64 = QcqpInstance<f64>;
pub type RandomSamplingReportF64 = RandomSamplingReport<f64>;
