//! Quasipolynomial (QP) discrete-time maps
//!
//! ```text
//! x_i(t+1) = x_i(t) * exp(lambda_i + sum_j A_ij * prod_k x_k(t)^B_jk)
//! ```
//!
//! Construction and iteration ([`map`]), quasimonomial changes of variables
//! ([`transform`]), conservativity classification and first integrals
//! ([`classify`]), Jacobians ([`jacobian`]) and reduction of conservative
//! maps ([`reduce`]). Entries are exact rationals or doubles ([`scalar`]).

pub mod classify;
pub mod cli;
pub mod error;
pub mod families;
pub mod io;
pub mod jacobian;
pub mod map;
pub mod matrix;
pub mod reduce;
pub mod scalar;
pub mod transform;

pub use classify::{
    check_dim1, check_symplectic, check_thm1, check_thm3, check_thm5_necessary, classify, compute_omega, find_integrals,
    is_b_nondegenerate, sampling_oracle, ClassificationReport, Classifier, IntegralBasis, OracleReport, OracleVerdict,
    Orientation, Verdict,
};
pub use error::{QpError, Result};
pub use families::{make_example1, make_example2, random_map, EntryRange, Profile};
pub use jacobian::{analytic_jacobian, delta3_expansion, fd_jacobian};
pub use map::{canonicalize, MapParts, QPMap, State, Trajectory};
pub use matrix::Matrix;
pub use reduce::{lift_trajectory, reduce_conservative, reduce_with_qmt, solve_2d, ClosedForm2D, ReductionResult};
pub use scalar::Scalar;
pub use transform::{apply_qmt, check_conjugacy, class_invariant, compose, Qmt};
