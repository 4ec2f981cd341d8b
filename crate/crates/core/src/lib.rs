//! Secrecy capacity of the MIMO Gaussian wiretap channel under a sum power
//! constraint.
//!
//! The capacity `max { ln|I + H Q H^H| - ln|I + G Q G^H| : Q >= 0, tr(Q) <= P_T }`
//! is non-convex in `Q`, but its KKT point is unique, so a first-order method
//! that converges to a stationary point finds the global optimum. This crate
//! provides:
//!
//! - [`channel`]: channel pairs, random `CN(0, 1)` ensembles, JSON I/O and the
//!   degradedness test on `H^H H - G^H G`;
//! - [`objective`]: rate, gradient, quadratic model and Lipschitz constant;
//! - [`projection`]: water-filling projection onto the feasible set;
//! - [`solver`]: accelerated projected gradient with backtracking and adaptive
//!   momentum, and a fixed-step baseline;
//! - [`kkt`]: multiplier recovery, residuals and the multi-start uniqueness check;
//! - [`oracle`]: brute-force maximizers for `N_t <= 2`;
//! - [`bench`]: convergence and timing experiments over random ensembles.

pub mod bench;
pub mod channel;
pub mod error;
pub mod kkt;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod projection;
pub mod solver;

pub use channel::{
    classify, classify_difference, generate_channel, ChannelPair, Definiteness, DifferenceClass,
};
pub use error::{Error, Result};
pub use kkt::{
    kkt_residuals, recover_multipliers, uniqueness_experiment, KktReport, UniquenessReport,
};
pub use objective::{gradient, lipschitz_constant, quadratic_model, secrecy_rate, Covariance};
pub use projection::{project, water_level, EigenSystem};
pub use solver::{solve_apg, solve_pg_fixed, PgConfig, SolveResult, SolveStatus, SolverConfig};
