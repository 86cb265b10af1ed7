//! Relativistic point-particle dynamics under retarded interactions.
//!
//! A single force law drives everything here: a particle of charge `q`
//! moving in the antisymmetric field tensor sourced by the retarded
//! Lienard-Wiechert potential of every other particle. Choosing the
//! interaction constant `K = +1` with electric charges gives the
//! relativistic Coulomb law; choosing `K = -G` with charges equal to
//! masses gives the relativistic Newton gravity law. The crate provides
//!
//! * Minkowski kinematics and world-line representation ([`kinematics`],
//!   [`worldline`]),
//! * the retarded-time solver ([`retarded`]),
//! * potential and field evaluation with numerical certification of the
//!   gauge condition, the Bianchi identity, the vacuum Maxwell equations
//!   and Lorentz covariance ([`fields`], [`checks`]),
//! * a delay-differential N-body integrator ([`dynamics`]),
//! * orbit analysis up to Mercury's perihelion advance ([`scenarios`]).

pub mod checks;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod kinematics;
pub mod retarded;
pub mod scenarios;
mod solve;
pub mod vec3;
pub mod worldline;

pub use error::{Result, SimError};
pub use vec3::Vec3;

/// Every fixed numerical threshold in one record.
///
/// Values are the defaults the verification suites and integrator
/// diagnostics are pinned to; they are deliberately plain fields so a
/// configuration file could override them if ever needed.
#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Per-component tolerance on Lambda^T eta Lambda = eta for a single transform.
    pub lorentz_membership: f64,
    /// Per-component tolerance after composing generated transforms.
    pub lorentz_closure: f64,
    /// |u.u - 1| for a reconstructed four-velocity.
    pub four_velocity_norm: f64,
    /// Mixed absolute/relative factor for the retardation residual:
    /// |c(t_obs - t') - r| <= factor * (c|t_obs| + r + 1).
    pub retard_residual_factor: f64,
    /// Iteration cap for all monotone root solves.
    pub solver_max_iter: u32,
    /// Singularity radius as a fraction of the configured length scale.
    pub r_min_factor: f64,
    /// Analytic field vs finite-difference oracle, relative.
    pub field_oracle_rel: f64,
    /// Four-divergence of the potential, relative to the gradient scale.
    pub gauge_rel: f64,
    /// Cyclic field-derivative identity, relative to the gradient scale.
    pub bianchi_rel: f64,
    /// Off-source inhomogeneous Maxwell residual, relative.
    pub maxwell_rel: f64,
    /// Potential covariance residual, static sources.
    pub covariance_static_rel: f64,
    /// Potential covariance residual, accelerated (circular) sources.
    pub covariance_moving_rel: f64,
    /// |u.u - 1| allowed at integrator output rows.
    pub row_norm_residual: f64,
    /// |sum eta F u u| at output rows, relative to the term scale.
    pub row_orthogonality_rel: f64,
    /// Conserved-quantity drift for static-source orbits, relative.
    pub energy_drift_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            lorentz_membership: 1e-12,
            lorentz_closure: 1e-11,
            four_velocity_norm: 1e-14,
            retard_residual_factor: 1e-13,
            solver_max_iter: 60,
            r_min_factor: 1e-9,
            field_oracle_rel: 1e-6,
            gauge_rel: 1e-6,
            bianchi_rel: 1e-6,
            maxwell_rel: 1e-6,
            covariance_static_rel: 1e-9,
            covariance_moving_rel: 1e-8,
            row_norm_residual: 1e-12,
            row_orthogonality_rel: 1e-10,
            energy_drift_rel: 1e-8,
        }
    }
}
