//! Hele-Shaw free-boundary flow with position-dependent boundary velocity in
//! random media, solved through its Baiocchi-transformed obstacle problem.
//!
//! For every time `t` the transformed variable `u(·, t) = ∫₀ᵗ v ds` solves a
//! variational inequality with the constraint `u ≥ 0`, value `t` on the fixed
//! core `K` and source `-1/g` outside the initial wet region `Ω₀`. The crate
//! solves these problems with red-black projected SOR, recovers the pressure
//! `v`, extracts free boundaries and compares them against the explicit
//! point-source profiles that govern the long-time limit.
//!
//! Module map:
//!
//! * [`grid`]: Cartesian grids, node roles, the discrete Laplacian.
//! * [`media`]: stationary random latent-heat fields and their mean.
//! * [`analytic`]: radial solutions, limit profiles, radius laws.
//! * [`obstacle`]: assembly and projected SOR for the variational inequality.
//! * [`evolution`]: time ladders, pressure recovery, rescaling.
//! * [`freeboundary`]: boundary extraction, sphericity, growth exponents.
//! * [`experiments`]: scenario configs, runners and CSV/JSON output.

pub mod analytic;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod freeboundary;
pub mod grid;
pub mod media;
pub mod obstacle;
pub mod par;

pub use error::{Error, Result};
pub use grid::{Grid, NodeMask, NodeRole, NodeRoles, Point, ScalarField};
pub use par::Schedule;
