//! Energy-based user-activity detection for grant-free random access.
//!
//! Users transmit pilot-hopping sequences over `T` coherence intervals and a
//! distributed massive MIMO receiver measures the energy received on every
//! pilot. Activity is recovered from the energy vector by non-negative least
//! squares, optionally regularized with a group-LASSO or total-variation
//! penalty that exploits spatially correlated activity.
//!
//! The crate is organised as a pipeline:
//!
//! * [`sysmodel`] builds the deterministic system: topology, large-scale
//!   fading with channel-inversion power control, pilot-hopping codes and the
//!   measurement matrix.
//! * [`simulator`] draws events, correlated activity, Rayleigh channels and
//!   the per-pilot energy statistics.
//! * [`solvers`] contains the NNLS and regularized solvers plus their
//!   optimality certificate and a slow reference oracle.
//! * [`detection`] thresholds solver outputs and scores them (ROC, K-means
//!   event localization, RMSD).
//! * [`harness`] runs seeded Monte Carlo campaigns and writes CSV tables.

pub mod detection;
pub mod error;
pub mod harness;
pub mod jsonfmt;
pub mod rng;
pub mod simulator;
pub mod solvers;
pub mod sysmodel;

pub use error::{Error, Result};

/// A point in the plane, `[x, y]`.
pub type Point = [f64; 2];

#[inline]
pub(crate) fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}
