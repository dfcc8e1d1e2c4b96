//! Exact joint cumulants of multivariate subordinated Lévy processes.
//!
//! The crate evaluates joint cumulants of `Y(t) = A Z(T(t))` in closed form
//! through multi-index partitions and generalized Bell polynomials
//! ([`bell`]), specializes them to the ρα-NIG model ([`rho_alpha`]), and
//! checks them against two independent routes: truncated power-series
//! composition ([`series`]) and Monte Carlo simulation ([`mc`]).

pub mod bell;
pub mod error;
pub mod mc;
pub mod multiindex;
pub mod providers;
pub mod rho_alpha;
pub mod series;

pub use error::{Error, Result};
pub use multiindex::{MultiIndex, MultiIndexPartition, OrderCap};
