//! Spatial input-output analysis of nonnegative linear network dynamics
//! `X(k+1) = A X(k) + e_s u(k)`: cutsets, l_p gains, frequency responses,
//! and empirical checks that responses decay across separating cutsets.

pub mod apps;
pub mod cutset;
pub mod error;
pub mod metrics;
pub mod network;
pub mod random;
pub mod simulate;
pub mod verify;

pub use cutset::{Cutset, SeparationCertificate};
pub use error::{Error, Result};
pub use metrics::{Horizon, PNorm};
pub use network::{Network, NodeId};
