//! Chern character and Chern–Simons forms on a truncated polarized Hilbert
//! space, with the blocksum, flip and periodicity operations of the
//! differential K-theory cocycle model.

pub mod builders;
pub mod chernforms;
pub mod error;
pub mod geomgrid;
pub mod khat;
pub mod kops;
pub mod numkernel;
pub mod par;
pub mod periodicity;
pub mod stiefel;
pub mod suite;

pub use error::{Error, Result};
