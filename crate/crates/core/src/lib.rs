//! Discovery of the variables shared by two sensor streams that observe
//! coupled dynamical systems, and learning of functions across sensors.
//!
//! The crate is organized bottom-up: [`dynamics`] integrates the systems,
//! [`sensors`] turns trajectories into aligned measurement streams,
//! [`kernels`] and [`embeddings`] build the spectral coordinates,
//! [`selection`] prunes them, [`regression`] learns maps between
//! coordinates, and [`pipeline`] runs named experiments end to end.

pub mod dynamics;
pub mod embeddings;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod pipeline;
pub mod regression;
pub mod selection;
pub mod sensors;

pub use error::{Error, Result};
pub use linalg::Matrix;
