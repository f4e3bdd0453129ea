//! Coded caching schemes simulated at byte level: centralized and
//! decentralized placement, multi-level popularity, adaptive matching in
//! clustered networks, and cyclic multi-access.

pub mod adaptive;
pub mod analytics;
pub mod decentralized;
pub mod error;
pub mod man;
pub mod model;
pub mod multiaccess;
pub mod multilevel;

pub use error::{Error, Result};
pub use model::{
    rational, CacheContent, DemandVector, FileLibrary, Rational, RunReport, SubfileId,
    TransmissionLog,
};
