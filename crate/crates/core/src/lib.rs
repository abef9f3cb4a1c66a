pub mod abelian;
pub mod container;
pub mod error;
pub mod fd;
pub mod gn;
pub mod group;
pub mod hermite;
pub mod propagator;
pub mod semilinear;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
