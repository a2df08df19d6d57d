//! Point-vortex relative equilibria on the sphere: construction of the symmetric
//! families, symplectic-slice bases, energy-momentum stability, dynamics and
//! parameter scans.

pub mod chart;
pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod fd;
pub mod linalg;
pub mod report;
pub mod scan;
pub mod slice;
pub mod stability;
pub mod system;
pub mod verify;

pub use error::{Result, VortexError};
