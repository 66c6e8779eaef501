//! Geometric analysis of violin-family plate meshes: symmetry-plane
//! alignment, contour lines and the channel of minima.

pub mod alignment;
pub mod channel;
pub mod contours;
pub mod elevation;
pub mod error;
pub mod mesh;
pub mod report;
pub mod size_class;
pub mod svg;
pub mod synthetic;

pub use error::{Error, Result};
