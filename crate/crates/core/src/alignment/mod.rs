//! Plane fitting, symmetry-plane alignment and dihedral-angle diagnostics.

mod histogram;
mod pca;
mod plane;
mod symmetry;

pub use histogram::{
    angle_report, AngleHistogram, AngleHistograms, HistogramBin, HistogramKind,
    DEFAULT_BIN_WIDTH_DEG,
};
pub use pca::{pca_align, pca_transform};
pub use plane::{
    bisector_plane, dihedral_angle, fit_plane_orthogonal, signed_parallelism_angle, Plane,
};
pub use symmetry::{
    align_single_plate, align_to_symmetry_plane, plate_contour, symmetry_plane,
    transform_to_horizontal, AlignedPair, AlignedPlate, AngleRecord, PlateSide,
    MIN_CONTOUR_POINTS,
};
