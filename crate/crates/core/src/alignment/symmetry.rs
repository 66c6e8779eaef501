use nalgebra::{Point3, Rotation3, Unit, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::plane::{
    bisector_plane, dihedral_angle, fit_plane_orthogonal, signed_parallelism_angle, Plane,
};
use crate::error::{Error, Result};
use crate::mesh::{apply_rigid_transform, boundary_loops, Polyline3, RigidTransform, TriangleMesh};

/// Boundary loops with fewer points than this are scan noise, not plate contours.
pub const MIN_CONTOUR_POINTS: usize = 10;

/// The plate contour: the longest boundary loop with at least
/// [`MIN_CONTOUR_POINTS`] points.
pub fn plate_contour(plate: &TriangleMesh) -> Result<Polyline3> {
    boundary_loops(plate)?
        .into_iter()
        .find(|l| l.len() >= MIN_CONTOUR_POINTS)
        .ok_or(Error::MissingContour)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateSide {
    SoundBoard,
    Back,
}

impl PlateSide {
    pub fn as_str(self) -> &'static str {
        match self {
            PlateSide::SoundBoard => "sound_board",
            PlateSide::Back => "back",
        }
    }
}

impl std::fmt::Display for PlateSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Plates after the symmetry plane has been rotated onto z = 0.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    pub sound_board: TriangleMesh,
    pub back: TriangleMesh,
    /// Applied to both plates.
    pub transform: RigidTransform,
    pub symmetry_plane_before: Plane,
    pub sound_board_plane_before: Plane,
    pub back_plane_before: Plane,
    pub sound_board_contour: Polyline3,
    pub back_contour: Polyline3,
    /// RMS orthogonal distance of each contour to its fitted plane (mm).
    pub sound_board_residual: f64,
    pub back_residual: f64,
}

impl AlignedPair {
    pub fn sound_board_plane(&self) -> Plane {
        self.sound_board_plane_before.transformed(&self.transform)
    }

    pub fn back_plane(&self) -> Plane {
        self.back_plane_before.transformed(&self.transform)
    }

    pub fn symmetry_plane(&self) -> Plane {
        self.symmetry_plane_before.transformed(&self.transform)
    }

    /// Maps an in-plane direction of the input frame into the aligned frame.
    pub fn aligned_direction(&self, dir: &Vector2<f64>) -> Vector2<f64> {
        let d = self.transform.apply_vector(&Vector3::new(dir.x, dir.y, 0.0));
        let flat = Vector2::new(d.x, d.y);
        if flat.norm() > 0.0 {
            flat.normalize()
        } else {
            Vector2::x()
        }
    }
}

type PlaneFits = (Plane, Plane, Plane, (f64, f64), (Polyline3, Polyline3));

/// Fits the contour plane of each plate and the bisector between them.
///
/// Returns (sound-board plane, back plane, symmetry plane, residuals, contours).
fn symmetry_planes(sound_board: &TriangleMesh, back: &TriangleMesh) -> Result<PlaneFits> {
    let sb_loop = plate_contour(sound_board)?;
    let back_loop = plate_contour(back)?;
    let (sb_plane, sb_rms) = fit_plane_orthogonal(sb_loop.points())?;
    let (back_plane, back_rms) = fit_plane_orthogonal(back_loop.points())?;
    let anchor = Point3::from((sb_loop.centroid().coords + back_loop.centroid().coords) * 0.5);
    let sym = bisector_plane(&sb_plane, &back_plane, &anchor)?;
    Ok((
        sb_plane,
        back_plane,
        sym,
        (sb_rms, back_rms),
        (sb_loop, back_loop),
    ))
}

/// Rigid motion taking `plane` onto z = 0 with its normal on +z.
pub fn transform_to_horizontal(plane: &Plane) -> RigidTransform {
    let n = plane.normal();
    let z = Vector3::z();
    let axis = n.cross(&z);
    let rotation = if axis.norm() == 0.0 {
        Rotation3::identity()
    } else {
        let angle = axis.norm().atan2(n.dot(&z));
        Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
    };
    // rotation preserves the offset: R·n = z, so the plane becomes z = offset
    RigidTransform::new(rotation, Vector3::new(0.0, 0.0, -plane.offset()))
}

fn half_turn_about_x() -> RigidTransform {
    RigidTransform::from_rotation(Rotation3::from_axis_angle(
        &Vector3::x_axis(),
        std::f64::consts::PI,
    ))
}

pub fn align_to_symmetry_plane(
    sound_board: &TriangleMesh,
    back: &TriangleMesh,
) -> Result<AlignedPair> {
    let (sb_plane, back_plane, sym, (sb_rms, back_rms), (sb_loop, back_loop)) =
        symmetry_planes(sound_board, back)?;
    let mut transform = transform_to_horizontal(&sym);
    let sb_mean = sound_board
        .vertices()
        .iter()
        .map(|v| transform.apply_point(v).z)
        .sum::<f64>()
        / sound_board.vertex_count() as f64;
    if sb_mean <= 0.0 {
        transform = transform.then(&half_turn_about_x());
    }
    Ok(AlignedPair {
        sound_board: apply_rigid_transform(sound_board, &transform),
        back: apply_rigid_transform(back, &transform),
        transform,
        symmetry_plane_before: sym,
        sound_board_plane_before: sb_plane,
        back_plane_before: back_plane,
        sound_board_contour: sb_loop,
        back_contour: back_loop,
        sound_board_residual: sb_rms,
        back_residual: back_rms,
    })
}

/// Recomputes the symmetry plane of two plates without moving them.
pub fn symmetry_plane(sound_board: &TriangleMesh, back: &TriangleMesh) -> Result<Plane> {
    symmetry_planes(sound_board, back).map(|(_, _, s, _, _)| s)
}

/// A lone plate aligned on its own contour plane.
#[derive(Debug, Clone)]
pub struct AlignedPlate {
    pub plate: TriangleMesh,
    pub transform: RigidTransform,
    pub plane_before: Plane,
    pub residual: f64,
}

/// Datum for an instrument missing its other plate: the plate's own contour
/// plane goes to z = 0 and the plate is turned so that a sound board lies on
/// z > 0 and a back on z < 0.
pub fn align_single_plate(plate: &TriangleMesh, side: PlateSide) -> Result<AlignedPlate> {
    let contour = plate_contour(plate)?;
    let (plane, residual) = fit_plane_orthogonal(contour.points())?;
    let mut transform = transform_to_horizontal(&plane);
    let mean = plate
        .vertices()
        .iter()
        .map(|v| transform.apply_point(v).z)
        .sum::<f64>()
        / plate.vertex_count() as f64;
    let wrong_side = match side {
        PlateSide::SoundBoard => mean < 0.0,
        PlateSide::Back => mean > 0.0,
    };
    if wrong_side {
        transform = transform.then(&half_turn_about_x());
    }
    Ok(AlignedPlate {
        plate: apply_rigid_transform(plate, &transform),
        transform,
        plane_before: plane,
        residual,
    })
}

/// Dihedral angles of one instrument, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleRecord {
    pub instrument_id: String,
    /// Sound board vs back, positive when the plates are closer at the bottom.
    pub sb_back_signed: f64,
    /// Symmetry plane (before rotation) vs z = 0.
    pub sym_horizontal: f64,
    pub sb_horizontal: f64,
    pub back_horizontal: f64,
}

impl AngleRecord {
    /// Angles of an aligned pair; `neck_direction` is given in the input frame.
    pub fn from_aligned(
        instrument_id: impl Into<String>,
        pair: &AlignedPair,
        neck_direction: &Vector2<f64>,
    ) -> Self {
        let horizontal = Plane::horizontal(0.0);
        let neck = pair.aligned_direction(neck_direction);
        AngleRecord {
            instrument_id: instrument_id.into(),
            sb_back_signed: signed_parallelism_angle(
                &pair.sound_board_plane(),
                &pair.back_plane(),
                &neck,
            ),
            sym_horizontal: dihedral_angle(&pair.symmetry_plane_before, &horizontal),
            sb_horizontal: dihedral_angle(&pair.sound_board_plane_before, &horizontal),
            back_horizontal: dihedral_angle(&pair.back_plane_before, &horizontal),
        }
    }
}
