//! Triangle meshes, rigid transforms and polylines.
//!
//! All coordinates are millimetres. A [`TriangleMesh`] is validated on
//! construction: indices are in range, coordinates are finite and
//! degenerate faces are dropped.

mod boundary;
pub mod io;

use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

use crate::error::{Error, Result};

pub use boundary::boundary_loops;
pub use io::{load_mesh, LoadedMesh, MeshFormat};

/// Faces whose area is at or below this value (mm²) are treated as degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    name: String,
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, dropping degenerate faces.
    ///
    /// Returns the mesh together with the number of faces that were dropped.
    pub fn from_parts(
        name: impl Into<String>,
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
    ) -> Result<(Self, usize)> {
        if let Some((i, v)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| !v.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidVertex(format!(
                "vertex {i} has non-finite coordinates ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidVertex(format!(
                "face {f:?} references a vertex outside 0..{n}"
            )));
        }
        let total = faces.len();
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| !is_degenerate(&vertices, f))
            .collect();
        let dropped = total - faces.len();
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        Ok((
            TriangleMesh {
                name: name.into(),
                vertices,
                faces,
            },
            dropped,
        ))
    }

    /// Like [`TriangleMesh::from_parts`] but discards the dropped-face count.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self> {
        Self::from_parts(name, vertices, faces).map(|(m, _)| m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, v| acc + v.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices[1..] {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn mean_z(&self) -> f64 {
        self.vertices.iter().map(|v| v.z).sum::<f64>() / self.vertices.len() as f64
    }
}

fn is_degenerate(vertices: &[Point3<f64>], f: &[usize; 3]) -> bool {
    if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
        return true;
    }
    let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
    0.5 * (b - a).cross(&(c - a)).norm() <= MIN_FACE_AREA
}

/// Proper rigid motion `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation,
        }
    }

    pub fn from_rotation(rotation: Rotation3<f64>) -> Self {
        RigidTransform {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    /// Accepts a matrix only if it is orthonormal to 1e-9 with determinant +1.
    pub fn from_matrix(m: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if err > 1e-9 || m.determinant() < 0.0 {
            return Err(Error::InvalidParameter(
                "rotation matrix is not a proper orthonormal matrix".into(),
            ));
        }
        Ok(RigidTransform {
            rotation: Rotation3::from_matrix_unchecked(m),
            translation,
        })
    }

    pub fn apply_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self.then(other)` applies `self` first, then `other`.
    pub fn then(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: other.rotation * self.rotation,
            translation: other.rotation * self.translation + other.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (self.rotation.matrix() - Matrix3::identity()).abs().max() <= tol
            && self.translation.abs().max() <= tol
    }
}

pub fn apply_rigid_transform(mesh: &TriangleMesh, t: &RigidTransform) -> TriangleMesh {
    TriangleMesh {
        name: mesh.name.clone(),
        vertices: mesh.vertices.iter().map(|v| t.apply_point(v)).collect(),
        faces: mesh.faces.clone(),
    }
}

/// Consecutive polyline points closer than this are considered equal.
pub const POINT_SEPARATION: f64 = 1e-9;

/// Ordered 3D point chain. Closed polylines do not repeat the first point.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline3 {
    points: Vec<Point3<f64>>,
    closed: bool,
}

impl Polyline3 {
    /// Builds a polyline, collapsing consecutive duplicate points.
    ///
    /// Returns `None` when fewer than two distinct points remain.
    pub fn new(points: Vec<Point3<f64>>, closed: bool) -> Option<Self> {
        let mut pts: Vec<Point3<f64>> = Vec::with_capacity(points.len());
        for p in points {
            if pts
                .last()
                .is_none_or(|q| (p - q).norm() > POINT_SEPARATION)
            {
                pts.push(p);
            }
        }
        if closed {
            while pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() <= POINT_SEPARATION {
                pts.pop();
            }
        }
        (pts.len() >= 2).then_some(Polyline3 {
            points: pts,
            closed,
        })
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of segments, counting the closing one.
    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point3<f64>, Point3<f64>)> + '_ {
        let n = self.points.len();
        (0..self.segment_count()).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.points.len() as f64)
    }

    /// Signed area of the xy projection (shoelace); meaningful for closed loops.
    pub fn signed_area_xy(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0.0;
        for i in 0..n {
            let p = self.points[i];
            let q = self.points[(i + 1) % n];
            acc += p.x * q.y - q.x * p.y;
        }
        0.5 * acc
    }

    pub fn transformed(&self, t: &RigidTransform) -> Polyline3 {
        Polyline3 {
            points: self.points.iter().map(|p| t.apply_point(p)).collect(),
            closed: self.closed,
        }
    }
}
