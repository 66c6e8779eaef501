use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::mesh::RigidTransform;

/// Oriented plane `{p : normal·p = offset}` with a canonical normal.
///
/// The normal always has z ≥ 0; when z = 0 the x component is ≥ 0, and when
/// both vanish y > 0. Two planes describing the same set therefore compare
/// equal component-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vector3<f64>,
    offset: f64,
}

impl Plane {
    /// Normalizes `normal` and flips the pair into canonical orientation.
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0 && offset.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "plane normal {normal:?} / offset {offset} are not usable"
            )));
        }
        let (mut n, mut d) = (normal / len, offset / len);
        let flip = n.z < 0.0 || (n.z == 0.0 && (n.x < 0.0 || (n.x == 0.0 && n.y < 0.0)));
        if flip {
            n = -n;
            d = -d;
        }
        Ok(Plane {
            normal: n,
            offset: d,
        })
    }

    pub fn through(point: &Point3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let len = normal.norm();
        if len == 0.0 || !len.is_finite() {
            return Err(Error::InvalidParameter("zero plane normal".into()));
        }
        let n = normal / len;
        Plane::new(n, n.dot(&point.coords))
    }

    /// The plane z = `height`.
    pub fn horizontal(height: f64) -> Self {
        Plane {
            normal: Vector3::z(),
            offset: height,
        }
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn project(&self, p: &Point3<f64>) -> Point3<f64> {
        p - self.normal * self.signed_distance(p)
    }

    pub fn transformed(&self, t: &RigidTransform) -> Plane {
        let n = t.apply_vector(&self.normal);
        let on_plane = Point3::from(self.normal * self.offset);
        let p = t.apply_point(&on_plane);
        Plane::new(n, n.dot(&p.coords)).expect("rigid motion keeps normals unit")
    }

    /// Height of the plane above (x, y), or `None` for vertical planes.
    pub fn height_at(&self, x: f64, y: f64) -> Option<f64> {
        (self.normal.z != 0.0)
            .then(|| (self.offset - self.normal.x * x - self.normal.y * y) / self.normal.z)
    }
}

/// Total-least-squares plane through `points` and the RMS orthogonal residual.
///
/// The normal is the eigenvector of the centred covariance with the smallest
/// eigenvalue; the plane passes through the centroid.
pub fn fit_plane_orthogonal(points: &[Point3<f64>]) -> Result<(Plane, f64)> {
    if points.len() < 3 {
        return Err(Error::DegeneratePlaneFit);
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (middle, large) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(large > 0.0) || middle <= 1e-12 * large {
        return Err(Error::DegeneratePlaneFit);
    }
    let normal: Vector3<f64> = eig.eigenvectors.column(order[0]).into();
    let plane = Plane::through(&Point3::from(centroid), normal)?;
    let ss: f64 = points.iter().map(|p| plane.signed_distance(p).powi(2)).sum();
    Ok((plane, (ss / n).sqrt()))
}

/// Dihedral angle between two planes in degrees, in [0°, 90°].
///
/// Equal to `acos(|a·b|)`; evaluated through `atan2` so that nearly parallel
/// planes keep full precision.
pub fn dihedral_angle(a: &Plane, b: &Plane) -> f64 {
    let cross = a.normal.cross(&b.normal).norm();
    let dot = a.normal.dot(&b.normal).abs();
    cross.atan2(dot).to_degrees().clamp(0.0, 90.0)
}

/// Plane bisecting `a` and `b`, positioned midway between the projections of
/// `anchor` onto them.
pub fn bisector_plane(a: &Plane, b: &Plane, anchor: &Point3<f64>) -> Result<Plane> {
    let (na, da) = (a.normal, a.offset);
    let (mut nb, mut db) = (b.normal, b.offset);
    let dot = na.dot(&nb);
    if dot <= -1.0 + f64::EPSILON {
        return Err(Error::UndefinedBisector);
    }
    if dot < 0.0 {
        nb = -nb;
        db = -db;
    }
    let sum = na + nb;
    if sum.norm() <= f64::EPSILON {
        return Err(Error::UndefinedBisector);
    }
    let pa = anchor - na * (na.dot(&anchor.coords) - da);
    let pb = anchor - nb * (nb.dot(&anchor.coords) - db);
    let mid = Point3::from((pa.coords + pb.coords) * 0.5);
    Plane::through(&mid, sum)
}

/// Dihedral angle between the plates, signed by where they are closer.
///
/// Positive when the gap between the sound-board plane and the back plane
/// grows along `neck_direction` (plates closer at the bottom of the body),
/// negative when it shrinks. Exactly parallel planes give 0.
pub fn signed_parallelism_angle(
    sb_plane: &Plane,
    back_plane: &Plane,
    neck_direction: &Vector2<f64>,
) -> f64 {
    let magnitude = dihedral_angle(sb_plane, back_plane);
    if magnitude == 0.0 {
        return 0.0;
    }
    let u = Vector3::new(neck_direction.x, neck_direction.y, 0.0);
    // slope of z along u for a plane n·p = d is -(n·u)/n_z
    let slope = |p: &Plane| {
        let n = p.normal();
        if n.z == 0.0 {
            0.0
        } else {
            -n.dot(&u) / n.z
        }
    };
    let gap_slope = slope(sb_plane) - slope(back_plane);
    if gap_slope < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}
