use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{apply_rigid_transform, RigidTransform, TriangleMesh};

/// Centres the body on its vertex centroid and rotates its principal axes onto
/// x (largest variance), y and z (smallest).
///
/// Axis signs are fixed by making the third moment of the coordinates along x
/// and y non-negative; z follows from the right-hand rule. Symmetric shapes
/// with vanishing skew fall back to "largest component positive".
pub fn pca_align(body: &TriangleMesh) -> Result<(TriangleMesh, RigidTransform)> {
    let transform = pca_transform(body.vertices())?;
    Ok((apply_rigid_transform(body, &transform), transform))
}

pub fn pca_transform(points: &[Point3<f64>]) -> Result<RigidTransform> {
    if points.len() < 3 {
        return Err(Error::DegeneratePca);
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let (largest, smallest) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[2]]);
    if !(largest > 0.0) || smallest <= 1e-12 * largest {
        return Err(Error::DegeneratePca);
    }

    let axis = |k: usize| -> Vector3<f64> {
        let v: Vector3<f64> = eig.eigenvectors.column(order[k]).into();
        let (mut m3, mut scale) = (0.0, 0.0);
        for p in points {
            let s = v.dot(&(p.coords - centroid));
            m3 += s * s * s;
            scale += s.abs().powi(3);
        }
        let flip = if m3.abs() > 1e-9 * scale {
            m3 < 0.0
        } else {
            let i = v.iamax();
            v[i] < 0.0
        };
        if flip {
            -v
        } else {
            v
        }
    };
    let ex = axis(0);
    let ey = axis(1);
    let ez = ex.cross(&ey);
    let r = Matrix3::from_rows(&[ex.transpose(), ey.transpose(), ez.transpose()]);
    RigidTransform::from_matrix(r, -(r * centroid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use nalgebra::{Rotation3, Vector3};

    fn covariance(points: &[Point3<f64>]) -> Matrix3<f64> {
        let n = points.len() as f64;
        let c = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
        points.iter().fold(Matrix3::zeros(), |m, p| {
            let d = p.coords - c;
            m + d * d.transpose()
        }) / n
    }

    fn max_off_diagonal(m: &Matrix3<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    worst = worst.max(m[(i, j)].abs());
                }
            }
        }
        worst
    }

    #[test]
    fn centred_box_gives_identity() {
        let body = synthetic::box_mesh(356.0, 208.0, 40.0);
        let (_, t) = pca_align(&body).unwrap();
        assert!(t.is_identity(1e-12), "{t:?}");
    }

    #[test]
    fn rotated_box_is_recovered() {
        let body = synthetic::box_mesh(356.0, 208.0, 40.0);
        let rot = RigidTransform::new(
            Rotation3::from_axis_angle(&Vector3::z_axis(), 30f64.to_radians()),
            Vector3::new(12.0, -3.0, 4.0),
        );
        let moved = apply_rigid_transform(&body, &rot);
        let (aligned, t) = pca_align(&moved).unwrap();
        let cov = covariance(aligned.vertices());
        assert!(max_off_diagonal(&cov) < 1e-9);
        assert!(cov[(0, 0)] > cov[(1, 1)] && cov[(1, 1)] > cov[(2, 2)]);
        // the recovered rotation undoes the 30° turn up to axis signs
        let r = t.rotation * rot.rotation;
        for i in 0..3 {
            assert!((r[(i, i)].abs() - 1.0).abs() < 1e-9);
        }
        assert!((t.rotation.matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_cloud_diagonalises() {
        let sphere = synthetic::icosphere(10.0, 3);
        let (aligned, _) = pca_align(&sphere).unwrap();
        let cov = covariance(aligned.vertices());
        assert!(max_off_diagonal(&cov) < 1e-9);
    }

    #[test]
    fn flat_cloud_is_degenerate() {
        let pts: Vec<_> = (0..20)
            .map(|i| Point3::new(i as f64, (i * i) as f64, 0.0))
            .collect();
        assert_eq!(pca_transform(&pts).unwrap_err().code(), "degenerate-pca");
    }

    #[test]
    fn skew_fixes_x_sign() {
        // a wedge: more mass at negative x, long tail toward positive x
        let mut pts = Vec::new();
        for i in 0..50 {
            let x = (i as f64 / 49.0).powi(3) * 100.0;
            for (y, z) in [(0.0, 0.0), (5.0, 0.0), (0.0, 1.0), (5.0, 1.0)] {
                pts.push(Point3::new(-x, y, z));
            }
        }
        let t = pca_transform(&pts).unwrap();
        let mut m3 = 0.0;
        for p in &pts {
            m3 += t.apply_point(p).x.powi(3);
        }
        assert!(m3 >= 0.0);
    }
}
