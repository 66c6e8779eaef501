//! Plane–mesh intersection and stacks of horizontal contour lines.

mod chain;
mod render;

use std::io;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::alignment::{Plane, PlateSide};
use crate::error::{Error, Result};
use crate::mesh::{Polyline3, TriangleMesh};
use crate::svg::fmt_num;

pub use chain::{chain_segments, CHAIN_TOLERANCE};
pub use render::{
    colour_ramp, render_contours_svg, ColourScale, Rgb, SvgDocument, CELLO_COLOUR_RANGE_MM,
    VIOLIN_VIOLA_COLOUR_RANGE_MM,
};

/// Default vertical distance between contour levels (mm).
pub const DEFAULT_CONTOUR_SPACING_MM: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ContourLevel {
    pub z: f64,
    pub polylines: Vec<Polyline3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub plate_id: String,
    pub side: PlateSide,
    pub levels: Vec<ContourLevel>,
    pub z_min: f64,
    pub z_max: f64,
}

/// Raw intersection segments of `plane` with the faces yielded by `faces`.
///
/// Vertices exactly on the plane count as lying on its positive side, so each
/// straddling triangle contributes exactly one segment and shared edges are
/// cut at bitwise-identical points. Triangles lying in the plane contribute
/// their three edges.
fn intersect_faces(
    mesh: &TriangleMesh,
    dist: &dyn Fn(&Point3<f64>) -> f64,
    faces: impl Iterator<Item = usize>,
) -> Vec<(Point3<f64>, Point3<f64>)> {
    let verts = mesh.vertices();
    let mut segments = Vec::new();
    for fi in faces {
        let f = mesh.faces()[fi];
        let s = f.map(|i| dist(&verts[i]));
        if s.iter().all(|&d| d == 0.0) {
            for k in 0..3 {
                segments.push((verts[f[k]], verts[f[(k + 1) % 3]]));
            }
            continue;
        }
        let mut cut = [Point3::origin(); 2];
        let mut n = 0;
        for k in 0..3 {
            let (a, b) = (k, (k + 1) % 3);
            if (s[a] < 0.0) == (s[b] < 0.0) {
                continue;
            }
            let (neg, pos) = if s[a] < 0.0 { (a, b) } else { (b, a) };
            let p = if s[pos] == 0.0 {
                verts[f[pos]]
            } else {
                let (vn, vp) = (verts[f[neg]], verts[f[pos]]);
                let t = s[neg] / (s[neg] - s[pos]);
                vn + (vp - vn) * t
            };
            if n < 2 {
                cut[n] = p;
            }
            n += 1;
        }
        if n == 2 {
            segments.push((cut[0], cut[1]));
        }
    }
    segments
}

pub fn plane_mesh_intersection(mesh: &TriangleMesh, plane: &Plane) -> Vec<Polyline3> {
    let dist = |p: &Point3<f64>| plane.signed_distance(p);
    let segments = intersect_faces(mesh, &dist, 0..mesh.face_count());
    chain_segments(&segments)
}

/// Horizontal cuts at every multiple of `spacing` between the lowest and the
/// highest vertex of an aligned plate.
///
/// Levels that only touch the mesh in isolated points (such as the very top
/// of a dome) yield no polyline and are left out.
pub fn contour_lines(
    plate: &TriangleMesh,
    side: PlateSide,
    spacing: f64,
) -> Result<ContourSet> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "contour spacing must be positive, got {spacing}"
        )));
    }
    let (lo, hi) = plate.bounds();
    let (z_min, z_max) = (lo.z, hi.z);
    let k_lo = (z_min / spacing).ceil() as i64;
    let k_hi = (z_max / spacing).floor() as i64;
    let count = (k_hi - k_lo + 1).max(0) as usize;

    // bucket faces by the levels their z-range may touch (superset, the cut decides)
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); count];
    if count > 0 {
        for (fi, f) in plate.faces().iter().enumerate() {
            let zs = f.map(|i| plate.vertices()[i].z);
            let fmin = zs[0].min(zs[1]).min(zs[2]);
            let fmax = zs[0].max(zs[1]).max(zs[2]);
            let a = ((fmin / spacing).floor() as i64).max(k_lo);
            let b = ((fmax / spacing).ceil() as i64).min(k_hi);
            for k in a..=b {
                buckets[(k - k_lo) as usize].push(fi);
            }
        }
    }

    let levels = buckets
        .into_par_iter()
        .enumerate()
        .map(|(i, faces)| {
            let z = (k_lo + i as i64) as f64 * spacing;
            let dist = move |p: &Point3<f64>| p.z - z;
            let segments = intersect_faces(plate, &dist, faces.into_iter());
            ContourLevel {
                z,
                polylines: chain_segments(&segments),
            }
        })
        .filter(|level: &ContourLevel| !level.polylines.is_empty())
        .collect();
    Ok(ContourSet {
        plate_id: plate.name().to_string(),
        side,
        levels,
        z_min,
        z_max,
    })
}

impl ContourSet {
    pub fn polyline_count(&self) -> usize {
        self.levels.iter().map(|l| l.polylines.len()).sum()
    }

    /// Columns: plate_id, level_mm, polyline_index, point_index, x, y, z.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "plate_id",
            "level_mm",
            "polyline_index",
            "point_index",
            "x",
            "y",
            "z",
        ])?;
        for level in &self.levels {
            let z = fmt_num(level.z, 3);
            for (pi, poly) in level.polylines.iter().enumerate() {
                for (k, p) in poly.points().iter().enumerate() {
                    w.write_record([
                        self.plate_id.as_str(),
                        z.as_str(),
                        &pi.to_string(),
                        &k.to_string(),
                        &fmt_num(p.x, 6),
                        &fmt_num(p.y, 6),
                        &fmt_num(p.z, 6),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{apply_rigid_transform, RigidTransform};
    use crate::synthetic;
    use nalgebra::Vector3;

    #[test]
    fn tetrahedron_mid_height_section() {
        let tet = synthetic::unit_tetrahedron();
        let polys = plane_mesh_intersection(&tet, &Plane::horizontal(0.5));
        assert_eq!(polys.len(), 1);
        assert!(polys[0].is_closed());
        // analytic section: right triangle with legs 1 - h
        let expected = 0.5 * (1.0 - 0.5f64).powi(2);
        assert!((polys[0].signed_area_xy().abs() - expected).abs() < 1e-9);
    }

    #[test]
    fn plane_below_mesh_is_empty() {
        let tet = synthetic::unit_tetrahedron();
        assert!(plane_mesh_intersection(&tet, &Plane::horizontal(-3.0)).is_empty());
    }

    #[test]
    fn coplanar_face_contributes_its_edges() {
        let tet = synthetic::unit_tetrahedron();
        let polys = plane_mesh_intersection(&tet, &Plane::horizontal(0.0));
        // base triangle lies in z = 0; three edges close one loop
        let segs: usize = polys.iter().map(|p| p.segment_count()).sum();
        assert!(segs >= 3);
        for p in &polys {
            for q in p.points() {
                assert_eq!(q.z, 0.0);
            }
        }
    }

    #[test]
    fn sphere_section_radius() {
        let sphere = synthetic::icosphere(10.0, 4);
        let polys = plane_mesh_intersection(&sphere, &Plane::horizontal(6.0));
        assert_eq!(polys.len(), 1);
        assert!(polys[0].is_closed());
        let mean_r: f64 = polys[0]
            .points()
            .iter()
            .map(|p| (p.x * p.x + p.y * p.y).sqrt())
            .sum::<f64>()
            / polys[0].len() as f64;
        assert!((mean_r - 8.0).abs() < 0.05, "{mean_r}");
    }

    #[test]
    fn hemisphere_levels() {
        // cut well below the equator so that z = 0 is a full circle
        let cap = synthetic::icosphere_cap(15.0, 4, -3.5);
        let set = contour_lines(&cap, PlateSide::SoundBoard, 1.0).unwrap();
        let upper: Vec<&ContourLevel> = set.levels.iter().filter(|l| l.z >= 0.0).collect();
        let zs: Vec<f64> = upper.iter().map(|l| l.z).collect();
        assert_eq!(zs, (0..15).map(|k| k as f64).collect::<Vec<_>>());
        for level in upper {
            assert_eq!(level.polylines.len(), 1, "level {}", level.z);
            let expected = (225.0 - level.z * level.z).sqrt();
            for p in level.polylines[0].points() {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                assert!(r <= expected + 1e-9 && r > expected - 0.2);
                assert!((p.z - level.z).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn levels_are_anchored_at_absolute_multiples() {
        let cap = synthetic::icosphere_cap(15.0, 3, -3.5);
        let shifted = apply_rigid_transform(
            &cap,
            &RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.5)),
        );
        let a = contour_lines(&cap, PlateSide::SoundBoard, 1.0).unwrap();
        let b = contour_lines(&shifted, PlateSide::SoundBoard, 1.0).unwrap();
        for set in [&a, &b] {
            assert!(set.levels[0].z - set.z_min.ceil() == 0.0);
            assert!(set.levels.iter().all(|l| l.z.fract() == 0.0));
        }
        assert_eq!(a.levels.last().unwrap().z, 14.0);
        assert_eq!(b.levels.last().unwrap().z, 15.0);
    }

    #[test]
    fn coarser_spacing_is_a_subset() {
        let cap = synthetic::icosphere_cap(15.0, 3, -0.9);
        let one = contour_lines(&cap, PlateSide::SoundBoard, 1.0).unwrap();
        let two = contour_lines(&cap, PlateSide::SoundBoard, 2.0).unwrap();
        for level in &two.levels {
            let same = one.levels.iter().find(|l| l.z == level.z).unwrap();
            assert_eq!(same, level);
        }
    }

    #[test]
    fn flat_plate_has_no_levels() {
        let tri = TriangleMesh::new(
            "flat",
            vec![
                Point3::new(0.0, 0.0, 0.2),
                Point3::new(1.0, 0.0, 0.2),
                Point3::new(0.0, 1.0, 0.7),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let set = contour_lines(&tri, PlateSide::Back, 1.0).unwrap();
        assert!(set.levels.is_empty());
        assert_eq!((set.z_min, set.z_max), (0.2, 0.7));
        assert!(contour_lines(&tri, PlateSide::Back, -1.0).is_err());
    }
}
