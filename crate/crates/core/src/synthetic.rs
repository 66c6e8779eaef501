//! Synthetic geometry with known analytic answers.
//!
//! Used by the test suites and by the `synth-corpus` command to produce
//! demonstration data. Plates are lattice meshes over a rounded rectangle
//! whose height is a function of the distance to the outline: a rim rising
//! toward the edge, a Gaussian groove at a fixed inset, and an arch rising
//! toward the middle.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{Point3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::mesh::{apply_rigid_transform, RigidTransform, TriangleMesh};

/// Closed box centred at the origin.
pub fn box_mesh(lx: f64, ly: f64, lz: f64) -> TriangleMesh {
    let (hx, hy, hz) = (lx / 2.0, ly / 2.0, lz / 2.0);
    let mut v = Vec::with_capacity(8);
    for &z in &[-hz, hz] {
        for &(x, y) in &[(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)] {
            v.push(Point3::new(x, y, z));
        }
    }
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::new("box", v, faces).expect("box is valid")
}

/// Tetrahedron with unit legs along the axes.
pub fn unit_tetrahedron() -> TriangleMesh {
    TriangleMesh::new(
        "tetrahedron",
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ],
        vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
    )
    .expect("tetrahedron is valid")
}

/// Subdivided icosahedron with all vertices on the sphere of `radius`.
/// Face count is `20 · 4^subdivisions`.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.into_iter().map(|v| Point3::from(v * radius)).collect();
    TriangleMesh::new("icosphere", vertices, faces).expect("icosphere is valid")
}

/// Upper part of an icosphere: faces whose three vertices all have z > `min_z`.
pub fn icosphere_cap(radius: f64, subdivisions: u32, min_z: f64) -> TriangleMesh {
    let sphere = icosphere(radius, subdivisions);
    let keep: Vec<[usize; 3]> = sphere
        .faces()
        .iter()
        .copied()
        .filter(|f| f.iter().all(|&i| sphere.vertices()[i].z > min_z))
        .collect();
    compact("icosphere_cap", sphere.vertices(), &keep)
}

fn compact(name: &str, vertices: &[Point3<f64>], faces: &[[usize; 3]]) -> TriangleMesh {
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut out_v = Vec::new();
    let out_f = faces
        .iter()
        .map(|f| {
            f.map(|i| {
                if remap[i] == usize::MAX {
                    remap[i] = out_v.len();
                    out_v.push(vertices[i]);
                }
                remap[i]
            })
        })
        .collect();
    TriangleMesh::new(name, out_v, out_f).expect("compacted mesh is valid")
}

/// Parameters of a synthetic plate. Lengths in millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateSpec {
    /// Extent along x (body axis, neck toward +x).
    pub length: f64,
    /// Extent along y.
    pub width: f64,
    /// Corner radius of the outline; 0 gives a plain rectangle.
    pub corner_radius: f64,
    /// Lattice spacing of the mesh.
    pub spacing: f64,
    /// Inset of the channel from the outline.
    pub inset: f64,
    /// Height of the outline above the groove floor of the base relief.
    pub rim_height: f64,
    pub arch_height: f64,
    /// Distance over which the arch rises after the inset.
    pub arch_length: f64,
    pub groove_depth: f64,
    pub groove_sigma: f64,
    /// Angular sector (centre, full width) in degrees where the channel is
    /// erased, simulating a reduced plate end.
    pub erased_arc: Option<(f64, f64)>,
}

impl Default for PlateSpec {
    fn default() -> Self {
        PlateSpec {
            length: 120.0,
            width: 70.0,
            corner_radius: 0.0,
            spacing: 2.0,
            inset: 8.0,
            rim_height: 1.5,
            arch_height: 8.0,
            arch_length: 20.0,
            groove_depth: 0.0,
            groove_sigma: 1.5,
            erased_arc: None,
        }
    }
}

/// Width of the blend between the erased sector and the intact channel.
const ERASE_BLEND_DEG: f64 = 10.0;

impl PlateSpec {
    /// Violin-sized plate meshed at roughly 80k vertices.
    pub fn violin() -> Self {
        PlateSpec {
            length: 356.0,
            width: 208.0,
            corner_radius: 40.0,
            spacing: 0.98,
            arch_height: 15.0,
            arch_length: 60.0,
            groove_depth: 0.8,
            ..PlateSpec::default()
        }
    }

    /// Cello-sized plate.
    pub fn cello() -> Self {
        PlateSpec {
            length: 750.0,
            width: 440.0,
            corner_radius: 90.0,
            spacing: 2.0,
            inset: 12.0,
            rim_height: 3.0,
            arch_height: 25.0,
            arch_length: 120.0,
            groove_depth: 1.5,
            groove_sigma: 3.0,
            ..PlateSpec::default()
        }
    }

    /// Signed distance to the outline, negative inside.
    pub fn outline_sdf(&self, x: f64, y: f64) -> f64 {
        let r = self.corner_radius;
        let qx = x.abs() - (self.length / 2.0 - r);
        let qy = y.abs() - (self.width / 2.0 - r);
        let outside = (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt();
        outside + qx.max(qy).min(0.0) - r
    }

    /// Inward distance to the outline (positive inside).
    pub fn inset_distance(&self, x: f64, y: f64) -> f64 {
        -self.outline_sdf(x, y)
    }

    fn channel_weight(&self, x: f64, y: f64) -> f64 {
        let Some((centre, width)) = self.erased_arc else {
            return 1.0;
        };
        let theta = y.atan2(x).to_degrees();
        let mut delta = (theta - centre).rem_euclid(360.0);
        if delta > 180.0 {
            delta = 360.0 - delta;
        }
        let u = ((delta - width / 2.0) / ERASE_BLEND_DEG).clamp(0.0, 1.0);
        u * u * (3.0 - 2.0 * u)
    }

    /// Height of the surface above the outline datum, `None` outside.
    pub fn height(&self, x: f64, y: f64) -> Option<f64> {
        let d = self.inset_distance(x, y);
        if d < 0.0 {
            return None;
        }
        let rim = if d < self.inset {
            self.rim_height * ((self.inset - d) / self.inset).powi(2)
        } else {
            0.0
        };
        let arch = if d > self.inset {
            let u = ((d - self.inset) / self.arch_length).min(1.0);
            self.arch_height * (1.0 - (PI * u).cos()) / 2.0
        } else {
            0.0
        };
        let groove = if self.groove_depth > 0.0 {
            self.groove_depth
                * (-(d - self.inset).powi(2) / (2.0 * self.groove_sigma.powi(2))).exp()
        } else {
            0.0
        };
        Some(arch + self.channel_weight(x, y) * (rim - groove))
    }

    /// Points of the groove-bottom curve (the outline inset by `inset`),
    /// sampled every `step` mm of arc length.
    pub fn groove_curve(&self, step: f64) -> Vec<(f64, f64)> {
        let r = (self.corner_radius - self.inset).max(0.0);
        let hx = self.length / 2.0 - self.inset - r;
        let hy = self.width / 2.0 - self.inset - r;
        let mut pts = Vec::new();
        let push_segment = |pts: &mut Vec<(f64, f64)>, a: (f64, f64), b: (f64, f64)| {
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            let n = (len / step).ceil().max(1.0) as usize;
            for k in 0..n {
                let t = k as f64 / n as f64;
                pts.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        };
        let arc = |pts: &mut Vec<(f64, f64)>, c: (f64, f64), from: f64| {
            if r == 0.0 {
                return;
            }
            let n = ((PI / 2.0 * r) / step).ceil().max(1.0) as usize;
            for k in 0..n {
                let a = from + PI / 2.0 * k as f64 / n as f64;
                pts.push((c.0 + r * a.cos(), c.1 + r * a.sin()));
            }
        };
        push_segment(&mut pts, (hx + r, -hy), (hx + r, hy));
        arc(&mut pts, (hx, hy), 0.0);
        push_segment(&mut pts, (hx, hy + r), (-hx, hy + r));
        arc(&mut pts, (-hx, hy), PI / 2.0);
        push_segment(&mut pts, (-hx - r, hy), (-hx - r, -hy));
        arc(&mut pts, (-hx, -hy), PI);
        push_segment(&mut pts, (-hx, -hy - r), (hx, -hy - r));
        arc(&mut pts, (hx, -hy), 1.5 * PI);
        pts
    }
}

/// Which way the relief of a plate points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relief {
    Up,
    Down,
}

/// Lattice mesh of a plate: the relief [`PlateSpec::height`] is added to
/// `datum` (`Up`) or subtracted from it (`Down`).
pub fn plate_mesh(spec: &PlateSpec, name: &str, datum: f64, relief: Relief) -> TriangleMesh {
    let nx = (spec.length / spec.spacing).ceil() as usize + 1;
    let ny = (spec.width / spec.spacing).ceil() as usize + 1;
    let x0 = -spec.spacing * (nx - 1) as f64 / 2.0;
    let y0 = -spec.spacing * (ny - 1) as f64 / 2.0;
    let sign = match relief {
        Relief::Up => 1.0,
        Relief::Down => -1.0,
    };
    let mut index = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (x0 + i as f64 * spec.spacing, y0 + j as f64 * spec.spacing);
            if let Some(h) = spec.height(x, y) {
                index[j * nx + i] = vertices.len();
                vertices.push(Point3::new(x, y, datum + sign * h));
            }
        }
    }
    let mut faces = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = index[j * nx + i];
            let b = index[j * nx + i + 1];
            let c = index[(j + 1) * nx + i + 1];
            let d = index[(j + 1) * nx + i];
            // alternate the diagonal so the lattice has no preferred direction
            let tris = if (i + j) % 2 == 0 {
                [[a, b, c], [a, c, d]]
            } else {
                [[a, b, d], [b, c, d]]
            };
            for t in tris {
                if t.iter().all(|&k| k != usize::MAX) {
                    faces.push(t);
                }
            }
        }
    }
    TriangleMesh::new(name, vertices, faces).expect("plate lattice is valid")
}

/// Sound board above, back below, outlines `gap` apart, with the contour
/// planes tilted `tilt_deg` apart about y.
///
/// A positive tilt opens the gap toward +x (the neck), i.e. the plates are
/// closer at the bottom.
pub fn plate_pair(spec: &PlateSpec, gap: f64, tilt_deg: f64) -> (TriangleMesh, TriangleMesh) {
    let half = tilt_deg.to_radians() / 2.0;
    let sb = plate_mesh(spec, "sound_board", gap / 2.0, Relief::Up);
    let back = plate_mesh(spec, "back", -gap / 2.0, Relief::Down);
    let turn = |a: f64| {
        RigidTransform::from_rotation(Rotation3::from_axis_angle(&Vector3::y_axis(), a))
    };
    (
        apply_rigid_transform(&sb, &turn(-half)),
        apply_rigid_transform(&back, &turn(half)),
    )
}

/// Closed body hull enclosing both plates, for PCA.
pub fn body_box(spec: &PlateSpec, depth: f64) -> TriangleMesh {
    box_mesh(spec.length, spec.width, depth)
}

/// Writes a mesh as binary little-endian PLY.
pub fn write_ply_binary(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(64 + mesh.vertex_count() * 24 + mesh.face_count() * 13);
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertex_count(),
        mesh.face_count()
    )
    .expect("write to Vec");
    for v in mesh.vertices() {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in mesh.faces() {
        out.push(3);
        for &i in f {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a mesh as Wavefront OBJ.
pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    use std::fmt::Write as _;
    for v in mesh.vertices() {
        writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `count` small synthetic instruments (binary PLY plates) and a
/// `corpus.csv` describing them; returns the table path.
///
/// Each pair gets its own tilt and rigid placement. The first
/// `back_only` instruments have no sound board.
pub fn write_demo_corpus(dir: &Path, count: usize, back_only: usize) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let spec = PlateSpec {
        length: 90.0,
        width: 54.0,
        corner_radius: 12.0,
        spacing: 1.5,
        groove_depth: 0.6,
        ..PlateSpec::default()
    };
    let mut table = String::from(
        "inventory_id,size,attribution,date,sound_board_path,back_path,body_path,size_class_override,neck_direction,notes,link\n",
    );
    for k in 0..count {
        let id = format!("S{:03}", k + 1);
        let tilt = 0.15 * (k as f64 + 1.0) * if k % 2 == 0 { 1.0 } else { -1.0 };
        let (sb, back) = plate_pair(&spec, 28.0 + k as f64, tilt);
        let axis = Vector3::new(0.3 + 0.1 * k as f64, -0.2, 1.0).normalize();
        let turn = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), 0.2 + 0.35 * k as f64);
        let place = RigidTransform::new(turn, Vector3::new(5.0 * k as f64, -3.0, 12.0));
        let neck = place.apply_vector(&Vector3::x());
        let back_name = format!("{id}_back.ply");
        write_ply_binary(&apply_rigid_transform(&back, &place), &dir.join(&back_name))?;
        let sb_name = if k < back_only {
            String::new()
        } else {
            let name = format!("{id}_sound_board.ply");
            write_ply_binary(&apply_rigid_transform(&sb, &place), &dir.join(&name))?;
            name
        };
        let size = if k % 3 == 2 { "viola" } else { "violin" };
        table.push_str(&format!(
            "{id},{size},?,?,{sb_name},{back_name},,,\"{:.12};{:.12}\",synthetic tilt {tilt:.2} deg,\n",
            neck.x, neck.y
        ));
    }
    let path = dir.join("corpus.csv");
    fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_face_counts() {
        assert_eq!(icosphere(1.0, 0).face_count(), 20);
        assert_eq!(icosphere(1.0, 2).face_count(), 320);
        for v in icosphere(7.0, 2).vertices() {
            assert!((v.coords.norm() - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn violin_plate_has_about_80k_vertices() {
        let m = plate_mesh(&PlateSpec::violin(), "v", 0.0, Relief::Up);
        assert!((70_000..=90_000).contains(&m.vertex_count()), "{}", m.vertex_count());
    }

    #[test]
    fn groove_bottom_is_lowest() {
        let spec = PlateSpec {
            groove_depth: 0.8,
            ..PlateSpec::default()
        };
        let d = |x: f64| spec.height(x, 0.0).unwrap();
        let x_groove = spec.length / 2.0 - spec.inset;
        assert!(d(x_groove) < d(x_groove - 0.3));
        assert!(d(x_groove) < d(x_groove + 0.3));
        assert!((d(x_groove) + 0.8).abs() < 1e-12);
    }

    #[test]
    fn groove_curve_lies_at_inset() {
        let spec = PlateSpec {
            corner_radius: 20.0,
            ..PlateSpec::default()
        };
        for (x, y) in spec.groove_curve(0.5) {
            assert!((spec.inset_distance(x, y) - spec.inset).abs() < 1e-9);
        }
    }
}
