//! Regular horizontal elevation grids sampled from aligned plate meshes.

mod raster;
mod slices;

use nalgebra::{Point2, Point3};
use rayon::prelude::*;

use crate::alignment::PlateSide;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;

pub use raster::{read_raster, write_pgm, write_raster};
pub use slices::{grid_slices, Direction, Slice};

/// Default node spacing of elevation grids (mm).
pub const DEFAULT_GRID_STEP_MM: f64 = 0.25;

/// Barycentric slack accepted by the point-in-triangle test.
const INSIDE_TOLERANCE: f64 = 1e-12;

/// Elevations on nodes `(origin.x + col·step, origin.y + row·step)`.
///
/// Rows run along y and columns along x; storage is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationGrid {
    /// Integer node index of column 0 and row 0; node coordinates are
    /// `index · step` so grids with commensurate steps share nodes exactly.
    origin_index: (i64, i64),
    step: f64,
    nx: usize,
    ny: usize,
    z: Vec<f64>,
    valid: Vec<bool>,
    side: PlateSide,
}

impl ElevationGrid {
    pub fn from_parts(
        origin_index: (i64, i64),
        step: f64,
        nx: usize,
        ny: usize,
        z: Vec<f64>,
        valid: Vec<bool>,
        side: PlateSide,
    ) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!("grid must be at least 2×2, got {nx}×{ny}")));
        }
        if z.len() != nx * ny || valid.len() != nx * ny {
            return Err(Error::InvalidParameter("grid buffers do not match dimensions".into()));
        }
        Ok(ElevationGrid {
            origin_index,
            step,
            nx,
            ny,
            z,
            valid,
            side,
        })
    }

    pub fn origin(&self) -> Point2<f64> {
        Point2::new(self.x(0), self.y(0))
    }

    pub fn origin_index(&self) -> (i64, i64) {
        self.origin_index
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn side(&self) -> PlateSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn x(&self, col: usize) -> f64 {
        (self.origin_index.0 + col as i64) as f64 * self.step
    }

    pub fn y(&self, row: usize) -> f64 {
        (self.origin_index.1 + row as i64) as f64 * self.step
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.nx + col
    }

    /// Raw elevation; meaningless where the node is invalid.
    pub fn z(&self, row: usize, col: usize) -> f64 {
        self.z[self.index(row, col)]
    }

    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[self.index(row, col)]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = self.index(row, col);
        self.valid[i].then(|| self.z[i])
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// +1 for a sound board, −1 for a back: multiplies z into height away
    /// from the symmetry plane.
    pub fn outward_sign(&self) -> f64 {
        match self.side {
            PlateSide::SoundBoard => 1.0,
            PlateSide::Back => -1.0,
        }
    }

    /// Range of outward height over valid nodes.
    pub fn outward_range(&self) -> Option<(f64, f64)> {
        let s = self.outward_sign();
        self.z
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .map(|(&z, _)| s * z)
            .fold(None, |acc, h| match acc {
                None => Some((h, h)),
                Some((lo, hi)) => Some((lo.min(h), hi.max(h))),
            })
    }
}

/// Uniform 2D bucket grid over triangle bounding boxes.
struct FaceBuckets {
    x0: f64,
    y0: f64,
    cell: f64,
    cols: usize,
    rows: usize,
    starts: Vec<usize>,
    faces: Vec<u32>,
}

impl FaceBuckets {
    fn build(tris: &[[Point3<f64>; 3]], lo: Point2<f64>, hi: Point2<f64>) -> Self {
        let area = ((hi.x - lo.x) * (hi.y - lo.y)).max(1e-12);
        let cell = (2.0 * area / tris.len().max(1) as f64).sqrt().max(1e-6);
        let cols = (((hi.x - lo.x) / cell).floor() as usize + 1).min(1 << 14);
        let rows = (((hi.y - lo.y) / cell).floor() as usize + 1).min(1 << 14);
        let mut fb = FaceBuckets {
            x0: lo.x,
            y0: lo.y,
            cell,
            cols,
            rows,
            starts: Vec::new(),
            faces: Vec::new(),
        };
        let ranges: Vec<_> = tris.iter().map(|t| fb.cell_range(t)).collect();
        let mut counts = vec![0usize; cols * rows + 1];
        for &(c0, c1, r0, r1) in &ranges {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    counts[r * cols + c + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut faces = vec![0u32; counts[cols * rows]];
        for (fi, &(c0, c1, r0, r1)) in ranges.iter().enumerate() {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    let slot = &mut fill[r * cols + c];
                    faces[*slot] = fi as u32;
                    *slot += 1;
                }
            }
        }
        fb.starts = counts;
        fb.faces = faces;
        fb
    }

    fn clamp_col(&self, x: f64) -> usize {
        (((x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.cols - 1)
    }

    fn clamp_row(&self, y: f64) -> usize {
        (((y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.rows - 1)
    }

    fn cell_range(&self, t: &[Point3<f64>; 3]) -> (usize, usize, usize, usize) {
        let xmin = t[0].x.min(t[1].x).min(t[2].x);
        let xmax = t[0].x.max(t[1].x).max(t[2].x);
        let ymin = t[0].y.min(t[1].y).min(t[2].y);
        let ymax = t[0].y.max(t[1].y).max(t[2].y);
        (
            self.clamp_col(xmin - self.cell * 1e-9),
            self.clamp_col(xmax + self.cell * 1e-9),
            self.clamp_row(ymin - self.cell * 1e-9),
            self.clamp_row(ymax + self.cell * 1e-9),
        )
    }

    fn candidates(&self, x: f64, y: f64) -> &[u32] {
        let c = ((x - self.x0) / self.cell).floor();
        let r = ((y - self.y0) / self.cell).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return &[];
        }
        let k = r as usize * self.cols + c as usize;
        &self.faces[self.starts[k]..self.starts[k + 1]]
    }
}

/// Elevation of triangle `t` above `(x, y)`, if the vertical line meets it.
fn vertical_hit(t: &[Point3<f64>; 3], x: f64, y: f64) -> Option<f64> {
    let (ax, ay) = (t[0].x, t[0].y);
    let (e1x, e1y) = (t[1].x - ax, t[1].y - ay);
    let (e2x, e2y) = (t[2].x - ax, t[2].y - ay);
    let det = e1x * e2y - e1y * e2x;
    let scale = (e1x.abs() + e1y.abs()) * (e2x.abs() + e2y.abs());
    if det.abs() <= 1e-14 * scale || det == 0.0 {
        return None;
    }
    let (px, py) = (x - ax, y - ay);
    let u = (px * e2y - py * e2x) / det;
    let v = (e1x * py - e1y * px) / det;
    let tol = -INSIDE_TOLERANCE;
    if u < tol || v < tol || 1.0 - u - v < tol {
        return None;
    }
    let z0 = t[0].z;
    Some(z0 + u * (t[1].z - z0) + v * (t[2].z - z0))
}

/// Samples an aligned plate on the grid of multiples of `step` covering its
/// footprint.
///
/// Where the vertical line through a node meets several triangles, the one
/// farthest from the symmetry plane wins; ties go to the lowest face index.
pub fn resample_grid(plate: &TriangleMesh, side: PlateSide, step: f64) -> Result<ElevationGrid> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
    }
    if plate.face_count() == 0 {
        return Err(Error::EmptyFootprint);
    }
    let (lo, hi) = plate.bounds();
    let ix0 = (lo.x / step).floor() as i64 - 1;
    let iy0 = (lo.y / step).floor() as i64 - 1;
    let ix1 = (hi.x / step).ceil() as i64 + 1;
    let iy1 = (hi.y / step).ceil() as i64 + 1;
    let nx = (ix1 - ix0 + 1) as usize;
    let ny = (iy1 - iy0 + 1) as usize;

    let tris: Vec<[Point3<f64>; 3]> = (0..plate.face_count()).map(|f| plate.triangle(f)).collect();
    let buckets = FaceBuckets::build(&tris, Point2::new(lo.x, lo.y), Point2::new(hi.x, hi.y));

    let mut z = vec![0.0; nx * ny];
    let mut valid = vec![false; nx * ny];
    z.par_chunks_mut(nx)
        .zip(valid.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(row, (zrow, vrow))| {
            let y = (iy0 + row as i64) as f64 * step;
            for col in 0..nx {
                let x = (ix0 + col as i64) as f64 * step;
                let mut best: Option<(f64, u32)> = None;
                for &fi in buckets.candidates(x, y) {
                    if let Some(h) = vertical_hit(&tris[fi as usize], x, y) {
                        let better = match best {
                            None => true,
                            Some((bh, bf)) => {
                                h.abs() > bh.abs() || (h.abs() == bh.abs() && fi < bf)
                            }
                        };
                        if better {
                            best = Some((h, fi));
                        }
                    }
                }
                if let Some((h, _)) = best {
                    zrow[col] = h;
                    vrow[col] = true;
                }
            }
        });
    if !valid.iter().any(|&v| v) {
        return Err(Error::EmptyFootprint);
    }
    ElevationGrid::from_parts((ix0, iy0), step, nx, ny, z, valid, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{self, PlateSpec, Relief};

    fn square(z: impl Fn(f64, f64) -> f64, n: usize, size: f64) -> TriangleMesh {
        let mut v = Vec::new();
        let h = size / n as f64;
        for j in 0..=n {
            for i in 0..=n {
                let (x, y) = (i as f64 * h, j as f64 * h);
                v.push(Point3::new(x, y, z(x, y)));
            }
        }
        let mut f = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let a = j * (n + 1) + i;
                f.push([a, a + 1, a + n + 2]);
                f.push([a, a + n + 2, a + n + 1]);
            }
        }
        TriangleMesh::new("sq", v, f).unwrap()
    }

    #[test]
    fn flat_plate_is_exact() {
        let g = resample_grid(&square(|_, _| 2.0, 7, 10.0), PlateSide::SoundBoard, 0.25).unwrap();
        assert_eq!(g.origin(), Point2::new(-0.25, -0.25));
        assert_eq!((g.nx(), g.ny()), (43, 43));
        for row in 1..g.ny() - 1 {
            for col in 1..g.nx() - 1 {
                assert_eq!(g.get(row, col), Some(2.0));
            }
        }
        assert!(!g.is_valid(0, 5));
        assert!(!g.is_valid(5, g.nx() - 1));
    }

    #[test]
    fn tilted_plane_reproduced() {
        let g = resample_grid(&square(|x, _| 0.1 * x, 9, 10.0), PlateSide::SoundBoard, 0.25).unwrap();
        for row in 0..g.ny() {
            for col in 0..g.nx() {
                if let Some(z) = g.get(row, col) {
                    assert!((z - 0.1 * g.x(col)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn refinement_agrees_on_shared_nodes() {
        let mesh = synthetic::plate_mesh(&PlateSpec::default(), "p", 0.0, Relief::Up);
        let coarse = resample_grid(&mesh, PlateSide::SoundBoard, 0.5).unwrap();
        let fine = resample_grid(&mesh, PlateSide::SoundBoard, 0.25).unwrap();
        let (cx, cy) = coarse.origin_index();
        let (fx, fy) = fine.origin_index();
        for row in 0..coarse.ny() {
            for col in 0..coarse.nx() {
                let frow = 2 * (cy + row as i64) - fy;
                let fcol = 2 * (cx + col as i64) - fx;
                if frow < 0 || fcol < 0 || frow >= fine.ny() as i64 || fcol >= fine.nx() as i64 {
                    assert!(!coarse.is_valid(row, col));
                    continue;
                }
                let (frow, fcol) = (frow as usize, fcol as usize);
                assert_eq!(coarse.x(col), fine.x(fcol));
                assert_eq!(coarse.get(row, col), fine.get(frow, fcol));
            }
        }
    }

    #[test]
    fn folded_sheet_takes_outer_surface() {
        // two stacked triangles over the same footprint
        let v = vec![
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(4.0, 0.0, 1.0),
            Point3::new(0.0, 4.0, 1.0),
            Point3::new(0.0, 0.0, 3.0),
            Point3::new(4.0, 0.0, 3.0),
            Point3::new(0.0, 4.0, 3.0),
        ];
        let mesh = TriangleMesh::new("fold", v, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let g = resample_grid(&mesh, PlateSide::SoundBoard, 0.5).unwrap();
        let c = g.index(3, 3);
        assert!(g.valid_mask()[c]);
        assert_eq!(g.z_values()[c], 3.0);
    }

    #[test]
    fn empty_footprint() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(1.0, 0.0, 0.0),
        ];
        // a vertical sliver between nodes
        let mesh = TriangleMesh::new(
            "wall",
            v.iter().map(|p| Point3::new(p.x * 0.01 + 0.1, 0.13, p.z + p.x)).collect(),
            vec![[0, 1, 2]],
        )
        .unwrap();
        let err = resample_grid(&mesh, PlateSide::Back, 1.0).unwrap_err();
        assert_eq!(err.code(), "empty-footprint");
    }

    #[test]
    fn violin_grid_size() {
        let spec = PlateSpec::violin();
        let lo = (-spec.length / 2.0 / 0.25).floor() - 1.0;
        let hi = (spec.length / 2.0 / 0.25).ceil() + 1.0;
        // 356 mm at 0.25 mm, plus one padding node on each side
        assert_eq!((hi - lo + 1.0) as usize, 1427);
    }
}
