//! Channel of minima: nodes that are strict local minima on at least two of
//! the four slices through them.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elevation::{Direction, ElevationGrid, Slice};
use crate::error::{Error, Result};
use crate::size_class::SizeClass;
use crate::svg::fmt_num;

/// Neighbourhood radius for violins and violas (mm).
pub const VIOLIN_VIOLA_RADIUS_MM: f64 = 2.0;
/// Neighbourhood radius for cellos (mm).
pub const CELLO_RADIUS_MM: f64 = 5.0;
/// Number of slice directions a node must be a minimum in.
pub const DEFAULT_MIN_VOTES: u8 = 2;
/// Relative height above which channel candidates count as arching outliers.
pub const DEFAULT_MAX_RELATIVE_HEIGHT: f64 = 0.3;

/// Guards `radius / spacing` against landing just below an integer.
const NODE_COUNT_EPS: f64 = 1e-9;

/// Height differences (mm) below this are ties, so that interpolation
/// round-off on a flat region cannot create minima.
pub const HEIGHT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchingFilterParams {
    pub max_relative_height: f64,
    /// Keep only points within this distance (mm) of the plate outline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_band: Option<f64>,
}

impl Default for ArchingFilterParams {
    fn default() -> Self {
        ArchingFilterParams {
            max_relative_height: DEFAULT_MAX_RELATIVE_HEIGHT,
            boundary_band: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub neighbourhood_radius: f64,
    pub min_votes: u8,
    #[serde(default)]
    pub arching_filter: ArchingFilterParams,
}

impl ChannelParams {
    pub fn for_size_class(class: SizeClass) -> Self {
        let radius = match class {
            SizeClass::ViolinViola => VIOLIN_VIOLA_RADIUS_MM,
            SizeClass::Cello => CELLO_RADIUS_MM,
        };
        ChannelParams {
            neighbourhood_radius: radius,
            min_votes: DEFAULT_MIN_VOTES,
            arching_filter: ArchingFilterParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.neighbourhood_radius.is_finite() && self.neighbourhood_radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "neighbourhood radius must be positive, got {}",
                self.neighbourhood_radius
            )));
        }
        if !(1..=4).contains(&self.min_votes) {
            return Err(Error::InvalidParameter(format!(
                "min_votes must be in 1..=4, got {}",
                self.min_votes
            )));
        }
        let h = self.arching_filter.max_relative_height;
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "max_relative_height must be in (0, 1], got {h}"
            )));
        }
        if let Some(b) = self.arching_filter.boundary_band {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "boundary band must be positive, got {b}"
                )));
            }
        }
        Ok(())
    }
}

/// Set of slice directions, one bit per [`Direction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Votes(pub u8);

impl Votes {
    pub fn count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn contains(self, dir: Direction) -> bool {
        self.0 & dir.bit() != 0
    }

    /// Four-character mask such as `H-D-`.
    pub fn mask(self) -> String {
        Direction::ALL
            .iter()
            .map(|&d| if self.contains(d) { d.letter() } else { '-' })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    pub row: usize,
    pub col: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub votes: Votes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPointSet {
    pub plate_id: String,
    /// Sorted by `(row, col)`.
    pub points: Vec<ChannelPoint>,
    pub params: ChannelParams,
    pub warnings: Vec<String>,
}

/// Number of neighbours consulted on each side of a node.
pub fn neighbour_count(radius: f64, spacing: f64) -> usize {
    (radius / spacing + NODE_COUNT_EPS).floor() as usize
}

/// Positions on `slice` that are strictly lower than every node within
/// `radius` along it, by more than [`HEIGHT_TIE_TOLERANCE`].
///
/// An invalid node ends the neighbourhood on that side; only the nodes that
/// exist and are valid are consulted, and at least one must be.
pub fn local_minima_on_slice(slice: &Slice, radius: f64) -> Vec<usize> {
    let k = neighbour_count(radius, slice.spacing);
    let (z, valid) = (&slice.z, &slice.valid);
    let n = z.len();
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    for i in 0..n {
        if !valid[i] {
            continue;
        }
        let zi = z[i];
        let left_ok = i > 0 && valid[i - 1];
        let right_ok = i + 1 < n && valid[i + 1];
        let lower_than = |j: usize| zi < z[j] - HEIGHT_TIE_TOLERANCE;
        if !(left_ok || right_ok) || (left_ok && !lower_than(i - 1)) || (right_ok && !lower_than(i + 1)) {
            continue;
        }
        let right = !right_ok
            || (i + 2..=(i + k).min(n - 1))
                .take_while(|&j| valid[j])
                .all(lower_than);
        let left = !left_ok
            || (i.saturating_sub(k)..i - 1)
                .rev()
                .take_while(|&j| valid[j])
                .all(lower_than);
        if right && left {
            out.push(i);
        }
    }
    out
}

/// Per-node vote masks for every valid node of `grid`.
pub fn vote_masks(grid: &ElevationGrid, radius: f64) -> Vec<Votes> {
    let per_dir: Vec<Vec<usize>> = Direction::ALL
        .par_iter()
        .map(|&dir| {
            let lists: Vec<Vec<usize>> = (0..grid.slice_count(dir))
                .into_par_iter()
                .map(|k| {
                    let slice = grid.slice(dir, k);
                    local_minima_on_slice(&slice, radius)
                        .into_iter()
                        .map(|i| {
                            let (r, c) = slice.nodes[i];
                            grid.index(r, c)
                        })
                        .collect()
                })
                .collect();
            lists.concat()
        })
        .collect();
    let mut votes = vec![Votes::default(); grid.len()];
    for (dir, nodes) in Direction::ALL.iter().zip(per_dir) {
        for n in nodes {
            votes[n].0 |= dir.bit();
        }
    }
    votes
}

/// Unfiltered channel candidates: valid nodes with at least `min_votes`.
pub fn channel_points(
    plate_id: &str,
    grid: &ElevationGrid,
    params: &ChannelParams,
) -> Result<ChannelPointSet> {
    params.validate()?;
    let votes = vote_masks(grid, params.neighbourhood_radius);
    let mut points = Vec::new();
    for row in 0..grid.ny() {
        for col in 0..grid.nx() {
            let v = votes[grid.index(row, col)];
            if v.count() >= params.min_votes as u32 {
                points.push(ChannelPoint {
                    row,
                    col,
                    x: grid.x(col),
                    y: grid.y(row),
                    z: grid.z(row, col),
                    votes: v,
                });
            }
        }
    }
    Ok(ChannelPointSet {
        plate_id: plate_id.to_string(),
        points,
        params: *params,
        warnings: Vec::new(),
    })
}

/// 1D squared distance transform of a sampled function (lower envelope of
/// parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], zb: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0;
    v[0] = 0;
    zb[0] = f64::NEG_INFINITY;
    zb[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= zb[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        zb[k] = s;
        zb[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while zb[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Stand-in for infinity that keeps the parabola intersections finite.
const FAR: f64 = 1e20;

/// Euclidean distance (mm) from each node to the nearest invalid node.
pub fn distance_to_outline(grid: &ElevationGrid) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut d: Vec<f64> = grid
        .valid_mask()
        .iter()
        .map(|&v| if v { FAR } else { 0.0 })
        .collect();
    let n = nx.max(ny);
    let (mut f, mut out, mut v, mut zb) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0usize; n],
        vec![0.0; n + 1],
    );
    for c in 0..nx {
        for r in 0..ny {
            f[r] = d[r * nx + c];
        }
        edt_1d(&f[..ny], &mut out[..ny], &mut v, &mut zb);
        for r in 0..ny {
            d[r * nx + c] = out[r];
        }
    }
    for r in 0..ny {
        f[..nx].copy_from_slice(&d[r * nx..(r + 1) * nx]);
        edt_1d(&f[..nx], &mut out[..nx], &mut v, &mut zb);
        d[r * nx..(r + 1) * nx].copy_from_slice(&out[..nx]);
    }
    d.iter()
        .map(|&s| if s >= FAR { f64::INFINITY } else { s.sqrt() * grid.step() })
        .collect()
}

/// Drops candidates high on the arching, and optionally those far from
/// the outline.
///
/// Height is measured away from the symmetry plane, relative to the range
/// of the valid nodes.
pub fn filter_arching_outliers(raw: &ChannelPointSet, grid: &ElevationGrid) -> ChannelPointSet {
    let mut out = raw.clone();
    let params = raw.params.arching_filter;
    let Some((lo, hi)) = grid.outward_range() else {
        out.warnings.push("grid has no valid nodes; arching filter skipped".into());
        return out;
    };
    if hi <= lo {
        out.warnings
            .push("plate relief is flat; arching filter skipped".into());
        return out;
    }
    let sign = grid.outward_sign();
    let limit = params.max_relative_height * (hi - lo);
    let band = params.boundary_band.map(|b| (b, distance_to_outline(grid)));
    out.points.retain(|p| {
        if sign * p.z - lo > limit {
            return false;
        }
        match &band {
            Some((b, dist)) => dist[grid.index(p.row, p.col)] <= *b,
            None => true,
        }
    });
    out
}

impl ChannelPointSet {
    /// Columns: row, col, x_mm, y_mm, z_mm, votes.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "x_mm", "y_mm", "z_mm", "votes"])?;
        for p in &self.points {
            w.write_record([
                p.row.to_string(),
                p.col.to_string(),
                fmt_num(p.x, 4),
                fmt_num(p.y, 4),
                fmt_num(p.z, 6),
                p.votes.mask(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::PlateSide;
    use crate::elevation::grid_slices;

    fn slice(z: &[f64], spacing: f64) -> Slice {
        Slice {
            direction: Direction::Horizontal,
            nodes: (0..z.len()).map(|c| (0, c)).collect(),
            z: z.to_vec(),
            valid: vec![true; z.len()],
            spacing,
        }
    }

    fn grid_from(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64, step: f64) -> ElevationGrid {
        let mut z = Vec::with_capacity(nx * ny);
        for r in 0..ny {
            for c in 0..nx {
                z.push(f(c as f64 * step, r as f64 * step));
            }
        }
        ElevationGrid::from_parts((0, 0), step, nx, ny, z, vec![true; nx * ny], PlateSide::SoundBoard)
            .unwrap()
    }

    /// Exhaustive re-check: every valid node, every direction, full window.
    fn brute_votes(grid: &ElevationGrid, radius: f64) -> Vec<Votes> {
        let mut votes = vec![Votes::default(); grid.len()];
        let s = grid.outward_sign();
        for dir in Direction::ALL {
            let (dr, dc, spacing): (i64, i64, f64) = match dir {
                Direction::Horizontal => (0, 1, grid.step()),
                Direction::Vertical => (1, 0, grid.step()),
                Direction::DiagPlus => (1, 1, grid.step() * 2f64.sqrt()),
                Direction::DiagMinus => (1, -1, grid.step() * 2f64.sqrt()),
            };
            for r in 0..grid.ny() as i64 {
                for c in 0..grid.nx() as i64 {
                    if !grid.is_valid(r as usize, c as usize) {
                        continue;
                    }
                    let zi = s * grid.z(r as usize, c as usize);
                    let mut consulted = 0;
                    let mut ok = true;
                    for sign in [-1i64, 1] {
                        let mut t = 1i64;
                        while t as f64 * spacing <= radius + 1e-9 * spacing {
                            let (rr, cc) = (r + sign * t * dr, c + sign * t * dc);
                            if rr < 0 || cc < 0 || rr >= grid.ny() as i64 || cc >= grid.nx() as i64 {
                                break;
                            }
                            if !grid.is_valid(rr as usize, cc as usize) {
                                break;
                            }
                            consulted += 1;
                            if zi >= s * grid.z(rr as usize, cc as usize) {
                                ok = false;
                            }
                            t += 1;
                        }
                    }
                    if ok && consulted > 0 {
                        votes[grid.index(r as usize, c as usize)].0 |= dir.bit();
                    }
                }
            }
        }
        votes
    }

    #[test]
    fn hand_census() {
        assert_eq!(local_minima_on_slice(&slice(&[3.0, 1.0, 2.0, 0.5, 4.0], 1.0), 1.0), vec![1, 3]);
    }

    #[test]
    fn truncated_neighbourhood_at_slice_end() {
        let mut z = vec![2.0, 1.0, 1.5];
        z.extend((0..12).map(|i| 1.6 + 0.1 * i as f64));
        let minima = local_minima_on_slice(&slice(&z, 0.25), 2.0);
        assert_eq!(minima, vec![1]);
    }

    #[test]
    fn plateau_has_no_minimum() {
        assert!(local_minima_on_slice(&slice(&[1.0; 4], 1.0), 5.0).is_empty());
    }

    #[test]
    fn round_off_on_a_plateau_is_a_tie() {
        let s = slice(&[0.0, 0.0, -1e-21, 0.0, 0.3], 1.0);
        assert!(local_minima_on_slice(&s, 2.0).is_empty());
        let s = slice(&[0.0, 0.1, -1e-6, 0.1, 0.3], 1.0);
        assert_eq!(local_minima_on_slice(&s, 2.0), vec![2]);
    }

    #[test]
    fn invalid_nodes_break_the_slice() {
        let mut s = slice(&[5.0, 0.0, 3.0, 1.0, 4.0], 1.0);
        s.valid[2] = false;
        // node 3 no longer sees node 1 beyond the gap
        assert_eq!(local_minima_on_slice(&s, 3.0), vec![1, 3]);
        s.valid = vec![true, false, false, false, true];
        assert!(local_minima_on_slice(&s, 3.0).is_empty());
    }

    #[test]
    fn radius_to_node_counts() {
        assert_eq!(neighbour_count(1.0, 0.25), 4);
        assert_eq!(neighbour_count(1.0, 0.25 * 2f64.sqrt()), 2);
        assert_eq!(neighbour_count(2.0, 0.25), 8);
        assert_eq!(neighbour_count(0.3, 0.1), 3);
    }

    #[test]
    fn ramp_has_no_interior_channel() {
        let g = grid_from(30, 20, |x, _| x, 0.25);
        let set = channel_points("ramp", &g, &ChannelParams::for_size_class(SizeClass::ViolinViola)).unwrap();
        // only the low edge, where the truncated neighbourhood rule applies
        assert!(set.points.iter().all(|p| p.col == 0));
    }

    #[test]
    fn saddle_matches_brute_force() {
        let g = grid_from(41, 41, |x, y| (x - 5.0).powi(2) - (y - 5.0).powi(2), 0.25);
        let params = ChannelParams::for_size_class(SizeClass::ViolinViola);
        let set = channel_points("saddle", &g, &params).unwrap();
        let brute = brute_votes(&g, params.neighbourhood_radius);
        let expected: Vec<(usize, usize)> = (0..g.ny())
            .flat_map(|r| (0..g.nx()).map(move |c| (r, c)))
            .filter(|&(r, c)| brute[g.index(r, c)].count() >= 2)
            .collect();
        let got: Vec<(usize, usize)> = set.points.iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(got, expected);
        for p in &set.points {
            assert_eq!(p.votes, brute[g.index(p.row, p.col)]);
        }
    }

    #[test]
    fn grooved_bowl_channel_on_circle() {
        let (c, step) = (30.0, 0.25);
        let surface = |x: f64, y: f64| {
            let r = ((x - c).powi(2) + (y - c).powi(2)).sqrt();
            0.002 * r * r - 0.8 * (-(r - 20.0).powi(2) / (2.0 * 1.5 * 1.5)).exp()
        };
        let g = grid_from(241, 241, surface, step);
        let params = ChannelParams::for_size_class(SizeClass::ViolinViola);
        let raw = channel_points("bowl", &g, &params).unwrap();
        assert!(!raw.points.is_empty());
        // dense oracle for the groove bottom radius
        let bottom = (0..200_000)
            .map(|i| 15.0 + i as f64 * 1e-4)
            .min_by(|a, b| surface(c + a, c).total_cmp(&surface(c + b, c)))
            .unwrap();
        let rs: Vec<f64> = raw
            .points
            .iter()
            .map(|p| ((p.x - c).powi(2) + (p.y - c).powi(2)).sqrt())
            .collect();
        let on_circle = rs.iter().filter(|&&r| (r - bottom).abs() <= step).count();
        assert!(on_circle * 10 >= rs.len() * 9, "{on_circle}/{}", rs.len());
        // the circle is hit all the way round
        let mut sectors = [false; 36];
        for p in &raw.points {
            let a = (p.y - c).atan2(p.x - c).to_degrees().rem_euclid(360.0);
            sectors[(a / 10.0) as usize % 36] = true;
        }
        assert!(sectors.iter().all(|&s| s));
    }

    #[test]
    fn monotone_in_min_votes() {
        let g = grid_from(60, 50, |x, y| (x * 1.3).sin() + (y * 0.7).cos() + 0.01 * x * y, 0.25);
        let mut p = ChannelParams::for_size_class(SizeClass::ViolinViola);
        let two = channel_points("g", &g, &p).unwrap();
        p.min_votes = 3;
        let three = channel_points("g", &g, &p).unwrap();
        assert!(three.points.iter().all(|q| two.points.contains(q)));
        assert!(three.points.iter().all(|q| q.votes.count() >= 3));
    }

    #[test]
    fn arching_filter_thresholds() {
        let g = grid_from(40, 40, |x, y| x + y, 0.25);
        let mk = |row, col| ChannelPoint {
            row,
            col,
            x: g.x(col),
            y: g.y(row),
            z: g.z(row, col),
            votes: Votes(3),
        };
        let mut raw = ChannelPointSet {
            plate_id: "f".into(),
            points: vec![mk(1, 1), mk(35, 35)],
            params: ChannelParams::for_size_class(SizeClass::ViolinViola),
            warnings: vec![],
        };
        let kept = filter_arching_outliers(&raw, &g);
        assert_eq!(kept.points, vec![mk(1, 1)]);
        raw.params.arching_filter.max_relative_height = 1.0;
        assert_eq!(filter_arching_outliers(&raw, &g).points, raw.points);
        raw.params.arching_filter.max_relative_height = 0.3;
        raw.points = vec![mk(35, 35)];
        assert!(filter_arching_outliers(&raw, &g).points.is_empty());
    }

    #[test]
    fn flat_relief_warns_and_keeps() {
        let g = grid_from(5, 5, |_, _| 1.0, 1.0);
        let raw = ChannelPointSet {
            plate_id: "flat".into(),
            points: vec![],
            params: ChannelParams::for_size_class(SizeClass::Cello),
            warnings: vec![],
        };
        let out = filter_arching_outliers(&raw, &g);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn outline_distance_matches_brute_force() {
        let (nx, ny) = (23, 17);
        let mut valid = vec![true; nx * ny];
        for (i, v) in valid.iter_mut().enumerate() {
            let (r, c) = (i / nx, i % nx);
            if r == 0 || c == 0 || r == ny - 1 || c == nx - 1 || (r * 7 + c * 3) % 19 == 0 {
                *v = false;
            }
        }
        let g = ElevationGrid::from_parts((0, 0), 0.5, nx, ny, vec![0.0; nx * ny], valid.clone(), PlateSide::SoundBoard)
            .unwrap();
        let d = distance_to_outline(&g);
        for i in 0..nx * ny {
            let (r, c) = ((i / nx) as f64, (i % nx) as f64);
            let best = (0..nx * ny)
                .filter(|&j| !valid[j])
                .map(|j| (((j / nx) as f64 - r).powi(2) + ((j % nx) as f64 - c).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!((d[i] - best * 0.5).abs() < 1e-12, "node {i}");
        }
    }

    #[test]
    fn vote_mask_string() {
        assert_eq!(Votes(1 | 4).mask(), "H-D-");
        assert_eq!(Votes(15).mask(), "HVDA");
        let g = grid_from(3, 3, |x, y| x + y, 1.0);
        assert_eq!(grid_slices(&g, Direction::DiagMinus).len(), 5);
    }
}
