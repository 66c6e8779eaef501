use std::f64::consts::SQRT_2;

use super::ElevationGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Horizontal,
    Vertical,
    /// Constant `row − col`.
    DiagPlus,
    /// Constant `row + col`.
    DiagMinus,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Horizontal,
        Direction::Vertical,
        Direction::DiagPlus,
        Direction::DiagMinus,
    ];

    /// Bit used in vote masks; also the position in the `HVDA` string.
    pub fn bit(self) -> u8 {
        match self {
            Direction::Horizontal => 1,
            Direction::Vertical => 2,
            Direction::DiagPlus => 4,
            Direction::DiagMinus => 8,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Direction::Horizontal => 'H',
            Direction::Vertical => 'V',
            Direction::DiagPlus => 'D',
            Direction::DiagMinus => 'A',
        }
    }
}

/// One line of grid nodes.
///
/// `z` holds the height away from the symmetry plane (raw z for a sound
/// board, −z for a back), so minima are grooves on either plate.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub direction: Direction,
    /// `(row, col)` in order of increasing row, then column.
    pub nodes: Vec<(usize, usize)>,
    pub z: Vec<f64>,
    pub valid: Vec<bool>,
    /// Physical distance between consecutive nodes (mm).
    pub spacing: f64,
}

impl ElevationGrid {
    pub fn slice_count(&self, dir: Direction) -> usize {
        match dir {
            Direction::Horizontal => self.ny,
            Direction::Vertical => self.nx,
            Direction::DiagPlus | Direction::DiagMinus => self.nx + self.ny - 1,
        }
    }

    pub fn slice_spacing(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Horizontal | Direction::Vertical => self.step,
            Direction::DiagPlus | Direction::DiagMinus => self.step * SQRT_2,
        }
    }

    /// Node coordinates of slice `k`.
    pub fn slice_nodes(&self, dir: Direction, k: usize) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        match dir {
            Direction::Horizontal => (0..nx).map(|c| (k, c)).collect(),
            Direction::Vertical => (0..ny).map(|r| (r, k)).collect(),
            Direction::DiagPlus => {
                // d = row − col runs from −(nx−1) to ny−1
                let d = k as i64 - (nx as i64 - 1);
                let r0 = d.max(0) as usize;
                let r1 = (ny as i64 - 1).min(nx as i64 - 1 + d) as usize;
                (r0..=r1).map(|r| (r, (r as i64 - d) as usize)).collect()
            }
            Direction::DiagMinus => {
                let r0 = k.saturating_sub(nx - 1);
                let r1 = (ny - 1).min(k);
                (r0..=r1).map(|r| (r, k - r)).collect()
            }
        }
    }

    pub fn slice(&self, dir: Direction, k: usize) -> Slice {
        let nodes = self.slice_nodes(dir, k);
        let s = self.outward_sign();
        let z = nodes.iter().map(|&(r, c)| s * self.z(r, c)).collect();
        let valid = nodes.iter().map(|&(r, c)| self.is_valid(r, c)).collect();
        Slice {
            direction: dir,
            nodes,
            z,
            valid,
            spacing: self.slice_spacing(dir),
        }
    }
}

pub fn grid_slices(grid: &ElevationGrid, dir: Direction) -> Vec<Slice> {
    (0..grid.slice_count(dir)).map(|k| grid.slice(dir, k)).collect()
}
