// Shared by several test targets; each uses a different subset.
#![allow(dead_code)]

use nalgebra::{Point3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plategeo::alignment::PlateSide;
use plategeo::elevation::ElevationGrid;
use plategeo::mesh::RigidTransform;

/// Row-major vote bitmasks (H=1, V=2, diag_plus=4, diag_minus=8) found by
/// walking every valid node in every direction. Strict comparisons, no
/// slice bookkeeping.
pub fn brute_votes(grid: &ElevationGrid, radius: f64) -> Vec<u8> {
    let (nx, ny) = (grid.nx() as i64, grid.ny() as i64);
    let step = grid.step();
    let sign = match grid.side() {
        PlateSide::SoundBoard => 1.0,
        PlateSide::Back => -1.0,
    };
    let dirs = [
        (0i64, 1i64, step, 1u8),
        (1, 0, step, 2),
        (1, 1, step * 2f64.sqrt(), 4),
        (1, -1, step * 2f64.sqrt(), 8),
    ];
    let at = |r: i64, c: i64| -> Option<f64> {
        (r >= 0 && c >= 0 && r < ny && c < nx)
            .then(|| grid.get(r as usize, c as usize))
            .flatten()
            .map(|z| sign * z)
    };
    let mut out = vec![0u8; (nx * ny) as usize];
    for r in 0..ny {
        for c in 0..nx {
            let Some(z0) = at(r, c) else { continue };
            for &(dr, dc, spacing, bit) in &dirs {
                let k = (radius / spacing + 1e-9).floor() as i64;
                let mut consulted = 0;
                let mut lowest = true;
                for s in [-1i64, 1] {
                    for t in 1..=k {
                        match at(r + s * t * dr, c + s * t * dc) {
                            Some(z) => {
                                consulted += 1;
                                lowest &= z0 < z;
                            }
                            None => break,
                        }
                    }
                }
                if consulted > 0 && lowest {
                    out[(r * nx + c) as usize] |= bit;
                }
            }
        }
    }
    out
}

/// Sum of random plane waves on an `n`×`n` grid, with a few invalid discs.
pub fn random_smooth_grid(n: usize, step: f64, seed: u64) -> ElevationGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            let wavelength = rng.random_range(3.0..25.0);
            let dir = rng.random_range(0.0..std::f64::consts::TAU);
            let k = std::f64::consts::TAU / wavelength;
            (rng.random_range(0.1..2.0), k * dir.cos(), k * dir.sin(), rng.random_range(0.0..6.3))
        })
        .collect();
    let extent = n as f64 * step;
    let holes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..extent),
                rng.random_range(0.0..extent),
                rng.random_range(0.05..0.2) * extent,
            )
        })
        .collect();
    let mut z = Vec::with_capacity(n * n);
    let mut valid = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (x, y) = (col as f64 * step, row as f64 * step);
            z.push(waves.iter().map(|&(a, kx, ky, ph)| a * (kx * x + ky * y + ph).sin()).sum());
            valid.push(holes.iter().all(|&(cx, cy, r)| (x - cx).hypot(y - cy) > r));
        }
    }
    ElevationGrid::from_parts((0, 0), step, n, n, z, valid, PlateSide::SoundBoard).unwrap()
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 1e-3 && v.norm() <= 1.0 {
            let angle = rng.random_range(0.0..std::f64::consts::PI);
            return Rotation3::from_axis_angle(&Unit::new_normalize(v), angle);
        }
    }
}

pub fn random_rigid(rng: &mut impl Rng) -> RigidTransform {
    let t = Vector3::new(
        rng.random_range(-200.0..200.0),
        rng.random_range(-200.0..200.0),
        rng.random_range(-200.0..200.0),
    );
    RigidTransform::new(random_rotation(rng), t)
}

/// Closest point of triangle `abc` to `p`.
pub fn closest_on_triangle(p: &Point3<f64>, [a, b, c]: [Point3<f64>; 3]) -> Point3<f64> {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(&ap), ac.dot(&ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(&bp), ac.dot(&bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(&cp), ac.dot(&cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
