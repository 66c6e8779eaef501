use std::io::{self, Read, Write};

use super::ElevationGrid;
use crate::alignment::PlateSide;
use crate::error::{Error, FileLocation, Result};

const MAGIC: &[u8; 8] = b"PGRASTER";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 * 3 + 4 * 2 + 1;

/// Little-endian raster: magic, version, origin x/y, step (f64), nx, ny
/// (u32), side (u8: 0 sound board, 1 back), then row-major f32 elevations
/// with NaN on invalid nodes.
pub fn write_raster<W: Write>(grid: &ElevationGrid, mut out: W) -> io::Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let o = grid.origin();
    for v in [o.x, o.y, grid.step()] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(grid.nx() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.ny() as u32).to_le_bytes());
    buf.push(match grid.side() {
        PlateSide::SoundBoard => 0,
        PlateSide::Back => 1,
    });
    for (&z, &v) in grid.z_values().iter().zip(grid.valid_mask()) {
        let f = if v { z as f32 } else { f32::NAN };
        buf.extend_from_slice(&f.to_le_bytes());
    }
    out.write_all(&buf)
}

fn bad(offset: usize, message: &str) -> Error {
    Error::Format {
        location: FileLocation::Offset(offset as u64),
        message: message.to_string(),
    }
}

/// Inverse of [`write_raster`]; elevations come back rounded to f32.
pub fn read_raster<R: Read>(mut input: R) -> Result<ElevationGrid> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<raster>", e))?;
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad(0, "not an elevation raster"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    if u32_at(8) != VERSION {
        return Err(bad(8, "unsupported raster version"));
    }
    let (ox, oy, step) = (f64_at(12), f64_at(20), f64_at(28));
    let (nx, ny) = (u32_at(36) as usize, u32_at(40) as usize);
    let side = match bytes[44] {
        0 => PlateSide::SoundBoard,
        1 => PlateSide::Back,
        _ => return Err(bad(44, "invalid plate side")),
    };
    if bytes.len() != HEADER_LEN + 4 * nx * ny {
        return Err(bad(HEADER_LEN, "payload size does not match dimensions"));
    }
    let (z, valid): (Vec<f64>, Vec<bool>) = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| {
            let f = f32::from_le_bytes(c.try_into().unwrap());
            if f.is_nan() {
                (0.0, false)
            } else {
                (f as f64, true)
            }
        })
        .unzip();
    let origin_index = ((ox / step).round() as i64, (oy / step).round() as i64);
    ElevationGrid::from_parts(origin_index, step, nx, ny, z, valid, side)
}

/// Plain PGM (P2) preview: height rescaled to 1..=255, invalid nodes 0,
/// highest row (largest y) first.
pub fn write_pgm<W: Write>(grid: &ElevationGrid, mut out: W) -> io::Result<()> {
    let (lo, hi) = grid.outward_range().unwrap_or((0.0, 0.0));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let s = grid.outward_sign();
    writeln!(out, "P2")?;
    writeln!(out, "{} {}", grid.nx(), grid.ny())?;
    writeln!(out, "255")?;
    for row in (0..grid.ny()).rev() {
        let line: Vec<String> = (0..grid.nx())
            .map(|col| match grid.get(row, col) {
                Some(z) => (1.0 + 254.0 * (s * z - lo) / span).round().to_string(),
                None => "0".to_string(),
            })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ElevationGrid {
        ElevationGrid::from_parts(
            (-3, 2),
            0.25,
            3,
            2,
            vec![1.0, 2.5, 0.0, -4.0, 8.0, 3.0],
            vec![true, true, false, true, true, true],
            PlateSide::Back,
        )
        .unwrap()
    }

    #[test]
    fn raster_round_trip() {
        let g = sample();
        let mut buf = Vec::new();
        write_raster(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 24);
        let back = read_raster(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn truncated_raster_rejected() {
        let mut buf = Vec::new();
        write_raster(&sample(), &mut buf).unwrap();
        buf.pop();
        assert_eq!(read_raster(buf.as_slice()).unwrap_err().code(), "format");
    }

    #[test]
    fn pgm_layout() {
        let mut buf = Vec::new();
        write_pgm(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(&lines[..3], &["P2", "3 2", "255"]);
        assert_eq!(lines[4].split(' ').nth(2), Some("0"));
    }
}
