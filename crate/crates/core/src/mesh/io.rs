//! PLY (ascii and binary little-endian) and Wavefront OBJ readers.
//!
//! Only geometry is read: `vertex` x/y/z and `face` vertex index lists for
//! PLY, `v`/`f` records for OBJ. Polygons are fan-triangulated. Everything
//! else (normals, colours, texture coordinates) is skipped.

use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::Point3;

use super::TriangleMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFormat {
    PlyAscii,
    PlyBinaryLe,
    Obj,
}

impl MeshFormat {
    /// Picks the format from the extension, peeking at the header for PLY files.
    pub fn detect(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                let header = parse_ply_header(&bytes)?;
                Ok(header.format)
            }
            _ => Err(Error::format_at_line(
                0,
                format!("unrecognised mesh extension for {}", path.display()),
            )),
        }
    }
}

/// A mesh read from disk along with the number of degenerate faces dropped.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: TriangleMesh,
    pub dropped_faces: usize,
}

pub fn load_mesh(path: &Path, format: MeshFormat, unit_scale: f64) -> Result<LoadedMesh> {
    if !(unit_scale.is_finite() && unit_scale > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "unit_scale must be positive, got {unit_scale}"
        )));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    let (mut vertices, faces) = match format {
        MeshFormat::Obj => parse_obj(&bytes)?,
        MeshFormat::PlyAscii | MeshFormat::PlyBinaryLe => parse_ply(&bytes, format)?,
    };
    if unit_scale != 1.0 {
        for v in &mut vertices {
            v.coords *= unit_scale;
        }
    }
    let (mesh, dropped_faces) = TriangleMesh::from_parts(name, vertices, faces)?;
    if dropped_faces > 0 {
        warn!(
            "{}: dropped {dropped_faces} degenerate face(s)",
            path.display()
        );
    }
    Ok(LoadedMesh {
        mesh,
        dropped_faces,
    })
}

/// Parses an in-memory mesh file.
pub fn parse_mesh(
    bytes: &[u8],
    format: MeshFormat,
    name: &str,
) -> Result<LoadedMesh> {
    let (vertices, faces) = match format {
        MeshFormat::Obj => parse_obj(bytes)?,
        _ => parse_ply(bytes, format)?,
    };
    let (mesh, dropped_faces) = TriangleMesh::from_parts(name, vertices, faces)?;
    Ok(LoadedMesh {
        mesh,
        dropped_faces,
    })
}

type RawMesh = (Vec<Point3<f64>>, Vec<[usize; 3]>);

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        faces.push([poly[0], poly[k], poly[k + 1]]);
    }
}

fn parse_obj(bytes: &[u8]) -> Result<RawMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::format_at_offset(e.valid_up_to() as u64, "OBJ is not valid UTF-8"))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut poly = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let t = tok
                        .next()
                        .ok_or_else(|| Error::format_at_line(lineno, "vertex needs 3 coordinates"))?;
                    *slot = t.parse().map_err(|_| {
                        Error::format_at_line(lineno, format!("bad coordinate {t:?}"))
                    })?;
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                poly.clear();
                for t in tok {
                    let idx = t.split('/').next().unwrap_or("");
                    let i: i64 = idx.parse().map_err(|_| {
                        Error::format_at_line(lineno, format!("bad face index {t:?}"))
                    })?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(Error::format_at_line(lineno, "face index 0 is invalid"));
                    };
                    if resolved < 0 {
                        return Err(Error::InvalidVertex(format!(
                            "line {lineno}: face index {i} resolves before the first vertex"
                        )));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(Error::format_at_line(lineno, "face needs at least 3 vertices"));
                }
                fan(&poly, &mut faces);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct PlyHeader {
    format: MeshFormat,
    elements: Vec<Element>,
    body_offset: usize,
    header_lines: usize,
}

fn parse_ply_header(bytes: &[u8]) -> Result<PlyHeader> {
    let mut pos = 0usize;
    let mut lineno = 0usize;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format_at_line(lineno + 1, "PLY header is not terminated"))?;
        let raw = &bytes[pos..pos + end];
        pos += end + 1;
        lineno += 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| Error::format_at_line(lineno, "PLY header is not ASCII"))?
            .trim_end_matches('\r')
            .trim();
        if lineno == 1 {
            if line != "ply" {
                return Err(Error::format_at_line(1, "missing 'ply' magic"));
            }
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                format = Some(match tok.next() {
                    Some("ascii") => MeshFormat::PlyAscii,
                    Some("binary_little_endian") => MeshFormat::PlyBinaryLe,
                    Some("binary_big_endian") => {
                        return Err(Error::format_at_line(
                            lineno,
                            "big-endian binary PLY is not supported",
                        ))
                    }
                    other => {
                        return Err(Error::format_at_line(
                            lineno,
                            format!("unknown PLY format {other:?}"),
                        ))
                    }
                });
            }
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::format_at_line(lineno, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::format_at_line(lineno, "element without count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::format_at_line(lineno, "property before element"))?;
                let parts: Vec<&str> = tok.collect();
                let prop = match parts.as_slice() {
                    ["list", c, i, name] => Property::List {
                        name: name.to_string(),
                        count: Scalar::parse(c).ok_or_else(|| {
                            Error::format_at_line(lineno, format!("unknown type {c}"))
                        })?,
                        item: Scalar::parse(i).ok_or_else(|| {
                            Error::format_at_line(lineno, format!("unknown type {i}"))
                        })?,
                    },
                    [ty, name] => Property::Scalar {
                        name: name.to_string(),
                        ty: Scalar::parse(ty).ok_or_else(|| {
                            Error::format_at_line(lineno, format!("unknown type {ty}"))
                        })?,
                    },
                    _ => return Err(Error::format_at_line(lineno, "malformed property")),
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::format_at_line(
                    lineno,
                    format!("unexpected header keyword {other:?}"),
                ))
            }
        }
    }
    let format = format.ok_or_else(|| Error::format_at_line(lineno, "PLY header has no format"))?;
    Ok(PlyHeader {
        format,
        elements,
        body_offset: pos,
        header_lines: lineno,
    })
}

/// Reads values one at a time from either an ascii or a binary body.
trait ValueSource {
    fn next(&mut self, ty: Scalar) -> Result<f64>;
}

struct AsciiSource<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: std::str::SplitWhitespace<'a>,
    lineno: usize,
    first_line: usize,
}

impl<'a> AsciiSource<'a> {
    fn new(text: &'a str, first_line: usize) -> Self {
        AsciiSource {
            lines: text.lines().enumerate(),
            current: "".split_whitespace(),
            lineno: first_line,
            first_line,
        }
    }
}

impl ValueSource for AsciiSource<'_> {
    fn next(&mut self, _ty: Scalar) -> Result<f64> {
        loop {
            if let Some(t) = self.current.next() {
                return t.parse().map_err(|_| {
                    Error::format_at_line(self.lineno, format!("bad number {t:?}"))
                });
            }
            match self.lines.next() {
                Some((i, line)) => {
                    self.lineno = self.first_line + i + 1;
                    self.current = line.split_whitespace();
                }
                None => {
                    return Err(Error::format_at_line(
                        self.lineno,
                        "unexpected end of PLY body",
                    ))
                }
            }
        }
    }
}

struct BinarySource<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ValueSource for BinarySource<'_> {
    fn next(&mut self, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        if self.pos + n > self.bytes.len() {
            return Err(Error::format_at_offset(
                self.pos as u64,
                "unexpected end of binary PLY body",
            ));
        }
        let v = ty.read_le(&self.bytes[self.pos..self.pos + n]);
        self.pos += n;
        Ok(v)
    }
}

fn parse_ply(bytes: &[u8], expected: MeshFormat) -> Result<RawMesh> {
    let header = parse_ply_header(bytes)?;
    if header.format != expected {
        return Err(Error::format_at_line(
            2,
            format!(
                "PLY header declares {:?} but {:?} was requested",
                header.format, expected
            ),
        ));
    }
    let body = &bytes[header.body_offset..];
    match header.format {
        MeshFormat::PlyAscii => {
            let text = std::str::from_utf8(body).map_err(|e| {
                Error::format_at_offset(
                    (header.body_offset + e.valid_up_to()) as u64,
                    "ascii PLY body is not valid UTF-8",
                )
            })?;
            read_elements(&header, &mut AsciiSource::new(text, header.header_lines))
        }
        _ => read_elements(
            &header,
            &mut BinarySource {
                bytes,
                pos: header.body_offset,
            },
        ),
    }
}

fn read_elements(header: &PlyHeader, src: &mut dyn ValueSource) -> Result<RawMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut poly = Vec::new();
    for el in &header.elements {
        match el.name.as_str() {
            "vertex" => {
                let slot = |axis: &str| el.properties.iter().position(|p| p.name() == axis);
                let (ix, iy, iz) = match (slot("x"), slot("y"), slot("z")) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => {
                        return Err(Error::format_at_line(
                            0,
                            "vertex element lacks x/y/z properties",
                        ))
                    }
                };
                vertices.reserve(el.count);
                let mut vals = vec![0.0; el.properties.len()];
                for _ in 0..el.count {
                    for (k, p) in el.properties.iter().enumerate() {
                        vals[k] = read_property(src, p)?;
                    }
                    vertices.push(Point3::new(vals[ix], vals[iy], vals[iz]));
                }
            }
            "face" => {
                let list_slot = el
                    .properties
                    .iter()
                    .position(|p| {
                        matches!(p, Property::List { name, .. }
                            if name == "vertex_indices" || name == "vertex_index")
                    })
                    .ok_or_else(|| {
                        Error::format_at_line(0, "face element lacks vertex_indices list")
                    })?;
                faces.reserve(el.count);
                for _ in 0..el.count {
                    for (k, p) in el.properties.iter().enumerate() {
                        match p {
                            Property::List { count, item, .. } => {
                                let n = src.next(*count)?;
                                if !(0.0..=1e6).contains(&n) {
                                    return Err(Error::format_at_line(
                                        0,
                                        format!("implausible list length {n}"),
                                    ));
                                }
                                if k == list_slot {
                                    poly.clear();
                                    for _ in 0..n as usize {
                                        let idx = src.next(*item)?;
                                        if idx < 0.0 || idx.fract() != 0.0 {
                                            return Err(Error::InvalidVertex(format!(
                                                "face index {idx} is not a valid vertex index"
                                            )));
                                        }
                                        poly.push(idx as usize);
                                    }
                                    if poly.len() < 3 {
                                        return Err(Error::format_at_line(
                                            0,
                                            "face with fewer than 3 vertices",
                                        ));
                                    }
                                    fan(&poly, &mut faces);
                                } else {
                                    for _ in 0..n as usize {
                                        src.next(*item)?;
                                    }
                                }
                            }
                            Property::Scalar { ty, .. } => {
                                src.next(*ty)?;
                            }
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    for p in &el.properties {
                        read_property(src, p)?;
                    }
                }
            }
        }
    }
    Ok((vertices, faces))
}

fn read_property(src: &mut dyn ValueSource, p: &Property) -> Result<f64> {
    match p {
        Property::Scalar { ty, .. } => src.next(*ty),
        Property::List { count, item, .. } => {
            let n = src.next(*count)?;
            for _ in 0..n.max(0.0) as usize {
                src.next(*item)?;
            }
            Ok(n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI_OBJ: &str = "# unit right triangle\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1\n";

    #[test]
    fn obj_unit_triangle() {
        let m = parse_mesh(TRI_OBJ.as_bytes(), MeshFormat::Obj, "t").unwrap().mesh;
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn unit_scale_multiplies_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.obj");
        fs::write(&path, TRI_OBJ).unwrap();
        let one = load_mesh(&path, MeshFormat::Obj, 1.0).unwrap().mesh;
        let inch = load_mesh(&path, MeshFormat::Obj, 25.4).unwrap().mesh;
        for (a, b) in one.vertices().iter().zip(inch.vertices()) {
            assert_eq!(a.coords * 25.4, b.coords);
        }
        assert!(load_mesh(&path, MeshFormat::Obj, 0.0).is_err());
    }

    #[test]
    fn ply_out_of_range_index_is_invalid_vertex() {
        let ply = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 999\n";
        let err = parse_mesh(ply.as_bytes(), MeshFormat::PlyAscii, "p").unwrap_err();
        assert_eq!(err.code(), "invalid-vertex");
    }

    #[test]
    fn ply_ascii_with_extra_properties_and_quads() {
        let ply = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 4\nproperty double x\nproperty double y\nproperty double z\nproperty uchar red\nelement face 1\nproperty uchar flags\nproperty list uchar uint vertex_indices\nend_header\n0 0 0 1\n1 0 0 2\n1 1 0 3\n0 1 0 4\n7 4 0 1 2 3\n";
        let m = parse_mesh(ply.as_bytes(), MeshFormat::PlyAscii, "q").unwrap().mesh;
        assert_eq!(m.face_count(), 2);
        assert_eq!(m.vertices()[2], Point3::new(1.0, 1.0, 0.0));
    }

    #[test]
    fn ply_binary_le() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for v in [[0.0f32, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 1.5]] {
            for c in v {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        bytes.push(3);
        for i in [0i32, 1, 2] {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        let m = parse_mesh(&bytes, MeshFormat::PlyBinaryLe, "b").unwrap().mesh;
        assert_eq!(m.vertices()[2], Point3::new(0.0, 2.0, 1.5));
        assert_eq!(m.faces(), &[[0, 1, 2]]);

        let truncated = &bytes[..bytes.len() - 2];
        let err = parse_mesh(truncated, MeshFormat::PlyBinaryLe, "b").unwrap_err();
        assert!(matches!(
            err,
            Error::Format {
                location: crate::error::FileLocation::Offset(_),
                ..
            }
        ));
    }

    #[test]
    fn big_endian_is_rejected() {
        let ply = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        let err = parse_mesh(ply.as_bytes(), MeshFormat::PlyBinaryLe, "p").unwrap_err();
        assert_eq!(err.code(), "format");
    }

    #[test]
    fn obj_parse_error_reports_line() {
        let err = parse_mesh(b"v 0 0 0\nv 1 zz 0\n", MeshFormat::Obj, "x").unwrap_err();
        match err {
            Error::Format { location, .. } => {
                assert_eq!(location, crate::error::FileLocation::Line(2))
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn empty_obj_is_empty_mesh() {
        let err = parse_mesh(b"# nothing\n", MeshFormat::Obj, "x").unwrap_err();
        assert_eq!(err.code(), "empty-mesh");
    }
}
