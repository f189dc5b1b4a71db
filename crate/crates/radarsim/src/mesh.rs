//! Triangle meshes with per-vertex velocity, plus binary PLY import/export.

use std::io::{BufWriter, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};

use crate::error::{Error, Result};
use crate::vec3::{self, Aabb, Vec3};

pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Indexed triangle mesh. Velocities are per-vertex, in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub velocities: Vec<Vec3>,
}

impl TriMesh {
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        velocities: Vec<Vec3>,
    ) -> Result<Self> {
        if velocities.len() != vertices.len() {
            return Err(Error::invalid(format!(
                "velocity count {} != vertex count {}",
                velocities.len(),
                vertices.len()
            )));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !vec3::is_finite(*v) {
                return Err(Error::invalid(format!("vertex {i} is not finite")));
            }
        }
        for (i, v) in velocities.iter().enumerate() {
            if !vec3::is_finite(*v) {
                return Err(Error::invalid(format!("velocity {i} is not finite")));
            }
        }
        let mesh = TriMesh {
            vertices,
            triangles,
            velocities,
        };
        let n = mesh.vertices.len() as u32;
        for (i, t) in mesh.triangles.iter().enumerate() {
            if t.iter().any(|&ix| ix >= n) {
                return Err(Error::invalid(format!(
                    "triangle {i} references vertex out of bounds"
                )));
            }
            let area = mesh.triangle_area(i);
            if !(area >= MIN_TRIANGLE_AREA) {
                return Err(Error::invalid(format!(
                    "triangle {i} is degenerate (area {area:.3e} m^2)"
                )));
            }
        }
        Ok(mesh)
    }

    #[inline]
    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.corners(tri);
        0.5 * vec3::norm(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)))
    }

    /// Unit normal following the winding order (right-hand rule).
    pub fn triangle_normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.corners(tri);
        vec3::normalize(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }
}

// ---------------------------------------------------------------------
// PLY (binary little-endian)
// ---------------------------------------------------------------------

const MAX_PLY_COUNT: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarType {
    F32,
    F64,
    I32,
    U32,
    I16,
    U16,
    I8,
    U8,
}

impl ScalarType {
    fn parse(word: &str) -> Option<ScalarType> {
        Some(match word {
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::F64 => 8,
            ScalarType::F32 | ScalarType::I32 | ScalarType::U32 => 4,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I8 | ScalarType::U8 => 1,
        }
    }

    fn read_f64(self, buf: &[u8]) -> f64 {
        match self {
            ScalarType::F32 => LittleEndian::read_f32(buf) as f64,
            ScalarType::F64 => LittleEndian::read_f64(buf),
            ScalarType::I32 => LittleEndian::read_i32(buf) as f64,
            ScalarType::U32 => LittleEndian::read_u32(buf) as f64,
            ScalarType::I16 => LittleEndian::read_i16(buf) as f64,
            ScalarType::U16 => LittleEndian::read_u16(buf) as f64,
            ScalarType::I8 => buf[0] as i8 as f64,
            ScalarType::U8 => buf[0] as f64,
        }
    }

    fn read_index(self, buf: &[u8]) -> i64 {
        match self {
            ScalarType::I32 => LittleEndian::read_i32(buf) as i64,
            ScalarType::U32 => LittleEndian::read_u32(buf) as i64,
            ScalarType::I16 => LittleEndian::read_i16(buf) as i64,
            ScalarType::U16 => LittleEndian::read_u16(buf) as i64,
            ScalarType::I8 => buf[0] as i8 as i64,
            ScalarType::U8 => buf[0] as i64,
            _ => -1,
        }
    }
}

#[derive(Debug)]
enum PlyProperty {
    Scalar { name: String, ty: ScalarType },
    List { count_ty: ScalarType, item_ty: ScalarType },
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: u64,
    properties: Vec<PlyProperty>,
}

/// Geometry read back from a PLY file: positions and (possibly empty) faces.
#[derive(Debug)]
pub struct PlyGeometry {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

/// Parse a binary little-endian PLY document. Only `vertex` elements with
/// x/y/z properties and triangular `face` lists are interpreted; other
/// scalar vertex properties are skipped by stride. Safe on untrusted input:
/// all counts are validated against the actual byte length before any
/// allocation.
pub fn parse_ply(data: &[u8], origin: &Path) -> Result<PlyGeometry> {
    let perr = |line: usize, msg: &str| Error::parse(origin, line, msg);

    // Header is ASCII lines terminated by "end_header".
    let header_end = find_subslice(data, b"end_header")
        .ok_or_else(|| perr(0, "missing end_header"))?;
    let header_bytes = &data[..header_end];
    if header_bytes.len() > 65536 {
        return Err(perr(0, "header too large"));
    }
    let header = std::str::from_utf8(header_bytes)
        .map_err(|_| perr(0, "header is not valid UTF-8"))?;

    // Skip past "end_header" and the newline that follows it.
    let mut body_start = header_end + b"end_header".len();
    while body_start < data.len() && (data[body_start] == b'\r' || data[body_start] == b'\n') {
        body_start += 1;
        if data[body_start - 1] == b'\n' {
            break;
        }
    }
    let mut body = &data[body_start..];

    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(perr(1, "not a PLY file")),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut format_seen = false;
    for (idx, raw) in lines {
        let line = raw.trim();
        let lineno = idx + 1;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => {
                if words.next() != Some("binary_little_endian") {
                    return Err(perr(lineno, "only binary_little_endian is supported"));
                }
                format_seen = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| perr(lineno, "element needs a name"))?;
                let count: u64 = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| perr(lineno, "element needs a count"))?;
                if count > MAX_PLY_COUNT {
                    return Err(perr(lineno, "element count exceeds limit"));
                }
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let elem = elements
                    .last_mut()
                    .ok_or_else(|| perr(lineno, "property before any element"))?;
                let first = words
                    .next()
                    .ok_or_else(|| perr(lineno, "property needs a type"))?;
                if first == "list" {
                    let count_ty = words
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| perr(lineno, "bad list count type"))?;
                    let item_ty = words
                        .next()
                        .and_then(ScalarType::parse)
                        .ok_or_else(|| perr(lineno, "bad list item type"))?;
                    if matches!(count_ty, ScalarType::F32 | ScalarType::F64)
                        || matches!(item_ty, ScalarType::F32 | ScalarType::F64)
                    {
                        return Err(perr(lineno, "float list types are not supported"));
                    }
                    elem.properties.push(PlyProperty::List { count_ty, item_ty });
                } else {
                    let ty = ScalarType::parse(first)
                        .ok_or_else(|| perr(lineno, "unknown property type"))?;
                    let name = words
                        .next()
                        .ok_or_else(|| perr(lineno, "property needs a name"))?;
                    elem.properties.push(PlyProperty::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            Some(other) => {
                return Err(perr(lineno, &format!("unknown header keyword {other:?}")))
            }
        }
    }
    if !format_seen {
        return Err(perr(0, "missing format line"));
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for elem in &elements {
        let has_list = elem
            .properties
            .iter()
            .any(|p| matches!(p, PlyProperty::List { .. }));
        if !has_list {
            // Fixed-stride element.
            let stride: usize = elem
                .properties
                .iter()
                .map(|p| match p {
                    PlyProperty::Scalar { ty, .. } => ty.size(),
                    PlyProperty::List { .. } => unreachable!(),
                })
                .sum();
            let need = (elem.count as usize)
                .checked_mul(stride)
                .ok_or_else(|| perr(0, "element size overflow"))?;
            if body.len() < need {
                return Err(perr(0, "file truncated inside element data"));
            }
            if elem.name == "vertex" {
                let mut offsets = [usize::MAX; 3];
                let mut off = 0usize;
                for p in &elem.properties {
                    if let PlyProperty::Scalar { name, ty } = p {
                        match name.as_str() {
                            "x" => offsets[0] = off,
                            "y" => offsets[1] = off,
                            "z" => offsets[2] = off,
                            _ => {}
                        }
                        off += ty.size();
                    }
                }
                if offsets.contains(&usize::MAX) {
                    return Err(perr(0, "vertex element lacks x/y/z properties"));
                }
                let types: Vec<ScalarType> = elem
                    .properties
                    .iter()
                    .map(|p| match p {
                        PlyProperty::Scalar { ty, .. } => *ty,
                        PlyProperty::List { .. } => unreachable!(),
                    })
                    .collect();
                let type_at = |offset: usize| -> ScalarType {
                    let mut off = 0usize;
                    for ty in &types {
                        if off == offset {
                            return *ty;
                        }
                        off += ty.size();
                    }
                    ScalarType::F32
                };
                vertices.reserve(elem.count as usize);
                for i in 0..elem.count as usize {
                    let rec = &body[i * stride..(i + 1) * stride];
                    let mut v = [0.0f64; 3];
                    for k in 0..3 {
                        let ty = type_at(offsets[k]);
                        v[k] = ty.read_f64(&rec[offsets[k]..offsets[k] + ty.size()]);
                    }
                    vertices.push(v);
                }
            }
            body = &body[need..];
        } else {
            // Variable-stride element (lists); walk record by record.
            for _ in 0..elem.count {
                let mut indices: Vec<i64> = Vec::new();
                for p in &elem.properties {
                    match p {
                        PlyProperty::Scalar { ty, .. } => {
                            if body.len() < ty.size() {
                                return Err(perr(0, "file truncated inside list element"));
                            }
                            body = &body[ty.size()..];
                        }
                        PlyProperty::List { count_ty, item_ty } => {
                            if body.len() < count_ty.size() {
                                return Err(perr(0, "file truncated at list count"));
                            }
                            let n = count_ty.read_index(body);
                            body = &body[count_ty.size()..];
                            if n < 0 || n as u64 > MAX_PLY_COUNT {
                                return Err(perr(0, "bad list length"));
                            }
                            let bytes = (n as usize)
                                .checked_mul(item_ty.size())
                                .ok_or_else(|| perr(0, "list size overflow"))?;
                            if body.len() < bytes {
                                return Err(perr(0, "file truncated inside list items"));
                            }
                            if elem.name == "face" {
                                for k in 0..n as usize {
                                    indices.push(
                                        item_ty.read_index(&body[k * item_ty.size()..]),
                                    );
                                }
                            }
                            body = &body[bytes..];
                        }
                    }
                }
                if elem.name == "face" {
                    if indices.len() != 3 {
                        return Err(perr(0, "only triangular faces are supported"));
                    }
                    let mut tri = [0u32; 3];
                    for (k, &ix) in indices.iter().enumerate() {
                        if ix < 0 || ix as u64 >= vertices.len() as u64 {
                            return Err(perr(0, "face index out of bounds"));
                        }
                        tri[k] = ix as u32;
                    }
                    triangles.push(tri);
                }
            }
        }
    }

    Ok(PlyGeometry {
        vertices,
        triangles,
    })
}

pub fn read_ply(path: &Path) -> Result<PlyGeometry> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&data, path)
}

/// Write a mesh as binary little-endian PLY (float32 x/y/z, uchar-counted
/// int32 face lists).
pub fn write_ply_mesh(path: &Path, vertices: &[Vec3], triangles: &[[u32; 3]]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let hdr = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        vertices.len(),
        triangles.len()
    );
    let io = |e| Error::io(path, e);
    w.write_all(hdr.as_bytes()).map_err(io)?;
    let mut buf = [0u8; 12];
    for v in vertices {
        LittleEndian::write_f32(&mut buf[0..4], v[0] as f32);
        LittleEndian::write_f32(&mut buf[4..8], v[1] as f32);
        LittleEndian::write_f32(&mut buf[8..12], v[2] as f32);
        w.write_all(&buf).map_err(io)?;
    }
    let mut fbuf = [0u8; 13];
    for t in triangles {
        fbuf[0] = 3;
        LittleEndian::write_i32(&mut fbuf[1..5], t[0] as i32);
        LittleEndian::write_i32(&mut fbuf[5..9], t[1] as i32);
        LittleEndian::write_i32(&mut fbuf[9..13], t[2] as i32);
        w.write_all(&fbuf).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack
        .windows(needle.len())
        .position(|w| w == needle)
}
