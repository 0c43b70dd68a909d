//! CSV and PLY point-cloud readers, CSV writer.
//!
//! CSV rows are `x,y,z,E`; blank lines and `#` comments are skipped.
//! PLY files need a `vertex` element with `x`, `y`, `z` and `stiffness`
//! properties, in `ascii` or `binary_little_endian` encoding.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{MaterialPoint, ModelError, PointCloudModel};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Csv,
    Ply,
}

impl ModelFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" | "txt" => Some(Self::Csv),
            "ply" => Some(Self::Ply),
            _ => None,
        }
    }
}

/// Reads a model, indexing it with voxels twice the proxy radius.
pub fn load_model<R: BufRead>(input: R, format: ModelFormat, proxy_radius: f64) -> Result<PointCloudModel, ModelError> {
    load_model_with_voxel(input, format, 2.0 * proxy_radius)
}

pub fn load_model_with_voxel<R: BufRead>(
    input: R,
    format: ModelFormat,
    voxel: f64,
) -> Result<PointCloudModel, ModelError> {
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(ModelError::InvalidConfig(format!("voxel size {voxel} must be positive")));
    }
    let points = match format {
        ModelFormat::Csv => read_csv(input)?,
        ModelFormat::Ply => read_ply(input)?,
    };
    PointCloudModel::new(points, voxel)
}

/// Writes `x,y,z,E` rows with 17 significant digits.
pub fn save_csv<W: Write>(out: &mut W, points: &[MaterialPoint]) -> std::io::Result<()> {
    writeln!(out, "# x,y,z,E")?;
    for p in points {
        let q = p.position;
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", q.x, q.y, q.z, p.elastic_modulus)?;
    }
    Ok(())
}

/// Writes `x,y,z,E` rows with a fixed number of decimals.
pub fn save_csv_fixed<W: Write>(out: &mut W, points: &[MaterialPoint], decimals: usize) -> std::io::Result<()> {
    writeln!(out, "# x,y,z,E")?;
    for p in points {
        let q = p.position;
        writeln!(out, "{:.*},{:.*},{:.*},{:.*}", decimals, q.x, decimals, q.y, decimals, q.z, decimals, p.elastic_modulus)?;
    }
    Ok(())
}

fn read_csv<R: BufRead>(input: R) -> Result<Vec<MaterialPoint>, ModelError> {
    let mut points = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = match line.find('#') {
            Some(cut) => &line[..cut],
            None => &line[..],
        }
        .trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(ModelError::Parse { line: lineno, message: format!("expected 4 fields, found {}", fields.len()) });
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|e| ModelError::Parse { line: lineno, message: format!("bad number `{field}`: {e}") })?;
        }
        let position = Vec3::new(v[0], v[1], v[2]);
        check_record(lineno, &position, v[3])?;
        points.push(MaterialPoint::new(position, v[3]));
    }
    Ok(points)
}

fn check_record(line: usize, position: &Vec3, e: f64) -> Result<(), ModelError> {
    if !position.iter().all(|c| c.is_finite()) {
        return Err(ModelError::Parse { line, message: "position is not finite".into() });
    }
    if !(e > 0.0 && e.is_finite()) {
        return Err(ModelError::Parse { line, message: format!("elastic modulus must be positive, got {e}") });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
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
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    /// `None` marks a list property, which only non-vertex elements may use in ASCII.
    properties: Vec<(String, Option<Scalar>)>,
}

fn read_ply<R: BufRead>(mut input: R) -> Result<Vec<MaterialPoint>, ModelError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;

    let mut pos = 0usize;
    let mut lineno = 0usize;
    let mut next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |k| *pos + k);
        let line = String::from_utf8_lossy(&bytes[*pos..end]).trim_end_matches('\r').to_string();
        *pos = (end + 1).min(bytes.len());
        lineno += 1;
        Some(line)
    };
    let perr = |line: usize, message: &str| ModelError::Parse { line, message: message.to_string() };

    if next_line(&mut pos).as_deref().map(str::trim) != Some("ply") {
        return Err(perr(1, "missing `ply` magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut header_lines = 1;
    loop {
        let line = next_line(&mut pos).ok_or_else(|| perr(header_lines, "header has no end_header"))?;
        header_lines += 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, _version] => {
                encoding = Some(match *kind {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    other => return Err(ModelError::UnsupportedPly(format!("encoding `{other}`"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| perr(header_lines, "bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] => {
                let el = elements.last_mut().ok_or_else(|| perr(header_lines, "property before element"))?;
                el.properties.push((name.to_string(), None));
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| perr(header_lines, "property before element"))?;
                let scalar = Scalar::parse(ty).ok_or_else(|| perr(header_lines, &format!("unknown type `{ty}`")))?;
                el.properties.push((name.to_string(), Some(scalar)));
            }
            _ => return Err(perr(header_lines, &format!("unrecognized header line `{line}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| perr(header_lines, "header has no format line"))?;
    let vertex_at = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| ModelError::UnsupportedPly("no vertex element".into()))?;
    let vertex = &elements[vertex_at];
    let mut columns = [usize::MAX; 4];
    for (slot, want) in columns.iter_mut().zip(["x", "y", "z", "stiffness"]) {
        *slot = vertex
            .properties
            .iter()
            .position(|(name, _)| name == want)
            .ok_or_else(|| ModelError::UnsupportedPly(format!("vertex has no `{want}` property")))?;
    }
    if vertex.properties.iter().any(|(_, t)| t.is_none()) {
        return Err(ModelError::UnsupportedPly("list property on vertex".into()));
    }

    let mut points = Vec::with_capacity(vertex.count);
    match encoding {
        Encoding::Ascii => {
            let text = &bytes[pos..];
            let mut lines = text.split(|&b| b == b'\n').map(|l| String::from_utf8_lossy(l).trim().to_string());
            let mut line_no = header_lines;
            // skip the bodies of elements declared before the vertices
            for el in &elements[..vertex_at] {
                for _ in 0..el.count {
                    lines.next();
                    line_no += 1;
                }
            }
            for _ in 0..vertex.count {
                line_no += 1;
                let line = lines.next().ok_or_else(|| perr(line_no, "unexpected end of vertex data"))?;
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != vertex.properties.len() {
                    return Err(perr(
                        line_no,
                        &format!("expected {} values, found {}", vertex.properties.len(), fields.len()),
                    ));
                }
                let get = |c: usize| -> Result<f64, ModelError> {
                    fields[c].parse().map_err(|_| perr(line_no, &format!("bad number `{}`", fields[c])))
                };
                let position = Vec3::new(get(columns[0])?, get(columns[1])?, get(columns[2])?);
                let e = get(columns[3])?;
                check_record(line_no, &position, e)?;
                points.push(MaterialPoint::new(position, e));
            }
        }
        Encoding::BinaryLe => {
            let mut offset = pos;
            for el in &elements[..vertex_at] {
                let mut stride = 0;
                for (name, t) in &el.properties {
                    stride += t
                        .ok_or_else(|| ModelError::UnsupportedPly(format!("list property `{name}` before vertices")))?
                        .size();
                }
                offset += stride * el.count;
            }
            let layout: Vec<(usize, Scalar)> = vertex
                .properties
                .iter()
                .scan(0usize, |acc, (_, t)| {
                    let t = t.expect("checked above");
                    let at = *acc;
                    *acc += t.size();
                    Some((at, t))
                })
                .collect();
            let stride: usize = layout.iter().map(|(_, t)| t.size()).sum();
            for k in 0..vertex.count {
                let start = offset + k * stride;
                let record = bytes
                    .get(start..start + stride)
                    .ok_or_else(|| ModelError::Parse { line: header_lines, message: format!("vertex {k}: truncated binary data") })?;
                let get = |c: usize| {
                    let (at, t) = layout[c];
                    t.decode(&record[at..])
                };
                let position = Vec3::new(get(columns[0]), get(columns[1]), get(columns[2]));
                let e = get(columns[3]);
                check_record(header_lines, &position, e).map_err(|err| match err {
                    ModelError::Parse { message, .. } => {
                        ModelError::Parse { line: header_lines, message: format!("vertex {k}: {message}") }
                    }
                    other => other,
                })?;
                points.push(MaterialPoint::new(position, e));
            }
        }
    }
    Ok(points)
}
