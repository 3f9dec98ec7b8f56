//! PLY point clouds.
//!
//! The reader accepts ASCII and binary (either endianness) files with any
//! scalar vertex properties; `x`, `y`, `z` are required and `red`, `green`,
//! `blue`, `label` and `projected` are picked up when present. Other
//! elements (faces, ...) are parsed and skipped.
//!
//! The writer emits double-precision coordinates, palette colors, the class
//! index and the projection flag, and records the frame id in a comment.

use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::labels::{ClassId, LabeledPointCloud, NUM_CLASSES};

/// One RGB color per class, indexed by [`ClassId`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette(pub [[u8; 3]; NUM_CLASSES]);

impl Default for Palette {
    fn default() -> Self {
        Palette([
            [170, 170, 170], // background: light grey
            [64, 64, 64],    // scenario: dark grey
            [255, 105, 180], // pedestrian: pink
            [0, 0, 255],     // vehicle: blue
            [128, 0, 0],     // bicycle: maroon
        ])
    }
}

impl Palette {
    pub fn color(&self, class: ClassId) -> [u8; 3] {
        self.0[class.index()]
    }

    /// Inverse lookup; `None` for colors outside the palette.
    pub fn class_of(&self, rgb: [u8; 3]) -> Option<ClassId> {
        self.0.iter().position(|&c| c == rgb).map(|i| ClassId::ALL[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlyFormat {
    Ascii,
    #[default]
    BinaryLittleEndian,
    BinaryBigEndian,
}

impl PlyFormat {
    fn header_name(self) -> &'static str {
        match self {
            PlyFormat::Ascii => "ascii",
            PlyFormat::BinaryLittleEndian => "binary_little_endian",
            PlyFormat::BinaryBigEndian => "binary_big_endian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            other => return Err(Error::Parse(format!("unknown PLY property type {other:?}"))),
        })
    }

    fn is_integer(self) -> bool {
        !matches!(self, ScalarType::F32 | ScalarType::F64)
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone)]
struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    comments: Vec<String>,
}

/// Decoded vertex data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlyCloud {
    pub frame_id: Option<u64>,
    pub points: Vec<Point3<f64>>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub labels: Option<Vec<u8>>,
    pub projected: Option<Vec<bool>>,
}

impl PlyCloud {
    pub fn into_point_cloud(self, default_frame: u64) -> Result<PointCloud> {
        PointCloud::new(self.frame_id.unwrap_or(default_frame), self.points)
    }

    /// Requires a `label` property holding class indices.
    pub fn into_labeled(self, default_frame: u64) -> Result<LabeledPointCloud> {
        let raw = self.labels.ok_or_else(|| Error::Parse("PLY has no label property".into()))?;
        let labels = raw.into_iter().map(ClassId::try_from).collect::<Result<Vec<_>>>()?;
        let mut lpc = LabeledPointCloud::new(self.frame_id.unwrap_or(default_frame), self.points, labels)?;
        if let Some(p) = self.projected {
            lpc.projected = p;
        }
        if lpc.points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidValue("non-finite coordinate in labeled cloud".into()));
        }
        Ok(lpc)
    }
}

fn parse_header(bytes: &[u8]) -> Result<(Header, usize)> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::Parse("PLY header has no end_header".into()))?;
    let mut body_start = end + END.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) != Some(&b'\n') {
        return Err(Error::Parse("end_header must be followed by a newline".into()));
    }
    body_start += 1;

    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::Parse("PLY header is not UTF-8".into()))?;
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(Error::Parse("missing ply magic line".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut comments = Vec::new();
    for line in lines {
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => continue,
            Some("comment") | Some("obj_info") => {
                comments.push(line.split_once(' ').map_or("", |(_, rest)| rest).trim().to_string());
            }
            Some("format") => {
                let f = match tok.next() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLittleEndian,
                    Some("binary_big_endian") => PlyFormat::BinaryBigEndian,
                    other => return Err(Error::Parse(format!("unknown PLY format {other:?}"))),
                };
                if tok.next() != Some("1.0") {
                    return Err(Error::Parse("unsupported PLY version".into()));
                }
                format = Some(f);
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| Error::Parse("element without name".into()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("element {name:?} has no valid count")))?;
                elements.push(Element { name: name.to_string(), count, properties: Vec::new() });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| Error::Parse("property before any element".into()))?;
                let kind = match tok.next() {
                    Some("list") => {
                        let count = ScalarType::parse(tok.next().unwrap_or(""))?;
                        let item = ScalarType::parse(tok.next().unwrap_or(""))?;
                        if !count.is_integer() {
                            return Err(Error::Parse("list count type must be an integer".into()));
                        }
                        PropertyKind::List { count, item }
                    }
                    Some(t) => PropertyKind::Scalar(ScalarType::parse(t)?),
                    None => return Err(Error::Parse("property without type".into())),
                };
                let name = tok.next().ok_or_else(|| Error::Parse("property without name".into()))?;
                element.properties.push(Property { name: name.to_string(), kind });
            }
            Some(other) => return Err(Error::Parse(format!("unexpected PLY header keyword {other:?}"))),
        }
    }
    let format = format.ok_or_else(|| Error::Parse("PLY header has no format line".into()))?;
    Ok((Header { format, elements, comments }, body_start))
}

/// Sequential reader over the body in one of the three encodings.
struct BodyReader<'a> {
    format: PlyFormat,
    bytes: &'a [u8],
    pos: usize,
}

impl BodyReader<'_> {
    fn next_token(&mut self) -> Result<&str> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse("PLY body ended early".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::Parse("non-UTF-8 PLY token".into()))
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Parse("PLY body ended early".into()))?;
        let mut buf: [u8; N] = self.bytes[self.pos..end].try_into().expect("length checked");
        self.pos = end;
        if self.format == PlyFormat::BinaryBigEndian {
            buf.reverse();
        }
        Ok(buf)
    }

    fn scalar(&mut self, ty: ScalarType) -> Result<f64> {
        if self.format == PlyFormat::Ascii {
            let tok = self.next_token()?;
            let v = if ty.is_integer() { tok.parse::<i64>().map(|v| v as f64).ok() } else { tok.parse::<f64>().ok() };
            return v.ok_or_else(|| Error::Parse(format!("bad PLY value {tok:?}")));
        }
        Ok(match ty {
            ScalarType::I8 => f64::from(i8::from_le_bytes(self.take()?)),
            ScalarType::U8 => f64::from(u8::from_le_bytes(self.take()?)),
            ScalarType::I16 => f64::from(i16::from_le_bytes(self.take()?)),
            ScalarType::U16 => f64::from(u16::from_le_bytes(self.take()?)),
            ScalarType::I32 => f64::from(i32::from_le_bytes(self.take()?)),
            ScalarType::U32 => f64::from(u32::from_le_bytes(self.take()?)),
            ScalarType::F32 => f64::from(f32::from_le_bytes(self.take()?)),
            ScalarType::F64 => f64::from_le_bytes(self.take()?),
        })
    }

    fn skip_property(&mut self, kind: &PropertyKind) -> Result<()> {
        match kind {
            PropertyKind::Scalar(t) => {
                self.scalar(*t)?;
            }
            PropertyKind::List { count, item } => {
                let n = self.scalar(*count)?;
                if !(n >= 0.0) {
                    return Err(Error::Parse(format!("negative list length {n}")));
                }
                for _ in 0..n as u64 {
                    self.scalar(*item)?;
                }
            }
        }
        Ok(())
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn to_u8(v: f64, what: &str) -> Result<u8> {
    if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
        Ok(v as u8)
    } else {
        Err(Error::Parse(format!("{what} value {v} is not a byte")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<PlyCloud> {
    let (header, body_start) = parse_header(bytes)?;
    let frame_id = header
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("frame_id"))
        .map(|rest| rest.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad frame_id comment {rest:?}"))))
        .transpose()?;
    let mut reader = BodyReader { format: header.format, bytes: &bytes[body_start..], pos: 0 };
    let mut cloud = PlyCloud { frame_id, ..PlyCloud::default() };
    let mut seen_vertex = false;

    for element in &header.elements {
        if element.name != "vertex" {
            if element.properties.is_empty() {
                continue;
            }
            for _ in 0..element.count {
                for p in &element.properties {
                    reader.skip_property(&p.kind)?;
                }
            }
            continue;
        }
        if seen_vertex {
            return Err(Error::Parse("more than one vertex element".into()));
        }
        seen_vertex = true;

        let slot = |name: &str| -> Result<Option<usize>> {
            let idx = element.properties.iter().position(|p| p.name == name);
            if let Some(i) = idx {
                if matches!(element.properties[i].kind, PropertyKind::List { .. }) {
                    return Err(Error::Parse(format!("vertex property {name:?} must be scalar")));
                }
            }
            Ok(idx)
        };
        let xyz = [slot("x")?, slot("y")?, slot("z")?];
        let [Some(xi), Some(yi), Some(zi)] = xyz else {
            return Err(Error::Parse("vertex element needs x, y and z".into()));
        };
        let rgb = [slot("red")?, slot("green")?, slot("blue")?];
        let has_color = rgb.iter().all(Option::is_some);
        let label_slot = slot("label")?;
        let projected_slot = slot("projected")?;

        // Every scalar takes at least one byte (or two in ASCII), so cap the
        // reservation by what the body can hold.
        let reserve = element.count.min(reader.remaining() / element.properties.len().max(1));
        cloud.points.reserve(reserve);
        let mut colors = has_color.then(|| Vec::with_capacity(reserve));
        let mut labels = label_slot.map(|_| Vec::with_capacity(reserve));
        let mut projected = projected_slot.map(|_| Vec::with_capacity(reserve));
        let mut values = vec![0.0; element.properties.len()];
        for _ in 0..element.count {
            for (v, p) in values.iter_mut().zip(&element.properties) {
                match &p.kind {
                    PropertyKind::Scalar(t) => *v = reader.scalar(*t)?,
                    kind => reader.skip_property(kind)?,
                }
            }
            cloud.points.push(Point3::new(values[xi], values[yi], values[zi]));
            if let Some(colors) = colors.as_mut() {
                let c = |s: Option<usize>| to_u8(values[s.expect("checked")], "color");
                colors.push([c(rgb[0])?, c(rgb[1])?, c(rgb[2])?]);
            }
            if let (Some(labels), Some(s)) = (labels.as_mut(), label_slot) {
                labels.push(to_u8(values[s], "label")?);
            }
            if let (Some(projected), Some(s)) = (projected.as_mut(), projected_slot) {
                projected.push(to_u8(values[s], "projected")? != 0);
            }
        }
        cloud.colors = colors;
        cloud.labels = labels;
        cloud.projected = projected;
    }
    if !seen_vertex {
        return Err(Error::Parse("PLY has no vertex element".into()));
    }
    Ok(cloud)
}

pub fn encode_labeled(lpc: &LabeledPointCloud, palette: &Palette, format: PlyFormat) -> Vec<u8> {
    let mut out = format!(
        "ply\nformat {} 1.0\ncomment frame_id {}\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property uchar label\nproperty uchar projected\nend_header\n",
        format.header_name(),
        lpc.frame_id,
        lpc.len()
    )
    .into_bytes();
    for i in 0..lpc.len() {
        let p = &lpc.points[i];
        let class = lpc.labels[i];
        let [r, g, b] = palette.color(class);
        let projected = u8::from(lpc.projected.get(i).copied().unwrap_or(true));
        match format {
            PlyFormat::Ascii => {
                out.extend_from_slice(
                    format!("{} {} {} {r} {g} {b} {} {projected}\n", p.x, p.y, p.z, class as u8).as_bytes(),
                );
            }
            PlyFormat::BinaryLittleEndian => {
                for c in [p.x, p.y, p.z] {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                out.extend_from_slice(&[r, g, b, class as u8, projected]);
            }
            PlyFormat::BinaryBigEndian => {
                for c in [p.x, p.y, p.z] {
                    out.extend_from_slice(&c.to_be_bytes());
                }
                out.extend_from_slice(&[r, g, b, class as u8, projected]);
            }
        }
    }
    out
}

/// Unlabeled cloud with coordinates only.
pub fn encode_points(pc: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let mut out = format!(
        "ply\nformat {} 1.0\ncomment frame_id {}\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\nend_header\n",
        format.header_name(),
        pc.frame_id,
        pc.len()
    )
    .into_bytes();
    for p in &pc.points {
        match format {
            PlyFormat::Ascii => out.extend_from_slice(format!("{} {} {}\n", p.x, p.y, p.z).as_bytes()),
            PlyFormat::BinaryLittleEndian => {
                [p.x, p.y, p.z].iter().for_each(|c| out.extend_from_slice(&c.to_le_bytes()))
            }
            PlyFormat::BinaryBigEndian => [p.x, p.y, p.z].iter().for_each(|c| out.extend_from_slice(&c.to_be_bytes())),
        }
    }
    out
}

pub fn read_ply(path: &Path) -> Result<PlyCloud> {
    decode(&super::read_bytes(path)?)
}

pub fn write_labeled(path: &Path, lpc: &LabeledPointCloud, palette: &Palette, format: PlyFormat) -> Result<()> {
    super::write_bytes(path, &encode_labeled(lpc, palette, format))
}

pub fn write_points(path: &Path, pc: &PointCloud, format: PlyFormat) -> Result<()> {
    super::write_bytes(path, &encode_points(pc, format))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_points() -> LabeledPointCloud {
        let mut lpc = LabeledPointCloud::new(
            7,
            vec![Point3::new(1.0, -2.5, 0.1), Point3::new(1e-9, 3.3333333333, -7.0), Point3::new(40.0, 0.0, 2.0)],
            vec![ClassId::Vehicle, ClassId::Pedestrian, ClassId::Background],
        )
        .unwrap();
        lpc.projected[2] = false;
        lpc
    }

    #[test]
    fn round_trip_all_formats() {
        let lpc = three_points();
        let palette = Palette::default();
        for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian, PlyFormat::BinaryBigEndian] {
            let parsed = decode(&encode_labeled(&lpc, &palette, format)).unwrap();
            let colors = parsed.colors.clone().unwrap();
            assert_eq!(colors[0], [0, 0, 255]);
            assert_eq!(parsed.clone().into_labeled(0).unwrap(), lpc);
        }
    }

    #[test]
    fn empty_cloud() {
        let lpc = LabeledPointCloud::new(0, vec![], vec![]).unwrap();
        let parsed = decode(&encode_labeled(&lpc, &Palette::default(), PlyFormat::Ascii)).unwrap();
        assert!(parsed.points.is_empty());
        assert_eq!(parsed.frame_id, Some(0));
    }

    #[test]
    fn palette_is_a_bijection() {
        let p = Palette::default();
        for c in ClassId::ALL {
            assert_eq!(p.class_of(p.color(c)), Some(c));
        }
    }

    #[test]
    fn foreign_file_with_faces_and_floats() {
        let text = "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 2\nproperty float x\n\
                    property float y\nproperty float z\nproperty uchar intensity\nelement face 1\n\
                    property list uchar int vertex_indices\nend_header\n0.5 1 2 9\n3 4 5 10\n3 0 1 1\n";
        let cloud = decode(text.as_bytes()).unwrap();
        assert_eq!(cloud.points[1], Point3::new(3.0, 4.0, 5.0));
        assert!(cloud.labels.is_none());
        assert_eq!(cloud.frame_id, None);
        assert!(cloud.clone().into_labeled(0).is_err());
        assert_eq!(cloud.into_point_cloud(3).unwrap().frame_id, 3);
    }

    #[test]
    fn malformed_inputs() {
        let good = encode_labeled(&three_points(), &Palette::default(), PlyFormat::BinaryLittleEndian);
        assert!(decode(&good[..good.len() - 3]).is_err());
        assert!(decode(b"ply\nformat ascii 1.0\nend_header\n").is_err());
        assert!(decode(b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n").is_err());
        assert!(decode(b"ply\nformat ascii 2.0\nelement vertex 0\nend_header\n").is_err());
        assert!(decode(b"plx\nformat ascii 1.0\nend_header\n").is_err());
        assert!(decode(b"ply\nformat ascii 1.0\nelement vertex 99999999999\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n").is_err());
        let bad_label = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n\
                         property float z\nproperty uchar label\nend_header\n1 2 3 9\n";
        assert!(decode(bad_label.as_bytes()).unwrap().into_labeled(0).is_err());
    }

    #[test]
    fn points_only_round_trip() {
        let pc = PointCloud::new(2, vec![Point3::new(0.25, -1.0, 3.0)]).unwrap();
        for format in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            assert_eq!(decode(&encode_points(&pc, format)).unwrap().into_point_cloud(0).unwrap(), pc);
        }
    }
}
