//! Segmentation rasters: 8-bit single-channel PNG whose pixel values are
//! class indices, plus a `key=value` sidecar (`<name>.meta`) recording the
//! producing source and the frame id.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageFormat, ImageReader, Limits};

use crate::error::{Error, Result};
use crate::labels::{SegMap, SegSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegMapMeta {
    pub source: SegSource,
    pub frame_id: u64,
}

pub(crate) fn decode_limits() -> Limits {
    let mut limits = Limits::default();
    limits.max_image_width = Some(16_384);
    limits.max_image_height = Some(16_384);
    limits.max_alloc = Some(256 * 1024 * 1024);
    limits
}

pub fn decode_png(bytes: &[u8], source: SegSource) -> Result<SegMap> {
    let mut reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    reader.limits(decode_limits());
    let img = reader.decode()?;
    if img.color() != ColorType::L8 {
        return Err(Error::Parse(format!("segmentation raster must be 8-bit gray, got {:?}", img.color())));
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    SegMap::new(w, h, gray.into_raw(), source)
}

pub fn encode_png(seg: &SegMap) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    image::write_buffer_with_format(&mut out, seg.raw(), seg.width(), seg.height(), ColorType::L8, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn parse_sidecar(text: &str) -> Result<SegMapMeta> {
    let mut source = None;
    let mut frame_id = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Parse(format!("sidecar line {line:?} is not key=value")))?;
        match k.trim() {
            "source" => source = Some(v.trim().parse::<SegSource>()?),
            "frame_id" => {
                frame_id = Some(v.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad frame_id {v:?}")))?)
            }
            other => return Err(Error::Parse(format!("unknown sidecar key {other:?}"))),
        }
    }
    match (source, frame_id) {
        (Some(source), Some(frame_id)) => Ok(SegMapMeta { source, frame_id }),
        _ => Err(Error::Parse("sidecar needs source and frame_id".into())),
    }
}

pub fn format_sidecar(meta: &SegMapMeta) -> String {
    format!("source={}\nframe_id={}\n", meta.source.as_str(), meta.frame_id)
}

pub fn sidecar_path(raster: &Path) -> PathBuf {
    raster.with_extension("meta")
}

/// Reads a raster and, when present, its sidecar. A sidecar naming a
/// different source than `expected` is an error.
pub fn read_segmap(path: &Path, expected: SegSource) -> Result<(SegMap, Option<SegMapMeta>)> {
    let side = sidecar_path(path);
    let meta = if side.exists() { Some(parse_sidecar(&super::read_text(&side)?)?) } else { None };
    if let Some(m) = meta {
        if m.source != expected {
            return Err(Error::Parse(format!(
                "{} was produced by {} but is used as {}",
                path.display(),
                m.source.as_str(),
                expected.as_str()
            )));
        }
    }
    let seg = decode_png(&super::read_bytes(path)?, expected)?;
    Ok((seg, meta))
}

pub fn write_segmap(path: &Path, seg: &SegMap, frame_id: u64) -> Result<()> {
    super::write_bytes(path, &encode_png(seg)?)?;
    let meta = SegMapMeta { source: seg.source(), frame_id };
    super::write_bytes(&sidecar_path(path), format_sidecar(&meta).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::ClassId;

    #[test]
    fn png_round_trip() {
        let mut seg = SegMap::filled(5, 3, ClassId::Scenario, SegSource::RadarDepth);
        seg.set(4, 2, ClassId::Bicycle);
        let back = decode_png(&encode_png(&seg).unwrap(), SegSource::RadarDepth).unwrap();
        assert_eq!(back, seg);
    }

    #[test]
    fn rejects_out_of_palette_and_color_images() {
        let mut bytes = Cursor::new(Vec::new());
        image::write_buffer_with_format(&mut bytes, &[0, 7], 2, 1, ColorType::L8, ImageFormat::Png).unwrap();
        assert!(decode_png(bytes.get_ref(), SegSource::Camera).is_err());
        let mut rgb = Cursor::new(Vec::new());
        image::write_buffer_with_format(&mut rgb, &[0, 0, 0], 1, 1, ColorType::Rgb8, ImageFormat::Png).unwrap();
        assert!(decode_png(rgb.get_ref(), SegSource::Camera).is_err());
        assert!(decode_png(b"not a png", SegSource::Camera).is_err());
    }

    #[test]
    fn sidecar_round_trip_and_errors() {
        let meta = SegMapMeta { source: SegSource::Fused, frame_id: 42 };
        assert_eq!(parse_sidecar(&format_sidecar(&meta)).unwrap(), meta);
        assert!(parse_sidecar("source=camera\n").is_err());
        assert!(parse_sidecar("source=lidar\nframe_id=1\n").is_err());
        assert!(parse_sidecar("source=camera\nframe_id=1\ncolor=red\n").is_err());
    }

    #[test]
    fn sidecar_source_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let seg = SegMap::filled(2, 2, ClassId::Vehicle, SegSource::Camera);
        write_segmap(&path, &seg, 3).unwrap();
        let (back, meta) = read_segmap(&path, SegSource::Camera).unwrap();
        assert_eq!(back, seg);
        assert_eq!(meta.unwrap().frame_id, 3);
        assert!(read_segmap(&path, SegSource::RadarDepth).is_err());
    }
}
