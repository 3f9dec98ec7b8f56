//! 8-bit camera images (PNG) converted to and from linear intensity.

use std::io::Cursor;
use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::fog::{Encoding, LinearImage};

pub fn decode_image(bytes: &[u8], encoding: Encoding) -> Result<LinearImage> {
    let mut reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    reader.limits(super::segmap::decode_limits());
    let img = reader.decode()?;
    let (width, height) = (img.width(), img.height());
    let (channels, raw) = match img {
        DynamicImage::ImageLuma8(g) => (1, g.into_raw()),
        DynamicImage::ImageRgb8(rgb) => (3, rgb.into_raw()),
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageLumaA8(_) => (3, img.into_rgb8().into_raw()),
        other => return Err(Error::Parse(format!("unsupported camera image type {:?}", other.color()))),
    };
    let data = raw.iter().map(|&v| encoding.decode(v)).collect();
    LinearImage::new(width, height, channels, data)
}

pub fn encode_image(img: &LinearImage, encoding: Encoding) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = img.data.iter().map(|&v| encoding.encode(v)).collect();
    let color = if img.channels == 1 { ColorType::L8 } else { ColorType::Rgb8 };
    let mut out = Cursor::new(Vec::new());
    image::write_buffer_with_format(&mut out, &bytes, img.width, img.height, color, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn read_image(path: &Path, encoding: Encoding) -> Result<LinearImage> {
    decode_image(&super::read_bytes(path)?, encoding)
}

pub fn write_image(path: &Path, img: &LinearImage, encoding: Encoding) -> Result<()> {
    super::write_bytes(path, &encode_image(img, encoding)?)
}
