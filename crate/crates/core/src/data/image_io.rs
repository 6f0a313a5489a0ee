use std::path::Path;

use image::{ColorType, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// `round(clamp(v, 0, 1) * 255)`.
#[inline]
pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::Image {
            path: path.to_path_buf(),
            message: "unsupported extension (expected .png or .ppm)".into(),
        }),
    }
}

/// Writes an 8-bit PNG or binary PPM, chosen by extension.
pub fn save_image(buf: &ImageBuffer, path: &Path) -> Result<()> {
    let format = format_for(path)?;
    let bytes: Vec<u8> = buf.data().iter().map(|&v| to_u8(v)).collect();
    let img = image::RgbImage::from_raw(buf.width() as u32, buf.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    img.save_with_format(path, format).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Decodes to `[0, 1]` by dividing by the channel maximum (255 or 65535).
pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let codec = |e: image::ImageError| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(codec)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img.color() {
        ColorType::L16 | ColorType::La16 | ColorType::Rgb16 | ColorType::Rgba16 => img
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect(),
        _ => img
            .to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect(),
    };
    ImageBuffer::from_vec(w, h, data)
}
