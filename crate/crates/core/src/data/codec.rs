use std::path::Path;

use super::RgbImage;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ImageFormat {
    Ppm,
    Png,
    Jpeg,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ppm" => Some(ImageFormat::Ppm),
            "png" => Some(ImageFormat::Png),
            "jpg" | "jpeg" => Some(ImageFormat::Jpeg),
            _ => None,
        }
    }

    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"P6") {
            Some(ImageFormat::Ppm)
        } else if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(ImageFormat::Png)
        } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            Some(ImageFormat::Jpeg)
        } else {
            None
        }
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::ImageParse {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    /// Skips whitespace and `#` comments that run to end of line.
    fn skip_blank(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_blank();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if self.pos >= self.bytes.len() {
                self.err(format!("truncated header: missing {what}"))
            } else {
                self.err(format!("expected {what}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|e| Error::ImageParse {
                offset: start,
                reason: format!("{what}: {e}"),
            })
    }
}

/// Binary PPM (P6) with maxval 255.
fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let mut h = Header { bytes, pos: 0 };
    if bytes.len() < 2 {
        return Err(h.err("truncated header: missing magic"));
    }
    if &bytes[..2] != b"P6" {
        return Err(h.err("expected P6 magic"));
    }
    h.pos = 2;
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(h.err(format!("unsupported maxval {maxval} (only 255)")));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        Some(_) => return Err(h.err("expected whitespace after maxval")),
        None => return Err(h.err("truncated header: missing separator")),
    }
    let len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| h.err("image dimensions overflow"))?;
    let data = &bytes[h.pos..];
    if data.len() < len {
        return Err(Error::ImageParse {
            offset: bytes.len(),
            reason: format!("truncated pixel data: {} of {len} bytes", data.len()),
        });
    }
    RgbImage::new(width, height, data[..len].to_vec())
}

fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

fn decode_with_codec(bytes: &[u8], format: image::ImageFormat) -> Result<RgbImage> {
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Codec(e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    RgbImage::new(w as usize, h as usize, img.into_raw())
}

/// Decodes PPM (P6), PNG or JPEG by content sniffing.
pub fn decode_rgb8(bytes: &[u8]) -> Result<RgbImage> {
    match ImageFormat::sniff(bytes) {
        Some(ImageFormat::Ppm) => decode_ppm(bytes),
        Some(ImageFormat::Png) => decode_with_codec(bytes, image::ImageFormat::Png),
        Some(ImageFormat::Jpeg) => decode_with_codec(bytes, image::ImageFormat::Jpeg),
        None if bytes.first() == Some(&b'P') => decode_ppm(bytes),
        None => Err(Error::UnsupportedFormat(format!(
            "unrecognised signature {:02x?}",
            &bytes[..bytes.len().min(4)]
        ))),
    }
}

pub fn encode_rgb8(img: &RgbImage, format: ImageFormat) -> Result<Vec<u8>> {
    let codec_format = match format {
        ImageFormat::Ppm => return Ok(encode_ppm(img)),
        ImageFormat::Png => image::ImageFormat::Png,
        ImageFormat::Jpeg => image::ImageFormat::Jpeg,
    };
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
        .ok_or_else(|| Error::Codec("pixel buffer does not match dimensions".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, codec_format)
        .map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out.into_inner())
}

/// `(1, 3, H, W)` tensor in `[0, 1]`.
pub fn decode_image<T: Real>(bytes: &[u8]) -> Result<Tensor<T>> {
    Ok(decode_rgb8(bytes)?.to_tensor())
}

/// Clamps to `[0, 1]`, quantizes to 8 bits and encodes the first batch item.
pub fn encode_image<T: Real>(t: &Tensor<T>, format: ImageFormat) -> Result<Vec<u8>> {
    encode_rgb8(&RgbImage::from_tensor(t, 0)?, format)
}

pub fn read_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_rgb8(&bytes)
}

/// Encodes according to the path's extension.
pub fn write_image(path: &Path, img: &RgbImage) -> Result<()> {
    let format = ImageFormat::from_path(path)
        .ok_or_else(|| Error::UnsupportedFormat(path.display().to_string()))?;
    std::fs::write(path, encode_rgb8(img, format)?).map_err(|e| Error::io(path, e))
}
