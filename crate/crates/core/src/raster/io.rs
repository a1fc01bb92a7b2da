//! Binary PPM (P6) / PGM (P5) codecs, plus PNG when built with the `png`
//! feature.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::RasterImage;

#[derive(Debug, thiserror::Error)]
pub enum ImageIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed image: {0}")]
    Malformed(String),
    #[error("unsupported image format{0}")]
    Unsupported(String),
}

fn malformed(msg: impl Into<String>) -> ImageIoError {
    ImageIoError::Malformed(msg.into())
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<u32, ImageIoError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("bad header number"))
    }
}

/// Decodes a binary PPM or PGM with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<RasterImage, ImageIoError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(malformed("missing PNM magic"));
    }
    let channels = match bytes[1] {
        b'6' => 3u8,
        b'5' => 1u8,
        _ => return Err(ImageIoError::Unsupported(" (only P5/P6 PNM)".into())),
    };
    let mut hdr = HeaderReader { bytes, pos: 2 };
    let width = hdr.number()?;
    let height = hdr.number()?;
    let maxval = hdr.number()?;
    if maxval != 255 {
        return Err(ImageIoError::Unsupported(format!(" (maxval {maxval})")));
    }
    // exactly one whitespace byte separates the header from the raster
    if hdr.pos >= bytes.len() || !bytes[hdr.pos].is_ascii_whitespace() {
        return Err(malformed("missing raster separator"));
    }
    let start = hdr.pos + 1;
    let len = width as usize * height as usize * channels as usize;
    let raster = bytes
        .get(start..start + len)
        .ok_or_else(|| malformed("truncated raster"))?;
    RasterImage::from_raw(width, height, channels, raster.to_vec()).map_err(|e| malformed(e.to_string()))
}

pub fn encode_pnm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

#[cfg(feature = "png")]
pub fn decode_png(bytes: &[u8]) -> Result<RasterImage, ImageIoError> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| malformed(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| malformed("png too large"))?];
    let info = reader.next_frame(&mut buf).map_err(|e| malformed(e.to_string()))?;
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let data: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect(),
        png::ColorType::Grayscale => return RasterImage::from_raw(w, h, 1, buf).map_err(|e| malformed(e.to_string())),
        png::ColorType::GrayscaleAlpha => {
            let g: Vec<u8> = buf.chunks_exact(2).map(|p| p[0]).collect();
            return RasterImage::from_raw(w, h, 1, g).map_err(|e| malformed(e.to_string()));
        }
        png::ColorType::Indexed => return Err(malformed("unexpanded palette")),
    };
    RasterImage::from_raw(w, h, 3, data).map_err(|e| malformed(e.to_string()))
}

#[cfg(feature = "png")]
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, ImageIoError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width(), img.height());
        enc.set_color(if img.channels() == 3 {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| malformed(e.to_string()))?;
        writer.write_image_data(img.data()).map_err(|e| malformed(e.to_string()))?;
    }
    Ok(out)
}

/// Decodes by content sniffing.
pub fn decode(bytes: &[u8]) -> Result<RasterImage, ImageIoError> {
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        return decode_pnm(bytes);
    }
    if bytes.starts_with(b"\x89PNG") {
        #[cfg(feature = "png")]
        return decode_png(bytes);
        #[cfg(not(feature = "png"))]
        return Err(ImageIoError::Unsupported(" (built without png support)".into()));
    }
    Err(ImageIoError::Unsupported(String::new()))
}

pub fn load(path: impl AsRef<Path>) -> Result<RasterImage, ImageIoError> {
    decode(&fs::read(path)?)
}

/// Writes PNM, or PNG when the extension is `.png` and support is built in.
pub fn save(path: impl AsRef<Path>, img: &RasterImage) -> Result<(), ImageIoError> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        #[cfg(feature = "png")]
        {
            encode_png(img)?
        }
        #[cfg(not(feature = "png"))]
        {
            return Err(ImageIoError::Unsupported(" (built without png support)".into()));
        }
    } else {
        encode_pnm(img)
    };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
