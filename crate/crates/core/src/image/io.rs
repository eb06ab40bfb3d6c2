//! PGM (P2/P5) and grayscale PNG reading and writing.
//!
//! Loaded pixels keep their stored integer values; no rescaling by maxval.
//! Saving clamps to `[0, max]` and rounds half away from zero.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

/// Stored sample depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// On-disk container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    PgmBinary,
    PgmAscii,
    Png,
}

impl Format {
    /// `.png` maps to PNG, anything else to binary PGM.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("png") => Format::Png,
            _ => Format::PgmBinary,
        }
    }
}

/// Clamp-and-round rule applied to every pixel on save.
pub fn quantize(value: f64, depth: BitDepth) -> u16 {
    value.clamp(0.0, depth.max_value()).round() as u16
}

/// Loads a PGM or PNG file, sniffing the format from its magic bytes.
pub fn load(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(b"P3") || bytes.starts_with(b"P6") {
        Err(Error::Unsupported(
            "color PPM images are not supported".into(),
        ))
    } else {
        Err(Error::Malformed(format!(
            "{}: not a PGM or PNG file",
            path.display()
        )))
    }
}

/// Saves with the format chosen from the file extension.
pub fn save(img: &Image, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    save_as(img, path, depth, Format::from_path(path))
}

pub fn save_as(img: &Image, path: impl AsRef<Path>, depth: BitDepth, format: Format) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        Format::PgmBinary => encode_pgm(img, depth, false),
        Format::PgmAscii => encode_pgm(img, depth, true),
        Format::Png => encode_png(img, depth)?,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Malformed(format!("PGM: expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Malformed(format!("PGM: {what} out of range")))
    }
}

/// Parses a P2 or P5 buffer.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let ascii = match bytes.get(..2) {
        Some(b"P2") => true,
        Some(b"P5") => false,
        _ => return Err(Error::Malformed("PGM: bad magic".into())),
    };
    let mut t = Tokens { bytes, pos: 2 };
    let width = t.next_uint("width")? as usize;
    let height = t.next_uint("height")? as usize;
    let maxval = t.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Malformed("PGM: zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Malformed(format!(
            "PGM: maxval {maxval} out of range"
        )));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::Malformed("PGM: dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    if ascii {
        for _ in 0..count {
            let v = t.next_uint("pixel value")?;
            if v > maxval {
                return Err(Error::Malformed(format!("PGM: sample {v} exceeds maxval")));
            }
            data.push(v as f64);
        }
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        let start = t.pos + 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let raster = bytes
            .get(start..start + need)
            .ok_or_else(|| Error::Malformed("PGM: truncated raster".into()))?;
        if wide {
            for pair in raster.chunks_exact(2) {
                data.push(u16::from_be_bytes([pair[0], pair[1]]) as f64);
            }
        } else {
            data.extend(raster.iter().map(|&b| b as f64));
        }
        if data.iter().any(|&v| v > maxval as f64) {
            return Err(Error::Malformed("PGM: sample exceeds maxval".into()));
        }
    }
    Image::new(width, height, data)
}

pub fn encode_pgm(img: &Image, depth: BitDepth, ascii: bool) -> Vec<u8> {
    let maxval = depth.max_value() as u32;
    let magic = if ascii { "P2" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();
    let samples = img.as_slice().iter().map(|&v| quantize(v, depth));
    if ascii {
        for (i, s) in samples.enumerate() {
            let sep = if (i + 1) % img.width() == 0 {
                '\n'
            } else {
                ' '
            };
            out.extend(format!("{s}{sep}").bytes());
        }
    } else {
        match depth {
            BitDepth::Eight => out.extend(samples.map(|s| s as u8)),
            BitDepth::Sixteen => {
                for s in samples {
                    out.extend(s.to_be_bytes());
                }
            }
        }
    }
    out
}

/// Decodes a grayscale PNG; sub-byte depths are expanded to 8 bit.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Malformed(format!("PNG: {e}")))?;
    let (color, depth) = reader.output_color_type();
    match color {
        png::ColorType::Grayscale => {}
        png::ColorType::GrayscaleAlpha => {
            return Err(Error::Unsupported("PNG with alpha channel".into()))
        }
        other => return Err(Error::Unsupported(format!("color PNG ({other:?})"))),
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Malformed("PNG: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Malformed(format!("PNG: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(stride).take(h) {
        match depth {
            png::BitDepth::Sixteen => data.extend(
                row[..2 * w]
                    .chunks_exact(2)
                    .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64),
            ),
            _ => data.extend(row[..w].iter().map(|&b| b as f64)),
        }
    }
    Image::new(w, h, data)
}

pub fn encode_png(img: &Image, depth: BitDepth) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Grayscale);
        let samples = img.as_slice().iter().map(|&v| quantize(v, depth));
        let raw: Vec<u8> = match depth {
            BitDepth::Eight => {
                enc.set_depth(png::BitDepth::Eight);
                samples.map(|s| s as u8).collect()
            }
            BitDepth::Sixteen => {
                enc.set_depth(png::BitDepth::Sixteen);
                samples.flat_map(|s| s.to_be_bytes()).collect()
            }
        };
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Malformed(format!("PNG: {e}")))?;
        writer
            .write_image_data(&raw)
            .map_err(|e| Error::Malformed(format!("PNG: {e}")))?;
    }
    Ok(out)
}
