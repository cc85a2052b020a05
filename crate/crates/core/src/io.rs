//! Image and flow file formats: binary PGM (8/16 bit), PNG, grayscale PFM
//! and Middlebury `.flo`.
//!
//! Intensities are kept in the `[0, 255]` range regardless of the file's bit
//! depth; colour input is reduced to luminance `0.299 R + 0.587 G + 0.114 B`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::scalar::Real;

const FLO_MAGIC: &[u8; 4] = b"PIEH";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pgm,
    Pfm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "png" => Ok(ImageFormat::Png),
            "pgm" => Ok(ImageFormat::Pgm),
            "pfm" => Ok(ImageFormat::Pfm),
            _ => Err(Error::format("image", format!("unsupported extension in {}", path.display()))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Pgm => "pgm",
            ImageFormat::Pfm => "pfm",
        }
    }
}

fn to_field<T: Real>(width: usize, height: usize, data: Vec<f64>) -> Result<ScalarField<T>> {
    ScalarField::new(width, height, data.into_iter().map(T::lit).collect())
}

fn quantize<T: Real>(v: T, max: f64) -> f64 {
    v.as_f64().clamp(0.0, max).round()
}

/// Reads an image, choosing the decoder from the file contents.
pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<ScalarField<T>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else if bytes.starts_with(b"Pf") {
        decode_pfm(&bytes)
    } else {
        decode_png(&bytes)
    }
}

/// Writes an image in the format implied by the extension; PNG and PGM
/// are 8-bit with values rounded and clamped to `[0, 255]`.
pub fn write_image<T: Real>(path: impl AsRef<Path>, f: &ScalarField<T>) -> Result<()> {
    let path = path.as_ref();
    let mut out = BufWriter::new(File::create(path)?);
    match ImageFormat::from_path(path)? {
        ImageFormat::Png => out.write_all(&encode_png(f)?)?,
        ImageFormat::Pgm => out.write_all(&encode_pgm(f, false))?,
        ImageFormat::Pfm => out.write_all(&encode_pfm(f))?,
    }
    out.flush()?;
    Ok(())
}

fn decode_png<T: Real>(bytes: &[u8]) -> Result<ScalarField<T>> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format("PNG", e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let luma = |[r, g, b]: [f64; 3]| 0.299 * r + 0.587 * g + 0.114 * b;
    // 8-bit gray decodes exactly; deeper images are rescaled to [0, 255]
    let data: Vec<f64> = match img {
        image::DynamicImage::ImageLuma8(g) => g.pixels().map(|p| f64::from(p.0[0])).collect(),
        image::DynamicImage::ImageLuma16(g) => g.pixels().map(|p| f64::from(p.0[0]) * 255.0 / 65535.0).collect(),
        image::DynamicImage::ImageRgb8(_) | image::DynamicImage::ImageRgba8(_) | image::DynamicImage::ImageLumaA8(_) => {
            img.to_rgb8().pixels().map(|p| luma(p.0.map(f64::from))).collect()
        }
        other => other
            .to_rgb16()
            .pixels()
            .map(|p| luma(p.0.map(f64::from)) * 255.0 / 65535.0)
            .collect(),
    };
    to_field(w, h, data)
}

fn encode_png<T: Real>(f: &ScalarField<T>) -> Result<Vec<u8>> {
    let buf: Vec<u8> = f.values().iter().map(|&v| quantize(v, 255.0) as u8).collect();
    let img = image::GrayImage::from_raw(f.width() as u32, f.height() as u32, buf)
        .ok_or_else(|| Error::format("PNG", "buffer size"))?;
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::format("PNG", e.to_string()))?;
    Ok(out.into_inner())
}

/// Splits a netpbm header into `count` whitespace-separated tokens
/// (skipping `#` comments) and returns them with the payload offset.
fn header_tokens(bytes: &[u8], count: usize, kind: &'static str) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::format(kind, "truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // exactly one whitespace byte separates the header from the payload
    Ok((tokens, i + 1))
}

fn parse_num<V: std::str::FromStr>(s: &str, kind: &'static str) -> Result<V> {
    s.parse().map_err(|_| Error::format(kind, format!("bad header field `{s}`")))
}

fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<ScalarField<T>> {
    let (tok, off) = header_tokens(bytes, 4, "PGM")?;
    if tok[0] != "P5" {
        return Err(Error::format("PGM", "expected binary P5"));
    }
    let w: usize = parse_num(&tok[1], "PGM")?;
    let h: usize = parse_num(&tok[2], "PGM")?;
    let maxval: u32 = parse_num(&tok[3], "PGM")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format("PGM", format!("maxval {maxval} out of range")));
    }
    let wide = maxval > 255;
    let need = w * h * if wide { 2 } else { 1 };
    let payload = bytes.get(off..off + need).ok_or_else(|| Error::format("PGM", "truncated pixel data"))?;
    let scale = 255.0 / maxval as f64;
    let data = if wide {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    } else {
        payload.iter().map(|&b| b as f64 * scale).collect()
    };
    to_field(w, h, data)
}

/// Binary PGM; `sixteen_bit` stores `round(v * 257)` with maxval 65535.
pub fn encode_pgm<T: Real>(f: &ScalarField<T>, sixteen_bit: bool) -> Vec<u8> {
    let maxval = if sixteen_bit { 65535 } else { 255 };
    let mut out = format!("P5\n{} {}\n{}\n", f.width(), f.height(), maxval).into_bytes();
    for &v in f.values() {
        if sixteen_bit {
            let q = (v.as_f64() * 257.0).clamp(0.0, 65535.0).round() as u16;
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(quantize(v, 255.0) as u8);
        }
    }
    out
}

fn decode_pfm<T: Real>(bytes: &[u8]) -> Result<ScalarField<T>> {
    let (tok, off) = header_tokens(bytes, 4, "PFM")?;
    if tok[0] != "Pf" {
        return Err(Error::format("PFM", "only grayscale `Pf` is supported"));
    }
    let w: usize = parse_num(&tok[1], "PFM")?;
    let h: usize = parse_num(&tok[2], "PFM")?;
    let scale: f64 = parse_num(&tok[3], "PFM")?;
    let payload = bytes
        .get(off..off + 4 * w * h)
        .ok_or_else(|| Error::format("PFM", "truncated pixel data"))?;
    let little = scale < 0.0;
    let mut data = vec![0.0; w * h];
    // rows are stored bottom to top
    for (k, c) in payload.chunks_exact(4).enumerate() {
        let raw = [c[0], c[1], c[2], c[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, yr) = (k % w, k / w);
        data[(h - 1 - yr) * w + x] = v as f64;
    }
    to_field(w, h, data)
}

/// Little-endian grayscale PFM (values stored as `f32`).
pub fn encode_pfm<T: Real>(f: &ScalarField<T>) -> Vec<u8> {
    let (w, h) = f.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    for y in (0..h).rev() {
        for &v in f.row(y) {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    out
}

/// Writes a Middlebury `.flo` file.
pub fn write_flo<T: Real>(path: impl AsRef<Path>, b: &VectorField<T>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&encode_flo(b))?;
    out.flush()?;
    Ok(())
}

pub fn encode_flo<T: Real>(b: &VectorField<T>) -> Vec<u8> {
    let (w, h) = b.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(FLO_MAGIC);
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for (&v, &ww) in b.v().iter().zip(b.w()) {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        out.extend_from_slice(&(ww.as_f64() as f32).to_le_bytes());
    }
    out
}

/// Reads a Middlebury `.flo` file. The boundary ring is zeroed on load.
pub fn read_flo<T: Real>(path: impl AsRef<Path>) -> Result<VectorField<T>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_flo(&bytes)
}

pub fn decode_flo<T: Real>(bytes: &[u8]) -> Result<VectorField<T>> {
    if bytes.len() < 12 || &bytes[..4] != FLO_MAGIC {
        return Err(Error::format("flo", "missing PIEH magic"));
    }
    let int = |o: usize| i32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let (w, h) = (int(4), int(8));
    if w <= 0 || h <= 0 {
        return Err(Error::format("flo", format!("invalid size {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let payload = bytes
        .get(12..12 + 8 * w * h)
        .ok_or_else(|| Error::format("flo", "truncated flow data"))?;
    let mut v = Vec::with_capacity(w * h);
    let mut ww = Vec::with_capacity(w * h);
    for c in payload.chunks_exact(8) {
        v.push(T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64));
        ww.push(T::lit(f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64));
    }
    VectorField::new(w, h, v, ww)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField<f64> {
        ScalarField::from_fn(9, 6, |x, y| (x * 27 + y * 5) as f64 % 256.0 + 0.25).unwrap()
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let f = sample();
        let back: ScalarField<f64> = decode_pgm(&encode_pgm(&f, false)).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 0.5);
        }
        let back16: ScalarField<f64> = decode_pgm(&encode_pgm(&f, true)).unwrap();
        for (a, b) in f.values().iter().zip(back16.values()) {
            assert!((a - b).abs() <= 0.5 / 257.0 + 1e-12);
        }
    }

    #[test]
    fn pgm_header_comments() {
        let mut bytes = b"P5\n# made by hand\n4 4\n255\n".to_vec();
        bytes.extend(0u8..16);
        let f: ScalarField<f64> = decode_pgm(&bytes).unwrap();
        assert_eq!(f.get(3, 3), 15.0);
        assert!(decode_pgm::<f64>(&bytes[..20]).is_err());
    }

    #[test]
    fn png_round_trip() {
        let f = sample();
        let back: ScalarField<f64> = decode_png(&encode_png(&f).unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn pfm_is_lossless_for_f32_values() {
        let f = sample();
        let back: ScalarField<f64> = decode_pfm(&encode_pfm(&f)).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn flo_round_trip_and_layout() {
        let b = VectorField::from_fn(6, 5, |x, y| (x as f64 * 0.5, -(y as f64))).unwrap();
        let bytes = encode_flo(&b);
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(bytes.len(), 12 + 8 * 30);
        assert_eq!(i32::from_le_bytes(bytes[4..8].try_into().unwrap()), 6);
        let back: VectorField<f64> = decode_flo(&bytes).unwrap();
        assert_eq!(b, back);
        assert!(decode_flo::<f64>(b"PIEX\0\0\0\0\0\0\0\0").is_err());
    }

    #[test]
    fn extension_dispatch() {
        assert_eq!(ImageFormat::from_path(Path::new("a/b.PNG")).unwrap(), ImageFormat::Png);
        assert!(ImageFormat::from_path(Path::new("x.jpg")).is_err());
    }
}
