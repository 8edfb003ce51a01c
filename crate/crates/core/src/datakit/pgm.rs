//! Binary PGM (P5, 8-bit) reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::scalar::{real, to_f64, Real};

/// Skips whitespace and `#` comment lines, returning the next token and the
/// offset just past it.
fn next_token(bytes: &[u8], mut pos: usize) -> Option<(usize, usize)> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    if pos >= bytes.len() {
        return None;
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    Some((start, pos))
}

fn parse_number(bytes: &[u8], pos: usize, path: &str) -> Result<(usize, usize)> {
    let (start, end) = next_token(bytes, pos)
        .ok_or_else(|| Error::format(path, pos as u64, "unexpected end of header"))?;
    let text = std::str::from_utf8(&bytes[start..end])
        .map_err(|_| Error::format(path, start as u64, "non-ASCII header token"))?;
    let value = text.parse::<usize>().map_err(|_| {
        Error::format(
            path,
            start as u64,
            format!("expected a number, got '{text}'"),
        )
    })?;
    Ok((value, end))
}

/// Reads a binary 8-bit PGM. Pixel value `v` maps to `v / maxval`, which is
/// exactly `v / 255` for the conventional maxval.
pub fn read_pgm<T: Real>(path: &Path) -> Result<Image<T>> {
    let name = path.display().to_string();
    let bytes = fs::read(path)?;
    let (start, end) =
        next_token(&bytes, 0).ok_or_else(|| Error::format(&name, 0, "empty file"))?;
    if &bytes[start..end] != b"P5" {
        return Err(Error::format(&name, start as u64, "expected P5 magic"));
    }
    let (width, pos) = parse_number(&bytes, end, &name)?;
    let (height, pos) = parse_number(&bytes, pos, &name)?;
    let (maxval, pos) = parse_number(&bytes, pos, &name)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            &name,
            pos as u64,
            format!("maxval {maxval} outside the 8-bit range"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(&name, pos as u64, "zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format(&name, pos as u64, "missing raster separator"));
    }
    let data_start = pos + 1;
    let expected = width * height;
    if bytes.len() < data_start + expected {
        return Err(Error::format(
            &name,
            bytes.len() as u64,
            format!(
                "truncated raster: have {} bytes, need {expected}",
                bytes.len() - data_start
            ),
        ));
    }
    let scale = 1.0 / maxval as f64;
    let data = bytes[data_start..data_start + expected]
        .iter()
        .map(|&b| real(b as f64 * scale))
        .collect();
    Image::from_vec(height, width, data)
}

/// Writes a binary 8-bit PGM with maxval 255; pixels are clamped to `[0, 1]`
/// and rounded.
pub fn write_pgm<T: Real>(path: &Path, image: &Image<T>) -> Result<()> {
    let mut out = Vec::with_capacity(32 + image.pixels());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", image.width(), image.height()).as_bytes());
    for &v in image.as_slice() {
        let clamped = to_f64(v).clamp(0.0, 1.0);
        out.push((clamped * 255.0).round() as u8);
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}
