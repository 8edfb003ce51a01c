//! PNG loading with grayscale conversion.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::scalar::{real, Real};

/// Loads a PNG as a grayscale image in `[0, 1]`. Color inputs are reduced
/// with BT.601 luma weights.
pub fn read_png_gray<T: Real>(path: &Path) -> Result<Image<T>> {
    let name = path.display().to_string();
    let file = fs::File::open(path)?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(&name, 0, format!("png header: {e}")))?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(&name, 0, format!("png frame: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];

    let to_unit = |v: u8| v as f64 / 255.0;
    let to_unit16 = |hi: u8, lo: u8| u16::from_be_bytes([hi, lo]) as f64 / 65535.0;
    let luma = |r: f64, g: f64, b: f64| 0.299 * r + 0.587 * g + 0.114 * b;

    use png::{BitDepth, ColorType};
    let mut pixels = Vec::with_capacity(w * h);
    match (info.color_type, info.bit_depth) {
        (ColorType::Grayscale, BitDepth::Eight) => {
            pixels.extend(data.iter().map(|&v| to_unit(v)));
        }
        (ColorType::Grayscale, BitDepth::Sixteen) => {
            pixels.extend(data.chunks_exact(2).map(|c| to_unit16(c[0], c[1])));
        }
        (ColorType::GrayscaleAlpha, BitDepth::Eight) => {
            pixels.extend(data.chunks_exact(2).map(|c| to_unit(c[0])));
        }
        (ColorType::Rgb, BitDepth::Eight) => {
            pixels.extend(
                data.chunks_exact(3)
                    .map(|c| luma(to_unit(c[0]), to_unit(c[1]), to_unit(c[2]))),
            );
        }
        (ColorType::Rgba, BitDepth::Eight) => {
            pixels.extend(
                data.chunks_exact(4)
                    .map(|c| luma(to_unit(c[0]), to_unit(c[1]), to_unit(c[2]))),
            );
        }
        (ct, bd) => {
            return Err(Error::format(
                &name,
                0,
                format!("unsupported png layout {ct:?}/{bd:?}"),
            ));
        }
    }
    if pixels.len() != w * h {
        return Err(Error::format(&name, 0, "pixel count mismatch"));
    }
    Image::from_vec(h, w, pixels.into_iter().map(|v| real(v)).collect())
}
