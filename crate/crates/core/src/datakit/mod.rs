//! Image corpus ingestion: grayscale loading, patch extraction, train/test
//! manifests, and synthetic oracle instances.
//!
//! Supported inputs are binary 8-bit PGM (self-contained, used by the
//! bundled corpus) and PNG. Every emitted pixel lies in `[0, 1]`.

pub mod pgm;
mod pngio;
mod synthetic;

mod manifest;

pub use manifest::{
    build_manifest, crop_patches, extract_patch, patch_grid, CorpusManifest, PatchRef, Split,
};
pub use pgm::{read_pgm, write_pgm};
pub use pngio::read_png_gray;
pub use synthetic::{dct_sparse_signal, make_synthetic, SyntheticKind, SyntheticSpec};

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::scalar::Real;

/// Loads an image as grayscale in `[0, 1]`, dispatching on the file
/// extension.
pub fn load_grayscale<T: Real>(path: &Path) -> Result<Image<T>> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("pgm") => read_pgm(path),
        Some("png") => read_png_gray(path),
        other => Err(Error::format(
            path.display().to_string(),
            0,
            format!("unsupported format {other:?}, expected pgm or png"),
        )),
    }
}
