//! Corpus manifests: image-level train/test splits over patch grids.
//!
//! The split happens at the source-image level, never per patch, so no
//! source contributes to both splits and near-duplicate patches cannot leak
//! across them. The manifest file is line-oriented text: a header line
//! `#dics-manifest<TAB>1<TAB>patch_h<TAB>patch_w<TAB>seed` followed by one
//! record per patch, `split<TAB>path<TAB>row<TAB>col`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::load_grayscale;
use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::rng::Rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchRef {
    pub split: Split,
    pub path: PathBuf,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub patch_h: usize,
    pub patch_w: usize,
    pub seed: u64,
    pub entries: Vec<PatchRef>,
}

/// Top-left corners of the full patch grid at the given stride; partial
/// border patches are discarded.
pub fn patch_grid(
    h: usize,
    w: usize,
    patch_h: usize,
    patch_w: usize,
    stride: usize,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if patch_h == 0 || patch_w == 0 || stride == 0 || h < patch_h || w < patch_w {
        return out;
    }
    let mut r = 0;
    while r + patch_h <= h {
        let mut c = 0;
        while c + patch_w <= w {
            out.push((r, c));
            c += stride;
        }
        r += stride;
    }
    out
}

/// Extracts the patch with top-left corner `(row, col)`.
pub fn extract_patch<T: Real>(
    image: &Image<T>,
    row: usize,
    col: usize,
    patch_h: usize,
    patch_w: usize,
) -> Result<Image<T>> {
    if row + patch_h > image.height() || col + patch_w > image.width() {
        return Err(Error::dimension(format!(
            "patch at ({row},{col}) of size {patch_h}x{patch_w} exceeds image {}x{}",
            image.height(),
            image.width()
        )));
    }
    let mut out = Image::zeros(patch_h, patch_w);
    for r in 0..patch_h {
        let src = &image.row(row + r)[col..col + patch_w];
        for (c, &v) in src.iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// All patches of an image on the row-major stride grid.
pub fn crop_patches<T: Real>(
    image: &Image<T>,
    patch_h: usize,
    patch_w: usize,
    stride: usize,
) -> Vec<Image<T>> {
    patch_grid(image.height(), image.width(), patch_h, patch_w, stride)
        .into_iter()
        .map(|(r, c)| extract_patch(image, r, c, patch_h, patch_w).expect("grid is in bounds"))
        .collect()
}

fn is_supported(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "pgm" || e == "png"
    )
}

/// Builds a manifest over every supported image in `dir`: sources are
/// sorted by name, shuffled by `seed`, split at the image level by
/// `split_fraction`, then patched on a `stride` grid. Deterministic for
/// fixed directory contents and arguments.
pub fn build_manifest(
    dir: &Path,
    patch_h: usize,
    patch_w: usize,
    stride: usize,
    split_fraction: f64,
    seed: u64,
) -> Result<CorpusManifest> {
    if !(0.0..=1.0).contains(&split_fraction) {
        return Err(Error::domain("split fraction must be in [0, 1]"));
    }
    let mut sources: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported(p))
        .collect();
    sources.sort();
    if sources.len() < 2 {
        return Err(Error::domain(format!(
            "cannot form both splits: found {} readable images in {}, need at least 2",
            sources.len(),
            dir.display()
        )));
    }

    let mut rng = Rng::new(seed);
    rng.shuffle(&mut sources);
    let count = sources.len();
    let n_train = ((split_fraction * count as f64).round() as usize).clamp(1, count - 1);

    let mut entries = Vec::new();
    for (i, path) in sources.iter().enumerate() {
        let split = if i < n_train {
            Split::Train
        } else {
            Split::Test
        };
        let image: Image<f64> = load_grayscale(path)?;
        for (row, col) in patch_grid(image.height(), image.width(), patch_h, patch_w, stride) {
            entries.push(PatchRef {
                split,
                path: path.clone(),
                row,
                col,
            });
        }
    }
    Ok(CorpusManifest {
        patch_h,
        patch_w,
        seed,
        entries,
    })
}

impl CorpusManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!(
            "#dics-manifest\t1\t{}\t{}\t{}\n",
            self.patch_h, self.patch_w, self.seed
        ));
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.split.as_str(),
                e.path.display(),
                e.row,
                e.col
            ));
        }
        let mut file = fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format(&name, 0, "empty manifest"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 5 || fields[0] != "#dics-manifest" || fields[1] != "1" {
            return Err(Error::format(&name, 0, "bad manifest header"));
        }
        let parse = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::format(&name, 0, format!("bad {what} '{s}'")))
        };
        let patch_h = parse(fields[2], "patch_h")? as usize;
        let patch_w = parse(fields[3], "patch_w")? as usize;
        let seed = parse(fields[4], "seed")?;

        let mut entries = Vec::new();
        let mut offset = header.len() as u64 + 1;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::format(
                    &name,
                    offset,
                    "expected 4 tab-separated fields",
                ));
            }
            let split = match cols[0] {
                "train" => Split::Train,
                "test" => Split::Test,
                other => {
                    return Err(Error::format(
                        &name,
                        offset,
                        format!("unknown split '{other}'"),
                    ))
                }
            };
            entries.push(PatchRef {
                split,
                path: PathBuf::from(cols[1]),
                row: parse(cols[2], "row")? as usize,
                col: parse(cols[3], "col")? as usize,
            });
            offset += line.len() as u64 + 1;
        }
        Ok(CorpusManifest {
            patch_h,
            patch_w,
            seed,
            entries,
        })
    }

    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &PatchRef> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Loads every patch of a split, caching each source image once.
    pub fn load_split_images<T: Real>(&self, split: Split) -> Result<Vec<Image<T>>> {
        let mut cache: BTreeMap<PathBuf, Image<T>> = BTreeMap::new();
        let mut out = Vec::new();
        for e in self.split_entries(split) {
            if !cache.contains_key(&e.path) {
                cache.insert(e.path.clone(), load_grayscale(&e.path)?);
            }
            let image = &cache[&e.path];
            out.push(extract_patch(
                image,
                e.row,
                e.col,
                self.patch_h,
                self.patch_w,
            )?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datakit::pgm::write_pgm;
    use std::collections::BTreeSet;

    fn fill_dir(dir: &Path, count: usize, h: usize, w: usize) {
        for i in 0..count {
            let mut img = Image::<f64>::zeros(h, w);
            for (j, v) in img.as_mut_slice().iter_mut().enumerate() {
                *v = ((i * 31 + j) % 256) as f64 / 255.0;
            }
            write_pgm(&dir.join(format!("img{i:02}.pgm")), &img).unwrap();
        }
    }

    #[test]
    fn patch_grid_arithmetic() {
        // 64x64 image, 64x64 patch = exactly one patch.
        assert_eq!(patch_grid(64, 64, 64, 64, 64), vec![(0, 0)]);
        // 128x128, 64x64, stride 64 = 4 tiles.
        assert_eq!(
            patch_grid(128, 128, 64, 64, 64),
            vec![(0, 0), (0, 64), (64, 0), (64, 64)]
        );
        // 100x100, 64x64, stride 64 = 1 patch, borders discarded.
        assert_eq!(patch_grid(100, 100, 64, 64, 64), vec![(0, 0)]);
        // Image smaller than the patch: empty, not an error.
        assert!(patch_grid(32, 32, 64, 64, 64).is_empty());
    }

    #[test]
    fn crop_patches_single_patch_equals_image() {
        let img = Image::from_vec(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let patches = crop_patches(&img, 2, 2, 2);
        assert_eq!(patches, vec![img]);
    }

    #[test]
    fn split_fraction_halves_sources() {
        let dir = tempfile::tempdir().unwrap();
        fill_dir(dir.path(), 10, 16, 16);
        let manifest = build_manifest(dir.path(), 8, 8, 8, 0.5, 7).unwrap();
        let train: BTreeSet<_> = manifest
            .split_entries(Split::Train)
            .map(|e| &e.path)
            .collect();
        let test: BTreeSet<_> = manifest
            .split_entries(Split::Test)
            .map(|e| &e.path)
            .collect();
        assert_eq!(train.len(), 5);
        assert_eq!(test.len(), 5);
    }

    #[test]
    fn splits_never_share_sources() {
        let dir = tempfile::tempdir().unwrap();
        fill_dir(dir.path(), 7, 20, 20);
        let manifest = build_manifest(dir.path(), 8, 8, 4, 0.6, 3).unwrap();
        let train: BTreeSet<_> = manifest
            .split_entries(Split::Train)
            .map(|e| &e.path)
            .collect();
        let test: BTreeSet<_> = manifest
            .split_entries(Split::Test)
            .map(|e| &e.path)
            .collect();
        assert!(train.intersection(&test).next().is_none());
        assert!(!train.is_empty() && !test.is_empty());
    }

    #[test]
    fn manifest_bytes_reproduce() {
        let dir = tempfile::tempdir().unwrap();
        fill_dir(dir.path(), 4, 16, 16);
        let a = build_manifest(dir.path(), 8, 8, 8, 0.5, 9).unwrap();
        let b = build_manifest(dir.path(), 8, 8, 8, 0.5, 9).unwrap();
        let (pa, pb) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
        a.save(&pa).unwrap();
        b.save(&pb).unwrap();
        assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        fill_dir(dir.path(), 3, 16, 16);
        let manifest = build_manifest(dir.path(), 8, 8, 8, 0.5, 1).unwrap();
        let path = dir.path().join("m.tsv");
        manifest.save(&path).unwrap();
        let back = CorpusManifest::load(&path).unwrap();
        assert_eq!(manifest, back);
    }

    #[test]
    fn too_few_images_is_domain_error() {
        let dir = tempfile::tempdir().unwrap();
        fill_dir(dir.path(), 1, 16, 16);
        let err = build_manifest(dir.path(), 8, 8, 8, 0.5, 1).unwrap_err();
        assert!(err.to_string().contains("cannot form both splits"));
    }

    #[test]
    fn loaded_patches_match_grid() {
        let dir = tempfile::tempdir().unwrap();
        fill_dir(dir.path(), 2, 16, 16);
        let manifest = build_manifest(dir.path(), 8, 8, 8, 0.5, 1).unwrap();
        let train: Vec<Image<f64>> = manifest.load_split_images(Split::Train).unwrap();
        assert_eq!(train.len(), 4); // one 16x16 source, stride-8 grid of 8x8
        for p in &train {
            assert_eq!((p.height(), p.width()), (8, 8));
        }
    }
}
