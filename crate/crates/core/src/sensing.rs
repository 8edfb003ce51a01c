//! Measurement ensembles, the forward map `y = Φx`, the adjoint proxy
//! `x̃ = Φᵀy`, and measurement-noise injection.
//!
//! One dense matrix senses the whole image; there is deliberately no
//! block-diagonal mode. Entries are i.i.d. `N(0, 1/m)` so that row energy is
//! normalized (`‖Φx‖ ≈ ‖x‖`) and the standard AMP threshold tuning applies.
//!
//! Ensembles persist to a binary file: magic `DICS`, version, `m`, `n`,
//! seed, the generator identifier, then the `m·n` entries as 64-bit
//! little-endian floats in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Image;
use crate::rng::{Rng, GENERATOR_ID};
use crate::scalar::{real, to_f64, Real};

const MAGIC: &[u8; 4] = b"DICS";
const VERSION: u32 = 1;

/// Dense `m × n` measurement matrix plus the recipe that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEnsemble<T> {
    m: usize,
    n: usize,
    seed: u64,
    entries: Vec<T>,
}

/// Measurement vector `y`, tagged with the SNR of any noise applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector<T> {
    pub values: Vec<T>,
    /// Noise level in dB if noise was injected; `None` for noiseless data.
    pub snr_db: Option<f64>,
}

impl<T: Real> MeasurementVector<T> {
    pub fn noiseless(values: Vec<T>) -> Self {
        MeasurementVector {
            values,
            snr_db: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }
}

impl<T: Real> MeasurementEnsemble<T> {
    /// Gaussian ensemble with i.i.d. `N(0, 1/m)` entries, reproducible from
    /// `(m, n, seed)`.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain("ensemble dimensions must be positive"));
        }
        if m > n {
            return Err(Error::domain(format!(
                "undersampled regime requires m <= n, got m={m}, n={n}"
            )));
        }
        let mut rng = Rng::new(seed);
        let scale = (1.0 / m as f64).sqrt();
        let entries = (0..m * n).map(|_| real(rng.normal() * scale)).collect();
        Ok(MeasurementEnsemble {
            m,
            n,
            seed,
            entries,
        })
    }

    /// Identity matrix (m = n); a debug/test ensemble.
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![T::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = T::one();
        }
        MeasurementEnsemble {
            m: n,
            n,
            seed: 0,
            entries,
        }
    }

    /// Gaussian ensemble with rows orthonormalized by modified Gram-Schmidt;
    /// a debug ensemble for which `ΦΦᵀ = I`, so `proxy ∘ measure` is an
    /// orthogonal projection (the identity when `m = n`).
    pub fn orthonormalized(m: usize, n: usize, seed: u64) -> Result<Self> {
        let mut ens = Self::gaussian(m, n, seed)?;
        for i in 0..m {
            for j in 0..i {
                let dot: T = {
                    let (ri, rj) = (ens.row(i), ens.row(j));
                    ri.iter().zip(rj).map(|(&a, &b)| a * b).sum()
                };
                let (head, tail) = ens.entries.split_at_mut(i * n);
                let rj = &head[j * n..j * n + n];
                let ri = &mut tail[..n];
                for (a, &b) in ri.iter_mut().zip(rj) {
                    *a -= dot * b;
                }
            }
            let norm = {
                let ri = ens.row(i);
                ri.iter().map(|&a| a * a).sum::<T>().sqrt()
            };
            if norm < real(1e-12) {
                return Err(Error::numeric("degenerate row while orthonormalizing"));
            }
            for a in &mut ens.entries[i * n..(i + 1) * n] {
                *a /= norm;
            }
        }
        Ok(ens)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    /// Forward map `y = Φx` on the row-major flattening of the image.
    pub fn measure(&self, x: &Image<T>) -> Result<MeasurementVector<T>> {
        if x.pixels() != self.n {
            return Err(Error::dimension(format!(
                "image has {} pixels, ensemble expects n={}",
                x.pixels(),
                self.n
            )));
        }
        let xs = x.as_slice();
        let values = (0..self.m)
            .map(|i| self.row(i).iter().zip(xs).map(|(&a, &b)| a * b).sum())
            .collect();
        Ok(MeasurementVector::noiseless(values))
    }

    /// Adjoint proxy `x̃ = Φᵀy`, reshaped to `h × w` row-major. This is the
    /// input the recovery network sees.
    pub fn proxy(&self, y: &MeasurementVector<T>, h: usize, w: usize) -> Result<Image<T>> {
        if y.len() != self.m {
            return Err(Error::dimension(format!(
                "measurement vector has {} entries, ensemble expects m={}",
                y.len(),
                self.m
            )));
        }
        if h * w != self.n {
            return Err(Error::dimension(format!(
                "target shape {h}x{w} does not match n={}",
                self.n
            )));
        }
        let mut out = vec![T::zero(); self.n];
        for i in 0..self.m {
            let yi = y.values[i];
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Image::from_vec(h, w, out)
    }

    /// Converts the ensemble into a different scalar type (through `f64`).
    pub fn cast<U: Real>(&self) -> MeasurementEnsemble<U> {
        MeasurementEnsemble {
            m: self.m,
            n: self.n,
            seed: self.seed,
            entries: self.entries.iter().map(|&v| real(to_f64(v))).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(64 + self.entries.len() * 8);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.m as u64).to_le_bytes());
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        let gen_id = GENERATOR_ID.as_bytes();
        buf.extend_from_slice(&(gen_id.len() as u32).to_le_bytes());
        buf.extend_from_slice(gen_id);
        for &v in &self.entries {
            buf.extend_from_slice(&to_f64(v).to_le_bytes());
        }
        let mut file = fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let bytes = fs::read(path)?;
        let mut cursor = 0usize;
        let take = |cursor: &mut usize, len: usize| -> Result<&[u8]> {
            if *cursor + len > bytes.len() {
                return Err(Error::format(
                    &name,
                    *cursor as u64,
                    format!("truncated: wanted {len} bytes"),
                ));
            }
            let slice = &bytes[*cursor..*cursor + len];
            *cursor += len;
            Ok(slice)
        };
        if take(&mut cursor, 4)? != MAGIC {
            return Err(Error::format(&name, 0, "bad magic, expected DICS"));
        }
        let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(
                &name,
                4,
                format!("unsupported version {version}"),
            ));
        }
        let m = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        let n = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
        let id_len = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
        let id_off = cursor as u64;
        let gen_id = std::str::from_utf8(take(&mut cursor, id_len)?)
            .map_err(|_| Error::format(&name, id_off, "generator id is not UTF-8"))?;
        if gen_id != GENERATOR_ID {
            return Err(Error::format(
                &name,
                id_off,
                format!("generator '{gen_id}' does not match '{GENERATOR_ID}'"),
            ));
        }
        let data_off = cursor as u64;
        let body = take(&mut cursor, m * n * 8)?;
        if cursor != bytes.len() {
            return Err(Error::format(&name, cursor as u64, "trailing bytes"));
        }
        let entries = body
            .chunks_exact(8)
            .map(|c| real(f64::from_le_bytes(c.try_into().unwrap())))
            .collect::<Vec<T>>();
        if entries.len() != m * n {
            return Err(Error::format(&name, data_off, "entry count mismatch"));
        }
        Ok(MeasurementEnsemble {
            m,
            n,
            seed,
            entries,
        })
    }
}

/// Adds measurement noise: `y + w` with `w` i.i.d. zero-mean Gaussian scaled
/// so that `10·log10(‖y‖² / E‖w‖²) = snr_db`. Positive infinity is the
/// noiseless sentinel and returns `y` unchanged.
pub fn add_noise<T: Real>(
    y: &MeasurementVector<T>,
    snr_db: f64,
    seed: u64,
) -> Result<MeasurementVector<T>> {
    if snr_db == f64::INFINITY {
        return Ok(y.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::domain(format!(
            "snr of {snr_db} dB is not meaningful"
        )));
    }
    let energy = to_f64(y.norm_sq());
    if energy <= 0.0 {
        return Err(Error::domain("cannot scale noise to a zero-energy signal"));
    }
    let m = y.len();
    // E‖w‖² = m·σ², so σ² = ‖y‖² / (m·10^(snr/10)).
    let sigma = (energy / (m as f64 * 10f64.powf(snr_db / 10.0))).sqrt();
    let mut rng = Rng::new(seed);
    let values = y
        .values
        .iter()
        .map(|&v| v + real::<T>(sigma * rng.normal()))
        .collect();
    Ok(MeasurementVector {
        values,
        snr_db: Some(snr_db),
    })
}
