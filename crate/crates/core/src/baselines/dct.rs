//! Orthonormal 2-D type-II DCT and its inverse.

use crate::numerics::Image;
use crate::scalar::{real, Real};

/// Precomputed orthonormal DCT-II basis for an `n1 × n2` grid. The forward
/// transform is `S = C1 · X · C2ᵀ` with `C[k][n] = a(k)·cos(π(2n+1)k / 2N)`,
/// `a(0) = √(1/N)`, `a(k>0) = √(2/N)`; the inverse is `X = C1ᵀ · S · C2`.
#[derive(Debug, Clone)]
pub struct Dct2<T> {
    n1: usize,
    n2: usize,
    basis_rows: Vec<T>, // n1 × n1
    basis_cols: Vec<T>, // n2 × n2
}

fn dct_matrix<T: Real>(n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for k in 0..n {
        let amp = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for j in 0..n {
            let angle = std::f64::consts::PI * (2.0 * j as f64 + 1.0) * k as f64 / (2.0 * n as f64);
            c[k * n + j] = real(amp * angle.cos());
        }
    }
    c
}

impl<T: Real> Dct2<T> {
    pub fn new(n1: usize, n2: usize) -> Self {
        Dct2 {
            n1,
            n2,
            basis_rows: dct_matrix(n1),
            basis_cols: dct_matrix(n2),
        }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    fn check(&self, image: &Image<T>) {
        assert_eq!(
            (image.height(), image.width()),
            (self.n1, self.n2),
            "image shape does not match DCT plan"
        );
    }

    /// Forward transform: image to coefficient grid.
    pub fn forward(&self, image: &Image<T>) -> Image<T> {
        self.check(image);
        self.apply(image, false)
    }

    /// Inverse transform: coefficient grid to image.
    pub fn inverse(&self, coeffs: &Image<T>) -> Image<T> {
        self.check(coeffs);
        self.apply(coeffs, true)
    }

    fn apply(&self, input: &Image<T>, inverse: bool) -> Image<T> {
        let (n1, n2) = (self.n1, self.n2);
        // Columns first: tmp = C2·xᵀ per row, i.e. tmp[r][k] = Σ_j M2 x[r][j].
        let mut tmp = vec![T::zero(); n1 * n2];
        for r in 0..n1 {
            let row = input.row(r);
            for k in 0..n2 {
                let mut acc = T::zero();
                if inverse {
                    for (j, &x) in row.iter().enumerate() {
                        acc += self.basis_cols[j * n2 + k] * x; // C2ᵀ
                    }
                } else {
                    let basis_row = &self.basis_cols[k * n2..(k + 1) * n2]; // C2
                    for (&c, &x) in basis_row.iter().zip(row) {
                        acc += c * x;
                    }
                }
                tmp[r * n2 + k] = acc;
            }
        }
        // Then rows: out[k][c] = Σ_r M1 tmp[r][c].
        let mut out = vec![T::zero(); n1 * n2];
        for k in 0..n1 {
            for c in 0..n2 {
                let mut acc = T::zero();
                for r in 0..n1 {
                    let m = if inverse {
                        self.basis_rows[r * n1 + k] // C1ᵀ
                    } else {
                        self.basis_rows[k * n1 + r] // C1
                    };
                    acc += m * tmp[r * n2 + c];
                }
                out[k * n2 + c] = acc;
            }
        }
        Image::from_vec(n1, n2, out).expect("shape preserved")
    }
}

/// One-shot forward 2-D DCT (builds a plan; solvers should hold a [`Dct2`]).
pub fn dct2<T: Real>(image: &Image<T>) -> Image<T> {
    Dct2::new(image.height(), image.width()).forward(image)
}

/// One-shot inverse 2-D DCT.
pub fn idct2<T: Real>(coeffs: &Image<T>) -> Image<T> {
    Dct2::new(coeffs.height(), coeffs.width()).inverse(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_image(seed: u64, h: usize, w: usize) -> Image<f64> {
        let mut rng = Rng::new(seed);
        Image::from_vec(h, w, (0..h * w).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn constant_image_is_pure_dc() {
        let c = 0.7;
        let img = Image::from_vec(4, 6, vec![c; 24]).unwrap();
        let coeffs = dct2(&img);
        let dc = coeffs.get(0, 0);
        assert!((dc - c * 24f64.sqrt()).abs() < 1e-12, "dc {dc}");
        for (i, &v) in coeffs.as_slice().iter().enumerate() {
            if i != 0 {
                assert!(v.abs() < 1e-12, "coefficient {i} = {v}");
            }
        }
    }

    #[test]
    fn roundtrip() {
        let img = random_image(3, 8, 8);
        let back = idct2(&dct2(&img));
        for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let img = random_image(4, 7, 5);
        let coeffs = dct2(&img);
        let e_img: f64 = img.norm_sq();
        let e_coef: f64 = coeffs.norm_sq();
        assert!((e_img - e_coef).abs() < 1e-10 * e_img.max(1.0));
    }

    #[test]
    fn rectangular_shapes_roundtrip() {
        for (h, w) in [(1, 8), (5, 3), (16, 2)] {
            let img = random_image(h as u64 * 100 + w as u64, h, w);
            let back = idct2(&dct2(&img));
            for (a, b) in back.as_slice().iter().zip(img.as_slice()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
