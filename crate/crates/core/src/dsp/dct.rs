use std::f64::consts::PI;

use super::{DspError, Matrix};

/// `n_out x n` orthonormal DCT-II basis.
pub fn dct_ii_matrix(n: usize, n_out: usize) -> Matrix {
    let mut d = Matrix::zeros(n_out, n);
    let nf = n as f64;
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for (i, v) in d.row_mut(k).iter_mut().enumerate() {
            *v = scale * (PI * (i as f64 + 0.5) * k as f64 / nf).cos();
        }
    }
    d
}

/// First `n_out` coefficients of the orthonormal DCT-II of `x`.
pub fn dct_ii_orthonormal(x: &[f64], n_out: usize) -> Result<Vec<f64>, DspError> {
    if n_out > x.len() {
        return Err(DspError::TooManyCoefficients { requested: n_out, available: x.len() });
    }
    let d = dct_ii_matrix(x.len(), n_out);
    Ok(d.iter_rows().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Inverse of the orthonormal DCT-II (a scaled DCT-III), written out directly.
    fn idct(c: &[f64]) -> Vec<f64> {
        let n = c.len() as f64;
        (0..c.len())
            .map(|i| {
                c[0] / n.sqrt()
                    + (1..c.len())
                        .map(|k| (2.0 / n).sqrt() * c[k] * (PI * (i as f64 + 0.5) * k as f64 / n).cos())
                        .sum::<f64>()
            })
            .collect()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn constant_vector() {
        let c = dct_ii_orthonormal(&[2.5; 16], 16).unwrap();
        assert!((c[0] - 2.5 * 4.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn inverse_reproduces_input() {
        let x = pseudo_random(64, 3);
        let back = idct(&dct_ii_orthonormal(&x, 64).unwrap());
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval() {
        let x = pseudo_random(64, 11);
        let c = dct_ii_orthonormal(&x, 64).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ec: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((ex - ec).abs() < 1e-9);
    }

    #[test]
    fn too_many_coefficients() {
        assert_eq!(
            dct_ii_orthonormal(&[1.0; 4], 5),
            Err(DspError::TooManyCoefficients { requested: 5, available: 4 })
        );
    }
}
