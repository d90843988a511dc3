use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::standardize::check_dim;
use super::FeatureError;

pub const DEFAULT_VARIANCE_RATIO: f64 = 0.95;

/// Principal-component projection onto the smallest leading subspace that
/// explains at least the requested share of the training variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Retained unit eigenvectors, strongest first.
    pub components: Vec<Vec<f64>>,
    /// All eigenvalues of the training covariance, descending.
    pub eigenvalues: Vec<f64>,
    pub cumulative_ratio: f64,
}

/// Smallest `m` whose leading eigenvalues reach `ratio` of the total.
pub fn retained_dimension(eigenvalues_desc: &[f64], ratio: f64) -> (usize, f64) {
    let total: f64 = eigenvalues_desc.iter().sum();
    if total <= 0.0 {
        return (1, 1.0);
    }
    let mut acc = 0.0;
    for (i, &l) in eigenvalues_desc.iter().enumerate() {
        acc += l;
        if acc / total >= ratio {
            return (i + 1, acc / total);
        }
    }
    (eigenvalues_desc.len(), 1.0)
}

impl Pca {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R], ratio: f64) -> Result<Self, FeatureError> {
        if rows.len() < 2 {
            return Err(FeatureError::TooFewVectors { needed: 2, got: rows.len() });
        }
        let d = rows[0].as_ref().len();
        let n = rows.len();
        let mut mean = vec![0.0; d];
        for r in rows {
            mean.iter_mut().zip(check_dim(r.as_ref(), d)?).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, d, |i, j| rows[i].as_ref()[j] - mean[j]);
        let cov = (centered.transpose() * &centered) / n as f64;
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let (m, cumulative_ratio) = retained_dimension(&eigenvalues, ratio);
        let components = order[..m]
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                let pivot = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
                if pivot < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Ok(Self { mean, components, eigenvalues, cumulative_ratio })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let v = check_dim(v, self.input_dim())?;
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(v).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect())
    }

    pub fn reconstruct(&self, y: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let y = check_dim(y, self.output_dim())?;
        let mut out = self.mean.clone();
        for (c, &coef) in self.components.iter().zip(y) {
            out.iter_mut().zip(c).for_each(|(o, w)| *o += coef * w);
        }
        Ok(out)
    }
}
