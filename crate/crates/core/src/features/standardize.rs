use serde::{Deserialize, Serialize};

use super::FeatureError;

pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension z-scoring with population statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, FeatureError> {
        let first = rows.first().ok_or(FeatureError::TooFewVectors { needed: 1, got: 0 })?;
        let d = first.as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            let r = check_dim(r.as_ref(), d)?;
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, FeatureError> {
        let v = check_dim(v, self.dim())?;
        Ok(v.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect())
    }

    pub fn apply_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>, FeatureError> {
        rows.iter().map(|r| self.apply(r.as_ref())).collect()
    }
}

pub(crate) fn check_dim(v: &[f64], d: usize) -> Result<&[f64], FeatureError> {
    if v.len() == d {
        Ok(v)
    } else {
        Err(FeatureError::DimMismatch { expected: d, got: v.len() })
    }
}
