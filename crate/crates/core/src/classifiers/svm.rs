use serde::{Deserialize, Serialize};

use super::{check_rows, ClassifierError};

pub const DEFAULT_TOL: f64 = 1e-3;
/// Curvature substitute when the two-point kernel block is not positive.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    /// Upper bound on SMO pair updates; `None` picks max(10^7, 100·n).
    pub max_iter: Option<usize>,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self { c, gamma, tol: DEFAULT_TOL, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// α_i·y_i for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Pairwise squared Euclidean distances, shared by every γ of a grid.
#[derive(Debug, Clone)]
pub struct SquaredDistances {
    n: usize,
    d2: Vec<f64>,
}

impl SquaredDistances {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = sq_dist(&x[i], &x[j]);
                d2[i * n + j] = v;
                d2[j * n + i] = v;
            }
        }
        Self { n, d2 }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn kernel(&self, gamma: f64) -> Vec<f64> {
        self.d2.iter().map(|d| (-gamma * d).exp()).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

fn check_labels(y: &[i8], n: usize) -> Result<(), ClassifierError> {
    if y.len() != n {
        return Err(ClassifierError::LengthMismatch { samples: n, labels: y.len() });
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(ClassifierError::InvalidLabel(i64::from(bad)));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

pub fn svm_train(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmModel, ClassifierError> {
    check_rows(x, 2)?;
    check_labels(y, x.len())?;
    svm_train_with_distances(&SquaredDistances::new(x), x, y, params)
}

/// Dual SMO over a precomputed kernel, selecting the maximal violating pair
/// each step (the pair with the largest gap between `-y_i G_i` over the
/// "up" and "low" index sets) and stopping once that gap is below `tol`.
pub fn svm_train_with_distances(
    dist: &SquaredDistances,
    x: &[Vec<f64>],
    y: &[i8],
    params: &SvmParams,
) -> Result<SvmModel, ClassifierError> {
    check_rows(x, 2)?;
    check_labels(y, x.len())?;
    if dist.len() != x.len() {
        return Err(ClassifierError::LengthMismatch { samples: x.len(), labels: dist.len() });
    }
    let n = x.len();
    let c = params.c;
    let k = dist.kernel(params.gamma);
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut alpha = vec![0.0; n];
    // G = Qα − e with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_iter.unwrap_or_else(|| (100 * n).max(10_000_000));

    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -yf[t] * grad[t];
            if in_up(alpha[t], yf[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], yf[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (ki, kj) = (&k[i * n..(i + 1) * n], &k[j * n..(j + 1) * n]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = ki[i] + kj[j] - 2.0 * ki[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        if yf[i] != yf[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = old_i - old_j;
            let (mut ai, mut aj) = (old_i + delta, old_j + delta);
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
            alpha[i] = ai;
            alpha[j] = aj;
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = old_i + old_j;
            let (mut ai, mut aj) = (old_i - delta, old_j + delta);
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
            alpha[i] = ai;
            alpha[j] = aj;
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        let (si, sj) = (yf[i] * di, yf[j] * dj);
        for t in 0..n {
            grad[t] += yf[t] * (ki[t] * si + kj[t] * sj);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tol {}", params.tol);
    }

    // ρ from free vectors, else the midpoint of the feasible interval
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            n_free += 1;
        } else if (alpha[t] >= c && yf[t] < 0.0) || (alpha[t] <= 0.0 && yf[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if n_free > 0 { free_sum / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coef.push(alpha[t] * yf[t]);
        }
    }
    Ok(SvmModel { support_vectors, dual_coef, bias: -rho, gamma: params.gamma, c, iterations, converged })
}

impl SvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(ClassifierError::DimMismatch { expected: d, got: x.len() });
            }
        }
        Ok(self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, a)| a * rbf(sv, x, self.gamma)).sum::<f64>()
            + self.bias)
    }
}

/// Label is the sign of the decision value, with 0 mapped to +1.
pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<(i8, f64), ClassifierError> {
    let f = model.decision(x)?;
    Ok((if f >= 0.0 { 1 } else { -1 }, f))
}

pub const GRID_C: [f64; 2] = [10.0, 1e4];
pub const GRID_GAMMA: [f64; 2] = [1e-4, 1e-1];

/// Candidate (C, γ) values; every combination is trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub tol: f64,
}

impl Default for SvmGrid {
    fn default() -> Self {
        Self { c: GRID_C.to_vec(), gamma: GRID_GAMMA.to_vec(), tol: DEFAULT_TOL }
    }
}

impl SvmGrid {
    /// Combinations in tie-break order: ascending C, then ascending γ.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut c = self.c.clone();
        let mut g = self.gamma.clone();
        c.sort_by(f64::total_cmp);
        g.sort_by(f64::total_cmp);
        c.iter().flat_map(|&c| g.iter().map(move |&g| (c, g))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_c: f64,
    pub best_gamma: f64,
    pub cells: Vec<GridCell>,
    pub model: SvmModel,
}

/// Trains every (C, γ) cell on `train`, scores it on `val` and keeps the
/// most accurate; ties go to the smaller C, then the smaller γ.
pub fn grid_search_svm(
    train_x: &[Vec<f64>],
    train_y: &[i8],
    val_x: &[Vec<f64>],
    val_y: &[i8],
    grid: &SvmGrid,
) -> Result<GridSearchResult, ClassifierError> {
    check_rows(train_x, 2)?;
    check_labels(train_y, train_x.len())?;
    if val_x.is_empty() {
        return Err(ClassifierError::EmptyValidation);
    }
    if val_y.len() != val_x.len() {
        return Err(ClassifierError::LengthMismatch { samples: val_x.len(), labels: val_y.len() });
    }
    let combos = grid.cells();
    if combos.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    let dist = SquaredDistances::new(train_x);
    let mut cells = Vec::with_capacity(combos.len());
    let mut best: Option<(f64, SvmModel)> = None;
    for (c, gamma) in combos {
        let model = svm_train_with_distances(&dist, train_x, train_y, &SvmParams { tol: grid.tol, ..SvmParams::new(c, gamma) })?;
        let mut correct = 0usize;
        for (x, &y) in val_x.iter().zip(val_y) {
            if svm_predict(&model, x)?.0 == y {
                correct += 1;
            }
        }
        let acc = correct as f64 / val_x.len() as f64;
        cells.push(GridCell { c, gamma, val_accuracy: acc });
        if best.as_ref().is_none_or(|(b, _)| acc > *b) {
            best = Some((acc, model));
        }
    }
    let (_, model) = best.expect("grid is non-empty");
    Ok(GridSearchResult { best_c: model.c, best_gamma: model.gamma, cells, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            x.push(vec![s * sep + g.sample(&mut rng), s * sep + g.sample(&mut rng)]);
            y.push(s as i8);
        }
        (x, y)
    }

    fn xor(n_per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 0.5).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &(cx, cy, label) in &[(2.0, 2.0, 1), (-2.0, -2.0, 1), (2.0, -2.0, -1), (-2.0, 2.0, -1)] {
            for _ in 0..n_per {
                x.push(vec![cx + g.sample(&mut rng), cy + g.sample(&mut rng)]);
                y.push(label);
            }
        }
        (x, y)
    }

    fn accuracy(m: &SvmModel, x: &[Vec<f64>], y: &[i8]) -> f64 {
        x.iter().zip(y).filter(|(x, &y)| svm_predict(m, x).unwrap().0 == y).count() as f64 / x.len() as f64
    }

    /// Samples whose margin y·f breaks the complementary-slackness condition
    /// for their α by more than `tol`.
    pub(crate) fn kkt_violations(m: &SvmModel, x: &[Vec<f64>], y: &[i8], tol: f64) -> usize {
        x.iter()
            .zip(y)
            .filter(|(xi, &yi)| {
                let margin = f64::from(yi) * m.decision(xi).unwrap();
                let alpha = m
                    .support_vectors
                    .iter()
                    .zip(&m.dual_coef)
                    .find(|(sv, _)| sv == xi)
                    .map_or(0.0, |(_, a)| a.abs());
                if alpha <= 0.0 {
                    margin < 1.0 - tol
                } else if alpha >= m.c {
                    margin > 1.0 + tol
                } else {
                    (margin - 1.0).abs() > tol
                }
            })
            .count()
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (x, y) = blobs(80, 4.0, 1);
        let m = svm_train(&x, &y, &SvmParams::new(10.0, 0.1)).unwrap();
        assert!(m.converged);
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        assert_eq!(kkt_violations(&m, &x, &y, DEFAULT_TOL), 0);
        let s: f64 = m.dual_coef.iter().sum();
        assert!(s.abs() < 1e-6);
        assert!(m.dual_coef.iter().all(|a| a.abs() <= m.c + 1e-12));
    }

    #[test]
    fn free_vectors_sit_on_margin() {
        let (x, y) = blobs(60, 1.0, 2);
        let m = svm_train(&x, &y, &SvmParams::new(10.0, 0.5)).unwrap();
        for (sv, a) in m.support_vectors.iter().zip(&m.dual_coef) {
            if a.abs() < m.c {
                assert!((m.decision(sv).unwrap().abs() - 1.0).abs() <= 10.0 * DEFAULT_TOL);
            }
        }
    }

    #[test]
    fn xor_is_learned() {
        let (x, y) = xor(25, 3);
        let m = svm_train(&x, &y, &SvmParams::new(10.0, 0.5)).unwrap();
        assert!(accuracy(&m, &x, &y) >= 0.95);
    }

    #[test]
    fn duplicating_points_keeps_decision() {
        let (x, y) = blobs(40, 3.0, 4);
        let p = SvmParams { tol: 1e-10, ..SvmParams::new(10.0, 0.1) };
        let a = svm_train(&x, &y, &p).unwrap();
        let (x2, y2): (Vec<_>, Vec<_>) = x.iter().chain(&x).cloned().zip(y.iter().chain(&y).copied()).unzip();
        let b = svm_train(&x2, &y2, &p).unwrap();
        let (probe, _) = blobs(30, 1.0, 99);
        for q in &probe {
            assert!((a.decision(q).unwrap() - b.decision(q).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn mirrored_labels_negate_decision() {
        let (x, y) = xor(15, 5);
        let p = SvmParams { tol: 1e-10, ..SvmParams::new(10.0, 0.3) };
        let a = svm_train(&x, &y, &p).unwrap();
        let neg: Vec<i8> = y.iter().map(|v| -v).collect();
        let b = svm_train(&x, &neg, &p).unwrap();
        let (probe, _) = blobs(20, 2.0, 7);
        for q in &probe {
            assert!((a.decision(q).unwrap() + b.decision(q).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn far_point_gives_bias() {
        let (x, y) = blobs(30, 2.0, 6);
        let m = svm_train(&x, &y, &SvmParams::new(10.0, 0.1)).unwrap();
        assert!((m.decision(&[1e3, -1e3]).unwrap() - m.bias).abs() < 1e-6);
    }

    #[test]
    fn input_errors() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(svm_train(&x, &[1, 1], &SvmParams::new(1.0, 1.0)), Err(ClassifierError::SingleClass)));
        assert!(svm_train(&[vec![0.0], vec![f64::NAN]], &[1, -1], &SvmParams::new(1.0, 1.0)).is_err());
        let m = svm_train(&x, &[1, -1], &SvmParams::new(1.0, 1.0)).unwrap();
        assert!(matches!(svm_predict(&m, &[0.0, 1.0]), Err(ClassifierError::DimMismatch { .. })));
    }

    #[test]
    fn grid_has_four_cells_and_tie_rule() {
        let (x, y) = blobs(40, 5.0, 8);
        let (vx, vy) = blobs(20, 5.0, 9);
        let r = grid_search_svm(&x, &y, &vx, &vy, &SvmGrid::default()).unwrap();
        assert_eq!(r.cells.len(), 4);
        let combos: Vec<(f64, f64)> = r.cells.iter().map(|c| (c.c, c.gamma)).collect();
        assert_eq!(combos, vec![(10.0, 1e-4), (10.0, 0.1), (1e4, 1e-4), (1e4, 0.1)]);
        assert!(r.cells.iter().all(|c| c.val_accuracy == 1.0));
        assert_eq!((r.best_c, r.best_gamma), (10.0, 1e-4));
    }

    #[test]
    fn grid_selects_gamma_that_separates() {
        // Concentric rings: only the narrower kernel (γ = 0.1) resolves them.
        let ring = |n: usize, seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Normal::new(0.0, 0.1).unwrap();
            let mut x = Vec::new();
            let mut y = Vec::new();
            for i in 0..n {
                let t = i as f64 * 2.399_963;
                let (r, label) = if i % 2 == 0 { (1.0, 1) } else { (3.0, -1) };
                x.push(vec![r * t.cos() + g.sample(&mut rng), r * t.sin() + g.sample(&mut rng)]);
                y.push(label);
            }
            (x, y)
        };
        let (x, y) = ring(120, 10);
        let (vx, vy) = ring(60, 11);
        let r = grid_search_svm(&x, &y, &vx, &vy, &SvmGrid::default()).unwrap();
        assert_eq!(r.best_gamma, 0.1, "{:?}", r.cells);
    }
}
