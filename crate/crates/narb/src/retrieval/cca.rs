//! Canonical correlation analysis via whitening and SVD.

use super::{dense_cosine, RetrievalError, Result};
use crate::autodiff::{load_checkpoint, save_checkpoint, ParamSet, Tensor};
use nalgebra::{DMatrix, DVector};
use std::path::Path;

/// Projections of the dialogue view (x) and narration view (y) into a shared
/// k-dimensional space, with the canonical correlations of the fit.
#[derive(Debug, Clone)]
pub struct CcaModel {
    /// dx × k
    wx: DMatrix<f64>,
    /// dy × k
    wy: DMatrix<f64>,
    mean_x: DVector<f64>,
    mean_y: DVector<f64>,
    pub correlations: Vec<f64>,
}

fn covariance(a: &DMatrix<f64>, b: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    (a.transpose() * b) / (n as f64 - 1.0)
}

/// `(C + εI)^{-1/2}` through the symmetric eigendecomposition. Eigenvalues
/// are clamped below at a small floor so rank-deficient covariances stay
/// invertible.
fn inv_sqrt(mut c: DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let d = c.nrows();
    for i in 0..d {
        c[(i, i)] += eps;
    }
    let eig = c.symmetric_eigen();
    let floor = 1e-12;
    let scaled = DMatrix::from_fn(d, d, |i, j| {
        eig.eigenvectors[(i, j)] / eig.eigenvalues[j].max(floor).sqrt()
    });
    &scaled * eig.eigenvectors.transpose()
}

/// Fits CCA on paired observations: rows of `x` are dialogue vectors, rows of
/// `y` the corresponding narration vectors. Both views are centered and
/// whitened with an ε ridge; the SVD of the whitened cross-covariance gives
/// the top-`k` projection pairs and the canonical correlations (the singular
/// values, non-increasing).
pub fn fit_cca(x: &[Vec<f64>], y: &[Vec<f64>], k: usize, eps: f64) -> Result<CcaModel> {
    let n = x.len();
    if n != y.len() {
        return Err(RetrievalError::Invalid(format!(
            "paired views need equal sample counts, got {n} and {}",
            y.len()
        )));
    }
    if n < 2 {
        return Err(RetrievalError::Invalid(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    let dx = x[0].len();
    let dy = y[0].len();
    if x.iter().any(|v| v.len() != dx) || y.iter().any(|v| v.len() != dy) {
        return Err(RetrievalError::Invalid("ragged view dimensions".into()));
    }
    if k == 0 || k > dx.min(dy).min(n) {
        return Err(RetrievalError::Invalid(format!(
            "k = {k} must be in 1..=min(dims, samples) = {}",
            dx.min(dy).min(n)
        )));
    }

    let xm = DMatrix::from_fn(n, dx, |i, j| x[i][j]);
    let ym = DMatrix::from_fn(n, dy, |i, j| y[i][j]);
    let mean_x = xm.row_mean().transpose();
    let mean_y = ym.row_mean().transpose();
    let xc = DMatrix::from_fn(n, dx, |i, j| xm[(i, j)] - mean_x[j]);
    let yc = DMatrix::from_fn(n, dy, |i, j| ym[(i, j)] - mean_y[j]);

    let wx_white = inv_sqrt(covariance(&xc, &xc, n), eps);
    let wy_white = inv_sqrt(covariance(&yc, &yc, n), eps);
    let t = &wx_white * covariance(&xc, &yc, n) * &wy_white;

    let svd = t.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");

    let wx = &wx_white * u.columns(0, k);
    let wy = &wy_white * v_t.transpose().columns(0, k);
    let correlations = svd.singular_values.iter().take(k).copied().collect();

    Ok(CcaModel {
        wx: wx.into_owned(),
        wy: wy.into_owned(),
        mean_x,
        mean_y,
        correlations,
    })
}

impl CcaModel {
    pub fn k(&self) -> usize {
        self.wx.ncols()
    }

    pub fn dialogue_dim(&self) -> usize {
        self.wx.nrows()
    }

    pub fn narration_dim(&self) -> usize {
        self.wy.nrows()
    }

    fn project(w: &DMatrix<f64>, mean: &DVector<f64>, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != w.nrows() {
            return Err(RetrievalError::DimensionMismatch {
                query: v.len(),
                table: w.nrows(),
            });
        }
        let centered = DVector::from_fn(v.len(), |i, _| v[i] - mean[i]);
        Ok((w.transpose() * centered).iter().copied().collect())
    }

    pub fn project_dialogue(&self, v: &[f64]) -> Result<Vec<f64>> {
        Self::project(&self.wx, &self.mean_x, v)
    }

    pub fn project_narration(&self, v: &[f64]) -> Result<Vec<f64>> {
        Self::project(&self.wy, &self.mean_y, v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut params = ParamSet::new();
        let mat = |m: &DMatrix<f64>| {
            Tensor::matrix(m.nrows(), m.ncols(), m.transpose().iter().copied().collect())
        };
        params.insert("wx", mat(&self.wx));
        params.insert("wy", mat(&self.wy));
        params.insert("mean_x", Tensor::vector(self.mean_x.iter().copied().collect()));
        params.insert("mean_y", Tensor::vector(self.mean_y.iter().copied().collect()));
        params.insert("correlations", Tensor::vector(self.correlations.clone()));
        save_checkpoint(&params, path).map_err(|e| RetrievalError::Invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let params = load_checkpoint(path).map_err(|e| RetrievalError::Invalid(e.to_string()))?;
        let mat = |name: &str| -> Result<DMatrix<f64>> {
            let t = params
                .try_get(name)
                .ok_or_else(|| RetrievalError::Invalid(format!("checkpoint lacks {name}")))?;
            let [rows, cols] = t.dims() else {
                return Err(RetrievalError::Invalid(format!("{name} is not a matrix")));
            };
            Ok(DMatrix::from_row_slice(*rows, *cols, t.data()))
        };
        let vec = |name: &str| -> Result<Vec<f64>> {
            params
                .try_get(name)
                .map(|t| t.data().to_vec())
                .ok_or_else(|| RetrievalError::Invalid(format!("checkpoint lacks {name}")))
        };
        Ok(CcaModel {
            wx: mat("wx")?,
            wy: mat("wy")?,
            mean_x: DVector::from_vec(vec("mean_x")?),
            mean_y: DVector::from_vec(vec("mean_y")?),
            correlations: vec("correlations")?,
        })
    }
}

/// Projected training narrations, queried by projected dialogue vectors.
pub struct CcaRetriever {
    /// (instance id, projected narration, narration text), sorted by id.
    entries: Vec<(String, Vec<f64>, String)>,
    fallback: String,
}

impl CcaRetriever {
    /// `train` holds (instance id, narration TF-IDF vector, narration text).
    pub fn new(model: &CcaModel, train: &[(String, Vec<f64>, String)]) -> Result<Self> {
        if train.is_empty() {
            return Err(RetrievalError::EmptyTraining);
        }
        let mut entries = train
            .iter()
            .map(|(id, v, text)| {
                Ok((id.clone(), model.project_narration(v)?, text.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        // frequency fallback mirrors the TF-IDF zero-vector rule
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for (_, _, text) in &entries {
            *counts.entry(text).or_insert(0) += 1;
        }
        let fallback = counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
            .map(|(text, _)| text.to_string())
            .unwrap_or_default();
        Ok(CcaRetriever { entries, fallback })
    }

    /// Cosine nearest projected training narration to the projected query
    /// dialogue. A zero projection falls back to the most frequent narration.
    pub fn retrieve(&self, model: &CcaModel, query_dialogue_vec: &[f64]) -> Result<&str> {
        let query = model.project_dialogue(query_dialogue_vec)?;
        if query.iter().all(|&v| v == 0.0) {
            return Ok(&self.fallback);
        }
        let mut best: Option<(f64, &str)> = None;
        for (_, proj, text) in &self.entries {
            let sim = dense_cosine(&query, proj);
            if best.map_or(true, |(b, _)| sim > b) {
                best = Some((sim, text));
            }
        }
        Ok(best.map(|(_, t)| t).unwrap_or(&self.fallback))
    }

    pub fn fallback_narration(&self) -> &str {
        &self.fallback
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn identical_views_have_correlation_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_matrix(&mut rng, 40, 3);
        let model = fit_cca(&x, &x, 1, 1e-6).unwrap();
        assert!((model.correlations[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional_correlation_equals_pearson() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = 60;
            let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let ys: Vec<f64> = xs
                .iter()
                .map(|&x| 2.0 * x + rng.gen_range(-0.3..0.3))
                .collect();
            let x: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
            let y: Vec<Vec<f64>> = ys.iter().map(|&v| vec![v]).collect();
            let model = fit_cca(&x, &y, 1, 0.0).unwrap();

            let mx = xs.iter().sum::<f64>() / n as f64;
            let my = ys.iter().sum::<f64>() / n as f64;
            let cov: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
            let vx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
            let vy: f64 = ys.iter().map(|b| (b - my).powi(2)).sum();
            let pearson = (cov / (vx * vy).sqrt()).abs();
            assert!(
                (model.correlations[0] - pearson).abs() < 1e-6,
                "cca {} vs pearson {pearson}",
                model.correlations[0]
            );
        }
    }

    #[test]
    fn independent_views_have_small_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 500, 2);
        let y = random_matrix(&mut rng, 500, 2);
        let model = fit_cca(&x, &y, 2, 1e-6).unwrap();
        assert!(model.correlations[0] < 0.2, "{:?}", model.correlations);
    }

    #[test]
    fn correlations_sorted_nonincreasing_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_matrix(&mut rng, 80, 4);
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                (0..4)
                    .map(|j| row[(j + 1) % 4] + 0.1 * rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let model = fit_cca(&x, &y, 4, 1e-6).unwrap();
        for w in model.correlations.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for &c in &model.correlations {
            assert!((-1e-6..=1.0 + 1e-3).contains(&c));
        }
    }

    #[test]
    fn correlations_invariant_under_affine_view_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 100, 3);
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|row| row.iter().map(|v| v + 0.2 * rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let base = fit_cca(&x, &y, 3, 0.0).unwrap();
        // invertible affine transform of the x view
        let a = [[2.0, 0.5, 0.0], [0.0, 1.5, -0.3], [0.1, 0.0, 1.0]];
        let xt: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                (0..3)
                    .map(|i| (0..3).map(|j| a[i][j] * row[j]).sum::<f64>() + 3.0)
                    .collect()
            })
            .collect();
        let transformed = fit_cca(&xt, &y, 3, 0.0).unwrap();
        for (b, t) in base.correlations.iter().zip(&transformed.correlations) {
            assert!((b - t).abs() < 1e-6, "{b} vs {t}");
        }
    }

    #[test]
    fn perfectly_correlated_pair_retrieves_its_narration() {
        // y is an exact linear image of x, so querying a training dialogue
        // must return its paired narration
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_matrix(&mut rng, 30, 3);
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|row| vec![row[0] + row[1], row[1] - row[2], row[2] * 2.0])
            .collect();
        let model = fit_cca(&x, &y, 3, 1e-6).unwrap();
        let train: Vec<(String, Vec<f64>, String)> = y
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("e{i:02}#0"), v.clone(), format!("narration {i} .")))
            .collect();
        let retriever = CcaRetriever::new(&model, &train).unwrap();
        let mut hits = 0;
        for (i, q) in x.iter().enumerate() {
            if retriever.retrieve(&model, q).unwrap() == format!("narration {i} .") {
                hits += 1;
            }
        }
        assert!(hits >= 28, "only {hits}/30 exact matches");
    }

    #[test]
    fn degenerate_projections_tie_break_by_lowest_id() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_matrix(&mut rng, 10, 2);
        let y = random_matrix(&mut rng, 10, 2);
        let model = fit_cca(&x, &y, 1, 1e-6).unwrap();
        // identical narration vectors project identically: all ties
        let shared = y[0].clone();
        let train: Vec<(String, Vec<f64>, String)> = (0..5)
            .map(|i| (format!("id{i}"), shared.clone(), format!("n{i} .")))
            .collect();
        let retriever = CcaRetriever::new(&model, &train).unwrap();
        assert_eq!(retriever.retrieve(&model, &x[3]).unwrap(), "n0 .");
    }

    #[test]
    fn retrieval_matches_brute_force_projected_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 25, 4);
        let y = random_matrix(&mut rng, 25, 3);
        let model = fit_cca(&x, &y, 2, 1e-6).unwrap();
        let train: Vec<(String, Vec<f64>, String)> = y
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("e{i:02}#0"), v.clone(), format!("narration {i} .")))
            .collect();
        let retriever = CcaRetriever::new(&model, &train).unwrap();
        for _ in 0..200 {
            let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = retriever.retrieve(&model, &q).unwrap();
            let qp = model.project_dialogue(&q).unwrap();
            let best = train
                .iter()
                .map(|(id, v, text)| {
                    (dense_cosine(&qp, &model.project_narration(v).unwrap()), id, text)
                })
                .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(a.1)))
                .unwrap()
                .2;
            assert_eq!(got, best.as_str());
        }
    }

    #[test]
    fn save_load_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_matrix(&mut rng, 20, 3);
        let y = random_matrix(&mut rng, 20, 2);
        let model = fit_cca(&x, &y, 2, 1e-6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cca.narb");
        model.save(&path).unwrap();
        let loaded = CcaModel::load(&path).unwrap();
        assert_eq!(model.correlations, loaded.correlations);
        let q: Vec<f64> = vec![0.3, -0.2, 0.8];
        assert_eq!(
            model.project_dialogue(&q).unwrap(),
            loaded.project_dialogue(&q).unwrap()
        );
        let n: Vec<f64> = vec![0.1, 0.9];
        assert_eq!(
            model.project_narration(&n).unwrap(),
            loaded.project_narration(&n).unwrap()
        );
    }

    #[test]
    fn invalid_shapes_are_errors() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let y = vec![vec![1.0], vec![2.0]];
        assert!(fit_cca(&x, &y[..1], 1, 1e-6).is_err()); // unequal n
        assert!(fit_cca(&x[..1], &y[..1], 1, 1e-6).is_err()); // n < 2
        assert!(fit_cca(&x, &y, 2, 1e-6).is_err()); // k > min dim
        assert!(fit_cca(&x, &y, 0, 1e-6).is_err());
    }
}
