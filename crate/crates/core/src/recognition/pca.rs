//! Incremental principal component analysis.
//!
//! Each batch is merged the way Ross et al. style IPCA does it: the current
//! basis scaled by its singular values, the centred batch and a mean
//! correction row are stacked, and the stack is decomposed again. The
//! decomposition goes through the stack's d×d Gram matrix, which is cheaper
//! than an SVD of the tall stack and yields the same right singular vectors.
//! The internal basis keeps full rank, so the result equals full-batch PCA
//! up to rounding; truncation to k happens once at the end.

use nalgebra::{DMatrix, DVector};

use crate::error::{OcrError, Result};

/// Ratios below this count as zero variance.
const ZERO_VARIANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// k × d, orthonormal rows, strongest first.
    pub components: DMatrix<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    /// `(v − mean) · componentsᵀ`
    pub fn project(&self, v: &[f32]) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(OcrError::invalid(format!("vector of length {} for a {}-d model", v.len(), self.dim())));
        }
        let centred = DVector::from_iterator(v.len(), v.iter().zip(self.mean.iter()).map(|(&x, m)| x as f64 - m));
        Ok(&self.components * centred)
    }

    /// Projects every row of `x` (n × d).
    pub fn project_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centred = x.clone();
        for mut row in centred.row_iter_mut() {
            row -= self.mean.transpose();
        }
        centred * self.components.transpose()
    }

    pub fn reconstruct(&self, z: &DVector<f64>) -> DVector<f64> {
        self.components.tr_mul(z) + &self.mean
    }

    pub fn cumulative_variance(&self) -> Vec<f64> {
        self.explained_variance_ratio
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }

    /// True when some kept components carry no variance.
    pub fn is_rank_deficient(&self) -> bool {
        self.explained_variance_ratio.last().is_some_and(|&r| r <= ZERO_VARIANCE)
    }

    /// Rounds every parameter to the nearest f32, the precision of the
    /// model file.
    pub fn round_to_f32(&mut self) {
        let r = |v: &mut f64| *v = *v as f32 as f64;
        self.mean.iter_mut().for_each(r);
        self.components.iter_mut().for_each(r);
        self.explained_variance_ratio.iter_mut().for_each(r);
    }
}

#[derive(Clone, Debug)]
pub struct IncrementalPca {
    k: usize,
    n_seen: usize,
    mean: DVector<f64>,
    /// Per-feature sum of squared deviations from the mean.
    m2: DVector<f64>,
    /// d × r right singular vectors, strongest first.
    basis: DMatrix<f64>,
    /// Squared singular values matching `basis`.
    sigma2: Vec<f64>,
}

impl IncrementalPca {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        if k == 0 || k > dim {
            return Err(OcrError::invalid(format!("cannot keep {k} of {dim} components")));
        }
        Ok(Self {
            k,
            n_seen: 0,
            mean: DVector::zeros(dim),
            m2: DVector::zeros(dim),
            basis: DMatrix::zeros(dim, 0),
            sigma2: Vec::new(),
        })
    }

    pub fn n_seen(&self) -> usize {
        self.n_seen
    }

    /// Merges a batch given as rows of `x` (n × d).
    pub fn partial_fit(&mut self, x: &DMatrix<f64>) -> Result<()> {
        let d = self.mean.len();
        let n = x.nrows();
        if x.ncols() != d {
            return Err(OcrError::invalid(format!("batch has {} columns, expected {d}", x.ncols())));
        }
        if n == 0 {
            return Ok(());
        }
        let batch_mean = x.row_mean().transpose();
        let mut centred = x.clone();
        for mut row in centred.row_iter_mut() {
            row -= batch_mean.transpose();
        }
        let batch_m2 = DVector::from_iterator(d, centred.column_iter().map(|c| c.norm_squared()));

        // Gram of the stacked [S·Vᵀ; X − x̄; correction] matrix.
        let mut gram = centred.tr_mul(&centred);
        if self.n_seen > 0 {
            let scaled = DMatrix::from_fn(d, self.sigma2.len(), |i, j| self.basis[(i, j)] * self.sigma2[j]);
            gram += scaled * self.basis.transpose();
            let delta = &self.mean - &batch_mean;
            let w = (self.n_seen as f64 * n as f64) / (self.n_seen + n) as f64;
            gram += (&delta * delta.transpose()) * w;
        }

        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let rank = d.min(self.n_seen + n);
        order.truncate(rank);
        self.basis = DMatrix::from_fn(d, rank, |i, j| eig.eigenvectors[(i, order[j])]);
        self.sigma2 = order.iter().map(|&j| eig.eigenvalues[j].max(0.0)).collect();

        // Chan et al. merge of the running mean and squared deviations.
        let total = (self.n_seen + n) as f64;
        let delta = &batch_mean - &self.mean;
        self.m2 += batch_m2 + delta.component_mul(&delta) * (self.n_seen as f64 * n as f64 / total);
        self.mean += delta * (n as f64 / total);
        self.n_seen += n;
        Ok(())
    }

    pub fn finish(self) -> Result<PcaModel> {
        if self.n_seen < self.k {
            return Err(OcrError::invalid(format!(
                "{} sample(s) for {} components",
                self.n_seen, self.k
            )));
        }
        let d = self.mean.len();
        let total_var: f64 = self.m2.sum();
        let mut components = DMatrix::zeros(self.k, d);
        let mut ratios = Vec::with_capacity(self.k);
        for j in 0..self.k {
            components.set_row(j, &self.basis.column(j).transpose());
            let s2 = self.sigma2[j];
            ratios.push(if total_var > 0.0 { s2 / total_var } else { 0.0 });
        }
        // Eigenvalues are already sorted; rounding noise in the tail is not.
        for j in 1..ratios.len() {
            if ratios[j] > ratios[j - 1] {
                ratios[j] = ratios[j - 1];
            }
        }
        for r in &mut ratios {
            if *r <= ZERO_VARIANCE {
                *r = 0.0;
            }
        }
        let model = PcaModel {
            mean: self.mean,
            components,
            explained_variance_ratio: ratios,
        };
        if model.is_rank_deficient() {
            log::warn!("PCA input has rank below {}; trailing components carry no variance", self.k);
        }
        Ok(model)
    }
}

/// Fits PCA over `samples` in batches of `batch_size` rows.
pub fn pca_fit(samples: &[Vec<f32>], k: usize, batch_size: usize) -> Result<PcaModel> {
    let dim = samples
        .first()
        .map(Vec::len)
        .ok_or_else(|| OcrError::invalid("no samples for PCA"))?;
    let mut ipca = IncrementalPca::new(dim, k)?;
    for chunk in samples.chunks(batch_size.max(1)) {
        if let Some(bad) = chunk.iter().find(|s| s.len() != dim) {
            return Err(OcrError::invalid(format!("sample of length {} among {dim}-d samples", bad.len())));
        }
        let x = DMatrix::from_fn(chunk.len(), dim, |i, j| chunk[i][j] as f64);
        ipca.partial_fit(&x)?;
    }
    ipca.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_binary(n: usize, d: usize, seed: u64) -> Vec<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| f32::from(rng.gen_bool(0.3))).collect())
            .collect()
    }

    /// Full-batch oracle: SVD of the whole centred data matrix.
    fn oracle(samples: &[Vec<f32>], k: usize) -> (DVector<f64>, DMatrix<f64>) {
        let d = samples[0].len();
        let x = DMatrix::from_fn(samples.len(), d, |i, j| samples[i][j] as f64);
        let mean = x.row_mean().transpose();
        let mut c = x.clone();
        for mut row in c.row_iter_mut() {
            row -= mean.transpose();
        }
        let svd = c.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let comps = DMatrix::from_fn(k, d, |i, j| vt[(order[i], j)]);
        (mean, comps)
    }

    fn recon_error(mean: &DVector<f64>, comps: &DMatrix<f64>, v: &[f32]) -> f64 {
        let x = DVector::from_iterator(v.len(), v.iter().map(|&a| a as f64));
        let z = comps * (&x - mean);
        (comps.tr_mul(&z) + mean - x).norm()
    }

    #[test]
    fn matches_full_batch_oracle() {
        let samples = random_binary(300, 64, 3);
        let model = pca_fit(&samples, 20, 70).unwrap();
        let (mean, comps) = oracle(&samples, 20);
        for s in &samples {
            let a = recon_error(&model.mean, &model.components, s);
            let b = recon_error(&mean, &comps, s);
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn components_are_orthonormal_and_ratios_sorted() {
        let samples = random_binary(200, 40, 5);
        let m = pca_fit(&samples, 15, 33).unwrap();
        let gram = &m.components * m.components.transpose();
        assert!((gram - DMatrix::identity(15, 15)).abs().max() < 1e-6);
        assert!(m.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
        assert!(!m.is_rank_deficient());
    }

    #[test]
    fn plane_data_is_fully_explained() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = 10;
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let samples: Vec<Vec<f32>> = (0..50)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                (0..d).map(|i| (0.5 + a * u[i] + b * v[i]) as f32).collect()
            })
            .collect();
        let m = pca_fit(&samples, 2, 16).unwrap();
        let sum: f64 = m.explained_variance_ratio.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6, "{sum}");
    }

    #[test]
    fn identical_samples_give_zero_ratios() {
        let samples = vec![vec![1.0f32, 0.0, 1.0, 1.0]; 12];
        let m = pca_fit(&samples, 3, 5).unwrap();
        assert_eq!(m.explained_variance_ratio, vec![0.0; 3]);
        assert!(m.is_rank_deficient());
        let z = m.project(&samples[0]).unwrap();
        assert!(z.iter().all(|&c| c.abs() < 1e-12));
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        // Two distinct points span one direction; asking for three components.
        let mut samples = vec![vec![0.0f32; 6]; 5];
        samples.extend(vec![vec![1.0f32; 6]; 5]);
        let m = pca_fit(&samples, 3, 4).unwrap();
        assert!(m.is_rank_deficient());
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_examples() {
        let samples = random_binary(120, 30, 11);
        let m = pca_fit(&samples, 8, 50).unwrap();
        let mean: Vec<f32> = m.mean.iter().map(|&x| x as f32).collect();
        assert!(m.project(&mean).unwrap().norm() < 1e-6);
        let shifted: Vec<f64> = (0..30).map(|j| m.mean[j] + m.components[(0, j)]).collect();
        // Go through f64 directly: an f32 round trip would blur the 1e-6 check.
        let z = &m.components * (DVector::from_vec(shifted) - &m.mean);
        assert!((z[0] - 1.0).abs() < 1e-9);
        assert!(z.iter().skip(1).all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn reconstruct_then_project_is_idempotent() {
        let samples = random_binary(100, 25, 13);
        let m = pca_fit(&samples, 6, 40).unwrap();
        let z = m.project(&samples[4]).unwrap();
        let back: Vec<f32> = m.reconstruct(&z).iter().map(|&x| x as f32).collect();
        let z2 = m.project(&back).unwrap();
        assert!((z - z2).abs().max() < 1e-5);
    }

    #[test]
    fn too_few_samples() {
        let samples = random_binary(3, 10, 1);
        assert!(pca_fit(&samples, 5, 2).is_err());
    }
}
