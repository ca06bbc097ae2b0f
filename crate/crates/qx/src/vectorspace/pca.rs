use nalgebra::{DMatrix, SymmetricEigen};

use super::{DenseVector, SparseVector};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Problem sizes up to this limit (on the smaller of n and V) use an exact
/// dense eigendecomposition; larger ones use randomized subspace iteration.
const EXACT_LIMIT: usize = 384;

/// Oversampling columns and power iterations for the randomized path.
const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 8;

/// Seed for the randomized start block and for orthonormal completion
/// vectors; fixed so fits are reproducible.
const FIT_SEED: u64 = 0x09c0_ffee_5eed;

/// A fitted PCA basis: the data mean, k orthonormal components (rows, in
/// descending explained-variance order), and the matching variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
    mean_projection: Vec<f64>,
}

impl PcaModel {
    pub(crate) fn from_parts(
        mean: Vec<f64>,
        components: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
    ) -> Result<PcaModel> {
        if components.len() != explained_variance.len() {
            return Err(Error::InvalidRecord(
                "component and variance counts differ".to_string(),
            ));
        }
        for c in &components {
            if c.len() != mean.len() {
                return Err(Error::DimensionMismatch {
                    expected: mean.len(),
                    got: c.len(),
                });
            }
        }
        if mean.iter().any(|x| !x.is_finite())
            || explained_variance.iter().any(|x| !x.is_finite())
            || components.iter().flatten().any(|x| !x.is_finite())
        {
            return Err(Error::Numeric("non-finite PCA model value".to_string()));
        }
        let mean_projection = components
            .iter()
            .map(|c| c.iter().zip(&mean).map(|(a, b)| a * b).sum())
            .collect();
        Ok(PcaModel {
            mean,
            components,
            explained_variance,
            mean_projection,
        })
    }

    /// Number of components.
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Input dimensionality V.
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Project a sparse vector: result_i = dot(components_i, v - mean).
    pub fn project(&self, v: &SparseVector) -> Result<DenseVector> {
        if v.min_dim() > self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: v.min_dim(),
            });
        }
        let out = self
            .components
            .iter()
            .zip(&self.mean_projection)
            .map(|(comp, mp)| {
                let dot: f64 = v.entries().iter().map(|&(i, w)| w * comp[i]).sum();
                dot - mp
            })
            .collect();
        DenseVector::new(out)
    }
}

/// Fit a PCA basis of (up to) k components to sparse vectors living in
/// `n_features` dimensions. Centering is applied implicitly; the sparse
/// inputs are never densified. Component signs are canonicalized so each
/// component's largest-magnitude coordinate is positive.
pub fn fit_pca(vectors: &[SparseVector], n_features: usize, k: usize) -> Result<PcaModel> {
    fit_pca_impl(vectors, n_features, k, EXACT_LIMIT)
}

pub(crate) fn fit_pca_impl(
    vectors: &[SparseVector],
    n_features: usize,
    k: usize,
    exact_limit: usize,
) -> Result<PcaModel> {
    if vectors.is_empty() {
        return Err(Error::EmptyInput("PCA fit set is empty".to_string()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("PCA k must be >= 1".to_string()));
    }
    let n = vectors.len();
    let v = n_features;
    for vec in vectors {
        if vec.min_dim() > v {
            return Err(Error::DimensionMismatch {
                expected: v,
                got: vec.min_dim(),
            });
        }
    }
    let k_eff = k.min(v).min(n);

    let mut mean = vec![0.0f64; v];
    for vec in vectors {
        for &(i, w) in vec.entries() {
            mean[i] += w;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let (mut eigenvalues, mut components) = if v <= exact_limit {
        covariance_eigen(vectors, &mean, v)
    } else if n <= exact_limit {
        gram_eigen(vectors, &mean, v)
    } else {
        randomized_eigen(vectors, &mean, v, k_eff)
    };

    let divisor = if n > 1 { (n - 1) as f64 } else { 1.0 };
    for ev in &mut eigenvalues {
        *ev = (*ev / divisor).max(0.0);
    }

    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eigenvalues[b]
            .total_cmp(&eigenvalues[a])
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k_eff);
    let mut explained_variance: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut kept: Vec<Vec<f64>> = order.into_iter().map(|i| components[i].clone()).collect();
    components.clear();

    complete_basis(&mut kept, v, k_eff);
    explained_variance.resize(k_eff, 0.0);
    for comp in &mut kept {
        canonicalize_sign(comp);
    }

    PcaModel::from_parts(mean, kept, explained_variance)
}

/// Exact path for small V: eigendecompose the V x V scatter matrix
/// sum(x x^T) - n mean mean^T. Eigenvalue scaling to variances happens in
/// the caller.
fn covariance_eigen(
    vectors: &[SparseVector],
    mean: &[f64],
    v: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = vectors.len() as f64;
    let mut scatter = DMatrix::<f64>::zeros(v, v);
    for vec in vectors {
        let entries = vec.entries();
        for &(i, wi) in entries {
            for &(j, wj) in entries {
                scatter[(i, j)] += wi * wj;
            }
        }
    }
    for i in 0..v {
        for j in 0..v {
            scatter[(i, j)] -= n * mean[i] * mean[j];
        }
    }
    let eigen = SymmetricEigen::new(scatter);
    let eigenvalues: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    let components: Vec<Vec<f64>> = (0..eigenvalues.len())
        .map(|c| eigen.eigenvectors.column(c).iter().copied().collect())
        .collect();
    (eigenvalues, components)
}

/// Exact path for small n: eigendecompose the n x n Gram matrix of the
/// centered data and map eigenvectors u back to feature space as
/// X_c^T u / sqrt(g). Directions with (near-)zero Gram eigenvalue are
/// dropped here and completed later.
fn gram_eigen(vectors: &[SparseVector], mean: &[f64], v: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = vectors.len();
    let m2: f64 = mean.iter().map(|m| m * m).sum();
    let mdots: Vec<f64> = vectors
        .iter()
        .map(|vec| vec.entries().iter().map(|&(i, w)| w * mean[i]).sum())
        .collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let dot = sparse_dot(&vectors[a], &vectors[b]);
            let centered = dot - mdots[a] - mdots[b] + m2;
            gram[(a, b)] = centered;
            gram[(b, a)] = centered;
        }
    }
    let eigen = SymmetricEigen::new(gram);
    let max_ev = eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &ev| acc.max(ev));
    let tol = (max_ev * 1e-12).max(1e-12);

    let mut eigenvalues = Vec::new();
    let mut components = Vec::new();
    for c in 0..n {
        let g = eigen.eigenvalues[c];
        if g <= tol {
            continue;
        }
        let u = eigen.eigenvectors.column(c);
        // X_c^T u = sum_d u_d x_d - (sum_d u_d) mean
        let mut comp = vec![0.0f64; v];
        let mut u_sum = 0.0;
        for (d, vec) in vectors.iter().enumerate() {
            let ud = u[d];
            u_sum += ud;
            for &(i, w) in vec.entries() {
                comp[i] += ud * w;
            }
        }
        for (i, c) in comp.iter_mut().enumerate() {
            *c -= u_sum * mean[i];
        }
        let scale = 1.0 / g.sqrt();
        for c in comp.iter_mut() {
            *c *= scale;
        }
        normalize(&mut comp);
        eigenvalues.push(g);
        components.push(comp);
    }
    (eigenvalues, components)
}

/// Randomized subspace iteration for problems too large for the exact
/// paths: power iterations with QR re-orthonormalization, then a
/// Rayleigh-Ritz step on the final subspace. Deterministic through the
/// fixed start seed.
fn randomized_eigen(
    vectors: &[SparseVector],
    mean: &[f64],
    v: usize,
    k_eff: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = vectors.len();
    let m = (k_eff + OVERSAMPLE).min(n).min(v);
    let mut rng = SplitMix64::new(FIT_SEED);
    let mut q = DMatrix::<f64>::zeros(v, m);
    for j in 0..m {
        for i in 0..v {
            q[(i, j)] = rng.next_f64() * 2.0 - 1.0;
        }
    }
    q = q.qr().q();
    for _ in 0..POWER_ITERATIONS {
        let y = multiply_centered(vectors, mean, &q);
        let z = multiply_centered_transpose(vectors, mean, &y, v);
        q = z.qr().q();
    }
    let y = multiply_centered(vectors, mean, &q);
    let b = y.transpose() * &y;
    let eigen = SymmetricEigen::new(b);
    let rotated = &q * &eigen.eigenvectors;
    let eigenvalues: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    let components: Vec<Vec<f64>> = (0..eigenvalues.len())
        .map(|c| {
            let mut comp: Vec<f64> = rotated.column(c).iter().copied().collect();
            normalize(&mut comp);
            comp
        })
        .collect();
    (eigenvalues, components)
}

/// Y = (X - 1 mean^T) Q without densifying X; Y is n x m.
fn multiply_centered(
    vectors: &[SparseVector],
    mean: &[f64],
    q: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = vectors.len();
    let m = q.ncols();
    let mut mq = vec![0.0f64; m];
    for (j, mqj) in mq.iter_mut().enumerate() {
        *mqj = mean.iter().enumerate().map(|(i, mi)| mi * q[(i, j)]).sum();
    }
    let mut y = DMatrix::<f64>::zeros(n, m);
    for (d, vec) in vectors.iter().enumerate() {
        for j in 0..m {
            let dot: f64 = vec.entries().iter().map(|&(i, w)| w * q[(i, j)]).sum();
            y[(d, j)] = dot - mq[j];
        }
    }
    y
}

/// Z = (X - 1 mean^T)^T Y without densifying X; Z is v x m.
fn multiply_centered_transpose(
    vectors: &[SparseVector],
    mean: &[f64],
    y: &DMatrix<f64>,
    v: usize,
) -> DMatrix<f64> {
    let m = y.ncols();
    let mut z = DMatrix::<f64>::zeros(v, m);
    let mut col_sums = vec![0.0f64; m];
    for (d, vec) in vectors.iter().enumerate() {
        for j in 0..m {
            let yd = y[(d, j)];
            col_sums[j] += yd;
            for &(i, w) in vec.entries() {
                z[(i, j)] += w * yd;
            }
        }
    }
    for j in 0..m {
        for i in 0..v {
            z[(i, j)] -= mean[i] * col_sums[j];
        }
    }
    z
}

fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (mut ia, mut ib, mut dot) = (0, 0, 0.0);
    let (ea, eb) = (a.entries(), b.entries());
    while ia < ea.len() && ib < eb.len() {
        match ea[ia].0.cmp(&eb[ib].0) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                dot += ea[ia].1 * eb[ib].1;
                ia += 1;
                ib += 1;
            }
        }
    }
    dot
}

fn normalize(comp: &mut [f64]) {
    let norm = comp.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in comp.iter_mut() {
            *x /= norm;
        }
    }
}

/// Flip the component so its largest-magnitude coordinate (first on ties)
/// is positive.
fn canonicalize_sign(comp: &mut [f64]) {
    let mut best = 0;
    for (i, x) in comp.iter().enumerate() {
        if x.abs() > comp[best].abs() {
            best = i;
        }
    }
    if !comp.is_empty() && comp[best] < 0.0 {
        for x in comp.iter_mut() {
            *x = -*x;
        }
    }
}

/// Extend a partial orthonormal basis to `k_eff` vectors with deterministic
/// seeded directions; used when the data rank falls short of the requested
/// component count.
fn complete_basis(components: &mut Vec<Vec<f64>>, v: usize, k_eff: usize) {
    let mut attempt = 0u64;
    while components.len() < k_eff {
        let mut rng = SplitMix64::new(FIT_SEED.wrapping_add(1 + attempt));
        attempt += 1;
        let mut cand: Vec<f64> = (0..v).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        // Two modified Gram-Schmidt passes keep the result orthogonal to
        // working precision.
        for _ in 0..2 {
            for existing in components.iter() {
                let dot: f64 = cand.iter().zip(existing).map(|(a, b)| a * b).sum();
                for (c, e) in cand.iter_mut().zip(existing) {
                    *c -= dot * e;
                }
            }
        }
        let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for c in cand.iter_mut() {
            *c /= norm;
        }
        components.push(cand);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorspace::cosine_distance;
    use approx::assert_relative_eq;

    fn sv(entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::new(entries.to_vec()).unwrap()
    }

    fn random_vectors(n: usize, v: usize, seed: u64) -> Vec<SparseVector> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                let entries: Vec<(usize, f64)> = (0..v)
                    .filter_map(|i| {
                        let w = rng.next_f64() * 2.0 - 1.0;
                        (w.abs() > 0.05).then_some((i, w))
                    })
                    .collect();
                SparseVector::new(entries).unwrap()
            })
            .collect()
    }

    fn check_orthonormal(model: &PcaModel, tol: f64) {
        for (a, ca) in model.components().iter().enumerate() {
            for (b, cb) in model.components().iter().enumerate() {
                let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (dot - expected).abs() < tol,
                    "components {a},{b}: dot {dot}"
                );
            }
        }
    }

    #[test]
    fn collinear_points_have_one_nonzero_variance() {
        let vectors = vec![
            sv(&[(0, 1.0), (1, 2.0)]),
            sv(&[(0, 2.0), (1, 4.0)]),
            sv(&[(0, 3.0), (1, 6.0)]),
        ];
        let model = fit_pca(&vectors, 2, 2).unwrap();
        assert_eq!(model.k(), 2);
        assert!(model.explained_variance()[0] > 0.0);
        assert!(model.explained_variance()[1].abs() < 1e-8);
        check_orthonormal(&model, 1e-8);
    }

    #[test]
    fn k_is_capped_by_rank_bounds() {
        let vectors = random_vectors(5, 4, 11);
        let model = fit_pca(&vectors, 4, 200).unwrap();
        assert_eq!(model.k(), 4);
        let model = fit_pca(&vectors[..2], 4, 200).unwrap();
        assert_eq!(model.k(), 2);
    }

    #[test]
    fn empty_input_and_zero_k_are_errors() {
        assert!(matches!(
            fit_pca(&[], 3, 2),
            Err(Error::EmptyInput(_))
        ));
        let vectors = vec![sv(&[(0, 1.0)])];
        assert!(matches!(
            fit_pca(&vectors, 1, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn random_input_yields_orthonormal_components() {
        let vectors = random_vectors(20, 10, 42);
        let model = fit_pca(&vectors, 10, 10).unwrap();
        check_orthonormal(&model, 1e-8);
        let ev = model.explained_variance();
        for pair in ev.windows(2) {
            assert!(pair[0] >= pair[1] - 1e-12);
        }
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let vectors = vec![sv(&[(0, 0.5), (2, 0.5)]); 4];
        let model = fit_pca(&vectors, 3, 3).unwrap();
        let proj = model.project(&vectors[0]).unwrap();
        for x in proj.as_slice() {
            assert!(x.abs() < 1e-9);
        }
    }

    #[test]
    fn full_rank_model_reconstructs_inputs() {
        let vectors = random_vectors(12, 6, 7);
        let model = fit_pca(&vectors, 6, 6).unwrap();
        for vec in &vectors {
            let proj = model.project(vec).unwrap();
            let mut recon = model.mean().to_vec();
            for (j, comp) in model.components().iter().enumerate() {
                for (r, c) in recon.iter_mut().zip(comp) {
                    *r += proj.as_slice()[j] * c;
                }
            }
            let mut dense = vec![0.0; 6];
            for &(i, w) in vec.entries() {
                dense[i] = w;
            }
            for (a, b) in recon.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-6, "reconstruction off: {a} vs {b}");
            }
        }
    }

    #[test]
    fn full_rank_projection_preserves_euclidean_distances() {
        let vectors = random_vectors(8, 5, 99);
        let model = fit_pca(&vectors, 5, 5).unwrap();
        let dense: Vec<Vec<f64>> = vectors
            .iter()
            .map(|vec| {
                let mut d = vec![0.0; 5];
                for &(i, w) in vec.entries() {
                    d[i] = w;
                }
                d
            })
            .collect();
        let proj: Vec<DenseVector> = vectors.iter().map(|v| model.project(v).unwrap()).collect();
        for a in 0..vectors.len() {
            for b in 0..vectors.len() {
                let before: f64 = dense[a]
                    .iter()
                    .zip(&dense[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let after: f64 = proj[a]
                    .as_slice()
                    .iter()
                    .zip(proj[b].as_slice())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                assert!((before - after).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn variance_sum_matches_total_variance() {
        let vectors = random_vectors(15, 6, 3);
        let model = fit_pca(&vectors, 6, 6).unwrap();
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; 6];
        for vec in &vectors {
            for &(i, w) in vec.entries() {
                mean[i] += w / n;
            }
        }
        let mut total = 0.0;
        for vec in &vectors {
            let mut dense = [0.0; 6];
            for &(i, w) in vec.entries() {
                dense[i] = w;
            }
            total += dense
                .iter()
                .zip(&mean)
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>();
        }
        total /= n - 1.0;
        let sum: f64 = model.explained_variance().iter().sum();
        assert_relative_eq!(sum, total, epsilon = 1e-6);
    }

    #[test]
    fn gram_and_covariance_paths_agree_on_projections() {
        // v <= 384 means fit_pca takes the covariance path; an exact limit
        // between n and v forces the Gram path on identical data.
        let vectors = random_vectors(8, 20, 17);
        let cov = fit_pca(&vectors, 20, 5).unwrap();
        let gram = fit_pca_impl(&vectors, 20, 5, 10).unwrap();
        assert_eq!(cov.k(), gram.k());
        for (a, b) in cov
            .explained_variance()
            .iter()
            .zip(gram.explained_variance())
        {
            assert!((a - b).abs() < 1e-8, "variance {a} vs {b}");
        }
        for vec in &vectors {
            let a = cov.project(vec).unwrap();
            let b = gram.project(vec).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn randomized_path_approximates_exact_projections() {
        // Feature weights decay like 1/(1+i) so the spectrum has clear gaps,
        // which is the shape of data the randomized path is used on.
        let mut rng = SplitMix64::new(23);
        let vectors: Vec<SparseVector> = (0..60)
            .map(|_| {
                let entries: Vec<(usize, f64)> = (0..40)
                    .map(|i| {
                        let w = (rng.next_f64() * 2.0 - 1.0) / (1.0 + i as f64);
                        (i, w)
                    })
                    .filter(|&(_, w)| w.abs() > 1e-12)
                    .collect();
                SparseVector::new(entries).unwrap()
            })
            .collect();
        let exact = fit_pca(&vectors, 40, 5).unwrap();
        let approx = fit_pca_impl(&vectors, 40, 5, 0).unwrap();
        check_orthonormal(&approx, 1e-8);
        for (a, b) in exact
            .explained_variance()
            .iter()
            .zip(approx.explained_variance())
        {
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
        for vec in vectors.iter().take(10) {
            let a = exact.project(vec).unwrap();
            let b = approx.project(vec).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((x - y).abs() < 1e-5, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn projection_distances_are_usable_by_cosine() {
        let vectors = random_vectors(10, 8, 5);
        let model = fit_pca(&vectors, 8, 4).unwrap();
        let a = model.project(&vectors[0]).unwrap();
        let b = model.project(&vectors[1]).unwrap();
        let d = cosine_distance(&a, &b).unwrap();
        assert!((0.0..=2.0).contains(&d));
    }

    #[test]
    fn out_of_range_index_is_a_dimension_error() {
        let vectors = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let model = fit_pca(&vectors, 2, 2).unwrap();
        let wide = sv(&[(5, 1.0)]);
        assert!(matches!(
            model.project(&wide),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            fit_pca(&[wide], 2, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rank_deficient_fit_completes_an_orthonormal_basis() {
        // Two distinct points in 5-D have rank 1 after centering; asking for
        // 2 components forces one completed direction with zero variance.
        let vectors = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let model = fit_pca(&vectors, 5, 2).unwrap();
        assert_eq!(model.k(), 2);
        check_orthonormal(&model, 1e-8);
        assert!(model.explained_variance()[0] > 0.0);
        assert_relative_eq!(model.explained_variance()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fits_are_deterministic() {
        let vectors = random_vectors(30, 25, 77);
        let a = fit_pca(&vectors, 25, 6).unwrap();
        let b = fit_pca(&vectors, 25, 6).unwrap();
        assert_eq!(a, b);
        let r1 = fit_pca_impl(&vectors, 25, 6, 0).unwrap();
        let r2 = fit_pca_impl(&vectors, 25, 6, 0).unwrap();
        assert_eq!(r1, r2);
    }
}
