use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Full-rank principal component basis.
///
/// `components[k]` is the k-th unit eigenvector of the sample covariance,
/// ordered by decreasing `explained_variance[k]`. Each component's sign is
/// fixed so that its largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

pub fn pca_fit(d: &Dataset) -> Result<PcaModel, DataError> {
    if d.is_empty() {
        return Err(DataError::Empty);
    }
    let (n, p) = (d.n_rows(), d.n_features());
    if n <= p {
        log::warn!("PCA on {n} rows and {p} features: covariance is rank deficient");
    }
    let mut mean = vec![0.0; p];
    for row in d.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let denom = (n.max(2) - 1) as f64;
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for row in d.rows() {
        for a in 0..p {
            let da = row[a] - mean[a];
            for b in a..p {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    // stable: equal eigenvalues keep the solver's column order
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut components = Vec::with_capacity(p);
    let mut explained_variance = Vec::with_capacity(p);
    for &k in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = v
            .iter()
            .copied()
            .fold(0.0_f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Scores of `row` on components `skip..`.
    pub fn project_row(&self, row: &[f64], skip: usize) -> Vec<f64> {
        self.components[skip..]
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row)
                    .zip(&self.mean)
                    .map(|((w, x), m)| w * (x - m))
                    .sum()
            })
            .collect()
    }

    /// Projects onto components `skip..`, naming output columns `pc{k}`.
    pub fn project(&self, d: &Dataset, skip: usize) -> Result<Dataset, DataError> {
        if d.n_features() != self.n_features() {
            return Err(DataError::Shape(format!(
                "PCA fitted on {} features, dataset has {}",
                self.n_features(),
                d.n_features()
            )));
        }
        let flat = d.rows().flat_map(|r| self.project_row(r, skip)).collect();
        let names = (skip..self.n_features()).map(|k| format!("pc{k}")).collect();
        d.with_features(flat, names)
    }

    /// Maps full-basis scores back to the input space.
    pub fn reconstruct_row(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, s) in self.components.iter().zip(scores) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += s * w;
            }
        }
        out
    }

    /// Share of total variance carried by the first `n_drop` components.
    pub fn dropped_variance_fraction(&self, n_drop: usize) -> f64 {
        let total: f64 = self.explained_variance.iter().sum();
        if total <= 0.0 || n_drop == 0 {
            return 0.0;
        }
        self.explained_variance[..n_drop].iter().sum::<f64>() / total
    }
}

/// Removes the `n_drop` highest-variance components; returns the projected
/// dataset and the fraction of variance removed.
pub fn pca_drop_top(m: &PcaModel, d: &Dataset, n_drop: usize) -> Result<(Dataset, f64), DataError> {
    let p = m.n_features();
    if n_drop == 0 || n_drop >= p {
        return Err(DataError::DropOutOfRange {
            n_drop,
            n_features: p,
        });
    }
    let projected = m.project(d, n_drop)?;
    Ok((projected, m.dropped_variance_fraction(n_drop)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Cyclic Jacobi rotations; independent of the production eigensolver.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    fn sample_cov(d: &Dataset) -> Vec<Vec<f64>> {
        let p = d.n_features();
        let n = d.n_rows() as f64;
        let means: Vec<f64> = (0..p).map(|j| d.column(j).iter().sum::<f64>() / n).collect();
        (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| {
                        d.rows()
                            .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
                            .sum::<f64>()
                            / (n - 1.0)
                    })
                    .collect()
            })
            .collect()
    }

    fn gaussian(n: usize, scales: &[f64], seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| Normal::new(0.0, *s).unwrap().sample(&mut rng))
                    .collect()
            })
            .collect();
        Dataset::from_rows(&rows, vec![0; n]).unwrap()
    }

    fn assert_orthonormal(m: &PcaModel) {
        let p = m.n_features();
        for a in 0..p {
            for b in 0..p {
                let dot: f64 = m.components[a].iter().zip(&m.components[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8, "({a},{b}) = {dot}");
            }
        }
    }

    #[test]
    fn line_y_equals_x() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let d = Dataset::from_rows(&rows, vec![0; 10]).unwrap();
        let m = pca_fit(&d).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.components[0][0] - h).abs() < 1e-10);
        assert!((m.components[0][1] - h).abs() < 1e-10);
        assert!(m.explained_variance[1].abs() < 1e-10);
        assert_orthonormal(&m);
    }

    #[test]
    fn isotropic_sample_matches_jacobi() {
        let d = gaussian(4000, &[1.0, 1.0, 1.0], 11);
        let m = pca_fit(&d).unwrap();
        let oracle = jacobi_eigenvalues(sample_cov(&d));
        for (got, want) in m.explained_variance.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let spread = oracle[0] / oracle[2];
        assert!(spread < 1.15, "isotropic eigenvalues spread {spread}");
        assert_orthonormal(&m);
    }

    #[test]
    fn drop_fraction_matches_jacobi() {
        let d = gaussian(500, &[3.0, 1.5, 0.5], 5);
        let m = pca_fit(&d).unwrap();
        let ev = jacobi_eigenvalues(sample_cov(&d));
        let (reduced, frac) = pca_drop_top(&m, &d, 2).unwrap();
        assert_eq!(reduced.n_features(), 1);
        let want = (ev[0] + ev[1]) / (ev[0] + ev[1] + ev[2]);
        assert!((frac - want).abs() < 1e-10);
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn drop_range_checks() {
        let d = gaussian(50, &[1.0, 1.0, 1.0], 1);
        let m = pca_fit(&d).unwrap();
        assert!(matches!(pca_drop_top(&m, &d, 0), Err(DataError::DropOutOfRange { .. })));
        assert!(matches!(pca_drop_top(&m, &d, 3), Err(DataError::DropOutOfRange { .. })));
        let fracs: Vec<f64> = (0..=3).map(|k| m.dropped_variance_fraction(k)).collect();
        assert!(fracs.windows(2).all(|w| w[0] <= w[1]));
        assert!(fracs[2] < 1.0);
        assert!((fracs[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_projection_round_trips() {
        let d = gaussian(80, &[2.0, 0.3, 1.0, 4.0], 9);
        let m = pca_fit(&d).unwrap();
        let proj = m.project(&d, 0).unwrap();
        for i in 0..d.n_rows() {
            let back = m.reconstruct_row(proj.row(i));
            for (a, b) in back.iter().zip(d.row(i)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_dataset_errors() {
        let d = Dataset::from_rows(&[], vec![]).unwrap();
        assert!(matches!(pca_fit(&d), Err(DataError::Empty)));
    }
}
