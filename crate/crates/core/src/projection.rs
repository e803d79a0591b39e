//! Random one-dimensional projections in `O(nnz + n)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Row};
use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, Rng64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ProjectionVariant {
    /// `v ~ N(0, I_d)`.
    #[default]
    Standard,
    /// `v ~ N(0, diag(var_1, ..., var_d))` with empirical per-feature variances.
    Variance,
    /// `v ~ N(0, Sigma)` with the empirical covariance matrix.
    Covariance,
}

impl ProjectionVariant {
    pub const ALL: [ProjectionVariant; 3] = [Self::Standard, Self::Variance, Self::Covariance];

    pub fn name(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Variance => "variance",
            Self::Covariance => "covariance",
        }
    }
}

impl fmt::Display for ProjectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProjectionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "variance" => Ok(Self::Variance),
            "covariance" => Ok(Self::Covariance),
            other => Err(invalid(format!("unknown projection variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionVector {
    pub direction: Vec<f64>,
    pub variant: ProjectionVariant,
    pub seed: u64,
}

const MAX_REDRAWS: usize = 16;

fn gaussian_vec(rng: &mut Rng64, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn draw(data: &Dataset, variant: ProjectionVariant, rng: &mut Rng64) -> Vec<f64> {
    let d = data.d();
    match variant {
        ProjectionVariant::Standard => gaussian_vec(rng, d),
        ProjectionVariant::Variance => {
            let var = data.feature_variances();
            gaussian_vec(rng, d)
                .into_iter()
                .zip(var)
                .map(|(g, v)| g * v.sqrt())
                .collect()
        }
        ProjectionVariant::Covariance => {
            // X_c^T h / sqrt(n) = (X^T h - mu * sum(h)) / sqrt(n), distributed N(0, Sigma)
            let n = data.n();
            let h = gaussian_vec(rng, n);
            let mut v = vec![0.0; d];
            for (row, &hi) in data.rows().zip(&h) {
                row.add_scaled_to(&mut v, hi);
            }
            let mu = data.mean();
            let hsum: f64 = h.iter().sum();
            let scale = 1.0 / (n as f64).sqrt();
            v.iter_mut()
                .zip(&mu)
                .for_each(|(vj, &m)| *vj = (*vj - m * hsum) * scale);
            v
        }
    }
}

/// Draws a projection direction. A degenerate all-zero direction is redrawn; if
/// the data has no spread at all the standard Gaussian direction is used instead.
pub fn sample_direction(data: &Dataset, variant: ProjectionVariant, seed: u64) -> ProjectionVector {
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_REDRAWS {
        let direction = draw(data, variant, &mut rng);
        if direction.iter().any(|&v| v != 0.0) {
            return ProjectionVector {
                direction,
                variant,
                seed,
            };
        }
        if variant != ProjectionVariant::Standard && data.feature_variances().iter().all(|&v| v == 0.0) {
            break;
        }
    }
    let direction = loop {
        let g = gaussian_vec(&mut rng, data.d());
        if g.iter().any(|&v| v != 0.0) {
            break g;
        }
    };
    ProjectionVector {
        direction,
        variant,
        seed,
    }
}

/// `x'_i = <x_i, v>` for every row, reading only stored entries.
pub fn project(data: &Dataset, v: &ProjectionVector) -> Result<Vec<f64>> {
    project_onto(data, &v.direction)
}

pub fn project_onto(data: &Dataset, direction: &[f64]) -> Result<Vec<f64>> {
    if direction.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            got: direction.len(),
        });
    }
    Ok(data.rows().map(|r: Row<'_>| r.dot(direction)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_gaussian_mixture;

    #[test]
    fn dot_examples() {
        let ds = Dataset::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(project_onto(&ds, &[1.0, 0.0]).unwrap(), vec![3.0]);
        let sp = Dataset::from_sparse_rows(6, &[vec![(0, 2.0), (5, -1.0)]]).unwrap();
        assert_eq!(project_onto(&sp, &[1.0; 6]).unwrap(), vec![1.0]);
        assert!(matches!(
            project_onto(&ds, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn standard_is_reproducible_and_normal() {
        let ds = Dataset::from_rows(&[[0.0, 0.0, 0.0]]).unwrap();
        let a = sample_direction(&ds, ProjectionVariant::Standard, 42);
        let b = sample_direction(&ds, ProjectionVariant::Standard, 42);
        assert_eq!(a, b);
        assert_eq!(a.direction.len(), 3);

        let draws = 10_000;
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for s in 0..draws {
            let v = sample_direction(&ds, ProjectionVariant::Standard, s).direction;
            for j in 0..3 {
                sum[j] += v[j];
                sq[j] += v[j] * v[j];
            }
        }
        for j in 0..3 {
            let mean = sum[j] / draws as f64;
            let var = sq[j] / draws as f64 - mean * mean;
            assert!(mean.abs() < 0.05, "mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "var {var}");
        }
    }

    #[test]
    fn variance_zeroes_constant_features() {
        let ds = Dataset::from_rows(&[[1.0, 7.0, 0.3], [2.0, 7.0, 0.1], [5.0, 7.0, 0.2]]).unwrap();
        for s in 0..20 {
            let v = sample_direction(&ds, ProjectionVariant::Variance, s);
            assert_eq!(v.direction[1], 0.0);
            assert!(v.direction[0] != 0.0);
        }
    }

    #[test]
    fn covariance_of_a_line_is_parallel_to_it() {
        let dir = [1.0, -2.0, 0.5];
        let rows: Vec<Vec<f64>> = [-3.0, -1.0, 0.5, 2.0, 4.0]
            .iter()
            .map(|t| dir.iter().map(|d| d * t).collect())
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        for s in 0..10 {
            let v = sample_direction(&ds, ProjectionVariant::Covariance, s).direction;
            let dot: f64 = v.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nd = dir.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!((dot.abs() / (nv * nd) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_on_sparse_matches_dense() {
        let sp = Dataset::from_sparse_rows(
            4,
            &[vec![(0, 1.0), (3, 2.0)], vec![(1, -1.0)], vec![(0, 0.5), (2, 3.0)]],
        )
        .unwrap();
        let dn = sp.to_dense();
        for variant in ProjectionVariant::ALL {
            let a = sample_direction(&sp, variant, 9).direction;
            let b = sample_direction(&dn, variant, 9).direction;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn degenerate_data_still_gets_a_direction() {
        let ds = Dataset::from_rows(&[[2.0, 2.0], [2.0, 2.0]]).unwrap();
        for variant in ProjectionVariant::ALL {
            let v = sample_direction(&ds, variant, 1);
            assert!(v.direction.iter().any(|&x| x != 0.0));
        }
    }

    #[test]
    fn two_stability_monte_carlo() {
        let x = [1.5, -2.0, 0.25, 3.0];
        let ds = Dataset::from_rows(&[x]).unwrap();
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        let reps = 100_000u64;
        let mean: f64 = (0..reps)
            .map(|s| {
                let p = project(&ds, &sample_direction(&ds, ProjectionVariant::Standard, s)).unwrap()[0];
                p * p
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean / norm2 - 1.0).abs() < 0.02, "{mean} vs {norm2}");
    }

    #[test]
    fn linear_and_storage_agnostic() {
        let mx = gen_gaussian_mixture(3, 20, 5, 10.0, 2).unwrap();
        let v = sample_direction(&mx.data, ProjectionVariant::Standard, 5);
        let px = project(&mx.data, &v).unwrap();
        let doubled = project(&mx.data.scaled(2.0), &v).unwrap();
        for (a, b) in px.iter().zip(&doubled) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        let rows: Vec<Vec<(usize, f64)>> = (0..mx.data.n())
            .map(|i| mx.data.dense_row(i).into_iter().enumerate().collect())
            .collect();
        let sp = Dataset::from_sparse_rows(5, &rows).unwrap();
        let ps = project(&sp, &v).unwrap();
        for (a, b) in px.iter().zip(&ps) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }
}
