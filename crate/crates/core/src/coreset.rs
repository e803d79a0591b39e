//! Sensitivity-sampling coresets, the lightweight-coreset baseline, and the
//! boosted PRONE pipeline (PRONE, then a sensitivity coreset, then weighted
//! k-means++ on the coreset).

use std::fmt;
use std::time::{Duration, Instant};

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::WeightedAliasIndex;

use crate::baseline::{
    model_from_centers, per_point_costs, weighted_kmeanspp_seed, weighted_lloyd_iterate, CenterSet,
    ClusteringModel, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::dataset::{write_csv_row, Dataset};
use crate::error::{invalid, Result};
use crate::pipeline::{prone, ProneConfig, ProneResult};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Cost share plus inverse cluster size, from a clustering.
    Sensitivity,
    /// Half uniform, half squared distance to the dataset mean.
    Lightweight,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sensitivity => "sensitivity",
            Self::Lightweight => "lightweight",
        })
    }
}

/// A sampling distribution over the rows of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityDistribution {
    pub probabilities: Vec<f64>,
    /// Unnormalized masses; `probabilities = masses / normalizer`.
    pub masses: Vec<f64>,
    pub normalizer: f64,
    pub kind: DistributionKind,
    /// Non-empty clusters in the generating clustering (0 for lightweight).
    pub clusters: usize,
}

impl SensitivityDistribution {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// `m_i = cost_i / total_cost + 1 / |cluster(i)|`, normalized by its analytic sum
/// `1 + k'` (`k'` non-empty clusters). With zero total cost the first term is
/// dropped and the sum is `k'`.
pub fn sensitivity_distribution(data: &Dataset, model: &ClusteringModel) -> Result<SensitivityDistribution> {
    let costs = per_point_costs(data, &model.centers, &model.assignment, model.z)?;
    let mut sizes = vec![0usize; model.centers.k()];
    for &j in &model.assignment {
        sizes[j] += 1;
    }
    let clusters = sizes.iter().filter(|&&s| s > 0).count();
    let total: f64 = costs.iter().sum();
    let masses: Vec<f64> = costs
        .iter()
        .zip(&model.assignment)
        .map(|(&c, &j)| {
            let share = if total > 0.0 { c / total } else { 0.0 };
            share + 1.0 / sizes[j] as f64
        })
        .collect();
    let normalizer = clusters as f64 + if total > 0.0 { 1.0 } else { 0.0 };
    let actual: f64 = masses.iter().sum();
    if (actual - normalizer).abs() > 1e-9 * normalizer {
        return Err(invalid(format!(
            "sensitivity masses sum to {actual}, expected {normalizer}"
        )));
    }
    Ok(SensitivityDistribution {
        probabilities: masses.iter().map(|m| m / normalizer).collect(),
        masses,
        normalizer,
        kind: DistributionKind::Sensitivity,
        clusters,
    })
}

/// `q_i = 1/(2n) + ||x_i - mu||^2 / (2 sum_j ||x_j - mu||^2)`.
pub fn lightweight_distribution(data: &Dataset) -> SensitivityDistribution {
    let n = data.n() as f64;
    let mu = data.mean();
    let d2: Vec<f64> = data.rows().map(|r| r.sq_dist(&mu)).collect();
    let total: f64 = d2.iter().sum();
    let masses: Vec<f64> = d2
        .iter()
        .map(|&v| 0.5 / n + if total > 0.0 { 0.5 * v / total } else { 0.5 / n })
        .collect();
    SensitivityDistribution {
        probabilities: masses.clone(),
        masses,
        normalizer: 1.0,
        kind: DistributionKind::Lightweight,
        clusters: 0,
    }
}

/// A single weighted point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPoint {
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCoreset {
    /// The sampled rows, one per draw (repeats kept).
    pub points: Dataset,
    pub weights: Vec<f64>,
    pub source_indices: Vec<usize>,
}

impl WeightedCoreset {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn samples(&self) -> Vec<WeightedPoint> {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &weight)| WeightedPoint {
                point: self.points.dense_row(i),
                weight,
            })
            .collect()
    }

    /// Dataset CSV with the weight as leading column.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let mut row = Vec::with_capacity(self.points.d() + 1);
        for (i, &w) in self.weights.iter().enumerate() {
            row.clear();
            row.push(w);
            row.extend(self.points.dense_row(i));
            write_csv_row(&mut out, &row);
        }
        out
    }
}

/// `s` i.i.d. draws with replacement; a draw of row `i` gets weight `1 / (s p_i)`,
/// which makes the weighted cost an unbiased estimate of the full cost.
pub fn sample_coreset<R: Rng + ?Sized>(
    data: &Dataset,
    dist: &SensitivityDistribution,
    s: usize,
    rng: &mut R,
) -> Result<WeightedCoreset> {
    if s == 0 {
        return Err(invalid("coreset size must be >= 1"));
    }
    if dist.len() != data.n() {
        return Err(invalid(format!(
            "distribution over {} points used with {} points",
            dist.len(),
            data.n()
        )));
    }
    let alias = WeightedAliasIndex::new(dist.probabilities.clone())
        .map_err(|e| invalid(format!("bad sampling distribution: {e}")))?;
    let source_indices: Vec<usize> = (0..s).map(|_| alias.sample(rng)).collect();
    let weights = source_indices
        .iter()
        .map(|&i| 1.0 / (s as f64 * dist.probabilities[i]))
        .collect();
    Ok(WeightedCoreset {
        points: data.select_rows(&source_indices)?,
        weights,
        source_indices,
    })
}

/// Weighted k-means++ on the coreset followed by weighted Lloyd (`z = 2`).
pub fn cluster_coreset<R: Rng + ?Sized>(coreset: &WeightedCoreset, k: usize, rng: &mut R) -> Result<ClusteringModel> {
    let init = weighted_kmeanspp_seed(&coreset.points, Some(&coreset.weights), k, 2.0, rng)?;
    let out = weighted_lloyd_iterate(
        &coreset.points,
        Some(&coreset.weights),
        &init,
        DEFAULT_MAX_ITERS,
        DEFAULT_TOL,
    )?;
    Ok(out.model)
}

/// Coreset size `ceil(alpha n)`.
pub fn coreset_size(alpha: f64, n: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok((alpha * n as f64).ceil() as usize)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoostedTimings {
    pub prone: Duration,
    pub coreset: Duration,
    pub seed: Duration,
}

impl BoostedTimings {
    pub fn total(&self) -> Duration {
        self.prone + self.coreset + self.seed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedResult {
    pub centers: CenterSet,
    pub z: f64,
    /// Weighted k-means++ model over the coreset points.
    pub coreset_model: ClusteringModel,
    pub coreset: WeightedCoreset,
    pub prone: ProneResult,
    pub timings: BoostedTimings,
}

impl BoostedResult {
    /// Nearest-center model on the full data (`O(ndk)`).
    pub fn evaluate(&self, data: &Dataset) -> Result<ClusteringModel> {
        model_from_centers(data, self.centers.clone(), self.z)
    }
}

/// PRONE, then a sensitivity coreset of `ceil(alpha n)` points, then weighted
/// k-means++ on the coreset.
pub fn boosted_prone(data: &Dataset, k: usize, z: f64, alpha: f64, seed: u64) -> Result<BoostedResult> {
    let s = coreset_size(alpha, data.n())?;
    if s < k {
        return Err(invalid(format!(
            "coreset size ceil(alpha n) = {s} is smaller than k = {k}"
        )));
    }
    let t = Instant::now();
    let cfg = ProneConfig::new(k).with_z(z).with_seed(derive_seed(seed, &[10]));
    let first = prone(data, &cfg)?;
    let t_prone = t.elapsed();

    let t = Instant::now();
    let dist = sensitivity_distribution(data, &first.model)?;
    let coreset = sample_coreset(data, &dist, s, &mut rng_from_seed(derive_seed(seed, &[11])))?;
    let t_coreset = t.elapsed();

    let t = Instant::now();
    let model = weighted_kmeanspp_seed(
        &coreset.points,
        Some(&coreset.weights),
        k,
        z,
        &mut rng_from_seed(derive_seed(seed, &[12])),
    )?;
    let t_seed = t.elapsed();

    Ok(BoostedResult {
        centers: model.centers.clone(),
        z,
        coreset_model: model,
        coreset,
        prone: first,
        timings: BoostedTimings {
            prone: t_prone,
            coreset: t_coreset,
            seed: t_seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{cost_with_nearest, kmeanspp_seed, weighted_cost_with_nearest};
    use crate::dataset::gen_gaussian_mixture;

    fn model_1d(xs: &[f64], cs: &[f64], sigma: &[usize]) -> (Dataset, ClusteringModel) {
        let data = Dataset::from_scalars(xs).unwrap();
        let rows: Vec<[f64; 1]> = cs.iter().map(|&c| [c]).collect();
        let centers = CenterSet::from_rows(&rows).unwrap();
        let cost = crate::baseline::cost_with_assignment(&data, &centers, sigma, 2.0).unwrap();
        (
            data,
            ClusteringModel {
                centers,
                assignment: sigma.to_vec(),
                cost,
                z: 2.0,
                exhausted: false,
            },
        )
    }

    #[test]
    fn sensitivity_hand_example() {
        let (data, model) = model_1d(&[0.0, 1.0, 10.0], &[0.0, 10.0], &[0, 0, 1]);
        let dist = sensitivity_distribution(&data, &model).unwrap();
        assert_eq!(dist.masses, vec![0.5, 1.5, 1.0]);
        let expect = [1.0 / 6.0, 0.5, 1.0 / 3.0];
        for (p, e) in dist.probabilities.iter().zip(expect) {
            assert!((p - e).abs() < 1e-15);
        }
        assert_eq!(dist.clusters, 2);
    }

    #[test]
    fn zero_cost_gives_inverse_cluster_size() {
        let (data, model) = model_1d(&[0.0, 0.0, 0.0, 5.0], &[0.0, 5.0], &[0, 0, 0, 1]);
        let dist = sensitivity_distribution(&data, &model).unwrap();
        assert_eq!(dist.normalizer, 2.0);
        let per_cluster = [dist.probabilities[..3].iter().sum::<f64>(), dist.probabilities[3]];
        assert!((per_cluster[0] - 0.5).abs() < 1e-15 && (per_cluster[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn masses_telescope_and_stay_positive() {
        for seed in 0..20 {
            let mx = gen_gaussian_mixture(4, 30, 3, 20.0, seed).unwrap();
            let r = prone(&mx.data, &ProneConfig::new(5).with_seed(seed)).unwrap();
            let dist = sensitivity_distribution(&mx.data, &r.model).unwrap();
            let total: f64 = dist.masses.iter().sum();
            assert!((total - (1.0 + r.model.k() as f64)).abs() < 1e-9);
            assert!(dist.probabilities.iter().all(|&p| p > 0.0));
            assert!((dist.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lightweight_examples() {
        let same = Dataset::from_scalars(&[3.0, 3.0, 3.0]).unwrap();
        assert!(lightweight_distribution(&same)
            .probabilities
            .iter()
            .all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        let sym = Dataset::from_scalars(&[-1.0, 1.0]).unwrap();
        assert_eq!(lightweight_distribution(&sym).probabilities, vec![0.5, 0.5]);

        let xs = [0.0, 0.0, 0.0, 0.0, 10.0];
        let q = lightweight_distribution(&Dataset::from_scalars(&xs).unwrap()).probabilities;
        // linear-scan evaluation of the formula
        let mu = xs.iter().sum::<f64>() / 5.0;
        let total: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
        for (i, &x) in xs.iter().enumerate() {
            let e = 1.0 / 10.0 + (x - mu) * (x - mu) / (2.0 * total);
            assert!((q[i] - e).abs() < 1e-15);
        }
        assert!((q[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_draw_weight() {
        let (data, model) = model_1d(&[0.0, 1.0, 10.0], &[0.0, 10.0], &[0, 0, 1]);
        let dist = sensitivity_distribution(&data, &model).unwrap();
        let cs = sample_coreset(&data, &dist, 1, &mut rng_from_seed(5)).unwrap();
        assert_eq!(cs.len(), 1);
        let i = cs.source_indices[0];
        assert_eq!(cs.weights[0], 1.0 / dist.probabilities[i]);
        assert!(sample_coreset(&data, &dist, 0, &mut rng_from_seed(5)).is_err());
    }

    #[test]
    fn uniform_full_size_has_unit_mean_weight() {
        let data = Dataset::from_scalars(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let dist = SensitivityDistribution {
            probabilities: vec![0.25; 4],
            masses: vec![0.25; 4],
            normalizer: 1.0,
            kind: DistributionKind::Lightweight,
            clusters: 0,
        };
        let cs = sample_coreset(&data, &dist, 4, &mut rng_from_seed(1)).unwrap();
        assert!(cs.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn coreset_cost_is_unbiased() {
        let mx = gen_gaussian_mixture(5, 200, 3, 30.0, 3).unwrap();
        let r = prone(&mx.data, &ProneConfig::new(5).with_seed(1)).unwrap();
        let dist = sensitivity_distribution(&mx.data, &r.model).unwrap();
        let fixed = CenterSet::from_rows(&[[5.0, 5.0, 5.0], [20.0, 10.0, 0.0], [0.0, 30.0, 15.0]]).unwrap();
        let full = cost_with_nearest(&mx.data, &fixed, 2.0).unwrap();
        let mut rng = rng_from_seed(2);
        let reps = 500;
        let mean = (0..reps)
            .map(|_| {
                let cs = sample_coreset(&mx.data, &dist, 64, &mut rng).unwrap();
                weighted_cost_with_nearest(&cs.points, Some(&cs.weights), &fixed, 2.0).unwrap()
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean / full - 1.0).abs() < 0.05, "{mean} vs {full}");
    }

    #[test]
    fn csv_has_weight_column() {
        let data = Dataset::from_rows(&[[1.0, 2.0]]).unwrap();
        let cs = WeightedCoreset {
            points: data,
            weights: vec![0.5],
            source_indices: vec![0],
        };
        assert_eq!(cs.to_csv_string(), "0.5,1,2\n");
        assert_eq!(cs.samples()[0].point, vec![1.0, 2.0]);
    }

    #[test]
    fn boosted_rejects_small_coresets() {
        let mx = gen_gaussian_mixture(2, 50, 2, 10.0, 0).unwrap();
        assert!(boosted_prone(&mx.data, 5, 2.0, 0.01, 0).is_err());
        assert!(boosted_prone(&mx.data, 5, 2.0, 0.0, 0).is_err());
        assert!(boosted_prone(&mx.data, 1, 2.0, 0.01, 0).is_ok());
    }

    #[test]
    fn boosted_k_equals_n_is_exact() {
        let data = Dataset::from_scalars(&[0.0, 1.0, 5.0, 9.0]).unwrap();
        // with k = n every point is its own PRONE cluster, so p_i = 1/n and the
        // coreset is a with-replacement sample; cost 0 needs every row drawn
        for seed in 0..50 {
            let b = boosted_prone(&data, 4, 2.0, 1.0, seed).unwrap();
            let mut seen = b.coreset.source_indices.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() == 4 {
                assert_eq!(b.evaluate(&data).unwrap().cost, 0.0);
            }
            assert_eq!(b.centers.k(), seen.len().min(4));
        }
    }

    #[test]
    fn weighted_seeding_is_weight_scale_invariant() {
        let mx = gen_gaussian_mixture(3, 30, 2, 10.0, 4).unwrap();
        let ones = vec![1.0; mx.data.n()];
        let fours = vec![4.0; mx.data.n()];
        for seed in 0..10 {
            let a = weighted_kmeanspp_seed(&mx.data, Some(&ones), 5, 2.0, &mut rng_from_seed(seed)).unwrap();
            let b = weighted_kmeanspp_seed(&mx.data, Some(&fours), 5, 2.0, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(a.centers, b.centers);
        }
    }

    #[test]
    fn boosted_quality_close_to_kmeanspp() {
        let mx = gen_gaussian_mixture(20, 500, 10, 100.0, 20_240_601).unwrap();
        // costs are heavy tailed (a missed cluster dominates), so average many runs
        let runs = 30;
        let (mut boosted, mut base) = (0.0, 0.0);
        for seed in 0..runs {
            boosted += boosted_prone(&mx.data, 20, 2.0, 0.1, seed).unwrap().evaluate(&mx.data).unwrap().cost;
            base += kmeanspp_seed(&mx.data, 20, 2.0, &mut rng_from_seed(seed)).unwrap().cost;
        }
        assert!(boosted <= 1.5 * base, "boosted {boosted} vs k-means++ {base}");
    }
}
