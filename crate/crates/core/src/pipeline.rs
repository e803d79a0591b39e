//! PRONE: project to one dimension, seed there with k-means++, lift the clusters
//! back to `R^d` as centers of mass.
//!
//! Everything except the optional nearest reassignment runs in
//! `O(nnz(X) + n log n)` expected time, independent of `k`.

use std::time::{Duration, Instant};

use crate::baseline::{centers_of_mass, cost_with_assignment, cost_with_nearest, ClusteringModel};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::projection::{project, sample_direction, ProjectionVariant, ProjectionVector};
use crate::rng::{derive_seed, rng_from_seed};
use crate::seeding1d::{seed_1d_fast, SeedingStats};

#[derive(Debug, Clone, PartialEq)]
pub struct ProneConfig {
    pub k: usize,
    pub z: f64,
    pub variant: ProjectionVariant,
    pub seed: u64,
    /// Keep the seeding counters in the result.
    pub collect_stats: bool,
    /// Also evaluate the `O(ndk)` nearest-center cost of the lifted centers.
    pub assign_nearest: bool,
}

impl ProneConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            z: 2.0,
            variant: ProjectionVariant::Standard,
            seed: 0,
            collect_stats: true,
            assign_nearest: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_z(mut self, z: f64) -> Self {
        self.z = z;
        self
    }

    pub fn with_variant(mut self, variant: ProjectionVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_nearest(mut self, on: bool) -> Self {
        self.assign_nearest = on;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseTimings {
    pub project: Duration,
    pub seed: Duration,
    pub lift: Duration,
    /// Only set when the nearest reassignment ran.
    pub assign: Option<Duration>,
}

impl PhaseTimings {
    /// Time of the algorithm proper, excluding the evaluation-only reassignment.
    pub fn algorithm(&self) -> Duration {
        self.project + self.seed + self.lift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProneResult {
    /// Centers of mass of the 1-D clusters; `assignment` is the 1-D assignment and
    /// `cost` is the cost under it.
    pub model: ClusteringModel,
    /// Cost after reassigning every point to its nearest center, if requested.
    pub cost_nearest: Option<f64>,
    pub projection: ProjectionVector,
    /// Input indices of the points chosen as 1-D centers.
    pub seed_indices: Vec<usize>,
    pub stats: Option<SeedingStats>,
    pub timings: PhaseTimings,
}

impl ProneResult {
    /// The 1-D seeding ran out of distinct values before reaching `k`.
    pub fn is_short(&self) -> bool {
        self.model.exhausted
    }
}

pub fn prone(data: &Dataset, cfg: &ProneConfig) -> Result<ProneResult> {
    if cfg.k < 1 || cfg.k > data.n() {
        return Err(invalid(format!(
            "k must satisfy 1 <= k <= n (k={}, n={})",
            cfg.k,
            data.n()
        )));
    }
    let t = Instant::now();
    let projection = sample_direction(data, cfg.variant, derive_seed(cfg.seed, &[1]));
    let xs = project(data, &projection)?;
    let t_project = t.elapsed();

    let t = Instant::now();
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[2]));
    let (seeding, stats) = seed_1d_fast(&xs, cfg.k, cfg.z, &mut rng)?;
    let t_seed = t.elapsed();

    let t = Instant::now();
    let k = seeding.num_centers();
    let com = centers_of_mass(data, &seeding.assignment, k)?;
    debug_assert!(com.empty.is_empty(), "every 1-D center owns its own point");
    let cost = cost_with_assignment(data, &com.centers, &seeding.assignment, cfg.z)?;
    let t_lift = t.elapsed();

    let (cost_nearest, t_assign) = if cfg.assign_nearest {
        let t = Instant::now();
        let c = cost_with_nearest(data, &com.centers, cfg.z)?;
        (Some(c), Some(t.elapsed()))
    } else {
        (None, None)
    };

    Ok(ProneResult {
        model: ClusteringModel {
            centers: com.centers,
            assignment: seeding.assignment,
            cost,
            z: cfg.z,
            exhausted: seeding.exhausted,
        },
        cost_nearest,
        projection,
        seed_indices: seeding.center_indices,
        stats: cfg.collect_stats.then_some(stats),
        timings: PhaseTimings {
            project: t_project,
            seed: t_seed,
            lift: t_lift,
            assign: t_assign,
        },
    })
}

/// Nearest-center cost of the lifted centers (`O(ndk)`, evaluation only).
pub fn prone_center_cost(data: &Dataset, result: &ProneResult) -> Result<f64> {
    cost_with_nearest(data, &result.model.centers, result.model.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_gaussian_mixture;

    #[test]
    fn k_equals_n_has_zero_cost() {
        let mx = gen_gaussian_mixture(2, 5, 3, 10.0, 1).unwrap();
        let r = prone(&mx.data, &ProneConfig::new(10).with_seed(3).with_nearest(true)).unwrap();
        assert_eq!(r.model.cost, 0.0);
        assert_eq!(r.cost_nearest, Some(0.0));
        assert_eq!(prone_center_cost(&mx.data, &r).unwrap(), 0.0);
    }

    #[test]
    fn separates_two_far_points() {
        let x = Dataset::from_rows(&[[0.0, 0.0], [100.0, -50.0]]).unwrap();
        for seed in 0..20 {
            let r = prone(&x, &ProneConfig::new(2).with_seed(seed)).unwrap();
            assert_ne!(r.model.assignment[0], r.model.assignment[1]);
            assert_eq!(r.model.cost, 0.0);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let x = Dataset::from_scalars(&[1.0, 2.0]).unwrap();
        assert!(prone(&x, &ProneConfig::new(0)).is_err());
        assert!(prone(&x, &ProneConfig::new(3)).is_err());
    }

    #[test]
    fn deterministic() {
        let mx = gen_gaussian_mixture(4, 50, 5, 30.0, 2).unwrap();
        for variant in ProjectionVariant::ALL {
            let cfg = ProneConfig::new(6).with_seed(99).with_variant(variant);
            let a = prone(&mx.data, &cfg).unwrap();
            let b = prone(&mx.data, &cfg).unwrap();
            assert_eq!(a.model, b.model);
            assert_eq!(a.projection, b.projection);
        }
    }

    #[test]
    fn nearest_cost_is_never_worse() {
        for seed in 0..20 {
            let mx = gen_gaussian_mixture(5, 40, 4, 20.0, seed).unwrap();
            let r = prone(&mx.data, &ProneConfig::new(5).with_seed(seed)).unwrap();
            let nearest = prone_center_cost(&mx.data, &r).unwrap();
            assert!(nearest <= r.model.cost * (1.0 + 1e-12));
            // brute force over centers
            let brute: f64 = (0..mx.data.n())
                .map(|i| {
                    let x = mx.data.dense_row(i);
                    r.model
                        .centers
                        .iter()
                        .map(|c| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            assert!((nearest - brute).abs() <= 1e-9 * brute);
        }
    }

    #[test]
    fn scale_equivariance() {
        let mx = gen_gaussian_mixture(3, 30, 4, 10.0, 7).unwrap();
        // a power of two keeps every mass ratio exact
        let lambda = 4.0;
        let scaled = mx.data.scaled(lambda);
        for z in [1.0, 2.0] {
            for seed in 0..5 {
                let cfg = ProneConfig::new(4).with_seed(seed).with_z(z);
                let a = prone(&mx.data, &cfg).unwrap();
                let b = prone(&scaled, &cfg).unwrap();
                assert_eq!(a.model.assignment, b.model.assignment);
                let expect = a.model.cost * lambda.powf(z);
                assert!((b.model.cost - expect).abs() <= 1e-9 * expect);
            }
        }
    }

    #[test]
    fn mixture_cost_near_ground_truth() {
        let mx = gen_gaussian_mixture(20, 500, 10, 10.0, 11).unwrap();
        let truth = crate::baseline::CenterSet::from_rows(&mx.centers).unwrap();
        let truth_cost = cost_with_assignment(&mx.data, &truth, &mx.labels, 2.0).unwrap();
        let mut ratios: Vec<f64> = (0..30)
            .map(|s| prone(&mx.data, &ProneConfig::new(20).with_seed(s)).unwrap().model.cost / truth_cost)
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = 0.5 * (ratios[14] + ratios[15]);
        assert!(median <= 10.0, "median ratio {median}");
    }

    #[test]
    fn short_seeding_on_duplicates() {
        let x = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0], [2.0, 0.0], [2.0, 0.0]]).unwrap();
        let r = prone(&x, &ProneConfig::new(3).with_seed(1)).unwrap();
        assert!(r.is_short());
        assert_eq!(r.model.k(), 2);
        assert_eq!(r.model.cost, 0.0);
    }
}
