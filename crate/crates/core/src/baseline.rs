//! Reference `d`-dimensional algorithms: `(k, z)` costs, k-means++ seeding for
//! general `z`, centers of mass and Lloyd refinement. Every routine has a weighted
//! form used on coresets; the unweighted form is the weighted one with unit weights.

use rand::Rng;

use crate::dataset::{sq_norm, Dataset};
use crate::error::{invalid, Error, Result};
use crate::seeding1d::pow_z;

/// Default relative-improvement threshold for [`lloyd_iterate`].
pub const DEFAULT_TOL: f64 = 1e-4;
/// Default iteration cap for [`lloyd_iterate`].
pub const DEFAULT_MAX_ITERS: usize = 300;

/// `k` dense centers in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    d: usize,
    values: Vec<f64>,
    norms: Vec<f64>,
}

impl CenterSet {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 || values.is_empty() || values.len() % d != 0 {
            return Err(invalid(format!(
                "center values ({}) must be a non-empty multiple of d={d}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("centers must be finite"));
        }
        let norms = values.chunks_exact(d).map(sq_norm).collect();
        Ok(Self { d, values, norms })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(invalid("centers have mixed dimensions"));
        }
        Self::new(d, rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect())
    }

    /// The given data rows as centers.
    pub fn from_data_rows(data: &Dataset, idx: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(idx.len() * data.d());
        for &i in idx {
            values.extend(data.dense_row(i));
        }
        Self::new(data.d(), values)
    }

    pub fn k(&self) -> usize {
        self.values.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn sq_dist(&self, data: &Dataset, i: usize, j: usize) -> f64 {
        data.row(i).sq_dist_with_norm(self.center(j), self.norms[j])
    }

    pub(crate) fn check_dim(&self, data: &Dataset) -> Result<()> {
        if self.d != data.d() {
            return Err(Error::DimensionMismatch {
                expected: data.d(),
                got: self.d,
            });
        }
        Ok(())
    }
}

/// A center set, an assignment of every point to one of its centers, and the
/// `z`-cost of that assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringModel {
    pub centers: CenterSet,
    pub assignment: Vec<usize>,
    pub cost: f64,
    pub z: f64,
    /// Fewer than the requested number of centers could be placed.
    pub exhausted: bool,
}

impl ClusteringModel {
    pub fn k(&self) -> usize {
        self.centers.k()
    }
}

/// `||x - c||^z` from the squared distance.
#[inline]
pub fn dist_pow(sq: f64, z: f64) -> f64 {
    if z == 2.0 {
        sq
    } else {
        pow_z(sq.sqrt(), z)
    }
}

fn check_weights(data: &Dataset, weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != data.n() {
            return Err(invalid(format!("{} weights for {} points", w.len(), data.n())));
        }
        if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(invalid("weights must be finite and >= 0"));
        }
    }
    Ok(())
}

fn check_z(z: f64) -> Result<()> {
    if z >= 1.0 && z.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("z must be a finite real >= 1, got {z}")))
    }
}

#[inline]
fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

/// Index of the nearest center and the squared distance to it, per point.
/// Ties go to the lowest center index.
pub fn nearest_assignment(data: &Dataset, centers: &CenterSet) -> Result<(Vec<usize>, Vec<f64>)> {
    centers.check_dim(data)?;
    let mut labels = Vec::with_capacity(data.n());
    let mut dists = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let mut best = 0;
        let mut best_d = centers.sq_dist(data, i, 0);
        for j in 1..centers.k() {
            let dj = centers.sq_dist(data, i, j);
            if dj < best_d {
                best = j;
                best_d = dj;
            }
        }
        labels.push(best);
        dists.push(best_d);
    }
    Ok((labels, dists))
}

/// `sum_i min_j ||x_i - c_j||^z`.
pub fn cost_with_nearest(data: &Dataset, centers: &CenterSet, z: f64) -> Result<f64> {
    weighted_cost_with_nearest(data, None, centers, z)
}

/// `sum_i w_i min_j ||x_i - c_j||^z`.
pub fn weighted_cost_with_nearest(
    data: &Dataset,
    weights: Option<&[f64]>,
    centers: &CenterSet,
    z: f64,
) -> Result<f64> {
    check_z(z)?;
    check_weights(data, weights)?;
    let (_, d2) = nearest_assignment(data, centers)?;
    Ok(d2
        .iter()
        .enumerate()
        .map(|(i, &s)| weight(weights, i) * dist_pow(s, z))
        .sum())
}

/// Nearest-center model for a fixed center set.
pub fn model_from_centers(data: &Dataset, centers: CenterSet, z: f64) -> Result<ClusteringModel> {
    check_z(z)?;
    let (assignment, d2) = nearest_assignment(data, &centers)?;
    let cost = d2.iter().map(|&s| dist_pow(s, z)).sum();
    Ok(ClusteringModel {
        centers,
        assignment,
        cost,
        z,
        exhausted: false,
    })
}

/// `sum_i ||x_i - c_{sigma(i)}||^z`.
pub fn cost_with_assignment(data: &Dataset, centers: &CenterSet, sigma: &[usize], z: f64) -> Result<f64> {
    Ok(per_point_costs(data, centers, sigma, z)?.iter().sum())
}

/// `||x_i - c_{sigma(i)}||^z` for every point.
pub fn per_point_costs(data: &Dataset, centers: &CenterSet, sigma: &[usize], z: f64) -> Result<Vec<f64>> {
    check_z(z)?;
    centers.check_dim(data)?;
    if sigma.len() != data.n() {
        return Err(invalid(format!("assignment has {} labels for {} points", sigma.len(), data.n())));
    }
    sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            if j >= centers.k() {
                Err(invalid(format!("label {j} of point {i} out of range for k={}", centers.k())))
            } else {
                Ok(dist_pow(centers.sq_dist(data, i, j), z))
            }
        })
        .collect()
}

/// Linear-scan inverse CDF; falls back to the last positive mass under rounding.
fn pick_linear(masses: &[f64], r: f64) -> usize {
    let mut acc = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        acc += m;
        if r < acc {
            return i;
        }
    }
    masses.iter().rposition(|&m| m > 0.0).expect("positive total mass")
}

fn scaled_draw<R: Rng + ?Sized>(rng: &mut R, total: f64) -> f64 {
    let u: f64 = rng.gen();
    let r = u * total;
    if r >= total {
        total.next_down()
    } else {
        r
    }
}

/// k-means++ seeding for general `z` in `O(ndk)`.
pub fn kmeanspp_seed<R: Rng + ?Sized>(data: &Dataset, k: usize, z: f64, rng: &mut R) -> Result<ClusteringModel> {
    weighted_kmeanspp_seed(data, None, k, z, rng)
}

/// Weighted k-means++: the first center is drawn proportionally to weight, later
/// ones proportionally to `w_i * D(x_i)^z`. Without weights the first draw is a
/// single uniform index, matching the 1-D seeders' stream usage.
pub fn weighted_kmeanspp_seed<R: Rng + ?Sized>(
    data: &Dataset,
    weights: Option<&[f64]>,
    k: usize,
    z: f64,
    rng: &mut R,
) -> Result<ClusteringModel> {
    check_z(z)?;
    check_weights(data, weights)?;
    let n = data.n();
    if k < 1 || k > n {
        return Err(invalid(format!("k must satisfy 1 <= k <= n (k={k}, n={n})")));
    }
    let first = match weights {
        None => rng.gen_range(0..n),
        Some(w) => {
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(invalid("all weights are zero"));
            }
            pick_linear(w, scaled_draw(rng, total))
        }
    };
    let mut chosen = vec![first];
    let c0 = data.dense_row(first);
    let c0_norm = sq_norm(&c0);
    let mut nearest = vec![0usize; n];
    let mut dist: Vec<f64> = (0..n)
        .map(|i| dist_pow(data.row(i).sq_dist_with_norm(&c0, c0_norm), z))
        .collect();
    let mut mass: Vec<f64> = (0..n).map(|i| weight(weights, i) * dist[i]).collect();
    let mut exhausted = false;

    while chosen.len() < k {
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            exhausted = true;
            break;
        }
        let l = pick_linear(&mass, scaled_draw(rng, total));
        chosen.push(l);
        let c = data.dense_row(l);
        let c_norm = sq_norm(&c);
        let j = chosen.len() - 1;
        for i in 0..n {
            let v = dist_pow(data.row(i).sq_dist_with_norm(&c, c_norm), z);
            if v < dist[i] {
                dist[i] = v;
                nearest[i] = j;
                mass[i] = weight(weights, i) * v;
            }
        }
        dist[l] = 0.0;
        mass[l] = 0.0;
        nearest[l] = j;
    }

    let cost = (0..n).map(|i| weight(weights, i) * dist[i]).sum();
    Ok(ClusteringModel {
        centers: CenterSet::from_data_rows(data, &chosen)?,
        assignment: nearest,
        cost,
        z,
        exhausted,
    })
}

/// Per-cluster means plus the clusters that received no points.
#[derive(Debug, Clone, PartialEq)]
pub struct CentersOfMass {
    pub centers: CenterSet,
    /// Clusters that were empty and got relocated.
    pub empty: Vec<usize>,
}

/// Arithmetic mean of every cluster of `sigma`.
///
/// An empty cluster is moved onto the point farthest from its nearest non-empty
/// (or already relocated) center.
pub fn centers_of_mass(data: &Dataset, sigma: &[usize], k: usize) -> Result<CentersOfMass> {
    weighted_centers_of_mass(data, None, sigma, k)
}

pub fn weighted_centers_of_mass(
    data: &Dataset,
    weights: Option<&[f64]>,
    sigma: &[usize],
    k: usize,
) -> Result<CentersOfMass> {
    check_weights(data, weights)?;
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    if sigma.len() != data.n() {
        return Err(invalid(format!("assignment has {} labels for {} points", sigma.len(), data.n())));
    }
    let d = data.d();
    let mut sums = vec![0.0; k * d];
    let mut mass = vec![0.0; k];
    for (i, &j) in sigma.iter().enumerate() {
        if j >= k {
            return Err(invalid(format!("label {j} of point {i} out of range for k={k}")));
        }
        let w = weight(weights, i);
        data.row(i).add_scaled_to(&mut sums[j * d..(j + 1) * d], w);
        mass[j] += w;
    }
    let mut empty = Vec::new();
    for j in 0..k {
        if mass[j] > 0.0 {
            sums[j * d..(j + 1) * d].iter_mut().for_each(|v| *v /= mass[j]);
        } else {
            empty.push(j);
        }
    }
    if !empty.is_empty() {
        relocate_empty(data, &mut sums, &empty, k)?;
    }
    Ok(CentersOfMass {
        centers: CenterSet::new(d, sums)?,
        empty,
    })
}

fn relocate_empty(data: &Dataset, values: &mut [f64], empty: &[usize], k: usize) -> Result<()> {
    let d = data.d();
    let mut placed: Vec<usize> = (0..k).filter(|j| !empty.contains(j)).collect();
    let mut best_d2 = vec![f64::INFINITY; data.n()];
    let refresh = |best: &mut [f64], c: &[f64]| {
        let cn = sq_norm(c);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(data.row(i).sq_dist_with_norm(c, cn));
        }
    };
    for &j in &placed {
        refresh(&mut best_d2, &values[j * d..(j + 1) * d]);
    }
    for &j in empty {
        // with no placed centers every distance is infinite and point 0 is taken
        let far = best_d2
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &v)| if v > best_d2[acc] { i } else { acc });
        let row = data.dense_row(far);
        values[j * d..(j + 1) * d].copy_from_slice(&row);
        refresh(&mut best_d2, &row);
        placed.push(j);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub model: ClusteringModel,
    /// Nearest-assignment cost before the first step and after every step.
    pub costs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lloyd's algorithm for `z = 2`, starting from `model.centers`.
pub fn lloyd_iterate(data: &Dataset, model: &ClusteringModel, max_iters: usize, tol: f64) -> Result<LloydOutcome> {
    weighted_lloyd_iterate(data, None, model, max_iters, tol)
}

/// Alternates nearest assignment and (weighted) centers of mass until the relative
/// cost improvement drops below `tol` or `max_iters` steps ran.
pub fn weighted_lloyd_iterate(
    data: &Dataset,
    weights: Option<&[f64]>,
    model: &ClusteringModel,
    max_iters: usize,
    tol: f64,
) -> Result<LloydOutcome> {
    if model.z != 2.0 {
        return Err(Error::Unsupported(format!(
            "Lloyd refinement requires z = 2, got z = {}",
            model.z
        )));
    }
    check_weights(data, weights)?;
    let k = model.centers.k();
    let mut centers = model.centers.clone();
    let (mut sigma, d2) = nearest_assignment(data, &centers)?;
    let wcost = |d2: &[f64]| -> f64 { d2.iter().enumerate().map(|(i, &s)| weight(weights, i) * s).sum() };
    let mut cost = wcost(&d2);
    let mut costs = vec![cost];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        if cost == 0.0 {
            converged = true;
            break;
        }
        let com = weighted_centers_of_mass(data, weights, &sigma, k)?;
        let (next_sigma, next_d2) = nearest_assignment(data, &com.centers)?;
        let next = wcost(&next_d2);
        iterations += 1;
        centers = com.centers;
        sigma = next_sigma;
        let improvement = (cost - next) / cost;
        cost = next;
        costs.push(cost);
        if improvement < tol {
            converged = true;
            break;
        }
    }

    Ok(LloydOutcome {
        model: ClusteringModel {
            centers,
            assignment: sigma,
            cost,
            z: 2.0,
            exhausted: model.exhausted,
        },
        costs,
        iterations,
        converged,
    })
}
