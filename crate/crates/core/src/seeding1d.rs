//! k-means++ seeding for `(k, z)`-clustering of scalars.
//!
//! [`seed_1d_fast`] keeps the `D^z` masses of the sorted points in a
//! [`SamplingTree`]. After each new center it walks outward in both directions and
//! stops at the first point whose current mass is not improved; everything beyond
//! that point is closer to an existing center. The expected number of mass updates
//! is `O(2^{z/2} n log n)` regardless of `k`.
//!
//! [`seed_1d_naive`] is the `O(nk)` reference. Both consume the random stream in
//! exactly the same way (one uniform index, then one uniform real per extra
//! center, scaled by the current total mass), so for a given seed they agree
//! index for index.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{invalid, Result};
use crate::sampling_tree::SamplingTree;

/// `|d|^z`, with exact fast paths for `z = 1, 2` and `0^z = 0`.
#[inline]
pub fn pow_z(dist: f64, z: f64) -> f64 {
    let d = dist.abs();
    if d == 0.0 {
        0.0
    } else if z == 2.0 {
        d * d
    } else if z == 1.0 {
        d
    } else {
        (z * d.ln()).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seeding1DResult {
    /// Input-order indices of the centers, ascending by value.
    pub center_indices: Vec<usize>,
    /// `points[center_indices[j]]`.
    pub center_values: Vec<f64>,
    /// For every input point, the position of its center in `center_indices`.
    pub assignment: Vec<usize>,
    /// Input-order indices of the centers in the order they were drawn.
    pub selection_order: Vec<usize>,
    /// Set when the masses ran out (fewer than `k` distinct values) before `k` draws.
    pub exhausted: bool,
}

impl Seeding1DResult {
    pub fn num_centers(&self) -> usize {
        self.center_indices.len()
    }

    /// `sum_i |x_i - c_{sigma(i)}|^z`.
    pub fn cost(&self, points: &[f64], z: f64) -> f64 {
        points
            .iter()
            .zip(&self.assignment)
            .map(|(&x, &j)| pow_z(x - self.center_values[j], z))
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedingStats {
    /// Mass writes performed by the outward scans.
    pub total_updates: u64,
    /// Evaluations of the outward-scan loop conditions.
    pub comparisons: u64,
    /// Internal tree nodes recomputed by range updates.
    pub tree_nodes_touched: u64,
    pub wall_time: Duration,
}

fn validate(points: &[f64], k: usize, z: f64) -> Result<()> {
    let n = points.len();
    if n == 0 {
        return Err(invalid("no points"));
    }
    if k < 1 || k > n {
        return Err(invalid(format!("k must satisfy 1 <= k <= n (k={k}, n={n})")));
    }
    if !(z >= 1.0 && z.is_finite()) {
        return Err(invalid(format!("z must be a finite real >= 1, got {z}")));
    }
    if let Some(i) = points.iter().position(|x| !x.is_finite()) {
        return Err(invalid(format!("point {i} is not finite")));
    }
    Ok(())
}

/// Stable argsort; `order[p]` is the input index of the `p`-th smallest point.
fn sort_order(points: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].total_cmp(&points[b]));
    order
}

/// `r = u * total`, kept strictly below `total`.
#[inline]
fn scaled_draw<R: Rng + ?Sized>(rng: &mut R, total: f64) -> f64 {
    let u: f64 = rng.gen();
    let r = u * total;
    if r >= total {
        total.next_down()
    } else {
        r
    }
}

/// Maps sorted positions of the chosen centers and the sorted-order assignment
/// back to input order.
fn to_input_order(
    order: &[usize],
    xs: &[f64],
    chosen: &[usize],
    sigma_sorted: &[usize],
    exhausted: bool,
) -> Seeding1DResult {
    let mut by_pos = chosen.to_vec();
    by_pos.sort_unstable();
    let mut assignment = vec![0; order.len()];
    for (p, &j) in sigma_sorted.iter().enumerate() {
        assignment[order[p]] = j;
    }
    Seeding1DResult {
        center_indices: by_pos.iter().map(|&p| order[p]).collect(),
        center_values: by_pos.iter().map(|&p| xs[p]).collect(),
        assignment,
        selection_order: chosen.iter().map(|&p| order[p]).collect(),
        exhausted,
    }
}

/// Tree-backed seeding with outward scans; see the module docs.
pub fn seed_1d_fast<R: Rng + ?Sized>(
    points: &[f64],
    k: usize,
    z: f64,
    rng: &mut R,
) -> Result<(Seeding1DResult, SeedingStats)> {
    validate(points, k, z)?;
    let start = Instant::now();
    let n = points.len();
    let order = sort_order(points);
    let xs: Vec<f64> = order.iter().map(|&i| points[i]).collect();

    let first = rng.gen_range(0..n);
    let mut a: Vec<f64> = xs.iter().map(|&x| pow_z(x - xs[first], z)).collect();
    let mut tree = SamplingTree::new(&a)?;
    let mut chosen = Vec::with_capacity(k);
    chosen.push(first);
    let mut stats = SeedingStats::default();
    let mut exhausted = false;

    for _ in 1..k {
        let total = tree.total();
        if !(total > 0.0) {
            exhausted = true;
            break;
        }
        let r = scaled_draw(rng, total);
        let l = tree.descend(r) - 1;
        chosen.push(l);
        let c = xs[l];
        a[l] = 0.0;

        let mut lo = l;
        loop {
            stats.comparisons += 1;
            if lo == 0 {
                break;
            }
            let v = pow_z(xs[lo - 1] - c, z);
            if v < a[lo - 1] {
                a[lo - 1] = v;
                stats.total_updates += 1;
                lo -= 1;
            } else {
                break;
            }
        }
        let mut hi = l;
        loop {
            stats.comparisons += 1;
            if hi + 1 == n {
                break;
            }
            let v = pow_z(xs[hi + 1] - c, z);
            if v < a[hi + 1] {
                a[hi + 1] = v;
                stats.total_updates += 1;
                hi += 1;
            } else {
                break;
            }
        }
        stats.tree_nodes_touched += tree.set_range(&a[lo..=hi], lo + 1) as u64;
    }

    let mut centers: Vec<f64> = chosen.iter().map(|&p| xs[p]).collect();
    centers.sort_by(f64::total_cmp);
    let sigma = assign_to_sorted_centers(&xs, &centers)?;
    let result = to_input_order(&order, &xs, &chosen, &sigma, exhausted);
    stats.wall_time = start.elapsed();
    Ok((result, stats))
}

/// `O(nk)` reference seeding: full mass refresh and a linear prefix scan per draw.
pub fn seed_1d_naive<R: Rng + ?Sized>(
    points: &[f64],
    k: usize,
    z: f64,
    rng: &mut R,
) -> Result<Seeding1DResult> {
    validate(points, k, z)?;
    let n = points.len();
    let order = sort_order(points);
    let xs: Vec<f64> = order.iter().map(|&i| points[i]).collect();

    let first = rng.gen_range(0..n);
    let mut a: Vec<f64> = xs.iter().map(|&x| pow_z(x - xs[first], z)).collect();
    let mut chosen = vec![first];
    let mut exhausted = false;

    for _ in 1..k {
        let total: f64 = a.iter().sum();
        if !(total > 0.0) {
            exhausted = true;
            break;
        }
        let r = scaled_draw(rng, total);
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &m) in a.iter().enumerate() {
            acc += m;
            if r < acc {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave r past the last prefix; fall back to the last positive mass
        let l = pick.unwrap_or_else(|| a.iter().rposition(|&m| m > 0.0).expect("positive total"));
        chosen.push(l);
        for i in 0..n {
            let v = pow_z(xs[i] - xs[l], z);
            if v < a[i] {
                a[i] = v;
            }
        }
        a[l] = 0.0;
    }

    let mut centers: Vec<f64> = chosen.iter().map(|&p| xs[p]).collect();
    centers.sort_by(f64::total_cmp);
    // brute-force nearest center; equidistant points go to the later center
    let sigma: Vec<usize> = xs
        .iter()
        .map(|&x| {
            let mut best = 0;
            for j in 1..centers.len() {
                if (x - centers[j]).abs() <= (x - centers[best]).abs() {
                    best = j;
                }
            }
            best
        })
        .collect();
    Ok(to_input_order(&order, &xs, &chosen, &sigma, exhausted))
}

/// Two-pointer nearest-center assignment over ascending inputs in `O(n + k)`.
///
/// A point moves on to the next center when it is at least as close to it, so
/// exact midpoints go to the later center.
pub fn assign_to_sorted_centers(points_sorted: &[f64], centers_sorted: &[f64]) -> Result<Vec<usize>> {
    if centers_sorted.is_empty() {
        return Err(invalid("no centers"));
    }
    let k = centers_sorted.len();
    let mut sigma = Vec::with_capacity(points_sorted.len());
    let mut j = 0;
    for &x in points_sorted {
        while j + 1 < k && (x - centers_sorted[j]).abs() >= (x - centers_sorted[j + 1]).abs() {
            j += 1;
        }
        sigma.push(j);
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn brute_assign(xs: &[f64], cs: &[f64]) -> Vec<usize> {
        xs.iter()
            .map(|&x| {
                let d: Vec<f64> = cs.iter().map(|&c| (x - c).abs()).collect();
                let m = d.iter().cloned().fold(f64::INFINITY, f64::min);
                d.iter().rposition(|&v| v == m).unwrap()
            })
            .collect()
    }

    #[test]
    fn pow_z_paths() {
        assert_eq!(pow_z(0.0, 3.5), 0.0);
        assert_eq!(pow_z(-3.0, 2.0), 9.0);
        assert_eq!(pow_z(-3.0, 1.0), 3.0);
        assert!((pow_z(2.0, 3.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_selects_everything() {
        let pts = [0.0, 1.0, 3.0];
        for z in [1.0, 2.0, 3.0] {
            let (res, _) = seed_1d_fast(&pts, 3, z, &mut rng_from_seed(4)).unwrap();
            assert_eq!(res.center_indices, vec![0, 1, 2]);
            assert_eq!(res.cost(&pts, z), 0.0);
            assert_eq!(res.assignment, vec![0, 1, 2]);
        }
    }

    #[test]
    fn single_point() {
        let r = seed_1d_naive(&[5.0], 1, 2.0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(r.center_indices, vec![0]);
        assert_eq!(r.assignment, vec![0]);
    }

    #[test]
    fn two_points_two_centers() {
        for seed in 0..10 {
            let r = seed_1d_naive(&[0.0, 10.0], 2, 2.0, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(r.center_indices, vec![0, 1]);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = rng_from_seed(0);
        assert!(seed_1d_fast(&[1.0, 2.0], 3, 2.0, &mut rng).is_err());
        assert!(seed_1d_fast(&[1.0, 2.0], 0, 2.0, &mut rng).is_err());
        assert!(seed_1d_fast(&[1.0, 2.0], 1, 0.5, &mut rng).is_err());
        assert!(seed_1d_fast(&[1.0, f64::NAN], 1, 2.0, &mut rng).is_err());
        assert!(seed_1d_naive(&[], 1, 2.0, &mut rng).is_err());
    }

    #[test]
    fn assignment_examples() {
        assert_eq!(assign_to_sorted_centers(&[0.0, 1.0, 2.0], &[0.0, 2.0]).unwrap(), vec![0, 1, 1]);
        assert_eq!(assign_to_sorted_centers(&[-5.0], &[0.0, 2.0]).unwrap(), vec![0]);
        assert!(assign_to_sorted_centers(&[1.0], &[]).is_err());
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = rng_from_seed(77);
        for _ in 0..500 {
            let n = rng.gen_range(1..60);
            let k = rng.gen_range(1..12);
            // small integer grid so exact midpoint ties actually occur
            let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-20..20) as f64).collect();
            let mut cs: Vec<f64> = (0..k).map(|_| rng.gen_range(-20..20) as f64).collect();
            xs.sort_by(f64::total_cmp);
            cs.sort_by(f64::total_cmp);
            cs.dedup();
            assert_eq!(assign_to_sorted_centers(&xs, &cs).unwrap(), brute_assign(&xs, &cs));
        }
    }

    #[test]
    fn second_center_law_from_fixed_first() {
        // points 0, 1, 3 with the first center forced to 0: masses (0, 1, 9)
        let pts = [0.0, 1.0, 3.0];
        let trials = 40_000;
        let mut hits_three = 0;
        let mut got = 0;
        let mut seed = 0;
        while got < trials {
            seed += 1;
            let r = seed_1d_fast(&pts, 2, 2.0, &mut rng_from_seed(seed)).unwrap().0;
            if r.selection_order[0] != 0 {
                continue;
            }
            got += 1;
            if r.selection_order[1] == 2 {
                hits_three += 1;
            }
        }
        let p = hits_three as f64 / trials as f64;
        let se = (0.9 * 0.1 / trials as f64).sqrt();
        assert!((p - 0.9).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn duplicates_stop_early() {
        let pts = [1.0, 1.0, 2.0, 2.0, 2.0];
        let (fast, _) = seed_1d_fast(&pts, 4, 2.0, &mut rng_from_seed(3)).unwrap();
        assert!(fast.exhausted);
        assert_eq!(fast.num_centers(), 2);
        assert_eq!(fast.cost(&pts, 2.0), 0.0);
        let naive = seed_1d_naive(&pts, 4, 2.0, &mut rng_from_seed(3)).unwrap();
        assert_eq!(fast, naive);
    }

    #[test]
    fn fast_equals_naive_256() {
        let mut gen = rng_from_seed(2024);
        let pts: Vec<f64> = (0..256).map(|_| gen.gen::<f64>()).collect();
        for z in [1.0, 2.0, 3.0] {
            for seed in 0..20 {
                let (fast, _) = seed_1d_fast(&pts, 16, z, &mut rng_from_seed(seed)).unwrap();
                let naive = seed_1d_naive(&pts, 16, z, &mut rng_from_seed(seed)).unwrap();
                assert_eq!(fast, naive, "z={z} seed={seed}");
            }
        }
    }

    #[test]
    fn centers_never_repeat_and_updates_bounded() {
        let mut gen = rng_from_seed(11);
        for seed in 0..50 {
            let n = gen.gen_range(1..300);
            let k = gen.gen_range(1..=n);
            let pts: Vec<f64> = (0..n).map(|_| (gen.gen_range(0..50) as f64) * 0.5).collect();
            let (res, stats) = seed_1d_fast(&pts, k, 2.0, &mut rng_from_seed(seed)).unwrap();
            let mut idx = res.center_indices.clone();
            idx.dedup();
            assert_eq!(idx.len(), res.num_centers());
            let mut vals = res.center_values.clone();
            vals.dedup();
            assert_eq!(vals.len(), res.num_centers(), "center values must be distinct");
            assert!(stats.total_updates <= (n as u64) * (k as u64 - 1));
            assert!(res.assignment.iter().all(|&j| j < res.num_centers()));
        }
    }
}
