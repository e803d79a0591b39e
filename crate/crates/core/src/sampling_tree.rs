//! Complete binary sum tree over `n` nonnegative masses.
//!
//! Supports `O(1)` total, `O(log n)` inverse-CDF lookup and contiguous range
//! updates touching `O(len + log n)` nodes. External indices are 1-based.
//!
//! Internal sums are always recomputed from the two children, never adjusted
//! incrementally, so every node equals the exact (as computed) sum of its children.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone)]
pub struct SamplingTree {
    n: usize,
    /// Number of leaves, the smallest power of two `>= n`.
    cap: usize,
    /// Implicit heap: root at 1, children of `v` at `2v` and `2v + 1`, leaf `i` at `cap + i - 1`.
    nodes: Vec<f64>,
}

fn check_mass(i: usize, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("mass at index {i} must be finite and >= 0, got {v}")))
    }
}

impl SamplingTree {
    /// Builds the tree bottom-up in `O(n)`.
    pub fn new(masses: &[f64]) -> Result<Self> {
        if masses.is_empty() {
            return Err(invalid("sampling tree needs at least one mass"));
        }
        for (i, &v) in masses.iter().enumerate() {
            check_mass(i + 1, v)?;
        }
        let n = masses.len();
        let cap = n.next_power_of_two();
        let mut nodes = vec![0.0; 2 * cap];
        nodes[cap..cap + n].copy_from_slice(masses);
        for v in (1..cap).rev() {
            nodes[v] = nodes[2 * v] + nodes[2 * v + 1];
        }
        Ok(Self { n, cap, nodes })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Leaf count after power-of-two padding.
    pub fn capacity(&self) -> usize {
        self.cap
    }

    /// Sum of all masses.
    #[inline]
    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Mass of leaf `i` (1-based; padding leaves up to `capacity` read as zero).
    pub fn leaf(&self, i: usize) -> f64 {
        assert!((1..=self.cap).contains(&i), "leaf {i} out of range");
        self.nodes[self.cap + i - 1]
    }

    /// The 1-based index `l` with `prefix(l - 1) <= r < prefix(l)`.
    pub fn find(&self, r: f64) -> Result<usize> {
        let total = self.total();
        if !(total > 0.0) || !(r >= 0.0) || r >= total {
            return Err(Error::OutOfRange { value: r, total });
        }
        Ok(self.descend(r))
    }

    /// Root-to-leaf descent. The residual is clamped into `[0, child sum)` so that
    /// rounding can never steer the walk into a zero-mass subtree.
    #[inline]
    pub(crate) fn descend(&self, mut r: f64) -> usize {
        let mut v = 1;
        while v < self.cap {
            let left = self.nodes[2 * v];
            let right = self.nodes[2 * v + 1];
            if r < left {
                v *= 2;
            } else if right > 0.0 {
                r -= left;
                if r >= right {
                    r = right.next_down();
                }
                v = 2 * v + 1;
            } else {
                r = left.next_down().max(0.0);
                v *= 2;
            }
            if r < 0.0 {
                r = 0.0;
            }
        }
        v - self.cap + 1
    }

    /// Sets `s_i = a_i` for `i in i1..=i2` (1-based, `a` indexed like the leaves)
    /// and recomputes every ancestor. Returns the number of internal nodes recomputed.
    pub fn update(&mut self, a: &[f64], i1: usize, i2: usize) -> Result<usize> {
        if i1 < 1 || i1 > i2 || i2 > self.n {
            return Err(invalid(format!(
                "update range {i1}..={i2} invalid for n={}",
                self.n
            )));
        }
        if a.len() < i2 {
            return Err(invalid(format!(
                "update source has {} entries, need {i2}",
                a.len()
            )));
        }
        for i in i1..=i2 {
            check_mass(i, a[i - 1])?;
        }
        Ok(self.set_range(&a[i1 - 1..i2], i1))
    }

    /// Unchecked range write of `vals` starting at 1-based leaf `start`.
    #[inline]
    pub(crate) fn set_range(&mut self, vals: &[f64], start: usize) -> usize {
        if vals.is_empty() {
            return 0;
        }
        let mut lo = self.cap + start - 1;
        let mut hi = lo + vals.len() - 1;
        self.nodes[lo..=hi].copy_from_slice(vals);
        let mut touched = 0;
        while lo > 1 {
            lo /= 2;
            hi /= 2;
            for v in lo..=hi {
                self.nodes[v] = self.nodes[2 * v] + self.nodes[2 * v + 1];
            }
            touched += hi - lo + 1;
        }
        touched
    }

    /// Checks that every internal node equals the sum of its children.
    pub fn is_consistent(&self) -> bool {
        (1..self.cap).all(|v| self.nodes[v] == self.nodes[2 * v] + self.nodes[2 * v + 1])
    }
}
