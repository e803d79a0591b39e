//! Point sets, text loaders and the synthetic generators used by the experiments.
//!
//! A [`Dataset`] is an immutable `n x d` matrix stored either densely (row-major)
//! or as compressed sparse rows. All algorithms in the crate go through [`Row`],
//! which touches only stored entries, so sparse inputs stay `O(nnz)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

/// Distance from the origin of each mirrored cluster in [`gen_adversarial_gaussian`].
pub const ADVERSARIAL_OFFSET: f64 = 1000.0;

/// Dimension of the adversarial dataset (one cluster pair per axis).
pub const ADVERSARIAL_DIM: usize = 4;

/// Points placed exactly at the origin in the adversarial dataset.
pub const ADVERSARIAL_ORIGIN_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    storage: Storage,
}

/// Borrowed view of a single row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse {
        indices: &'a [usize],
        values: &'a [f64],
    },
}

impl<'a> Row<'a> {
    pub fn dot(&self, v: &[f64]) -> f64 {
        match *self {
            Row::Dense(x) => x.iter().zip(v).map(|(a, b)| a * b).sum(),
            Row::Sparse { indices, values } => {
                indices.iter().zip(values).map(|(&j, &x)| x * v[j]).sum()
            }
        }
    }

    /// Squared Euclidean distance to a dense point `c` whose squared norm is `c_norm2`.
    ///
    /// The norm is only read for sparse rows.
    pub fn sq_dist_with_norm(&self, c: &[f64], c_norm2: f64) -> f64 {
        match *self {
            Row::Dense(x) => x
                .iter()
                .zip(c)
                .map(|(a, b)| {
                    let t = a - b;
                    t * t
                })
                .sum(),
            Row::Sparse { indices, values } => {
                let mut s = c_norm2;
                for (&j, &x) in indices.iter().zip(values) {
                    let t = x - c[j];
                    s += t * t - c[j] * c[j];
                }
                s.max(0.0)
            }
        }
    }

    pub fn sq_dist(&self, c: &[f64]) -> f64 {
        match self {
            Row::Dense(_) => self.sq_dist_with_norm(c, 0.0),
            Row::Sparse { .. } => self.sq_dist_with_norm(c, sq_norm(c)),
        }
    }

    /// `acc += weight * row`.
    pub fn add_scaled_to(&self, acc: &mut [f64], weight: f64) {
        match *self {
            Row::Dense(x) => {
                for (a, &v) in acc.iter_mut().zip(x) {
                    *a += weight * v;
                }
            }
            Row::Sparse { indices, values } => {
                for (&j, &v) in indices.iter().zip(values) {
                    acc[j] += weight * v;
                }
            }
        }
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        match *self {
            Row::Dense(x) => x.to_vec(),
            Row::Sparse { indices, values } => {
                let mut out = vec![0.0; d];
                for (&j, &v) in indices.iter().zip(values) {
                    out[j] = v;
                }
                out
            }
        }
    }
}

pub fn sq_norm(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum()
}

impl Dataset {
    /// Dense dataset from row-major values.
    pub fn from_dense(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid(format!("dataset must be non-empty (n={n}, d={d})")));
        }
        if values.len() != n * d {
            return Err(invalid(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value in row {}", pos / d)));
        }
        Ok(Self {
            n,
            d,
            storage: Storage::Dense(values),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(invalid(format!("row {i} has {} columns, expected {d}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Self::from_dense(rows.len(), d, values)
    }

    /// One-dimensional dataset, one point per value.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::from_dense(xs.len(), 1, xs.to_vec())
    }

    /// Sparse dataset from `(column, value)` rows. Columns must be strictly increasing.
    pub fn from_sparse_rows(d: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        if rows.is_empty() || d == 0 {
            return Err(invalid(format!("dataset must be non-empty (n={}, d={d})", rows.len())));
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(j, v) in row {
                if j >= d {
                    return Err(invalid(format!("row {i}: column {j} outside [0, {d})")));
                }
                if prev.is_some_and(|p| j <= p) {
                    return Err(invalid(format!("row {i}: column indices not strictly increasing")));
                }
                if !v.is_finite() {
                    return Err(invalid(format!("row {i}: non-finite value")));
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n: rows.len(),
            d,
            storage: Storage::Sparse {
                indptr,
                indices,
                values,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of stored entries (`n * d` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse { values, .. } => values.len(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(v) => Row::Dense(&v[i * self.d..(i + 1) * self.d]),
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let (a, b) = (indptr[i], indptr[i + 1]);
                Row::Sparse {
                    indices: &indices[a..b],
                    values: &values[a..b],
                }
            }
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row<'_>> + '_ {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        self.row(i).to_dense(self.d)
    }

    pub fn to_dense(&self) -> Dataset {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse { .. } => {
                let mut values = Vec::with_capacity(self.n * self.d);
                for r in self.rows() {
                    values.extend(r.to_dense(self.d));
                }
                Dataset {
                    n: self.n,
                    d: self.d,
                    storage: Storage::Dense(values),
                }
            }
        }
    }

    /// Dataset made of the given rows (repeats allowed), preserving the storage kind.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return Err(invalid("cannot select zero rows"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return Err(invalid(format!("row {bad} out of range for n={}", self.n)));
        }
        let storage = match &self.storage {
            Storage::Dense(v) => {
                let mut out = Vec::with_capacity(idx.len() * self.d);
                for &i in idx {
                    out.extend_from_slice(&v[i * self.d..(i + 1) * self.d]);
                }
                Storage::Dense(out)
            }
            Storage::Sparse {
                indptr,
                indices,
                values,
            } => {
                let mut p = vec![0];
                let mut ind = Vec::new();
                let mut val = Vec::new();
                for &i in idx {
                    ind.extend_from_slice(&indices[indptr[i]..indptr[i + 1]]);
                    val.extend_from_slice(&values[indptr[i]..indptr[i + 1]]);
                    p.push(ind.len());
                }
                Storage::Sparse {
                    indptr: p,
                    indices: ind,
                    values: val,
                }
            }
        };
        Ok(Dataset {
            n: idx.len(),
            d: self.d,
            storage,
        })
    }

    /// Every point multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Dataset {
        let mut out = self.clone();
        match &mut out.storage {
            Storage::Dense(v) => v.iter_mut().for_each(|x| *x *= factor),
            Storage::Sparse { values, .. } => values.iter_mut().for_each(|x| *x *= factor),
        }
        out
    }

    /// Per-feature mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.d];
        for r in self.rows() {
            r.add_scaled_to(&mut acc, 1.0);
        }
        let n = self.n as f64;
        acc.iter_mut().for_each(|v| *v /= n);
        acc
    }

    /// Per-feature population variance. Constant features get exactly zero.
    pub fn feature_variances(&self) -> Vec<f64> {
        let mu = self.mean();
        let mut ss = vec![0.0; self.d];
        let mut stored = vec![0usize; self.d];
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for r in self.rows() {
            match r {
                Row::Dense(x) => {
                    for j in 0..self.d {
                        let t = x[j] - mu[j];
                        ss[j] += t * t;
                        lo[j] = lo[j].min(x[j]);
                        hi[j] = hi[j].max(x[j]);
                    }
                }
                Row::Sparse { indices, values } => {
                    for (&j, &x) in indices.iter().zip(values) {
                        let t = x - mu[j];
                        ss[j] += t * t;
                        stored[j] += 1;
                        lo[j] = lo[j].min(x);
                        hi[j] = hi[j].max(x);
                    }
                }
            }
        }
        let n = self.n as f64;
        (0..self.d)
            .map(|j| {
                let implicit = if self.is_sparse() { self.n - stored[j] } else { 0 };
                if implicit > 0 {
                    lo[j] = lo[j].min(0.0);
                    hi[j] = hi[j].max(0.0);
                    ss[j] += implicit as f64 * mu[j] * mu[j];
                }
                if lo[j] == hi[j] {
                    0.0
                } else {
                    ss[j] / n
                }
            })
            .collect()
    }

    /// Comma-separated dense rendering; `{}` formatting round-trips every finite f64.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for r in self.rows() {
            write_csv_row(&mut out, &r.to_dense(self.d));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Sparse text rendering (`#d` directive followed by `idx:value` rows).
    pub fn to_sparse_string(&self) -> String {
        let mut out = format!("#d {}\n", self.d);
        for r in self.rows() {
            let mut first = true;
            let mut push = |j: usize, v: f64| {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{j}:{v}");
            };
            match r {
                Row::Dense(x) => x
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .for_each(|(j, &v)| push(j, v)),
                Row::Sparse { indices, values } => {
                    indices.iter().zip(values).for_each(|(&j, &v)| push(j, v))
                }
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn write_csv_row(out: &mut String, row: &[f64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_finite(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value: {tok:?}")));
    }
    Ok(v)
}

pub fn load_dense_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    parse_dense_csv(&fs::read_to_string(path)?, has_header, path)
}

/// Parses CSV text; `origin` only labels error messages.
pub fn parse_dense_csv(text: &str, has_header: bool, origin: &Path) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut d: Option<usize> = None;
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate().skip(usize::from(has_header)) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            values.push(parse_finite(tok, origin, lineno + 1)?);
        }
        let width = values.len() - before;
        match d {
            None => d = Some(width),
            Some(w) if w != width => {
                return Err(parse_err(
                    origin,
                    lineno + 1,
                    format!("expected {w} fields, found {width}"),
                ))
            }
            _ => {}
        }
        n += 1;
    }
    if n == 0 {
        return Err(parse_err(origin, 0, "no data rows"));
    }
    Dataset::from_dense(n, d.unwrap_or(0), values)
}

pub fn load_sparse(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    parse_sparse(&fs::read_to_string(path)?, path)
}

/// Parses the `idx:value` text format. An empty line is an all-zero row.
pub fn parse_sparse(text: &str, origin: &Path) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().peekable();
    let mut declared_d = None;
    if let Some((_, first)) = lines.peek() {
        if let Some(rest) = first.trim().strip_prefix("#d") {
            let d: usize = rest
                .trim()
                .parse()
                .map_err(|_| parse_err(origin, 1, format!("bad #d directive: {first:?}")))?;
            declared_d = Some(d);
            lines.next();
        }
    }
    let mut rows = Vec::new();
    let mut max_col: Option<usize> = None;
    for (lineno, line) in lines {
        let line = line.trim();
        let mut row = Vec::new();
        for tok in line.split_ascii_whitespace() {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(origin, lineno + 1, format!("expected idx:value, got {tok:?}")))?;
            let idx: i64 = idx
                .parse()
                .map_err(|_| parse_err(origin, lineno + 1, format!("bad index {idx:?}")))?;
            if idx < 0 {
                return Err(parse_err(origin, lineno + 1, format!("negative index {idx}")));
            }
            let idx = idx as usize;
            if row.last().is_some_and(|&(p, _): &(usize, f64)| idx <= p) {
                return Err(parse_err(origin, lineno + 1, "indices not strictly increasing"));
            }
            if declared_d.is_some_and(|d| idx >= d) {
                return Err(parse_err(
                    origin,
                    lineno + 1,
                    format!("index {idx} exceeds declared dimension"),
                ));
            }
            max_col = max_col.max(Some(idx));
            row.push((idx, parse_finite(val, origin, lineno + 1)?));
        }
        rows.push(row);
    }
    // a trailing newline does not add a row, but a lone empty file has none
    if rows.is_empty() {
        return Err(parse_err(origin, 0, "no data rows"));
    }
    let d = declared_d.unwrap_or_else(|| max_col.map_or(0, |m| m + 1));
    Dataset::from_sparse_rows(d, &rows)
}

/// Loads by extension: `.svm`, `.libsvm`, `.sparse` and `.txt` are sparse, anything else CSV.
pub fn load_auto(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("svm" | "libsvm" | "sparse" | "txt") => load_sparse(path),
        _ => load_dense_csv(path, false),
    }
}

/// Four mirrored pairs of unit Gaussians at distance [`ADVERSARIAL_OFFSET`] along
/// each axis, plus five points at the origin.
///
/// Layout: the `4m` positive-side points (axis-major), then their negations in the
/// same order, then the origin points. `n = 8m + 5`.
pub fn gen_adversarial_gaussian(m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(invalid("m must be >= 1"));
    }
    let d = ADVERSARIAL_DIM;
    let mut rng = rng_from_seed(seed);
    let half = d * m;
    let mut values = Vec::with_capacity((2 * half + ADVERSARIAL_ORIGIN_POINTS) * d);
    for axis in 0..d {
        for _ in 0..m {
            for j in 0..d {
                let g: f64 = rng.sample(StandardNormal);
                values.push(if j == axis { ADVERSARIAL_OFFSET + g } else { g });
            }
        }
    }
    let mirrored: Vec<f64> = values.iter().map(|v| -v).collect();
    values.extend(mirrored);
    values.extend(std::iter::repeat(0.0).take(ADVERSARIAL_ORIGIN_POINTS * d));
    Dataset::from_dense(2 * half + ADVERSARIAL_ORIGIN_POINTS, d, values)
}

#[derive(Debug, Clone)]
pub struct Mixture {
    pub data: Dataset,
    /// Generating centers, one per cluster.
    pub centers: Vec<Vec<f64>>,
    /// Generating cluster of each point.
    pub labels: Vec<usize>,
}

/// `k` unit-variance isotropic Gaussians with centers uniform in `[0, separation]^d`.
pub fn gen_gaussian_mixture(
    k: usize,
    per_cluster: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<Mixture> {
    if k == 0 || per_cluster == 0 || d == 0 {
        return Err(invalid(format!(
            "k, per_cluster and d must be >= 1 (got {k}, {per_cluster}, {d})"
        )));
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(invalid(format!("separation must be positive, got {separation}")));
    }
    let mut rng = rng_from_seed(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.gen::<f64>() * separation).collect())
        .collect();
    let mut values = Vec::with_capacity(k * per_cluster * d);
    let mut labels = Vec::with_capacity(k * per_cluster);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            for &cj in center {
                let g: f64 = rng.sample(StandardNormal);
                values.push(cj + g);
            }
            labels.push(c);
        }
    }
    Ok(Mixture {
        data: Dataset::from_dense(k * per_cluster, d, values)?,
        centers,
        labels,
    })
}
