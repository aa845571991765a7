//! S-paths, set partitions of `{1..n}`, and the map between them.
//!
//! An S-path of `n + 1` coordinates is an integer vector
//! `(0, S_1, ..., S_{n-1}, n)` with `S_j <= j` and nondecreasing entries. A
//! partition corresponds to a path when the locations of positive increments
//! `m_j = S_j - S_{j-1}` are exactly the maximal elements of its cells and
//! `m_j` is the size of the cell whose maximum is `j`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::index;
use rand::Rng;

use crate::{Error, Result};

/// Default cap on `n` for [`enumerate_paths`].
pub const PATH_ENUMERATION_CAP: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SPath {
    coords: Vec<usize>,
}

impl SPath {
    /// Validates a coordinate vector `(S_0, ..., S_n)`.
    pub fn new(coords: Vec<usize>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidPath { index: coords.len(), reason: "a path needs at least two coordinates" });
        }
        let n = coords.len() - 1;
        if coords[0] != 0 {
            return Err(Error::InvalidPath { index: 0, reason: "S_0 must be 0" });
        }
        for j in 1..=n {
            if coords[j] > j {
                return Err(Error::InvalidPath { index: j, reason: "S_j exceeds j" });
            }
            if coords[j] < coords[j - 1] {
                return Err(Error::InvalidPath { index: j, reason: "S_j decreases" });
            }
        }
        if coords[n] != n {
            return Err(Error::InvalidPath { index: n, reason: "S_n must equal n" });
        }
        Ok(Self { coords })
    }

    /// `(0, 1, ..., n)`: every item in its own cell. For `n = 0` this is the
    /// degenerate path `(0)` used by chains on data with no complete times.
    pub fn singletons(n: usize) -> Self {
        Self { coords: (0..=n).collect() }
    }

    /// `(0, 0, ..., 0, n)`: one cell holding everything.
    pub fn single_block(n: usize) -> Self {
        let mut coords = vec![0; n + 1];
        coords[n] = n;
        Self { coords }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    #[inline]
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    #[inline]
    pub fn get(&self, j: usize) -> usize {
        self.coords[j]
    }

    /// `m_j = S_j - S_{j-1}` for `1 <= j <= n`.
    #[inline]
    pub fn increment(&self, j: usize) -> usize {
        self.coords[j] - self.coords[j - 1]
    }

    /// `(j, m_j)` for every location with a positive increment.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n()).filter_map(move |j| {
            let m = self.increment(j);
            (m > 0).then_some((j, m))
        })
    }

    /// Sets `S_lo..S_hi` (exclusive) to `value`. Callers keep the path valid.
    #[inline]
    pub(crate) fn fill(&mut self, lo: usize, hi: usize, value: usize) {
        self.coords[lo..hi].iter_mut().for_each(|s| *s = value);
    }

    pub(crate) fn is_valid(&self) -> bool {
        Self::new(self.coords.clone()).is_ok()
    }
}

impl fmt::Display for SPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Lexicographic iterator over all S-paths of `n + 1` coordinates.
#[derive(Debug, Clone)]
pub struct PathIter {
    current: Option<Vec<usize>>,
}

impl PathIter {
    pub fn new(n: usize) -> Self {
        let current = Some(SPath::single_block(n).coords);
        Self { current }
    }
}

impl Iterator for PathIter {
    type Item = SPath;

    fn next(&mut self) -> Option<SPath> {
        let cur = self.current.as_mut()?;
        let out = SPath { coords: cur.clone() };
        let n = cur.len() - 1;
        match (1..n).rev().find(|&j| cur[j] < j) {
            Some(j) => {
                cur[j] += 1;
                let v = cur[j];
                cur[j + 1..n].iter_mut().for_each(|s| *s = v);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// All S-paths of `n + 1` coordinates in lexicographic order.
pub fn enumerate_paths(n: usize) -> Result<Vec<SPath>> {
    enumerate_paths_capped(n, PATH_ENUMERATION_CAP)
}

pub fn enumerate_paths_capped(n: usize, cap: usize) -> Result<Vec<SPath>> {
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    Ok(PathIter::new(n).collect())
}

/// Catalan number `C(2n, n) / (n + 1)`.
pub fn count_paths(n: usize) -> BigUint {
    let mut c = BigUint::one();
    // C_{k+1} = C_k * 2(2k+1) / (k+2)
    for k in 0..n {
        c = c * BigUint::from(2 * (2 * k + 1)) / BigUint::from(k + 2);
    }
    c
}

/// Bell number, via the Bell triangle.
pub fn count_partitions(n: usize) -> BigUint {
    let mut row = vec![BigUint::one()];
    for _ in 1..n.max(1) {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().cloned().unwrap_or_else(BigUint::zero));
        for x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    if n == 0 {
        return BigUint::one();
    }
    row.last().cloned().unwrap()
}

fn binom_big(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of partitions corresponding to `path`:
/// `Π_{j: m_j > 0} C(j - 1 - S_{j-1}, j - S_j)`.
pub fn fiber_size(path: &SPath) -> BigUint {
    path.blocks().map(|(j, _)| binom_big(j - 1 - path.get(j - 1), j - path.get(j))).product()
}

/// A set partition of `{1, ..., n}`. Cells are stored sorted, ordered by
/// their maximal element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    cells: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, cells: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        let mut cells: Vec<Vec<usize>> = cells
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        for c in &cells {
            if c.is_empty() {
                return Err(Error::InvalidPartition("empty cell".into()));
            }
            for &i in c {
                if i == 0 || i > n {
                    return Err(Error::InvalidPartition(format!("item {i} outside 1..={n}")));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!("item {i} appears twice")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = (1..=n).find(|&i| !seen[i]) {
            return Err(Error::InvalidPartition(format!("item {i} not covered")));
        }
        cells.sort_unstable_by_key(|c| *c.last().unwrap());
        Ok(Self { n, cells })
    }

    /// Builds a partition from 0-based block labels of items `1..=n`.
    pub fn from_labels(labels: &[usize]) -> Self {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut cells = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            cells[l].push(i + 1);
        }
        cells.retain(|c| !c.is_empty());
        cells.sort_unstable_by_key(|c| *c.last().unwrap());
        Self { n: labels.len(), cells }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// `(max C_i, |C_i|)` per cell.
    pub fn cell_summaries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells.iter().map(|c| (*c.last().unwrap(), c.len()))
    }
}

/// The path whose positive increments sit at cell maxima with the cell sizes.
pub fn path_of_partition(p: &Partition) -> SPath {
    path_of_summaries(p.n, p.cell_summaries())
}

pub(crate) fn path_of_summaries(n: usize, cells: impl Iterator<Item = (usize, usize)>) -> SPath {
    let mut inc = vec![0usize; n + 1];
    for (max, size) in cells {
        inc[max] = size;
    }
    let mut coords = vec![0usize; n + 1];
    for j in 1..=n {
        coords[j] = coords[j - 1] + inc[j];
    }
    SPath { coords }
}

/// Restricted-growth-string iterator over the set partitions of `{1..n}`.
/// Yields 0-based labels; `labels[i]` is the block of item `i + 1`.
#[derive(Debug, Clone)]
pub struct PartitionLabels {
    labels: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl PartitionLabels {
    pub fn new(n: usize) -> Self {
        Self { labels: vec![0; n], maxes: vec![0; n], done: n == 0 }
    }
}

impl Iterator for PartitionLabels {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.labels.clone();
        let n = self.labels.len();
        // maxes[i] = max(labels[0..i]) for i >= 1
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.labels[i] <= self.maxes[i] {
                self.labels[i] += 1;
                for k in i + 1..n {
                    self.maxes[k] = self.maxes[k - 1].max(self.labels[k - 1]);
                    self.labels[k] = 0;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every partition of `{1..n}` (Bell(n) of them).
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    PartitionLabels::new(n).map(|l| Partition::from_labels(&l)).collect()
}

/// Draws a partition uniformly from the fiber of `path`.
///
/// Scans `j = 1..n`; at each positive increment the cell with maximum `j`
/// takes its `m_j - 1` remaining members uniformly without replacement from
/// the `j - 1 - S_{j-1}` non-maximal items below `j` not yet placed. Each
/// stage contributes exactly one binomial factor of the fiber size, so every
/// member of the fiber has the same probability.
pub fn sample_partition_given_path<R: Rng + ?Sized>(path: &SPath, rng: &mut R) -> Partition {
    let n = path.n();
    let mut pool: Vec<usize> = Vec::with_capacity(n);
    let mut cells = Vec::new();
    for j in 1..=n {
        let m = path.increment(j);
        if m == 0 {
            // j is not a maximum, so it joins some later cell
            pool.push(j);
            continue;
        }
        debug_assert_eq!(pool.len(), j - 1 - path.get(j - 1));
        let picks = index::sample(rng, pool.len(), m - 1).into_vec();
        let mut cell: Vec<usize> = picks.iter().map(|&k| pool[k]).collect();
        let mut drop = picks;
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for k in drop {
            pool.swap_remove(k);
        }
        // keep pool in a canonical order so the stream → partition map is stable
        pool.sort_unstable();
        cell.push(j);
        cells.push(cell);
    }
    Partition::new(n, cells).expect("fiber sampling produces a valid partition")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn validate_examples() {
        assert!(SPath::new(vec![0, 1, 2, 3]).is_ok());
        assert!(SPath::new(vec![0, 0, 0, 3]).is_ok());
        match SPath::new(vec![0, 2, 2, 3]) {
            Err(Error::InvalidPath { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected error, got {other:?}"),
        }
        assert!(SPath::new(vec![0]).is_err());
        assert!(SPath::new(vec![1, 1]).is_err());
        assert!(SPath::new(vec![0, 1, 0, 3]).is_err());
        assert!(SPath::new(vec![0, 1, 2, 2]).is_err());
    }

    #[test]
    fn enumeration_small() {
        assert_eq!(enumerate_paths(1).unwrap(), vec![SPath::new(vec![0, 1]).unwrap()]);
        assert_eq!(enumerate_paths(5).unwrap().len(), 42);
        let ps = enumerate_paths(6).unwrap();
        assert!(ps.windows(2).all(|w| w[0] < w[1]), "lexicographic and distinct");
        assert!(ps.iter().all(SPath::is_valid));
        assert!(matches!(enumerate_paths(16), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn enumeration_matches_catalan() {
        for n in 1..=12 {
            let count = PathIter::new(n).count();
            assert_eq!(BigUint::from(count), count_paths(n), "n={n}");
            assert_eq!(count_paths(n), binom_big(2 * n, n) / BigUint::from(n + 1));
        }
    }

    #[test]
    fn counts() {
        assert_eq!(count_paths(1), BigUint::from(1u32));
        assert_eq!(count_partitions(1), BigUint::from(1u32));
        assert_eq!(count_paths(20), BigUint::from(6_564_120_420u64));
        assert_eq!(count_partitions(15), BigUint::from(1_382_958_545u64));
        assert_eq!(count_partitions(5), BigUint::from(52u32));
    }

    #[test]
    fn rgs_count_is_bell() {
        for n in 1..=9 {
            assert_eq!(BigUint::from(PartitionLabels::new(n).count()), count_partitions(n));
        }
    }

    #[test]
    fn correspondence_examples() {
        let p = Partition::new(3, vec![vec![1, 3], vec![2]]).unwrap();
        assert_eq!(path_of_partition(&p).coords(), &[0, 0, 1, 3]);
        let p = Partition::new(3, vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(path_of_partition(&p).coords(), &[0, 0, 0, 3]);
        let p = Partition::new(3, vec![vec![1], vec![2], vec![3]]).unwrap();
        assert_eq!(path_of_partition(&p).coords(), &[0, 1, 2, 3]);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![1, 2], vec![2, 3]]).is_err());
        assert!(Partition::new(2, vec![vec![1], vec![]]).is_err());
    }

    #[test]
    fn fiber_examples() {
        // grouping all 15 partitions of {1..4} by path: (0,0,0,2,4) has two
        let target = SPath::new(vec![0, 0, 0, 2, 4]).unwrap();
        let hits = enumerate_partitions(4).iter().filter(|p| path_of_partition(p) == target).count();
        assert_eq!(hits, 2);
        assert_eq!(fiber_size(&target), BigUint::from(2u32));
        for n in 1..8 {
            assert_eq!(fiber_size(&SPath::singletons(n)), BigUint::one());
            assert_eq!(fiber_size(&SPath::single_block(n)), BigUint::one());
        }
    }

    #[test]
    fn fiber_preimages_exhaustive() {
        for n in 1..=8 {
            let mut counts: HashMap<SPath, usize> = HashMap::new();
            for p in enumerate_partitions(n) {
                *counts.entry(path_of_partition(&p)).or_default() += 1;
            }
            let paths = enumerate_paths(n).unwrap();
            assert_eq!(counts.len(), paths.len(), "surjective n={n}");
            for s in &paths {
                assert_eq!(BigUint::from(counts[s]), fiber_size(s), "{s}");
            }
        }
    }

    #[test]
    fn fiber_sampling_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = SPath::singletons(3);
        for _ in 0..100 {
            let p = sample_partition_given_path(&s, &mut rng);
            assert_eq!(p.cells(), &[vec![1], vec![2], vec![3]]);
        }
        let s = SPath::new(vec![0, 0, 0, 2, 4]).unwrap();
        let a = Partition::new(4, vec![vec![1, 3], vec![2, 4]]).unwrap();
        let b = Partition::new(4, vec![vec![2, 3], vec![1, 4]]).unwrap();
        let draws = 100_000;
        let mut hits_a = 0usize;
        for _ in 0..draws {
            let p = sample_partition_given_path(&s, &mut rng);
            assert!(p == a || p == b, "{p:?}");
            hits_a += usize::from(p == a);
        }
        let sd = (draws as f64 * 0.25).sqrt();
        assert!((hits_a as f64 - draws as f64 / 2.0).abs() < 4.0 * sd);
    }
}
