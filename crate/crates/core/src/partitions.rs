//! Set partitions, subsets, Stirling and Bell numbers, and partitions of cluster sets.

use crate::error::{Error, Result};

/// Largest `n` accepted by [`stirling2`] and [`bell`].
pub const MAX_COUNT_ARG: usize = 20;

/// A partition of an ordered ground set into nonempty blocks, blocks sorted by
/// their smallest element (ground order).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    pub ground: Vec<usize>,
    pub blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Lazy enumeration in restricted-growth-string order.
#[derive(Debug, Clone)]
pub struct Partitions<T> {
    ground: Vec<T>,
    rgs: Vec<usize>,
    // prefix_max[i] = max(rgs[0..=i])
    prefix_max: Vec<usize>,
    done: bool,
}

impl<T: Clone> Partitions<T> {
    fn new(ground: Vec<T>) -> Self {
        let n = ground.len();
        Partitions { ground, rgs: vec![0; n], prefix_max: vec![0; n], done: false }
    }

    fn advance(&mut self) {
        let n = self.rgs.len();
        for i in (1..n).rev() {
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl<T: Clone> Iterator for Partitions<T> {
    type Item = Vec<Vec<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let count = self.prefix_max.last().map_or(0, |m| m + 1);
        let mut blocks: Vec<Vec<T>> = vec![Vec::new(); count];
        for (item, &b) in self.ground.iter().zip(&self.rgs) {
            blocks[b].push(item.clone());
        }
        self.advance();
        Some(blocks)
    }
}

/// Partitions of arbitrary items; blocks are ordered by first appearance.
/// The empty ground set has the single empty partition.
pub fn partitions_of_items<T: Clone>(items: &[T]) -> Partitions<T> {
    Partitions::new(items.to_vec())
}

pub fn partitions_of(ground: &[usize]) -> impl Iterator<Item = SetPartition> + '_ {
    partitions_of_items(ground).map(move |blocks| SetPartition { ground: ground.to_vec(), blocks })
}

/// Unordered splits of `ground` into two nonempty parts; the first part holds `ground[0]`.
pub fn partitions_into_two(ground: &[usize]) -> Result<impl Iterator<Item = (Vec<usize>, Vec<usize>)> + '_> {
    if ground.len() < 2 {
        return Err(Error::Invalid(format!("cannot split {} labels into two nonempty parts", ground.len())));
    }
    let rest = &ground[1..];
    let full = (1u64 << rest.len()) - 1;
    Ok((0..full).map(move |mask| {
        let mut first = vec![ground[0]];
        let mut second = Vec::new();
        for (bit, &label) in rest.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                first.push(label);
            } else {
                second.push(label);
            }
        }
        (first, second)
    }))
}

/// All subsets of `items` (ground order kept inside each subset), by increasing bitmask.
pub fn subsets<T: Clone>(items: &[T]) -> impl Iterator<Item = Vec<T>> + '_ {
    assert!(items.len() < 64, "subset enumeration limited to 63 elements");
    (0u64..1 << items.len()).map(move |mask| {
        items.iter().enumerate().filter(|(bit, _)| mask >> bit & 1 == 1).map(|(_, x)| x.clone()).collect()
    })
}

pub fn nonempty_subsets<T: Clone>(items: &[T]) -> impl Iterator<Item = Vec<T>> + '_ {
    subsets(items).skip(1)
}

fn check_count_arg(n: usize) -> Result<()> {
    if n > MAX_COUNT_ARG {
        return Err(Error::Overflow(format!("partition counts are capped at n = {MAX_COUNT_ARG}, got {n}")));
    }
    Ok(())
}

/// Stirling number of the second kind, `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> Result<u64> {
    check_count_arg(n)?;
    if k > n {
        return Ok(0);
    }
    // row[j] = S(m, j)
    let mut row = vec![0u64; n + 1];
    row[0] = 1;
    for m in 1..=n {
        for j in (1..=m).rev() {
            let grown = (j as u64)
                .checked_mul(row[j])
                .and_then(|v| v.checked_add(row[j - 1]))
                .ok_or_else(|| Error::Overflow(format!("S({m}, {j})")))?;
            row[j] = grown;
        }
        row[0] = 0;
    }
    Ok(row[k])
}

pub fn bell(n: usize) -> Result<u64> {
    check_count_arg(n)?;
    (0..=n)
        .try_fold(0u64, |acc, k| acc.checked_add(stirling2(n, k)?).ok_or_else(|| Error::Overflow(format!("Bell({n})"))))
}

/// Partition-lattice coefficient `(-1)^{k-1} (k-1)!` for a partition into `k` blocks.
pub fn mobius_coefficient(blocks: usize) -> i64 {
    assert!(blocks >= 1, "a partition has at least one block");
    let factorial: i64 = (1..blocks as i64).product();
    if blocks % 2 == 1 {
        factorial
    } else {
        -factorial
    }
}

pub fn mobius_weight(blocks: usize) -> f64 {
    mobius_coefficient(blocks) as f64
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A set of disjoint particle clusters, each treated as one opaque element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterSet {
    clusters: Vec<Vec<usize>>,
}

impl ClusterSet {
    pub fn new(clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for cluster in &clusters {
            if cluster.is_empty() {
                return Err(Error::Invalid("empty particle cluster".into()));
            }
            for &label in cluster {
                if !seen.insert(label) {
                    return Err(Error::DuplicateLabel(label));
                }
            }
        }
        Ok(ClusterSet { clusters })
    }

    /// One singleton cluster per label.
    pub fn singletons(labels: &[usize]) -> Self {
        ClusterSet { clusters: labels.iter().map(|&l| vec![l]).collect() }
    }

    /// The cluster `{base}` followed by singleton clusters for `extra`.
    pub fn with_base(base: &[usize], extra: &[usize]) -> Result<Self> {
        let mut clusters = vec![base.to_vec()];
        clusters.extend(extra.iter().map(|&l| vec![l]));
        Self::new(clusters)
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Union of all cluster labels, sorted.
pub fn declasterize(cs: &ClusterSet) -> Vec<usize> {
    let mut labels: Vec<usize> = cs.clusters.iter().flatten().copied().collect();
    labels.sort_unstable();
    labels
}

/// Partitions of the cluster set; every block is itself a cluster set.
pub fn partitions_of_clusterset(cs: &ClusterSet) -> impl Iterator<Item = Vec<ClusterSet>> + '_ {
    partitions_of_items(&cs.clusters).map(|blocks| blocks.into_iter().map(|clusters| ClusterSet { clusters }).collect())
}
