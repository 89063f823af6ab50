//! Top-k retrieval of analogical triplets and pairs.
//!
//! Every search comes in two flavours: an exhaustive reference that scores every
//! candidate, and a pruned search that abandons a candidate as soon as the
//! partial degree sum plus one per unseen feature cannot reach the current k-th
//! best. Both produce identical lists: degrees descending, ties broken by
//! ascending indices.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, PreferenceDataset};
use crate::error::{Error, Result};
use crate::kernels::{degree_sum, label_transfer, Kernel};

/// Rounding allowance between a prefix bound and the sum it bounds.
const BOUND_SLACK: f64 = 1e-9;

/// Ordered triplet `(a, b, c)` of training indices scored against a query `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTriplet {
    pub indices: [usize; 3],
    pub degree: f64,
    pub transferred_label: Option<usize>,
}

/// Which way a stored preference `a > b` points when transferred to the query pair `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// `c` is preferred to `d`.
    #[serde(rename = "c>d")]
    Forward,
    /// `d` is preferred to `c`.
    #[serde(rename = "d>c")]
    Reverse,
}

impl Direction {
    pub fn symbol(&self) -> &'static str {
        match self {
            Direction::Forward => "c > d",
            Direction::Reverse => "d > c",
        }
    }
}

/// A stored preference `a > b` (position `preference` in the dataset) scored against a query pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub preference: usize,
    pub indices: [usize; 2],
    pub degree: f64,
    pub direction: Direction,
}

/// A query vector, optionally a row of the training set that must not take part
/// in its own triplets.
#[derive(Debug, Clone, Copy)]
pub struct TripletQuery<'a> {
    pub vector: &'a [f64],
    pub exclude: Option<usize>,
}

impl<'a> TripletQuery<'a> {
    pub fn new(vector: &'a [f64]) -> Self {
        Self {
            vector,
            exclude: None,
        }
    }

    /// Training row `i` as the query; it is left out of the candidate triplets.
    pub fn training_row(train: &'a LabeledDataset, i: usize) -> Self {
        Self {
            vector: train.instance(i),
            exclude: Some(i),
        }
    }

    fn excludes(&self, i: usize) -> bool {
        self.exclude == Some(i)
    }
}

impl<'a> From<&'a [f64]> for TripletQuery<'a> {
    fn from(vector: &'a [f64]) -> Self {
        Self::new(vector)
    }
}

impl<'a> From<&'a Vec<f64>> for TripletQuery<'a> {
    fn from(vector: &'a Vec<f64>) -> Self {
        Self::new(vector)
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked<K> {
    degree: f64,
    sum: f64,
    key: K,
}

impl<K: Ord> PartialEq for Ranked<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K: Ord> Eq for Ranked<K> {}

impl<K: Ord> PartialOrd for Ranked<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Less means better: higher degree first, then smaller key.
impl<K: Ord> Ord for Ranked<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree
            .total_cmp(&self.degree)
            .then_with(|| self.key.cmp(&other.key))
    }
}

/// Bounded collection of the k best candidates; the heap top is the current worst.
#[derive(Debug)]
struct TopK<K> {
    k: usize,
    heap: BinaryHeap<Ranked<K>>,
}

impl<K: Ord + Copy> TopK<K> {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    /// Degree sum a candidate must (approximately) exceed to have a chance, if the list is full.
    #[inline]
    fn floor_sum(&self) -> Option<f64> {
        if self.heap.len() < self.k {
            None
        } else {
            self.heap.peek().map(|w| w.sum)
        }
    }

    #[inline]
    fn push(&mut self, cand: Ranked<K>) {
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(worst) = self.heap.peek() {
            if cand < *worst {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for cand in other.heap {
            self.push(cand);
        }
        self
    }

    fn into_sorted(self) -> Vec<Ranked<K>> {
        self.heap.into_sorted_vec()
    }
}

#[inline]
fn prune_below(floor: Option<f64>) -> f64 {
    floor.map_or(f64::NEG_INFINITY, |s| s - BOUND_SLACK)
}

fn check_triplet_inputs(train: &LabeledDataset, query: &TripletQuery<'_>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let available = train.len() - usize::from(query.exclude.is_some_and(|i| i < train.len()));
    if available < 3 {
        return Err(Error::TooFewInstances {
            required: 3,
            found: available,
        });
    }
    if query.vector.len() != train.dim() {
        return Err(Error::dimension("query", train.dim(), query.vector.len()));
    }
    Ok(())
}

#[inline]
fn transfer_ok(transferred: Option<usize>, constraint: Option<usize>) -> bool {
    match (transferred, constraint) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(y), Some(want)) => y == want,
    }
}

/// Reference search: scores every ordered triplet of distinct training indices.
pub fn top_k_triplets_exhaustive<'q>(
    train: &LabeledDataset,
    query: impl Into<TripletQuery<'q>>,
    k: usize,
    kernel: &Kernel,
    label_constraint: Option<usize>,
) -> Result<Vec<ScoredTriplet>> {
    let query = query.into();
    check_triplet_inputs(train, &query, k)?;
    let n = train.len();
    let d = train.dim() as f64;
    let x = train.instances();
    let mut top = TopK::new(k);
    for a in (0..n).filter(|&i| !query.excludes(i)) {
        for b in (0..n).filter(|&i| i != a && !query.excludes(i)) {
            for c in (0..n).filter(|&i| i != a && i != b && !query.excludes(i)) {
                let transferred = label_transfer(
                    train.label(a),
                    train.label(b),
                    train.label(c),
                    train.num_classes(),
                );
                if !transfer_ok(transferred, label_constraint) {
                    continue;
                }
                let sum = degree_sum(&x[a], &x[b], &x[c], query.vector, kernel);
                top.push(Ranked {
                    degree: sum / d,
                    sum,
                    key: [a, b, c],
                });
            }
        }
    }
    Ok(finish_triplets(train, top))
}

fn finish_triplets(train: &LabeledDataset, top: TopK<[usize; 3]>) -> Vec<ScoredTriplet> {
    top.into_sorted()
        .into_iter()
        .map(|r| {
            let [a, b, c] = r.key;
            ScoredTriplet {
                indices: r.key,
                degree: r.degree,
                transferred_label: label_transfer(
                    train.label(a),
                    train.label(b),
                    train.label(c),
                    train.num_classes(),
                ),
            }
        })
        .collect()
}

/// Ordered training pairs `(a, b)` sharing a label offset `y_b - y_a`, sorted by
/// the first-feature relation so that candidate windows can be cut by bisection.
#[derive(Debug)]
struct PairGroup {
    delta: i64,
    pairs: Vec<(u32, u32)>,
    first_diff: Vec<f64>,
}

/// Query-independent pair tables for repeated triplet searches over one training set.
#[derive(Debug)]
pub struct TripletIndex<'a> {
    train: &'a LabeledDataset,
    kernel: Kernel,
    groups: Vec<PairGroup>,
}

impl<'a> TripletIndex<'a> {
    pub fn new(train: &'a LabeledDataset, kernel: Kernel) -> Self {
        let n = train.len();
        let x = train.instances();
        let mut by_delta: Vec<Vec<(f64, u32, u32)>> =
            vec![Vec::new(); 2 * train.num_classes().max(1)];
        let offset = train.num_classes() as i64;
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let delta = train.label(b) as i64 - train.label(a) as i64;
                by_delta[(delta + offset) as usize].push((x[a][0] - x[b][0], a as u32, b as u32));
            }
        }
        let groups = by_delta
            .into_iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(slot, mut g)| {
                g.sort_by(|l, r| l.0.total_cmp(&r.0).then((l.1, l.2).cmp(&(r.1, r.2))));
                PairGroup {
                    delta: slot as i64 - offset,
                    first_diff: g.iter().map(|e| e.0).collect(),
                    pairs: g.iter().map(|e| (e.1, e.2)).collect(),
                }
            })
            .collect();
        Self {
            train,
            kernel,
            groups,
        }
    }

    pub fn train(&self) -> &LabeledDataset {
        self.train
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Pruned top-k search; output is identical to [`top_k_triplets_exhaustive`].
    ///
    /// Work is split over candidate `c` indices on the current rayon pool; the
    /// per-worker lists are merged under the canonical order, so results do not
    /// depend on the number of workers.
    pub fn top_k<'q>(
        &self,
        query: impl Into<TripletQuery<'q>>,
        k: usize,
        label_constraint: Option<usize>,
    ) -> Result<Vec<ScoredTriplet>> {
        let query = query.into();
        check_triplet_inputs(self.train, &query, k)?;
        let top = (0..self.train.len())
            .into_par_iter()
            .filter(|&c| !query.excludes(c))
            .fold(
                || TopK::new(k),
                |mut top, c| {
                    self.scan(c, &query, label_constraint, &mut top);
                    top
                },
            )
            .reduce(|| TopK::new(k), TopK::merge);
        Ok(finish_triplets(self.train, top))
    }

    fn scan(
        &self,
        c: usize,
        query: &TripletQuery<'_>,
        constraint: Option<usize>,
        top: &mut TopK<[usize; 3]>,
    ) {
        let train = self.train;
        let x = train.instances();
        let q = query.vector;
        let dim = q.len();
        let d = dim as f64;
        let y_c = train.label(c) as i64;
        let xc = &x[c];
        let q0 = xc[0] - q[0];

        for group in &self.groups {
            let y_d = y_c + group.delta;
            if y_d < 0 || y_d >= train.num_classes() as i64 {
                continue;
            }
            if constraint.is_some_and(|want| want as i64 != y_d) {
                continue;
            }

            // First-feature window: the first feature must contribute at least
            // `need` for the remaining features (each at most 1) to reach the floor.
            let (lo, hi) = match (self.kernel, top.floor_sum()) {
                (Kernel::Arithmetic { .. }, Some(floor)) => {
                    let need = floor - BOUND_SLACK - (d - 1.0);
                    if need > 0.0 {
                        let radius = 1.0 - need + BOUND_SLACK;
                        let lo = group.first_diff.partition_point(|&p| p < q0 - radius);
                        let hi = group.first_diff.partition_point(|&p| p <= q0 + radius);
                        (lo, hi)
                    } else {
                        (0, group.pairs.len())
                    }
                }
                _ => (0, group.pairs.len()),
            };

            for &(a, b) in &group.pairs[lo..hi] {
                let (a, b) = (a as usize, b as usize);
                if a == c || b == c || query.excludes(a) || query.excludes(b) {
                    continue;
                }
                let (xa, xb) = (&x[a], &x[b]);
                let cutoff = prune_below(top.floor_sum());
                let mut sum = 0.0;
                let mut pruned = false;
                for f in 0..dim {
                    sum += self.kernel.degree(xa[f], xb[f], xc[f], q[f]);
                    if sum + ((dim - 1 - f) as f64) < cutoff {
                        pruned = true;
                        break;
                    }
                }
                if !pruned {
                    top.push(Ranked {
                        degree: sum / d,
                        sum,
                        key: [a, b, c],
                    });
                }
            }
        }
    }
}

/// The k ordered training triplets forming the strongest analogies `a : b :: c : query`.
///
/// Triplets whose label transfer abstains are skipped; with `label_constraint`
/// only triplets transferring that label qualify.
pub fn top_k_triplets<'q>(
    train: &LabeledDataset,
    query: impl Into<TripletQuery<'q>>,
    k: usize,
    kernel: &Kernel,
    label_constraint: Option<usize>,
) -> Result<Vec<ScoredTriplet>> {
    let query = query.into();
    check_triplet_inputs(train, &query, k)?;
    TripletIndex::new(train, *kernel).top_k(query, k, label_constraint)
}

fn check_pair_inputs(train: &PreferenceDataset, c: &[f64], d: &[f64], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::EmptyPreferences);
    }
    if c.len() != train.dim() {
        return Err(Error::dimension("c", train.dim(), c.len()));
    }
    if d.len() != train.dim() {
        return Err(Error::dimension("d", train.dim(), d.len()));
    }
    Ok(())
}

fn finish_pairs(
    train: &PreferenceDataset,
    top: Vec<Ranked<(usize, Direction)>>,
) -> Vec<ScoredPair> {
    top.into_iter()
        .map(|r| {
            let (preference, direction) = r.key;
            let (a, b) = train.preferences()[preference];
            ScoredPair {
                preference,
                indices: [a, b],
                degree: r.degree,
                direction,
            }
        })
        .collect()
}

/// Reference pair search: scores both orientations of every stored preference.
pub fn top_k_pairs_exhaustive(
    train: &PreferenceDataset,
    c: &[f64],
    d: &[f64],
    k: usize,
    kernel: &Kernel,
) -> Result<Vec<ScoredPair>> {
    check_pair_inputs(train, c, d, k)?;
    let dim = train.dim() as f64;
    let mut all = Vec::with_capacity(2 * train.len());
    for (p, &(a, b)) in train.preferences().iter().enumerate() {
        let (xa, xb) = (train.instance(a), train.instance(b));
        for (direction, (x3, x4)) in [(Direction::Forward, (c, d)), (Direction::Reverse, (d, c))] {
            let sum = degree_sum(xa, xb, x3, x4, kernel);
            all.push(Ranked {
                degree: sum / dim,
                sum,
                key: (p, direction),
            });
        }
    }
    all.sort();
    all.truncate(k);
    Ok(finish_pairs(train, all))
}

/// The k highest analogies `a : b :: c : d` (suggesting `c > d`) and
/// `a : b :: d : c` (suggesting `d > c`) over stored preferences `a > b`.
pub fn top_k_pairs(
    train: &PreferenceDataset,
    c: &[f64],
    d: &[f64],
    k: usize,
    kernel: &Kernel,
) -> Result<Vec<ScoredPair>> {
    check_pair_inputs(train, c, d, k)?;
    let dim = train.dim();
    let mut top = TopK::new(k);
    for (p, &(a, b)) in train.preferences().iter().enumerate() {
        let (xa, xb) = (train.instance(a), train.instance(b));
        for (direction, (x3, x4)) in [(Direction::Forward, (c, d)), (Direction::Reverse, (d, c))] {
            let cutoff = prune_below(top.floor_sum());
            let mut sum = 0.0;
            let mut pruned = false;
            for f in 0..dim {
                sum += kernel.degree(xa[f], xb[f], x3[f], x4[f]);
                if sum + ((dim - 1 - f) as f64) < cutoff {
                    pruned = true;
                    break;
                }
            }
            if !pruned {
                top.push(Ranked {
                    degree: sum / dim as f64,
                    sum,
                    key: (p, direction),
                });
            }
        }
    }
    Ok(finish_pairs(train, top.into_sorted()))
}

/// Number of ordered triplets of distinct indices among `n` items.
pub fn triplet_population(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2)
    }
}

/// The `t`-th ordered triplet of distinct indices in lexicographic order.
pub fn unrank_triplet(t: usize, n: usize) -> [usize; 3] {
    let per_a = (n - 1) * (n - 2);
    let a = t / per_a;
    let rest = t % per_a;
    let mut b = rest / (n - 2);
    let mut c = rest % (n - 2);
    if b >= a {
        b += 1;
    }
    let (lo, hi) = (a.min(b), a.max(b));
    if c >= lo {
        c += 1;
    }
    if c >= hi {
        c += 1;
    }
    [a, b, c]
}

/// Degrees of `num_samples` ordered triplets drawn uniformly, without replacement
/// until the population is exhausted and with replacement beyond it.
///
/// Labels play no role: every triplet counts, whether or not its transfer abstains.
pub fn sample_triplet_degrees(
    instances: &[Vec<f64>],
    query: &[f64],
    num_samples: usize,
    seed: u64,
    kernel: &Kernel,
) -> Result<Vec<f64>> {
    if num_samples == 0 {
        return Err(Error::InvalidParameter(
            "num_samples must be at least 1".into(),
        ));
    }
    let n = instances.len();
    if n < 3 {
        return Err(Error::TooFewInstances {
            required: 3,
            found: n,
        });
    }
    if let Some(bad) = instances.iter().find(|x| x.len() != query.len()) {
        return Err(Error::dimension("query", bad.len(), query.len()));
    }
    let population = triplet_population(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<usize> = if num_samples <= population {
        index::sample(&mut rng, population, num_samples).into_vec()
    } else {
        (0..population)
            .chain((population..num_samples).map(|_| rng.random_range(0..population)))
            .collect()
    };
    let d = query.len() as f64;
    Ok(ids
        .into_iter()
        .map(|t| {
            let [a, b, c] = unrank_triplet(t, n);
            degree_sum(&instances[a], &instances[b], &instances[c], query, kernel) / d
        })
        .collect())
}
