//! Analogy-based classification, preference and ranking prediction, and the kNN baseline.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, PreferenceDataset};
use crate::error::{Error, Result};
use crate::kernels::similarity_unchecked;
use crate::search::{
    top_k_pairs, Direction, ScoredPair, ScoredTriplet, TripletIndex, TripletQuery,
};

/// Vote counts and their shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSummary<K: Ord> {
    pub counts: BTreeMap<K, usize>,
    pub total: usize,
    pub probability: BTreeMap<K, f64>,
}

impl<K: Ord + Copy> VoteSummary<K> {
    pub fn from_votes(votes: impl IntoIterator<Item = K>) -> Self {
        let mut counts = BTreeMap::new();
        for v in votes {
            *counts.entry(v).or_insert(0) += 1;
        }
        let total = counts.values().sum();
        let probability = counts
            .iter()
            .map(|(&k, &c)| (k, c as f64 / total as f64))
            .collect();
        Self {
            counts,
            total,
            probability,
        }
    }

    /// Most voted key; ties go to the smallest key.
    pub fn winner(&self) -> Option<K> {
        let mut best: Option<(K, usize)> = None;
        for (&k, &c) in &self.counts {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k, c));
            }
        }
        best.map(|(k, _)| k)
    }

    pub fn probability_of(&self, key: K) -> f64 {
        self.probability.get(&key).copied().unwrap_or(0.0)
    }
}

/// Outcome of an analogical vote: a decision, or no qualifying analogy at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Verdict<K: Ord> {
    Decided { choice: K, votes: VoteSummary<K> },
    NoVote,
}

impl<K: Ord + Copy> Verdict<K> {
    fn from_votes(votes: impl IntoIterator<Item = K>) -> Self {
        let votes = VoteSummary::from_votes(votes);
        match votes.winner() {
            Some(choice) => Verdict::Decided { choice, votes },
            None => Verdict::NoVote,
        }
    }

    pub fn choice(&self) -> Option<K> {
        match self {
            Verdict::Decided { choice, .. } => Some(*choice),
            Verdict::NoVote => None,
        }
    }

    pub fn votes(&self) -> Option<&VoteSummary<K>> {
        match self {
            Verdict::Decided { votes, .. } => Some(votes),
            Verdict::NoVote => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrediction {
    pub verdict: Verdict<usize>,
    pub analogies: Vec<ScoredTriplet>,
}

impl ClassPrediction {
    pub fn label(&self) -> Option<usize> {
        self.verdict.choice()
    }
}

/// Classify `query` by the transferred labels of its k strongest analogies.
pub fn predict_class<'q>(
    index: &TripletIndex<'_>,
    query: impl Into<TripletQuery<'q>>,
    k: usize,
) -> Result<ClassPrediction> {
    let analogies = index.top_k(query, k, None)?;
    let verdict = Verdict::from_votes(analogies.iter().filter_map(|t| t.transferred_label));
    Ok(ClassPrediction { verdict, analogies })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePrediction {
    pub verdict: Verdict<Direction>,
    pub analogies: Vec<ScoredPair>,
}

impl PreferencePrediction {
    pub fn direction(&self) -> Option<Direction> {
        self.verdict.choice()
    }

    /// Probability that `c` is preferred to `d`; 0.5 without votes.
    pub fn forward_probability(&self) -> f64 {
        self.verdict
            .votes()
            .map_or(0.5, |v| v.probability_of(Direction::Forward))
    }
}

/// Predict whether `c > d` or `d > c` from the k strongest stored-preference analogies.
/// Ties go to `c > d`.
pub fn predict_preference(
    train: &PreferenceDataset,
    c: &[f64],
    d: &[f64],
    k: usize,
    kernel: &crate::kernels::Kernel,
) -> Result<PreferencePrediction> {
    let analogies = top_k_pairs(train, c, d, k, kernel)?;
    let verdict = Verdict::from_votes(analogies.iter().map(|p| p.direction));
    Ok(PreferencePrediction { verdict, analogies })
}

/// A total order of query items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Item indices, best first.
    pub order: Vec<usize>,
    /// `ranks[i]` is the 1-based rank of item `i`.
    pub ranks: Vec<usize>,
    /// Pairwise wins per item.
    pub wins: Vec<usize>,
    /// Summed win probabilities per item (tie-breaker).
    pub probability_sums: Vec<f64>,
}

/// Rank query items by pairwise analogical preference wins.
///
/// Ties in wins fall back to summed win probabilities, then input order. Pairs
/// with no vote count as a 0.5/0.5 split and award no win.
pub fn predict_ranking(
    train: &PreferenceDataset,
    items: &[Vec<f64>],
    k: usize,
    kernel: &crate::kernels::Kernel,
) -> Result<Ranking> {
    let m = items.len();
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 items to rank, got {m}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let outcomes = pairs
        .par_iter()
        .map(|&(i, j)| predict_preference(train, &items[i], &items[j], k, kernel))
        .collect::<Result<Vec<_>>>()?;

    let mut wins = vec![0usize; m];
    let mut probability_sums = vec![0.0; m];
    for (&(i, j), outcome) in pairs.iter().zip(&outcomes) {
        let p = outcome.forward_probability();
        probability_sums[i] += p;
        probability_sums[j] += 1.0 - p;
        match outcome.direction() {
            Some(Direction::Forward) => wins[i] += 1,
            Some(Direction::Reverse) => wins[j] += 1,
            None => {}
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        wins[b]
            .cmp(&wins[a])
            .then(probability_sums[b].total_cmp(&probability_sums[a]))
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0; m];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    Ok(Ranking {
        order,
        ranks,
        wins,
        probability_sums,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub similarity: f64,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnPrediction {
    pub label: usize,
    pub votes: VoteSummary<usize>,
    pub neighbors: Vec<Neighbor>,
}

/// The k most similar training instances, most similar first (ties by index).
pub fn nearest_neighbors<'q>(
    train: &LabeledDataset,
    query: impl Into<TripletQuery<'q>>,
    k: usize,
) -> Result<Vec<Neighbor>> {
    let query = query.into();
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if query.vector.len() != train.dim() {
        return Err(Error::dimension("query", train.dim(), query.vector.len()));
    }
    let mut all: Vec<Neighbor> = (0..train.len())
        .filter(|&i| query.exclude != Some(i))
        .map(|i| Neighbor {
            index: i,
            similarity: similarity_unchecked(train.instance(i), query.vector),
            label: train.label(i),
        })
        .collect();
    if k == 0 || k > all.len() {
        return Err(Error::InvalidParameter(format!(
            "k must lie in [1, {}], got {k}",
            all.len()
        )));
    }
    all.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.index.cmp(&b.index))
    });
    all.truncate(k);
    Ok(all)
}

/// Majority label of the k nearest neighbors; ties go to the lower ordinal.
pub fn knn_predict<'q>(
    train: &LabeledDataset,
    query: impl Into<TripletQuery<'q>>,
    k: usize,
) -> Result<KnnPrediction> {
    let neighbors = nearest_neighbors(train, query, k)?;
    let votes = VoteSummary::from_votes(neighbors.iter().map(|n| n.label));
    let label = votes.winner().expect("k >= 1 neighbors");
    Ok(KnnPrediction {
        label,
        votes,
        neighbors,
    })
}
