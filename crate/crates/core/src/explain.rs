//! Analogy-based and similarity-based explanations, rendered as text or JSON.
//!
//! Explanations are model-agnostic: the label or preference direction to explain
//! is an input and may come from any predictor.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, PreferenceDataset};
use crate::error::{Error, Result};
use crate::kernels::{feature_degrees, Kernel};
use crate::predict::{nearest_neighbors, Neighbor, VoteSummary};
use crate::search::{
    top_k_pairs, Direction, ScoredPair, ScoredTriplet, TripletIndex, TripletQuery,
};

/// Per-feature values of the kernel's relation `R(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationVector {
    pub feature_names: Vec<String>,
    #[serde(with = "nonfinite_as_null")]
    pub values: Vec<f64>,
}

impl DeviationVector {
    pub fn between(x: &[f64], y: &[f64], kernel: &Kernel, feature_names: &[String]) -> Self {
        Self {
            feature_names: feature_names.to_vec(),
            values: x
                .iter()
                .zip(y)
                .map(|(a, b)| kernel.relation(*a, *b))
                .collect(),
        }
    }
}

/// The geometric relation can be `+inf` (`x / 0`), which JSON cannot carry.
mod nonfinite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        values
            .iter()
            .map(|v| v.is_finite().then_some(*v))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|v| v.unwrap_or(f64::INFINITY))
            .collect())
    }
}

/// Whether entries support the explained label or a contrasting one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationMode {
    Supportive,
    Contrastive { contrast_label: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    #[serde(flatten)]
    pub triplet: ScoredTriplet,
    /// Labels of a, b and c.
    pub labels: [usize; 3],
    pub deviations_ab: DeviationVector,
    pub deviations_cd: DeviationVector,
    pub per_feature_degrees: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassExplanation {
    pub query: Vec<f64>,
    pub query_index: Option<usize>,
    pub explained_label: usize,
    pub class_names: Vec<String>,
    pub mode: ExplanationMode,
    pub kernel: Kernel,
    pub min_degree: f64,
    pub entries: Vec<ClassEntry>,
    /// Votes of the unconstrained top-m analogies, for context.
    pub votes: VoteSummary<usize>,
}

impl ClassExplanation {
    /// Label the entries transfer: the explained label, or the contrast label in contrastive mode.
    pub fn target_label(&self) -> usize {
        match self.mode {
            ExplanationMode::Supportive => self.explained_label,
            ExplanationMode::Contrastive { contrast_label } => contrast_label,
        }
    }
}

/// Shared knobs of analogy explanations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplainOptions {
    /// Maximum number of entries.
    pub m: usize,
    /// Entries below this degree are left out.
    pub min_degree: f64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        Self {
            m: 3,
            min_degree: 0.0,
        }
    }
}

impl ExplainOptions {
    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_degree) {
            return Err(Error::InvalidParameter(format!(
                "minimum degree must lie in [0, 1], got {}",
                self.min_degree
            )));
        }
        Ok(())
    }
}

/// Explain why `query` gets `explained_label` by its strongest analogies
/// `a : b :: c : query` whose labels transfer to that label (or to
/// `contrast_label`, in contrastive mode).
pub fn explain_class<'q>(
    index: &TripletIndex<'_>,
    query: impl Into<TripletQuery<'q>>,
    explained_label: usize,
    contrast_label: Option<usize>,
    options: ExplainOptions,
) -> Result<ClassExplanation> {
    options.validate()?;
    let query = query.into();
    let train = index.train();
    let kernel = *index.kernel();
    for label in std::iter::once(explained_label).chain(contrast_label) {
        if label >= train.num_classes() {
            return Err(Error::InvalidParameter(format!(
                "label {label} is not below the class count {}",
                train.num_classes()
            )));
        }
    }
    let mode = match contrast_label {
        Some(contrast_label) => ExplanationMode::Contrastive { contrast_label },
        None => ExplanationMode::Supportive,
    };
    let target = contrast_label.unwrap_or(explained_label);

    let entries = index
        .top_k(query, options.m, Some(target))?
        .into_iter()
        .filter(|t| t.degree >= options.min_degree)
        .map(|t| class_entry(train, query.vector, t, &kernel))
        .collect::<Result<Vec<_>>>()?;
    let context = index.top_k(query, options.m, None)?;
    let votes = VoteSummary::from_votes(context.iter().filter_map(|t| t.transferred_label));

    Ok(ClassExplanation {
        query: query.vector.to_vec(),
        query_index: query.exclude,
        explained_label,
        class_names: train.class_names().to_vec(),
        mode,
        kernel,
        min_degree: options.min_degree,
        entries,
        votes,
    })
}

fn class_entry(
    train: &LabeledDataset,
    query: &[f64],
    triplet: ScoredTriplet,
    kernel: &Kernel,
) -> Result<ClassEntry> {
    let [a, b, c] = triplet.indices;
    let (xa, xb, xc) = (train.instance(a), train.instance(b), train.instance(c));
    let names = train.feature_names();
    Ok(ClassEntry {
        labels: [train.label(a), train.label(b), train.label(c)],
        deviations_ab: DeviationVector::between(xa, xb, kernel, names),
        deviations_cd: DeviationVector::between(xc, query, kernel, names),
        per_feature_degrees: feature_degrees(xa, xb, xc, query, kernel)?,
        triplet,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceEntry {
    #[serde(flatten)]
    pub pair: ScoredPair,
    pub deviations_ab: DeviationVector,
    /// `R(c, d)` for entries supporting `c > d`, `R(d, c)` otherwise.
    pub deviations_cd: DeviationVector,
    pub per_feature_degrees: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairQuery {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub c_index: Option<usize>,
    pub d_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceExplanation {
    pub query: PairQuery,
    pub direction: Direction,
    pub kernel: Kernel,
    pub min_degree: f64,
    pub entries: Vec<PreferenceEntry>,
    /// Votes of the unconstrained top-m pair analogies, for context.
    pub votes: VoteSummary<Direction>,
}

/// Explain a preference between `query.c` and `query.d` in `direction` by the
/// strongest stored preferences `a > b` that transfer to it.
pub fn explain_preference(
    train: &PreferenceDataset,
    query: PairQuery,
    direction: Direction,
    kernel: &Kernel,
    options: ExplainOptions,
) -> Result<PreferenceExplanation> {
    options.validate()?;
    let (c, d) = (&query.c, &query.d);
    // Both orientations of every preference; enough candidates that m of the
    // requested direction survive whenever they exist.
    let all = top_k_pairs(train, c, d, 2 * train.len().max(1), kernel)?;
    let votes = VoteSummary::from_votes(all.iter().take(options.m).map(|p| p.direction));
    let names = train.feature_names();
    let entries = all
        .into_iter()
        .filter(|p| p.direction == direction && p.degree >= options.min_degree)
        .take(options.m)
        .map(|pair| {
            let [a, b] = pair.indices;
            let (xa, xb) = (train.instance(a), train.instance(b));
            let (x3, x4) = match direction {
                Direction::Forward => (c, d),
                Direction::Reverse => (d, c),
            };
            Ok(PreferenceEntry {
                deviations_ab: DeviationVector::between(xa, xb, kernel, names),
                deviations_cd: DeviationVector::between(x3, x4, kernel, names),
                per_feature_degrees: feature_degrees(xa, xb, x3, x4, kernel)?,
                pair,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreferenceExplanation {
        query,
        direction,
        kernel: *kernel,
        min_degree: options.min_degree,
        entries,
        votes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityExplanation {
    pub query: Vec<f64>,
    pub query_index: Option<usize>,
    pub class_names: Vec<String>,
    pub neighbors: Vec<Neighbor>,
    pub distribution: VoteSummary<usize>,
}

/// The k nearest training instances and their class distribution.
pub fn explain_similarity<'q>(
    train: &LabeledDataset,
    query: impl Into<TripletQuery<'q>>,
    k: usize,
) -> Result<SimilarityExplanation> {
    let query = query.into();
    let neighbors = nearest_neighbors(train, query, k)?;
    Ok(SimilarityExplanation {
        query: query.vector.to_vec(),
        query_index: query.exclude,
        class_names: train.class_names().to_vec(),
        distribution: VoteSummary::from_votes(neighbors.iter().map(|n| n.label)),
        neighbors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format '{other}'"
            ))),
        }
    }
}

/// Something that renders as a human-readable report and serializes to JSON.
pub trait Report: Serialize {
    fn render_text(&self) -> String;
}

pub fn render_report<R: Report>(explanation: &R, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => explanation.render_text(),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(explanation).expect("explanations serialize");
            s.push('\n');
            s
        }
    }
}

fn fmt_signed(v: f64) -> String {
    if v.is_finite() {
        format!("{v:+.3}")
    } else {
        "inf".to_string()
    }
}

fn relation_symbol(kernel: &Kernel) -> &'static str {
    match kernel {
        Kernel::Geometric => "/",
        _ => "-",
    }
}

fn write_deviations(
    out: &mut String,
    entry_ab: &DeviationVector,
    entry_cd: &DeviationVector,
    degrees: &[f64],
    kernel: &Kernel,
    rhs: (&str, &str),
) {
    let op = relation_symbol(kernel);
    for (i, name) in entry_ab.feature_names.iter().enumerate() {
        let _ = writeln!(
            out,
            "    {name}: a{op}b = {}, {}{op}{} = {}, degree {:.3}",
            fmt_signed(entry_ab.values[i]),
            rhs.0,
            rhs.1,
            fmt_signed(entry_cd.values[i]),
            degrees[i]
        );
    }
}

impl Report for ClassExplanation {
    fn render_text(&self) -> String {
        let name = |y: usize| self.class_names.get(y).map_or("?", String::as_str);
        let item = match self.query_index {
            Some(i) => format!("your item (#{i})"),
            None => "your item".to_string(),
        };
        let mut out = String::new();
        match self.mode {
            ExplanationMode::Supportive => {
                let _ = writeln!(
                    out,
                    "Why is {item} in class {}?",
                    name(self.explained_label)
                );
            }
            ExplanationMode::Contrastive { contrast_label } => {
                let _ = writeln!(
                    out,
                    "Why is {item} in class {} rather than {}?",
                    name(self.explained_label),
                    name(contrast_label)
                );
            }
        }
        if self.entries.is_empty() {
            let _ = writeln!(
                out,
                "No analogy with degree at least {:.3} transferring class {} was found.",
                self.min_degree,
                name(self.target_label())
            );
        }
        for (n, e) in self.entries.iter().enumerate() {
            let [a, b, c] = e.triplet.indices;
            let [ya, yb, yc] = e.labels;
            let _ = writeln!(
                out,
                "{}. a (#{a}, class {}) relates to b (#{b}, class {}) as c (#{c}, class {}) relates to {item} (degree {:.3}); the analogy suggests class {}.",
                n + 1,
                name(ya),
                name(yb),
                name(yc),
                e.triplet.degree,
                e.triplet.transferred_label.map_or("?", name)
            );
            write_deviations(
                &mut out,
                &e.deviations_ab,
                &e.deviations_cd,
                &e.per_feature_degrees,
                &self.kernel,
                ("c", "d"),
            );
        }
        let votes: Vec<String> = self
            .votes
            .counts
            .iter()
            .map(|(&y, &c)| format!("{}: {c}", name(y)))
            .collect();
        let _ = writeln!(
            out,
            "Votes among the top {} analogies: {}",
            self.votes.total,
            votes.join(", ")
        );
        out
    }
}

impl Report for PreferenceExplanation {
    fn render_text(&self) -> String {
        let tag = |label: &str, idx: Option<usize>| match idx {
            Some(i) => format!("{label} (#{i})"),
            None => label.to_string(),
        };
        let (c, d) = (tag("c", self.query.c_index), tag("d", self.query.d_index));
        let (first, second, rhs) = match self.direction {
            Direction::Forward => (&c, &d, ("c", "d")),
            Direction::Reverse => (&d, &c, ("d", "c")),
        };
        let mut out = String::new();
        let _ = writeln!(out, "Why is {first} preferred to {second}?");
        if self.entries.is_empty() {
            let _ = writeln!(
                out,
                "No stored preference with degree at least {:.3} supports this direction.",
                self.min_degree
            );
        }
        for (n, e) in self.entries.iter().enumerate() {
            let [a, b] = e.pair.indices;
            let _ = writeln!(
                out,
                "{}. a (#{a}) is preferred to b (#{b}), and a differs from b as {first} differs from {second} (degree {:.3}).",
                n + 1,
                e.pair.degree
            );
            write_deviations(
                &mut out,
                &e.deviations_ab,
                &e.deviations_cd,
                &e.per_feature_degrees,
                &self.kernel,
                rhs,
            );
        }
        let votes: Vec<String> = self
            .votes
            .counts
            .iter()
            .map(|(dir, count)| format!("{}: {count}", dir.symbol()))
            .collect();
        let _ = writeln!(
            out,
            "Votes among the top {} analogies: {}",
            self.votes.total,
            votes.join(", ")
        );
        out
    }
}

impl Report for SimilarityExplanation {
    fn render_text(&self) -> String {
        let name = |y: usize| self.class_names.get(y).map_or("?", String::as_str);
        let mut out = String::new();
        let _ = writeln!(out, "The {} most similar cases:", self.neighbors.len());
        for n in &self.neighbors {
            let _ = writeln!(
                out,
                "  #{} (class {}), similarity {:.3}",
                n.index,
                name(n.label),
                n.similarity
            );
        }
        let dist: Vec<String> = self
            .distribution
            .probability
            .iter()
            .map(|(&y, p)| format!("{}: {:.0}%", name(y), p * 100.0))
            .collect();
        let _ = writeln!(out, "Class distribution: {}", dist.join(", "));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::vector_proportion;
    use crate::predict::knn_predict;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Four ordinal classes C < B < A < A*; includes a degree-1 triplet for the query.
    fn journals() -> LabeledDataset {
        LabeledDataset::new(
            vec![
                vec![0.50, 0.40, 0.30, 0.20, 0.60], // 0 A
                vec![0.40, 0.30, 0.20, 0.10, 0.80], // 1 B
                vec![0.20, 0.25, 0.30, 0.15, 0.70], // 2 B
                vec![0.90, 0.80, 0.85, 0.70, 0.20], // 3 A*
                vec![0.05, 0.10, 0.05, 0.02, 0.95], // 4 C
                vec![0.60, 0.55, 0.50, 0.45, 0.40], // 5 A
            ],
            vec![2, 1, 1, 3, 0, 2],
            names(&["C", "B", "A", "A*"]),
            names(&["cites", "IF", "II", "articles", "half_life"]),
        )
        .unwrap()
    }

    // c - (a - b) with (a, b, c) = (0, 1, 2)
    const QUERY: [f64; 5] = [0.10, 0.15, 0.20, 0.05, 0.90];

    #[test]
    fn degree_one_triplet_comes_first() {
        let train = journals();
        let index = TripletIndex::new(&train, Kernel::default());
        let exp = explain_class(
            &index,
            &QUERY[..],
            0,
            None,
            ExplainOptions {
                m: 3,
                min_degree: 0.0,
            },
        )
        .unwrap();
        let first = &exp.entries[0];
        assert_eq!(first.triplet.indices, [0, 1, 2]);
        assert!((first.triplet.degree - 1.0).abs() < 1e-12);
        assert_eq!(first.labels, [2, 1, 1]);
        for (x, y) in first
            .deviations_ab
            .values
            .iter()
            .zip(&first.deviations_cd.values)
        {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(exp.entries.len() <= 3);
    }

    #[test]
    fn entries_are_consistent_and_recomputable() {
        let train = journals();
        let kernel = Kernel::default();
        let index = TripletIndex::new(&train, kernel);
        for label in 0..4 {
            let exp = explain_class(
                &index,
                &QUERY[..],
                label,
                None,
                ExplainOptions {
                    m: 10,
                    min_degree: 0.0,
                },
            )
            .unwrap();
            for e in &exp.entries {
                let [a, b, c] = e.triplet.indices;
                assert_eq!(
                    crate::kernels::label_transfer(e.labels[0], e.labels[1], e.labels[2], 4),
                    Some(label)
                );
                let v = vector_proportion(
                    train.instance(a),
                    train.instance(b),
                    train.instance(c),
                    &QUERY,
                    &kernel,
                )
                .unwrap();
                assert!((v - e.triplet.degree).abs() <= 1e-12);
                // deviation law
                for i in 0..5 {
                    let (p, q) = (e.deviations_ab.values[i], e.deviations_cd.values[i]);
                    let sign = |x: f64| if x == 0.0 { 0.0 } else { x.signum() };
                    let expected = if sign(p) == sign(q) {
                        1.0 - (p - q).abs()
                    } else {
                        0.0
                    };
                    assert!((e.per_feature_degrees[i] - expected).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn contrast_without_candidates_is_empty_but_well_formed() {
        // two classes, all instances class 0: only label 0 can be transferred
        let train = LabeledDataset::new(
            vec![vec![0.1], vec![0.4], vec![0.8]],
            vec![0, 0, 0],
            names(&["low", "high"]),
            names(&["x"]),
        )
        .unwrap();
        let index = TripletIndex::new(&train, Kernel::default());
        let exp = explain_class(&index, &[0.3][..], 0, Some(1), ExplainOptions::default()).unwrap();
        assert!(exp.entries.is_empty());
        assert_eq!(exp.mode, ExplanationMode::Contrastive { contrast_label: 1 });
        let text = render_report(&exp, ReportFormat::Text);
        assert!(text.contains("No analogy"), "{text}");
        let json: serde_json::Value =
            serde_json::from_str(&render_report(&exp, ReportFormat::Json)).unwrap();
        assert_eq!(json["entries"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn min_degree_filters() {
        let train = journals();
        let index = TripletIndex::new(&train, Kernel::default());
        let exp = explain_class(
            &index,
            &QUERY[..],
            0,
            None,
            ExplainOptions {
                m: 10,
                min_degree: 0.999,
            },
        )
        .unwrap();
        assert!(exp.entries.iter().all(|e| e.triplet.degree >= 0.999));
        assert!(!exp.entries.is_empty());
        assert!(explain_class(&index, &QUERY[..], 9, None, ExplainOptions::default()).is_err());
        assert!(explain_class(
            &index,
            &QUERY[..],
            0,
            None,
            ExplainOptions {
                m: 0,
                min_degree: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn json_round_trip_and_field_names() {
        let train = journals();
        let index = TripletIndex::new(&train, Kernel::default());
        let exp = explain_class(&index, &QUERY[..], 0, None, ExplainOptions::default()).unwrap();
        let json = render_report(&exp, ReportFormat::Json);
        let back: ClassExplanation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, exp);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["query", "explained_label", "entries", "votes"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        for key in [
            "degree",
            "deviations_ab",
            "deviations_cd",
            "per_feature_degrees",
        ] {
            assert!(v["entries"][0].get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn text_mentions_each_feature_once_per_entry() {
        let train = journals();
        let index = TripletIndex::new(&train, Kernel::default());
        let exp = explain_class(
            &index,
            &QUERY[..],
            0,
            None,
            ExplainOptions {
                m: 1,
                min_degree: 0.0,
            },
        )
        .unwrap();
        let text = render_report(&exp, ReportFormat::Text);
        assert!(text.contains(") relates to b (#"));
        for f in train.feature_names() {
            assert_eq!(text.matches(&format!("{f}:")).count(), 1, "{f} in\n{text}");
        }
    }

    #[test]
    fn geometric_infinite_ratio_survives_json() {
        let train = LabeledDataset::new(
            vec![vec![0.5, 0.2], vec![0.0, 0.4], vec![0.3, 0.1]],
            vec![1, 0, 1],
            names(&["0", "1"]),
            names(&["x", "y"]),
        )
        .unwrap();
        let index = TripletIndex::new(&train, Kernel::Geometric);
        let exp = explain_class(
            &index,
            &[0.2, 0.3][..],
            0,
            None,
            ExplainOptions {
                m: 6,
                min_degree: 0.0,
            },
        )
        .unwrap();
        assert!(exp
            .entries
            .iter()
            .any(|e| e.deviations_ab.values.iter().any(|v| v.is_infinite())));
        let back: ClassExplanation =
            serde_json::from_str(&render_report(&exp, ReportFormat::Json)).unwrap();
        assert_eq!(back, exp);
    }

    fn prefs() -> PreferenceDataset {
        PreferenceDataset::new(
            vec![
                vec![0.9, 0.8],
                vec![0.2, 0.3],
                vec![0.6, 0.1],
                vec![0.4, 0.7],
                vec![0.5, 0.5],
            ],
            vec![(0, 1), (2, 3), (0, 4), (4, 1)],
            names(&["f0", "f1"]),
        )
        .unwrap()
    }

    fn pair(c: &[f64], d: &[f64]) -> PairQuery {
        PairQuery {
            c: c.to_vec(),
            d: d.to_vec(),
            c_index: None,
            d_index: None,
        }
    }

    #[test]
    fn stored_pair_explains_itself() {
        let p = prefs();
        let exp = explain_preference(
            &p,
            pair(p.instance(0), p.instance(1)),
            Direction::Forward,
            &Kernel::default(),
            ExplainOptions::default(),
        )
        .unwrap();
        let first = &exp.entries[0];
        assert_eq!(first.pair.preference, 0);
        assert_eq!(first.deviations_ab, first.deviations_cd);
        assert!(exp
            .entries
            .iter()
            .all(|e| e.pair.direction == Direction::Forward));
    }

    #[test]
    fn preference_entries_match_hand_ranking() {
        // see search::tests::pairs_hand_computed_order
        let p = prefs();
        let q = pair(&[0.7, 0.6], &[0.3, 0.4]);
        let fwd = explain_preference(
            &p,
            q.clone(),
            Direction::Forward,
            &Kernel::default(),
            ExplainOptions {
                m: 4,
                min_degree: 0.0,
            },
        )
        .unwrap();
        let degrees: Vec<f64> = fwd.entries.iter().map(|e| e.pair.degree).collect();
        let expected = [0.95, 0.95, 0.7, 0.4];
        for (g, e) in degrees.iter().zip(expected) {
            assert!((g - e).abs() < 1e-12);
        }
        let rev = explain_preference(
            &p,
            q,
            Direction::Reverse,
            &Kernel::default(),
            ExplainOptions {
                m: 4,
                min_degree: 0.0,
            },
        )
        .unwrap();
        assert_eq!(rev.entries[0].pair.preference, 1);
        assert!((rev.entries[0].pair.degree - 0.3).abs() < 1e-12);
        // R(d, c) is reported for reverse entries
        assert!((rev.entries[0].deviations_cd.values[0] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn unsupported_direction_is_empty() {
        let p = PreferenceDataset::new(vec![vec![0.1], vec![0.7]], vec![(1, 0)], names(&["x"]))
            .unwrap();
        let exp = explain_preference(
            &p,
            pair(&[0.8], &[0.2]),
            Direction::Reverse,
            &Kernel::default(),
            ExplainOptions {
                m: 3,
                min_degree: 0.01,
            },
        )
        .unwrap();
        assert!(exp.entries.is_empty());
        assert!(render_report(&exp, ReportFormat::Text).contains("No stored preference"));
    }

    #[test]
    fn similarity_explanations() {
        let train = journals();
        let exp = explain_similarity(&train, train.instance(3), 1).unwrap();
        assert_eq!(exp.neighbors[0].index, 3);
        assert_eq!(exp.neighbors[0].similarity, 1.0);
        assert_eq!(exp.distribution.probability_of(3), 1.0);

        let q = [0.5, 0.5, 0.5, 0.5, 0.5];
        let exp = explain_similarity(&train, &q[..], 3).unwrap();
        let mut brute: Vec<(f64, usize)> = (0..train.len())
            .map(|i| {
                (
                    crate::kernels::similarity(train.instance(i), &q).unwrap(),
                    i,
                )
            })
            .collect();
        brute.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let got: Vec<usize> = exp.neighbors.iter().map(|n| n.index).collect();
        assert_eq!(got, brute[..3].iter().map(|b| b.1).collect::<Vec<_>>());
        let knn = knn_predict(&train, &q[..], 3).unwrap();
        assert_eq!(knn.neighbors, exp.neighbors);
        assert!(render_report(&exp, ReportFormat::Text).contains("similarity"));
    }

    #[test]
    fn uniform_neighborhood_is_point_mass() {
        let train = LabeledDataset::new(
            vec![vec![0.1], vec![0.2], vec![0.9]],
            vec![1, 1, 0],
            names(&["n", "p"]),
            names(&["x"]),
        )
        .unwrap();
        let exp = explain_similarity(&train, &[0.15][..], 2).unwrap();
        assert_eq!(exp.distribution.counts.len(), 1);
        assert_eq!(exp.distribution.probability_of(1), 1.0);
    }
}
