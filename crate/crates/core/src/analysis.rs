//! Decumulative coverage curves: for each threshold t, the average fraction of
//! candidate triplets (or training examples) whose analogy (or similarity)
//! degree with a query is at least t.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{degree_sum, similarity_unchecked, Kernel};
use crate::search::sample_triplet_degrees;

pub const DEFAULT_GRID_POINTS: usize = 101;
pub const DEFAULT_FLOOR: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Analogy,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Exact,
    Sampled { num_samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecumulativeCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
    pub kind: CurveKind,
    pub sampling: Sampling,
}

/// `points` evenly spaced thresholds from 0 to 1 inclusive.
pub fn threshold_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "a grid needs at least 2 points, got {points}"
        )));
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 / last).collect())
}

fn check_grid(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("threshold grid is empty".into()));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidParameter(
            "thresholds must lie in [0, 1]".into(),
        ));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "thresholds must be strictly ascending".into(),
        ));
    }
    Ok(())
}

fn check_inputs(
    instances: &[Vec<f64>],
    queries: &[Vec<f64>],
    thresholds: &[f64],
    min_instances: usize,
) -> Result<()> {
    check_grid(thresholds)?;
    if instances.len() < min_instances {
        return Err(Error::TooFewInstances {
            required: min_instances,
            found: instances.len(),
        });
    }
    if queries.is_empty() {
        return Err(Error::InvalidParameter("query list is empty".into()));
    }
    let dim = instances[0].len();
    if let Some(bad) = instances.iter().find(|x| x.len() != dim) {
        return Err(Error::dimension("training instance", dim, bad.len()));
    }
    if let Some(bad) = queries.iter().find(|q| q.len() != dim) {
        return Err(Error::dimension("query", dim, bad.len()));
    }
    Ok(())
}

/// Fraction of `degrees` at or above each threshold.
fn exceedance(mut degrees: Vec<f64>, thresholds: &[f64]) -> Vec<f64> {
    degrees.sort_by(f64::total_cmp);
    let n = degrees.len() as f64;
    thresholds
        .iter()
        .map(|&t| (degrees.len() - degrees.partition_point(|&v| v < t)) as f64 / n)
        .collect()
}

/// Per-query curves averaged in query order.
fn average(per_query: Vec<Vec<f64>>, width: usize) -> Vec<f64> {
    let m = per_query.len() as f64;
    let mut sum = vec![0.0; width];
    for curve in &per_query {
        for (s, v) in sum.iter_mut().zip(curve) {
            *s += v;
        }
    }
    sum.into_iter().map(|s| s / m).collect()
}

fn all_triplet_degrees(instances: &[Vec<f64>], query: &[f64], kernel: &Kernel) -> Vec<f64> {
    let n = instances.len();
    let d = query.len() as f64;
    let mut out = Vec::with_capacity(n * (n - 1) * (n - 2));
    for a in 0..n {
        for b in 0..n {
            if b == a {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                out.push(
                    degree_sum(&instances[a], &instances[b], &instances[c], query, kernel) / d,
                );
            }
        }
    }
    out
}

/// Average fraction of ordered training triplets `(a, b, c)` with
/// `v(a, b, c, query) >= t`, for every threshold `t`.
///
/// Sampled mode draws triplets per query with seed `seed + query position`.
pub fn analogy_curve(
    instances: &[Vec<f64>],
    queries: &[Vec<f64>],
    thresholds: &[f64],
    kernel: &Kernel,
    sampling: Sampling,
) -> Result<DecumulativeCurve> {
    check_inputs(instances, queries, thresholds, 3)?;
    let per_query = queries
        .par_iter()
        .enumerate()
        .map(|(qi, q)| {
            let degrees = match sampling {
                Sampling::Exact => all_triplet_degrees(instances, q, kernel),
                Sampling::Sampled { num_samples, seed } => sample_triplet_degrees(
                    instances,
                    q,
                    num_samples,
                    seed.wrapping_add(qi as u64),
                    kernel,
                )?,
            };
            Ok(exceedance(degrees, thresholds))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecumulativeCurve {
        thresholds: thresholds.to_vec(),
        fractions: average(per_query, thresholds.len()),
        kind: CurveKind::Analogy,
        sampling,
    })
}

/// Average fraction of training examples with similarity to the query at least `t`.
pub fn similarity_curve(
    instances: &[Vec<f64>],
    queries: &[Vec<f64>],
    thresholds: &[f64],
) -> Result<DecumulativeCurve> {
    check_inputs(instances, queries, thresholds, 1)?;
    let per_query = queries
        .par_iter()
        .map(|q| {
            let sims = instances
                .iter()
                .map(|x| similarity_unchecked(x, q))
                .collect();
            exceedance(sims, thresholds)
        })
        .collect();
    Ok(DecumulativeCurve {
        thresholds: thresholds.to_vec(),
        fractions: average(per_query, thresholds.len()),
        kind: CurveKind::Similarity,
        sampling: Sampling::Exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    /// `first - second` per threshold.
    pub differences: Vec<f64>,
    pub first_area: f64,
    pub second_area: f64,
    pub floor: f64,
    /// Highest threshold at which the curve is still above `floor`.
    pub first_last_above_floor: Option<f64>,
    pub second_last_above_floor: Option<f64>,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

fn last_above(curve: &DecumulativeCurve, floor: f64) -> Option<f64> {
    curve
        .thresholds
        .iter()
        .zip(&curve.fractions)
        .rev()
        .find(|(_, &f)| f > floor)
        .map(|(&t, _)| t)
}

/// Compare two curves on the same grid (typically analogy first, similarity second).
pub fn compare_curves(
    first: &DecumulativeCurve,
    second: &DecumulativeCurve,
    floor: f64,
) -> Result<CurveComparison> {
    if first.thresholds != second.thresholds {
        return Err(Error::InvalidParameter(
            "curves use different threshold grids".into(),
        ));
    }
    Ok(CurveComparison {
        differences: first
            .fractions
            .iter()
            .zip(&second.fractions)
            .map(|(a, b)| a - b)
            .collect(),
        first_area: trapezoid(&first.thresholds, &first.fractions),
        second_area: trapezoid(&second.thresholds, &second.fractions),
        floor,
        first_last_above_floor: last_above(first, floor),
        second_last_above_floor: last_above(second, floor),
    })
}

/// Write `threshold,analogy_fraction,similarity_fraction` rows.
pub fn write_curves_csv<W: Write>(
    analogy: &DecumulativeCurve,
    similarity: &DecumulativeCurve,
    mut out: W,
) -> Result<()> {
    if analogy.thresholds != similarity.thresholds {
        return Err(Error::InvalidParameter(
            "curves use different threshold grids".into(),
        ));
    }
    let io = |source| Error::Io {
        path: "<curve output>".into(),
        source,
    };
    writeln!(out, "threshold,analogy_fraction,similarity_fraction").map_err(io)?;
    for ((t, a), s) in analogy
        .thresholds
        .iter()
        .zip(&analogy.fractions)
        .zip(&similarity.fractions)
    {
        writeln!(out, "{t},{a},{s}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthSpec};
    use crate::kernels::{similarity, vector_proportion};

    fn random(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        synth_generate(&SynthSpec::new(n.max(4), d, 2), seed)
            .unwrap()
            .labeled
            .instances()[..n]
            .to_vec()
    }

    fn assert_curve_shape(c: &DecumulativeCurve) {
        assert_eq!(c.fractions[0], 1.0);
        for w in c.fractions.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(c.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn grid() {
        let g = threshold_grid(DEFAULT_GRID_POINTS).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!((g[0], g[50], g[100]), (0.0, 0.5, 1.0));
        assert!(threshold_grid(1).is_err());
    }

    #[test]
    fn identical_points_give_constant_one() {
        let x = vec![vec![0.3, 0.6]; 3];
        let grid = threshold_grid(11).unwrap();
        let c = analogy_curve(
            &x,
            &[vec![0.3, 0.6]],
            &grid,
            &Kernel::default(),
            Sampling::Exact,
        )
        .unwrap();
        assert!(c.fractions.iter().all(|&f| f == 1.0));
        let s = similarity_curve(&x, &[vec![0.3, 0.6]], &grid).unwrap();
        assert!(s.fractions.iter().all(|&f| f == 1.0));
    }

    #[test]
    fn exact_curves_match_brute_force() {
        let x = random(10, 3, 21);
        let queries = random(4, 3, 22);
        let grid = threshold_grid(DEFAULT_GRID_POINTS).unwrap();
        let kernel = Kernel::default();
        let a = analogy_curve(&x, &queries, &grid, &kernel, Sampling::Exact).unwrap();
        let s = similarity_curve(&x, &queries, &grid).unwrap();
        assert_curve_shape(&a);
        assert_curve_shape(&s);
        for (ti, &t) in grid.iter().enumerate() {
            let mut fa = 0.0;
            let mut fs = 0.0;
            for q in &queries {
                let (mut hit, mut total) = (0usize, 0usize);
                for i in 0..10 {
                    for j in 0..10 {
                        for k in 0..10 {
                            if i != j && j != k && i != k {
                                total += 1;
                                if vector_proportion(&x[i], &x[j], &x[k], q, &kernel).unwrap() >= t
                                {
                                    hit += 1;
                                }
                            }
                        }
                    }
                }
                fa += hit as f64 / total as f64;
                fs += x
                    .iter()
                    .filter(|xi| similarity(xi, q).unwrap() >= t)
                    .count() as f64
                    / 10.0;
            }
            assert!((a.fractions[ti] - fa / 4.0).abs() <= 1e-12);
            assert!((s.fractions[ti] - fs / 4.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampled_curve_is_close() {
        let x = random(20, 3, 5);
        let queries = random(3, 3, 6);
        let grid = threshold_grid(DEFAULT_GRID_POINTS).unwrap();
        let k = Kernel::default();
        let exact = analogy_curve(&x, &queries, &grid, &k, Sampling::Exact).unwrap();
        let sampled = analogy_curve(
            &x,
            &queries,
            &grid,
            &k,
            Sampling::Sampled {
                num_samples: 5000,
                seed: 3,
            },
        )
        .unwrap();
        assert_curve_shape(&sampled);
        let max_dev = exact
            .fractions
            .iter()
            .zip(&sampled.fractions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_dev <= 0.03, "{max_dev}");
    }

    #[test]
    fn comparisons() {
        let grid = threshold_grid(11).unwrap();
        let one = DecumulativeCurve {
            thresholds: grid.clone(),
            fractions: vec![1.0; 11],
            kind: CurveKind::Analogy,
            sampling: Sampling::Exact,
        };
        let half = DecumulativeCurve {
            fractions: vec![0.5; 11],
            kind: CurveKind::Similarity,
            ..one.clone()
        };
        let same = compare_curves(&one, &one, DEFAULT_FLOOR).unwrap();
        assert!(same.differences.iter().all(|&d| d == 0.0));
        assert_eq!(same.first_area, same.second_area);
        let cmp = compare_curves(&one, &half, DEFAULT_FLOOR).unwrap();
        assert!((cmp.first_area - cmp.second_area - 0.5).abs() < 1e-12);
        assert_eq!(cmp.first_last_above_floor, Some(1.0));

        let other_grid = DecumulativeCurve {
            thresholds: threshold_grid(5).unwrap(),
            fractions: vec![1.0; 5],
            ..one.clone()
        };
        assert!(compare_curves(&one, &other_grid, DEFAULT_FLOOR).is_err());
    }

    #[test]
    fn csv_export() {
        let x = random(6, 2, 1);
        let grid = threshold_grid(DEFAULT_GRID_POINTS).unwrap();
        let a = analogy_curve(&x, &x[..2], &grid, &Kernel::default(), Sampling::Exact).unwrap();
        let s = similarity_curve(&x, &x[..2], &grid).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&a, &s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "threshold,analogy_fraction,similarity_fraction");
        assert_eq!(lines.len(), 102);
    }

    #[test]
    fn input_errors() {
        let x = random(5, 2, 1);
        let grid = threshold_grid(5).unwrap();
        assert!(analogy_curve(&x, &[], &grid, &Kernel::default(), Sampling::Exact).is_err());
        assert!(
            analogy_curve(&x, &[vec![0.1]], &grid, &Kernel::default(), Sampling::Exact).is_err()
        );
        assert!(analogy_curve(
            &x[..2],
            &[vec![0.1, 0.2]],
            &grid,
            &Kernel::default(),
            Sampling::Exact
        )
        .is_err());
        assert!(similarity_curve(&x, &[vec![0.1, 0.2]], &[0.5, 0.2]).is_err());
    }
}
