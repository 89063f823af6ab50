//! Analogical-proportion kernels.
//!
//! A kernel maps a quadruple of feature values `(a, b, c, d)` to the degree in
//! `[0, 1]` to which "a relates to b as c relates to d". Vector-level degrees are
//! the unweighted mean of the per-feature degrees.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The relation `R` and equivalence `E` used to grade a quadruple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    /// Six-pattern Boolean proportion. Real inputs are read as bits by thresholding at 0.5.
    Boolean,
    /// `1 - |(a-b) - (c-d)|` when the two differences share a sign, else 0.
    ///
    /// Differences with magnitude at most `epsilon` count as sign 0.
    Arithmetic { epsilon: f64 },
    /// Cross-product ratio `min(ad, bc) / max(ad, bc)`.
    Geometric,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Arithmetic { epsilon: 0.0 }
    }
}

impl Kernel {
    pub fn arithmetic(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(Kernel::Arithmetic { epsilon })
    }

    /// Per-feature degree of `a : b :: c : d`.
    #[inline]
    pub fn degree(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        match *self {
            Kernel::Boolean => boolean_proportion(bit(a), bit(b), bit(c), bit(d)),
            Kernel::Arithmetic { epsilon } => arithmetic_proportion(a, b, c, d, epsilon),
            Kernel::Geometric => geometric_proportion(a, b, c, d),
        }
    }

    /// The relation `R(x, y)` the kernel compares: a difference, or a ratio for
    /// the geometric kernel (`0/0 = 1`, `x/0 = +inf`).
    #[inline]
    pub fn relation(&self, x: f64, y: f64) -> f64 {
        match *self {
            Kernel::Boolean => f64::from(u8::from(bit(x))) - f64::from(u8::from(bit(y))),
            Kernel::Arithmetic { .. } => x - y,
            Kernel::Geometric => {
                if y == 0.0 {
                    if x == 0.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    x / y
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Boolean => "boolean",
            Kernel::Arithmetic { .. } => "arithmetic",
            Kernel::Geometric => "geometric",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Arithmetic { epsilon } if *epsilon > 0.0 => {
                write!(f, "arithmetic(epsilon={epsilon})")
            }
            k => f.write_str(k.name()),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "boolean" => Ok(Kernel::Boolean),
            "arithmetic" => Ok(Kernel::default()),
            "geometric" => Ok(Kernel::Geometric),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

#[inline]
fn bit(x: f64) -> bool {
    x >= 0.5
}

/// 1 on the six valid Boolean patterns, 0 on the other ten.
pub fn boolean_proportion(a: bool, b: bool, c: bool, d: bool) -> f64 {
    // a differs from b exactly as c differs from d
    if a == b && c == d || a == c && b == d && a != b {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn tolerant_sign(x: f64, epsilon: f64) -> i8 {
    if x.abs() <= epsilon {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

#[inline]
pub fn arithmetic_proportion(a: f64, b: f64, c: f64, d: f64, epsilon: f64) -> f64 {
    let p = a - b;
    let q = c - d;
    if tolerant_sign(p, epsilon) == tolerant_sign(q, epsilon) {
        1.0 - (p - q).abs()
    } else {
        0.0
    }
}

#[inline]
pub fn geometric_proportion(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let ad = a * d;
    let bc = b * c;
    match (ad > 0.0, bc > 0.0) {
        (true, true) => ad.min(bc) / ad.max(bc),
        (false, false) => 1.0,
        _ => 0.0,
    }
}

fn check_len(what: &str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::dimension(what, expected, v.len()));
    }
    Ok(())
}

/// Sum of per-feature degrees, accumulated in feature order.
///
/// Every search path computes degrees through this loop (or an identical
/// incremental one) so that degrees agree bit for bit.
#[inline]
pub(crate) fn degree_sum(a: &[f64], b: &[f64], c: &[f64], d: &[f64], kernel: &Kernel) -> f64 {
    let mut sum = 0.0;
    for i in 0..d.len() {
        sum += kernel.degree(a[i], b[i], c[i], d[i]);
    }
    sum
}

/// Mean per-feature degree of `A : B :: C : D`.
pub fn vector_proportion(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
    kernel: &Kernel,
) -> Result<f64> {
    let len = a.len();
    if len == 0 {
        return Err(Error::dimension("A", 1, 0));
    }
    check_len("B", b, len)?;
    check_len("C", c, len)?;
    check_len("D", d, len)?;
    Ok(degree_sum(a, b, c, d, kernel) / len as f64)
}

/// Per-feature degrees of `A : B :: C : D`.
pub fn feature_degrees(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
    kernel: &Kernel,
) -> Result<Vec<f64>> {
    let len = a.len();
    check_len("B", b, len)?;
    check_len("C", c, len)?;
    check_len("D", d, len)?;
    Ok((0..len)
        .map(|i| kernel.degree(a[i], b[i], c[i], d[i]))
        .collect())
}

/// Ordinal label completion `y_d = y_c - y_a + y_b`; `None` (abstain) when it
/// falls outside `[0, num_classes)`.
#[inline]
pub fn label_transfer(y_a: usize, y_b: usize, y_c: usize, num_classes: usize) -> Option<usize> {
    let y_d = y_c as i64 - y_a as i64 + y_b as i64;
    (0..num_classes as i64)
        .contains(&y_d)
        .then_some(y_d as usize)
}

/// `1 - mean |x_i - y_i|`.
pub fn similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::dimension("x", 1, 0));
    }
    check_len("y", y, x.len())?;
    Ok(similarity_unchecked(x, y))
}

#[inline]
pub(crate) fn similarity_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let l1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    1.0 - l1 / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;
    const VALID_ROWS: [[u8; 4]; 6] = [
        [0, 0, 0, 0],
        [0, 0, 1, 1],
        [0, 1, 0, 1],
        [1, 0, 1, 0],
        [1, 1, 0, 0],
        [1, 1, 1, 1],
    ];

    fn all_bit_quadruples() -> impl Iterator<Item = [u8; 4]> {
        (0u8..16).map(|m| [(m >> 3) & 1, (m >> 2) & 1, (m >> 1) & 1, m & 1])
    }

    #[test]
    fn boolean_table() {
        for q in all_bit_quadruples() {
            let expected = if VALID_ROWS.contains(&q) { 1.0 } else { 0.0 };
            let got = boolean_proportion(q[0] == 1, q[1] == 1, q[2] == 1, q[3] == 1);
            assert_eq!(got, expected, "{q:?}");
        }
        assert_eq!(boolean_proportion(false, false, true, true), 1.0);
        assert_eq!(boolean_proportion(false, true, true, false), 0.0);
        assert_eq!(boolean_proportion(true, true, true, true), 1.0);
    }

    #[test]
    fn arithmetic_reduces_to_boolean() {
        for q in all_bit_quadruples() {
            let f = q.map(f64::from);
            let arith = arithmetic_proportion(f[0], f[1], f[2], f[3], 0.0);
            let boolean = boolean_proportion(q[0] == 1, q[1] == 1, q[2] == 1, q[3] == 1);
            assert_eq!(arith, boolean, "{q:?}");
        }
    }

    #[test]
    fn arithmetic_examples() {
        assert!((arithmetic_proportion(0.2, 0.4, 0.5, 0.7, 0.0) - 1.0).abs() < TOL);
        assert_eq!(arithmetic_proportion(0.3, 0.1, 0.4, 0.5, 0.0), 0.0);
        assert!((arithmetic_proportion(1.0, 0.0, 0.4, 0.1, 0.0) - 0.3).abs() < TOL);
        assert_eq!(arithmetic_proportion(0.35, 0.9, 0.35, 0.9, 0.0), 1.0);
    }

    #[test]
    fn arithmetic_zero_sign() {
        // a = b but c != d: sign 0 vs nonzero
        assert_eq!(arithmetic_proportion(0.5, 0.5, 0.4, 0.3, 0.0), 0.0);
        assert_eq!(arithmetic_proportion(0.5, 0.5, 0.4, 0.4, 0.0), 1.0);
        // with tolerance the small difference counts as sign 0
        let v = arithmetic_proportion(0.5, 0.5, 0.4, 0.39, 0.05);
        assert!((v - 0.99).abs() < TOL);
    }

    #[test]
    fn geometric_examples() {
        assert!((geometric_proportion(0.2, 0.4, 0.3, 0.6) - 1.0).abs() < TOL);
        assert!((geometric_proportion(0.5, 0.25, 0.1, 0.1) - 0.5).abs() < TOL);
        assert_eq!(geometric_proportion(0.0, 0.3, 0.0, 0.2), 1.0);
        assert_eq!(geometric_proportion(0.0, 0.3, 0.4, 0.2), 0.0);
    }

    #[test]
    fn vector_examples() {
        let k = Kernel::default();
        let v = vector_proportion(&[0.1, 0.8], &[0.3, 0.8], &[0.5, 0.2], &[0.7, 0.2], &k).unwrap();
        assert!((v - 1.0).abs() < TOL);
        let v = vector_proportion(&[1.0, 0.0], &[0.0, 0.0], &[0.4, 0.5], &[0.1, 0.5], &k).unwrap();
        assert!((v - 0.65).abs() < TOL);
        let v = vector_proportion(&[0.3, 0.6], &[0.3, 0.6], &[0.9, 0.1], &[0.9, 0.1], &k).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn vector_dimension_error_names_vector() {
        let err = vector_proportion(
            &[0.1, 0.2],
            &[0.1, 0.2],
            &[0.1],
            &[0.1, 0.2],
            &Kernel::default(),
        )
        .unwrap_err();
        match err {
            Error::Dimension {
                what,
                expected,
                found,
            } => {
                assert_eq!(what, "C");
                assert_eq!((expected, found), (2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn label_transfer_examples() {
        assert_eq!(label_transfer(0, 1, 0, 2), Some(1));
        assert_eq!(label_transfer(1, 0, 1, 2), Some(0));
        assert_eq!(label_transfer(0, 1, 1, 2), None);
        assert_eq!(label_transfer(1, 0, 0, 2), None);
        // C=0 < B=1 < A=2 < A*=3: an A relates to a B as a B relates to a C
        assert_eq!(label_transfer(2, 1, 1, 4), Some(0));
    }

    #[test]
    fn binary_transfer_matches_boolean_solutions() {
        for ya in 0..2usize {
            for yb in 0..2usize {
                for yc in 0..2usize {
                    let solutions: Vec<usize> = (0..2usize)
                        .filter(|&yd| boolean_proportion(ya == 1, yb == 1, yc == 1, yd == 1) == 1.0)
                        .collect();
                    let expected = match solutions.as_slice() {
                        [] => None,
                        [one] => Some(*one),
                        _ => panic!("boolean table has at most one completion"),
                    };
                    assert_eq!(label_transfer(ya, yb, yc, 2), expected, "({ya},{yb},{yc})");
                }
            }
        }
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(similarity(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 1.0);
        assert_eq!(similarity(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!((similarity(&[0.2, 0.6], &[0.4, 0.6]).unwrap() - 0.9).abs() < TOL);
        assert!(similarity(&[0.2], &[0.4, 0.6]).is_err());
    }

    #[test]
    fn kernel_parsing_and_validation() {
        assert_eq!("Geometric".parse::<Kernel>().unwrap(), Kernel::Geometric);
        assert!("cosine".parse::<Kernel>().is_err());
        assert!(Kernel::arithmetic(1.0).is_err());
        assert!(Kernel::arithmetic(-0.1).is_err());
        assert_eq!(
            Kernel::arithmetic(0.1).unwrap(),
            Kernel::Arithmetic { epsilon: 0.1 }
        );
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    fn kernels() -> impl Strategy<Value = Kernel> {
        prop_oneof![
            Just(Kernel::Boolean),
            (0.0..0.2f64).prop_map(|epsilon| Kernel::Arithmetic { epsilon }),
            Just(Kernel::Geometric),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn degree_in_unit_range(k in kernels(), a in unit(), b in unit(), c in unit(), d in unit()) {
            let v = k.degree(a, b, c, d);
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }

        #[test]
        fn outer_symmetry(k in kernels(), a in unit(), b in unit(), c in unit(), d in unit()) {
            prop_assert!((k.degree(a, b, c, d) - k.degree(c, d, a, b)).abs() <= TOL);
        }

        #[test]
        fn arithmetic_inner_reversal(e in 0.0..0.2f64, a in unit(), b in unit(), c in unit(), d in unit()) {
            let lhs = arithmetic_proportion(b, a, d, c, e);
            let rhs = arithmetic_proportion(a, b, c, d, e);
            prop_assert!((lhs - rhs).abs() <= TOL);
        }

        #[test]
        fn reflexivity(e in 0.0..0.2f64, a in 1e-6..=1.0f64, b in 1e-6..=1.0f64) {
            prop_assert_eq!(arithmetic_proportion(a, b, a, b, e), 1.0);
            prop_assert!((geometric_proportion(a, b, a, b) - 1.0).abs() <= TOL);
        }
    }

    proptest! {
        #[test]
        fn vector_is_mean_of_features(
            k in kernels(),
            rows in (1usize..8).prop_flat_map(|d| proptest::collection::vec(proptest::collection::vec(unit(), d), 4))
        ) {
            let d = rows[0].len();
            let direct = (0..d)
                .map(|i| k.degree(rows[0][i], rows[1][i], rows[2][i], rows[3][i]))
                .sum::<f64>()
                / d as f64;
            let v = vector_proportion(&rows[0], &rows[1], &rows[2], &rows[3], &k).unwrap();
            prop_assert!((v - direct).abs() <= TOL);
        }
    }
}
