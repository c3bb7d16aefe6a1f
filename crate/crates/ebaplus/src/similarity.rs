use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Dataset};
use crate::error::{Error, Result};

/// Variants of the per-attribute difference used inside the distance.
///
/// For a numeric attribute with observed range `[min, max]`:
///
/// * `Literal`: `(a - b)^2 / (max - min)`
/// * `SquaredNormalized`: `((a - b) / (max - min))^2`
///
/// `Literal` keeps attributes with larger spans proportionally heavier and is
/// the default; `SquaredNormalized` weights every attribute equally. For
/// categorical attributes both modes score 0 on equality and 1 otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaMode {
    #[default]
    Literal,
    #[serde(rename = "squared")]
    SquaredNormalized,
}

impl FromStr for DeltaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(DeltaMode::Literal),
            "squared" => Ok(DeltaMode::SquaredNormalized),
            other => Err(Error::InvalidArgument(format!(
                "unknown delta mode `{other}`; expected `literal` or `squared`"
            ))),
        }
    }
}

impl std::fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeltaMode::Literal => f.write_str("literal"),
            DeltaMode::SquaredNormalized => f.write_str("squared"),
        }
    }
}

/// One attribute value of one project, borrowed for distance calculations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue<'a> {
    Numeric(f64),
    Categorical(&'a str),
}

/// Difference between two values of one attribute.
///
/// `range` is the attribute's observed `(min, max)` over the projects under
/// comparison; it is ignored for categorical values. A constant attribute
/// (`max == min`) contributes 0 so it never poisons the distance with a
/// division by zero. Panics if the two values are of different kinds.
pub fn feature_delta(a: FeatureValue, b: FeatureValue, range: (f64, f64), mode: DeltaMode) -> f64 {
    match (a, b) {
        (FeatureValue::Numeric(x), FeatureValue::Numeric(y)) => {
            let span = range.1 - range.0;
            if span <= 0.0 {
                return 0.0;
            }
            let diff = x - y;
            match mode {
                DeltaMode::Literal => diff * diff / span,
                DeltaMode::SquaredNormalized => (diff / span) * (diff / span),
            }
        }
        (FeatureValue::Categorical(x), FeatureValue::Categorical(y)) => {
            if x == y {
                0.0
            } else {
                1.0
            }
        }
        _ => panic!("feature_delta called with values of different kinds"),
    }
}

/// Distance between two projects over `m` aligned attribute values:
/// `sqrt(sum of deltas) / m`. `ranges` must be aligned with the value slices.
pub fn distance(
    a: &[FeatureValue],
    b: &[FeatureValue],
    ranges: &[(f64, f64)],
    mode: DeltaMode,
) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InvalidArgument(
            "distance needs at least one attribute".into(),
        ));
    }
    if a.len() != b.len() || a.len() != ranges.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len().min(ranges.len()),
        });
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .zip(ranges)
        .map(|((&x, &y), &r)| feature_delta(x, y, r, mode))
        .sum();
    Ok(sum.sqrt() / a.len() as f64)
}

/// What a similarity matrix was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MatrixBasis {
    Attributes(Vec<String>),
    Effort,
}

/// Symmetric n x n matrix of pairwise similarities in `[0, 1]`, diagonal 1.
///
/// Similarities come from normalizing pairwise distances by the largest one:
/// `sim = 1 - d / max(d)`, so the farthest pair scores 0 and identical
/// projects score 1. When every distance is 0 the matrix is all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    basis: MatrixBasis,
}

impl SimilarityMatrix {
    /// Wraps precomputed values (row major), checking shape, symmetry, the
    /// unit diagonal and the `[0, 1]` range.
    pub fn from_values(n: usize, values: Vec<f64>, basis: MatrixBasis) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        const EPS: f64 = 1e-9;
        for i in 0..n {
            if (values[i * n + i] - 1.0).abs() > EPS {
                return Err(Error::InvalidArgument(format!(
                    "similarity diagonal entry ({i},{i}) is not 1"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || !(-EPS..=1.0 + EPS).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "similarity entry ({i},{j}) = {v} is outside [0, 1]"
                    )));
                }
                if (v - values[j * n + i]).abs() > EPS {
                    return Err(Error::InvalidArgument(format!(
                        "similarity entry ({i},{j}) is not symmetric"
                    )));
                }
            }
        }
        Ok(Self { n, values, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &MatrixBasis {
        &self.basis
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row `i` with the diagonal cell removed, preserving column order.
    pub fn row_excluding_diagonal(&self, i: usize) -> Vec<f64> {
        (0..self.n)
            .filter(|&j| j != i)
            .map(|j| self.get(i, j))
            .collect()
    }

    /// Applies the same permutation to rows and columns:
    /// `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SimilarityMatrix> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidArgument(
                    "not a permutation of 0..n".into(),
                ));
            }
            seen[p] = true;
        }
        let mut values = Vec::with_capacity(self.n * self.n);
        for &pi in perm {
            for &pj in perm {
                values.push(self.get(pi, pj));
            }
        }
        Ok(SimilarityMatrix {
            n: self.n,
            values,
            basis: self.basis.clone(),
        })
    }

    /// CSV rendering with row/column labels and six decimal places, for
    /// eyeballing intermediate matrices.
    pub fn to_csv_string(&self, ids: &[String]) -> Result<String> {
        if ids.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: ids.len(),
            });
        }
        let mut out = String::new();
        let _ = writeln!(out, "id,{}", ids.join(","));
        for (i, id) in ids.iter().enumerate() {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:.6}", self.get(i, j))).collect();
            let _ = writeln!(out, "{},{}", id, row.join(","));
        }
        Ok(out)
    }
}

/// Per-attribute `(min, max)` over the dataset; `(0, 0)` for categorical
/// attributes, whose delta never consults the range.
pub(crate) fn ranges_for(dataset: &Dataset, attrs: &[String]) -> Result<Vec<(f64, f64)>> {
    attrs
        .iter()
        .map(|name| match dataset.column(name)?.data() {
            ColumnData::Numeric(_) => dataset.column_range(name),
            ColumnData::Categorical(_) => Ok((0.0, 0.0)),
        })
        .collect()
}

fn matrix_from_distances(n: usize, mut dist: Vec<f64>, basis: MatrixBasis) -> SimilarityMatrix {
    let max = dist
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max);
    if max > 0.0 {
        for v in dist.iter_mut() {
            *v = 1.0 - *v / max;
        }
    } else {
        dist.iter_mut().for_each(|v| *v = 1.0);
    }
    for i in 0..n {
        dist[i * n + i] = 1.0;
    }
    SimilarityMatrix {
        n,
        values: dist,
        basis,
    }
}

/// Flat n x n matrix of pairwise project distances over `attrs`, with a
/// zero diagonal. Ranges come from `dataset` itself.
pub(crate) fn pairwise_distance_matrix(
    dataset: &Dataset,
    attrs: &[String],
    mode: DeltaMode,
) -> Result<Vec<f64>> {
    if attrs.is_empty() {
        return Err(Error::InvalidArgument(
            "similarity needs at least one attribute".into(),
        ));
    }
    let n = dataset.n_projects();
    let ranges = ranges_for(dataset, attrs)?;
    let m = attrs.len() as f64;

    let mut sums = vec![0.0_f64; n * n];
    for (name, &range) in attrs.iter().zip(&ranges) {
        match dataset.column(name)?.data() {
            ColumnData::Numeric(values) => {
                let span = range.1 - range.0;
                if span <= 0.0 {
                    continue;
                }
                for i in 0..n {
                    let a = values[i].expect("missing cell; run drop_missing first");
                    for j in (i + 1)..n {
                        let b = values[j].expect("missing cell; run drop_missing first");
                        let diff = a - b;
                        let delta = match mode {
                            DeltaMode::Literal => diff * diff / span,
                            DeltaMode::SquaredNormalized => (diff / span) * (diff / span),
                        };
                        sums[i * n + j] += delta;
                    }
                }
            }
            ColumnData::Categorical(values) => {
                for i in 0..n {
                    let a = values[i].as_deref().expect("missing cell; run drop_missing first");
                    for j in (i + 1)..n {
                        let b = values[j].as_deref().expect("missing cell; run drop_missing first");
                        if a != b {
                            sums[i * n + j] += 1.0;
                        }
                    }
                }
            }
        }
    }

    let mut dist = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = sums[i * n + j].sqrt() / m;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    Ok(dist)
}

/// Pairwise similarity over the named attributes.
///
/// Requires a complete dataset (no missing cells among `attrs`) with at
/// least three projects. Numeric ranges are taken per attribute over all
/// projects in `dataset`.
pub fn similarity_matrix(
    dataset: &Dataset,
    attrs: &[String],
    mode: DeltaMode,
) -> Result<SimilarityMatrix> {
    let n = dataset.n_projects();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }
    let dist = pairwise_distance_matrix(dataset, attrs, mode)?;
    Ok(matrix_from_distances(
        n,
        dist,
        MatrixBasis::Attributes(attrs.to_vec()),
    ))
}

/// Pairwise similarity of projects by actual effort alone, used as the
/// reference side of the correlation. Thanks to the max-distance
/// normalization the result is identical under both delta modes.
pub fn effort_similarity_matrix(dataset: &Dataset, mode: DeltaMode) -> Result<SimilarityMatrix> {
    let n = dataset.n_projects();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }
    let efforts: Vec<f64> = (0..n).map(|i| dataset.effort_at(i)).collect();
    let (min, max) = efforts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    let span = max - min;
    let mut dist = vec![0.0_f64; n * n];
    if span > 0.0 {
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = efforts[i] - efforts[j];
                let delta = match mode {
                    DeltaMode::Literal => diff * diff / span,
                    DeltaMode::SquaredNormalized => (diff / span) * (diff / span),
                };
                let d = delta.sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
    }
    Ok(matrix_from_distances(n, dist, MatrixBasis::Effort))
}
