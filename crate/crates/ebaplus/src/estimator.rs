use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{AttributeKind, ColumnData, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{mre, summarize};
use crate::resampling::RngConfig;
use crate::similarity::{feature_delta, ranges_for, DeltaMode, FeatureValue};

/// One attribute value of a project that is being estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseValue {
    Numeric(f64),
    Categorical(String),
}

/// A project to estimate: an id plus its attribute values. The effort is
/// unknown, that is the point.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub id: String,
    pub values: BTreeMap<String, CaseValue>,
}

impl Case {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn with_numeric(mut self, name: impl Into<String>, value: f64) -> Self {
        self.values.insert(name.into(), CaseValue::Numeric(value));
        self
    }

    pub fn with_categorical(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.values
            .insert(name.into(), CaseValue::Categorical(value.into()));
        self
    }

    /// Extracts one project of a complete dataset as a case, dropping its
    /// effort.
    pub fn from_dataset(dataset: &Dataset, row: usize) -> Self {
        let mut values = BTreeMap::new();
        for column in dataset.columns() {
            let value = match column.data() {
                ColumnData::Numeric(v) => {
                    CaseValue::Numeric(v[row].expect("missing cell; run drop_missing first"))
                }
                ColumnData::Categorical(v) => CaseValue::Categorical(
                    v[row]
                        .clone()
                        .expect("missing cell; run drop_missing first"),
                ),
            };
            values.insert(column.name().to_string(), value);
        }
        Self {
            id: dataset.ids()[row].clone(),
            values,
        }
    }

    fn feature(&self, name: &str, kind: AttributeKind) -> Result<FeatureValue<'_>> {
        match (self.values.get(name), kind) {
            (Some(CaseValue::Numeric(v)), AttributeKind::Numeric) => {
                Ok(FeatureValue::Numeric(*v))
            }
            (Some(CaseValue::Categorical(v)), AttributeKind::Categorical) => {
                Ok(FeatureValue::Categorical(v))
            }
            (Some(_), _) => Err(Error::InvalidArgument(format!(
                "case `{}` has the wrong kind for attribute `{name}`",
                self.id
            ))),
            (None, _) => Err(Error::InvalidArgument(format!(
                "case `{}` has no value for attribute `{name}`",
                self.id
            ))),
        }
    }
}

/// Outcome of estimating one case from its closest training projects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub target_id: String,
    /// Every training project at the minimum distance; usually one, more on
    /// exact distance ties.
    pub analog_ids: Vec<String>,
    /// Mean effort of the analogs.
    pub predicted_effort: f64,
    /// Similarity to the analogs, normalized over training and target pairs.
    pub similarity: f64,
}

/// Predicts a case's effort as the effort of its single most similar
/// training project (the mean on exact ties).
///
/// Attribute ranges come from the training pool alone, so an extreme target
/// cannot reshape the space it is being compared in. The target's distances
/// only enter the similarity normalization, never the training geometry.
pub fn predict_closest(
    train: &Dataset,
    target: &Case,
    attrs: &[String],
    mode: DeltaMode,
) -> Result<Prediction> {
    if attrs.is_empty() {
        return Err(Error::InvalidArgument(
            "prediction needs at least one attribute".into(),
        ));
    }
    let n = train.n_projects();
    let ranges = ranges_for(train, attrs)?;
    let m = attrs.len() as f64;

    let mut sums = vec![0.0_f64; n];
    for (name, &range) in attrs.iter().zip(&ranges) {
        let column = train.column(name)?;
        let target_value = target.feature(name, column.kind())?;
        match column.data() {
            ColumnData::Numeric(values) => {
                for (i, v) in values.iter().enumerate() {
                    let train_value =
                        FeatureValue::Numeric(v.expect("missing cell; run drop_missing first"));
                    sums[i] += feature_delta(target_value, train_value, range, mode);
                }
            }
            ColumnData::Categorical(values) => {
                for (i, v) in values.iter().enumerate() {
                    let train_value = FeatureValue::Categorical(
                        v.as_deref().expect("missing cell; run drop_missing first"),
                    );
                    sums[i] += feature_delta(target_value, train_value, range, mode);
                }
            }
        }
    }
    let target_dist: Vec<f64> = sums.iter().map(|s| s.sqrt() / m).collect();

    let min_dist = target_dist
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let analogs: Vec<usize> = (0..n).filter(|&i| target_dist[i] == min_dist).collect();
    let predicted_effort = analogs
        .iter()
        .map(|&i| train.effort_at(i))
        .sum::<f64>()
        / analogs.len() as f64;

    let train_pairs = crate::similarity::pairwise_distance_matrix(train, attrs, mode)?;
    let max_dist = train_pairs
        .iter()
        .chain(&target_dist)
        .cloned()
        .fold(0.0_f64, f64::max);
    let similarity = if max_dist > 0.0 {
        1.0 - min_dist / max_dist
    } else {
        1.0
    };

    Ok(Prediction {
        target_id: target.id.clone(),
        analog_ids: analogs.iter().map(|&i| train.ids()[i].clone()).collect(),
        predicted_effort,
        similarity,
    })
}

/// How a validation result was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMethod {
    Jackknife,
    KFold { k: usize },
}

/// One held-out prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub id: String,
    pub actual: f64,
    pub predicted: f64,
    pub mre: f64,
}

/// Cross-validated accuracy of the closest-analogy estimator on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationResult {
    pub method: ValidationMethod,
    pub records: Vec<PredictionRecord>,
    pub mmre: f64,
    pub mdmre: f64,
    pub pred25: f64,
}

fn validate_attrs(dataset: &Dataset, attrs: &[String]) -> Result<()> {
    if attrs.is_empty() {
        return Err(Error::InvalidArgument(
            "validation needs at least one attribute".into(),
        ));
    }
    for name in attrs {
        dataset.column(name)?;
    }
    Ok(())
}

fn result_from_records(
    method: ValidationMethod,
    records: Vec<PredictionRecord>,
) -> Result<ValidationResult> {
    let mres: Vec<f64> = records.iter().map(|r| r.mre).collect();
    let summary = summarize(&mres)?;
    Ok(ValidationResult {
        method,
        records,
        mmre: summary.mmre,
        mdmre: summary.mdmre,
        pred25: summary.pred25,
    })
}

fn predict_held_out(dataset: &Dataset, row: usize, attrs: &[String], mode: DeltaMode) -> PredictionRecord {
    let keep: Vec<usize> = (0..dataset.n_projects()).filter(|&j| j != row).collect();
    let train = dataset.select_rows(&keep);
    let target = Case::from_dataset(dataset, row);
    let prediction =
        predict_closest(&train, &target, attrs, mode).expect("inputs already validated");
    let actual = dataset.effort_at(row);
    PredictionRecord {
        id: target.id,
        actual,
        predicted: prediction.predicted_effort,
        mre: mre(actual, prediction.predicted_effort).expect("loader enforces positive effort"),
    }
}

/// Leave-one-out validation: each project is estimated from all the others.
pub fn jackknife_validate(
    dataset: &Dataset,
    attrs: &[String],
    mode: DeltaMode,
) -> Result<ValidationResult> {
    let n = dataset.n_projects();
    if n < 2 {
        return Err(Error::TooFewProjects { needed: 2, got: n });
    }
    validate_attrs(dataset, attrs)?;
    let records: Vec<PredictionRecord> = (0..n)
        .into_par_iter()
        .map(|i| predict_held_out(dataset, i, attrs, mode))
        .collect();
    result_from_records(ValidationMethod::Jackknife, records)
}

/// Seeded k-fold cross validation. Projects are shuffled once, dealt into
/// `k` folds (the first `n mod k` folds hold one extra project), and each
/// fold is estimated from the union of the others. With `k == n` every fold
/// is a singleton and the result equals the jackknife exactly.
pub fn kfold_validate(
    dataset: &Dataset,
    attrs: &[String],
    k: usize,
    mode: DeltaMode,
    rng: &RngConfig,
) -> Result<ValidationResult> {
    let n = dataset.n_projects();
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the number of projects ({n})"
        )));
    }
    validate_attrs(dataset, attrs)?;

    let mut order: Vec<usize> = (0..n).collect();
    {
        use rand::seq::SliceRandom;
        let mut stream = rng.replicate_rng("kfold", 0);
        order.shuffle(&mut stream);
    }
    let base = n / k;
    let extra = n % k;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut cursor = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }

    let mut records: Vec<(usize, PredictionRecord)> = folds
        .par_iter()
        .flat_map_iter(|fold| {
            let mut in_fold = vec![false; n];
            for &i in fold {
                in_fold[i] = true;
            }
            let keep: Vec<usize> = (0..n).filter(|&j| !in_fold[j]).collect();
            let train = dataset.select_rows(&keep);
            fold.iter()
                .map(|&i| {
                    let target = Case::from_dataset(dataset, i);
                    let prediction = predict_closest(&train, &target, attrs, mode)
                        .expect("inputs already validated");
                    let actual = dataset.effort_at(i);
                    let record = PredictionRecord {
                        id: target.id,
                        actual,
                        predicted: prediction.predicted_effort,
                        mre: mre(actual, prediction.predicted_effort)
                            .expect("loader enforces positive effort"),
                    };
                    (i, record)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    records.sort_by_key(|(i, _)| *i);
    result_from_records(
        ValidationMethod::KFold { k },
        records.into_iter().map(|(_, r)| r).collect(),
    )
}

/// Result of the exhaustive attribute-subset search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceOutcome {
    pub selected: Vec<String>,
    pub result: ValidationResult,
    /// Number of subsets actually scored.
    pub evaluated: usize,
}

/// Scores every attribute subset by cross-validated MMRE and returns the
/// best one: the baseline that assumption-driven selection competes with.
///
/// Subsets are enumerated smallest first (ties in MMRE therefore resolve to
/// the smaller subset, then to column order). `budget` caps the number of
/// subsets scored; with more than 20 attributes a budget is mandatory since
/// the full search space passes a million subsets. Datasets with more than
/// 200 projects are scored with seeded 10-fold cross validation instead of
/// the jackknife to keep the search tractable.
pub fn brute_force_select(
    dataset: &Dataset,
    mode: DeltaMode,
    budget: Option<usize>,
    rng: &RngConfig,
) -> Result<BruteForceOutcome> {
    let names = dataset.attribute_names();
    let m = names.len();
    if m > 20 && budget.is_none() {
        return Err(Error::InvalidArgument(format!(
            "{m} attributes mean 2^{m} subsets; pass a budget to cap the search"
        )));
    }
    let n = dataset.n_projects();
    let use_kfold = n > 200;
    let evaluate = |attrs: &[String]| -> Result<ValidationResult> {
        if use_kfold {
            kfold_validate(dataset, attrs, 10, mode, rng)
        } else {
            jackknife_validate(dataset, attrs, mode)
        }
    };

    let cap = budget.unwrap_or(usize::MAX);
    let mut best: Option<(Vec<String>, ValidationResult)> = None;
    let mut evaluated = 0usize;

    'search: for size in 1..=m {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if evaluated >= cap {
                break 'search;
            }
            let attrs: Vec<String> = combo.iter().map(|&i| names[i].clone()).collect();
            let result = evaluate(&attrs)?;
            evaluated += 1;
            let better = match &best {
                None => true,
                Some((_, current)) => result.mmre < current.mmre,
            };
            if better {
                best = Some((attrs, result));
            }

            // advance to the next lexicographic combination of `size`
            let mut pos = size;
            while pos > 0 {
                pos -= 1;
                if combo[pos] < m - (size - pos) {
                    combo[pos] += 1;
                    for later in (pos + 1)..size {
                        combo[later] = combo[later - 1] + 1;
                    }
                    break;
                }
                if pos == 0 {
                    continue 'search;
                }
            }
        }
    }

    let (selected, result) = best.expect("at least one subset is always evaluated");
    Ok(BruteForceOutcome {
        selected,
        result,
        evaluated,
    })
}
