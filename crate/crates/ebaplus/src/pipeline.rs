use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kendall::{row_kendall, rowwise_kendall};
use crate::resampling::{
    bca_interval, bootstrap_corr, permutation_test, row_permutation_test, RngConfig,
};
use crate::similarity::{effort_similarity_matrix, similarity_matrix};

/// Full inferential picture of one attribute set's agreement with effort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    /// Row-wise correlation on the original sample.
    pub point_corr: f64,
    /// Mean of the bootstrap distribution.
    pub tau_r: f64,
    /// Right-tail permutation p-value for the point correlation.
    pub p_value: f64,
    pub lcl: f64,
    pub ucl: f64,
    pub ci_width: f64,
    pub z0: f64,
    pub accel: f64,
    pub n_boot: usize,
    pub n_perm: usize,
}

/// Point correlation, permutation significance and a BCa bootstrap interval
/// for the similarity agreement of `attrs` vs effort.
///
/// Every randomized piece derives from `cfg.seed`, so repeated calls with
/// the same inputs agree exactly; in particular two estimates under the
/// same seed share their bootstrap resamples, which makes their intervals
/// directly comparable during selection.
pub fn estimate_correlation(
    dataset: &Dataset,
    attrs: &[String],
    cfg: &RunConfig,
) -> Result<CorrelationEstimate> {
    cfg.validate()?;
    let rng = RngConfig::new(cfg.seed);
    let smx = similarity_matrix(dataset, attrs, cfg.delta_mode)?;
    let sme = effort_similarity_matrix(dataset, cfg.delta_mode)?;
    let point = rowwise_kendall(&smx, &sme)?;
    let p_value = permutation_test(&smx, &sme, point.value, cfg.n_perm, &rng)?;
    let (tau_r, dist) = bootstrap_corr(dataset, attrs, cfg.n_boot, cfg.delta_mode, &rng)?;

    // leave-one-out point correlations feed the interval's acceleration;
    // with fewer than four projects the reduced matrices are too small, so
    // the acceleration degenerates to zero
    let n = dataset.n_projects();
    let jackknife: Vec<f64> = if n >= 4 {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let sub = dataset.select_rows(&keep);
                let sx = similarity_matrix(&sub, attrs, cfg.delta_mode)
                    .expect("inputs already validated");
                let se = effort_similarity_matrix(&sub, cfg.delta_mode)
                    .expect("inputs already validated");
                rowwise_kendall(&sx, &se)
                    .expect("sizes match by construction")
                    .value
            })
            .collect()
    } else {
        Vec::new()
    };

    let ci = bca_interval(&dist, point.value, &jackknife, cfg.alpha)?;
    Ok(CorrelationEstimate {
        point_corr: point.value,
        tau_r,
        p_value,
        lcl: ci.lcl,
        ucl: ci.ucl,
        ci_width: ci.ucl - ci.lcl,
        z0: ci.z0,
        accel: ci.accel,
        n_boot: cfg.n_boot,
        n_perm: cfg.n_perm,
    })
}

/// Screening verdict for a single attribute.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeReport {
    pub name: String,
    pub tau_r: f64,
    pub point_corr: f64,
    pub p_value: f64,
    pub lcl: f64,
    pub ucl: f64,
    pub significant: bool,
}

/// Stage 1: estimates every attribute individually and orders the report by
/// bootstrap correlation, strongest first (column order breaks exact ties).
/// An attribute is significant when its permutation p-value is below
/// `cfg.alpha`.
pub fn stage1_screen(dataset: &Dataset, cfg: &RunConfig) -> Result<Vec<AttributeReport>> {
    let mut reports = Vec::new();
    for name in dataset.attribute_names() {
        let est = estimate_correlation(dataset, std::slice::from_ref(&name), cfg)?;
        reports.push(AttributeReport {
            name,
            tau_r: est.tau_r,
            point_corr: est.point_corr,
            p_value: est.p_value,
            lcl: est.lcl,
            ucl: est.ucl,
            significant: est.p_value < cfg.alpha,
        });
    }
    reports.sort_by(|a, b| b.tau_r.total_cmp(&a.tau_r));
    Ok(reports)
}

/// Why a candidate set was or was not adopted during forward selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDecision {
    Accepted,
    LowerTau,
    WiderCi,
}

/// One candidate evaluation during forward selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStep {
    /// The candidate attribute set that was scored.
    pub attrs: Vec<String>,
    pub tau_r: f64,
    pub ci_width: f64,
    pub decision: StepDecision,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
}

/// Stage 2: greedy best-improvement forward selection over the significant
/// attributes.
///
/// Starts from the strongest single attribute. Each round scores every
/// remaining candidate joined to the current set, picks the one with the
/// highest bootstrap correlation, and adopts it only if the correlation
/// strictly rises and the interval strictly narrows; otherwise selection
/// stops. With a single significant attribute there is nothing to try and
/// the trace is empty.
pub fn stage2_forward_select(
    dataset: &Dataset,
    significant: &[String],
    cfg: &RunConfig,
) -> Result<(Vec<String>, SelectionTrace)> {
    if significant.is_empty() {
        return Err(Error::InvalidArgument(
            "forward selection needs at least one significant attribute".into(),
        ));
    }
    let mut selected = vec![significant[0].clone()];
    let mut trace = SelectionTrace::default();
    if significant.len() == 1 {
        return Ok((selected, trace));
    }

    let mut best = estimate_correlation(dataset, &selected, cfg)?;
    let mut remaining: Vec<String> = significant[1..].to_vec();
    while !remaining.is_empty() {
        let estimates: Vec<(usize, Vec<String>, CorrelationEstimate)> = remaining
            .iter()
            .enumerate()
            .map(|(i, cand)| {
                let mut attrs = selected.clone();
                attrs.push(cand.clone());
                estimate_correlation(dataset, &attrs, cfg).map(|est| (i, attrs, est))
            })
            .collect::<Result<_>>()?;

        let winner = estimates
            .iter()
            .max_by(|a, b| a.2.tau_r.total_cmp(&b.2.tau_r).then(b.0.cmp(&a.0)))
            .expect("remaining is non-empty")
            .0;

        let mut accepted = false;
        for (i, attrs, est) in &estimates {
            let decision = if *i == winner
                && est.tau_r > best.tau_r
                && est.ci_width < best.ci_width
            {
                accepted = true;
                StepDecision::Accepted
            } else if est.tau_r > best.tau_r {
                StepDecision::WiderCi
            } else {
                StepDecision::LowerTau
            };
            trace.steps.push(SelectionStep {
                attrs: attrs.clone(),
                tau_r: est.tau_r,
                ci_width: est.ci_width,
                decision,
            });
        }

        if !accepted {
            break;
        }
        let (_, attrs, est) = estimates.into_iter().nth(winner).expect("winner index");
        selected = attrs;
        best = est;
        remaining.remove(winner);
    }
    Ok((selected, trace))
}

/// Row-level agreement of one project, with its permutation p-value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectRowStat {
    pub id: String,
    pub row_corr: f64,
    pub p_value: f64,
}

/// What stage 3 decided about the projects.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage3Outcome {
    /// The dataset with abnormal projects removed.
    pub kept: Dataset,
    /// Removed project ids, in removal order.
    pub removed: Vec<String>,
    /// Final row statistics per project, in the original order. A removed
    /// project keeps the statistics from the pass that removed it.
    pub stats: Vec<ProjectRowStat>,
    /// True when removal left fewer than three projects: the dataset as a
    /// whole cannot support analogy.
    pub all_abnormal: bool,
}

/// Stage 3: removes projects whose own similarity row disagrees with the
/// effort row.
///
/// Each pass correlates every project's diagonal-deleted attribute row with
/// its effort row and removes those whose row permutation p-value is not
/// below `cfg.alpha`; passes repeat on the reduced dataset until nothing is
/// removed, fewer than three projects remain, or ten passes have run.
pub fn stage3_abnormal(
    dataset: &Dataset,
    attrs: &[String],
    cfg: &RunConfig,
) -> Result<Stage3Outcome> {
    cfg.validate()?;
    let n = dataset.n_projects();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }
    let rng = RngConfig::new(cfg.seed);
    let mut kept_idx: Vec<usize> = (0..n).collect();
    let mut removed: Vec<String> = Vec::new();
    let mut stats: Vec<Option<ProjectRowStat>> = vec![None; n];
    let mut all_abnormal = false;

    for _pass in 0..10 {
        if kept_idx.len() < 3 {
            all_abnormal = true;
            break;
        }
        let current = dataset.select_rows(&kept_idx);
        let smx = similarity_matrix(&current, attrs, cfg.delta_mode)?;
        let sme = effort_similarity_matrix(&current, cfg.delta_mode)?;

        let mut abnormal_local: Vec<usize> = Vec::new();
        for (local, &orig) in kept_idx.iter().enumerate() {
            let rx = smx.row_excluding_diagonal(local);
            let ry = sme.row_excluding_diagonal(local);
            let corr = row_kendall(&rx, &ry)?;
            let p = row_permutation_test(&rx, &ry, cfg.n_perm, &rng)?;
            stats[orig] = Some(ProjectRowStat {
                id: dataset.ids()[orig].clone(),
                row_corr: corr.value,
                p_value: p,
            });
            if p >= cfg.alpha {
                abnormal_local.push(local);
            }
        }
        if abnormal_local.is_empty() {
            break;
        }
        for &local in &abnormal_local {
            removed.push(dataset.ids()[kept_idx[local]].clone());
        }
        let drop_set: std::collections::HashSet<usize> = abnormal_local.into_iter().collect();
        kept_idx = kept_idx
            .iter()
            .enumerate()
            .filter(|(local, _)| !drop_set.contains(local))
            .map(|(_, &orig)| orig)
            .collect();
    }
    if kept_idx.len() < 3 {
        all_abnormal = true;
    }

    Ok(Stage3Outcome {
        kept: dataset.select_rows(&kept_idx),
        removed,
        stats: stats.into_iter().flatten().collect(),
        all_abnormal,
    })
}

/// The pipeline's overall answer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityVerdict {
    /// True when at least one attribute passed screening and the projects
    /// surviving stage 3 still support analogy.
    pub reliable: bool,
    pub selected_attrs: Vec<String>,
    pub removed_projects: Vec<String>,
    pub stage1: Vec<AttributeReport>,
    pub stage2: SelectionTrace,
    pub stage3: Vec<ProjectRowStat>,
    /// Bootstrap correlation of the selected attributes on the cleaned
    /// dataset; absent when the dataset was judged unreliable.
    pub final_tau_r: Option<f64>,
}

/// Runs the three assessment stages in order: attribute screening, forward
/// selection, abnormal-project removal. The verdict is reliable only if
/// screening kept at least one attribute and removal left enough projects.
pub fn run_ebaplus(dataset: &Dataset, cfg: &RunConfig) -> Result<QualityVerdict> {
    cfg.validate()?;
    let n = dataset.n_projects();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }

    let stage1 = stage1_screen(dataset, cfg)?;
    let significant: Vec<String> = stage1
        .iter()
        .filter(|r| r.significant)
        .map(|r| r.name.clone())
        .collect();
    if significant.is_empty() {
        return Ok(QualityVerdict {
            reliable: false,
            selected_attrs: Vec::new(),
            removed_projects: Vec::new(),
            stage1,
            stage2: SelectionTrace::default(),
            stage3: Vec::new(),
            final_tau_r: None,
        });
    }

    let (selected, stage2) = stage2_forward_select(dataset, &significant, cfg)?;
    let outcome = stage3_abnormal(dataset, &selected, cfg)?;
    let reliable = !outcome.all_abnormal;
    let final_tau_r = if reliable {
        Some(estimate_correlation(&outcome.kept, &selected, cfg)?.tau_r)
    } else {
        None
    };

    Ok(QualityVerdict {
        reliable,
        selected_attrs: selected,
        removed_projects: outcome.removed,
        stage1,
        stage2,
        stage3: outcome.stats,
        final_tau_r,
    })
}
