use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kendall::{midrank_descending, row_kendall, rowwise_kendall};
use crate::similarity::{effort_similarity_matrix, similarity_matrix, DeltaMode, SimilarityMatrix};

/// Seed policy for every randomized procedure in the crate.
///
/// Each replicate gets its own stream cipher RNG seeded by hashing
/// `(master_seed, purpose tag, replicate index)`. Replicates are therefore
/// independent of evaluation order, which keeps results identical across
/// thread counts, and two procedures never share a stream because their tags
/// differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngConfig {
    pub master_seed: u64,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(text: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x1_0000_0000_01b3);
    }
    h
}

impl RngConfig {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Stable 64-bit seed for one replicate of one procedure.
    pub fn replicate_seed(&self, tag: &str, index: u64) -> u64 {
        splitmix64(splitmix64(self.master_seed ^ fnv1a64(tag)) ^ index)
    }

    pub fn replicate_rng(&self, tag: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.replicate_seed(tag, index))
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Right-tail Monte Carlo p-value with add-one smoothing:
/// `(1 + hits) / (1 + n)`, never exactly zero.
fn smoothed_p(hits: usize, n: usize) -> f64 {
    (1 + hits) as f64 / (1 + n) as f64
}

/// Permutation significance test for a matrix-level correlation.
///
/// Each replicate relabels the projects of `smy` (the same permutation is
/// applied to rows and columns, preserving the matrix structure), recomputes
/// the row-wise correlation against the untouched `smx` and counts how often
/// it reaches `observed`. Undefined permuted correlations count as 0.
pub fn permutation_test(
    smx: &SimilarityMatrix,
    smy: &SimilarityMatrix,
    observed: f64,
    n_perm: usize,
    rng: &RngConfig,
) -> Result<f64> {
    if smx.n() != smy.n() {
        return Err(Error::DimensionMismatch {
            expected: smx.n(),
            got: smy.n(),
        });
    }
    if n_perm == 0 {
        return Err(Error::InvalidArgument("n_perm must be at least 1".into()));
    }
    let n = smx.n();
    let hits = (0..n_perm)
        .into_par_iter()
        .filter(|&r| {
            let mut stream = rng.replicate_rng("matrix_permutation", r as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut stream);
            let shuffled = smy.permuted(&perm).expect("permutation is valid");
            let corr = rowwise_kendall(smx, &shuffled).expect("sizes already checked");
            corr.value >= observed
        })
        .count();
    Ok(smoothed_p(hits, n_perm))
}

/// Permutation test for a single project's row agreement. The observed
/// statistic is the row correlation of `row_x` vs `row_y`; replicates
/// shuffle the elements of `row_y`.
pub fn row_permutation_test(
    row_x: &[f64],
    row_y: &[f64],
    n_perm: usize,
    rng: &RngConfig,
) -> Result<f64> {
    if n_perm == 0 {
        return Err(Error::InvalidArgument("n_perm must be at least 1".into()));
    }
    let observed = row_kendall(row_x, row_y)?.value;
    let hits = (0..n_perm)
        .into_par_iter()
        .filter(|&r| {
            let mut stream = rng.replicate_rng("row_permutation", r as u64);
            let mut shuffled = row_y.to_vec();
            shuffled.shuffle(&mut stream);
            let corr = row_kendall(row_x, &shuffled).expect("lengths already checked");
            corr.value >= observed
        })
        .count();
    Ok(smoothed_p(hits, n_perm))
}

/// Correlation of one bootstrap resample.
///
/// The same project indices are applied to the attribute columns and the
/// effort column, so each replicate is a resample of whole projects. An
/// undefined correlation (for instance when one project was drawn every
/// time) is recorded as 0.
pub fn resample_corr(
    dataset: &Dataset,
    attrs: &[String],
    indices: &[usize],
    mode: DeltaMode,
) -> Result<f64> {
    let n = dataset.n_projects();
    if indices.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: indices.len(),
        });
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidArgument(format!(
            "resample index {bad} out of range for {n} projects"
        )));
    }
    let sub = dataset.select_rows(indices);
    let smx = similarity_matrix(&sub, attrs, mode)?;
    let sme = effort_similarity_matrix(&sub, mode)?;
    Ok(rowwise_kendall(&smx, &sme)?.value)
}

/// Bootstrap distribution of the row-wise correlation.
///
/// Returns the mean of the replicate values (the bootstrap point estimate)
/// together with the full distribution for interval construction.
pub fn bootstrap_corr(
    dataset: &Dataset,
    attrs: &[String],
    n_boot: usize,
    mode: DeltaMode,
    rng: &RngConfig,
) -> Result<(f64, Vec<f64>)> {
    if n_boot == 0 {
        return Err(Error::InvalidArgument("n_boot must be at least 1".into()));
    }
    let n = dataset.n_projects();
    if n < 3 {
        return Err(Error::TooFewProjects { needed: 3, got: n });
    }
    for name in attrs {
        dataset.column(name)?;
    }
    if attrs.is_empty() {
        return Err(Error::InvalidArgument(
            "bootstrap needs at least one attribute".into(),
        ));
    }
    let dist: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng.replicate_rng("bootstrap", r as u64);
            let indices: Vec<usize> = (0..n).map(|_| stream.gen_range(0..n)).collect();
            resample_corr(dataset, attrs, &indices, mode).expect("inputs already validated")
        })
        .collect();
    let mean = dist.iter().sum::<f64>() / dist.len() as f64;
    Ok((mean, dist))
}

/// Empirical quantile with linear interpolation between order statistics
/// (the convention most statistics packages default to). `sorted` must be
/// ascending.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bias-corrected and accelerated bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcaInterval {
    pub lcl: f64,
    pub ucl: f64,
    /// Bias correction: the normal quantile of the share of bootstrap values
    /// at or below the point estimate.
    pub z0: f64,
    /// Acceleration from the jackknife skewness of the statistic.
    pub accel: f64,
}

/// Computes a BCa confidence interval from a bootstrap distribution.
///
/// `theta_hat` is the point estimate on the original data and `jackknife`
/// holds the leave-one-out point estimates used for the acceleration. With
/// `z0 = 0` and `accel = 0` the result reduces exactly to the percentile
/// interval. A degenerate distribution (all replicates equal) collapses to a
/// zero-width interval.
pub fn bca_interval(
    boot: &[f64],
    theta_hat: f64,
    jackknife: &[f64],
    alpha: f64,
) -> Result<BcaInterval> {
    if boot.is_empty() {
        return Err(Error::InvalidArgument(
            "bootstrap distribution is empty".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }

    let mut sorted = boot.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first() == sorted.last() {
        // a constant distribution carries no interval information; the
        // corrections are moot
        return Ok(BcaInterval {
            lcl: sorted[0],
            ucl: sorted[0],
            z0: 0.0,
            accel: 0.0,
        });
    }

    let jack_mean = jackknife.iter().sum::<f64>() / jackknife.len().max(1) as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for &v in jackknife {
        let d = jack_mean - v;
        num += d * d * d;
        den += d * d;
    }
    let accel = if den > 0.0 {
        num / (6.0 * den.powf(1.5))
    } else {
        0.0
    };

    let normal = std_normal();
    let b = boot.len() as f64;
    let below = boot.iter().filter(|&&v| v <= theta_hat).count() as f64;
    // a proportion of exactly 0 or 1 would push z0 to infinity; nudge one
    // replicate inside
    let p0 = (below / b).clamp(1.0 / (b + 1.0), b / (b + 1.0));
    let z0 = normal.inverse_cdf(p0);

    let adjusted = |q: f64| -> f64 {
        let u = z0 + normal.inverse_cdf(q);
        let t = 1.0 - accel * u;
        if t.abs() < 1e-12 {
            if u > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            normal.cdf(z0 + u / t)
        }
    };
    // With both corrections zero the adjustment is the identity; skipping
    // the normal round-trip keeps the reduction to the percentile interval
    // exact instead of merely close.
    let (a1, a2) = if z0 == 0.0 && accel == 0.0 {
        (alpha / 2.0, 1.0 - alpha / 2.0)
    } else {
        (adjusted(alpha / 2.0), adjusted(1.0 - alpha / 2.0))
    };
    let q1 = empirical_quantile(&sorted, a1);
    let q2 = empirical_quantile(&sorted, a2);
    Ok(BcaInterval {
        lcl: q1.min(q2),
        ucl: q1.max(q2),
        z0,
        accel,
    })
}

/// Two-sided Wilcoxon rank-sum test (normal approximation with tie and
/// continuity corrections), for comparing absolute residual samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonTest {
    /// Sum of the first sample's mid-ranks in the pooled ordering.
    pub rank_sum: f64,
    pub z: f64,
    pub p_value: f64,
}

pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<WilcoxonTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "both samples must be non-empty".into(),
        ));
    }
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let nn = n1 + n2;

    // ascending mid-ranks are descending mid-ranks of the negated values
    let negated: Vec<f64> = a.iter().chain(b).map(|&v| -v).collect();
    let ranks = midrank_descending(&negated);
    let rank_sum: f64 = ranks[..a.len()].iter().sum();

    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j] == pooled[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let mean = n1 * (nn + 1.0) / 2.0;
    let variance = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if variance <= 0.0 {
        return Ok(WilcoxonTest {
            rank_sum,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let diff = rank_sum - mean;
    let z = if diff == 0.0 {
        0.0
    } else {
        (diff - 0.5 * diff.signum()) / variance.sqrt()
    };
    let p_value = (2.0 * (1.0 - std_normal().cdf(z.abs()))).min(1.0);
    Ok(WilcoxonTest { rank_sum, z, p_value })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use itertools::Itertools;

    use super::*;
    use crate::dataset::Column;
    use crate::similarity::MatrixBasis;

    fn effort_matrix(efforts: &[f64]) -> SimilarityMatrix {
        let d = Dataset::new(
            (1..=efforts.len()).map(|i| format!("P{i}")).collect(),
            vec![Column::numeric("x", vec![0.0; efforts.len()])],
            efforts.to_vec(),
        )
        .unwrap();
        effort_similarity_matrix(&d, DeltaMode::Literal).unwrap()
    }

    #[test]
    fn replicate_seeds_are_stable_and_distinct() {
        let cfg = RngConfig::new(42);
        assert_eq!(
            cfg.replicate_seed("bootstrap", 7),
            cfg.replicate_seed("bootstrap", 7)
        );
        assert_ne!(
            cfg.replicate_seed("bootstrap", 7),
            cfg.replicate_seed("bootstrap", 8)
        );
        assert_ne!(
            cfg.replicate_seed("bootstrap", 7),
            cfg.replicate_seed("matrix_permutation", 7)
        );
        assert_ne!(
            cfg.replicate_seed("bootstrap", 7),
            RngConfig::new(43).replicate_seed("bootstrap", 7)
        );
    }

    #[test]
    fn monte_carlo_p_tracks_exhaustive_enumeration() {
        let m = effort_matrix(&[41.0, 34.0, 110.0, 81.0, 10.0]);
        let observed = rowwise_kendall(&m, &m).unwrap().value;
        assert_eq!(observed, 1.0);

        let mut exact_hits = 0usize;
        let mut total = 0usize;
        for perm in (0..5).permutations(5) {
            let shuffled = m.permuted(&perm).unwrap();
            if rowwise_kendall(&m, &shuffled).unwrap().value >= observed {
                exact_hits += 1;
            }
            total += 1;
        }
        assert_eq!(total, 120);
        let exact = exact_hits as f64 / 120.0;

        let n_perm = 2000;
        let p = permutation_test(&m, &m, observed, n_perm, &RngConfig::new(42)).unwrap();
        let se = (exact * (1.0 - exact) / n_perm as f64).sqrt();
        assert!(
            (p - exact).abs() <= 3.0 * se + 1.0 / (n_perm as f64 + 1.0),
            "monte carlo p {p} too far from exact {exact}"
        );
    }

    #[test]
    fn permutation_p_is_one_when_nothing_varies() {
        let x = effort_matrix(&[41.0, 34.0, 110.0, 81.0, 10.0]);
        let ones =
            SimilarityMatrix::from_values(5, vec![1.0; 25], MatrixBasis::Effort).unwrap();
        let observed = rowwise_kendall(&x, &ones).unwrap();
        assert!(!observed.defined);
        let p = permutation_test(&x, &ones, observed.value, 500, &RngConfig::new(1)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn permutation_p_is_monotone_in_observed() {
        let x = effort_matrix(&[41.0, 34.0, 110.0, 81.0, 10.0]);
        let y = effort_matrix(&[50.0, 30.0, 100.0, 90.0, 15.0]);
        let cfg = RngConfig::new(9);
        let p_low = permutation_test(&x, &y, 0.2, 400, &cfg).unwrap();
        let p_high = permutation_test(&x, &y, 0.5, 400, &cfg).unwrap();
        assert!(p_high <= p_low);
    }

    #[test]
    fn row_permutation_flags_agreement_and_tolerates_noise() {
        let rx = [0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05, 0.6, 0.4, 0.8];
        let p_same = row_permutation_test(&rx, &rx, 999, &RngConfig::new(5)).unwrap();
        assert!(p_same < 0.01, "identical rows should be significant, p = {p_same}");
        // flipping every value reverses all ranks, the worst possible
        // agreement: every permutation scores at least as high
        let ry: Vec<f64> = rx.iter().map(|v| 1.0 - v).collect();
        let p_flip = row_permutation_test(&rx, &ry, 999, &RngConfig::new(5)).unwrap();
        assert_eq!(p_flip, 1.0);
    }

    #[test]
    fn degenerate_resample_records_zero() {
        let d = Dataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![Column::numeric("x", vec![1.0, 2.0, 3.0])],
            vec![10.0, 20.0, 30.0],
        )
        .unwrap();
        let v = resample_corr(&d, &["x".into()], &[1, 1, 1], DeltaMode::Literal).unwrap();
        assert_eq!(v, 0.0);
        assert!(resample_corr(&d, &["x".into()], &[0, 1], DeltaMode::Literal).is_err());
        assert!(resample_corr(&d, &["x".into()], &[0, 1, 9], DeltaMode::Literal).is_err());
    }

    #[test]
    fn bootstrap_of_identical_signal_is_one_and_deterministic() {
        let values = vec![3.0, 9.0, 4.0, 25.0, 11.0, 7.0, 18.0, 2.0];
        let d = Dataset::new(
            (1..=8).map(|i| format!("P{i}")).collect(),
            vec![Column::numeric("x", values.clone())],
            values,
        )
        .unwrap();
        let cfg = RngConfig::new(42);
        let (tau, dist) = bootstrap_corr(&d, &["x".into()], 200, DeltaMode::Literal, &cfg).unwrap();
        assert_eq!(dist.len(), 200);
        assert!(dist.iter().all(|&v| v == 1.0 || v == 0.0));
        assert!(tau > 0.99, "tau_r = {tau}");

        let (tau2, dist2) =
            bootstrap_corr(&d, &["x".into()], 200, DeltaMode::Literal, &cfg).unwrap();
        assert_eq!(tau, tau2);
        assert_eq!(dist, dist2);
    }

    #[test]
    fn bootstrap_seed_changes_the_distribution() {
        let d = Dataset::new(
            (1..=8).map(|i| format!("P{i}")).collect(),
            vec![Column::numeric(
                "x",
                vec![3.0, 9.0, 4.0, 25.0, 11.0, 7.0, 18.0, 2.0],
            )],
            vec![12.0, 30.0, 90.0, 70.0, 40.0, 22.0, 55.0, 16.0],
        )
        .unwrap();
        let (_, dist_a) =
            bootstrap_corr(&d, &["x".into()], 100, DeltaMode::Literal, &RngConfig::new(42))
                .unwrap();
        let (_, dist_b) =
            bootstrap_corr(&d, &["x".into()], 100, DeltaMode::Literal, &RngConfig::new(1234))
                .unwrap();
        assert_ne!(dist_a, dist_b);
    }

    #[test]
    fn quantile_interpolates_between_order_statistics() {
        let sorted: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_abs_diff_eq!(empirical_quantile(&sorted, 0.025), 3.475, epsilon = 1e-12);
        assert_abs_diff_eq!(empirical_quantile(&sorted, 0.975), 97.525, epsilon = 1e-12);
        assert_eq!(empirical_quantile(&sorted, 0.0), 1.0);
        assert_eq!(empirical_quantile(&sorted, 1.0), 100.0);
        assert_eq!(empirical_quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn bca_reduces_to_percentile_when_unbiased_and_symmetric() {
        // 0.5 of the mass at or below theta_hat makes z0 exactly 0, and a
        // symmetric jackknife zeroes the acceleration
        let boot: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
        let theta_hat = empirical_quantile(&boot, 0.5);
        let jack = vec![0.4, 0.5, 0.6, 0.45, 0.55];
        let ci = bca_interval(&boot, theta_hat, &jack, 0.05).unwrap();
        assert_abs_diff_eq!(ci.z0, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.accel, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.lcl, empirical_quantile(&boot, 0.025), epsilon = 1e-9);
        assert_abs_diff_eq!(ci.ucl, empirical_quantile(&boot, 0.975), epsilon = 1e-9);
    }

    #[test]
    fn bca_bias_correction_matches_the_definition() {
        // skewed distribution: z0 must equal the normal quantile of the
        // fraction of replicates at or below the point estimate
        let boot: Vec<f64> = (0..500).map(|i| (i as f64 / 499.0).powi(3)).collect();
        let theta_hat = 0.2;
        let below = boot.iter().filter(|&&v| v <= theta_hat).count() as f64;
        let expected_z0 = std_normal().inverse_cdf(below / 500.0);
        let ci = bca_interval(&boot, theta_hat, &[0.1, 0.2, 0.3, 0.5], 0.05).unwrap();
        assert_abs_diff_eq!(ci.z0, expected_z0, epsilon = 1e-12);
        assert!(ci.lcl <= ci.ucl);
    }

    #[test]
    fn bca_degenerate_distribution_collapses() {
        let boot = vec![0.7; 50];
        let ci = bca_interval(&boot, 0.7, &[0.7, 0.7, 0.7], 0.05).unwrap();
        assert_eq!(ci.lcl, 0.7);
        assert_eq!(ci.ucl, 0.7);
        assert_eq!(ci.z0, 0.0);
        assert_eq!(ci.accel, 0.0);
    }

    #[test]
    fn bca_rejects_bad_inputs() {
        assert!(bca_interval(&[], 0.0, &[], 0.05).is_err());
        assert!(bca_interval(&[0.1, 0.2], 0.1, &[], 0.0).is_err());
        assert!(bca_interval(&[0.1, 0.2], 0.1, &[], 1.0).is_err());
    }

    #[test]
    fn wilcoxon_matches_normal_approximation() {
        let t = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.rank_sum, 6.0);
        // z = (6 - 10.5 + 0.5) / sqrt(5.25)
        assert_abs_diff_eq!(t.z, -4.0 / 5.25_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_value, 0.08086, epsilon = 5e-4);
        // the exact two-sided p for this configuration is 0.1; the normal
        // approximation should land nearby
        assert!((t.p_value - 0.1).abs() < 0.05);
    }

    #[test]
    fn wilcoxon_identical_samples_accept() {
        let t = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert_eq!(t.z, 0.0);
        let t = wilcoxon_rank_sum(&[5.0; 4], &[5.0; 6]).unwrap();
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_is_symmetric_in_its_arguments() {
        let a = [0.3, 0.9, 1.4, 0.2];
        let b = [0.5, 0.8, 2.0];
        let ab = wilcoxon_rank_sum(&a, &b).unwrap();
        let ba = wilcoxon_rank_sum(&b, &a).unwrap();
        assert_abs_diff_eq!(ab.p_value, ba.p_value, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.z, -ba.z, epsilon = 1e-12);
        assert!(wilcoxon_rank_sum(&[], &b).is_err());
    }
}
