//! Attribute selection two ways: the exhaustive search that tries every
//! subset and scores each by cross-validated accuracy, and a rank-sum test
//! to judge whether the winner actually beats using everything.

use ebaplus::estimator::{brute_force_select, jackknife_validate};
use ebaplus::dataset::{Column, Dataset};
use ebaplus::resampling::{wilcoxon_rank_sum, RngConfig};
use ebaplus::similarity::DeltaMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ebaplus::Result<()> {
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let size: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let ticket_id: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..9000.0)).collect();
    let weekday: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..7.0)).collect();
    let effort: Vec<f64> = size.iter().map(|s| 5.0 * s + rng.gen_range(-2.0..2.0)).collect();
    let dataset = Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![
            Column::numeric("size", size),
            Column::numeric("ticket_id", ticket_id),
            Column::numeric("weekday", weekday),
        ],
        effort,
    )?;
    let mode = DeltaMode::Literal;

    let outcome = brute_force_select(&dataset, mode, None, &RngConfig::new(42))?;
    println!(
        "best of {} evaluated subsets: {:?} with mmre {:.3}",
        outcome.evaluated, outcome.selected, outcome.result.mmre
    );

    let everything = jackknife_validate(&dataset, &dataset.attribute_names(), mode)?;
    println!("all attributes together: mmre {:.3}", everything.mmre);

    let best_residuals: Vec<f64> = outcome
        .result
        .records
        .iter()
        .map(|r| (r.actual - r.predicted).abs())
        .collect();
    let all_residuals: Vec<f64> = everything
        .records
        .iter()
        .map(|r| (r.actual - r.predicted).abs())
        .collect();
    let test = wilcoxon_rank_sum(&best_residuals, &all_residuals)?;
    println!(
        "rank-sum test on absolute residuals: z {:+.3}, p {:.4}{}",
        test.z,
        test.p_value,
        if test.p_value < 0.05 {
            "  (the selected subset is a real improvement)"
        } else {
            "  (no meaningful difference)"
        }
    );
    Ok(())
}
