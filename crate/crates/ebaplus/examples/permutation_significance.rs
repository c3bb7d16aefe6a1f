//! A strong correlation on five projects could still be luck. The
//! permutation test asks how often a random relabeling of the projects
//! scores at least as well, and that proportion is the p-value.

use ebaplus::dataset::{Column, Dataset};
use ebaplus::kendall::rowwise_kendall;
use ebaplus::resampling::{permutation_test, RngConfig};
use ebaplus::similarity::{effort_similarity_matrix, similarity_matrix, DeltaMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn demo_dataset(n: usize) -> ebaplus::Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let size: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let shuffle_date: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
    let effort: Vec<f64> = size.iter().map(|s| 2.0 * s + rng.gen_range(-0.4..0.4)).collect();
    Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![
            Column::numeric("size", size),
            Column::numeric("start_day", shuffle_date),
        ],
        effort,
    )
}

fn main() -> ebaplus::Result<()> {
    let dataset = demo_dataset(20)?;
    let effort_sm = effort_similarity_matrix(&dataset, DeltaMode::Literal)?;
    let rng = RngConfig::new(42);

    for name in dataset.attribute_names() {
        let sm = similarity_matrix(&dataset, std::slice::from_ref(&name), DeltaMode::Literal)?;
        let observed = rowwise_kendall(&sm, &effort_sm)?.value;
        let p = permutation_test(&sm, &effort_sm, observed, 2000, &rng)?;
        println!(
            "{name:9}  corr {observed:+.4}  p {p:.4}  ->  {}",
            if p < 0.05 {
                "relates to effort"
            } else {
                "indistinguishable from chance"
            }
        );
    }

    // The same seed gives the same p-values on every run and any number of
    // worker threads, so results can be quoted and reproduced.
    let sm = similarity_matrix(&dataset, &["size".into()], DeltaMode::Literal)?;
    let observed = rowwise_kendall(&sm, &effort_sm)?.value;
    let p1 = permutation_test(&sm, &effort_sm, observed, 2000, &rng)?;
    let p2 = permutation_test(&sm, &effort_sm, observed, 2000, &rng)?;
    println!("repeatable: {}", p1 == p2);
    Ok(())
}
