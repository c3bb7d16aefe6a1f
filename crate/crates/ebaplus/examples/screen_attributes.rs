//! Stage one of the assessment: score every attribute on its own. Each
//! gets a permutation p-value and a bootstrap confidence interval, and only
//! attributes that clear the significance bar move on.

use ebaplus::dataset::{Column, Dataset};
use ebaplus::pipeline::stage1_screen;
use ebaplus::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ebaplus::Result<()> {
    let n = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let size: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let complexity: Vec<f64> = size.iter().map(|s| s * 1.5 + rng.gen_range(-6.0..6.0)).collect();
    let office_floor: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..9.0)).collect();
    let effort: Vec<f64> = size.iter().map(|s| 4.0 * s + rng.gen_range(-3.0..3.0)).collect();
    let dataset = Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![
            Column::numeric("size", size),
            Column::numeric("complexity", complexity),
            Column::numeric("office_floor", office_floor),
        ],
        effort,
    )?;

    let cfg = RunConfig {
        n_perm: 1000,
        n_boot: 1000,
        ..RunConfig::default()
    };
    let reports = stage1_screen(&dataset, &cfg)?;

    println!("{:13} {:>8} {:>8} {:>18} {:>6}", "attribute", "tau_r", "p", "95% interval", "keep");
    for r in &reports {
        println!(
            "{:13} {:+8.4} {:8.4} [{:+7.4}, {:+7.4}] {:>6}",
            r.name,
            r.tau_r,
            r.p_value,
            r.lcl,
            r.ucl,
            if r.significant { "yes" } else { "no" }
        );
    }
    // Reports come back sorted by tau_r, so the survivors sit on top in the
    // order stage two will try them.
    Ok(())
}
