//! The whole assessment in one call: screen attributes, greedily combine
//! the significant ones while the confidence interval keeps tightening,
//! then drop projects whose own row of the similarity matrix disagrees
//! with everyone else's effort ranking.

use ebaplus::dataset::{Column, Dataset};
use ebaplus::pipeline::run_ebaplus;
use ebaplus::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ebaplus::Result<()> {
    let n = 18;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let size: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let vendor: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..50.0)).collect();
    let mut effort: Vec<f64> = size.iter().map(|s| 2.0 * s + rng.gen_range(-0.4..0.4)).collect();
    // One project logged a fraction of the effort its size implies,
    // perhaps a migration billed elsewhere. It should be flagged.
    effort[n - 1] = 1.0;

    let dataset = Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![Column::numeric("size", size), Column::numeric("vendor", vendor)],
        effort,
    )?;

    let cfg = RunConfig::default();
    let verdict = run_ebaplus(&dataset, &cfg)?;

    println!("reliable for analogy: {}", verdict.reliable);
    println!("selected attributes:  {:?}", verdict.selected_attrs);
    println!("removed projects:     {:?}", verdict.removed_projects);
    if let Some(tau) = verdict.final_tau_r {
        println!("final correlation:    {tau:+.4}");
    }

    println!("\nscreening detail:");
    for r in &verdict.stage1 {
        println!(
            "  {:8} tau_r {:+.4}  p {:.4}  significant {}",
            r.name, r.tau_r, r.p_value, r.significant
        );
    }

    println!("\nper-project agreement after selection:");
    for s in &verdict.stage3 {
        println!(
            "  {:4} row corr {:+.4}  p {:.4}{}",
            s.id,
            s.row_corr,
            s.p_value,
            if verdict.removed_projects.contains(&s.id) {
                "  <- removed"
            } else {
                ""
            }
        );
    }
    Ok(())
}
