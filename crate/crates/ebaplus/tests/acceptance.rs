//! The acceptance gate: one test per criterion the crate must satisfy,
//! each printing a single pass/fail line (visible with `--nocapture`).
//! Tolerances are stated inline next to each assertion.

use std::time::Instant;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use ebaplus::dataset::{Column, Dataset};
use ebaplus::estimator::{jackknife_validate, kfold_validate};
use ebaplus::kendall::{midrank_descending, rowwise_kendall, rowwise_kendall_reference};
use ebaplus::metrics::summarize;
use ebaplus::pipeline::run_ebaplus;
use ebaplus::resampling::{bca_interval, empirical_quantile, permutation_test, RngConfig};
use ebaplus::similarity::{DeltaMode, MatrixBasis, SimilarityMatrix};
use ebaplus::RunConfig;

fn report(criterion: u32, what: &str, failures: Vec<String>) {
    let pass = failures.is_empty();
    println!(
        "criterion {criterion} ({what}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {}", failures.join("; "));
}

fn check(failures: &mut Vec<String>, ok: bool, detail: impl Fn() -> String) {
    if !ok {
        failures.push(detail());
    }
}

fn matrix(values: Vec<f64>) -> SimilarityMatrix {
    let n = (values.len() as f64).sqrt() as usize;
    SimilarityMatrix::from_values(n, values, MatrixBasis::Attributes(vec!["t".into()])).unwrap()
}

/// The five-project attribute matrix checked by hand.
fn five_by_attribute() -> SimilarityMatrix {
    matrix(vec![
        1.0, 0.80, 0.53, 0.67, 0.47, //
        0.80, 1.0, 0.33, 0.47, 0.67, //
        0.53, 0.33, 1.0, 0.87, 0.0, //
        0.67, 0.47, 0.87, 1.0, 0.13, //
        0.47, 0.67, 0.0, 0.13, 1.0,
    ])
}

/// The matching effort matrix.
fn five_by_effort() -> SimilarityMatrix {
    matrix(vec![
        1.0, 0.93, 0.31, 0.60, 0.69, //
        0.93, 1.0, 0.24, 0.53, 0.76, //
        0.31, 0.24, 1.0, 0.71, 0.0, //
        0.60, 0.53, 0.71, 1.0, 0.29, //
        0.69, 0.76, 0.0, 0.29, 1.0,
    ])
}

/// The binary-attribute matrix that should show no association.
fn five_by_binary() -> SimilarityMatrix {
    matrix(vec![
        1.0, 1.0, 0.0, 0.0, 0.0, //
        1.0, 1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, 1.0, //
        0.0, 0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, 1.0,
    ])
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> SimilarityMatrix {
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            // A coarse grid keeps ties frequent.
            let v = rng.gen_range(0..=10) as f64 / 10.0;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    matrix(values)
}

#[test]
fn criterion_1_worked_matrices() {
    let mut failures = Vec::new();
    let corr = rowwise_kendall(&five_by_attribute(), &five_by_effort()).unwrap();
    check(&mut failures, (corr.value - 0.8667).abs() <= 1e-4, || {
        format!("attribute-vs-effort correlation {} not within 1e-4 of +0.8667", corr.value)
    });
    let zero = rowwise_kendall(&five_by_binary(), &five_by_effort()).unwrap();
    check(&mut failures, zero.value == 0.0, || {
        format!("binary-vs-effort correlation {} is not exactly 0", zero.value)
    });
    check(&mut failures, zero.numerator == 0, || {
        format!("binary-vs-effort numerator {} is not the integer 0", zero.numerator)
    });
    report(1, "worked five-project matrices", failures);
}

#[test]
fn criterion_2_row_rank_tables() {
    let mut failures = Vec::new();
    let expect_x = [
        vec![1.0, 3.0, 2.0, 4.0],
        vec![1.0, 4.0, 3.0, 2.0],
        vec![2.0, 3.0, 1.0, 4.0],
        vec![2.0, 3.0, 1.0, 4.0],
        vec![2.0, 1.0, 4.0, 3.0],
    ];
    let expect_y = [
        vec![1.0, 4.0, 3.0, 2.0],
        vec![1.0, 4.0, 3.0, 2.0],
        vec![2.0, 3.0, 1.0, 4.0],
        vec![2.0, 3.0, 1.0, 4.0],
        vec![2.0, 1.0, 4.0, 3.0],
    ];
    for (label, m, expect) in [
        ("attribute", five_by_attribute(), &expect_x),
        ("effort", five_by_effort(), &expect_y),
    ] {
        for (i, want) in expect.iter().enumerate() {
            let got = midrank_descending(&m.row_excluding_diagonal(i));
            check(&mut failures, got == *want, || {
                format!("{label} row {} ranks {got:?}, expected {want:?}", i + 1)
            });
        }
    }
    let tied = midrank_descending(&[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    check(
        &mut failures,
        tied == vec![3.0, 7.0, 3.0, 7.0, 3.0, 3.0, 7.0, 3.0],
        || format!("tied binary ranks {tied:?}, expected ones -> 3 and zeros -> 7"),
    );
    let continuous = midrank_descending(&[0.5, 0.3, 0.7, 0.0, 0.9, 0.1, 0.4, 0.6]);
    check(
        &mut failures,
        continuous == vec![4.0, 6.0, 2.0, 8.0, 1.0, 7.0, 5.0, 3.0],
        || format!("continuous ranks {continuous:?} do not match the hand ranking"),
    );
    report(2, "row-rank and mid-rank tables", failures);
}

#[test]
fn criterion_3_optimized_matches_reference() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for pair in 0..200 {
        let n = rng.gen_range(4..=8);
        let x = random_matrix(&mut rng, n);
        let y = random_matrix(&mut rng, n);
        let fast = rowwise_kendall(&x, &y).unwrap();
        let slow = rowwise_kendall_reference(&x, &y).unwrap();
        check(&mut failures, fast == slow, || {
            format!("pair {pair} (n {n}): optimized {fast:?} != reference {slow:?}")
        });
    }
    let elapsed = start.elapsed();
    check(&mut failures, elapsed.as_secs() < 60, || {
        format!("200 comparisons took {elapsed:?}, budget is one minute")
    });
    report(3, "optimized correlation equals the literal sum", failures);
}

#[test]
fn criterion_4_monte_carlo_matches_enumeration() {
    let mut failures = Vec::new();
    let n_perm = 5000;
    for instance in 0..20u64 {
        let n = if instance % 2 == 0 { 4 } else { 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + instance);
        let x = random_matrix(&mut rng, n);
        let y = random_matrix(&mut rng, n);
        let observed = rowwise_kendall(&x, &y).unwrap().value;

        let total = (1..=n).product::<usize>();
        let hits_exact = (0..n)
            .permutations(n)
            .filter(|perm| {
                let permuted = y.permuted(perm).unwrap();
                rowwise_kendall(&x, &permuted).unwrap().value >= observed
            })
            .count();
        let p_exact = hits_exact as f64 / total as f64;

        let p_mc = permutation_test(&x, &y, observed, n_perm, &RngConfig::new(instance)).unwrap();
        let mc_rate = (p_mc * (n_perm as f64 + 1.0) - 1.0) / n_perm as f64;

        let se = (p_exact * (1.0 - p_exact) / n_perm as f64).sqrt();
        let tolerance = 3.0 * se + 1e-12;
        check(&mut failures, (mc_rate - p_exact).abs() <= tolerance, || {
            format!(
                "instance {instance} (n {n}): sampled rate {mc_rate:.5} vs exact {p_exact:.5} \
                 over {total} permutations, tolerance {tolerance:.5}"
            )
        });
    }
    report(4, "permutation p-values match exhaustive enumeration", failures);
}

#[test]
fn criterion_5_bca_reductions() {
    let mut failures = Vec::new();

    // Half the replicates at or below the point estimate forces z0 = 0; a
    // jackknife symmetric in exactly representable steps cancels the cubed
    // deviations, forcing the acceleration to 0. The interval must then
    // equal the raw percentile interval exactly.
    let boot: Vec<f64> = (1..=1000).map(|i| i as f64 / 1000.0).collect();
    let jack = vec![0.25, 0.5, 0.75];
    let interval = bca_interval(&boot, 0.5, &jack, 0.05).unwrap();
    check(&mut failures, interval.z0 == 0.0 && interval.accel == 0.0, || {
        format!("corrections not forced to zero: z0 {}, accel {}", interval.z0, interval.accel)
    });
    let mut sorted = boot.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = empirical_quantile(&sorted, 0.025);
    let hi = empirical_quantile(&sorted, 0.975);
    check(&mut failures, interval.lcl == lo && interval.ucl == hi, || {
        format!(
            "interval [{}, {}] differs from percentile [{lo}, {hi}]",
            interval.lcl, interval.ucl
        )
    });

    // A right-skewed distribution: the bias constant must match its
    // definition, the normal quantile of the share at or below the point
    // estimate, within 1e-12.
    let b = 999;
    let skewed: Vec<f64> = (1..=b).map(|i| (i as f64 / b as f64).powi(3)).collect();
    let theta_hat = 0.3;
    let jack = vec![0.25, 0.3, 0.35, 0.28, 0.32];
    let interval = bca_interval(&skewed, theta_hat, &jack, 0.05).unwrap();
    let share = skewed.iter().filter(|v| **v <= theta_hat).count() as f64 / b as f64;
    let expected_z0 = Normal::new(0.0, 1.0).unwrap().inverse_cdf(share);
    check(&mut failures, (interval.z0 - expected_z0).abs() <= 1e-12, || {
        format!("z0 {} vs definition {expected_z0} (share {share})", interval.z0)
    });

    report(5, "bias-corrected interval reduces to its definitions", failures);
}

/// Thirty projects where effort tracks attribute `a`, attributes `b` and
/// `c` are unrelated noise, and the last project's effort contradicts its
/// size. One seed, fixed forever.
fn planted_thirty() -> Dataset {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(90210);
    let a: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
    let mut effort: Vec<f64> = a.iter().map(|v| 2.0 * v + rng.gen_range(-0.4..0.4)).collect();
    effort[n - 1] = 2.0;
    Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![
            Column::numeric("a", a),
            Column::numeric("b", b),
            Column::numeric("c", c),
        ],
        effort,
    )
    .unwrap()
}

fn noise_thirty() -> Dataset {
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let make = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
    let a: Vec<f64> = make(&mut rng);
    let b: Vec<f64> = make(&mut rng);
    let c: Vec<f64> = make(&mut rng);
    let effort: Vec<f64> = (0..n).map(|_| rng.gen_range(10.0..100.0)).collect();
    Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![
            Column::numeric("a", a),
            Column::numeric("b", b),
            Column::numeric("c", c),
        ],
        effort,
    )
    .unwrap()
}

#[test]
fn criterion_6_pipeline_on_planted_structure() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let cfg = RunConfig {
        n_perm: 1000,
        n_boot: 1000,
        alpha: 0.05,
        seed: 42,
        ..RunConfig::default()
    };

    let verdict = run_ebaplus(&planted_thirty(), &cfg).unwrap();
    let significant: Vec<&str> = verdict
        .stage1
        .iter()
        .filter(|r| r.significant)
        .map(|r| r.name.as_str())
        .collect();
    check(&mut failures, significant == vec!["a"], || {
        format!("screening kept {significant:?}, expected only the planted signal `a`")
    });
    check(&mut failures, verdict.selected_attrs == vec!["a".to_string()], || {
        format!("selection produced {:?}, expected [a]", verdict.selected_attrs)
    });
    check(&mut failures, verdict.removed_projects.contains(&"P30".to_string()), || {
        format!(
            "stage 3 removed {:?}, which misses the planted abnormal project P30",
            verdict.removed_projects
        )
    });
    check(&mut failures, verdict.reliable, || {
        "planted-structure dataset was judged unreliable".into()
    });

    let noise = run_ebaplus(&noise_thirty(), &cfg).unwrap();
    check(&mut failures, !noise.reliable, || {
        format!(
            "pure-noise dataset was judged reliable (screening kept {:?})",
            noise
                .stage1
                .iter()
                .filter(|r| r.significant)
                .map(|r| r.name.as_str())
                .collect::<Vec<_>>()
        )
    });

    let elapsed = start.elapsed();
    check(&mut failures, elapsed.as_secs() < 120, || {
        format!("both assessments took {elapsed:?}, budget is two minutes")
    });
    report(6, "pipeline verdicts on planted structure and noise", failures);
}

#[test]
fn criterion_7_estimator_and_metrics() {
    let mut failures = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let n = 9;
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..50.0)).collect();
    let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..9.0)).collect();
    let efforts: Vec<f64> = values.iter().map(|v| 10.0 + 3.0 * v).collect();
    let dataset = Dataset::new(
        (1..=n).map(|i| format!("P{i}")).collect(),
        vec![Column::numeric("v", values), Column::numeric("w", noise)],
        efforts,
    )
    .unwrap();
    let attrs = dataset.attribute_names();
    let jack = jackknife_validate(&dataset, &attrs, DeltaMode::Literal).unwrap();
    let folds = kfold_validate(&dataset, &attrs, n, DeltaMode::Literal, &RngConfig::new(42)).unwrap();
    check(&mut failures, folds.records == jack.records, || {
        "k-fold with k = n disagrees with leave-one-out per project".into()
    });

    // Twin projects: every held-out project has an identical partner, so
    // the estimator must be exact.
    let twins = Dataset::new(
        (1..=6).map(|i| format!("T{i}")).collect(),
        vec![Column::numeric("size", vec![5.0, 5.0, 20.0, 20.0, 60.0, 60.0])],
        vec![50.0, 50.0, 200.0, 200.0, 600.0, 600.0],
    )
    .unwrap();
    let exact = jackknife_validate(&twins, &twins.attribute_names(), DeltaMode::Literal).unwrap();
    check(&mut failures, exact.mmre == 0.0 && exact.pred25 == 100.0, || {
        format!("twin dataset gave mmre {} and pred25 {}", exact.mmre, exact.pred25)
    });

    let summary = summarize(&[0.1, 0.3, 0.2, 0.5]).unwrap();
    check(
        &mut failures,
        summary.mmre == 0.275 && summary.mdmre == 0.25 && summary.pred25 == 50.0,
        || format!("summary ({}, {}, {})", summary.mmre, summary.mdmre, summary.pred25),
    );
    report(7, "estimator identities and metric arithmetic", failures);
}

fn strip_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|line| !line.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_8_reports_are_thread_independent() {
    let mut failures = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let schema = dir.path().join("s.json");
    let mut csv = String::from("id,a,b,effort\n");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 1..=16 {
        csv.push_str(&format!(
            "P{i},{i},{:.1},{:.2}\n",
            rng.gen_range(0.0..50.0),
            2.0 * i as f64 + rng.gen_range(-0.3..0.3)
        ));
    }
    std::fs::write(&data, csv).unwrap();
    std::fs::write(
        &schema,
        r#"{"effort": "effort", "id": "id", "numeric": ["a", "b"], "categorical": []}"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("out{threads}"));
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ebaplus"))
            .args(["run", "--data"])
            .arg(&data)
            .arg("--schema")
            .arg(&schema)
            .args(["--nperm", "400", "--nboot", "400", "--seed", "42", "--threads", threads])
            .arg("--out")
            .arg(&out)
            .stderr(std::process::Stdio::null())
            .status()
            .unwrap();
        check(&mut failures, status.code() == Some(0), || {
            format!("run with --threads {threads} exited with {:?}", status.code())
        });
        outputs.push((
            std::fs::read_to_string(out.join("report.json")).unwrap(),
            std::fs::read_to_string(out.join("reduced.csv")).unwrap(),
        ));
    }
    check(
        &mut failures,
        strip_timestamp(&outputs[0].0) == strip_timestamp(&outputs[1].0),
        || "reports differ across thread counts".into(),
    );
    check(&mut failures, outputs[0].1 == outputs[1].1, || {
        "reduced datasets differ across thread counts".into()
    });
    report(8, "reports are byte-stable across thread counts", failures);
}

#[test]
fn criterion_9_directional_checks_on_published_datasets() {
    let Ok(dir) = std::env::var("EBAPLUS_PROMISE_DIR") else {
        println!(
            "criterion 9 (directional checks on published datasets): SKIPPED \
             (set EBAPLUS_PROMISE_DIR to a directory with maxwell.csv and maxwell.schema.json)"
        );
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let data = dir.join("maxwell.csv");
    let schema_path = dir.join("maxwell.schema.json");
    if !data.exists() || !schema_path.exists() {
        println!(
            "criterion 9 (directional checks on published datasets): SKIPPED \
             ({} or {} not found)",
            data.display(),
            schema_path.display()
        );
        return;
    }

    let mut failures = Vec::new();
    let schema = ebaplus::dataset::Schema::from_file(&schema_path).unwrap();
    let raw = ebaplus::dataset::load_dataset(&data, &schema).unwrap();
    let (clean, _) = ebaplus::dataset::drop_missing(&raw).unwrap();
    let cfg = RunConfig::default();
    let verdict = run_ebaplus(&clean, &cfg).unwrap();

    let top = verdict.stage1.first().map(|r| r.name.to_lowercase());
    check(
        &mut failures,
        top.as_deref().is_some_and(|name| name.contains("size")),
        || format!("top screened attribute is {top:?}, expected a size measure"),
    );

    if verdict.reliable {
        let keep: Vec<usize> = (0..clean.n_projects())
            .filter(|&i| !verdict.removed_projects.contains(&clean.ids()[i]))
            .collect();
        let reduced = clean.select_rows(&keep);
        let selected =
            jackknife_validate(&reduced, &verdict.selected_attrs, cfg.delta_mode).unwrap();
        let everything =
            jackknife_validate(&clean, &clean.attribute_names(), cfg.delta_mode).unwrap();
        check(&mut failures, selected.mmre <= everything.mmre, || {
            format!(
                "selected attributes mmre {} worse than all attributes {}",
                selected.mmre, everything.mmre
            )
        });

        let search = ebaplus::estimator::brute_force_select(
            &clean,
            cfg.delta_mode,
            Some(2000),
            &RngConfig::new(cfg.seed),
        )
        .unwrap();
        let ours: Vec<f64> = selected
            .records
            .iter()
            .map(|r| (r.actual - r.predicted).abs())
            .collect();
        let theirs: Vec<f64> = search
            .result
            .records
            .iter()
            .map(|r| (r.actual - r.predicted).abs())
            .collect();
        let test = ebaplus::resampling::wilcoxon_rank_sum(&ours, &theirs).unwrap();
        check(&mut failures, test.p_value >= 0.05, || {
            format!(
                "residuals differ from the exhaustive baseline (p {})",
                test.p_value
            )
        });
    } else {
        failures.push("published dataset judged unreliable end to end".into());
    }
    report(9, "directional checks on published datasets", failures);
}
