//! Once a dataset passes the assessment, estimation itself is plain: find
//! the most similar completed project and take its effort. This example
//! predicts one new project, then measures the estimator honestly by
//! holding out every project in turn.

use ebaplus::dataset::{Column, Dataset};
use ebaplus::estimator::{jackknife_validate, kfold_validate, predict_closest, Case};
use ebaplus::resampling::RngConfig;
use ebaplus::similarity::DeltaMode;

fn main() -> ebaplus::Result<()> {
    let dataset = Dataset::new(
        (1..=8).map(|i| format!("P{i}")).collect(),
        vec![
            Column::numeric("kloc", vec![12.0, 15.0, 40.0, 44.0, 90.0, 95.0, 150.0, 160.0]),
            Column::categorical(
                "lang",
                vec!["c", "c", "java", "java", "java", "java", "cobol", "cobol"],
            ),
        ],
        vec![100.0, 120.0, 350.0, 380.0, 900.0, 950.0, 2000.0, 2100.0],
    )?;
    let attrs = dataset.attribute_names();
    let mode = DeltaMode::Literal;

    let target = Case::new("incoming")
        .with_numeric("kloc", 42.0)
        .with_categorical("lang", "java");
    let prediction = predict_closest(&dataset, &target, &attrs, mode)?;
    println!(
        "closest analog(s) {:?} at similarity {:.3} -> predicted effort {:.0}",
        prediction.analog_ids, prediction.similarity, prediction.predicted_effort
    );

    let jack = jackknife_validate(&dataset, &attrs, mode)?;
    println!(
        "\nleave-one-out: mmre {:.3}, mdmre {:.3}, pred25 {:.1}%",
        jack.mmre, jack.mdmre, jack.pred25
    );
    for r in &jack.records {
        println!(
            "  {:4} actual {:6.0}  predicted {:6.0}  error {:5.1}%",
            r.id,
            r.actual,
            r.predicted,
            r.mre * 100.0
        );
    }

    // With k equal to the project count, k-fold is the jackknife.
    let folds = kfold_validate(&dataset, &attrs, dataset.n_projects(), mode, &RngConfig::new(42))?;
    println!(
        "\nk-fold with k = n matches leave-one-out: {}",
        folds.records == jack.records
    );
    Ok(())
}
