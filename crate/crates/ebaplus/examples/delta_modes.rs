//! How project similarity is computed from raw attributes: numeric columns
//! are range-normalized (literally or squared), categorical columns match
//! or they do not, and a constant column says nothing about anyone.

use ebaplus::dataset::{Column, Dataset};
use ebaplus::similarity::{similarity_matrix, DeltaMode};

fn main() -> ebaplus::Result<()> {
    let dataset = Dataset::new(
        vec!["P1".into(), "P2".into(), "P3".into(), "P4".into()],
        vec![
            Column::numeric("kloc", vec![10.0, 12.0, 90.0, 100.0]),
            Column::numeric("team", vec![3.0, 3.0, 9.0, 10.0]),
            Column::categorical("lang", vec!["c", "c", "java", "java"]),
            Column::numeric("platform", vec![1.0, 1.0, 1.0, 1.0]),
        ],
        vec![120.0, 140.0, 900.0, 1000.0],
    )?;

    let attrs = dataset.attribute_names();
    for mode in [DeltaMode::Literal, DeltaMode::SquaredNormalized] {
        let sm = similarity_matrix(&dataset, &attrs, mode)?;
        println!("delta mode {mode}:");
        for i in 0..sm.n() {
            let row: Vec<String> =
                (0..sm.n()).map(|j| format!("{:5.3}", sm.get(i, j))).collect();
            println!("  {}: [{}]", dataset.ids()[i], row.join(" "));
        }
    }

    // The two small C projects end up near each other, the two large Java
    // projects likewise, and the constant platform column never separates
    // anyone. Dropping it changes nothing:
    let without: Vec<String> = attrs.iter().filter(|a| *a != "platform").cloned().collect();
    let a = similarity_matrix(&dataset, &attrs, DeltaMode::Literal)?;
    let b = similarity_matrix(&dataset, &without, DeltaMode::Literal)?;
    let same = a
        .values()
        .iter()
        .zip(b.values())
        .all(|(p, q)| (p - q).abs() < 1e-12);
    println!("matrix unchanged after dropping the constant column: {same}");
    Ok(())
}
