//! A five-project dataset small enough to verify by hand: build one
//! similarity matrix from an attribute, another from actual effort, rank
//! each row, and measure how well the two rankings agree.

use ebaplus::dataset::{Column, Dataset};
use ebaplus::kendall::{midrank_descending, rowwise_kendall};
use ebaplus::similarity::{
    effort_similarity_matrix, DeltaMode, MatrixBasis, SimilarityMatrix,
};

fn print_matrix(label: &str, m: &SimilarityMatrix) {
    println!("{label}:");
    for i in 0..m.n() {
        let row: Vec<String> = (0..m.n()).map(|j| format!("{:5.2}", m.get(i, j))).collect();
        println!("  [{}]", row.join(" "));
    }
}

fn print_row_ranks(label: &str, m: &SimilarityMatrix) {
    println!("{label} (each row ranked without its diagonal, largest first):");
    for i in 0..m.n() {
        let ranks = midrank_descending(&m.row_excluding_diagonal(i));
        let row: Vec<String> = ranks.iter().map(|r| format!("{r:3.0}")).collect();
        println!("  row {}: [{}]", i + 1, row.join(" "));
    }
}

fn main() -> ebaplus::Result<()> {
    // Five projects whose only known attribute already mirrors how close
    // their efforts turned out to be.
    let x = SimilarityMatrix::from_values(
        5,
        vec![
            1.0, 0.80, 0.53, 0.67, 0.47, //
            0.80, 1.0, 0.33, 0.47, 0.67, //
            0.53, 0.33, 1.0, 0.87, 0.0, //
            0.67, 0.47, 0.87, 1.0, 0.13, //
            0.47, 0.67, 0.0, 0.13, 1.0,
        ],
        MatrixBasis::Attributes(vec!["x".into()]),
    )?;

    // The effort side is not typed in: it falls out of the actual efforts.
    let dataset = Dataset::new(
        (1..=5).map(|i| format!("P{i}")).collect(),
        vec![Column::numeric("x", vec![0.0; 5])],
        vec![41.0, 34.0, 110.0, 81.0, 10.0],
    )?;
    let y = effort_similarity_matrix(&dataset, DeltaMode::Literal)?;

    print_matrix("similarity by attribute X", &x);
    print_matrix("similarity by actual effort", &y);
    print_row_ranks("ranks of X", &x);
    print_row_ranks("ranks of effort", &y);

    let corr = rowwise_kendall(&x, &y)?;
    println!(
        "row-wise rank correlation: {:+.4} ({} / sqrt({} * {}))",
        corr.value, corr.numerator, corr.denom_x, corr.denom_y
    );

    // A yes/no attribute that groups projects without tracking effort at
    // all: every concordant pair is cancelled by a discordant one.
    let z = SimilarityMatrix::from_values(
        5,
        vec![
            1.0, 1.0, 0.0, 0.0, 0.0, //
            1.0, 1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 1.0, //
            0.0, 0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 1.0,
        ],
        MatrixBasis::Attributes(vec!["z".into()]),
    )?;
    let corr_z = rowwise_kendall(&z, &y)?;
    println!(
        "binary attribute Z against effort: {:+.4} (numerator {})",
        corr_z.value, corr_z.numerator
    );
    Ok(())
}
