//! Datasets usually arrive as a CSV plus a small JSON schema naming the
//! effort column, the id column, and which attributes are numeric or
//! categorical. Blank cells, "NA", and "?" count as missing, and projects
//! with missing cells are set aside before any analysis.

use ebaplus::cli::fingerprint;
use ebaplus::dataset::{drop_missing, parse_dataset_csv, Schema};

const CSV: &str = "\
id,kloc,team,lang,effort
alpha,12,3,c,100
bravo,15,NA,c,120
charlie,40,6,java,350
delta,44,6,java,?
echo,90,9,java,900
foxtrot,95,9,java,950
golf,150,14,cobol,2000
";

const SCHEMA: &str = r#"{
    "effort": "effort",
    "id": "id",
    "numeric": ["kloc", "team"],
    "categorical": ["lang"]
}"#;

fn main() -> ebaplus::Result<()> {
    let schema = Schema::from_json_str(SCHEMA)?;
    let raw = parse_dataset_csv(CSV, &schema)?;
    println!(
        "loaded {} projects, {} attributes, {} missing cells",
        raw.n_projects(),
        raw.columns().len(),
        raw.missing_cell_count()
    );

    let fp = fingerprint(&raw);
    println!("fingerprint: {} rows, sha256 {}...", fp.rows, &fp.sha256[..16]);

    let (clean, dropped) = drop_missing(&raw)?;
    println!("dropped for missing cells: {dropped:?}");
    println!("remaining ids: {:?}", clean.ids());

    // The canonical CSV rendering round-trips, which is what makes the
    // fingerprint meaningful.
    let again = parse_dataset_csv(&clean.to_csv_string(), &schema)?;
    println!(
        "canonical form round-trips: {}",
        again.to_csv_string() == clean.to_csv_string()
    );
    Ok(())
}
