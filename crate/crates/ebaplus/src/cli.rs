use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::dataset::{drop_missing, load_dataset, Dataset, Schema};
use crate::error::{Error, Result};
use crate::estimator::{brute_force_select, jackknife_validate, kfold_validate, ValidationResult};
use crate::pipeline::{run_ebaplus, stage1_screen};
use crate::resampling::{wilcoxon_rank_sum, RngConfig};

/// Everything ran and the assessed assumption held.
pub const EXIT_OK: i32 = 0;
/// Everything ran but the dataset failed the assessment.
pub const EXIT_ASSUMPTION_VIOLATED: i32 = 1;
/// The command itself failed.
pub const EXIT_ERROR: i32 = 2;

/// Identifies the exact input a report was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub attributes: usize,
    /// SHA-256 of the canonical CSV rendering of the loaded dataset.
    pub sha256: String,
}

pub fn fingerprint(dataset: &Dataset) -> DatasetFingerprint {
    let mut hasher = Sha256::new();
    hasher.update(dataset.to_csv_string().as_bytes());
    DatasetFingerprint {
        rows: dataset.n_projects(),
        attributes: dataset.columns().len(),
        sha256: format!("{:x}", hasher.finalize()),
    }
}

/// Rounds to six significant digits through a scientific-notation
/// round-trip, which also shakes off binary representation noise.
fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("sci notation round-trips")
}

/// Recursively rounds every fractional number in a JSON document to six
/// significant digits. Integers pass through untouched. Keeps reports
/// readable and byte-stable without pretending to more precision than a
/// thousand-replicate resample carries.
pub fn round_json_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let rounded = round_sig6(n.as_f64().expect("checked is_f64"));
                *value = json!(rounded);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json_numbers),
        Value::Object(map) => map.values_mut().for_each(round_json_numbers),
        _ => {}
    }
}

fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_report(report: &mut Value, out: Option<&Path>, file_name: &str) -> Result<()> {
    round_json_numbers(report);
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(dir) => {
            let path = dir.join(file_name);
            write_text(&path, &text)?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn load_inputs(data: &Path, schema_path: &Path) -> Result<(Dataset, Vec<String>, DatasetFingerprint)> {
    let schema = Schema::from_file(schema_path)?;
    let raw = load_dataset(data, &schema)?;
    let fp = fingerprint(&raw);
    let (clean, dropped) = drop_missing(&raw)?;
    eprintln!(
        "loaded {} projects, {} attributes ({} dropped for missing cells)",
        clean.n_projects(),
        clean.columns().len(),
        dropped.len()
    );
    Ok((clean, dropped, fp))
}

/// `assess`: stage-1 screening only. Exit 0 when at least one attribute is
/// significantly associated with effort, 1 otherwise.
pub fn cmd_assess(
    data: &Path,
    schema_path: &Path,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<i32> {
    cfg.validate()?;
    let (clean, dropped, fp) = load_inputs(data, schema_path)?;
    eprintln!("screening {} attributes...", clean.columns().len());
    let stage1 = stage1_screen(&clean, cfg)?;
    let any_significant = stage1.iter().any(|r| r.significant);
    for report in &stage1 {
        eprintln!(
            "  {}: tau_r {:.4}, p {:.4}{}",
            report.name,
            report.tau_r,
            report.p_value,
            if report.significant { " *" } else { "" }
        );
    }
    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": unix_timestamp(),
        "config": cfg,
        "dataset_fingerprint": fp,
        "dropped_missing": dropped,
        "stage1": stage1,
    });
    emit_report(&mut doc, out, "screening.json")?;
    Ok(if any_significant {
        EXIT_OK
    } else {
        EXIT_ASSUMPTION_VIOLATED
    })
}

fn validation_metrics(
    dataset: &Dataset,
    attrs: &[String],
    folds: Option<usize>,
    cfg: &RunConfig,
) -> Result<ValidationResult> {
    match folds {
        Some(k) => kfold_validate(
            dataset,
            attrs,
            k,
            cfg.delta_mode,
            &RngConfig::new(cfg.seed),
        ),
        None => jackknife_validate(dataset, attrs, cfg.delta_mode),
    }
}

fn metrics_json(result: &ValidationResult) -> Value {
    json!({
        "method": result.method,
        "n": result.records.len(),
        "mmre": result.mmre,
        "mdmre": result.mdmre,
        "pred25": result.pred25,
    })
}

/// `run`: the full assessment pipeline plus a validation of whatever it
/// selected. Writes `report.json` and `reduced.csv` under `--out` (or the
/// report to stdout). Exit 0 when the dataset supports analogy, 1 when not.
pub fn cmd_run(
    data: &Path,
    schema_path: &Path,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<i32> {
    cfg.validate()?;
    let (clean, dropped, fp) = load_inputs(data, schema_path)?;
    eprintln!(
        "running assessment (n_perm {}, n_boot {}, alpha {}, seed {})...",
        cfg.n_perm, cfg.n_boot, cfg.alpha, cfg.seed
    );
    let verdict = run_ebaplus(&clean, cfg)?;
    eprintln!(
        "verdict: {}; selected [{}]; removed [{}]",
        if verdict.reliable { "reliable" } else { "not reliable" },
        verdict.selected_attrs.join(", "),
        verdict.removed_projects.join(", ")
    );

    let keep: Vec<usize> = (0..clean.n_projects())
        .filter(|&i| !verdict.removed_projects.contains(&clean.ids()[i]))
        .collect();
    let reduced = clean.select_rows(&keep);

    let metrics = if verdict.reliable {
        let folds = (reduced.n_projects() > 200).then_some(cfg.k);
        let result = validation_metrics(&reduced, &verdict.selected_attrs, folds, cfg)?;
        eprintln!(
            "closest-analogy accuracy on the cleaned dataset: mmre {:.4}, pred25 {:.1}%",
            result.mmre, result.pred25
        );
        metrics_json(&result)
    } else {
        Value::Null
    };

    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": unix_timestamp(),
        "config": cfg,
        "dataset_fingerprint": fp,
        "dropped_missing": dropped,
        "verdict": {
            "reliable": verdict.reliable,
            "final_tau_r": verdict.final_tau_r,
        },
        "selected_attributes": verdict.selected_attrs,
        "removed_projects": verdict.removed_projects,
        "stage1": verdict.stage1,
        "stage2_trace": verdict.stage2.steps,
        "stage3": verdict.stage3,
        "metrics": metrics,
    });
    emit_report(&mut doc, out, "report.json")?;
    if let Some(dir) = out {
        let path = dir.join("reduced.csv");
        reduced.write_csv(&path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(if verdict.reliable {
        EXIT_OK
    } else {
        EXIT_ASSUMPTION_VIOLATED
    })
}

/// Where `validate` gets its attribute list from.
pub enum AttrSource {
    /// Explicit names.
    List(Vec<String>),
    /// The `selected_attributes` of a previous `run` report; its
    /// `removed_projects` are excluded from the dataset as well.
    FromReport(PathBuf),
}

fn residuals_csv(result: &ValidationResult) -> String {
    let mut out = String::from("id,actual,predicted,abs_residual\n");
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id,
            r.actual,
            r.predicted,
            (r.actual - r.predicted).abs()
        ));
    }
    out
}

/// Reads the `abs_residual` column of a residual CSV produced by
/// `validate` or `brute-force`.
pub fn read_residuals(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "abs_residual")
        .ok_or_else(|| Error::MissingColumn("abs_residual".into()))?;
    let mut values = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let token = record.get(col).unwrap_or("");
        let value: f64 = token.trim().parse().map_err(|_| Error::Parse {
            row: index + 1,
            column: "abs_residual".into(),
            token: token.to_string(),
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptyDataset(": no residuals in file"));
    }
    Ok(values)
}

/// `validate`: cross-validates the closest-analogy estimator over the given
/// attributes. Writes `validation.json` and `residuals.csv` under `--out`.
pub fn cmd_validate(
    data: &Path,
    schema_path: &Path,
    attrs: &AttrSource,
    folds: Option<usize>,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<i32> {
    cfg.validate()?;
    let (clean, dropped, fp) = load_inputs(data, schema_path)?;

    let (dataset, attr_names) = match attrs {
        AttrSource::List(names) => {
            if names.is_empty() {
                return Err(Error::InvalidArgument(
                    "pass at least one attribute name".into(),
                ));
            }
            (clean, names.clone())
        }
        AttrSource::FromReport(report_path) => {
            let text = std::fs::read_to_string(report_path).map_err(|source| Error::Io {
                path: report_path.clone(),
                source,
            })?;
            let report: Value = serde_json::from_str(&text)?;
            let names: Vec<String> = report
                .get("selected_attributes")
                .and_then(Value::as_array)
                .map(|a| {
                    a.iter()
                        .filter_map(Value::as_str)
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            if names.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "report {} contains no selected attributes; was the dataset reliable?",
                    report_path.display()
                )));
            }
            let removed: Vec<String> = report
                .get("removed_projects")
                .and_then(Value::as_array)
                .map(|a| {
                    a.iter()
                        .filter_map(Value::as_str)
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            let keep: Vec<usize> = (0..clean.n_projects())
                .filter(|&i| !removed.contains(&clean.ids()[i]))
                .collect();
            (clean.select_rows(&keep), names)
        }
    };

    eprintln!(
        "validating [{}] with {}...",
        attr_names.join(", "),
        match folds {
            Some(k) => format!("{k}-fold cross validation"),
            None => "the jackknife".into(),
        }
    );
    let result = validation_metrics(&dataset, &attr_names, folds, cfg)?;
    eprintln!(
        "mmre {:.4}, mdmre {:.4}, pred25 {:.1}%",
        result.mmre, result.mdmre, result.pred25
    );

    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": unix_timestamp(),
        "config": cfg,
        "dataset_fingerprint": fp,
        "dropped_missing": dropped,
        "attributes": attr_names,
        "metrics": metrics_json(&result),
        "records": result.records,
    });
    emit_report(&mut doc, out, "validation.json")?;
    if let Some(dir) = out {
        let path = dir.join("residuals.csv");
        write_text(&path, &residuals_csv(&result))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

/// `compare`: Wilcoxon rank-sum test between two absolute-residual files,
/// for judging whether two validation runs differ meaningfully.
pub fn cmd_compare(residuals_a: &Path, residuals_b: &Path) -> Result<i32> {
    let a = read_residuals(residuals_a)?;
    let b = read_residuals(residuals_b)?;
    let test = wilcoxon_rank_sum(&a, &b)?;
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        if s.len() % 2 == 1 {
            s[s.len() / 2]
        } else {
            (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0
        }
    };
    let mut doc = json!({
        "a": { "file": residuals_a.display().to_string(), "n": a.len(), "median_abs_residual": median(&a) },
        "b": { "file": residuals_b.display().to_string(), "n": b.len(), "median_abs_residual": median(&b) },
        "rank_sum": test.rank_sum,
        "z": test.z,
        "p_value": test.p_value,
    });
    emit_report(&mut doc, None, "")?;
    Ok(EXIT_OK)
}

/// `brute-force`: exhaustive attribute-subset search by cross-validated
/// MMRE, the expensive baseline. Writes `brute_force.json` and
/// `residuals.csv` under `--out`.
pub fn cmd_brute_force(
    data: &Path,
    schema_path: &Path,
    budget: Option<usize>,
    cfg: &RunConfig,
    out: Option<&Path>,
) -> Result<i32> {
    cfg.validate()?;
    let (clean, dropped, fp) = load_inputs(data, schema_path)?;
    eprintln!(
        "searching {} attribute subsets{}...",
        (1u128 << clean.columns().len().min(127)) - 1,
        budget.map(|b| format!(" (budget {b})")).unwrap_or_default()
    );
    let outcome = brute_force_select(
        &clean,
        cfg.delta_mode,
        budget,
        &RngConfig::new(cfg.seed),
    )?;
    eprintln!(
        "best subset [{}] after {} evaluations: mmre {:.4}",
        outcome.selected.join(", "),
        outcome.evaluated,
        outcome.result.mmre
    );
    let mut doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": unix_timestamp(),
        "config": cfg,
        "dataset_fingerprint": fp,
        "dropped_missing": dropped,
        "selected_attributes": outcome.selected,
        "evaluated_subsets": outcome.evaluated,
        "metrics": metrics_json(&outcome.result),
    });
    emit_report(&mut doc, out, "brute_force.json")?;
    if let Some(dir) = out {
        let path = dir.join("residuals.csv");
        write_text(&path, &residuals_csv(&outcome.result))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}
