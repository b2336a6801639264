//! CSV and JSON artifacts for experiment runs.
//!
//! The CSV is the flat table consumed by plotting/analysis scripts: one row
//! per record, stable column order. The JSON is the provenance companion —
//! full config echo, RNG identifier, build stamp, and any per-cell failures
//! — so a report directory is self-describing.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::bench::experiment::{ExperimentConfig, ExperimentRecord, ExperimentRun};
use crate::error::{Error, Result};

/// The documented CSV schema. `emit_report` writes exactly these columns in
/// exactly this order; `read_records` accepts the same layout back.
pub const CSV_COLUMNS: [&str; 20] = [
    "method",
    "m",
    "n",
    "spectrum",
    "seed",
    "r",
    "k1",
    "k2",
    "l",
    "p",
    "t_sketch_ms",
    "t_qr_ms",
    "t_second_sketch_ms",
    "t_small_svd_ms",
    "t_total_ms",
    "err_spectral",
    "err_frobenius",
    "rel_err",
    "sigma_r_plus_1",
    "delta_r_plus_1",
];

#[derive(Debug)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
}

fn file_err(path: &Path, message: impl ToString) -> Error {
    Error::MatrixFile {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Identifier stamped into every JSON report, so a results directory can be
/// traced back to the build that produced it.
pub fn build_stamp() -> String {
    format!(
        "{}-v{}+{}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        if cfg!(debug_assertions) { "debug" } else { "release" },
    )
}

/// Writes `records.csv` and `report.json` under `out_dir`, creating the
/// directory if needed. Requires at least one record — an all-failure run
/// has nothing to tabulate and should be inspected via its failures instead.
pub fn emit_report(
    run: &ExperimentRun,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ReportPaths> {
    if run.records.is_empty() {
        return Err(Error::InvalidParams(
            "refusing to emit a report with zero records".into(),
        ));
    }
    fs::create_dir_all(out_dir).map_err(|e| file_err(out_dir, e))?;

    let csv_path = out_dir.join("records.csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| file_err(&csv_path, e))?;
    for record in &run.records {
        writer
            .serialize(record)
            .map_err(|e| file_err(&csv_path, e))?;
    }
    writer.flush().map_err(|e| file_err(&csv_path, e))?;

    let json_path = out_dir.join("report.json");
    let report = json!({
        "build": build_stamp(),
        "rng": "chacha8",
        "config": config,
        "records": run.records,
        "failures": run.failures,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| file_err(&json_path, e))?;
    fs::write(&json_path, text + "\n").map_err(|e| file_err(&json_path, e))?;

    Ok(ReportPaths {
        csv: csv_path,
        json: json_path,
    })
}

/// Reads back a `records.csv` produced by [`emit_report`].
pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| file_err(path, e))?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row.map_err(|e| file_err(path, e))?);
    }
    Ok(records)
}

// ── Tests ──────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::experiment::{MatrixForm, MatrixSpec, Method};
    use crate::bench::spectrum::SpectrumSpec;

    fn sample_records() -> Vec<ExperimentRecord> {
        let base = ExperimentRecord {
            method: Method::SparseSubgaussian,
            m: 80,
            n: 60,
            spectrum: "exp-decay:1:0.001:60".to_string(),
            seed: 5,
            r: 8,
            k1: Some(20),
            k2: Some(28),
            l: Some(18),
            p: Some(0.05),
            t_sketch_ms: 1.25,
            t_qr_ms: 0.5,
            t_second_sketch_ms: 0.75,
            t_small_svd_ms: 2.0,
            t_total_ms: 4.5,
            err_spectral: 1.4e-3,
            err_frobenius: Some(2.9e-3),
            rel_err: 1.4,
            sigma_r_plus_1: 1e-3,
            delta_r_plus_1: 2.5e-3,
        };
        let mut baseline = base.clone();
        baseline.method = Method::FullSvd;
        baseline.k1 = None;
        baseline.k2 = None;
        baseline.l = None;
        baseline.p = None;
        baseline.err_frobenius = None;
        baseline.rel_err = 1.0;
        vec![base, baseline]
    }

    fn sample_config() -> ExperimentConfig {
        ExperimentConfig {
            matrices: vec![MatrixSpec {
                m: 80,
                n: 60,
                spectrum: SpectrumSpec::exp_decay(1.0, 1e-3, 60).unwrap(),
                seed: 5,
                form: MatrixForm::Dense,
            }],
            methods: vec![Method::SparseSubgaussian, Method::FullSvd],
            ranks: vec![8],
            repeats: 5,
            output: None,
        }
    }

    #[test]
    fn one_record_makes_a_two_line_csv_with_the_documented_header() {
        let dir = tempfile::tempdir().unwrap();
        let run = ExperimentRun {
            records: sample_records()[..1].to_vec(),
            failures: Vec::new(),
        };
        let paths = emit_report(&run, &sample_config(), dir.path()).unwrap();
        let text = fs::read_to_string(&paths.csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
    }

    #[test]
    fn records_round_trip_through_the_csv() {
        let dir = tempfile::tempdir().unwrap();
        let run = ExperimentRun {
            records: sample_records(),
            failures: Vec::new(),
        };
        let paths = emit_report(&run, &sample_config(), dir.path()).unwrap();
        let back = read_records(&paths.csv).unwrap();
        assert_eq!(back, run.records);
    }

    #[test]
    fn json_report_carries_provenance_and_the_config_echo() {
        let dir = tempfile::tempdir().unwrap();
        let run = ExperimentRun {
            records: sample_records(),
            failures: Vec::new(),
        };
        let config = sample_config();
        let paths = emit_report(&run, &config, dir.path()).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&paths.json).unwrap()).unwrap();
        assert_eq!(value["rng"], "chacha8");
        assert!(value["build"].as_str().unwrap().starts_with("decomp-v"));
        assert_eq!(value["records"].as_array().unwrap().len(), 2);
        assert_eq!(value["failures"].as_array().unwrap().len(), 0);
        let echoed: ExperimentConfig = serde_json::from_value(value["config"].clone()).unwrap();
        assert_eq!(echoed, config);
    }

    #[test]
    fn refuses_to_emit_an_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let run = ExperimentRun {
            records: Vec::new(),
            failures: Vec::new(),
        };
        assert!(emit_report(&run, &sample_config(), dir.path()).is_err());
    }

    #[test]
    fn io_failures_name_the_offending_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("blocker");
        fs::write(&blocker, b"not a directory").unwrap();
        let run = ExperimentRun {
            records: sample_records(),
            failures: Vec::new(),
        };
        let err = emit_report(&run, &sample_config(), &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("blocker"), "{err}");
    }
}
