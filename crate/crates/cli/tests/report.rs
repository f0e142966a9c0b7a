use wavelab_cli::report::{format_float, SCHEMA};
use wavelab_cli::{emit_report, CliError, Format};
use wavelab_core::estimates::{Bracket, EstimateReport, SamplingSpec};
use wavelab_core::variation::NormReport;

#[test]
fn single_norm_report_is_one_json_object() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.jsonl");
    let r = NormReport::new("U2", 0.5, 1.0 / 3.0 + 1.0, &["duality"]).with_param("p", 2.0);
    emit_report(&[r], Format::Json, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["schema"], SCHEMA);
    assert_eq!(v["name"], "U2");
    assert_eq!(v["upper"].as_f64().unwrap(), 1.0 / 3.0 + 1.0);
    assert!(text.contains("1.3333333333333333e0"));
}

#[test]
fn floats_keep_seventeen_digits() {
    assert_eq!(format_float(0.1), "1.0000000000000001e-1");
    assert_eq!(format_float(f64::NAN), "null");
    for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn thousand_rows_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let spec = SamplingSpec::default();
    let reports: Vec<EstimateReport> = (0..1000)
        .map(|k| EstimateReport::new(&format!("r{k}"), &spec, Bracket::DEFAULT, &[0.1 * k as f64, 1.0]))
        .collect();
    emit_report(&reports[..400], Format::Csv, &path).unwrap();
    // appending reuses the header
    emit_report(&reports[400..], Format::Csv, &path).unwrap();
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let header = rd.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1000);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(&row[col("id")], format!("r{k}"));
        let max: f64 = row[col("stats.max")].parse().unwrap();
        assert_eq!(max, reports[k].stats.max);
        assert_eq!(&row[col("verdict")], if reports[k].passed() { "pass" } else { "fail" });
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.matches("id,").count(), 1, "header written once");
}

#[test]
fn empty_records_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let none: Vec<NormReport> = Vec::new();
    assert!(matches!(emit_report(&none, Format::Csv, &path), Err(CliError::Empty(_))));
    assert!(!path.exists());
}

#[test]
fn io_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.jsonl");
    let e = emit_report(&[NormReport::new("a", 0.0, 1.0, &[])], Format::Json, &path).unwrap_err();
    assert!(e.to_string().contains("missing"));
    assert_eq!(e.exit_code(), 3);
}
