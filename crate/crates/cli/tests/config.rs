use std::f64::consts::PI;
use std::path::Path;

use wavelab_cli::config::{parse_number, RawConfig};
use wavelab_cli::{CliError, RunConfig};

const TEXT: &str = "
# comment line
experiment = evolve
seed = 7
out = runs/a   ; trailing comment

[grid]
dim = 2
points = 16
period = 2pi

[time]
dt = 0.05
samples = 11

[params]
data = equator
k = 1
";

fn load(text: &str, exp: Option<&str>, seed: Option<u64>) -> wavelab_cli::Result<RunConfig> {
    RunConfig::from_raw(&RawConfig::parse(text, "test.ini")?, exp, seed, None)
}

#[test]
fn parses_sections_and_numbers() {
    let c = load(TEXT, None, None).unwrap();
    assert_eq!(c.experiment, "evolve");
    assert_eq!(c.seed, 7);
    assert_eq!(c.out, Path::new("runs/a"));
    assert_eq!(c.grid.points, 16);
    assert!((c.grid.period - 2.0 * PI).abs() < 1e-15);
    assert_eq!(c.time.samples, 11);
    assert_eq!(c.param_str("data"), Some("equator"));
    assert_eq!(parse_number("pi"), Some(PI));
    assert_eq!(parse_number("0.5 * pi"), Some(0.5 * PI));
    assert_eq!(parse_number("1e-3"), Some(1e-3));
    assert_eq!(parse_number("abc"), None);
}

#[test]
fn command_line_overrides_and_conflicts() {
    let c = load(TEXT, Some("evolve"), Some(99)).unwrap();
    assert_eq!(c.seed, 99);
    assert!(matches!(load(TEXT, Some("picard"), None), Err(CliError::Config(_))));
}

#[test]
fn validation_errors_are_config_errors() {
    let no_seed = TEXT.replace("seed = 7", "");
    let e = load(&no_seed, None, None).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("seed"));
    assert!(load(TEXT, None, Some(1)).is_ok());

    let unknown = TEXT.replace("experiment = evolve", "experiment = fly");
    assert_eq!(load(&unknown, None, None).unwrap_err().exit_code(), 2);

    let dup = format!("{TEXT}\nk = 2\n");
    let last = dup.lines().count();
    assert!(matches!(RawConfig::parse(&dup, "x"), Err(CliError::Parse { line, .. }) if line == last));
    assert!(matches!(RawConfig::parse("[grid\n", "x"), Err(CliError::Parse { line: 1, .. })));
    assert!(matches!(RawConfig::parse("novalue\n", "x"), Err(CliError::Parse { .. })));

    let bad_grid = TEXT.replace("points = 16", "points = 15");
    assert_eq!(load(&bad_grid, None, None).unwrap_err().exit_code(), 2);
    let bad_key = TEXT.replace("dim = 2", "dims = 2");
    assert!(load(&bad_key, None, None).is_err());
}

#[test]
fn hash_ignores_output_directory_only() {
    let a = load(TEXT, None, None).unwrap();
    let b = load(&TEXT.replace("runs/a", "elsewhere"), None, None).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 64);
    let c = load(&TEXT.replace("k = 1", "k = 2"), None, None).unwrap();
    assert_ne!(a.hash(), c.hash());
    let d = load(TEXT, None, Some(8)).unwrap();
    assert_ne!(a.hash(), d.hash());
}
