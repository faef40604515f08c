//! The bundled fixture and its golden comparison summary are reproducible.
//! Set `TWOLEVEL_BLESS=1` to rewrite them.

use std::path::Path;

use twolevel::studies::{synthetic_table_csv, FixtureSpec};

const FIXTURE: &str = "fixtures/synthetic_pinch.csv";
const GOLDEN: &str = "fixtures/synthetic_pinch.golden.csv";

fn bless() -> bool {
    std::env::var_os("TWOLEVEL_BLESS").is_some()
}

/// Arguments of the golden comparison run.
pub fn golden_args(out: &Path) -> Vec<String> {
    [
        "compare", "--data", FIXTURE, "--split", "3,-1,50", "--tau1", "0.01", "--tau2", "0.01",
        "--single-constant", "0.01", "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.display().to_string()])
    .collect()
}

#[test]
fn fixture_regenerates_byte_exactly() {
    let text = synthetic_table_csv(&FixtureSpec::default()).unwrap();
    if bless() {
        std::fs::write(FIXTURE, &text).unwrap();
    }
    assert_eq!(std::fs::read_to_string(FIXTURE).unwrap(), text);
}

#[test]
fn compare_reproduces_golden_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = twolevel::cli::run(golden_args(dir.path()), &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    let summary = std::fs::read_to_string(dir.path().join("compare_summary.csv")).unwrap();
    if bless() {
        std::fs::write(GOLDEN, &summary).unwrap();
    }
    assert_eq!(std::fs::read_to_string(GOLDEN).unwrap(), summary);
    let rows = std::fs::read_to_string(dir.path().join("rmspe.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 21);
}
