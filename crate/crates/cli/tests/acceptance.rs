//! Acceptance criteria at the full validation level, one test per criterion.
//! Each prints a single PASS/FAIL line; run with `--nocapture` to see them.

use std::process::Command;

use compfade::curves::CurveTable;
use compfade::validation::{criterion, Check, Level, ValidationOptions, CRITERIA};

fn summarize(checks: &[Check]) -> String {
    let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
    if failed.is_empty() {
        let worst = checks
            .iter()
            .filter(|c| c.tolerance > 0.0)
            .max_by(|a, b| (a.measured / a.tolerance).total_cmp(&(b.measured / b.tolerance)));
        match worst {
            Some(w) => format!(
                "{} checks, tightest {} measured {:.3e} vs tol {:.1e}",
                checks.len(),
                w.id,
                w.measured,
                w.tolerance
            ),
            None => format!("{} checks", checks.len()),
        }
    } else {
        failed
            .iter()
            .map(|c| {
                format!(
                    "{} measured {:.3e} vs tol {:.1e}: {}",
                    c.id, c.measured, c.tolerance, c.detail
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

fn accept(n: u8, extra: Vec<Check>) {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == n)
        .map(|(_, s)| *s)
        .unwrap();
    let mut checks = criterion(n, &ValidationOptions::new(Level::Full));
    checks.extend(extra);
    let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
    println!(
        "criterion {n:>2} {name}: {} ({})",
        if passed { "PASS" } else { "FAIL" },
        summarize(&checks)
    );
    assert!(
        passed,
        "criterion {n} ({name}) failed: {}",
        summarize(&checks)
    );
}

fn flag(id: &str, passed: bool, detail: String) -> Check {
    Check {
        id: id.into(),
        criterion: 9,
        passed,
        measured: if passed { 0.0 } else { 1.0 },
        tolerance: 0.0,
        detail,
    }
}

/// The figure command end to end: file count, sweep values and mass metadata.
fn figure_cli_checks() -> Vec<Check> {
    let expected: [(u8, &str, &[f64]); 4] = [
        (1, "alpha", &[1.0, 1.5, 2.0, 3.0, 4.0]),
        (2, "mu", &[0.5, 1.0, 2.0, 4.0]),
        (3, "alpha", &[1.0, 1.5, 2.0, 3.0, 4.0]),
        (4, "alpha", &[1.0, 1.5, 2.0, 3.0, 4.0]),
    ];
    let mut checks = Vec::new();
    for (id, param, values) in expected {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_compfade"))
            .args([
                "figure",
                &id.to_string(),
                "--format",
                "json",
                "--strict",
                "--out",
            ])
            .arg(dir.path())
            .output()
            .unwrap();
        let listed: Vec<String> = String::from_utf8_lossy(&out.stdout)
            .lines()
            .map(String::from)
            .collect();
        let mut problems = Vec::new();
        if !out.status.success() {
            problems.push(format!(
                "exit {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        if listed.len() != values.len() {
            problems.push(format!("{} files, expected {}", listed.len(), values.len()));
        }
        for (file, v) in listed.iter().zip(values) {
            let t: CurveTable =
                match std::fs::read_to_string(file).map(|s| serde_json::from_str(&s)) {
                    Ok(Ok(t)) => t,
                    _ => {
                        problems.push(format!("unreadable {file}"));
                        continue;
                    }
                };
            let sweep = t.metadata.sweep.as_ref();
            if sweep.map(|s| (s.parameter.as_str(), s.value)) != Some((param, *v)) {
                problems.push(format!("{file} has sweep {sweep:?}"));
            }
            match t.metadata.total_mass {
                Some(m) if (m - 1.0).abs() <= 1e-6 => {}
                m => problems.push(format!("{file} mass {m:?}")),
            }
            if t.metadata.unimodal_on_grid != Some(true) {
                problems.push(format!("{file} not unimodal"));
            }
        }
        let ok = problems.is_empty();
        checks.push(flag(&format!("c9.cli_figure{id}"), ok, problems.join("; ")));
    }
    checks
}

#[test]
fn criterion_01_normalization() {
    accept(1, vec![]);
}

#[test]
fn criterion_02_series_vs_mixture_oracle() {
    accept(2, vec![]);
}

#[test]
fn criterion_03_reduction_web() {
    accept(3, vec![]);
}

#[test]
fn criterion_04_cdf_dual_form() {
    accept(4, vec![]);
}

#[test]
fn criterion_05_moments() {
    accept(5, vec![]);
}

#[test]
fn criterion_06_nakagami_equivalence() {
    accept(6, vec![]);
}

#[test]
fn criterion_07_shadow_kernel() {
    accept(7, vec![]);
}

#[test]
fn criterion_08_monte_carlo() {
    accept(8, vec![]);
}

#[test]
fn criterion_09_figures() {
    accept(9, figure_cli_checks());
}

#[test]
fn criterion_10_special_function_goldens() {
    accept(10, vec![]);
}
