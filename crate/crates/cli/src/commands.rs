use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use compfade::composite::EvalPath;
use compfade::curves::{evaluate, EvalOptions, ModelConfig, Quantity, Resolved};
use compfade::mc::{gof_compare, sample_partitioned, GofReport, SampleModel};
use compfade::models::{akm_moment, akm_moment_literal, AkmParams};
use compfade::validation::{self, KernelChoice, Level, ValidationOptions};
use serde::Serialize;

use crate::output::write_table;
use crate::settings::{Format, Shared};
use crate::{CliError, Diagnostics, Fault, LevelArg};

const MASS_TOL: f64 = 1e-6;
const MOMENT_TOL: f64 = 1e-6;

/// Runs `body` against `--out` if given, else against `out`.
fn emit<F>(target: Option<&Path>, out: &mut dyn Write, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match target {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => body(out)?,
    }
    Ok(())
}

fn mass_problem(mass: Option<f64>) -> Option<String> {
    match mass {
        Some(m) if (m - 1.0).abs() > MASS_TOL => Some(format!(
            "total mass {m:.12} differs from 1 by more than {MASS_TOL:e}"
        )),
        _ => None,
    }
}

pub fn curve(
    shared: Shared,
    quantity: Quantity,
    out: &mut dyn Write,
    diag: &mut Diagnostics,
) -> Result<(), CliError> {
    let shared = shared.with_config()?;
    let model = shared.model()?;
    let grid = shared.grid()?;
    let path = shared.path()?;
    if !model.is_composite() && (shared.oracle || shared.use_gross || shared.series_n.is_some()) {
        diag.warning("series and oracle flags only affect composite models");
    }
    let opts = EvalOptions {
        quantity,
        path,
        with_mass: quantity == Quantity::Pdf,
    };
    let table = evaluate(&model, &grid, &opts)?;
    emit(shared.out.as_deref(), out, |w| {
        write_table(w, &table, shared.format())
    })?;
    if let Some(problem) = mass_problem(table.metadata.total_mass) {
        if shared.strict {
            return Err(CliError::Failure(problem));
        }
        diag.warning(&problem);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MomentRow {
    l: f64,
    closed_form: f64,
    quadrature: f64,
    rel_diff: f64,
    literal_printed: f64,
}

#[derive(Debug, Serialize)]
struct MomentTable<'a> {
    model_descriptor: &'a ModelConfig,
    rows: &'a [MomentRow],
}

pub fn moments(
    shared: Shared,
    orders: &[f64],
    out: &mut dyn Write,
    diag: &mut Diagnostics,
) -> Result<(), CliError> {
    let shared = shared.with_config()?;
    let model = shared.model()?;
    let (p, rhat) = match model {
        ModelConfig::Akm {
            alpha,
            kappa,
            mu,
            rhat,
        } => (AkmParams::new(alpha, kappa, mu)?, rhat),
        ModelConfig::Am { alpha, mu, rhat } => (AkmParams::new(alpha, 0.0, mu)?, rhat),
        _ => {
            return Err(CliError::Usage(
                "moments needs --model akm or am (composite moments are not tabulated)".into(),
            ))
        }
    };
    model.resolve()?;
    let rows = orders
        .iter()
        .map(|&l| {
            let scale = rhat.powf(l);
            let closed_form = akm_moment(p, l)? * scale;
            let quadrature = validation::moment_by_quadrature(p, l)? * scale;
            let literal_printed = akm_moment_literal(p, l)? * scale;
            let rel_diff = if closed_form == quadrature {
                0.0
            } else {
                (closed_form - quadrature).abs() / quadrature.abs()
            };
            Ok(MomentRow {
                l,
                closed_form,
                quadrature,
                rel_diff,
                literal_printed,
            })
        })
        .collect::<Result<Vec<_>, compfade::Error>>()?;
    emit(shared.out.as_deref(), out, |w| match shared.format() {
        Format::Csv => {
            writeln!(w, "l,closed_form,quadrature,rel_diff,literal_printed")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{:.16e},{:.16e},{:.3e},{:.16e}",
                    r.l, r.closed_form, r.quadrature, r.rel_diff, r.literal_printed
                )?;
            }
            Ok(())
        }
        Format::Json => {
            let t = MomentTable {
                model_descriptor: &model,
                rows: &rows,
            };
            serde_json::to_writer_pretty(&mut *w, &t)?;
            writeln!(w)
        }
    })?;
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.rel_diff.is_nan() || r.rel_diff > MOMENT_TOL)
        .map(|r| format!("l={} differs by {:.3e}", r.l, r.rel_diff))
        .collect();
    if !bad.is_empty() {
        let msg = format!("closed form and quadrature disagree: {}", bad.join(", "));
        if shared.strict {
            return Err(CliError::Failure(msg));
        }
        diag.warning(&msg);
    }
    Ok(())
}

pub fn figure(
    shared: Shared,
    id: u8,
    out: &mut dyn Write,
    diag: &mut Diagnostics,
) -> Result<(), CliError> {
    let shared = shared.with_config()?;
    let path = shared.path()?;
    let tables = compfade::curves::figure(id, path)?;
    let dir = shared
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("figure{id}")));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let ext = match shared.format() {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut problems = Vec::new();
    for t in &tables {
        let sweep = t
            .metadata
            .sweep
            .as_ref()
            .expect("figure curves carry their sweep");
        let file = dir.join(format!(
            "figure{id}_{}_{}.{ext}",
            sweep.parameter, sweep.value
        ));
        emit(Some(&file), out, |w| write_table(w, t, shared.format()))?;
        writeln!(out, "{}", file.display())?;
        if let Some(p) = mass_problem(t.metadata.total_mass) {
            problems.push(format!("{}={}: {p}", sweep.parameter, sweep.value));
        }
    }
    if !problems.is_empty() {
        let msg = problems.join("; ");
        if shared.strict {
            return Err(CliError::Failure(msg));
        }
        diag.warning(&msg);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SampleReport<'a> {
    model_descriptor: &'a ModelConfig,
    count: usize,
    seed: u64,
    partitions: usize,
    passed: bool,
    gof: &'a GofReport,
}

pub fn sample(
    shared: Shared,
    partitions: usize,
    report: Option<PathBuf>,
    gof: bool,
    out: &mut dyn Write,
    diag: &mut Diagnostics,
) -> Result<(), CliError> {
    let shared = shared.with_config()?;
    let model = shared.model()?;
    let (sample_model, scale) = match model.resolve()? {
        Resolved::Plain(p, s) => (SampleModel::Multipath(p), s.rhat()),
        Resolved::Shadow(g) => (SampleModel::Shadow(g), 1.0),
        Resolved::Composite(m) => (SampleModel::Composite(m), 1.0),
    };
    let count = shared.count.unwrap_or(100_000);
    let seed = shared.seed.unwrap_or(1);
    let mut batch = sample_partitioned(sample_model, count, seed, partitions)?;
    if scale != 1.0 {
        batch.values.iter_mut().for_each(|v| *v *= scale);
    }
    emit(shared.out.as_deref(), out, |w| {
        for v in &batch.values {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    })?;
    if !gof {
        return Ok(());
    }
    let density = model.density(EvalPath::default())?;
    let g = gof_compare(&batch, &*density)?;
    let summary = SampleReport {
        model_descriptor: &model,
        count,
        seed,
        partitions,
        passed: g.passes(),
        gof: &g,
    };
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::Failure(e.to_string()))?;
    match &report {
        Some(path) => emit(Some(path), out, |w| writeln!(w, "{json}"))?,
        None => diag.note(&json),
    }
    if !g.passes() {
        let msg = "samples fail the goodness-of-fit comparison (KS above the 0.1% critical value or atom frequency beyond 5 standard errors)";
        if shared.strict {
            return Err(CliError::Failure(msg.into()));
        }
        diag.warning(msg);
    }
    Ok(())
}

pub fn validate(
    shared: Shared,
    level: LevelArg,
    fault: Option<Fault>,
    out: &mut dyn Write,
    diag: &mut Diagnostics,
) -> Result<(), CliError> {
    let shared = shared.with_config()?;
    let opts = ValidationOptions {
        level: match level {
            LevelArg::Quick => Level::Quick,
            LevelArg::Full => Level::Full,
        },
        kernel: match fault {
            None => KernelChoice::Quadrature,
            Some(Fault::KernelSign) => KernelChoice::SignFlipped,
        },
    };
    let report = validation::run(&opts);
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Failure(e.to_string()))?;
    emit(shared.out.as_deref(), out, |w| writeln!(w, "{json}"))?;
    let passed = report.checks.iter().filter(|c| c.passed).count();
    diag.note(&format!("{passed}/{} checks passed", report.checks.len()));
    if report.passed {
        Ok(())
    } else {
        for f in &report.failures {
            diag.error(&format!("FAILED {f}"));
        }
        Err(CliError::Failure(format!(
            "{} check(s) failed",
            report.failures.len()
        )))
    }
}

#[cfg(test)]
mod tests {
    use crate::tests::run_capture;
    use compfade::curves::CurveTable;

    #[test]
    fn pdf_fig1_parameters_gives_200_nonnegative_rows() {
        let (code, out, err) = run_capture(&[
            "pdf",
            "--model",
            "akm-gamma",
            "--alpha",
            "1.5",
            "--mu",
            "2.1",
            "--kappa",
            "1",
            "--b",
            "1.1",
            "--omega",
            "0.9",
            "--grid",
            "0.01:4:200",
        ]);
        assert_eq!(code, 0, "{err}");
        let rows: Vec<&str> = out.lines().skip(1).collect();
        assert_eq!(rows.len(), 200);
        assert!(rows
            .iter()
            .all(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 0.0));
    }

    #[test]
    fn gamma_shadow_starts_at_half() {
        let (code, out, _) = run_capture(&[
            "pdf",
            "--model",
            "gamma-shadow",
            "--b",
            "1",
            "--omega",
            "2",
            "--grid",
            "0:4:5",
        ]);
        assert_eq!(code, 0);
        let first = out.lines().nth(1).unwrap();
        assert_eq!(first, "0.0000000000000000e0,5.0000000000000000e-1");
    }

    #[test]
    fn extreme_gamma_json_has_atom() {
        let (code, out, err) = run_capture(&[
            "pdf",
            "--model",
            "extreme-gamma",
            "--alpha",
            "2",
            "--m",
            "1.1",
            "--b",
            "1.2",
            "--omega",
            "0.8",
            "--grid",
            "0.05:3:20",
            "--format",
            "json",
        ]);
        assert_eq!(code, 0, "{err}");
        let t: CurveTable = serde_json::from_str(&out).unwrap();
        assert_eq!(t.atoms.len(), 1);
        assert_eq!(t.atoms[0].location, 0.0);
        assert!((t.atoms[0].mass - (-2.2f64).exp()).abs() < 1e-15);
        assert!((t.metadata.total_mass.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singular_origin_is_a_parameter_error() {
        let (code, _, err) = run_capture(&[
            "pdf", "--model", "am-gamma", "--alpha", "2", "--mu", "1", "--b", "0.8", "--omega",
            "1", "--grid", "0:1:3",
        ]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"), "{err}");
    }

    #[test]
    fn moments_rows() {
        let (code, out, err) = run_capture(&[
            "moments", "--model", "akm", "--alpha", "2", "--kappa", "0", "--mu", "1.7", "--orders",
            "0,2,3", "--strict",
        ]);
        assert_eq!(code, 0, "{err}");
        let rows: Vec<Vec<f64>> = out
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows[0][..2], [0.0, 1.0]);
        assert!(rows[0][3] <= 1e-12);
        assert!((rows[1][1] - 1.0).abs() < 1e-9 && (rows[1][2] - 1.0).abs() < 1e-9);
        assert!(rows[2][3] <= 1e-6);
    }

    #[test]
    fn moments_reject_composites() {
        let (code, _, _) = run_capture(&[
            "moments", "--model", "am-gamma", "--alpha", "2", "--mu", "1", "--b", "2", "--omega",
            "1",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn sample_is_reproducible_and_reports_atom() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
        let report = dir.path().join("gof.json");
        let args = |out: &std::path::Path| {
            vec![
                "sample".to_string(),
                "--model".into(),
                "extreme".into(),
                "--alpha".into(),
                "1.5".into(),
                "--m".into(),
                "0.7".into(),
                "--count".into(),
                "20000".into(),
                "--seed".into(),
                "7".into(),
                "--strict".into(),
                "--report".into(),
                report.display().to_string(),
                "--out".into(),
                out.display().to_string(),
            ]
        };
        for path in [&a, &b] {
            let owned = args(path);
            let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
            let (code, _, err) = run_capture(&refs);
            assert_eq!(code, 0, "{err}");
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 20_000);
        let gof: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(gof["passed"], true);
        assert!(
            (gof["gof"]["atom_mass_expected"].as_f64().unwrap() - (-1.4f64).exp()).abs() < 1e-15
        );
    }

    #[test]
    fn figure_writes_one_file_per_curve() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, err) = run_capture(&[
            "figure",
            "2",
            "--out",
            dir.path().to_str().unwrap(),
            "--format",
            "json",
        ]);
        assert_eq!(code, 0, "{err}");
        let files: Vec<&str> = out.lines().collect();
        assert_eq!(files.len(), 4);
        for f in files {
            let t: CurveTable = serde_json::from_str(&std::fs::read_to_string(f).unwrap()).unwrap();
            assert!(matches!(
                t.model_descriptor,
                compfade::curves::ModelConfig::KmuGamma {
                    kappa: 4.0,
                    b: 1.8,
                    omega: 0.7,
                    ..
                }
            ));
        }
    }

    #[test]
    fn validate_quick_passes_and_fault_is_caught() {
        let (code, out, err) = run_capture(&["validate", "--level", "quick"]);
        assert_eq!(code, 0, "{err}");
        let report: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(report["passed"], true);
        assert!(report["moment_literal_comparison"]["rows"]
            .as_array()
            .is_some_and(|r| !r.is_empty()));

        let (code, _, err) = run_capture(&[
            "validate",
            "--level",
            "quick",
            "--inject-fault",
            "kernel-sign",
        ]);
        assert_eq!(code, 1);
        assert!(
            err.contains("FAILED c2.akm_gamma_series_vs_oracle"),
            "{err}"
        );
    }
}
