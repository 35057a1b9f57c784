use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ocr::config::{resolve_seed, FileConfig};
use ocr::csv_io::{read_csv, write_csv, INTERCEPT_NAME};
use ocr::error::exit;
use ocr::model_file::ModelFile;
use ocr::CliError;
use ocr_core::inference::critical_value;
use ocr_core::oracle::constrained_covariance_direct;
use ocr_core::simulation::{dgp_attenuation, dgp_linear, ScenarioConfig};
use ocr_core::{fit, predict, Dataset, Method};
use tempfile::TempDir;

fn ocr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocr")).args(args).env_remove("OCR_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

fn write_linear(dir: &Path, file: &str, n: usize, p: usize, seed: u64) -> (PathBuf, Dataset) {
    let cfg = ScenarioConfig::calibration(n, p, 1.0).with_seed(seed);
    let d = dgp_linear(&cfg, &mut cfg.random_source(0)).unwrap();
    let path = dir.join(file);
    write_csv(&path, &d, &names(p), "y").unwrap();
    (path, d)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn parse_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn read_csv_small_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "x1,x2,y\n1,2,3\n4,5,6.5\n7,8.25,9\n").unwrap();
    let data = read_csv(&path, "y", None, false).unwrap();
    assert_eq!((data.dataset.n(), data.dataset.p()), (3, 2));
    assert_eq!(data.dataset.y(), &[3.0, 6.5, 9.0]);
    assert_eq!(data.dataset.x().row(2), &[7.0, 8.25]);
    assert_eq!(data.columns, ["x1", "x2"]);
}

#[test]
fn read_csv_reports_bad_cells_and_columns() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "x1,x2,y\n1,2,3\n4,abc,6\n7,8,9\n1,1,2\n").unwrap();
    match read_csv(&path, "y", None, false) {
        Err(CliError::NonNumericCell { row, column, value }) => {
            assert_eq!((row, column.as_str(), value.as_str()), (2, "x2", "abc"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(read_csv(&path, "z", None, false), Err(CliError::MissingColumn(c)) if c == "z"));

    std::fs::write(&path, "x1,x2,y\n").unwrap();
    assert!(matches!(read_csv(&path, "y", None, false), Err(CliError::EmptyFile(_))));
    std::fs::write(&path, "").unwrap();
    assert!(matches!(read_csv(&path, "y", None, false), Err(CliError::EmptyFile(_))));
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = TempDir::new().unwrap();
    let (path, d) = write_linear(dir.path(), "d.csv", 40, 3, 1);
    let back = read_csv(&path, "y", None, false).unwrap();
    assert_eq!(back.dataset, d);

    let with = Dataset::with_intercept(d.x(), d.y().to_vec()).unwrap();
    let mut cols = vec![INTERCEPT_NAME.to_owned()];
    cols.extend(names(3));
    write_csv(&path, &with, &cols, "y").unwrap();
    let back = read_csv(&path, "y", None, true).unwrap();
    assert_eq!(back.dataset, with);
    assert_eq!(back.columns, cols);
}

#[test]
fn model_file_round_trip_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let (_, d) = write_linear(dir.path(), "d.csv", 80, 4, 2);
    for method in [Method::Ols, Method::Ocr] {
        let m = fit(&d, method).unwrap();
        let mf = ModelFile::from_model(&m, &names(4), "y", false);
        let path = dir.path().join("m.json");
        mf.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        assert_eq!(back, mf);
        let m2 = back.to_model().unwrap();
        assert_eq!(
            m2.beta.iter().map(|b| b.to_bits()).collect::<Vec<_>>(),
            m.beta.iter().map(|b| b.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(m2.coef_cov, m.coef_cov);
        assert_eq!(m2.xtx, m.xtx);
        assert_eq!(m2.constraint, m.constraint);
        assert_eq!(m2.rss.to_bits(), m.rss.to_bits());
        assert_eq!(m2.sigma2_hat.to_bits(), m.sigma2_hat.to_bits());
        assert_eq!(m2.calibration, m.calibration);
    }
}

#[test]
fn model_file_rejects_unknown_versions_and_garbage() {
    let dir = TempDir::new().unwrap();
    let (_, d) = write_linear(dir.path(), "d.csv", 30, 2, 3);
    let json = ModelFile::from_model(&fit(&d, Method::Ols).unwrap(), &names(2), "y", false).to_json();
    let bumped = json.replace("\"format_version\": 1", "\"format_version\": 2");
    assert!(matches!(ModelFile::from_json(&bumped), Err(CliError::UnsupportedVersion(2))));
    assert!(matches!(ModelFile::from_json("{\"method\": \"ols\"}"), Err(CliError::CorruptModel(_))));
    assert!(matches!(ModelFile::from_json("not json"), Err(CliError::CorruptModel(_))));
    let short = json.replacen("\"p\": 2", "\"p\": 3", 1);
    assert!(matches!(ModelFile::from_json(&short).unwrap().to_model(), Err(CliError::CorruptModel(_))));
}

#[test]
fn fit_ocr_prints_identity_calibration() {
    let dir = TempDir::new().unwrap();
    for (p, seed) in [(2, 4), (5, 5)] {
        let (path, _) = write_linear(dir.path(), "d.csv", 120, p, seed);
        let o = ocr(&["fit", "--input", s(&path), "--outcome", "y", "--method", "ocr"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let out = stdout(&o);
        assert!(out.contains("calibration slope: 1.000000\n"), "{out}");
        assert!(out.contains("calibration intercept: 0.000000\n"), "{out}");
        assert!(out.contains("std_error") && out.contains("p_value") && out.contains("ci_upper"));
        assert_eq!(out.lines().filter(|l| l.starts_with('x')).count(), p);
    }
}

#[test]
fn collinear_input_exits_with_not_positive_definite() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "a,b,y\n1,2,1\n2,4,2\n3,6,2.5\n4,8,4\n5,10,4.5\n").unwrap();
    let o = ocr(&["fit", "--input", s(&path), "--outcome", "y", "--method", "ols"]);
    assert_eq!(o.status.code(), Some(exit::NOT_POSITIVE_DEFINITE));
    let err = stderr(&o);
    assert!(err.contains("NotPositiveDefinite"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn fit_then_predict_matches_in_memory() {
    let dir = TempDir::new().unwrap();
    let (path, d) = write_linear(dir.path(), "d.csv", 150, 4, 6);
    let model = dir.path().join("m.json");
    for (method, intercept) in [("ols", false), ("ocr", false), ("ocr", true)] {
        let mut args = vec!["fit", "--input", s(&path), "--outcome", "y", "--method", method, "--model-out", s(&model)];
        if intercept {
            args.push("--intercept");
        }
        assert!(ocr(&args).status.success());
        let o = ocr(&["predict", "--model-in", s(&model), "--input", s(&path), "--outcome", "y"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rows = parse_rows(&stdout(&o));
        let d = if intercept { Dataset::with_intercept(d.x(), d.y().to_vec()).unwrap() } else { d.clone() };
        let expected = predict(&fit(&d, method.parse().unwrap()).unwrap(), d.x()).unwrap();
        assert_eq!(rows.len(), expected.len());
        for (r, e) in rows.iter().zip(&expected) {
            assert!((r[1] - e).abs() <= 1e-12 * (1.0 + e.abs()), "{} vs {e}", r[1]);
        }
    }
}

#[test]
fn predict_intervals_nest_widen_and_match_oracle() {
    let dir = TempDir::new().unwrap();
    let (train, d) = write_linear(dir.path(), "train.csv", 100, 3, 7);
    let (new, dn) = write_linear(dir.path(), "new.csv", 25, 3, 8);
    let model = dir.path().join("m.json");
    assert!(ocr(&["fit", "--input", s(&train), "--outcome", "y", "--model-out", s(&model)]).status.success());
    let at = |level: &str| {
        let o = ocr(&["predict", "--model-in", s(&model), "--input", s(&new), "--level", level]);
        assert!(o.status.success(), "{}", stderr(&o));
        parse_rows(&stdout(&o))
    };
    let (r95, r99) = (at("0.95"), at("0.99"));
    for (a, b) in r95.iter().zip(&r99) {
        assert!(a[4] <= a[2] && a[3] <= a[5]);
        assert!(b[3] - b[2] > a[3] - a[2] && b[5] - b[4] > a[5] - a[4]);
    }

    let m = fit(&d, Method::Ocr).unwrap();
    let v = constrained_covariance_direct(&m.xtx, m.constraint.as_ref().unwrap()).unwrap();
    let t = critical_value(m.residual_df, 0.95).unwrap();
    for (i, row) in r95.iter().enumerate() {
        let x0 = dn.x().row(i);
        let vx = v.matvec(x0).unwrap();
        let h: f64 = x0.iter().zip(&vx).map(|(a, b)| a * b).sum();
        let point: f64 = x0.iter().zip(&m.beta).map(|(a, b)| a * b).sum();
        let half_pi = t * (m.sigma2_hat * (1.0 + h)).sqrt();
        let half_ci = t * (m.sigma2_hat * h.max(0.0)).sqrt();
        assert!((row[1] - point).abs() < 1e-10);
        assert!((row[5] - point - half_pi).abs() < 1e-9);
        assert!((row[3] - point - half_ci).abs() < 1e-9);
    }
}

#[test]
fn predict_rejects_incompatible_data_and_bad_models() {
    let dir = TempDir::new().unwrap();
    let (train, _) = write_linear(dir.path(), "train.csv", 60, 3, 9);
    let (other, _) = write_linear(dir.path(), "other.csv", 20, 4, 10);
    let model = dir.path().join("m.json");
    assert!(ocr(&["fit", "--input", s(&train), "--outcome", "y", "--model-out", s(&model)]).status.success());
    let o = ocr(&["predict", "--model-in", s(&model), "--input", s(&other), "--outcome", "y"]);
    assert_eq!(o.status.code(), Some(exit::DIMENSION_MISMATCH), "{}", stderr(&o));

    let text = std::fs::read_to_string(&model).unwrap().replace("\"format_version\": 1", "\"format_version\": 7");
    std::fs::write(&model, text).unwrap();
    let o = ocr(&["predict", "--model-in", s(&model), "--input", s(&train), "--outcome", "y"]);
    assert_eq!(o.status.code(), Some(exit::CORRUPT_MODEL));
}

#[test]
fn calibrate_reports_both_methods_and_scatter() {
    let dir = TempDir::new().unwrap();
    let (path, _) = write_linear(dir.path(), "d.csv", 200, 2, 11);
    let scatter = dir.path().join("s.csv");
    let o = ocr(&["calibrate", "--input", s(&path), "--outcome", "y", "--scatter-out", s(&scatter)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let ocr_line = out.lines().find(|l| l.starts_with("OCR")).unwrap();
    assert!(ocr_line.contains("1.000000") && ocr_line.contains(" 0.000000"), "{out}");
    let text = std::fs::read_to_string(&scatter).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",point,")).count(), 400);
    assert!(text.contains("ocr,identity_line,,,1,0"));
}

#[test]
fn downstream_direct_slope_and_missing_w() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    let cfg = ScenarioConfig::calibration(300, 3, 0.5).with_seed(12);
    let d = dgp_linear(&cfg, &mut cfg.random_source(0)).unwrap();
    let mut text = String::from("x1,x2,x3,w,y\n");
    for i in 0..d.n() {
        let r = d.x().row(i);
        text.push_str(&format!("{},{},{},{},{}\n", r[0], r[1], r[2], d.y()[i], d.y()[i]));
    }
    std::fs::write(&path, text).unwrap();
    let o = ocr(&["downstream", "--input", s(&path), "--outcome", "y", "--w-column", "w"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let direct: f64 =
        out.lines().find(|l| l.starts_with("y on w")).unwrap().split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((direct - 1.0).abs() < 1e-12, "{out}");

    let o = ocr(&["downstream", "--input", s(&path), "--outcome", "y", "--w-column", "nope"]);
    assert_eq!(o.status.code(), Some(exit::MISSING_COLUMN));
    assert!(stderr(&o).contains("MissingColumn"));
}

#[test]
fn downstream_ratio_tracks_shrinkage() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    let cfg = ScenarioConfig::calibration(5000, 2, 1.0).with_seed(13);
    let (d, w) = dgp_attenuation(&cfg, 1.0, 1.0, &mut cfg.random_source(0)).unwrap();
    let mut text = String::from("x1,x2,w,y\n");
    for (i, wi) in w.iter().enumerate() {
        let r = d.x().row(i);
        text.push_str(&format!("{},{},{},{}\n", r[0], r[1], wi, d.y()[i]));
    }
    std::fs::write(&path, text).unwrap();
    let ratio = |method: &str| -> f64 {
        let o = ocr(&[
            "downstream",
            "--input",
            s(&path),
            "--outcome",
            "y",
            "--w-column",
            "w",
            "--method",
            method,
            "--intercept",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let out = stdout(&o);
        out.lines().find(|l| l.starts_with("eta_hat")).unwrap().rsplit(' ').next().unwrap().parse().unwrap()
    };
    // η = 0.25p / (0.25p + σ²) = 1/3 here for OLS, 1 for OCR
    let eta = ocr_core::attenuation_prediction(cfg.population_eta(), 1.0);
    assert!((ratio("ols") - eta).abs() < 0.05, "{} vs {eta}", ratio("ols"));
    assert!((ratio("ocr") - 1.0).abs() < 0.08);
}

#[test]
fn simulate_table1_shape_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let dump = dir.path().join("dump.csv");
    let scatter = dir.path().join("scatter.csv");
    let o = ocr(&[
        "simulate",
        "--scenario-grid",
        "table1",
        "--replications",
        "20",
        "--seed",
        "5",
        "--report-out",
        s(&a),
        "--per-replication-dump",
        s(&dump),
        "--scatter-out",
        s(&scatter),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ocr(&["simulate", "--replications", "20", "--seed", "5", "--report-out", s(&b), "--workers", "3"]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(&a).unwrap();
    assert_eq!(report, std::fs::read_to_string(&b).unwrap());
    assert_eq!(report.lines().count(), 1 + 16);
    assert_eq!(std::fs::read_to_string(&dump).unwrap().lines().count(), 1 + 8 * 20 * 2);
    let scatter = std::fs::read_to_string(&scatter).unwrap();
    assert_eq!(scatter.lines().filter(|l| l.contains(",point,")).count(), 1000);
}

#[test]
fn simulate_table2_ocr_coverage_in_range() {
    let o = ocr(&["simulate", "--scenario-grid", "table2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    for r in rows.iter().filter(|r| r[9] == "ocr") {
        let cov: f64 = r[20].parse().unwrap();
        assert!((90.0..=100.0).contains(&cov), "{r:?}");
    }
}

#[test]
fn seed_sources_and_config_precedence() {
    assert_eq!(resolve_seed(Some(1), Some(2), Some("3")).unwrap(), 1);
    assert_eq!(resolve_seed(None, Some(2), Some("3")).unwrap(), 2);
    assert_eq!(resolve_seed(None, None, Some("3")).unwrap(), 3);
    assert_eq!(resolve_seed(None, None, None).unwrap(), 2024);
    assert!(resolve_seed(None, None, Some("x")).is_err());

    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "replications = 3\nseed = 9\nscenario-grid = \"custom\"\n\n[[scenario]]\nn = 60\np = 3\nsigma = 0.5\n\n[[scenario]]\nstudy = \"downstream\"\nn = 80\np = 2\nsigma = 1.0\n").unwrap();
    let file = FileConfig::load(&cfg).unwrap();
    assert_eq!(file.scenario.len(), 2);
    let run = |extra: &[&str]| {
        let mut args = vec!["simulate", "--config", s(&cfg)];
        args.extend_from_slice(extra);
        let o = ocr(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let base = run(&[]);
    assert_eq!(base.lines().count(), 1 + 4);
    assert!(base.lines().nth(1).unwrap().starts_with("calibration,60,3,0.5,,,true,3,9,ols"));
    let flagged = run(&["--seed", "10", "--replications", "4"]);
    assert!(flagged.lines().nth(1).unwrap().contains(",true,4,10,ols"));

    let env = Command::new(env!("CARGO_BIN_EXE_ocr"))
        .args(["simulate", "--replications", "2"])
        .env("OCR_SEED", "77")
        .output()
        .unwrap();
    assert!(stdout(&env).lines().nth(1).unwrap().contains(",2,77,ols"));

    std::fs::write(&cfg, "replications = 3\nbogus = 1\n").unwrap();
    let o = ocr(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn configuration_errors_have_their_own_code() {
    let dir = TempDir::new().unwrap();
    let (path, _) = write_linear(dir.path(), "d.csv", 30, 2, 14);
    let o = ocr(&["fit", "--input", s(&path), "--outcome", "y", "--level", "1.5"]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    let o = ocr(&["fit", "--input", s(&path)]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    let o = ocr(&["simulate", "--scenario-grid", "custom"]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    let o = ocr(&["fit", "--input", s(&dir.path().join("missing.csv")), "--outcome", "y"]);
    assert_eq!(o.status.code(), Some(exit::IO));
}

#[test]
fn numerical_exit_codes_are_distinct_from_input_codes() {
    let input = [
        exit::CONFIG,
        exit::IO,
        exit::EMPTY_FILE,
        exit::MISSING_COLUMN,
        exit::NON_NUMERIC,
        exit::CORRUPT_MODEL,
        exit::DIMENSION_MISMATCH,
        exit::INVALID_DATA,
    ];
    let numerical = [
        exit::NOT_POSITIVE_DEFINITE,
        exit::SINGULAR_SYSTEM,
        exit::NO_CONVERGENCE,
        exit::DEGENERATE_OUTCOME,
        exit::RANK_DEFICIENT_CONSTRAINTS,
        exit::SINGULAR_CONSTRAINT_GRAM,
        exit::DEGENERATE_DF,
        exit::ZERO_STANDARD_ERROR,
        exit::DEGENERATE_REGRESSOR,
        exit::INVALID_COVARIANCE,
        exit::INCONSISTENT_LEVERAGE,
    ];
    let mut all: Vec<i32> = input.iter().chain(&numerical).copied().collect();
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), input.len() + numerical.len());
    assert!(input.iter().all(|&c| c < 10) && numerical.iter().all(|&c| c >= 10));

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "x1,x2,y\n1,2,5\n2,1,5\n3,5,5\n4,3,5\n").unwrap();
    let o = ocr(&["fit", "--input", s(&path), "--outcome", "y", "--method", "ocr"]);
    assert_eq!(o.status.code(), Some(exit::DEGENERATE_OUTCOME), "{}", stderr(&o));
}
