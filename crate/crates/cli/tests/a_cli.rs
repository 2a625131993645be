use std::fs;
use std::path::Path;
use std::process::Command;

use cubic_newton_cli::bench::REPORT_HEADER;
use cubic_newton_cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cubic-newton").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn result_line(out: &str) -> &str {
    out.lines().find(|l| l.starts_with("RESULT ")).expect("RESULT line")
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cubic-newton"))
}

#[test]
fn minimize_at_the_minimum_golden() {
    let (code, out, _) = invoke(&["minimize", "--objective", "bohachevsky", "--optimizer", "newton2", "--x0", "0,0"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "point: 0.000000000000,0.000000000000\n\
         f: 0.000000e0\n\
         grad_norm: 0.000e0\n\
         iterations: 0\n\
         termination: converged\n\
         RESULT bohachevsky newton2 iters=0 grad=0.000e0 status=converged\n"
    );
}

#[test]
fn result_lines_golden() {
    let cases: [(&[&str], &str); 5] = [
        (
            &["minimize", "--objective", "quadratic", "--optimizer", "ton", "--x0", "1,-2"],
            "RESULT quadratic ton iters=1 grad=0.000e0 status=converged",
        ),
        (
            &["minimize", "--objective", "quadratic", "--optimizer", "newton2", "--x0", "1,-2"],
            "RESULT quadratic newton2 iters=1 grad=0.000e0 status=converged",
        ),
        (
            &["minimize", "--objective", "mccormick", "--optimizer", "newton2", "--x0", "-3,1", "--eps", "1e-5"],
            "RESULT mccormick newton2 iters=2 grad=1.670e-6 status=converged",
        ),
        (
            &["minimize", "--objective", "beale", "--optimizer", "gd", "--step", "0.045", "--x0", "2.8,0.2", "--max-iters", "50"],
            "RESULT beale gd iters=50 grad=4.517e-2 status=max-iterations",
        ),
        (
            &["minimize", "--objective", "himmelblau", "--optimizer", "ton", "--x0", "3,3.5", "--shifts", "0"],
            "RESULT himmelblau ton iters=0 grad=1.234e2 status=step-failed",
        ),
    ];
    for (args, want) in cases {
        let (_, out, err) = invoke(args);
        assert_eq!(result_line(&out), want, "{args:?} {err}");
    }
}

#[test]
fn himmelblau_third_order_reaches_the_global_minimum() {
    let (code, out, _) = invoke(&["minimize", "--objective", "himmelblau", "--optimizer", "ton", "--x0", "2,1"]);
    assert_eq!(code, 0);
    let point: Vec<f64> = out
        .lines()
        .find_map(|l| l.strip_prefix("point: "))
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((point[0] - 3.0).abs() < 1e-8 && (point[1] - 2.0).abs() < 1e-8, "{point:?}");
    let iters: usize = result_line(&out).split_whitespace().find_map(|t| t.strip_prefix("iters=")).unwrap().parse().unwrap();
    assert!(iters <= 6);
}

#[test]
fn minimize_exit_codes() {
    let ok = ["minimize", "--objective", "himmelblau", "--optimizer", "newton2", "--x0", "2,1"];
    assert_eq!(invoke(&ok).0, 0);
    let failed = ["minimize", "--objective", "himmelblau", "--optimizer", "ton", "--x0", "3,3.5", "--shifts", "0"];
    assert_eq!(invoke(&failed).0, 2);
    let budget = ["minimize", "--objective", "beale", "--optimizer", "gd", "--step", "0.01", "--x0", "2.8,0.2", "--max-iters", "3"];
    assert_eq!(invoke(&budget).0, 3);
    let negative = ["minimize", "--objective", "mccormick", "--optimizer", "qfit", "--x0", "-3,1"];
    assert_eq!(invoke(&negative).0, 0);
}

#[test]
fn bad_minimize_arguments_exit_1() {
    let bad: [&[&str]; 8] = [
        &["minimize", "--objective", "rosenbrock", "--optimizer", "ton", "--x0", "1,1"],
        &["minimize", "--objective", "beale", "--optimizer", "ton3", "--x0", "1,1"],
        &["minimize", "--objective", "beale", "--optimizer", "ton", "--x0", "1,a"],
        &["minimize", "--objective", "beale", "--optimizer", "ton", "--x0", "1,2,3"],
        &["minimize", "--objective", "beale", "--optimizer", "ton"],
        &["minimize", "--objective", "beale", "--optimizer", "ton", "--x0", "1,1", "--shifts", "5,10"],
        &["minimize", "--objective", "beale", "--optimizer", "gd", "--x0", "1,1", "--step", "-1"],
        &["minimize", "--objective", "beale", "--optimizer", "ton", "--x0", "1,1", "--eps", "0"],
    ];
    for args in bad {
        let (code, out, err) = invoke(args);
        assert_eq!(code, 1, "{args:?}");
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }
    let (code, _, err) = invoke(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"));
    assert_eq!(invoke(&["--help"]).0, 0);
}

#[test]
fn trace_csv_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let (code, out, _) = invoke(&[
        "minimize",
        "--objective",
        "himmelblau",
        "--optimizer",
        "newton2",
        "--x0",
        "2,1",
        "--trace",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let iters: usize = out.lines().find_map(|l| l.strip_prefix("iterations: ")).unwrap().parse().unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "iter,x0,x1,f,grad_norm,annotation");
    assert_eq!(lines.len(), iters + 2);
    assert!(lines[1].starts_with("0,2e0,1e0,") && lines[1].ends_with(",start"));
    assert!(lines[iters + 1].ends_with(",newton"));

    let missing = dir.path().join("no/such/dir/trace.csv");
    let (code, _, err) = invoke(&[
        "minimize",
        "--objective",
        "himmelblau",
        "--optimizer",
        "newton2",
        "--x0",
        "2,1",
        "--trace",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(code, 4);
    assert!(err.contains("trace.csv"));
}

fn read_labels(path: &Path) -> Vec<Vec<i32>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fractal_of_a_quadratic_is_one_basin() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("q");
    let (code, out, _) =
        invoke(&["fractal", "--objective", "quadratic", "--optimizer", "ton", "--res", "2x2", "--out", base.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("converged pixels: 4 / 4"));
    assert_eq!(read_labels(&dir.path().join("q.csv")), vec![vec![0, 0], vec![0, 0]]);
    let ppm = fs::read(dir.path().join("q.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n2 2\n255\n"));
    assert_eq!(&ppm[ppm.len() - 12..], &[0u8; 12]);
}

#[test]
fn fractal_names_files_inside_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let (code, out, _) = invoke(&[
        "fractal",
        "--objective",
        "himmelblau",
        "--optimizer",
        "ton",
        "--shift",
        "5",
        "--res",
        "12x10",
        "--out",
        out_dir,
    ]);
    assert_eq!(code, 0, "{out}");
    for name in ["himmelblau_ton_shift5.ppm", "himmelblau_ton_shift5.csv", "himmelblau_ton_shift5_catalogue.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let labels = read_labels(&dir.path().join("himmelblau_ton_shift5.csv"));
    assert_eq!(labels.len(), 10);
    assert!(labels.iter().all(|r| r.len() == 12));
    let catalogue = fs::read_to_string(dir.path().join("himmelblau_ton_shift5_catalogue.csv")).unwrap();
    assert!(catalogue.lines().count() - 1 >= 4);
    let entries: usize = out.lines().find_map(|l| l.strip_prefix("catalogue entries: ")).unwrap().parse().unwrap();
    assert!(entries >= 4);
}

#[test]
fn bad_fractal_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("img");
    let base = base.to_str().unwrap();
    let bad: [&[&str]; 6] = [
        &["fractal", "--objective", "himmelblau", "--optimizer", "ton", "--window", "1,2,3", "--out", base],
        &["fractal", "--objective", "himmelblau", "--optimizer", "ton", "--window", "2,1,0,1", "--out", base],
        &["fractal", "--objective", "himmelblau", "--optimizer", "ton", "--res", "1x4", "--out", base],
        &["fractal", "--objective", "himmelblau", "--optimizer", "newton2", "--shift", "5", "--out", base],
        &["fractal", "--objective", "himmelblau", "--optimizer", "ton", "--shift", "-1", "--out", base],
        &["fractal", "--objective", "nope", "--optimizer", "ton", "--out", base],
    ];
    for args in bad {
        assert_eq!(invoke(args).0, 1, "{args:?}");
    }
    let missing = dir.path().join("no/such/dir/img");
    let (code, _, err) =
        invoke(&["fractal", "--objective", "quadratic", "--optimizer", "newton2", "--res", "2x2", "--out", missing.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert!(err.contains("img.ppm"));
}

#[test]
fn negative_window_bounds_parse() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("w");
    let (code, _, err) = invoke(&[
        "fractal",
        "--objective",
        "quadratic",
        "--optimizer",
        "newton2",
        "--window",
        "-1,1,-2,2",
        "--res",
        "3x3",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
}

#[test]
fn empty_suite_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("empty.toml");
    fs::write(&suite, "# nothing to run\n").unwrap();
    let report = dir.path().join("report.csv");
    let (code, out, _) = invoke(&["bench", "--suite", suite.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, "BENCH cases=0 within_band=0 missed=0\n");
    assert_eq!(fs::read_to_string(&report).unwrap(), format!("{REPORT_HEADER}\n"));
}

#[test]
fn missed_band_exits_5_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.toml");
    fs::write(
        &suite,
        "[[row]]\nobjective = \"himmelblau\"\noptimizer = \"newton2\"\nstarts = [[2.0, 1.0], [2.0, 1.0]]\nexpected = [7, 20]\n",
    )
    .unwrap();
    let (code, out, err) = invoke(&["bench", "--suite", suite.to_str().unwrap()]);
    assert_eq!(code, 5);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines[0], REPORT_HEADER);
    assert!(lines[1].ends_with(",7,true"), "{}", lines[1]);
    assert!(lines[2].ends_with(",20,false"), "{}", lines[2]);
    assert_eq!(err, "BENCH cases=2 within_band=1 missed=1\n");
}

#[test]
fn bad_suites_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.toml");
    fs::write(&suite, "[[row]]\nobjective = \"himmelblau\"\n").unwrap();
    assert_eq!(invoke(&["bench", "--suite", suite.to_str().unwrap()]).0, 1);
    assert_eq!(invoke(&["bench", "--suite", dir.path().join("absent.toml").to_str().unwrap()]).0, 1);
}

#[test]
fn builtin_suite_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("paper.csv");
    let (code, _, _) = invoke(&["bench", "--suite", "paper", "--report", report.to_str().unwrap()]);
    let text = fs::read_to_string(&report).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 108);
    assert_eq!(rows[0][..3], ["bohachevsky", "newton2", "0.1;0.05"]);
    assert_eq!(rows[107][..3], ["himmelblau", "gd(c=0.025)", "3;3.5"]);
    for r in rows.iter().filter(|r| r[0] == "himmelblau" && r[1] == "gd(c=0.025)") {
        assert_eq!(r[5], ">=4000");
        assert_eq!(r[6], "true");
        assert_ne!(r[4], "converged");
    }
    let missed: Vec<_> = rows.iter().filter(|r| r[6] == "false").collect();
    assert_eq!(code, if missed.is_empty() { 0 } else { 5 });
}

#[test]
fn binary_exit_codes() {
    let status = |args: &[&str]| binary().args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["minimize", "--objective", "quadratic", "--optimizer", "ton", "--x0", "1,1"]), 0);
    assert_eq!(status(&["minimize", "--objective", "nope", "--optimizer", "ton", "--x0", "1,1"]), 1);
    assert_eq!(status(&["minimize", "--objective", "beale", "--optimizer", "gd", "--step", "0.01", "--x0", "2.8,0.2", "--max-iters", "2"]), 3);
    let out = binary().args(["minimize", "--objective", "quadratic", "--optimizer", "newton2", "--x0", "1,1"]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().ends_with("RESULT quadratic newton2 iters=1 grad=0.000e0 status=converged\n"));
}
